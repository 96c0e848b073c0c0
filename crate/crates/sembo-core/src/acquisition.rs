//! UCB scoring and the acquisition optimizers.
//!
//! Flat spaces use a firefly-style evolutionary optimizer under a hard
//! budget of acquisition evaluations; permutation/choice spaces use
//! Regularized Evolution with best-of-k UCB ranking once enough history has
//! accumulated. Everything is driven by an explicit RNG and batch-scored
//! with indexed argmax, so suggestions are deterministic given
//! (history, seed, checkpoint).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::embed::{Embedder, EmbeddingVector};
use crate::error::AcquisitionError;
use crate::normalizer::Normalizer;
use crate::num::Scalar;
use crate::regressor::{predict, GaussianPrediction, RegressorConfig, RegressorParams};
use crate::rng::SeededRng;
use crate::space::{Candidate, ParamKind, ParamValue, SearchSpace};
use rand::RngExt;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionConfig {
    /// UCB exploration coefficient (the square root of beta).
    pub sqrt_beta: f64,
    /// Acquisition-evaluation budget per flat-space suggestion.
    pub eval_budget: usize,
    /// Evolution proposals ranked per combinatorial suggestion.
    pub best_of_k: usize,
    /// Trial index from which UCB ranking is active; earlier combinatorial
    /// trials are uniform population seeding.
    pub ranking_start_trial: usize,
    /// Uniform trials before model-based flat suggestions.
    pub flat_warmup: usize,
    /// Firefly population size.
    pub firefly_population: usize,
    /// Regularized-evolution population capacity.
    pub regevo_population: usize,
    /// Tournament size.
    pub tournament: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            sqrt_beta: 1.8,
            eval_budget: 1000,
            best_of_k: 5,
            ranking_start_trial: 20,
            flat_warmup: 5,
            firefly_population: 20,
            regevo_population: 50,
            tournament: 7,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<(), AcquisitionError> {
        if self.sqrt_beta < 0.0 {
            return Err(AcquisitionError::Config("sqrt_beta must be >= 0".into()));
        }
        if self.eval_budget < 1 || self.best_of_k < 1 {
            return Err(AcquisitionError::Config("eval_budget and best_of_k must be >= 1".into()));
        }
        if self.firefly_population < 2 || self.regevo_population < 1 || self.tournament < 1 {
            return Err(AcquisitionError::Config("population sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Upper confidence bound `mu + sqrt_beta * sigma`.
pub fn ucb(pred: &GaussianPrediction, sqrt_beta: f64) -> f64 {
    pred.mu + sqrt_beta * pred.sigma
}

/// Argmax of `acq` over `proposals`, ties broken by earliest index.
pub fn rank_best_of<F>(proposals: &[Candidate], mut acq: F) -> Result<Candidate, AcquisitionError>
where
    F: FnMut(&[Candidate]) -> Result<Vec<f64>, AcquisitionError>,
{
    assert!(!proposals.is_empty(), "rank_best_of needs at least one proposal");
    let scores = acq(proposals)?;
    assert_eq!(scores.len(), proposals.len());
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(proposals[best].clone())
}

// ---------------------------------------------------------------------------
// Firefly optimizer for flat spaces.
// ---------------------------------------------------------------------------

/// Internal position: continuous coordinates live in rescaled `[0,1]`,
/// grid coordinates carry their index.
#[derive(Clone)]
enum Coord {
    Cont(f64),
    Idx(usize),
}

struct CoordMeta<'a> {
    kind: &'a ParamKind,
}

impl CoordMeta<'_> {
    fn grid_len(&self) -> usize {
        match self.kind {
            ParamKind::Discrete { values } => values.len(),
            ParamKind::Categorical { values } => values.len(),
            _ => 0,
        }
    }

    /// Position of a coordinate on the unit interval, for distances.
    fn unit(&self, c: &Coord) -> f64 {
        match c {
            Coord::Cont(u) => *u,
            Coord::Idx(i) => {
                let m = self.grid_len();
                if m > 1 {
                    *i as f64 / (m - 1) as f64
                } else {
                    0.0
                }
            }
        }
    }
}

fn sample_coord(kind: &ParamKind, rng: &mut SeededRng) -> Coord {
    match kind {
        ParamKind::Float { .. } | ParamKind::Int { .. } => Coord::Cont(rng.random_range(0.0..=1.0)),
        ParamKind::Discrete { values } => Coord::Idx(rng.random_range(0..values.len())),
        ParamKind::Categorical { values } => Coord::Idx(rng.random_range(0..values.len())),
    }
}

fn materialize(position: &[Coord], space: &SearchSpace) -> Candidate {
    let values = position
        .iter()
        .zip(space.params())
        .map(|(c, p)| match (&p.kind, c) {
            (ParamKind::Float { lo, hi }, Coord::Cont(u)) => ParamValue::Float(lo + u * (hi - lo)),
            (ParamKind::Int { lo, hi }, Coord::Cont(u)) => {
                let v = (*lo as f64 + u * (*hi - *lo) as f64).round() as i64;
                ParamValue::Int(v.clamp(*lo, *hi))
            }
            (ParamKind::Discrete { values }, Coord::Idx(i)) => ParamValue::Float(values[*i]),
            (ParamKind::Categorical { values }, Coord::Idx(i)) => {
                ParamValue::Categorical(values[*i].clone())
            }
            _ => unreachable!("coord kind matches param kind by construction"),
        })
        .collect();
    Candidate::Flat(values)
}

/// Firefly-style maximization of a batch acquisition over a flat space.
///
/// The population starts uniform; each iteration every member moves toward
/// each brighter member by `beta0 * exp(-gamma * r^2)` on `[0,1]`-rescaled
/// coordinates plus uniform jitter `alpha` (annealed by 0.97 per iteration,
/// `beta0 = 1`, `gamma = 1`). Grid coordinates resample uniformly with
/// probability equal to the continuous step magnitude clipped to `[0,1]`.
/// Consumes at most `budget` acquisition evaluations and returns the best
/// candidate seen.
pub fn firefly_maximize<F>(
    mut acq: F,
    space: &SearchSpace,
    budget: usize,
    population: usize,
    rng: &mut SeededRng,
) -> Result<Candidate, AcquisitionError>
where
    F: FnMut(&[Candidate]) -> Result<Vec<f64>, AcquisitionError>,
{
    let SearchSpace::Flat { params } = space else {
        return Err(AcquisitionError::UnsupportedSpace(space.kind_name().to_string()));
    };
    assert!(budget >= 1);
    let metas: Vec<CoordMeta> = params.iter().map(|p| CoordMeta { kind: &p.kind }).collect();
    let pop_size = population.min(budget).max(1);

    let mut positions: Vec<Vec<Coord>> = (0..pop_size)
        .map(|_| params.iter().map(|p| sample_coord(&p.kind, rng)).collect())
        .collect();
    let mut cands: Vec<Candidate> = positions.iter().map(|p| materialize(p, space)).collect();
    let mut scores = acq(&cands)?;
    let mut evals = pop_size;

    let mut best = argmax(&scores);
    let mut best_cand = cands[best].clone();
    let mut best_score = scores[best];

    let beta0 = 1.0;
    let gamma = 1.0;
    let mut alpha = 0.25;
    while evals + pop_size <= budget {
        let snapshot_scores = scores.clone();
        let snapshot_pos = positions.clone();
        for i in 0..pop_size {
            for j in 0..pop_size {
                if snapshot_scores[j] <= snapshot_scores[i] {
                    continue;
                }
                let r2: f64 = metas
                    .iter()
                    .enumerate()
                    .map(|(c, m)| {
                        let d = m.unit(&snapshot_pos[j][c]) - m.unit(&positions[i][c]);
                        d * d
                    })
                    .sum();
                let beta = beta0 * (-gamma * r2).exp();
                for (c, meta) in metas.iter().enumerate() {
                    let jitter = alpha * rng.random_range(-0.5..0.5);
                    let toward = meta.unit(&snapshot_pos[j][c]) - meta.unit(&positions[i][c]);
                    let step = beta * toward + jitter;
                    match &mut positions[i][c] {
                        Coord::Cont(u) => {
                            *u = (*u + step).clamp(0.0, 1.0);
                        }
                        Coord::Idx(idx) => {
                            let p_resample = step.abs().min(1.0);
                            if rng.random_range(0.0..1.0) < p_resample {
                                let m = meta.grid_len();
                                *idx = rng.random_range(0..m);
                            }
                        }
                    }
                }
            }
        }
        cands = positions.iter().map(|p| materialize(p, space)).collect();
        scores = acq(&cands)?;
        evals += pop_size;
        let round_best = argmax(&scores);
        if scores[round_best] > best_score {
            best_score = scores[round_best];
            best_cand = cands[round_best].clone();
            best = round_best;
        }
        let _ = best;
        alpha *= 0.97;
    }
    Ok(best_cand)
}

fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Regularized Evolution for permutation/choice spaces.
// ---------------------------------------------------------------------------

/// Aging population: a FIFO of `(candidate, fitness)` with fixed capacity;
/// inserting at capacity evicts exactly the oldest member.
#[derive(Debug, Clone)]
pub struct EvolutionState {
    population: VecDeque<(Candidate, f64)>,
    capacity: usize,
    tournament: usize,
}

impl EvolutionState {
    pub fn new(capacity: usize, tournament: usize) -> Self {
        assert!(capacity >= 1 && tournament >= 1);
        Self { population: VecDeque::with_capacity(capacity), capacity, tournament }
    }

    /// Population 50, tournament 7.
    pub fn with_defaults() -> Self {
        Self::new(50, 7)
    }

    /// Rebuild the population from the most recent `capacity` trials, which
    /// is exactly the state an aging population reaches after inserting the
    /// whole history in order.
    pub fn from_history(history: &[(Candidate, f64)], capacity: usize, tournament: usize) -> Self {
        let mut state = Self::new(capacity, tournament);
        for (cand, fit) in history {
            state.insert(cand.clone(), *fit);
        }
        state
    }

    pub fn insert(&mut self, cand: Candidate, fitness: f64) {
        if self.population.len() == self.capacity {
            self.population.pop_front();
        }
        self.population.push_back((cand, fitness));
    }

    pub fn len(&self) -> usize {
        self.population.len()
    }

    pub fn is_empty(&self) -> bool {
        self.population.is_empty()
    }

    pub fn contains(&self, cand: &Candidate) -> bool {
        self.population.iter().any(|(c, _)| c == cand)
    }
}

/// One Regularized Evolution step: tournament-select a parent from
/// `tournament` members sampled without replacement (all members when the
/// population is smaller), then mutate. The caller evaluates the child and
/// inserts it back, which evicts the oldest member at capacity.
pub fn regevo_step(
    state: &EvolutionState,
    space: &SearchSpace,
    rng: &mut SeededRng,
) -> Result<Candidate, AcquisitionError> {
    if state.population.is_empty() {
        return Err(AcquisitionError::EmptyPopulation);
    }
    let s = state.tournament.min(state.population.len());
    let mut sampled = rand::seq::index::sample(rng, state.population.len(), s).into_vec();
    sampled.sort_unstable();
    // Fittest of the tournament; ties keep the earliest index.
    let mut winner = sampled[0];
    for &i in &sampled[1..] {
        if state.population[i].1 > state.population[winner].1 {
            winner = i;
        }
    }
    let parent = state.population[winner].0.clone();
    Ok(mutate(space, &parent, rng))
}

/// Space-specific mutation: permutations swap two distinct positions;
/// choices replace one chosen index with one unchosen index.
pub fn mutate(space: &SearchSpace, cand: &Candidate, rng: &mut SeededRng) -> Candidate {
    match (space, cand) {
        (SearchSpace::Permutation { n }, Candidate::Permutation(order)) => {
            let mut child = order.clone();
            let i = rng.random_range(0..*n);
            let mut j = rng.random_range(0..*n - 1);
            if j >= i {
                j += 1;
            }
            child.swap(i, j);
            Candidate::Permutation(child)
        }
        (SearchSpace::Choice { n, k }, Candidate::Choice(indices)) => {
            if *k == *n {
                return cand.clone();
            }
            let mut child = indices.clone();
            let drop_pos = rng.random_range(0..child.len());
            let unchosen: Vec<usize> = (0..*n).filter(|i| !child.contains(i)).collect();
            child[drop_pos] = unchosen[rng.random_range(0..unchosen.len())];
            child.sort_unstable();
            Candidate::Choice(child)
        }
        (SearchSpace::Flat { .. }, Candidate::Flat(_)) => {
            // Flat spaces go through the firefly optimizer; a uniform
            // resample keeps this total for completeness.
            space.sample(rng)
        }
        _ => space.sample(rng),
    }
}

// ---------------------------------------------------------------------------
// Model-backed suggestion.
// ---------------------------------------------------------------------------

/// Everything needed to propose the next candidate for one task.
pub struct Suggester<'a, T: Scalar> {
    pub space: &'a SearchSpace,
    pub params: &'a RegressorParams<T>,
    pub model_config: &'a RegressorConfig,
    pub embedder: &'a Embedder<T>,
    pub acq_config: &'a AcquisitionConfig,
    /// Metadata string for the task; embedded when the model uses metadata.
    pub metadata_text: Option<&'a str>,
}

impl<T: Scalar> Suggester<'_, T> {
    /// Propose the next candidate given evaluated `(candidate, y)` history.
    /// Warmup trials fall back to uniform sampling; afterwards flat spaces
    /// run firefly over the UCB acquisition and combinatorial spaces rank
    /// `best_of_k` evolution proposals.
    pub fn suggest(
        &self,
        history: &[(Candidate, f64)],
        rng: &mut SeededRng,
    ) -> Result<Candidate, AcquisitionError> {
        self.acq_config.validate()?;
        match self.space {
            SearchSpace::Flat { .. } => {
                if history.len() < self.acq_config.flat_warmup.max(2) {
                    return Ok(self.space.sample(rng));
                }
                let scorer = self.model_scorer(history)?;
                firefly_maximize(
                    |cands| scorer.scores(cands),
                    self.space,
                    self.acq_config.eval_budget,
                    self.acq_config.firefly_population,
                    rng,
                )
            }
            SearchSpace::Permutation { .. } | SearchSpace::Choice { .. } => {
                if history.len() < self.acq_config.ranking_start_trial.max(2) {
                    return Ok(plain_regevo_suggest(self.space, history, self.acq_config, rng));
                }
                let state = EvolutionState::from_history(
                    history,
                    self.acq_config.regevo_population,
                    self.acq_config.tournament,
                );
                let proposals: Vec<Candidate> = (0..self.acq_config.best_of_k)
                    .map(|_| regevo_step(&state, self.space, rng))
                    .collect::<Result<_, _>>()?;
                let scorer = self.model_scorer(history)?;
                rank_best_of(&proposals, |cands| scorer.scores(cands))
            }
        }
    }

    fn model_scorer(&self, history: &[(Candidate, f64)]) -> Result<ModelScorer<'_, T>, AcquisitionError> {
        let normalizer = Normalizer::fit(&history.iter().map(|(_, y)| *y).collect::<Vec<_>>())?;
        let strings: Vec<String> = history
            .iter()
            .map(|(c, _)| self.space.candidate_to_string(c))
            .collect::<Result<_, _>>()?;
        let refs: Vec<&str> = strings.iter().map(|s| s.as_str()).collect();
        let embeds = self.embedder.embed_batch(&refs)?;
        let history_embeds: Vec<(EmbeddingVector<T>, f64)> = embeds
            .into_iter()
            .zip(history)
            .map(|(e, (_, y))| (e, normalizer.apply(*y)))
            .collect();
        let metadata = match (self.model_config.use_metadata, self.metadata_text) {
            (true, Some(text)) => Some(self.embedder.embed(text)?),
            (true, None) => {
                return Err(AcquisitionError::Config(
                    "model uses metadata but the task provides none".into(),
                ))
            }
            _ => None,
        };
        Ok(ModelScorer {
            space: self.space,
            params: self.params,
            config: self.model_config,
            embedder: self.embedder,
            sqrt_beta: self.acq_config.sqrt_beta,
            history_embeds,
            metadata,
        })
    }
}

/// Plain Regularized Evolution baseline: uniform sampling while the
/// population seeds (the warmup window), tournament + mutation afterwards.
pub fn plain_regevo_suggest(
    space: &SearchSpace,
    history: &[(Candidate, f64)],
    config: &AcquisitionConfig,
    rng: &mut SeededRng,
) -> Candidate {
    if history.len() < config.ranking_start_trial.max(1) {
        return space.sample(rng);
    }
    let state = EvolutionState::from_history(history, config.regevo_population, config.tournament);
    regevo_step(&state, space, rng).unwrap_or_else(|_| space.sample(rng))
}

struct ModelScorer<'a, T: Scalar> {
    space: &'a SearchSpace,
    params: &'a RegressorParams<T>,
    config: &'a RegressorConfig,
    embedder: &'a Embedder<T>,
    sqrt_beta: f64,
    history_embeds: Vec<(EmbeddingVector<T>, f64)>,
    metadata: Option<EmbeddingVector<T>>,
}

impl<T: Scalar> ModelScorer<'_, T> {
    fn scores(&self, cands: &[Candidate]) -> Result<Vec<f64>, AcquisitionError> {
        let strings: Vec<String> = cands
            .iter()
            .map(|c| self.space.candidate_to_string(c))
            .collect::<Result<_, _>>()?;
        let refs: Vec<&str> = strings.iter().map(|s| s.as_str()).collect();
        let targets = self.embedder.embed_batch(&refs)?;
        let preds = predict(
            self.params,
            self.config,
            &self.history_embeds,
            &targets,
            self.metadata.as_ref(),
        )?;
        Ok(preds.iter().map(|p| ucb(p, self.sqrt_beta)).collect())
    }
}
