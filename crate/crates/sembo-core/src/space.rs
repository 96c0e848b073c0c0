//! Search spaces, candidates, and their canonical string forms.
//!
//! Three space families are supported: flat Cartesian products of typed
//! parameters, permutations of `{0..n-1}`, and k-of-n index choices. The
//! string forms produced here are what the embedder consumes, so they are
//! stable byte-for-byte: flat candidates use compact JSON in declaration
//! order, permutation/choice candidates use the indexed `{[0]:2, [1]:0}`
//! form, and floats carry at most 6 significant digits.

use serde::{Deserialize, Serialize};

use crate::error::SpaceError;
use crate::fmt::{format_float, json_string};
use crate::rng::SeededRng;
use rand::seq::SliceRandom;
use rand::RngExt;

/// Parameter domain within a flat space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamKind {
    /// Continuous value in `[lo, hi]`.
    Float { lo: f64, hi: f64 },
    /// Integer value in `[lo, hi]`.
    Int { lo: i64, hi: i64 },
    /// One value from an ordered numeric grid.
    Discrete { values: Vec<f64> },
    /// One label from an ordered label list.
    Categorical { values: Vec<String> },
}

/// A named parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
}

impl ParamSpec {
    pub fn float(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), kind: ParamKind::Float { lo, hi } }
    }

    pub fn int(name: impl Into<String>, lo: i64, hi: i64) -> Self {
        Self { name: name.into(), kind: ParamKind::Int { lo, hi } }
    }

    pub fn discrete(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), kind: ParamKind::Discrete { values } }
    }

    pub fn categorical(name: impl Into<String>, values: Vec<String>) -> Self {
        Self { name: name.into(), kind: ParamKind::Categorical { values } }
    }

    fn check(&self) -> Result<(), SpaceError> {
        match &self.kind {
            ParamKind::Float { lo, hi } => {
                if !(lo < hi) {
                    return Err(SpaceError::InvalidSpace(format!(
                        "parameter {}: requires lo < hi, got [{lo}, {hi}]",
                        self.name
                    )));
                }
            }
            ParamKind::Int { lo, hi } => {
                if !(lo < hi) {
                    return Err(SpaceError::InvalidSpace(format!(
                        "parameter {}: requires lo < hi, got [{lo}, {hi}]",
                        self.name
                    )));
                }
            }
            ParamKind::Discrete { values } => {
                if values.is_empty() {
                    return Err(SpaceError::InvalidSpace(format!(
                        "parameter {}: discrete grid is empty",
                        self.name
                    )));
                }
                for (i, a) in values.iter().enumerate() {
                    if values[..i].contains(a) {
                        return Err(SpaceError::InvalidSpace(format!(
                            "parameter {}: duplicate grid value {a}",
                            self.name
                        )));
                    }
                }
            }
            ParamKind::Categorical { values } => {
                if values.is_empty() {
                    return Err(SpaceError::InvalidSpace(format!(
                        "parameter {}: categorical label list is empty",
                        self.name
                    )));
                }
                for (i, a) in values.iter().enumerate() {
                    if values[..i].contains(a) {
                        return Err(SpaceError::InvalidSpace(format!(
                            "parameter {}: duplicate label {a:?}",
                            self.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Value assigned to one flat parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamValue {
    Float(f64),
    Int(i64),
    Categorical(String),
}

/// A search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SearchSpace {
    Flat { params: Vec<ParamSpec> },
    Permutation { n: usize },
    Choice { n: usize, k: usize },
}

/// A point in a search space. Flat assignments are positional, aligned with
/// the space's parameter declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Candidate {
    Flat(Vec<ParamValue>),
    Permutation(Vec<usize>),
    Choice(Vec<usize>),
}

/// Free-text task description fed to the embedder when metadata is enabled.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TaskMetadata {
    pub text: String,
}

impl TaskMetadata {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into() }
    }
}

/// Outcome of validating a candidate against a space.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    violations: Vec<String>,
}

impl ValidityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }

    pub fn into_result(self) -> Result<(), SpaceError> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(SpaceError::InvalidCandidate { violations: self.violations })
        }
    }
}

/// Bijective renaming produced by [`SearchSpace::canonicalize_names`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameMap {
    /// `(canonical, original)` pairs in declaration order.
    pairs: Vec<(String, String)>,
}

impl NameMap {
    pub fn original(&self, canonical: &str) -> Option<&str> {
        self.pairs.iter().find(|(c, _)| c == canonical).map(|(_, o)| o.as_str())
    }

    pub fn canonical(&self, original: &str) -> Option<&str> {
        self.pairs.iter().find(|(_, o)| o == original).map(|(c, _)| c.as_str())
    }

    /// Restore the original names on a canonicalized space.
    pub fn restore(&self, space: &SearchSpace) -> Result<SearchSpace, SpaceError> {
        let SearchSpace::Flat { params } = space else {
            return Err(SpaceError::UnsupportedSpace(space.kind_name().to_string()));
        };
        let mut restored = params.clone();
        for p in &mut restored {
            let Some(orig) = self.original(&p.name) else {
                return Err(SpaceError::InvalidSpace(format!("no mapping for {}", p.name)));
            };
            p.name = orig.to_string();
        }
        SearchSpace::flat(restored)
    }
}

impl SearchSpace {
    /// Flat space over the given parameters. Names must be unique and each
    /// parameter domain well-formed.
    pub fn flat(params: Vec<ParamSpec>) -> Result<Self, SpaceError> {
        for (i, p) in params.iter().enumerate() {
            p.check()?;
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(SpaceError::InvalidSpace(format!("duplicate parameter name {}", p.name)));
            }
        }
        Ok(Self::Flat { params })
    }

    /// Permutations of `{0..n-1}`, `n >= 2`.
    pub fn permutation(n: usize) -> Result<Self, SpaceError> {
        if n < 2 {
            return Err(SpaceError::InvalidSpace(format!("permutation requires n >= 2, got {n}")));
        }
        Ok(Self::Permutation { n })
    }

    /// Subsets of `{0..n-1}` of size `k`, `1 <= k <= n`.
    pub fn choice(n: usize, k: usize) -> Result<Self, SpaceError> {
        if k < 1 || k > n {
            return Err(SpaceError::InvalidSpace(format!("choice requires 1 <= k <= n, got k={k}, n={n}")));
        }
        Ok(Self::Choice { n, k })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Flat { .. } => "flat",
            Self::Permutation { .. } => "permutation",
            Self::Choice { .. } => "choice",
        }
    }

    pub fn params(&self) -> &[ParamSpec] {
        match self {
            Self::Flat { params } => params,
            _ => &[],
        }
    }

    /// Check every candidate invariant; returns a report rather than failing.
    pub fn validate(&self, cand: &Candidate) -> ValidityReport {
        let mut violations = Vec::new();
        match (self, cand) {
            (Self::Flat { params }, Candidate::Flat(values)) => {
                if values.len() != params.len() {
                    violations.push(format!(
                        "expected {} assignments, got {}",
                        params.len(),
                        values.len()
                    ));
                } else {
                    for (p, v) in params.iter().zip(values) {
                        validate_value(p, v, &mut violations);
                    }
                }
            }
            (Self::Permutation { n }, Candidate::Permutation(order)) => {
                if order.len() != *n {
                    violations.push(format!("expected length {n}, got {}", order.len()));
                } else {
                    let mut seen = vec![false; *n];
                    for &v in order {
                        if v >= *n {
                            violations.push(format!("index {v} out of range 0..{n}"));
                        } else if seen[v] {
                            violations.push(format!("duplicate index {v}"));
                        } else {
                            seen[v] = true;
                        }
                    }
                }
            }
            (Self::Choice { n, k }, Candidate::Choice(indices)) => {
                if indices.len() != *k {
                    violations.push(format!("expected {k} indices, got {}", indices.len()));
                }
                let mut seen = vec![false; *n];
                for &v in indices {
                    if v >= *n {
                        violations.push(format!("index {v} out of range 0..{n}"));
                    } else if seen[v] {
                        violations.push(format!("duplicate index {v}"));
                    } else {
                        seen[v] = true;
                    }
                }
            }
            (space, cand) => {
                violations.push(format!(
                    "candidate kind {} does not match space kind {}",
                    cand.kind_name(),
                    space.kind_name()
                ));
            }
        }
        ValidityReport { violations }
    }

    /// Uniform sample. Deterministic for a given rng state.
    pub fn sample(&self, rng: &mut SeededRng) -> Candidate {
        match self {
            Self::Flat { params } => Candidate::Flat(
                params
                    .iter()
                    .map(|p| match &p.kind {
                        ParamKind::Float { lo, hi } => ParamValue::Float(rng.random_range(*lo..=*hi)),
                        ParamKind::Int { lo, hi } => ParamValue::Int(rng.random_range(*lo..=*hi)),
                        ParamKind::Discrete { values } => {
                            ParamValue::Float(values[rng.random_range(0..values.len())])
                        }
                        ParamKind::Categorical { values } => {
                            ParamValue::Categorical(values[rng.random_range(0..values.len())].clone())
                        }
                    })
                    .collect(),
            ),
            Self::Permutation { n } => {
                let mut order: Vec<usize> = (0..*n).collect();
                order.shuffle(rng);
                Candidate::Permutation(order)
            }
            Self::Choice { n, k } => {
                let mut pool: Vec<usize> = (0..*n).collect();
                let (chosen, _) = pool.partial_shuffle(rng, *k);
                let mut indices = chosen.to_vec();
                indices.sort_unstable();
                Candidate::Choice(indices)
            }
        }
    }

    /// Canonical single-line string form of a valid candidate.
    pub fn candidate_to_string(&self, cand: &Candidate) -> Result<String, SpaceError> {
        self.validate(cand).into_result()?;
        Ok(match (self, cand) {
            (Self::Flat { params }, Candidate::Flat(values)) => {
                let fields: Vec<String> = params
                    .iter()
                    .zip(values)
                    .map(|(p, v)| format!("{}:{}", json_string(&p.name), value_to_string(v)))
                    .collect();
                format!("{{{}}}", fields.join(","))
            }
            (_, Candidate::Permutation(order)) => indexed_form(order),
            (_, Candidate::Choice(indices)) => {
                let mut sorted = indices.clone();
                sorted.sort_unstable();
                indexed_form(&sorted)
            }
            _ => unreachable!("validated above"),
        })
    }

    /// Newline-separated description of the space itself.
    pub fn metadata_to_string(&self) -> String {
        match self {
            Self::Flat { params } => params
                .iter()
                .map(|p| match &p.kind {
                    ParamKind::Float { lo, hi } => {
                        format!("{}:DOUBLE,[{},{}]", p.name, format_float(*lo), format_float(*hi))
                    }
                    ParamKind::Int { lo, hi } => format!("{}:INT,[{lo},{hi}]", p.name),
                    ParamKind::Discrete { values } => format!(
                        "{}:DISCRETE,[{}]",
                        p.name,
                        values.iter().map(|v| format_float(*v)).collect::<Vec<_>>().join(",")
                    ),
                    ParamKind::Categorical { values } => {
                        format!("{}:CATEGORICAL,[{}]", p.name, values.join(","))
                    }
                })
                .collect::<Vec<_>>()
                .join("\n"),
            Self::Permutation { n } => format!("task:\"Permutation\"\nsize:{n}"),
            Self::Choice { n, k } => format!("task:\"Choice\"\nsize: {n}-choose-{k}"),
        }
    }

    /// Rename flat parameters to `x0..x(n-1)` in declaration order, returning
    /// the renamed space and the map needed to round-trip.
    pub fn canonicalize_names(&self) -> Result<(SearchSpace, NameMap), SpaceError> {
        let Self::Flat { params } = self else {
            return Err(SpaceError::UnsupportedSpace(self.kind_name().to_string()));
        };
        let mut renamed = params.clone();
        let mut pairs = Vec::with_capacity(params.len());
        for (i, p) in renamed.iter_mut().enumerate() {
            let canonical = format!("x{i}");
            pairs.push((canonical.clone(), p.name.clone()));
            p.name = canonical;
        }
        Ok((SearchSpace::flat(renamed)?, NameMap { pairs }))
    }
}

impl Candidate {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Flat(_) => "flat",
            Self::Permutation(_) => "permutation",
            Self::Choice(_) => "choice",
        }
    }
}

fn validate_value(p: &ParamSpec, v: &ParamValue, violations: &mut Vec<String>) {
    match (&p.kind, v) {
        (ParamKind::Float { lo, hi }, ParamValue::Float(x)) => {
            if !x.is_finite() || x < lo || x > hi {
                violations.push(format!("{}: value {x} outside [{lo}, {hi}]", p.name));
            }
        }
        (ParamKind::Int { lo, hi }, ParamValue::Int(x)) => {
            if x < lo || x > hi {
                violations.push(format!("{}: value {x} outside [{lo}, {hi}]", p.name));
            }
        }
        (ParamKind::Discrete { values }, ParamValue::Float(x)) => {
            if !values.contains(x) {
                violations.push(format!("{}: value {x} not in the feasible grid", p.name));
            }
        }
        (ParamKind::Categorical { values }, ParamValue::Categorical(label)) => {
            if !values.contains(label) {
                violations.push(format!("{}: label {label:?} not in the feasible set", p.name));
            }
        }
        (_, v) => {
            violations.push(format!("{}: value {v:?} has the wrong type", p.name));
        }
    }
}

fn value_to_string(v: &ParamValue) -> String {
    match v {
        ParamValue::Float(x) => format_float(*x),
        ParamValue::Int(x) => x.to_string(),
        ParamValue::Categorical(label) => json_string(label),
    }
}

fn indexed_form(indices: &[usize]) -> String {
    let fields: Vec<String> =
        indices.iter().enumerate().map(|(pos, v)| format!("[{pos}]:{v}")).collect();
    format!("{{{}}}", fields.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use std::collections::HashSet;

    fn one_float_space() -> SearchSpace {
        SearchSpace::flat(vec![ParamSpec::float("p0", -5.0, 5.0)]).unwrap()
    }

    #[test]
    fn validate_examples() {
        let flat = one_float_space();
        assert!(flat.validate(&Candidate::Flat(vec![ParamValue::Float(0.3)])).is_ok());

        let perm = SearchSpace::permutation(4).unwrap();
        assert!(perm.validate(&Candidate::Permutation(vec![2, 0, 3, 1])).is_ok());

        let choice = SearchSpace::choice(4, 2).unwrap();
        let report = choice.validate(&Candidate::Choice(vec![1, 1]));
        assert!(!report.is_ok());
        assert!(report.violations()[0].contains("duplicate index"));
    }

    #[test]
    fn validate_flags_out_of_bounds_and_type_mismatch() {
        let flat = one_float_space();
        assert!(!flat.validate(&Candidate::Flat(vec![ParamValue::Float(7.0)])).is_ok());
        assert!(!flat.validate(&Candidate::Flat(vec![ParamValue::Int(1)])).is_ok());
        assert!(!flat.validate(&Candidate::Permutation(vec![0])).is_ok());
    }

    #[test]
    fn space_constructors_enforce_invariants() {
        assert!(SearchSpace::permutation(1).is_err());
        assert!(SearchSpace::choice(4, 0).is_err());
        assert!(SearchSpace::choice(4, 5).is_err());
        assert!(SearchSpace::flat(vec![ParamSpec::float("a", 1.0, 1.0)]).is_err());
        assert!(SearchSpace::flat(vec![
            ParamSpec::float("a", 0.0, 1.0),
            ParamSpec::float("a", 0.0, 1.0),
        ])
        .is_err());
        assert!(SearchSpace::flat(vec![ParamSpec::discrete("a", vec![1.0, 1.0])]).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_in_bounds() {
        let space = SearchSpace::flat(vec![ParamSpec::float("p0", 0.0, 1.0)]).unwrap();
        let a = space.sample(&mut rng_from_seed(9));
        let b = space.sample(&mut rng_from_seed(9));
        assert_eq!(a, b);
        let Candidate::Flat(vals) = &a else { panic!() };
        let ParamValue::Float(x) = vals[0] else { panic!() };
        assert!((0.0..=1.0).contains(&x));
    }

    #[test]
    fn permutation_sampling_is_roughly_uniform() {
        // 6 orderings of PERMUTATION(3); 6000 draws, each expected 1000 +- 150.
        let space = SearchSpace::permutation(3).unwrap();
        let mut rng = rng_from_seed(17);
        let mut counts: std::collections::HashMap<Vec<usize>, usize> = Default::default();
        for _ in 0..6000 {
            let Candidate::Permutation(p) = space.sample(&mut rng) else { panic!() };
            *counts.entry(p).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        for (perm, count) in counts {
            assert!(
                (850..=1150).contains(&count),
                "ordering {perm:?} drawn {count} times"
            );
        }
    }

    #[test]
    fn choice_sampling_valid_and_covers_all_subsets() {
        let space = SearchSpace::choice(4, 2).unwrap();
        let mut rng = rng_from_seed(3);
        let mut seen = HashSet::new();
        for _ in 0..500 {
            let cand = space.sample(&mut rng);
            assert!(space.validate(&cand).is_ok());
            let Candidate::Choice(ix) = &cand else { panic!() };
            seen.insert(ix.clone());
        }
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn sample_always_validates() {
        let spaces = [
            SearchSpace::flat(vec![
                ParamSpec::float("a", -5.0, 5.0),
                ParamSpec::int("b", 0, 9),
                ParamSpec::discrete("c", vec![0.5, 1.5, 2.5]),
                ParamSpec::categorical("d", vec!["x".into(), "y".into()]),
            ])
            .unwrap(),
            SearchSpace::permutation(6).unwrap(),
            SearchSpace::choice(8, 3).unwrap(),
        ];
        let mut rng = rng_from_seed(11);
        for space in &spaces {
            for _ in 0..100_000 {
                assert!(space.validate(&space.sample(&mut rng)).is_ok());
            }
        }
    }

    #[test]
    fn candidate_strings_match_canonical_forms() {
        let flat = SearchSpace::flat(vec![
            ParamSpec::float("p0", -5.0, 5.0),
            ParamSpec::int("p1", 0, 10),
        ])
        .unwrap();
        let cand = Candidate::Flat(vec![ParamValue::Float(0.3), ParamValue::Int(4)]);
        assert_eq!(flat.candidate_to_string(&cand).unwrap(), r#"{"p0":0.3,"p1":4}"#);

        let perm = SearchSpace::permutation(4).unwrap();
        assert_eq!(
            perm.candidate_to_string(&Candidate::Permutation(vec![2, 0, 3, 1])).unwrap(),
            "{[0]:2, [1]:0, [2]:3, [3]:1}"
        );

        let choice = SearchSpace::choice(4, 2).unwrap();
        assert_eq!(
            choice.candidate_to_string(&Candidate::Choice(vec![3, 1])).unwrap(),
            "{[0]:1, [1]:3}"
        );
    }

    #[test]
    fn candidate_string_rejects_invalid() {
        let choice = SearchSpace::choice(4, 2).unwrap();
        let err = choice.candidate_to_string(&Candidate::Choice(vec![1, 1])).unwrap_err();
        assert!(err.to_string().contains("duplicate index"));
    }

    #[test]
    fn categorical_values_serialize_as_json_strings() {
        let flat = SearchSpace::flat(vec![ParamSpec::categorical(
            "act",
            vec!["relu".into(), "tanh".into()],
        )])
        .unwrap();
        let cand = Candidate::Flat(vec![ParamValue::Categorical("relu".into())]);
        assert_eq!(flat.candidate_to_string(&cand).unwrap(), r#"{"act":"relu"}"#);
    }

    #[test]
    fn metadata_strings_match_canonical_forms() {
        assert_eq!(one_float_space().metadata_to_string(), "p0:DOUBLE,[-5,5]");
        let canon = one_float_space().canonicalize_names().unwrap().0;
        assert_eq!(canon.metadata_to_string(), "x0:DOUBLE,[-5,5]");
        assert_eq!(
            SearchSpace::permutation(4).unwrap().metadata_to_string(),
            "task:\"Permutation\"\nsize:4"
        );
        assert_eq!(
            SearchSpace::choice(4, 2).unwrap().metadata_to_string(),
            "task:\"Choice\"\nsize: 4-choose-2"
        );
    }

    #[test]
    fn canonicalize_renames_and_round_trips() {
        let space = SearchSpace::flat(vec![
            ParamSpec::float("learning_rate", 1e-4, 1.0),
            ParamSpec::int("depth", 1, 12),
        ])
        .unwrap();
        let (canon, map) = space.canonicalize_names().unwrap();
        assert_eq!(canon.params()[0].name, "x0");
        assert_eq!(canon.params()[1].name, "x1");
        assert_eq!(map.original("x0"), Some("learning_rate"));
        assert_eq!(map.canonical("depth"), Some("x1"));
        assert_eq!(map.restore(&canon).unwrap(), space);

        // Already-canonical space is a fixed point.
        let (again, map2) = canon.canonicalize_names().unwrap();
        assert_eq!(again, canon);
        assert_eq!(map2.restore(&again).unwrap(), canon);
    }

    #[test]
    fn canonicalize_rejects_non_flat() {
        assert!(SearchSpace::permutation(3).unwrap().canonicalize_names().is_err());
    }

    #[test]
    fn candidate_string_injective_on_small_spaces() {
        // Exhaustive over PERMUTATION(n<=5) and CHOICE(6,k).
        for n in 2..=5 {
            let space = SearchSpace::permutation(n).unwrap();
            let mut seen = HashSet::new();
            let mut order: Vec<usize> = (0..n).collect();
            permutohedron_heap(&mut order, &mut |perm: &[usize]| {
                let s = space.candidate_to_string(&Candidate::Permutation(perm.to_vec())).unwrap();
                assert!(seen.insert(s), "duplicate string for {perm:?}");
            });
            assert_eq!(seen.len(), (1..=n).product::<usize>());
        }
        for k in 1..=6 {
            let space = SearchSpace::choice(6, k).unwrap();
            let mut seen = HashSet::new();
            let mut count = 0;
            for_each_subset(6, k, &mut |ix: &[usize]| {
                let s = space.candidate_to_string(&Candidate::Choice(ix.to_vec())).unwrap();
                assert!(seen.insert(s));
                count += 1;
            });
            assert_eq!(seen.len(), count);
        }
    }

    fn permutohedron_heap(items: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        fn heap(k: usize, items: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
            if k == 1 {
                visit(items);
                return;
            }
            for i in 0..k {
                heap(k - 1, items, visit);
                if k % 2 == 0 {
                    items.swap(i, k - 1);
                } else {
                    items.swap(0, k - 1);
                }
            }
        }
        let n = items.len();
        heap(n, items, visit);
    }

    fn for_each_subset(n: usize, k: usize, visit: &mut impl FnMut(&[usize])) {
        let mut current = Vec::with_capacity(k);
        fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
            if current.len() == k {
                visit(current);
                return;
            }
            for i in start..n {
                current.push(i);
                rec(i + 1, n, k, current, visit);
                current.pop();
            }
        }
        rec(0, n, k, &mut current, visit);
    }
}
