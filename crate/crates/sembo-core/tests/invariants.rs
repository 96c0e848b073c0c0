//! Property tests over the crate's core invariants.

use proptest::prelude::*;

use sembo_core::fmt::format_float;
use sembo_core::harness::metrics::best_so_far;
use sembo_core::normalizer::Normalizer;
use sembo_core::rng::rng_from_seed;
use sembo_core::space::{Candidate, ParamSpec, ParamValue, SearchSpace};

proptest! {
    /// Serialization is a pure function: same candidate, same bytes.
    #[test]
    fn candidate_strings_are_stable(values in prop::collection::vec(-5.0f64..5.0, 1..6)) {
        let params: Vec<ParamSpec> =
            (0..values.len()).map(|i| ParamSpec::float(format!("p{i}"), -5.0, 5.0)).collect();
        let space = SearchSpace::flat(params).unwrap();
        let cand = Candidate::Flat(values.iter().map(|&v| ParamValue::Float(v)).collect());
        let a = space.candidate_to_string(&cand).unwrap();
        let b = space.candidate_to_string(&cand).unwrap();
        prop_assert_eq!(&a, &b);
        let braced = a.starts_with('{') && a.ends_with('}');
        prop_assert!(braced);
    }

    /// The canonical float formatter parses back to a value that formats
    /// identically (fixed point of format-parse-format).
    #[test]
    fn float_format_is_idempotent(v in -1e9f64..1e9) {
        let s = format_float(v);
        let parsed: f64 = s.parse().unwrap();
        prop_assert_eq!(format_float(parsed), s);
    }

    /// Permutation sampling always yields bijections.
    #[test]
    fn sampled_permutations_validate(n in 2usize..12, seed in any::<u64>()) {
        let space = SearchSpace::permutation(n).unwrap();
        let cand = space.sample(&mut rng_from_seed(seed));
        prop_assert!(space.validate(&cand).is_ok());
    }

    /// Normalizer: history lands in [0,1] and apply is monotone on probes.
    #[test]
    fn normalizer_invariants(
        ys in prop::collection::vec(-50.0f64..50.0, 2..30),
        probes in prop::collection::vec(-100.0f64..100.0, 2..10),
    ) {
        let norm = Normalizer::fit(&ys).unwrap();
        for &y in &ys {
            let v = norm.apply(y);
            prop_assert!((0.0..=1.0).contains(&v), "history value {y} mapped to {v}");
        }
        let mut sorted = probes.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in sorted.windows(2) {
            prop_assert!(norm.apply(w[0]) <= norm.apply(w[1]));
        }
    }

    /// best_so_far is monotone, idempotent, and dominates its input.
    #[test]
    fn best_so_far_properties(ys in prop::collection::vec(-1e6f64..1e6, 1..50)) {
        let curve = best_so_far(&ys);
        prop_assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(best_so_far(&curve), curve.clone());
        prop_assert!(curve.iter().zip(&ys).all(|(c, y)| c >= y));
    }
}
