//! End-to-end gradient verification: analytic reverse-mode gradients of the
//! full regressor NLL against central finite differences at 64-bit.

use rand::RngExt;
use sembo_core::embed::EmbeddingVector;
use sembo_core::regressor::{bind_params, task_nll_graph, tokens::build_tokens, RegressorConfig, RegressorParams};
use sembo_core::rng::{rng_from_seed, SeededRng};
use sembo_core::tensor::graph::Graph;

fn test_config() -> RegressorConfig {
    RegressorConfig {
        d_model: 16,
        n_layers: 2,
        n_heads: 2,
        d_ff: 32,
        d_embed: 12,
        d_meta: 12,
        use_metadata: false,
        sigma_floor: 1e-3,
    }
}

fn random_embedding(rng: &mut SeededRng, d: usize) -> EmbeddingVector<f64> {
    EmbeddingVector::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
}

fn loss_value(
    params: &RegressorParams<f64>,
    config: &RegressorConfig,
    history: &[(EmbeddingVector<f64>, f64)],
    targets: &[EmbeddingVector<f64>],
    target_ys: &[f64],
) -> f64 {
    let batch = build_tokens(history, targets, None, config).unwrap();
    let mut g = Graph::new();
    let bound = bind_params(&mut g, params);
    let loss = task_nll_graph(&mut g, &bound, config, &batch, target_ys).unwrap();
    g.value(loss).item()
}

#[test]
fn regressor_nll_gradients_match_finite_differences() {
    let config = test_config();
    let params = RegressorParams::<f64>::init(&config, 91);
    let mut rng = rng_from_seed(17);
    let history: Vec<_> = (0..6)
        .map(|_| (random_embedding(&mut rng, config.d_embed), rng.random_range(0.0..1.0)))
        .collect();
    let targets: Vec<_> = (0..4).map(|_| random_embedding(&mut rng, config.d_embed)).collect();
    let target_ys: Vec<f64> = (0..4).map(|_| rng.random_range(-0.2..1.2)).collect();

    // Analytic gradients.
    let batch = build_tokens(&history, &targets, None, &config).unwrap();
    let mut g = Graph::new();
    let bound = bind_params(&mut g, &params);
    let loss = task_nll_graph(&mut g, &bound, &config, &batch, &target_ys).unwrap();
    let grads = g.backward(loss).unwrap();
    let analytic = g.collect_param_grads(&grads, params.len());

    // 200 randomly probed parameter entries, central differences h=1e-5.
    let h = 1e-5;
    let mut worst: (f64, String) = (0.0, String::new());
    for _ in 0..200 {
        let pi = rng.random_range(0..params.len());
        let ei = rng.random_range(0..params.tensors()[pi].len());
        let mut plus = params.clone();
        plus.tensors_mut()[pi].data_mut()[ei] += h;
        let mut minus = params.clone();
        minus.tensors_mut()[pi].data_mut()[ei] -= h;
        let fd = (loss_value(&plus, &config, &history, &targets, &target_ys)
            - loss_value(&minus, &config, &history, &targets, &target_ys))
            / (2.0 * h);
        let an = analytic[pi].data()[ei];
        let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-3);
        if rel > worst.0 {
            worst = (rel, format!("{}[{ei}]: analytic {an} vs fd {fd}", params.names()[pi]));
        }
        assert!(
            rel <= 1e-4,
            "{}[{ei}]: analytic {an}, fd {fd}, rel {rel}",
            params.names()[pi]
        );
    }
    println!("worst relative error over 200 probes: {:.3e} ({})", worst.0, worst.1);
}

#[test]
fn gradients_flow_to_every_parameter_kind() {
    // Sanity companion: each parameter family gets a nonzero gradient
    // somewhere (dead parameters would silently pass finite differences).
    let config = test_config();
    let params = RegressorParams::<f64>::init(&config, 5);
    let mut rng = rng_from_seed(3);
    let history: Vec<_> = (0..5)
        .map(|_| (random_embedding(&mut rng, config.d_embed), rng.random_range(0.0..1.0)))
        .collect();
    let targets: Vec<_> = (0..3).map(|_| random_embedding(&mut rng, config.d_embed)).collect();
    let ys: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..1.0)).collect();

    let batch = build_tokens(&history, &targets, None, &config).unwrap();
    let mut g = Graph::new();
    let bound = bind_params(&mut g, &params);
    let loss = task_nll_graph(&mut g, &bound, &config, &batch, &ys).unwrap();
    let grads = g.backward(loss).unwrap();
    let collected = g.collect_param_grads(&grads, params.len());
    for (name, grad) in params.names().iter().zip(&collected) {
        let max = grad.data().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(max > 0.0, "parameter {name} received an all-zero gradient");
    }
}
