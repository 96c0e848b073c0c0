//! CLI-level acceptance: repeated runs with one seed produce byte-identical
//! trials.csv, for both baseline and checkpoint-driven algorithms.

use std::path::{Path, PathBuf};
use std::process::Command;

fn sembo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sembo"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sembo-acc-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn run_ok(cmd: &mut Command) {
    let out = cmd.output().expect("spawn sembo");
    assert!(
        out.status.success(),
        "sembo failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn criterion_cli_reproducibility() {
    let dir = tmp_dir("repro");

    // A tiny checkpoint trained through the CLI itself.
    let pre_config = write_config(
        &dir,
        "pre.json",
        r#"{"pretrain": {"task_count": 30, "trajectory_len": 100, "seed": 11, "steps": 8,
                          "batch_size": 4, "family": "combinatorial", "combo_n_range": [6, 10]},
            "model": {"d_model": 16, "n_layers": 1, "n_heads": 2, "d_ff": 32, "d_embed": 64},
            "embedder": {"backend": "hashed", "dim": 64}}"#,
    );
    run_ok(sembo()
        .args(["--out-dir", dir.to_str().unwrap()])
        .args(["pretrain", "--config", pre_config.to_str().unwrap()]));
    let ckpt = dir.join("checkpoint.etrr");
    assert!(ckpt.is_file());

    let random_config = write_config(
        &dir,
        "random.json",
        r#"{"task": {"type": "combo", "kind": "qap", "n": 7, "instance_seed": 2},
            "algorithm": "random", "budget": 30, "repeats": 2, "seed": 77}"#,
    );
    let model_config = write_config(
        &dir,
        "model.json",
        &format!(
            r#"{{"task": {{"type": "combo", "kind": "modular", "n": 12, "k": 4, "instance_seed": 2}},
                "algorithm": "regevo_etr", "budget": 30, "repeats": 1, "seed": 77,
                "checkpoint": {:?},
                "embedder": {{"backend": "hashed", "dim": 64}}}}"#,
            ckpt.to_str().unwrap()
        ),
    );
    let bbob_config = write_config(
        &dir,
        "bbob.json",
        &format!(
            r#"{{"task": {{"type": "bbob", "function": "SharpRidge", "dim": 2, "instance_seed": 3}},
                "algorithm": "etr", "budget": 12, "repeats": 1, "seed": 5,
                "checkpoint": {:?},
                "acquisition": {{"eval_budget": 120, "flat_warmup": 5}},
                "embedder": {{"backend": "hashed", "dim": 64}}}}"#,
            ckpt.to_str().unwrap()
        ),
    );

    let mut compared = 0;
    for (label, config, rel) in [
        ("random", &random_config, "qap_7/random"),
        ("regevo_etr", &model_config, "modular_12c4/regevo_etr"),
        ("etr", &bbob_config, "SharpRidge_2d/etr"),
    ] {
        let out_a = dir.join(format!("{label}_a"));
        let out_b = dir.join(format!("{label}_b"));
        for out in [&out_a, &out_b] {
            run_ok(sembo()
                .args(["--out-dir", out.to_str().unwrap()])
                .args(["optimize", "--config", config.to_str().unwrap()]));
        }
        for entry in std::fs::read_dir(out_a.join(rel).join("seed_0")).unwrap() {
            let name = entry.unwrap().file_name();
            let a = std::fs::read(out_a.join(rel).join("seed_0").join(&name)).unwrap();
            let b = std::fs::read(out_b.join(rel).join("seed_0").join(&name)).unwrap();
            assert_eq!(a, b, "{label}: {name:?} differs between identical runs");
            compared += 1;
        }
        // Aggregates too.
        let a = std::fs::read(out_a.join(rel).join("curves.csv")).unwrap();
        let b = std::fs::read(out_b.join(rel).join("curves.csv")).unwrap();
        assert_eq!(a, b);
    }
    assert!(compared >= 3);
    println!("[PASS] cli reproducibility: same-seed runs byte-identical across random, regevo_etr, and etr algorithms");
}
