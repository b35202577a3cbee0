use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sirfit::commands;
use sirfit::formats;
use sirfit::{ConfigArgs, RunConfig};
use sirfit_core::sir::{integrate, Method};

fn sirfit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sirfit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_fit() -> RunConfig {
    RunConfig {
        n_iter: 400,
        burn_in: 100,
        ..RunConfig::default()
    }
}

#[test]
fn flags_override_file_override_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.cfg");
    fs::write(&file, "# layer two\nsigma = 9\nn_iter = 500\n").unwrap();
    let flags = ConfigArgs {
        n_iter: Some(700),
        ..ConfigArgs::default()
    };
    let cfg = RunConfig::load(Some(&file), &flags).unwrap();
    assert_eq!(cfg.n_iter, 700);
    assert_eq!(cfg.sigma, 9.0);
    assert_eq!(cfg.step_delta, 0.015);

    let out = sirfit(
        dir.path(),
        &["--config", "run.cfg", "--n-iter", "700", "show-config"],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\nn_iter = 700\n"));
    assert!(text.contains("\nsigma = 9\n"));
    assert!(text.contains("\nstep_delta = 0.015\n"));
}

#[test]
fn unknown_config_key_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "sigma = 15\nn_iters = 5\n").unwrap();
    let out = sirfit(dir.path(), &["--config", "bad.cfg", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2") && err.contains("n_iters"), "{err}");
}

#[test]
fn default_simulation_has_sixty_daily_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = sirfit(dir.path(), &["simulate", "--out", "a.csv"]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,i_obs");
    assert_eq!(lines.len(), 61);
    for (k, line) in lines[1..].iter().enumerate() {
        assert!(line.starts_with(&format!("{k},")), "{line}");
    }
    assert!(sirfit(dir.path(), &["simulate", "--out", "b.csv"]).status.success());
    assert_eq!(text, fs::read_to_string(dir.path().join("b.csv")).unwrap());
    assert!(sirfit(dir.path(), &["--seed-data", "7", "simulate", "--out", "c.csv"])
        .status
        .success());
    assert_ne!(text, fs::read_to_string(dir.path().join("c.csv")).unwrap());
}

#[test]
fn noiseless_simulation_is_the_model_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        sigma: 0.0,
        ..RunConfig::default()
    };
    let path = dir.path().join("clean.csv");
    commands::simulate(&cfg, &path).unwrap();
    let data = formats::read_dataset(&path, 1.0).unwrap();
    let model = integrate(&cfg.scenario().unwrap(), &cfg.true_params().unwrap(), Method::Rk4)
        .unwrap()
        .infected();
    assert_eq!(data.observed_i(), &model[..60]);
}

#[test]
fn reread_chain_summarizes_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_fit();
    let data = dir.path().join("data.csv");
    let chain = dir.path().join("chain.csv");
    commands::simulate(&cfg, &data).unwrap();
    let fit = commands::fit(&cfg, &data, &chain).unwrap();
    assert_eq!(fs::read_to_string(&chain).unwrap().lines().count(), 402);
    let (in_memory, _, _) = commands::summarize_chain(&fit.chain, cfg.level).unwrap();
    let from_disk = commands::summarize(
        &cfg,
        &chain,
        &dir.path().join("s.json"),
        &dir.path().join("s.csv"),
    )
    .unwrap();
    assert_eq!(in_memory, from_disk);
    assert_eq!(formats::read_summary(&dir.path().join("s.json")).unwrap(), from_disk);
    assert_eq!(from_disk.n_samples, 300);
    let samples = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(samples.lines().next(), Some("beta,gamma,r0"));
    assert_eq!(samples.lines().count(), 301);
}

#[test]
fn fit_report_mentions_band_and_failures() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sirfit(dir.path(), &["simulate"]).status.success());
    let out = sirfit(dir.path(), &["--n-iter", "300", "--burn-in", "50", "fit"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("healthy band [0.20, 0.40]"), "{text}");
    assert!(text.contains("-inf likelihood events: 0"), "{text}");
}

#[test]
fn malformed_dataset_row_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("data.csv"), "t,i_obs\n0,10\n1,11\n2,x\n").unwrap();
    let out = sirfit(dir.path(), &["fit"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn off_grid_dataset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("data.csv"), "t,i_obs\n0,10\n1.5,11\n").unwrap();
    let out = sirfit(dir.path(), &["fit"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn init_outside_prior_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sirfit(dir.path(), &["simulate"]).status.success());
    let out = sirfit(dir.path(), &["--init-beta", "1.5", "fit"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("prior support"));
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sirfit(dir.path(), &["summarize", "--chain", "missing.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn step_limit_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = sirfit(dir.path(), &["--t-end", "20000", "--dt", "0.001", "--obs-stride", "1000", "simulate"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn single_sample_chain_collapses_the_band() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sirfit(dir.path(), &["simulate"]).status.success());
    fs::write(
        dir.path().join("chain.csv"),
        "iter,beta,gamma,log_post,accepted\n0,0.3,0.1,-30,0\n1,0.3,0.1,-30,0\n",
    )
    .unwrap();
    let out = sirfit(dir.path(), &["--burn-in", "0", "ppc", "--draws-out", "draws.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let band = fs::read_to_string(dir.path().join("ppc.csv")).unwrap();
    let mut lines = band.lines();
    assert_eq!(lines.next(), Some("t,q_min,q025,q50,q975,q_max"));
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1..].iter().all(|x| *x == v[1]), "{line}");
        rows += 1;
    }
    assert_eq!(rows, 61);
    let draws = fs::read_to_string(dir.path().join("draws.csv")).unwrap();
    assert_eq!(draws.lines().next(), Some("draw,beta,gamma,t,i"));
    assert_eq!(draws.lines().count(), 1 + 100 * 61);
}
