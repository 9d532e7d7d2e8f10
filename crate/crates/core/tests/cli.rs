use std::fs;
use std::path::Path;
use std::process::Command;

use beamforge::cli::{main_with_args, parse_config, Cli};
use clap::Parser;

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("beamforge").chain(args.iter().copied()), None)
}

fn rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn beampattern_grid_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bp.csv");
    let code = run(&[
        "--command", "beampattern", "--n", "8", "--trials", "20", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let lines = rows(&out);
    assert_eq!(lines[0], "phi_rad,power,stderr");
    assert_eq!(lines.len(), 1 + 361);
}

#[test]
fn sweep_row_contract() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let code = run(&[
        "--command",
        "sep-sweep",
        "--n",
        "8",
        "--trials",
        "64",
        "--sweep",
        "sigma-delta-ratio:0.001,0.01,0.1,1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let lines = rows(&out);
    assert_eq!(lines[0], "sigma_delta_ratio,sep_analytic,sep_mc,sep_mc_stderr,trials");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("1.0000000000000000e-3,"));
}

#[test]
fn output_is_byte_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("mc{i}.csv"));
        let code = run(&[
            "--command",
            "sep-sweep",
            "--n",
            "16",
            "--trials",
            "300",
            "--seed",
            "11",
            "--sweep",
            "rho-tau-db:0,5",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn incompatible_sweep_exits_2() {
    let code = run(&[
        "--command",
        "sep-sweep",
        "--error-model",
        "closed-loop",
        "--sweep",
        "sigma-delta-ratio:0.1",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn unknown_flag_exits_2() {
    assert_eq!(run(&["--command", "sep-mc", "--frobnicate", "1"]), 2);
    assert_eq!(run(&["--command", "sep-mc", "--m", "6"]), 2);
}

#[test]
fn unwritable_output_exits_1() {
    let code = run(&[
        "--command",
        "sep-analytic",
        "--n",
        "8",
        "--out",
        "/nonexistent-dir/for/sure/out.csv",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn flags_override_file_override_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"command": "sep-mc", "params": {"n": 12, "gamma1_db": 20}, "error_model": {"kind": "channel", "sigma_delta_ratio": 0.5}, "master_seed": 9}"#,
    )
    .unwrap();
    let path = cfg.to_str().unwrap();
    let c = parse_config(
        Cli::try_parse_from(["beamforge", "--config", path, "--gamma1-db", "30"]).unwrap(),
        Some("4"),
    )
    .unwrap();
    assert_eq!(c.params.gamma1_db, 30.0);
    assert_eq!(c.params.n, 12);
    assert_eq!(c.params.k, 4);
    assert_eq!(c.error_model.sigma_delta_ratio, 0.5);
    assert_eq!(c.master_seed, 9);

    fs::write(&cfg, r#"{"command": "sep-mc", "bogus": 1}"#).unwrap();
    let e = parse_config(Cli::try_parse_from(["beamforge", "--config", path]).unwrap(), None).unwrap_err();
    assert!(e.to_string().contains("bogus"));
}

#[test]
fn atau_rows_per_sweep_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("atau.csv");
    let code = run(&[
        "--command",
        "atau",
        "--sweep",
        "rho-tau-db:0,10,20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let lines = rows(&out);
    assert_eq!(lines[0], "rho_tau_db,mean_phasor_sq,mean_phasor_stderr,a_tau");
    assert_eq!(lines.len(), 4);
    let a: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(a[0] < a[1] && a[1] < a[2]);
}

#[test]
fn binary_reads_seed_from_environment() {
    let exe = env!("CARGO_BIN_EXE_beamforge");
    let args = ["--command", "sep-mc", "--n", "8", "--trials", "64", "--gamma2-db", "0"];
    let with_env = |seed: &str| {
        Command::new(exe)
            .args(args)
            .env("BEAMFORGE_SEED", seed)
            .output()
            .unwrap()
    };
    let a = with_env("5");
    let b = with_env("5");
    let c = with_env("6");
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("error_model,sep_mc,sep_mc_stderr,errors,symbols,trials\n"));
    assert!(!text.contains('\r'));
}
