//! End-to-end checks of the command-line interface: exit codes, byte-level
//! determinism and file round trips.

use std::path::Path;
use std::process::{Command, Output};

use deepwater::analytic::{ModeIndex, NormParams, PeriodicFunction};
use deepwater::io::{self, PeriodicFunctionData};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_deepwater"))
}

fn write_function(path: &Path, f: &PeriodicFunction) {
    io::write_json_file(path, &PeriodicFunctionData::from(f)).unwrap();
}

fn read_function(path: &Path) -> PeriodicFunction {
    io::read_json_file::<PeriodicFunctionData>(path)
        .unwrap()
        .to_function()
        .unwrap()
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn dn_apply_flat_surface_is_multiplier() {
    let dir = tempfile::tempdir().unwrap();
    let eta_path = dir.path().join("eta.json");
    let psi_path = dir.path().join("psi.json");
    let out_path = dir.path().join("out.json");
    write_function(&eta_path, &PeriodicFunction::zero(1, 16));
    let psi = PeriodicFunction::cosine(16, ModeIndex::d1(1), 1.0);
    write_function(&psi_path, &psi);

    let out = run(bin()
        .args(["dn", "apply", "--K", "16"])
        .arg("--eta")
        .arg(&eta_path)
        .arg("--psi")
        .arg(&psi_path)
        .arg("--out")
        .arg(&out_path));
    assert!(out.status.success(), "{out:?}");

    let g = read_function(&out_path);
    let diff = g.sub(&psi.abs_d()).unwrap().max_abs_coeff();
    assert!(diff < 1e-14);
}

#[test]
fn dn_apply_matches_oracle_files() {
    let dir = tempfile::tempdir().unwrap();
    let eta_path = dir.path().join("eta.json");
    let harmonic_path = dir.path().join("harmonic.json");
    let psi_path = dir.path().join("psi.json");
    let gexact_path = dir.path().join("g_exact.json");
    let out_path = dir.path().join("out.json");

    write_function(
        &eta_path,
        &PeriodicFunction::cosine(32, ModeIndex::d1(1), 0.08),
    );
    write_function(
        &harmonic_path,
        &PeriodicFunction::cosine(32, ModeIndex::d1(1), 1.0),
    );

    let out = run(bin()
        .args(["dn", "oracle", "--K", "32"])
        .arg("--harmonic")
        .arg(&harmonic_path)
        .arg("--eta")
        .arg(&eta_path)
        .arg("--out-psi")
        .arg(&psi_path)
        .arg("--out-g")
        .arg(&gexact_path));
    assert!(out.status.success(), "{out:?}");

    let out = run(bin()
        .args(["dn", "apply", "--K", "32"])
        .arg("--eta")
        .arg(&eta_path)
        .arg("--psi")
        .arg(&psi_path)
        .arg("--out")
        .arg(&out_path));
    assert!(out.status.success(), "{out:?}");

    let got = read_function(&out_path);
    let expect = read_function(&gexact_path);
    let h01 = NormParams::sobolev(1.0);
    let rel = got.sub(&expect).unwrap().norm_sigma_s(&h01) / expect.norm_sigma_s(&h01);
    assert!(rel <= 1e-8, "oracle deviation {rel}");
}

#[test]
fn dn_apply_rejects_malformed_json() {
    let dir = tempfile::tempdir().unwrap();
    let eta_path = dir.path().join("eta.json");
    std::fs::write(&eta_path, "{ not json").unwrap();
    let psi_path = dir.path().join("psi.json");
    write_function(
        &psi_path,
        &PeriodicFunction::cosine(8, ModeIndex::d1(1), 1.0),
    );

    let out = run(bin()
        .args(["dn", "apply", "--K", "8"])
        .arg("--eta")
        .arg(&eta_path)
        .arg("--psi")
        .arg(&psi_path)
        .arg("--out")
        .arg(dir.path().join("out.json")));
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    assert!(!out.stderr.is_empty());
}

#[test]
fn dn_apply_guard_violation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let eta_path = dir.path().join("eta.json");
    let psi_path = dir.path().join("psi.json");
    write_function(
        &eta_path,
        &PeriodicFunction::cosine(8, ModeIndex::d1(1), 1.5),
    );
    write_function(
        &psi_path,
        &PeriodicFunction::cosine(8, ModeIndex::d1(1), 1.0),
    );

    let out = run(bin()
        .args(["dn", "apply", "--K", "8"])
        .arg("--eta")
        .arg(&eta_path)
        .arg("--psi")
        .arg(&psi_path)
        .arg("--out")
        .arg(dir.path().join("out.json")));
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn dn_verify_passes_flat_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let eta_path = dir.path().join("eta.json");
    write_function(&eta_path, &PeriodicFunction::zero(1, 16));

    let args = ["dn", "verify", "--K", "16", "--seed", "7"];
    let first = run(bin().args(args).arg("--eta").arg(&eta_path));
    assert!(first.status.success(), "{first:?}");
    let second = run(bin().args(args).arg("--eta").arg(&eta_path));
    assert_eq!(first.stdout, second.stdout);

    // guard violation propagates as exit 2
    write_function(
        &eta_path,
        &PeriodicFunction::cosine(16, ModeIndex::d1(2), 0.9),
    );
    let out = run(bin().args(args).arg("--eta").arg(&eta_path));
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn stokes_branch_trivial_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("branch.json");
    let csv_path = dir.path().join("branch.csv");
    let args = [
        "stokes",
        "branch",
        "--K",
        "8",
        "--k",
        "1",
        "--g",
        "1.0",
        "--eps-max",
        "0.0",
        "--eps-step",
        "0.005",
    ];
    let out = run(bin()
        .args(args)
        .arg("--out-json")
        .arg(&json_path)
        .arg("--out-csv")
        .arg(&csv_path));
    assert!(out.status.success(), "{out:?}");
    let first_json = std::fs::read(&json_path).unwrap();
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("x,eta,psi\n"));

    let data: io::BranchData = io::read_json_file(&json_path).unwrap();
    assert_eq!(data.solutions.len(), 1);
    assert_eq!(data.solutions[0].c, 1.0);

    let out = run(bin()
        .args(args)
        .arg("--out-json")
        .arg(&json_path)
        .arg("--out-csv")
        .arg(&csv_path));
    assert!(out.status.success());
    assert_eq!(first_json, std::fs::read(&json_path).unwrap());
}

#[test]
fn stokes_branch_partial_failure_exits_4_and_verify_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("branch.json");
    let csv_path = dir.path().join("branch.csv");
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, r#"{"eps_cap": 0.021}"#).unwrap();

    let out = run(bin()
        .args([
            "stokes",
            "branch",
            "--K",
            "12",
            "--k",
            "1",
            "--g",
            "1.0",
            "--eps-max",
            "0.05",
            "--eps-step",
            "0.01",
        ])
        .arg("--config")
        .arg(&config_path)
        .arg("--out-json")
        .arg(&json_path)
        .arg("--out-csv")
        .arg(&csv_path));
    assert_eq!(out.status.code(), Some(4), "{out:?}");

    // the partial branch is retained: 0, 0.01, 0.02
    let data: io::BranchData = io::read_json_file(&json_path).unwrap();
    assert_eq!(data.solutions.len(), 3);

    // stored residuals recompute exactly
    let out = run(bin()
        .args(["stokes", "verify", "--K", "12"])
        .arg("--branch")
        .arg(&json_path));
    assert!(out.status.success(), "{out:?}");
}

#[test]
fn config_file_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let eta_path = dir.path().join("eta.json");
    let psi_path = dir.path().join("psi.json");
    let out_path = dir.path().join("out.json");
    let config_path = dir.path().join("config.json");
    write_function(&eta_path, &PeriodicFunction::zero(1, 4));
    write_function(
        &psi_path,
        &PeriodicFunction::cosine(4, ModeIndex::d1(1), 1.0),
    );
    std::fs::write(&config_path, r#"{"K": 12}"#).unwrap();

    // config alone: output truncation 12
    let out = run(bin()
        .args(["dn", "apply"])
        .arg("--config")
        .arg(&config_path)
        .arg("--eta")
        .arg(&eta_path)
        .arg("--psi")
        .arg(&psi_path)
        .arg("--out")
        .arg(&out_path));
    assert!(out.status.success(), "{out:?}");
    let data: PeriodicFunctionData = io::read_json_file(&out_path).unwrap();
    assert_eq!(data.trunc, 12);

    // CLI flag wins over the config file
    let out = run(bin()
        .args(["dn", "apply", "--K", "6"])
        .arg("--config")
        .arg(&config_path)
        .arg("--eta")
        .arg(&eta_path)
        .arg("--psi")
        .arg(&psi_path)
        .arg("--out")
        .arg(&out_path));
    assert!(out.status.success(), "{out:?}");
    let data: PeriodicFunctionData = io::read_json_file(&out_path).unwrap();
    assert_eq!(data.trunc, 6);
}
