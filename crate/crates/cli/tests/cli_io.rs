//! Black-box behavior of the binary: output schemas, determinism, exit
//! codes, and flag handling.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_debroglie");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .output()
        .expect("binary should start")
}

fn run_ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn out_dir(tmp: &tempfile::TempDir, name: &str) -> PathBuf {
    tmp.path().join(name)
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

fn header_of(path: &Path) -> String {
    read(path).lines().next().unwrap().to_string()
}

fn data_rows(path: &Path) -> usize {
    read(path).lines().count() - 1
}

#[test]
fn identical_invocations_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (out_dir(&tmp, "a"), out_dir(&tmp, "b"), out_dir(&tmp, "c"));
    for dir in [&a, &b] {
        run_ok(&["fringe-scan", "--config", "paper_dl1_0", "--out", dir.to_str().unwrap()]);
    }
    assert_eq!(read(&a.join("scan.csv")), read(&b.join("scan.csv")));
    assert_eq!(read(&a.join("report.txt")), read(&b.join("report.txt")));

    run_ok(&[
        "fringe-scan", "--config", "paper_dl1_0", "--seed", "99",
        "--out", c.to_str().unwrap(),
    ]);
    assert_ne!(
        read(&a.join("scan.csv")),
        read(&c.join("scan.csv")),
        "a different seed must change the sampled counts"
    );
}

#[test]
fn row_count_follows_the_grid_and_headers_are_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let noisy = out_dir(&tmp, "noisy");
    let clean = out_dir(&tmp, "clean");
    run_ok(&["fringe-scan", "--config", "paper_dl1_0", "--out", noisy.to_str().unwrap()]);
    assert_eq!(data_rows(&noisy.join("scan.csv")), 401);
    assert_eq!(
        header_of(&noisy.join("scan.csv")),
        "delta_L2_um,P7,P8,p_D1D2,p_D3D4,p_D2D3,n_D1D2,n_D3D4,n_D2D3,err_D1D2,err_D3D4,err_D2D3"
    );

    run_ok(&[
        "fringe-scan", "--config", "paper_dl1_0", "--no-noise",
        "--grid-step", "20 nm", "--out", clean.to_str().unwrap(),
    ]);
    assert_eq!(data_rows(&clean.join("scan.csv")), 201);
    assert_eq!(
        header_of(&clean.join("scan.csv")),
        "delta_L2_um,P7,P8,p_D1D2,p_D3D4,p_D2D3"
    );
}

#[test]
fn single_photon_runs_have_no_coincidence_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let noisy = out_dir(&tmp, "noisy");
    let clean = out_dir(&tmp, "clean");
    run_ok(&["fringe-scan", "--config", "paper_single_photon", "--out", noisy.to_str().unwrap()]);
    assert_eq!(
        header_of(&noisy.join("scan.csv")),
        "delta_L2_um,P7,P8,n_D1,n_D2,n_D3,n_D4,err_D1,err_D2,err_D3,err_D4"
    );
    run_ok(&[
        "fringe-scan", "--config", "paper_single_photon", "--no-noise",
        "--out", clean.to_str().unwrap(),
    ]);
    assert_eq!(header_of(&clean.join("scan.csv")), "delta_L2_um,P7,P8");
}

#[test]
fn hom_scan_writes_the_input_delay_axis() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = out_dir(&tmp, "hom");
    run_ok(&["hom-scan", "--out", dir.to_str().unwrap()]);
    assert_eq!(
        header_of(&dir.join("scan.csv")),
        "delta_L1_um,p_coincidence,n_coincidence,err_coincidence"
    );
    assert_eq!(data_rows(&dir.join("scan.csv")), 161);
    let report = read(&dir.join("report.txt"));
    assert!(report.contains("beam splitter: out_a = sqrt(T) in_a + i sqrt(R) in_b"));
}

#[test]
fn seed_flag_is_equivalent_to_the_config_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("seeded.toml");
    fs::write(
        &cfg,
        "[source]\nkind = \"entangled\"\n\n[run]\nseed = 4242\n",
    )
    .unwrap();
    let via_cfg = out_dir(&tmp, "via_cfg");
    let via_flag = out_dir(&tmp, "via_flag");
    run_ok(&["fringe-scan", "--config", cfg.to_str().unwrap(), "--out", via_cfg.to_str().unwrap()]);
    run_ok(&[
        "fringe-scan", "--config", "paper_dl1_0", "--seed", "4242",
        "--out", via_flag.to_str().unwrap(),
    ]);
    assert_eq!(read(&via_cfg.join("scan.csv")), read(&via_flag.join("scan.csv")));
}

#[test]
fn config_errors_exit_1_with_position() {
    let tmp = tempfile::tempdir().unwrap();
    let unitless = tmp.path().join("unitless.toml");
    fs::write(&unitless, "[delays]\ndelta_L1 = \"200\"\n").unwrap();
    let out = run(&["fringe-scan", "--config", unitless.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "{stderr}");
    assert!(stderr.contains("delta_L1"), "{stderr}");

    let unknown = tmp.path().join("unknown.toml");
    fs::write(&unknown, "[source]\nkind = \"entangled\"\nbogus = 1\n").unwrap();
    let out = run(&["fringe-scan", "--config", unknown.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let out = run(&["ghz-noon", "--n", "9", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "photon number out of range");
}

#[test]
fn runtime_and_fit_failures_use_their_own_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["fringe-scan", "--config", "/definitely/not/here.toml", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let flat = tmp.path().join("flat.csv");
    fs::write(&flat, "x,y\n1,2\n2,2\n3,2\n4,2\n5,2\n6,2\n7,2\n8,2\n9,2\n").unwrap();
    let out = run(&["fit", "--input", flat.to_str().unwrap(), "--model", "fringe", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&["fit", "--input", flat.to_str().unwrap(), "--model", "fringe", "--column", "nope", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "unknown column is an input error");
}

#[test]
fn fit_command_recovers_what_the_scan_wrote() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = out_dir(&tmp, "scan");
    run_ok(&[
        "fringe-scan", "--config", "paper_single_photon", "--no-noise",
        "--out", dir.to_str().unwrap(),
    ]);
    let fit_dir = out_dir(&tmp, "fit");
    run_ok(&[
        "fit", "--input", dir.join("scan.csv").to_str().unwrap(),
        "--model", "fringe", "--column", "P7", "--out", fit_dir.to_str().unwrap(),
    ]);
    let report = read(&fit_dir.join("fit_report.txt"));
    let period: f64 = report
        .split("period = ")
        .nth(1)
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|tok| tok.parse().ok())
        .expect("report carries a period");
    assert!((period - 810.0).abs() < 810.0 * 0.005, "period {period}");
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["fringe-scan", "--help"]).status.code(), Some(0));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
}
