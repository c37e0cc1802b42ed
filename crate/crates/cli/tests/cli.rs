use std::path::Path;
use std::process::{Command, Output};

fn biasprobe(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biasprobe"))
        .args(args)
        .env("BIASPROBE_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

const SMALL_SWEEP: [&str; 9] = ["sweep", "--depths", "1,3", "--scales", "0.5,2,5", "--seeds", "4", "--grid", "16"];

#[test]
fn unknown_flag_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&biasprobe(&["sweep", "--no-such-flag"], dir.path())), 2);
    assert_eq!(code(&biasprobe(&["frobnicate"], dir.path())), 2);
    assert_eq!(code(&biasprobe(&["probe", "--arch", "mlp-relu"], dir.path())), 2);
}

#[test]
fn help_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let o = biasprobe(&["--help"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for cmd in ["probe", "complexity", "sweep", "correlate", "modulo", "cmnist", "inr", "transformer", "render"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn worker_count_does_not_change_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let mut one = vec!["--jobs", "1", "--out-dir", a.to_str().unwrap()];
    one.extend(SMALL_SWEEP);
    one.extend(["--measures", "fourier,lz"]);
    let mut eight = vec!["--jobs", "8", "--out-dir", b.to_str().unwrap()];
    eight.extend(SMALL_SWEEP);
    eight.extend(["--measures", "fourier,lz"]);
    assert_eq!(code(&biasprobe(&one, dir.path())), 0);
    assert_eq!(code(&biasprobe(&eight, dir.path())), 0);
    for f in ["rows.csv", "cells.csv", "heatmap_fourier.pgm"] {
        let x = std::fs::read(a.join("sweep").join(f)).unwrap();
        let y = std::fs::read(b.join("sweep").join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn sweep_writes_heatmap_csv_and_pgm_under_env_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = SMALL_SWEEP.to_vec();
    args.extend(["--activation", "relu", "--measures", "fourier"]);
    let o = biasprobe(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sweep = dir.path().join("sweep");
    let rows = std::fs::read_to_string(sweep.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 3 * 4);
    assert!(std::fs::read(sweep.join("heatmap_fourier.pgm")).unwrap().starts_with(b"P5"));
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small probe\nseeds = 2\ngrid = 16\nmeasures = fourier\nseed = 7\n").unwrap();
    let o = biasprobe(&["probe", "--config", cfg.to_str().unwrap(), "--seeds", "3"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let scores = std::fs::read_to_string(dir.path().join("probe/scores.csv")).unwrap();
    assert_eq!(scores.lines().count(), 1 + 3);
    let again = biasprobe(&["probe", "--config", cfg.to_str().unwrap(), "--seeds", "3", "--seed", "7"], dir.path());
    assert_eq!(o.stdout, again.stdout);

    std::fs::write(&cfg, "bogus-key = 1\n").unwrap();
    assert_eq!(code(&biasprobe(&["probe", "--config", cfg.to_str().unwrap()], dir.path())), 2);
    assert_eq!(code(&biasprobe(&["probe", "--config", "/nonexistent/run.cfg"], dir.path())), 2);
}

#[test]
fn overflow_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let huge = format!("mlp-relu-i2-d6-w64-a1{}.0-p1.0-b1.0", "0".repeat(150));
    let o = biasprobe(&["probe", "--arch", &huge, "--grid", "8", "--seeds", "1"], dir.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn render_and_complexity_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = biasprobe(&["render", "--arch", "mlp-sine-i2-d2-w32-a2.0-p1.0-b1.0", "--grid", "32", "--spectrum"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let pgm = dir.path().join("render/render.pgm");
    assert!(dir.path().join("render/render_spectrum.pgm").is_file());
    let o = biasprobe(&["complexity", "--input", pgm.to_str().unwrap(), "--measures", "fourier,lz"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("fourier=") && text.contains("lz="));
}
