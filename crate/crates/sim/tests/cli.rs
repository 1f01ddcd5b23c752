use std::path::Path;
use std::process::{Command, Output};

const SMALL: &[&str] = &[
    "Nx=4",
    "Ny=4",
    "test_points=6",
    "fault_counts=[0,2]",
    "randomization_samples=100",
];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_faulty-ris")).args(args).output().unwrap()
}

fn with_small<'a>(mut args: Vec<&'a str>) -> Vec<&'a str> {
    args.extend_from_slice(SMALL);
    args
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn validate_passes() {
    let out = run(&["validate"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.lines().count() >= 5);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn sweep_twice_gives_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, jobs) in [(&a, "1"), (&b, "2")] {
        let out = run(&with_small(vec![
            "sweep",
            "--out",
            dir.path().to_str().unwrap(),
            "--trials",
            "2",
            "--seed",
            "5",
            "--jobs",
            jobs,
        ]));
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["sweep.csv", "trials.csv", "metadata.csv", "config.toml"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
    let sweep = String::from_utf8(read(a.path(), "sweep.csv")).unwrap();
    assert!(sweep.starts_with("fault_count,method,mean_slnr_db,std_slnr_db,mean_snr_db,std_snr_db,trials,failures\n"));
    assert_eq!(sweep.lines().count(), 1 + 2 * 4);
}

#[test]
fn written_config_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = run(&with_small(vec!["sweep", "--out", a.path().to_str().unwrap(), "--trials", "1", "--method", "baseline,naive"]));
    assert_eq!(out.status.code(), Some(0));
    let cfg = a.path().join("config.toml");
    let out = run(&["sweep", "--config", cfg.to_str().unwrap(), "--out", b.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(a.path(), "sweep.csv"), read(b.path(), "sweep.csv"));
    let meta = String::from_utf8(read(a.path(), "metadata.csv")).unwrap();
    assert!(meta.contains(&format!("version,{}", env!("CARGO_PKG_VERSION"))));
    assert!(meta.contains("subcommand,sweep"));
}

#[test]
fn heatmap_writes_map_mask_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&with_small(vec![
        "heatmap",
        "--method",
        "max_slnr",
        "--faulty",
        "2",
        "--grid",
        "8x6",
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let map = String::from_utf8(read(dir.path(), "heatmap_max_slnr.csv")).unwrap();
    assert!(map.starts_with("x_m,y_m,power_dbm\n"));
    assert_eq!(map.lines().count(), 1 + 48);
    let mask = String::from_utf8(read(dir.path(), "mask.csv")).unwrap();
    assert!(mask.starts_with("ix,iy,faulty\n"));
    assert_eq!(mask.lines().skip(1).filter(|l| l.ends_with(",1")).count(), 2);
    assert!(dir.path().join("metadata.csv").exists());
    assert!(!dir.path().join("heatmap_baseline.csv").exists());
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(run(&["sweep", "no_such_key=1"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--pattern", "spiral"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--config", "/nonexistent/cfg.toml"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--bogus-flag"]).status.code(), Some(2));
    let out = run(&["dump-config", "tx_power=0.1", "tx_power_dbm=3"]);
    assert_eq!(out.status.code(), Some(0), "separate overrides apply in order");
}

#[test]
fn failure_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&with_small(vec![
        "sweep",
        "--out",
        dir.path().to_str().unwrap(),
        "--trials",
        "1",
        "--method",
        "max_slnr",
        "gamma_snr=1e30",
    ]));
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("trials.csv").exists());
}

#[test]
fn dump_config_is_loadable() {
    let out = run(&["dump-config", "--seed", "11", "Nx=8"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 11"));
    assert!(text.contains("Nx = 8"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, &text).unwrap();
    let again = run(&["dump-config", "--config", path.to_str().unwrap()]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}
