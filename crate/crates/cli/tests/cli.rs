use std::path::Path;
use std::process::{Command, Output};

fn eaknit(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eaknit"))
        .args(args)
        .env("EAKNIT_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn decompose_cnot() {
    let dir = tempfile::tempdir().unwrap();
    let o = eaknit(&["decompose", "cnot"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("lambda = (0.70710678, 0.70710678)"), "{s}");
    assert!(s.contains("kak_like = true"));
    assert!(s.contains("rank = 2"));
}

#[test]
fn decompose_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = eaknit(&["decompose", "swap", "--json"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rank"], 4);
    assert_eq!(v["lambdas"].as_array().unwrap().len(), 4);
}

#[test]
fn cut_then_estimate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cnot_bell.json");
    let o = eaknit(&["cut", "cnot", "--resource", "bell", "--out", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("gamma = 2.0000000"), "{s}");
    assert!(s.contains("audit = LO (0 classical bits)"), "{s}");
    let args = ["estimate", cfg.to_str().unwrap(), "--state", "+0", "--obs", "ZZ", "--eps", "0.05", "--seed", "11"];
    let a = eaknit(&args, dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = eaknit(&args, dir.path());
    assert_eq!(stdout(&a), stdout(&b));
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    let (mean, se) = (v["mean"].as_f64().unwrap(), v["std_error"].as_f64().unwrap());
    assert!((mean - 1.0).abs() < 5.0 * se);
    assert_eq!(v["shots"], 11805);
}

#[test]
fn cut_defaults_to_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = eaknit(&["cut", "cphase:0.5", "--resource", "psi:0.3", "--json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let path = v["config"].as_str().unwrap();
    assert!(path.starts_with(dir.path().to_str().unwrap()));
    assert!(Path::new(path).is_file());
}

#[test]
fn wire_cut_and_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let o = eaknit(&["cut", "--wire", "--resource", "bell", "--json"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["audit"]["class"], "LOCC");
    assert_eq!(v["audit"]["classical_bits"], 2);
    let cfg = v["config"].as_str().unwrap().to_string();
    let e = eaknit(&["estimate", &cfg, "--state", "0", "--obs", "Z", "--shots", "500"], dir.path());
    let r: serde_json::Value = serde_json::from_str(&stdout(&e)).unwrap();
    assert_eq!(r["mean"].as_f64(), Some(1.0));

    let f = eaknit(&["cut", "--wire", "--resource", "psi:0.6"], dir.path());
    assert_eq!(f.status.code(), Some(0));
    assert!(stdout(&f).contains("gamma = 1.2222222"));
}

#[test]
fn bounds_swap_bell() {
    let dir = tempfile::tempdir().unwrap();
    let o = eaknit(&["bounds", "swap", "--resource", "bell"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["lower_schmidt"].as_f64().unwrap() - 2.5).abs() < 1e-10);
    assert!((v["upper_bell"].as_f64().unwrap() - 4.0).abs() < 1e-10);
    assert!((v["upper_free"].as_f64().unwrap() - 7.0).abs() < 1e-10);
}

#[test]
fn matrix_file_gate() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("cz.json");
    let rows: Vec<Vec<[f64; 2]>> = (0..4)
        .map(|i| (0..4).map(|j| [if i == j { if i == 3 { -1.0 } else { 1.0 } } else { 0.0 }, 0.0]).collect())
        .collect();
    std::fs::write(&good, serde_json::json!({"matrix": rows, "dims": [2, 2]}).to_string()).unwrap();
    let o = eaknit(&["decompose", good.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rank = 2"));

    let bad = dir.path().join("bad.json");
    let mut rows = rows;
    rows[0][0] = [2.0, 0.0];
    std::fs::write(&bad, serde_json::json!({"matrix": rows, "dims": [2, 2]}).to_string()).unwrap();
    assert_eq!(eaknit(&["decompose", bad.to_str().unwrap()], dir.path()).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(eaknit(&["decompose", "toffoli"], dir.path()).status.code(), Some(1));
    assert_eq!(eaknit(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(eaknit(&["--help"], dir.path()).status.code(), Some(0));
    let cfg = dir.path().join("c.json");
    eaknit(&["cut", "cnot", "--out", cfg.to_str().unwrap()], dir.path());
    let o = eaknit(&["estimate", cfg.to_str().unwrap(), "--state", "+0", "--obs", "ZZ", "--shots", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = eaknit(&["estimate", cfg.to_str().unwrap(), "--state", "+", "--obs", "ZZ"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = eaknit(&["bench", "fig4", "--samples", "50", "--seed", "4", "--bins", "10", "--out", p.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(ta, tb);
    assert!(ta.starts_with("# manifest: seed=4,samples=50,bins=10"));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["samples"], 50);
    assert!(m["wall_time"].as_f64().unwrap() >= 0.0);

    let o = eaknit(&["bench", "cphase", "--grid", "9"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("cphase.csv")).unwrap();
    assert!(csv.contains("expected_bells_svd,expected_bells_closed_form"));
}
