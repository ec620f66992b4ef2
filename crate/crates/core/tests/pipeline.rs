use eaknit::bench::{fig4_histogram, BenchManifest};
use eaknit::estimator::{exact_expectation_config, mc_estimate, product_state, Observable, ShotPlan};
use eaknit::exec::Execution;
use eaknit::gates;
use eaknit::liouville::unitary_superop;
use eaknit::qpd::{build_bell_gate_cut, build_psi_gate_cut, build_wire_cut, reconstruct_superop, EffectiveQpd, QpdConfig};
use eaknit::schmidt::operator_schmidt;
use eaknit::ResourceState;

#[test]
fn config_survives_json_file() {
    let dir = tempfile::tempdir().unwrap();
    let lud = operator_schmidt(&gates::iswap(), (2, 2)).unwrap();
    let c = build_psi_gate_cut(&lud, 0.4).unwrap();
    let path = dir.path().join("iswap.json");
    std::fs::write(&path, c.to_json().unwrap()).unwrap();
    let back = QpdConfig::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let (a, b) = (reconstruct_superop(&c).unwrap(), reconstruct_superop(&back).unwrap());
    assert_eq!(a.matrix(), b.matrix());
    assert!(a.distance(&unitary_superop(&gates::iswap()).unwrap()) < 1e-10);
}

#[test]
fn malformed_config_is_rejected() {
    let lud = operator_schmidt(&gates::cnot(), (2, 2)).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&build_bell_gate_cut(&lud).unwrap().to_json().unwrap()).unwrap();
    v["terms"][0]["prob"] = serde_json::json!(0.9);
    assert!(QpdConfig::from_json(&v.to_string()).is_err());
}

#[test]
fn gate_cut_then_teleport_target() {
    let lud = operator_schmidt(&gates::cnot(), (2, 2)).unwrap();
    let gate = EffectiveQpd::from_config(&build_bell_gate_cut(&lud).unwrap()).unwrap();
    let wire = build_wire_cut(&ResourceState::Separable, 2).unwrap().config.unwrap();
    let wire = EffectiveQpd::from_config(&wire).unwrap().with_idle_b(2);
    let joint = gate.then(&wire).unwrap();
    assert!((joint.gamma - 6.0).abs() < 1e-10);
    let m = joint.reconstruct();
    assert!((m.matrix() - unitary_superop(&gates::cnot()).unwrap().matrix()).frobenius_norm() < 1e-10);
}

#[test]
fn estimate_matches_exact_for_cz() {
    let lud = operator_schmidt(&gates::cz(), (2, 2)).unwrap();
    let c = build_bell_gate_cut(&lud).unwrap();
    let rho = product_state("++").unwrap();
    let o = Observable::pauli("XZ").unwrap();
    let exact = exact_expectation_config(&c, &rho, &o).unwrap();
    assert!((exact - 1.0).abs() < 1e-10);
    let r = mc_estimate(&c, &rho, &o, &ShotPlan::fixed(40_000), 12).unwrap();
    assert!((r.mean - exact).abs() < 5.0 * r.std_error);
}

#[test]
fn bench_manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let h = fig4_histogram(200, 1, 20, Execution::default()).unwrap();
    let csv = dir.path().join("h.csv");
    std::fs::write(&csv, h.to_csv()).unwrap();
    let m = BenchManifest { seed: 1, samples: 200, bins: 20, outputs: vec![csv.clone()], wall_time: 0.5 };
    let mp = dir.path().join("h.manifest.json");
    m.write(&mp).unwrap();
    let back: BenchManifest = serde_json::from_str(&std::fs::read_to_string(&mp).unwrap()).unwrap();
    assert_eq!(back, m);
    let again = fig4_histogram(back.samples, back.seed, back.bins, Execution::Sequential).unwrap();
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), again.to_csv());
}
