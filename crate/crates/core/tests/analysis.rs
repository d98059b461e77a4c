use lem_core::analysis::{
    delta_t_histogram, equivalence_suite, prop1_bound, prop1_suite, prop2_suite, write_gate_csv, VerificationReport,
};
use lem_core::lem::LemParams;
use lem_core::numerics::seeded_uniform;

#[test]
fn small_suites_pass() {
    assert!(prop1_suite(10, 50, 0.5, 1).unwrap().pass);
    assert!(prop2_suite(10, 1).unwrap().pass);
    assert!(equivalence_suite(100, 4, 2, 1e-9, 1).unwrap().pass);
}

#[test]
fn prop1_bound_shape() {
    assert!((prop1_bound(100, 0.5) - (100.0 * 0.5 * 2.0f64).sqrt()).abs() < 1e-12);
}

#[test]
fn reports_round_trip_through_json() {
    let r = prop1_suite(5, 20, 0.5, 2).unwrap();
    let back: VerificationReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn gate_histogram_counts_and_csv() {
    let p = LemParams::init(5, 2, 1, 1.0, 4).unwrap();
    let seqs: Vec<Vec<Vec<f64>>> = (0..3)
        .map(|s| seeded_uniform(-1.0, 1.0, 40, s).unwrap().chunks(2).map(<[f64]>::to_vec).collect())
        .collect();
    let h = delta_t_histogram(&p, &seqs).unwrap();
    assert_eq!(h.dt.len() + h.dt_bar.len(), 2 * 5 * 20 * 3);
    assert!(h.dt.iter().chain(&h.dt_bar).all(|&v| v > 0.0 && v < 1.0));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    write_gate_csv(&path, &h).unwrap();
    assert_eq!(std::fs::read_to_string(path).unwrap().lines().count(), 1 + 600);
}
