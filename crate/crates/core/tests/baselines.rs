use lem_core::baselines::{compare_trajectories, construct_equivalent_pair, lstm_forward_step, LstmParams, LstmState};
use lem_core::lem::param_count;
use lem_core::numerics::seeded_uniform;

#[test]
fn lstm_matches_lem_parameter_count() {
    for (d, m, o) in [(1, 1, 1), (8, 3, 2), (128, 1, 10), (128, 96, 10)] {
        assert_eq!(LstmParams::init(d, m, o, 0).unwrap().param_count(), param_count(d, m, o));
    }
}

#[test]
fn lstm_hidden_state_is_bounded() {
    let p = LstmParams::init(4, 2, 1, 3).unwrap();
    let mut s = LstmState::zeros(4);
    for u in seeded_uniform(-5.0, 5.0, 400, 1).unwrap().chunks(2) {
        s = lstm_forward_step(&p, &s, u).unwrap().0;
        assert!(s.h.iter().all(|h| h.abs() < 1.0));
    }
}

#[test]
fn constructed_pair_tracks_over_long_runs() {
    let (lem, lstm) = construct_equivalent_pair(6, 3, 11, 1e-9).unwrap();
    let x: Vec<Vec<f64>> = seeded_uniform(-1.0, 1.0, 3 * 100, 12).unwrap().chunks(3).map(<[f64]>::to_vec).collect();
    let r = compare_trajectories(&lem, &lstm, &x, 1e-9).unwrap();
    assert!(r.max_divergence() <= 1e-6, "{r:?}");
    // a looser saturation leaks visibly
    let (lem, lstm) = construct_equivalent_pair(6, 3, 11, 1e-2).unwrap();
    assert!(compare_trajectories(&lem, &lstm, &x, 1e-2).unwrap().max_divergence() > 1e-6);
}
