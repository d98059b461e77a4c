use lem_core::lem::{forward_sequence, forward_step, param_count, state_trajectory, LemParams, LemState};
use lem_core::numerics::{seeded_uniform, sigma_hat, Matrix};
use lem_core::Error;

fn inputs(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    seeded_uniform(-1.0, 1.0, n * m, seed).unwrap().chunks(m).map(<[f64]>::to_vec).collect()
}

#[test]
fn one_scalar_step_by_hand() {
    let mut p = LemParams::zeros(1, 1, 1, 0.5).unwrap();
    p.v1 = Matrix::from_vec(1, 1, vec![1.0]).unwrap();
    p.vz = Matrix::from_vec(1, 1, vec![2.0]).unwrap();
    p.wy = Matrix::from_vec(1, 1, vec![-1.0]).unwrap();
    p.b2 = vec![0.3];
    let u = 0.4;
    let (s, cache) = forward_step(&p, &LemState::zeros(1), &[u]).unwrap();
    let z = 0.5 * sigma_hat(u) * (2.0 * u).tanh();
    let y = 0.5 * sigma_hat(0.3) * (-z).tanh();
    assert!((s.z[0] - z).abs() < 1e-15);
    assert!((s.y[0] - y).abs() < 1e-15);
    assert_eq!(cache.gate_dt[0], 0.5 * sigma_hat(u));
}

#[test]
fn sequence_helpers_agree() {
    let p = LemParams::init(5, 3, 2, 0.3, 1).unwrap();
    let x = inputs(20, 3, 2);
    let (out, caches) = forward_sequence(&p, &x, &LemState::zeros(5)).unwrap();
    let states = state_trajectory(&p, &x, &LemState::zeros(5)).unwrap();
    assert_eq!(out.len(), 20);
    for ((o, c), s) in out.iter().zip(&caches).zip(&states) {
        assert_eq!(&c.next_state, s);
        assert_eq!(o, &p.w_out.matvec(&s.y).unwrap());
    }
}

#[test]
fn states_stay_inside_the_unit_box_for_small_steps() {
    // each update is a convex combination of the old value and a tanh
    let p = LemParams::init(6, 2, 1, 0.9, 4).unwrap();
    let states = state_trajectory(&p, &inputs(500, 2, 5), &LemState::zeros(6)).unwrap();
    assert!(states.iter().all(|s| s.max_abs() <= 1.0));
}

#[test]
fn parameter_count_and_init_range() {
    let p = LemParams::init(16, 3, 4, 1.0, 0).unwrap();
    assert_eq!(p.param_count(), param_count(16, 3, 4));
    assert_eq!(param_count(16, 3, 4), 4 * (256 + 48 + 16) + 64);
    let bound = 1.0 / 4.0;
    assert!(p.tensors().iter().flat_map(|t| t.iter()).all(|v| v.abs() <= bound));
}

#[test]
fn invalid_shapes_and_values_are_typed_errors() {
    let p = LemParams::init(3, 2, 1, 0.5, 0).unwrap();
    assert!(matches!(forward_step(&p, &LemState::zeros(3), &[1.0]), Err(Error::Shape(_))));
    assert!(matches!(forward_step(&p, &LemState::zeros(3), &[1.0, f64::NAN]), Err(Error::NonFinite(_))));
    assert!(LemParams::init(0, 1, 1, 0.5, 0).is_err());
    assert!(LemParams::init(2, 1, 1, 0.0, 0).is_err());
}

#[test]
fn params_round_trip_through_json() {
    let p = LemParams::init(4, 2, 3, 0.25, 8).unwrap();
    let back: LemParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
    assert_eq!(p, back);
}
