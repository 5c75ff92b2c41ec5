use proptest::prelude::*;

use sma_safety::pose::{pair_map, piaw_step, pose_controller_step, sat};
use sma_safety::{PiawGains, PiawState, PoseController, PoseState};

fn state() -> impl Strategy<Value = PiawState> {
    (-50.0..50.0_f64, -5.0..5.0_f64).prop_map(|(acc, eta)| PiawState {
        acc,
        last_eta: eta,
        last_mu: sat(eta),
    })
}

proptest! {
    #[test]
    fn pure_proportional_ignores_history(
        k_p in 0.0..10.0_f64, k_a in -2.0..2.0_f64, s in state(), delta in -2.0..2.0_f64,
    ) {
        let g = PiawGains::new(k_p, 0.0, k_a, 0.1).unwrap();
        let out = piaw_step(&g, &s, delta).unwrap();
        prop_assert_eq!(out.eta, k_p * delta);
        prop_assert_eq!(out.mu, sat(k_p * delta));
    }

    /// Anti-windup only acts once the output has saturated: until then a run
    /// with `k_a > 0` is bit-identical to one with `k_a = 0`.
    #[test]
    fn anti_windup_is_inert_until_saturation(
        k_p in 0.1..5.0_f64, k_i in 0.1..5.0_f64, k_a in 0.1..3.0_f64,
        deltas in prop::collection::vec(-0.5..0.5_f64, 1..200),
    ) {
        let plain = PiawGains::new(k_p, k_i, 0.0, 0.1).unwrap();
        let aw = PiawGains::new(k_p, k_i, k_a, 0.1).unwrap();
        let (mut sp, mut sa) = (PiawState::default(), PiawState::default());
        let mut saturated = false;
        for &d in &deltas {
            let op = piaw_step(&plain, &sp, d).unwrap();
            let oa = piaw_step(&aw, &sa, d).unwrap();
            if saturated {
                break;
            }
            prop_assert_eq!(op, oa);
            saturated = op.eta != op.mu;
            sp = op.state;
            sa = oa.state;
        }
    }

    #[test]
    fn saturation_is_exact_clip(x in -10.0..10.0_f64) {
        let y = sat(x);
        prop_assert!((-1.0..=1.0).contains(&y));
        if x.abs() <= 1.0 {
            prop_assert_eq!(y, x);
        } else {
            prop_assert_eq!(y, x.signum());
        }
    }

    #[test]
    fn each_limb_drives_one_wire(
        theta in prop::collection::vec(-1.5..1.5_f64, 5),
        target in prop::collection::vec(-1.5..1.5_f64, 5),
        k_p in 0.0..10.0_f64, k_i in 0.0..5.0_f64,
    ) {
        let gains = vec![PiawGains::new(k_p, k_i, 0.5, 0.1).unwrap(); 5];
        let states = vec![PiawState::default(); 5];
        let q = PoseState::new(theta);
        let q_bar = PoseState::new(target);
        let (v, next) = pose_controller_step(&gains, &states, &q, &q_bar).unwrap();
        prop_assert_eq!(v.len(), 10);
        for j in 0..5 {
            let (plus, minus) = (v[2 * j], v[2 * j + 1]);
            prop_assert!((0.0..=1.0).contains(&plus) && (0.0..=1.0).contains(&minus));
            prop_assert!(plus == 0.0 || minus == 0.0);
            prop_assert_eq!(plus - minus, next[j].last_mu);
        }
    }
}

#[test]
fn saturation_boundary() {
    let g = PiawGains::new(2.0, 0.0, 0.0, 0.1).unwrap();
    let s = PiawState::default();
    for (delta, mu) in [(0.5, 1.0), (-0.5, -1.0), (0.25, 0.5)] {
        let o = piaw_step(&g, &s, delta).unwrap();
        assert_eq!(o.mu, mu);
        assert_eq!(o.eta, mu);
    }
    assert_eq!(pair_map(1.0).unwrap(), (1.0, 0.0));
    assert_eq!(pair_map(-1.0).unwrap(), (0.0, 1.0));
    assert!(pair_map(1.0 + f64::EPSILON).is_err());
}

#[test]
fn integral_removes_constant_offset() {
    let g = PiawGains::new(1.0, 0.5, 0.0, 0.1).unwrap();
    let mut c = PoseController::uniform(g, 1).unwrap();
    let target = PoseState::new(vec![0.0]);
    let mut theta = 0.2;
    for _ in 0..400 {
        let v = c.step(&PoseState::new(vec![theta]), &target).unwrap();
        theta += 0.1 * (0.05 - (v[0] - v[1]));
    }
    assert!(theta.abs() < 1e-3, "theta {theta}");
}
