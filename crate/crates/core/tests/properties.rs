//! Structural invariants of the control law and the Lyapunov candidate.

mod common;

use ballbeam::controller::{closed_loop_field, control, target_accel, ControlLaw};
use ballbeam::family::{self, GeneratorSpec};
use ballbeam::sim::hhat;
use ballbeam::{FamilySpec, PlantParams, State};
use proptest::prelude::*;

fn spec() -> FamilySpec {
    FamilySpec::new(
        PlantParams::default(),
        GeneratorSpec {
            mu1: vec![1.5, 1.2, 0.1, 0.3].into(),
            h: vec![1.0, 0.2, 0.3].into(),
            w: vec![0.0, 0.0, 2.5, -0.2].into(),
            s0: 0.35,
            chat_gains: [-3.0, 1.5],
        },
    )
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn state() -> impl Strategy<Value = State> {
    (0.1f64..0.95, -1.2f64..1.2, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(s, th, sd, td)| State::new(s, th, sd, td))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn u_g_is_quadratic_in_velocity(x in state(), c in -3.0f64..3.0) {
        let spec = spec();
        let a = control(&x, &spec).unwrap();
        let scaled = State::new(x.s, x.theta, c * x.s_dot, c * x.theta_dot);
        let b = control(&scaled, &spec).unwrap();
        prop_assert!(close(b.u_g, c * c * a.u_g, 1e-10));
        prop_assert!(close(b.u_v, a.u_v, 1e-12));
    }

    #[test]
    fn u_c_is_odd(x in state()) {
        let spec = spec();
        let a = control(&x, &spec).unwrap();
        let b = control(&State::new(x.s, x.theta, -x.s_dot, -x.theta_dot), &spec).unwrap();
        prop_assert!(close(b.u_c, -a.u_c, 1e-12));
        prop_assert!(close(b.u_g, a.u_g, 1e-12));
    }

    #[test]
    fn breakdown_sums(x in state()) {
        let c = control(&x, &spec()).unwrap();
        prop_assert_eq!(c.u_total, c.u_g + c.u_v + c.u_c);
    }

    #[test]
    fn closed_loop_equals_target_dynamics(x in state()) {
        let spec = spec();
        let f = closed_loop_field(&x, &spec, &ControlLaw::NonlinearFamily).unwrap();
        let t = target_accel(&x, &spec).unwrap();
        let scale = t[0].abs().max(t[1].abs()).max(1e-12);
        prop_assert!((f[2] - t[0]).abs() <= 1e-8 * scale);
        prop_assert!((f[3] - t[1]).abs() <= 1e-8 * scale);
    }

    #[test]
    fn hhat_bounds_vhat_where_ghat_is_positive(x in state()) {
        let spec = spec();
        let (g, _) = family::ghat_with_partials(x.s, x.theta, &spec).unwrap();
        prop_assume!(g.is_positive_definite());
        let (v, _) = family::vhat_at(x.s, x.theta, &spec).unwrap();
        prop_assert!(hhat(&x, &spec).unwrap() >= v - 1e-12 * v.abs().max(1.0));
    }
}

#[test]
fn zero_velocity_hhat_is_vhat() {
    let spec = spec();
    for &(s, th) in &[(0.2, 0.4), (0.8, -0.9)] {
        let (v, _) = family::vhat_at(s, th, &spec).unwrap();
        assert_eq!(hhat(&State::at_rest(s, th), &spec).unwrap(), v);
    }
}
