//! Linearization, gain fitting, stability conditions and basin sweeps.

mod common;

use ballbeam::analysis::{
    basin_estimate, fit_linear_gains, linearize, stability_conditions, AxisRange, BasinGrid, FitOptions,
};
use ballbeam::controller::ControlLaw;
use ballbeam::sim::{SimConfig, Termination};
use ballbeam::Error;
use common::C;

const POLES: [C; 4] = [(-1.0, 0.0), (-1.5, 0.0), (-2.0, 0.0), (-2.5, 0.0)];

#[test]
fn linear_law_gains_and_poles() {
    let spec = common::template();
    let g = common::pole_placement(&spec.plant, spec.gen.s0, &POLES);
    let lin = linearize(&spec, &ControlLaw::Linear(g)).unwrap();
    assert!(lin.gains_equivalent.max_abs_diff(&g) < 1e-6, "{:?}", lin.gains_equivalent);
    assert!(common::root_distance(&lin.poles, &POLES) < 1e-6, "{:?}", lin.poles);
    assert!(lin.pole_residuals.iter().all(|r| *r < 1e-8));
}

#[test]
fn poles_match_independent_roots() {
    let spec = common::template();
    let roots: [C; 4] = [(-0.5, 1.2), (-0.5, -1.2), (-3.0, 0.0), (-0.8, 0.0)];
    let g = common::pole_placement(&spec.plant, spec.gen.s0, &roots);
    let lin = linearize(&spec, &ControlLaw::Linear(g)).unwrap();
    // det(sI - A) from the Jacobian itself, rooted by Durand-Kerner
    let a = nalgebra::Matrix4::from_fn(|i, j| lin.a[i][j]);
    let cp = ballbeam::analysis::char_poly(&a);
    let dk = common::durand_kerner(&cp[..4]);
    assert!(common::root_distance(&lin.poles, &dk) < 1e-6, "{:?} {dk:?} {cp:?}", lin.poles);
    assert!(common::root_distance(&lin.poles, &roots) < 1e-6);
}

#[test]
fn open_loop_is_not_an_equilibrium() {
    let spec = common::template();
    match linearize(&spec, &ControlLaw::OpenLoop) {
        Err(Error::NonEquilibrium { residual }) => assert!(residual > 1e-8),
        other => panic!("{other:?}"),
    }
}

#[test]
fn fit_round_trip_recovers_scalars() {
    let spec0 = common::stabilizing_spec();
    let target = linearize(&spec0, &ControlLaw::NonlinearFamily).unwrap().gains_equivalent;
    let out = fit_linear_gains(&target, &common::template(), &FitOptions::default()).unwrap();
    let want = ballbeam::analysis::fit::free_scalars(&spec0);
    for (got, want) in out.scalars.iter().zip(want) {
        assert!((got - want).abs() < 1e-6, "{:?} vs {want:?}", out.scalars);
    }
    assert_eq!(out.gains.a8, spec0.plant.equilibrium_torque(spec0.gen.s0));
}

#[test]
fn fit_places_poles() {
    let template = common::template();
    let target = common::pole_placement(&template.plant, template.gen.s0, &POLES);
    let out = fit_linear_gains(&target, &template, &FitOptions::default()).unwrap();
    assert!(out.residual < 1e-8);
    let lin = linearize(&out.spec, &ControlLaw::NonlinearFamily).unwrap();
    assert!(common::root_distance(&lin.poles, &POLES) < 1e-5, "{:?}", lin.poles);
}

#[test]
fn zero_velocity_gains_fit() {
    let template = common::template();
    let mut target = common::pole_placement(&template.plant, template.gen.s0, &POLES);
    target.kbd = 0.0;
    target.kad = 0.0;
    target.a8 = 123.0;
    let out = fit_linear_gains(&target, &template, &FitOptions::default()).unwrap();
    let p = &template.plant;
    let s0 = template.gen.s0;
    let det_g = p.a4 + (p.a3 + 2.5 * s0 * s0) * p.rho * p.rho - p.rho * p.rho;
    assert!(out.scalars[2].abs() < 1e-8);
    assert!((out.scalars[3] - p.a7 / det_g).abs() < 1e-8);
    assert_eq!(out.gains.a8, p.equilibrium_torque(s0));
    let r = stability_conditions(&out.spec).unwrap();
    assert!(!r.det_ghat_chat.pass && !r.overall);
}

#[test]
fn zero_dissipation_fails_stability() {
    let mut spec = common::stabilizing_spec();
    spec.gen.chat_gains = [0.0, 0.0];
    let r = stability_conditions(&spec).unwrap();
    assert_eq!(r.det_ghat_chat.value, 0.0);
    assert!(!r.overall);
}

#[test]
fn stabilizing_spec_conditions() {
    // ĝĉ(0) has rank one for every linear dissipation: only its determinant
    // fails.
    let r = stability_conditions(&common::stabilizing_spec()).unwrap();
    for (name, c) in r.conditions() {
        assert_eq!(c.pass, name != "det_ghat_chat", "{name}: {c:?}");
    }
    let m = r.ghat_chat;
    assert!((m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs() < 1e-12);
}

#[test]
fn no_convergence_is_reported() {
    let template = common::template();
    let target = common::pole_placement(&template.plant, template.gen.s0, &POLES);
    let opts = FitOptions { max_iterations: 1, tol: 1e-14, ..FitOptions::default() };
    match fit_linear_gains(&target, &template, &opts) {
        Err(Error::NoConvergence { residual, .. }) => assert!(residual.is_finite()),
        other => panic!("{other:?}"),
    }
}

fn small_grid() -> BasinGrid {
    BasinGrid {
        s: AxisRange { min: 0.2, max: 2.0, count: 3 },
        theta: AxisRange { min: -0.1, max: 0.1, count: 2 },
        s_dot: AxisRange::point(0.0),
        theta_dot: AxisRange::point(0.0),
    }
}

#[test]
fn basin_trivial_cases() {
    let spec = common::stabilizing_spec();
    let cfg = SimConfig { t_final: 2.0, dt: 1e-2, ..SimConfig::default() };
    let at_eq = BasinGrid {
        s: AxisRange::point(spec.gen.s0),
        theta: AxisRange::point(0.0),
        s_dot: AxisRange::point(0.0),
        theta_dot: AxisRange::point(0.0),
    };
    assert_eq!(basin_estimate(&spec, &ControlLaw::NonlinearFamily, &at_eq, &cfg, 1e-3).fraction, 1.0);

    let est = basin_estimate(&spec, &ControlLaw::NonlinearFamily, &small_grid(), &cfg, 1e-1);
    for p in est.points.iter().filter(|p| p.x0.s > 1.0) {
        assert_eq!(p.termination, Termination::BeamExit);
        assert!(!p.captured);
    }
}

#[test]
fn basin_is_deterministic() {
    let spec = common::stabilizing_spec();
    let cfg = SimConfig { t_final: 3.0, dt: 1e-2, ..SimConfig::default() };
    let lin = ControlLaw::Linear(common::pole_placement(&spec.plant, spec.gen.s0, &POLES));
    for law in [ControlLaw::NonlinearFamily, lin] {
        let a = basin_estimate(&spec, &law, &small_grid(), &cfg, 1e-1);
        let b = basin_estimate(&spec, &law, &small_grid(), &cfg, 1e-1);
        assert!((0.0..=1.0).contains(&a.fraction));
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.points.iter().enumerate().all(|(i, p)| p.index == i));
    }
}
