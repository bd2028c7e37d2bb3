use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use vesselkit_core::fixtures::{fix_c, fix_soliton, sl_params};
use vesselkit_core::matcore::{c, eye, fro, real_matrix, zeros, OdeGrid, I};
use vesselkit_core::models::{
    gamma_star_mismatch, nls_structure_defect, nls_vessel_params, sl_beta_from_trajectory, sl_output_lde_check,
    sl_structure_defect, trajectory_potential, NlsModel, SlModel,
};
use vesselkit_core::moments::{moment_derivatives, moments_from_trajectory};
use vesselkit_core::realization::Realization;
use vesselkit_core::vessel::{evolve_vessel, VesselTrajectory};
use vesselkit_core::{random, Error, Expression};

fn sech2(t: f64) -> f64 {
    1.0 / t.cosh().powi(2)
}

fn sl_traj(r0: &Realization, a: f64, b: f64, steps: usize) -> VesselTrajectory {
    let params = vesselkit_core::models::sl_vessel_params((a, b)).unwrap();
    evolve_vessel(r0, &params, 0.0, &OdeGrid::new(a, b, steps).unwrap()).unwrap()
}

#[test]
fn one_soliton_potential() {
    let m = SlModel::from_expression("-tanh").unwrap();
    for t in [-2.0, -0.3, 0.0, 0.7, 3.0] {
        assert!((m.pi11(t).unwrap() + 1.0).abs() < 1e-14);
        assert!((m.q(t).unwrap() + 2.0 * sech2(t)).abs() < 1e-14);
    }
    let zero = SlModel::from_expression("0").unwrap();
    assert_eq!(zero.q(0.4).unwrap(), 0.0);
    assert!(SlModel::from_expression("cosh(t)").is_err());
}

#[test]
fn tau_driven_beta() {
    let m = SlModel::from_tau(Arc::new(Expression::parse("exp(t) + exp(-t)").unwrap()));
    for t in [-1.0, 0.0, 0.5] {
        assert!((m.beta(t).unwrap() + f64::tanh(t)).abs() < 1e-14);
        assert!((m.q(t).unwrap() + 2.0 * sech2(t)).abs() < 1e-13);
    }
}

#[test]
fn sl_beta_must_be_real() {
    let m = SlModel::from_expression("i*t").unwrap();
    assert!(matches!(m.beta(1.0), Err(Error::NotReal { .. })));
}

#[test]
fn sl_target_gamma_star_shape() {
    let m = SlModel::from_expression("-tanh").unwrap();
    let g = m.target_gamma_star(0.3).unwrap();
    assert!(sl_structure_defect(&g) < 1e-15);
    assert!((g[(0, 0)] - I).norm() < 1e-15);
    let p = m.vessel_params((0.0, 1.0)).unwrap();
    let gam = p.gamma(0.5);
    assert!(fro(&(&gam + gam.adjoint() + p.dsigma1(0.5))) == 0.0);
}

#[test]
fn nls_parameters() {
    let m = NlsModel::from_expression("1").unwrap();
    let g = m.target_gamma_star(0.2).unwrap();
    assert_eq!(g, real_matrix(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    assert_eq!(nls_structure_defect(&g), 0.0);
    let p = m.vessel_params((0.0, 1.0)).unwrap();
    assert_eq!(p.gamma(0.0), zeros(2, 2));
    assert_eq!(p.sigma1(0.0), eye(2));
}

#[test]
fn nls_trajectory_has_nls_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r0 = random::stable_realization(&mut rng, 2, &eye(2)).unwrap();
    let params = nls_vessel_params((0.0, 1.0)).unwrap();
    let t = evolve_vessel(&r0, &params, 0.0, &OdeGrid::new(0.0, 1.0, 200).unwrap()).unwrap();
    for g in &t.gamma_star {
        assert!(nls_structure_defect(g) < 1e-7);
    }
}

#[test]
fn soliton_trajectory_matches_the_model() {
    let t = sl_traj(&fix_soliton(), 0.0, 1.0, 500);
    let model = SlModel::from_expression("-1 - tanh").unwrap();
    assert!(gamma_star_mismatch(&t, |s| model.target_gamma_star(s)).unwrap() < 1e-7);
    for k in [0, 200, 500] {
        let (b, _) = sl_beta_from_trajectory(&t, k).unwrap();
        let s = t.grid.t(k);
        assert!((b + 1.0 + s.tanh()).abs() < 1e-8);
        assert!((trajectory_potential(&t, k).unwrap() + 2.0 * sech2(s)).abs() < 1e-7);
    }
}

#[test]
fn output_lde_for_the_soliton() {
    let t = sl_traj(&fix_soliton(), 0.0, 1.0, 1000);
    let u0 = real_matrix(2, 1, &[1.0, 0.5]);
    let r = sl_output_lde_check(&t, c(2.0, 0.0), &u0, |s| Ok(-2.0 * sech2(s))).unwrap();
    assert!(r < 1e-5, "residual {r}");
}

#[test]
fn output_lde_for_fix_c() {
    let t = sl_traj(&fix_c(), 0.0, 1.0, 1000);
    let q = |s: f64| trajectory_potential(&t, t.index_of(s)?);
    let r = sl_output_lde_check(&t, c(2.0, 0.0), &real_matrix(2, 1, &[1.0, 0.0]), q).unwrap();
    assert!(r < 1e-4, "residual {r}");
    // The wrong potential is detected.
    let r = sl_output_lde_check(&t, c(2.0, 0.0), &real_matrix(2, 1, &[1.0, 0.0]), |_| Ok(0.0)).unwrap();
    assert!(r > 1e-2);
}

#[test]
fn output_lde_trivial_cases() {
    let id = Realization::identity(fix_c().sigma1().clone()).unwrap();
    let t = evolve_vessel(&id, &sl_params(), 0.0, &OdeGrid::new(0.0, 1.0, 1000).unwrap()).unwrap();
    let r = sl_output_lde_check(&t, c(1.0, 1.0), &real_matrix(2, 1, &[1.0, 0.2]), |_| Ok(0.0)).unwrap();
    assert!(r < 1e-5);
    assert_eq!(sl_output_lde_check(&t, c(1.0, 1.0), &zeros(2, 1), |_| Ok(0.0)).unwrap(), 0.0);
    assert!(sl_output_lde_check(&t, c(1.0, 1.0), &zeros(3, 1), |_| Ok(0.0)).is_err());
}

#[test]
fn sl_h0_trace_and_symmetry() {
    let t = sl_traj(&fix_c(), 0.0, 1.0, 500);
    for k in (0..=500).step_by(50) {
        let dh = &moment_derivatives(&t, k, 0).unwrap()[0];
        assert!((dh[(0, 0)] + dh[(1, 1)]).norm() < 1e-6);
        let h = &moments_from_trajectory(&t, t.grid.t(k), 0).unwrap()[0];
        assert!((h[(0, 0)] - h[(1, 1)].conj()).norm() < 1e-8);
        assert!(h[(0, 1)].im.abs() < 1e-8 && h[(1, 0)].im.abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sl_trajectories_have_sl_shape(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r0 = random::stable_realization(&mut rng, n, fix_c().sigma1()).unwrap();
        let t = evolve_vessel(&r0, &sl_params(), 0.0, &OdeGrid::new(0.0, 0.3, 100).unwrap()).unwrap();
        let scale = t.gamma_star.iter().map(fro).fold(1.0, f64::max);
        for g in &t.gamma_star {
            prop_assert!(sl_structure_defect(g) <= 1e-7 * scale);
        }
    }

    #[test]
    fn pi11_is_consistent_with_beta(a in -2.0f64..2.0, b in -2.0f64..2.0, t in -1.0f64..1.0) {
        let m = SlModel::from_expression(&format!("{a:?}*tanh + {b:?}*t^2")).unwrap();
        let beta = a * t.tanh() + b * t * t;
        let dbeta = a * sech2(t) + 2.0 * b * t;
        prop_assert!((m.pi11(t).unwrap() - (dbeta - beta * beta)).abs() <= 1e-12);
        prop_assert!((m.q(t).unwrap() - 2.0 * dbeta).abs() <= 1e-12);
    }
}
