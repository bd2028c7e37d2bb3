use proptest::prelude::*;
use vesselkit_core::matcore::{
    c, contour_integral, eye, fro, is_positive_definite, ode_integrate, real_matrix, scalar, solve_sylvester,
    sylvester_full, zeros, CMatrix, OdeGrid, Tolerance, C64,
};
use vesselkit_core::Error;

fn s(x: f64) -> CMatrix {
    scalar(c(x, 0.0))
}

#[test]
fn sylvester_scalar_and_identity() {
    let x = solve_sylvester(&s(-1.0), &s(-1.0), &s(-1.0)).unwrap();
    assert!((x[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
    let x = solve_sylvester(&eye(2), &eye(2), &(eye(2) * c(2.0, 0.0))).unwrap();
    assert!(fro(&(x - eye(2))) < 1e-14);
}

#[test]
fn sylvester_singular_operator_returns_minimum_norm_solution() {
    let a = real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let b = zeros(2, 2);
    let cm = real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let sol = sylvester_full(&a, &b, &cm).unwrap();
    let x = &sol.x;
    assert!(fro(&(&a * x + x * &b - &cm)) < 1e-12);
    // AX = C forces the second row to [1, 0]; the first row is free and minimum norm sets it to 0.
    assert!((x[(1, 0)] - c(1.0, 0.0)).norm() < 1e-12);
    assert!(x[(1, 1)].norm() < 1e-12);
    assert!(x[(0, 0)].norm() < 1e-12 && x[(0, 1)].norm() < 1e-12);
    assert_eq!(sol.nullity, 2);
}

#[test]
fn sylvester_reports_rhs_outside_range() {
    let a = real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let cm = real_matrix(2, 2, &[0.0, 0.0, 1.0, 0.0]);
    assert!(matches!(
        solve_sylvester(&a, &zeros(2, 2), &cm),
        Err(Error::SingularOperator { .. })
    ));
    assert!(matches!(
        solve_sylvester(&eye(2), &eye(3), &zeros(2, 2)),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn positive_definiteness() {
    let tol = Tolerance::absolute(1e-12);
    assert_eq!(is_positive_definite(&eye(3), tol).unwrap(), (true, 1.0));
    let (pd, lmin) = is_positive_definite(&real_matrix(2, 2, &[1.0, 0.0, 0.0, -1.0]), tol).unwrap();
    assert!(!pd);
    assert_eq!(lmin, -1.0);
    let (pd, lmin) = is_positive_definite(&s(0.375), tol).unwrap();
    assert!(pd && (lmin - 0.375).abs() < 1e-15);
    assert!(matches!(
        is_positive_definite(&real_matrix(2, 2, &[1.0, 1.0, 0.0, 1.0]), tol),
        Err(Error::NotHermitian { .. })
    ));
    assert!(Tolerance::new(0.0, 0.0).is_err());
}

#[test]
fn rk4_exponential_and_constant() {
    let grid = OdeGrid::new(0.0, 1.0, 1000).unwrap();
    let ys = ode_integrate(|_, y| y.clone(), &s(1.0), &grid).unwrap();
    assert!((ys[1000][(0, 0)].re - std::f64::consts::E).abs() < 1e-10);

    let y0 = real_matrix(2, 1, &[3.0, -4.0]);
    let ys = ode_integrate(|_, y| zeros(y.nrows(), y.ncols()), &y0, &grid).unwrap();
    assert!(ys.iter().all(|y| *y == y0));

    // B' = −A₁B with A₁ = −1.
    let ys = ode_integrate(|_, b| b * c(1.0, 0.0), &s(1.0), &grid).unwrap();
    assert!((ys[1000][(0, 0)].re - std::f64::consts::E).abs() < 1e-10);
}

#[test]
fn rk4_rejects_blow_up() {
    let grid = OdeGrid::new(0.0, 1.0, 10).unwrap();
    let r = ode_integrate(|_, y| y * c(1e300, 0.0), &s(1.0), &grid);
    assert!(matches!(r, Err(Error::NonFinite(_))));
}

#[test]
fn rk4_is_fourth_order_against_matrix_exponential() {
    let m = CMatrix::from_row_slice(
        3,
        3,
        &[c(-1.0, 0.5), c(0.3, 0.0), c(0.0, 0.2), c(0.1, -0.4), c(0.2, 0.0), c(0.7, 0.0), c(0.0, 0.0), c(-0.5, 0.1), c(-0.3, 0.0)],
    );
    let y0 = eye(3);
    let exact = (&m * c(2.0, 0.0)).exp();
    let err = |steps| {
        let grid = OdeGrid::new(0.0, 2.0, steps).unwrap();
        let ys = ode_integrate(|_, y| &m * y, &y0, &grid).unwrap();
        fro(&(&ys[steps] - &exact))
    };
    let (e1, e2) = (err(20), err(40));
    assert!(e1 / e2 >= 8.0, "ratio {}", e1 / e2);
}

#[test]
fn contour_residues() {
    let one = contour_integral(|l| Ok(scalar(C64::new(1.0, 0.0) / l)), c(0.0, 0.0), 1.0, 64).unwrap();
    assert!((one[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);
    let zero = contour_integral(|_| Ok(s(1.0)), c(0.0, 0.0), 1.0, 64).unwrap();
    assert!(zero[(0, 0)].norm() < 1e-12);
    let b = contour_integral(|l| Ok(scalar(c(1.0, 0.0) / (l + 1.0))), c(-1.0, 0.0), 1.0, 64).unwrap();
    assert!((b[(0, 0)] - c(1.0, 0.0)).norm() < 1e-10);
    assert!(contour_integral(|_| Ok(s(1.0)), c(0.0, 0.0), 1.0, 8).is_err());
    assert!(matches!(
        contour_integral(|_| Ok(s(f64::NAN)), c(0.0, 0.0), 1.0, 16),
        Err(Error::NonFinite(_))
    ));
}

#[test]
fn grid_snapping() {
    let g = OdeGrid::new(0.0, 1.0, 10).unwrap();
    assert_eq!(g.index_of(0.31).unwrap(), 3);
    assert_eq!(g.t(10), 1.0);
    assert!(matches!(g.index_of(1.2), Err(Error::OffGrid { .. })));
    assert!(OdeGrid::new(1.0, 0.0, 10).is_err());
    assert!(OdeGrid::new(0.0, 1.0, 0).is_err());
}

fn cmat(n: usize, m: usize) -> impl Strategy<Value = CMatrix> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * m)
        .prop_map(move |v| CMatrix::from_iterator(n, m, v.into_iter().map(|(a, b)| c(a, b))))
}

fn shifted(m: CMatrix, shift: f64) -> CMatrix {
    let n = m.nrows();
    m + eye(n) * c(shift, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sylvester_residual_is_small(
        (n, m) in (1usize..=6, 1usize..=6),
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut gen = |r: usize, k: usize| CMatrix::from_fn(r, k, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        // Shifting both spectra into the right half-plane keeps the operator well conditioned.
        let a = shifted(gen(n, n), 3.0);
        let b = shifted(gen(m, m), 3.0);
        let cm = gen(n, m);
        let x = solve_sylvester(&a, &b, &cm).unwrap();
        let res = fro(&(&a * &x + &x * &b - &cm));
        prop_assert!(res <= 1e-10 * (fro(&a) + fro(&b)) * fro(&x).max(1.0));
    }

    #[test]
    fn contour_recovers_b(a in cmat(3, 3), b in cmat(3, 2)) {
        let norm = a.norm();
        prop_assume!(norm <= 4.0);
        let radius = 2.0 * norm + 1.0;
        let r = contour_integral(
            |l| Ok((eye(3) * l - &a).lu().solve(&b).unwrap()),
            c(0.0, 0.0),
            radius,
            256,
        ).unwrap();
        prop_assert!(fro(&(r - &b)) <= 1e-10);
    }
}
