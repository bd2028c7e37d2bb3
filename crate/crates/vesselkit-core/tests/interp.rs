use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vesselkit_core::fixtures::{fix_a, fix_b_params, fix_d_gram, fix_d_problem, fix_d_steps, sl_params};
use vesselkit_core::interp::{
    feasibility_same_t2, multi_t2_verify, node_gram, node_residual, solve_same_t2, theta_trajectory,
    transported_node, transported_residual, InterpNode, MultiT2Candidate, MultiT2Options, NpProblem, PositivePair,
};
use vesselkit_core::matcore::{c, eye, fro, OdeGrid, C64};
use vesselkit_core::realization::Realization;
use vesselkit_core::schur::{schur_recursion, schur_step_realization, SchurStepData};
use vesselkit_core::vessel::{evolve_vessel, intertwining_residual};
use vesselkit_core::{random, Error};

const E: f64 = std::f64::consts::E;

fn grid(steps: usize) -> OdeGrid {
    OdeGrid::new(0.0, 1.0, steps).unwrap()
}

fn node(w: f64, xi: f64, eta: f64, t2: f64) -> InterpNode {
    InterpNode::scalar(c(w, 0.0), c(xi, 0.0), c(eta, 0.0), t2).unwrap()
}

#[test]
fn fix_d_is_feasible() {
    let rep = feasibility_same_t2(&fix_d_problem().unwrap()).unwrap();
    assert!(fro(&(&rep.gram - fix_d_gram())) < 1e-14);
    assert!((rep.xtildes[0] - 0.5).abs() < 1e-15);
    assert!((rep.xtildes[1] - 0.24).abs() < 1e-15);
    assert!((rep.lambda_min - (0.37 - (0.0169f64 + 1.0 / 9.0).sqrt())).abs() < 1e-12);
    assert!(rep.feasible);
}

#[test]
fn degenerate_and_single_nodes() {
    let bad = NpProblem::new(fix_b_params(), vec![node(1.0, 1.0, 1.0, 0.0)], 0.0).unwrap();
    let rep = feasibility_same_t2(&bad).unwrap();
    assert_eq!(rep.xtildes[0], 0.0);
    assert!(!rep.feasible);
    assert!(matches!(solve_same_t2(&bad, &grid(10)), Err(Error::Infeasible { .. })));

    let one = NpProblem::new(fix_b_params(), vec![node(1.0, 1.0, 0.0, 0.0)], 0.0).unwrap();
    let rep = feasibility_same_t2(&one).unwrap();
    assert!((rep.gram[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15 && rep.feasible);

    let dup = NpProblem::new(fix_b_params(), vec![node(1.0, 1.0, 0.0, 0.0), node(1.0, 1.0, 0.5, 0.0)], 0.0).unwrap();
    assert!(matches!(feasibility_same_t2(&dup), Err(Error::DuplicateNode { .. })));
}

#[test]
fn problem_validation() {
    assert!(NpProblem::new(fix_b_params(), vec![node(1.0, 1.0, 0.0, 2.0)], 0.0).is_err());
    assert!(NpProblem::new(fix_b_params(), vec![], 1.5).is_err());
    let wide = InterpNode::new(c(1.0, 0.0), eye(2).rows(0, 1).into_owned(), eye(2).rows(1, 1).into_owned(), 0.0).unwrap();
    assert!(matches!(NpProblem::new(fix_b_params(), vec![wide], 0.0), Err(Error::DimensionMismatch(_))));
    assert!(InterpNode::scalar(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), 0.0).is_err());
    assert!(InterpNode::scalar(c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), 0.0).is_err());
}

#[test]
fn single_node_solution_is_fix_b() {
    let prob = NpProblem::new(fix_b_params(), vec![node(1.0, 1.0, 0.0, 0.0)], 0.0).unwrap();
    let sol = solve_same_t2(&prob, &grid(1000)).unwrap();
    let t = &sol.trajectory;
    assert!(t.eval_s(c(1.0, 0.0), 0.0).unwrap()[(0, 0)].norm() < 1e-14);
    assert!((t.b[1000][(0, 0)].norm() - E).abs() < 1e-8);
    assert!((t.x[1000][(0, 0)] - c(E * E / 2.0, 0.0)).norm() < 1e-8);
}

#[test]
fn fix_d_solution() {
    let prob = fix_d_problem().unwrap();
    let sol = solve_same_t2(&prob, &grid(200)).unwrap();
    assert_eq!(sol.realization.dim(), 2);
    assert!(node_residual(&sol.realization, &prob.steps()).unwrap() < 1e-9);
    let omegas: Vec<f64> = (0..20).map(|k| 0.1 * 1.3f64.powi(k)).collect();
    assert!(sol.realization.sigma1_inner_residual(&omegas, &[]).unwrap().axis < 1e-9);
    let ls = [c(1.0, 1.0), c(3.0, 0.0)];
    assert!(intertwining_residual(&sol.trajectory, &ls, &[0.5, 1.0]).unwrap() < 1e-5);
    assert!(transported_residual(&sol.trajectory, &prob.steps(), &[0.0, 0.3, 0.7, 1.0]).unwrap() < 1e-5);
}

#[test]
fn zero_nodes_give_the_identity() {
    let prob = NpProblem::new(sl_params(), vec![], 0.0).unwrap();
    let sol = solve_same_t2(&prob, &grid(10)).unwrap();
    assert_eq!(sol.realization.dim(), 0);
    assert_eq!(sol.trajectory.eval_s(c(2.0, 1.0), 0.5).unwrap(), eye(2));
}

#[test]
fn transported_nodes_keep_their_node() {
    let t = evolve_vessel(&fix_a(), &fix_b_params(), 0.0, &grid(200)).unwrap();
    let step = SchurStepData::scalar(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
    let at_zero = transported_node(&t, &step, 0.0).unwrap();
    assert_eq!(at_zero, step);
    // For FIX-B, Φ(w, t) = e^{wt}.
    let moved = transported_node(&t, &step, 1.0).unwrap();
    assert!((moved.xi[(0, 0)] - c(E, 0.0)).norm() < 1e-9);
}

fn fix_d_pair(steps: usize) -> (vesselkit_core::vessel::VesselTrajectory, vesselkit_core::vessel::VesselTrajectory) {
    let prob = fix_d_problem().unwrap();
    let sol = solve_same_t2(&prob, &grid(steps)).unwrap();
    let theta = theta_trajectory(&prob.steps(), &sol.trajectory).unwrap();
    (theta, sol.trajectory)
}

#[test]
fn positive_pair_identities() {
    let (theta, s) = fix_d_pair(400);
    let pair = PositivePair::new(&theta, &s).unwrap();
    for t2 in [0.0, 0.5, 1.0] {
        for l in [c(2.0, 0.0), c(0.5, 1.0), c(3.0, -2.0)] {
            let v = pair.eval(l, t2).unwrap();
            assert!(v.identity_residual < 1e-9, "residual {} at {l}, {t2}", v.identity_residual);
        }
    }
    let pts = [c(1.0, 0.0), c(1.0, 1.0), c(2.0, 0.0)];
    let (_, lmin) = pair.kernel_gram(&pts, 0.5).unwrap();
    assert!(lmin >= -1e-8);
    assert!(PositivePair::new(&s, &s).is_err());
}

#[test]
fn positive_pair_of_the_identity_theta() {
    let s = evolve_vessel(&fix_a(), &fix_b_params(), 0.0, &grid(50)).unwrap();
    let theta = theta_trajectory(&[], &s).unwrap();
    let pair = PositivePair::new(&theta, &s).unwrap();
    let l = c(1.5, 0.5);
    let v = pair.eval(l, 0.3).unwrap();
    assert!((v.w1[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
    assert!(fro(&(v.w2 - s.eval_s(l, 0.3).unwrap())) < 1e-14);
}

fn reduced_candidate(first: &SchurStepData, second: &SchurStepData, t2: f64) -> MultiT2Candidate {
    let reduced = schur_recursion(&[first.clone(), second.clone()], &eye(1)).unwrap();
    let id = Realization::identity(eye(1)).unwrap();
    let s0 = schur_step_realization(&id, &reduced[1]).unwrap();
    MultiT2Candidate { s0, node: InterpNode::new(first.w, first.xi.clone(), first.eta.clone(), t2).unwrap() }
}

#[test]
fn multi_t2_with_a_common_t2() {
    let steps = fix_d_steps();
    let cands = vec![reduced_candidate(&steps[0], &steps[1], 0.0), reduced_candidate(&steps[1], &steps[0], 0.0)];
    let rep = multi_t2_verify(&cands, &fix_b_params(), &MultiT2Options::default()).unwrap();
    assert!(rep.verdict, "{:?}", rep.pairs);
}

#[test]
fn multi_t2_with_hand_built_fix_b_candidates() {
    let id = Realization::identity(eye(1)).unwrap();
    let cands = vec![
        MultiT2Candidate { s0: id.clone(), node: node(1.0, 1.0, 0.0, 0.0) },
        MultiT2Candidate { s0: id.clone(), node: node(1.0, 0.5f64.exp(), 0.0, 0.5) },
    ];
    let rep = multi_t2_verify(&cands, &fix_b_params(), &MultiT2Options::default()).unwrap();
    assert!(rep.verdict, "{:?}", rep.pairs);
    assert!(rep.pairs.iter().all(|p| p.contour_residual < 1e-5));

    let mismatched = vec![
        MultiT2Candidate { s0: id.clone(), node: node(1.0, 1.0, 0.0, 0.0) },
        MultiT2Candidate { s0: id, node: node(2.0, 1.0, 0.0, 0.5) },
    ];
    let rep = multi_t2_verify(&mismatched, &fix_b_params(), &MultiT2Options::default()).unwrap();
    assert!(!rep.verdict, "{:?}", rep.pairs);
    assert!(rep.pairs.iter().all(|p| !p.ok && p.similarity_residual > 1e-2));
}

#[test]
fn multi_t2_rejects_inconsistent_sizes() {
    let id = Realization::identity(eye(1)).unwrap();
    let bigger = schur_step_realization(&id, &fix_d_steps()[1]).unwrap();
    let cands = vec![
        MultiT2Candidate { s0: id, node: node(1.0, 1.0, 0.0, 0.0) },
        MultiT2Candidate { s0: bigger, node: node(1.0, 1.0, 0.0, 0.5) },
    ];
    assert!(matches!(
        multi_t2_verify(&cands, &fix_b_params(), &MultiT2Options::default()),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn node_json() {
    let n = node(1.0, 1.0, 0.5, 0.25);
    let text = serde_json::to_string(&n).unwrap();
    assert_eq!(text, r#"{"w":[1.0,0.0],"xi":[[1.0,0.0]],"eta":[[0.5,0.0]],"t2":0.25}"#);
    assert_eq!(serde_json::from_str::<InterpNode>(&text).unwrap(), n);
    assert!(serde_json::from_str::<InterpNode>(r#"{"w":[-1.0,0.0],"xi":[[1.0,0.0]],"eta":[[0.0,0.0]],"t2":0}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn feasibility_is_scale_invariant(seed in any::<u64>(), n in 1usize..=4, scales in proptest::collection::vec(0.1f64..10.0, 4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s1 = random::sigma1(&mut rng, 2, false);
        let mut steps = Vec::new();
        for _ in 0..n {
            let w = random::right_half_plane(&mut rng, 0.2, 3.0);
            steps.push(SchurStepData::new(w, random::matrix(&mut rng, 1, 2, 1.0), random::matrix(&mut rng, 1, 2, 1.0)).unwrap());
        }
        let g = node_gram(&steps, &s1).unwrap();
        let scaled: Vec<SchurStepData> = steps
            .iter()
            .zip(&scales)
            .map(|(s, &k)| SchurStepData::new(s.w, &s.xi * c(k, 0.0), &s.eta * c(k, 0.0)).unwrap())
            .collect();
        let gs = node_gram(&scaled, &s1).unwrap();
        let e = vesselkit_core::matcore::hermitian_eigenvalues(&g);
        let es = vesselkit_core::matcore::hermitian_eigenvalues(&gs);
        // Sylvester's law of inertia: the signs agree away from zero.
        let margin = 1e-6;
        prop_assume!(e.iter().all(|v| v.abs() > margin) && es.iter().all(|v| v.abs() > margin));
        prop_assert_eq!(e.iter().filter(|v| **v > 0.0).count(), es.iter().filter(|v| **v > 0.0).count());
    }

    #[test]
    fn same_t2_solutions_interpolate(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let steps: Vec<SchurStepData> = (0..n).map(|_| random::admissible_step(&mut rng, &eye(1), 0.3).unwrap()).collect();
        let nodes: Vec<InterpNode> = steps.iter().map(|s| InterpNode::new(s.w, s.xi.clone(), s.eta.clone(), 0.0).unwrap()).collect();
        let prob = NpProblem::new(fix_b_params(), nodes, 0.0).unwrap();
        let rep = feasibility_same_t2(&prob);
        prop_assume!(rep.as_ref().map(|r| r.lambda_min > 1e-3).unwrap_or(false));
        let sol = solve_same_t2(&prob, &grid(50)).unwrap();
        prop_assert!(node_residual(&sol.realization, &steps).unwrap() <= 1e-8);
        // Fast modes may truncate the trajectory before t₂ = 1; S stays contractive where it exists.
        let t = &sol.trajectory;
        let l: C64 = c(1.0, 0.5);
        for tt in [t.grid.t_start, t.grid.t_end] {
            prop_assert!(t.eval_s(l, tt).unwrap()[(0, 0)].norm() <= 1.0 + 1e-9);
        }
    }
}
