//! Scenario runners. Each returns an [`Outcome`]; thresholds decide pass/fail, hard failures
//! are errors.

use crate::config::*;
use crate::report::{complex_value, matrix_rows, matrix_value, Checks, Csv, Field, Outcome};
use crate::{CliError, RunOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use std::f64::consts::{E, PI};
use std::sync::Arc;
use vesselkit_core::fixtures::{fix_a, fix_b_params, fix_c, fix_d_gram, fix_d_problem, fix_soliton, sl_params};
use vesselkit_core::interp::{node_residual, theta_trajectory, transported_residual};
use vesselkit_core::matcore::{c, fro};
use vesselkit_core::models::{
    gamma_star_mismatch, nls_structure_defect, sl_beta_from_trajectory, sl_output_lde_check, sl_structure_defect,
    trajectory_potential,
};
use vesselkit_core::moments::{
    algebraic_residual, generate_moments_nls, generate_moments_sl, hlin_residual, linkage_residual,
    moments_from_trajectory, nls_initial_from_trajectory, recursion_residual, sl_initial_from_trajectory,
    trajectory_moment_sequence, BetaKind, TrajectoryBeta,
};
use vesselkit_core::schur::{build_theta_single, lft_apply, schur_step_realization, LftParam};
use vesselkit_core::vessel::{
    b_via_contour, detphi_residual, ds_residual, evolve_vessel, intertwining_residual, symmetry_residual,
    tau_function, ContourSpec,
};
use vesselkit_core::{
    feasibility_same_t2, multi_t2_verify, random, solve_same_t2, MultiT2Candidate, MultiT2Options,
    NlsInitial, NlsModel, NpProblem, OdeGrid, PositivePair, Realization, SlInitial, SlModel,
    VesselParams, VesselTrajectory, C64,
};

type Result<T> = std::result::Result<T, CliError>;

const AXIS_SAMPLES: usize = 20;
const RHP_SAMPLES: usize = 20;
const INNER_TOL: f64 = 1e-9;
const LYAPUNOV_TOL: f64 = 1e-10;

pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<Outcome> {
    match s {
        Scenario::SchurDemo(c) => schur_demo(c, opts),
        Scenario::VesselEvolve(c) => vessel_evolve(c, opts),
        Scenario::Moments(c) => moments(c, opts),
        Scenario::SlModel(c) => sl_model(c, opts),
        Scenario::NlsModel(c) => nls_model(c, opts),
        Scenario::NpSolve(c) => np_solve(c, opts),
        Scenario::NpVerify(c) => np_verify(c, opts),
        Scenario::ResidualSuite(c) => residual_suite(c, opts),
    }
}

fn steps_of(cfg: Option<usize>, opts: &RunOptions) -> usize {
    opts.steps.or(cfg).unwrap_or(DEFAULT_STEPS)
}

fn interval(v: [f64; 2]) -> (f64, f64) {
    (v[0], v[1])
}

/// Imaginary-axis sample points `ω = tan(π((j + ½)/k − ½))`, spread over the whole axis.
pub fn axis_samples(k: usize) -> Vec<f64> {
    (0..k).map(|j| (PI * ((j as f64 + 0.5) / k as f64 - 0.5)).tan()).collect()
}

/// `count` grid times spread evenly over the (possibly truncated) trajectory grid.
pub fn sample_times(traj: &VesselTrajectory, count: usize) -> Vec<f64> {
    let last = traj.grid.len() - 1;
    let mut ks: Vec<usize> = (0..count).map(|j| (j * last + (count - 1) / 2) / (count - 1).max(1)).collect();
    ks.dedup();
    ks.into_iter().map(|k| traj.grid.t(k)).collect()
}

/// max over the grid of the Lyapunov defect relative to its scale.
pub fn lyapunov_drift(traj: &VesselTrajectory) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..traj.grid.len() {
        let r = traj.realization_at(k)?;
        worst = worst.max(r.lyapunov_residual() / r.lyapunov_scale().max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

fn trajectory_details(out: &mut Outcome, traj: &VesselTrajectory) {
    out.detail("truncated", traj.truncated);
    out.detail("t_start", traj.grid.t_start);
    out.detail("t_end", traj.grid.t_end);
    out.detail("steps", traj.grid.steps);
    out.detail("dim", traj.dim());
    out.detail("p", traj.p());
}

fn tau_csv(traj: &VesselTrajectory) -> Result<String> {
    let mut csv = Csv::new(&["t2", "tau"]);
    for t in traj.grid.times() {
        csv.row(&[Field::F(t), Field::F(tau_function(traj, t)?)]);
    }
    Ok(csv.finish())
}

/// Intertwining, S-derivative, symmetry, det Φ and Lyapunov residuals of a trajectory.
pub fn vessel_checks(checks: &mut Checks, traj: &VesselTrajectory, lambdas: &[C64], t2s: &[f64], tol: f64) -> Result<()> {
    checks.le("intertwining", intertwining_residual(traj, lambdas, t2s)?, tol);
    let pts: Vec<(C64, f64)> = lambdas.iter().flat_map(|&l| t2s.iter().map(move |&t| (l, t))).collect();
    let ds = pts
        .par_iter()
        .map(|&(l, t)| ds_residual(traj, l, t))
        .collect::<vesselkit_core::Result<Vec<f64>>>()?;
    checks.le("ds_dt", ds.into_iter().fold(0.0, f64::max), tol);
    checks.le("symmetry", symmetry_residual(traj, lambdas, t2s)?, tol);
    checks.le("det_phi", detphi_residual(traj, lambdas, t2s)?, tol);
    checks.le("lyapunov_drift", lyapunov_drift(traj)?, tol);
    Ok(())
}

/// σ₁-innerness of a realization on the axis samples and the given right half-plane points.
pub fn inner_checks(checks: &mut Checks, prefix: &str, r: &Realization, rhp: &[C64]) -> Result<()> {
    let res = r.sigma1_inner_residual(&axis_samples(AXIS_SAMPLES), rhp)?;
    checks.le(format!("{prefix}inner_axis"), res.axis, INNER_TOL);
    if !rhp.is_empty() {
        checks.le(format!("{prefix}inner_rhp_max_eig"), res.rhp_max_eig, INNER_TOL);
    }
    Ok(())
}

fn fixed_rhp_points() -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..RHP_SAMPLES).map(|_| random::right_half_plane(&mut rng, 0.05, 5.0)).collect()
}

// ---------------------------------------------------------------- schur_demo

struct DemoRow {
    p: usize,
    n: usize,
    lft: f64,
    axis: f64,
    rhp: f64,
    lyapunov: f64,
}

fn demo_instance(seed: u64, index: usize, cfg: &SchurDemo) -> vesselkit_core::Result<DemoRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    use rand::Rng;
    let p = cfg.p[index % cfg.p.len()];
    let n = rng.gen_range(0..=cfg.max_dim);
    let sigma1 = random::sigma1(&mut rng, p, p == 1 || index % 2 == 0);
    let s0 = random::stable_realization(&mut rng, n, &sigma1)?;
    let step = random::admissible_step(&mut rng, &sigma1, cfg.margin)?;
    let r = schur_step_realization(&s0, &step)?;
    let theta = build_theta_single(&step, &sigma1)?;
    let mut lft: f64 = 0.0;
    for _ in 0..cfg.lambda_samples {
        let l = random::right_half_plane(&mut rng, 0.05, 5.0);
        let closed = lft_apply(&theta, LftParam::Realization(&s0), l)?;
        let direct = r.eval_transfer(l)?;
        lft = lft.max(fro(&(direct - &closed)) / (1.0 + fro(&closed)));
    }
    let rhp: Vec<C64> = (0..RHP_SAMPLES).map(|_| random::right_half_plane(&mut rng, 0.05, 5.0)).collect();
    let inner = r.sigma1_inner_residual(&axis_samples(AXIS_SAMPLES), &rhp)?;
    let lyapunov = r.lyapunov_residual() / r.lyapunov_scale().max(f64::MIN_POSITIVE);
    Ok(DemoRow { p, n, lft, axis: inner.axis, rhp: inner.rhp_max_eig, lyapunov })
}

fn schur_demo(cfg: &SchurDemo, opts: &RunOptions) -> Result<Outcome> {
    if cfg.p.is_empty() || cfg.p.iter().any(|&p| p == 0) {
        return Err(CliError::ConfigInvalid("p must list positive sizes".into()));
    }
    let seed = opts.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let rows = (0..cfg.instances)
        .into_par_iter()
        .map(|i| demo_instance(seed, i, cfg))
        .collect::<vesselkit_core::Result<Vec<_>>>()?;
    let mut out = Outcome::new("schur_demo");
    let mut csv = Csv::new(&["index", "p", "n", "lft_residual", "inner_axis", "inner_rhp_max_eig", "lyapunov"]);
    for (i, r) in rows.iter().enumerate() {
        csv.row(&[
            Field::U(i),
            Field::U(r.p),
            Field::U(r.n),
            Field::F(r.lft),
            Field::F(r.axis),
            Field::F(r.rhp),
            Field::F(r.lyapunov),
        ]);
    }
    let max = |f: fn(&DemoRow) -> f64| rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    out.checks.le("step_vs_lft", max(|r| r.lft), 1e-9);
    out.checks.le("inner_axis", max(|r| r.axis), INNER_TOL);
    out.checks.le("inner_rhp_max_eig", max(|r| r.rhp), INNER_TOL);
    out.checks.le("lyapunov", max(|r| r.lyapunov), LYAPUNOV_TOL);
    out.detail("instances", cfg.instances);
    out.detail("lambda_samples", cfg.lambda_samples);
    out.detail("seed", seed);
    out.file("instances.csv", csv.finish());
    Ok(out)
}

// ---------------------------------------------------------------- vessel_evolve

fn evolve(
    r: &RealizationSpec,
    p: &ParamsSpec,
    iv: [f64; 2],
    t2_0: Option<f64>,
    steps: usize,
) -> Result<VesselTrajectory> {
    let iv = interval(iv);
    let params = p.build(iv)?;
    let grid = OdeGrid::new(iv.0, iv.1, steps)?;
    Ok(evolve_vessel(&r.build(), &params, t2_0.unwrap_or(iv.0), &grid)?)
}

fn vessel_evolve(cfg: &VesselEvolve, opts: &RunOptions) -> Result<Outcome> {
    let traj = evolve(&cfg.realization, &cfg.params, cfg.interval, cfg.t2_0, steps_of(cfg.steps, opts))?;
    let lambdas = complexes(&cfg.lambdas);
    let t2s = sample_times(&traj, 5);
    let mut out = Outcome::new("vessel_evolve");
    vessel_checks(&mut out.checks, &traj, &lambdas, &t2s, cfg.tolerance)?;
    trajectory_details(&mut out, &traj);
    out.detail("sample_t2", &t2s);
    out.file("trajectory.csv", traj.to_csv());
    out.file("tau.csv", tau_csv(&traj)?);
    let mut s = Csv::new(&["t2", "lambda_re", "lambda_im", "row", "col", "re", "im"]);
    for &t in &t2s {
        for &l in &lambdas {
            matrix_rows(&mut s, &[Field::F(t), Field::F(l.re), Field::F(l.im)], &traj.eval_s(l, t)?);
        }
    }
    out.file("transfer.csv", s.finish());
    Ok(out)
}

// ---------------------------------------------------------------- moments

/// Moment identities of a trajectory at the sample times.
pub fn moment_checks(checks: &mut Checks, traj: &VesselTrajectory, t2s: &[f64], levels: usize) -> Result<()> {
    let mut alg: f64 = 0.0;
    let mut rec: f64 = 0.0;
    let mut hlin: f64 = 0.0;
    let mut link: f64 = 0.0;
    for &t in t2s {
        let h = moments_from_trajectory(traj, t, levels)?;
        alg = alg.max(algebraic_residual(&h, &traj.params.sigma1(t))?);
        for i in 0..levels.min(5) {
            rec = rec.max(recursion_residual(traj, t, i)?);
        }
        hlin = hlin.max(hlin_residual(traj, t, 4)?);
        link = link.max(linkage_residual(traj, t)?);
    }
    checks.le("algebraic", alg, 1e-9);
    checks.le("recursion", rec, 1e-6);
    checks.le("cayley_hamilton", hlin, 1e-8);
    checks.le("linkage", link, 1e-8);
    Ok(())
}

fn moments(cfg: &MomentsRun, opts: &RunOptions) -> Result<Outcome> {
    if cfg.levels == 0 {
        return Err(CliError::ConfigInvalid("levels must be positive".into()));
    }
    let traj = evolve(&cfg.realization, &cfg.params, cfg.interval, cfg.t2_0, steps_of(cfg.steps, opts))?;
    let t2s = sample_times(&traj, 5);
    let mut out = Outcome::new("moments");
    moment_checks(&mut out.checks, &traj, &t2s, cfg.levels)?;
    trajectory_details(&mut out, &traj);
    let h0 = moments_from_trajectory(&traj, traj.grid.t_start, 0)?;
    out.detail("h0_start", matrix_value(&h0[0]));
    out.file("moments.csv", trajectory_moment_sequence(&traj, cfg.levels)?.to_csv());
    Ok(out)
}

// ---------------------------------------------------------------- sl_model / nls_model

fn model_grid(iv: [f64; 2], steps: usize) -> Result<OdeGrid> {
    Ok(OdeGrid::new(iv[0], iv[1], steps)?)
}

fn sl_model(cfg: &SlModelRun, opts: &RunOptions) -> Result<Outcome> {
    let model = match (&cfg.beta, &cfg.tau) {
        (Some(b), None) => SlModel::new(Arc::new(b.clone())),
        (None, Some(t)) => SlModel::from_tau(Arc::new(t.clone())),
        _ => return Err(CliError::ConfigInvalid("sl_model needs exactly one of beta, tau".into())),
    };
    let steps = steps_of(cfg.steps, opts);
    let grid = model_grid(cfg.interval, steps)?;
    let mut out = Outcome::new("sl_model");
    let mut curves = Csv::new(&["t2", "beta", "dbeta", "pi11", "q"]);
    for t in grid.times() {
        curves.row(&[
            Field::F(t),
            Field::F(model.beta(t)?),
            Field::F(model.dbeta(t)?),
            Field::F(model.pi11(t)?),
            Field::F(model.q(t)?),
        ]);
    }
    out.file("curves.csv", curves.finish());
    let init = SlInitial { trace: padded(&cfg.initial.trace, cfg.levels), h21: padded(&cfg.initial.h21, cfg.levels) };
    let seq = generate_moments_sl(model.beta_fn().as_ref(), &grid, &init, cfg.levels)?;
    // Level 0 is fixed by β: H¹² = −β, H¹¹ − H²² = −iπ₁₁, constant trace.
    let mut shape: f64 = 0.0;
    for (k, hs) in seq.h.iter().enumerate() {
        let (t, h) = (grid.t(k), &hs[0]);
        shape = shape.max((h[(0, 1)] + model.beta(t)?).norm() / (1.0 + model.beta(t)?.abs()));
        shape = shape.max((h[(0, 0)] - h[(1, 1)] + c(0.0, model.pi11(t)?)).norm() / (1.0 + model.pi11(t)?.abs()));
        shape = shape.max((h[(0, 0)] + h[(1, 1)] - init.trace[0]).norm());
    }
    out.checks.le("level0_shape", shape, 1e-9);
    out.file("moments.csv", seq.to_csv());

    if let Some(r) = &cfg.realization {
        let traj = evolve(r, &ParamsSpec::Sl, cfg.interval, cfg.t2_0, steps)?;
        trajectory_details(&mut out, &traj);
        let defect = traj.gamma_star.iter().map(sl_structure_defect).fold(0.0, f64::max);
        out.checks.le("sl_structure", defect, 1e-7);
        out.checks.le("gamma_star_vs_model", gamma_star_mismatch(&traj, |t| model.target_gamma_star(t))?, 1e-6);
        let u0 = vesselkit_core::json::matrix_from_json(&cfg.u0.iter().map(|&z| vec![z]).collect(), 1)?;
        let lde = sl_output_lde_check(&traj, vesselkit_core::json::complex_from_json(cfg.lambda), &u0, |t| model.q(t))?;
        out.checks.le("output_lde", lde, 1e-4);
        let mut beta_gap: f64 = 0.0;
        for k in 0..traj.grid.len() {
            let (b, _) = sl_beta_from_trajectory(&traj, k)?;
            beta_gap = beta_gap.max((b - model.beta(traj.grid.t(k))?).abs());
        }
        out.detail("max_beta_gap", beta_gap);
        out.file("trajectory.csv", traj.to_csv());
    }
    Ok(out)
}

fn nls_model(cfg: &NlsModelRun, opts: &RunOptions) -> Result<Outcome> {
    let model = NlsModel::new(Arc::new(cfg.beta.clone()));
    let steps = steps_of(cfg.steps, opts);
    let grid = model_grid(cfg.interval, steps)?;
    let mut out = Outcome::new("nls_model");
    let mut curves = Csv::new(&["t2", "beta_re", "beta_im"]);
    for t in grid.times() {
        let b = model.beta(t)?;
        curves.row(&[Field::F(t), Field::F(b.re), Field::F(b.im)]);
    }
    out.file("curves.csv", curves.finish());
    let init = NlsInitial { h11: padded(&cfg.initial.h11, cfg.levels), h22: padded(&cfg.initial.h22, cfg.levels) };
    let seq = generate_moments_nls(model.beta_fn().as_ref(), &grid, &init, cfg.levels)?;
    // Level 0: H¹² = β, H²¹ = β̄, and (H¹¹ + H²²)' = ββ̄ − β̄β = 0.
    let mut shape: f64 = 0.0;
    for (k, hs) in seq.h.iter().enumerate() {
        let (b, h) = (model.beta(grid.t(k))?, &hs[0]);
        shape = shape.max((h[(0, 1)] - b).norm().max((h[(1, 0)] - b.conj()).norm()) / (1.0 + b.norm()));
        shape = shape.max((h[(0, 0)] + h[(1, 1)] - init.h11[0] - init.h22[0]).norm());
    }
    out.checks.le("level0_shape", shape, 1e-9);
    out.file("moments.csv", seq.to_csv());

    if let Some(r) = &cfg.realization {
        let traj = Arc::new(evolve(r, &ParamsSpec::Nls, cfg.interval, cfg.t2_0, steps)?);
        trajectory_details(&mut out, &traj);
        let defect = traj.gamma_star.iter().map(nls_structure_defect).fold(0.0, f64::max);
        out.checks.le("nls_structure", defect, 1e-7);
        let levels = cfg.levels;
        let beta = TrajectoryBeta { traj: traj.clone(), kind: BetaKind::Nls };
        let gen = generate_moments_nls(&beta, &traj.grid, &nls_initial_from_trajectory(&traj, levels)?, levels)?;
        out.checks.le("moment_round_trip", gen.max_difference(&trajectory_moment_sequence(&traj, levels)?)?, 1e-5);
        out.file("trajectory.csv", traj.to_csv());
    }
    Ok(out)
}

/// SL moments generated from the β of a trajectory, compared with the trajectory's own moments.
pub fn sl_round_trip(traj: &Arc<VesselTrajectory>, levels: usize) -> Result<f64> {
    let beta = TrajectoryBeta { traj: traj.clone(), kind: BetaKind::Sl };
    let init = sl_initial_from_trajectory(traj, levels)?;
    let gen = generate_moments_sl(&beta, &traj.grid, &init, levels)?;
    Ok(gen.max_difference(&trajectory_moment_sequence(traj, levels)?)?)
}

// ---------------------------------------------------------------- np_solve

fn np_problem(cfg: &NpSolve) -> Result<NpProblem> {
    match (cfg.fixture, &cfg.params) {
        (Some(NodeFixture::FixD), None) if cfg.nodes.is_empty() => Ok(fix_d_problem()?),
        (None, Some(p)) => Ok(NpProblem::new(p.build(interval(cfg.interval))?, cfg.nodes.clone(), cfg.t2_ref)?),
        _ => Err(CliError::ConfigInvalid("np_solve needs either a fixture or params with nodes".into())),
    }
}

/// Solves a same-t₂ problem and checks the solution, its trajectory and the positive pair.
pub fn np_solve_checks(out: &mut Outcome, prob: &NpProblem, steps: usize, kernel_points: &[C64], omegas: &[f64]) -> Result<()> {
    let feas = feasibility_same_t2(prob)?;
    out.detail("gram", matrix_value(&feas.gram));
    out.detail("gram_lambda_min", feas.lambda_min);
    out.detail("xtildes", &feas.xtildes);
    out.checks.flag("feasible", feas.feasible);
    if !feas.feasible {
        return Ok(());
    }
    let (a, b) = prob.params.interval;
    let sol = solve_same_t2(prob, &OdeGrid::new(a, b, steps)?)?;
    let traj = &sol.trajectory;
    let node_steps = prob.steps();
    out.checks.le("node_conditions", node_residual(&sol.realization, &node_steps)?, 1e-9);
    inner_checks(&mut out.checks, "", &sol.realization, &fixed_rhp_points())?;
    let t2s = sample_times(traj, 5);
    let lambdas = [c(1.0, 1.0), c(1.0, -1.0), c(2.0, 0.0)];
    vessel_checks(&mut out.checks, traj, &lambdas, &t2s, 1e-5)?;
    out.checks.le("transported_nodes", transported_residual(traj, &node_steps, &t2s)?, 1e-5);
    if traj.dim() > 0 {
        moment_checks(&mut out.checks, traj, &t2s, 8)?;
    }
    let theta = theta_trajectory(&node_steps, traj)?;
    let pair = PositivePair::new(&theta, traj)?;
    let mut ident: f64 = 0.0;
    for &t in &t2s {
        for &l in &[c(2.0, 0.0), c(0.5, 1.0), c(3.0, -2.0)] {
            ident = ident.max(pair.eval(l, t)?.identity_residual);
        }
    }
    out.checks.le("positive_pair_identity", ident, 1e-9);
    let (gram, lmin) = pair.kernel_gram(kernel_points, t2s[t2s.len() / 2])?;
    out.checks.ge("kernel_gram_lambda_min", lmin, -1e-8);
    out.detail("kernel_gram", matrix_value(&gram));
    out.detail("realization", &sol.realization);
    trajectory_details(out, traj);

    let mut s = Csv::new(&["omega", "row", "col", "re", "im"]);
    for &w in omegas {
        matrix_rows(&mut s, &[Field::F(w)], &sol.realization.eval_transfer(c(0.0, w))?);
    }
    out.file("s_axis.csv", s.finish());
    out.file("trajectory.csv", traj.to_csv());
    Ok(())
}

fn np_solve(cfg: &NpSolve, opts: &RunOptions) -> Result<Outcome> {
    let prob = np_problem(cfg)?;
    let mut out = Outcome::new("np_solve");
    if cfg.fixture == Some(NodeFixture::FixD) {
        let feas = feasibility_same_t2(&prob)?;
        let gap = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|ij| (feas.gram[ij] - fix_d_gram()[ij]).norm())
            .fold(0.0, f64::max);
        out.checks.le("gram_closed_form", gap, 1e-12);
    }
    let mut omegas = cfg.omegas.clone();
    omegas.sort_by(f64::total_cmp);
    np_solve_checks(&mut out, &prob, steps_of(cfg.steps, opts), &complexes(&cfg.kernel_points), &omegas)?;
    Ok(out)
}

// ---------------------------------------------------------------- np_verify

fn np_verify(cfg: &NpVerify, opts: &RunOptions) -> Result<Outcome> {
    if cfg.candidates.len() < 2 {
        return Err(CliError::ConfigInvalid("np_verify needs at least two candidates".into()));
    }
    let params = cfg.params.build(interval(cfg.interval))?;
    let cands: Vec<MultiT2Candidate> =
        cfg.candidates.iter().map(|c| MultiT2Candidate { s0: c.s0.build(), node: c.node.clone() }).collect();
    let mut mopts = MultiT2Options::default();
    if let Some(s) = opts.steps.or(cfg.steps) {
        mopts.grid_steps = s;
        mopts.contour_ode_steps = s;
    }
    if let Some(n) = cfg.contour_nodes {
        mopts.contour_nodes = n;
    }
    let rep = multi_t2_verify(&cands, &params, &mopts)?;
    let mut out = Outcome::new("np_verify");
    let mut csv = Csv::new(&["i", "j", "similarity_residual", "x_residual", "contour_residual", "ok"]);
    for p in &rep.pairs {
        csv.row(&[
            Field::U(p.i),
            Field::U(p.j),
            Field::F(p.similarity_residual),
            Field::F(p.x_residual),
            Field::F(p.contour_residual),
            Field::U(p.ok as usize),
        ]);
    }
    let failures: Vec<serde_json::Value> = rep
        .pairs
        .iter()
        .filter_map(|p| p.failure.as_ref().map(|f| json!({"i": p.i, "j": p.j, "failure": f})))
        .collect();
    out.detail("invertible", &rep.invertible);
    out.detail("failures", failures);
    out.checks.le(
        "similarity",
        rep.pairs.iter().map(|p| p.similarity_residual).fold(0.0, f64::max),
        mopts.similarity_tol,
    );
    out.checks.le("contour", rep.pairs.iter().map(|p| p.contour_residual).fold(0.0, f64::max), mopts.contour_tol);
    out.checks.flag("x_invertible", rep.invertible.iter().all(|&b| b));
    out.checks.flag("verdict", rep.verdict);
    out.file("pairs.csv", csv.finish());
    Ok(out)
}

// ---------------------------------------------------------------- residual_suite

/// max ‖B_contour − B_ode‖_F over the sample times.
pub fn contour_gap(traj: &VesselTrajectory, r0: &Realization, params: &VesselParams, t2s: &[f64]) -> Result<f64> {
    let quad = ContourSpec::enclosing(r0.a1(), 64);
    let gaps = t2s
        .par_iter()
        .map(|&t| {
            let b = b_via_contour(r0, params, traj.t2_0, t, quad, traj.grid.steps)?;
            Ok(fro(&(b - &traj.b[traj.index_of(t)?])))
        })
        .collect::<vesselkit_core::Result<Vec<f64>>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}

/// Ratios of the intertwining residual and the Lyapunov drift between 25- and 50-step grids.
pub fn halving_ratios(r0: &Realization, params: &VesselParams, lambdas: &[C64]) -> Result<(f64, f64)> {
    let (a, b) = params.interval;
    let run = |steps| -> Result<(f64, f64)> {
        let t = evolve_vessel(r0, params, a, &OdeGrid::new(a, b, steps)?)?;
        Ok((intertwining_residual(&t, lambdas, &[b])?, lyapunov_drift(&t)?))
    };
    let (i1, l1) = run(25)?;
    let (i2, l2) = run(50)?;
    Ok((i1 / i2, l1 / l2))
}

fn residual_suite(cfg: &ResidualSuite, opts: &RunOptions) -> Result<Outcome> {
    let steps = steps_of(cfg.steps, opts);
    let lambdas = complexes(&cfg.lambdas);
    let mut out = Outcome::new("residual_suite");
    let grid = OdeGrid::new(0.0, 1.0, steps)?;
    match cfg.fixture {
        SuiteFixture::FixB => {
            out.detail("fixture", "fix_b");
            let params = fix_b_params();
            let traj = evolve_vessel(&fix_a(), &params, 0.0, &grid)?;
            let t2s = cfg.t2s.iter().map(|&t| traj.grid.t(traj.grid.index_of(t).unwrap_or(0))).collect::<Vec<_>>();
            let k1 = traj.index_of(1.0)?;
            out.checks.le("b_at_1", (traj.b[k1][(0, 0)] - c(E, 0.0)).norm(), 1e-8);
            out.checks.le("x_at_1", (traj.x[k1][(0, 0)] - c(E * E / 2.0, 0.0)).norm(), 1e-8);
            out.checks.le("gamma_star_zero", traj.gamma_star.iter().map(fro).fold(0.0, f64::max), 1e-8);
            vessel_checks(&mut out.checks, &traj, &lambdas, &t2s, 1e-8)?;
            inner_checks(&mut out.checks, "", &traj.realization_at(k1)?, &fixed_rhp_points())?;
            moment_checks(&mut out.checks, &traj, &t2s, 8)?;
            out.checks.le("contour_vs_ode", contour_gap(&traj, &fix_a(), &params, &t2s)?, 1e-5);
            trajectory_details(&mut out, &traj);
            out.file("trajectory.csv", traj.to_csv());
            out.file("tau.csv", tau_csv(&traj)?);
        }
        SuiteFixture::FixC => {
            out.detail("fixture", "fix_c");
            let params = sl_params();
            let traj = Arc::new(evolve_vessel(&fix_c(), &params, 0.0, &grid)?);
            let t2s = sample_times(&traj, 5);
            let defect = traj.gamma_star.iter().map(sl_structure_defect).fold(0.0, f64::max);
            out.checks.le("sl_structure", defect, 1e-6);
            // π₁₁ read from γ* against β' − β² of the trajectory's own β.
            let mut pi_gap: f64 = 0.0;
            for k in 0..traj.grid.len() {
                let (b, db) = sl_beta_from_trajectory(&traj, k)?;
                let pi = -traj.gamma_star[k][(0, 0)].im;
                pi_gap = pi_gap.max((pi - (db - b * b)).abs());
            }
            out.checks.le("pi11", pi_gap, 1e-6);
            let u0 = vesselkit_core::matcore::real_matrix(2, 1, &[1.0, 0.0]);
            let q = |s: f64| trajectory_potential(&traj, traj.index_of(s)?);
            let lde = sl_output_lde_check(&traj, c(2.0, 0.0), &u0, q)?;
            out.checks.le("output_lde", lde, 1e-4);
            vessel_checks(&mut out.checks, &traj, &lambdas, &t2s, 1e-5)?;
            moment_checks(&mut out.checks, &traj, &t2s, 8)?;
            out.checks.le("moment_round_trip", sl_round_trip(&traj, 3)?, 1e-5);
            out.checks.le("contour_vs_ode", contour_gap(&traj, &fix_c(), &params, &t2s)?, 1e-5);
            let (ri, rl) = halving_ratios(&fix_c(), &params, &lambdas)?;
            out.checks.ge("halving_intertwining", ri, 8.0);
            out.checks.ge("halving_lyapunov", rl, 8.0);
            trajectory_details(&mut out, &traj);
            out.file("trajectory.csv", traj.to_csv());
        }
        SuiteFixture::Soliton => {
            out.detail("fixture", "soliton");
            let params = sl_params();
            let traj = evolve_vessel(&fix_soliton(), &params, 0.0, &grid)?;
            let model = SlModel::from_expression("-1 - tanh")?;
            out.checks.le("gamma_star_vs_model", gamma_star_mismatch(&traj, |t| model.target_gamma_star(t))?, 1e-6);
            let u0 = vesselkit_core::matcore::real_matrix(2, 1, &[1.0, 0.5]);
            let sech2 = |t: f64| 1.0 / t.cosh().powi(2);
            let lde = sl_output_lde_check(&traj, c(2.0, 0.0), &u0, |t| Ok(-2.0 * sech2(t)))?;
            out.checks.le("output_lde", lde, 1e-4);
            let mut qgap: f64 = 0.0;
            for k in 0..traj.grid.len() {
                qgap = qgap.max((trajectory_potential(&traj, k)? + 2.0 * sech2(traj.grid.t(k))).abs());
            }
            out.checks.le("potential", qgap, 1e-6);
            trajectory_details(&mut out, &traj);
            out.file("trajectory.csv", traj.to_csv());
        }
        SuiteFixture::FixD => {
            out.detail("fixture", "fix_d");
            let prob = fix_d_problem()?;
            let feas = feasibility_same_t2(&prob)?;
            let gap = fro(&(&feas.gram - fix_d_gram()));
            out.checks.le("gram_closed_form", gap, 1e-12);
            let kp = [c(1.0, 0.0), c(1.0, 1.0), c(2.0, 0.0)];
            np_solve_checks(&mut out, &prob, steps, &kp, &axis_samples(AXIS_SAMPLES))?;
        }
    }
    out.detail("lambdas", lambdas.iter().map(|&l| complex_value(l)).collect::<Vec<_>>());
    Ok(out)
}

/// Everything `vesselkit fixtures` prints.
pub fn fixtures_json() -> Result<serde_json::Value> {
    let prob = fix_d_problem()?;
    let params = |p: &VesselParams| {
        let t = p.interval.0;
        json!({
            "interval": [p.interval.0, p.interval.1],
            "sigma1": matrix_value(&p.sigma1(t)),
            "sigma2": matrix_value(&p.sigma2(t)),
            "gamma": matrix_value(&p.gamma(t)),
        })
    };
    Ok(json!({
        "fix_a": fix_a(),
        "fix_b_params": params(&fix_b_params()),
        "fix_c": fix_c(),
        "sl_params": params(&sl_params()),
        "soliton": fix_soliton(),
        "fix_d": {
            "nodes": prob.nodes,
            "t2_ref": prob.t2_ref,
            "gram": matrix_value(&fix_d_gram()),
        },
    }))
}
