use super::*;
use crate::expr::Expr;
use crate::model::{lienard_to_abel, Domain};
use crate::solvers::{
    chiellini_g, solve_riccati, solve_theorem1, solve_theorem2, solve_theorem3, solve_theorem4, Branch, SolveOptions,
    SolverError,
};

fn e(s: &str) -> Expr {
    s.parse().unwrap()
}

fn problem(n: f64, m: f64, coeffs: [&str; 4], min: f64, max: f64, samples: usize) -> LienardProblem {
    let [f, k, g, h] = coeffs.map(e);
    LienardProblem::new(n, m, f, k, g, h, Domain::new(min, max, samples).unwrap()).unwrap()
}

fn t1_problem(samples: usize) -> LienardProblem {
    problem(2.0, 3.0, ["1", "-1", "3", "1"], 0.0, 1.0, samples)
}

fn tol() -> Tolerances {
    Tolerances::default()
}

#[test]
fn constant_curve_is_exact() {
    let prob = t1_problem(21);
    let opts = SolveOptions::default();
    for (branch, root) in [(Branch::Plus, 2f64.sqrt() - 1.0), (Branch::Minus, -(2f64.sqrt()) - 1.0)] {
        let curve = solve_theorem1(&prob, 0.0, branch, 0.0, &opts).unwrap();
        for (_, v, _) in curve.samples() {
            assert!((v - root).abs() < 1e-12);
        }
        let abel = abel_residual(&curve, &lienard_to_abel(&prob)).unwrap();
        assert!(abel.max_rel <= 1e-12, "{abel:?}");
        let lien = lienard_residual(&curve, &prob).unwrap();
        assert!(lien.max_rel <= 1e-10, "{lien:?}");
    }
}

#[test]
fn theorem1_nonconstant_curve() {
    let prob = t1_problem(201);
    let curve = solve_theorem1(&prob, 1.0, Branch::Plus, 0.0, &SolveOptions::default()).unwrap();
    let abel = abel_residual(&curve, &lienard_to_abel(&prob)).unwrap();
    assert!(abel.max_rel <= 1e-8, "{abel:?}");
    let oracle = crosscheck_reference(&curve, &prob, &tol()).unwrap();
    assert!(oracle.max_rel <= 1e-6, "{oracle:?}");
    let lien = lienard_residual(&curve, &prob).unwrap();
    assert!(lien.max_rel <= 1e-5, "{lien:?}");
}

#[test]
fn theorem1_radicand_failure() {
    let prob = t1_problem(21);
    let err = solve_theorem1(&prob, -0.1, Branch::Plus, 0.0, &SolveOptions::default()).unwrap_err();
    assert!(matches!(err, SolverError::Radicand { .. }), "{err:?}");
}

#[test]
fn corrupted_curve_is_detected() {
    let prob = t1_problem(21);
    let mut curve = solve_theorem1(&prob, 1.0, Branch::Plus, 0.0, &SolveOptions::default()).unwrap();
    for v in &mut curve.vs {
        *v += 0.1;
    }
    let abel = abel_residual(&curve, &lienard_to_abel(&prob)).unwrap();
    assert!(abel.max_rel > 1e-2, "{abel:?}");
}

#[test]
fn tangent_curve() {
    let prob = problem(3.0, 1.0, ["1", "1", "0", "0"], 0.2, 1.0, 401);
    let curve = solve_riccati(&prob.f, &prob.k, 0.0, 0.2, &prob.domain, 0.0, &SolveOptions::default()).unwrap();
    let abel = abel_residual(&curve, &lienard_to_abel(&prob)).unwrap();
    assert!(abel.max_rel <= 1e-8, "{abel:?}");
    let lien = lienard_residual(&curve, &prob).unwrap();
    assert!(lien.max_rel <= 1e-6, "{lien:?}");
}

#[test]
fn riccati_against_oracle() {
    let prob = problem(3.0, 1.0, ["1/y^2", "1", "0", "0"], 1.0, 2.0, 101);
    let curve = solve_riccati(&prob.f, &prob.k, -1.0, 0.0, &prob.domain, 0.0, &SolveOptions::default()).unwrap();
    let oracle = crosscheck_reference(&curve, &prob, &tol()).unwrap();
    assert!(oracle.max_rel <= 1e-6, "{oracle:?}");
    let mut corrupted = curve.clone();
    corrupted.xs.iter_mut().for_each(|x| *x *= 1.05);
    // The stretched x range runs past the turning point v = 0, where the
    // reference solution itself blows up.
    match crosscheck_reference(&corrupted, &prob, &tol()) {
        Ok(dev) => assert!(dev.max_rel > 1e-2, "{dev:?}"),
        Err(err) => assert!(matches!(err, VerifyError::Oracle { .. }), "{err:?}"),
    }
}

#[test]
fn sign_change_segment_rejected() {
    let prob = problem(3.0, 1.0, ["1", "1", "0", "0"], -0.5, 0.5, 41);
    let curve = solve_riccati(&prob.f, &prob.k, 0.0, 0.0, &prob.domain, 0.0, &SolveOptions::default()).unwrap();
    let err = lienard_residual_on(&curve, &prob, 0..curve.len()).unwrap_err();
    assert!(matches!(err, VerifyError::SignChange { .. }), "{err:?}");
}

fn t2_problem() -> LienardProblem {
    problem(2.0, 3.0, ["-1/(6*y+1)", "-7*(3*(6*y+1))^(-1.5)", "0", "1"], 1.0, 2.0, 201)
}

fn t2_k0(theta1: f64) -> f64 {
    // K0 h/A = e^G at y = 1, A = √(3/(6y+1)).
    chiellini_g(theta1, 1.0).unwrap().exp() * (3.0f64 / 7.0).sqrt()
}

#[test]
fn theorem2_curves() {
    let prob = t2_problem();
    let opts = SolveOptions::default();
    for (branch, theta1) in [(Branch::Plus, 0.5), (Branch::Minus, -0.5)] {
        let curve = solve_theorem2(&prob, 1.0, t2_k0(theta1), branch, 0.0, &opts).unwrap();
        let abel = abel_residual(&curve, &lienard_to_abel(&prob)).unwrap();
        assert!(abel.max_rel <= 1e-6, "{branch:?} {abel:?}");
        let oracle = crosscheck_reference(&curve, &prob, &tol()).unwrap();
        assert!(oracle.max_rel <= 1e-5, "{branch:?} {oracle:?}");
    }
}

#[test]
fn theorem2_theta_one_leaves_range() {
    let err = solve_theorem2(&t2_problem(), 1.0, t2_k0(1.0), Branch::Plus, 0.0, &SolveOptions::default()).unwrap_err();
    assert!(matches!(err, SolverError::ThetaOutOfRange { at, .. } if at > 1.7 && at < 1.8), "{err:?}");
}

#[test]
fn theorem2_rejects_zero_s() {
    let err = solve_theorem2(&t2_problem(), 0.0, 1.0, Branch::Plus, 0.0, &SolveOptions::default()).unwrap_err();
    assert_eq!(err, SolverError::ZeroS);
}

fn t3_problem() -> LienardProblem {
    problem(2.0, 3.0, ["1/y - 0.75*y^2", "-y^3/4", "0", "1"], 1.0, 1.5, 201)
}

#[test]
fn theorem3_curve() {
    let prob = t3_problem();
    let curve = solve_theorem3(&prob, &e("y"), 0.25, (1.0, 0.01), 0.0, &SolveOptions::default()).unwrap();
    let abel = abel_residual(&curve, &lienard_to_abel(&prob)).unwrap();
    assert!(abel.max_rel <= 1e-6, "{abel:?}");
    let oracle = crosscheck_reference(&curve, &prob, &tol()).unwrap();
    assert!(oracle.max_rel <= 1e-5, "{oracle:?}");
}

#[test]
fn theorem3_leaves_segment() {
    let err = solve_theorem3(&t3_problem(), &e("y"), 0.25, (1.0, 1.0), 0.0, &SolveOptions::default()).unwrap_err();
    assert!(matches!(err, SolverError::ThetaOutOfRange { .. }), "{err:?}");
    let err = solve_theorem3(&t3_problem(), &e("y"), 0.25, (3.0, 0.01), 0.0, &SolveOptions::default()).unwrap_err();
    assert!(matches!(err, SolverError::AnchorOutside { .. }), "{err:?}");
}

#[test]
fn theorem4_matches_riccati() {
    let prob = problem(3.0, 1.0, ["1/y^2", "1", "0", "0"], 1.0, 2.0, 101);
    let opts = SolveOptions::default();
    let ric = solve_riccati(&prob.f, &prob.k, -1.0, 0.0, &prob.domain, 0.0, &opts).unwrap();
    let t4 = solve_theorem4(&prob, -1.0, 1.0, (1.0, -0.5), 0.0, &opts).unwrap();
    for i in 0..ric.len() {
        assert!((ric.vs[i] - t4.vs[i]).abs() <= 1e-8, "{}", ric.ys[i]);
    }
    let abel = abel_residual(&t4, &lienard_to_abel(&prob)).unwrap();
    assert!(abel.max_rel <= 1e-6, "{abel:?}");
}

#[test]
fn scale_invariance() {
    let base = problem(2.0, 3.0, ["1", "-1", "3", "1"], 0.0, 1.0, 21);
    let curve = solve_theorem1(&base, 1.0, Branch::Plus, 0.0, &SolveOptions::default()).unwrap();
    let mut flat = curve.clone();
    flat.vs.iter_mut().for_each(|v| *v = 0.5);
    let r1 = abel_residual(&flat, &lienard_to_abel(&base)).unwrap();
    let scaled = problem(2.0, 3.0, ["2.5", "-2.5", "7.5", "2.5"], 0.0, 1.0, 21);
    let r2 = abel_residual(&flat, &lienard_to_abel(&scaled)).unwrap();
    assert!((r1.max_rel - r2.max_rel).abs() <= 1e-12, "{} {}", r1.max_rel, r2.max_rel);
}

#[test]
fn grid_refinement_reduces_fd_error() {
    let coarse = problem(3.0, 1.0, ["1", "1", "0", "0"], 0.2, 1.2, 41);
    let fine = problem(3.0, 1.0, ["1", "1", "0", "0"], 0.2, 1.2, 81);
    let opts = SolveOptions::default();
    let rc = {
        let c = solve_riccati(&coarse.f, &coarse.k, 0.0, 0.2, &coarse.domain, 0.0, &opts).unwrap();
        abel_residual(&c, &lienard_to_abel(&coarse)).unwrap().max_rel
    };
    let rf = {
        let c = solve_riccati(&fine.f, &fine.k, 0.0, 0.2, &fine.domain, 0.0, &opts).unwrap();
        abel_residual(&c, &lienard_to_abel(&fine)).unwrap().max_rel
    };
    assert!(rf * 4.0 <= rc, "{rc} {rf}");
}

#[test]
fn too_few_samples() {
    let prob = problem(2.0, 3.0, ["1", "-1", "3", "1"], 0.0, 1.0, 4);
    let curve = solve_theorem1(&prob, 0.0, Branch::Plus, 0.0, &SolveOptions::default()).unwrap();
    let err = abel_residual(&curve, &lienard_to_abel(&prob)).unwrap_err();
    assert!(matches!(err, VerifyError::TooFewSamples { .. }));
}
