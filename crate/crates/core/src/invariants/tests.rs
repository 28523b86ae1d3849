use super::*;
use crate::model::Domain;

fn abel(p: &str, q: &str, r: &str, s: &str, min: f64, max: f64) -> ClassicalAbel {
    let [p, q, r, s] = [p, q, r, s].map(|t| t.parse::<Expr>().unwrap());
    ClassicalAbel::new(p, q, r, s, Domain::new(min, max, 21).unwrap()).unwrap()
}

#[test]
fn constant_sequence() {
    let seq = relative_invariants(&abel("1", "0", "1", "1", 0.0, 1.0), 4).unwrap();
    for (w, want) in [(3, 1.0), (5, -3.0), (7, 15.0), (9, -105.0)] {
        for v in seq.get(w).unwrap() {
            assert!((v - want).abs() <= 1e-12, "S{w} = {v}");
        }
    }
    assert_eq!(seq.weights, vec![3, 5, 7, 9]);
}

#[test]
fn pure_source_term() {
    let seq = relative_invariants(&abel("1", "0", "0", "2.5", 0.0, 1.0), 2).unwrap();
    assert!(seq.get(3).unwrap().iter().all(|v| *v == 2.5));
    assert!(seq.get(5).unwrap().iter().all(|v| *v == 0.0));
    let seq = relative_invariants(&abel("1", "0", "0.7", "2", 0.0, 1.0), 2).unwrap();
    assert!(seq.get(5).unwrap().iter().all(|v| (v + 3.0 * 2.0 * 0.7).abs() < 1e-12));
}

#[test]
fn count_below_two_rejected() {
    let err = relative_invariants(&abel("1", "0", "0", "1", 0.0, 1.0), 1).unwrap_err();
    assert!(matches!(err, InvariantError::TooShort { .. }));
}

#[test]
fn absolute_constant_values() {
    let seq = relative_invariants(&abel("1", "0", "1", "1", 0.0, 1.0), 4).unwrap();
    let inv = absolute_invariants(&seq, 1e-9).unwrap();
    for (a, want) in [(&inv.i1, -27.0), (&inv.i2, 5.0 / 3.0), (&inv.i3, -105.0)] {
        assert_eq!(a.constant, Some(true));
        assert!((a.mean().unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn absolute_degenerate() {
    let seq = relative_invariants(&abel("1", "0", "0", "3", 0.0, 1.0), 4).unwrap();
    let inv = absolute_invariants(&seq, 1e-9).unwrap();
    assert_eq!(inv.i1.constant, Some(true));
    assert_eq!(inv.i1.mean(), Some(0.0));
    assert_eq!(inv.i2.constant, None);
    assert_eq!(inv.i2.excluded.len(), 21);
    let seq = relative_invariants(&abel("1", "0", "0", "exp(x)+x^2", 0.5, 2.0), 4).unwrap();
    let inv = absolute_invariants(&seq, 1e-9).unwrap();
    assert_eq!(inv.i1.constant, Some(false));
}

#[test]
fn profile_matching() {
    let a = abel("1", "0", "1", "1", 0.0, 1.0);
    let same = invariant_profile_match(&a, &a, 1e-9).unwrap();
    assert_eq!(same.verdict, MatchVerdict::Candidate);
    assert_eq!(same.gap, 0.0);
    let b = abel("1", "0", "2", "1", 0.0, 1.0);
    let diff = invariant_profile_match(&a, &b, 1e-9).unwrap();
    assert_eq!(diff.verdict, MatchVerdict::Distinct);
    assert!((diff.gap - (216.0 - 27.0)).abs() < 1e-6, "{}", diff.gap);
    let c = abel("1", "0", "0", "exp(x)+x^2", 0.0, 1.0);
    assert_eq!(invariant_profile_match(&a, &c, 1e-9).unwrap().verdict, MatchVerdict::Distinct);
    let n = abel("1", "0", "x", "1", 0.5, 1.5);
    assert_eq!(invariant_profile_match(&n, &n, 1e-9).unwrap().verdict, MatchVerdict::Candidate);
}

#[test]
fn normal_form_trivial() {
    let eq = abel("1", "0", "0", "sin(x)", 0.5, 1.5);
    let nf = normal_form(&eq, &Tolerances::default(), 1e-9).unwrap();
    for i in 0..nf.xs.len() {
        assert!((nf.omega[i] - 1.0).abs() < 1e-14);
        assert!((nf.xi[i] - (nf.xs[i] - 0.5)).abs() < 1e-12);
        assert!((nf.invariant[i] - nf.xs[i].sin()).abs() < 1e-12);
    }
    assert!(!nf.constant);
    let nf = normal_form(&abel("1", "0", "0", "2", 0.0, 1.0), &Tolerances::default(), 1e-9).unwrap();
    assert!(nf.constant);
}

#[test]
fn normal_form_rejects_vanishing_p() {
    let err = normal_form(&abel("x", "0", "0", "1", -1.0, 1.0), &Tolerances::default(), 1e-9).unwrap_err();
    assert!(matches!(err, InvariantError::LeadingVanishes { .. }));
}

#[test]
fn normal_form_subdomain_covariance() {
    let full = abel("1 + x^2", "x", "cos(x)", "1", 0.0, 2.0);
    let sub = ClassicalAbel { domain: Domain::new(1.0, 2.0, 11).unwrap(), ..full.clone() };
    let tol = Tolerances::default();
    let nf_full = normal_form(&full, &tol, 1e-9).unwrap();
    let nf_sub = normal_form(&sub, &tol, 1e-9).unwrap();
    // Re-anchoring ω at x = 1 divides it by ω_full(1), so I scales by ω_full(1)³.
    let w1 = nf_full.omega[10];
    for (j, x) in nf_sub.xs.iter().enumerate() {
        let i = 10 + j;
        assert!((nf_full.xs[i] - x).abs() < 1e-12);
        let want = nf_full.invariant[i] * w1.powi(3);
        assert!((nf_sub.invariant[j] - want).abs() <= 1e-9 * want.abs().max(1.0), "{x}");
    }
}

#[test]
fn cubic_shift_reduction() {
    // y' = (y - 1)³
    let eq = abel("1", "-3", "3", "-1", 0.0, 0.4);
    let red = classical_particular_reduction(&eq, &Expr::constant(1.0), 1e-8, &Tolerances::default()).unwrap();
    assert!(red.separable);
    for i in 0..red.xs.len() {
        assert!((red.e[i] - 1.0).abs() < 1e-14);
        assert!((red.phi1[i] - 1.0).abs() < 1e-14);
        assert_eq!(red.phi2[i], 0.0);
    }
    let ys = red.separable_solution(1.0, 1.0).unwrap();
    for (x, y) in red.xs.iter().zip(ys) {
        let exact = 1.0 + 1.0 / (1.0 - 2.0 * x).sqrt();
        assert!((y.unwrap() - exact).abs() < 1e-12);
    }
}

#[test]
fn reduction_rejects_non_solution() {
    let eq = abel("1", "0", "0", "2", 0.0, 1.0);
    let err = classical_particular_reduction(&eq, &Expr::zero(), 1e-8, &Tolerances::default()).unwrap_err();
    assert!(matches!(err, InvariantError::NotParticular { residual, .. } if residual == 2.0));
}

#[test]
fn nonseparable_reduction() {
    // y1 = 0 solves y' = y³ + x y² + y; Φ2 = x E ≠ 0.
    let eq = abel("1", "x", "1", "0", 0.0, 1.0);
    let red = classical_particular_reduction(&eq, &Expr::zero(), 1e-8, &Tolerances::default()).unwrap();
    assert!(!red.separable);
    assert!(red.separable_solution(1.0, 1.0).is_none());
    for i in 0..red.xs.len() {
        assert!((red.e[i] - red.xs[i].exp()).abs() < 1e-12);
    }
}
