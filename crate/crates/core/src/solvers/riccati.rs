use std::f64::consts::PI;

use crate::conditions::check_riccati;
use crate::expr::Expr;
use crate::model::{eval_named, Domain, ExprIntegral};
use crate::numerics::find_root;

use super::{require_close, CurveBuilder, SolutionCurve, SolveOptions, SolverError, TheoremId};

/// Shape of the solution of `dθ/dΦ = θ² - Kθ + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiccatiForm {
    /// `K² < 4`: `θ = c tan(c ψ) + K/2`, `c = √(1 - K²/4)`.
    Trigonometric { c: f64 },
    /// `K² = 4`: `θ = K/2 - 1/ψ`.
    Rational,
    /// `K² > 4`: `θ = K/2 - d tanh(d ψ)`, `d = √(K²/4 - 1)`.
    Hyperbolic { d: f64 },
}

impl RiccatiForm {
    pub fn of(big_k: f64) -> RiccatiForm {
        let disc = 1.0 - big_k * big_k / 4.0;
        if disc > 0.0 {
            RiccatiForm::Trigonometric { c: disc.sqrt() }
        } else if disc == 0.0 {
            RiccatiForm::Rational
        } else {
            RiccatiForm::Hyperbolic { d: (-disc).sqrt() }
        }
    }
}

/// θ at `ψ = Φ + C` where `Φ = ∫ f/√(f/k)` and `v = √(f/k) θ`.
pub fn riccati_theta(psi: f64, big_k: f64) -> f64 {
    match RiccatiForm::of(big_k) {
        RiccatiForm::Trigonometric { c } => c * (c * psi).tan() + big_k / 2.0,
        RiccatiForm::Rational => big_k / 2.0 - 1.0 / psi,
        RiccatiForm::Hyperbolic { d } => big_k / 2.0 - d * (d * psi).tanh(),
    }
}

// Values ψ in [lo, hi] where θ(ψ) has a pole.
fn poles(form: RiccatiForm, lo: f64, hi: f64) -> Vec<f64> {
    match form {
        RiccatiForm::Trigonometric { c } => {
            let first = ((c * lo - PI / 2.0) / PI).ceil() as i64;
            let last = ((c * hi - PI / 2.0) / PI).floor() as i64;
            (first..=last).map(|j| (PI / 2.0 + j as f64 * PI) / c).collect()
        }
        RiccatiForm::Rational if lo <= 0.0 && hi >= 0.0 => vec![0.0],
        _ => Vec::new(),
    }
}

/// Solution of `v' = f + k v²` under `(√(f/k))' = K f`:
/// `v = √(f/k) θ(Φ + C)` with `Φ = ∫_{y_min}^y f/√(f/k)`.
///
/// Poles of `v` split the curve into pieces; grid points within `1e-9`
/// (relative) of a pole are dropped. For `K² = 4` both offsets `±K/2` of the
/// rational form are built and the one solving the θ equation is kept.
pub fn solve_riccati(
    f: &Expr,
    k: &Expr,
    big_k: f64,
    c: f64,
    domain: &Domain,
    x0: f64,
    opts: &SolveOptions,
) -> Result<SolutionCurve, SolverError> {
    let report = check_riccati(f, k, domain, &opts.check)?;
    if !report.satisfied() {
        return Err(SolverError::ConditionViolated {
            condition: report.condition,
            relative: report.relative_residual(),
        });
    }
    let estimate = report.constant("K").unwrap_or(f64::NAN);
    require_close("K", big_k, estimate, 1e-6)?;
    let tol = &opts.check.numerics;
    let form = RiccatiForm::of(big_k);

    let ratio = (f / k).simplify();
    let root = ratio.clone().sqrt();
    let phi = ExprIntegral::new((f / root.clone()).simplify(), domain, tol)?;
    let grid = domain.grid();
    let psis: Vec<f64> = grid.iter().map(|&y| phi.eval(y).map(|p| p + c)).collect::<Result<_, _>>()?;
    let (lo, hi) = psis.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));

    // Pole locations in y: Φ is strictly monotone because f/√(f/k) keeps its sign.
    let mut breaks = Vec::new();
    for pole in poles(form, lo, hi) {
        let i = psis.windows(2).position(|w| (w[0] - pole) * (w[1] - pole) <= 0.0);
        if let Some(i) = i {
            let y = if psis[i] == pole {
                grid[i]
            } else if psis[i + 1] == pole {
                grid[i + 1]
            } else {
                find_root(|y| phi.eval(y).map(|p| p + c - pole).unwrap_or(f64::NAN), grid[i], grid[i + 1], tol)?
            };
            breaks.push(y);
        }
    }
    breaks.sort_by(f64::total_cmp);

    let mut notes = Vec::new();
    let mut offset = big_k / 2.0;
    if form == RiccatiForm::Rational {
        // dθ/dψ = 1/ψ² must equal θ² - Kθ + 1 for the kept candidate.
        let residual = |off: f64| {
            psis.iter()
                .filter(|p| **p != 0.0)
                .map(|&p| {
                    let theta = off - 1.0 / p;
                    let lhs = 1.0 / (p * p);
                    (lhs - (theta * theta - big_k * theta + 1.0)).abs() / lhs.max(1.0)
                })
                .fold(0.0, f64::max)
        };
        let (plus, minus) = (residual(big_k / 2.0), residual(-big_k / 2.0));
        if minus < plus {
            offset = -big_k / 2.0;
        }
        notes.push(format!(
            "rational form: offset {offset:+} kept (theta-equation residual {:.1e} vs {:.1e})",
            plus.min(minus),
            plus.max(minus)
        ));
    }
    if let RiccatiForm::Hyperbolic { .. } = form {
        notes.push("|K| > 2: hyperbolic form (extension; valid while |theta - K/2| < sqrt(K^2/4 - 1))".to_string());
    }

    let mut ys = Vec::with_capacity(grid.len());
    let mut vs = Vec::with_capacity(grid.len());
    for (i, &y) in grid.iter().enumerate() {
        if breaks.iter().any(|b| (y - b).abs() <= 1e-9 * (1.0 + y.abs())) {
            continue;
        }
        let psi = psis[i];
        let theta = match form {
            RiccatiForm::Rational => offset - 1.0 / psi,
            _ => riccati_theta(psi, big_k),
        };
        ys.push(y);
        vs.push(eval_named("sqrt(f/k)", &root, y)? * theta);
    }
    let mut builder = CurveBuilder::new(TheoremId::T5).constant("K", big_k).constant("C", c);
    for note in notes {
        builder = builder.note(note);
    }
    builder.build(ys, vs, x0, &breaks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expr {
        s.parse().unwrap()
    }

    #[test]
    fn tangent_for_unit_coefficients() {
        let domain = Domain::new(0.0, 1.2, 61).unwrap();
        let curve = solve_riccati(&e("1"), &e("1"), 0.0, 0.0, &domain, 0.0, &SolveOptions::default()).unwrap();
        for (y, v, x) in curve.samples() {
            assert!((v - y.tan()).abs() <= 1e-12 * (1.0 + y.tan().abs()), "{y}");
            assert!((x + y.cos().ln()).abs() < 1e-9, "{y} {}", x + y.cos().ln());
        }
    }

    #[test]
    fn k_minus_one_closed_form() {
        let domain = Domain::new(1.0, 2.0, 41).unwrap();
        let curve = solve_riccati(&e("1/y^2"), &e("1"), -1.0, 0.0, &domain, 0.0, &SolveOptions::default()).unwrap();
        let c = 3f64.sqrt() / 2.0;
        for (y, v, _) in curve.samples() {
            let exact = (c * (c * y.ln()).tan() - 0.5) / y;
            assert!((v - exact).abs() < 1e-12, "{y}");
        }
    }

    #[test]
    fn rational_branch_keeps_residual_selected_sign() {
        let domain = Domain::new(1.0, 2.0, 21).unwrap();
        let curve = solve_riccati(&e("1/(4*y^2)"), &e("1"), -2.0, 1.0, &domain, 0.0, &SolveOptions::default()).unwrap();
        for (y, v, _) in curve.samples() {
            let exact = (-1.0 / (0.5 * y.ln() + 1.0) - 1.0) / (2.0 * y);
            assert!((v - exact).abs() < 1e-12, "{y}");
        }
        assert!(curve.notes[0].contains("offset -1"));
    }

    #[test]
    fn poles_split_the_curve() {
        let domain = Domain::new(0.0, 4.0, 81).unwrap();
        let curve = solve_riccati(&e("1"), &e("1"), 0.0, 0.0, &domain, 0.0, &SolveOptions::default()).unwrap();
        assert_eq!(curve.pieces.len(), 2);
        let split = curve.pieces[1].start;
        assert!(curve.ys[split - 1] < PI / 2.0 && curve.ys[split] > PI / 2.0);
    }

    #[test]
    fn hyperbolic_extension_solves_theta_equation() {
        let k: f64 = 3.0;
        let h = 1e-5;
        for psi in [-0.7, 0.0, 0.4] {
            let t = riccati_theta(psi, k);
            let dt = (riccati_theta(psi + h, k) - riccati_theta(psi - h, k)) / (2.0 * h);
            assert!((dt - (t * t - k * t + 1.0)).abs() < 1e-8, "{psi}");
        }
    }

    #[test]
    fn wrong_constant_is_rejected() {
        let domain = Domain::new(1.0, 2.0, 21).unwrap();
        let err = solve_riccati(&e("1/y^2"), &e("1"), -0.5, 0.0, &domain, 0.0, &SolveOptions::default()).unwrap_err();
        assert!(matches!(err, SolverError::ConstantMismatch { name: "K", .. }), "{err:?}");
    }
}
