use std::f64::consts::{FRAC_PI_2, LN_2};

use crate::numerics::{find_root, Tolerances};

use super::SolverError;

/// Which closed form of `G(θ, S)` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Regime {
    /// `S > 1/4`: arctangent form.
    Above,
    /// `S = 1/4`: rational-exponential form.
    Quarter,
    /// `S < 1/4`: logarithmic (arctanh) form.
    Below,
}

impl Regime {
    pub fn of(s: f64) -> Regime {
        if s > 0.25 {
            Regime::Above
        } else if s == 0.25 {
            Regime::Quarter
        } else {
            Regime::Below
        }
    }
}

fn check_theta(theta: f64, s: f64) -> Result<f64, SolverError> {
    if theta == 0.0 || !theta.is_finite() {
        return Err(SolverError::ThetaSingular { theta, s });
    }
    let q = theta * theta + theta + s;
    if q == 0.0 {
        return Err(SolverError::ThetaSingular { theta, s });
    }
    Ok(q)
}

/// `G(θ, S)` in the printed closed forms, so that `e^G` is
///
/// * `θ/√(θ²+θ+S) · exp[-arctan((1+2θ)/√(4S-1)) / √(4S-1)]` for `S > 1/4`,
/// * `θ/(1+2θ) · e^{1/(1+2θ)}` for `S = 1/4`,
/// * `θ/√(θ²+θ+S) · exp[arctanh((1+2θ)/√(1-4S)) / √(1-4S)]` for `S < 1/4`.
///
/// For `S < 1/4` the arctanh is replaced by its real continuation
/// `½ ln|(z+c)/(z-c)|`, which also covers `|1+2θ| > √(1-4S)`. Absolute values
/// are taken inside the logarithms so any segment between singular points
/// of `θ(θ²+θ+S)` can be used. In every regime `dG/dθ = S/(θ(θ²+θ+S))`.
pub fn chiellini_g(theta: f64, s: f64) -> Result<f64, SolverError> {
    let q = check_theta(theta, s)?;
    let z = 1.0 + 2.0 * theta;
    let g = match Regime::of(s) {
        Regime::Above => {
            let c = (4.0 * s - 1.0).sqrt();
            theta.abs().ln() - 0.5 * q.abs().ln() - (z / c).atan() / c
        }
        Regime::Quarter => theta.abs().ln() - z.abs().ln() + 1.0 / z,
        Regime::Below => {
            let c = (1.0 - 4.0 * s).sqrt();
            theta.abs().ln() - 0.5 * q.abs().ln() + ((z + c) / (z - c)).abs().ln() / (2.0 * c)
        }
    };
    Ok(g)
}

/// [`chiellini_g`] shifted by a regime-dependent constant so that it is
/// continuous in `S` across `S = 1/4`.
pub fn chiellini_g_continuous(theta: f64, s: f64) -> Result<f64, SolverError> {
    let offset = match Regime::of(s) {
        Regime::Above => FRAC_PI_2 / (4.0 * s - 1.0).sqrt(),
        Regime::Quarter => LN_2,
        Regime::Below => 0.0,
    };
    Ok(chiellini_g(theta, s)? + offset)
}

/// `dG/dθ = S / (θ(θ²+θ+S))`.
pub fn chiellini_g_prime(theta: f64, s: f64) -> Result<f64, SolverError> {
    let q = check_theta(theta, s)?;
    Ok(s / (theta * q))
}

/// Open θ-interval free of zeros of `θ(θ²+θ+S)`; ends may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
}

impl Segment {
    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t < self.hi
    }
}

/// Real zeros of `θ(θ²+θ+S)`, sorted.
pub fn singular_points(s: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    let disc = 1.0 - 4.0 * s;
    if disc > 0.0 {
        let r = disc.sqrt();
        pts.push(0.5 * (-1.0 - r));
        pts.push(0.5 * (-1.0 + r));
    } else if disc == 0.0 {
        pts.push(-0.5);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// The segment containing `theta`, or an error if `theta` is singular.
pub fn segment_of(theta: f64, s: f64) -> Result<Segment, SolverError> {
    check_theta(theta, s)?;
    let pts = singular_points(s);
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for p in pts {
        if p < theta {
            lo = p;
        } else if p > theta {
            hi = p;
            break;
        }
    }
    Ok(Segment { lo, hi })
}

/// The segment adjacent to zero on the positive (`positive = true`) or
/// negative side.
pub fn half_line_segment(s: f64, positive: bool) -> Segment {
    let pts = singular_points(s);
    if positive {
        let hi = pts.iter().copied().find(|p| *p > 0.0).unwrap_or(f64::INFINITY);
        Segment { lo: 0.0, hi }
    } else {
        let lo = pts.iter().rev().copied().find(|p| *p < 0.0).unwrap_or(f64::NEG_INFINITY);
        Segment { lo, hi: 0.0 }
    }
}

// Brackets near zero need a tolerance relative to their own size.
fn relative_tol(tol: &Tolerances, lo: f64, hi: f64) -> Tolerances {
    let size = lo.abs().max(hi.abs());
    Tolerances {
        root_abs: tol.root_abs.min(1e-15 * size).max(f64::MIN_POSITIVE),
        ..*tol
    }
}

// Points approaching the ends of the segment from `seed`.
fn toward(end: f64, seed: f64, k: i32) -> f64 {
    if end.is_finite() {
        end + (seed - end) * 2f64.powi(-k)
    } else {
        seed + end.signum() * (seed.abs() + 1.0) * (2f64.powi(k) - 1.0)
    }
}

/// Solves `func(θ) = target` for θ in the open segment, where `func` is
/// monotone on it. The bracket is grown geometrically toward both ends.
pub(crate) fn invert_on_segment<F>(
    mut func: F,
    target: f64,
    seg: Segment,
    seed: f64,
    tol: &Tolerances,
) -> Result<Option<f64>, SolverError>
where
    F: FnMut(f64) -> Result<f64, SolverError>,
{
    debug_assert!(seg.contains(seed));
    let f0 = func(seed)? - target;
    if f0 == 0.0 {
        return Ok(Some(seed));
    }
    let (mut a_prev, mut b_prev) = (seed, seed);
    for k in 1..1100 {
        let a = toward(seg.lo, seed, k);
        let b = toward(seg.hi, seed, k);
        let a_ok = seg.contains(a) && a != a_prev && a.is_finite();
        let b_ok = seg.contains(b) && b != b_prev && b.is_finite();
        if !a_ok && !b_ok {
            break;
        }
        for (t, ok, prev) in [(a, a_ok, a_prev), (b, b_ok, b_prev)] {
            if !ok {
                continue;
            }
            let ft = match func(t) {
                Ok(v) => v - target,
                Err(_) => continue,
            };
            if ft == 0.0 {
                return Ok(Some(t));
            }
            if ft.signum() != f0.signum() {
                let (lo, hi) = if t < prev { (t, prev) } else { (prev, t) };
                let local = relative_tol(tol, lo, hi);
                let root = find_root(|x| func(x).map(|v| v - target).unwrap_or(f64::NAN), lo, hi, &local)?;
                return Ok(Some(root));
            }
        }
        if a_ok {
            a_prev = a;
        }
        if b_ok {
            b_prev = b;
        }
    }
    Ok(None)
}

/// θ with `K0⁻¹ e^{G(θ,S)} = target_ratio` on the bracket `[lo, hi]`, which
/// must not contain a zero of `θ(θ²+θ+S)`.
pub fn chiellini_theta(
    target_ratio: f64,
    s: f64,
    k0: f64,
    bracket: (f64, f64),
    tol: &Tolerances,
) -> Result<f64, SolverError> {
    let (lo, hi) = if bracket.0 <= bracket.1 { bracket } else { (bracket.1, bracket.0) };
    if singular_points(s).iter().any(|p| *p >= lo && *p <= hi) {
        return Err(SolverError::NonMonotoneBracket { lo, hi });
    }
    let scaled = target_ratio * k0;
    if !(scaled > 0.0) {
        return Err(SolverError::ThetaOutOfRange {
            at: f64::NAN,
            target: target_ratio,
        });
    }
    let g_star = scaled.ln();
    let (g_lo, g_hi) = (chiellini_g(lo, s)?, chiellini_g(hi, s)?);
    if (g_lo - g_star) * (g_hi - g_star) > 0.0 {
        return Err(SolverError::ThetaOutOfRange {
            at: f64::NAN,
            target: target_ratio,
        });
    }
    let local = relative_tol(tol, lo, hi);
    Ok(find_root(|t| chiellini_g(t, s).map(|g| g - g_star).unwrap_or(f64::NAN), lo, hi, &local)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{derivative_fd, integrate_adaptive};

    #[test]
    fn printed_examples() {
        let g = chiellini_g(1.0, 0.25).unwrap();
        assert!((g - ((1.0f64 / 3.0).ln() + 1.0 / 3.0)).abs() < 1e-15);
        assert!((g + 0.76528).abs() < 1e-5);
        let eg = chiellini_g(1.0, 1.0).unwrap().exp();
        let expected = (1.0 / 3f64.sqrt()) * (-(1.0 / 3f64.sqrt()) * 3f64.sqrt().atan()).exp();
        assert!((eg - expected).abs() < 1e-15);
        assert!((eg - 0.3154).abs() < 1e-4);
        assert!(chiellini_g(1e-300, 0.25).unwrap() < -600.0);
    }

    #[test]
    fn derivative_matches_quadrature_oracle() {
        let tol = Tolerances::default();
        for s in [0.1, 0.25, 1.0, 5.0, -0.5] {
            let (a, b) = (0.7, 2.3);
            let q = integrate_adaptive(|t| s / (t * (t * t + t + s)), a, b, &tol).unwrap();
            let dg = chiellini_g(b, s).unwrap() - chiellini_g(a, s).unwrap();
            assert!((q - dg).abs() < 1e-12, "S = {s}");
        }
    }

    #[test]
    fn continuous_form_has_same_derivative() {
        for s in [0.1, 0.25, 1.0, 5.0] {
            for t in [0.2, 1.0, 2.9] {
                let fd = derivative_fd(|x| chiellini_g_continuous(x, s).unwrap(), t, 1e-5);
                let exact = chiellini_g_prime(t, s).unwrap();
                assert!((fd - exact).abs() <= 1e-6 * exact.abs());
            }
        }
    }

    #[test]
    fn singular_theta_is_an_error() {
        assert!(chiellini_g(0.0, 1.0).is_err());
        // θ² + θ - 2 = 0 at θ = 1.
        assert!(chiellini_g(1.0, -2.0).is_err());
    }

    #[test]
    fn theta_inversion_examples() {
        let tol = Tolerances::default();
        let target = (1.0f64 / 3.0) * (1.0f64 / 3.0).exp();
        let t = chiellini_theta(target, 0.25, 1.0, (0.1, 10.0), &tol).unwrap();
        assert!((t - 1.0).abs() < 1e-10);
        let target = chiellini_g(1.0, 1.0).unwrap().exp();
        let t = chiellini_theta(target, 1.0, 1.0, (0.1, 10.0), &tol).unwrap();
        assert!((t - 1.0).abs() < 1e-10);
        assert!(matches!(
            chiellini_theta(-1.0, 1.0, 1.0, (0.1, 10.0), &tol),
            Err(SolverError::ThetaOutOfRange { .. })
        ));
        assert!(matches!(
            chiellini_theta(0.3, -2.0, 1.0, (0.1, 10.0), &tol),
            Err(SolverError::NonMonotoneBracket { .. })
        ));
    }

    #[test]
    fn segments() {
        assert_eq!(segment_of(1.0, 1.0).unwrap(), Segment { lo: 0.0, hi: f64::INFINITY });
        let seg = segment_of(-0.5, 0.1).unwrap();
        assert!(seg.lo < -0.5 && seg.hi > -0.5 && seg.hi < 0.0);
        assert_eq!(half_line_segment(-2.0, true), Segment { lo: 0.0, hi: 1.0 });
        assert_eq!(half_line_segment(1.0, false), Segment { lo: f64::NEG_INFINITY, hi: 0.0 });
    }

    #[test]
    fn unbounded_inversion() {
        let tol = Tolerances::default();
        let seg = Segment { lo: 0.0, hi: f64::INFINITY };
        let t = invert_on_segment(|x| Ok(x.ln()), -50.0, seg, 1.0, &tol).unwrap().unwrap();
        assert!((t.ln() + 50.0).abs() < 1e-9);
        let t = invert_on_segment(|x| Ok(x.ln()), 30.0, seg, 1.0, &tol).unwrap().unwrap();
        assert!((t.ln() - 30.0).abs() < 1e-9);
        let none = invert_on_segment(|x| Ok(x.atan()), 2.0, seg, 1.0, &tol).unwrap();
        assert!(none.is_none());
    }
}
