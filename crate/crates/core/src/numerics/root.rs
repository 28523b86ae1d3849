use super::{NumericsError, Tolerances};

/// Bracketed root of `f` on `[lo, hi]` (Brent: inverse quadratic / secant
/// steps with bisection fallback, always keeping a sign-changing bracket).
pub fn find_root<F>(mut f: F, lo: f64, hi: f64, tol: &Tolerances) -> Result<f64, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    let mut eval = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            Err(NumericsError::RootNonFinite { at: x })
        } else {
            Ok(v)
        }
    };

    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (eval(a)?, eval(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(NumericsError::NoSignChange {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;

    for _ in 0..tol.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }

        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol.root_abs;
        let half = 0.5 * (c - b);
        if half.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }

        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * half * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * half * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * half * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = half;
                e = d;
            }
        } else {
            d = half;
            e = d;
        }

        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(half) };
        fb = eval(b)?;
    }

    Err(NumericsError::RootMaxIterations {
        iterations: tol.max_iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let tol = Tolerances::default();
        let r = find_root(|t| t * t - 2.0, 1.0, 2.0, &tol).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        let r = find_root(|t| t.tan() - 1.0, 0.0, 1.0, &tol).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        let err = find_root(|t| t * t * t, 1.0, 2.0, &tol).unwrap_err();
        assert!(matches!(err, NumericsError::NoSignChange { .. }));
    }

    #[test]
    fn steep_function_converges() {
        let tol = Tolerances::default();
        let r = find_root(|t| (50.0 * (t - 0.3)).tanh(), -5.0, 7.0, &tol).unwrap();
        assert!((r - 0.3).abs() < 1e-12);
    }

    #[test]
    fn nan_is_reported() {
        let tol = Tolerances::default();
        let err = find_root(|t| if t > 0.5 { f64::NAN } else { t - 0.7 }, 0.0, 1.0, &tol).unwrap_err();
        assert!(matches!(err, NumericsError::RootNonFinite { .. }));
    }
}
