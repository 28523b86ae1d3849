use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{NumericsError, Tolerances};

// 15-point Kronrod abscissae with the embedded 7-point Gauss rule on the odd
// indices; the last entry is the centre.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<Panel, NumericsError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NumericsError::SingularIntegrand { at: x })
        }
    };

    let f_center = eval(center)?;
    let mut kronrod = f_center * WGK[7];
    let mut gauss = f_center * WG[3];
    let mut res_abs = kronrod.abs();
    let mut values = [(0.0, 0.0); 7];

    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        values[j] = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((values[j].0 - mean).abs() + (values[j].1 - mean).abs());
    }

    let value = kronrod * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();

    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }

    Ok(Panel { a, b, value, error })
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// The panel with the largest error estimate is bisected until the total
/// error is below `max(quad_abs, quad_rel * |result|)`. Endpoints are never
/// evaluated, so integrable endpoint singularities are handled by refinement.
/// `b < a` yields the negated integral.
pub fn integrate_adaptive<F>(mut f: F, a: f64, b: f64, tol: &Tolerances) -> Result<f64, NumericsError>
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let first = kronrod15(&mut f, a, b)?;
    let mut total = first.value;
    let mut total_error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    let mut iterations = 0;
    loop {
        let target = tol.quad_abs.max(tol.quad_rel * total.abs());
        if total_error <= target {
            return Ok(total);
        }
        if iterations >= tol.max_iter {
            return Err(NumericsError::QuadNonConvergence {
                iterations,
                estimate: total,
                error: total_error,
            });
        }
        let Some(worst) = heap.pop() else {
            return Ok(total);
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid == worst.a || mid == worst.b {
            // Panel can no longer be split in floating point.
            return Err(NumericsError::QuadNonConvergence {
                iterations,
                estimate: total,
                error: total_error,
            });
        }
        let left = kronrod15(&mut f, worst.a, mid)?;
        let right = kronrod15(&mut f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        iterations += 1;

        // Recompute the running sums periodically to avoid drift.
        if iterations % 32 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            total_error = heap.iter().map(|p| p.error).sum();
        }
    }
}

/// Tabulated antiderivative `t ↦ ∫_{knots[0]}^t f`, with panel integrals
/// cached at the knots so evaluation only integrates from the nearest knot.
#[derive(Debug, Clone)]
pub struct Antiderivative<F> {
    f: F,
    knots: Vec<f64>,
    values: Vec<f64>,
    tol: Tolerances,
}

impl<F: Fn(f64) -> f64> Antiderivative<F> {
    /// `knots` must be strictly increasing and non-empty.
    pub fn new(f: F, knots: &[f64], tol: &Tolerances) -> Result<Self, NumericsError> {
        assert!(!knots.is_empty(), "antiderivative needs at least one knot");
        debug_assert!(knots.windows(2).all(|w| w[0] < w[1]));
        let mut values = Vec::with_capacity(knots.len());
        values.push(0.0);
        let mut acc = 0.0;
        for w in knots.windows(2) {
            acc += integrate_adaptive(&f, w[0], w[1], tol)?;
            values.push(acc);
        }
        Ok(Antiderivative {
            f,
            knots: knots.to_vec(),
            values,
            tol: *tol,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Values at the knots.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> Result<f64, NumericsError> {
        let idx = match self.knots.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => return Ok(self.values[i]),
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let from = self.knots[idx];
        Ok(self.values[idx] + integrate_adaptive(&self.f, from, t, &self.tol)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let tol = Tolerances::default();
        let v = integrate_adaptive(|y| y * y, 0.0, 1.0, &tol).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        let v = integrate_adaptive(|y| (-4.0 * y).exp(), 0.0, 1.0, &tol).unwrap();
        assert!((v - (1.0 - (-4.0f64).exp()) / 4.0).abs() < 1e-12);
        let v = integrate_adaptive(|y| 9.0 * y * y, 1.0, 2.0, &tol).unwrap();
        assert!((v - 21.0).abs() < 1e-10);
    }

    #[test]
    fn reversed_limits_negate() {
        let tol = Tolerances::default();
        let v = integrate_adaptive(f64::cos, 1.0, 0.0, &tol).unwrap();
        assert!((v + 1f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_is_integrable() {
        let tol = Tolerances::default();
        let v = integrate_adaptive(|y| 1.0 / y.sqrt(), 0.0, 1.0, &tol).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn interior_singularity_is_an_error() {
        let tol = Tolerances::default();
        let err = integrate_adaptive(|y| 1.0 / (y - 0.5), 0.0, 1.0, &tol).unwrap_err();
        assert!(matches!(err, NumericsError::SingularIntegrand { at } if at == 0.5));
    }

    #[test]
    fn non_convergence_is_reported() {
        let tol = Tolerances {
            max_iter: 3,
            ..Tolerances::default()
        };
        let err = integrate_adaptive(|y| (1.0 / y).sin() / y, 1e-3, 1.0, &tol).unwrap_err();
        assert!(matches!(err, NumericsError::QuadNonConvergence { .. }));
    }

    #[test]
    fn antiderivative_between_knots() {
        let tol = Tolerances::default();
        let knots: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let anti = Antiderivative::new(f64::exp, &knots, &tol).unwrap();
        for t in [0.0f64, 0.05, 0.3, 0.77, 1.0, 1.2] {
            let expected = t.exp() - 1.0;
            assert!((anti.eval(t).unwrap() - expected).abs() < 1e-13, "{t}");
        }
    }
}
