/// Central difference `(f(y+h) - f(y-h)) / 2h`.
pub fn derivative_fd<F: Fn(f64) -> f64>(f: F, y: f64, h: f64) -> f64 {
    (f(y + h) - f(y - h)) / (2.0 * h)
}

/// Finite-difference weights (Fornberg) for derivatives `0..=max_order` at
/// `z` from values at the nodes `xs`. `weights[m][j]` multiplies `f(xs[j])`
/// in the estimate of the m-th derivative; row 0 is Lagrange interpolation.
pub fn fd_weights(z: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// A window of `width` consecutive sample indices around `i`, shifted inward
/// at the ends of `[start, end)` so it never leaves the range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stencil {
    pub first: usize,
    pub width: usize,
}

impl Stencil {
    pub fn around(i: usize, width: usize, start: usize, end: usize) -> Option<Stencil> {
        if end < start + width || i < start || i >= end {
            return None;
        }
        let half = width / 2;
        let first = i.saturating_sub(half).max(start).min(end - width);
        Some(Stencil { first, width })
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.first..self.first + self.width
    }
}
