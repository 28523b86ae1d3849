use super::{NumericsError, Tolerances};

// Dormand–Prince 5(4) tableau. The last row of A is the 5th-order weight
// vector, so stage 7 is evaluated at the new solution (FSAL).
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const MAX_STEPS: usize = 1_000_000;

/// Accepted steps of an integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Always false: output points are hit by step clamping, not interpolation.
    pub dense: bool,
    pub accepted: usize,
    pub rejected: usize,
}

impl Trajectory {
    pub fn last(&self) -> (f64, &[f64]) {
        let i = self.xs.len() - 1;
        (self.xs[i], &self.states[i])
    }
}

struct Stepper<F> {
    rhs: F,
    x: f64,
    state: Vec<f64>,
    h: f64,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    tol: Tolerances,
    accepted: usize,
    rejected: usize,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Stepper<F> {
    fn new(mut rhs: F, x0: f64, state0: &[f64], tol: &Tolerances) -> Self {
        let n = state0.len();
        let mut k: [Vec<f64>; 7] = Default::default();
        for stage in k.iter_mut() {
            *stage = vec![0.0; n];
        }
        rhs(x0, state0, &mut k[0]);
        Stepper {
            rhs,
            x: x0,
            state: state0.to_vec(),
            h: 0.0,
            k,
            tmp: vec![0.0; n],
            tol: *tol,
            accepted: 0,
            rejected: 0,
        }
    }

    fn initial_step(&self, span: f64) -> f64 {
        let scale = |v: f64| self.tol.ode_abs + self.tol.ode_rel * v.abs();
        let d0 = rms(self.state.iter().map(|&v| v / scale(v)));
        let d1 = rms(self.state.iter().zip(&self.k[0]).map(|(&v, &dv)| dv / scale(v)));
        let guess = if d0 < 1e-5 || d1 < 1e-5 || !d1.is_finite() {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        guess.min(span.abs()).max(1e-12 * span.abs())
    }

    /// Advances exactly to `target`.
    fn advance_to(&mut self, target: f64, trace: Option<&mut Trajectory>) -> Result<(), NumericsError> {
        let direction = (target - self.x).signum();
        if direction == 0.0 {
            return Ok(());
        }
        if self.h == 0.0 {
            self.h = self.initial_step(target - self.x);
        }
        let mut trace = trace;
        let n = self.state.len();
        let mut steps = 0usize;

        while (target - self.x) * direction > 0.0 {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(NumericsError::TooManySteps { steps, at: self.x });
            }
            let remaining = (target - self.x).abs();
            let mut h = self.h.abs().min(remaining);
            let last = h >= remaining;
            if h < 16.0 * f64::EPSILON * self.x.abs().max(1.0) && !last {
                return Err(NumericsError::StepUnderflow { at: self.x });
            }
            let hs = h * direction;

            for s in 1..7 {
                for i in 0..n {
                    let mut acc = self.state[i];
                    for (j, kj) in self.k.iter().enumerate().take(s) {
                        acc += hs * A[s][j] * kj[i];
                    }
                    self.tmp[i] = acc;
                }
                (self.rhs)(self.x + C[s] * hs, &self.tmp, &mut self.k[s]);
            }
            // Stage 7 was evaluated at the 5th-order solution (FSAL), which is
            // what `tmp` holds after the loop.
            let mut err_sq = 0.0;
            let mut finite = true;
            for i in 0..n {
                let y5 = self.tmp[i];
                let mut y4 = self.state[i];
                for s in 0..7 {
                    y4 += hs * B4[s] * self.k[s][i];
                }
                let sc = self.tol.ode_abs + self.tol.ode_rel * self.state[i].abs().max(y5.abs());
                let e = (y5 - y4) / sc;
                err_sq += e * e;
                finite &= y5.is_finite() && self.k[6][i].is_finite();
            }
            let err = (err_sq / n.max(1) as f64).sqrt();

            if finite && err <= 1.0 {
                self.x = if last { target } else { self.x + hs };
                self.state.copy_from_slice(&self.tmp);
                let (first, rest) = self.k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
                self.accepted += 1;
                if let Some(t) = trace.as_deref_mut() {
                    t.xs.push(self.x);
                    t.states.push(self.state.clone());
                }
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // Keep the natural step even when the last step was clamped.
                h = if last { self.h.abs().max(h) } else { h * factor };
                self.h = h;
            } else {
                self.rejected += 1;
                let factor = if finite { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
                self.h = h * factor;
                if self.h < 16.0 * f64::EPSILON * self.x.abs().max(1.0) {
                    return Err(NumericsError::StepUnderflow { at: self.x });
                }
            }
        }
        Ok(())
    }
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    (sum / count.max(1) as f64).sqrt()
}

/// Integrates `state' = rhs(x, state)` from `x0` to `x_end` (either
/// direction) with adaptive Dormand–Prince 5(4) steps.
///
/// A non-finite derivative rejects the step; repeated rejection down to
/// round-off step size is reported as [`NumericsError::StepUnderflow`].
pub fn ode_solve<F>(rhs: F, x0: f64, state0: &[f64], x_end: f64, tol: &Tolerances) -> Result<Trajectory, NumericsError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut stepper = Stepper::new(rhs, x0, state0, tol);
    let mut trace = Trajectory {
        xs: vec![x0],
        states: vec![state0.to_vec()],
        dense: false,
        accepted: 0,
        rejected: 0,
    };
    stepper.advance_to(x_end, Some(&mut trace))?;
    trace.accepted = stepper.accepted;
    trace.rejected = stepper.rejected;
    Ok(trace)
}

/// Integrates from `x0` through every point of `outputs` (monotone, in the
/// direction of travel) and returns the state at each of them.
pub fn ode_solve_at<F>(rhs: F, x0: f64, state0: &[f64], outputs: &[f64], tol: &Tolerances) -> Result<Vec<Vec<f64>>, NumericsError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut stepper = Stepper::new(rhs, x0, state0, tol);
    let mut result = Vec::with_capacity(outputs.len());
    for &x in outputs {
        stepper.advance_to(x, None)?;
        result.push(stepper.state.clone());
    }
    Ok(result)
}
