//! Embedded Dormand-Prince 5(4) integrator for the planar systems used by
//! the shooting solver, with cubic-Hermite in-step interpolation for event
//! localization.

use crate::error::{Error, Result};

pub type State = [f64; 2];

#[derive(Debug, Clone, Copy)]
pub struct StepPoint {
    pub t: f64,
    pub y: State,
    pub dy: State,
}

#[derive(Debug, Clone)]
pub struct IvpOptions {
    pub rtol: f64,
    pub atol: [f64; 2],
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for IvpOptions {
    fn default() -> Self {
        IvpOptions {
            rtol: 1e-10,
            atol: [1e-14, 1e-14],
            h_init: 1e-3,
            h_max: 0.25,
            h_min: 1e-13,
            max_steps: 2_000_000,
        }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 35.0 / 384.0 - 5179.0 / 57600.0;
const E3: f64 = 500.0 / 1113.0 - 7571.0 / 16695.0;
const E4: f64 = 125.0 / 192.0 - 393.0 / 640.0;
const E5: f64 = -2187.0 / 6784.0 - -92097.0 / 339200.0;
const E6: f64 = 11.0 / 84.0 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// One accepted step of the integrator with proposed size control.
/// Returns (next point, error estimate per component was within tolerance,
/// suggested next h).
pub struct Dp5<'a> {
    rhs: &'a dyn Fn(f64, State) -> State,
    pub opts: IvpOptions,
}

impl<'a> Dp5<'a> {
    pub fn new(rhs: &'a dyn Fn(f64, State) -> State, opts: IvpOptions) -> Self {
        Dp5 { rhs, opts }
    }

    /// Integrates from (t0, y0) while `keep_going` returns true for each
    /// accepted step (from-point, to-point). The callback inspects the step
    /// and may stop the run; the caller interpolates inside the step.
    pub fn run(
        &self,
        t0: f64,
        y0: State,
        t_end: f64,
        mut on_step: impl FnMut(&StepPoint, &StepPoint) -> bool,
    ) -> Result<StepPoint> {
        let f = self.rhs;
        let mut t = t0;
        let mut y = y0;
        let mut dy = f(t, y);
        let mut h = self.opts.h_init.min(self.opts.h_max).min(t_end - t0);
        let mut steps = 0usize;
        while t < t_end {
            if steps > self.opts.max_steps {
                return Err(Error::Numeric(format!("step budget exhausted at t = {t}")));
            }
            steps += 1;
            h = h.min(t_end - t).min(self.opts.h_max);
            if h < self.opts.h_min {
                return Err(Error::StepUnderflow { t, v: y[0], dv: y[1] });
            }
            let k1 = dy;
            let k2 = f(t + C2 * h, axpy(&y, h, &[(A21, &k1)]));
            let k3 = f(t + C3 * h, axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(t + C4 * h, axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(
                t + C5 * h,
                axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + h,
                axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = f(t + h, y_new);

            let mut err_norm = 0.0f64;
            for c in 0..2 {
                let e = h
                    * (E1 * k1[c] + E3 * k3[c] + E4 * k4[c] + E5 * k5[c] + E6 * k6[c]
                        + E7 * k7[c]);
                let scale = self.opts.atol[c] + self.opts.rtol * y[c].abs().max(y_new[c].abs());
                err_norm += (e / scale) * (e / scale);
            }
            err_norm = (err_norm / 2.0).sqrt();

            if !err_norm.is_finite() {
                h *= 0.25;
                continue;
            }
            if err_norm <= 1.0 {
                let from = StepPoint { t, y, dy };
                let to = StepPoint { t: t + h, y: y_new, dy: k7 };
                t += h;
                y = y_new;
                dy = k7;
                let factor = if err_norm == 0.0 { 5.0 } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0) };
                h *= factor;
                if !on_step(&from, &to) {
                    return Ok(to);
                }
            } else {
                h *= (0.9 * err_norm.powf(-0.2)).clamp(0.2, 0.9);
            }
        }
        Ok(StepPoint { t, y, dy })
    }
}

/// Cubic Hermite value of component `c` inside a step.
pub fn hermite(from: &StepPoint, to: &StepPoint, c: usize, t: f64) -> f64 {
    let h = to.t - from.t;
    let s = (t - from.t) / h;
    let (y0, y1) = (from.y[c], to.y[c]);
    let (d0, d1) = (from.dy[c] * h, to.dy[c] * h);
    let s2 = s * s;
    let s3 = s2 * s;
    y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
        + d0 * (s3 - 2.0 * s2 + s)
        + y1 * (-2.0 * s3 + 3.0 * s2)
        + d1 * (s3 - s2)
}

/// Root of `component c == level` inside a step, by bisection on the Hermite
/// interpolant. The endpoints must straddle the level.
pub fn locate_crossing(from: &StepPoint, to: &StepPoint, c: usize, level: f64) -> f64 {
    let mut a = from.t;
    let mut b = to.t;
    let fa = hermite(from, to, c, a) - level;
    for _ in 0..120 {
        let mid = 0.5 * (a + b);
        let fm = hermite(from, to, c, mid) - level;
        if (fa <= 0.0) == (fm <= 0.0) {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-15 * (1.0 + b.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_accuracy() {
        // y'' = -y from (1, 0): y = cos t.
        let rhs = |_t: f64, y: State| [y[1], -y[0]];
        let solver = Dp5::new(&rhs, IvpOptions { rtol: 1e-11, ..Default::default() });
        let end = solver.run(0.0, [1.0, 0.0], 10.0, |_, _| true).unwrap();
        assert!((end.y[0] - 10.0f64.cos()).abs() < 1e-9);
        assert!((end.y[1] + 10.0f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn crossing_localization() {
        // y' = -y, y(0) = 1: crosses 0.5 at ln 2.
        let rhs = |_t: f64, y: State| [-y[0], 0.0];
        let solver = Dp5::new(&rhs, IvpOptions { rtol: 1e-12, h_max: 0.05, ..Default::default() });
        let mut hit = None;
        solver
            .run(0.0, [1.0, 0.0], 5.0, |from, to| {
                if from.y[0] > 0.5 && to.y[0] <= 0.5 {
                    hit = Some(locate_crossing(from, to, 0, 0.5));
                    false
                } else {
                    true
                }
            })
            .unwrap();
        assert!((hit.unwrap() - 2.0f64.ln()).abs() < 1e-9);
    }
}
