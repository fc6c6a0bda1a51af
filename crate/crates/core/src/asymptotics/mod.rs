//! Appendix-level machinery: modified Bessel functions, the Kelvin
//! transform exchanging the ends of the half-line, and the verification
//! that forced decay solutions vanish faster than e^{-|x|} in the original
//! variables.

pub mod bessel;
pub mod dd;
pub mod gamma;

pub use bessel::{bessel_ik, bessel_ik_in, s_switch, BesselPair, Regime};
pub use gamma::gamma;

use bessel::{iv_value, kv_value};
use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::radial_ode::k_of_alpha;
use serde::{Deserialize, Serialize};

/// Absolute quadrature tolerance targeting ~1e-13 relative accuracy, from a
/// coarse sample of the integrand scale.
fn scaled_tol<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let mut sup = 0.0f64;
    for j in 0..=32 {
        let x = a + (b - a) * j as f64 / 32.0;
        sup = sup.max(f(x).abs());
    }
    1e-13 * sup * (b - a) + 1e-300
}

/// Grid function produced by the Kelvin transform
/// W(t) = t^(1-k) V(1/t), with the analytic derivative channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KelvinProfile {
    pub t: Vec<f64>,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    pub k: f64,
}

/// Kelvin transform of a grid function given with its derivative. The input
/// grid must be positive (a leading t = 0 node is skipped by the caller).
pub fn kelvin(t: &[f64], v: &[f64], dv: &[f64], k: f64) -> Result<KelvinProfile> {
    if t.is_empty() || t[0] <= 0.0 || t.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("kelvin: grid must be positive increasing".into()));
    }
    if t.len() != v.len() || t.len() != dv.len() {
        return Err(Error::InvalidParameter("kelvin: mismatched lengths".into()));
    }
    let n = t.len();
    let mut out_t = Vec::with_capacity(n);
    let mut out_w = Vec::with_capacity(n);
    let mut out_dw = Vec::with_capacity(n);
    for j in (0..n).rev() {
        let s = 1.0 / t[j];
        out_t.push(s);
        out_w.push(s.powf(1.0 - k) * v[j]);
        // d/ds [s^(1-k) V(1/s)] = (1-k) s^(-k) V(1/s) - s^(-1-k) V'(1/s)
        out_dw.push((1.0 - k) * s.powf(-k) * v[j] - s.powf(-1.0 - k) * dv[j]);
    }
    Ok(KelvinProfile { t: out_t, w: out_w, dw: out_dw, k })
}

/// Tail forcing shapes h(s): continuous, nondecreasing, h(0) = 0,
/// h(s)/s -> 0 at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailSource {
    /// h(s) = s^2
    Square,
    /// h(s) = s log(1+s)
    SLog,
    /// h(s) = s^(3/2)
    ThreeHalves,
}

impl TailSource {
    pub fn apply(self, s: f64) -> f64 {
        match self {
            TailSource::Square => s * s,
            TailSource::SLog => s * (1.0 + s).ln(),
            TailSource::ThreeHalves => s.powf(1.5),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "s2" => Ok(TailSource::Square),
            "slog" => Ok(TailSource::SLog),
            "s32" => Ok(TailSource::ThreeHalves),
            other => Err(Error::InvalidParameter(format!(
                "unknown tail source `{other}` (expected s2|slog|s32)"
            ))),
        }
    }
}

/// Verification report for the forced decay equation
/// Z'' + (k/t) Z' - m Z = -h(e^{-(t/beta)^beta}), beta = 2/(2+alpha):
/// the variation-of-constants solution with vanishing growing-mode
/// coefficient, its weighted form e^{(t/beta)^beta} Z(t), and the two limit
/// expressions whose decay drives the proof of the weighted bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub beta: f64,
    pub nu: f64,
    pub k: f64,
    pub m: f64,
    pub t: Vec<f64>,
    pub z: Vec<f64>,
    pub weighted: Vec<f64>,
    pub limit_plus: Vec<f64>,
    pub limit_minus: Vec<f64>,
    pub tail_sup: f64,
    /// Weighted value at the start of the last decade (first grid point at
    /// or past t_end/10) divided by the value at t_end.
    pub last_decade_ratio: f64,
    pub monotone_last_decade: bool,
}

pub struct DecayProblem {
    pub h: TailSource,
    pub alpha: f64,
    pub m: f64,
    pub n: u32,
}

impl DecayProblem {
    pub fn beta(&self) -> f64 {
        2.0 / (2.0 + self.alpha)
    }

    fn phi(&self, s: f64) -> f64 {
        self.h.apply((-(s / self.beta()).powf(self.beta())).exp())
    }

    /// Z(t) at the grid points by cumulative adaptive quadrature of the
    /// variation-of-constants coefficients
    /// a(t) = int_t^inf phi s^(nu+1) K_nu(sqrt(m) s) ds (growing-mode
    /// coefficient, vanishing at infinity) and
    /// b(t) = int_0^t phi s^(nu+1) I_nu(sqrt(m) s) ds.
    pub fn evaluate(&self, grid: &[f64]) -> Result<DecayReport> {
        if grid.len() < 8 || grid[0] <= 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("decay grid must be >= 8 increasing positive points".into()));
        }
        let k = k_of_alpha(self.alpha, self.n);
        let nu = (k - 1.0) / 2.0;
        let beta = self.beta();
        let sm = self.m.sqrt();
        let f_a = |s: f64| -> f64 {
            if s <= 0.0 {
                return 0.0;
            }
            self.phi(s) * s.powf(nu + 1.0) * kv_value(nu, s * sm)
        };
        let f_b = |s: f64| -> f64 {
            if s <= 0.0 {
                return 0.0;
            }
            self.phi(s) * s.powf(nu + 1.0) * iv_value(nu, s * sm)
        };

        let t_top = *grid.last().unwrap();
        let t_inf = t_top + 80.0 / sm;

        // b on the grid, cumulative from 0.
        let mut b = Vec::with_capacity(grid.len());
        let mut acc = adaptive_simpson(&f_b, 0.0, grid[0], scaled_tol(&f_b, 0.0, grid[0]))?;
        b.push(acc);
        for w in grid.windows(2) {
            acc += adaptive_simpson(&f_b, w[0], w[1], scaled_tol(&f_b, w[0], w[1]))?;
            b.push(acc);
        }
        // a on the grid, cumulative from the far end.
        let mut a_rev = Vec::with_capacity(grid.len());
        let mut acc = adaptive_simpson(&f_a, t_top, t_inf, scaled_tol(&f_a, t_top, t_inf))?;
        a_rev.push(acc);
        for w in grid.windows(2).rev() {
            acc += adaptive_simpson(&f_a, w[0], w[1], scaled_tol(&f_a, w[0], w[1]))?;
            a_rev.push(acc);
        }
        a_rev.reverse();

        let mut z = Vec::with_capacity(grid.len());
        let mut weighted = Vec::with_capacity(grid.len());
        let mut lp = Vec::with_capacity(grid.len());
        let mut lm = Vec::with_capacity(grid.len());
        for (j, &t) in grid.iter().enumerate() {
            let p = bessel_ik(nu, t * sm)?;
            let hom_i = t.powf(-nu) * p.i;
            let hom_k = t.powf(-nu) * p.k;
            let zt = a_rev[j] * hom_i + b[j] * hom_k;
            let wexp = ((t / beta).powf(beta)).exp();
            z.push(zt);
            weighted.push(wexp * zt);
            lp.push(wexp * hom_i * a_rev[j]);
            lm.push(wexp * hom_k * b[j]);
        }

        // Tail window diagnostics over the last decade of the grid.
        let lo = t_top / 10.0;
        let idx: Vec<usize> = (0..grid.len()).filter(|&j| grid[j] >= lo).collect();
        if idx.len() < 4 {
            return Err(Error::InvalidParameter("grid too sparse in the last decade".into()));
        }
        let sup = |js: &[usize]| -> f64 { js.iter().map(|&j| weighted[j].abs()).fold(0.0f64, f64::max) };
        let last_decade_ratio = weighted[idx[0]].abs() / weighted[*idx.last().unwrap()].abs().max(1e-300);
        let monotone_last_decade = idx.windows(2).all(|w| weighted[w[1]].abs() <= weighted[w[0]].abs() * (1.0 + 1e-9));
        let tail_sup = sup(&idx);

        Ok(DecayReport {
            beta,
            nu,
            k,
            m: self.m,
            t: grid.to_vec(),
            z,
            weighted,
            limit_plus: lp,
            limit_minus: lm,
            tail_sup,
            last_decade_ratio,
            monotone_last_decade,
        })
    }

    /// Z at a single point (used by the residual cross-check).
    pub fn z_at(&self, t: f64) -> Result<f64> {
        let k = k_of_alpha(self.alpha, self.n);
        let nu = (k - 1.0) / 2.0;
        let sm = self.m.sqrt();
        let f_a = |s: f64| self.phi(s) * s.powf(nu + 1.0) * kv_value(nu, s * sm);
        let f_b = |s: f64| {
            if s <= 0.0 {
                0.0
            } else {
                self.phi(s) * s.powf(nu + 1.0) * iv_value(nu, s * sm)
            }
        };
        let a = adaptive_simpson(&f_a, t, t + 80.0 / sm, scaled_tol(&f_a, t, t + 80.0 / sm))?;
        let b = adaptive_simpson(&f_b, 0.0, t, scaled_tol(&f_b, 0.0, t))?;
        let p = bessel_ik(nu, t * sm)?;
        Ok(a * t.powf(-nu) * p.i + b * t.powf(-nu) * p.k)
    }
}

pub fn verify_superexp_decay(h: TailSource, alpha: f64, m: f64, n: u32, grid: &[f64]) -> Result<DecayReport> {
    if !(alpha > 0.0 && m > 0.0) {
        return Err(Error::InvalidParameter("need alpha > 0 and m > 0".into()));
    }
    DecayProblem { h, alpha, m, n }.evaluate(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kelvin_power_becomes_constant() {
        let k = 1.6;
        let t: Vec<f64> = (1..=200).map(|j| 0.05 * j as f64).collect();
        let v: Vec<f64> = t.iter().map(|x| x.powf(-(k - 1.0))).collect();
        let dv: Vec<f64> = t.iter().map(|x| -(k - 1.0) * x.powf(-k)).collect();
        let kp = kelvin(&t, &v, &dv, k).unwrap();
        for (w, dw) in kp.w.iter().zip(&kp.dw) {
            assert!((w - 1.0).abs() < 1e-12);
            assert!(dw.abs() < 1e-10);
        }
    }

    #[test]
    fn kelvin_zero_and_involution() {
        let k = 1.5;
        let t: Vec<f64> = (1..=100).map(|j| 0.1 * j as f64).collect();
        let zeros = vec![0.0; t.len()];
        let kp = kelvin(&t, &zeros, &zeros, k).unwrap();
        assert!(kp.w.iter().all(|&x| x == 0.0));

        let v: Vec<f64> = t.iter().map(|x| (-x).exp()).collect();
        let dv: Vec<f64> = t.iter().map(|x| -(-x).exp()).collect();
        let once = kelvin(&t, &v, &dv, k).unwrap();
        let twice = kelvin(&once.t, &once.w, &once.dw, k).unwrap();
        for j in 0..t.len() {
            assert!((twice.t[j] - t[j]).abs() < 1e-12);
            assert!((twice.w[j] - v[j]).abs() < 1e-12 * (1.0 + v[j].abs()));
            assert!((twice.dw[j] - dv[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn decay_weighted_tail_shrinks() {
        let grid: Vec<f64> = (1..=80).map(|j| 0.5 * j as f64).collect();
        let rep = verify_superexp_decay(TailSource::Square, 2.0, 1.0, 3, &grid).unwrap();
        assert!(rep.last_decade_ratio >= 10.0, "ratio = {}", rep.last_decade_ratio);
        assert!(rep.monotone_last_decade);
        // The weighted tail at t = 30 sits more than 10x below t = 15.
        let w_at = |t: f64| {
            let j = grid.iter().position(|&x| (x - t).abs() < 1e-9).unwrap();
            rep.weighted[j]
        };
        let ratio = w_at(15.0) / w_at(30.0);
        assert!(ratio > 10.0, "W(15)/W(30) = {ratio}");
        // Both limit expressions decay over the tail.
        let n = grid.len();
        assert!(rep.limit_plus[n - 1].abs() < rep.limit_plus[n / 2].abs());
        assert!(rep.limit_minus[n - 1].abs() < rep.limit_minus[n / 2].abs());
    }

    #[test]
    fn decay_ode_residual() {
        // Z'' + (k/t) Z' - m Z + phi = 0 checked by Richardson-extrapolated
        // centered differences on quadrature-evaluated Z.
        let prob = DecayProblem { h: TailSource::Square, alpha: 2.0, m: 1.0, n: 3 };
        let k = k_of_alpha(2.0, 3);
        for &t in &[4.0, 8.0, 14.0] {
            let h = 0.02;
            let zm2 = prob.z_at(t - 2.0 * h).unwrap();
            let zm1 = prob.z_at(t - h).unwrap();
            let z0 = prob.z_at(t).unwrap();
            let zp1 = prob.z_at(t + h).unwrap();
            let zp2 = prob.z_at(t + 2.0 * h).unwrap();
            let d2_h = (zp1 - 2.0 * z0 + zm1) / (h * h);
            let d2_2h = (zp2 - 2.0 * z0 + zm2) / (4.0 * h * h);
            let d2 = (4.0 * d2_h - d2_2h) / 3.0;
            let d1_h = (zp1 - zm1) / (2.0 * h);
            let d1_2h = (zp2 - zm2) / (4.0 * h);
            let d1 = (4.0 * d1_h - d1_2h) / 3.0;
            let phi = prob.phi(t);
            let res = d2 + k / t * d1 - z0 + phi;
            let scale = phi.abs().max(z0.abs()).max(1e-300);
            assert!(res.abs() / scale < 1e-7, "t={t}: residual {} of scale {scale}", res.abs());
        }
    }

    #[test]
    fn unforced_tail_is_pure_bessel_decay() {
        // With h = 0 the solution reduces to b0 t^-nu K_nu(sqrt(m) t); its
        // weighted form e^{(t/beta)^beta - sqrt(m) t} vanishes since beta<1.
        let alpha = 2.0;
        let k = k_of_alpha(alpha, 3);
        let nu = (k - 1.0) / 2.0;
        let beta = 2.0 / (2.0 + alpha);
        let w = |t: f64| {
            let p = bessel_ik(nu, t).unwrap();
            ((t / beta).powf(beta)).exp() * t.powf(-nu) * p.k
        };
        assert!((w(30.0) / w(15.0)).abs() < 1e-4);
    }
}
