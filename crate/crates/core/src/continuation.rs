//! Parameter sweeps in alpha: warm-started shooting along the branch, both
//! weighted eigensolves per sample, numeric and closed-form Morse indices,
//! jump detection by adjacent-sample differencing, and the identity suite
//! bundling the cross-checks.

use crate::error::Result;
use crate::linearization::{
    assemble, degeneracy_from_spectrum, eigen_extrapolated, full_morse_index, MeshParams, WeightKind,
};
use crate::nonlinearity::NonlinearitySpec;
use crate::radial_ode::{shoot_ground_state_with, ProblemSpec, ShootOptions};
use crate::spectral_geometry::{branch_census, kernel_dimension, morse_index, BranchReport};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: u32,
    pub f: NonlinearitySpec,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub n_samples: usize,
    pub mesh: MeshParams,
    pub shoot: SweepShootParams,
    /// Samples landing within 1e-6 of an even integer are nudged by this.
    pub even_offset: f64,
    /// Adjacent-sample continuity guard on a*.
    pub jump_guard_rel: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepShootParams {
    pub rtol: f64,
    pub shoot_tol: f64,
    pub a_cap: f64,
}

impl Default for SweepShootParams {
    fn default() -> Self {
        SweepShootParams { rtol: 1e-10, shoot_tol: 1e-12, a_cap: 1e6 }
    }
}

impl SweepConfig {
    pub fn new(n: u32, f: NonlinearitySpec, alpha_lo: f64, alpha_hi: f64, n_samples: usize) -> Self {
        SweepConfig {
            n,
            f,
            alpha_lo,
            alpha_hi,
            n_samples,
            mesh: MeshParams::default(),
            shoot: SweepShootParams::default(),
            even_offset: 1e-3,
            jump_guard_rel: 0.25,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSample {
    pub alpha: f64,
    pub a_star: Option<f64>,
    pub m_numeric: Option<u64>,
    pub m_closed: Option<u64>,
    pub lambda1_km2: Option<f64>,
    pub degeneracy_flag: Option<u8>,
    pub warm_bisections: Option<u32>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectedJump {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub size: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictedBifurcation {
    pub alpha: f64,
    pub kernel_dim: u64,
    pub census: BranchReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub samples: Vec<SweepSample>,
    pub detected_jumps: Vec<DetectedJump>,
    pub predicted: Vec<PredictedBifurcation>,
    /// Soft invariant: numeric index nondecreasing along the branch.
    pub m_numeric_nondecreasing: bool,
    /// Soft invariant: |Delta a*| below the guard between adjacent samples.
    pub a_star_continuous: bool,
}

/// Evenly spaced samples with even-integer collisions nudged.
pub fn sample_alphas(cfg: &SweepConfig) -> Vec<f64> {
    if cfg.n_samples == 0 || cfg.alpha_hi < cfg.alpha_lo {
        return Vec::new();
    }
    if cfg.n_samples == 1 {
        return vec![cfg.alpha_lo];
    }
    let step = (cfg.alpha_hi - cfg.alpha_lo) / (cfg.n_samples as f64 - 1.0);
    (0..cfg.n_samples)
        .map(|j| {
            let a = cfg.alpha_lo + step * j as f64;
            // alpha = 0 is a spectral boundary like the positive evens.
            let nearest = 2.0 * (a / 2.0).round();
            if nearest >= 0.0 && (a - nearest).abs() < 1e-6 {
                nearest + cfg.even_offset
            } else {
                a
            }
        })
        .collect()
}

pub fn sweep(cfg: &SweepConfig) -> SweepResult {
    let alphas = sample_alphas(cfg);
    let mut samples: Vec<SweepSample> = Vec::with_capacity(alphas.len());
    let mut history: Vec<(f64, f64)> = Vec::new(); // (alpha, a*) of successes

    for &alpha in &alphas {
        let sample = match sweep_one(cfg, alpha, &history) {
            Ok((s, a_star)) => {
                history.push((alpha, a_star));
                s
            }
            Err(e) => SweepSample {
                alpha,
                a_star: None,
                m_numeric: None,
                m_closed: morse_index(alpha, cfg.n).ok(),
                lambda1_km2: None,
                degeneracy_flag: None,
                warm_bisections: None,
                error: Some(e.to_string()),
            },
        };
        samples.push(sample);
    }

    // Jump detection by adjacent-sample differencing over successful samples.
    let mut detected_jumps = Vec::new();
    let mut m_nondecreasing = true;
    let mut prev: Option<(f64, u64)> = None;
    for s in &samples {
        if let (Some(m), None) = (s.m_numeric, s.error.as_ref()) {
            if let Some((pa, pm)) = prev {
                if m != pm {
                    detected_jumps.push(DetectedJump {
                        alpha_lo: pa,
                        alpha_hi: s.alpha,
                        size: m as i64 - pm as i64,
                    });
                }
                if m < pm {
                    m_nondecreasing = false;
                }
            }
            prev = Some((s.alpha, m));
        }
    }

    let mut a_star_continuous = true;
    for w in history.windows(2) {
        let (a0, a1) = (w[0].1, w[1].1);
        if (a1 - a0).abs() > cfg.jump_guard_rel * a0.abs().max(1e-300) {
            a_star_continuous = false;
        }
    }

    let predicted = predicted_in_range(cfg);

    SweepResult {
        samples,
        detected_jumps,
        predicted,
        m_numeric_nondecreasing: m_nondecreasing,
        a_star_continuous,
    }
}

fn predicted_in_range(cfg: &SweepConfig) -> Vec<PredictedBifurcation> {
    let mut out = Vec::new();
    let mut alpha = 2.0;
    while alpha < cfg.alpha_hi {
        if alpha > cfg.alpha_lo {
            if let (Ok(kd), Ok(census)) =
                (kernel_dimension(alpha, cfg.n, 0), branch_census(alpha, cfg.n))
            {
                out.push(PredictedBifurcation { alpha, kernel_dim: kd, census });
            }
        }
        alpha += 2.0;
    }
    out
}

fn sweep_one(cfg: &SweepConfig, alpha: f64, history: &[(f64, f64)]) -> Result<(SweepSample, f64)> {
    let spec = ProblemSpec::new(cfg.n, alpha, cfg.f.clone())?;
    let opts = ShootOptions {
        rtol: cfg.shoot.rtol,
        shoot_tol: cfg.shoot.shoot_tol,
        a_cap: cfg.shoot.a_cap,
        ..Default::default()
    };
    // Secant prediction of a* from the last two successes.
    let warm = match history {
        [.., (a0, s0), (a1, s1)] if (a1 - a0).abs() > 1e-12 => {
            let predicted = s1 + (s1 - s0) / (a1 - a0) * (alpha - a1);
            (predicted > 0.0).then(|| (predicted * 0.98, predicted * 1.02))
        }
        _ => None,
    };
    let (profile, diag) = shoot_ground_state_with(&spec, &opts, warm)?;

    let op = assemble(&profile, &spec, &cfg.mesh)?;
    let m_numeric = full_morse_index(&op, &spec)?;
    let spectrum = eigen_extrapolated(&profile, &spec, &cfg.mesh, WeightKind::Km2Weight, 2)?;
    let lambda1 = spectrum.eigenvalues[0];
    let k_spectrum = eigen_extrapolated(&profile, &spec, &cfg.mesh, WeightKind::KWeight, 6)?;
    let deg = degeneracy_from_spectrum(&k_spectrum)?;

    Ok((
        SweepSample {
            alpha,
            a_star: Some(profile.a_star),
            m_numeric: Some(m_numeric),
            m_closed: morse_index(alpha, cfg.n).ok(),
            lambda1_km2: Some(lambda1),
            degeneracy_flag: Some(deg.n_alpha),
            warm_bisections: diag.warm_start_used.then_some(diag.bisections),
            error: None,
        },
        profile.a_star,
    ))
}

/// Bundled cross-checks of a finished sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityReport {
    /// lambda_1 of the t^(k-2) problem equals -k(alpha) within tol.
    pub lambda_identity_ok: bool,
    pub lambda_worst_rel: f64,
    /// m_numeric equals the closed-form index at every sample.
    pub morse_agreement_ok: bool,
    /// Every detected jump interval contains exactly one predicted value and
    /// matches its kernel dimension.
    pub jumps_ok: bool,
    /// No degeneracy flagged away from the even integers.
    pub nondegenerate_ok: bool,
    pub details: Vec<String>,
}

impl IdentityReport {
    pub fn pass(&self) -> bool {
        self.lambda_identity_ok && self.morse_agreement_ok && self.jumps_ok && self.nondegenerate_ok
    }
}

pub fn verify_identity_suite(cfg: &SweepConfig, sweep: &SweepResult, lambda_tol: f64) -> IdentityReport {
    let mut details = Vec::new();
    let mut lambda_ok = true;
    let mut lambda_worst: f64 = 0.0;
    let mut morse_ok = true;
    let mut nondeg_ok = true;

    for s in &sweep.samples {
        if s.error.is_some() {
            details.push(format!("alpha {}: skipped ({})", s.alpha, s.error.clone().unwrap()));
            continue;
        }
        let k = crate::radial_ode::k_of_alpha(s.alpha, cfg.n);
        if let Some(l1) = s.lambda1_km2 {
            let rel = (l1 + k).abs() / k;
            lambda_worst = lambda_worst.max(rel);
            if rel > lambda_tol {
                lambda_ok = false;
                details.push(format!("alpha {}: lambda1 = {l1}, -k = {}, rel {rel:.2e}", s.alpha, -k));
            }
        }
        if let (Some(mn), Some(mc)) = (s.m_numeric, s.m_closed) {
            if mn != mc {
                morse_ok = false;
                details.push(format!("alpha {}: m_numeric {mn} != m_closed {mc}", s.alpha));
            }
        }
        if s.degeneracy_flag.unwrap_or(0) != 0 {
            nondeg_ok = false;
            details.push(format!("alpha {}: degeneracy flag {}", s.alpha, s.degeneracy_flag.unwrap()));
        }
    }

    // Jump bookkeeping: vacuous on sweeps with fewer than two samples.
    let mut jumps_ok = true;
    for j in &sweep.detected_jumps {
        let inside: Vec<&PredictedBifurcation> = sweep
            .predicted
            .iter()
            .filter(|p| p.alpha > j.alpha_lo && p.alpha < j.alpha_hi)
            .collect();
        if inside.len() != 1 {
            jumps_ok = false;
            details.push(format!(
                "jump on ({}, {}) contains {} predicted values",
                j.alpha_lo,
                j.alpha_hi,
                inside.len()
            ));
        } else if j.size != inside[0].kernel_dim as i64 {
            jumps_ok = false;
            details.push(format!(
                "jump on ({}, {}) of size {} vs kernel dimension {}",
                j.alpha_lo, j.alpha_hi, j.size, inside[0].kernel_dim
            ));
        }
    }
    for p in &sweep.predicted {
        let covered = sweep
            .detected_jumps
            .iter()
            .any(|j| p.alpha > j.alpha_lo && p.alpha < j.alpha_hi);
        if !covered && sweep.samples.iter().filter(|s| s.error.is_none()).count() > 1 {
            jumps_ok = false;
            details.push(format!("predicted value {} not covered by any detected jump", p.alpha));
        }
    }

    IdentityReport {
        lambda_identity_ok: lambda_ok,
        lambda_worst_rel: lambda_worst,
        morse_agreement_ok: morse_ok,
        jumps_ok,
        nondegenerate_ok: nondeg_ok,
        details,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_range_gives_empty_result() {
        let f = NonlinearitySpec::power(3.0).unwrap();
        let cfg = SweepConfig::new(3, f, 1.0, 0.5, 10);
        let r = sweep(&cfg);
        assert!(r.samples.is_empty());
        assert!(r.detected_jumps.is_empty());
    }

    #[test]
    fn even_samples_are_nudged() {
        let f = NonlinearitySpec::power(3.0).unwrap();
        let cfg = SweepConfig::new(3, f, 0.2, 5.8, 29);
        let alphas = sample_alphas(&cfg);
        assert_eq!(alphas.len(), 29);
        for a in &alphas {
            let nearest = 2.0 * (a / 2.0).round();
            assert!(nearest <= 0.0 || (a - nearest).abs() > 5e-4, "{a}");
        }
        assert!(alphas.iter().any(|a| (a - 2.001).abs() < 1e-12));
        assert!(alphas.iter().any(|a| (a - 4.001).abs() < 1e-12));
    }
}
