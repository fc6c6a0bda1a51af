//! Gamma function and the Euler constant in double-double precision.
//!
//! Gamma is computed by shifting the argument into [1, 2), pushing it up to
//! [41, 42) where the Stirling series with exact-rational Bernoulli
//! coefficients reaches ~1e-33, and dividing the shift product back out.
//! Unlike Spouge-type fits, no step involves internally cancelling sums, so
//! the double-double budget survives. Half-integer and integer arguments in
//! [1, 2) take exact fast paths off sqrt(pi).

use super::dd::{Dd, PI};
use std::sync::OnceLock;

/// B_{2k} as exact rationals, k = 1..=11.
const BERNOULLI: [(f64, f64); 11] = [
    (1.0, 6.0),
    (-1.0, 30.0),
    (1.0, 42.0),
    (-1.0, 30.0),
    (5.0, 66.0),
    (-691.0, 2730.0),
    (7.0, 6.0),
    (-3617.0, 510.0),
    (43867.0, 798.0),
    (-174611.0, 330.0),
    (854513.0, 138.0),
];

/// ln Gamma(x) by the Stirling series; intended for x >= 41 where the
/// truncation sits below 1e-35.
fn stirling_ln_gamma(x: Dd) -> Dd {
    let half_ln_2pi = (Dd::from(2.0) * PI).ln() * Dd::from(0.5);
    let mut acc = (x - Dd::from(0.5)) * x.ln() - x + half_ln_2pi;
    let x2 = (x * x).recip();
    let mut xp = x.recip();
    for (k, (num, den)) in BERNOULLI.iter().enumerate() {
        let kk = (k + 1) as f64;
        acc = acc + Dd::from(*num) / Dd::from(den * 2.0 * kk * (2.0 * kk - 1.0)) * xp;
        xp = xp * x2;
    }
    acc
}

/// Gamma on [1, 2), the reduced range.
fn gamma_reduced(f: Dd) -> Dd {
    if f.hi == 1.0 && f.lo == 0.0 {
        return Dd::ONE;
    }
    if f.hi == 1.5 && f.lo == 0.0 {
        return PI.sqrt() * Dd::from(0.5);
    }
    let shifted = f + Dd::from(40.0);
    let mut prod = Dd::ONE;
    for j in 0..40 {
        prod = prod * (f + Dd::from(j as f64));
    }
    stirling_ln_gamma(shifted).exp() / prod
}

/// Gamma at any non-pole real argument.
pub fn gamma_dd(x: Dd) -> Dd {
    let mut x = x;
    let mut pre = Dd::ONE; // Gamma(input) = pre * Gamma(x)
    while x.hi < 1.0 {
        pre = pre / x;
        x = x + Dd::ONE;
    }
    while x.hi >= 2.0 {
        x = x - Dd::ONE;
        pre = pre * x;
    }
    pre * gamma_reduced(x)
}

pub fn gamma(x: f64) -> f64 {
    gamma_dd(Dd::from(x)).f64()
}

/// Euler's constant in dd, from H_N - ln N with the Euler-Maclaurin
/// corrections at N = 1000 (remainder ~1e-38).
pub fn euler_gamma_dd() -> Dd {
    static G: OnceLock<Dd> = OnceLock::new();
    *G.get_or_init(|| {
        let n = 1000u32;
        let mut h = Dd::ZERO;
        for j in 1..=n {
            h = h + Dd::from(j as f64).recip();
        }
        let nd = Dd::from(n as f64);
        let mut acc = h - nd.ln() - (Dd::from(2.0) * nd).recip();
        let n2 = (nd * nd).recip();
        let mut xp = n2;
        for (k, (num, den)) in BERNOULLI.iter().take(6).enumerate() {
            let kk = (k + 1) as f64;
            acc = acc + Dd::from(*num) / Dd::from(den * 2.0 * kk) * xp;
            xp = xp * n2;
        }
        acc
    })
}
