//! Catalogue of nonlinear terms F, their derivatives, and numeric checks of
//! the structural assumptions that back uniqueness of the ground state.
//!
//! All kinds satisfy F(0) = 0, F'(0) = -m < 0 and are extended to u < 0 in an
//! odd way: F(-u) = -F(u) exactly.

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NonlinearityKind {
    /// u^p - u.
    PowerMinusLinear { p: f64 },
    /// u^((N+2+2a-eps)/(N-2)) - u; the exponent tracks alpha.
    AlphaDependentPower { eps: f64, n: u32 },
    /// u^p + sum c_q u^q - m u with 1 < q < p.
    Polynomial { p: f64, m: f64, terms: Vec<(f64, f64)> },
    /// max(u^p, u^q) - m u with p > q > 1.
    MaxPower { p: f64, q: f64, m: f64 },
    /// u^q / (1 + u^(q-p)) - m u.
    Rational { q: f64, p: f64, m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearitySpec {
    pub kind: NonlinearityKind,
    /// The CLI string this spec was built from, echoed into artifacts.
    pub source: String,
}

impl NonlinearitySpec {
    pub fn new(kind: NonlinearityKind) -> Result<Self> {
        let source = kind.canonical_source();
        let spec = NonlinearitySpec { kind, source };
        spec.validate()?;
        Ok(spec)
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::new(NonlinearityKind::PowerMinusLinear { p })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match &self.kind {
            NonlinearityKind::PowerMinusLinear { p } => {
                if !(p.is_finite() && *p > 1.0) {
                    return bad(format!("pow: need p > 1, got {p}"));
                }
            }
            NonlinearityKind::AlphaDependentPower { eps, n } => {
                if !(eps.is_finite() && *eps > 0.0 && *eps < 4.0) {
                    return bad(format!("alphapow: need 0 < eps < 4, got {eps}"));
                }
                if *n < 3 {
                    return bad(format!("alphapow: need N >= 3, got {n}"));
                }
            }
            NonlinearityKind::Polynomial { p, m, terms } => {
                if !(p.is_finite() && *p > 1.0 && m.is_finite() && *m > 0.0) {
                    return bad(format!("poly: need p > 1 and m > 0, got p={p}, m={m}"));
                }
                for (q, c) in terms {
                    if !(q.is_finite() && c.is_finite() && *q > 1.0 && *q < *p) {
                        return bad(format!("poly: term exponent must satisfy 1 < q < p, got q={q}, c={c}"));
                    }
                }
            }
            NonlinearityKind::MaxPower { p, q, m } => {
                if !(p.is_finite() && q.is_finite() && m.is_finite() && *p > *q && *q > 1.0 && *m > 0.0) {
                    return bad(format!("max: need p > q > 1 and m > 0, got p={p}, q={q}, m={m}"));
                }
            }
            NonlinearityKind::Rational { q, p, m } => {
                if !(p.is_finite() && q.is_finite() && m.is_finite() && *m > 0.0 && *p > 1.0 && *q > 1.0) {
                    return bad(format!("rat: need p, q > 1 and m > 0, got p={p}, q={q}, m={m}"));
                }
            }
        }
        Ok(())
    }

    pub fn alpha_dependent(&self) -> bool {
        matches!(self.kind, NonlinearityKind::AlphaDependentPower { .. })
    }

    /// m = -F'(0).
    pub fn mass(&self) -> f64 {
        match &self.kind {
            NonlinearityKind::PowerMinusLinear { .. } => 1.0,
            NonlinearityKind::AlphaDependentPower { .. } => 1.0,
            NonlinearityKind::Polynomial { m, .. } => *m,
            NonlinearityKind::MaxPower { m, .. } => *m,
            NonlinearityKind::Rational { m, .. } => *m,
        }
    }

    /// Power governing growth at infinity (enters the admissibility bound).
    pub fn growth_exponent(&self, alpha: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::PowerMinusLinear { p } => *p,
            NonlinearityKind::AlphaDependentPower { eps, n } => {
                (*n as f64 + 2.0 + 2.0 * alpha - eps) / (*n as f64 - 2.0)
            }
            NonlinearityKind::Polynomial { p, .. } => *p,
            NonlinearityKind::MaxPower { p, .. } => *p,
            NonlinearityKind::Rational { q, p, .. } => p.min(*q),
        }
    }

    /// (F(u), F'(u)), odd-extended for u < 0.
    pub fn eval(&self, u: f64, alpha: f64) -> Result<(f64, f64)> {
        if u < 0.0 {
            let (f, fp) = self.eval(-u, alpha)?;
            return Ok((-f, fp));
        }
        let (f, fp) = self.eval_nonneg(u, alpha);
        if !(f.is_finite() && fp.is_finite()) {
            return Err(Error::NonFinite { u, alpha });
        }
        Ok((f, fp))
    }

    fn eval_nonneg(&self, u: f64, alpha: f64) -> (f64, f64) {
        match &self.kind {
            NonlinearityKind::PowerMinusLinear { p } => power_eval(u, *p, 1.0),
            NonlinearityKind::AlphaDependentPower { eps, n } => {
                let p = (*n as f64 + 2.0 + 2.0 * alpha - eps) / (*n as f64 - 2.0);
                power_eval(u, p, 1.0)
            }
            NonlinearityKind::Polynomial { p, m, terms } => {
                let (mut f, mut fp) = power_eval(u, *p, *m);
                for (q, c) in terms {
                    f += c * u.powf(*q);
                    fp += c * q * u.powf(q - 1.0);
                }
                (f, fp)
            }
            NonlinearityKind::MaxPower { p, q, m } => {
                let e = if u >= 1.0 { *p } else { *q };
                power_eval(u, e, *m)
            }
            NonlinearityKind::Rational { q, p, m } => {
                if u == 0.0 {
                    return (0.0, -m);
                }
                let w = u.powf(q - p);
                let den = 1.0 + w;
                let num = u.powf(*q);
                let f = num / den - m * u;
                let dnum = q * u.powf(q - 1.0);
                let dden = (q - p) * u.powf(q - p - 1.0);
                let fp = (dnum * den - num * dden) / (den * den) - m;
                (f, fp)
            }
        }
    }

    /// Largest positive zero of F (the level the shooting bracket starts
    /// from). Scans a log grid, then bisects.
    pub fn largest_positive_zero(&self, alpha: f64) -> Result<f64> {
        let f = |u: f64| self.eval(u, alpha).map(|(v, _)| v);
        let n = 4000;
        let (lo, hi) = (1e-8f64, 1e8f64);
        let ratio = (hi / lo).ln() / (n as f64);
        let mut last: Option<(f64, f64)> = None;
        let mut bracket = None;
        for j in 0..=n {
            let u = lo * ((j as f64) * ratio).exp();
            let v = f(u)?;
            if let Some((pu, pv)) = last {
                if pv < 0.0 && v >= 0.0 {
                    bracket = Some((pu, u));
                }
            }
            last = Some((u, v));
        }
        let Some((mut a, mut b)) = bracket else {
            return Err(Error::Numeric("no sign change of F on the scan grid".into()));
        };
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if f(mid)? < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }

    pub fn canonical_source(&self) -> String {
        self.kind.canonical_source()
    }

    /// Parses the CLI form, e.g. `pow:p=3`, `alphapow:eps=1,N=3`,
    /// `poly:p=3,m=1,c=2:0.5`, `max:p=3,q=2,m=1`, `rat:q=3,p=2,m=1`.
    pub fn parse(s: &str) -> Result<Self> {
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, r),
            None => (s, ""),
        };
        let mut kv: Vec<(String, String)> = Vec::new();
        if !rest.is_empty() {
            for part in rest.split(',') {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidParameter(format!("bad F parameter `{part}` in `{s}`")))?;
                kv.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let num = |key: &str| -> Result<f64> {
            kv.iter()
                .find(|(k, _)| k == key)
                .ok_or_else(|| Error::InvalidParameter(format!("missing `{key}` in `{s}`")))?
                .1
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad value for `{key}` in `{s}`")))
        };
        let kind = match head {
            "pow" => NonlinearityKind::PowerMinusLinear { p: num("p")? },
            "alphapow" => NonlinearityKind::AlphaDependentPower {
                eps: num("eps")?,
                n: num("N")? as u32,
            },
            "poly" => {
                let mut terms = Vec::new();
                for (k, v) in &kv {
                    if k == "c" {
                        let (q, c) = v.split_once(':').ok_or_else(|| {
                            Error::InvalidParameter(format!("poly term must be c=q:coeff, got `{v}`"))
                        })?;
                        terms.push((
                            q.parse::<f64>()
                                .map_err(|_| Error::InvalidParameter(format!("bad exponent `{q}`")))?,
                            c.parse::<f64>()
                                .map_err(|_| Error::InvalidParameter(format!("bad coefficient `{c}`")))?,
                        ));
                    }
                }
                NonlinearityKind::Polynomial { p: num("p")?, m: num("m")?, terms }
            }
            "max" => NonlinearityKind::MaxPower { p: num("p")?, q: num("q")?, m: num("m")? },
            "rat" => NonlinearityKind::Rational { q: num("q")?, p: num("p")?, m: num("m")? },
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown nonlinearity `{other}` (expected pow|alphapow|poly|max|rat)"
                )))
            }
        };
        let mut spec = Self::new(kind)?;
        spec.source = s.to_string();
        Ok(spec)
    }
}

impl NonlinearityKind {
    fn canonical_source(&self) -> String {
        match self {
            NonlinearityKind::PowerMinusLinear { p } => format!("pow:p={p}"),
            NonlinearityKind::AlphaDependentPower { eps, n } => format!("alphapow:eps={eps},N={n}"),
            NonlinearityKind::Polynomial { p, m, terms } => {
                let mut s = format!("poly:p={p},m={m}");
                for (q, c) in terms {
                    s.push_str(&format!(",c={q}:{c}"));
                }
                s
            }
            NonlinearityKind::MaxPower { p, q, m } => format!("max:p={p},q={q},m={m}"),
            NonlinearityKind::Rational { q, p, m } => format!("rat:q={q},p={p},m={m}"),
        }
    }
}

fn power_eval(u: f64, p: f64, m: f64) -> (f64, f64) {
    (u.powf(p) - m * u, p * u.powf(p - 1.0) - m)
}

/// Witness of a failed assumption check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureWitness {
    pub check: String,
    pub u: f64,
    pub detail: String,
}

/// Numeric verdicts on the structural assumptions, sampled on a scan grid.
/// The sign condition above theta is reported both as printed (F(u) > theta)
/// and in the positivity variant (F(u) > 0); downstream warnings use the
/// positivity variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub lambda_limit: Option<f64>,
    pub ell: Option<f64>,
    pub s_witness: Option<f64>,
    pub fin0: bool,
    pub fcresce: bool,
    pub fnozero: bool,
    pub f2_literal: bool,
    pub f2_positive: bool,
    pub f2_fprime_origin: bool,
    pub f3: bool,
    pub failures: Vec<FailureWitness>,
}

impl AssumptionReport {
    /// The gate used to attach warnings to downstream solves.
    pub fn passes_core(&self) -> bool {
        self.fin0 && self.fcresce && self.fnozero && self.f2_positive && self.f2_fprime_origin && self.f3
    }
}

/// Log-spaced grid on (0, u_max] suitable for `check_assumptions`.
pub fn default_scan_grid(u_max: f64) -> Vec<f64> {
    let n = 16384;
    let lo = (u_max * 1e-8).max(1e-12);
    let ratio = (u_max / lo).ln() / (n as f64 - 1.0);
    (0..n).map(|j| lo * ((j as f64) * ratio).exp()).collect()
}

/// Samples the structural assumptions on `grid`. A missing sign change is
/// reported as a failed check, never as an error.
pub fn check_assumptions(spec: &NonlinearitySpec, alpha: f64, grid: &[f64]) -> Result<AssumptionReport> {
    if grid.len() < 16 || grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] <= 0.0 {
        return Err(Error::InvalidParameter("scan grid must be >= 16 increasing positive points".into()));
    }
    let f = |u: f64| -> Result<f64> { Ok(spec.eval(u, alpha)?.0) };
    let fp = |u: f64| -> Result<f64> { Ok(spec.eval(u, alpha)?.1) };
    let u_max = *grid.last().unwrap();
    let mut failures = Vec::new();

    // (Fin0): F(0) = 0 exactly and F'(0) = -m < 0.
    let (f0, fp0) = spec.eval(0.0, alpha)?;
    let fin0 = f0 == 0.0 && fp0 < 0.0;
    if !fin0 {
        failures.push(FailureWitness {
            check: "Fin0".into(),
            u: 0.0,
            detail: format!("F(0)={f0}, F'(0)={fp0}"),
        });
    }

    // theta: largest sign change of F, refined by bisection.
    let mut theta = None;
    {
        let mut prev: Option<(f64, f64)> = None;
        let mut bracket = None;
        for &u in grid {
            let v = f(u)?;
            if let Some((pu, pv)) = prev {
                if pv < 0.0 && v >= 0.0 {
                    bracket = Some((pu, u));
                }
            }
            prev = Some((u, v));
        }
        if let Some((mut a, mut b)) = bracket {
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if f(mid)? < 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            theta = Some(0.5 * (a + b));
        }
    }

    // Primitive P(u) = int_0^u F, cumulative over the grid.
    let mut prim = Vec::with_capacity(grid.len());
    {
        let integrand = |u: f64| spec.eval(u, alpha).map(|(v, _)| v).unwrap_or(f64::NAN);
        let mut acc = adaptive_simpson(&integrand, 0.0, grid[0], 1e-13)?;
        prim.push(acc);
        for w in grid.windows(2) {
            // Dense grid: one Simpson panel per interval.
            let (a, b) = (w[0], w[1]);
            let m = 0.5 * (a + b);
            acc += (b - a) / 6.0 * (f(a)? + 4.0 * f(m)? + f(b)?);
            prim.push(acc);
        }
    }

    // phi: zero of the primitive past theta; s_witness: first grid point with
    // positive primitive.
    let mut phi = None;
    let mut s_witness = None;
    for (j, &u) in grid.iter().enumerate() {
        if prim[j] > 0.0 {
            s_witness = Some(u);
            if j > 0 {
                let (mut a, mut b) = (grid[j - 1], u);
                let base = prim[j - 1];
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let integrand = |x: f64| spec.eval(x, alpha).map(|(v, _)| v).unwrap_or(f64::NAN);
                    let p_mid = base + adaptive_simpson(&integrand, grid[j - 1], mid, 1e-14)?;
                    if p_mid < 0.0 {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                phi = Some(0.5 * (a + b));
            }
            break;
        }
    }
    let fnozero = s_witness.is_some();
    if !fnozero {
        failures.push(FailureWitness {
            check: "Fnozero".into(),
            u: u_max,
            detail: "primitive of F never positive on the grid".into(),
        });
    }

    // (Fcresce): |F|/u^p bounded at infinity.
    let p_growth = spec.growth_exponent(alpha);
    let ratio_at = |u: f64| -> Result<f64> { Ok(f(u)?.abs() / u.powf(p_growth)) };
    let ell = {
        let mut best: f64 = 0.0;
        for &u in grid.iter().filter(|&&u| u >= u_max / 10.0) {
            best = best.max(ratio_at(u)?);
        }
        Some(best)
    };
    let fcresce = {
        let r_top = ratio_at(u_max)?;
        let r_mid = ratio_at(u_max / 10.0f64.sqrt())?;
        let ok = r_top.is_finite() && r_mid.is_finite() && r_top < 2.0 * r_mid.max(1e-300);
        if !ok {
            failures.push(FailureWitness {
                check: "Fcresce".into(),
                u: u_max,
                detail: format!("|F|/u^{p_growth} still growing: {r_mid} -> {r_top}"),
            });
        }
        ok
    };

    // (F2): sign structure above/below theta, and F' <= 0 near the origin.
    let (mut f2_literal, mut f2_positive) = (theta.is_some(), theta.is_some());
    if let Some(th) = theta {
        for &u in grid {
            let v = f(u)?;
            if u < th * (1.0 - 1e-9) && v >= 0.0 {
                f2_literal = false;
                f2_positive = false;
                failures.push(FailureWitness {
                    check: "F2".into(),
                    u,
                    detail: format!("F({u}) = {v} >= 0 below theta"),
                });
                break;
            }
            if u > th * (1.0 + 1e-9) {
                if f2_positive && v <= 0.0 {
                    f2_positive = false;
                    failures.push(FailureWitness {
                        check: "F2(positive)".into(),
                        u,
                        detail: format!("F({u}) = {v} <= 0 above theta"),
                    });
                }
                if f2_literal && v <= th {
                    f2_literal = false;
                    failures.push(FailureWitness {
                        check: "F2(literal)".into(),
                        u,
                        detail: format!("F({u}) = {v} <= theta = {th}"),
                    });
                }
            }
        }
    } else {
        failures.push(FailureWitness {
            check: "F2".into(),
            u: u_max,
            detail: "no sign change of F found on the grid".into(),
        });
    }
    let f2_fprime_origin = {
        let th = theta.unwrap_or(1.0);
        let mut ok = true;
        for j in 1..=16 {
            let u = th / 20.0 * (j as f64) / 16.0;
            if fp(u)? > 1e-12 {
                ok = false;
                failures.push(FailureWitness {
                    check: "F2(origin)".into(),
                    u,
                    detail: format!("F'({u}) = {} > 0 near 0", fp(u)?),
                });
                break;
            }
        }
        ok
    };

    // (F3): monotonicity and pinching of G(u) = u F'(u) / F(u), with a
    // relative neighborhood of the pole at theta excluded.
    let g = |u: f64| -> Result<f64> {
        let (v, d) = spec.eval(u, alpha)?;
        Ok(u * d / v)
    };
    let lambda_limit = {
        // Linear-in-1/u extrapolation of G from the top of the grid.
        let g_top = g(u_max)?;
        let g_half = g(u_max / 2.0)?;
        Some(2.0 * g_top - g_half)
    };
    let mut f3 = theta.is_some() && phi.is_some();
    if let (Some(th), Some(ph), Some(lam)) = (theta, phi, lambda_limit) {
        let excl = |u: f64| (u - th).abs() < 1e-3 * th;
        let slack = 1e-9;
        if lam < 1.0 - 1e-6 {
            f3 = false;
            failures.push(FailureWitness {
                check: "F3".into(),
                u: u_max,
                detail: format!("lambda = {lam} < 1"),
            });
        }
        let g_phi = g(ph)?;
        let mut prev: Option<(f64, f64)> = None;
        for &u in grid {
            if excl(u) {
                prev = None;
                continue;
            }
            let gu = g(u)?;
            if u >= ph {
                if let Some((pu, pg)) = prev {
                    if pu >= ph && gu > pg + slack * (1.0 + pg.abs()) {
                        f3 = false;
                        failures.push(FailureWitness {
                            check: "F3(monotone)".into(),
                            u,
                            detail: format!("G increased from {pg} to {gu}"),
                        });
                        break;
                    }
                }
            } else if u >= th * (1.0 + 1e-3) {
                if gu < g_phi - 1e-6 * (1.0 + g_phi.abs()) {
                    f3 = false;
                    failures.push(FailureWitness {
                        check: "F3(mid)".into(),
                        u,
                        detail: format!("G({u}) = {gu} < G(phi) = {g_phi}"),
                    });
                    break;
                }
            } else if u < th * (1.0 - 1e-3) && gu > lam + 1e-6 * (1.0 + lam.abs()) {
                f3 = false;
                failures.push(FailureWitness {
                    check: "F3(low)".into(),
                    u,
                    detail: format!("G({u}) = {gu} > lambda = {lam}"),
                });
                break;
            }
            prev = Some((u, gu));
        }
    }

    Ok(AssumptionReport {
        theta,
        phi,
        lambda_limit,
        ell,
        s_witness,
        fin0,
        fcresce,
        fnozero,
        f2_literal,
        f2_positive,
        f2_fprime_origin,
        f3,
        failures,
    })
}
