//! Small quadrature helpers shared by the assumption checker, energy norms
//! and the tail-decay verification.

use crate::error::{Error, Result};

/// Adaptive Simpson with the classical Richardson acceptance test.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter("non-finite quadrature bounds".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 0usize;
    let v = simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48, &mut evals)?;
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    if *evals > 4_000_000 {
        return Err(Error::QuadratureFailure(format!(
            "evaluation budget exhausted on [{a}, {b}]"
        )));
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Relative floor: once the split correction sits at the rounding level
    // of the panel itself, further refinement cannot help.
    if delta.abs() <= 15.0 * tol
        || delta.abs() <= 1e-15 * (left.abs() + right.abs())
        || (b - a).abs() < 1e-300
    {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure(format!(
            "max refinement depth reached on [{a}, {b}]"
        )));
    }
    let l = simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals)?;
    let r = simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals)?;
    Ok(l + r)
}

/// Integral of a grid function whose derivative is also known, by the
/// derivative-corrected trapezoid rule (O(h^4) per interval).
pub fn hermite_quad(ts: &[f64], g: &[f64], gp: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..ts.len() {
        let h = ts[i] - ts[i - 1];
        acc += 0.5 * h * (g[i - 1] + g[i]) + h * h / 12.0 * (gp[i - 1] - gp[i]);
    }
    acc
}

/// Plain trapezoid on an arbitrary grid.
pub fn trapezoid(ts: &[f64], g: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..ts.len() {
        acc += 0.5 * (ts[i] - ts[i - 1]) * (g[i - 1] + g[i]);
    }
    acc
}
