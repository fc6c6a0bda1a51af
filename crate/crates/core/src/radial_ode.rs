//! The singular radial reduction -V'' - (k(alpha)/t) V' = F(V) on (0, inf)
//! with V'(0) = 0 and V vanishing at infinity: change of variables to and
//! from the radial line of R^N, shooting for the ground state, and decay
//! diagnostics for the computed tail.

use crate::error::{Error, Result};
use crate::ivp::{hermite, locate_crossing, Dp5, IvpOptions, State, StepPoint};
use crate::nonlinearity::NonlinearitySpec;
use crate::quad::hermite_quad;
use serde::{Deserialize, Serialize};

/// k(alpha) = (2N - 2 + alpha) / (2 + alpha), the effective dimension-like
/// coefficient of the reduced equation; lies in (1, N-1] with equality only
/// at alpha = 0.
pub fn k_of_alpha(alpha: f64, n: u32) -> f64 {
    (2.0 * n as f64 - 2.0 + alpha) / (2.0 + alpha)
}

/// t = (2/(2+alpha)) r^((2+alpha)/2).
pub fn cov_forward(r: f64, alpha: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::InvalidParameter(format!("cov_forward: r = {r} < 0")));
    }
    Ok(2.0 / (2.0 + alpha) * r.powf((2.0 + alpha) / 2.0))
}

/// Inverse of `cov_forward`.
pub fn cov_inverse(t: f64, alpha: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("cov_inverse: t = {t} < 0")));
    }
    Ok(((2.0 + alpha) * t / 2.0).powf(2.0 / (2.0 + alpha)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: u32,
    pub alpha: f64,
    pub f: NonlinearitySpec,
    pub k: f64,
}

impl ProblemSpec {
    pub fn new(n: u32, alpha: f64, f: NonlinearitySpec) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!("dimension N = {n} must be >= 3")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must be >= 0")));
        }
        f.validate()?;
        Ok(ProblemSpec { n, alpha, k: k_of_alpha(alpha, n), f })
    }

    pub fn mass(&self) -> f64 {
        self.f.mass()
    }

    /// Subcriticality in the reduced dimension: growth p < (k+3)/(k-1).
    pub fn is_admissible(&self) -> bool {
        let p = self.f.growth_exponent(self.alpha);
        p < (self.k + 3.0) / (self.k - 1.0)
    }
}

/// Series start regularizing the t = 0 singularity:
/// V(t0) = a - F(a) t0^2/(2(1+k)) + c4 t0^4, V'(t0) from the same expansion.
pub fn taylor_start(a: f64, spec: &ProblemSpec, t0: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("taylor_start: a = {a} must be > 0")));
    }
    if !(t0 > 0.0) {
        return Err(Error::InvalidParameter(format!("taylor_start: t0 = {t0} must be > 0")));
    }
    let k = spec.k;
    let (fa, fpa) = spec.f.eval(a, spec.alpha)?;
    let c2 = -fa / (2.0 * (1.0 + k));
    let c4 = -fpa * c2 / (12.0 + 4.0 * k);
    let v = a + c2 * t0 * t0 + c4 * t0.powi(4);
    let dv = 2.0 * c2 * t0 + 4.0 * c4 * t0.powi(3);
    Ok((v, dv))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ShotEvent {
    /// V reached 0 with V' < 0.
    Overshoot { t: f64, dv: f64 },
    /// V' reached 0 with 0 < V < a.
    Undershoot { t: f64, v: f64 },
    /// V fell below the decay threshold and kept the decaying sign structure
    /// to the end of the window.
    Decay { t: f64, v: f64 },
    /// Integration window exhausted without classification.
    Timeout { t: f64, v: f64, dv: f64 },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ShootOptions {
    pub rtol: f64,
    /// Relative bracket width at which bisection stops.
    pub shoot_tol: f64,
    pub t_max: Option<f64>,
    pub t0: Option<f64>,
    pub a_cap: f64,
    /// DECAY fires when V < decay_tol * a with V' < 0 at the window end.
    pub decay_tol: f64,
    /// The computed trajectory is handed off to the asymptotic tail where
    /// V drops below handoff_tol * a.
    pub handoff_tol: f64,
    pub h_max_search: f64,
    pub h_max_final: f64,
    pub tail_len: Option<f64>,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            rtol: 1e-10,
            shoot_tol: 1e-15,
            t_max: None,
            t0: None,
            a_cap: 1e6,
            decay_tol: 1e-8,
            handoff_tol: 1e-5,
            h_max_search: 0.25,
            h_max_final: 0.01,
            tail_len: None,
        }
    }
}

fn rhs_of(spec: &ProblemSpec) -> impl Fn(f64, State) -> State + '_ {
    let k = spec.k;
    let alpha = spec.alpha;
    move |t: f64, y: State| {
        let f = spec.f.eval(y[0], alpha).map(|p| p.0).unwrap_or(f64::NAN);
        [y[1], -k / t * y[1] - f]
    }
}

/// Integrates one shot from V(0) = a and classifies the outcome.
///
/// Overshoot fires when V crosses 0 downward, undershoot when V' crosses 0
/// upward with V > 0. A crossing of the decay level (decay_tol * a) only
/// becomes a DECAY event after a confirmation window with neither of the
/// other events: an overshooting shot also passes through the level on its
/// way to zero, so the crossing alone proves nothing. An explicit
/// `stop_below` level stops the run at its crossing unconditionally (used to
/// cut the profile at the hand-off point once a* has converged). When
/// `record` is set the accepted steps are returned.
pub fn integrate_ivp(
    a: f64,
    spec: &ProblemSpec,
    t_max: f64,
    opts: &ShootOptions,
    record: bool,
    stop_below: Option<f64>,
) -> Result<(Option<Trajectory>, ShotEvent)> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("shot amplitude a = {a} must be > 0")));
    }
    let m = spec.mass();
    let t0 = opts.t0.unwrap_or(1e-4 / m.sqrt());
    let (v0, dv0) = taylor_start(a, spec, t0)?;
    let (fa, _) = spec.f.eval(a, spec.alpha)?;
    if fa <= 0.0 {
        // At or below the largest zero of F the shot can never decay:
        // stationary or initially increasing. Classified as an undershoot
        // degenerately at the start.
        return Ok((
            record.then(|| Trajectory { t: vec![0.0, t0], v: vec![a, v0], dv: vec![0.0, dv0] }),
            ShotEvent::Undershoot { t: t0, v: v0 },
        ));
    }
    let rhs = rhs_of(spec);
    let ivp = Dp5::new(&rhs, IvpOptions {
        rtol: opts.rtol,
        atol: [1e-14 * a, 1e-14 * a * m.sqrt()],
        h_init: t0,
        h_max: if record { opts.h_max_final } else { opts.h_max_search } / m.sqrt(),
        h_min: 1e-14,
        max_steps: 40_000_000,
    });

    let mut traj = record.then(|| Trajectory {
        t: vec![0.0, t0],
        v: vec![a, v0],
        dv: vec![0.0, dv0],
    });
    let confirm_window = 2.0 / m.sqrt();
    let mut pending_decay: Option<ShotEvent> = None;
    let mut event: Option<ShotEvent> = None;
    let end = ivp.run(t0, [v0, dv0], t_max, |from, to| {
        // Candidate events inside this step, earliest wins.
        let mut hit: Option<(f64, ShotEvent)> = None;
        if from.y[0] > 0.0 && to.y[0] <= 0.0 {
            let tc = locate_crossing(from, to, 0, 0.0);
            let dv = hermite_slope(from, to, 0, tc);
            hit = Some((tc, ShotEvent::Overshoot { t: tc, dv }));
        }
        if from.y[1] < 0.0 && to.y[1] >= 0.0 {
            let tc = locate_crossing(from, to, 1, 0.0);
            let v = hermite(from, to, 0, tc);
            if v > 0.0 && hit.map(|(t, _)| tc < t).unwrap_or(true) {
                hit = Some((tc, ShotEvent::Undershoot { t: tc, v }));
            }
        }
        if hit.is_none() {
            if let Some(level) = stop_below {
                // Unconditional stop level for profile assembly.
                if from.y[0] > level && to.y[0] <= level && to.y[1] < 0.0 {
                    let tc = locate_crossing(from, to, 0, level);
                    hit = Some((tc, ShotEvent::Decay { t: tc, v: level }));
                }
            } else if pending_decay.is_none() {
                let level = opts.decay_tol * a;
                if from.y[0] > level && to.y[0] <= level && to.y[1] < 0.0 {
                    let tc = locate_crossing(from, to, 0, level);
                    pending_decay = Some(ShotEvent::Decay { t: tc, v: level });
                }
            }
        }
        if let Some((tc, ev)) = hit {
            if let Some(tr) = traj.as_mut() {
                let v = hermite(from, to, 0, tc);
                let dv = hermite(from, to, 1, tc);
                tr.t.push(tc);
                tr.v.push(v);
                tr.dv.push(dv);
            }
            event = Some(ev);
            return false;
        }
        if let Some(tr) = traj.as_mut() {
            tr.t.push(to.t);
            tr.v.push(to.y[0]);
            tr.dv.push(to.y[1]);
        }
        // A decay crossing counts once it survives the confirmation window
        // without an overshoot or undershoot.
        if let Some(ShotEvent::Decay { t: tc, .. }) = pending_decay {
            if to.t >= tc + confirm_window {
                event = pending_decay;
                return false;
            }
        }
        true
    })?;

    let event = event.or(pending_decay).unwrap_or_else(|| {
        let level = stop_below.unwrap_or(opts.decay_tol * a);
        if end.y[0] < level && end.y[1] < 0.0 {
            ShotEvent::Decay { t: end.t, v: end.y[0] }
        } else {
            ShotEvent::Timeout { t: end.t, v: end.y[0], dv: end.y[1] }
        }
    });
    Ok((traj, event))
}

fn hermite_slope(from: &StepPoint, to: &StepPoint, c: usize, t: f64) -> f64 {
    let h = 1e-7 * (to.t - from.t);
    (hermite(from, to, c, t.min(to.t - h) + h) - hermite(from, to, c, (t.min(to.t - h)).max(from.t))) / h
}

/// Ground-state profile on a graded t-grid with the asymptotic tail spliced
/// past the hand-off point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub grid: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
    pub a_star: f64,
    pub delta_fit: f64,
    /// int t^k (V')^2 dt and int t^k V^2 dt.
    pub energy_grad: f64,
    pub energy_l2: f64,
    pub handoff_index: usize,
    pub k: f64,
    pub mass: f64,
    pub rtol: f64,
    pub shoot_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShootDiagnostics {
    pub bisections: u32,
    pub bracket: (f64, f64),
    pub warm_start_used: bool,
    pub decay_event: bool,
}

pub fn shoot_ground_state(spec: &ProblemSpec, opts: &ShootOptions) -> Result<RadialProfile> {
    Ok(shoot_ground_state_with(spec, opts, None)?.0)
}

/// Shooting with an optional warm bracket (a_lo, a_hi) from a continuation
/// step. Falls back to the cold doubling bracket when the hint is invalid.
pub fn shoot_ground_state_with(
    spec: &ProblemSpec,
    opts: &ShootOptions,
    warm: Option<(f64, f64)>,
) -> Result<(RadialProfile, ShootDiagnostics)> {
    let m = spec.mass();
    if !(m > 0.0) {
        return Err(Error::InvalidParameter("nonlinearity must have F'(0) < 0".into()));
    }
    let t_max = opts.t_max.unwrap_or(40.0 / m.sqrt());
    let theta = spec.f.largest_positive_zero(spec.alpha)?;
    let classify = |a: f64| -> Result<ShotEvent> {
        Ok(integrate_ivp(a, spec, t_max, opts, false, None)?.1)
    };

    let mut warm_start_used = false;
    let mut bracket: Option<(f64, f64)> = None;
    if let Some((lo, hi)) = warm {
        if lo > theta && hi > lo {
            let ev_lo = classify(lo)?;
            let ev_hi = classify(hi)?;
            if matches!(ev_lo, ShotEvent::Undershoot { .. })
                && matches!(ev_hi, ShotEvent::Overshoot { .. })
            {
                bracket = Some((lo, hi));
                warm_start_used = true;
            }
        }
    }
    if bracket.is_none() {
        let mut lo = theta;
        let mut hi = 2.0 * theta;
        loop {
            if hi > opts.a_cap {
                return Err(Error::NoBracket { a_cap: opts.a_cap });
            }
            match classify(hi)? {
                ShotEvent::Overshoot { .. } => {
                    bracket = Some((lo, hi));
                    break;
                }
                ShotEvent::Undershoot { .. } | ShotEvent::Timeout { .. } => {
                    lo = hi;
                    hi *= 2.0;
                }
                ShotEvent::Decay { .. } => {
                    // Landed on the ground state; fabricate a tight bracket.
                    bracket = Some((hi * (1.0 - 1e-12), hi * (1.0 + 1e-12)));
                    break;
                }
            }
        }
    }
    let (mut lo, mut hi) = bracket.unwrap();

    let mut bisections = 0u32;
    let mut decay_event = false;
    while hi - lo > opts.shoot_tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket at floating-point resolution
        }
        bisections += 1;
        match classify(mid)? {
            ShotEvent::Undershoot { .. } => lo = mid,
            ShotEvent::Overshoot { .. } => hi = mid,
            ShotEvent::Decay { .. } => {
                decay_event = true;
                lo = mid;
                hi = mid;
                break;
            }
            ShotEvent::Timeout { .. } => {
                // Unclassifiable at this resolution; accept the midpoint.
                lo = mid;
                hi = mid;
                break;
            }
        }
        if bisections > 400 {
            break;
        }
    }
    let a_star = 0.5 * (lo + hi);

    // Final dense pass, stopped at the hand-off level.
    let handoff_level = opts.handoff_tol * a_star;
    let (traj, ev) = integrate_ivp(a_star, spec, t_max, opts, true, Some(handoff_level))?;
    let mut traj = traj.expect("recording requested");
    match ev {
        ShotEvent::Decay { .. } => {}
        ShotEvent::Overshoot { .. } | ShotEvent::Undershoot { .. } => {
            // The converged shot veered before the hand-off level; keep the
            // trustworthy monotone part.
            let mut cut = traj.v.len();
            for i in 1..traj.v.len() {
                if traj.dv[i] >= 0.0 || traj.v[i] <= 0.0 {
                    cut = i;
                    break;
                }
            }
            traj.t.truncate(cut);
            traj.v.truncate(cut);
            traj.dv.truncate(cut);
            let v_end = *traj.v.last().unwrap();
            if v_end > 1e-4 * a_star {
                return Err(Error::Numeric(format!(
                    "shot at a* = {a_star} veered at V = {v_end:.3e} before the hand-off level"
                )));
            }
        }
        ShotEvent::Timeout { t, v, dv } => {
            return Err(Error::Numeric(format!(
                "final shot unresolved at t = {t} (V = {v:.3e}, V' = {dv:.3e})"
            )));
        }
    }

    let profile = assemble_profile(spec, traj, a_star, opts)?;
    Ok((
        profile,
        ShootDiagnostics { bisections, bracket: (lo, hi), warm_start_used, decay_event },
    ))
}

fn assemble_profile(
    spec: &ProblemSpec,
    traj: Trajectory,
    a_star: f64,
    opts: &ShootOptions,
) -> Result<RadialProfile> {
    let k = spec.k;
    let m = spec.mass();
    let sm = m.sqrt();
    let handoff_index = traj.t.len() - 1;
    let (t_h, v_h) = (traj.t[handoff_index], traj.v[handoff_index]);
    if !(v_h > 0.0) {
        return Err(Error::Numeric("hand-off value not positive".into()));
    }

    let mut grid = traj.t;
    let mut v = traj.v;
    let mut dv = traj.dv;

    // Asymptotic tail C t^(-k/2) e^(-sqrt(m) t), value-matched at hand-off.
    let c_tail = v_h * t_h.powf(k / 2.0) * (sm * t_h).exp();
    let tail_len = opts.tail_len.unwrap_or(14.0 / sm);
    let h_tail = 0.05 / sm;
    let mut t = t_h + h_tail;
    while t <= t_h + tail_len + 1e-12 {
        let val = c_tail * t.powf(-k / 2.0) * (-sm * t).exp();
        grid.push(t);
        v.push(val);
        dv.push(val * (-k / (2.0 * t) - sm));
        t += h_tail;
    }

    // Energy norms by derivative-corrected quadrature; integrand derivatives
    // use the ODE for V''.
    let mut g_grad = Vec::with_capacity(grid.len());
    let mut gp_grad = Vec::with_capacity(grid.len());
    let mut g_l2 = Vec::with_capacity(grid.len());
    let mut gp_l2 = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let t = grid[i];
        if t == 0.0 {
            g_grad.push(0.0);
            gp_grad.push(0.0);
            g_l2.push(0.0);
            gp_l2.push(0.0);
            continue;
        }
        let tk = t.powf(k);
        let tk1 = k * t.powf(k - 1.0);
        let vpp = -k / t * dv[i] - spec.f.eval(v[i], spec.alpha)?.0;
        g_grad.push(tk * dv[i] * dv[i]);
        gp_grad.push(tk1 * dv[i] * dv[i] + 2.0 * tk * dv[i] * vpp);
        g_l2.push(tk * v[i] * v[i]);
        gp_l2.push(tk1 * v[i] * v[i] + 2.0 * tk * v[i] * dv[i]);
    }
    let energy_grad = hermite_quad(&grid, &g_grad, &gp_grad);
    let energy_l2 = hermite_quad(&grid, &g_l2, &gp_l2);

    let mut profile = RadialProfile {
        grid,
        v,
        dv,
        a_star,
        delta_fit: f64::NAN,
        energy_grad,
        energy_l2,
        handoff_index,
        k,
        mass: m,
        rtol: opts.rtol,
        shoot_tol: opts.shoot_tol,
    };
    profile.delta_fit = decay_fit(&profile, m)?;
    Ok(profile)
}

/// Decay-rate extraction from -log(V t^(k/2)) over the last two decades of
/// the computed (pre-extension) tail above the hand-off point. The linear
/// least-squares model carries, besides the slope and intercept, the three
/// known secondary structures of a shooting tail:
///   - d/t            (modified-Bessel prefactor of the true tail),
///   - e^{+2 sqrt(m) t} (residual shot-separation error near the hand-off),
///   - e^{- sqrt(m) t}  (first nonlinear correction, largest for p = 2),
/// so the slope coefficient isolates the asymptotic rate.
pub fn decay_fit(profile: &RadialProfile, m: f64) -> Result<f64> {
    let hi = profile.handoff_index;
    let v_end = profile.v[hi];
    if !(v_end > 0.0) || v_end > 1e-4 * profile.a_star {
        return Err(Error::TailTooShort(format!(
            "tail reaches only V = {v_end:.3e} of a* = {}",
            profile.a_star
        )));
    }
    let (v_lo, v_hi) = (10.0 * v_end, 1000.0 * v_end);
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for i in (0..=hi).rev() {
        let vi = profile.v[i];
        if vi <= 0.0 || vi > v_hi {
            break;
        }
        if vi < v_lo {
            continue;
        }
        ts.push(profile.grid[i]);
        ys.push(-(vi * profile.grid[i].powf(profile.k / 2.0)).ln());
    }
    if ts.len() < 12 {
        return Err(Error::TailTooShort(format!("only {} tail samples", ts.len())));
    }
    let sm = m.sqrt();
    let last = *ts.last().unwrap();
    let (t_min, t_max) = (last.min(ts[0]), last.max(ts[0]));
    let basis = |t: f64| -> [f64; 5] {
        [
            t,
            1.0,
            1.0 / t,
            (2.0 * sm * (t - t_max)).exp(),
            (-sm * (t - t_min)).exp(),
        ]
    };
    // Normal equations, solved by Gaussian elimination with partial pivot.
    let mut a = [[0.0f64; 5]; 5];
    let mut b = [0.0f64; 5];
    for (&t, &y) in ts.iter().zip(&ys) {
        let phi = basis(t);
        for r in 0..5 {
            for c in 0..5 {
                a[r][c] += phi[r] * phi[c];
            }
            b[r] += phi[r] * y;
        }
    }
    for col in 0..5 {
        let piv = (col..5)
            .max_by(|&r1, &r2| a[r1][col].abs().partial_cmp(&a[r2][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        if a[col][col].abs() < 1e-300 {
            return Err(Error::Numeric("singular decay-fit system".into()));
        }
        for r in col + 1..5 {
            let f = a[r][col] / a[col][col];
            for c in col..5 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 5];
    for r in (0..5).rev() {
        let mut acc = b[r];
        for c in r + 1..5 {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    Ok(x[0])
}

impl RadialProfile {
    /// Hermite interpolation of (V, V') anywhere on the covered range.
    pub fn value_at(&self, t: f64) -> Result<(f64, f64)> {
        let grid = &self.grid;
        if !(t >= 0.0 && t <= *grid.last().unwrap() + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "t = {t} outside profile range [0, {}]",
                grid.last().unwrap()
            )));
        }
        let j = match grid.binary_search_by(|g| g.partial_cmp(&t).unwrap()) {
            Ok(j) => return Ok((self.v[j], self.dv[j])),
            Err(j) => j.clamp(1, grid.len() - 1),
        };
        let (t0, t1) = (grid[j - 1], grid[j]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1) = (self.v[j - 1], self.v[j]);
        let (d0, d1) = (self.dv[j - 1] * h, self.dv[j] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
            + d0 * (s3 - 2.0 * s2 + s)
            + y1 * (-2.0 * s3 + 3.0 * s2)
            + d1 * (s3 - s2);
        let dv = (y0 * (6.0 * s2 - 6.0 * s)
            + d0 * (3.0 * s2 - 4.0 * s + 1.0)
            + y1 * (-6.0 * s2 + 6.0 * s)
            + d1 * (3.0 * s2 - 2.0 * s))
            / h;
        Ok((v, dv))
    }

    pub fn t_end(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn handoff_t(&self) -> f64 {
        self.grid[self.handoff_index]
    }

    /// Structural checks: positivity, monotone decay after the last interior
    /// critical point, small terminal value, small midpoint residual of the
    /// reduced equation, finite energy norms.
    pub fn validate(&self, spec: &ProblemSpec, res_tol: f64, tail_tol: f64) -> Result<()> {
        let n = self.grid.len();
        if n < 16 {
            return Err(Error::Numeric("profile too short".into()));
        }
        for i in 1..n {
            if self.grid[i] <= self.grid[i - 1] {
                return Err(Error::Numeric("grid not strictly increasing".into()));
            }
            if self.v[i] < 0.0 {
                return Err(Error::Numeric(format!("negative V at t = {}", self.grid[i])));
            }
        }
        let last_crit = (1..n).rev().find(|&i| self.dv[i] >= 0.0).unwrap_or(0);
        for i in last_crit.max(1)..n - 1 {
            if self.v[i + 1] >= self.v[i] {
                return Err(Error::Numeric(format!(
                    "V not strictly decreasing at t = {}",
                    self.grid[i + 1]
                )));
            }
        }
        if *self.v.last().unwrap() >= tail_tol * self.a_star {
            return Err(Error::Numeric("terminal value above tail tolerance".into()));
        }
        if !(self.energy_grad.is_finite() && self.energy_l2.is_finite()) {
            return Err(Error::Numeric("energy norms not finite".into()));
        }
        // Midpoint residual on the computed part, against the local equation
        // scale (F can be enormous near t = 0 for fast-growing kinds).
        let mut worst: f64 = 0.0;
        for i in 1..=self.handoff_index.min(n - 2) {
            let (t0, t1) = (self.grid[i], self.grid[i + 1]);
            let h = t1 - t0;
            let tm = 0.5 * (t0 + t1);
            let vm = 0.5 * (self.v[i] + self.v[i + 1]) + h / 8.0 * (self.dv[i] - self.dv[i + 1]);
            let dvm = (self.v[i + 1] - self.v[i]) / h;
            let ddvm = (self.dv[i + 1] - self.dv[i]) / h;
            let f = spec.f.eval(vm, spec.alpha)?.0;
            let res = -ddvm - spec.k / tm * dvm - f;
            let scale = (self.a_star * spec.mass().max(1.0)).max(f.abs());
            worst = worst.max(res.abs() / scale);
        }
        if worst > res_tol {
            return Err(Error::Numeric(format!(
                "relative midpoint residual {worst:.3e} above {res_tol:.1e}"
            )));
        }
        Ok(())
    }
}

/// The same profile on the radial line of R^N: r-grid, u = V(t(r)) and du/dr.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedProfile {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub n: u32,
    pub alpha: f64,
}

pub fn lift_to_rn(profile: &RadialProfile, spec: &ProblemSpec) -> Result<LiftedProfile> {
    let alpha = spec.alpha;
    let mut r = Vec::with_capacity(profile.grid.len());
    let mut u = Vec::with_capacity(profile.grid.len());
    let mut du = Vec::with_capacity(profile.grid.len());
    for i in 0..profile.grid.len() {
        let ri = cov_inverse(profile.grid[i], alpha)?;
        r.push(ri);
        u.push(profile.v[i]);
        du.push(if ri == 0.0 { 0.0 } else { profile.dv[i] * ri.powf(alpha / 2.0) });
    }
    Ok(LiftedProfile { r, u, du, n: spec.n, alpha })
}
