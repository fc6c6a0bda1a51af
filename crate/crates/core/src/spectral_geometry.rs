//! Exact integer/rational side of the toolkit: Laplace-Beltrami eigenvalues
//! and multiplicities on the sphere, the even-alpha degeneracy values, the
//! closed-form Morse indices (full and axially symmetric), kernel dimensions
//! and the branch census at each bifurcation value.
//!
//! Everything here is evaluated in exact integer arithmetic; floating point
//! enters only through the inequality scans, always with a 1e-9 guard away
//! from even alpha.

use crate::error::{Error, Result};
use crate::radial_ode::k_of_alpha;
use serde::{Deserialize, Serialize};

/// Comparison guard: alpha closer than this to an even integer is treated as
/// sitting on the boundary.
pub const EVEN_GUARD: f64 = 1e-9;

/// j-th eigenvalue of the Laplace-Beltrami operator on S^{N-1}: j(N-2+j).
pub fn mu(i: u32, n: u32) -> u64 {
    let i = i as u64;
    let n = n as u64;
    i * (n - 2 + i)
}

fn binomial_u128(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc
            .checked_mul((n - j) as u128)
            .ok_or_else(|| Error::CountOverflow(format!("C({n},{k})")))?;
        acc /= (j + 1) as u128;
    }
    Ok(acc)
}

fn to_u64(v: u128, what: &str) -> Result<u64> {
    u64::try_from(v).map_err(|_| Error::CountOverflow(what.to_string()))
}

fn check_n(n: u32) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("dimension N = {n} must be >= 3")));
    }
    Ok(())
}

/// Multiplicity of mu_i on S^{N-1}: (N+2i-2)(N+i-3)! / ((N-2)! i!).
pub fn multiplicity(i: u32, n: u32) -> Result<u64> {
    check_n(n)?;
    let (i, n) = (i as u64, n as u64);
    // (N+i-3)!/((N-3)! i!) = C(N+i-3, i); one exact division by (N-2) remains.
    let c = binomial_u128(n + i - 3, i)?;
    let num = c
        .checked_mul((n + 2 * i - 2) as u128)
        .ok_or_else(|| Error::CountOverflow(format!("multiplicity({i},{n})")))?;
    debug_assert_eq!(num % (n - 2) as u128, 0);
    to_u64(num / (n - 2) as u128, "multiplicity")
}

/// Same count through the binomial identity C(N+i-1,N-1) - C(N+i-3,N-1);
/// used as an exact cross-check of `multiplicity`.
pub fn multiplicity_by_binomials(i: u32, n: u32) -> Result<u64> {
    check_n(n)?;
    let (i, n) = (i as u64, n as u64);
    let a = binomial_u128(n + i - 1, n - 1)?;
    let b = binomial_u128(n + i - 3, n - 1)?;
    to_u64(a - b, "multiplicity_by_binomials")
}

const ORACLE_PRIME: u64 = (1u64 << 61) - 1;

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % ORACLE_PRIME as u128) as u64
}

fn invmod(a: u64) -> u64 {
    // Fermat: a^(p-2) mod p.
    let mut base = a % ORACLE_PRIME;
    let mut exp = ORACLE_PRIME - 2;
    let mut acc = 1u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base);
        }
        base = mulmod(base, base);
        exp >>= 1;
    }
    acc
}

/// Monomial exponent vectors of total degree `deg` in `n` variables,
/// lexicographic order.
fn monomials(deg: u32, n: u32) -> Vec<Vec<u32>> {
    fn rec(deg: u32, slots: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slots == 1 {
            prefix.push(deg);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=deg).rev() {
            prefix.push(e);
            rec(deg - e, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(deg, n, &mut Vec::new(), &mut out);
    out
}

/// Brute-force dimension of the harmonic polynomials of degree i in N
/// variables: nullity of the Laplacian on the monomial basis.
///
/// The Laplacian preserves the parity pattern of the exponent vector, so the
/// matrix block-diagonalizes over parity classes. Each block is eliminated
/// over GF(2^61-1); because the map is onto (it contains a triangular minor
/// whose diagonal entries are the small integers (e_1+2)(e_1+1), none of
/// them divisible by the prime), full row rank mod p certifies the exact
/// rank, hence the exact nullity.
pub fn harmonic_dim_oracle(i: u32, n: u32) -> Result<u64> {
    check_n(n)?;
    if i > 8 || n > 8 {
        return Err(Error::SizeGuard(format!(
            "harmonic_dim_oracle limited to i <= 8, N <= 8 (got i={i}, N={n})"
        )));
    }
    let sources = monomials(i, n);
    if i < 2 {
        return Ok(sources.len() as u64);
    }
    let targets = monomials(i - 2, n);
    let tgt_index: std::collections::BTreeMap<Vec<u32>, usize> =
        targets.iter().cloned().zip(0..).collect();

    let parity = |e: &[u32]| -> u32 { e.iter().enumerate().map(|(j, &x)| (x & 1) << j).sum() };

    // Group source/target columns by parity class.
    let mut classes: std::collections::BTreeMap<u32, (Vec<usize>, Vec<usize>)> =
        std::collections::BTreeMap::new();
    for (idx, e) in sources.iter().enumerate() {
        classes.entry(parity(e)).or_default().0.push(idx);
    }
    for (idx, f) in targets.iter().enumerate() {
        classes.entry(parity(f)).or_default().1.push(idx);
    }

    let mut rank_total = 0u64;
    for (_, (src_cols, tgt_rows)) in classes {
        if src_cols.is_empty() || tgt_rows.is_empty() {
            continue;
        }
        let row_of: std::collections::BTreeMap<usize, usize> =
            tgt_rows.iter().cloned().zip(0..).collect();
        let rows = tgt_rows.len();
        let cols = src_cols.len();
        let mut m = vec![0u64; rows * cols];
        for (cj, &s) in src_cols.iter().enumerate() {
            let e = &sources[s];
            for v in 0..n as usize {
                if e[v] >= 2 {
                    let coeff = (e[v] as u64) * (e[v] as u64 - 1);
                    let mut f = e.clone();
                    f[v] -= 2;
                    let t = tgt_index[&f];
                    let r = row_of[&t];
                    m[r * cols + cj] = (m[r * cols + cj] + coeff) % ORACLE_PRIME;
                }
            }
        }
        // Gaussian elimination mod p.
        let mut rank = 0usize;
        let mut row = 0usize;
        for col in 0..cols {
            let mut piv = None;
            for r in row..rows {
                if m[r * cols + col] != 0 {
                    piv = Some(r);
                    break;
                }
            }
            let Some(p) = piv else { continue };
            m.swap_chunks(p, row, cols);
            let inv = invmod(m[row * cols + col]);
            for c in col..cols {
                m[row * cols + c] = mulmod(m[row * cols + c], inv);
            }
            for r in 0..rows {
                if r != row && m[r * cols + col] != 0 {
                    let factor = m[r * cols + col];
                    for c in col..cols {
                        let sub = mulmod(factor, m[row * cols + c]);
                        m[r * cols + c] = (m[r * cols + c] + ORACLE_PRIME - sub) % ORACLE_PRIME;
                    }
                }
            }
            rank += 1;
            row += 1;
            if row == rows {
                break;
            }
        }
        if rank != rows {
            // The triangular-minor argument guarantees full row rank; reaching
            // this branch would mean a construction bug, not a rank deficiency.
            return Err(Error::Numeric(format!(
                "harmonic oracle block lost rank ({rank} of {rows})"
            )));
        }
        rank_total += rank as u64;
    }
    Ok(sources.len() as u64 - rank_total)
}

trait SwapChunks {
    fn swap_chunks(&mut self, a: usize, b: usize, width: usize);
}
impl SwapChunks for Vec<u64> {
    fn swap_chunks(&mut self, a: usize, b: usize, width: usize) {
        if a == b {
            return;
        }
        for c in 0..width {
            self.swap(a * width + c, b * width + c);
        }
    }
}

/// Values of alpha at which the radial branch degenerates: 2(i-1) for
/// i = 2..=i_max+1, i.e. the positive even integers.
pub fn degeneracy_alphas(i_max: u32) -> Vec<f64> {
    (2..=i_max + 1).map(|i| 2.0 * (i as f64 - 1.0)).collect()
}

/// Sign-change scan of g_i(alpha) = 4 mu_i/(2+alpha)^2 - k(alpha) on a grid;
/// returns every bracketed root refined by bisection, tagged by i.
pub fn degeneracy_condition_roots(
    n: u32,
    i_max: u32,
    alpha_lo: f64,
    alpha_hi: f64,
    step: f64,
) -> Result<Vec<(u32, f64)>> {
    check_n(n)?;
    if !(alpha_lo < alpha_hi && step > 0.0) {
        return Err(Error::InvalidParameter("bad scan range".into()));
    }
    let g = |i: u32, a: f64| 4.0 * mu(i, n) as f64 / ((2.0 + a) * (2.0 + a)) - k_of_alpha(a, n);
    let mut roots = Vec::new();
    for i in 0..=i_max {
        let mut a = alpha_lo;
        let mut ga = g(i, a);
        while a < alpha_hi {
            let b = (a + step).min(alpha_hi);
            let gb = g(i, b);
            if ga == 0.0 {
                roots.push((i, a));
            } else if ga * gb < 0.0 {
                let (mut lo, mut hi) = (a, b);
                let mut glo = ga;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let gm = g(i, mid);
                    if glo * gm <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        glo = gm;
                    }
                }
                roots.push((i, 0.5 * (lo + hi)));
            }
            a = b;
            ga = gb;
        }
    }
    Ok(roots)
}

fn reject_even(alpha: f64) -> Result<()> {
    if alpha < 0.0 {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be >= 0")));
    }
    let nearest = 2.0 * (alpha / 2.0).round();
    if nearest > 0.0 && (alpha - nearest).abs() < EVEN_GUARD {
        return Err(Error::BoundaryAlpha(nearest));
    }
    Ok(())
}

fn full_sum(n: u32, include: impl Fn(u64) -> bool) -> Result<u64> {
    let mut total: u64 = 0;
    let mut i = 0u32;
    loop {
        if !include(i as u64) {
            break;
        }
        total = total
            .checked_add(multiplicity(i, n)?)
            .ok_or_else(|| Error::CountOverflow("morse index sum".into()))?;
        i += 1;
        if i > 100_000 {
            return Err(Error::CountOverflow("morse index sum runaway".into()));
        }
    }
    Ok(total)
}

/// Morse index of the lifted radial solution: the sum of N_i over the
/// integers 0 <= i < 1 + alpha/2. Positive even alpha is a jump point and is
/// rejected; evaluate one-sided there.
pub fn morse_index(alpha: f64, n: u32) -> Result<u64> {
    check_n(n)?;
    reject_even(alpha)?;
    let threshold = 1.0 + alpha / 2.0;
    full_sum(n, |i| (i as f64) < threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Below,
    Above,
}

/// One-sided Morse index at any alpha >= 0 (the two sides agree off the even
/// integers; at alpha = 2i the gap is the kernel dimension there).
pub fn morse_index_one_sided(alpha: f64, n: u32, side: Side) -> Result<u64> {
    check_n(n)?;
    if alpha < 0.0 {
        return Err(Error::InvalidParameter("alpha must be >= 0".into()));
    }
    let threshold = 1.0 + alpha / 2.0;
    match side {
        Side::Below => full_sum(n, |i| (i as f64) < threshold),
        Side::Above => full_sum(n, |i| (i as f64) <= threshold + EVEN_GUARD),
    }
}

/// Morse index restricted to the axially symmetric space: one invariant mode
/// per spherical-harmonic level, so the count is #{ j : 4 mu_j/(2+alpha)^2 <
/// k(alpha) }.
pub fn symmetric_morse_index(alpha: f64, n: u32) -> Result<u64> {
    check_n(n)?;
    reject_even(alpha)?;
    Ok(symmetric_count(alpha, n, false))
}

pub fn symmetric_morse_index_one_sided(alpha: f64, n: u32, side: Side) -> Result<u64> {
    check_n(n)?;
    if alpha < 0.0 {
        return Err(Error::InvalidParameter("alpha must be >= 0".into()));
    }
    Ok(symmetric_count(alpha, n, side == Side::Above))
}

fn symmetric_count(alpha: f64, n: u32, include_boundary: bool) -> u64 {
    let k = k_of_alpha(alpha, n);
    let scale = (2.0 + alpha) * (2.0 + alpha);
    let mut count = 0u64;
    let mut j = 0u32;
    loop {
        let lhs = 4.0 * mu(j, n) as f64 / scale;
        let pass = if include_boundary { lhs < k + EVEN_GUARD } else { lhs < k - 0.0 };
        if !pass {
            break;
        }
        count += 1;
        j += 1;
    }
    count
}

/// Kernel dimension of the lifted linearization, by case:
/// nondegenerate at alpha = 2i gives the spherical-harmonic count
/// (N+2i)(N+i-2)!/((N-2)!(i+1)!); degenerate off the even integers gives
/// n_alpha; degenerate at 2i gives the sum; nondegenerate off 2Z gives 0.
pub fn kernel_dimension(alpha: f64, n: u32, n_alpha: u8) -> Result<u64> {
    check_n(n)?;
    if n_alpha > 2 {
        return Err(Error::InvalidParameter(format!(
            "n_alpha = {n_alpha} out of range 0..=2"
        )));
    }
    if alpha <= 0.0 {
        return Err(Error::InvalidParameter("alpha must be > 0".into()));
    }
    let nearest = 2.0 * (alpha / 2.0).round();
    let at_even = nearest > 0.0 && (alpha - nearest).abs() < EVEN_GUARD;
    let radial = n_alpha as u64;
    if !at_even {
        return Ok(radial);
    }
    let i = (nearest / 2.0).round() as u64;
    let nn = n as u64;
    // (N+2i)(N+i-2)!/((N-2)!(i+1)!) = (N+2i) C(N+i-2, i+1) / (N-2).
    let c = binomial_u128(nn + i - 2, i + 1)?;
    let num = c
        .checked_mul((nn + 2 * i) as u128)
        .ok_or_else(|| Error::CountOverflow("kernel dimension".into()))?;
    debug_assert_eq!(num % (nn - 2) as u128, 0);
    let harmonic = to_u64(num / (nn - 2) as u128, "kernel dimension")?;
    Ok(radial + harmonic)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryGroup {
    /// O(N-1), fixing one axis.
    Axial { n_minus_1: u32 },
    /// O(h) x O(N-h).
    Product { h: u32, complement: u32 },
}

impl std::fmt::Display for SymmetryGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SymmetryGroup::Axial { n_minus_1 } => write!(f, "O({n_minus_1})"),
            SymmetryGroup::Product { h, complement } => write!(f, "O({h})xO({complement})"),
        }
    }
}

/// Census of nonradial branches emanating at an even alpha = 2i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub alpha: f64,
    pub i: u32,
    pub branch_count: u32,
    pub groups: Vec<SymmetryGroup>,
}

pub fn branch_census(alpha_even: f64, n: u32) -> Result<BranchReport> {
    check_n(n)?;
    let nearest = 2.0 * (alpha_even / 2.0).round();
    if nearest < 2.0 || (alpha_even - nearest).abs() > EVEN_GUARD {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha_even} is not a positive even integer"
        )));
    }
    let i = (nearest / 2.0).round() as u32;
    if i % 2 == 0 {
        Ok(BranchReport {
            alpha: nearest,
            i,
            branch_count: 1,
            groups: vec![SymmetryGroup::Axial { n_minus_1: n - 1 }],
        })
    } else {
        let half = n / 2;
        Ok(BranchReport {
            alpha: nearest,
            i,
            branch_count: half,
            groups: (1..=half)
                .map(|h| SymmetryGroup::Product { h, complement: n - h })
                .collect(),
        })
    }
}

/// Closed-form summary at one alpha, optionally paired with a numerically
/// computed index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorseReport {
    pub alpha: f64,
    pub n: u32,
    pub m_closed: u64,
    pub m_numeric: Option<u64>,
    pub m_symmetric: u64,
    pub is_bifurcation_value: bool,
    pub kernel_dim: u64,
    pub n_alpha_input: u8,
}

pub fn morse_report(alpha: f64, n: u32, n_alpha: u8, m_numeric: Option<u64>) -> Result<MorseReport> {
    check_n(n)?;
    let nearest = 2.0 * (alpha / 2.0).round();
    let at_even = nearest > 0.0 && (alpha - nearest).abs() < EVEN_GUARD;
    Ok(MorseReport {
        alpha,
        n,
        m_closed: morse_index_one_sided(alpha, n, Side::Below)?,
        m_numeric,
        m_symmetric: symmetric_morse_index_one_sided(alpha, n, Side::Below)?,
        is_bifurcation_value: at_even,
        kernel_dim: if at_even { kernel_dimension(nearest, n, n_alpha)? } else { n_alpha as u64 },
        n_alpha_input: n_alpha,
    })
}
