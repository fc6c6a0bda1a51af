//! Symmetric tridiagonal pencil (A, B) with B positive diagonal: Sturm
//! counts by LDL^T, eigenvalues by bisection on the count, eigenvectors by
//! shifted inverse iteration with partial pivoting.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Pencil {
    /// Diagonal of A.
    pub diag: Vec<f64>,
    /// Off-diagonal of A (len = n-1).
    pub off: Vec<f64>,
    /// Diagonal of B (positive).
    pub b: Vec<f64>,
}

impl Pencil {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Number of eigenvalues of A v = λ B v strictly below `sigma`:
    /// negative pivots of LDL^T applied to A - sigma B.
    pub fn count_below(&self, sigma: f64) -> usize {
        let n = self.n();
        let pivmin = 1e-290 * self.off.iter().fold(1.0f64, |m, &e| m.max(e * e));
        let mut count = 0usize;
        let mut d = self.diag[0] - sigma * self.b[0];
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
        for i in 1..n {
            d = (self.diag[i] - sigma * self.b[i]) - self.off[i - 1] * self.off[i - 1] / d;
            if d.abs() < pivmin {
                d = -pivmin;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin-type bounds for the pencil eigenvalues.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i < n - 1 { self.off[i].abs() } else { 0.0 };
            lo = lo.min((self.diag[i] - r) / self.b[i]);
            hi = hi.max((self.diag[i] + r) / self.b[i]);
        }
        (lo, hi)
    }

    /// The j-th smallest eigenvalue (0-indexed) by bisection on the count.
    /// The stop criterion is anchored to the eigenvalue itself, not to the
    /// Gershgorin span (which is enormous for strongly graded meshes).
    pub fn eigenvalue(&self, j: usize) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        for _ in 0..300 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) <= j {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * mid.abs().max(1e-3) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn smallest_eigenvalues(&self, count: usize) -> Vec<f64> {
        (0..count.min(self.n())).map(|j| self.eigenvalue(j)).collect()
    }

    /// B-normalized eigenvector for an isolated eigenvalue, by inverse
    /// iteration on A - (λ + shift) B. Deterministic start, deterministic
    /// sign (largest-magnitude entry positive).
    pub fn eigenvector(&self, lambda: f64, start: Option<&[f64]>) -> Result<Vec<f64>> {
        let n = self.n();
        let shifted = lambda + 1e-11 * lambda.abs().max(1.0);
        let sub: Vec<f64> = self.off.clone();
        let diag: Vec<f64> = (0..n).map(|i| self.diag[i] - shifted * self.b[i]).collect();

        let mut x: Vec<f64> = match start {
            Some(s) => s.to_vec(),
            None => (0..n).map(|i| 1.0 + (i as f64 * 0.7).sin() * 0.01).collect(),
        };
        normalize_b(&mut x, &self.b);
        let mut converged = false;
        for _ in 0..12 {
            let rhs: Vec<f64> = (0..n).map(|i| self.b[i] * x[i]).collect();
            let y = solve_tridiag(&sub, &diag, &sub, &rhs)?;
            x = y;
            normalize_b(&mut x, &self.b);
            // Residual ||A x - lambda B x|| against ||A x|| + (|lambda|+1) ||B x||.
            let mut rnorm = 0.0f64;
            let mut bnorm = 0.0f64;
            let mut anorm = 0.0f64;
            for i in 0..n {
                let mut ax = self.diag[i] * x[i];
                if i > 0 {
                    ax += self.off[i - 1] * x[i - 1];
                }
                if i < n - 1 {
                    ax += self.off[i] * x[i + 1];
                }
                let r = ax - lambda * self.b[i] * x[i];
                rnorm += r * r;
                anorm += ax * ax;
                bnorm += (self.b[i] * x[i]) * (self.b[i] * x[i]);
            }
            if rnorm.sqrt() <= 1e-8 * (anorm.sqrt() + (lambda.abs() + 1.0) * bnorm.sqrt()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::EigenNoConverge(format!("inverse iteration at λ = {lambda}")));
        }
        let imax = (0..n).max_by(|&a, &b| x[a].abs().partial_cmp(&x[b].abs()).unwrap()).unwrap();
        if x[imax] < 0.0 {
            for xi in &mut x {
                *xi = -*xi;
            }
        }
        Ok(x)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(x.len(), n, "pencil dimension mismatch");
        (0..n)
            .map(|i| {
                let mut ax = self.diag[i] * x[i];
                if i > 0 {
                    ax += self.off[i - 1] * x[i - 1];
                }
                if i < n - 1 {
                    ax += self.off[i] * x[i + 1];
                }
                ax
            })
            .collect()
    }
}

fn normalize_b(x: &mut [f64], b: &[f64]) {
    let norm = x
        .iter()
        .zip(b)
        .map(|(xi, bi)| bi * xi * xi)
        .sum::<f64>()
        .sqrt();
    if norm > 0.0 {
        for xi in x.iter_mut() {
            *xi /= norm;
        }
    }
}

/// Tridiagonal solve by Gaussian elimination with partial pivoting; the
/// subdiagonal array is reused for the fill-in second superdiagonal.
pub fn solve_tridiag(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut dl = sub.to_vec(); // dl[i] couples row i+1 to column i
    let mut d = diag.to_vec();
    let mut du = sup.to_vec(); // du[i] = row i, column i+1
    let mut b = rhs.to_vec();
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = 1e-307;
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
            dl[i] = 0.0; // no fill-in
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            du[i] = temp;
            if i < n - 2 {
                dl[i] = du[i + 1]; // fill-in at column i+2
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = 0.0;
            }
            let temp = b[i];
            b[i] = b[i + 1];
            b[i + 1] = temp - fact * b[i + 1];
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = 1e-307;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = b[n - 1] / d[n - 1];
    if n > 1 {
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (b[i] - du[i] * x[i + 1] - dl[i] * x[i + 2]) / d[i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dirichlet Laplacian on n interior points of (0, pi): eigenvalues of
    /// the pencil converge to 1, 4, 9, ...
    fn laplacian(n: usize) -> Pencil {
        let h = std::f64::consts::PI / (n as f64 + 1.0);
        Pencil {
            diag: vec![2.0 / (h * h); n],
            off: vec![-1.0 / (h * h); n - 1],
            b: vec![1.0; n],
        }
    }

    #[test]
    fn counts_and_eigenvalues() {
        let p = laplacian(400);
        assert_eq!(p.count_below(0.0), 0);
        assert_eq!(p.count_below(5.0), 2); // below 1 and 4
        let l1 = p.eigenvalue(0);
        let l2 = p.eigenvalue(1);
        assert!((l1 - 1.0).abs() < 1e-4, "{l1}");
        assert!((l2 - 4.0).abs() < 1e-3, "{l2}");
    }

    #[test]
    fn eigenvector_matches_sine() {
        let n = 300;
        let p = laplacian(n);
        let l1 = p.eigenvalue(0);
        let v = p.eigenvector(l1, None).unwrap();
        let h = std::f64::consts::PI / (n as f64 + 1.0);
        // Compare against sin(x), B-normalized on the same grid.
        let mut s: Vec<f64> = (1..=n).map(|i| (i as f64 * h).sin()).collect();
        let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut s {
            *x /= norm;
        }
        let err: f64 = v.iter().zip(&s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        assert!(err < 1e-6, "err = {err}");
    }

    #[test]
    fn generalized_weights() {
        // A = diag(1, 2, 3) tridiagonal with tiny coupling, B = diag(1, 2, 4):
        // eigenvalues near 1, 1, 0.75.
        let p = Pencil {
            diag: vec![1.0, 2.0, 3.0],
            off: vec![1e-8, 1e-8],
            b: vec![1.0, 2.0, 4.0],
        };
        let ev = p.smallest_eigenvalues(3);
        assert!((ev[0] - 0.75).abs() < 1e-6);
        assert!((ev[1] - 1.0).abs() < 1e-6);
        assert!((ev[2] - 1.0).abs() < 1e-6);
        assert_eq!(p.count_below(0.9), 1);
    }

    #[test]
    fn pivoted_solve() {
        // Matrix with a weak diagonal forcing a swap.
        let sub = vec![4.0, 1.0];
        let diag = vec![1e-12, 1.0, 2.0];
        let sup = vec![2.0, 0.5];
        let x_true = [1.0, -2.0, 3.0];
        let mut rhs = vec![0.0; 3];
        rhs[0] = diag[0] * x_true[0] + sup[0] * x_true[1];
        rhs[1] = sub[0] * x_true[0] + diag[1] * x_true[1] + sup[1] * x_true[2];
        rhs[2] = sub[1] * x_true[1] + diag[2] * x_true[2];
        let x = solve_tridiag(&sub, &diag, &sup, &rhs).unwrap();
        for i in 0..3 {
            assert!((x[i] - x_true[i]).abs() < 1e-9, "{x:?}");
        }
    }
}
