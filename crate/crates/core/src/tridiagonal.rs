//! Symmetric tridiagonal eigenvalues by Sturm bisection, eigenvectors by
//! inverse iteration.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::GridMismatch(format!(
                "{} diagonal and {} off-diagonal entries",
                diag.len(),
                off.len()
            )));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.len() {
            if i > 0 {
                q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            }
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based), bisected to roundoff.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let pad = 1e-12 * (lo.abs() + hi.abs() + 1.0);
        lo -= pad;
        hi += pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Unit eigenvector for an eigenvalue estimate `mu`.
    pub fn eigenvector(&self, mu: f64) -> Vec<f64> {
        let n = self.len();
        let scale = self.gershgorin().1.abs().max(self.gershgorin().0.abs()).max(1.0);
        // perturb the shift so the factorization stays nonsingular
        let shift = mu + scale * 4.0 * f64::EPSILON;
        let lu = ShiftedLu::factor(self, shift);
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
        normalize(&mut x);
        for _ in 0..4 {
            x = lu.solve(&x);
            normalize(&mut x);
        }
        // fix the sign: largest entry positive
        let (imax, _) = x
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
        if x[imax] < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        x
    }
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// LU factors of `T - σI` with partial pivoting (two super-diagonals of
/// fill).
struct ShiftedLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    l: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &SymTridiagonal, sigma: f64) -> Self {
        let n = t.len();
        let tiny = f64::EPSILON * t.gershgorin().1.abs().max(1.0);
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - sigma).collect();
        let mut du: Vec<f64> = t.off.clone();
        let dl: Vec<f64> = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut l = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                let m = if d[i] == 0.0 { 0.0 } else { dl[i] / d[i] };
                l[i] = m;
                d[i + 1] -= m * du[i];
            } else {
                let m = d[i] / dl[i];
                l[i] = m;
                swapped[i] = true;
                d[i] = dl[i];
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - m * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -m * du[i + 1];
                }
            }
        }
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            u0: d,
            u1: du,
            u2: du2,
            l,
            swapped,
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.u0.len();
        let mut y = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                y.swap(i, i + 1);
            }
            y[i + 1] -= self.l[i] * y[i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            if i + 1 < n {
                s -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * x[i + 2];
            }
            x[i] = s / self.u0[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap()
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 50;
        let t = laplacian_1d(n);
        for k in 0..5 {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((t.eigenvalue(k) - exact).abs() < 1e-13);
        }
        assert_eq!(t.count_below(0.0), 0);
        assert_eq!(t.count_below(5.0), n);
    }

    #[test]
    fn eigenvector_residual() {
        let t = SymTridiagonal::new(
            (0..40).map(|i| (i as f64 * 0.3).sin() * 3.0).collect(),
            (0..39).map(|i| 1.0 + 0.1 * i as f64).collect(),
        )
        .unwrap();
        for k in [0, 7, 39] {
            let mu = t.eigenvalue(k);
            let v = t.eigenvector(mu);
            let tv = t.apply(&v);
            let res: f64 = tv.iter().zip(&v).map(|(a, b)| (a - mu * b).powi(2)).sum::<f64>().sqrt();
            assert!(res < 1e-10, "{k}: {res}");
        }
    }

    #[test]
    fn solve_with_pivoting() {
        let t = SymTridiagonal::new(vec![0.0, 1.0, 2.0, 0.5], vec![3.0, -1.0, 0.7]).unwrap();
        let lu = ShiftedLu::factor(&t, 0.0);
        let b = vec![1.0, 2.0, 3.0, 4.0];
        let x = lu.solve(&b);
        let tx = t.apply(&x);
        for (a, c) in tx.iter().zip(&b) {
            assert!((a - c).abs() < 1e-12);
        }
    }
}
