use super::{Matrix, RealMatrix, Scalar};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Implicitly shifted QL iteration on a real symmetric tridiagonal matrix.
///
/// `d` holds the diagonal, `e[i]` the coupling between `i` and `i+1`
/// (`e.len() == d.len()`, last entry ignored). On return `d` holds the
/// eigenvalues in no particular order. When `zt` is given, the plane
/// rotations are applied to its rows, so that row `i` of `zt` ends up as
/// the (transposed) eigenvector belonging to `d[i]`.
pub(crate) fn implicit_ql<T: Scalar>(
    d: &mut [f64],
    e: &mut [f64],
    mut zt: Option<&mut Matrix<T>>,
) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    debug_assert_eq!(e.len(), n);
    e[n - 1] = 0.0;
    // Absolute floor for deflation; without it clusters of eigenvalues near
    // zero never split off.
    let floor = f64::EPSILON * d.iter().zip(e.iter()).fold(0.0_f64, |m, (a, b)| m.max(a.abs() + b.abs()));
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(Error::NoConvergence { iterations: iter });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0_f64, 1.0_f64, 0.0_f64);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = zt.as_deref_mut() {
                    rotate_rows(z, i, s, c);
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[inline]
fn rotate_rows<T: Scalar>(z: &mut Matrix<T>, i: usize, s: f64, c: f64) {
    let cols = z.cols();
    let data = z.as_mut_slice();
    let (head, tail) = data.split_at_mut((i + 1) * cols);
    let row_i = &mut head[i * cols..];
    let row_next = &mut tail[..cols];
    for (a, b) in row_i.iter_mut().zip(row_next.iter_mut()) {
        let f = *b;
        *b = a.scale(s) + f.scale(c);
        *a = a.scale(c) - f.scale(s);
    }
}

/// Real symmetric tridiagonal matrix; the lattice box operators take this form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    /// `off.len()` must be `diag.len() - 1` (or zero for an empty matrix).
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        let expected = diag.len().saturating_sub(1);
        if off.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: off.len(),
            });
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    fn work(&self) -> (Vec<f64>, Vec<f64>) {
        let mut e = self.off.clone();
        e.push(0.0);
        (self.diag.clone(), e)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let (mut d, mut e) = self.work();
        implicit_ql::<f64>(&mut d, &mut e, None)?;
        d.sort_by(f64::total_cmp);
        Ok(d)
    }

    /// Ascending eigenvalues with eigenvectors returned as the rows of the
    /// second matrix (row `i` belongs to eigenvalue `i`).
    pub fn eigenpairs(&self) -> Result<(Vec<f64>, RealMatrix)> {
        let n = self.dim();
        let (mut d, mut e) = self.work();
        let mut zt = RealMatrix::identity(n);
        implicit_ql(&mut d, &mut e, Some(&mut zt))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let values = order.iter().map(|&i| d[i]).collect();
        let mut rows = RealMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            rows.row_mut(dst).copy_from_slice(zt.row(src));
        }
        Ok((values, rows))
    }

    /// Number of eigenvalues strictly below `x`, by Sturm sequence (count of
    /// negative pivots in the LDLᵀ factorization of `T - x`).
    pub fn count_below(&self, x: f64) -> usize {
        let n = self.dim();
        let mut count = 0;
        let mut q = 1.0_f64;
        for i in 0..n {
            let b2 = if i == 0 { 0.0 } else { self.off[i - 1].powi(2) };
            q = if i == 0 {
                self.diag[0] - x
            } else {
                let prev = if q == 0.0 { f64::EPSILON * (self.off[i - 1].abs() + 1.0) } else { q };
                self.diag[i] - x - b2 / prev
            };
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                if i > 0 {
                    acc += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    acc += self.off[i] * v[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Solves `(T - shift) x = rhs` by Gaussian elimination with partial
    /// pivoting (tridiagonal LU with one extra super-diagonal).
    pub fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rhs.len(),
            });
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        // Rows stored as (sub, diag, sup, sup2).
        let mut a: Vec<f64> = self.diag.iter().map(|d| d - shift).collect();
        let mut b: Vec<f64> = self.off.clone();
        b.push(0.0);
        let mut c = vec![0.0; n];
        let mut sub: Vec<f64> = std::iter::once(0.0).chain(self.off.iter().copied()).collect();
        let mut x = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            let lower = sub[i + 1];
            if lower.abs() > a[i].abs() {
                // swap rows i and i+1
                std::mem::swap(&mut a[i], &mut sub[i + 1]);
                let (bi, ai1) = (b[i], a[i + 1]);
                b[i] = ai1;
                a[i + 1] = bi;
                let (ci, bi1) = (c[i], b[i + 1]);
                c[i] = bi1;
                b[i + 1] = ci;
                x.swap(i, i + 1);
            }
            if a[i] == 0.0 {
                return Err(Error::Singular {
                    condition: f64::INFINITY,
                });
            }
            let factor = sub[i + 1] / a[i];
            a[i + 1] -= factor * b[i];
            b[i + 1] -= factor * c[i];
            x[i + 1] -= factor * x[i];
            sub[i + 1] = 0.0;
        }
        if a[n - 1] == 0.0 {
            return Err(Error::Singular {
                condition: f64::INFINITY,
            });
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            if i + 1 < n {
                acc -= b[i] * x[i + 1];
            }
            if i + 2 < n {
                acc -= c[i] * x[i + 2];
            }
            x[i] = acc / a[i];
        }
        Ok(x)
    }

    /// Normalized eigenvector for an (accurate) eigenvalue `value` by inverse
    /// iteration.
    pub fn inverse_iteration(&self, value: f64) -> Result<Vec<f64>> {
        let n = self.dim();
        let scale = self
            .diag
            .iter()
            .chain(&self.off)
            .fold(1.0_f64, |m, x| m.max(x.abs()));
        let shift = value + 1e-13 * scale;
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i % 7) as f64)).collect();
        for _ in 0..3 {
            v = self.solve_shifted(shift, &v)?;
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![0.0; n], vec![1.0; n - 1]).unwrap()
    }

    #[test]
    fn free_chain_matches_closed_form() {
        let n = 40;
        let ev = free(n).eigenvalues().unwrap();
        let mut exact: Vec<f64> = (1..=n)
            .map(|j| 2.0 * (std::f64::consts::PI * j as f64 / (n as f64 + 1.0)).cos())
            .collect();
        exact.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn eigenpairs_residual() {
        let t = SymTridiagonal::new(
            (0..30).map(|i| ((i * 7) % 5) as f64 - 2.0).collect(),
            (0..29).map(|i| 1.0 + 0.1 * (i % 3) as f64).collect(),
        )
        .unwrap();
        let (vals, vecs) = t.eigenpairs().unwrap();
        for (i, &lam) in vals.iter().enumerate() {
            let v = vecs.row(i);
            let tv = t.mul_vec(v);
            let res: f64 = tv.iter().zip(v).map(|(a, b)| (a - lam * b).powi(2)).sum();
            assert!(res.sqrt() < 1e-12);
        }
    }

    #[test]
    fn sturm_count_agrees_with_eigenvalues() {
        let t = SymTridiagonal::new(
            (0..25).map(|i| (i as f64 * 0.37).sin() * 3.0).collect(),
            vec![1.0; 24],
        )
        .unwrap();
        let ev = t.eigenvalues().unwrap();
        for k in 0..ev.len() - 1 {
            let mid = 0.5 * (ev[k] + ev[k + 1]);
            assert_eq!(t.count_below(mid), k + 1);
        }
    }

    #[test]
    fn shifted_solve_is_exact() {
        let t = free(12);
        let rhs: Vec<f64> = (0..12).map(|i| i as f64 - 3.0).collect();
        let x = t.solve_shifted(0.3, &rhs).unwrap();
        let back = t.mul_vec(&x);
        for i in 0..12 {
            assert!((back[i] - 0.3 * x[i] - rhs[i]).abs() < 1e-12);
        }
    }
}
