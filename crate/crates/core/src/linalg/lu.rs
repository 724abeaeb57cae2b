use super::{Matrix, Scalar};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, `P A = L U`, packed in one matrix.
#[derive(Debug, Clone)]
pub struct LuFactors<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    swaps: usize,
    norm1: f64,
}

fn norm1<T: Scalar>(a: &Matrix<T>) -> f64 {
    (0..a.cols())
        .map(|j| (0..a.rows()).map(|i| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl<T: Scalar> LuFactors<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let (p, _) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot = lu[(k, k)];
            if pivot == T::zero() {
                continue;
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Self {
            lu,
            perm,
            swaps,
            norm1: norm1(a),
        })
    }

    pub fn determinant(&self) -> T {
        let n = self.lu.rows();
        let mut det = if self.swaps % 2 == 0 {
            T::one()
        } else {
            -T::one()
        };
        for i in 0..n {
            det *= self.lu[(i, i)];
        }
        det
    }

    fn is_singular(&self) -> bool {
        (0..self.lu.rows()).any(|i| self.lu[(i, i)] == T::zero())
    }

    pub fn solve_vec(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.lu.rows();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        if self.is_singular() {
            return Err(Error::Singular {
                condition: f64::INFINITY,
            });
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn solve(&self, b: &Matrix<T>) -> Result<Matrix<T>> {
        let n = self.lu.rows();
        if b.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.rows(),
            });
        }
        let mut out = Matrix::zeros(n, b.cols());
        for j in 0..b.cols() {
            let x = self.solve_vec(&b.column(j))?;
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Matrix<T>> {
        self.solve(&Matrix::identity(self.lu.rows()))
    }

    /// 1-norm condition number `||A||₁ ||A⁻¹||₁`, infinite for exact singularity.
    pub fn condition(&self) -> f64 {
        match self.inverse() {
            Ok(inv) => self.norm1 * norm1(&inv),
            Err(_) => f64::INFINITY,
        }
    }
}

pub fn determinant<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    Ok(LuFactors::new(a)?.determinant())
}

/// Solves `A X = B`, rejecting systems whose condition estimate exceeds
/// `max_condition`.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, max_condition: f64) -> Result<Matrix<T>> {
    let lu = LuFactors::new(a)?;
    let condition = lu.condition();
    if !(condition <= max_condition) {
        return Err(Error::Singular { condition });
    }
    lu.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn determinant_of_permutation_and_scale() {
        let a = Matrix::<f64>::from_row_major(2, 2, vec![0.0, 2.0, 3.0, 0.0]).unwrap();
        assert!((determinant(&a).unwrap() + 6.0).abs() < 1e-14);
    }

    #[test]
    fn complex_solve_roundtrip() {
        let a = Matrix::from_fn(3, 3, |i, j| {
            Complex64::new((i + 2 * j) as f64 + if i == j { 5.0 } else { 0.0 }, (i as f64) - (j as f64))
        });
        let b = Matrix::from_fn(3, 1, |i, _| Complex64::new(i as f64, 1.0));
        let x = solve(&a, &b, 1e12).unwrap();
        let back = a.matmul(&x).unwrap();
        assert!(back.try_sub(&b).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn singular_is_rejected() {
        let a = Matrix::<f64>::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 4.0]).unwrap();
        let b = Matrix::identity(2);
        assert!(matches!(solve(&a, &b, 1e12), Err(Error::Singular { .. })));
    }
}
