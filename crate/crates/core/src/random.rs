//! Reproducible random models.
//!
//! Every generator is a ChaCha8 stream keyed by `(seed, stream)`: the 64-bit
//! seed fixes the key and the stream index selects an independent counter
//! space. Distinct streams never share state, so experiments can be run in any
//! order (or in parallel) and still see the same matrices.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, HermitianMatrix, Matrix};
use crate::scattering::LatticePotential;

#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.gen_range(lo..hi)
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn index(&mut self, upper: usize) -> usize {
        self.inner.gen_range(0..upper)
    }

    fn complex_normal(&mut self) -> Complex64 {
        Complex64::new(self.normal(), self.normal()) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// GUE-type matrix with unit-variance entries.
    pub fn hermitian(&mut self, n: usize) -> HermitianMatrix {
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(self.normal(), 0.0);
            for j in 0..i {
                let z = self.complex_normal();
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        HermitianMatrix::from_matrix_unchecked(m)
    }

    /// Haar-distributed unitary (Gram–Schmidt on a complex Gaussian matrix).
    pub fn unitary(&mut self, n: usize) -> ComplexMatrix {
        let g = Matrix::from_fn(n, n, |_, _| self.complex_normal());
        orthonormal_columns(&g)
    }

    /// `U diag(spectrum) U*` for a Haar unitary `U`.
    pub fn hermitian_with_spectrum(&mut self, spectrum: &[f64]) -> HermitianMatrix {
        let n = spectrum.len();
        let u = self.unitary(n);
        HermitianMatrix::from_matrix_unchecked(outer_sum(&u, spectrum))
    }

    /// Uniformly oriented orthogonal projection of rank `rank` in dimension `n`.
    pub fn projection(&mut self, n: usize, rank: usize) -> HermitianMatrix {
        let weights: Vec<f64> = (0..n).map(|j| if j < rank { 1.0 } else { 0.0 }).collect();
        self.hermitian_with_spectrum(&weights)
    }

    /// Hermitian matrix of exact rank `rank`, nonzero eigenvalues of either
    /// sign with modulus in `[0.5, 2]`.
    pub fn low_rank_hermitian(&mut self, n: usize, rank: usize) -> HermitianMatrix {
        let weights: Vec<f64> = (0..n)
            .map(|j| {
                if j < rank {
                    let m = self.uniform(0.5, 2.0);
                    if self.inner.gen_bool(0.5) {
                        m
                    } else {
                        -m
                    }
                } else {
                    0.0
                }
            })
            .collect();
        self.hermitian_with_spectrum(&weights)
    }

    /// Potential with `1..=max_sites` distinct sites in `[-span, span]` and
    /// values uniform in `[-max_value, max_value]`.
    pub fn potential(&mut self, max_sites: usize, span: i64, max_value: f64) -> LatticePotential {
        let count = 1 + self.index(max_sites);
        let mut sites: Vec<i64> = Vec::with_capacity(count);
        while sites.len() < count {
            let s = self.inner.gen_range(-span..=span);
            if !sites.contains(&s) {
                sites.push(s);
            }
        }
        sites.sort_unstable();
        let values = sites
            .iter()
            .map(|_| self.uniform(-max_value, max_value))
            .collect();
        LatticePotential::new(sites, values).expect("sites are distinct and sorted")
    }
}

fn orthonormal_columns(g: &ComplexMatrix) -> ComplexMatrix {
    let n = g.rows();
    let mut cols: Vec<Vec<Complex64>> = (0..g.cols()).map(|j| g.column(j)).collect();
    for j in 0..cols.len() {
        for _ in 0..2 {
            for i in 0..j {
                let proj: Complex64 = (0..n).map(|r| cols[i][r].conj() * cols[j][r]).sum();
                for r in 0..n {
                    let q = cols[i][r];
                    cols[j][r] -= proj * q;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols[j].iter_mut().for_each(|z| *z /= norm);
    }
    Matrix::from_fn(n, cols.len(), |r, c| cols[c][r])
}

fn outer_sum(u: &ComplexMatrix, weights: &[f64]) -> ComplexMatrix {
    let n = u.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        for i in 0..n {
            let a = u[(i, k)] * w;
            for j in 0..n {
                out[(i, j)] += a * u[(j, k)].conj();
            }
        }
    }
    // Exact Hermitian symmetry.
    for i in 0..n {
        out[(i, i)] = Complex64::new(out[(i, i)].re, 0.0);
        for j in 0..i {
            let z = 0.5 * (out[(i, j)] + out[(j, i)].conj());
            out[(i, j)] = z;
            out[(j, i)] = z.conj();
        }
    }
    out
}
