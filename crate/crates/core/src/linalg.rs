//! Dense symmetric matrices of small dimension (shape matrices live here).
//!
//! Shape matrices are d×d symmetric positive-definite with d rarely above 3,
//! so everything is hand-rolled over a flat buffer: Cholesky for determinants,
//! solves and Gaussian sampling, and a Jacobi sweep for eigenvalues.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Symmetric matrix stored as a full row-major buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    dim: usize,
    data: Vec<f64>,
}

/// Lower-triangular Cholesky factor, row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl SymMat {
    /// Build from a full row-major buffer; rejects asymmetry beyond `1e-10`
    /// (relative to the largest entry) and non-finite entries.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(Error::invalid(format!(
                "shape matrix must be {dim}x{dim}, got {} entries",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("shape matrix has non-finite entries"));
        }
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (data[i * dim + j] - data[j * dim + i]).abs() > 1e-10 * scale {
                    return Err(Error::invalid("shape matrix is not symmetric within 1e-10"));
                }
            }
        }
        // store the symmetrized matrix so later arithmetic sees exact symmetry
        let mut sym = data;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let v = 0.5 * (sym[i * dim + j] + sym[j * dim + i]);
                sym[i * dim + j] = v;
                sym[j * dim + i] = v;
            }
        }
        Ok(Self { dim, data: sym })
    }

    /// Identity matrix.
    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    /// 1x1 matrix.
    pub fn scalar(value: f64) -> Self {
        Self { dim: 1, data: vec![value] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> &[f64] {
        &self.data
    }

    /// Quadratic form `z' A z`.
    pub fn quad_form(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.dim);
        let mut total = 0.0;
        for i in 0..self.dim {
            let mut row = 0.0;
            for j in 0..self.dim {
                row += self.data[i * self.dim + j] * z[j];
            }
            total += z[i] * row;
        }
        total
    }

    /// Matrix-vector product `A z`.
    pub fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        debug_assert_eq!(z.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..self.dim {
                    s += self.data[i * self.dim + j] * z[j];
                }
                s
            })
            .collect()
    }

    /// Cholesky factorization; fails if the matrix is not positive definite.
    pub fn cholesky(&self) -> Result<Cholesky> {
        let d = self.dim;
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let mut s = self.data[i * d + j];
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(Error::invalid(
                            "shape matrix is not positive definite",
                        ));
                    }
                    l[i * d + j] = s.sqrt();
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        Ok(Cholesky { dim: d, lower: l })
    }

    /// Determinant via Cholesky (positive-definite input assumed).
    pub fn det(&self) -> Result<f64> {
        let chol = self.cholesky()?;
        let mut p = 1.0;
        for i in 0..self.dim {
            let v = chol.lower[i * self.dim + i];
            p *= v * v;
        }
        Ok(p)
    }

    /// Eigenvalues by cyclic Jacobi sweeps (ascending order).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim;
        if d == 1 {
            return vec![self.data[0]];
        }
        if d == 2 {
            let (a, b, c) = (self.data[0], self.data[1], self.data[3]);
            let mid = 0.5 * (a + c);
            let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            return vec![mid - rad, mid + rad];
        }
        let mut m = self.data.clone();
        for _ in 0..64 {
            let mut off = 0.0;
            for i in 0..d {
                for j in (i + 1)..d {
                    off += m[i * d + j] * m[i * d + j];
                }
            }
            if off.sqrt() < 1e-13 {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = m[p * d + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let app = m[p * d + p];
                    let aqq = m[q * d + q];
                    let theta = 0.5 * (aqq - app) / apq;
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let mkp = m[k * d + p];
                        let mkq = m[k * d + q];
                        m[k * d + p] = c * mkp - s * mkq;
                        m[k * d + q] = s * mkp + c * mkq;
                    }
                    for k in 0..d {
                        let mpk = m[p * d + k];
                        let mqk = m[q * d + k];
                        m[p * d + k] = c * mpk - s * mqk;
                        m[q * d + k] = s * mpk + c * mqk;
                    }
                }
            }
        }
        let mut eigs: Vec<f64> = (0..d).map(|i| m[i * d + i]).collect();
        eigs.sort_unstable_by(|x, y| x.total_cmp(y));
        eigs
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

impl Cholesky {
    /// Solve `L y = b` (forward substitution).
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut s = b[i];
            for k in 0..i {
                s -= self.lower[i * d + k] * y[k];
            }
            y[i] = s / self.lower[i * d + i];
        }
        y
    }

    /// Solve `L' y = b` (back substitution on the transpose).
    pub fn solve_lower_transpose(&self, b: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut y = vec![0.0; d];
        for i in (0..d).rev() {
            let mut s = b[i];
            for k in (i + 1)..d {
                s -= self.lower[k * d + i] * y[k];
            }
            y[i] = s / self.lower[i * d + i];
        }
        y
    }

    /// `L z` for lower-triangular `L`.
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| {
                let mut s = 0.0;
                for k in 0..=i {
                    s += self.lower[i * d + k] * z[k];
                }
                s
            })
            .collect()
    }

    /// Product of the diagonal entries (= sqrt of the determinant).
    pub fn diag_product(&self) -> f64 {
        (0..self.dim).map(|i| self.lower[i * self.dim + i]).product()
    }

    /// Row-major lower-triangular buffer.
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }
}

/// Dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Componentwise `a - b`.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
