//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `A = V diag(λ) Vᵀ`, eigenvalues in descending order,
/// eigenvectors stored column-wise in a row-major `n × n` buffer.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

impl SymmetricEigen {
    /// `‖V diag(λ) Vᵀ - A‖_F`.
    pub fn reconstruction_error(&self, a: &[f64]) -> f64 {
        let n = self.n;
        let mut err = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.vectors[i * n + k] * self.values[k] * self.vectors[j * n + k];
                }
                err += (s - a[i * n + j]).powi(2);
            }
        }
        err.sqrt()
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += a[i * n + j] * a[i * n + j];
        }
    }
    (2.0 * s).sqrt()
}

/// `(row_p, row_q) <- (c row_p - s row_q, s row_p + c row_q)`.
fn rotate_rows(m: &mut [f64], n: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = m.split_at_mut(q * n);
    let rp = &mut head[p * n..p * n + n];
    let rq = &mut tail[..n];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Runs cyclic sweeps of Jacobi rotations until the off-diagonal Frobenius
/// norm drops below `tol`. `a` must be symmetric (row-major).
pub fn jacobi_eigen(a: &[f64], n: usize, tol: f64) -> Result<SymmetricEigen> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            actual: a.len(),
        });
    }
    let mut m = a.to_vec();
    // eigenvectors accumulate as rows of `vt` so rotations touch contiguous memory
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let mut sweeps = 0;
    while off_diagonal_norm(&m, n) >= tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate_rows(&mut m, n, p, q, c, s);
                for k in 0..n {
                    if k != p && k != q {
                        m[k * n + p] = m[p * n + k];
                        m[k * n + q] = m[q * n + k];
                    }
                }
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                rotate_rows(&mut vt, n, p, q, c, s);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + new_col] = vt[old_col * n + k];
        }
    }
    Ok(SymmetricEigen {
        n,
        values,
        vectors,
        sweeps,
    })
}
