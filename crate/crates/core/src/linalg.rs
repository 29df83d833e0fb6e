//! Dense symmetric eigensolver (cyclic Jacobi rotations).
//!
//! The matrices handled here are small cross-product matrices (`S'S` or
//! `SS'`), for which Jacobi is accurate and simple. Eigenvalues come back in
//! nonincreasing order with unit-norm eigenvectors as columns.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;
/// Negative eigenvalues at or above `-PSD_CLAMP` are treated as round-off.
pub const PSD_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Array1<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: Array2<f64>,
    pub sweeps: usize,
}

pub fn symmetric_eigen(a: &Array2<f64>, tol: f64) -> Result<SymmetricEigen> {
    let (n, m) = a.dim();
    if n != m {
        return Err(Error::NotSquare(n, m));
    }
    let scale = a.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    let mut asym = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            asym = asym.max((a[[i, j]] - a[[j, i]]).abs());
        }
    }
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }

    let mut w = a.clone();
    // symmetrize exactly so rotations only ever see one value per pair
    for i in 0..n {
        for j in i + 1..n {
            let mean = 0.5 * (w[[i, j]] + w[[j, i]]);
            w[[i, j]] = mean;
            w[[j, i]] = mean;
        }
    }
    let mut v = Array2::<f64>::eye(n);
    let frob = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let negligible = f64::EPSILON * f64::EPSILON * frob;

    let mut sweeps = 0;
    loop {
        let off: f64 = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| w[[i, j]].powi(2)).sum();
        if off == 0.0 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let app = w[[p, p]];
                let aqq = w[[q, q]];
                let g = 100.0 * apq.abs();
                if apq.abs() <= negligible || (sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs()) {
                    w[[p, q]] = 0.0;
                    w[[q, p]] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut w, &mut v, p, q, c, s, t);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| w[[y, y]].total_cmp(&w[[x, x]]));
    let values = Array1::from_iter(order.iter().map(|&k| {
        let lambda = w[[k, k]];
        if lambda < 0.0 && lambda >= -tol {
            0.0
        } else {
            lambda
        }
    }));
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    Ok(SymmetricEigen { values, vectors, sweeps })
}

/// Applies the rotation zeroing `w[p][q]` to `w` (two-sided) and `v` (right).
fn rotate(w: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64, t: f64) {
    let n = w.nrows();
    let apq = w[[p, q]];
    w[[p, p]] -= t * apq;
    w[[q, q]] += t * apq;
    w[[p, q]] = 0.0;
    w[[q, p]] = 0.0;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = w[[k, p]];
        let akq = w[[k, q]];
        let new_p = c * akp - s * akq;
        let new_q = s * akp + c * akq;
        w[[k, p]] = new_p;
        w[[p, k]] = new_p;
        w[[k, q]] = new_q;
        w[[q, k]] = new_q;
    }
    for k in 0..n {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}

/// One-sided Jacobi: rotates column pairs of `b` until they are mutually
/// orthogonal, applying the same rotations to the columns of `v`. With
/// `b = A v` on entry, on exit the column norms of `b` are the singular
/// values of `A` for the right singular vectors in `v`.
pub fn orthogonalize_columns(b: &mut Array2<f64>, v: &mut Array2<f64>) -> Result<usize> {
    let n = b.ncols();
    // columns at round-off level span the null space; rotating them never settles
    let negligible = (f64::EPSILON * n as f64).powi(2) * b.iter().map(|x| x * x).sum::<f64>();
    for sweep in 1..=MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (bp, bq) = (b.column(p), b.column(q));
                let alpha = bp.dot(&bp);
                let beta = bq.dot(&bq);
                let gamma = bp.dot(&bq);
                if alpha <= negligible || beta <= negligible || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut *b, &mut *v] {
                    for k in 0..m.nrows() {
                        let (x, y) = (m[[k, p]], m[[k, q]]);
                        m[[k, p]] = c * x - s * y;
                        m[[k, q]] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            return Ok(sweep);
        }
    }
    Err(Error::NoConvergence(MAX_SWEEPS))
}
