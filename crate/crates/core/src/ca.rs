//! Classical correspondence analysis.
//!
//! The Pearson residual matrix `S = Dr^-1/2 (P - r c') Dc^-1/2` is
//! eigendecomposed through the smaller of `S'S` and `SS'`. Principal
//! coordinates of that side come from the eigenvectors, and the other side
//! follows from the CA transition formulas.

use std::sync::Arc;

use ndarray::{Array1, Array2};

use crate::decomposition::{Axis, Decomposition, Method, RANK_ABS_TOL, RANK_REL_TOL};
use crate::error::{Error, Result};
use crate::linalg::{orthogonalize_columns, symmetric_eigen, PSD_CLAMP};
use crate::table::CorrespondenceModel;

pub fn pearson_residuals(model: &CorrespondenceModel) -> Array2<f64> {
    let mut s = model.residual.clone();
    for ((i, j), x) in s.indexed_iter_mut() {
        *x /= (model.r[i] * model.c[j]).sqrt();
    }
    s
}

/// `f(i) = sum_j Pr(j|i) g(j) / sigma`.
pub fn rows_from_columns(model: &CorrespondenceModel, g: &Array1<f64>, sigma: f64) -> Array1<f64> {
    let pg = model.p.dot(g);
    Array1::from_iter(pg.iter().zip(model.r.iter()).map(|(x, r)| x / (r * sigma)))
}

/// `g(j) = sum_i Pr(i|j) f(i) / sigma`.
pub fn columns_from_rows(model: &CorrespondenceModel, f: &Array1<f64>, sigma: f64) -> Array1<f64> {
    let pf = model.p.t().dot(f);
    Array1::from_iter(pf.iter().zip(model.c.iter()).map(|(x, c)| x / (c * sigma)))
}

pub fn ca_decompose(model: &CorrespondenceModel, max_axes: usize) -> Result<Decomposition> {
    if max_axes > model.max_axes() {
        return Err(Error::AxesOutOfRange { requested: max_axes, max: model.max_axes() });
    }
    let s = pearson_residuals(model);
    let column_side = model.n_cols() <= model.n_rows();
    let gram = if column_side { s.t().dot(&s) } else { s.dot(&s.t()) };
    let eig = symmetric_eigen(&gram, PSD_CLAMP)?;

    // the Gram route squares the condition number, so the eigenvectors are
    // polished by orthogonalizing the columns of S X directly
    let mut x = eig.vectors;
    let mut image = if column_side { s.dot(&x) } else { s.t().dot(&x) };
    orthogonalize_columns(&mut image, &mut x)?;
    let mut candidates: Vec<(f64, Array1<f64>)> = image
        .columns()
        .into_iter()
        .zip(x.columns())
        .map(|(b, x)| (b.dot(&b).sqrt(), x.to_owned()))
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));

    let sigma1 = candidates.first().map_or(0.0, |c| c.0);
    let rank = candidates
        .iter()
        .take_while(|(sigma, _)| *sigma > RANK_ABS_TOL && *sigma >= RANK_REL_TOL * sigma1)
        .count()
        .min(model.max_axes());
    let kept = rank.min(max_axes);
    let total_dispersion = candidates.iter().take(rank).map(|(sigma, _)| sigma * sigma).sum();

    let sqrt_r = model.r.mapv(f64::sqrt);
    let sqrt_c = model.c.mapv(f64::sqrt);
    // S has the trivial null vector sqrt(c) (or sqrt(r)); removing it exactly keeps
    // small axes centered, which the division by sigma would otherwise amplify
    let trivial = if column_side { &sqrt_c } else { &sqrt_r };
    let axes = candidates
        .into_iter()
        .take(kept)
        .map(|(_, x)| {
            let x = &x - &(trivial * trivial.dot(&x));
            let x = &x / x.dot(&x).sqrt();
            let image = if column_side { s.dot(&x) } else { s.t().dot(&x) };
            (image.dot(&image).sqrt(), x)
        })
        .map(|(sigma, x)| {
            let (f, g) = if column_side {
                let g = &x * sigma / &sqrt_c;
                (rows_from_columns(model, &g, sigma), g)
            } else {
                let f = &x * sigma / &sqrt_r;
                let g = columns_from_rows(model, &f, sigma);
                (f, g)
            };
            let mut axis = Axis { u: &g / sigma, v: &f / sigma, f, g, sigma, solver: None };
            axis.orient();
            axis
        })
        .collect();

    Ok(Decomposition {
        method: Method::Ca,
        axes,
        rank_used: kept,
        complete: kept == rank,
        total_dispersion,
        model: Arc::new(model.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{build_model, ContingencyTable};

    fn model(rows: &[&[f64]]) -> CorrespondenceModel {
        build_model(&ContingencyTable::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn pearson_residuals_of_minimal_example() {
        let s = pearson_residuals(&model(&[&[18.0, 0.0], &[0.0, 3.0]]));
        let b = 6f64.sqrt() / 7.0;
        let want = [[1.0 / 7.0, -b], [-b, 6.0 / 7.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((s[[i, j]] - want[i][j]).abs() < 1e-15, "{s}");
            }
        }
    }

    #[test]
    fn independence_gives_no_axes() {
        let m = model(&[&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0], &[3.0, 6.0, 9.0]]);
        assert!(pearson_residuals(&m).iter().all(|x| x.abs() < 1e-15));
        let d = ca_decompose(&m, 2).unwrap();
        assert_eq!(d.rank_used, 0);
        assert!(d.complete);
    }

    #[test]
    fn two_by_two_diagonal() {
        let d = ca_decompose(&model(&[&[18.0, 0.0], &[0.0, 3.0]]), 1).unwrap();
        assert_eq!(d.rank_used, 1);
        let axis = &d.axes[0];
        assert!((axis.sigma - 1.0).abs() < 1e-12);
        let want = [(1.0f64 / 6.0).sqrt(), -(6.0f64).sqrt()];
        let sign = axis.f[0].signum();
        for (got, want) in axis.f.iter().zip(want) {
            assert!((got - sign * want).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_five() {
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..5).map(|j| if i == j { [1.0, 2.0, 3.0, 4.0, 6.0][i] } else { 0.0 }).collect())
            .collect();
        let m = build_model(&ContingencyTable::from_rows(&rows).unwrap()).unwrap();
        let d = ca_decompose(&m, 4).unwrap();
        assert_eq!(d.rank_used, 4);
        for s in d.sigmas() {
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn wide_tables_use_row_side() {
        let m = model(&[&[5.0, 1.0, 0.0, 2.0, 7.0], &[1.0, 4.0, 3.0, 0.0, 1.0], &[2.0, 2.0, 6.0, 1.0, 0.0]]);
        let wide = ca_decompose(&m, 2).unwrap();
        let tall_table = ContingencyTable::from_rows(&[
            [5.0, 1.0, 2.0],
            [1.0, 4.0, 2.0],
            [0.0, 3.0, 6.0],
            [2.0, 0.0, 1.0],
            [7.0, 1.0, 0.0],
        ])
        .unwrap();
        let tall = ca_decompose(&build_model(&tall_table).unwrap(), 2).unwrap();
        for (a, b) in wide.axes.iter().zip(&tall.axes) {
            assert!((a.sigma - b.sigma).abs() < 1e-12);
            // transposing swaps the roles of f and g
            let dot: f64 = a.f.iter().zip(b.g.iter()).map(|(x, y)| x * y).sum();
            let norm = a.f.dot(&a.f).sqrt() * b.g.dot(&b.g).sqrt();
            assert!((dot.abs() / norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn axes_out_of_range() {
        let m = model(&[&[1.0, 2.0], &[3.0, 1.0]]);
        assert!(matches!(ca_decompose(&m, 2), Err(Error::AxesOutOfRange { requested: 2, max: 1 })));
    }

    #[test]
    fn proportional_rows_leave_a_null_space() {
        let base: &[&[f64]] = &[
            &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 0.0, 0.0, 1.0, 4.0],
            &[19.0, 17.0, 16.0, 4.0, 0.0, 15.0],
        ];
        let split: &[&[f64]] = &[
            &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.5, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 0.0, 0.0, 1.0, 4.0],
            &[19.0, 17.0, 16.0, 4.0, 0.0, 15.0],
            &[0.0, 0.0, 0.5, 0.0, 0.0, 0.0],
        ];
        let a = ca_decompose(&model(base), 4).unwrap();
        let b = ca_decompose(&model(split), 4).unwrap();
        assert_eq!(a.axes.len(), b.axes.len());
        for (x, y) in a.sigmas().iter().zip(b.sigmas()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_axis_stays_centered() {
        let m = model(&[&[6.0, 28.0, 0.0, 11.0], &[2.0, 9.0, 0.0, 14.0], &[5.0, 11.0, 8.0, 0.0], &[8.0, 22.0, 10.0, 0.0]]);
        let d = ca_decompose(&m, 3).unwrap();
        assert!(d.sigmas()[2] < 1e-4);
        for axis in &d.axes {
            assert!(axis.f.dot(&m.r).abs() < 1e-15 && axis.g.dot(&m.c).abs() < 1e-15);
            let f = rows_from_columns(&m, &axis.g, axis.sigma);
            assert!((&f - &axis.f).iter().all(|x| x.abs() < 1e-11));
        }
    }
}
