//! Result types shared by the CA and TCA engines.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::table::CorrespondenceModel;

/// Relative cut-off: axes with `sigma < RANK_REL_TOL * sigma_1` are discarded.
pub const RANK_REL_TOL: f64 = 1e-12;
/// Absolute floor below which a dispersion is round-off.
pub const RANK_ABS_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ca,
    Tca,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ca => "CA",
            Method::Tca => "TCA",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Exact,
    Iterative,
}

/// How a TCA principal axis was found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub solver: Solver,
    pub starts_tried: usize,
    pub converged: bool,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    /// Row principal coordinates.
    pub f: Array1<f64>,
    /// Column principal coordinates.
    pub g: Array1<f64>,
    pub sigma: f64,
    /// Column-side principal axis (length J).
    pub u: Array1<f64>,
    /// Row-side principal axis (length I).
    pub v: Array1<f64>,
    pub solver: Option<SolverInfo>,
}

impl Axis {
    /// Flips the axis so that its largest column coordinate (by magnitude,
    /// first index on ties) is positive.
    pub(crate) fn orient(&mut self) {
        let mut best = 0;
        for (j, x) in self.g.iter().enumerate() {
            if x.abs() > self.g[best].abs() {
                best = j;
            }
        }
        if self.g.get(best).is_some_and(|&x| x < 0.0) {
            self.flip();
        }
    }

    pub fn flip(&mut self) {
        self.f.mapv_inplace(|x| -x);
        self.g.mapv_inplace(|x| -x);
        self.u.mapv_inplace(|x| -x);
        self.v.mapv_inplace(|x| -x);
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub method: Method,
    pub axes: Vec<Axis>,
    /// Number of axes retained, `k`.
    pub rank_used: usize,
    /// True when the retained axes exhaust the residual matrix, so that the
    /// reconstruction formula is expected to hold exactly.
    pub complete: bool,
    /// Sum of `sigma^2` over every nontrivial axis, retained or not.
    pub total_dispersion: f64,
    pub model: Arc<CorrespondenceModel>,
}

impl Decomposition {
    pub fn sigmas(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.sigma).collect()
    }

    /// `P` rebuilt as `p_ij = p_i* p_*j (1 + sum_a f_a(i) g_a(j) / sigma_a)`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let m = &self.model;
        let mut out = Array2::zeros((m.n_rows(), m.n_cols()));
        for ((i, j), x) in out.indexed_iter_mut() {
            let bilinear: f64 = self.axes.iter().map(|a| a.f[i] * a.g[j] / a.sigma).sum();
            *x = m.r[i] * m.c[j] * (1.0 + bilinear);
        }
        out
    }
}
