//! Taxicab correspondence analysis.
//!
//! Each principal axis maximizes `||R u||_1` over sign vectors `u`, where `R`
//! is the current residual correspondence matrix. Small problems are solved by
//! enumerating sign vectors on the shorter side; larger ones use a multi-start
//! alternating ascent `u <- sgn(R'v)`, `v <- sgn(Ru)`. After each axis the
//! residual is deflated by the rank-one term `Dr f g' Dc / sigma`.
//!
//! Throughout, `sgn(0) = +1`.

use std::collections::HashSet;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;

use crate::decomposition::{Axis, Decomposition, Method, Solver, SolverInfo, RANK_ABS_TOL, RANK_REL_TOL};
use crate::error::{Error, Result};
use crate::table::CorrespondenceModel;

pub const DEFAULT_EXACT_THRESHOLD: usize = 20;
pub const CUT_NORM_MAX_DIM: usize = 15;
pub const SUBSET_SUM_MAX_LEN: usize = 25;
/// Relative slack under which two objectives count as tied.
const TIE_TOL: f64 = 1e-12;
const ZERO_TOL: f64 = 1e-12;
const MAX_ASCENT_STEPS: usize = 10_000;
/// Candidates per enumeration chunk. Fixed so results never depend on the
/// number of worker threads.
const CHUNK_BITS: u32 = 12;

#[inline]
pub fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn sgn_vec(x: &Array1<f64>) -> Array1<f64> {
    x.mapv(sgn)
}

/// `A s` with entries at round-off level, relative to the absolute sum of
/// their row of `A`, set to exactly zero so that `sgn` sees them as `+1`.
fn snapped_image(a: ArrayView2<f64>, s: &Array1<f64>) -> Array1<f64> {
    let mut image = a.dot(s);
    for (x, row) in image.iter_mut().zip(a.rows()) {
        if x.abs() <= ZERO_TOL * row.iter().map(|y| y.abs()).sum::<f64>() {
            *x = 0.0;
        }
    }
    image
}

/// `+1 < -1` lexicographic order on sign vectors.
fn lex_less(a: &Array1<f64>, b: &Array1<f64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x != y {
            return *x > *y;
        }
    }
    false
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcaAxisSolution {
    /// Column-side sign vector (length J).
    pub u: Array1<f64>,
    /// Row-side sign vector `sgn(R u)` (length I).
    pub v: Array1<f64>,
    /// `||R u||_1`.
    pub objective: f64,
    pub solver: Solver,
    pub starts_tried: usize,
    pub converged: bool,
}

impl TcaAxisSolution {
    pub fn info(&self) -> SolverInfo {
        SolverInfo { solver: self.solver, starts_tried: self.starts_tried, converged: self.converged, objective: self.objective }
    }
}

fn l1_image(r: &Array2<f64>, u: &Array1<f64>) -> f64 {
    r.dot(u).iter().map(|x| x.abs()).sum()
}

fn solution_from_u(r: &Array2<f64>, u: Array1<f64>, solver: Solver, starts_tried: usize, converged: bool) -> TcaAxisSolution {
    let ru = snapped_image(r.view(), &u);
    let objective = ru.iter().map(|x| x.abs()).sum();
    TcaAxisSolution { v: sgn_vec(&ru), u, objective, solver, starts_tried, converged }
}

/// Sign vector with `s[0] = +1` whose lexicographic rank (`+1 < -1`) is `rank`.
fn signs_from_rank(rank: u64, m: usize) -> Array1<f64> {
    Array1::from_iter((0..m).map(|k| if k > 0 && (rank >> (m - 1 - k)) & 1 == 1 { -1.0 } else { 1.0 }))
}

/// Visits every sign vector of one chunk in Gray-code order, calling `visit`
/// with the lexicographic rank and `||A s||_1`.
fn scan_chunk(a: ArrayView2<f64>, chunk: u64, len: u64, mut visit: impl FnMut(u64, f64)) {
    let m = a.ncols();
    let base = chunk * len;
    let mut s = signs_from_rank(base, m);
    let mut image = a.dot(&s);
    visit(base, image.iter().map(|x| x.abs()).sum());
    for t in 1..len {
        let bit = t.trailing_zeros() as usize;
        let k = m - 1 - bit;
        s[k] = -s[k];
        image.scaled_add(2.0 * s[k], &a.column(k));
        let rank = base ^ (t ^ (t >> 1));
        visit(rank, image.iter().map(|x| x.abs()).sum());
    }
}

/// Lexicographic ranks of every sign vector `s` with `s[0] = +1` that
/// maximizes `||A s||_1` within the tie tolerance, in increasing order.
fn enumerate_optima(a: ArrayView2<f64>) -> Vec<u64> {
    let m = a.ncols();
    let total: u64 = 1 << (m - 1);
    let len = total.min(1 << CHUNK_BITS);
    let chunks = total / len;

    let best = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut best = f64::NEG_INFINITY;
            scan_chunk(a, chunk, len, |_, obj| best = best.max(obj));
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let floor = best - TIE_TOL * best.abs();
    let mut ranks: Vec<u64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let mut hits = Vec::new();
            scan_chunk(a, chunk, len, |rank, obj| {
                if obj >= floor {
                    hits.push(rank);
                }
            });
            hits
        })
        .collect();
    ranks.sort_unstable();
    ranks
}

/// Smallest column sign vector consistent with an optimal row sign vector:
/// entries of `R'v` at round-off level are free and take `+1`.
fn smallest_u_for(r: &Array2<f64>, v: &Array1<f64>) -> Array1<f64> {
    let image = r.t().dot(v);
    let free = TIE_TOL * image.iter().map(|x| x.abs()).sum::<f64>();
    image.mapv(|x| if x.abs() <= free { 1.0 } else { x.signum() })
}

/// Exact principal axis by enumerating sign vectors on the shorter side.
/// Ties resolve to the lexicographically smallest `u` (`+1 < -1`, `u[0] = +1`).
pub fn tca_axis_exact(r: &Array2<f64>, threshold: usize) -> Result<TcaAxisSolution> {
    let (rows, cols) = r.dim();
    let m = rows.min(cols);
    if m > threshold || m >= 64 {
        return Err(Error::DimensionTooLarge { what: "exact TCA axis", limit: threshold.min(63), got: m });
    }
    let u = if cols <= rows {
        signs_from_rank(enumerate_optima(r.view())[0], cols)
    } else {
        // every optimal u is sign-consistent with some optimal v
        let mut best: Option<Array1<f64>> = None;
        for rank in enumerate_optima(r.t()) {
            let v = signs_from_rank(rank, rows);
            for candidate in [smallest_u_for(r, &v), smallest_u_for(r, &-&v)] {
                if candidate[0] > 0.0 && best.as_ref().map_or(true, |b| lex_less(&candidate, b)) {
                    best = Some(candidate);
                }
            }
        }
        best.expect("the maximum is attained")
    };
    let tried = 1usize << (m - 1);
    Ok(solution_from_u(r, u, Solver::Exact, tried, true))
}

struct Ascent {
    u: Array1<f64>,
    objective: f64,
    converged: bool,
}

fn ascend(r: &Array2<f64>, start: usize) -> Ascent {
    let mut v = sgn_vec(&r.column(start).to_owned());
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    let mut converged = false;
    let mut steps = 0;
    let mut u = loop {
        let u = sgn_vec(&snapped_image(r.t(), &v));
        let next_v = sgn_vec(&snapped_image(r.view(), &u));
        steps += 1;
        if next_v == v {
            converged = true;
            break u;
        }
        if !seen.insert(next_v.iter().map(|&x| x > 0.0).collect()) || steps == MAX_ASCENT_STEPS {
            break u;
        }
        v = next_v;
    };
    if u[0] < 0.0 {
        u.mapv_inplace(|x| -x);
    }
    Ascent { objective: l1_image(r, &u), u, converged }
}

/// Multi-start alternating ascent, one start per column of `R`.
pub fn tca_axis_iterative(r: &Array2<f64>) -> TcaAxisSolution {
    let starts = r.ncols();
    let results: Vec<Ascent> = (0..starts).into_par_iter().map(|j| ascend(r, j)).collect();
    let best = results.iter().map(|a| a.objective).fold(f64::NEG_INFINITY, f64::max);
    let floor = best - TIE_TOL * best.abs();
    let mut chosen: Option<&Ascent> = None;
    for a in results.iter().filter(|a| a.objective >= floor) {
        if chosen.map_or(true, |c| lex_less(&a.u, &c.u)) {
            chosen = Some(a);
        }
    }
    let chosen = chosen.expect("at least one start");
    solution_from_u(r, chosen.u.clone(), Solver::Iterative, starts, chosen.converged)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TcaOptions {
    /// Largest `min(I, J)` solved by exhaustive enumeration.
    pub exact_threshold: usize,
}

impl Default for TcaOptions {
    fn default() -> Self {
        Self { exact_threshold: DEFAULT_EXACT_THRESHOLD }
    }
}

pub fn solve_axis(r: &Array2<f64>, opts: TcaOptions) -> Result<TcaAxisSolution> {
    if r.nrows().min(r.ncols()) <= opts.exact_threshold {
        tca_axis_exact(r, opts.exact_threshold)
    } else {
        Ok(tca_axis_iterative(r))
    }
}

/// `R_a = R_{a-1} - Dr f g' Dc / sigma`.
pub fn deflate(residual: &mut Array2<f64>, model: &CorrespondenceModel, f: &Array1<f64>, g: &Array1<f64>, sigma: f64) {
    let rf = &model.r * f;
    let cg = &model.c * g;
    for ((i, j), x) in residual.indexed_iter_mut() {
        *x -= rf[i] * cg[j] / sigma;
    }
}

/// Residual matrices `R_0, ..., R_{k-1}` preceding each axis of a decomposition.
pub fn residual_sequence(decomp: &Decomposition) -> Vec<Array2<f64>> {
    let mut r = decomp.model.residual.clone();
    let mut out = Vec::with_capacity(decomp.axes.len());
    for axis in &decomp.axes {
        out.push(r.clone());
        deflate(&mut r, &decomp.model, &axis.f, &axis.g, axis.sigma);
    }
    out
}

/// Axes are extracted until the residual is exhausted so that the total
/// dispersion is known; only the first `max_axes` are returned.
pub fn tca_decompose(model: &CorrespondenceModel, max_axes: usize, opts: TcaOptions) -> Result<Decomposition> {
    if max_axes > model.max_axes() {
        return Err(Error::AxesOutOfRange { requested: max_axes, max: model.max_axes() });
    }
    let mut residual = model.residual.clone();
    let scale = residual.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let mut axes: Vec<Axis> = Vec::new();
    let mut exhausted = false;
    for _ in 0..model.max_axes() {
        let solution = solve_axis(&residual, opts)?;
        let f = snapped_image(residual.view(), &solution.u) / &model.r;
        let v = sgn_vec(&f);
        let g = residual.t().dot(&v) / &model.c;
        let sigma: f64 = model.r.iter().zip(f.iter()).map(|(p, x)| p * x.abs()).sum();
        let sigma1 = axes.first().map_or(sigma, |a| a.sigma);
        if sigma <= RANK_ABS_TOL || sigma < RANK_REL_TOL * sigma1 {
            exhausted = true;
            break;
        }
        deflate(&mut residual, model, &f, &g, sigma);
        axes.push(Axis { f, g, sigma, u: solution.u.clone(), v, solver: Some(solution.info()) });
    }
    let leftover = residual.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    let exhausted = exhausted || axes.len() == model.max_axes() || leftover <= RANK_REL_TOL * scale;
    let total_dispersion = axes.iter().map(|a| a.sigma * a.sigma).sum();
    let complete = exhausted && axes.len() <= max_axes;
    axes.truncate(max_axes);
    for axis in &mut axes {
        axis.orient();
    }
    Ok(Decomposition {
        method: Method::Tca,
        rank_used: axes.len(),
        axes,
        complete,
        total_dispersion,
        model: Arc::new(model.clone()),
    })
}

/// Cut norm `max_{S,T} |sum_{S x T} R(i,j)|` by visiting every pair of row
/// and column subsets.
pub fn cut_norm_bruteforce(r: &Array2<f64>) -> Result<f64> {
    let (rows, cols) = r.dim();
    let largest = rows.max(cols);
    if largest > CUT_NORM_MAX_DIM {
        return Err(Error::DimensionTooLarge { what: "brute-force cut norm", limit: CUT_NORM_MAX_DIM, got: largest });
    }
    let mut col_sums = vec![0.0; cols];
    let mut in_s = vec![false; rows];
    let mut best = 0.0_f64;
    for t in 0u64..(1 << rows) {
        if t > 0 {
            let i = t.trailing_zeros() as usize;
            let sign = if in_s[i] { -1.0 } else { 1.0 };
            in_s[i] = !in_s[i];
            for (j, s) in col_sums.iter_mut().enumerate() {
                *s += sign * r[[i, j]];
            }
        }
        let mut in_t = vec![false; cols];
        let mut sum = 0.0_f64;
        best = best.max(sum.abs());
        for w in 1u64..(1 << cols) {
            let j = w.trailing_zeros() as usize;
            sum += if in_t[j] { -col_sums[j] } else { col_sums[j] };
            in_t[j] = !in_t[j];
            best = best.max(sum.abs());
        }
    }
    Ok(best)
}

/// First TCA dispersion of the diagonal table `Diag(p)`:
/// `max_S 4 s (1 - s)` with `s = sum_{i in S} p_i`.
pub fn diagonal_sigma1(p: &[f64]) -> Result<f64> {
    if p.len() > SUBSET_SUM_MAX_LEN {
        return Err(Error::DimensionTooLarge { what: "subset-sum enumeration", limit: SUBSET_SUM_MAX_LEN, got: p.len() });
    }
    if p.is_empty() || p.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::ZeroSum);
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotProbability(total));
    }
    // S and its complement give the same value, so the last element stays out
    let free = &p[..p.len() - 1];
    let low_bits = free.len().min(CHUNK_BITS as usize);
    let high_bits = free.len() - low_bits;
    let mut best = 0.0_f64;
    for high in 0u64..(1 << high_bits) {
        let mut s: f64 = (0..high_bits).filter(|b| (high >> b) & 1 == 1).map(|b| free[low_bits + b]).sum();
        let mut member = vec![false; low_bits];
        best = best.max(4.0 * s * (1.0 - s));
        for t in 1u64..(1 << low_bits) {
            let k = t.trailing_zeros() as usize;
            s += if member[k] { -free[k] } else { free[k] };
            member[k] = !member[k];
            best = best.max(4.0 * s * (1.0 - s));
        }
    }
    Ok(best)
}
