//! Contributions, explained variation, invariant checks and CA-vs-TCA map
//! comparison.

use std::fmt;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::ca::{columns_from_rows, rows_from_columns};
use crate::decomposition::{Decomposition, Method};
use crate::error::{Error, Result};
use crate::tca::residual_sequence;

pub const DEFAULT_PHI_THRESHOLD: f64 = 0.9;
pub const MAX_PAIRED_AXES: usize = 9;

pub const TOL_CENTERING: f64 = 1e-10;
pub const TOL_IDENTITY: f64 = 1e-9;

/// Per-1000 contributions of every row and column to each axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionTable {
    pub method: Method,
    /// `rows[a][i]`: contribution of row `i` to axis `a`.
    pub rows: Vec<Vec<f64>>,
    pub cols: Vec<Vec<f64>>,
}

/// CA: `C_a(i) = 1000 p_i* f_a(i)^2 / sigma_a^2`. TCA: the signed
/// `SC_a(i) = 1000 p_i* f_a(i) / sigma_a`. Columns use the column masses.
pub fn contributions(decomp: &Decomposition) -> Result<ContributionTable> {
    let model = &decomp.model;
    let mut rows = Vec::with_capacity(decomp.axes.len());
    let mut cols = Vec::with_capacity(decomp.axes.len());
    for (a, axis) in decomp.axes.iter().enumerate() {
        if !(axis.sigma > 0.0) {
            return Err(Error::ZeroDispersion(a + 1));
        }
        let share = |mass: &Array1<f64>, coord: &Array1<f64>| -> Vec<f64> {
            mass.iter()
                .zip(coord.iter())
                .map(|(p, x)| match decomp.method {
                    Method::Ca => 1000.0 * p * x * x / (axis.sigma * axis.sigma),
                    Method::Tca => 1000.0 * p * x / axis.sigma,
                })
                .collect()
        };
        rows.push(share(&model.r, &axis.f));
        cols.push(share(&model.c, &axis.g));
    }
    Ok(ContributionTable { method: decomp.method, rows, cols })
}

/// Percentage of the total squared dispersion carried by each axis,
/// `100 sigma_a^2 / sum_b sigma_b^2`, the sum running over every nontrivial
/// axis (retained or not), for both methods.
pub fn explained_variation(decomp: &Decomposition) -> Result<Vec<f64>> {
    if decomp.axes.is_empty() {
        return Err(Error::NoAxes);
    }
    let total = decomp.total_dispersion;
    if !(total > 0.0) {
        return Err(Error::ZeroDispersion(1));
    }
    Ok(decomp.axes.iter().map(|a| 100.0 * a.sigma * a.sigma / total).collect())
}

/// Positive and negative weighted coordinate sums of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Balance {
    /// `sum_{f > 0} p_i* f(i)`.
    pub rows_positive: f64,
    /// `-sum_{f < 0} p_i* f(i)`.
    pub rows_negative: f64,
    pub cols_positive: f64,
    pub cols_negative: f64,
}

fn half_sums(mass: &Array1<f64>, coord: &Array1<f64>) -> (f64, f64) {
    let mut pos = 0.0;
    let mut neg = 0.0;
    for (p, x) in mass.iter().zip(coord.iter()) {
        if *x > 0.0 {
            pos += p * x;
        } else {
            neg -= p * x;
        }
    }
    (pos, neg)
}

/// Row and column balance `(A, B)` of every axis. In TCA all four sums equal
/// `sigma / 2`; in CA the row and column sums generally differ.
pub fn ca_balance(decomp: &Decomposition) -> Vec<Balance> {
    decomp
        .axes
        .iter()
        .map(|axis| {
            let (rows_positive, rows_negative) = half_sums(&decomp.model.r, &axis.f);
            let (cols_positive, cols_negative) = half_sums(&decomp.model.c, &axis.g);
            Balance { rows_positive, rows_negative, cols_positive, cols_negative }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub tolerance: f64,
    pub max_residual: f64,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub method: Method,
    pub checks: Vec<Check>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "PASS",
                CheckStatus::Fail => "FAIL",
                CheckStatus::Skipped => "SKIP",
            };
            writeln!(f, "{status} {:<20} max residual {:.3e} (tol {:.0e}) {}", c.name, c.max_residual, c.tolerance, c.detail)?;
        }
        Ok(())
    }
}

fn check(name: &str, tolerance: f64, max_residual: f64, detail: &str) -> Check {
    let status = if max_residual <= tolerance { CheckStatus::Pass } else { CheckStatus::Fail };
    Check { name: name.into(), tolerance, max_residual, status, detail: detail.into() }
}

fn max_abs_diff(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

fn weighted_dot(w: &Array1<f64>, a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    w.iter().zip(a.iter()).zip(b.iter()).map(|((w, a), b)| w * a * b).sum()
}

/// Runs every identity the decomposition is supposed to satisfy and reports
/// the largest violation of each.
pub fn verify(decomp: &Decomposition) -> CheckReport {
    let model = &decomp.model;
    let axes = &decomp.axes;
    let mut checks = Vec::new();

    let centering = axes.iter().fold(0.0_f64, |acc, a| acc.max(a.f.dot(&model.r).abs()).max(a.g.dot(&model.c).abs()));
    checks.push(check("centering", TOL_CENTERING, centering, "f'Dr 1 = g'Dc 1 = 0"));

    if decomp.complete {
        let rebuilt = decomp.reconstruct();
        let err = (&rebuilt - &model.p).iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        checks.push(check("reconstruction", TOL_IDENTITY, err, "p_ij = r_i c_j (1 + sum f g / sigma)"));
    } else {
        checks.push(Check {
            name: "reconstruction".into(),
            tolerance: TOL_IDENTITY,
            max_residual: 0.0,
            status: CheckStatus::Skipped,
            detail: "decomposition truncated".into(),
        });
    }

    match decomp.method {
        Method::Ca => {
            // TCA dispersions follow the deflation order and need not decrease
            let ordering = axes.windows(2).fold(0.0_f64, |acc, w| acc.max(w[1].sigma - w[0].sigma));
            checks.push(check("ca_ordering", TOL_IDENTITY, ordering, "sigma nonincreasing"));
            let mut norms = 0.0_f64;
            let mut ortho = 0.0_f64;
            let mut transition = 0.0_f64;
            let mut bound = 0.0_f64;
            for (a, x) in axes.iter().enumerate() {
                let s2 = x.sigma * x.sigma;
                norms = norms
                    .max((weighted_dot(&model.r, &x.f, &x.f) - s2).abs())
                    .max((weighted_dot(&model.c, &x.g, &x.g) - s2).abs());
                for y in &axes[a + 1..] {
                    ortho = ortho
                        .max(weighted_dot(&model.r, &x.f, &y.f).abs())
                        .max(weighted_dot(&model.c, &x.g, &y.g).abs());
                }
                transition = transition
                    .max(max_abs_diff(&columns_from_rows(model, &x.f, x.sigma), &x.g))
                    .max(max_abs_diff(&rows_from_columns(model, &x.g, x.sigma), &x.f));
                bound = bound.max(x.sigma - 1.0);
            }
            checks.push(check("ca_norms", TOL_IDENTITY, norms, "f'Dr f = g'Dc g = sigma^2"));
            checks.push(check("ca_orthogonality", TOL_IDENTITY, ortho, "f_a'Dr f_b = g_a'Dc g_b = 0"));
            checks.push(check("ca_transition", TOL_IDENTITY, transition, "f and g recomputed through Pr(j|i), Pr(i|j)"));
            checks.push(check("ca_sigma_bound", 1e-12, bound.max(0.0), "sigma <= 1"));
        }
        Method::Tca => {
            let residuals = residual_sequence(decomp);
            let mut norms = 0.0_f64;
            let mut conjugacy = 0.0_f64;
            let mut equivariability = 0.0_f64;
            let mut quadrants = 0.0_f64;
            let mut transition = 0.0_f64;
            for (a, (x, r)) in axes.iter().zip(&residuals).enumerate() {
                let l1 = |w: &Array1<f64>, c: &Array1<f64>| w.iter().zip(c.iter()).map(|(w, c)| w * c.abs()).sum::<f64>();
                norms = norms.max((l1(&model.r, &x.f) - x.sigma).abs()).max((l1(&model.c, &x.g) - x.sigma).abs());
                for earlier in &axes[..a] {
                    conjugacy = conjugacy
                        .max(weighted_dot(&model.r, &x.f, &earlier.v).abs())
                        .max(weighted_dot(&model.c, &x.g, &earlier.u).abs());
                }
                let (rp, rn) = half_sums(&model.r, &x.f);
                let (cp, cn) = half_sums(&model.c, &x.g);
                let half = x.sigma / 2.0;
                for s in [rp, rn, cp, cn] {
                    equivariability = equivariability.max((s - half).abs());
                }
                for q in quadrant_sums(r, &x.u, &x.v) {
                    quadrants = quadrants.max((q - x.sigma / 4.0).abs());
                }
                let f = r.dot(&x.u) / &model.r;
                let g = r.t().dot(&x.v) / &model.c;
                transition = transition.max(max_abs_diff(&f, &x.f)).max(max_abs_diff(&g, &x.g));
            }
            checks.push(check("tca_norms", TOL_IDENTITY, norms, "sum p|f| = sum p|g| = sigma"));
            checks.push(check("tca_conjugacy", TOL_IDENTITY, conjugacy, "f_a'Dr sgn(f_b) = g_a'Dc sgn(g_b) = 0, a > b"));
            checks.push(check("equivariability", TOL_IDENTITY, equivariability, "four signed half-sums = sigma/2"));
            checks.push(check("quadrant_balance", TOL_IDENTITY, quadrants, "four quadrant sums = sigma/4"));
            checks.push(check("tca_transition", TOL_IDENTITY, transition, "f = Dr^-1 R u, g = Dc^-1 R'v"));
        }
    }
    CheckReport { method: decomp.method, checks }
}

/// `v+'R u+`, `v-'R u-`, `|v-'R u+|`, `|v+'R u-|` with
/// `u+ = (1 + u)/2` and `u- = (u - 1)/2`.
pub fn quadrant_sums(r: &Array2<f64>, u: &Array1<f64>, v: &Array1<f64>) -> [f64; 4] {
    let plus = |s: &Array1<f64>| s.mapv(|x| (1.0 + x) / 2.0);
    let minus = |s: &Array1<f64>| s.mapv(|x| (x - 1.0) / 2.0);
    let (up, um, vp, vm) = (plus(u), minus(u), plus(v), minus(v));
    [vp.dot(&r.dot(&up)), vm.dot(&r.dot(&um)), vm.dot(&r.dot(&up)).abs(), vp.dot(&r.dot(&um)).abs()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Similar,
    Partial,
    Dissimilar,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Similar => "similar",
            Verdict::Partial => "partial",
            Verdict::Dissimilar => "dissimilar",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    /// Congruence of each paired axis, in the order of the first map's axes.
    pub phi: Vec<f64>,
    /// `(axis of first map, axis of second map)`, 1-based.
    pub pairing: Vec<(usize, usize)>,
    pub threshold: f64,
    pub verdict: Verdict,
}

fn congruence(mass: &Array1<f64>, a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    let denom = (weighted_dot(mass, a, a) * weighted_dot(mass, b, b)).sqrt();
    if denom > 0.0 {
        (weighted_dot(mass, a, b).abs() / denom).min(1.0)
    } else {
        0.0
    }
}

/// Lexicographic permutations of `0..n`.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                go(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Compares the row maps of two decompositions of the same table through the
/// `Dr`-weighted congruence `|f1'Dr f2| / (||f1|| ||f2||)` of paired axes.
pub fn map_similarity(d1: &Decomposition, d2: &Decomposition, axes: usize, threshold: f64) -> Result<SimilarityReport> {
    if !d1.model.same_margins(&d2.model, 1e-12) {
        return Err(Error::MismatchedTables);
    }
    let available = d1.axes.len().min(d2.axes.len());
    if axes == 0 || axes > available {
        return Err(Error::AxesOutOfRange { requested: axes, max: available });
    }
    if axes > MAX_PAIRED_AXES {
        return Err(Error::DimensionTooLarge { what: "axis pairing", limit: MAX_PAIRED_AXES, got: axes });
    }
    let r = &d1.model.r;
    let phi = Array2::from_shape_fn((axes, axes), |(a, b)| congruence(r, &d1.axes[a].f, &d2.axes[b].f));
    let mut best: Option<(f64, Vec<usize>)> = None;
    for perm in permutations(axes) {
        let total: f64 = perm.iter().enumerate().map(|(a, &b)| phi[[a, b]]).sum();
        if best.as_ref().map_or(true, |(t, _)| total > *t) {
            best = Some((total, perm));
        }
    }
    let (_, perm) = best.expect("at least one permutation");
    let paired: Vec<f64> = perm.iter().enumerate().map(|(a, &b)| phi[[a, b]]).collect();
    let above = paired.iter().filter(|&&p| p >= threshold).count();
    let verdict = if above == axes {
        Verdict::Similar
    } else if above > 0 {
        Verdict::Partial
    } else {
        Verdict::Dissimilar
    };
    Ok(SimilarityReport {
        phi: paired,
        pairing: perm.iter().enumerate().map(|(a, &b)| (a + 1, b + 1)).collect(),
        threshold,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ca::ca_decompose;
    use crate::table::{build_model, ContingencyTable};
    use crate::tca::{tca_decompose, TcaOptions};

    fn small() -> crate::table::CorrespondenceModel {
        build_model(
            &ContingencyTable::from_rows(&[
                [10.0, 2.0, 3.0, 0.0],
                [1.0, 8.0, 2.0, 4.0],
                [0.0, 3.0, 9.0, 1.0],
                [5.0, 0.0, 1.0, 7.0],
                [2.0, 2.0, 2.0, 3.0],
            ])
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn ca_contributions_sum_to_1000() {
        let d = ca_decompose(&small(), 3).unwrap();
        let c = contributions(&d).unwrap();
        for side in [&c.rows, &c.cols] {
            for axis in side {
                assert!((axis.iter().sum::<f64>() - 1000.0).abs() < 1e-9);
                assert!(axis.iter().all(|&x| (0.0..=1000.0).contains(&x)));
            }
        }
    }

    #[test]
    fn tca_signed_contributions_balance() {
        let d = tca_decompose(&small(), 3, TcaOptions::default()).unwrap();
        let c = contributions(&d).unwrap();
        for side in [&c.rows, &c.cols] {
            for axis in side {
                let pos: f64 = axis.iter().filter(|x| **x > 0.0).sum();
                let neg: f64 = axis.iter().filter(|x| **x < 0.0).sum();
                assert!((pos - 500.0).abs() < 1e-6 && (neg + 500.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn explained_variation_sums_to_100() {
        for d in [ca_decompose(&small(), 3).unwrap(), tca_decompose(&small(), 3, TcaOptions::default()).unwrap()] {
            let e = explained_variation(&d).unwrap();
            assert!((e.iter().sum::<f64>() - 100.0).abs() < 1e-9);
        }
        let full = explained_variation(&ca_decompose(&small(), 3).unwrap()).unwrap();
        let single = explained_variation(&ca_decompose(&small(), 1).unwrap()).unwrap();
        assert_eq!(single.len(), 1);
        assert!((single[0] - full[0]).abs() < 1e-12);
        let none = ca_decompose(&small(), 0).unwrap();
        assert!(matches!(explained_variation(&none), Err(Error::NoAxes)));
    }

    #[test]
    fn balance_reports() {
        let ca = ca_decompose(&small(), 3).unwrap();
        for b in ca_balance(&ca) {
            assert!((b.rows_positive - b.rows_negative).abs() < 1e-12);
            assert!((b.cols_positive - b.cols_negative).abs() < 1e-12);
        }
        let tca = tca_decompose(&small(), 3, TcaOptions::default()).unwrap();
        for (b, axis) in ca_balance(&tca).iter().zip(&tca.axes) {
            for s in [b.rows_positive, b.rows_negative, b.cols_positive, b.cols_negative] {
                assert!((s - axis.sigma / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn verify_passes_and_catches_corruption() {
        let ca = ca_decompose(&small(), 3).unwrap();
        let report = verify(&ca);
        assert!(report.passed(), "{report}");
        let tca = tca_decompose(&small(), 3, TcaOptions::default()).unwrap();
        let report = verify(&tca);
        assert!(report.passed(), "{report}");

        let mut broken = ca.clone();
        broken.axes[0].f[1] += 0.05;
        let report = verify(&broken);
        assert_eq!(report.get("reconstruction").unwrap().status, CheckStatus::Fail);
        assert!(!report.passed());
    }

    #[test]
    fn truncated_reconstruction_is_skipped() {
        let d = ca_decompose(&small(), 1).unwrap();
        assert!(!d.complete);
        assert_eq!(verify(&d).get("reconstruction").unwrap().status, CheckStatus::Skipped);
    }

    #[test]
    fn self_similarity() {
        let d = ca_decompose(&small(), 3).unwrap();
        let report = map_similarity(&d, &d, 3, DEFAULT_PHI_THRESHOLD).unwrap();
        assert!(report.phi.iter().all(|p| (p - 1.0).abs() < 1e-12));
        assert_eq!(report.verdict, Verdict::Similar);
        assert_eq!(report.pairing, vec![(1, 1), (2, 2), (3, 3)]);

        let mut flipped = d.clone();
        flipped.axes[1].flip();
        assert_eq!(map_similarity(&d, &flipped, 3, DEFAULT_PHI_THRESHOLD).unwrap().phi, report.phi);
    }

    #[test]
    fn similarity_rejects_other_tables() {
        let d = ca_decompose(&small(), 3).unwrap();
        let other = build_model(&ContingencyTable::from_rows(&[[1.0, 2.0], [3.0, 1.0]]).unwrap()).unwrap();
        let e = ca_decompose(&other, 1).unwrap();
        assert!(matches!(map_similarity(&d, &e, 1, 0.9), Err(Error::MismatchedTables)));
        assert!(matches!(map_similarity(&d, &d, 4, 0.9), Err(Error::AxesOutOfRange { .. })));
    }

    #[test]
    fn truncation_keeps_explained_shares() {
        let m = build_model(
            &ContingencyTable::from_rows(&[[9.0, 2.0, 4.0, 1.0], [1.0, 8.0, 3.0, 2.0], [2.0, 2.0, 7.0, 6.0], [5.0, 1.0, 1.0, 9.0]]).unwrap(),
        )
        .unwrap();
        for (full, short) in [
            (ca_decompose(&m, 3).unwrap(), ca_decompose(&m, 1).unwrap()),
            (tca_decompose(&m, 3, TcaOptions::default()).unwrap(), tca_decompose(&m, 1, TcaOptions::default()).unwrap()),
        ] {
            let a = explained_variation(&full).unwrap();
            let b = explained_variation(&short).unwrap();
            assert!((a.iter().sum::<f64>() - 100.0).abs() < 1e-9);
            assert!((a[0] - b[0]).abs() < 1e-9 && b[0] < 100.0);
            assert!(full.complete && !short.complete);
        }
    }
}
