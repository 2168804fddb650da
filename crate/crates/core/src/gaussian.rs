//! Closed-form evaluation of the Gaussian model through covariance algebra.
//!
//! Channel: `Y1 = X + S2 + W1`, `Y2 = X + S1 + W2`, `Z = X + S1 + S2 + W3`,
//! with `X = X1 + X2`, `U1 = X1 + a1 S2` and `U2 = X2 + a2 (S1 + X1)`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, RegionPolygon};
use crate::region::{region_from_bounds, RateBounds};

/// Diagonal jitter for near-singular blocks, relative to the trace of the
/// normalized joint block.
pub const JITTER_SCALE: f64 = 1e-12;

pub const BASE_LABELS: [&str; 7] = ["X1", "X2", "S1", "S2", "W1", "W2", "W3"];
pub const DERIVED_LABELS: [&str; 6] = ["U1", "U2", "X", "Y1", "Y2", "Z"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct GaussianParams {
    pub P: f64,
    pub N1: f64,
    pub N2: f64,
    pub N3: f64,
    pub Q1: f64,
    pub Q2: f64,
    pub rho: f64,
}

impl Default for GaussianParams {
    fn default() -> Self {
        Self {
            P: 1.0,
            N1: 1.5,
            N2: 1.0,
            N3: 2.0,
            Q1: 0.1,
            Q2: 0.1,
            rho: 0.0,
        }
    }
}

impl GaussianParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        let all = [self.P, self.N1, self.N2, self.N3, self.Q1, self.Q2, self.rho];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("gaussian parameters must be finite");
        }
        if self.P <= 0.0 || self.N1 <= 0.0 || self.N2 <= 0.0 || self.N3 <= 0.0 {
            return bad("P, N1, N2, N3 must be positive");
        }
        if self.Q1 < 0.0 || self.Q2 < 0.0 {
            return bad("Q1, Q2 must be nonnegative");
        }
        if self.rho.abs() > 1.0 {
            return bad("|rho| must be at most 1");
        }
        if self.N1 < self.N2 {
            return bad("N1 must be at least N2");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
}

impl AuxParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha1.is_finite() && self.alpha2.is_finite()) {
            return Err(Error::InvalidParameter("alpha must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter("beta must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianVector {
    pub labels: Vec<String>,
    pub cov: DMatrix<f64>,
    /// `cov = factor * factor^T` when known.
    factor: Option<DMatrix<f64>>,
}

impl GaussianVector {
    pub fn new(labels: Vec<String>, cov: DMatrix<f64>) -> Result<Self> {
        let n = labels.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: cov.nrows(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * (1.0 + cov[(i, j)].abs()) {
                    return Err(Error::InvalidParameter(format!(
                        "covariance not symmetric at ({}, {})",
                        labels[i], labels[j]
                    )));
                }
            }
        }
        let min_eig = cov.clone().symmetric_eigenvalues().min();
        let scale = cov.diagonal().max().max(1.0);
        if min_eig < -1e-9 * scale {
            return Err(Error::InvalidParameter(format!(
                "covariance not positive semidefinite (eigenvalue {min_eig})"
            )));
        }
        Ok(Self {
            labels,
            cov,
            factor: None,
        })
    }

    /// Replaces variable `label` by `k` times itself.
    pub fn scale_variable(&mut self, label: &str, k: f64) -> Result<()> {
        let i = self.index(label)?;
        self.cov.row_mut(i).scale_mut(k);
        self.cov.column_mut(i).scale_mut(k);
        if let Some(f) = &mut self.factor {
            f.row_mut(i).scale_mut(k);
        }
        Ok(())
    }

    pub fn index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownAxis(label.to_string()))
    }

    pub fn variance(&self, label: &str) -> Result<f64> {
        let i = self.index(label)?;
        Ok(self.cov[(i, i)])
    }

    pub fn covariance(&self, a: &str, b: &str) -> Result<f64> {
        Ok(self.cov[(self.index(a)?, self.index(b)?)])
    }
}

/// Rows map the base vector `(X1, X2, S1, S2, W1, W2, W3)` to each label.
fn mixing(ap: &AuxParams) -> DMatrix<f64> {
    let (a1, a2) = (ap.alpha1, ap.alpha2);
    #[rustfmt::skip]
    let derived = [
        [1.0, 0.0, 0.0, a1, 0.0, 0.0, 0.0], // U1
        [a2, 1.0, a2, 0.0, 0.0, 0.0, 0.0],  // U2
        [1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0], // X
        [1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0], // Y1
        [1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0], // Y2
        [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0], // Z
    ];
    let mut m = DMatrix::zeros(13, 7);
    for i in 0..7 {
        m[(i, i)] = 1.0;
    }
    for (r, row) in derived.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            m[(7 + r, c)] = *v;
        }
    }
    m
}

pub fn build_covariance(gp: &GaussianParams, ap: &AuxParams) -> Result<GaussianVector> {
    gp.validate()?;
    ap.validate()?;
    // Square root of the base covariance; only (S1, S2) are coupled.
    let mut root = DMatrix::zeros(7, 7);
    root[(0, 0)] = (ap.beta * gp.P).sqrt();
    root[(1, 1)] = ((1.0 - ap.beta) * gp.P).sqrt();
    root[(2, 2)] = gp.Q1.sqrt();
    root[(3, 2)] = gp.rho * gp.Q2.sqrt();
    root[(3, 3)] = (1.0 - gp.rho * gp.rho).sqrt() * gp.Q2.sqrt();
    root[(4, 4)] = gp.N1.sqrt();
    root[(5, 5)] = gp.N2.sqrt();
    root[(6, 6)] = gp.N3.sqrt();
    let factor = mixing(ap) * root;
    let mut cov = &factor * factor.transpose();
    cov = (&cov + cov.transpose()) * 0.5;
    let labels = BASE_LABELS
        .iter()
        .chain(DERIVED_LABELS.iter())
        .map(|s| s.to_string())
        .collect();
    // PSD by construction.
    Ok(GaussianVector {
        labels,
        cov,
        factor: Some(factor),
    })
}

/// Smallest squared Cholesky pivot, on the unit-variance scale, accepted
/// without regularization.
pub const SINGULAR_PIVOT: f64 = 1e-10;

/// `log2 det` through Cholesky; `None` when a pivot falls below [`SINGULAR_PIVOT`].
fn log2_det_regular(m: &DMatrix<f64>) -> Option<f64> {
    let ch = m.clone().cholesky()?;
    let d = ch.l().diagonal();
    if d.iter().any(|p| p * p < SINGULAR_PIVOT) {
        return None;
    }
    Some(2.0 * d.iter().map(|p| p.log2()).sum::<f64>())
}

/// `log2 det (R R^T)` for rows `R` of unit norm, through QR of `R^T`.
fn log2_gram_det_regular(rows: &DMatrix<f64>) -> Option<f64> {
    if rows.nrows() > rows.ncols() {
        return None;
    }
    let r = rows.transpose().qr().r();
    let d = r.diagonal();
    if d.iter().any(|p| p * p < SINGULAR_PIVOT) {
        return None;
    }
    Some(d.iter().map(|p| (p * p).log2()).sum::<f64>())
}

fn log2_det(m: &DMatrix<f64>) -> f64 {
    if let Some(ch) = m.clone().cholesky() {
        return 2.0 * ch.l().diagonal().iter().map(|d| d.log2()).sum::<f64>();
    }
    m.clone().lu().determinant().abs().log2()
}

fn block(cov: &DMatrix<f64>, idx: &[usize], lambda: f64) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| {
        cov[(idx[i], idx[j])] + if i == j { lambda } else { 0.0 }
    })
}

/// `I(A; B)` in bits with an explicit jitter scale; exposed for sensitivity checks.
pub fn gaussian_mi_with_jitter(gv: &GaussianVector, a: &[&str], b: &[&str], jitter: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let ia = a.iter().map(|l| gv.index(l)).collect::<Result<Vec<_>>>()?;
    let ib = b.iter().map(|l| gv.index(l)).collect::<Result<Vec<_>>>()?;
    if ia.iter().any(|i| ib.contains(i)) {
        return Err(Error::OverlappingGroups(format!("{a:?} / {b:?}")));
    }
    let all: Vec<usize> = ia.iter().chain(ib.iter()).copied().collect();
    // Per-variable scaling leaves the information unchanged and keeps the
    // jitter meaningful when variances differ by orders of magnitude.
    let sd: Vec<f64> = all
        .iter()
        .map(|&i| {
            let v = gv.cov[(i, i)];
            if v > 0.0 {
                v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let sdv = DVector::from_vec(sd);
    let joint = block(&gv.cov, &all, 0.0).component_div(&(&sdv * sdv.transpose()));
    let ka = ia.len();
    let pa: Vec<usize> = (0..ka).collect();
    let pb: Vec<usize> = (ka..all.len()).collect();
    let pall: Vec<usize> = (0..all.len()).collect();
    let exact = match &gv.factor {
        Some(f) => {
            let rows = DMatrix::from_fn(all.len(), f.ncols(), |i, j| f[(all[i], j)] / sdv[i]);
            [&pa, &pb, &pall]
                .iter()
                .map(|p| log2_gram_det_regular(&rows.select_rows(p.iter())))
                .collect::<Option<Vec<f64>>>()
        }
        None => [&pa, &pb, &pall]
            .iter()
            .map(|p| log2_det_regular(&block(&joint, p, 0.0)))
            .collect::<Option<Vec<f64>>>(),
    };
    if let Some(d) = exact {
        return Ok(0.5 * (d[0] + d[1] - d[2]));
    }
    // The same jitter on all three blocks keeps the ratio consistent.
    let lambda = jitter * joint.trace();
    let mi = 0.5
        * (log2_det(&block(&joint, &pa, lambda)) + log2_det(&block(&joint, &pb, lambda))
            - log2_det(&block(&joint, &pall, lambda)));
    Ok(mi)
}

pub fn gaussian_mi(gv: &GaussianVector, a: &[&str], b: &[&str]) -> Result<f64> {
    gaussian_mi_with_jitter(gv, a, b, JITTER_SCALE)
}

fn mi(gv: &GaussianVector, a: &[&str], b: &[&str]) -> f64 {
    gaussian_mi(gv, a, b).expect("fixed labels")
}

/// Which terms enter the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Leakage {
    /// Both eavesdropper and state leakage.
    #[default]
    WithEavesdropper,
    /// State leakage only, as if `Z` were absent.
    NoEavesdropper,
}

pub fn gaussian_rate_bounds_mode(gp: &GaussianParams, ap: &AuxParams, mode: Leakage) -> Result<RateBounds> {
    let gv = build_covariance(gp, ap)?;
    let s = ["S1", "S2"];
    let i1 = mi(&gv, &["U1"], &["Y1", "S1"]);
    let i2 = mi(&gv, &["U2"], &["Y2", "S2"]);
    let l1s = mi(&gv, &["U1"], &s);
    let l2s = mi(&gv, &["U2"], &s);
    let l12s = mi(&gv, &["U1", "U2"], &s);
    let (l1, l2, l12) = match mode {
        Leakage::WithEavesdropper => (
            l1s.max(mi(&gv, &["U1"], &["Z"])),
            l2s.max(mi(&gv, &["U2"], &["Z"])),
            l12s.max(mi(&gv, &["U1", "U2"], &["Z"])),
        ),
        Leakage::NoEavesdropper => (l1s, l2s, l12s),
    };
    let u12 = mi(&gv, &["U1"], &["U2"]);
    Ok(RateBounds::from_raw(i1 - l1, i2 - l2, i1 + i2 - u12 - l12))
}

pub fn gaussian_rate_bounds(gp: &GaussianParams, ap: &AuxParams) -> Result<RateBounds> {
    gaussian_rate_bounds_mode(gp, ap, Leakage::WithEavesdropper)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub alpha1: Vec<f64>,
    pub alpha2: Vec<f64>,
    pub beta: Vec<f64>,
}

impl SweepGrid {
    /// Zero plus 20 log-spaced magnitudes in `[0.01, 10]` of each sign for
    /// both alphas; 21 uniform points in `[0, 1]` for beta.
    pub fn default_grid() -> Self {
        let alphas = default_alpha_grid();
        Self {
            alpha1: alphas.clone(),
            alpha2: alphas,
            beta: (0..=20).map(|i| i as f64 / 20.0).collect(),
        }
    }

    /// [`SweepGrid::default_grid`] plus, for every beta on it, the
    /// dirty-paper coefficients `bP / (P + N1)` for the first user and
    /// `(1 - b)P / ((1 - b)P + N2)` for the second. A log grid alone misses
    /// these optima, and the miss costs more as the state variance grows.
    pub fn default_for(gp: &GaussianParams) -> Self {
        let mut g = Self::default_grid();
        for &b in &g.beta.clone() {
            g.alpha1.push(b * gp.P / (gp.P + gp.N1));
            let p2 = (1.0 - b) * gp.P;
            g.alpha2.push(p2 / (p2 + gp.N2));
        }
        for a in [&mut g.alpha1, &mut g.alpha2] {
            a.sort_by(f64::total_cmp);
            a.dedup();
        }
        g
    }

    pub fn single(ap: AuxParams) -> Self {
        Self {
            alpha1: vec![ap.alpha1],
            alpha2: vec![ap.alpha2],
            beta: vec![ap.beta],
        }
    }

    pub fn len(&self) -> usize {
        self.alpha1.len() * self.alpha2.len() * self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid point `i`, beta varying fastest.
    pub fn point(&self, i: usize) -> AuxParams {
        let nb = self.beta.len();
        let n2 = self.alpha2.len();
        AuxParams {
            alpha1: self.alpha1[i / (n2 * nb)],
            alpha2: self.alpha2[(i / nb) % n2],
            beta: self.beta[i % nb],
        }
    }
}

pub fn default_alpha_grid() -> Vec<f64> {
    let mags: Vec<f64> = (0..20).map(|i| 10f64.powf(-2.0 + 3.0 * i as f64 / 19.0)).collect();
    let mut g: Vec<f64> = mags.iter().rev().map(|m| -m).collect();
    g.push(0.0);
    g.extend(mags);
    g
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepVertex {
    pub rates: Point,
    pub aux: AuxParams,
    pub bounds: RateBounds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub region: RegionPolygon,
    /// Grid point responsible for each non-origin vertex.
    pub vertices: Vec<SweepVertex>,
}

pub fn sweep_region_mode(gp: &GaussianParams, grid: &SweepGrid, mode: Leakage) -> Result<SweepResult> {
    gp.validate()?;
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    let bounds: Vec<RateBounds> = (0..grid.len())
        .into_par_iter()
        .map(|i| gaussian_rate_bounds_mode(gp, &grid.point(i), mode))
        .collect::<Result<_>>()?;
    let pentagons: Vec<RegionPolygon> = bounds.iter().map(region_from_bounds).collect();
    let region = RegionPolygon::union_hull(&pentagons);
    let tol = crate::geometry::HULL_TOL;
    let vertices = region
        .vertices
        .iter()
        .filter(|v| **v != [0.0, 0.0])
        .filter_map(|&v| {
            pentagons
                .iter()
                .position(|p| {
                    p.vertices
                        .iter()
                        .any(|q| (q[0] - v[0]).abs() <= tol && (q[1] - v[1]).abs() <= tol)
                })
                .map(|k| SweepVertex {
                    rates: v,
                    aux: grid.point(k),
                    bounds: bounds[k],
                })
        })
        .collect();
    Ok(SweepResult { region, vertices })
}

pub fn sweep_region(gp: &GaussianParams, grid: &SweepGrid) -> Result<RegionPolygon> {
    Ok(sweep_region_mode(gp, grid, Leakage::WithEavesdropper)?.region)
}

/// Single-user channel `Y1 = X + S1 + W1`, `Z = X + S1 + W3` with `S1`
/// known at the legitimate decoder and `U1 = X + a1 S1`. Uses the
/// two-user covariance with the whole power on the first user, no `S1`
/// term, and the state carried on the `S2` label.
pub fn decoder_side_info_rate(gp: &GaussianParams, alpha1: f64) -> Result<f64> {
    let g = GaussianParams {
        N2: gp.N1,
        Q1: 0.0,
        Q2: gp.Q1,
        rho: 0.0,
        ..*gp
    };
    let ap = AuxParams {
        alpha1,
        alpha2: 0.0,
        beta: 1.0,
    };
    let gv = build_covariance(&g, &ap)?;
    let main = mi(&gv, &["U1"], &["Y1", "S2"]);
    let leak = mi(&gv, &["U1"], &["Z"]).max(mi(&gv, &["U1"], &["S2"]));
    Ok((main - leak).max(0.0))
}

/// `1/2 log2(1 + P / N1)`.
pub fn capacity_limit(gp: &GaussianParams) -> f64 {
    0.5 * (1.0 + gp.P / gp.N1).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn awgn(snr: f64) -> f64 {
        0.5 * (1.0 + snr).log2()
    }

    #[test]
    fn printed_variances() {
        let gp = GaussianParams {
            Q1: 2.0,
            Q2: 3.0,
            rho: 0.4,
            ..Default::default()
        };
        let ap = AuxParams {
            alpha1: 0.7,
            alpha2: -1.3,
            beta: 0.3,
        };
        let gv = build_covariance(&gp, &ap).unwrap();
        let vu1 = 0.3 + 0.49 * 3.0;
        let vu2 = 0.7 + 1.69 * (2.0 + 0.3);
        assert!((gv.variance("U1").unwrap() - vu1).abs() < 1e-12);
        assert!((gv.variance("U2").unwrap() - vu2).abs() < 1e-12);
    }

    #[test]
    fn built_covariance_is_psd() {
        let gp = GaussianParams {
            Q1: 3.0,
            Q2: 0.0,
            rho: 1.0,
            ..Default::default()
        };
        let ap = AuxParams {
            alpha1: 10.0,
            alpha2: -7.0,
            beta: 0.0,
        };
        let gv = build_covariance(&gp, &ap).unwrap();
        assert!(GaussianVector::new(gv.labels.clone(), gv.cov.clone()).is_ok());
    }

    #[test]
    fn trivial_covariance() {
        let gp = GaussianParams::default();
        let ap = AuxParams {
            alpha1: 0.0,
            alpha2: 0.0,
            beta: 1.0,
        };
        let gv = build_covariance(&gp, &ap).unwrap();
        assert!((gv.covariance("U1", "Y1").unwrap() - gp.P).abs() < 1e-12);
        assert!((gv.covariance("U1", "X").unwrap() - gp.P).abs() < 1e-12);
    }

    #[test]
    fn awgn_and_independence() {
        let labels = vec!["X".to_string(), "Y".to_string(), "V".to_string()];
        let (p, n) = (2.0, 0.5);
        let cov = DMatrix::from_row_slice(3, 3, &[p, p, 0.0, p, p + n, 0.0, 0.0, 0.0, 1.0]);
        let gv = GaussianVector::new(labels, cov).unwrap();
        assert!((gaussian_mi(&gv, &["X"], &["Y"]).unwrap() - awgn(p / n)).abs() < 1e-9);
        assert!(gaussian_mi(&gv, &["X", "Y"], &["V"]).unwrap().abs() < 1e-9);
        assert!(matches!(gaussian_mi(&gv, &[], &["V"]), Err(Error::EmptyGroup)));
        assert!(gaussian_mi(&gv, &["X"], &["X"]).is_err());
    }

    #[test]
    fn no_state_wiretap_closed_form() {
        let gp = GaussianParams {
            Q1: 0.0,
            Q2: 0.0,
            ..Default::default()
        };
        for beta in [0.0, 0.25, 0.6, 1.0] {
            let ap = AuxParams {
                alpha1: 0.0,
                alpha2: 0.0,
                beta,
            };
            let b = gaussian_rate_bounds(&gp, &ap).unwrap();
            let bp = beta * gp.P;
            let rest = (1.0 - beta) * gp.P;
            let oracle = (awgn(bp / (rest + gp.N1)) - awgn(bp / (rest + gp.N3))).max(0.0);
            assert!((b.b1 - oracle).abs() < 1e-9, "beta {beta}: {} vs {oracle}", b.b1);
        }
    }

    #[test]
    fn full_power_to_first_user_silences_second() {
        let gp = GaussianParams::default();
        let ap = AuxParams {
            alpha1: 0.5,
            alpha2: 0.0,
            beta: 1.0,
        };
        let b = gaussian_rate_bounds(&gp, &ap).unwrap();
        assert!(b.b2.abs() < 1e-9);
    }

    #[test]
    fn jitter_insensitivity() {
        let gp = GaussianParams {
            Q2: 0.0,
            ..Default::default()
        };
        let ap = AuxParams {
            alpha1: 0.0,
            alpha2: 0.8,
            beta: 0.5,
        };
        let gv = build_covariance(&gp, &ap).unwrap();
        let groups: [(&[&str], &[&str]); 3] = [
            (&["U1"], &["Y1", "S1"]),
            (&["U1", "U2"], &["S1", "S2"]),
            (&["U2"], &["Z"]),
        ];
        for (a, b) in groups {
            let r = gaussian_mi_with_jitter(&gv, a, b, 1e-13).unwrap();
            for l in [1e-12, 1e-11, 1e-10] {
                let v = gaussian_mi_with_jitter(&gv, a, b, l).unwrap();
                assert!(v.is_finite() && (v - r).abs() < 1e-8, "{a:?};{b:?} at {l}: {v} vs {r}");
            }
        }
    }

    #[test]
    fn grid_shapes() {
        let g = SweepGrid::default_grid();
        assert_eq!(g.alpha1.len(), 41);
        assert_eq!(g.beta.len(), 21);
        assert!((g.alpha1[0] + 10.0).abs() < 1e-12 && (g.alpha1[40] - 10.0).abs() < 1e-12);
        assert_eq!(g.alpha1[20], 0.0);
        let ap = AuxParams {
            alpha1: 0.3,
            alpha2: 0.2,
            beta: 0.5,
        };
        let single = sweep_region(&GaussianParams::default(), &SweepGrid::single(ap)).unwrap();
        let b = gaussian_rate_bounds(&GaussianParams::default(), &ap).unwrap();
        assert_eq!(single, region_from_bounds(&b));
    }

    #[test]
    fn default_grid_contains_dirty_paper_coefficients() {
        let gp = GaussianParams::default();
        let g = SweepGrid::default_for(&gp);
        assert!(g.alpha2.contains(&0.5));
        assert!(g.alpha1.contains(&0.4));
        assert!(g.alpha1.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn refining_grid_never_shrinks() {
        let gp = GaussianParams {
            Q1: 1.0,
            Q2: 1.0,
            ..Default::default()
        };
        let coarse = SweepGrid {
            alpha1: vec![-1.0, 0.0, 1.0],
            alpha2: vec![-1.0, 0.0, 1.0],
            beta: vec![0.0, 0.5, 1.0],
        };
        let fine = SweepGrid {
            alpha1: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            alpha2: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            beta: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        };
        let rc = sweep_region(&gp, &coarse).unwrap();
        let rf = sweep_region(&gp, &fine).unwrap();
        assert!(rf.contains_region(&rc, 1e-12));
    }

    #[test]
    fn side_info_capacity() {
        let gp = GaussianParams {
            P: 1.0,
            N1: 1.0,
            N2: 1.0,
            N3: 2.0,
            Q1: 5.0,
            Q2: 0.0,
            rho: 0.0,
        };
        assert!((capacity_limit(&gp) - 0.5).abs() < 1e-15);
        let r: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
            .iter()
            .map(|&a| decoder_side_info_rate(&gp, a).unwrap())
            .collect();
        for w in r.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{r:?}");
        }
        assert!(r.iter().all(|&v| v <= 0.5 + 1e-9), "{r:?}");
        assert!(0.5 - r[3] < 0.01, "{r:?}");
    }

    #[test]
    fn side_info_rate_without_scaling() {
        // U1 = X: the decoder strips S1 exactly; the eavesdropper sees X + S1 + W3.
        let gp = GaussianParams {
            P: 1.0,
            N1: 1.0,
            N2: 1.0,
            N3: 2.0,
            Q1: 5.0,
            Q2: 0.0,
            rho: 0.0,
        };
        let r = decoder_side_info_rate(&gp, 0.0).unwrap();
        let oracle = awgn(1.0) - awgn(1.0 / 7.0);
        assert!((r - oracle).abs() < 1e-9, "{r} vs {oracle}");
    }

    #[test]
    fn parameter_errors() {
        let bad = GaussianParams {
            N1: 0.5,
            N2: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let ap = AuxParams {
            alpha1: 0.0,
            alpha2: 0.0,
            beta: 1.5,
        };
        assert!(build_covariance(&GaussianParams::default(), &ap).is_err());
    }

    proptest! {
        #[test]
        fn variances_match_printed(
            p in 0.1f64..10.0, q1 in 0.0f64..10.0, q2 in 0.0f64..10.0, rho in -1.0f64..1.0,
            a1 in -10.0f64..10.0, a2 in -10.0f64..10.0, beta in 0.0f64..1.0,
        ) {
            let gp = GaussianParams { P: p, N1: 2.0, N2: 1.0, N3: 3.0, Q1: q1, Q2: q2, rho };
            let gv = build_covariance(&gp, &AuxParams { alpha1: a1, alpha2: a2, beta }).unwrap();
            let vu1 = beta * p + a1 * a1 * q2;
            let vu2 = (1.0 - beta) * p + a2 * a2 * (q1 + beta * p);
            prop_assert!((gv.variance("U1").unwrap() - vu1).abs() <= 1e-12 * vu1.max(1.0));
            prop_assert!((gv.variance("U2").unwrap() - vu2).abs() <= 1e-12 * vu2.max(1.0));
        }

        #[test]
        fn scaling_a_group_keeps_mi(
            q in 0.1f64..5.0, a1 in -3.0f64..3.0, a2 in -3.0f64..3.0, beta in 0.05f64..0.95,
            k in prop_oneof![-4.0f64..-0.25, 0.25f64..4.0],
        ) {
            let gp = GaussianParams { Q1: q, Q2: q, ..Default::default() };
            let ap = AuxParams { alpha1: a1, alpha2: a2, beta };
            let gv = build_covariance(&gp, &ap).unwrap();
            let mut scaled = gv.clone();
            scaled.scale_variable("U1", k).unwrap();
            for b in [&["Y1", "S1"][..], &["Z"][..], &["U2"][..]] {
                let x = gaussian_mi(&gv, &["U1"], b).unwrap();
                let y = gaussian_mi(&scaled, &["U1"], b).unwrap();
                prop_assert!((x - y).abs() < 1e-9);
                prop_assert!(x >= -1e-9 && x.is_finite());
            }
        }
    }
}
