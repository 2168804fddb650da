//! Gaussian mutual information against sample covariances of the model
//! simulated directly.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use wiretap_core::gaussian::{build_covariance, gaussian_mi, AuxParams, GaussianParams};
use wiretap_core::random::rng_for;

const SAMPLES: usize = 1_000_000;
const LABELS: [&str; 7] = ["U1", "U2", "S1", "S2", "Y1", "Y2", "Z"];

fn sample_covariance(gp: &GaussianParams, ap: &AuxParams) -> DMatrix<f64> {
    let mut rng = rng_for(99, 0);
    let mut acc = DMatrix::<f64>::zeros(7, 7);
    let mut g = [0.0f64; 7];
    for _ in 0..SAMPLES {
        for v in g.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let x1 = (ap.beta * gp.P).sqrt() * g[0];
        let x2 = ((1.0 - ap.beta) * gp.P).sqrt() * g[1];
        let s1 = gp.Q1.sqrt() * g[2];
        let s2 = gp.Q2.sqrt() * (gp.rho * g[2] + (1.0 - gp.rho * gp.rho).sqrt() * g[3]);
        let x = x1 + x2;
        let row = DVector::from_column_slice(&[
            x1 + ap.alpha1 * s2,
            x2 + ap.alpha2 * (x1 + s1),
            s1,
            s2,
            x + s2 + gp.N1.sqrt() * g[4],
            x + s1 + gp.N2.sqrt() * g[5],
            x + s1 + s2 + gp.N3.sqrt() * g[6],
        ]);
        acc.ger(1.0, &row, &row, 1.0);
    }
    acc / SAMPLES as f64
}

fn sub(c: &DMatrix<f64>, idx: &[usize], jdx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), jdx.len(), |r, k| c[(idx[r], jdx[k])])
}

/// `I(A; B)` from the residual covariance of the least-squares regression of `A` on `B`.
fn ols_mi(c: &DMatrix<f64>, a: &[&str], b: &[&str]) -> f64 {
    let pos = |names: &[&str]| -> Vec<usize> {
        names
            .iter()
            .map(|n| LABELS.iter().position(|l| l == n).unwrap())
            .collect()
    };
    let (ia, ib) = (pos(a), pos(b));
    let caa = sub(c, &ia, &ia);
    let cab = sub(c, &ia, &ib);
    let cbb = sub(c, &ib, &ib);
    let coef = cab.clone() * cbb.try_inverse().unwrap();
    let resid = &caa - coef * cab.transpose();
    0.5 * (caa.determinant() / resid.determinant()).log2()
}

#[test]
fn mutual_information_matches_monte_carlo() {
    let gp = GaussianParams {
        P: 2.0,
        N1: 1.5,
        N2: 1.0,
        N3: 2.5,
        Q1: 1.2,
        Q2: 0.8,
        rho: 0.4,
    };
    let ap = AuxParams {
        alpha1: 0.6,
        alpha2: -0.3,
        beta: 0.35,
    };
    let gv = build_covariance(&gp, &ap).unwrap();
    let c = sample_covariance(&gp, &ap);
    let pairs: [(&[&str], &[&str]); 8] = [
        (&["U1"], &["Y1", "S1"]),
        (&["U2"], &["Y2", "S2"]),
        (&["U1"], &["Z"]),
        (&["U2"], &["Z"]),
        (&["U1"], &["S1", "S2"]),
        (&["U1"], &["U2"]),
        (&["U1", "U2"], &["Z"]),
        (&["U1", "U2"], &["S1", "S2"]),
    ];
    for (a, b) in pairs {
        let exact = gaussian_mi(&gv, a, b).unwrap();
        let mc = ols_mi(&c, a, b);
        assert!((exact - mc).abs() < 0.02, "{a:?};{b:?}: {exact} vs {mc}");
    }
}
