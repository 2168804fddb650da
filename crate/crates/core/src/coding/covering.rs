//! Mutual covering experiment: do two independent i.i.d. families of sizes
//! `2^(n R_I)` and `2^(n R_J)` contain a jointly typical pair?
//!
//! Small families are enumerated pair by pair. When one family has a
//! single member `v` and the other is too large to enumerate, each trial
//! draws `v` and then decides success with its exact conditional
//! probability `1 - (1 - g(v))^K`, where `g(v)` is the probability that one
//! fresh sequence is typical with `v`; this has the same law as the
//! enumeration.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coding::typical::{TypicalSet, TypicalityParams};
use crate::error::{Error, Result};
use crate::pmf::Pmf;
use crate::random::{derive_seed, rng_for, sample_index};

/// Default cap on enumerated pairs.
pub const DEFAULT_PAIR_BUDGET: f64 = (1u64 << 24) as f64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringConfig {
    pub rate_i: f64,
    pub rate_j: f64,
    pub n: usize,
    pub trials: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub pair_budget: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveringMethod {
    Enumerated,
    ConditionalExact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub successes: usize,
    pub trials: usize,
    pub frequency: f64,
    /// `log2` of the two family sizes after rounding.
    pub log2_family_sizes: [f64; 2],
    pub method: CoveringMethod,
    /// Exact `I(U; V)` of the source, bits.
    pub mutual_information: f64,
}

fn family_size(rate: f64, n: usize) -> f64 {
    (n as f64 * rate).exp2().round().max(1.0)
}

/// `ln k!` for `k <= n`.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; n + 1];
    for k in 1..=n {
        t[k] = t[k - 1] + (k as f64).ln();
    }
    t
}

/// Probability that `N` i.i.d. draws from `q` have counts `c` inside the
/// per-cell windows `(lo, hi)` (strict) with zero counts where `q` is zero.
fn box_probability(q: &[f64], total: usize, windows: &[(f64, f64)], lnf: &[f64]) -> f64 {
    fn rec(k: usize, left: usize, acc_ln: f64, q: &[f64], windows: &[(f64, f64)], lnf: &[f64], total: usize) -> f64 {
        let last = k + 1 == q.len();
        let range: Vec<usize> = if last { vec![left] } else { (0..=left).collect() };
        let mut sum = 0.0;
        for c in range {
            let (lo, hi) = windows[k];
            let cf = c as f64;
            if !(cf > lo && cf < hi) {
                continue;
            }
            let term = if c == 0 {
                0.0
            } else if q[k] == 0.0 {
                continue;
            } else {
                cf * q[k].ln() - lnf[c]
            };
            if last {
                sum += (lnf[total] + acc_ln + term).exp();
            } else {
                sum += rec(k + 1, left - c, acc_ln + term, q, windows, lnf, total);
            }
        }
        sum
    }
    rec(0, total, 0.0, q, windows, lnf, total)
}

/// `P(fresh sequence ~ q_free^n is typical with fixed)`. The typical set is
/// over `(free, fixed)` cells, `free` fastest.
fn conditional_typical_probability(joint_free_fixed: &Pmf, fixed: &[u8], tp: TypicalityParams, lnf: &[f64]) -> f64 {
    let sizes = joint_free_fixed.sizes();
    let (nf, nx) = (sizes[0], sizes[1]);
    let cells = (nf * nx) as f64;
    let p = joint_free_fixed.table();
    let q_free: Vec<f64> = (0..nf).map(|a| (0..nx).map(|b| p[a * nx + b]).sum()).collect();
    let n = tp.n as f64;
    let mut counts = vec![0usize; nx];
    for &b in fixed {
        counts[b as usize] += 1;
    }
    let mut prob = 1.0;
    for b in 0..nx {
        let windows: Vec<(f64, f64)> = (0..nf)
            .map(|a| {
                let pc = p[a * nx + b];
                if pc == 0.0 {
                    return (-1.0, 0.5);
                }
                let slack = (tp.epsilon * pc + tp.epsilon / cells) * n;
                (pc * n - slack, pc * n + slack)
            })
            .collect();
        prob *= box_probability(&q_free, counts[b], &windows, lnf);
        if prob == 0.0 {
            break;
        }
    }
    prob
}

fn draw(rng: &mut impl Rng, probs: &[f64], n: usize) -> Vec<u8> {
    (0..n).map(|_| sample_index(rng, probs) as u8).collect()
}

/// Success frequency of the covering event for the two-axis `joint`
/// (first axis `U`, family `I`; second axis `V`, family `J`).
pub fn covering_experiment(joint: &Pmf, cfg: &CoveringConfig) -> Result<CoveringReport> {
    if joint.axes().len() != 2 {
        return Err(Error::InvalidParameter(
            "covering source must have exactly two axes".into(),
        ));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    if !(cfg.rate_i >= 0.0 && cfg.rate_j >= 0.0) {
        return Err(Error::InvalidParameter("rates must be nonnegative".into()));
    }
    let tp = TypicalityParams::new(cfg.epsilon, cfg.n)?;
    let names: Vec<&str> = joint.axes().iter().map(|a| a.name.as_str()).collect();
    let mi = joint.mutual_information(&[names[0]], &[names[1]])?;
    let qu = joint.marginalize(&[names[0]])?.table().to_vec();
    let qv = joint.marginalize(&[names[1]])?.table().to_vec();
    let ki = family_size(cfg.rate_i, cfg.n);
    let kj = family_size(cfg.rate_j, cfg.n);
    let base = derive_seed(cfg.seed, 0xC07E);

    let (method, successes) = if ki * kj <= cfg.pair_budget {
        let set = TypicalSet::new(joint, tp)?;
        let pu = set.project(&[0]);
        let pv = set.project(&[1]);
        let hits: Vec<bool> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_for(base, t);
                let us: Vec<Vec<u8>> = (0..ki as usize).map(|_| draw(&mut rng, &qu, cfg.n)).collect();
                let vs: Vec<Vec<u8>> = (0..kj as usize).map(|_| draw(&mut rng, &qv, cfg.n)).collect();
                let mut buf = Vec::new();
                let us: Vec<&[u8]> = us
                    .iter()
                    .map(|u| u.as_slice())
                    .filter(|u| pu.is_typical_unchecked(&[u], &mut buf))
                    .collect();
                let vs: Vec<&[u8]> = vs
                    .iter()
                    .map(|v| v.as_slice())
                    .filter(|v| pv.is_typical_unchecked(&[v], &mut buf))
                    .collect();
                us.iter()
                    .any(|u| vs.iter().any(|v| set.is_typical_unchecked(&[u, v], &mut buf)))
            })
            .collect();
        (CoveringMethod::Enumerated, hits.iter().filter(|h| **h).count())
    } else if ki == 1.0 || kj == 1.0 {
        // Free family of size `k`, fixed single sequence on the other axis.
        let (free_fixed, qfixed, k) = if kj == 1.0 {
            (joint.clone(), qv, ki)
        } else {
            (joint.reorder(&[names[1], names[0]])?, qu, kj)
        };
        let lnf = ln_factorials(cfg.n);
        let hits: Vec<bool> = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_for(base, t);
                let v = draw(&mut rng, &qfixed, cfg.n);
                let g = conditional_typical_probability(&free_fixed, &v, tp, &lnf);
                let p_hit = -(k * (-g).ln_1p()).exp_m1();
                rng.random::<f64>() < p_hit
            })
            .collect();
        (CoveringMethod::ConditionalExact, hits.iter().filter(|h| **h).count())
    } else {
        return Err(Error::BudgetExceeded {
            required: ki * kj,
            budget: cfg.pair_budget,
        });
    };
    Ok(CoveringReport {
        successes,
        trials: cfg.trials,
        frequency: successes as f64 / cfg.trials.max(1) as f64,
        log2_family_sizes: [ki.log2(), kj.log2()],
        method,
        mutual_information: mi,
    })
}

/// Doubly symmetric binary source: uniform `U`, `V = U xor Bern(p)`.
pub fn dsbs(p: f64) -> Result<Pmf> {
    Pmf::new(
        crate::pmf::axes(&[("u", 2), ("v", 2)]),
        vec![(1.0 - p) / 2.0, p / 2.0, p / 2.0, (1.0 - p) / 2.0],
    )
}
