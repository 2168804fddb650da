//! Robust joint typicality.
//!
//! A tuple of length-`n` sequences is typical for a distribution `p` on
//! `C` cells when every cell of its joint type obeys
//! `|count / n - p| < eps p + eps / C`, and no cell of zero probability
//! is visited.

use serde::{Deserialize, Serialize};

use crate::channel::FullJoint;
use crate::error::{Error, Result};
use crate::pmf::Pmf;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypicalityParams {
    pub epsilon: f64,
    pub n: usize,
}

impl TypicalityParams {
    pub fn new(epsilon: f64, n: usize) -> Result<Self> {
        let tp = Self { epsilon, n };
        tp.validate()?;
        Ok(tp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("blocklength must be at least 1".into()));
        }
        Ok(())
    }
}

/// Smallest count that breaks `count - p n < slack`; 0 where `p = 0`, so
/// any visit fails.
fn ceilings(probs: &[f64], slack: &[f64], n: usize) -> Vec<u32> {
    probs
        .iter()
        .zip(slack)
        .map(|(&p, &sl)| {
            if p == 0.0 {
                return 0;
            }
            let limit = p * n as f64 + sl;
            let mut k = limit.floor().max(0.0) as u32;
            while (k as f64 - p * n as f64) < sl {
                k += 1;
            }
            k
        })
        .collect()
}

/// Typicality test for one ordered list of axes at a fixed blocklength.
#[derive(Clone, Debug)]
pub struct TypicalSet {
    n: usize,
    sizes: Vec<usize>,
    strides: Vec<usize>,
    probs: Vec<f64>,
    /// Allowed absolute deviation of each cell count.
    slack: Vec<f64>,
    /// Counts at or above this fail the cell.
    ceiling: Vec<u32>,
}

impl TypicalSet {
    /// `marginal` must list its axes in the order the sequences will be given.
    pub fn new(marginal: &Pmf, tp: TypicalityParams) -> Result<Self> {
        tp.validate()?;
        let sizes = marginal.sizes();
        let cells = marginal.table().len() as f64;
        let n = tp.n as f64;
        let slack: Vec<f64> = marginal
            .table()
            .iter()
            .map(|&p| (tp.epsilon * p + tp.epsilon / cells) * n)
            .collect();
        let mut strides = vec![1; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        let probs = marginal.table().to_vec();
        let ceiling = ceilings(&probs, &slack, tp.n);
        Ok(Self {
            n: tp.n,
            sizes,
            strides,
            probs,
            slack,
            ceiling,
        })
    }

    /// The set for `axes` of `j`, in that order.
    pub fn for_axes(j: &FullJoint, axes: &[&str], tp: TypicalityParams) -> Result<Self> {
        let m = j.pmf().marginalize(axes)?.reorder(axes)?;
        Self::new(&m, tp)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> usize {
        self.probs.len()
    }

    /// A necessary condition on the sub-tuple `keep`: its cells inherit the
    /// summed probabilities and summed slacks of the cells they merge.
    pub fn project(&self, keep: &[usize]) -> TypicalSet {
        let sizes: Vec<usize> = keep.iter().map(|&a| self.sizes[a]).collect();
        let mut strides = vec![1; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        let len: usize = sizes.iter().product();
        let mut probs = vec![0.0; len];
        let mut slack = vec![0.0; len];
        for c in 0..self.probs.len() {
            let mut t = 0;
            for (k, &a) in keep.iter().enumerate() {
                t += (c / self.strides[a] % self.sizes[a]) * strides[k];
            }
            probs[t] += self.probs[c];
            slack[t] += self.slack[c];
        }
        let ceiling = ceilings(&probs, &slack, self.n);
        TypicalSet {
            n: self.n,
            sizes,
            strides,
            probs,
            slack,
            ceiling,
        }
    }

    fn check_lengths(&self, seqs: &[&[u8]]) -> Result<()> {
        if seqs.len() != self.sizes.len() {
            return Err(Error::LengthMismatch {
                expected: self.sizes.len(),
                found: seqs.len(),
            });
        }
        for s in seqs {
            if s.len() != self.n {
                return Err(Error::LengthMismatch {
                    expected: self.n,
                    found: s.len(),
                });
            }
        }
        for (s, &size) in seqs.iter().zip(&self.sizes) {
            if let Some(&v) = s.iter().find(|&&v| v as usize >= size) {
                return Err(Error::InvalidParameter(format!(
                    "symbol {v} outside alphabet of size {size}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_typical(&self, seqs: &[&[u8]]) -> Result<bool> {
        self.check_lengths(seqs)?;
        let mut buf = Vec::new();
        Ok(self.is_typical_unchecked(seqs, &mut buf))
    }

    /// Same as [`TypicalSet::is_typical`] without validation, reusing `buf`.
    pub fn is_typical_unchecked(&self, seqs: &[&[u8]], buf: &mut Vec<u32>) -> bool {
        buf.clear();
        buf.resize(self.probs.len(), 0);
        for i in 0..self.n {
            let mut c = 0;
            for (s, &st) in seqs.iter().zip(&self.strides) {
                c += s[i] as usize * st;
            }
            buf[c] += 1;
            if buf[c] >= self.ceiling[c] {
                return false;
            }
        }
        buf.iter()
            .zip(self.probs.iter().zip(&self.slack))
            .all(|(&k, (&p, &sl))| (k as f64 - p * self.n as f64).abs() < sl)
    }
}

/// Whether `seqs`, one per entry of `axes`, are jointly typical for the
/// marginal of `j` on `axes`.
pub fn is_jointly_typical(seqs: &[&[u8]], j: &FullJoint, axes: &[&str], eps: f64) -> Result<bool> {
    let n = seqs.first().map_or(0, |s| s.len());
    let set = TypicalSet::for_axes(j, axes, TypicalityParams::new(eps, n)?)?;
    set.is_typical(seqs)
}
