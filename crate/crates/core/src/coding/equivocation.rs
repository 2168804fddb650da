//! Exact `H(M1, M2 | Z^n) / n` of a given code by full enumeration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{build_full_joint, AuxPolicy, ChannelSpec};
use crate::coding::codebook::Codebook;
use crate::coding::sim::CodingContext;
use crate::coding::typical::TypicalityParams;
use crate::error::{Error, Result};
use crate::pmf::entropy_bits;

/// Default cap on enumerated terms.
pub const DEFAULT_TERM_BUDGET: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivocationReport {
    pub n: usize,
    pub messages: [usize; 2],
    /// `H(M1, M2 | Z^n) / n`.
    pub equivocation_bits_per_symbol: f64,
    /// `(log2 M1 + log2 M2) / n`.
    pub message_bits_per_symbol: f64,
    pub terms: f64,
}

/// Number of terms the enumeration visits:
/// messages x state sequences x eavesdropper sequences x n.
pub fn enumeration_terms(cb: &Codebook, spec: &ChannelSpec) -> f64 {
    let [s1, s2] = spec.state_sizes();
    let [_, _, z] = spec.output_sizes();
    let n = cb.n as i32;
    let m = (cb.users[0].shape.bins * cb.users[1].shape.bins) as f64;
    m * ((s1 * s2) as f64).powi(n) * (z as f64).powi(n) * cb.n as f64
}

/// Messages are uniform, states i.i.d., the encoder is the deterministic
/// first-typical-pair rule falling back to the first codeword of each bin,
/// and the input symbol is averaged over `Q(x | u1, u2, s1, s2)`.
pub fn exact_equivocation(
    cb: &Codebook,
    spec: &ChannelSpec,
    pol: &AuxPolicy,
    tp: TypicalityParams,
    budget: f64,
) -> Result<EquivocationReport> {
    let required = enumeration_terms(cb, spec);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    if cb.n != tp.n {
        return Err(Error::LengthMismatch {
            expected: tp.n,
            found: cb.n,
        });
    }
    let j = build_full_joint(spec, pol)?;
    let ctx = CodingContext::new(&j, tp)?;
    let n = cb.n;
    let [ns1, ns2] = spec.state_sizes();
    let ns = ns1 * ns2;
    let [y1n, y2n, zn] = spec.output_sizes();
    let ps = spec.state_dist().table();
    let t = spec.transition();

    // T_z(z | x, s), indexed [x * ns + s][z].
    let tz: Vec<Vec<f64>> = (0..spec.x_size() * ns)
        .map(|g| {
            let row = t.slice(g);
            (0..zn).map(|z| (0..y1n * y2n).map(|y| row[y * zn + z]).sum()).collect()
        })
        .collect();

    let m1n = cb.users[0].shape.bins;
    let m2n = cb.users[1].shape.bins;
    let z_len = zn.pow(n as u32);
    let state_seqs = ns.pow(n as u32);

    let rows: Vec<Vec<f64>> = (0..m1n * m2n)
        .into_par_iter()
        .map(|m| {
            let (m1, m2) = (m / m2n, m % m2n);
            let mut row = vec![0.0; z_len];
            let mut s1 = vec![0u8; n];
            let mut s2 = vec![0u8; n];
            for sidx in 0..state_seqs {
                let mut p_s = 1.0;
                let mut rest = sidx;
                for i in (0..n).rev() {
                    let s = rest % ns;
                    rest /= ns;
                    s1[i] = (s / ns2) as u8;
                    s2[i] = (s % ns2) as u8;
                    p_s *= ps[s];
                }
                if p_s == 0.0 {
                    continue;
                }
                let [c1, c2] = ctx
                    .find_pair(cb, m1, m2, &s1, &s2)
                    .unwrap_or_else(|| CodingContext::fallback_pair(cb, m1, m2));
                let w: Vec<Vec<f64>> = (0..n)
                    .map(|i| {
                        let s = s1[i] as usize * ns2 + s2[i] as usize;
                        let u1 = cb.users[0].codeword(c1)[i] as usize;
                        let u2 = cb.users[1].codeword(c2)[i] as usize;
                        let qx = ctx.input_row(u1, u2, s1[i] as usize, s2[i] as usize);
                        (0..zn)
                            .map(|z| qx.iter().enumerate().map(|(x, q)| q * tz[x * ns + s][z]).sum())
                            .collect()
                    })
                    .collect();
                let mut prod = vec![p_s];
                for wi in &w {
                    prod = prod.iter().flat_map(|a| wi.iter().map(move |b| a * b)).collect();
                }
                row.iter_mut().zip(&prod).for_each(|(r, p)| *r += p);
            }
            row
        })
        .collect();

    let m_total = (m1n * m2n) as f64;
    let joint: Vec<f64> = rows.iter().flatten().map(|p| p / m_total).collect();
    let mut pz = vec![0.0; z_len];
    for row in &rows {
        pz.iter_mut().zip(row).for_each(|(a, p)| *a += p / m_total);
    }
    let h_mz = entropy_bits(&joint);
    let h_z = entropy_bits(&pz);
    Ok(EquivocationReport {
        n,
        messages: [m1n, m2n],
        equivocation_bits_per_symbol: (h_mz - h_z) / n as f64,
        message_bits_per_symbol: m_total.log2() / n as f64,
        terms: required,
    })
}
