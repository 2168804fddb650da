//! Encoder, decoders and the Monte Carlo pipeline of the binning scheme.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    build_full_joint, AuxPolicy, ChannelSpec, FullJoint, MemorylessSampler, S1, S2, SCHEMA_VERSION, U1, U2, X, Y1, Y2,
};
use crate::coding::codebook::{Codebook, RateBookkeeping};
use crate::coding::equivocation::exact_equivocation;
use crate::coding::rates::{derive_rates, BinningRates};
use crate::coding::typical::{TypicalSet, TypicalityParams};
use crate::error::{Error, Result};
use crate::random::{derive_seed, rng_for};

/// Enumeration budget below which [`simulate`] also reports exact leakage.
pub const LEAKAGE_BUDGET: f64 = 1e6;

const TRIAL_STREAM: u64 = 0x7121A1;

/// Typicality tests and the input law shared by encoder and decoders.
#[derive(Clone, Debug)]
pub struct CodingContext {
    tp: TypicalityParams,
    sizes: [usize; 5],
    /// `Q(u1, u2, x, s1, s2)` in that axis order.
    input_law: Vec<f64>,
    enc: TypicalSet,
    enc_u1: TypicalSet,
    enc_u2: TypicalSet,
    dec: [TypicalSet; 2],
}

impl CodingContext {
    pub fn new(j: &FullJoint, tp: TypicalityParams) -> Result<Self> {
        tp.validate()?;
        let enc = TypicalSet::for_axes(j, &[U1, U2, S1, S2], tp)?;
        let input = j.pmf().marginalize(&[U1, U2, X, S1, S2])?;
        let s = input.sizes();
        Ok(Self {
            tp,
            sizes: [s[0], s[1], s[2], s[3], s[4]],
            input_law: input.table().to_vec(),
            enc_u1: enc.project(&[0, 2, 3]),
            enc_u2: enc.project(&[1, 2, 3]),
            enc,
            dec: [
                TypicalSet::for_axes(j, &[U1, Y1, S1], tp)?,
                TypicalSet::for_axes(j, &[U2, Y2, S2], tp)?,
            ],
        })
    }

    pub fn params(&self) -> TypicalityParams {
        self.tp
    }

    /// `Q(x | u1, u2, s1, s2)` as a row over `x`; zero when the conditioning
    /// cell has no mass.
    pub fn input_row(&self, u1: usize, u2: usize, s1: usize, s2: usize) -> Vec<f64> {
        let [_, n2, nx, ns1, ns2] = self.sizes;
        let mut row: Vec<f64> = (0..nx)
            .map(|x| self.input_law[(((u1 * n2 + u2) * nx + x) * ns1 + s1) * ns2 + s2])
            .collect();
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|v| *v /= sum);
        }
        row
    }

    fn draw_input<R: Rng + ?Sized>(&self, rng: &mut R, u1: &[u8], u2: &[u8], s1: &[u8], s2: &[u8]) -> Vec<u8> {
        (0..u1.len())
            .map(|i| {
                let row = self.input_row(u1[i] as usize, u2[i] as usize, s1[i] as usize, s2[i] as usize);
                let r: f64 = rng.random();
                let mut acc = 0.0;
                for (x, p) in row.iter().enumerate() {
                    acc += p;
                    if r < acc {
                        return x as u8;
                    }
                }
                row.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u8
            })
            .collect()
    }

    /// First pair, in scan order, of bins `(m1, m2)` jointly typical with the states.
    pub fn find_pair(&self, cb: &Codebook, m1: usize, m2: usize, s1: &[u8], s2: &[u8]) -> Option<[usize; 2]> {
        let mut buf = Vec::new();
        let [c1s, c2s] = &cb.users;
        let second: Vec<usize> = c2s
            .bin(m2)
            .filter(|&c| self.enc_u2.is_typical_unchecked(&[c2s.codeword(c), s1, s2], &mut buf))
            .collect();
        if second.is_empty() {
            return None;
        }
        for c1 in c1s.bin(m1) {
            let u1 = c1s.codeword(c1);
            if !self.enc_u1.is_typical_unchecked(&[u1, s1, s2], &mut buf) {
                continue;
            }
            for &c2 in &second {
                if self.enc.is_typical_unchecked(&[u1, c2s.codeword(c2), s1, s2], &mut buf) {
                    return Some([c1, c2]);
                }
            }
        }
        None
    }

    /// Codewords sent when no typical pair exists: the first of each bin.
    pub fn fallback_pair(cb: &Codebook, m1: usize, m2: usize) -> [usize; 2] {
        [cb.users[0].bin(m1).start, cb.users[1].bin(m2).start]
    }

    /// Indices of all codewords of user `k` (0 or 1) typical with `(y, s)`,
    /// stopping after the second.
    fn decode_candidates(&self, cb: &Codebook, k: usize, y: &[u8], s: &[u8]) -> Vec<usize> {
        let mut buf = Vec::new();
        let book = &cb.users[k];
        let mut found = Vec::with_capacity(2);
        for c in 0..book.len() {
            if self.dec[k].is_typical_unchecked(&[book.codeword(c), y, s], &mut buf) {
                found.push(c);
                if found.len() == 2 {
                    break;
                }
            }
        }
        found
    }

    /// Bin of the unique codeword of user `k` typical with `(y, s)`.
    pub fn decode(&self, cb: &Codebook, k: usize, y: &[u8], s: &[u8]) -> Option<usize> {
        match self.decode_candidates(cb, k, y, s)[..] {
            [c] => Some(cb.users[k].bin_of(c)),
            _ => None,
        }
    }

    fn check_inputs(&self, cb: &Codebook, seqs: &[&[u8]]) -> Result<()> {
        if cb.n != self.tp.n {
            return Err(Error::LengthMismatch {
                expected: self.tp.n,
                found: cb.n,
            });
        }
        for s in seqs {
            if s.len() != cb.n {
                return Err(Error::LengthMismatch {
                    expected: cb.n,
                    found: s.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EncodeOutcome {
    Success {
        codewords: [usize; 2],
        u1: Vec<u8>,
        u2: Vec<u8>,
        x: Vec<u8>,
    },
    Failure,
}

/// Finds the first typical pair in bins `(m1, m2)` and draws `x^n`
/// coordinate-wise from `Q(x | u1, u2, s1, s2)` using `rng`.
#[allow(clippy::too_many_arguments)]
pub fn encode<R: Rng + ?Sized>(
    cb: &Codebook,
    m1: usize,
    m2: usize,
    s1: &[u8],
    s2: &[u8],
    j: &FullJoint,
    tp: TypicalityParams,
    rng: &mut R,
) -> Result<EncodeOutcome> {
    let ctx = CodingContext::new(j, tp)?;
    encode_with(&ctx, cb, m1, m2, s1, s2, rng)
}

pub fn encode_with<R: Rng + ?Sized>(
    ctx: &CodingContext,
    cb: &Codebook,
    m1: usize,
    m2: usize,
    s1: &[u8],
    s2: &[u8],
    rng: &mut R,
) -> Result<EncodeOutcome> {
    ctx.check_inputs(cb, &[s1, s2])?;
    for (k, m) in [m1, m2].into_iter().enumerate() {
        if m >= cb.users[k].shape.bins {
            return Err(Error::InvalidParameter(format!(
                "message {m} of user {} out of range {}",
                k + 1,
                cb.users[k].shape.bins
            )));
        }
    }
    Ok(match ctx.find_pair(cb, m1, m2, s1, s2) {
        Some([c1, c2]) => {
            let u1 = cb.users[0].codeword(c1).to_vec();
            let u2 = cb.users[1].codeword(c2).to_vec();
            let x = ctx.draw_input(rng, &u1, &u2, s1, s2);
            EncodeOutcome::Success {
                codewords: [c1, c2],
                u1,
                u2,
                x,
            }
        }
        None => EncodeOutcome::Failure,
    })
}

/// Decoder of user `k` (1 or 2) from its output and its own state.
pub fn decode(
    cb: &Codebook,
    k: usize,
    y: &[u8],
    s: &[u8],
    j: &FullJoint,
    tp: TypicalityParams,
) -> Result<Option<usize>> {
    if !(1..=2).contains(&k) {
        return Err(Error::InvalidParameter(format!("user must be 1 or 2, got {k}")));
    }
    let ctx = CodingContext::new(j, tp)?;
    ctx.check_inputs(cb, &[y, s])?;
    Ok(ctx.decode(cb, k - 1, y, s))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub schema_version: u32,
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    pub encode_failure_rate: f64,
    pub decode_error_rate_1: f64,
    pub decode_error_rate_2: f64,
    pub joint_error: f64,
    /// `(log2 M1 + log2 M2) / n` minus the exact equivocation, when the
    /// enumeration fits in [`LEAKAGE_BUDGET`].
    pub leakage_bits_per_symbol: Option<f64>,
    pub rates: BinningRates,
    pub bookkeeping: [RateBookkeeping; 2],
}

#[derive(Clone, Copy, Default)]
struct Outcome {
    encode_failed: bool,
    wrong: [bool; 2],
    joint: bool,
}

fn run_trial(ctx: &CodingContext, spec: &ChannelSpec, cb: &Codebook, seed: u64, t: u64) -> Result<Outcome> {
    let n = cb.n;
    let mut smp = MemorylessSampler::with_rng(spec, n, rng_for(seed, t))?;
    let bins = [cb.users[0].shape.bins, cb.users[1].shape.bins];
    let m = [smp.uniform_below(bins[0]), smp.uniform_below(bins[1])];
    let (s1, s2) = smp.sample_states();
    let enc = encode_with(ctx, cb, m[0], m[1], &s1, &s2, smp.rng())?;
    let (x, encode_failed) = match enc {
        EncodeOutcome::Success { x, .. } => (x, false),
        EncodeOutcome::Failure => {
            let [c1, c2] = CodingContext::fallback_pair(cb, m[0], m[1]);
            let (u1, u2) = (cb.users[0].codeword(c1), cb.users[1].codeword(c2));
            (ctx.draw_input(smp.rng(), u1, u2, &s1, &s2), true)
        }
    };
    let out = smp.transmit(&x, &s1, &s2)?;
    let mut wrong = [false; 2];
    for (k, (y, s)) in [(&out.y1, &s1), (&out.y2, &s2)].into_iter().enumerate() {
        // A single message cannot be mistaken.
        if bins[k] > 1 {
            wrong[k] = ctx.decode(cb, k, y, s) != Some(m[k]);
        }
    }
    let trivial = bins == [1, 1];
    Ok(Outcome {
        encode_failed,
        wrong,
        joint: wrong[0] || wrong[1] || (encode_failed && !trivial),
    })
}

/// Monte Carlo estimate of the error events of one random code.
pub fn simulate(
    spec: &ChannelSpec,
    pol: &AuxPolicy,
    rates: &BinningRates,
    tp: TypicalityParams,
    trials: usize,
    seed: u64,
) -> Result<SimReport> {
    let j = build_full_joint(spec, pol)?;
    let ctx = CodingContext::new(&j, tp)?;
    let cb = Codebook::generate(&j, rates, tp.n, seed)?;
    let trial_seed = derive_seed(seed, TRIAL_STREAM);
    let outcomes: Vec<Outcome> = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(&ctx, spec, &cb, trial_seed, t))
        .collect::<Result<_>>()?;
    // An empty run reports zero for every event.
    let freq = |f: &dyn Fn(&Outcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / trials.max(1) as f64;
    let leakage = match exact_equivocation(&cb, spec, pol, tp, LEAKAGE_BUDGET) {
        Ok(e) => Some(e.message_bits_per_symbol - e.equivocation_bits_per_symbol),
        Err(Error::BudgetExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(SimReport {
        schema_version: SCHEMA_VERSION,
        n: tp.n,
        epsilon: tp.epsilon,
        trials,
        seed,
        encode_failure_rate: freq(&|o| o.encode_failed),
        decode_error_rate_1: freq(&|o| o.wrong[0]),
        decode_error_rate_2: freq(&|o| o.wrong[1]),
        joint_error: freq(&|o| o.joint),
        leakage_bits_per_symbol: leakage,
        rates: *rates,
        bookkeeping: cb.bookkeeping(),
    })
}

/// Encode failure frequency alone, for covering-side experiments.
pub fn encode_failure_rate(
    spec: &ChannelSpec,
    pol: &AuxPolicy,
    rates: &BinningRates,
    tp: TypicalityParams,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let j = build_full_joint(spec, pol)?;
    let ctx = CodingContext::new(&j, tp)?;
    let cb = Codebook::generate(&j, rates, tp.n, seed)?;
    let trial_seed = derive_seed(seed, TRIAL_STREAM);
    let fails: usize = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut smp = MemorylessSampler::with_rng(spec, tp.n, rng_for(trial_seed, t))?;
            let m1 = smp.uniform_below(cb.users[0].shape.bins);
            let m2 = smp.uniform_below(cb.users[1].shape.bins);
            let (s1, s2) = smp.sample_states();
            Ok(ctx.find_pair(&cb, m1, m2, &s1, &s2).is_none() as usize)
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum();
    Ok(fails as f64 / trials.max(1) as f64)
}

/// Rates given explicitly or through a margin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateChoice {
    Rates(BinningRates),
    Margin(f64),
}

/// Simulation input file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default = "schema")]
    pub schema_version: u32,
    pub channel: ChannelSpec,
    pub policy: AuxPolicy,
    #[serde(flatten)]
    pub rates: RateChoice,
    pub n: usize,
    pub trials: usize,
    pub epsilon: f64,
    pub seed: u64,
}

fn schema() -> u32 {
    SCHEMA_VERSION
}

impl SimConfig {
    pub fn typicality(&self) -> Result<TypicalityParams> {
        TypicalityParams::new(self.epsilon, self.n)
    }

    pub fn resolve_rates(&self) -> Result<BinningRates> {
        match self.rates {
            RateChoice::Rates(r) => {
                r.validate()?;
                Ok(r)
            }
            RateChoice::Margin(m) => derive_rates(&build_full_joint(&self.channel, &self.policy)?, m),
        }
    }

    pub fn run(&self) -> Result<SimReport> {
        simulate(
            &self.channel,
            &self.policy,
            &self.resolve_rates()?,
            self.typicality()?,
            self.trials,
            self.seed,
        )
    }
}
