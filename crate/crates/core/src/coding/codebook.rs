//! Random codebooks with bins and sub-bins.
//!
//! Codeword `c` of a user lies in bin `c / (M_W M_Z)` and sub-bin
//! `(c / M_Z) % M_W`. Codewords are i.i.d., so this contiguous layout has
//! the same law as a uniformly random assignment to bins.

use serde::{Deserialize, Serialize};

use crate::channel::{FullJoint, U1, U2};
use crate::coding::rates::{BinningRates, UserRates};
use crate::error::{Error, Result};
use crate::random::{derive_seed, rng_for, sample_index};

/// Default cap on stored codeword symbols over both users.
pub const DEFAULT_SYMBOL_BUDGET: f64 = (1u64 << 27) as f64;

/// `max(1, round(2^(n R)))`.
pub fn count_for(rate: f64, n: usize) -> f64 {
    (n as f64 * rate).exp2().round().max(1.0)
}

/// Realized size of each level of one user's codebook.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodebookShape {
    /// `M_k`, the number of bins (messages).
    pub bins: usize,
    /// `M_W`, sub-bins per bin.
    pub sub_bins: usize,
    /// `M_Z`, codewords per sub-bin.
    pub sub_bin_size: usize,
}

impl CodebookShape {
    pub fn for_rates(r: &UserRates, n: usize) -> Result<Self> {
        let counts = [count_for(r.r_k, n), count_for(r.r_w, n), count_for(r.r_z, n)];
        if counts.iter().product::<f64>() > u32::MAX as f64 {
            return Err(Error::BudgetExceeded {
                required: counts.iter().product(),
                budget: u32::MAX as f64,
            });
        }
        Ok(Self {
            bins: counts[0] as usize,
            sub_bins: counts[1] as usize,
            sub_bin_size: counts[2] as usize,
        })
    }

    /// `M_U = M_W M_Z`.
    pub fn bin_size(&self) -> usize {
        self.sub_bins * self.sub_bin_size
    }

    /// `M_Y = M_k M_U`.
    pub fn len(&self) -> usize {
        self.bins * self.bin_size()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Rates implied by the rounded sizes, `log2(M) / n`, next to the nominal ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateBookkeeping {
    pub shape: CodebookShape,
    pub realized: UserRates,
    /// `realized - nominal` for `R_k`, `R_W`, `R_Z`.
    pub rounding_error: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct UserCodebook {
    pub shape: CodebookShape,
    n: usize,
    symbols: Vec<u8>,
}

impl UserCodebook {
    pub fn len(&self) -> usize {
        self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shape.is_empty()
    }

    pub fn codeword(&self, c: usize) -> &[u8] {
        &self.symbols[c * self.n..(c + 1) * self.n]
    }

    pub fn bin_of(&self, c: usize) -> usize {
        c / self.shape.bin_size()
    }

    pub fn sub_bin_of(&self, c: usize) -> usize {
        c / self.shape.sub_bin_size % self.shape.sub_bins
    }

    /// Codeword indices of bin `m`, in scan order.
    pub fn bin(&self, m: usize) -> std::ops::Range<usize> {
        let b = self.shape.bin_size();
        m * b..(m + 1) * b
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub n: usize,
    pub seed: u64,
    pub rates: BinningRates,
    pub users: [UserCodebook; 2],
}

const CODEBOOK_STREAM: u64 = 0xC0DE;

impl Codebook {
    pub fn generate(j: &FullJoint, rates: &BinningRates, n: usize, seed: u64) -> Result<Self> {
        Self::generate_with_budget(j, rates, n, seed, DEFAULT_SYMBOL_BUDGET)
    }

    /// Fails before allocating when the codebooks would hold more than
    /// `symbol_budget` symbols.
    pub fn generate_with_budget(
        j: &FullJoint,
        rates: &BinningRates,
        n: usize,
        seed: u64,
        symbol_budget: f64,
    ) -> Result<Self> {
        rates.validate()?;
        if n == 0 {
            return Err(Error::InvalidParameter("blocklength must be at least 1".into()));
        }
        let shapes = [
            CodebookShape::for_rates(&rates.user1, n)?,
            CodebookShape::for_rates(&rates.user2, n)?,
        ];
        let required = shapes.iter().map(|s| s.len() as f64 * n as f64).sum::<f64>();
        if required > symbol_budget {
            return Err(Error::BudgetExceeded {
                required,
                budget: symbol_budget,
            });
        }
        let base = derive_seed(seed, CODEBOOK_STREAM);
        let users = [(U1, 0u64), (U2, 1u64)].map(|(axis, k)| {
            let marginal = j.pmf().marginalize(&[axis]).expect("canonical axis");
            let shape = shapes[k as usize];
            let mut rng = rng_for(base, k);
            let symbols = (0..shape.len() * n)
                .map(|_| sample_index(&mut rng, marginal.table()) as u8)
                .collect();
            UserCodebook { shape, n, symbols }
        });
        Ok(Self {
            n,
            seed,
            rates: *rates,
            users,
        })
    }

    pub fn bookkeeping(&self) -> [RateBookkeeping; 2] {
        let n = self.n as f64;
        let nominal = self.rates.users();
        [0, 1].map(|k| {
            let s = self.users[k].shape;
            let realized = UserRates::new(
                (s.bins as f64).log2() / n,
                (s.sub_bins as f64).log2() / n,
                (s.sub_bin_size as f64).log2() / n,
            );
            RateBookkeeping {
                shape: s,
                realized,
                rounding_error: [
                    realized.r_k - nominal[k].r_k,
                    realized.r_w - nominal[k].r_w,
                    realized.r_z - nominal[k].r_z,
                ],
            }
        })
    }
}
