//! Seed derivation and small sampling helpers shared by the Monte Carlo code.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer; mixes a base seed with a stream index so that
/// independent work units get unrelated generators.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, stream: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, stream))
}

/// Dirichlet(1, ..., 1) draw written into `out`.
pub fn dirichlet_flat<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let mut sum = 0.0;
    for v in out.iter_mut() {
        let e: f64 = Exp1.sample(rng);
        *v = e;
        sum += e;
    }
    out.iter_mut().for_each(|v| *v /= sum);
}

/// Index drawn from a discrete distribution by inversion.
pub fn sample_index<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return i;
        }
    }
    // Round-off: fall back to the last cell with positive mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
