//! Small channels, policies and configurations shipped as data files.

use crate::channel::{AuxPolicy, ChannelSpec, S1, S2, SCHEMA_VERSION, X, Y1, Y2, Z};
use crate::coding::covering::DEFAULT_PAIR_BUDGET;
use crate::coding::sim::RateChoice;
use crate::coding::{BinningRates, CoveringConfig, SimConfig, UserRates};
use crate::pmf::{axes, ConditionalPmf, Pmf};
use serde::{Deserialize, Serialize};

fn bsc(a: usize, b: usize, r: f64) -> f64 {
    if a == b {
        1.0 - r
    } else {
        r
    }
}

/// Symbol 2 is the erasure.
fn bec(x: usize, y: usize, e: f64) -> f64 {
    match y {
        2 => e,
        _ if y == x => 1.0 - e,
        _ => 0.0,
    }
}

fn no_state() -> Pmf {
    Pmf::point_mass(axes(&[(S1, 1), (S2, 1)]), &[0, 0]).expect("valid point mass")
}

/// `y1 = x`, constant `y2`, `z`, states.
pub fn noiseless_binary() -> ChannelSpec {
    let t = ConditionalPmf::from_fn(
        axes(&[(X, 2), (S1, 1), (S2, 1)]),
        axes(&[(Y1, 2), (Y2, 1), (Z, 1)]),
        |g, o| (o[0] == g[0]) as u8 as f64,
    )
    .expect("valid transition");
    ChannelSpec::new(no_state(), t).expect("valid channel")
}

/// Binary input, `y1 = BSC(p_main)`, `z = BSC(p_eve)`, no second user, no state.
pub fn binary_symmetric_wiretap(p_main: f64, p_eve: f64) -> ChannelSpec {
    let t = ConditionalPmf::from_fn(
        axes(&[(X, 2), (S1, 1), (S2, 1)]),
        axes(&[(Y1, 2), (Y2, 1), (Z, 2)]),
        |g, o| bsc(g[0], o[0], p_main) * bsc(g[0], o[2], p_eve),
    )
    .expect("valid transition");
    ChannelSpec::new(no_state(), t).expect("valid channel")
}

/// Degenerate second user; `s1` uniform and known to decoder 1,
/// `y1 = x xor s1` through BSC(p_main), `z = x xor s1` through BSC(p_eve).
pub fn state_masked_wiretap(p_main: f64, p_eve: f64) -> ChannelSpec {
    let ps = Pmf::uniform(axes(&[(S1, 2), (S2, 1)])).expect("valid state law");
    let t = ConditionalPmf::from_fn(
        axes(&[(X, 2), (S1, 2), (S2, 1)]),
        axes(&[(Y1, 2), (Y2, 1), (Z, 2)]),
        |g, o| {
            let c = g[0] ^ g[1];
            bsc(c, o[0], p_main) * bsc(c, o[2], p_eve)
        },
    )
    .expect("valid transition");
    ChannelSpec::new(ps, t).expect("valid channel")
}

/// `x = (x1, x2)`; user `k` sees `x_k` through BEC(0.55); the eavesdropper
/// sees both through independent BSC(0.37). No state.
pub fn erasure_broadcast() -> ChannelSpec {
    let (e, r) = (0.55, 0.37);
    let t = ConditionalPmf::from_fn(
        axes(&[(X, 4), (S1, 1), (S2, 1)]),
        axes(&[(Y1, 3), (Y2, 3), (Z, 4)]),
        |g, o| {
            let (x1, x2) = (g[0] / 2, g[0] % 2);
            let (z1, z2) = (o[2] / 2, o[2] % 2);
            bec(x1, o[0], e) * bec(x2, o[1], e) * bsc(x1, z1, r) * bsc(x2, z2, r)
        },
    )
    .expect("valid transition");
    ChannelSpec::new(no_state(), t).expect("valid channel")
}

/// `x = (u1, u2)` with `P(u1 = u2) = agree` and uniform marginals.
pub fn paired_policy(agree: f64) -> AuxPolicy {
    let mut table = vec![0.0; 16];
    for u1 in 0..2 {
        for u2 in 0..2 {
            table[(u1 * 2 + u2) * 4 + u1 * 2 + u2] = 0.5 * if u1 == u2 { agree } else { 1.0 - agree };
        }
    }
    AuxPolicy::from_table([1, 1], [2, 2], 4, table).expect("valid policy")
}

/// Simulation of independent uniform auxiliaries on [`erasure_broadcast`].
pub fn binary_sim_config(n: usize) -> SimConfig {
    SimConfig {
        schema_version: SCHEMA_VERSION,
        channel: erasure_broadcast(),
        policy: paired_policy(0.5),
        rates: RateChoice::Margin(0.15),
        n,
        trials: 500,
        epsilon: 0.6,
        seed: 2024,
    }
}

/// Auxiliary sum rate `I(U1;U2) + delta`, split evenly, a single message
/// each, with `U2 = U1 xor Bern(0.1)`.
pub fn correlated_aux_rates(delta: f64) -> BinningRates {
    let h = crate::pmf::binary_entropy(0.1);
    let each = (1.0 - h + delta) / 2.0;
    let u = UserRates::new(0.0, each, 0.0);
    BinningRates { user1: u, user2: u }
}

pub fn correlated_aux_config(delta: f64, n: usize, trials: usize) -> SimConfig {
    SimConfig {
        schema_version: SCHEMA_VERSION,
        channel: erasure_broadcast(),
        policy: paired_policy(0.9),
        rates: RateChoice::Rates(correlated_aux_rates(delta)),
        n,
        trials,
        epsilon: 0.1,
        seed: 7,
    }
}

/// Exact-equivocation instance: `s1` uniform, `u1 = s1 xor Bern(0.1)`,
/// `x = u1`, `y1 = x`, `z = BSC(0.2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivocationConfig {
    pub schema_version: u32,
    pub channel: ChannelSpec,
    pub policy: AuxPolicy,
    pub rates: BinningRates,
    pub n: usize,
    pub epsilon: f64,
    pub seed: u64,
}

pub fn equivocation_config() -> EquivocationConfig {
    let ps = Pmf::uniform(axes(&[(S1, 2), (S2, 1)])).expect("valid state law");
    let t = ConditionalPmf::from_fn(
        axes(&[(X, 2), (S1, 2), (S2, 1)]),
        axes(&[(Y1, 2), (Y2, 1), (Z, 2)]),
        |g, o| (o[0] == g[0]) as u8 as f64 * bsc(g[0], o[2], 0.2),
    )
    .expect("valid transition");
    let mut table = vec![0.0; 8];
    for s in 0..2 {
        for u in 0..2 {
            table[s * 4 + u * 2 + u] = if u == s { 0.9 } else { 0.1 };
        }
    }
    let n = 6;
    EquivocationConfig {
        schema_version: SCHEMA_VERSION,
        channel: ChannelSpec::new(ps, t).expect("valid channel"),
        policy: AuxPolicy::from_table([2, 1], [2, 1], 2, table).expect("valid policy"),
        // 4 messages, 8 sub-bins of 2 codewords.
        rates: BinningRates {
            user1: UserRates::new(2.0 / n as f64, 3.0 / n as f64, 1.0 / n as f64),
            user2: UserRates::ZERO,
        },
        n,
        epsilon: 0.6,
        seed: 0,
    }
}

/// Covering input: a two-axis joint and the experiment settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringInput {
    pub schema_version: u32,
    pub joint: Pmf,
    #[serde(flatten)]
    pub config: CoveringConfig,
}

/// Doubly symmetric binary source with crossover 0.2 at `R_I = I + offset`
/// and a single sequence in the second family.
pub fn covering_input(offset: f64) -> CoveringInput {
    let i = 1.0 - crate::pmf::binary_entropy(0.2);
    let total = (i + offset).max(0.0);
    CoveringInput {
        schema_version: SCHEMA_VERSION,
        joint: crate::coding::covering::dsbs(0.2).expect("valid source"),
        config: CoveringConfig {
            rate_i: total,
            rate_j: 0.0,
            n: 200,
            trials: 200,
            epsilon: 0.1,
            seed: 11,
            pair_budget: DEFAULT_PAIR_BUDGET,
        },
    }
}

/// Rates of [`binary_sim_config`] with user 1 pushed to
/// `R_Y = I(U1;Y1,S1) + excess` and user 2 silent.
pub fn violation_sim_config(n: usize, excess: f64) -> crate::error::Result<SimConfig> {
    let base = binary_sim_config(n);
    let j = crate::channel::build_full_joint(&base.channel, &base.policy)?;
    let r = crate::coding::derive_rates(&j, 0.15)?.user1;
    let i = j.mi(&[crate::channel::U1], &[Y1, S1]);
    Ok(SimConfig {
        rates: RateChoice::Rates(BinningRates {
            user1: UserRates::new(i + excess - r.r_u, r.r_w, r.r_z),
            user2: UserRates::ZERO,
        }),
        ..base
    })
}

/// Default Gaussian parameters with `Q1 = Q2 = q`.
pub fn gaussian_params(q: f64) -> crate::gaussian::GaussianParams {
    crate::gaussian::GaussianParams {
        Q1: q,
        Q2: q,
        ..Default::default()
    }
}
