//! Upper bound on the uniform min-max level of player 4 in a four-player
//! repeated game whose signals do not depend on player 4's action.
//!
//! Player `e` in {1, 2, 3} acts as encoder for the two other players, the
//! receivers `r < r'`. The printed conditions for encoder 1 are used with
//! players 2 and 3 replaced by `r` and `r'`:
//!
//! ```text
//! H(A_r)          <= I(U;S_r,A_r)   - max(I(U;S4),   I(U;A_r,A_r'))
//! H(A_r')         <= I(V;S_r',A_r') - max(I(V;S4),   I(V;A_r,A_r'))
//! H(A_r)+H(A_r')  <= I(U;S_r,A_r) + I(V;S_r',A_r') - I(U;V)
//!                    - max(I(U,V;S4), I(U,V;A_r,A_r'))
//! ```
//!
//! so encoder 2 speaks to (1, 3) and encoder 3 to (1, 2). Witnesses are
//! `q(a) P(u, v | a) T(s | a)`, which meets both marginal conditions exactly.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::SCHEMA_VERSION;
use crate::error::{Error, Result};
use crate::pmf::{axes, entropy_bits, Alphabet, ConditionalPmf, Pmf};
use crate::random::{derive_seed, dirichlet_flat, rng_for};

pub const A1: &str = "a1";
pub const A2: &str = "a2";
pub const A3: &str = "a3";
pub const SIGNALS: [&str; 4] = ["s1", "s2", "s3", "s4"];
/// Auxiliary of the first and second receiver.
pub const AUX: [&str; 2] = ["u", "v"];

/// Slack at or above `-FEASIBILITY_TOL` counts as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Candidates closer than this in L1 are merged.
pub const DEDUP_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameRepr", into = "GameRepr")]
pub struct StageGame {
    actions: [usize; 4],
    /// `u4[((a1 n2 + a2) n3 + a3) n4 + a4]`.
    u4: Vec<f64>,
    /// `T(s1, s2, s3, s4 | a1, a2, a3)`.
    signals: ConditionalPmf,
}

#[derive(Serialize, Deserialize)]
struct GameRepr {
    #[serde(default = "schema")]
    schema_version: u32,
    actions: [usize; 4],
    u4: Vec<f64>,
    signals: ConditionalPmf,
}

fn schema() -> u32 {
    SCHEMA_VERSION
}

impl TryFrom<GameRepr> for StageGame {
    type Error = Error;
    fn try_from(r: GameRepr) -> Result<Self> {
        StageGame::new(r.actions, r.u4, r.signals)
    }
}

impl From<StageGame> for GameRepr {
    fn from(g: StageGame) -> Self {
        GameRepr {
            schema_version: SCHEMA_VERSION,
            actions: g.actions,
            u4: g.u4,
            signals: g.signals,
        }
    }
}

impl StageGame {
    /// `signals` must be given `(a1, a2, a3)` and output `(s1, s2, s3, s4)`,
    /// in that order.
    pub fn new(actions: [usize; 4], u4: Vec<f64>, signals: ConditionalPmf) -> Result<Self> {
        if let Some(k) = actions.iter().position(|&n| n == 0) {
            return Err(Error::EmptyAxis(format!("a{}", k + 1)));
        }
        let cells: usize = actions.iter().product();
        if u4.len() != cells {
            return Err(Error::TableLength {
                expected: cells,
                found: u4.len(),
            });
        }
        if let Some((i, &v)) = u4.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidEntry {
                location: format!("u4[{i}]"),
                value: v,
            });
        }
        let given: Vec<&str> = signals.given_axes().iter().map(|a| a.name.as_str()).collect();
        let output: Vec<&str> = signals.output_axes().iter().map(|a| a.name.as_str()).collect();
        if given != [A1, A2, A3] || output != SIGNALS {
            return Err(Error::InvalidParameter(
                "signals must map (a1, a2, a3) to (s1, s2, s3, s4)".into(),
            ));
        }
        for (k, ax) in signals.given_axes().iter().enumerate() {
            if ax.size != actions[k] {
                return Err(Error::AxisMismatch {
                    axis: ax.name.clone(),
                    expected: actions[k],
                    found: ax.size,
                });
            }
        }
        Ok(Self { actions, u4, signals })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn actions(&self) -> [usize; 4] {
        self.actions
    }

    pub fn u4(&self) -> &[f64] {
        &self.u4
    }

    pub fn signals(&self) -> &ConditionalPmf {
        &self.signals
    }

    /// `|A1| |A2| |A3|`.
    pub fn profiles(&self) -> usize {
        self.actions[..3].iter().product()
    }

    pub fn signal_sizes(&self) -> [usize; 4] {
        let o = self.signals.output_axes();
        [o[0].size, o[1].size, o[2].size, o[3].size]
    }

    pub fn profile_axes(&self) -> Vec<Alphabet> {
        axes(&[(A1, self.actions[0]), (A2, self.actions[1]), (A3, self.actions[2])])
    }

    fn split(&self, a: usize) -> [usize; 3] {
        let [_, n2, n3, _] = self.actions;
        [a / (n2 * n3), a / n3 % n2, a % n3]
    }

    /// `T(s_k | a)` for player `k` in 0..4, indexed `[a][s]`.
    fn signal_marginal(&self, k: usize) -> Vec<Vec<f64>> {
        let sizes = self.signal_sizes();
        let mut strides = [1usize; 4];
        for i in (0..3).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        (0..self.profiles())
            .map(|a| {
                let mut m = vec![0.0; sizes[k]];
                for (o, p) in self.signals.slice(a).iter().enumerate() {
                    m[o / strides[k] % sizes[k]] += p;
                }
                m
            })
            .collect()
    }

    /// Default auxiliary sizes `|A_r| |S_r|` for the receivers of `encoder`.
    pub fn default_aux_sizes(&self, encoder: usize) -> Result<[usize; 2]> {
        let [r, rr] = receivers(encoder)?;
        let s = self.signal_sizes();
        Ok([self.actions[r] * s[r], self.actions[rr] * s[rr]])
    }
}

/// Zero-based receivers of one-based `encoder`.
pub fn receivers(encoder: usize) -> Result<[usize; 2]> {
    match encoder {
        1 => Ok([1, 2]),
        2 => Ok([0, 2]),
        3 => Ok([0, 1]),
        _ => Err(Error::InvalidParameter(format!(
            "encoder must be 1, 2 or 3, got {encoder}"
        ))),
    }
}

/// `sum_a q(a) u4(a, a4)` for `q` over `(a1, a2, a3)` in row-major order.
pub fn expected_u4(game: &StageGame, q: &[f64], a4: usize) -> f64 {
    let n4 = game.actions[3];
    q.iter().enumerate().map(|(a, p)| p * game.u4[a * n4 + a4]).sum()
}

/// `max_{a4} E_q u4`.
pub fn best_response_value(game: &StageGame, q: &[f64]) -> f64 {
    (0..game.actions[3])
        .map(|a4| expected_u4(game, q, a4))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityWitness {
    /// One-based encoder.
    pub encoder: usize,
    pub aux_sizes: [usize; 2],
    /// Target distribution over `(a1, a2, a3)`.
    pub q: Pmf,
    /// `P(u, v | a1, a2, a3)`.
    pub aux_law: ConditionalPmf,
    /// Minimum over the three constraints of right side minus left side.
    pub slack: f64,
}

impl FeasibilityWitness {
    /// `q(a) P(u, v | a) T(s | a)` over `(u, v, a1, a2, a3, s1, s2, s3, s4)`.
    pub fn q_tilde(&self, game: &StageGame) -> Result<Pmf> {
        let qa = self.q.extend(&self.aux_law)?.extend(game.signals())?;
        let order: Vec<&str> = AUX.iter().chain(&[A1, A2, A3]).chain(&SIGNALS).copied().collect();
        qa.reorder(&order)
    }
}

/// Slack of the three conditions, evaluated on the materialized witness.
pub fn entropy_constraints_satisfied(game: &StageGame, w: &FeasibilityWitness) -> Result<f64> {
    let [r, rr] = receivers(w.encoder)?;
    let j = w.q_tilde(game)?;
    let acts = [A1, A2, A3];
    let (ar, arr) = (acts[r], acts[rr]);
    let (sr, srr, s4) = (SIGNALS[r], SIGNALS[rr], SIGNALS[3]);
    let [u, v] = AUX;
    let h_r = j.entropy(&[ar])?;
    let h_rr = j.entropy(&[arr])?;
    let mi = |a: &[&str], b: &[&str]| j.mutual_information(a, b);
    let i_u = mi(&[u], &[sr, ar])?;
    let i_v = mi(&[v], &[srr, arr])?;
    let c1 = i_u - mi(&[u], &[s4])?.max(mi(&[u], &[ar, arr])?) - h_r;
    let c2 = i_v - mi(&[v], &[s4])?.max(mi(&[v], &[ar, arr])?) - h_rr;
    let c3 = i_u + i_v - mi(&[u], &[v])? - mi(&[u, v], &[s4])?.max(mi(&[u, v], &[ar, arr])?) - h_r - h_rr;
    Ok(c1.min(c2).min(c3))
}

fn mi_table(p: &[f64], rows: usize, cols: usize) -> f64 {
    let mut pr = vec![0.0; rows];
    let mut pc = vec![0.0; cols];
    for i in 0..rows {
        for k in 0..cols {
            pr[i] += p[i * cols + k];
            pc[k] += p[i * cols + k];
        }
    }
    (entropy_bits(&pr) + entropy_bits(&pc) - entropy_bits(p)).max(0.0)
}

/// Slack evaluator working on `P(u, v, a)` and per-player signal marginals.
struct SlackEval<'g> {
    game: &'g StageGame,
    q: Vec<f64>,
    r: usize,
    rr: usize,
    n: [usize; 2],
    t_r: Vec<Vec<f64>>,
    t_rr: Vec<Vec<f64>>,
    t4: Vec<Vec<f64>>,
    h: [f64; 2],
}

impl<'g> SlackEval<'g> {
    fn new(game: &'g StageGame, q: &[f64], encoder: usize, n: [usize; 2]) -> Result<Self> {
        let [r, rr] = receivers(encoder)?;
        let mut m = [vec![0.0; game.actions[r]], vec![0.0; game.actions[rr]]];
        for (a, p) in q.iter().enumerate() {
            let s = game.split(a);
            m[0][s[r]] += p;
            m[1][s[rr]] += p;
        }
        Ok(Self {
            game,
            q: q.to_vec(),
            r,
            rr,
            n,
            t_r: game.signal_marginal(r),
            t_rr: game.signal_marginal(rr),
            t4: game.signal_marginal(3),
            h: [entropy_bits(&m[0]), entropy_bits(&m[1])],
        })
    }

    /// `w[a][u * n_v + v] = P(u, v | a)`.
    fn slack(&self, w: &[Vec<f64>]) -> f64 {
        let g = self.game;
        let [nu, nv] = self.n;
        let (nar, narr) = (g.actions[self.r], g.actions[self.rr]);
        let sizes = g.signal_sizes();
        let (nsr, nsrr, ns4) = (sizes[self.r], sizes[self.rr], sizes[3]);
        let mut u_sa = vec![0.0; nu * nar * nsr];
        let mut v_sa = vec![0.0; nv * narr * nsrr];
        let mut u_s4 = vec![0.0; nu * ns4];
        let mut v_s4 = vec![0.0; nv * ns4];
        let mut uv_s4 = vec![0.0; nu * nv * ns4];
        let mut u_aa = vec![0.0; nu * nar * narr];
        let mut v_aa = vec![0.0; nv * nar * narr];
        let mut uv_aa = vec![0.0; nu * nv * nar * narr];
        let mut uv = vec![0.0; nu * nv];
        for (a, &qa) in self.q.iter().enumerate() {
            if qa == 0.0 {
                continue;
            }
            let s = g.split(a);
            let (ar, arr) = (s[self.r], s[self.rr]);
            let pair = ar * narr + arr;
            for u in 0..nu {
                for v in 0..nv {
                    let p = qa * w[a][u * nv + v];
                    if p == 0.0 {
                        continue;
                    }
                    uv[u * nv + v] += p;
                    uv_aa[(u * nv + v) * nar * narr + pair] += p;
                    u_aa[u * nar * narr + pair] += p;
                    v_aa[v * nar * narr + pair] += p;
                    for (s4, t) in self.t4[a].iter().enumerate() {
                        u_s4[u * ns4 + s4] += p * t;
                        v_s4[v * ns4 + s4] += p * t;
                        uv_s4[(u * nv + v) * ns4 + s4] += p * t;
                    }
                    for (sr, t) in self.t_r[a].iter().enumerate() {
                        u_sa[u * nar * nsr + ar * nsr + sr] += p * t;
                    }
                    for (srr, t) in self.t_rr[a].iter().enumerate() {
                        v_sa[v * narr * nsrr + arr * nsrr + srr] += p * t;
                    }
                }
            }
        }
        let i_u = mi_table(&u_sa, nu, nar * nsr);
        let i_v = mi_table(&v_sa, nv, narr * nsrr);
        let c1 = i_u - mi_table(&u_s4, nu, ns4).max(mi_table(&u_aa, nu, nar * narr)) - self.h[0];
        let c2 = i_v - mi_table(&v_s4, nv, ns4).max(mi_table(&v_aa, nv, nar * narr)) - self.h[1];
        let c3 = i_u + i_v
            - mi_table(&uv, nu, nv)
            - mi_table(&uv_s4, nu * nv, ns4).max(mi_table(&uv_aa, nu * nv, nar * narr))
            - self.h[0]
            - self.h[1];
        c1.min(c2).min(c3)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub restarts: usize,
    pub iterations: usize,
    /// Overrides [`StageGame::default_aux_sizes`].
    pub aux_sizes: Option<[usize; 2]>,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            restarts: 4,
            iterations: 150,
            aux_sizes: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Membership {
    Feasible(FeasibilityWitness),
    NotFound { best_slack: f64 },
}

impl Membership {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Membership::Feasible(_))
    }
}

fn witness_from(
    game: &StageGame,
    q: &[f64],
    encoder: usize,
    n: [usize; 2],
    w: &[Vec<f64>],
    slack: f64,
) -> Result<FeasibilityWitness> {
    let qp = Pmf::new(game.profile_axes(), q.to_vec())?;
    let aux_law = ConditionalPmf::new(
        game.profile_axes(),
        axes(&[(AUX[0], n[0]), (AUX[1], n[1])]),
        w.iter().flatten().copied().collect(),
    )?;
    Ok(FeasibilityWitness {
        encoder,
        aux_sizes: n,
        q: qp,
        aux_law,
        slack,
    })
}

/// Random restarts plus local ascent on `P(u, v | a)`, maximizing slack.
/// Restart 0 copies the receivers' actions into the auxiliaries, restart 1
/// uses constant auxiliaries, the rest start from flat Dirichlet rows.
pub fn check_membership(
    game: &StageGame,
    q: &[f64],
    encoder: usize,
    budget: SearchBudget,
    seed: u64,
) -> Result<Membership> {
    if q.len() != game.profiles() {
        return Err(Error::TableLength {
            expected: game.profiles(),
            found: q.len(),
        });
    }
    let n = match budget.aux_sizes {
        Some(n) => n,
        None => game.default_aux_sizes(encoder)?,
    };
    if n.contains(&0) {
        return Err(Error::InvalidParameter("auxiliary sizes must be positive".into()));
    }
    let eval = SlackEval::new(game, q, encoder, n)?;
    let cells = n[0] * n[1];
    let rows = game.profiles();
    let live: Vec<usize> = (0..rows).filter(|&a| q[a] > 0.0).collect();
    let mut rng = rng_for(seed, encoder as u64);
    let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
    for restart in 0..budget.restarts.max(1) {
        let mut w: Vec<Vec<f64>> = (0..rows)
            .map(|a| {
                let mut row = vec![0.0; cells];
                match restart {
                    0 => {
                        let s = game.split(a);
                        row[(s[eval.r] % n[0]) * n[1] + s[eval.rr] % n[1]] = 1.0;
                    }
                    1 => row[0] = 1.0,
                    _ => dirichlet_flat(&mut rng, &mut row),
                }
                row
            })
            .collect();
        let mut cur = eval.slack(&w);
        let mut step: f64 = 0.5;
        for _ in 0..budget.iterations {
            if live.is_empty() {
                break;
            }
            let a = live[rng.random_range(0..live.len())];
            let mut dir = vec![0.0; cells];
            if rng.random_bool(0.5) {
                dir[rng.random_range(0..cells)] = 1.0;
            } else {
                dirichlet_flat(&mut rng, &mut dir);
            }
            let old = std::mem::take(&mut w[a]);
            w[a] = old.iter().zip(&dir).map(|(o, d)| (1.0 - step) * o + step * d).collect();
            let s = eval.slack(&w);
            if s > cur {
                cur = s;
                step = (step * 1.5).min(1.0);
            } else {
                w[a] = old;
                step = (step * 0.7).max(0.01);
            }
        }
        if best.as_ref().is_none_or(|(b, _)| cur > *b) {
            best = Some((cur, w));
        }
    }
    let (slack, w) = best.expect("at least one restart");
    Ok(if slack >= -FEASIBILITY_TOL {
        Membership::Feasible(witness_from(game, q, encoder, n, &w, slack)?)
    } else {
        Membership::NotFound { best_slack: slack }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateConfig {
    /// Correlated distributions sampled and tested for membership.
    pub samples: usize,
    /// Each player's mixed action ranges over the simplex grid with this
    /// many steps.
    pub product_steps: usize,
    pub search: SearchBudget,
    pub seed: u64,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        Self {
            samples: 64,
            product_steps: 10,
            search: SearchBudget::default(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CandidateOrigin {
    Product,
    Achievable { encoder: usize, slack: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Distribution over `(a1, a2, a3)`, row-major.
    pub q: Vec<f64>,
    pub origin: CandidateOrigin,
}

/// All points of the simplex over `k` outcomes with coordinates in
/// multiples of `1 / steps`, in lexicographic order of numerators.
pub fn simplex_grid(k: usize, steps: usize) -> Vec<Vec<f64>> {
    fn rec(k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for i in 0..=left {
            cur.push(i);
            rec(k - 1, left - i, cur, out);
            cur.pop();
        }
    }
    let steps = steps.max(1);
    let mut out = Vec::new();
    rec(k, steps, &mut Vec::new(), &mut out);
    out.into_iter()
        .map(|v| v.into_iter().map(|i| i as f64 / steps as f64).collect())
        .collect()
}

/// Product of three independent mixed actions as a row-major table.
pub fn product_distribution(p: [&[f64]; 3]) -> Vec<f64> {
    let mut out = Vec::with_capacity(p[0].len() * p[1].len() * p[2].len());
    for &x in p[0] {
        for &y in p[1] {
            for &z in p[2] {
                out.push(x * y * z);
            }
        }
    }
    out
}

fn product_candidates(game: &StageGame, steps: usize) -> Vec<Vec<f64>> {
    let grids: Vec<Vec<Vec<f64>>> = (0..3).map(|k| simplex_grid(game.actions[k], steps)).collect();
    let mut out = Vec::new();
    for x in &grids[0] {
        for y in &grids[1] {
            for z in &grids[2] {
                out.push(product_distribution([x, y, z]));
            }
        }
    }
    out
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Half of the samples are flat Dirichlet, half sparse (concentration 0.2).
fn sample_correlated(game: &StageGame, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let k = game.profiles();
    let sparse = Gamma::new(0.2, 1.0).expect("valid shape");
    (0..samples as u64)
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let mut q = vec![0.0; k];
            if i % 2 == 0 {
                dirichlet_flat(&mut rng, &mut q);
            } else {
                q.iter_mut().for_each(|v| *v = sparse.sample(&mut rng));
                let s: f64 = q.iter().sum();
                if s > 0.0 {
                    q.iter_mut().for_each(|v| *v /= s);
                } else {
                    q[0] = 1.0;
                }
            }
            q
        })
        .collect()
}

/// Product grid plus every sampled distribution some encoder can achieve,
/// deduplicated in L1.
pub fn build_q123(game: &StageGame, cfg: &CandidateConfig) -> Result<Vec<Candidate>> {
    let mut out: Vec<Candidate> = Vec::new();
    let mut push = |c: Candidate| {
        if !out.iter().any(|o| l1(&o.q, &c.q) < DEDUP_TOL) {
            out.push(c);
        }
    };
    for q in product_candidates(game, cfg.product_steps) {
        push(Candidate {
            q,
            origin: CandidateOrigin::Product,
        });
    }
    let sample_seed = derive_seed(cfg.seed, 1);
    let search_seed = derive_seed(cfg.seed, 2);
    let found: Vec<Option<Candidate>> = sample_correlated(game, cfg.samples, sample_seed)
        .into_par_iter()
        .enumerate()
        .map(|(i, q)| -> Result<Option<Candidate>> {
            for e in 1..=3 {
                let seed = derive_seed(search_seed, (i * 3 + e) as u64);
                if let Membership::Feasible(w) = check_membership(game, &q, e, cfg.search, seed)? {
                    return Ok(Some(Candidate {
                        q,
                        origin: CandidateOrigin::Achievable {
                            encoder: e,
                            slack: w.slack,
                        },
                    }));
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    for c in found.into_iter().flatten() {
        push(c);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinmaxResult {
    pub schema_version: u32,
    pub nu: f64,
    /// Weights over `candidates`.
    pub weights: Vec<f64>,
    pub candidates: Vec<Candidate>,
    /// Optimal mixed action of player 4 from the dual program.
    pub punished_mix: Vec<f64>,
    /// `max_{a4} E_{Q*} u4 - nu` at the mixed distribution `Q*`.
    pub oracle_gap: f64,
    /// Primal minus dual objective.
    pub duality_gap: f64,
}

impl MinmaxResult {
    /// `Q* = sum_j w_j Q_j`.
    pub fn mixed_distribution(&self) -> Vec<f64> {
        let k = self.candidates.first().map_or(0, |c| c.q.len());
        let mut q = vec![0.0; k];
        for (c, w) in self.candidates.iter().zip(&self.weights) {
            q.iter_mut().zip(&c.q).for_each(|(a, b)| *a += w * b);
        }
        q
    }
}

fn lp_err(e: minilp::Error) -> Error {
    Error::Lp(e.to_string())
}

/// `min_{w in simplex} max_{a4} sum_j w_j E_{Q_j} u4(., a4)`, together with
/// the dual `max_{y in simplex} min_j sum_{a4} y_{a4} E_{Q_j} u4(., a4)`.
pub fn minmax_upper_bound(game: &StageGame, candidates: Vec<Candidate>) -> Result<MinmaxResult> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidate distributions".into()));
    }
    let n4 = game.actions[3];
    if let Some(c) = candidates.iter().find(|c| c.q.len() != game.profiles()) {
        return Err(Error::TableLength {
            expected: game.profiles(),
            found: c.q.len(),
        });
    }
    let pay: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| (0..n4).map(|a4| expected_u4(game, &c.q, a4)).collect())
        .collect();

    let mut primal = Problem::new(OptimizationDirection::Minimize);
    let t = primal.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let w: Vec<_> = pay.iter().map(|_| primal.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for a4 in 0..n4 {
        let mut expr: Vec<_> = w.iter().zip(&pay).map(|(&v, p)| (v, p[a4])).collect();
        expr.push((t, -1.0));
        primal.add_constraint(&expr[..], ComparisonOp::Le, 0.0);
    }
    primal.add_constraint(
        &w.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>()[..],
        ComparisonOp::Eq,
        1.0,
    );
    let sol = primal.solve().map_err(lp_err)?;
    let mut weights: Vec<f64> = w.iter().map(|&v| sol[v].max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|x| *x /= total);

    let mut dual = Problem::new(OptimizationDirection::Maximize);
    let z = dual.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let y: Vec<_> = (0..n4).map(|_| dual.add_var(0.0, (0.0, f64::INFINITY))).collect();
    for p in &pay {
        let mut expr: Vec<_> = y.iter().zip(p).map(|(&v, &c)| (v, c)).collect();
        expr.push((z, -1.0));
        dual.add_constraint(&expr[..], ComparisonOp::Ge, 0.0);
    }
    dual.add_constraint(
        &y.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>()[..],
        ComparisonOp::Eq,
        1.0,
    );
    let dsol = dual.solve().map_err(lp_err)?;
    let mut punished_mix: Vec<f64> = y.iter().map(|&v| dsol[v].max(0.0)).collect();
    let ytot: f64 = punished_mix.iter().sum();
    punished_mix.iter_mut().for_each(|x| *x /= ytot);

    let nu = sol.objective();
    let mut result = MinmaxResult {
        schema_version: SCHEMA_VERSION,
        nu,
        weights,
        candidates,
        punished_mix,
        oracle_gap: 0.0,
        duality_gap: nu - dsol.objective(),
    };
    result.oracle_gap = best_response_value(game, &result.mixed_distribution()) - nu;
    Ok(result)
}

/// `min` over the product grid of `max_{a4} E u4`, by direct enumeration.
pub fn product_grid_oracle(game: &StageGame, steps: usize) -> f64 {
    product_candidates(game, steps)
        .iter()
        .map(|q| best_response_value(game, q))
        .fold(f64::INFINITY, f64::min)
}

/// `min` over all of `Delta(A1 x A2 x A3)` of `max_{a4} E u4`, as the
/// program over the point masses.
pub fn full_correlation_oracle(game: &StageGame) -> Result<f64> {
    let k = game.profiles();
    let vertices = (0..k)
        .map(|a| {
            let mut q = vec![0.0; k];
            q[a] = 1.0;
            Candidate {
                q,
                origin: CandidateOrigin::Product,
            }
        })
        .collect();
    Ok(minmax_upper_bound(game, vertices)?.nu)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub schema_version: u32,
    #[serde(flatten)]
    pub candidates: CandidateConfig,
}

/// Candidate construction followed by the minimax program.
pub fn solve_game(game: &StageGame, cfg: &CandidateConfig) -> Result<MinmaxResult> {
    minmax_upper_bound(game, build_q123(game, cfg)?)
}

/// Games used by the examples and tests. All actions are binary.
pub mod examples {
    use super::*;

    fn signals(mut f: impl FnMut([usize; 3], [usize; 4]) -> f64, sizes: [usize; 4]) -> ConditionalPmf {
        ConditionalPmf::from_fn(
            axes(&[(A1, 2), (A2, 2), (A3, 2)]),
            axes(&[
                (SIGNALS[0], sizes[0]),
                (SIGNALS[1], sizes[1]),
                (SIGNALS[2], sizes[2]),
                (SIGNALS[3], sizes[3]),
            ]),
            |g, o| f([g[0], g[1], g[2]], [o[0], o[1], o[2], o[3]]),
        )
        .expect("valid signal table")
    }

    fn table(f: impl Fn([usize; 4]) -> f64) -> Vec<f64> {
        let mut u = Vec::with_capacity(16);
        for a1 in 0..2 {
            for a2 in 0..2 {
                for a3 in 0..2 {
                    for a4 in 0..2 {
                        u.push(f([a1, a2, a3, a4]));
                    }
                }
            }
        }
        u
    }

    /// Player 4 wins 1 for matching `a1` and loses 1 otherwise.
    pub fn matching_pennies_u4() -> Vec<f64> {
        table(|a| if a[3] == a[0] { 1.0 } else { -1.0 })
    }

    /// Player 4 earns 1 when players 1 and 2 disagree, and 1 for guessing
    /// their common action when they agree.
    pub fn coordination_u4() -> Vec<f64> {
        table(|a| if a[0] != a[1] || a[3] == a[0] { 1.0 } else { 0.0 })
    }

    /// Players 1 to 3 observe the whole profile, player 4 nothing.
    pub fn perfect_monitoring() -> StageGame {
        let t = signals(
            |a, s| {
                let p = a[0] * 4 + a[1] * 2 + a[2];
                (s[0] == p && s[1] == p && s[2] == p) as u8 as f64
            },
            [8, 8, 8, 1],
        );
        StageGame::new([2; 4], matching_pennies_u4(), t).expect("valid game")
    }

    /// Every signal is constant.
    pub fn blind() -> StageGame {
        StageGame::new([2; 4], coordination_u4(), signals(|_, _| 1.0, [1; 4])).expect("valid game")
    }

    /// Players 2 and 3 see `a1` through independent BSC(0.1), player 4
    /// through BSC(0.3); player 1 sees nothing.
    pub fn noisy() -> StageGame {
        let bsc = |x: usize, y: usize, r: f64| if x == y { 1.0 - r } else { r };
        let t = signals(
            |a, s| bsc(a[0], s[1], 0.1) * bsc(a[0], s[2], 0.1) * bsc(a[0], s[3], 0.3),
            [1, 2, 2, 2],
        );
        StageGame::new([2; 4], coordination_u4(), t).expect("valid game")
    }

    /// `u4 = c` everywhere, perfect monitoring.
    pub fn constant(c: f64) -> StageGame {
        let g = perfect_monitoring();
        StageGame::new([2; 4], vec![c; 16], g.signals.clone()).expect("valid game")
    }
}

#[cfg(test)]
mod tests {
    use super::examples::*;
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn q_of(f: impl Fn(usize, usize, usize) -> f64) -> Vec<f64> {
        let mut q = Vec::new();
        for a1 in 0..2 {
            for a2 in 0..2 {
                for a3 in 0..2 {
                    q.push(f(a1, a2, a3));
                }
            }
        }
        q
    }

    /// Exact `max_y min_j` for two actions of player 4: the lower envelope
    /// of lines in `y` is concave, so its maximum sits at an endpoint or at
    /// a crossing of two lines.
    fn envelope_oracle(pay: &[[f64; 2]]) -> f64 {
        let env = |y: f64| {
            pay.iter()
                .map(|p| y * p[0] + (1.0 - y) * p[1])
                .fold(f64::INFINITY, f64::min)
        };
        let mut ys = vec![0.0, 1.0];
        for i in 0..pay.len() {
            for j in i + 1..pay.len() {
                let (si, sj) = (pay[i][0] - pay[i][1], pay[j][0] - pay[j][1]);
                if (si - sj).abs() > 1e-15 {
                    let y = (pay[j][1] - pay[i][1]) / (si - sj);
                    if (0.0..=1.0).contains(&y) {
                        ys.push(y);
                    }
                }
            }
        }
        ys.into_iter().map(env).fold(f64::NEG_INFINITY, f64::max)
    }

    fn candidates(qs: Vec<Vec<f64>>) -> Vec<Candidate> {
        qs.into_iter()
            .map(|q| Candidate {
                q,
                origin: CandidateOrigin::Product,
            })
            .collect()
    }

    #[test]
    fn expectation_matches_direct_sum() {
        let g = blind();
        let mut rng = rng_for(3, 0);
        for _ in 0..20 {
            let mut q = vec![0.0; 8];
            dirichlet_flat(&mut rng, &mut q);
            for a4 in 0..2 {
                let mut direct = 0.0;
                for a1 in 0..2 {
                    for a2 in 0..2 {
                        for a3 in 0..2 {
                            let u = if a1 != a2 || a4 == a1 { 1.0 } else { 0.0 };
                            direct += q[a1 * 4 + a2 * 2 + a3] * u;
                        }
                    }
                }
                assert!((expected_u4(&g, &q, a4) - direct).abs() < 1e-12);
            }
        }
        let mut point = vec![0.0; 8];
        point[5] = 1.0;
        assert_eq!(expected_u4(&g, &point, 0), g.u4()[5 * 2]);
        let mut ind = vec![0.0; 16];
        ind[7] = 1.0;
        let g1 = StageGame::new([2; 4], ind, g.signals().clone()).unwrap();
        assert!((expected_u4(&g1, &[0.125; 8], 1) - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn fast_slack_matches_materialized() {
        let mut rng = rng_for(11, 0);
        for game in [perfect_monitoring(), noisy(), blind()] {
            for e in 1..=3 {
                let mut q = vec![0.0; 8];
                dirichlet_flat(&mut rng, &mut q);
                let n = [3, 2];
                let eval = SlackEval::new(&game, &q, e, n).unwrap();
                let w: Vec<Vec<f64>> = (0..8)
                    .map(|_| {
                        let mut r = vec![0.0; 6];
                        dirichlet_flat(&mut rng, &mut r);
                        r
                    })
                    .collect();
                let fast = eval.slack(&w);
                let wit = witness_from(&game, &q, e, n, &w, fast).unwrap();
                let slow = entropy_constraints_satisfied(&game, &wit).unwrap();
                assert!((fast - slow).abs() < 1e-9, "{fast} {slow}");
            }
        }
    }

    #[test]
    fn point_mass_is_feasible() {
        for game in [perfect_monitoring(), blind(), noisy()] {
            let mut q = vec![0.0; 8];
            q[6] = 1.0;
            for e in 1..=3 {
                match check_membership(&game, &q, e, SearchBudget::default(), 1).unwrap() {
                    Membership::Feasible(w) => {
                        assert!(w.slack >= 0.0);
                        assert!(entropy_constraints_satisfied(&game, &w).unwrap() >= -1e-12);
                    }
                    other => panic!("{other:?}"),
                }
            }
        }
    }

    #[test]
    fn perfect_monitoring_reduces_to_conditional_terms() {
        // a1 uniform and independent of a2 = a3 ~ Bern(0.1); both auxiliaries copy a1.
        let game = perfect_monitoring();
        let q = q_of(|_, a2, a3| {
            if a2 == a3 {
                0.5 * if a2 == 1 { 0.1 } else { 0.9 }
            } else {
                0.0
            }
        });
        let w: Vec<Vec<f64>> = (0..8)
            .map(|a| {
                let a1 = a / 4;
                let mut r = vec![0.0; 4];
                r[a1 * 2 + a1] = 1.0;
                r
            })
            .collect();
        let wit = witness_from(&game, &q, 1, [2, 2], &w, 0.0).unwrap();
        let slack = entropy_constraints_satisfied(&game, &wit).unwrap();
        // With s4 constant: H(A_k) <= I(U;A1 | A2, A3) = 1, and the sum
        // constraint gives 1 + 1 - 1 - 0 = 1 against 2 h(0.1).
        let h = crate::pmf::binary_entropy(0.1);
        assert!((slack - (1.0 - 2.0 * h)).abs() < 1e-9, "{slack}");
        assert!(slack > 0.0);
        let j = wit.q_tilde(&game).unwrap();
        let direct = j.conditional_mutual_information(&[AUX[0]], &[A1], &[A2, A3]).unwrap();
        assert!((direct - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fully_correlated_uniform_is_never_achievable() {
        // a1 = a2 = a3: every receiver action is already determined by the
        // other receiver's, so I(U;S_r,A_r) - I(U;A_r,A_r') <= 0 < H(A_r).
        let q = q_of(|a1, a2, a3| if a1 == a2 && a2 == a3 { 0.5 } else { 0.0 });
        for game in [perfect_monitoring(), noisy(), blind()] {
            for e in 1..=3 {
                match check_membership(&game, &q, e, SearchBudget::default(), 2).unwrap() {
                    Membership::NotFound { best_slack } => assert!(best_slack < -0.5),
                    other => panic!("{other:?}"),
                }
            }
        }
    }

    #[test]
    fn blind_uniform_correlated_not_found() {
        let q = q_of(|a1, a2, _| if a1 == a2 { 0.25 } else { 0.0 });
        for e in 1..=3 {
            assert!(!check_membership(&blind(), &q, e, SearchBudget::default(), 3)
                .unwrap()
                .is_feasible());
        }
    }

    #[test]
    fn zero_budget_gives_products_only() {
        let cfg = CandidateConfig {
            samples: 0,
            product_steps: 2,
            ..Default::default()
        };
        let c = build_q123(&noisy(), &cfg).unwrap();
        assert_eq!(c.len(), 27);
        assert!(c.iter().all(|c| c.origin == CandidateOrigin::Product));
    }

    #[test]
    fn dedup_merges_repeats() {
        // step 1 grids are the 2 pure actions, repeated products coincide.
        let cfg = CandidateConfig {
            samples: 0,
            product_steps: 1,
            ..Default::default()
        };
        assert_eq!(build_q123(&blind(), &cfg).unwrap().len(), 8);
        assert_eq!(simplex_grid(3, 2).len(), 6);
    }

    #[test]
    fn perfect_monitoring_admits_correlated_candidates() {
        let cfg = CandidateConfig {
            samples: 64,
            product_steps: 2,
            ..Default::default()
        };
        let c = build_q123(&perfect_monitoring(), &cfg).unwrap();
        let correlated = c
            .iter()
            .filter(|c| matches!(c.origin, CandidateOrigin::Achievable { .. }))
            .count();
        assert!(correlated > 0);
    }

    #[test]
    fn constant_utility() {
        for c in [-2.5, 0.0, 3.0] {
            let g = constant(c);
            let r = minmax_upper_bound(
                &g,
                build_q123(
                    &g,
                    &CandidateConfig {
                        samples: 4,
                        product_steps: 2,
                        ..Default::default()
                    },
                )
                .unwrap(),
            )
            .unwrap();
            assert_eq!(r.nu, c);
        }
    }

    #[test]
    fn single_action_for_player_four() {
        let g = blind();
        let u: Vec<f64> = g.u4().iter().step_by(2).copied().collect();
        let g1 = StageGame::new([2, 2, 2, 1], u, g.signals().clone()).unwrap();
        let mut rng = rng_for(5, 0);
        let qs: Vec<Vec<f64>> = (0..10)
            .map(|_| {
                let mut q = vec![0.0; 8];
                dirichlet_flat(&mut rng, &mut q);
                q
            })
            .collect();
        let direct = qs.iter().map(|q| expected_u4(&g1, q, 0)).fold(f64::INFINITY, f64::min);
        let r = minmax_upper_bound(&g1, candidates(qs)).unwrap();
        assert!((r.nu - direct).abs() < 1e-9);
    }

    #[test]
    fn matching_pennies_value_zero() {
        let g = perfect_monitoring();
        let r = solve_game(
            &g,
            &CandidateConfig {
                samples: 8,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.nu.abs() < 1e-9, "{}", r.nu);
        assert!(full_correlation_oracle(&g).unwrap().abs() < 1e-9);
    }

    #[test]
    fn lp_optimality_and_complementary_slackness() {
        let g = noisy();
        let r = solve_game(
            &g,
            &CandidateConfig {
                samples: 16,
                product_steps: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.oracle_gap <= 1e-7, "{}", r.oracle_gap);
        assert!(r.duality_gap.abs() <= 1e-7);
        // Candidates in the support are best replies to player 4's mix.
        for (c, w) in r.candidates.iter().zip(&r.weights) {
            let v: f64 = (0..2).map(|a4| r.punished_mix[a4] * expected_u4(&g, &c.q, a4)).sum();
            assert!(v >= r.nu - 1e-7);
            if *w > 1e-6 {
                assert!((v - r.nu).abs() < 1e-6, "{v} {}", r.nu);
            }
        }
    }

    #[test]
    fn blind_game_sits_between_oracles() {
        let g = blind();
        let steps = 10;
        let r = solve_game(
            &g,
            &CandidateConfig {
                samples: 16,
                product_steps: steps,
                ..Default::default()
            },
        )
        .unwrap();
        let upper = product_grid_oracle(&g, steps);
        let lower = full_correlation_oracle(&g).unwrap();
        assert!(r.nu <= upper + 1e-9 && r.nu >= lower - 1e-9);
        assert!((lower - 0.5).abs() < 1e-9);
        assert!((upper - 0.75).abs() < 1e-9);
    }

    #[test]
    fn empty_candidates_rejected() {
        assert!(minmax_upper_bound(&blind(), vec![]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = noisy();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(StageGame::from_json(&s).unwrap(), g);
        let bad = s.replace("\"s4\"", "\"z\"");
        assert!(StageGame::from_json(&bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lp_matches_lower_envelope(seed in any::<u64>(), k in 1usize..12) {
            let g = blind();
            let mut rng = rng_for(seed, 0);
            let u: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g = StageGame::new([2; 4], u, g.signals().clone()).unwrap();
            let qs: Vec<Vec<f64>> = (0..k).map(|_| { let mut q = vec![0.0; 8]; dirichlet_flat(&mut rng, &mut q); q }).collect();
            let pay: Vec<[f64; 2]> = qs.iter().map(|q| [expected_u4(&g, q, 0), expected_u4(&g, q, 1)]).collect();
            let r = minmax_upper_bound(&g, candidates(qs)).unwrap();
            prop_assert!((r.nu - envelope_oracle(&pay)).abs() < 1e-7);
            prop_assert!(r.oracle_gap <= 1e-7);
        }

        #[test]
        fn adding_candidates_never_raises_nu(seed in any::<u64>()) {
            let g = blind();
            let mut rng = rng_for(seed, 1);
            let qs: Vec<Vec<f64>> = (0..8).map(|_| { let mut q = vec![0.0; 8]; dirichlet_flat(&mut rng, &mut q); q }).collect();
            let small = minmax_upper_bound(&g, candidates(qs[..4].to_vec())).unwrap().nu;
            let large = minmax_upper_bound(&g, candidates(qs)).unwrap().nu;
            prop_assert!(large <= small + 1e-9);
        }
    }
}
