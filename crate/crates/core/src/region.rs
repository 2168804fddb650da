//! Secrecy rate bounds for a fixed auxiliary policy, and the policy search
//! that assembles the time-sharing region.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{build_full_joint, AuxPolicy, ChannelSpec, FullJoint, S1, S2, U1, U2, Y1, Y2, Z};
use crate::error::{Error, Result};
use crate::geometry::{Point, RegionPolygon, HULL_TOL};
use crate::pmf::entropy_bits;
use crate::random::{dirichlet_flat, rng_for};

/// The three bounds on `R1`, `R2` and `R1 + R2`, clipped at zero, with the
/// unclipped values kept for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateBounds {
    pub b1: f64,
    pub b2: f64,
    pub b12: f64,
    pub raw_b1: f64,
    pub raw_b2: f64,
    pub raw_b12: f64,
}

impl RateBounds {
    pub fn from_raw(raw_b1: f64, raw_b2: f64, raw_b12: f64) -> Self {
        Self {
            b1: raw_b1.max(0.0),
            b2: raw_b2.max(0.0),
            b12: raw_b12.max(0.0),
            raw_b1,
            raw_b2,
            raw_b12,
        }
    }

    pub const ZERO: RateBounds = RateBounds {
        b1: 0.0,
        b2: 0.0,
        b12: 0.0,
        raw_b1: 0.0,
        raw_b2: 0.0,
        raw_b12: 0.0,
    };
}

/// Every mutual information that enters the bounds and the binning rates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiTerms {
    /// `I(U1; Y1, S1)`
    pub u1_y1s1: f64,
    /// `I(U2; Y2, S2)`
    pub u2_y2s2: f64,
    pub u1_z: f64,
    pub u2_z: f64,
    /// `I(U1; S1, S2)`
    pub u1_s: f64,
    pub u2_s: f64,
    pub u1_u2: f64,
    /// `I(U1, U2; Z)`
    pub u12_z: f64,
    /// `I(U1, U2; S1, S2)`
    pub u12_s: f64,
}

impl MiTerms {
    pub fn of(j: &FullJoint) -> Self {
        let p = j.pmf();
        let j7 = p.marginalize(&[U1, U2, S1, S2, Y1, Y2, Z]).expect("canonical axes");
        let a = j7.marginalize(&[U1, U2, S1, S2, Z]).expect("canonical axes");
        let b = j7.marginalize(&[U1, S1, Y1]).expect("canonical axes");
        let c = j7.marginalize(&[U2, S2, Y2]).expect("canonical axes");
        let h = |pm: &crate::pmf::Pmf, over: &[&str]| entropy_bits(pm.marginalize(over).expect("axes").table());
        let h_u1 = h(&a, &[U1]);
        let h_u2 = h(&a, &[U2]);
        let h_z = h(&a, &[Z]);
        let h_s = h(&a, &[S1, S2]);
        let h_u12 = h(&a, &[U1, U2]);
        Self {
            u1_y1s1: h_u1 + h(&b, &[S1, Y1]) - entropy_bits(b.table()),
            u2_y2s2: h_u2 + h(&c, &[S2, Y2]) - entropy_bits(c.table()),
            u1_z: h_u1 + h_z - h(&a, &[U1, Z]),
            u2_z: h_u2 + h_z - h(&a, &[U2, Z]),
            u1_s: h_u1 + h_s - h(&a, &[U1, S1, S2]),
            u2_s: h_u2 + h_s - h(&a, &[U2, S1, S2]),
            u1_u2: h_u1 + h_u2 - h_u12,
            u12_z: h_u12 + h_z - h(&a, &[U1, U2, Z]),
            u12_s: h_u12 + h_s - entropy_bits(a.marginalize(&[U1, U2, S1, S2]).expect("axes").table()),
        }
    }

    pub fn bounds(&self) -> RateBounds {
        RateBounds::from_raw(
            self.u1_y1s1 - self.u1_z.max(self.u1_s),
            self.u2_y2s2 - self.u2_z.max(self.u2_s),
            self.u1_y1s1 + self.u2_y2s2 - self.u1_u2 - self.u12_z.max(self.u12_s),
        )
    }
}

pub fn rate_bounds(j: &FullJoint) -> RateBounds {
    MiTerms::of(j).bounds()
}

/// The feasible set `{0 <= R1 <= b1, 0 <= R2 <= b2, R1 + R2 <= b12}`.
pub fn region_from_bounds(b: &RateBounds) -> RegionPolygon {
    let r1 = b.b1.min(b.b12);
    let r2 = b.b2.min(b.b12);
    let pts = if b.b12 >= r1 + r2 {
        vec![[r1, 0.0], [r1, r2], [0.0, r2]]
    } else {
        vec![[r1, 0.0], [r1, b.b12 - r1], [b.b12 - r2, r2], [0.0, r2]]
    };
    RegionPolygon::hull_of(&pts)
}

/// `min(a - c, a - d)`, the form in which the single-user reductions are usually written.
pub fn secrecy_min_form(a: f64, c: f64, d: f64) -> f64 {
    (a - c).min(a - d)
}

/// `a - max(c, d)`, the form used by the bounds above.
pub fn secrecy_max_form(a: f64, c: f64, d: f64) -> f64 {
    a - c.max(d)
}

fn ensure_degenerate(j: &FullJoint, axes: &[&str]) -> Result<()> {
    for a in axes {
        if j.size_of(a) != 1 {
            return Err(Error::InvalidParameter(format!(
                "axis `{a}` must have size 1 for the single-user reduction"
            )));
        }
    }
    Ok(())
}

/// Single-user wiretap bound with encoder-only state knowledge:
/// `min(I(U1;Y1) - I(U1;S1,S2), I(U1;Y1) - I(U1;Z))`. The receiver uses
/// `Y1` alone, and `(S1, S2)` act as one state.
pub fn single_user_secrecy_bound(j: &FullJoint) -> Result<f64> {
    ensure_degenerate(j, &[U2, Y2, S2])?;
    let a = j.mi(&[U1], &[Y1]);
    Ok(secrecy_min_form(a, j.mi(&[U1], &[S1, S2]), j.mi(&[U1], &[Z])))
}

/// Max-form twin of [`single_user_secrecy_bound`], same conventions.
pub fn single_user_secrecy_max_form(j: &FullJoint) -> Result<f64> {
    ensure_degenerate(j, &[U2, Y2, S2])?;
    let a = j.mi(&[U1], &[Y1]);
    Ok(secrecy_max_form(a, j.mi(&[U1], &[Z]), j.mi(&[U1], &[S1, S2])))
}

pub const LAMBDAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// `None` uses `|X| |S1| |S2|` for both auxiliaries.
    pub aux_sizes: Option<[usize; 2]>,
    pub sample_budget: usize,
    pub refinement_iterations: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            aux_sizes: None,
            sample_budget: 1000,
            refinement_iterations: 400,
            seed: 0,
            tolerance: HULL_TOL,
        }
    }
}

impl SearchConfig {
    pub fn resolved_aux_sizes(&self, spec: &ChannelSpec) -> [usize; 2] {
        let [s1, s2] = spec.state_sizes();
        self.aux_sizes.unwrap_or([spec.x_size() * s1 * s2; 2])
    }

    fn validate(&self) -> Result<()> {
        if self.sample_budget == 0 {
            return Err(Error::InvalidParameter("sample budget must be at least 1".into()));
        }
        if let Some([a, b]) = self.aux_sizes {
            if a == 0 || b == 0 {
                return Err(Error::InvalidParameter("auxiliary sizes must be at least 1".into()));
            }
        }
        Ok(())
    }
}

/// Where a candidate policy came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyOrigin {
    Sample { index: usize },
    Refined { start: usize, lambda: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtremePoint {
    pub vertex: Point,
    pub bounds: RateBounds,
    pub origin: PolicyOrigin,
    pub policy: AuxPolicy,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchResult {
    pub region: RegionPolygon,
    pub aux_sizes: [usize; 2],
    pub evaluated: usize,
    /// One entry per region vertex other than the origin.
    pub extremes: Vec<ExtremePoint>,
}

struct Shape {
    states: [usize; 2],
    aux: [usize; 2],
    x: usize,
}

impl Shape {
    fn slices(&self) -> usize {
        self.states[0] * self.states[1]
    }
    fn cells(&self) -> usize {
        self.aux[0] * self.aux[1] * self.x
    }
    fn policy(&self, table: Vec<f64>) -> AuxPolicy {
        AuxPolicy::from_table_unchecked(self.states, self.aux, self.x, table)
    }
}

fn evaluate(spec: &ChannelSpec, shape: &Shape, table: &[f64]) -> RateBounds {
    let pol = shape.policy(table.to_vec());
    let j = build_full_joint(spec, &pol).expect("shapes agree by construction");
    rate_bounds(&j)
}

fn sample_table(shape: &Shape, seed: u64, index: usize) -> Vec<f64> {
    let mut rng = rng_for(seed, index as u64);
    let mut table = vec![0.0; shape.slices() * shape.cells()];
    for slice in table.chunks_mut(shape.cells()) {
        dirichlet_flat(&mut rng, slice);
    }
    table
}

fn objective(b: &RateBounds, lambda: f64) -> f64 {
    region_from_bounds(b).support(lambda)
}

/// Hill climbing by mass transfers inside one conditional slice at a time.
fn refine(
    spec: &ChannelSpec,
    shape: &Shape,
    start: Vec<f64>,
    lambda: f64,
    iterations: usize,
    seed: u64,
) -> (Vec<f64>, RateBounds) {
    let mut rng = rng_for(seed, 0);
    let mut cur = start;
    let mut cur_b = evaluate(spec, shape, &cur);
    let mut cur_f = objective(&cur_b, lambda);
    let cells = shape.cells();
    if cells < 2 {
        return (cur, cur_b);
    }
    let mut step = 0.5;
    let mut fails = 0usize;
    for _ in 0..iterations {
        let s = rng.random_range(0..shape.slices());
        let base = s * cells;
        let i = base + rng.random_range(0..cells);
        let mut k = base + rng.random_range(0..cells - 1);
        if k >= i {
            k += 1;
        }
        if cur[i] <= 0.0 {
            continue;
        }
        let amount = if rng.random_bool(0.25) { cur[i] } else { step * cur[i] };
        let mut cand = cur.clone();
        cand[i] -= amount;
        cand[k] += amount;
        let b = evaluate(spec, shape, &cand);
        let f = objective(&b, lambda);
        if f > cur_f + 1e-15 {
            cur = cand;
            cur_b = b;
            cur_f = f;
        } else {
            fails += 1;
            if fails.is_multiple_of(64) {
                step = (step * 0.5).max(1e-4);
            }
        }
    }
    (cur, cur_b)
}

/// Random policy sampling followed by local refinement of the first sample
/// and of the best sample for each weight in [`LAMBDAS`]. Sample `i` always
/// uses the same generator stream, so a larger budget only adds candidates.
pub fn search_region(spec: &ChannelSpec, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    let [s1, s2] = spec.state_sizes();
    let shape = Shape {
        states: [s1, s2],
        aux: cfg.resolved_aux_sizes(spec),
        x: spec.x_size(),
    };
    let sample_seed = crate::random::derive_seed(cfg.seed, 1);
    let refine_seed = crate::random::derive_seed(cfg.seed, 2);

    let sampled: Vec<RateBounds> = (0..cfg.sample_budget)
        .into_par_iter()
        .map(|i| evaluate(spec, &shape, &sample_table(&shape, sample_seed, i)))
        .collect();

    let mut starts = vec![0usize];
    for &l in &LAMBDAS {
        let best = sampled.iter().enumerate().map(|(i, b)| (i, objective(b, l))).fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, f)| if f > acc.1 { (i, f) } else { acc },
        );
        if !starts.contains(&best.0) {
            starts.push(best.0);
        }
    }
    let tasks: Vec<(usize, usize)> = starts
        .iter()
        .flat_map(|&s| (0..LAMBDAS.len()).map(move |l| (s, l)))
        .collect();
    let refined: Vec<(Vec<f64>, RateBounds)> = tasks
        .par_iter()
        .map(|&(s, l)| {
            let stream = (s as u64) * LAMBDAS.len() as u64 + l as u64;
            refine(
                spec,
                &shape,
                sample_table(&shape, sample_seed, s),
                LAMBDAS[l],
                cfg.refinement_iterations,
                crate::random::derive_seed(refine_seed, stream),
            )
        })
        .collect();

    let mut candidates: Vec<(RateBounds, PolicyOrigin)> = sampled
        .iter()
        .enumerate()
        .map(|(i, b)| (*b, PolicyOrigin::Sample { index: i }))
        .collect();
    for ((s, l), (_, b)) in tasks.iter().zip(&refined) {
        candidates.push((
            *b,
            PolicyOrigin::Refined {
                start: *s,
                lambda: LAMBDAS[*l],
            },
        ));
    }
    let pentagons: Vec<RegionPolygon> = candidates.iter().map(|(b, _)| region_from_bounds(b)).collect();
    let region = RegionPolygon::union_hull(&pentagons);

    let mut extremes = Vec::new();
    for &v in &region.vertices {
        if v == [0.0, 0.0] {
            continue;
        }
        let Some(k) = pentagons.iter().position(|p| {
            p.vertices
                .iter()
                .any(|q| (q[0] - v[0]).abs() <= cfg.tolerance && (q[1] - v[1]).abs() <= cfg.tolerance)
        }) else {
            continue;
        };
        let (bounds, origin) = candidates[k];
        let table = match origin {
            PolicyOrigin::Sample { index } => sample_table(&shape, sample_seed, index),
            PolicyOrigin::Refined { .. } => refined[k - sampled.len()].0.clone(),
        };
        extremes.push(ExtremePoint {
            vertex: v,
            bounds,
            origin,
            policy: shape.policy(table),
        });
    }
    Ok(SearchResult {
        region,
        aux_sizes: shape.aux,
        evaluated: candidates.len(),
        extremes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::X;
    use crate::pmf::{axes, ConditionalPmf, Pmf};

    fn noiseless(y2_copy: bool) -> ChannelSpec {
        let ps = Pmf::point_mass(axes(&[(S1, 1), (S2, 1)]), &[0, 0]).unwrap();
        let y2n = if y2_copy { 2 } else { 1 };
        let t = ConditionalPmf::from_fn(
            axes(&[(X, 2), (S1, 1), (S2, 1)]),
            axes(&[(Y1, 2), (Y2, y2n), (Z, 1)]),
            |g, o| (o[0] == g[0] && (!y2_copy || o[1] == g[0])) as u8 as f64,
        )
        .unwrap();
        ChannelSpec::new(ps, t).unwrap()
    }

    fn policy_u1_is_x(y_sizes: usize) -> AuxPolicy {
        let _ = y_sizes;
        // u1 = x uniform, u2 constant
        AuxPolicy::from_table([1, 1], [2, 1], 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap()
    }

    #[test]
    fn constant_aux_gives_zero() {
        let spec = noiseless(false);
        let pol = AuxPolicy::from_table([1, 1], [1, 1], 2, vec![0.5, 0.5]).unwrap();
        let b = rate_bounds(&build_full_joint(&spec, &pol).unwrap());
        assert_eq!((b.b1, b.b2, b.b12), (0.0, 0.0, 0.0));
    }

    #[test]
    fn clean_point_to_point() {
        let spec = noiseless(false);
        let b = rate_bounds(&build_full_joint(&spec, &policy_u1_is_x(1)).unwrap());
        assert!((b.b1 - 1.0).abs() < 1e-12);
        assert!((b.b12 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eavesdropper_sees_everything() {
        let ps = Pmf::point_mass(axes(&[(S1, 1), (S2, 1)]), &[0, 0]).unwrap();
        let t = ConditionalPmf::from_fn(
            axes(&[(X, 2), (S1, 1), (S2, 1)]),
            axes(&[(Y1, 2), (Y2, 1), (Z, 2)]),
            |g, o| (o[0] == g[0] && o[2] == g[0]) as u8 as f64,
        )
        .unwrap();
        let spec = ChannelSpec::new(ps, t).unwrap();
        let j = build_full_joint(&spec, &policy_u1_is_x(1)).unwrap();
        let b = rate_bounds(&j);
        assert!((j.mi(&[U1], &[Y1, S1]) - j.mi(&[U1], &[Z])).abs() < 1e-12);
        assert!(b.b1.abs() < 1e-12);
        assert!(b.raw_b1.abs() < 1e-12);
    }

    #[test]
    fn polygon_shapes() {
        let r = region_from_bounds(&RateBounds::from_raw(1.0, 1.0, 2.0));
        assert_eq!(r.vertices, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
        let r = region_from_bounds(&RateBounds::from_raw(1.0, 1.0, 1.0));
        assert_eq!(r.vertices, vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let r = region_from_bounds(&RateBounds::from_raw(1.0, 1.0, 1.5));
        assert_eq!(
            r.vertices,
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.5], [0.5, 1.0], [0.0, 1.0]]
        );
        // sum bound below both singles
        let r = region_from_bounds(&RateBounds::from_raw(2.0, 3.0, 1.0));
        assert_eq!(r.vertices, vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let r = region_from_bounds(&RateBounds::from_raw(-1.0, 0.5, 0.3));
        assert_eq!(r.vertices, vec![[0.0, 0.0], [0.0, 0.3]]);
    }

    #[test]
    fn pareto_of_shapes() {
        use crate::geometry::pareto_points;
        let p = pareto_points(&region_from_bounds(&RateBounds::from_raw(1.0, 1.0, 2.0)));
        assert_eq!(p, vec![[1.0, 1.0]]);
        let p = pareto_points(&region_from_bounds(&RateBounds::from_raw(1.0, 1.0, 1.0)));
        assert_eq!(p, vec![[0.0, 1.0], [1.0, 0.0]]);
        let p = pareto_points(&region_from_bounds(&RateBounds::from_raw(1.0, 1.0, 1.5)));
        assert_eq!(p, vec![[0.5, 1.0], [1.0, 0.5]]);
    }

    #[test]
    fn single_user_bound_requires_degenerate_second_user() {
        let spec = noiseless(true);
        let pol = AuxPolicy::from_table([1, 1], [2, 2], 2, vec![0.125; 8]).unwrap();
        let j = build_full_joint(&spec, &pol).unwrap();
        assert!(single_user_secrecy_bound(&j).is_err());
    }

    #[test]
    fn all_constant_channel_region_is_origin() {
        let ps = Pmf::point_mass(axes(&[(S1, 1), (S2, 1)]), &[0, 0]).unwrap();
        let t = ConditionalPmf::from_fn(
            axes(&[(X, 1), (S1, 1), (S2, 1)]),
            axes(&[(Y1, 1), (Y2, 1), (Z, 1)]),
            |_, _| 1.0,
        )
        .unwrap();
        let spec = ChannelSpec::new(ps, t).unwrap();
        let res = search_region(
            &spec,
            &SearchConfig {
                sample_budget: 20,
                refinement_iterations: 20,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(res.region.vertices, vec![[0.0, 0.0]]);
        assert!(res.extremes.is_empty());
    }

    #[test]
    fn zero_budget_rejected() {
        let spec = noiseless(false);
        let cfg = SearchConfig {
            sample_budget: 0,
            ..Default::default()
        };
        assert!(search_region(&spec, &cfg).is_err());
    }

    #[test]
    fn noiseless_two_output_reaches_one_bit() {
        let spec = noiseless(true);
        let res = search_region(
            &spec,
            &SearchConfig {
                sample_budget: 10_000,
                seed: 5,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(res.region.max_sum_rate() >= 0.98, "{:?}", res.region);
        for e in &res.extremes {
            let b = rate_bounds(&build_full_joint(&spec, &e.policy).unwrap());
            assert_eq!(b, e.bounds);
            assert!(region_from_bounds(&b).contains(e.vertex, 1e-12));
        }
    }
}
