//! The broadcast wiretap channel with two-sided state information, and the
//! joint law induced by an auxiliary policy.
//!
//! Axis names are fixed: states `s1`, `s2`; input `x`; legitimate outputs
//! `y1`, `y2`; eavesdropper output `z`; auxiliaries `u1`, `u2`. A component
//! can be switched off by giving its axis size 1.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::{Alphabet, ConditionalPmf, Pmf};
use crate::random::{rng_for, sample_index, SimRng};

pub const U1: &str = "u1";
pub const U2: &str = "u2";
pub const X: &str = "x";
pub const S1: &str = "s1";
pub const S2: &str = "s2";
pub const Y1: &str = "y1";
pub const Y2: &str = "y2";
pub const Z: &str = "z";

/// Axis order of every [`FullJoint`].
pub const JOINT_AXES: [&str; 8] = [U1, U2, X, S1, S2, Y1, Y2, Z];

pub const SCHEMA_VERSION: u32 = 1;

fn same_names(found: &[Alphabet], want: &[&str]) -> Result<()> {
    for w in want {
        if !found.iter().any(|a| a.name == *w) {
            return Err(Error::MissingAxis((*w).into()));
        }
    }
    if let Some(extra) = found.iter().find(|a| !want.contains(&a.name.as_str())) {
        return Err(Error::UnknownAxis(extra.name.clone()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelRepr", into = "ChannelRepr")]
pub struct ChannelSpec {
    state_dist: Pmf,
    transition: ConditionalPmf,
}

#[derive(Serialize, Deserialize)]
struct ChannelRepr {
    #[serde(default = "default_schema")]
    schema_version: u32,
    state_dist: Pmf,
    transition: ConditionalPmf,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

impl TryFrom<ChannelRepr> for ChannelSpec {
    type Error = Error;
    fn try_from(r: ChannelRepr) -> Result<Self> {
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported schema_version {}",
                r.schema_version
            )));
        }
        ChannelSpec::new(r.state_dist, r.transition)
    }
}

impl From<ChannelSpec> for ChannelRepr {
    fn from(c: ChannelSpec) -> Self {
        ChannelRepr {
            schema_version: SCHEMA_VERSION,
            state_dist: c.state_dist,
            transition: c.transition,
        }
    }
}

impl ChannelSpec {
    /// `state_dist` over `{s1, s2}` and `transition` = T(y1, y2, z | x, s1, s2);
    /// axes are put into canonical order.
    pub fn new(state_dist: Pmf, transition: ConditionalPmf) -> Result<Self> {
        same_names(state_dist.axes(), &[S1, S2])?;
        same_names(transition.given_axes(), &[X, S1, S2])?;
        same_names(transition.output_axes(), &[Y1, Y2, Z])?;
        let state_dist = state_dist.reorder(&[S1, S2])?;
        let transition = transition.reorder(&[X, S1, S2], &[Y1, Y2, Z])?;
        for (k, name) in [S1, S2].iter().enumerate() {
            let expected = state_dist.axes()[k].size;
            let found = transition.given_axes()[k + 1].size;
            if expected != found {
                return Err(Error::AxisMismatch {
                    axis: (*name).into(),
                    expected,
                    found,
                });
            }
        }
        Ok(Self { state_dist, transition })
    }

    pub fn state_dist(&self) -> &Pmf {
        &self.state_dist
    }

    pub fn transition(&self) -> &ConditionalPmf {
        &self.transition
    }

    pub fn x_size(&self) -> usize {
        self.transition.given_axes()[0].size
    }

    /// `[|S1|, |S2|]`.
    pub fn state_sizes(&self) -> [usize; 2] {
        [self.state_dist.axes()[0].size, self.state_dist.axes()[1].size]
    }

    /// `[|Y1|, |Y2|, |Z|]`.
    pub fn output_sizes(&self) -> [usize; 3] {
        let o = self.transition.output_axes();
        [o[0].size, o[1].size, o[2].size]
    }

    /// Same channel with the eavesdropper output passed through `garble`,
    /// a channel `z -> z'` (the new output keeps the name `z`).
    pub fn garble_eavesdropper(&self, garble: &ConditionalPmf) -> Result<ChannelSpec> {
        let zin = self.output_sizes()[2];
        if garble.given_len() != zin || garble.given_axes().len() != 1 {
            return Err(Error::InvalidParameter(
                "garbling channel must take the single eavesdropper axis".into(),
            ));
        }
        let zout = garble.output_len();
        let [y1, y2, _] = self.output_sizes();
        let mut table = Vec::with_capacity(self.transition.given_len() * y1 * y2 * zout);
        for g in 0..self.transition.given_len() {
            let row = self.transition.slice(g);
            for y in 0..y1 * y2 {
                for zo in 0..zout {
                    table.push((0..zin).map(|zi| row[y * zin + zi] * garble.slice(zi)[zo]).sum());
                }
            }
        }
        let mut out = self.transition.output_axes().to_vec();
        out[2] = Alphabet::new(Z, zout);
        let transition = ConditionalPmf::new(self.transition.given_axes().to_vec(), out, table)?;
        ChannelSpec::new(self.state_dist.clone(), transition)
    }
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<ChannelSpec> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn save_channel(spec: &ChannelSpec, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(spec)?)?;
    Ok(())
}

/// `P(u1, u2, x | s1, s2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConditionalPmf", into = "ConditionalPmf")]
pub struct AuxPolicy {
    policy: ConditionalPmf,
}

impl TryFrom<ConditionalPmf> for AuxPolicy {
    type Error = Error;
    fn try_from(c: ConditionalPmf) -> Result<Self> {
        AuxPolicy::new(c)
    }
}

impl From<AuxPolicy> for ConditionalPmf {
    fn from(p: AuxPolicy) -> Self {
        p.policy
    }
}

impl AuxPolicy {
    pub fn new(policy: ConditionalPmf) -> Result<Self> {
        same_names(policy.given_axes(), &[S1, S2])?;
        same_names(policy.output_axes(), &[U1, U2, X])?;
        Ok(Self {
            policy: policy.reorder(&[S1, S2], &[U1, U2, X])?,
        })
    }

    /// Builds a policy from its flat table (given-major over `(s1, s2)`, then `(u1, u2, x)`).
    pub fn from_table(state_sizes: [usize; 2], aux_sizes: [usize; 2], x_size: usize, table: Vec<f64>) -> Result<Self> {
        Self::new(ConditionalPmf::new(
            vec![Alphabet::new(S1, state_sizes[0]), Alphabet::new(S2, state_sizes[1])],
            vec![
                Alphabet::new(U1, aux_sizes[0]),
                Alphabet::new(U2, aux_sizes[1]),
                Alphabet::new(X, x_size),
            ],
            table,
        )?)
    }

    pub(crate) fn from_table_unchecked(
        state_sizes: [usize; 2],
        aux_sizes: [usize; 2],
        x_size: usize,
        table: Vec<f64>,
    ) -> Self {
        Self {
            policy: ConditionalPmf::from_parts(
                vec![Alphabet::new(S1, state_sizes[0]), Alphabet::new(S2, state_sizes[1])],
                vec![
                    Alphabet::new(U1, aux_sizes[0]),
                    Alphabet::new(U2, aux_sizes[1]),
                    Alphabet::new(X, x_size),
                ],
                table,
            ),
        }
    }

    pub fn policy(&self) -> &ConditionalPmf {
        &self.policy
    }

    pub fn aux_sizes(&self) -> [usize; 2] {
        let o = self.policy.output_axes();
        [o[0].size, o[1].size]
    }

    pub fn x_size(&self) -> usize {
        self.policy.output_axes()[2].size
    }
}

/// `Q(u1, u2, x, s1, s2, y1, y2, z) = P_s(s1, s2) P(u1, u2, x | s1, s2) T(y1, y2, z | x, s1, s2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FullJoint {
    joint: Pmf,
}

impl FullJoint {
    pub fn pmf(&self) -> &Pmf {
        &self.joint
    }

    pub fn size_of(&self, axis: &str) -> usize {
        self.joint.size_of(axis).expect("canonical axis")
    }

    pub fn mi(&self, a: &[&str], b: &[&str]) -> f64 {
        self.joint.mutual_information(a, b).expect("canonical axes")
    }

    pub fn cmi(&self, a: &[&str], b: &[&str], c: &[&str]) -> f64 {
        self.joint
            .conditional_mutual_information(a, b, c)
            .expect("canonical axes")
    }
}

pub fn build_full_joint(spec: &ChannelSpec, pol: &AuxPolicy) -> Result<FullJoint> {
    let [s1n, s2n] = spec.state_sizes();
    let pg = pol.policy.given_axes();
    for (k, (name, expected)) in [(S1, s1n), (S2, s2n)].into_iter().enumerate() {
        if pg[k].size != expected {
            return Err(Error::AxisMismatch {
                axis: name.into(),
                expected,
                found: pg[k].size,
            });
        }
    }
    if pol.x_size() != spec.x_size() {
        return Err(Error::AxisMismatch {
            axis: X.into(),
            expected: spec.x_size(),
            found: pol.x_size(),
        });
    }
    let [u1n, u2n] = pol.aux_sizes();
    let xn = spec.x_size();
    let out_len = spec.transition.output_len();
    let ns = s1n * s2n;
    let mut table = vec![0.0; u1n * u2n * xn * ns * out_len];
    for s in 0..ns {
        let ps = spec.state_dist.table()[s];
        if ps == 0.0 {
            continue;
        }
        let prow = pol.policy.slice(s);
        for (ux, &pu) in prow.iter().enumerate() {
            let w = ps * pu;
            if w == 0.0 {
                continue;
            }
            let x = ux % xn;
            let trow = spec.transition.slice(x * ns + s);
            let base = (ux * ns + s) * out_len;
            for (o, t) in trow.iter().enumerate() {
                table[base + o] = w * t;
            }
        }
    }
    let [y1n, y2n, zn] = spec.output_sizes();
    let axes = [u1n, u2n, xn, s1n, s2n, y1n, y2n, zn]
        .iter()
        .zip(JOINT_AXES)
        .map(|(&n, name)| Alphabet::new(name, n))
        .collect();
    Ok(FullJoint {
        joint: Pmf::from_parts(axes, table),
    })
}

/// Draws i.i.d. state blocks and passes input blocks through the
/// memoryless channel. One sampler per thread; it owns its generator.
pub struct MemorylessSampler<'a> {
    spec: &'a ChannelSpec,
    n: usize,
    rng: SimRng,
}

/// Channel output block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outputs {
    pub y1: Vec<u8>,
    pub y2: Vec<u8>,
    pub z: Vec<u8>,
}

pub fn memoryless_extend(spec: &ChannelSpec, n: usize, seed: u64) -> Result<MemorylessSampler<'_>> {
    MemorylessSampler::new(spec, n, seed)
}

impl<'a> MemorylessSampler<'a> {
    pub fn new(spec: &'a ChannelSpec, n: usize, seed: u64) -> Result<Self> {
        Self::with_rng(spec, n, rng_for(seed, 0))
    }

    pub fn with_rng(spec: &'a ChannelSpec, n: usize, rng: SimRng) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("blocklength must be at least 1".into()));
        }
        Ok(Self { spec, n, rng })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rng(&mut self) -> &mut SimRng {
        &mut self.rng
    }

    /// `(s1^n, s2^n)` drawn i.i.d. from `P_s`.
    pub fn sample_states(&mut self) -> (Vec<u8>, Vec<u8>) {
        let s2n = self.spec.state_sizes()[1];
        let mut s1 = Vec::with_capacity(self.n);
        let mut s2 = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let s = sample_index(&mut self.rng, self.spec.state_dist.table());
            s1.push((s / s2n) as u8);
            s2.push((s % s2n) as u8);
        }
        (s1, s2)
    }

    pub fn transmit(&mut self, x: &[u8], s1: &[u8], s2: &[u8]) -> Result<Outputs> {
        for v in [x, s1, s2] {
            if v.len() != self.n {
                return Err(Error::LengthMismatch {
                    expected: self.n,
                    found: v.len(),
                });
            }
        }
        let [s1n, s2n] = self.spec.state_sizes();
        let [_, y2n, zn] = self.spec.output_sizes();
        let mut out = Outputs {
            y1: Vec::with_capacity(self.n),
            y2: Vec::with_capacity(self.n),
            z: Vec::with_capacity(self.n),
        };
        for i in 0..self.n {
            let g = (x[i] as usize * s1n + s1[i] as usize) * s2n + s2[i] as usize;
            let o = sample_index(&mut self.rng, self.spec.transition.slice(g));
            out.y1.push((o / (y2n * zn)) as u8);
            out.y2.push((o / zn % y2n) as u8);
            out.z.push((o % zn) as u8);
        }
        Ok(out)
    }

    pub fn uniform_below(&mut self, m: usize) -> usize {
        self.rng.random_range(0..m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::axes;

    pub(crate) fn binary_copy_channel() -> ChannelSpec {
        let ps = Pmf::point_mass(axes(&[(S1, 1), (S2, 1)]), &[0, 0]).unwrap();
        let t = ConditionalPmf::from_fn(
            axes(&[(X, 2), (S1, 1), (S2, 1)]),
            axes(&[(Y1, 2), (Y2, 2), (Z, 2)]),
            |g, o| (o.iter().all(|&v| v == g[0])) as u8 as f64,
        )
        .unwrap();
        ChannelSpec::new(ps, t).unwrap()
    }

    #[test]
    fn uniform_independent_joint() {
        let ps = Pmf::uniform(axes(&[(S1, 2), (S2, 2)])).unwrap();
        let t = ConditionalPmf::constant(
            axes(&[(X, 2), (S1, 2), (S2, 2)]),
            &Pmf::uniform(axes(&[(Y1, 2), (Y2, 2), (Z, 2)])).unwrap(),
        )
        .unwrap();
        let spec = ChannelSpec::new(ps, t).unwrap();
        let pol = AuxPolicy::from_table([2, 2], [2, 2], 2, vec![0.125; 32]).unwrap();
        let j = build_full_joint(&spec, &pol).unwrap();
        assert_eq!(j.pmf().table().len(), 256);
        assert!(j.pmf().table().iter().all(|&v| (v - 1.0 / 256.0).abs() < 1e-15));
    }

    #[test]
    fn copy_chain_support() {
        let spec = binary_copy_channel();
        // u1 = u2 = x, uniform
        let pol = AuxPolicy::from_table([1, 1], [2, 2], 2, {
            let mut t = vec![0.0; 8];
            t[0] = 0.5;
            t[7] = 0.5;
            t
        })
        .unwrap();
        let j = build_full_joint(&spec, &pol).unwrap();
        let support = j.pmf().table().iter().filter(|&&v| v > 0.0).count();
        assert_eq!(support, 2);
    }

    #[test]
    fn size_mismatch_names_axis() {
        let spec = binary_copy_channel();
        let pol = AuxPolicy::from_table([1, 1], [1, 1], 3, vec![1.0 / 3.0; 3]).unwrap();
        match build_full_joint(&spec, &pol) {
            Err(Error::AxisMismatch { axis, .. }) => assert_eq!(axis, "x"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn axes_reordered_to_canonical() {
        let ps = Pmf::new(axes(&[(S2, 1), (S1, 2)]), vec![0.3, 0.7]).unwrap();
        let t = ConditionalPmf::constant(
            axes(&[(S2, 1), (X, 2), (S1, 2)]),
            &Pmf::uniform(axes(&[(Z, 2), (Y1, 1), (Y2, 1)])).unwrap(),
        )
        .unwrap();
        let spec = ChannelSpec::new(ps, t).unwrap();
        assert_eq!(spec.state_dist().axes()[0].name, S1);
        assert_eq!(spec.state_sizes(), [2, 1]);
        assert_eq!(spec.output_sizes(), [1, 1, 2]);
    }

    #[test]
    fn missing_axis_rejected() {
        let ps = Pmf::uniform(axes(&[(S1, 1), (S2, 1)])).unwrap();
        let t = ConditionalPmf::constant(
            axes(&[(X, 2), (S1, 1), (S2, 1)]),
            &Pmf::uniform(axes(&[(Y1, 2), (Y2, 2)])).unwrap(),
        )
        .unwrap();
        match ChannelSpec::new(ps, t) {
            Err(Error::MissingAxis(a)) => assert_eq!(a, "z"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sampler_is_deterministic() {
        let ps = Pmf::uniform(axes(&[(S1, 2), (S2, 3)])).unwrap();
        let t = ConditionalPmf::constant(
            axes(&[(X, 2), (S1, 2), (S2, 3)]),
            &Pmf::uniform(axes(&[(Y1, 2), (Y2, 2), (Z, 2)])).unwrap(),
        )
        .unwrap();
        let spec = ChannelSpec::new(ps, t).unwrap();
        let run = || {
            let mut s = memoryless_extend(&spec, 50, 9).unwrap();
            let (a, b) = s.sample_states();
            let o = s.transmit(&[1; 50], &a, &b).unwrap();
            (a, b, o)
        };
        assert_eq!(run(), run());
        assert!(memoryless_extend(&spec, 0, 1).is_err());
    }

    #[test]
    fn constant_state_sequences() {
        let spec = binary_copy_channel();
        let mut s = memoryless_extend(&spec, 20, 3).unwrap();
        let (a, b) = s.sample_states();
        assert!(a.iter().chain(&b).all(|&v| v == 0));
        let o = s.transmit(&[1; 20], &a, &b).unwrap();
        assert_eq!(o.y1, vec![1; 20]);
        assert!(s.transmit(&[1; 3], &a, &b).is_err());
    }
}
