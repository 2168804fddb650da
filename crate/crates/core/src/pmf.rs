//! Dense probability tables over named finite axes.
//!
//! A [`Pmf`] is a row-major table over the Cartesian product of its axes (the
//! last axis varies fastest). A [`ConditionalPmf`] stores one distribution over
//! its output axes per cell of its given axes, given-major. All information
//! quantities are in bits, with `0 log 0 = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a table (and of each conditional slice).
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    pub name: String,
    pub size: usize,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            size,
        }
    }
}

/// Shorthand for building axis lists: `axes(&[("x", 2), ("y", 3)])`.
pub fn axes(spec: &[(&str, usize)]) -> Vec<Alphabet> {
    spec.iter().map(|&(n, s)| Alphabet::new(n, s)).collect()
}

fn check_axes(axes: &[Alphabet]) -> Result<()> {
    for (i, a) in axes.iter().enumerate() {
        if a.size == 0 {
            return Err(Error::EmptyAxis(a.name.clone()));
        }
        if axes[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::DuplicateAxis(a.name.clone()));
        }
    }
    Ok(())
}

fn volume(axes: &[Alphabet]) -> usize {
    axes.iter().map(|a| a.size).product()
}

fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut s = vec![1; sizes.len()];
    for i in (0..sizes.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * sizes[i + 1];
    }
    s
}

/// For every flat cell of a table with `sizes`, the flat index obtained by
/// weighting each coordinate with `target_strides` (0 drops a coordinate).
fn index_map(sizes: &[usize], target_strides: &[usize]) -> Vec<usize> {
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut counter = vec![0usize; sizes.len()];
    let mut idx = 0usize;
    for _ in 0..total {
        out.push(idx);
        for d in (0..sizes.len()).rev() {
            counter[d] += 1;
            idx += target_strides[d];
            if counter[d] < sizes[d] {
                break;
            }
            idx -= target_strides[d] * sizes[d];
            counter[d] = 0;
        }
    }
    out
}

fn unflatten(mut flat: usize, sizes: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; sizes.len()];
    for d in (0..sizes.len()).rev() {
        idx[d] = flat % sizes[d];
        flat /= sizes[d];
    }
    idx
}

fn describe_cell(axes: &[Alphabet], flat: usize) -> String {
    let sizes: Vec<usize> = axes.iter().map(|a| a.size).collect();
    let idx = unflatten(flat, &sizes);
    let parts: Vec<String> = axes.iter().zip(idx).map(|(a, i)| format!("{}={}", a.name, i)).collect();
    format!("({})", parts.join(", "))
}

fn check_entries(axes: &[Alphabet], table: &[f64]) -> Result<()> {
    for (i, &v) in table.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidEntry {
                location: describe_cell(axes, i),
                value: v,
            });
        }
    }
    Ok(())
}

/// `-sum p log2 p` over a (not necessarily normalized) table.
pub fn entropy_bits(table: &[f64]) -> f64 {
    table.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_bits(&[p, 1.0 - p])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfRepr", into = "PmfRepr")]
pub struct Pmf {
    axes: Vec<Alphabet>,
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PmfRepr {
    axes: Vec<Alphabet>,
    table: Vec<f64>,
}

impl TryFrom<PmfRepr> for Pmf {
    type Error = Error;
    fn try_from(r: PmfRepr) -> Result<Self> {
        Pmf::new(r.axes, r.table)
    }
}

impl From<Pmf> for PmfRepr {
    fn from(p: Pmf) -> Self {
        PmfRepr {
            axes: p.axes,
            table: p.table,
        }
    }
}

impl Pmf {
    pub fn new(axes: Vec<Alphabet>, table: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(axes, table, NORMALIZATION_TOL)
    }

    pub fn with_tolerance(axes: Vec<Alphabet>, table: Vec<f64>, tol: f64) -> Result<Self> {
        check_axes(&axes)?;
        let expected = volume(&axes);
        if table.len() != expected {
            return Err(Error::TableLength {
                expected,
                found: table.len(),
            });
        }
        check_entries(&axes, &table)?;
        let sum: f64 = table.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::NotNormalized {
                location: "table".into(),
                sum,
            });
        }
        Ok(Self { axes, table })
    }

    /// Trusted constructor for tables produced by this crate's own algebra.
    pub(crate) fn from_parts(axes: Vec<Alphabet>, table: Vec<f64>) -> Self {
        debug_assert_eq!(volume(&axes), table.len());
        Self { axes, table }
    }

    /// Builds a table from unnormalized weights, rescaling to unit mass.
    pub fn from_weights(axes: Vec<Alphabet>, mut table: Vec<f64>) -> Result<Self> {
        check_axes(&axes)?;
        check_entries(&axes, &table)?;
        let sum: f64 = table.iter().sum();
        if sum <= 0.0 {
            return Err(Error::NotNormalized {
                location: "table".into(),
                sum,
            });
        }
        table.iter_mut().for_each(|v| *v /= sum);
        Self::new(axes, table)
    }

    pub fn from_fn(axes: Vec<Alphabet>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        check_axes(&axes)?;
        let sizes: Vec<usize> = axes.iter().map(|a| a.size).collect();
        let table = (0..volume(&axes)).map(|i| f(&unflatten(i, &sizes))).collect();
        Self::new(axes, table)
    }

    pub fn uniform(axes: Vec<Alphabet>) -> Result<Self> {
        check_axes(&axes)?;
        let n = volume(&axes);
        Self::new(axes, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(axes: Vec<Alphabet>, at: &[usize]) -> Result<Self> {
        check_axes(&axes)?;
        if at.len() != axes.len() {
            return Err(Error::InvalidParameter(format!(
                "point mass index has {} coordinates for {} axes",
                at.len(),
                axes.len()
            )));
        }
        for (a, &i) in axes.iter().zip(at) {
            if i >= a.size {
                return Err(Error::InvalidParameter(format!(
                    "index {i} out of range for axis `{}`",
                    a.name
                )));
            }
        }
        let sizes: Vec<usize> = axes.iter().map(|a| a.size).collect();
        let flat = at.iter().zip(strides(&sizes)).map(|(i, s)| i * s).sum::<usize>();
        let mut table = vec![0.0; volume(&axes)];
        table[flat] = 1.0;
        Self::new(axes, table)
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.size).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    pub fn size_of(&self, name: &str) -> Result<usize> {
        self.position(name)
            .map(|i| self.axes[i].size)
            .ok_or_else(|| Error::UnknownAxis(name.into()))
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        let st = strides(&self.sizes());
        self.table[idx.iter().zip(st).map(|(i, s)| i * s).sum::<usize>()]
    }

    fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut pos = Vec::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::DuplicateAxis((*n).into()));
            }
            pos.push(self.position(n).ok_or_else(|| Error::UnknownAxis((*n).into()))?);
        }
        Ok(pos)
    }

    /// Sums out every axis not in `keep`. The result keeps the original axis order.
    pub fn marginalize(&self, keep: &[&str]) -> Result<Pmf> {
        let mut pos = self.positions(keep)?;
        pos.sort_unstable();
        Ok(self.project(&pos))
    }

    fn project(&self, sorted_pos: &[usize]) -> Pmf {
        if sorted_pos.len() == self.axes.len() {
            return self.clone();
        }
        let axes: Vec<Alphabet> = sorted_pos.iter().map(|&p| self.axes[p].clone()).collect();
        let kept_sizes: Vec<usize> = axes.iter().map(|a| a.size).collect();
        let kept_strides = strides(&kept_sizes);
        let mut target = vec![0; self.axes.len()];
        for (k, &p) in sorted_pos.iter().enumerate() {
            target[p] = kept_strides[k];
        }
        let mut table = vec![0.0; volume(&axes)];
        for (v, t) in self.table.iter().zip(index_map(&self.sizes(), &target)) {
            table[t] += v;
        }
        Pmf::from_parts(axes, table)
    }

    /// Same distribution with axes permuted into `order` (which must name every axis).
    pub fn reorder(&self, order: &[&str]) -> Result<Pmf> {
        let pos = self.positions(order)?;
        if pos.len() != self.axes.len() {
            let missing = self
                .axes
                .iter()
                .find(|a| !order.contains(&a.name.as_str()))
                .map(|a| a.name.clone())
                .unwrap_or_default();
            return Err(Error::MissingAxis(missing));
        }
        let axes: Vec<Alphabet> = pos.iter().map(|&p| self.axes[p].clone()).collect();
        let new_strides = strides(&axes.iter().map(|a| a.size).collect::<Vec<_>>());
        let mut target = vec![0; self.axes.len()];
        for (k, &p) in pos.iter().enumerate() {
            target[p] = new_strides[k];
        }
        let mut table = vec![0.0; self.table.len()];
        for (v, t) in self.table.iter().zip(index_map(&self.sizes(), &target)) {
            table[t] = *v;
        }
        Ok(Pmf::from_parts(axes, table))
    }

    /// `p(rest | given)`. Slices with zero marginal mass get the uniform
    /// conditional; they carry no weight in any expectation under `self`.
    pub fn condition(&self, given: &[&str]) -> Result<ConditionalPmf> {
        let gpos = self.positions(given)?;
        let mut gsorted = gpos.clone();
        gsorted.sort_unstable();
        let opos: Vec<usize> = (0..self.axes.len()).filter(|p| !gsorted.contains(p)).collect();
        let given_axes: Vec<Alphabet> = gsorted.iter().map(|&p| self.axes[p].clone()).collect();
        let output_axes: Vec<Alphabet> = opos.iter().map(|&p| self.axes[p].clone()).collect();
        let names: Vec<&str> = given_axes.iter().chain(&output_axes).map(|a| a.name.as_str()).collect();
        let ordered = self.reorder(&names)?;
        let out_len = volume(&output_axes);
        let mut table = ordered.table;
        for slice in table.chunks_mut(out_len) {
            let mass: f64 = slice.iter().sum();
            if mass > 0.0 {
                slice.iter_mut().for_each(|v| *v /= mass);
            } else {
                slice.fill(1.0 / out_len as f64);
            }
        }
        Ok(ConditionalPmf {
            given: given_axes,
            output: output_axes,
            table,
        })
    }

    /// Joint law `p(self) * W(out | given)`, where the channel's given axes
    /// are a subset of this table's axes. New axes are appended.
    pub fn extend(&self, channel: &ConditionalPmf) -> Result<Pmf> {
        let mut target = vec![0; self.axes.len()];
        let gsizes: Vec<usize> = channel.given.iter().map(|a| a.size).collect();
        let gstrides = strides(&gsizes);
        for (k, g) in channel.given.iter().enumerate() {
            let p = self
                .position(&g.name)
                .ok_or_else(|| Error::MissingAxis(g.name.clone()))?;
            if self.axes[p].size != g.size {
                return Err(Error::AxisMismatch {
                    axis: g.name.clone(),
                    expected: self.axes[p].size,
                    found: g.size,
                });
            }
            target[p] = gstrides[k];
        }
        for o in &channel.output {
            if self.position(&o.name).is_some() {
                return Err(Error::DuplicateAxis(o.name.clone()));
            }
        }
        let out_len = volume(&channel.output);
        let mut table = Vec::with_capacity(self.table.len() * out_len);
        for (v, g) in self.table.iter().zip(index_map(&self.sizes(), &target)) {
            let row = &channel.table[g * out_len..(g + 1) * out_len];
            table.extend(row.iter().map(|w| v * w));
        }
        let mut axes = self.axes.clone();
        axes.extend(channel.output.iter().cloned());
        Ok(Pmf::from_parts(axes, table))
    }

    pub fn entropy(&self, over: &[&str]) -> Result<f64> {
        Ok(entropy_bits(self.marginalize(over)?.table()))
    }

    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        disjoint(&[a, b])?;
        let ab: Vec<&str> = a.iter().chain(b).copied().collect();
        Ok(self.entropy(a)? + self.entropy(b)? - self.entropy(&ab)?)
    }

    /// `I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)`.
    pub fn conditional_mutual_information(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        disjoint(&[a, b, c])?;
        let ac: Vec<&str> = a.iter().chain(c).copied().collect();
        let bc: Vec<&str> = b.iter().chain(c).copied().collect();
        let abc: Vec<&str> = a.iter().chain(b).chain(c).copied().collect();
        Ok(self.entropy(&ac)? + self.entropy(&bc)? - self.entropy(&abc)? - self.entropy(c)?)
    }

    /// L1 distance to another table over identical axes.
    pub fn l1_distance(&self, other: &Pmf) -> Result<f64> {
        if self.axes != other.axes {
            return Err(Error::InvalidParameter("tables have different axes".into()));
        }
        Ok(self.table.iter().zip(&other.table).map(|(a, b)| (a - b).abs()).sum())
    }
}

fn disjoint(groups: &[&[&str]]) -> Result<()> {
    for (i, g) in groups.iter().enumerate() {
        for h in &groups[i + 1..] {
            if let Some(n) = g.iter().find(|n| h.contains(n)) {
                return Err(Error::OverlappingGroups((*n).into()));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CondRepr", into = "CondRepr")]
pub struct ConditionalPmf {
    given: Vec<Alphabet>,
    output: Vec<Alphabet>,
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CondRepr {
    given_axes: Vec<Alphabet>,
    output_axes: Vec<Alphabet>,
    table: Vec<f64>,
}

impl TryFrom<CondRepr> for ConditionalPmf {
    type Error = Error;
    fn try_from(r: CondRepr) -> Result<Self> {
        ConditionalPmf::new(r.given_axes, r.output_axes, r.table)
    }
}

impl From<ConditionalPmf> for CondRepr {
    fn from(c: ConditionalPmf) -> Self {
        CondRepr {
            given_axes: c.given,
            output_axes: c.output,
            table: c.table,
        }
    }
}

impl ConditionalPmf {
    pub fn new(given: Vec<Alphabet>, output: Vec<Alphabet>, table: Vec<f64>) -> Result<Self> {
        let all: Vec<Alphabet> = given.iter().chain(&output).cloned().collect();
        check_axes(&all)?;
        let expected = volume(&all);
        if table.len() != expected {
            return Err(Error::TableLength {
                expected,
                found: table.len(),
            });
        }
        check_entries(&all, &table)?;
        let out_len = volume(&output);
        for (g, slice) in table.chunks(out_len).enumerate() {
            let sum: f64 = slice.iter().sum();
            if (sum - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::NotNormalized {
                    location: format!("slice {}", describe_cell(&given, g)),
                    sum,
                });
            }
        }
        Ok(Self { given, output, table })
    }

    pub(crate) fn from_parts(given: Vec<Alphabet>, output: Vec<Alphabet>, table: Vec<f64>) -> Self {
        debug_assert_eq!(volume(&given) * volume(&output), table.len());
        Self { given, output, table }
    }

    /// `f(given_index, output_index)`.
    pub fn from_fn(
        given: Vec<Alphabet>,
        output: Vec<Alphabet>,
        mut f: impl FnMut(&[usize], &[usize]) -> f64,
    ) -> Result<Self> {
        let gs: Vec<usize> = given.iter().map(|a| a.size).collect();
        let os: Vec<usize> = output.iter().map(|a| a.size).collect();
        let mut table = Vec::with_capacity(volume(&given) * volume(&output));
        for g in 0..volume(&given) {
            let gi = unflatten(g, &gs);
            for o in 0..volume(&output) {
                table.push(f(&gi, &unflatten(o, &os)));
            }
        }
        Self::new(given, output, table)
    }

    /// A channel that ignores its input and always emits `dist`.
    pub fn constant(given: Vec<Alphabet>, dist: &Pmf) -> Result<Self> {
        let mut table = Vec::new();
        for _ in 0..volume(&given) {
            table.extend_from_slice(dist.table());
        }
        Self::new(given, dist.axes().to_vec(), table)
    }

    pub fn given_axes(&self) -> &[Alphabet] {
        &self.given
    }

    pub fn output_axes(&self) -> &[Alphabet] {
        &self.output
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn given_len(&self) -> usize {
        volume(&self.given)
    }

    pub fn output_len(&self) -> usize {
        volume(&self.output)
    }

    /// Conditional distribution for the flat given index `g`.
    pub fn slice(&self, g: usize) -> &[f64] {
        let n = self.output_len();
        &self.table[g * n..(g + 1) * n]
    }

    /// Permutes given and output axes independently.
    pub fn reorder(&self, given: &[&str], output: &[&str]) -> Result<ConditionalPmf> {
        // Route through a joint with a uniform given marginal.
        let gl = self.given_len() as f64;
        let joint = Pmf::from_parts(
            self.given.iter().chain(&self.output).cloned().collect(),
            self.table.iter().map(|v| v / gl).collect(),
        );
        for n in given.iter() {
            if !self.given.iter().any(|a| a.name == *n) {
                return Err(Error::UnknownAxis((*n).into()));
            }
        }
        let names: Vec<&str> = given.iter().chain(output).copied().collect();
        let r = joint.reorder(&names)?;
        let out_axes = r.axes[given.len()..].to_vec();
        let giv_axes = r.axes[..given.len()].to_vec();
        let table = r.table.iter().map(|v| v * gl).collect();
        Ok(ConditionalPmf::from_parts(giv_axes, out_axes, table))
    }
}
