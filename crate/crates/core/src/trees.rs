//! Depth-`L`, `d`-class decision trees over `R^p` and `T`-tree forests.
//!
//! A tree's output on a fixed sample depends only on the threshold-query
//! behavior at each internal node and on the labels of its leaves. The
//! enumerator therefore assigns one of the sample's distinct query behaviors
//! to every internal node, groups the assignments by the induced
//! point-to-leaf map, and expands each distinct map over the labelings of
//! the leaves it actually reaches.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BehaviorTable, LabelSpace, Sample, TableBuilder};

/// Deepest tree the enumerator accepts (leaf indices are stored as `u16`).
pub const MAX_DEPTH: u32 = 16;
/// Threshold queries are packed into a `u64` per query.
pub const MAX_POINTS: usize = 64;
/// Default cap on the projected enumeration size.
pub const DEFAULT_CAP: u64 = 1_000_000_000;

/// The class of depth-`L` trees on `p` features with `d` classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeClassSpec {
    #[serde(rename = "L")]
    pub depth: u32,
    pub p: usize,
    pub d: u32,
}

impl TreeClassSpec {
    pub fn new(depth: u32, p: usize, d: u32) -> Result<Self> {
        let spec = Self { depth, p, d };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.depth > MAX_DEPTH {
            return Err(Error::InvalidParameter(format!("depth L = {} must lie in 1..={MAX_DEPTH}", self.depth)));
        }
        if self.p == 0 {
            return Err(Error::InvalidParameter("feature count p must be >= 1".into()));
        }
        LabelSpace::new(self.d)?;
        Ok(())
    }

    /// `2^(L-1) - 1`
    pub fn internal_nodes(&self) -> usize {
        (1usize << (self.depth - 1)) - 1
    }

    /// `2^(L-1)`
    pub fn leaves(&self) -> usize {
        1usize << (self.depth - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "ForestRepr", into = "ForestRepr")]
pub struct ForestClassSpec {
    pub tree: TreeClassSpec,
    pub trees: usize,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForestRepr {
    #[serde(rename = "L")]
    depth: u32,
    p: usize,
    d: u32,
    #[serde(rename = "T")]
    trees: usize,
}

impl From<ForestRepr> for ForestClassSpec {
    fn from(r: ForestRepr) -> Self {
        Self { tree: TreeClassSpec { depth: r.depth, p: r.p, d: r.d }, trees: r.trees }
    }
}

impl From<ForestClassSpec> for ForestRepr {
    fn from(f: ForestClassSpec) -> Self {
        Self { depth: f.tree.depth, p: f.tree.p, d: f.tree.d, trees: f.trees }
    }
}

impl ForestClassSpec {
    pub fn new(tree: TreeClassSpec, trees: usize) -> Result<Self> {
        let spec = Self { tree, trees };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        if self.trees == 0 {
            return Err(Error::InvalidParameter("forest size T must be >= 1".into()));
        }
        Ok(())
    }
}

/// Internal-node rule: go left iff `x[feature] <= threshold`. Features are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
}

/// A fully specified tree. Internal nodes are in heap order (children of
/// node `v` are `2v+1` and `2v+2`); leaves are numbered left to right.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcreteTree {
    pub depth: u32,
    pub splits: Vec<Split>,
    pub leaves: Vec<u32>,
}

impl ConcreteTree {
    pub fn new(depth: u32, splits: Vec<Split>, leaves: Vec<u32>) -> Result<Self> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::InvalidParameter(format!("depth {depth} out of range")));
        }
        let v = (1usize << (depth - 1)) - 1;
        if splits.len() != v || leaves.len() != v + 1 {
            return Err(Error::InvalidParameter(format!(
                "depth {depth} needs {v} splits and {} leaves, got {} and {}",
                v + 1,
                splits.len(),
                leaves.len()
            )));
        }
        if splits.iter().any(|s| s.feature == 0) {
            return Err(Error::InvalidParameter("split features are 1-based".into()));
        }
        if leaves.contains(&0) {
            return Err(Error::InvalidParameter("leaf classes are 1-based".into()));
        }
        Ok(Self { depth, splits, leaves })
    }

    /// A single-leaf tree.
    pub fn constant(label: u32) -> Self {
        Self { depth: 1, splits: Vec::new(), leaves: vec![label] }
    }
}

/// Label of the leaf reached from the root along `L - 1` comparisons.
pub fn eval_tree(tree: &ConcreteTree, x: &[f64]) -> Result<u32> {
    let v = tree.splits.len();
    let mut node = 0;
    while node < v {
        let split = tree.splits[node];
        let value = *x.get(split.feature - 1).ok_or(Error::DimensionMismatch {
            index: 0,
            got: x.len(),
            expected: split.feature,
        })?;
        node = if value <= split.threshold { 2 * node + 1 } else { 2 * node + 2 };
    }
    Ok(tree.leaves[node - v])
}

/// One realizable threshold-query behavior on a sample, with a split that realizes it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryBehavior {
    /// Bit `i` is `1{x_i[feature] <= threshold}`.
    pub mask: u64,
    pub split: Split,
}

impl QueryBehavior {
    pub fn bits(&self, n: usize) -> Vec<u8> {
        (0..n).map(|i| (self.mask >> i & 1) as u8).collect()
    }
}

fn canonical_thresholds(values: &mut Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values.dedup();
    let lo = values[0];
    let hi = values[values.len() - 1];
    let mut out = Vec::with_capacity(values.len() + 1);
    out.push(lo - lo.abs().max(1.0));
    for w in values.windows(2) {
        let mid = w[0] + (w[1] - w[0]) / 2.0;
        out.push(if mid < w[1] { mid } else { w[0] });
    }
    out.push(hi + hi.abs().max(1.0));
    out
}

/// Distinct query behaviors of `x -> 1{x_s <= theta}` over all features and thresholds.
///
/// Thresholds sweep the midpoints between consecutive distinct coordinates
/// plus one value below the minimum and one above the maximum. Behaviors are
/// listed in sweep order (feature, then threshold), first occurrence kept.
pub fn threshold_behaviors(sample: &Sample) -> Result<Vec<QueryBehavior>> {
    let n = sample.n();
    if n == 0 {
        return Err(Error::InvalidParameter("threshold behaviors need a nonempty sample".into()));
    }
    if n > MAX_POINTS {
        return Err(Error::InvalidParameter(format!("sample of {n} points exceeds {MAX_POINTS}")));
    }
    let mut out: Vec<QueryBehavior> = Vec::new();
    for s in 0..sample.p() {
        let mut values: Vec<f64> = sample.points().iter().map(|x| x[s]).collect();
        for threshold in canonical_thresholds(&mut values) {
            let mask = sample
                .points()
                .iter()
                .enumerate()
                .filter(|(_, x)| x[s] <= threshold)
                .fold(0u64, |m, (i, _)| m | 1 << i);
            if out.iter().all(|q| q.mask != mask) {
                out.push(QueryBehavior { mask, split: Split { feature: s + 1, threshold } });
            }
        }
    }
    Ok(out)
}

/// The binary threshold-query class as a behavior table; `x <= theta` maps to label 1.
pub fn threshold_table(sample: &Sample) -> Result<BehaviorTable> {
    let n = sample.n();
    let mut builder = TableBuilder::new(n, LabelSpace::new(2)?);
    for q in threshold_behaviors(sample)? {
        builder.insert_owned((0..n).map(|i| if q.mask >> i & 1 == 1 { 1 } else { 2 }).collect());
    }
    Ok(builder.finish())
}

fn check_sample(spec: &TreeClassSpec, sample: &Sample) -> Result<()> {
    spec.validate()?;
    if sample.p() != spec.p {
        return Err(Error::InvalidParameter(format!(
            "sample has p = {}, tree class expects p = {}",
            sample.p(),
            spec.p
        )));
    }
    if sample.n() > MAX_POINTS {
        return Err(Error::InvalidParameter(format!("sample of {} points exceeds {MAX_POINTS}", sample.n())));
    }
    Ok(())
}

/// Point-to-leaf maps induced by query assignments, each with the smallest
/// assignment (lexicographic over node order) that induces it.
fn leaf_maps(v: usize, n: usize, queries: &[QueryBehavior]) -> HashMap<Vec<u16>, Vec<usize>> {
    let q = queries.len();
    let route = |assign: &[usize]| -> Vec<u16> {
        (0..n)
            .map(|i| {
                let mut node = 0;
                while node < v {
                    let left = queries[assign[node]].mask >> i & 1 == 1;
                    node = if left { 2 * node + 1 } else { 2 * node + 2 };
                }
                (node - v) as u16
            })
            .collect()
    };
    if v == 0 {
        return HashMap::from([(vec![0u16; n], Vec::new())]);
    }
    let merge = |mut a: HashMap<Vec<u16>, Vec<usize>>, b: HashMap<Vec<u16>, Vec<usize>>| {
        for (k, assign) in b {
            a.entry(k)
                .and_modify(|cur| {
                    if assign < *cur {
                        *cur = assign.clone();
                    }
                })
                .or_insert(assign);
        }
        a
    };
    (0..q)
        .into_par_iter()
        .map(|first| {
            let mut found: HashMap<Vec<u16>, Vec<usize>> = HashMap::new();
            let mut assign = vec![0usize; v];
            assign[0] = first;
            loop {
                found.entry(route(&assign)).or_insert_with(|| assign.clone());
                // odometer over nodes 1..v, last node fastest
                let mut pos = v - 1;
                loop {
                    if pos == 0 {
                        return found;
                    }
                    assign[pos] += 1;
                    if assign[pos] < q {
                        break;
                    }
                    assign[pos] = 0;
                    pos -= 1;
                }
            }
        })
        .reduce(HashMap::new, merge)
}

/// Calls `f` with every labeling of the leaves reached by `map`; unreached leaves get label 1.
fn for_each_leaf_labeling(map: &[u16], leaves: usize, d: u32, mut f: impl FnMut(&[u8], &[u32])) {
    let mut used: Vec<u16> = map.to_vec();
    used.sort_unstable();
    used.dedup();
    let mut slot = vec![usize::MAX; leaves];
    for (j, &l) in used.iter().enumerate() {
        slot[l as usize] = j;
    }
    let mut digits = vec![1u8; used.len()];
    let mut row = vec![0u8; map.len()];
    let mut full = vec![1u32; leaves];
    loop {
        for (i, &l) in map.iter().enumerate() {
            row[i] = digits[slot[l as usize]];
        }
        for (j, &l) in used.iter().enumerate() {
            full[l as usize] = digits[j] as u32;
        }
        f(&row, &full);
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if (digits[pos] as u32) < d {
                digits[pos] += 1;
                break;
            }
            digits[pos] = 1;
        }
    }
}

fn projected_tree_size(spec: &TreeClassSpec, queries: usize) -> f64 {
    (queries as f64).powi(spec.internal_nodes() as i32) * (spec.d as f64).powi(spec.leaves() as i32)
}

/// Every distinct label vector some depth-`L` tree realizes on `sample`.
pub fn enumerate_tree_behaviors(spec: &TreeClassSpec, sample: &Sample, cap: u64) -> Result<BehaviorTable> {
    check_sample(spec, sample)?;
    let n = sample.n();
    let labels = LabelSpace::new(spec.d)?;
    if n == 0 {
        return BehaviorTable::from_rows(&[Vec::<u32>::new()], 0, labels);
    }
    let queries = threshold_behaviors(sample)?;
    let projected = projected_tree_size(spec, queries.len());
    if projected > cap as f64 {
        return Err(Error::EnumerationCap { projected, cap });
    }
    let maps: Vec<Vec<u16>> = leaf_maps(spec.internal_nodes(), n, &queries).into_keys().collect();
    let leaves = spec.leaves();
    let builder = maps
        .par_iter()
        .fold(
            || TableBuilder::new(n, labels),
            |mut b, map| {
                for_each_leaf_labeling(map, leaves, spec.d, |row, _| {
                    b.insert(row);
                });
                b
            },
        )
        .reduce(
            || TableBuilder::new(n, labels),
            |mut a, b| {
                a.merge(b);
                a
            },
        );
    Ok(builder.finish())
}

/// A tree table together with, for each row, a concrete tree producing it.
#[derive(Clone, Debug)]
pub struct TreeEnumeration {
    pub spec: TreeClassSpec,
    pub table: BehaviorTable,
    pub queries: Vec<QueryBehavior>,
    /// `(query index per internal node, class per leaf)`, aligned with table rows.
    pub provenance: Vec<(Vec<usize>, Vec<u32>)>,
}

impl TreeEnumeration {
    pub fn tree_for_row(&self, row: usize) -> ConcreteTree {
        let (assign, leaves) = &self.provenance[row];
        ConcreteTree {
            depth: self.spec.depth,
            splits: assign.iter().map(|&q| self.queries[q].split).collect(),
            leaves: leaves.clone(),
        }
    }
}

/// Like [`enumerate_tree_behaviors`], also recording a realizing tree per row.
pub fn enumerate_tree_behaviors_traced(
    spec: &TreeClassSpec,
    sample: &Sample,
    cap: u64,
) -> Result<TreeEnumeration> {
    check_sample(spec, sample)?;
    let n = sample.n();
    if n == 0 {
        return Err(Error::InvalidParameter("traced enumeration needs a nonempty sample".into()));
    }
    let labels = LabelSpace::new(spec.d)?;
    let queries = threshold_behaviors(sample)?;
    let projected = projected_tree_size(spec, queries.len());
    if projected > cap as f64 {
        return Err(Error::EnumerationCap { projected, cap });
    }
    let mut maps: Vec<(Vec<u16>, Vec<usize>)> =
        leaf_maps(spec.internal_nodes(), n, &queries).into_iter().collect();
    maps.sort_by(|a, b| a.1.cmp(&b.1));
    let mut found: HashMap<Vec<u8>, (Vec<usize>, Vec<u32>)> = HashMap::new();
    for (map, assign) in &maps {
        for_each_leaf_labeling(map, spec.leaves(), spec.d, |row, full| {
            found.entry(row.to_vec()).or_insert_with(|| (assign.clone(), full.to_vec()));
        });
    }
    let mut entries: Vec<_> = found.into_iter().collect();
    entries.sort_by(|a: &(Vec<u8>, _), b| a.0.cmp(&b.0));
    let mut builder = TableBuilder::new(n, labels);
    let mut provenance = Vec::with_capacity(entries.len());
    for (row, prov) in entries {
        builder.insert_owned(row);
        provenance.push(prov);
    }
    Ok(TreeEnumeration { spec: *spec, table: builder.finish(), queries, provenance })
}

/// Most frequent label among `votes`; ties go to the smallest label.
pub fn forest_vote(votes: &[u32], d: u32) -> Result<u32> {
    if votes.is_empty() {
        return Err(Error::InvalidParameter("forest vote over zero trees".into()));
    }
    let mut counts = vec![0usize; d as usize + 1];
    for &v in votes {
        if v == 0 || v > d {
            return Err(Error::LabelOutOfRange { row: 0, col: 0, label: v, d });
        }
        counts[v as usize] += 1;
    }
    let mut best = 1;
    for k in 2..=d as usize {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    Ok(best as u32)
}

/// Every distinct vote-aggregated label vector of `T`-tree forests on `sample`.
///
/// Votes are order-independent, so tree rows are combined as multisets.
pub fn enumerate_forest_behaviors(spec: &ForestClassSpec, sample: &Sample, cap: u64) -> Result<BehaviorTable> {
    spec.validate()?;
    let trees = enumerate_tree_behaviors(&spec.tree, sample, cap)?;
    let projected = (trees.len() as f64).powi(spec.trees as i32);
    if projected > cap as f64 {
        return Err(Error::EnumerationCap { projected, cap });
    }
    let n = sample.n();
    let d = spec.tree.d as usize;
    let r = trees.len();
    let t = spec.trees;
    let labels = trees.label_space();

    let builder = (0..r)
        .into_par_iter()
        .fold(
            || TableBuilder::new(n, labels),
            |mut b, first| {
                let mut pick = vec![first; t];
                let mut counts = vec![0u16; n * (d + 1)];
                let mut row = vec![0u8; n];
                loop {
                    counts.iter_mut().for_each(|c| *c = 0);
                    for &tr in &pick {
                        for (i, &l) in trees.row(tr).iter().enumerate() {
                            counts[i * (d + 1) + l as usize] += 1;
                        }
                    }
                    for (i, out) in row.iter_mut().enumerate() {
                        let c = &counts[i * (d + 1)..(i + 1) * (d + 1)];
                        let mut best = 1;
                        for k in 2..=d {
                            if c[k] > c[best] {
                                best = k;
                            }
                        }
                        *out = best as u8;
                    }
                    b.insert(&row);
                    // next nondecreasing tuple with pick[0] fixed
                    let mut pos = t;
                    loop {
                        if pos <= 1 {
                            return b;
                        }
                        pos -= 1;
                        if pick[pos] + 1 < r {
                            pick[pos] += 1;
                            let v = pick[pos];
                            pick[pos + 1..].iter_mut().for_each(|p| *p = v);
                            break;
                        }
                    }
                }
            },
        )
        .reduce(
            || TableBuilder::new(n, labels),
            |mut a, b| {
                a.merge(b);
                a
            },
        );
    Ok(builder.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;

    fn rows(t: &BehaviorTable) -> Vec<Vec<u8>> {
        t.rows().map(<[u8]>::to_vec).collect()
    }

    #[test]
    fn constant_and_stump_evaluation() {
        assert_eq!(eval_tree(&ConcreteTree::constant(3), &[0.7]).unwrap(), 3);
        let stump = ConcreteTree::new(2, vec![Split { feature: 1, threshold: 1.5 }], vec![1, 2]).unwrap();
        assert_eq!(eval_tree(&stump, &[1.0]).unwrap(), 1);
        assert_eq!(eval_tree(&stump, &[2.0]).unwrap(), 2);
        assert_eq!(eval_tree(&stump, &[1.5]).unwrap(), 1, "x == theta goes left");
        let wide = ConcreteTree::new(2, vec![Split { feature: 3, threshold: 0.0 }], vec![1, 2]).unwrap();
        assert!(eval_tree(&wide, &[1.0]).is_err());
    }

    #[test]
    fn concrete_tree_shape_is_checked() {
        assert!(ConcreteTree::new(3, vec![Split { feature: 1, threshold: 0.0 }], vec![1, 1]).is_err());
    }

    #[test]
    fn threshold_sweep_one_feature() {
        let s = Sample::from_scalars(&[1.0, 2.0, 3.0]).unwrap();
        let bits: Vec<Vec<u8>> = threshold_behaviors(&s).unwrap().iter().map(|q| q.bits(3)).collect();
        assert_eq!(bits, vec![vec![0, 0, 0], vec![1, 0, 0], vec![1, 1, 0], vec![1, 1, 1]]);
    }

    #[test]
    fn duplicate_coordinates_collapse() {
        let s = Sample::new(2, vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]]).unwrap();
        let qs = threshold_behaviors(&s).unwrap();
        // feature 2 only adds nothing new: all-0 and all-1 already come from feature 1
        assert_eq!(qs.len(), 4);
        assert!(qs.len() < 2 * (3 + 1));
        assert!(qs.iter().all(|q| q.split.feature == 1));
    }

    #[test]
    fn thresholds_realize_their_masks() {
        let s = Sample::new(2, vec![vec![0.1, -3.0], vec![0.1, 2.0], vec![1e300, 7.0], vec![-1e-300, 2.0]]).unwrap();
        for q in threshold_behaviors(&s).unwrap() {
            for (i, x) in s.points().iter().enumerate() {
                assert_eq!(x[q.split.feature - 1] <= q.split.threshold, q.mask >> i & 1 == 1);
            }
        }
    }

    #[test]
    fn constant_trees() {
        let s = Sample::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        let t = enumerate_tree_behaviors(&TreeClassSpec::new(1, 1, 3).unwrap(), &s, DEFAULT_CAP).unwrap();
        assert_eq!(rows(&t), vec![vec![1, 1, 1], vec![2, 2, 2], vec![3, 3, 3]]);
    }

    #[test]
    fn stumps_on_two_points_realize_everything() {
        let s = Sample::from_scalars(&[1.0, 2.0]).unwrap();
        let t = enumerate_tree_behaviors(&TreeClassSpec::new(2, 1, 2).unwrap(), &s, DEFAULT_CAP).unwrap();
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn cap_is_enforced() {
        let s = Sample::from_scalars(&[1.0, 2.0, 3.0]).unwrap();
        let spec = TreeClassSpec::new(3, 1, 2).unwrap();
        // 4^3 * 2^4 = 1024
        assert!(enumerate_tree_behaviors(&spec, &s, 1024).is_ok());
        assert!(matches!(
            enumerate_tree_behaviors(&spec, &s, 1023),
            Err(Error::EnumerationCap { projected, cap: 1023 }) if projected == 1024.0
        ));
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let s = Sample::from_scalars(&[1.0]).unwrap();
        assert!(enumerate_tree_behaviors(&TreeClassSpec::new(2, 2, 2).unwrap(), &s, DEFAULT_CAP).is_err());
    }

    #[test]
    fn traced_rows_are_reproduced_by_their_trees() {
        let s = Sample::new(2, vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0], vec![0.5, 3.0]]).unwrap();
        let spec = TreeClassSpec::new(3, 2, 3).unwrap();
        let e = enumerate_tree_behaviors_traced(&spec, &s, DEFAULT_CAP).unwrap();
        assert_eq!(e.table, enumerate_tree_behaviors(&spec, &s, DEFAULT_CAP).unwrap());
        for (r, row) in e.table.rows().enumerate() {
            let tree = e.tree_for_row(r);
            let got: Vec<u8> = s.points().iter().map(|x| eval_tree(&tree, x).unwrap() as u8).collect();
            assert_eq!(got, row);
        }
    }

    #[test]
    fn votes() {
        assert_eq!(forest_vote(&[1, 2, 2], 2).unwrap(), 2);
        assert_eq!(forest_vote(&[1, 2], 2).unwrap(), 1);
        assert_eq!(forest_vote(&[3, 3, 1, 1, 2], 3).unwrap(), 1);
        assert!(forest_vote(&[], 2).is_err());
        assert!(forest_vote(&[4], 3).is_err());
    }

    #[test]
    fn single_tree_forest_is_the_tree_class() {
        let s = Sample::from_scalars(&[0.3, 1.2, 2.0, 5.0]).unwrap();
        let tree = TreeClassSpec::new(2, 1, 3).unwrap();
        let forest = ForestClassSpec::new(tree, 1).unwrap();
        assert_eq!(
            enumerate_forest_behaviors(&forest, &s, DEFAULT_CAP).unwrap(),
            enumerate_tree_behaviors(&tree, &s, DEFAULT_CAP).unwrap()
        );
    }

    #[test]
    fn two_stump_forest_matches_ordered_tuples() {
        let s = Sample::from_scalars(&[1.0, 2.0]).unwrap();
        let tree = TreeClassSpec::new(2, 1, 2).unwrap();
        let trees = enumerate_tree_behaviors(&tree, &s, DEFAULT_CAP).unwrap();
        let forest = enumerate_forest_behaviors(&ForestClassSpec::new(tree, 2).unwrap(), &s, DEFAULT_CAP).unwrap();
        // brute force over all ordered pairs
        let mut brute: Vec<Vec<u8>> = trees
            .rows()
            .cartesian_product(trees.rows())
            .map(|(a, b)| (0..2).map(|i| forest_vote(&[a[i] as u32, b[i] as u32], 2).unwrap() as u8).collect())
            .collect();
        brute.sort();
        brute.dedup();
        assert_eq!(rows(&forest), brute);
        assert!(forest.len() <= 16);
    }

    #[test]
    fn forest_json_spec() {
        let f: ForestClassSpec = serde_json::from_str(r#"{"L":2,"p":1,"d":3,"T":4}"#).unwrap();
        assert_eq!((f.tree.depth, f.trees), (2, 4));
    }

    mod props {
        use super::*;
        use crate::bounds::tree_growth_bound_exact;
        use num_bigint::BigUint;
        use proptest::prelude::*;

        fn instance() -> impl Strategy<Value = (TreeClassSpec, Sample)> {
            (1u32..4, 1usize..3, 1u32..4, 1usize..6).prop_flat_map(|(depth, p, d, n)| {
                proptest::collection::vec(proptest::collection::vec(0i32..6, p), n).prop_map(move |pts| {
                    let points = pts.into_iter().map(|x| x.into_iter().map(f64::from).collect()).collect();
                    (TreeClassSpec::new(depth, p, d).unwrap(), Sample::new(p, points).unwrap())
                })
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn rows_come_from_trees_and_respect_bounds((spec, sample) in instance()) {
                let traced = enumerate_tree_behaviors_traced(&spec, &sample, DEFAULT_CAP).unwrap();
                for (i, row) in traced.table.rows().enumerate() {
                    let tree = traced.tree_for_row(i);
                    for (x, &label) in sample.points().iter().zip(row) {
                        prop_assert_eq!(eval_tree(&tree, x).unwrap(), label as u32);
                    }
                }
                let n = sample.n() as u64;
                let count = BigUint::from(traced.table.len());
                prop_assert!(count <= tree_growth_bound_exact(spec.p as u64, n, spec.depth, spec.d as u64));
                prop_assert!(count <= BigUint::from(spec.d).pow(sample.n() as u32));
            }

            #[test]
            fn threshold_behaviors_per_feature((spec, sample) in instance()) {
                let queries = threshold_behaviors(&sample).unwrap();
                let distinct: usize = (0..spec.p)
                    .map(|s| {
                        let mut col: Vec<f64> = sample.points().iter().map(|x| x[s]).collect();
                        col.sort_by(f64::total_cmp);
                        col.dedup();
                        col.len() + 1
                    })
                    .sum();
                // identical masks across features are merged
                prop_assert!(queries.len() <= distinct);
                prop_assert!(queries.len() >= distinct / spec.p);
            }
        }
    }
}
