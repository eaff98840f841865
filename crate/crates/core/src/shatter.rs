//! N-, G- and VC-shattering checks and dimension search over behavior tables.
//!
//! A subset `S` of the sample is checked on the projection of the table onto
//! `S`. The search assigns reference labels column by column and keeps, for
//! every surviving row, a bitmask of the columns where the row agrees with
//! the first reference labeling. After `j` columns the surviving masks must
//! already cover all `2^j` patterns, otherwise the partial template is
//! abandoned: a shattered set's prefix is itself shattered by the same rows.
//!
//! For N-shattering only the unordered pair `{f1(x), f2(x)}` matters at each
//! point. Swapping the two labels at one point maps the realized sets
//! `T -> T xor {x}`, a bijection on the power set, so the search enumerates
//! pairs with `f1(x) < f2(x)`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::model::BehaviorTable;

/// Largest subset the checkers accept; realizer maps hold `2^k` entries.
pub const MAX_SUBSET: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ShatterMode {
    N,
    G,
    VC,
}

impl fmt::Display for ShatterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShatterMode::N => "N",
            ShatterMode::G => "G",
            ShatterMode::VC => "VC",
        })
    }
}

/// Evidence that a subset is shattered.
///
/// `realizers` maps each `T` (bit `i` set iff `subset[i]` is in `T`) to the
/// index of a table row realizing it. In G mode `f1` holds the single
/// reference labeling `f` and `f2` is absent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShatterWitness {
    pub mode: ShatterMode,
    pub subset: Vec<usize>,
    pub f1: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2: Option<Vec<u32>>,
    #[serde(deserialize_with = "realizer_map")]
    pub realizers: BTreeMap<u32, usize>,
}

/// JSON object keys are strings; buffered deserialization (inside tagged
/// enums) does not convert them back to integers on its own.
fn realizer_map<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, usize>, D::Error> {
    BTreeMap::<String, usize>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| k.parse().map(|k| (k, v)).map_err(serde::de::Error::custom))
        .collect()
}

impl ShatterWitness {
    pub fn size(&self) -> usize {
        self.subset.len()
    }

    /// Re-checks every witness invariant against `table` from scratch.
    pub fn verify(&self, table: &BehaviorTable) -> Result<()> {
        let k = self.subset.len();
        let bad = |msg: String| Err(Error::Witness(msg));
        if k > MAX_SUBSET {
            return bad(format!("subset of size {k} exceeds {MAX_SUBSET}"));
        }
        if let Some(&i) = self.subset.iter().find(|&&i| i >= table.n()) {
            return bad(format!("subset index {i} out of range"));
        }
        if self.subset.iter().collect::<HashSet<_>>().len() != k {
            return bad("subset has repeated indices".into());
        }
        if self.f1.len() != k {
            return bad("f1 length differs from subset size".into());
        }
        let f2 = match (self.mode, &self.f2) {
            (ShatterMode::G, None) => None,
            (ShatterMode::G, Some(_)) => return bad("G-mode witness carries f2".into()),
            (_, None) => return bad("N/VC-mode witness lacks f2".into()),
            (_, Some(f2)) => {
                if f2.len() != k {
                    return bad("f2 length differs from subset size".into());
                }
                if self.f1.iter().zip(f2).any(|(a, b)| a == b) {
                    return bad("f1 and f2 agree at some point".into());
                }
                Some(f2)
            }
        };
        if self.mode == ShatterMode::VC && table.d() != 2 {
            return bad("VC witness on a non-binary table".into());
        }
        if self.realizers.len() != 1usize << k {
            return bad(format!("{} realizers, expected {}", self.realizers.len(), 1usize << k));
        }
        for (&t, &r) in &self.realizers {
            if (t as usize) >> k != 0 {
                return bad(format!("T mask {t} has bits outside the subset"));
            }
            if r >= table.len() {
                return bad(format!("realizer row {r} out of range"));
            }
            let row = table.row(r);
            for (i, &x) in self.subset.iter().enumerate() {
                let in_t = t >> i & 1 == 1;
                let v = row[x] as u32;
                let ok = match (in_t, f2) {
                    (true, _) => v == self.f1[i],
                    (false, Some(f2)) => v == f2[i],
                    (false, None) => v != self.f1[i],
                };
                if !ok {
                    return bad(format!("row {r} does not realize T = {t:#b} at point {x}"));
                }
            }
        }
        Ok(())
    }
}

/// Limits for the exact search. Exceeding any limit turns the answer into a
/// certified lower bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBudget {
    #[serde(default)]
    pub max_subsets: Option<u64>,
    #[serde(default)]
    pub max_templates_per_subset: Option<u64>,
    #[serde(default, with = "opt_millis")]
    pub time_limit: Option<Duration>,
}

mod opt_millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(d) => s.serialize_some(&(d.as_millis() as u64)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Ok(Option::<u64>::deserialize(d)?.map(Duration::from_millis))
    }
}

impl SearchBudget {
    pub fn unlimited() -> Self {
        Self::default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Exact,
    LowerBound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionResult {
    pub mode: ShatterMode,
    pub dim: usize,
    pub witness: Option<ShatterWitness>,
    pub status: SearchStatus,
    pub subsets_examined: u64,
}

impl DimensionResult {
    pub fn is_exact(&self) -> bool {
        self.status == SearchStatus::Exact
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Template {
    /// Per-point unordered label pair `(f1, f2)` with `f1 < f2`.
    Pairs,
    /// Per-point single reference label `f`.
    Single,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Outcome {
    Found(Vec<(u8, u8)>),
    Absent,
    Undecided,
}

struct TemplateSearch<'a> {
    proj: &'a BehaviorTable,
    kind: Template,
    nodes: u64,
    limit: u64,
    seen: Vec<u64>,
}

impl<'a> TemplateSearch<'a> {
    fn new(proj: &'a BehaviorTable, kind: Template, limit: Option<u64>) -> Self {
        let words = (1usize << proj.n()).div_ceil(64);
        Self { proj, kind, nodes: 0, limit: limit.unwrap_or(u64::MAX), seen: vec![0; words] }
    }

    fn run(mut self) -> Outcome {
        let k = self.proj.n();
        if self.proj.len() < 1 << k {
            return Outcome::Absent;
        }
        let alive: Vec<(u32, u32)> = (0..self.proj.len() as u32).map(|r| (r, 0)).collect();
        let mut template = Vec::with_capacity(k);
        self.descend(0, &alive, &mut template)
    }

    /// Number of distinct masks in `rows` (masks use the low `bits` bits).
    fn coverage(&mut self, rows: &[(u32, u32)]) -> usize {
        let mut count = 0;
        for &(_, m) in rows {
            let (w, b) = ((m / 64) as usize, m % 64);
            if self.seen[w] >> b & 1 == 0 {
                self.seen[w] |= 1 << b;
                count += 1;
            }
        }
        for &(_, m) in rows {
            self.seen[(m / 64) as usize] = 0;
        }
        count
    }

    fn descend(&mut self, col: usize, alive: &[(u32, u32)], template: &mut Vec<(u8, u8)>) -> Outcome {
        let k = self.proj.n();
        if col == k {
            return Outcome::Found(template.clone());
        }
        let mut present = [false; 256];
        for &(r, _) in alive {
            present[self.proj.row(r as usize)[col] as usize] = true;
        }
        let labels: Vec<u8> = (1..=255u8).filter(|&l| present[l as usize]).collect();
        let need = 1usize << (col + 1);
        let mut undecided = false;

        let mut candidates = Vec::new();
        match self.kind {
            Template::Pairs => {
                for (i, &a) in labels.iter().enumerate() {
                    for &b in &labels[i + 1..] {
                        candidates.push((a, b));
                    }
                }
            }
            Template::Single => candidates.extend(labels.iter().map(|&a| (a, 0))),
        }

        for (a, b) in candidates {
            self.nodes += 1;
            if self.nodes > self.limit {
                return Outcome::Undecided;
            }
            let next: Vec<(u32, u32)> = alive
                .iter()
                .filter_map(|&(r, m)| {
                    let v = self.proj.row(r as usize)[col];
                    match self.kind {
                        Template::Pairs if v == a => Some((r, m | 1 << col)),
                        Template::Pairs if v == b => Some((r, m)),
                        Template::Pairs => None,
                        Template::Single => Some((r, m | ((v == a) as u32) << col)),
                    }
                })
                .collect();
            if next.len() < need || self.coverage(&next) < need {
                continue;
            }
            template.push((a, b));
            match self.descend(col + 1, &next, template) {
                Outcome::Found(t) => return Outcome::Found(t),
                Outcome::Undecided => {
                    undecided = true;
                    if self.nodes > self.limit {
                        template.pop();
                        return Outcome::Undecided;
                    }
                }
                Outcome::Absent => {}
            }
            template.pop();
        }
        if undecided {
            Outcome::Undecided
        } else {
            Outcome::Absent
        }
    }
}

fn validate_subset(table: &BehaviorTable, subset: &[usize]) -> Result<()> {
    if subset.len() > MAX_SUBSET {
        return Err(Error::InvalidParameter(format!(
            "subset of size {} exceeds the supported maximum {MAX_SUBSET}",
            subset.len()
        )));
    }
    let mut seen = HashSet::new();
    for &i in subset {
        if i >= table.n() {
            return Err(Error::IndexOutOfRange { index: i, n: table.n() });
        }
        if !seen.insert(i) {
            return Err(Error::InvalidParameter(format!("subset repeats index {i}")));
        }
    }
    Ok(())
}

fn search_subset(
    table: &BehaviorTable,
    subset: &[usize],
    mode: ShatterMode,
    limit: Option<u64>,
) -> Result<Outcome> {
    if table.is_empty() {
        return Ok(Outcome::Absent);
    }
    let proj = table.restrict(subset)?;
    let kind = match mode {
        ShatterMode::N | ShatterMode::VC => Template::Pairs,
        ShatterMode::G => Template::Single,
    };
    Ok(TemplateSearch::new(&proj, kind, limit).run())
}

fn build_witness(
    table: &BehaviorTable,
    subset: &[usize],
    mode: ShatterMode,
    template: &[(u8, u8)],
) -> ShatterWitness {
    let f1: Vec<u32> = template.iter().map(|&(a, _)| a as u32).collect();
    let f2 = match mode {
        ShatterMode::G => None,
        _ => Some(template.iter().map(|&(_, b)| b as u32).collect::<Vec<_>>()),
    };
    let mut realizers = BTreeMap::new();
    'rows: for (r, row) in table.rows().enumerate() {
        let mut t = 0u32;
        for (i, (&x, &(a, b))) in subset.iter().zip(template).enumerate() {
            let v = row[x];
            if v == a {
                t |= 1 << i;
            } else if mode != ShatterMode::G && v != b {
                continue 'rows;
            }
        }
        realizers.entry(t).or_insert(r);
    }
    ShatterWitness { mode, subset: subset.to_vec(), f1, f2, realizers }
}

fn check(table: &BehaviorTable, subset: &[usize], mode: ShatterMode) -> Result<Option<ShatterWitness>> {
    validate_subset(table, subset)?;
    match search_subset(table, subset, mode, None)? {
        Outcome::Found(t) => Ok(Some(build_witness(table, subset, mode, &t))),
        _ => Ok(None),
    }
}

/// Returns a witness iff `table` N-shatters the points `subset`.
pub fn is_n_shattered(table: &BehaviorTable, subset: &[usize]) -> Result<Option<ShatterWitness>> {
    check(table, subset, ShatterMode::N)
}

/// Returns a witness iff `table` G-shatters the points `subset`.
pub fn is_g_shattered(table: &BehaviorTable, subset: &[usize]) -> Result<Option<ShatterWitness>> {
    check(table, subset, ShatterMode::G)
}

/// Binary shattering: all `2^k` patterns over `{1, 2}` appear on `subset`.
pub fn is_vc_shattered(table: &BehaviorTable, subset: &[usize]) -> Result<Option<ShatterWitness>> {
    if table.d() != 2 {
        return Err(Error::NotBinary(table.d()));
    }
    check(table, subset, ShatterMode::VC)
}

pub fn is_shattered(
    table: &BehaviorTable,
    subset: &[usize],
    mode: ShatterMode,
) -> Result<Option<ShatterWitness>> {
    match mode {
        ShatterMode::N => is_n_shattered(table, subset),
        ShatterMode::G => is_g_shattered(table, subset),
        ShatterMode::VC => is_vc_shattered(table, subset),
    }
}

/// Size-`k+1` candidates whose every `k`-subset is in `level`.
fn next_level(level: &[Vec<usize>], keep: &HashSet<Vec<usize>>) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for (i, a) in level.iter().enumerate() {
        for b in &level[i + 1..] {
            let k = a.len();
            if a[..k - 1] != b[..k - 1] {
                break;
            }
            let mut cand = a.clone();
            cand.push(b[k - 1]);
            let all_present = (0..cand.len()).all(|drop| {
                let sub: Vec<usize> =
                    cand.iter().enumerate().filter(|&(j, _)| j != drop).map(|(_, &x)| x).collect();
                keep.contains(&sub)
            });
            if all_present {
                out.push(cand);
            }
        }
    }
    out
}

/// Exact dimension search in the given mode.
///
/// Subsets are grown level by level; a candidate of size `k` is only checked
/// when all of its `(k-1)`-subsets were shattered (or left undecided by the
/// budget). The witness is the lexicographically smallest shattered subset
/// of maximal size, so the result does not depend on thread scheduling.
pub fn dimension(table: &BehaviorTable, mode: ShatterMode, budget: &SearchBudget) -> Result<DimensionResult> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    if mode == ShatterMode::VC && table.d() != 2 {
        return Err(Error::NotBinary(table.d()));
    }
    let start = Instant::now();
    // 2^k <= |restrict(table, S)| <= |table|
    let info_cap = (usize::BITS - 1 - table.len().leading_zeros()) as usize;
    let size_cap = table.n().min(info_cap).min(MAX_SUBSET);

    let mut best: Option<ShatterWitness> = None;
    let mut status = SearchStatus::Exact;
    let mut examined = 0u64;
    let mut level: Vec<Vec<usize>> = (0..table.n()).map(|i| vec![i]).collect();
    let mut k = 1;

    while !level.is_empty() {
        if k > size_cap {
            if table.n().min(info_cap) > MAX_SUBSET {
                status = SearchStatus::LowerBound;
            }
            break;
        }
        if budget.time_limit.is_some_and(|t| start.elapsed() > t) {
            status = SearchStatus::LowerBound;
            break;
        }
        let allowed = match budget.max_subsets {
            Some(max) => (max.saturating_sub(examined)).min(level.len() as u64) as usize,
            None => level.len(),
        };
        if allowed < level.len() {
            status = SearchStatus::LowerBound;
        }
        let outcomes: Vec<Outcome> = level[..allowed]
            .par_iter()
            .map(|s| search_subset(table, s, mode, budget.max_templates_per_subset))
            .collect::<Result<_>>()?;
        examined += allowed as u64;

        let mut keep = HashSet::new();
        let mut kept = Vec::new();
        let mut found: Option<(usize, Vec<(u8, u8)>)> = None;
        for (i, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Outcome::Found(t) => {
                    if found.is_none() {
                        found = Some((i, t));
                    }
                    keep.insert(level[i].clone());
                    kept.push(level[i].clone());
                }
                Outcome::Undecided => {
                    status = SearchStatus::LowerBound;
                    keep.insert(level[i].clone());
                    kept.push(level[i].clone());
                }
                Outcome::Absent => {}
            }
        }
        if let Some((i, t)) = found {
            best = Some(build_witness(table, &level[i], mode, &t));
        }
        level = next_level(&kept, &keep);
        k += 1;
    }

    Ok(DimensionResult {
        mode,
        dim: best.as_ref().map_or(0, ShatterWitness::size),
        witness: best,
        status,
        subsets_examined: examined,
    })
}

pub fn natarajan_dimension(table: &BehaviorTable, budget: &SearchBudget) -> Result<DimensionResult> {
    dimension(table, ShatterMode::N, budget)
}

pub fn graph_dimension(table: &BehaviorTable, budget: &SearchBudget) -> Result<DimensionResult> {
    dimension(table, ShatterMode::G, budget)
}

pub fn vc_dimension(table: &BehaviorTable, budget: &SearchBudget) -> Result<DimensionResult> {
    dimension(table, ShatterMode::VC, budget)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundStrategy {
    /// Grow a subset along random point orders, keep the best trial.
    Random,
    /// Repeatedly add the point whose inclusion leaves the most realized rows.
    Greedy,
}

/// Heuristic lower bound: every returned witness is verified shattered.
pub fn dimension_lower_bound(
    table: &BehaviorTable,
    mode: ShatterMode,
    strategy: LowerBoundStrategy,
    seed: u64,
    trials: usize,
) -> Result<DimensionResult> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    if mode == ShatterMode::VC && table.d() != 2 {
        return Err(Error::NotBinary(table.d()));
    }
    let n = table.n();
    let mut examined = 0u64;
    let mut best: Option<ShatterWitness> = None;
    let consider = |w: ShatterWitness, best: &mut Option<ShatterWitness>| {
        let better = match best {
            None => true,
            Some(b) => {
                let mut ws = w.subset.clone();
                let mut bs = b.subset.clone();
                ws.sort_unstable();
                bs.sort_unstable();
                w.size() > b.size() || (w.size() == b.size() && ws < bs)
            }
        };
        if better {
            *best = Some(w);
        }
    };

    match strategy {
        LowerBoundStrategy::Random => {
            for trial in 0..trials {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(trial as u64);
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rng);
                let mut subset: Vec<usize> = Vec::new();
                let mut witness = None;
                for x in order {
                    if subset.len() == MAX_SUBSET {
                        break;
                    }
                    let mut cand = subset.clone();
                    cand.push(x);
                    cand.sort_unstable();
                    examined += 1;
                    if let Some(w) = is_shattered(table, &cand, mode)? {
                        subset = cand;
                        witness = Some(w);
                    }
                }
                if let Some(w) = witness {
                    consider(w, &mut best);
                }
            }
        }
        LowerBoundStrategy::Greedy => {
            let mut subset: Vec<usize> = Vec::new();
            loop {
                let mut pick: Option<(usize, ShatterWitness, usize)> = None;
                for x in (0..n).filter(|x| !subset.contains(x)) {
                    if subset.len() == MAX_SUBSET {
                        break;
                    }
                    let mut cand = subset.clone();
                    cand.push(x);
                    cand.sort_unstable();
                    examined += 1;
                    if let Some(w) = is_shattered(table, &cand, mode)? {
                        let rows = table.restrict(&cand)?.len();
                        if pick.as_ref().is_none_or(|(_, _, r)| rows > *r) {
                            pick = Some((x, w, rows));
                        }
                    }
                }
                match pick {
                    Some((x, w, _)) => {
                        subset.push(x);
                        subset.sort_unstable();
                        consider(w, &mut best);
                    }
                    None => break,
                }
            }
        }
    }

    Ok(DimensionResult {
        mode,
        dim: best.as_ref().map_or(0, ShatterWitness::size),
        witness: best,
        status: SearchStatus::LowerBound,
        subsets_examined: examined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LabelSpace;
    use itertools::Itertools;

    fn table(rows: &[Vec<u32>], d: u32) -> BehaviorTable {
        let n = rows.first().map_or(0, Vec::len);
        BehaviorTable::from_rows(rows, n, LabelSpace::new(d).unwrap()).unwrap()
    }

    fn full(n: usize, d: u32) -> BehaviorTable {
        let rows: Vec<Vec<u32>> =
            (0..n).map(|_| 1..=d).multi_cartesian_product().collect();
        table(&rows, d)
    }

    /// Brute-force N-shattering over every ordered (f1, f2) pair.
    fn brute_n(t: &BehaviorTable, s: &[usize]) -> bool {
        let d = t.d();
        let k = s.len();
        let labelings: Vec<Vec<u32>> = (0..k).map(|_| 1..=d).multi_cartesian_product().collect();
        let labelings = if k == 0 { vec![vec![]] } else { labelings };
        for f1 in &labelings {
            for f2 in &labelings {
                if f1.iter().zip(f2).any(|(a, b)| a == b) {
                    continue;
                }
                let ok = (0u32..1 << k).all(|tm| {
                    t.rows().any(|row| {
                        s.iter().enumerate().all(|(i, &x)| {
                            let want = if tm >> i & 1 == 1 { f1[i] } else { f2[i] };
                            row[x] as u32 == want
                        })
                    })
                });
                if ok {
                    return true;
                }
            }
        }
        false
    }

    fn brute_g(t: &BehaviorTable, s: &[usize]) -> bool {
        let d = t.d();
        let k = s.len();
        let labelings: Vec<Vec<u32>> = (0..k).map(|_| 1..=d).multi_cartesian_product().collect();
        let labelings = if k == 0 { vec![vec![]] } else { labelings };
        labelings.iter().any(|f| {
            (0u32..1 << k).all(|tm| {
                t.rows().any(|row| {
                    s.iter().enumerate().all(|(i, &x)| (tm >> i & 1 == 1) == (row[x] as u32 == f[i]))
                })
            })
        })
    }

    #[test]
    fn full_binary_class_shatters_everything() {
        let t = full(2, 2);
        let w = is_n_shattered(&t, &[0, 1]).unwrap().unwrap();
        assert_eq!(w.f1, vec![1, 1]);
        assert_eq!(w.f2, Some(vec![2, 2]));
        assert_eq!(w.realizers.len(), 4);
        w.verify(&t).unwrap();
    }

    #[test]
    fn single_row_shatters_nothing() {
        let t = table(&[vec![1, 2, 3]], 3);
        for s in [&[0][..], &[0, 1], &[2]] {
            assert!(is_n_shattered(&t, s).unwrap().is_none());
            assert!(is_g_shattered(&t, s).unwrap().is_none());
        }
        let r = natarajan_dimension(&t, &SearchBudget::unlimited()).unwrap();
        assert_eq!((r.dim, r.status), (0, SearchStatus::Exact));
        assert_eq!(graph_dimension(&t, &SearchBudget::unlimited()).unwrap().dim, 0);
    }

    #[test]
    fn empty_subset_is_shattered_by_nonempty_class() {
        let t = table(&[vec![1, 2]], 2);
        let w = is_n_shattered(&t, &[]).unwrap().unwrap();
        assert_eq!(w.realizers.len(), 1);
        w.verify(&t).unwrap();
    }

    #[test]
    fn g_shattering_full_ternary_single_point() {
        let t = full(1, 3);
        let w = is_g_shattered(&t, &[0]).unwrap().unwrap();
        assert!(w.f2.is_none());
        w.verify(&t).unwrap();
        // every reference label works
        for f in 1..=3u32 {
            assert!((0..2u32).all(|tm| t.rows().any(|r| (r[0] as u32 == f) == (tm == 1))));
        }
    }

    #[test]
    fn binary_g_matches_n() {
        let t = table(&[vec![1, 1, 2], vec![1, 2, 2], vec![2, 1, 1], vec![2, 2, 2], vec![1, 1, 1]], 2);
        for s in (0..3).powerset() {
            assert_eq!(
                is_n_shattered(&t, &s).unwrap().is_some(),
                is_g_shattered(&t, &s).unwrap().is_some(),
                "subset {s:?}"
            );
        }
    }

    #[test]
    fn complete_class_dimension_is_n() {
        for (n, d) in [(3, 2), (4, 3), (2, 4)] {
            let t = full(n, d);
            let r = natarajan_dimension(&t, &SearchBudget::unlimited()).unwrap();
            assert_eq!(r.dim, n);
            r.witness.unwrap().verify(&t).unwrap();
        }
    }

    #[test]
    fn errors_on_bad_input() {
        let t = full(2, 3);
        assert!(matches!(is_n_shattered(&t, &[5]), Err(Error::IndexOutOfRange { .. })));
        assert!(is_n_shattered(&t, &[0, 0]).is_err());
        assert!(matches!(vc_dimension(&t, &SearchBudget::unlimited()), Err(Error::NotBinary(3))));
        let empty = BehaviorTable::empty(2, LabelSpace::new(2).unwrap());
        assert!(matches!(natarajan_dimension(&empty, &SearchBudget::unlimited()), Err(Error::EmptyTable)));
    }

    #[test]
    fn budget_exhaustion_reports_lower_bound() {
        let t = full(4, 3);
        let budget = SearchBudget { max_subsets: Some(5), ..Default::default() };
        let r = natarajan_dimension(&t, &budget).unwrap();
        assert_eq!(r.status, SearchStatus::LowerBound);
        assert!(r.dim <= 4);
        if let Some(w) = &r.witness {
            w.verify(&t).unwrap();
        }
        let budget = SearchBudget { max_templates_per_subset: Some(1), ..Default::default() };
        let r = graph_dimension(&t, &budget).unwrap();
        assert!(r.dim <= 4);
    }

    #[test]
    fn lower_bound_on_complete_class() {
        let t = full(5, 3);
        let r = dimension_lower_bound(&t, ShatterMode::N, LowerBoundStrategy::Random, 1, 100).unwrap();
        assert_eq!(r.dim, 5);
        r.witness.unwrap().verify(&t).unwrap();
        let r = dimension_lower_bound(&t, ShatterMode::G, LowerBoundStrategy::Greedy, 0, 1).unwrap();
        assert_eq!(r.dim, 5);
        let single = table(&[vec![2, 2]], 2);
        let r = dimension_lower_bound(&single, ShatterMode::N, LowerBoundStrategy::Random, 0, 10).unwrap();
        assert_eq!((r.dim, r.witness), (0, None));
    }

    #[test]
    fn tampered_witness_fails_verification() {
        let t = full(2, 2);
        let mut w = is_n_shattered(&t, &[0, 1]).unwrap().unwrap();
        w.f2 = Some(vec![1, 2]);
        assert!(w.verify(&t).is_err());
        let mut w = is_n_shattered(&t, &[0, 1]).unwrap().unwrap();
        w.realizers.remove(&0);
        assert!(w.verify(&t).is_err());
    }

    #[test]
    fn witness_json_shape() {
        let t = full(1, 2);
        let w = is_n_shattered(&t, &[0]).unwrap().unwrap();
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(json, r#"{"mode":"N","subset":[0],"f1":[1],"f2":[2],"realizers":{"0":1,"1":0}}"#);
        let g = is_g_shattered(&t, &[0]).unwrap().unwrap();
        assert!(!serde_json::to_string(&g).unwrap().contains("f2"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn tables() -> impl Strategy<Value = BehaviorTable> {
            (1usize..5, 2u32..4).prop_flat_map(|(n, d)| {
                let row = proptest::collection::vec(1..=d, n);
                proptest::collection::vec(row, 1..40)
                    .prop_map(move |rows| table(&rows, d))
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(96))]

            #[test]
            fn checkers_match_brute_force(t in tables()) {
                for s in (0..t.n()).powerset() {
                    let n = is_n_shattered(&t, &s).unwrap();
                    prop_assert_eq!(n.is_some(), brute_n(&t, &s));
                    if let Some(w) = n { prop_assert!(w.verify(&t).is_ok()); }
                    let g = is_g_shattered(&t, &s).unwrap();
                    prop_assert_eq!(g.is_some(), brute_g(&t, &s));
                    if let Some(w) = g { prop_assert!(w.verify(&t).is_ok()); }
                }
            }

            #[test]
            fn shattering_is_monotone(t in tables()) {
                for s in (0..t.n()).powerset() {
                    if is_n_shattered(&t, &s).unwrap().is_some() {
                        for sub in s.iter().copied().powerset() {
                            prop_assert!(is_n_shattered(&t, &sub).unwrap().is_some());
                        }
                    }
                }
            }

            #[test]
            fn dimension_is_the_brute_force_maximum(t in tables()) {
                let brute = (0..t.n()).powerset().filter(|s| brute_n(&t, s)).map(|s| s.len()).max().unwrap();
                let r = natarajan_dimension(&t, &SearchBudget::unlimited()).unwrap();
                prop_assert_eq!(r.dim, brute);
                prop_assert!(r.is_exact());
                let g = graph_dimension(&t, &SearchBudget::unlimited()).unwrap();
                prop_assert!(g.dim >= r.dim);
                if let Some(w) = &r.witness {
                    prop_assert!((1usize << r.dim) <= t.restrict(&w.subset).unwrap().len());
                }
                let lb = dimension_lower_bound(&t, ShatterMode::N, LowerBoundStrategy::Random, 3, 4).unwrap();
                prop_assert!(lb.dim <= r.dim);
            }

            #[test]
            fn graph_dimension_within_sandwich(t in tables()) {
                let n = natarajan_dimension(&t, &SearchBudget::unlimited()).unwrap().dim;
                let g = graph_dimension(&t, &SearchBudget::unlimited()).unwrap().dim;
                prop_assert!(n <= g);
                let gap = crate::bounds::bendavid_gap(n as u64, t.d() as u64).unwrap();
                prop_assert!(gap.admits(g as u64));
            }

            #[test]
            fn g_shattering_is_monotone(t in tables()) {
                for s in (0..t.n()).powerset() {
                    if is_g_shattered(&t, &s).unwrap().is_some() {
                        for sub in s.iter().copied().powerset() {
                            prop_assert!(is_g_shattered(&t, &sub).unwrap().is_some());
                        }
                    }
                }
            }

            #[test]
            fn binary_dimensions_coincide(rows in proptest::collection::vec(proptest::collection::vec(1u32..=2, 4), 1..16)) {
                let t = table(&rows, 2);
                let b = SearchBudget::unlimited();
                let n = natarajan_dimension(&t, &b).unwrap().dim;
                prop_assert_eq!(n, graph_dimension(&t, &b).unwrap().dim);
                prop_assert_eq!(n, vc_dimension(&t, &b).unwrap().dim);
            }
        }
    }
}
