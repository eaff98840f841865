//! Samples, label spaces and behavior tables.
//!
//! A [`BehaviorTable`] is the set of distinct label vectors a hypothesis
//! class realizes on a fixed, ordered sample. Column `i` is sample point
//! `i`; rows are kept deduplicated and in lexicographic order so that
//! every report built from a table is byte-stable.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest class count a table can store (labels are packed into bytes).
pub const MAX_LABELS: u32 = u8::MAX as u32;

/// The label set `{1, ..., d}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct LabelSpace(u32);

impl LabelSpace {
    pub fn new(d: u32) -> Result<Self> {
        if d == 0 || d > MAX_LABELS {
            return Err(Error::InvalidParameter(format!(
                "class count d = {d} must lie in 1..={MAX_LABELS}"
            )));
        }
        Ok(Self(d))
    }

    pub fn d(self) -> u32 {
        self.0
    }

    pub fn contains(self, label: u32) -> bool {
        (1..=self.0).contains(&label)
    }

    pub fn labels(self) -> impl Iterator<Item = u32> {
        1..=self.0
    }
}

impl TryFrom<u32> for LabelSpace {
    type Error = Error;

    fn try_from(d: u32) -> Result<Self> {
        Self::new(d)
    }
}

impl From<LabelSpace> for u32 {
    fn from(l: LabelSpace) -> u32 {
        l.0
    }
}

/// An ordered list of `n` feature vectors of common dimension `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampleRepr")]
pub struct Sample {
    p: usize,
    points: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct SampleRepr {
    p: usize,
    points: Vec<Vec<f64>>,
}

impl TryFrom<SampleRepr> for Sample {
    type Error = Error;

    fn try_from(r: SampleRepr) -> Result<Self> {
        Sample::new(r.p, r.points)
    }
}

impl Sample {
    pub fn new(p: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidParameter("feature dimension p must be >= 1".into()));
        }
        for (index, x) in points.iter().enumerate() {
            if x.len() != p {
                return Err(Error::DimensionMismatch { index, got: x.len(), expected: p });
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("point {index} has a non-finite coordinate")));
            }
        }
        Ok(Self { p, points })
    }

    /// Convenience constructor for one-dimensional samples.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(1, values.iter().map(|&v| vec![v]).collect())
    }

    /// Reads an `n x p` headerless CSV; lines starting with `#` are skipped.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut points = Vec::new();
        for record in reader.records() {
            let record = record?;
            let row = record
                .iter()
                .map(|field| {
                    field.parse::<f64>().map_err(|e| {
                        Error::InvalidParameter(format!("bad coordinate {field:?}: {e}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            points.push(row);
        }
        let p = points.first().map_or(0, Vec::len);
        Self::new(p, points)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    /// Keeps only the listed points, in the listed order.
    pub fn select(&self, indices: &[usize]) -> Result<Sample> {
        let n = self.n();
        let points = indices
            .iter()
            .map(|&i| self.points.get(i).cloned().ok_or(Error::IndexOutOfRange { index: i, n }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Sample { p: self.p, points })
    }

    pub fn prefix(&self, len: usize) -> Sample {
        Sample { p: self.p, points: self.points[..len.min(self.n())].to_vec() }
    }
}

/// Deduplicated, lexicographically ordered label vectors over a fixed sample.
///
/// Labels are stored 1-based, one byte each, row-major.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TableRepr", into = "TableRepr")]
pub struct BehaviorTable {
    n: usize,
    labels: LabelSpace,
    len: usize,
    data: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    n: usize,
    d: u32,
    rows: Vec<Vec<u32>>,
}

impl TryFrom<TableRepr> for BehaviorTable {
    type Error = Error;

    fn try_from(r: TableRepr) -> Result<Self> {
        BehaviorTable::from_rows(&r.rows, r.n, LabelSpace::new(r.d)?)
    }
}

impl From<BehaviorTable> for TableRepr {
    fn from(t: BehaviorTable) -> TableRepr {
        TableRepr {
            n: t.n,
            d: t.d(),
            rows: t.rows().map(|r| r.iter().map(|&l| l as u32).collect()).collect(),
        }
    }
}

impl fmt::Debug for BehaviorTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BehaviorTable")
            .field("n", &self.n)
            .field("d", &self.d())
            .field("rows", &self.rows().collect::<Vec<_>>())
            .finish()
    }
}

impl BehaviorTable {
    /// Validates, deduplicates and sorts `rows`.
    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R], n: usize, labels: LabelSpace) -> Result<Self> {
        let mut builder = TableBuilder::new(n, labels);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n {
                return Err(Error::RowLength { row: i, got: row.len(), expected: n });
            }
            let mut packed = Vec::with_capacity(n);
            for (col, &label) in row.iter().enumerate() {
                if !labels.contains(label) {
                    return Err(Error::LabelOutOfRange { row: i, col, label, d: labels.d() });
                }
                packed.push(label as u8);
            }
            builder.insert_owned(packed);
        }
        Ok(builder.finish())
    }

    pub fn empty(n: usize, labels: LabelSpace) -> Self {
        Self { n, labels, len: 0, data: Vec::new() }
    }

    /// Number of sample points (columns).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.labels.d()
    }

    pub fn label_space(&self) -> LabelSpace {
        self.labels
    }

    /// Number of distinct rows.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[u8]> + Clone + '_ {
        (0..self.len).map(move |i| self.row(i))
    }

    pub fn contains_row(&self, row: &[u8]) -> bool {
        self.position(row).is_some()
    }

    /// Index of `row` in the canonical order.
    pub fn position(&self, row: &[u8]) -> Option<usize> {
        if row.len() != self.n {
            return None;
        }
        let mut lo = 0;
        let mut hi = self.len;
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.row(mid).cmp(row) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Projects every row onto `subset` (in the given order) and deduplicates.
    ///
    /// Restricting a nonempty table to the empty set yields one empty row.
    pub fn restrict(&self, subset: &[usize]) -> Result<BehaviorTable> {
        for &index in subset {
            if index >= self.n {
                return Err(Error::IndexOutOfRange { index, n: self.n });
            }
        }
        let mut builder = TableBuilder::new(subset.len(), self.labels);
        for row in self.rows() {
            builder.insert_owned(subset.iter().map(|&i| row[i]).collect());
        }
        Ok(builder.finish())
    }

    /// Sorted distinct labels observed in column `col`.
    pub fn column_labels(&self, col: usize) -> Vec<u8> {
        let mut seen = [false; 256];
        for row in self.rows() {
            seen[row[col] as usize] = true;
        }
        (1..=255u8).filter(|&l| seen[l as usize]).collect()
    }

    /// `log2` of the largest possible row count, `n * log2(d)`.
    pub fn log2_capacity(&self) -> f64 {
        self.n as f64 * (self.d() as f64).log2()
    }
}

/// Free-function form of [`BehaviorTable::from_rows`] keyed on a sample.
pub fn dedup_behaviors<R: AsRef<[u32]>>(
    raw_rows: &[R],
    sample: &Sample,
    labels: LabelSpace,
) -> Result<BehaviorTable> {
    BehaviorTable::from_rows(raw_rows, sample.n(), labels)
}

/// Incremental deduplicating collector used by the enumerators.
#[derive(Clone, Debug)]
pub struct TableBuilder {
    n: usize,
    labels: LabelSpace,
    seen: HashSet<Box<[u8]>>,
}

impl TableBuilder {
    pub fn new(n: usize, labels: LabelSpace) -> Self {
        Self { n, labels, seen: HashSet::new() }
    }

    /// Inserts a packed 1-based row. Returns `true` when the row is new.
    pub fn insert(&mut self, row: &[u8]) -> bool {
        debug_assert_eq!(row.len(), self.n);
        if self.seen.contains(row) {
            return false;
        }
        self.seen.insert(row.into())
    }

    pub fn insert_owned(&mut self, row: Vec<u8>) -> bool {
        debug_assert_eq!(row.len(), self.n);
        self.seen.insert(row.into_boxed_slice())
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    pub fn merge(&mut self, other: TableBuilder) {
        if other.seen.len() > self.seen.len() {
            let small = std::mem::replace(&mut self.seen, other.seen);
            self.seen.extend(small);
        } else {
            self.seen.extend(other.seen);
        }
    }

    pub fn finish(self) -> BehaviorTable {
        let mut rows: Vec<Box<[u8]>> = self.seen.into_iter().collect();
        rows.sort_unstable();
        let len = rows.len();
        let mut data = Vec::with_capacity(len * self.n);
        for r in &rows {
            data.extend_from_slice(r);
        }
        BehaviorTable { n: self.n, labels: self.labels, len, data }
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn raw_rows() -> impl Strategy<Value = (usize, u32, Vec<Vec<u32>>)> {
        (1usize..5, 1u32..4).prop_flat_map(|(n, d)| {
            let row = proptest::collection::vec(1..=d, n);
            (Just(n), Just(d), proptest::collection::vec(row, 0..20))
        })
    }

    proptest! {
        #[test]
        fn dedup_is_idempotent_and_capped((n, d, rows) in raw_rows()) {
            let labels = LabelSpace::new(d).unwrap();
            let t = BehaviorTable::from_rows(&rows, n, labels).unwrap();
            let again: Vec<Vec<u32>> = t.rows().map(|r| r.iter().map(|&l| l as u32).collect()).collect();
            prop_assert_eq!(&BehaviorTable::from_rows(&again, n, labels).unwrap(), &t);
            prop_assert!(t.len() <= rows.len());
            prop_assert!((t.len() as f64) <= (d as f64).powi(n as i32));
        }

        #[test]
        fn restriction_is_monotone((n, d, rows) in raw_rows(), mask in 0u32..32, extra in 0u32..32) {
            let t = BehaviorTable::from_rows(&rows, n, LabelSpace::new(d).unwrap()).unwrap();
            let small: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let big: Vec<usize> = (0..n).filter(|i| (mask | extra) >> i & 1 == 1).collect();
            prop_assert!(t.restrict(&small).unwrap().len() <= t.restrict(&big).unwrap().len());
        }
    }
}
