//! Growth counts on explicit samples and randomized lower bounds on `G(H, n)`.

use std::io::Write;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BehaviorTable, LabelSpace, Sample};
use crate::nn::{sample_behaviors, NetworkStructure, WeightSampler};
use crate::trees::{
    enumerate_forest_behaviors, enumerate_tree_behaviors, threshold_table, ForestClassSpec, TreeClassSpec,
};

/// Produces the behavior table of a hypothesis class on a sample.
pub trait BehaviorEnumerator: Sync {
    fn label_space(&self) -> LabelSpace;

    /// Dimension of the inputs the class accepts.
    fn input_dim(&self) -> usize;

    fn enumerate(&self, sample: &Sample) -> Result<BehaviorTable>;

    /// `false` when [`enumerate`](Self::enumerate) only sees a subset of the class.
    fn is_exhaustive(&self) -> bool {
        true
    }

    fn describe(&self) -> String;
}

/// Axis-aligned threshold queries `x -> 1{x_s <= theta}`.
#[derive(Clone, Copy, Debug)]
pub struct ThresholdClass {
    pub p: usize,
}

impl BehaviorEnumerator for ThresholdClass {
    fn label_space(&self) -> LabelSpace {
        LabelSpace::new(2).expect("two labels")
    }

    fn input_dim(&self) -> usize {
        self.p
    }

    fn enumerate(&self, sample: &Sample) -> Result<BehaviorTable> {
        threshold_table(sample)
    }

    fn describe(&self) -> String {
        format!("threshold(p={})", self.p)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TreeClass {
    pub spec: TreeClassSpec,
    pub cap: u64,
}

impl BehaviorEnumerator for TreeClass {
    fn label_space(&self) -> LabelSpace {
        LabelSpace::new(self.spec.d).expect("validated spec")
    }

    fn input_dim(&self) -> usize {
        self.spec.p
    }

    fn enumerate(&self, sample: &Sample) -> Result<BehaviorTable> {
        enumerate_tree_behaviors(&self.spec, sample, self.cap)
    }

    fn describe(&self) -> String {
        format!("tree(L={},p={},d={})", self.spec.depth, self.spec.p, self.spec.d)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ForestClass {
    pub spec: ForestClassSpec,
    pub cap: u64,
}

impl BehaviorEnumerator for ForestClass {
    fn label_space(&self) -> LabelSpace {
        LabelSpace::new(self.spec.tree.d).expect("validated spec")
    }

    fn input_dim(&self) -> usize {
        self.spec.tree.p
    }

    fn enumerate(&self, sample: &Sample) -> Result<BehaviorTable> {
        enumerate_forest_behaviors(&self.spec, sample, self.cap)
    }

    fn describe(&self) -> String {
        let t = self.spec.tree;
        format!("forest(L={},p={},d={},T={})", t.depth, t.p, t.d, self.spec.trees)
    }
}

/// A network class seen through randomly drawn weights.
#[derive(Clone, Debug)]
pub struct SampledNetworkClass {
    pub structure: NetworkStructure,
    pub sampler: WeightSampler,
    pub trials: usize,
    pub seed: u64,
}

impl BehaviorEnumerator for SampledNetworkClass {
    fn label_space(&self) -> LabelSpace {
        LabelSpace::new(self.structure.d).expect("validated structure")
    }

    fn input_dim(&self) -> usize {
        self.structure.m
    }

    fn enumerate(&self, sample: &Sample) -> Result<BehaviorTable> {
        sample_behaviors(&self.structure, sample, &self.sampler, self.trials, self.seed)
    }

    fn is_exhaustive(&self) -> bool {
        false
    }

    fn describe(&self) -> String {
        format!("network(m={},d={},p={})", self.structure.m, self.structure.d, self.structure.p_budget)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub n: usize,
    pub count: usize,
    pub sample_used: Sample,
    /// `false` when the count is only a lower bound on the class's realizations.
    pub exhaustive: bool,
}

pub fn growth_on_sample(enumerator: &dyn BehaviorEnumerator, sample: &Sample) -> Result<GrowthReport> {
    let table = enumerator.enumerate(sample)?;
    Ok(GrowthReport {
        n: sample.n(),
        count: table.len(),
        sample_used: sample.clone(),
        exhaustive: enumerator.is_exhaustive(),
    })
}

/// Draws "generic" samples: coordinates i.i.d. uniform on `[low, high)`, and
/// a coordinate value already used by an earlier point in the same feature
/// is redrawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleGenerator {
    #[serde(default)]
    pub low: f64,
    #[serde(default = "one")]
    pub high: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for SampleGenerator {
    fn default() -> Self {
        Self { low: 0.0, high: 1.0 }
    }
}

impl SampleGenerator {
    /// Points are drawn one after another from the `(seed, stream)` RNG, so a
    /// larger `n` extends the smaller sample rather than replacing it.
    pub fn generate(&self, n: usize, p: usize, seed: u64, stream: u64) -> Result<Sample> {
        if !(self.low < self.high) || !self.low.is_finite() || !self.high.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "generator range [{}, {}) is empty",
                self.low, self.high
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let dist = Uniform::new(self.low, self.high);
        let mut points: Vec<Vec<f64>> = Vec::with_capacity(n);
        for _ in 0..n {
            let mut x = Vec::with_capacity(p);
            for s in 0..p {
                let v = loop {
                    let v = dist.sample(&mut rng);
                    if points.iter().all(|q| q[s] != v) {
                        break v;
                    }
                };
                x.push(v);
            }
            points.push(x);
        }
        Sample::new(p, points)
    }
}

/// Maximum growth count over `trials` generic samples of size `n`; a
/// certified lower bound on `G(H, n)`. Ties keep the earliest trial.
pub fn growth_estimate(
    enumerator: &dyn BehaviorEnumerator,
    n: usize,
    generator: &SampleGenerator,
    trials: usize,
    seed: u64,
) -> Result<GrowthReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("growth_estimate needs n >= 1".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("growth_estimate needs at least one trial".into()));
    }
    let p = enumerator.input_dim();
    let reports: Vec<GrowthReport> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let sample = generator.generate(n, p, seed, t)?;
            growth_on_sample(enumerator, &sample)
        })
        .collect::<Result<_>>()?;
    let mut best = reports.into_iter().reduce(|a, b| if b.count > a.count { b } else { a }).expect("trials >= 1");
    best.exhaustive = false;
    Ok(best)
}

/// Writes reports as CSV with columns `class_spec,n,count,exhaustive,seed`.
pub fn write_growth_csv<W: Write>(out: W, rows: &[(String, &GrowthReport, u64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class_spec", "n", "count", "exhaustive", "seed"])?;
    for (class, r, seed) in rows {
        w.write_record([
            class.clone(),
            r.n.to_string(),
            r.count.to_string(),
            r.exhaustive.to_string(),
            seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
