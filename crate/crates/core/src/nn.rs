//! Feed-forward multi-class networks with binary, linear and ReLU hidden
//! units, an identity output layer of `d` scores, and argmax prediction.
//!
//! Hidden layer `l` (1-based) reads only from layer `l - 1`; layer 0 is the
//! input. The output layer is fully connected to the last hidden layer (or
//! to the input when there are no hidden layers). There are no biases.

use std::collections::HashSet;

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BehaviorTable, LabelSpace, Sample, TableBuilder, MAX_LABELS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// `1{z > 0}`
    Binary,
    Linear,
    /// `z * 1{z > 0}`
    Relu,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Binary => (z > 0.0) as u8 as f64,
            Activation::Linear => z,
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
        }
    }
}

/// An incoming connection: a bare index into the previous layer, or an
/// explicit `(layer, index)` reference (which must name the previous layer).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Connection {
    Previous(usize),
    At { layer: usize, index: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub inputs: Vec<Connection>,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub size: usize,
    pub nodes: Vec<NodeSpec>,
}

/// Hidden layers plus the implicit `d`-score output layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkStructure {
    pub m: usize,
    pub layers: Vec<LayerSpec>,
    pub d: u32,
    pub p_budget: usize,
}

impl NetworkStructure {
    /// Connection weights in hidden layers.
    pub fn hidden_parameters(&self) -> usize {
        self.layers.iter().flat_map(|l| &l.nodes).map(|n| n.inputs.len()).sum()
    }

    /// Width feeding the output layer.
    pub fn last_width(&self) -> usize {
        self.layers.last().map_or(self.m, |l| l.nodes.len())
    }

    pub fn output_parameters(&self) -> usize {
        self.d as usize * self.last_width()
    }

    pub fn total_parameters(&self) -> usize {
        self.hidden_parameters() + self.output_parameters()
    }

    fn input_index(conn: Connection) -> usize {
        match conn {
            Connection::Previous(i) | Connection::At { index: i, .. } => i,
        }
    }

    /// Reports every violated structural invariant.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.m == 0 {
            errors.push("input dimension m must be >= 1".to_string());
        }
        if self.d == 0 || self.d > MAX_LABELS {
            errors.push(format!("class count d = {} must lie in 1..={MAX_LABELS}", self.d));
        }
        let mut prev_width = self.m;
        for (li, layer) in self.layers.iter().enumerate() {
            let l = li + 1;
            if layer.nodes.is_empty() {
                errors.push(format!("layer {l} has no nodes"));
            }
            if layer.size != layer.nodes.len() {
                errors.push(format!("layer {l} declares size {} but lists {} nodes", layer.size, layer.nodes.len()));
            }
            for (j, node) in layer.nodes.iter().enumerate() {
                if node.inputs.is_empty() {
                    errors.push(format!("node ({l},{j}) has no incoming connections"));
                }
                let mut seen = HashSet::new();
                for &conn in &node.inputs {
                    if let Connection::At { layer: from, .. } = conn {
                        if from + 1 != l {
                            errors.push(format!(
                                "node ({l},{j}) references layer {from}; only layer {} is adjacent",
                                l - 1
                            ));
                            continue;
                        }
                    }
                    let i = Self::input_index(conn);
                    if i >= prev_width {
                        errors.push(format!("node ({l},{j}) input {i} is outside layer {} of width {prev_width}", l - 1));
                    } else if !seen.insert(i) {
                        errors.push(format!("node ({l},{j}) lists input {i} twice"));
                    }
                }
            }
            prev_width = layer.nodes.len();
        }
        let hidden = self.hidden_parameters();
        if hidden > self.p_budget {
            errors.push(format!("{hidden} hidden parameters exceed the budget p = {}", self.p_budget));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Structure(errors))
        }
    }
}

pub fn validate_structure(structure: &NetworkStructure) -> Result<()> {
    structure.validate()
}

/// Hidden weights in node order (layer, node, input), output weights row-major `d x width`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightAssignment {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

impl WeightAssignment {
    pub fn zeros(structure: &NetworkStructure) -> Self {
        Self { hidden: vec![0.0; structure.hidden_parameters()], output: vec![0.0; structure.output_parameters()] }
    }

    fn from_flat(structure: &NetworkStructure, flat: &[f64]) -> Self {
        let h = structure.hidden_parameters();
        Self { hidden: flat[..h].to_vec(), output: flat[h..].to_vec() }
    }
}

/// Output scores and the argmax label (ties go to the smallest label).
pub fn forward(structure: &NetworkStructure, weights: &WeightAssignment, x: &[f64]) -> Result<(Vec<f64>, u32)> {
    structure.validate()?;
    forward_unchecked(structure, weights, x)
}

fn forward_unchecked(structure: &NetworkStructure, weights: &WeightAssignment, x: &[f64]) -> Result<(Vec<f64>, u32)> {
    if x.len() != structure.m {
        return Err(Error::DimensionMismatch { index: 0, got: x.len(), expected: structure.m });
    }
    if weights.hidden.len() != structure.hidden_parameters() || weights.output.len() != structure.output_parameters()
    {
        return Err(Error::InvalidParameter(format!(
            "weights have {}+{} entries, structure needs {}+{}",
            weights.hidden.len(),
            weights.output.len(),
            structure.hidden_parameters(),
            structure.output_parameters()
        )));
    }
    let mut prev: Vec<f64> = x.to_vec();
    let mut w = weights.hidden.iter();
    for layer in &structure.layers {
        let next: Vec<f64> = layer
            .nodes
            .iter()
            .map(|node| {
                let z: f64 = node
                    .inputs
                    .iter()
                    .map(|&c| w.next().expect("sized above") * prev[NetworkStructure::input_index(c)])
                    .sum();
                node.activation.apply(z)
            })
            .collect();
        prev = next;
    }
    let scores: Vec<f64> = weights
        .output
        .chunks(prev.len().max(1))
        .take(structure.d as usize)
        .map(|row| row.iter().zip(&prev).map(|(a, b)| a * b).sum())
        .collect();
    let mut best = 0;
    for k in 1..scores.len() {
        if scores[k] > scores[best] {
            best = k;
        }
    }
    Ok((scores, best as u32 + 1))
}

/// Bits `b_{k,k'} = 1{score_k > score_k'}` for `k < k'`, in order
/// `(1,2), (1,3), ..., (d-1,d)`.
pub fn pairwise_comparators(scores: &[f64]) -> Result<Vec<bool>> {
    if scores.len() < 2 {
        return Err(Error::InvalidParameter("comparators need d >= 2".into()));
    }
    let d = scores.len();
    let mut bits = Vec::with_capacity(d * (d - 1) / 2);
    for k in 0..d {
        for k2 in k + 1..d {
            bits.push(scores[k] - scores[k2] > 0.0);
        }
    }
    Ok(bits)
}

/// The label whose score is at least every other score according to the
/// bits, or `None` when the bits are cyclic. Exact when no scores tie.
pub fn argmax_from_comparators(bits: &[bool], d: usize) -> Option<u32> {
    let idx = |k: usize, k2: usize| k * d - k * (k + 1) / 2 + (k2 - k - 1);
    (0..d)
        .find(|&k| (0..d).filter(|&o| o != k).all(|o| if k < o { bits[idx(k, o)] } else { !bits[idx(o, k)] }))
        .map(|k| k as u32 + 1)
}

/// How weights are drawn for behavior sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightSampler {
    /// Independent uniform draws on `[low, high]`.
    Uniform {
        #[serde(default = "neg_one")]
        low: f64,
        #[serde(default = "pos_one")]
        high: f64,
    },
    /// Weights restricted to `values`. When `trials` covers the whole grid it
    /// is swept exhaustively; otherwise grid points are drawn at random.
    Grid {
        #[serde(default = "default_grid")]
        values: Vec<f64>,
    },
}

fn neg_one() -> f64 {
    -1.0
}

fn pos_one() -> f64 {
    1.0
}

fn default_grid() -> Vec<f64> {
    vec![-1.0, -0.5, 0.0, 0.5, 1.0]
}

impl Default for WeightSampler {
    fn default() -> Self {
        WeightSampler::Uniform { low: -1.0, high: 1.0 }
    }
}

impl WeightSampler {
    pub fn coarse_grid() -> Self {
        WeightSampler::Grid { values: default_grid() }
    }

    fn validate(&self) -> Result<()> {
        match self {
            WeightSampler::Uniform { low, high } if !(low <= high) || !low.is_finite() || !high.is_finite() => {
                Err(Error::InvalidParameter(format!("uniform sampler range [{low}, {high}] is invalid")))
            }
            WeightSampler::Grid { values } if values.is_empty() || values.iter().any(|v| !v.is_finite()) => {
                Err(Error::InvalidParameter("grid sampler needs finite values".into()))
            }
            _ => Ok(()),
        }
    }

    /// Number of grid points for `params` weights, if it fits in `u64`.
    fn grid_size(&self, params: usize) -> Option<u64> {
        match self {
            WeightSampler::Grid { values } => (values.len() as u64).checked_pow(params as u32),
            WeightSampler::Uniform { .. } => None,
        }
    }
}

/// Distinct label vectors seen over `trials` weight draws. Trial `t` uses RNG
/// stream `t` of `seed`, so more trials only add rows.
pub fn sample_behaviors(
    structure: &NetworkStructure,
    sample: &Sample,
    sampler: &WeightSampler,
    trials: usize,
    seed: u64,
) -> Result<BehaviorTable> {
    structure.validate()?;
    sampler.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("sample_behaviors needs trials >= 1".into()));
    }
    if sample.n() > 0 && sample.p() != structure.m {
        return Err(Error::InvalidParameter(format!(
            "sample has p = {}, network expects m = {}",
            sample.p(),
            structure.m
        )));
    }
    let n = sample.n();
    let labels = LabelSpace::new(structure.d)?;
    let params = structure.total_parameters();
    let sweep = sampler.grid_size(params).filter(|&g| g <= trials as u64);
    let count = sweep.unwrap_or(trials as u64);

    let draw = |t: u64| -> Vec<f64> {
        match (sampler, sweep) {
            (WeightSampler::Grid { values }, Some(_)) => {
                let mut rest = t;
                (0..params)
                    .map(|_| {
                        let v = values[(rest % values.len() as u64) as usize];
                        rest /= values.len() as u64;
                        v
                    })
                    .collect()
            }
            (WeightSampler::Grid { values }, None) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t);
                (0..params).map(|_| values[rng.gen_range(0..values.len())]).collect()
            }
            (WeightSampler::Uniform { low, high }, _) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t);
                let dist = Uniform::new_inclusive(*low, *high);
                (0..params).map(|_| dist.sample(&mut rng)).collect()
            }
        }
    };

    let builder = (0..count)
        .into_par_iter()
        .fold(
            || TableBuilder::new(n, labels),
            |mut b, t| {
                let weights = WeightAssignment::from_flat(structure, &draw(t));
                let row: Vec<u8> = sample
                    .points()
                    .iter()
                    .map(|x| forward_unchecked(structure, &weights, x).expect("validated").1 as u8)
                    .collect();
                b.insert_owned(row);
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

#[cfg(test)]
mod tests {
    use super::*;

    fn one_linear_node(p_budget: usize) -> NetworkStructure {
        serde_json::from_str(&format!(
            r#"{{"m":1,"layers":[{{"size":1,"nodes":[{{"inputs":[0],"activation":"linear"}}]}}],"d":2,"p_budget":{p_budget}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn tiny_structure_validates() {
        let s = one_linear_node(4);
        assert_eq!(s.total_parameters(), 3);
        s.validate().unwrap();
    }

    #[test]
    fn non_adjacent_reference_is_rejected() {
        let s: NetworkStructure = serde_json::from_str(
            r#"{"m":2,"layers":[
                {"size":1,"nodes":[{"inputs":[0,1],"activation":"binary"}]},
                {"size":1,"nodes":[{"inputs":[{"layer":0,"index":1}],"activation":"relu"}]}
            ],"d":2,"p_budget":10}"#,
        )
        .unwrap();
        match s.validate() {
            Err(Error::Structure(errs)) => {
                assert_eq!(errs.len(), 1);
                assert!(errs[0].contains("references layer 0"), "{errs:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parameter_budget_is_enforced() {
        let s = one_linear_node(0);
        assert!(matches!(s.validate(), Err(Error::Structure(e)) if e.len() == 1));
    }

    #[test]
    fn every_violation_is_listed() {
        let s: NetworkStructure = serde_json::from_str(
            r#"{"m":1,"layers":[{"size":2,"nodes":[{"inputs":[3],"activation":"linear"}]}],"d":0,"p_budget":0}"#,
        )
        .unwrap();
        match s.validate() {
            Err(Error::Structure(errs)) => assert_eq!(errs.len(), 4, "{errs:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn forward_examples() {
        let s = one_linear_node(4);
        let zero = WeightAssignment::zeros(&s);
        assert_eq!(forward(&s, &zero, &[3.0]).unwrap(), (vec![0.0, 0.0], 1));
        let w = WeightAssignment { hidden: vec![1.0], output: vec![2.0, -1.0] };
        assert_eq!(forward(&s, &w, &[1.0]).unwrap(), (vec![2.0, -1.0], 1));
        assert_eq!(forward(&s, &w, &[-1.0]).unwrap(), (vec![-2.0, 1.0], 2));
        assert!(forward(&s, &w, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn relu_blocks_negative_preactivation() {
        let s: NetworkStructure = serde_json::from_str(
            r#"{"m":1,"layers":[{"size":1,"nodes":[{"inputs":[0],"activation":"relu"}]}],"d":2,"p_budget":1}"#,
        )
        .unwrap();
        let w = WeightAssignment { hidden: vec![3.0], output: vec![5.0, -5.0] };
        let (scores, label) = forward(&s, &w, &[-1.0]).unwrap();
        assert_eq!(scores, vec![0.0, 0.0]);
        assert_eq!(label, 1);
        assert_eq!(Activation::Binary.apply(0.0), 0.0);
        assert_eq!(Activation::Relu.apply(-3.0), 0.0);
    }

    #[test]
    fn comparator_examples() {
        assert_eq!(pairwise_comparators(&[3.0, 1.0, 2.0]).unwrap(), vec![true, true, false]);
        assert_eq!(argmax_from_comparators(&[true, true, false], 3), Some(1));
        assert_eq!(pairwise_comparators(&[1.0, 1.0, 1.0]).unwrap(), vec![false; 3]);
        assert_eq!(argmax_from_comparators(&[false; 3], 3), Some(3));
        assert_eq!(argmax_from_comparators(&[true, false, true], 3), None);
        assert_eq!(pairwise_comparators(&[0.5, 0.2]).unwrap(), vec![true]);
        assert_eq!(pairwise_comparators(&[0.1, 0.2]).unwrap(), vec![false]);
        assert!(pairwise_comparators(&[1.0]).is_err());
    }

    #[test]
    fn zero_sampler_gives_one_constant_row() {
        let s = one_linear_node(4);
        let sample = Sample::from_scalars(&[-1.0, 0.5, 2.0]).unwrap();
        let t = sample_behaviors(&s, &sample, &WeightSampler::Grid { values: vec![0.0] }, 50, 1).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.row(0), &[1, 1, 1]);
    }

    #[test]
    fn grid_sweep_is_exhaustive_when_it_fits() {
        let s = one_linear_node(4);
        let sample = Sample::from_scalars(&[-1.0, 2.0]).unwrap();
        // 5^3 = 125 grid points
        let a = sample_behaviors(&s, &sample, &WeightSampler::coarse_grid(), 125, 1).unwrap();
        let b = sample_behaviors(&s, &sample, &WeightSampler::coarse_grid(), 10_000, 99).unwrap();
        assert_eq!(a, b);
        // the sign of (o1 - o2) * w decides both points at once
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn sampler_json() {
        let u: WeightSampler = serde_json::from_str(r#"{"kind":"uniform","params":{"low":-2,"high":2}}"#).unwrap();
        assert_eq!(u, WeightSampler::Uniform { low: -2.0, high: 2.0 });
        let g: WeightSampler = serde_json::from_str(r#"{"kind":"grid","params":{}}"#).unwrap();
        assert_eq!(g, WeightSampler::coarse_grid());
        assert!(serde_json::from_str::<WeightSampler>(r#"{"kind":"normal","params":{}}"#).is_err());
    }

    #[test]
    fn rows_grow_with_trials() {
        let s: NetworkStructure = serde_json::from_str(
            r#"{"m":2,"layers":[{"size":2,"nodes":[
                {"inputs":[0,1],"activation":"binary"},{"inputs":[0,1],"activation":"linear"}]}],
                "d":3,"p_budget":4}"#,
        )
        .unwrap();
        let sample = Sample::new(2, vec![vec![0.3, -0.2], vec![-0.7, 0.9], vec![0.1, 0.4], vec![1.0, 1.0]]).unwrap();
        let mut prev = 0;
        for trials in [1, 10, 100, 1000] {
            let t = sample_behaviors(&s, &sample, &WeightSampler::default(), trials, 4).unwrap();
            assert!(t.len() >= prev);
            prev = t.len();
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn linear_net() -> NetworkStructure {
            serde_json::from_str(
                r#"{"m":3,"layers":[
                    {"size":2,"nodes":[{"inputs":[0,1,2],"activation":"linear"},{"inputs":[0,2],"activation":"linear"}]},
                    {"size":1,"nodes":[{"inputs":[0,1],"activation":"linear"}]}],
                    "d":3,"p_budget":7}"#,
            )
            .unwrap()
        }

        proptest! {
            #[test]
            fn all_linear_networks_are_linear(
                hidden in proptest::collection::vec(-2.0f64..2.0, 7),
                output in proptest::collection::vec(-2.0f64..2.0, 3),
                x1 in proptest::collection::vec(-3.0f64..3.0, 3),
                x2 in proptest::collection::vec(-3.0f64..3.0, 3),
                alpha in 0.0f64..1.0,
            ) {
                let s = linear_net();
                let w = WeightAssignment { hidden, output };
                let mix: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
                let (s1, _) = forward(&s, &w, &x1).unwrap();
                let (s2, _) = forward(&s, &w, &x2).unwrap();
                let (sm, _) = forward(&s, &w, &mix).unwrap();
                for k in 0..3 {
                    prop_assert!((sm[k] - (alpha * s1[k] + (1.0 - alpha) * s2[k])).abs() < 1e-9);
                }
            }

            #[test]
            fn label_agrees_with_comparators(
                hidden in proptest::collection::vec(-2.0f64..2.0, 7),
                output in proptest::collection::vec(-2.0f64..2.0, 3),
                x in proptest::collection::vec(-3.0f64..3.0, 3),
            ) {
                let s = linear_net();
                let (scores, label) = forward(&s, &WeightAssignment { hidden, output }, &x).unwrap();
                let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                prop_assert_eq!(scores.iter().position(|&v| v == max).unwrap() as u32 + 1, label);
                let distinct = (0..3).all(|a| (a + 1..3).all(|b| scores[a] != scores[b]));
                if distinct {
                    let bits = pairwise_comparators(&scores).unwrap();
                    prop_assert_eq!(argmax_from_comparators(&bits, 3), Some(label));
                }
            }
        }
    }
}
