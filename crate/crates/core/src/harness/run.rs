use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::config::{ClassSpec, ExperimentConfig, Task};
use crate::bounds::{bendavid_gap, solve_network, solve_thm1, solve_thm2, tree_growth_bound, BoundKind, BoundReport};
use crate::error::{Error, Result};
use crate::growth::{BehaviorEnumerator, ForestClass, SampledNetworkClass, ThresholdClass, TreeClass};
use crate::model::{BehaviorTable, Sample};
use crate::nn::Activation;
use crate::shatter::{dimension, DimensionResult, SearchStatus, ShatterMode};
use crate::signs::{count_sign_configs, lemma1_bound, SignCount};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome<T> {
    Done { value: T },
    Capped { reason: String },
    Skipped { reason: String },
}

impl<T> Outcome<T> {
    pub fn value(&self) -> Option<&T> {
        match self {
            Outcome::Done { value } => Some(value),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSummary {
    pub rows: usize,
    /// `false` for sampled classes, whose tables miss unseen behaviors.
    pub exhaustive: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthOutput {
    pub n: usize,
    pub count: usize,
    pub exhaustive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignsOutput {
    pub polys: usize,
    pub degree: u32,
    pub vars: usize,
    pub lemma_bound: Option<f64>,
    pub result: SignCount,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskOutputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub natarajan: Option<Outcome<DimensionResult>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<Outcome<DimensionResult>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vc: Option<Outcome<DimensionResult>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<Outcome<GrowthOutput>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Outcome<BoundReport>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signs: Option<Outcome<SignsOutput>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// `quantity <= bound_quantity`, with the verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub quantity: String,
    pub value: Option<u64>,
    pub bound_quantity: String,
    pub bound: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub version: String,
    pub name: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<Sample>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Outcome<TableSummary>>,
    pub outputs: TaskOutputs,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, u64>>,
}

impl ExperimentResult {
    pub fn has_failure(&self) -> bool {
        self.checks.iter().any(|c| c.verdict == Verdict::Fail)
    }
}

/// How a compared number relates to the true quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Evidence {
    Exact,
    Lower,
    Upper,
}

impl Evidence {
    fn of(dim: &DimensionResult) -> Self {
        if dim.status == SearchStatus::Exact {
            Evidence::Exact
        } else {
            Evidence::Lower
        }
    }
}

/// A violation fails only when the value cannot be too large and the bound
/// cannot be too small.
fn verdict(holds: bool, value: Evidence, bound: Evidence) -> Verdict {
    if holds {
        Verdict::Pass
    } else if value != Evidence::Upper && bound != Evidence::Lower {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    }
}

fn enumerator(class: &ClassSpec, cap: u64, seed: u64) -> Box<dyn BehaviorEnumerator> {
    match class {
        ClassSpec::Threshold { p } => Box::new(ThresholdClass { p: *p }),
        ClassSpec::Tree(spec) => Box::new(TreeClass { spec: *spec, cap }),
        ClassSpec::Forest(spec) => Box::new(ForestClass { spec: *spec, cap }),
        ClassSpec::Network { structure, sampler, trials } => Box::new(SampledNetworkClass {
            structure: structure.clone(),
            sampler: sampler.clone(),
            trials: *trials,
            seed,
        }),
    }
}

fn class_bound(class: &ClassSpec) -> Result<Option<BoundReport>> {
    match class {
        ClassSpec::Threshold { .. } => Ok(None),
        ClassSpec::Tree(t) => solve_thm1(t.p as u64, t.depth, t.d as u64).map(Some),
        ClassSpec::Forest(f) => {
            solve_thm2(f.tree.p as u64, f.tree.depth, f.trees as u64, f.tree.d as u64).map(Some)
        }
        ClassSpec::Network { structure, .. } => {
            let relu = structure.layers.iter().flat_map(|l| &l.nodes).any(|n| n.activation == Activation::Relu);
            let kind = if relu { BoundKind::ReluNetwork } else { BoundKind::BinaryNetwork };
            solve_network(kind, structure.p_budget as u64, structure.d as u64).map(Some)
        }
    }
}

/// Decimal rendering of the class growth bound on `n` points, or its `log2`
/// when the number is too long to print.
fn growth_bound_text(class: &ClassSpec, n: usize) -> Option<(f64, String)> {
    let (tree, trees) = match class {
        ClassSpec::Tree(t) => (*t, 1u32),
        ClassSpec::Forest(f) => (f.tree, f.trees as u32),
        _ => return None,
    };
    let log2 = trees as f64 * tree_growth_bound(tree.p as u64, n as u64, tree.depth, tree.d as u64);
    if log2 > 256.0 {
        return Some((log2, format!("2^{log2:.3}")));
    }
    let exact = crate::bounds::tree_growth_bound_exact(tree.p as u64, n as u64, tree.depth, tree.d as u64)
        .pow(trees);
    Some((log2, exact.to_string()))
}

struct Timer {
    enabled: bool,
    times: BTreeMap<String, u64>,
}

impl Timer {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.enabled {
            self.times.insert(name.to_string(), start.elapsed().as_millis() as u64);
        }
        out
    }
}

/// Runs the requested tasks and every cross-check their outputs allow.
///
/// Everything except the opt-in timings is a function of the config, so
/// repeated runs serialize identically.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let tasks = config.task_set();
    let mut timer = Timer { enabled: config.output.timings, times: BTreeMap::new() };
    let mut outputs = TaskOutputs::default();

    let needs_sample = tasks.iter().any(|t| t.needs_table());
    let sample = match (&config.class, &config.sample) {
        (Some(class), Some(source)) if needs_sample => Some(source.load(class.input_dim(), config.seed)?),
        _ => None,
    };

    let mut table: Option<Outcome<TableSummary>> = None;
    let mut behaviors: Option<BehaviorTable> = None;
    if let (Some(class), Some(sample)) = (&config.class, &sample) {
        let enumerator = enumerator(class, config.budgets.enumeration_cap, config.seed);
        match timer.time("enumerate", || enumerator.enumerate(sample)) {
            Ok(t) => {
                table = Some(Outcome::Done {
                    value: TableSummary { rows: t.len(), exhaustive: enumerator.is_exhaustive() },
                });
                behaviors = Some(t);
            }
            Err(e @ Error::EnumerationCap { .. }) => table = Some(Outcome::Capped { reason: e.to_string() }),
            Err(e) => return Err(e),
        }
    }
    let capped = |t: &Option<Outcome<TableSummary>>| match t {
        Some(Outcome::Capped { reason }) => reason.clone(),
        _ => "no behavior table".to_string(),
    };

    for (task, mode) in [(Task::Natarajan, ShatterMode::N), (Task::Graph, ShatterMode::G), (Task::Vc, ShatterMode::VC)] {
        if !tasks.contains(&task) {
            continue;
        }
        let out = match &behaviors {
            Some(t) => Outcome::Done {
                value: timer.time(&format!("{mode}"), || dimension(t, mode, &config.budgets.search))?,
            },
            None => Outcome::Capped { reason: capped(&table) },
        };
        match mode {
            ShatterMode::N => outputs.natarajan = Some(out),
            ShatterMode::G => outputs.graph = Some(out),
            ShatterMode::VC => outputs.vc = Some(out),
        }
    }

    if tasks.contains(&Task::Growth) {
        outputs.growth = Some(match (&behaviors, &table, &sample) {
            (Some(t), Some(Outcome::Done { value }), Some(s)) => {
                Outcome::Done { value: GrowthOutput { n: s.n(), count: t.len(), exhaustive: value.exhaustive } }
            }
            _ => Outcome::Capped { reason: capped(&table) },
        });
    }

    if tasks.contains(&Task::Bounds) {
        let class = config.class.as_ref().expect("validated");
        outputs.bounds = Some(match class {
            ClassSpec::Network { structure, .. } if structure.d < 2 => {
                Outcome::Skipped { reason: "network bound needs d >= 2".into() }
            }
            _ => match timer.time("bounds", || class_bound(class))? {
                Some(report) => Outcome::Done { value: report },
                None => Outcome::Skipped { reason: format!("no theorem covers the {} class", class.kind()) },
            },
        });
    }

    if tasks.contains(&Task::SignPatterns) {
        let signs = config.signs.as_ref().expect("validated");
        let family = &signs.family;
        let result = timer.time("signs", || count_sign_configs(family, &signs.search, config.seed))?;
        let (polys, degree, vars) = (family.len(), family.max_degree(), family.num_vars());
        let lemma_bound = lemma1_bound(polys as u64, degree.max(1) as u64, vars as u64).ok();
        outputs.signs = Some(Outcome::Done { value: SignsOutput { polys, degree, vars, lemma_bound, result } });
    }

    let checks = cross_checks(config, &outputs, behaviors.as_ref(), sample.as_ref());

    Ok(ExperimentResult {
        version: env!("CARGO_PKG_VERSION").to_string(),
        name: config.name.clone(),
        seed: config.seed,
        config: config.clone(),
        sample,
        table,
        outputs,
        checks,
        timings_ms: config.output.timings.then_some(timer.times),
    })
}

fn inconclusive(name: &str, quantity: &str, bound_quantity: &str, note: &str) -> Check {
    Check {
        name: name.into(),
        quantity: quantity.into(),
        value: None,
        bound_quantity: bound_quantity.into(),
        bound: String::new(),
        verdict: Verdict::Inconclusive,
        note: Some(note.into()),
    }
}

fn cross_checks(
    config: &ExperimentConfig,
    out: &TaskOutputs,
    table: Option<&BehaviorTable>,
    sample: Option<&Sample>,
) -> Vec<Check> {
    let mut checks = Vec::new();
    let d = config.class.as_ref().map_or(2, ClassSpec::d) as u64;
    let nat = out.natarajan.as_ref();
    let dn = nat.and_then(Outcome::value);

    if let (Some(nat), Some(bounds)) = (nat, out.bounds.as_ref()) {
        let (name, q, bq) = ("natarajan_vs_theorem", "d_N", "max_N");
        match (nat.value(), bounds) {
            (Some(dim), Outcome::Done { value: report }) => checks.push(Check {
                name: name.into(),
                quantity: q.into(),
                value: Some(dim.dim as u64),
                bound_quantity: format!("{bq} (theorem {})", u8::from(report.theorem)),
                bound: report.max_n.to_string(),
                verdict: verdict(dim.dim as u64 <= report.max_n, Evidence::of(dim), Evidence::Upper),
                note: None,
            }),
            (_, Outcome::Skipped { .. }) => {}
            _ => checks.push(inconclusive(name, q, bq, "natarajan dimension unavailable")),
        }
    }

    if let (Some(nat), Some(graph)) = (nat, out.graph.as_ref()) {
        match (nat.value(), graph.value()) {
            (Some(n), Some(g)) => {
                checks.push(Check {
                    name: "sandwich_lower".into(),
                    quantity: "d_N".into(),
                    value: Some(n.dim as u64),
                    bound_quantity: "d_G".into(),
                    bound: g.dim.to_string(),
                    verdict: verdict(n.dim <= g.dim, Evidence::of(n), Evidence::of(g)),
                    note: None,
                });
                if d >= 2 {
                    let gap = bendavid_gap(n.dim as u64, d).expect("d >= 2");
                    checks.push(Check {
                        name: "sandwich_upper".into(),
                        quantity: "d_G".into(),
                        value: Some(g.dim as u64),
                        bound_quantity: "4.67*log2(d)*d_N".into(),
                        bound: gap.to_string(),
                        verdict: verdict(gap.admits(g.dim as u64), Evidence::of(g), Evidence::of(n)),
                        note: None,
                    });
                }
            }
            _ => {
                checks.push(inconclusive("sandwich_lower", "d_N", "d_G", "dimension unavailable"));
                if d >= 2 {
                    checks.push(inconclusive("sandwich_upper", "d_G", "4.67*log2(d)*d_N", "dimension unavailable"));
                }
            }
        }
    }

    if nat.is_some() {
        let (name, q, bq) = ("growth_link", "2^d_N", "rows restricted to witness");
        match (dn, table) {
            (Some(dim), Some(t)) => {
                let subset = dim.witness.as_ref().map_or(&[][..], |w| &w.subset[..]);
                let restricted = if t.is_empty() { 0 } else { t.restrict(subset).map_or(0, |r| r.len()) };
                let lhs = 1u64 << dim.dim;
                checks.push(Check {
                    name: name.into(),
                    quantity: q.into(),
                    value: Some(lhs),
                    bound_quantity: bq.into(),
                    bound: restricted.to_string(),
                    verdict: verdict(lhs <= restricted as u64, Evidence::of(dim), Evidence::Exact),
                    note: None,
                });
            }
            _ => checks.push(inconclusive(name, q, bq, "natarajan dimension unavailable")),
        }
    }

    if let Some(growth) = out.growth.as_ref() {
        let class = config.class.as_ref().expect("validated");
        let n = sample.map_or(0, Sample::n);
        let evidence = match growth.value() {
            Some(g) if g.exhaustive => Evidence::Exact,
            _ => Evidence::Lower,
        };
        let count = growth.value().map(|g| g.count as u64);
        if let Some((log2, text)) = growth_bound_text(class, n) {
            let (name, q, bq) = ("growth_vs_class_bound", "growth_count", "class growth bound");
            match count {
                Some(c) => {
                    let holds = if log2 > 256.0 { true } else { BigUint::from(c) <= text.parse::<BigUint>().expect("decimal") };
                    checks.push(Check {
                        name: name.into(),
                        quantity: q.into(),
                        value: Some(c),
                        bound_quantity: bq.into(),
                        bound: text,
                        verdict: verdict(holds, evidence, Evidence::Upper),
                        note: None,
                    });
                }
                None => checks.push(inconclusive(name, q, bq, "behavior table capped")),
            }
        }
        let (name, q, bq) = ("growth_vs_trivial", "growth_count", "d^n");
        match count {
            Some(c) => {
                let trivial = BigUint::from(d).pow(n as u32);
                checks.push(Check {
                    name: name.into(),
                    quantity: q.into(),
                    value: Some(c),
                    bound_quantity: bq.into(),
                    bound: trivial.to_string(),
                    verdict: verdict(BigUint::from(c) <= trivial, evidence, Evidence::Exact),
                    note: None,
                });
            }
            None => checks.push(inconclusive(name, q, bq, "behavior table capped")),
        }
    }

    if let Some(Outcome::Done { value: s }) = out.signs.as_ref() {
        let count = s.result.count as u64;
        let pow = if s.polys < 64 { Some(1u64 << s.polys) } else { None };
        let (holds, bound) = match (pow, s.lemma_bound) {
            (Some(p), Some(l)) if (p as f64) <= l => (count <= p, p.to_string()),
            (_, Some(l)) => (count as f64 <= l, format!("{l}")),
            (Some(p), None) => (count <= p, p.to_string()),
            (None, None) => (true, format!("2^{}", s.polys)),
        };
        checks.push(Check {
            name: "signs_vs_lemma".into(),
            quantity: "sign_configs".into(),
            value: Some(count),
            bound_quantity: "min(2^R, (8e*deg*R/vars)^vars)".into(),
            bound,
            verdict: verdict(holds, Evidence::Lower, Evidence::Upper),
            note: None,
        });
    }

    checks
}

impl ClassSpec {
    /// The enumerator for this class; `seed` drives weight sampling.
    pub fn enumerator(&self, cap: u64, seed: u64) -> Box<dyn BehaviorEnumerator> {
        enumerator(self, cap, seed)
    }
}
