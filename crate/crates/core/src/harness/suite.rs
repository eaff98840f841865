use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{
    Budgets, ClassSpec, ExperimentConfig, Format, GeneratorSpec, OutputOptions, SampleSource, SignsTask, SuiteConfig,
    Task, SCHEMA_VERSION,
};
use super::report::{class_columns, csv_rows, emit_report};
use super::run::{run_experiment, ExperimentResult};
use crate::error::{Error, Result};
use crate::nn::{Activation, Connection, LayerSpec, NetworkStructure, NodeSpec, WeightSampler};
use crate::signs::{Monomial, PolynomialFamily, SignSearch};
use crate::trees::{ForestClassSpec, TreeClassSpec};

#[derive(Debug)]
pub struct SuiteOutcome {
    /// In suite order.
    pub results: Vec<(String, Result<ExperimentResult>)>,
}

impl SuiteOutcome {
    pub fn has_error(&self) -> bool {
        self.results.iter().any(|(_, r)| r.is_err())
    }

    pub fn has_failure(&self) -> bool {
        self.results.iter().any(|(_, r)| r.as_ref().is_ok_and(ExperimentResult::has_failure))
    }
}

/// Runs every experiment concurrently; `seed` overrides the configs' seeds.
pub fn run_suite(suite: &SuiteConfig, seed: Option<u64>) -> Result<SuiteOutcome> {
    suite.validate()?;
    let results = suite
        .experiments
        .par_iter()
        .map(|config| {
            let mut config = config.clone();
            if let Some(seed) = seed {
                config.seed = seed;
            }
            (config.name.clone(), run_experiment(&config))
        })
        .collect();
    Ok(SuiteOutcome { results })
}

/// Writes one report per experiment plus `summary.csv`, whose rows are
/// sorted by experiment name. Returns the written paths.
pub fn write_suite(outcome: &SuiteOutcome, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    let mut ordered: Vec<&(String, Result<ExperimentResult>)> = outcome.results.iter().collect();
    ordered.sort_by(|a, b| a.0.cmp(&b.0));

    let summary = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&summary)?;
    w.write_record(["experiment", "class", "params", "quantity", "value", "bound", "verdict"])?;
    for (name, result) in ordered {
        match result {
            Ok(r) => {
                paths.push(emit_report(r, dir, format)?);
                let (class, params) = class_columns(&r.config);
                for [q, v, b, verdict] in csv_rows(r) {
                    w.write_record([name, &class, &params, &q, &v, &b, &verdict])?;
                }
            }
            Err(e) => {
                let msg = e.to_string();
                w.write_record([name.as_str(), "", "", "error", "", msg.as_str(), "error"])?;
            }
        }
    }
    w.flush()?;
    paths.push(summary);
    Ok(paths)
}

fn experiment(name: &str, class: ClassSpec, sample: SampleSource, seed: u64, tasks: &[Task]) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        class: Some(class),
        sample: Some(sample),
        seed,
        tasks: tasks.to_vec(),
        budgets: Budgets::default(),
        signs: None,
        output: OutputOptions::default(),
    }
}

fn generator(n: usize) -> SampleSource {
    SampleSource::Generator(GeneratorSpec { n, low: 0.0, high: 1.0, stream: 0 })
}

/// A small suite touching every class kind and every task.
pub fn default_suite() -> SuiteConfig {
    use Task::*;
    let tree = |depth, p, d| TreeClassSpec { depth, p, d };
    let all = [Natarajan, Graph, Growth, Bounds];
    let relu_net = NetworkStructure {
        m: 1,
        layers: vec![LayerSpec {
            size: 2,
            nodes: vec![
                NodeSpec { inputs: vec![Connection::Previous(0)], activation: Activation::Relu },
                NodeSpec { inputs: vec![Connection::Previous(0)], activation: Activation::Binary },
            ],
        }],
        d: 2,
        p_budget: 2,
    };
    let mut signs = experiment(
        "sign-patterns",
        ClassSpec::Threshold { p: 1 },
        generator(1),
        5,
        &[SignPatterns],
    );
    signs.class = None;
    signs.sample = None;
    let m = |coef: f64, exps: &[u32]| Monomial { coef, exps: exps.to_vec() };
    signs.signs = Some(SignsTask {
        family: PolynomialFamily::new(
            vec!["u".into(), "v".into()],
            vec![
                vec![m(1.0, &[1, 0]), m(-0.5, &[0, 1])],
                vec![m(1.0, &[1, 1]), m(-0.25, &[0, 0])],
                vec![m(1.0, &[2, 0]), m(1.0, &[0, 2]), m(-1.0, &[0, 0])],
            ],
        )
        .expect("valid family"),
        search: SignSearch::default(),
    });
    SuiteConfig {
        schema_version: SCHEMA_VERSION,
        experiments: vec![
            experiment("tree-stump", ClassSpec::Tree(tree(2, 1, 2)), generator(6), 7, &[Natarajan, Graph, Vc, Growth, Bounds]),
            experiment("tree-L3-p2-d3", ClassSpec::Tree(tree(3, 2, 3)), generator(6), 11, &all),
            experiment(
                "forest-T2",
                ClassSpec::Forest(ForestClassSpec { tree: tree(2, 1, 2), trees: 2 }),
                generator(6),
                13,
                &all,
            ),
            experiment(
                "network-relu",
                ClassSpec::Network { structure: relu_net, sampler: WeightSampler::default(), trials: 2000 },
                generator(5),
                17,
                &[Natarajan, Graph, Vc, Growth, Bounds],
            ),
            experiment(
                "threshold-1d",
                ClassSpec::Threshold { p: 1 },
                SampleSource::Points(vec![vec![0.1], vec![0.5], vec![0.9]]),
                0,
                &[Natarajan, Vc, Growth],
            ),
            signs,
        ],
    }
}

/// Fails with the first experiment error, if any.
pub fn first_error(outcome: &SuiteOutcome) -> Option<(&str, &Error)> {
    outcome.results.iter().find_map(|(n, r)| r.as_ref().err().map(|e| (n.as_str(), e)))
}
