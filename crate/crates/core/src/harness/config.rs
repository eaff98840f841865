use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::SampleGenerator;
use crate::model::Sample;
use crate::nn::{NetworkStructure, WeightSampler};
use crate::shatter::SearchBudget;
use crate::signs::{PolynomialFamily, SignSearch};
use crate::trees::{ForestClassSpec, TreeClassSpec, DEFAULT_CAP, MAX_POINTS};

pub const SCHEMA_VERSION: u32 = 1;

/// The hypothesis class an experiment enumerates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassSpec {
    Threshold {
        p: usize,
    },
    Tree(TreeClassSpec),
    Forest(ForestClassSpec),
    Network {
        structure: NetworkStructure,
        #[serde(default)]
        sampler: WeightSampler,
        #[serde(default = "default_trials")]
        trials: usize,
    },
}

fn default_trials() -> usize {
    10_000
}

impl ClassSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ClassSpec::Threshold { .. } => "threshold",
            ClassSpec::Tree(_) => "tree",
            ClassSpec::Forest(_) => "forest",
            ClassSpec::Network { .. } => "network",
        }
    }

    /// Compact `key=value` list used in CSV output.
    pub fn params(&self) -> String {
        match self {
            ClassSpec::Threshold { p } => format!("p={p}"),
            ClassSpec::Tree(t) => format!("L={};p={};d={}", t.depth, t.p, t.d),
            ClassSpec::Forest(f) => format!("L={};p={};d={};T={}", f.tree.depth, f.tree.p, f.tree.d, f.trees),
            ClassSpec::Network { structure, trials, .. } => {
                format!("m={};d={};p={};trials={trials}", structure.m, structure.d, structure.p_budget)
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ClassSpec::Threshold { p } => *p,
            ClassSpec::Tree(t) => t.p,
            ClassSpec::Forest(f) => f.tree.p,
            ClassSpec::Network { structure, .. } => structure.m,
        }
    }

    pub fn d(&self) -> u32 {
        match self {
            ClassSpec::Threshold { .. } => 2,
            ClassSpec::Tree(t) => t.d,
            ClassSpec::Forest(f) => f.tree.d,
            ClassSpec::Network { structure, .. } => structure.d,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ClassSpec::Threshold { p } if *p == 0 => Err(Error::InvalidParameter("p must be >= 1".into())),
            ClassSpec::Threshold { .. } => Ok(()),
            ClassSpec::Tree(t) => t.validate(),
            ClassSpec::Forest(f) => f.validate(),
            ClassSpec::Network { structure, trials, .. } => {
                structure.validate()?;
                if *trials == 0 {
                    return Err(Error::InvalidParameter("trials must be >= 1".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n: usize,
    #[serde(default)]
    pub low: f64,
    #[serde(default = "one")]
    pub high: f64,
    /// RNG stream; the seed is the experiment's.
    #[serde(default)]
    pub stream: u64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleSource {
    Generator(GeneratorSpec),
    /// Headerless CSV, one point per line.
    File(PathBuf),
    Points(Vec<Vec<f64>>),
}

impl SampleSource {
    pub fn load(&self, p: usize, seed: u64) -> Result<Sample> {
        let sample = match self {
            SampleSource::Generator(g) => {
                SampleGenerator { low: g.low, high: g.high }.generate(g.n, p, seed, g.stream)?
            }
            SampleSource::File(path) => Sample::from_csv(path)?,
            SampleSource::Points(points) => Sample::new(p, points.clone())?,
        };
        if sample.p() != p {
            return Err(Error::InvalidParameter(format!("sample has p = {}, class expects {p}", sample.p())));
        }
        if sample.n() == 0 || sample.n() > MAX_POINTS {
            return Err(Error::InvalidParameter(format!(
                "sample has {} points, expected 1..={MAX_POINTS}",
                sample.n()
            )));
        }
        Ok(sample)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Natarajan,
    Graph,
    Vc,
    Growth,
    Bounds,
    SignPatterns,
}

impl Task {
    /// Tasks that need the class's behavior table.
    pub fn needs_table(self) -> bool {
        matches!(self, Task::Natarajan | Task::Graph | Task::Vc | Task::Growth)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    #[serde(default)]
    pub search: SearchBudget,
    #[serde(default = "default_cap")]
    pub enumeration_cap: u64,
}

fn default_cap() -> u64 {
    DEFAULT_CAP
}

impl Default for Budgets {
    fn default() -> Self {
        Self { search: SearchBudget::default(), enumeration_cap: DEFAULT_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignsTask {
    pub family: PolynomialFamily,
    #[serde(default)]
    pub search: SignSearch,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Wall-clock timings make results differ between runs, so they are opt-in.
    #[serde(default)]
    pub timings: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<ClassSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSource>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signs: Option<SignsTask>,
    #[serde(default)]
    pub output: OutputOptions,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a config; relative sample paths are resolved
    /// against the config's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut config: Self = serde_json::from_str(&text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        config.validate()?;
        Ok(config)
    }

    pub(crate) fn resolve_paths(&mut self, base: &Path) {
        if let Some(SampleSource::File(file)) = &mut self.sample {
            if file.is_relative() {
                *file = base.join(&*file);
            }
        }
    }

    /// Collects every field-level problem.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            errors.push(format!("schema_version: expected {SCHEMA_VERSION}, got {}", self.schema_version));
        }
        if self.name.is_empty()
            || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        {
            errors.push(format!("name: {:?} must be non-empty and use only [A-Za-z0-9._-]", self.name));
        }
        if let Some(class) = &self.class {
            if let Err(e) = class.validate() {
                errors.push(format!("class: {e}"));
            }
        }
        match &self.sample {
            Some(SampleSource::Generator(g)) => {
                if g.n == 0 || g.n > MAX_POINTS {
                    errors.push(format!("sample.generator.n: {} must lie in 1..={MAX_POINTS}", g.n));
                }
                if !(g.low < g.high) || !g.low.is_finite() || !g.high.is_finite() {
                    errors.push(format!("sample.generator: range [{}, {}) is empty", g.low, g.high));
                }
            }
            Some(SampleSource::File(path)) if !path.is_file() => {
                errors.push(format!("sample.file: {} does not exist", path.display()));
            }
            Some(SampleSource::Points(points)) if points.is_empty() || points.len() > MAX_POINTS => {
                errors.push(format!("sample.points: {} points, expected 1..={MAX_POINTS}", points.len()));
            }
            _ => {}
        }
        let table_tasks = self.tasks.iter().any(|t| t.needs_table());
        if table_tasks && self.class.is_none() {
            errors.push("class: required by the dimension and growth tasks".into());
        }
        if table_tasks && self.sample.is_none() {
            errors.push("sample: required by the dimension and growth tasks".into());
        }
        if self.tasks.contains(&Task::Bounds) && self.class.is_none() {
            errors.push("class: required by the bounds task".into());
        }
        if self.tasks.contains(&Task::Vc) {
            if let Some(class) = &self.class {
                if class.d() != 2 {
                    errors.push(format!("tasks: vc needs a two-label class, class has d = {}", class.d()));
                }
            }
        }
        if self.tasks.contains(&Task::SignPatterns) && self.signs.is_none() {
            errors.push("signs: required by the sign-patterns task".into());
        }
        let b = &self.budgets;
        if b.enumeration_cap == 0 {
            errors.push("budgets.enumeration_cap: must be positive".into());
        }
        if b.search.max_subsets == Some(0) {
            errors.push("budgets.search.max_subsets: must be positive".into());
        }
        if b.search.max_templates_per_subset == Some(0) {
            errors.push("budgets.search.max_templates_per_subset: must be positive".into());
        }
        if b.search.time_limit.is_some_and(|t| t.is_zero()) {
            errors.push("budgets.search.time_limit: must be positive".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Requested tasks without duplicates, in canonical order.
    pub fn task_set(&self) -> Vec<Task> {
        let mut tasks = self.tasks.clone();
        tasks.sort();
        tasks.dedup();
        tasks
    }
}

/// Several experiments run and summarized together.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub schema_version: u32,
    pub experiments: Vec<ExperimentConfig>,
}

impl SuiteConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut suite: Self = serde_json::from_str(&text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        for config in &mut suite.experiments {
            config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        }
        suite.validate()?;
        Ok(suite)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            errors.push(format!("schema_version: expected {SCHEMA_VERSION}, got {}", self.schema_version));
        }
        let mut names: Vec<&str> = self.experiments.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        for pair in names.windows(2) {
            if pair[0] == pair[1] {
                errors.push(format!("experiments: duplicate name {:?}", pair[0]));
            }
        }
        for config in &self.experiments {
            if let Err(Error::Config(list)) = config.validate() {
                errors.extend(list.into_iter().map(|e| format!("{}: {e}", config.name)));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TREE: &str = r#"{
        "schema_version": 1,
        "name": "stump",
        "class": {"kind": "tree", "L": 2, "p": 1, "d": 2},
        "sample": {"generator": {"n": 6}},
        "seed": 7,
        "tasks": ["natarajan", "bounds"]
    }"#;

    #[test]
    fn parses_tree_config() {
        let c = ExperimentConfig::from_json(TREE).unwrap();
        assert_eq!(c.class.as_ref().unwrap().params(), "L=2;p=1;d=2");
        assert_eq!(c.task_set(), vec![Task::Natarajan, Task::Bounds]);
        assert_eq!(c.budgets.enumeration_cap, DEFAULT_CAP);
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad = TREE.replace("\"seed\": 7", "\"seed\": 7, \"sede\": 1");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(Error::Config(_))));
        let bad_class = TREE.replace("\"d\": 2}", "\"d\": 2, \"depth\": 3}");
        assert!(ExperimentConfig::from_json(&bad_class).is_err());
        let bad_gen = TREE.replace("{\"n\": 6}", "{\"n\": 6, \"m\": 1}");
        assert!(ExperimentConfig::from_json(&bad_gen).is_err());
    }

    #[test]
    fn reports_every_field_problem() {
        let bad = r#"{
            "schema_version": 2,
            "name": "a b",
            "class": {"kind": "tree", "L": 0, "p": 1, "d": 3},
            "tasks": ["vc", "growth", "sign-patterns"],
            "budgets": {"enumeration_cap": 0}
        }"#;
        let Err(Error::Config(errors)) = ExperimentConfig::from_json(bad) else { panic!("expected config error") };
        for field in ["schema_version", "name", "class", "sample", "vc", "signs", "enumeration_cap"] {
            assert!(errors.iter().any(|e| e.contains(field)), "no message for {field}: {errors:?}");
        }
    }

    #[test]
    fn network_and_forest_classes() {
        let forest = r#"{"schema_version":1,"name":"f","class":{"kind":"forest","L":2,"p":1,"d":2,"T":3}}"#;
        let c = ExperimentConfig::from_json(forest).unwrap();
        assert_eq!(c.class.unwrap().params(), "L=2;p=1;d=2;T=3");
        let net = r#"{"schema_version":1,"name":"n","class":{"kind":"network","trials":50,
            "structure":{"m":1,"d":2,"p_budget":2,"layers":[{"size":2,"nodes":[
                {"inputs":[0],"activation":"relu"},{"inputs":[0],"activation":"binary"}]}]},
            "sampler":{"kind":"grid","params":{"values":[-1,1]}}}}"#;
        let c = ExperimentConfig::from_json(net).unwrap();
        assert_eq!(c.class.unwrap().kind(), "network");
        let zero_forest = forest.replace("\"T\":3", "\"T\":0");
        assert!(ExperimentConfig::from_json(&zero_forest).is_err());
    }

    #[test]
    fn missing_file_is_rejected() {
        let c = TREE.replace("{\"generator\": {\"n\": 6}}", "{\"file\": \"/nonexistent/points.csv\"}");
        let Err(Error::Config(errors)) = ExperimentConfig::from_json(&c) else { panic!("expected config error") };
        assert!(errors[0].contains("sample.file"));
    }
}
