use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use natdim::bounds::solve_theorem;
use natdim::growth::{growth_estimate, write_growth_csv, SampleGenerator};
use natdim::harness::{
    default_suite, emit_report, render, run_experiment, run_suite, verdict_text, write_suite, ExperimentConfig,
    ExperimentResult, Format, SampleSource, SignsTask, SuiteConfig, Task, Verdict, SCHEMA_VERSION,
};
use natdim::signs::{PolynomialFamily, SignSearch};
use natdim::{dimension, BehaviorTable, SearchBudget, ShatterMode};

/// Exact Natarajan, graph and VC dimensions of small hypothesis classes.
#[derive(Parser)]
#[command(name = "natdim", version)]
struct Cli {
    /// Overrides the seed stored in configs.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; results go to stdout when unset (except for verify-suite).
    #[arg(long, global = true, env = "NATDIM_OUT_DIR")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Format {
        match f {
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    N,
    G,
    Vc,
}

#[derive(Subcommand)]
enum Command {
    /// Natarajan, graph and VC dimensions of a class on a sample, or of a table.
    Dim(DimArgs),
    /// Number of behaviors of a class on a sample.
    Growth(GrowthArgs),
    /// Largest sample size the counting inequality of a theorem allows.
    Bound(BoundArgs),
    /// Sign configurations of a polynomial family.
    Signs(SignsArgs),
    /// Runs a suite of experiments and writes one report per experiment plus a summary.
    VerifySuite(SuiteArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Behavior table (JSON with `n`, `d`, `rows`).
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct DimArgs {
    #[command(flatten)]
    source: Source,
    /// Dimension to compute for `--table`; all applicable ones by default.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Args)]
struct GrowthArgs {
    #[arg(long)]
    config: PathBuf,
    /// Maximize over this many generated samples instead of using the config's sample.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    theorem: u8,
    #[arg(long)]
    p: u64,
    #[arg(long = "L")]
    depth: Option<u32>,
    #[arg(long)]
    d: u64,
    #[arg(long = "T")]
    trees: Option<u64>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct FamilySource {
    /// Experiment config with a `signs` section.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Polynomial family (JSON with `vars` and `polys`).
    #[arg(long)]
    family: Option<PathBuf>,
}

#[derive(Args)]
struct SignsArgs {
    #[command(flatten)]
    source: FamilySource,
}

#[derive(Args)]
struct SuiteArgs {
    /// Suite file; the built-in suite runs when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

const DEFAULT_SUITE_DIR: &str = "natdim-results";

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Dim(args) => dim(cli, args),
        Command::Growth(args) => growth(cli, args),
        Command::Bound(args) => bound(cli, args),
        Command::Signs(args) => signs(cli, args),
        Command::VerifySuite(args) => verify_suite(cli, args),
    }
}

fn load_config(cli: &Cli, path: &Path) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn output(cli: &Cli, name: &str, ext: &str, bytes: &[u8]) -> Result<()> {
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(format!("{name}.{ext}"));
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
            println!("{}", path.display());
        }
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn finish(cli: &Cli, config: &ExperimentConfig) -> Result<ExitCode> {
    let result = run_experiment(config)?;
    let format = Format::from(cli.format);
    match &cli.out {
        Some(dir) => println!("{}", emit_report(&result, dir, format)?.display()),
        None => std::io::stdout().write_all(&render(&result, format)?)?,
    }
    Ok(exit_code(&result))
}

fn exit_code(result: &ExperimentResult) -> ExitCode {
    if result.has_failure() {
        for c in result.checks.iter().filter(|c| c.verdict == Verdict::Fail) {
            eprintln!("check {} failed: {} = {:?} > {}", c.name, c.quantity, c.value, c.bound);
        }
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn dim(cli: &Cli, args: &DimArgs) -> Result<ExitCode> {
    if let Some(path) = &args.source.config {
        let mut config = load_config(cli, path)?;
        let dims = [Task::Natarajan, Task::Graph, Task::Vc];
        let mut tasks: Vec<Task> = config.tasks.iter().copied().filter(|t| dims.contains(t) || *t == Task::Bounds).collect();
        if !tasks.iter().any(|t| dims.contains(t)) {
            tasks.extend([Task::Natarajan, Task::Graph]);
            if config.class.as_ref().is_some_and(|c| c.d() == 2) {
                tasks.push(Task::Vc);
            }
        }
        config.tasks = tasks;
        return finish(cli, &config);
    }

    let path = args.source.table.as_ref().expect("clap enforces one source");
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let table: BehaviorTable = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let modes: Vec<ShatterMode> = match args.mode {
        Some(Mode::N) => vec![ShatterMode::N],
        Some(Mode::G) => vec![ShatterMode::G],
        Some(Mode::Vc) => vec![ShatterMode::VC],
        None if table.d() == 2 => vec![ShatterMode::N, ShatterMode::G, ShatterMode::VC],
        None => vec![ShatterMode::N, ShatterMode::G],
    };
    let results = modes
        .into_iter()
        .map(|m| dimension(&table, m, &SearchBudget::unlimited()))
        .collect::<natdim::Result<Vec<_>>>()?;
    let name = path.file_stem().map_or("table".into(), |s| s.to_string_lossy().into_owned());
    match cli.format {
        OutFormat::Json => {
            let mut text = serde_json::to_string_pretty(&results)?;
            text.push('\n');
            output(cli, &name, "json", text.as_bytes())?;
        }
        OutFormat::Csv => {
            let mut text = String::from("mode,dim,status,subset\n");
            for r in &results {
                let subset = r.witness.as_ref().map_or(String::new(), |w| {
                    w.subset.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
                });
                let status = if r.is_exact() { "exact" } else { "lower_bound" };
                text.push_str(&format!("{},{},{status},{subset}\n", r.mode, r.dim));
            }
            output(cli, &name, "csv", text.as_bytes())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn growth(cli: &Cli, args: &GrowthArgs) -> Result<ExitCode> {
    let mut config = load_config(cli, &args.config)?;
    let Some(trials) = args.trials else {
        config.tasks = vec![Task::Growth];
        return finish(cli, &config);
    };
    let Some(class) = &config.class else { bail!("growth needs a class in the config") };
    let Some(SampleSource::Generator(g)) = &config.sample else {
        bail!("--trials needs a generator sample in the config")
    };
    let enumerator = class.enumerator(config.budgets.enumeration_cap, config.seed);
    let generator = SampleGenerator { low: g.low, high: g.high };
    let report = growth_estimate(enumerator.as_ref(), g.n, &generator, trials, config.seed)?;
    match cli.format {
        OutFormat::Json => {
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            output(cli, &config.name, "json", text.as_bytes())?;
        }
        OutFormat::Csv => {
            let mut buf = Vec::new();
            write_growth_csv(&mut buf, &[(enumerator.describe(), &report, config.seed)])?;
            output(cli, &config.name, "csv", &buf)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn bound(cli: &Cli, args: &BoundArgs) -> Result<ExitCode> {
    let report = solve_theorem(args.theorem, args.p, args.depth, args.d, args.trees)?;
    let name = format!("bound-{}", args.theorem);
    match cli.format {
        OutFormat::Json => {
            let mut text = serde_json::to_string(&report)?;
            text.push('\n');
            output(cli, &name, "json", text.as_bytes())?;
        }
        OutFormat::Csv => {
            let opt = |v: Option<u64>| v.map(|v| v.to_string()).unwrap_or_default();
            let text = format!(
                "theorem,p,L,d,T,max_N,log_domain\n{},{},{},{},{},{},{}\n",
                args.theorem,
                args.p,
                opt(args.depth.map(u64::from)),
                args.d,
                opt(args.trees),
                report.max_n,
                report.log_domain
            );
            output(cli, &name, "csv", text.as_bytes())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn signs(cli: &Cli, args: &SignsArgs) -> Result<ExitCode> {
    let config = match (&args.source.config, &args.source.family) {
        (Some(path), _) => {
            let mut config = load_config(cli, path)?;
            config.tasks = vec![Task::SignPatterns];
            config
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let family: PolynomialFamily =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let name = path.file_stem().map_or("signs".into(), |s| s.to_string_lossy().into_owned());
            let config = serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "name": name,
                "seed": cli.seed.unwrap_or(0),
                "tasks": ["sign-patterns"],
            });
            let mut config: ExperimentConfig = serde_json::from_value(config)?;
            config.signs = Some(SignsTask { family, search: SignSearch::default() });
            config.validate()?;
            config
        }
        (None, None) => unreachable!("clap enforces one source"),
    };
    finish(cli, &config)
}

fn verify_suite(cli: &Cli, args: &SuiteArgs) -> Result<ExitCode> {
    let suite = match &args.config {
        Some(path) => SuiteConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => default_suite(),
    };
    let outcome = run_suite(&suite, cli.seed)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_SUITE_DIR));
    let paths = write_suite(&outcome, &dir, cli.format.into())?;
    for (name, result) in &outcome.results {
        match result {
            Ok(r) => {
                let worst = r
                    .checks
                    .iter()
                    .map(|c| c.verdict)
                    .max_by_key(|v| match v {
                        Verdict::Pass => 0,
                        Verdict::Inconclusive => 1,
                        Verdict::Fail => 2,
                    })
                    .map_or("no checks", verdict_text);
                eprintln!("{name}: {} checks, {worst}", r.checks.len());
            }
            Err(e) => eprintln!("{name}: error: {e}"),
        }
    }
    for p in &paths {
        println!("{}", p.display());
    }
    Ok(if outcome.has_error() {
        ExitCode::from(2)
    } else if outcome.has_failure() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}
