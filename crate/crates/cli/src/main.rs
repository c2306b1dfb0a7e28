use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use costa_core::harness::{
    aggregate_stats, emit_results, read_records, run_experiment, significance_curve, AggregateRow, Aggregates,
    ExperimentSpec, GroupBy, RunMetadata, RECORDS_FILE,
};
use costa_core::hybrid::ModelKind;
use costa_core::manufactured::CaseLabel;
use costa_core::neural::save_model;

#[derive(Parser)]
#[command(name = "costa", version, about = "Hybrid FEM / neural-network elasticity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train, roll out, and score PBM, DDM, and CoSTA on one experiment.
    Run(RunArgs),
    /// Count winners per group from a finished run.
    Aggregate(AggregateArgs),
    /// Win/loss counts by margin from a finished run.
    Curve(CurveArgs),
}

/// Flags of `run`. A JSON config file uses the same names in kebab case;
/// flags given on the command line take precedence.
#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct RunArgs {
    /// JSON file with any of the flags below.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// 1 none, 2 zero load, 3 dimension reduced, 4 linearized.
    #[arg(long)]
    experiment: Option<u8>,
    /// Comma-separated solution labels, e.g. `e1,e2,e3`.
    #[arg(long, value_delimiter = ',')]
    solutions: Option<Vec<CaseLabel>>,
    /// Elements per axis.
    #[arg(long)]
    elements: Option<usize>,
    /// Time steps over t in [0, 1].
    #[arg(long)]
    steps: Option<usize>,
    /// Number of seeds; seeds 0..S are used.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alphas_train: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alphas_val: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alphas_test: Option<Vec<f64>>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Also write network checkpoints under `OUT/models`.
    #[arg(long)]
    save_models: bool,
    /// No progress output on stderr.
    #[arg(long)]
    quiet: bool,
}

impl RunArgs {
    fn or(self, o: RunArgs) -> RunArgs {
        RunArgs {
            config: self.config,
            experiment: self.experiment.or(o.experiment),
            solutions: self.solutions.or(o.solutions),
            elements: self.elements.or(o.elements),
            steps: self.steps.or(o.steps),
            seeds: self.seeds.or(o.seeds),
            lr: self.lr.or(o.lr),
            out: self.out.or(o.out),
            alphas_train: self.alphas_train.or(o.alphas_train),
            alphas_val: self.alphas_val.or(o.alphas_val),
            alphas_test: self.alphas_test.or(o.alphas_test),
            workers: self.workers.or(o.workers),
            max_epochs: self.max_epochs.or(o.max_epochs),
            batch_size: self.batch_size.or(o.batch_size),
            patience: self.patience.or(o.patience),
            save_models: self.save_models || o.save_models,
            quiet: self.quiet || o.quiet,
        }
    }

    fn spec(&self) -> anyhow::Result<ExperimentSpec> {
        let Some(experiment) = self.experiment else {
            bail!("--experiment is required (flag or config file)");
        };
        let mut spec = ExperimentSpec::defaults(experiment)?;
        if let Some(v) = &self.solutions {
            spec.solutions = v.clone();
        }
        if let Some(v) = self.elements {
            spec.elements = v;
        }
        if let Some(v) = self.steps {
            spec.steps = v;
        }
        if let Some(v) = self.seeds {
            spec.seeds = v;
        }
        if let Some(v) = self.lr {
            spec.learning_rate = v;
        }
        if let Some(v) = &self.alphas_train {
            spec.alphas.train = v.clone();
        }
        if let Some(v) = &self.alphas_val {
            spec.alphas.val = v.clone();
        }
        if let Some(v) = &self.alphas_test {
            spec.alphas.test = v.clone();
        }
        if let Some(v) = self.workers {
            spec.workers = v;
        }
        if let Some(v) = self.max_epochs {
            spec.max_epochs = v;
        }
        if let Some(v) = self.batch_size {
            spec.batch_size = v;
        }
        if let Some(v) = self.patience {
            spec.patience = v;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct AggregateArgs {
    /// Output directory of `run`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "alpha")]
    group_by: GroupBy,
    /// Print JSON instead of tables.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,100")]
    thresholds: Vec<f64>,
    #[arg(long)]
    json: bool,
}

fn run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let args = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let file: RunArgs =
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            args.or(file)
        }
        None => args,
    };
    let spec = args.spec()?;
    let Some(out) = args.out.clone() else {
        bail!("--out is required (flag or config file)");
    };
    let quiet = args.quiet;
    let progress = move |msg: &str| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    let result = run_experiment(&spec, args.save_models, &progress)?;

    let mut meta = RunMetadata::new(Some(spec.clone()));
    meta.training = result.training;
    meta.failures = result.failures;
    emit_results(&result.records, &meta, &out)?;
    if args.save_models {
        let dir = out.join("models");
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        for pair in &result.models {
            save_model(&dir.join(format!("{}_ddm_seed{}.bin", pair.solution, pair.seed)), &pair.ddm)?;
            save_model(&dir.join(format!("{}_costa_seed{}.bin", pair.solution, pair.seed)), &pair.costa)?;
        }
    }

    print_aggregates(&aggregate_stats(&result.records, GroupBy::Alpha));
    println!("wrote {} records to {}", result.records.len(), out.display());
    if meta.failures.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    for f in &meta.failures {
        let seed = f.seed.map_or_else(|| "-".to_string(), |s| s.to_string());
        let alpha = f.alpha.map_or_else(|| "-".to_string(), |a| a.to_string());
        eprintln!("failed: {} {} seed {seed} alpha {alpha}: {}", f.solution, f.model, f.message);
    }
    Ok(ExitCode::from(2))
}

fn load(dir: &Path) -> anyhow::Result<Vec<costa_core::harness::RrmseRecord>> {
    let records = read_records(&dir.join(RECORDS_FILE))?;
    if records.is_empty() {
        bail!("{} holds no records", dir.join(RECORDS_FILE).display());
    }
    Ok(records)
}

fn row_line(r: &AggregateRow) -> String {
    format!(
        "{:<14}{:>6}{:>6}{:>7}{:>7}{:>6}",
        r.group, r.wins.pbm, r.wins.ddm, r.wins.costa, r.total, r.ties
    )
}

fn print_aggregates(a: &Aggregates) {
    for (title, rows, total) in [
        ("final mean rrmse", &a.rows, &a.total),
        ("final mean + std", &a.penalized_rows, &a.penalized_total),
    ] {
        println!("{title}");
        println!("{:<14}{:>6}{:>6}{:>7}{:>7}{:>6}", "group", "pbm", "ddm", "costa", "total", "ties");
        for r in rows.iter().chain([total]) {
            println!("{}", row_line(r));
        }
        println!();
    }
    for o in &a.outcomes {
        let scores: Vec<String> = o.scores.iter().map(|(m, v)| format!("{m} {v:.3e}")).collect();
        println!(
            "{} alpha {}: {} -> {}{}",
            o.key.solution,
            o.key.alpha,
            scores.join(", "),
            o.winner,
            if o.tied { " (tie)" } else { "" }
        );
    }
}

fn aggregate(args: AggregateArgs) -> anyhow::Result<ExitCode> {
    let agg = aggregate_stats(&load(&args.input)?, args.group_by);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&agg)?);
    } else {
        print_aggregates(&agg);
    }
    Ok(ExitCode::SUCCESS)
}

fn curve(args: CurveArgs) -> anyhow::Result<ExitCode> {
    let points = significance_curve(&load(&args.input)?, &args.thresholds)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&points)?);
        return Ok(ExitCode::SUCCESS);
    }
    println!(
        "{:<10}{:<11}{:>6}{:>6}{:>7}  {:>6}{:>6}{:>7}",
        "delta", "score", "w:pbm", "w:ddm", "w:costa", "l:pbm", "l:ddm", "l:costa"
    );
    for p in &points {
        let [wp, wd, wc] = ModelKind::ALL.map(|m| p.wins.get(m));
        let [lp, ld, lc] = ModelKind::ALL.map(|m| p.losses.get(m));
        println!(
            "{:<10}{:<11}{wp:>6}{wd:>6}{wc:>7}  {lp:>6}{ld:>6}{lc:>7}",
            p.threshold,
            if p.penalized { "mean+std" } else { "mean" }
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Aggregate(a) => aggregate(a),
        Command::Curve(a) => curve(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
