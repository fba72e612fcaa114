use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mbem::engine::{LearningRate, TruncationBounds};
use mbem::pipeline::InitScheme;
use mbem::experiment::{
    prepare_corpus, run_grid, summarize, write_outputs, DataSource, ExperimentSpec, VariantKind,
};

#[derive(Parser)]
#[command(name = "mbem", version, about = "Batch and mini-batch EM experiments for finite mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample from a template (labeled CSV or parameter file) and run the variant grid.
    Simulate {
        #[command(flatten)]
        source: SimSource,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// MNIST: drop constant pixels, project on principal components, run the grid with a k-means baseline.
    Mnist {
        /// Directory holding the four IDX files (optionally gzipped).
        #[arg(long)]
        mnist_dir: Option<PathBuf>,
        /// Number of principal components.
        #[arg(long, default_value_t = 10)]
        d_pc: usize,
        /// Use only the first N images.
        #[arg(long)]
        limit: Option<usize>,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// A single repetition of a single variant, summarized on stdout.
    Bench {
        #[command(flatten)]
        source: SimSource,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Args)]
struct SimSource {
    /// Labeled CSV: numeric features, final integer class column.
    #[arg(long, conflicts_with = "theta")]
    template: Option<PathBuf>,
    /// Mixture parameters as JSON.
    #[arg(long)]
    theta: Option<PathBuf>,
    /// Observations drawn per repetition.
    #[arg(long, short)]
    n: Option<usize>,
}

#[derive(Args)]
struct GridArgs {
    /// JSON experiment specification; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Mini-batch size as a fraction of n (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    batch_frac: Vec<f64>,
    /// batch-em, minibatch, minibatch-polyak, minibatch-truncated, minibatch-truncated-polyak, kmeans.
    #[arg(long, value_delimiter = ',')]
    variant: Vec<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Number of mixture components.
    #[arg(long, short)]
    g: Option<usize>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    c3: Option<f64>,
    /// Starting values: random-partition or seeded-partition.
    #[arg(long)]
    init: Option<String>,
    /// Report the Euclidean parameter distance instead of its square.
    #[arg(long)]
    se_root: bool,
    /// Report log-likelihood per observation instead of the total.
    #[arg(long)]
    per_observation: bool,
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn load_config(path: &Option<PathBuf>) -> CliResult<Option<ExperimentSpec>> {
    match path {
        Some(p) => Ok(Some(ExperimentSpec::from_json(&std::fs::read_to_string(p)?)?)),
        None => Ok(None),
    }
}

fn sim_source(src: &SimSource, base: Option<&DataSource>) -> CliResult<DataSource> {
    let base_n = match base {
        Some(DataSource::TemplateCsv { n, .. } | DataSource::Theta { n, .. }) => Some(*n),
        _ => None,
    };
    let n = src.n.or(base_n).unwrap_or(100_000);
    Ok(match (&src.template, &src.theta, base) {
        (Some(path), _, _) => DataSource::TemplateCsv { path: path.clone(), n },
        (_, Some(path), _) => DataSource::Theta { path: path.clone(), n },
        (None, None, Some(DataSource::TemplateCsv { path, .. })) => DataSource::TemplateCsv { path: path.clone(), n },
        (None, None, Some(DataSource::Theta { path, .. })) => DataSource::Theta { path: path.clone(), n },
        _ => return Err("one of --template or --theta is required".into()),
    })
}

fn apply(grid: &GridArgs, spec: &mut ExperimentSpec) -> CliResult<()> {
    if let Some(v) = grid.seed {
        spec.seed = v;
    }
    if let Some(v) = grid.epochs {
        spec.epochs = v;
    }
    if !grid.batch_frac.is_empty() {
        spec.batch_fractions = grid.batch_frac.clone();
    }
    if !grid.variant.is_empty() {
        spec.variants = grid.variant.iter().map(|s| VariantKind::parse(s)).collect::<Result<_, _>>()?;
    }
    if let Some(v) = grid.repetitions {
        spec.repetitions = v;
    }
    if let Some(v) = grid.workers {
        spec.workers = v;
    }
    if let Some(name) = &grid.init {
        spec.init = match name.as_str() {
            "random-partition" => InitScheme::RandomPartition,
            "seeded-partition" => InitScheme::SeededPartition,
            _ => return Err(format!("unknown initializer {name:?}").into()),
        };
    }
    if grid.g.is_some() {
        spec.g = grid.g;
    }
    if grid.gamma0.is_some() || grid.alpha.is_some() {
        spec.learning_rate = LearningRate::new(
            grid.gamma0.unwrap_or(spec.learning_rate.gamma0()),
            grid.alpha.unwrap_or(spec.learning_rate.alpha()),
        )?;
    }
    let t = spec.truncation;
    spec.truncation = TruncationBounds::new(grid.c1.unwrap_or(t.c1), grid.c2.unwrap_or(t.c2), grid.c3.unwrap_or(t.c3))?;
    spec.se_root |= grid.se_root;
    spec.per_observation |= grid.per_observation;
    Ok(())
}

fn execute(spec: &ExperimentSpec, out_dir: Option<&PathBuf>) -> CliResult<()> {
    spec.validate()?;
    let corpus = prepare_corpus(&spec.source)?;
    let table = run_grid(spec, &corpus)?;
    let failures = table.rows.iter().filter(|r| !r.is_ok()).count();
    match out_dir {
        Some(dir) => {
            write_outputs(dir, spec, &table)?;
            eprintln!("wrote {} rows to {}", table.rows.len(), dir.display());
        }
        None => print!("{}", table.to_csv(true)?),
    }
    for s in summarize(&table).iter().filter(|s| s.metric != "wall_seconds") {
        eprintln!("{:<34} {:<18} mean {:>14.6e}  median {:>14.6e}  se {:>10.3e}", s.variant, s.metric, s.mean, s.median, s.se);
    }
    if failures > 0 {
        eprintln!("{failures} run(s) failed; see the status column");
    }
    Ok(())
}

fn main_inner(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { source, grid } => {
            let base = load_config(&grid.config)?;
            let src = sim_source(&source, base.as_ref().map(|s| &s.source))?;
            let mut spec = base.unwrap_or_else(|| ExperimentSpec::new(src.clone()));
            spec.source = src;
            apply(&grid, &mut spec)?;
            let out = grid.out_dir.clone().ok_or("--out-dir is required")?;
            execute(&spec, Some(&out))
        }
        Command::Mnist {
            mnist_dir,
            d_pc,
            limit,
            grid,
        } => {
            let base = load_config(&grid.config)?;
            let dir = match (mnist_dir, base.as_ref().map(|s| &s.source)) {
                (Some(d), _) => d,
                (None, Some(DataSource::Idx { dir, .. })) => dir.clone(),
                _ => return Err("--mnist-dir is required".into()),
            };
            let src = DataSource::Idx { dir, d_pc, limit };
            let mut spec = base.unwrap_or_else(|| {
                let mut s = ExperimentSpec::new(src.clone());
                s.g = Some(10);
                s.batch_fractions = vec![0.1];
                s.variants = vec![VariantKind::BatchEm, VariantKind::Minibatch, VariantKind::Kmeans];
                s
            });
            spec.source = src;
            apply(&grid, &mut spec)?;
            let out = grid.out_dir.clone().ok_or("--out-dir is required")?;
            execute(&spec, Some(&out))
        }
        Command::Bench { source, grid } => {
            let base = load_config(&grid.config)?;
            let src = sim_source(&source, base.as_ref().map(|s| &s.source))?;
            let mut spec = base.unwrap_or_else(|| ExperimentSpec::new(src.clone()));
            spec.source = src;
            spec.variants = vec![VariantKind::Minibatch];
            spec.batch_fractions = vec![0.1];
            apply(&grid, &mut spec)?;
            spec.repetitions = 1;
            if spec.expand_variants().len() != 1 {
                return Err("bench runs exactly one variant and one batch fraction".into());
            }
            execute(&spec, grid.out_dir.as_ref())
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
