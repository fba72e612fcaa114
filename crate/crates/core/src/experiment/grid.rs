use std::borrow::Cow;
use std::time::Instant;

use cpu_time::ProcessTime;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::seed::{sub_seed, DATA_STREAM};
use super::spec::{DataSource, ExperimentSpec, Variant, VariantKind};
use super::table::{ResultRow, ResultsTable};
use crate::data::Dataset;
use crate::engine::{run, Algorithm, RunConfig, RunRecord};
use crate::error::{Error, Result};
use crate::eval::{adjusted_rand_index, dataset_loglik, map_labels, parameter_distance, squared_error};
use crate::mixture::{MixtureParams, ThetaFile};
use crate::pipeline::{
    drop_constant_pixels, fit_pca, initialize, kmeans, load_mnist, template_from_csv,
};

/// Observations an experiment draws on.
#[derive(Debug, Clone)]
pub enum Corpus {
    /// Fresh i.i.d. samples of size `n` from `truth` for every repetition.
    Generative { truth: MixtureParams, n: usize },
    /// One fixed data set shared by all repetitions.
    Fixed {
        data: Dataset,
        labels: Option<Vec<usize>>,
    },
}

impl Corpus {
    pub fn n(&self) -> usize {
        match self {
            Corpus::Generative { n, .. } => *n,
            Corpus::Fixed { data, .. } => data.n(),
        }
    }
}

/// Loads or fits whatever `source` describes.
pub fn prepare_corpus(source: &DataSource) -> Result<Corpus> {
    match source {
        DataSource::TemplateCsv { path, n } => Ok(Corpus::Generative {
            truth: template_from_csv(path)?,
            n: *n,
        }),
        DataSource::Theta { path, n } => {
            let file: ThetaFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            Ok(Corpus::Generative {
                truth: MixtureParams::from_json(&file)?,
                n: *n,
            })
        }
        DataSource::Idx { dir, d_pc, limit } => {
            let mut set = load_mnist(dir)?;
            if let Some(limit) = *limit {
                let keep = limit.min(set.n);
                set.pixels.truncate(keep * set.rows * set.cols);
                if let Some(labels) = set.labels.as_mut() {
                    labels.truncate(keep);
                }
                set.n = keep;
            }
            let (dense, _) = drop_constant_pixels(&set);
            let pca = fit_pca(&dense, *d_pc)?;
            Ok(Corpus::Fixed {
                data: pca.project(&dense)?,
                labels: set.labels.map(|l| l.into_iter().map(usize::from).collect()),
            })
        }
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultsTable> {
    spec.validate()?;
    let corpus = prepare_corpus(&spec.source)?;
    run_grid(spec, &corpus)
}

/// Runs every (variant, repetition) cell on `corpus`. Failures of individual runs are
/// recorded in their rows; only setup errors abort the grid.
pub fn run_grid(spec: &ExperimentSpec, corpus: &Corpus) -> Result<ResultsTable> {
    spec.validate()?;
    let g = match (spec.g, corpus) {
        (Some(g), _) => g,
        (None, Corpus::Generative { truth, .. }) => truth.g(),
        (None, Corpus::Fixed { .. }) => return Err(Error::invalid("the component count g is required")),
    };
    let variants = spec.expand_variants();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let per_rep: Vec<Vec<ResultRow>> = pool.install(|| {
        (0..spec.repetitions)
            .into_par_iter()
            .map(|rep| run_repetition(spec, corpus, g, &variants, rep))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::with_capacity(variants.len() * spec.repetitions);
    for v in 0..variants.len() {
        for rep in &per_rep {
            rows.push(rep[v].clone());
        }
    }
    Ok(ResultsTable {
        variants: variants.iter().map(ToString::to_string).collect(),
        rows,
    })
}

struct Repetition<'a> {
    data: Cow<'a, Dataset>,
    labels: Option<Cow<'a, [usize]>>,
    truth: Option<&'a MixtureParams>,
    init: MixtureParams,
    init_labels: Vec<usize>,
}

fn setup_repetition<'a>(spec: &ExperimentSpec, corpus: &'a Corpus, g: usize, rep: usize) -> Result<Repetition<'a>> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(spec.seed, DATA_STREAM, rep as u64));
    let (data, labels, truth) = match corpus {
        Corpus::Generative { truth, n } => {
            if truth.g() != g {
                return Err(Error::invalid(format!("template has {} components, g = {g}", truth.g())));
            }
            let (data, labels) = truth.sample(*n, &mut rng)?;
            (Cow::Owned(data), Some(Cow::Owned(labels)), Some(truth))
        }
        Corpus::Fixed { data, labels } => (Cow::Borrowed(data), labels.as_deref().map(Cow::Borrowed), None),
    };
    let family = match truth {
        Some(t) => t.family(),
        None => crate::mixture::Family::Gaussian { dim: data.dim() },
    };
    let (init, init_labels) = initialize(spec.init, &data, family, g, &mut rng)?;
    Ok(Repetition {
        data,
        labels,
        truth,
        init,
        init_labels,
    })
}

fn run_repetition(
    spec: &ExperimentSpec,
    corpus: &Corpus,
    g: usize,
    variants: &[Variant],
    rep: usize,
) -> Result<Vec<ResultRow>> {
    let setup = setup_repetition(spec, corpus, g, rep)?;
    Ok(variants
        .iter()
        .map(|v| {
            let mut row = ResultRow::new(v.to_string(), rep);
            let outcome = match v.kind {
                VariantKind::Kmeans => run_kmeans(spec, &setup, g, &mut row),
                _ => run_em(spec, &setup, *v, &mut row),
            };
            if let Err(e) = outcome {
                row.status = format!("error: {e}");
            }
            row
        })
        .collect())
}

fn run_em(spec: &ExperimentSpec, setup: &Repetition, variant: Variant, row: &mut ResultRow) -> Result<()> {
    let n = setup.data.n();
    let algorithm = match variant.batch_size(n) {
        None => Algorithm::BatchEm,
        Some(batch_size) => Algorithm::MiniBatch {
            batch_size,
            learning_rate: spec.learning_rate,
            truncation: variant.kind.truncated().then_some(spec.truncation),
        },
    };
    let config = RunConfig {
        algorithm,
        epochs: spec.epochs,
        polyak: variant.kind.polyak(),
        trace_every_iteration: false,
    };
    let stream = variant.batch_size(n).map_or(DATA_STREAM, |b| b as u64);
    row.seed = sub_seed(spec.seed, stream, row.repetition as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(row.seed);
    let record = run(&setup.data, &config, &setup.init, &mut rng)?;
    let budget = spec.epochs * n;
    assert!(
        record.data_visits >= budget && record.data_visits < budget + config.visits_per_iteration(n).max(1),
        "visit budget violated: {} visits for {budget}",
        record.data_visits
    );
    row.iterations = record.iterations;
    row.data_visits = record.data_visits;
    row.truncation_events = record.truncation_events;
    row.wall_seconds = record.timing.wall_seconds;
    row.cpu_seconds = record.timing.cpu_seconds;
    let result = score_em(spec, setup, &record, row);
    row.record = Some(record);
    result
}

fn score_em(spec: &ExperimentSpec, setup: &Repetition, record: &RunRecord, row: &mut ResultRow) -> Result<()> {
    let estimate = record.estimate();
    let mut ll = dataset_loglik(&setup.data, estimate)?;
    if spec.per_observation {
        ll /= setup.data.n() as f64;
    }
    row.loglik = Some(ll);
    if let Some(truth) = setup.truth {
        row.se = Some(if spec.se_root {
            parameter_distance(estimate, truth)?
        } else {
            squared_error(estimate, truth)?
        });
    }
    if let Some(labels) = &setup.labels {
        row.ari = Some(adjusted_rand_index(&map_labels(&setup.data, estimate)?, labels)?);
    }
    row.status = "ok".into();
    Ok(())
}

fn run_kmeans(spec: &ExperimentSpec, setup: &Repetition, g: usize, row: &mut ResultRow) -> Result<()> {
    let wall = Instant::now();
    let cpu = ProcessTime::now();
    // The initial labels are given, so the generator is never drawn from.
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    let res = kmeans(&setup.data, g, spec.epochs, Some(&setup.init_labels), &mut unused)?;
    row.wall_seconds = wall.elapsed().as_secs_f64();
    row.cpu_seconds = cpu.elapsed().as_secs_f64();
    row.iterations = res.sweeps;
    row.data_visits = res.sweeps * setup.data.n();
    if let Some(labels) = &setup.labels {
        row.ari = Some(adjusted_rand_index(&res.labels, labels)?);
    }
    row.status = "ok".into();
    Ok(())
}
