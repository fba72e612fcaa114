//! Acceptance suite. Prints one line per criterion and exits non-zero if any fails.
//!
//! Criterion 9 needs the MNIST IDX files; point `MBEM_MNIST_DIR` at the directory holding
//! them, otherwise it is reported as skipped.

mod common;

use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use common::{ari_by_pairs, gauss1, golden_rate, golden_weights, max_rel_diff, random_gaussian};
use mbem::engine::EmState;
use mbem::experiment::{run_experiment, run_grid, Corpus, DataSource, ExperimentSpec, ResultsTable, VariantKind};
use mbem::mixture::ComponentStats;
use mbem::pipeline::{drop_constant_pixels, load_mnist, random_partition_init, template_from_csv, InitScheme};
use mbem::{
    adjusted_rand_index, batch_em_step, dataset_loglik, run, squared_error, Algorithm, ComponentParams, Dataset,
    Family, LearningRate, MixtureParams, RunConfig, SuffStats, TruncationBounds,
};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = Box<dyn Fn() -> Option<Outcome>>;

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get()).min(8)
}

fn iris_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/iris.csv")
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    mbem::experiment::quantile(&v, 0.5)
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// A random instance with `d ≤ 3`, `g ≤ 3`, `n ≤ 200` and a data-driven starting point.
fn small_instance(rng: &mut ChaCha8Rng) -> (Dataset, MixtureParams) {
    loop {
        let d = rng.random_range(1..=3);
        let g = rng.random_range(1..=3);
        let n = rng.random_range(100..=200);
        let truth = random_gaussian(d, g, 3.0, rng);
        let (data, _) = truth.sample(n, rng).unwrap();
        if let Ok((init, _)) = random_partition_init(&data, truth.family(), g, rng) {
            return (data, init);
        }
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let bounds = TruncationBounds::uniform(1000.0).unwrap();
    let (mut worst, mut compared, mut ended_early) = (0.0f64, 0, 0);
    for _ in 0..50 {
        let (data, init) = small_instance(&mut rng);
        let mut plain = EmState::initialize(&data, init.clone()).unwrap();
        let mut trunc = plain.clone().with_truncation(bounds);
        let mut theta = init;
        for _ in 0..20 {
            let batch = batch_em_step(&data, &theta);
            let p = plain.minibatch_step(&data, 1.0);
            let t = trunc.truncated_minibatch_step(&data, 1.0, &data, data.n(), &mut rng);
            match batch {
                Ok(next) => {
                    if p.is_err() || t.is_err() {
                        return Err("mini-batch step failed where batch EM succeeded".into());
                    }
                    theta = next;
                    if trunc.region().unwrap().events() > 0 {
                        return Err("truncation reset fired on a batch-equivalent run".into());
                    }
                    worst = worst.max(max_rel_diff(plain.theta(), &theta)).max(max_rel_diff(trunc.theta(), &theta));
                    compared += 1;
                }
                Err(_) => {
                    // Batch EM reached a degenerate estimate; the plain step must agree.
                    if p.is_ok() {
                        return Err("mini-batch step succeeded where batch EM failed".into());
                    }
                    ended_early += 1;
                    break;
                }
            }
        }
    }
    check(
        worst <= 1e-10,
        format!("max relative deviation {worst:.2e} over {compared} iterates (50 instances, {ended_early} ended degenerate)"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut worst_drop, mut steps, mut ended_early) = (0.0f64, 0, 0);
    for _ in 0..100 {
        let (data, mut theta) = small_instance(&mut rng);
        let mut before = dataset_loglik(&data, &theta).unwrap();
        for _ in 0..100 {
            match batch_em_step(&data, &theta) {
                Ok(next) => theta = next,
                Err(e) if e.is_degenerate_estimate() => {
                    ended_early += 1;
                    break;
                }
                Err(e) => return Err(e.to_string()),
            }
            let after = dataset_loglik(&data, &theta).unwrap();
            worst_drop = worst_drop.max(before - after);
            before = after;
            steps += 1;
        }
    }
    check(
        worst_drop <= 1e-8,
        format!("largest decrease {worst_drop:.2e} over {steps} steps (100 instances, {ended_early} ended degenerate)"),
    )
}

fn criterion_3() -> Outcome {
    let truth = MixtureParams::new(vec![0.5, 0.5], vec![gauss1(-4.0, 1.0), gauss1(4.0, 1.0)]).unwrap();
    let mut spec = ExperimentSpec::new(DataSource::Theta { path: PathBuf::new(), n: 100_000 });
    spec.variants = vec![VariantKind::Minibatch];
    spec.batch_fractions = vec![0.1];
    spec.init = InitScheme::SeededPartition;
    spec.epochs = 10;
    spec.repetitions = 10;
    spec.seed = 303;
    spec.workers = workers();
    let table = run_grid(&spec, &Corpus::Generative { truth, n: 100_000 }).map_err(|e| e.to_string())?;
    let good = table
        .rows
        .iter()
        .filter(|r| r.is_ok() && r.se.is_some_and(|s| s <= 0.05) && r.ari.is_some_and(|a| a >= 0.95))
        .count();
    let se = table.metric_values("minibatch@0.1", "se");
    let ari = table.metric_values("minibatch@0.1", "ari");
    check(
        good >= 9,
        format!("{good}/10 runs recovered (median SE {:.2e}, median ARI {:.4})", median(&se), median(&ari)),
    )
}

/// The Iris-template grid shared by criteria 4, 5 and 6.
fn iris_table() -> &'static Result<ResultsTable, String> {
    static TABLE: OnceLock<Result<ResultsTable, String>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut spec = ExperimentSpec::new(DataSource::TemplateCsv { path: iris_path(), n: 100_000 });
        spec.variants = vec![
            VariantKind::BatchEm,
            VariantKind::Minibatch,
            VariantKind::MinibatchPolyak,
            VariantKind::MinibatchTruncated,
        ];
        spec.batch_fractions = vec![0.1, 0.2];
        spec.repetitions = 20;
        spec.seed = 404;
        spec.workers = workers();
        run_experiment(&spec).map_err(|e| e.to_string())
    })
}

fn loglik_medians(table: &ResultsTable, variant: &str) -> Result<f64, String> {
    let values = table.metric_values(variant, "loglik");
    if values.len() != 20 {
        return Err(format!("{variant}: only {} of 20 runs succeeded", values.len()));
    }
    Ok(median(&values))
}

fn criterion_4() -> Outcome {
    let table = iris_table().as_ref().map_err(Clone::clone)?;
    let batch = loglik_medians(table, "batch-em")?;
    let tenth = loglik_medians(table, "minibatch@0.1")?;
    let fifth = loglik_medians(table, "minibatch@0.2")?;
    check(
        tenth >= batch && tenth >= fifth,
        format!("median loglik: N=n/10 {tenth:.6e}, N=n/5 {fifth:.6e}, batch EM {batch:.6e}"),
    )
}

fn criterion_5() -> Outcome {
    let table = iris_table().as_ref().map_err(Clone::clone)?;
    let mut compared = 0;
    for frac in ["0.1", "0.2"] {
        let plain: Vec<_> = table.rows_for(&format!("minibatch@{frac}")).collect();
        let trunc: Vec<_> = table.rows_for(&format!("minibatch-truncated@{frac}")).collect();
        for (p, t) in plain.iter().zip(&trunc) {
            let (Some(rp), Some(rt)) = (&p.record, &t.record) else {
                return Err(format!("missing run record at repetition {}", p.repetition));
            };
            let same = rp.trace.len() == rt.trace.len()
                && rp.trace.iter().zip(&rt.trace).all(|(a, b)| a.theta == b.theta)
                && rp.theta == rt.theta
                && rt.truncation_events == 0;
            if !same {
                return Err(format!("traces differ at N=n·{frac}, repetition {}", p.repetition));
            }
            compared += 1;
        }
    }

    // Forced case: one component starts with covariance 1e-9·I.
    let truth = template_from_csv(&iris_path()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (data, _) = truth.sample(20_000, &mut rng).map_err(|e| e.to_string())?;
    let mut components = truth.components().to_vec();
    if let ComponentParams::Gaussian { mean, .. } = &components[0] {
        components[0] = ComponentParams::Gaussian { mean: mean.clone(), covariance: DMatrix::identity(4, 4) * 1e-9 };
    }
    let init = MixtureParams::new(truth.weights().to_vec(), components).unwrap();
    let config = RunConfig {
        algorithm: Algorithm::MiniBatch {
            batch_size: 2_000,
            learning_rate: LearningRate::default(),
            truncation: Some(TruncationBounds::uniform(1000.0).unwrap()),
        },
        epochs: 10,
        polyak: false,
        trace_every_iteration: false,
    };
    let record = run(&data, &config, &init, &mut rng).map_err(|e| format!("forced case: {e}"))?;
    let loglik = dataset_loglik(&data, &record.theta).map_err(|e| e.to_string())?;
    check(
        record.truncation_events >= 1 && loglik.is_finite(),
        format!(
            "{compared} truncated/plain trace pairs bit-identical; forced case: {} resets, final loglik {loglik:.6e}",
            record.truncation_events
        ),
    )
}

fn criterion_6() -> Outcome {
    let truth = template_from_csv(&iris_path()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (data, _) = truth.sample(100_000, &mut rng).map_err(|e| e.to_string())?;
    let (init, _) = random_partition_init(&data, truth.family(), 3, &mut rng).map_err(|e| e.to_string())?;
    let config = RunConfig {
        algorithm: Algorithm::MiniBatch {
            batch_size: 10_000,
            learning_rate: LearningRate::default(),
            truncation: None,
        },
        epochs: 10,
        polyak: true,
        trace_every_iteration: true,
    };
    let record = run(&data, &config, &init, &mut rng).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut boundaries = 0;
    for (k, point) in record.trace.iter().enumerate() {
        if !config.is_epoch_boundary(data.n(), point.iteration) {
            continue;
        }
        let flats: Vec<Vec<f64>> = record.trace[..=k].iter().map(|t| t.theta.flatten()).collect();
        let avg = point.polyak.as_ref().expect("averaging enabled").flatten();
        for (j, a) in avg.iter().enumerate() {
            let col: Vec<f64> = flats.iter().map(|f| f[j]).collect();
            let mean = mbem::eval::exact_sum(&col) / col.len() as f64;
            worst = worst.max((a - mean).abs() / mean.abs().max(1.0));
        }
        boundaries += 1;
    }
    if worst > 1e-12 || boundaries != 10 {
        return Err(format!("accumulator deviation {worst:.2e} over {boundaries} epoch boundaries"));
    }
    let table = iris_table().as_ref().map_err(Clone::clone)?;
    let polyak = loglik_medians(table, "minibatch-polyak@0.1")?;
    let plain = loglik_medians(table, "minibatch@0.1")?;
    check(
        polyak <= plain,
        format!("accumulator deviation {worst:.2e} at 10 epoch boundaries; median loglik Polyak {polyak:.6e} vs plain {plain:.6e}"),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let family = if case % 2 == 0 { Family::Exponential } else { Family::Poisson };
        let g = rng.random_range(1..=3);
        let raw: Vec<f64> = (0..g).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let comps: Vec<ComponentStats> = raw
            .iter()
            .map(|w| {
                let s1 = w / total;
                ComponentStats { s1, s2: vec![s1 * rng.random_range(0.1..10.0)], s3: vec![] }
            })
            .collect();
        let s = SuffStats::from_components(family, comps.clone()).map_err(|e| e.to_string())?;
        let theta = s.theta_bar().map_err(|e| e.to_string())?;
        let s1: Vec<f64> = comps.iter().map(|c| c.s1).collect();
        let weights = golden_weights(&s1);
        for z in 0..g {
            let (a, b) = (comps[z].s1, comps[z].s2[0]);
            // q(s; θ) per component: s1 ln λ − s2 λ (exponential), s2 ln λ − s1 λ (Poisson).
            let (oracle, rate) = match (&theta.components()[z], family) {
                (ComponentParams::Exponential { rate }, Family::Exponential) => (golden_rate(a, b), *rate),
                (ComponentParams::Poisson { rate }, Family::Poisson) => (golden_rate(b, a), *rate),
                _ => return Err("family mismatch".into()),
            };
            worst = worst.max((rate - oracle).abs()).max((theta.weights()[z] - weights[z]).abs());
        }
    }
    check(worst <= 1e-6, format!("max deviation from numerical maximizer {worst:.2e} on 100 statistics"))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(2..=12);
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let b: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let ari = adjusted_rand_index(&a, &b).map_err(|e| e.to_string())?;
        worst = worst.max((ari - ari_by_pairs(&a, &b)).abs());
        if adjusted_rand_index(&a, &a).unwrap() != 1.0 {
            return Err(format!("ARI of a partition with itself is not 1 for {a:?}"));
        }
        let mut perm: Vec<usize> = (0..4).collect();
        perm.shuffle(&mut rng);
        let relabeled: Vec<usize> = b.iter().map(|&x| perm[x]).collect();
        if adjusted_rand_index(&a, &relabeled).unwrap() != ari || adjusted_rand_index(&b, &a).unwrap() != ari {
            return Err("ARI changed under relabeling or argument swap".into());
        }
    }
    if worst > 1e-12 {
        return Err(format!("pair-enumeration deviation {worst:.2e}"));
    }
    for _ in 0..100 {
        let g = rng.random_range(1..=6);
        let d = rng.random_range(1..=3);
        let est = random_gaussian(d, g, 2.0, &mut rng);
        let truth = random_gaussian(d, g, 2.0, &mut rng);
        let mut order: Vec<usize> = (0..g).collect();
        order.shuffle(&mut rng);
        let se = squared_error(&est, &truth).unwrap();
        if squared_error(&est.permuted(&order), &truth).unwrap() != se || squared_error(&est, &truth.permuted(&order)).unwrap() != se {
            return Err("SE changed under a component permutation".into());
        }
    }
    Ok(format!("ARI pair-enumeration deviation {worst:.2e}; relabeling and SE permutation invariance exact"))
}

fn criterion_9() -> Option<Outcome> {
    let dir = PathBuf::from(std::env::var_os("MBEM_MNIST_DIR")?);
    Some((|| {
        let set = load_mnist(&dir).map_err(|e| e.to_string())?;
        let (dense, _) = drop_constant_pixels(&set);
        if dense.dim() != 719 {
            return Err(format!("{} dense pixels after filtering, expected 719", dense.dim()));
        }
        let mut spec = ExperimentSpec::new(DataSource::Idx { dir: dir.clone(), d_pc: 10, limit: None });
        spec.g = Some(10);
        spec.variants = vec![VariantKind::BatchEm, VariantKind::Minibatch, VariantKind::Kmeans];
        spec.batch_fractions = vec![0.1];
        spec.repetitions = 10;
        spec.seed = 909;
        spec.workers = workers();
        let table = run_experiment(&spec).map_err(|e| e.to_string())?;
        let mb: Vec<_> = table.rows_for("minibatch@0.1").collect();
        let km: Vec<_> = table.rows_for("kmeans").collect();
        if mb.first().and_then(|r| r.record.as_ref()).is_none_or(|r| r.data_visits != 10 * 70_000) {
            return Err("mini-batch runs did not use N = 7000 over 10 epochs".into());
        }
        let wins = mb.iter().zip(&km).filter(|(m, k)| matches!((m.ari, k.ari), (Some(a), Some(b)) if a > b)).count();
        let mean = |v: Vec<f64>| v.iter().sum::<f64>() / v.len().max(1) as f64;
        let mb_ll = mean(table.metric_values("minibatch@0.1", "loglik"));
        let be_ll = mean(table.metric_values("batch-em", "loglik"));
        let detail = format!(
            "mini-batch ARI beats k-means in {wins}/10 seeds (means {:.3} vs {:.3}); mean loglik {mb_ll:.4e} vs batch EM {be_ll:.4e}",
            mean(table.metric_values("minibatch@0.1", "ari")),
            mean(table.metric_values("kmeans", "ari")),
        );
        check(wins >= 7 && mb_ll >= be_ll, detail)
    })())
}

fn criterion_10() -> Outcome {
    let mut spec = ExperimentSpec::new(DataSource::TemplateCsv { path: iris_path(), n: 3_000 });
    spec.variants = VariantKind::ALL_EM.iter().copied().chain([VariantKind::Kmeans]).collect();
    spec.repetitions = 4;
    spec.epochs = 5;
    spec.seed = 1010;
    let csv_for = |workers: usize| -> Result<(String, Vec<u8>), String> {
        let mut s = spec.clone();
        s.workers = workers;
        let table = run_experiment(&s).map_err(|e| e.to_string())?;
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        mbem::experiment::write_outputs(dir.path(), &s, &table).map_err(|e| e.to_string())?;
        let file = std::fs::read(dir.path().join("results_notiming.csv")).map_err(|e| e.to_string())?;
        Ok((table.to_csv(false).map_err(|e| e.to_string())?, file))
    };
    let first = csv_for(1)?;
    let again = csv_for(1)?;
    let parallel = csv_for(3)?;
    let rows = first.0.lines().count() - 1;
    check(
        first == again && first == parallel && first.0.as_bytes() == first.1.as_slice(),
        format!("{rows} result rows byte-identical across reruns and 1 vs 3 workers"),
    )
}

fn main() {
    let criteria: Vec<(usize, Criterion)> = vec![
        (1, Box::new(|| Some(criterion_1()))),
        (2, Box::new(|| Some(criterion_2()))),
        (3, Box::new(|| Some(criterion_3()))),
        (4, Box::new(|| Some(criterion_4()))),
        (5, Box::new(|| Some(criterion_5()))),
        (6, Box::new(|| Some(criterion_6()))),
        (7, Box::new(|| Some(criterion_7()))),
        (8, Box::new(|| Some(criterion_8()))),
        (9, Box::new(criterion_9)),
        (10, Box::new(|| Some(criterion_10()))),
    ];
    let filter: Option<Vec<usize>> = std::env::var("MBEM_CRITERIA")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, f) in criteria {
        if filter.as_ref().is_some_and(|ids| !ids.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(&f))
            .unwrap_or_else(|_| Some(Err("panicked".into())));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Some(Ok(detail)) => println!("criterion {id}: PASS ({secs:.1}s) {detail}"),
            Some(Err(detail)) => {
                failed += 1;
                println!("criterion {id}: FAIL ({secs:.1}s) {detail}");
            }
            None => println!("criterion {id}: SKIPPED (set MBEM_MNIST_DIR to the MNIST IDX directory)"),
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
