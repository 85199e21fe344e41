use std::io::Write;

use igmdsr_core::metrics::{knn_accuracy, relative_reconstruction_error, trustworthiness};
use igmdsr_core::model::{default_layer_schedule, forward, ForwardTrace};
use igmdsr_core::nmf::nmf_multiplicative;
use igmdsr_core::preprocess::{fold, reduced_dim, zscore_normalize};
use igmdsr_core::training::{fit, gradient_check_problem, max_gradient_error};
use igmdsr_core::{ArchitectureSpec, BatchMode, Matrix, TrainConfig, Variant};

use crate::args::{
    CompareArgs, EvaluateArgs, FitArgs, GradcheckArgs, InputArgs, TargetDim, TrainArgs,
    TransformArgs,
};
use crate::data::{fmt_f64, log_csv, matrix_csv, read_dataset, write_atomic};
use crate::error::{CliError, CliResult};
use crate::model_file::ModelFile;

/// Step and tolerance used by `gradcheck`.
pub const GRADCHECK_STEP: f64 = 1e-5;
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;

/// Every `KNN_TEST_STRIDE`-th row (indices 4, 9, 14, …) is held out as the
/// kNN test set; the rest is the training set.
pub const KNN_TEST_STRIDE: usize = 5;

fn target_dim(dim: &TargetDim, n_prime: usize) -> CliResult<usize> {
    match (dim.f, dim.r) {
        (Some(f), None) => Ok(reduced_dim(n_prime, f)?),
        (None, Some(r)) if r >= 1 => Ok(r),
        (None, Some(r)) => Err(CliError::Parameter(format!(
            "r must be at least 1, got {r}"
        ))),
        _ => Err(CliError::Parameter(
            "give exactly one of --f and --r".into(),
        )),
    }
}

fn architecture(
    train: &TrainArgs,
    n: usize,
    r: usize,
    variant: Variant,
) -> CliResult<ArchitectureSpec> {
    let widths = match &train.widths {
        Some(w) => {
            if w.first() != Some(&n) || w.last() != Some(&r) {
                return Err(CliError::Parameter(format!(
                    "widths {w:?} must start at the folded width {n} and end at r={r}"
                )));
            }
            w.clone()
        }
        None => default_layer_schedule(n, r, train.hidden_layers)?,
    };
    Ok(ArchitectureSpec::new(widths, variant)?)
}

fn train_config(train: &TrainArgs, seed: u64) -> CliResult<TrainConfig> {
    let cfg = TrainConfig {
        learning_rate: train.lr,
        stop_threshold: train.threshold,
        max_epochs: train.max_epochs,
        seed,
        batch_mode: train
            .batch_size
            .map_or(BatchMode::Full, BatchMode::MiniBatch),
        ..TrainConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Z-scores and folds the training data; returns the folded matrix and the
/// statistics needed to repeat the preprocessing later.
fn prepare(input: &InputArgs) -> CliResult<(Matrix, igmdsr_core::preprocess::ZScoreStats)> {
    let raw = read_dataset(&input.input, input.header, input.labels_col)?;
    let (z, stats) = zscore_normalize(&raw.u)?;
    Ok((fold(&z).x, stats))
}

pub fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> CliResult<()> {
    let (x, stats) = prepare(&args.input)?;
    let n_prime = stats.means.len();
    let r = target_dim(&args.dim, n_prime)?;
    let spec = architecture(&args.train, 2 * n_prime, r, args.variant.into())?;
    let cfg = train_config(&args.train, args.seed)?;

    let (params, log) = match fit(&x, &spec, &cfg) {
        Ok(res) => res,
        Err(e) => {
            if !e.log.cost_per_epoch.is_empty() {
                write_atomic(&args.out_log, log_csv(&e.log.cost_per_epoch).as_bytes())?;
            }
            return Err(e.into());
        }
    };
    let trace = forward(&params, &x)?;
    let model = ModelFile {
        seed: args.seed,
        stats,
        params,
    };
    model.save(&args.model)?;
    write_atomic(
        &args.out_embedding,
        matrix_csv(trace.embedding()).as_bytes(),
    )?;
    write_atomic(&args.out_log, log_csv(&log.cost_per_epoch).as_bytes())?;

    let stop = log.stop_reason.map_or("unknown", |s| s.name());
    writeln!(
        out,
        "final_cost={}",
        fmt_f64(log.final_cost().unwrap_or(f64::NAN))
    )?;
    writeln!(out, "stop_reason={stop}")?;
    writeln!(out, "epochs={}", log.epochs_run)?;
    Ok(())
}

/// Applies a stored model's preprocessing and forward pass to raw data.
/// Returns the folded input, the trace and any labels.
pub fn apply_model(
    model: &ModelFile,
    input: &InputArgs,
) -> CliResult<(Matrix, ForwardTrace, Option<Vec<String>>)> {
    let raw = read_dataset(&input.input, input.header, input.labels_col)?;
    if raw.u.cols() != model.raw_cols() {
        return Err(CliError::Input(format!(
            "data has {} feature columns, model expects {}",
            raw.u.cols(),
            model.raw_cols()
        )));
    }
    let x = fold(&model.stats.apply(&raw.u)?).x;
    let trace = forward(&model.params, &x)?;
    Ok((x, trace, raw.labels))
}

pub fn cmd_transform(args: &TransformArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = ModelFile::load(&args.model)?;
    let (_, trace, _) = apply_model(&model, &args.input)?;
    let b = trace.embedding();
    write_atomic(&args.out_embedding, matrix_csv(b).as_bytes())?;
    writeln!(out, "rows={}", b.rows())?;
    writeln!(out, "cols={}", b.cols())?;
    Ok(())
}

/// Held-out kNN accuracy on the embedding with the fixed stride split.
pub fn split_knn_accuracy(emb: &Matrix, labels: &[String], k: usize) -> CliResult<f64> {
    let (test, train): (Vec<usize>, Vec<usize>) =
        (0..emb.rows()).partition(|i| i % KNN_TEST_STRIDE == KNN_TEST_STRIDE - 1);
    if test.is_empty() {
        return Err(CliError::Parameter(format!(
            "kNN evaluation needs at least {KNN_TEST_STRIDE} rows"
        )));
    }
    let pick = |idx: &[usize]| idx.iter().map(|&i| labels[i].clone()).collect::<Vec<_>>();
    Ok(knn_accuracy(
        &emb.select_rows(&train)?,
        &pick(&train),
        &emb.select_rows(&test)?,
        &pick(&test),
        k,
    )?)
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = ModelFile::load(&args.model)?;
    let (x, trace, labels) = apply_model(&model, &args.input)?;
    let t = trustworthiness(&x, trace.embedding(), args.k)?;
    let err = relative_reconstruction_error(&x, &trace.x_hat)?;
    writeln!(out, "trustworthiness={}", fmt_f64(t))?;
    writeln!(out, "relative_reconstruction_error={}", fmt_f64(err))?;
    if let Some(labels) = labels {
        let acc = split_knn_accuracy(trace.embedding(), &labels, args.k)?;
        writeln!(out, "knn_accuracy={}", fmt_f64(acc))?;
    }
    Ok(())
}

/// One row of the `compare` table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub method: &'static str,
    pub trustworthiness: f64,
    pub relative_reconstruction_error: f64,
}

/// Runs both network variants and the baseline on the same folded data,
/// averaging each score over `seeds`.
pub fn compare_methods(
    x: &Matrix,
    r: usize,
    train: &TrainArgs,
    seeds: &[u64],
    iters: usize,
    k: usize,
) -> CliResult<Vec<ComparisonRow>> {
    if seeds.is_empty() {
        return Err(CliError::Parameter("at least one seed is required".into()));
    }
    let mut sums = [[0.0f64; 2]; 3];
    for &seed in seeds {
        let cfg = train_config(train, seed)?;
        for (slot, variant) in [Variant::Nmf, Variant::Rnmf].into_iter().enumerate() {
            let spec = architecture(train, x.cols(), r, variant)?;
            let (params, _) = fit(x, &spec, &cfg)?;
            let trace = forward(&params, x)?;
            sums[slot][0] += trustworthiness(x, trace.embedding(), k)?;
            sums[slot][1] += relative_reconstruction_error(x, &trace.x_hat)?;
        }
        let base = nmf_multiplicative(x, r, iters, seed)?;
        sums[2][0] += trustworthiness(x, &base.b, k)?;
        sums[2][1] += relative_reconstruction_error(x, &base.reconstruction())?;
    }
    let count = seeds.len() as f64;
    Ok(["ig-mdsr-nmf", "ig-mdsr-rnmf", "nmf-baseline"]
        .into_iter()
        .zip(sums)
        .map(|(method, [t, e])| ComparisonRow {
            method,
            trustworthiness: t / count,
            relative_reconstruction_error: e / count,
        })
        .collect())
}

pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> CliResult<()> {
    let (x, stats) = prepare(&args.input)?;
    let r = target_dim(&args.dim, stats.means.len())?;
    let rows = compare_methods(&x, r, &args.train, &args.seeds, args.iters, args.k)?;
    writeln!(out, "method,trustworthiness,relative_reconstruction_error")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{}",
            row.method,
            fmt_f64(row.trustworthiness),
            fmt_f64(row.relative_reconstruction_error)
        )?;
    }
    Ok(())
}

/// Largest relative gradient error over both variants of the seeded problem.
pub fn gradcheck_error(seed: u64) -> CliResult<f64> {
    let mut worst = 0.0f64;
    for variant in [Variant::Nmf, Variant::Rnmf] {
        let (params, x) = gradient_check_problem(seed, variant);
        worst = worst.max(max_gradient_error(&params, &x, GRADCHECK_STEP)?);
    }
    Ok(worst)
}

pub fn cmd_gradcheck(args: &GradcheckArgs, out: &mut dyn Write) -> CliResult<()> {
    let err = gradcheck_error(args.seed)?;
    writeln!(out, "max_rel_err={}", fmt_f64(err))?;
    if err > GRADCHECK_TOLERANCE {
        return Err(CliError::Numeric(format!(
            "gradient check failed: {err} exceeds {GRADCHECK_TOLERANCE}"
        )));
    }
    Ok(())
}
