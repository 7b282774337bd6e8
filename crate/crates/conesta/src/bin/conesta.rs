//! Command-line surface: simulate, fit, predict, evaluate, check.
//!
//! Exit codes: 0 success, 1 runtime/domain failure, 2 usage error.

use clap::{Parser, Subcommand, ValueEnum};
use conesta::prelude::*;
use conesta::{io, ConestaError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "conesta", version, about = "Sparse TV-penalized logistic regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with planted predictive regions.
    Simulate {
        /// JSON generator spec (dims, n_per_class, regions, noise_sigma, seed).
        #[arg(long)]
        spec: PathBuf,
        /// Prefix for the .dataset, .mask and .truth output files.
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Fit penalized logistic regression with the continuation solver.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long)]
        l2: f64,
        #[arg(long)]
        l1: f64,
        #[arg(long)]
        tv: f64,
        /// Target precision of the continuation schedule.
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = InitArg::RandomUnit)]
        init: InitArg,
        /// Scale columns to unit variance before fitting.
        #[arg(long)]
        standardize: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-sample probabilities and hard labels for a fitted model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Metrics for one prediction file, optionally compared to a second.
    Evaluate {
        #[arg(long)]
        pred_a: PathBuf,
        #[arg(long)]
        pred_b: Option<PathBuf>,
        /// Dataset file whose labels are the ground truth.
        #[arg(long)]
        truth: PathBuf,
    },
    /// Self-verification against independent references.
    Check {
        #[arg(long, value_enum)]
        suite: CheckSuite,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Zeros,
    RandomUnit,
}

impl From<InitArg> for InitMode {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::Zeros => InitMode::Zeros,
            InitArg::RandomUnit => InitMode::RandomUnit,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckSuite {
    Gradients,
    Bounds,
    Oracles,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("CONESTA_LOG", "error"),
    )
    .init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate { spec, out_prefix } => cmd_simulate(&spec, &out_prefix),
        Command::Fit {
            data,
            mask,
            l2,
            l1,
            tv,
            eps,
            seed,
            init,
            standardize,
            out,
        } => cmd_fit(&data, &mask, l2, l1, tv, eps, seed, init.into(), standardize, &out),
        Command::Predict { model, data, out } => cmd_predict(&model, &data, &out),
        Command::Evaluate {
            pred_a,
            pred_b,
            truth,
        } => cmd_evaluate(&pred_a, pred_b.as_deref(), &truth),
        Command::Check { suite, seed } => cmd_check(suite, seed),
    }
}

fn cmd_simulate(spec_path: &Path, out_prefix: &Path) -> Result<()> {
    let text = std::fs::read_to_string(spec_path)?;
    let spec: SyntheticSpec = serde_json::from_str(&text)
        .map_err(|e| ConestaError::InvalidArgument(format!("invalid spec: {e}")))?;
    let (data, vol, truth) = generate(&spec)?;
    let prefix = out_prefix.to_string_lossy();
    io::write_dataset(&PathBuf::from(format!("{prefix}.dataset")), &data)?;
    io::write_mask(&PathBuf::from(format!("{prefix}.mask")), &vol)?;
    io::write_truth(&PathBuf::from(format!("{prefix}.truth")), &truth)?;
    log::info!(
        "wrote {} samples x {} voxels under prefix {prefix}",
        data.n_samples(),
        data.n_features()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    data_path: &Path,
    mask_path: &Path,
    l2: f64,
    l1: f64,
    tv: f64,
    eps: f64,
    seed: u64,
    init: InitMode,
    standardize: bool,
    out: &Path,
) -> Result<()> {
    let mut data = io::read_dataset(data_path)?;
    let vol = io::read_mask(mask_path)?;
    if vol.voxel_count() != data.n_features() {
        return Err(ConestaError::DimensionMismatch(format!(
            "mask has {} voxels but dataset has {} features",
            vol.voxel_count(),
            data.n_features()
        )));
    }
    let scales = if standardize {
        Some(data.standardize_columns())
    } else {
        None
    };
    let weights = PenaltyWeights::new(l2, l1, tv)?;
    let op = GradientOperator::build(&vol)?;
    let beta0 = init_beta(data.n_features(), init, seed);
    let inner = InnerSolverConfig::default();
    let mut fit = conesta_fit(&data, &op, &weights, &beta0, eps, &inner, seed)?;
    if let Some(scales) = scales {
        // report coefficients in the original feature space
        fit.beta
            .iter_mut()
            .zip(&scales)
            .for_each(|(b, &s)| *b *= s);
    }
    log::info!(
        "fit finished: {} runs, {} total inner iterations",
        fit.runs.len(),
        fit.total_inner_iterations
    );
    let model = io::ModelFile::from_fit(&fit, weights, eps, seed);
    io::write_model(out, &model)?;
    Ok(())
}

fn cmd_predict(model_path: &Path, data_path: &Path, out: &Path) -> Result<()> {
    let model = io::read_model(model_path)?;
    let data = io::read_dataset(data_path)?;
    if model.beta.len() != data.n_features() {
        return Err(ConestaError::DimensionMismatch(format!(
            "model has {} coefficients but dataset has {} features",
            model.beta.len(),
            data.n_features()
        )));
    }
    let probs = predict_proba(data.x(), &model.beta)?;
    let mut csv = String::from("probability,label\n");
    for p in &probs {
        let label = (*p >= 0.5) as u8;
        csv.push_str(&format!("{p:?},{label}\n"));
    }
    std::fs::write(out, csv)?;
    Ok(())
}

fn read_prediction_csv(path: &Path) -> Result<Vec<u8>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("probability,label") => {}
        other => {
            return Err(ConestaError::InvalidArgument(format!(
                "malformed prediction CSV {path:?}: bad header {other:?}"
            )))
        }
    }
    let mut labels = Vec::new();
    for (idx, line) in lines.enumerate() {
        let label = line
            .split(',')
            .nth(1)
            .and_then(|l| l.parse::<u8>().ok())
            .ok_or_else(|| {
                ConestaError::InvalidArgument(format!(
                    "malformed prediction CSV {path:?} at row {}",
                    idx + 2
                ))
            })?;
        labels.push(label);
    }
    Ok(labels)
}

fn cmd_evaluate(pred_a: &Path, pred_b: Option<&Path>, truth: &Path) -> Result<()> {
    let y_true = io::read_dataset(truth)?.labels().to_vec();
    let labels_a = read_prediction_csv(pred_a)?;
    if labels_a.len() != y_true.len() {
        return Err(ConestaError::ShapeMismatch {
            expected: y_true.len(),
            got: labels_a.len(),
        });
    }
    let metrics_a = compute_metrics(&y_true, &labels_a)?;
    let mut report = serde_json::json!({ "metrics_a": metrics_a });
    if let Some(pred_b) = pred_b {
        let labels_b = read_prediction_csv(pred_b)?;
        if labels_b.len() != y_true.len() {
            return Err(ConestaError::ShapeMismatch {
                expected: y_true.len(),
                got: labels_b.len(),
            });
        }
        report["metrics_b"] = serde_json::to_value(compute_metrics(&y_true, &labels_b)?)
            .expect("metrics serialize");
        report["mcnemar"] = serde_json::to_value(mcnemar_test(&y_true, &labels_a, &labels_b)?)
            .expect("test result serializes");
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

struct CheckReport {
    failures: usize,
}

impl CheckReport {
    fn record(&mut self, name: &str, tol: f64, observed: f64, pass: bool) {
        let status = if pass { "PASS" } else { "FAIL" };
        println!("{status} {name}: observed {observed:.3e}, tolerance {tol:.1e}");
        if !pass {
            self.failures += 1;
        }
    }
}

fn cmd_check(suite: CheckSuite, seed: u64) -> Result<()> {
    let mut report = CheckReport { failures: 0 };
    match suite {
        CheckSuite::Gradients => check_gradients(seed, &mut report)?,
        CheckSuite::Bounds => check_bounds(seed, &mut report)?,
        CheckSuite::Oracles => check_oracles(seed, &mut report)?,
    }
    if report.failures == 0 {
        Ok(())
    } else {
        Err(ConestaError::InvalidArgument(format!(
            "{} check(s) failed",
            report.failures
        )))
    }
}

fn check_gradients(seed: u64, report: &mut CheckReport) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vol = MaskedVolume::full((3, 3, 3))?;
    let op = GradientOperator::build(&vol)?;
    let p = vol.voxel_count();
    let h = 1e-6;

    let mu = SmoothingParam::new(0.2)?;
    let beta: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let grad = tv_smoothed_gradient(&op, &beta, mu)?;
    let mut worst = 0.0_f64;
    for j in 0..p {
        let mut plus = beta.clone();
        let mut minus = beta.clone();
        plus[j] += h;
        minus[j] -= h;
        let fd = (tv_smoothed(&op, &plus, mu)? - tv_smoothed(&op, &minus, mu)?) / (2.0 * h);
        worst = worst.max((grad[j] - fd).abs() / grad[j].abs().max(1.0));
    }
    report.record("gradients/tv_smoothed vs central differences", 1e-5, worst, worst <= 1e-5);

    let data = random_dataset(&mut rng, 15, p);
    let beta: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (_, grad) = logistic_loss_value_gradient(&data, &beta)?;
    let mut worst = 0.0_f64;
    for j in 0..p {
        let mut plus = beta.clone();
        let mut minus = beta.clone();
        plus[j] += h;
        minus[j] -= h;
        let fp = conesta::model::logistic_loss_value(&data, &plus)?;
        let fm = conesta::model::logistic_loss_value(&data, &minus)?;
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((grad[j] - fd).abs() / grad[j].abs().max(1.0));
    }
    report.record("gradients/logistic_loss vs central differences", 1e-5, worst, worst <= 1e-5);
    Ok(())
}

fn check_bounds(seed: u64, report: &mut CheckReport) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vol = MaskedVolume::full((4, 4, 4))?;
    let op = GradientOperator::build(&vol)?;
    let p = vol.voxel_count();
    let mut worst_low = 0.0_f64;
    let mut worst_high = 0.0_f64;
    for _ in 0..100 {
        let beta: Vec<f64> = (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mu_val = 10f64.powf(rng.gen_range(-6.0..0.0));
        let mu = SmoothingParam::new(mu_val)?;
        let exact = tv_exact(&op, &beta)?;
        let smooth = tv_smoothed(&op, &beta, mu)?;
        worst_low = worst_low.max(smooth - exact);
        worst_high = worst_high.max(exact - smooth - mu_val * p as f64 / 2.0);
    }
    report.record("bounds/TV_mu <= TV", 1e-12, worst_low, worst_low <= 1e-12);
    report.record("bounds/TV - TV_mu <= mu p / 2", 1e-12, worst_high, worst_high <= 1e-12);
    Ok(())
}

fn check_oracles(seed: u64, report: &mut CheckReport) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vol = MaskedVolume::full((3, 3, 3))?;
    let op = GradientOperator::build(&vol)?;
    let p = vol.voxel_count();
    let data = random_dataset(&mut rng, 20, p);
    let weights = PenaltyWeights::new(0.1, 0.1, 0.8)?;
    let inner = InnerSolverConfig {
        max_iter: 20_000,
        tol: 1e-10,
    };
    let beta0 = init_beta(p, InitMode::RandomUnit, seed);
    let fit = conesta_fit(&data, &op, &weights, &beta0, 1e-6, &inner, seed)?;
    let f_fit = objective_exact(&data, &op, &weights, &fit.beta)?;

    // staged proximal-gradient reference: plain ISTA, shrinking mu
    let norm_x = data.spectral_norm_x(1e-6, 10_000, seed)?;
    let l0 = smooth_part_lipschitz(data.n_samples(), weights.l2, norm_x);
    let mut beta = vec![0.0; p];
    for mu_val in [1e-2, 1e-4, 1e-6] {
        let mu = SmoothingParam::new(mu_val)?;
        let t = fista_step_size(l0, &weights, op.spectral_norm(), mu)?;
        for _ in 0..40_000 {
            let (_, mut g) = logistic_loss_value_gradient(&data, &beta)?;
            g.iter_mut().zip(&beta).for_each(|(gi, &b)| *gi += 2.0 * weights.l2 * b);
            let tvg = tv_smoothed_gradient(&op, &beta, mu)?;
            g.iter_mut().zip(&tvg).for_each(|(gi, &t_)| *gi += weights.tv * t_);
            let step: Vec<f64> = beta.iter().zip(&g).map(|(b, gi)| b - t * gi).collect();
            beta = prox_l1(&step, t * weights.l1);
        }
    }
    let f_ref = objective_exact(&data, &op, &weights, &beta)?;
    let gap = f_fit - f_ref;
    report.record("oracles/conesta vs long-run proximal gradient", 1e-4, gap, gap <= 1e-4);
    Ok(())
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Dataset {
    let x = ndarray::Array2::from_shape_fn((n, p), |_| rng.gen_range(-1.0..1.0));
    let y = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
    Dataset::new(x, y).expect("labels in range")
}
