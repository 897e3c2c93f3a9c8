mod io;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mesa::baseline::{tukey_window, welch_psd_with};
use mesa::selection::{fit_and_select, max_order, EarlyStopConfig};
use mesa::spectrum::{default_grid_len, frequency_grid, psd};
use mesa::stats::{quantile, median};
use mesa::synth::{
    default_burn_in, generate_ar, generate_from_psd, GaussianPsd, Interpolation, TabulatedPsd,
    TargetPsd,
};
use mesa::validate::{
    compare_mesa_welch, run_order_recovery, run_target_experiment, CompareConfig,
    GaussianExperimentConfig, RecoveryConfig,
};
use mesa::{forecast, forecast_summary, ArModel, Criterion, EstimatorMethod, MesaError, Sided};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error(transparent)]
    Mesa(#[from] MesaError),
}

impl CliError {
    pub fn input(path: &Path, e: impl Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            reason: e.to_string(),
        }
    }

    pub fn output(path: &Path, e: impl Display) -> Self {
        Self::input(path, e)
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Mesa(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Burg maximum entropy spectral analysis.
#[derive(Parser)]
#[command(name = "mesa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit an AR model, select its order and write the PSD.
    Estimate(EstimateArgs),
    /// Sample continuations of a series from its fitted AR model.
    Forecast(ForecastArgs),
    /// Draw a synthetic series from a PSD or an AR model.
    Generate(GenerateArgs),
    /// Welch averaged periodogram.
    Welch(WelchArgs),
    /// MESA against Welch on synthetic data with a known PSD.
    Compare(CompareArgs),
    /// Monte Carlo validation runs.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Args)]
struct InputArgs {
    /// CSV with one column (needs --dt) or two columns time,value.
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Sampling interval in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Read raw little-endian f64 samples.
    #[arg(long)]
    binary: bool,
    /// Subtract the sample mean before fitting.
    #[arg(long)]
    demean: bool,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, default_value = "fpe")]
    criterion: Criterion,
    #[arg(long, default_value = "burg")]
    method: EstimatorMethod,
    /// Highest order scanned; defaults to floor(2n / ln 2n).
    #[arg(long)]
    max_order: Option<usize>,
    /// Scan every order up to the maximum instead of stopping early.
    #[arg(long)]
    full_scan: bool,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    fit: FitArgs,
    /// Number of frequencies between 0 and Nyquist.
    #[arg(long)]
    n_freqs: Option<usize>,
    /// Write the PSD over [-Ny, Ny] instead of the folded one-sided form.
    #[arg(long)]
    two_sided: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ForecastArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    fit: FitArgs,
    /// Use this model (JSON written by `estimate`) instead of fitting.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    horizon: usize,
    #[arg(long, default_value_t = 100)]
    realizations: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.95")]
    quantiles: Vec<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PsdSource {
    /// Gaussian PSD with this mean and standard deviation.
    #[arg(long, num_args = 2, value_names = ["MU", "SIGMA"])]
    psd_gaussian: Option<Vec<f64>>,
    /// Tabulated PSD as frequency,psd CSV (one-sided unless --psd-two-sided).
    #[arg(long, value_name = "PATH")]
    psd: Option<PathBuf>,
    #[arg(long)]
    psd_two_sided: bool,
    /// Interpolate the table linearly in log-log space.
    #[arg(long)]
    loglog: bool,
}

impl PsdSource {
    fn target(&self) -> Result<Option<Box<dyn TargetPsd>>> {
        match (&self.psd_gaussian, &self.psd) {
            (Some(_), Some(_)) => Err(CliError::Usage(
                "--psd-gaussian and --psd are mutually exclusive".into(),
            )),
            (Some(g), None) => Ok(Some(Box::new(GaussianPsd::new(g[0], g[1])?))),
            (None, Some(path)) => {
                let sided = if self.psd_two_sided {
                    Sided::TwoSided
                } else {
                    Sided::OneSided
                };
                let interp = if self.loglog {
                    Interpolation::LogLog
                } else {
                    Interpolation::Linear
                };
                let table = io::read_table(path, sided)?;
                Ok(Some(Box::new(TabulatedPsd::new(table, interp)?)))
            }
            (None, None) => Ok(None),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    source: PsdSource,
    /// Simulate this AR model (JSON written by `estimate`).
    #[arg(long)]
    ar_model: Option<PathBuf>,
    #[arg(long)]
    n: usize,
    /// Sampling interval; ignored for --ar-model, which carries its own.
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    /// Discarded warm-up samples for --ar-model; defaults to 10 times the order.
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WelchOpts {
    #[arg(long, default_value_t = 1024)]
    segment: usize,
    #[arg(long, default_value_t = 0.5)]
    overlap: f64,
    /// Tukey taper fraction.
    #[arg(long, default_value_t = 0.4)]
    tukey: f64,
}

#[derive(Args)]
struct WelchArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    opts: WelchOpts,
    /// Remove each segment's mean.
    #[arg(long)]
    detrend: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    source: PsdSource,
    /// Series length in seconds.
    #[arg(long)]
    duration: f64,
    /// Sampling rate in Hz.
    #[arg(long)]
    fs: f64,
    #[command(flatten)]
    opts: WelchOpts,
    #[arg(long, default_value = "fpe")]
    criterion: Criterion,
    /// Independent series; trial i uses seed + i.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Ensemble of series with a Gaussian (or tabulated) PSD.
    Gaussian(GaussianArgs),
    /// Order selected for random AR(p) models against the true p.
    OrderRecovery(RecoveryArgs),
}

#[derive(Args)]
struct GaussianArgs {
    #[arg(long, default_value_t = 100)]
    realizations: usize,
    #[arg(long, default_value_t = 3000)]
    samples: usize,
    #[arg(long, default_value = "fpe")]
    criterion: Criterion,
    #[arg(long, default_value_t = 2.5)]
    mean: f64,
    #[arg(long, default_value_t = 0.5)]
    std: f64,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    /// Use a tabulated PSD instead of the Gaussian.
    #[arg(long, value_name = "PATH")]
    psd: Option<PathBuf>,
    #[arg(long)]
    psd_two_sided: bool,
    #[arg(long)]
    loglog: bool,
    #[arg(long)]
    full_scan: bool,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RecoveryArgs {
    #[arg(long, default_value_t = 50)]
    models: usize,
    #[arg(long, default_value_t = 2)]
    p_min: usize,
    #[arg(long, default_value_t = 500)]
    p_max: usize,
    #[arg(long, default_value_t = 30000)]
    samples: usize,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    full_scan: bool,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn early_stop(full_scan: bool, m_max: usize) -> EarlyStopConfig {
    if full_scan {
        EarlyStopConfig::disabled()
    } else {
        EarlyStopConfig::for_max_order(m_max)
    }
}

fn load(input: &InputArgs) -> Result<mesa::TimeSeries> {
    let ts = io::read_series(&input.input, input.dt, input.binary)?;
    Ok(if input.demean { ts.demeaned() } else { ts })
}

fn read_model(path: &Path) -> Result<ArModel> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(path, e))
}

fn fit_model(ts: &mesa::TimeSeries, fit: &FitArgs) -> Result<(ArModel, mesa::OrderSelection)> {
    let m_max = match fit.max_order {
        Some(m) => m,
        None => max_order(ts.len())?,
    };
    let es = early_stop(fit.full_scan, m_max);
    let selected = fit_and_select(ts, m_max, fit.method, &[fit.criterion], es)?;
    let selection = selected.selections.into_iter().next().expect("one criterion");
    let model = selected.trace.model(selection.chosen_order(), ts.dt())?;
    Ok((model, selection))
}

fn estimate(args: &EstimateArgs) -> Result<()> {
    let ts = load(&args.input)?;
    let (model, selection) = fit_model(&ts, &args.fit)?;
    let n_freqs = args
        .n_freqs
        .unwrap_or_else(|| default_grid_len(model.order()) / 2 + 1);
    let sided = if args.two_sided {
        Sided::TwoSided
    } else {
        Sided::OneSided
    };
    let freqs = frequency_grid(n_freqs, ts.dt(), sided)?;
    let mut sd = psd(&model, &freqs)?;
    if !args.two_sided {
        sd = sd.to_one_sided(model.nyquist());
    }
    io::write_psd(&args.out_dir.join("psd.csv"), &sd)?;
    io::write_json(&args.out_dir.join("model.json"), &model)?;
    io::write_json(&args.out_dir.join("selection.json"), &selection)?;
    eprintln!(
        "order {} ({}), p_m {:.6e}",
        model.order(),
        selection.criterion(),
        model.p_m()
    );
    Ok(())
}

fn quantile_label(q: f64) -> String {
    let s = q.to_string();
    format!("q{}", s.strip_prefix("0.").unwrap_or(&s))
}

fn cmd_forecast(args: &ForecastArgs) -> Result<()> {
    let ts = load(&args.input)?;
    let model = match &args.model {
        Some(path) => read_model(path)?,
        None => fit_model(&ts, &args.fit)?.0,
    };
    let ens = forecast(&model, &ts, args.horizon, args.realizations, args.seed, 1.0)?;
    let summary = forecast_summary(&ens, &args.quantiles)?;
    let steps: Vec<f64> = (1..=args.horizon).map(|s| s as f64).collect();
    let mut header = vec!["step".to_string(), "median".to_string()];
    header.extend(args.quantiles.iter().map(|q| quantile_label(*q)));
    let mut columns: Vec<&[f64]> = vec![&steps, &summary.median];
    columns.extend(summary.bands.iter().map(Vec::as_slice));
    io::write_csv(&args.out, &header, &columns)
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let target = args.source.target()?;
    let ts = match (target, &args.ar_model) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage("give either a PSD or --ar-model, not both".into()))
        }
        (Some(t), None) => generate_from_psd(t.as_ref(), args.n, args.dt, args.seed)?,
        (None, Some(path)) => {
            let model = read_model(path)?;
            let burn_in = args.burn_in.unwrap_or_else(|| default_burn_in(model.order()));
            generate_ar(&model, args.n, burn_in, args.seed)?
        }
        (None, None) => {
            return Err(CliError::Usage(
                "one of --psd-gaussian, --psd or --ar-model is required".into(),
            ))
        }
    };
    let t: Vec<f64> = (0..ts.len()).map(|i| i as f64 * ts.dt()).collect();
    io::write_csv(&args.out, &["time".into(), "value".into()], &[&t, ts.samples()])
}

fn welch(args: &WelchArgs) -> Result<()> {
    let ts = load(&args.input)?;
    let w = tukey_window(args.opts.segment, args.opts.tukey)?;
    let sd = welch_psd_with(&ts, args.opts.segment, args.opts.overlap, &w, args.detrend)?;
    io::write_psd(&args.out, &sd)
}

fn compare(args: &CompareArgs) -> Result<()> {
    let target = args
        .source
        .target()?
        .ok_or_else(|| CliError::Usage("--psd-gaussian or --psd is required".into()))?;
    let cfg = CompareConfig {
        duration: args.duration,
        sample_rate: args.fs,
        segment_len: args.opts.segment,
        overlap: args.opts.overlap,
        tukey_alpha: args.opts.tukey,
        criterion: args.criterion,
    };
    let mut records = Vec::new();
    println!("seed,mesa_order,mesa_error,welch_error");
    for i in 0..args.trials {
        let seed = args.seed.wrapping_add(i);
        let c = compare_mesa_welch(target.as_ref(), &cfg, seed)?;
        let r = c.record;
        println!("{},{},{:.6},{:.6}", r.seed, r.mesa_order, r.mesa_error, r.welch_error);
        if i == 0 {
            let ny = 0.5 * args.fs;
            let truth = c.truth.to_one_sided(ny);
            let mesa = c.mesa.to_one_sided(ny);
            io::write_csv(
                &args.out_dir.join("compare_psd.csv"),
                &["frequency_hz", "truth", "mesa", "welch"].map(String::from),
                &[truth.freqs(), truth.values(), mesa.values(), c.welch.values()],
            )?;
        }
        records.push(r);
    }
    io::write_jsonl(&args.out_dir.join("compare.jsonl"), &records)
}

#[derive(Serialize)]
struct Quantiles {
    q05: f64,
    q25: f64,
    q50: f64,
    q75: f64,
    q95: f64,
}

impl Quantiles {
    fn of(values: &[f64]) -> Result<Self> {
        let q = |p| quantile(values, p);
        Ok(Self {
            q05: q(0.05)?,
            q25: q(0.25)?,
            q50: q(0.5)?,
            q75: q(0.75)?,
            q95: q(0.95)?,
        })
    }
}

#[derive(Serialize)]
struct GaussianSummary<'a> {
    config: &'a GaussianExperimentConfig,
    error: Quantiles,
    order: Quantiles,
}

fn gaussian(args: &GaussianArgs) -> Result<()> {
    let mut cfg = GaussianExperimentConfig::new(args.realizations, args.samples, args.criterion, args.seed);
    cfg.dt = args.dt;
    cfg.mean = args.mean;
    cfg.std = args.std;
    if args.full_scan {
        cfg.early_stop = Some(EarlyStopConfig::disabled());
    }
    let source = PsdSource {
        psd_gaussian: args.psd.is_none().then(|| vec![args.mean, args.std]),
        psd: args.psd.clone(),
        psd_two_sided: args.psd_two_sided,
        loglog: args.loglog,
    };
    let target = source.target()?.expect("a target is always set");
    let out = run_target_experiment(target.as_ref(), &cfg)?;

    let errors: Vec<f64> = out.records.iter().map(|r| r.error).collect();
    let orders: Vec<f64> = out.records.iter().map(|r| r.order as f64).collect();
    let summary = GaussianSummary {
        config: &cfg,
        error: Quantiles::of(&errors)?,
        order: Quantiles::of(&orders)?,
    };
    io::write_jsonl(&args.out_dir.join("records.jsonl"), &out.records)?;
    io::write_json(&args.out_dir.join("summary.json"), &summary)?;
    io::write_csv(
        &args.out_dir.join("spectra.csv"),
        &["frequency_hz", "truth", "mean", "q05", "median", "q95", "relative_error"]
            .map(String::from),
        &[
            out.truth.freqs(),
            out.truth.values(),
            out.mean_psd.values(),
            out.lower_psd.values(),
            out.median_psd.values(),
            out.upper_psd.values(),
            out.error_curve.values(),
        ],
    )?;
    eprintln!(
        "median error {:.4}, median order {}",
        summary.error.q50, summary.order.q50
    );
    Ok(())
}

#[derive(Serialize)]
struct RecoverySummary<'a> {
    config: &'a RecoveryConfig,
    m_max: Option<usize>,
    fpe: Quantiles,
    cat: Quantiles,
    obd: Quantiles,
}

fn recovery(args: &RecoveryArgs) -> Result<()> {
    let mut cfg = RecoveryConfig::new(args.models, args.p_min, args.p_max, args.samples, args.seed);
    cfg.burn_in = args.burn_in;
    if args.full_scan {
        cfg.early_stop = Some(EarlyStopConfig::disabled());
    }
    let records = run_order_recovery(&cfg)?;
    io::write_jsonl(&args.out_dir.join("records.jsonl"), &records)?;
    if records.is_empty() {
        return Ok(());
    }
    // summary of p_hat / p_true per criterion
    let ratio = |c: Criterion| -> Vec<f64> {
        records
            .iter()
            .map(|r| r.estimate(c) as f64 / r.p_true as f64)
            .collect()
    };
    let summary = RecoverySummary {
        config: &cfg,
        m_max: records.first().map(|r| r.m_max),
        fpe: Quantiles::of(&ratio(Criterion::Fpe))?,
        cat: Quantiles::of(&ratio(Criterion::Cat))?,
        obd: Quantiles::of(&ratio(Criterion::Obd))?,
    };
    io::write_json(&args.out_dir.join("summary.json"), &summary)?;
    let med = |c| median(&ratio(c)).unwrap_or(f64::NAN);
    eprintln!(
        "median p_hat/p_true: fpe {:.3}, cat {:.3}, obd {:.3}",
        med(Criterion::Fpe),
        med(Criterion::Cat),
        med(Criterion::Obd)
    );
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("MESA_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("MESA_THREADS={v} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match &cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Forecast(a) => cmd_forecast(a),
        Command::Generate(a) => generate(a),
        Command::Welch(a) => welch(a),
        Command::Compare(a) => compare(a),
        Command::Experiment(ExperimentCommand::Gaussian(a)) => gaussian(a),
        Command::Experiment(ExperimentCommand::OrderRecovery(a)) => recovery(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
