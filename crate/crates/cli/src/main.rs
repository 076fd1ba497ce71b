//! Command-line front end for the coincidence detection pipeline.
//!
//! Subcommands wire the library modules together: simulate datasets, sort
//! them with the single-coincidence-window baseline, train and run spiking
//! networks, and score or compare the results. Every run prints its fully
//! resolved configuration to stdout before acting, so a run is reproducible
//! from its own output. Timing and throughput go to stderr; files are
//! written through a temporary path and renamed only on success, so a failed
//! run leaves no partial outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use petspike_core::geometry::GeometryConfig;
use petspike_core::io::{self, DatasetManifest};
use petspike_core::loss::{LossConfig, TimingKind};
use petspike_core::metrics::{self, MatchReport, DEFAULT_TOLERANCE};
use petspike_core::scw::{self, ScwConfig, ScwResult};
use petspike_core::simulator::{self, SimulatorConfig};
use petspike_core::snn::LifNetwork;
use petspike_core::trainer::{self, NetworkConfig, TrainConfig};
use petspike_core::{DetectorConfig, Sample, SpikeTrain};

#[derive(Parser)]
#[command(
    name = "petspike",
    version,
    about = "Coincidence detection for ring-detector event streams: simulate, sort, train, evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset with the Monte Carlo simulator.
    Simulate(SimulateArgs),
    /// Sort a dataset with the single-coincidence-window baseline.
    Scw(ScwArgs),
    /// Train a spiking network on a dataset.
    Train(TrainArgs),
    /// Run a trained network over a dataset and store its predictions.
    Predict(PredictArgs),
    /// Score stored predictions against a dataset's labels.
    Eval(EvalArgs),
    /// Run SCW and a trained network on one dataset and tabulate both.
    Compare(CompareArgs),
    /// Print a dataset summary and dump one sample as CSV.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of detector crystals (even, at least 4).
    #[arg(long, default_value_t = 240)]
    crystals: u32,
    /// Time steps per sample.
    #[arg(long, default_value_t = 2000)]
    timesteps: u32,
    /// Decays simulated per sample.
    #[arg(long, default_value_t = 40)]
    events: u32,
    /// Per-photon detection probability.
    #[arg(long, default_value_t = 0.8)]
    p_detect: f64,
    /// Largest angular deviation from the exactly opposite crystal.
    #[arg(long, default_value_t = 2)]
    max_shift: u32,
    /// Number of samples to generate.
    #[arg(long)]
    samples: u64,
    /// Base RNG seed; sample i depends only on (seed, i).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScwArgs {
    /// Input dataset path.
    #[arg(long)]
    data: PathBuf,
    /// Coincidence window length; a pair must be closer than this.
    #[arg(long, default_value_t = ScwConfig::default().window)]
    window: u32,
    /// Smallest accepted deviation margin for the geometry filter.
    #[arg(long, default_value_t = ScwConfig::default().min_ring_separation)]
    min_ring_separation: u32,
    /// Reject pairs whose crystals are far from ring-opposite.
    #[arg(long)]
    geometry_filter: bool,
    /// Matching tolerance (time steps) when scoring against labels.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: u32,
    /// Optional path to store the accepted pairs as a prediction dataset.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Input dataset path.
    #[arg(long)]
    data: PathBuf,
    /// Hidden layer width; defaults to a size scaled from the crystal count.
    #[arg(long)]
    hidden: Option<usize>,
    /// Number of hidden layers.
    #[arg(long, default_value_t = 1)]
    hidden_layers: usize,
    /// Loss family.
    #[arg(long, value_enum, default_value_t = LossChoice::CombinedMse)]
    loss: LossChoice,
    /// Weight of the spike-count term.
    #[arg(long, default_value_t = 1.0)]
    count_weight: f64,
    /// Weight of the timing term (ignored for --loss count).
    #[arg(long, default_value_t = 0.1)]
    timing_weight: f64,
    /// Adam learning rate.
    #[arg(long, default_value_t = trainer::DEFAULT_LEARNING_RATE)]
    lr: f64,
    /// Samples per gradient update.
    #[arg(long, default_value_t = trainer::DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    /// Upper bound on training epochs.
    #[arg(long, default_value_t = trainer::DEFAULT_MAX_EPOCHS)]
    max_epochs: usize,
    /// Epochs without a validation F1 improvement before stopping.
    #[arg(long, default_value_t = trainer::DEFAULT_PATIENCE)]
    patience: usize,
    /// Matching tolerance (time steps) for validation F1.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: u32,
    /// Seed for weight init, the data split, and epoch shuffling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Append geometry feature channels to the network input.
    #[arg(long)]
    geometry: bool,
    /// Half-width of the geometry feature band.
    #[arg(long, default_value_t = GeometryConfig::default().half_width)]
    half_width: u32,
    /// Checkpoint output path.
    #[arg(long, default_value = "model.petw")]
    out_model: PathBuf,
    /// Training history CSV output path.
    #[arg(long, default_value = "history.csv")]
    out_history: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Input dataset path.
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint path.
    #[arg(long)]
    model: PathBuf,
    /// Half-width of the geometry feature band (models with doubled input).
    #[arg(long, default_value_t = GeometryConfig::default().half_width)]
    half_width: u32,
    /// Output path for the predictions (label-less dataset).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Predictions dataset path (inputs hold the predicted spikes).
    #[arg(long)]
    pred: PathBuf,
    /// Labeled dataset path.
    #[arg(long)]
    data: PathBuf,
    /// Matching tolerance in time steps.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: u32,
}

#[derive(Args)]
struct CompareArgs {
    /// Labeled dataset path.
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint path.
    #[arg(long)]
    model: PathBuf,
    /// Coincidence window for the SCW leg.
    #[arg(long, default_value_t = ScwConfig::default().window)]
    window: u32,
    /// Matching tolerance in time steps.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: u32,
    /// Enable the SCW geometry filter.
    #[arg(long)]
    geometry_filter: bool,
    /// Half-width of the geometry feature band (models with doubled input).
    #[arg(long, default_value_t = GeometryConfig::default().half_width)]
    half_width: u32,
}

#[derive(Args)]
struct InspectArgs {
    /// Dataset path.
    #[arg(long)]
    data: PathBuf,
    /// Index of the sample to dump.
    #[arg(long, default_value_t = 0)]
    sample: u64,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LossChoice {
    /// Spike-count term only.
    Count,
    /// Count term plus one-sided timing distance.
    CombinedMse,
    /// Count term plus symmetric timing distance.
    CombinedChamfer,
}

impl LossChoice {
    fn to_config(self, count_weight: f64, timing_weight: f64) -> LossConfig {
        match self {
            LossChoice::Count => LossConfig {
                count_weight,
                timing_weight: 0.0,
                timing: TimingKind::None,
            },
            LossChoice::CombinedMse => LossConfig {
                count_weight,
                timing_weight,
                timing: TimingKind::Mse,
            },
            LossChoice::CombinedChamfer => LossConfig {
                count_weight,
                timing_weight,
                timing: TimingKind::Chamfer,
            },
        }
    }

    fn name(self) -> &'static str {
        match self {
            LossChoice::Count => "count",
            LossChoice::CombinedMse => "combined-mse",
            LossChoice::CombinedChamfer => "combined-chamfer",
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    init_thread_pool()?;
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Scw(args) => cmd_scw(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Inspect(args) => cmd_inspect(args),
    }
}

/// Caps the worker pool when PETNET_THREADS is set.
fn init_thread_pool() -> Result<()> {
    let Ok(raw) = std::env::var("PETNET_THREADS") else {
        return Ok(());
    };
    let threads = raw
        .trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("PETNET_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(())
}

fn print_config(subcommand: &str, entries: &[(&str, String)]) {
    println!("{subcommand} resolved config:");
    for (key, value) in entries {
        println!("  {key} = {value}");
    }
}

/// Staged file outputs: everything lands at its final path only if every
/// write and rename succeeds; otherwise temporaries and any already renamed
/// outputs of the same run are removed.
struct StagedWrites {
    pending: Vec<(PathBuf, PathBuf)>,
}

impl StagedWrites {
    fn new() -> Self {
        Self {
            pending: Vec::new(),
        }
    }

    fn stage(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
        self.pending.push((tmp, path.to_path_buf()));
        Ok(())
    }

    fn commit(mut self) -> Result<()> {
        for index in 0..self.pending.len() {
            let (tmp, dest) = self.pending[index].clone();
            if let Err(err) = fs::rename(&tmp, &dest) {
                for (done, (_, renamed)) in self.pending.iter().enumerate() {
                    if done < index {
                        let _ = fs::remove_file(renamed);
                    }
                }
                self.pending.drain(..index + 1);
                let _ = fs::remove_file(&tmp);
                return Err(err).with_context(|| format!("renaming into {}", dest.display()));
            }
        }
        self.pending.clear();
        Ok(())
    }
}

impl Drop for StagedWrites {
    fn drop(&mut self) {
        for (tmp, _) in &self.pending {
            let _ = fs::remove_file(tmp);
        }
    }
}

fn read_dataset(path: &Path) -> Result<(DatasetManifest, Vec<Sample>)> {
    io::read_dataset_file(path).with_context(|| format!("reading dataset {}", path.display()))
}

fn dataset_summary(manifest: &DatasetManifest, samples: &[Sample]) -> String {
    let input_spikes: usize = samples.iter().map(|s| s.input().len()).sum();
    let label_spikes: usize = samples.iter().map(|s| s.label().len()).sum();
    format!(
        "dataset: crystals = {} timesteps = {} samples = {} seed = {} geometry = {} input spikes = {} label spikes = {}",
        manifest.config.num_crystals(),
        manifest.config.num_timesteps(),
        manifest.num_samples,
        manifest.rng_seed,
        manifest.has_geometry_features,
        input_spikes,
        label_spikes,
    )
}

/// Wraps prediction trains as a label-less dataset and stages it at `path`.
fn stage_predictions(
    staged: &mut StagedWrites,
    path: &Path,
    config: DetectorConfig,
    predictions: &[SpikeTrain],
) -> Result<u64> {
    let samples: Vec<Sample> = predictions
        .iter()
        .map(|train| Sample::new(train.clone(), SpikeTrain::empty(config)))
        .collect::<petspike_core::Result<_>>()?;
    let manifest = DatasetManifest::new(config, samples.len() as u64, false, 0);
    let mut bytes = Vec::new();
    let written = io::write_dataset(&samples, &manifest, &mut bytes)?;
    staged.stage(path, &bytes)?;
    Ok(written)
}

/// Loads a checkpoint and infers from its input width whether it expects
/// geometry feature channels on top of the raw crystals.
fn load_model(path: &Path, crystals: usize) -> Result<(LifNetwork, bool)> {
    let net = LifNetwork::load_file(path)
        .with_context(|| format!("reading checkpoint {}", path.display()))?;
    ensure!(
        net.out_dim() == crystals,
        "model output width {} does not match the dataset's {} crystals",
        net.out_dim(),
        crystals
    );
    let use_geometry = if net.in_dim() == 2 * crystals {
        true
    } else if net.in_dim() == crystals {
        false
    } else {
        bail!(
            "model input width {} matches neither {} crystals nor {} with geometry features",
            net.in_dim(),
            crystals,
            2 * crystals
        );
    };
    Ok((net, use_geometry))
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    print_config(
        "simulate",
        &[
            ("crystals", args.crystals.to_string()),
            ("timesteps", args.timesteps.to_string()),
            ("events", args.events.to_string()),
            ("p-detect", args.p_detect.to_string()),
            ("max-shift", args.max_shift.to_string()),
            ("samples", args.samples.to_string()),
            ("seed", args.seed.to_string()),
            ("out", args.out.display().to_string()),
        ],
    );
    let detector = DetectorConfig::new(args.crystals, args.timesteps)?;
    let config = SimulatorConfig::new(
        detector,
        args.events,
        args.p_detect,
        args.max_shift,
        args.seed,
    )?;
    let started = Instant::now();
    let (samples, manifest) = simulator::generate_dataset(&config, args.samples)?;
    let mut bytes = Vec::new();
    io::write_dataset(&samples, &manifest, &mut bytes)?;
    let mut staged = StagedWrites::new();
    staged.stage(&args.out, &bytes)?;
    staged.commit()?;
    println!("{}", dataset_summary(&manifest, &samples));
    println!(
        "wrote {} samples ({} bytes) to {}",
        samples.len(),
        bytes.len(),
        args.out.display()
    );
    eprintln!("simulate took {:.3}s", started.elapsed().as_secs_f64());
    Ok(())
}

/// Sorts every sample, checks event conservation, and scores the recovered
/// pair spikes against the labels. Returns the aggregate sorter counts, the
/// per-sample prediction trains, and the micro-averaged report.
fn scw_over_dataset(
    samples: &[Sample],
    config: DetectorConfig,
    scw_cfg: &ScwConfig,
    tolerance: u32,
) -> Result<(ScwResult, Vec<SpikeTrain>, MatchReport)> {
    let mut totals = ScwResult::default();
    let mut predictions = Vec::with_capacity(samples.len());
    for sample in samples {
        let result = scw::scw_sort(sample.input().events(), &config, scw_cfg)?;
        ensure!(
            result.total_events() == sample.input().len() as u64,
            "sorter dropped events: {} classified of {}",
            result.total_events(),
            sample.input().len()
        );
        predictions.push(scw::scw_to_label(&result, config)?);
        totals.singles += result.singles;
        totals.multiples += result.multiples;
        totals.pairs.extend(result.pairs);
    }
    let (report, _) = metrics::evaluate_dataset(&predictions, samples, tolerance)?;
    Ok((totals, predictions, report))
}

fn cmd_scw(args: ScwArgs) -> Result<()> {
    print_config(
        "scw",
        &[
            ("data", args.data.display().to_string()),
            ("window", args.window.to_string()),
            ("min-ring-separation", args.min_ring_separation.to_string()),
            ("geometry-filter", args.geometry_filter.to_string()),
            ("tolerance", args.tolerance.to_string()),
            (
                "out",
                args.out
                    .as_ref()
                    .map_or_else(|| "(none)".into(), |p| p.display().to_string()),
            ),
        ],
    );
    let (manifest, samples) = read_dataset(&args.data)?;
    ensure!(!samples.is_empty(), "dataset holds no samples");
    let scw_cfg = ScwConfig {
        window: args.window,
        min_ring_separation: args.min_ring_separation,
        geometry_filter: args.geometry_filter,
    };
    let started = Instant::now();
    let (totals, predictions, report) =
        scw_over_dataset(&samples, manifest.config, &scw_cfg, args.tolerance)?;
    println!("{}", dataset_summary(&manifest, &samples));
    println!(
        "scw totals: pairs = {} singles = {} multiples = {}",
        totals.pairs.len(),
        totals.singles,
        totals.multiples
    );
    println!("TP FP FN precision recall F1");
    println!("{}", report.record_line());
    if let Some(out) = &args.out {
        let mut staged = StagedWrites::new();
        let written = stage_predictions(&mut staged, out, manifest.config, &predictions)?;
        staged.commit()?;
        println!("wrote predictions ({written} bytes) to {}", out.display());
    }
    eprintln!("scw took {:.3}s", started.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let (manifest, samples) = read_dataset(&args.data)?;
    let hidden = args
        .hidden
        .unwrap_or_else(|| trainer::default_hidden_size(manifest.config.num_crystals()));
    print_config(
        "train",
        &[
            ("data", args.data.display().to_string()),
            ("hidden", hidden.to_string()),
            ("hidden-layers", args.hidden_layers.to_string()),
            ("loss", args.loss.name().to_string()),
            ("count-weight", args.count_weight.to_string()),
            ("timing-weight", args.timing_weight.to_string()),
            ("lr", args.lr.to_string()),
            ("batch-size", args.batch_size.to_string()),
            ("max-epochs", args.max_epochs.to_string()),
            ("patience", args.patience.to_string()),
            ("tolerance", args.tolerance.to_string()),
            ("seed", args.seed.to_string()),
            ("geometry", args.geometry.to_string()),
            ("half-width", args.half_width.to_string()),
            ("out-model", args.out_model.display().to_string()),
            ("out-history", args.out_history.display().to_string()),
        ],
    );
    println!("{}", dataset_summary(&manifest, &samples));
    let net_cfg = NetworkConfig {
        hidden_size: hidden,
        hidden_layers: args.hidden_layers,
    };
    let train_cfg = TrainConfig {
        learning_rate: args.lr,
        batch_size: args.batch_size,
        max_epochs: args.max_epochs,
        patience: args.patience,
        loss: args.loss.to_config(args.count_weight, args.timing_weight),
        eval_tolerance: args.tolerance,
        seed: args.seed,
        use_geometry: args.geometry,
        geometry: GeometryConfig {
            half_width: args.half_width,
        },
    };
    let started = Instant::now();
    let outcome = trainer::train(&samples, &net_cfg, &train_cfg)?;
    let elapsed = started.elapsed();
    for row in &outcome.history {
        eprintln!(
            "epoch {}: train_loss {:.6} val_f1 {:.6}",
            row.epoch, row.train_loss, row.val_f1
        );
    }
    let best = outcome
        .history
        .get(outcome.best_epoch.saturating_sub(1))
        .context("training produced an empty history")?;
    println!(
        "trained {} epochs; best epoch {} (val F1 {:.6}, precision {:.6}, recall {:.6})",
        outcome.history.len(),
        outcome.best_epoch,
        best.val_f1,
        best.val_precision,
        best.val_recall
    );

    let mut model_bytes = Vec::new();
    outcome.network.save(&mut model_bytes)?;
    let mut history_bytes = Vec::new();
    trainer::write_history_csv(&outcome.history, &mut history_bytes)?;
    let mut staged = StagedWrites::new();
    staged.stage(&args.out_model, &model_bytes)?;
    staged.stage(&args.out_history, &history_bytes)?;
    staged.commit()?;
    println!(
        "wrote checkpoint ({} bytes) to {}",
        model_bytes.len(),
        args.out_model.display()
    );
    println!("wrote history to {}", args.out_history.display());
    eprintln!("train took {:.3}s", elapsed.as_secs_f64());
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let (manifest, samples) = read_dataset(&args.data)?;
    let crystals = manifest.config.num_crystals() as usize;
    let (net, use_geometry) = load_model(&args.model, crystals)?;
    print_config(
        "predict",
        &[
            ("data", args.data.display().to_string()),
            ("model", args.model.display().to_string()),
            ("geometry (from model)", use_geometry.to_string()),
            ("half-width", args.half_width.to_string()),
            ("out", args.out.display().to_string()),
        ],
    );
    println!("{}", dataset_summary(&manifest, &samples));
    let geometry = GeometryConfig {
        half_width: args.half_width,
    };
    let (predictions, stats) = trainer::predict(&net, &samples, use_geometry, geometry)?;
    let mut staged = StagedWrites::new();
    let written = stage_predictions(&mut staged, &args.out, manifest.config, &predictions)?;
    staged.commit()?;
    let predicted: usize = predictions.iter().map(SpikeTrain::len).sum();
    println!(
        "wrote {} predictions ({} spikes, {written} bytes) to {}",
        predictions.len(),
        predicted,
        args.out.display()
    );
    eprintln!(
        "predict took {:.3}s ({:.1} samples/s)",
        stats.elapsed.as_secs_f64(),
        stats.samples_per_sec
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    print_config(
        "eval",
        &[
            ("pred", args.pred.display().to_string()),
            ("data", args.data.display().to_string()),
            ("tolerance", args.tolerance.to_string()),
        ],
    );
    let (pred_manifest, pred_samples) = read_dataset(&args.pred)?;
    let (data_manifest, data_samples) = read_dataset(&args.data)?;
    ensure!(
        pred_manifest.config == data_manifest.config,
        "prediction and dataset configs differ"
    );
    ensure!(
        pred_samples.len() == data_samples.len(),
        "prediction count {} does not match dataset count {}",
        pred_samples.len(),
        data_samples.len()
    );
    let predictions: Vec<SpikeTrain> =
        pred_samples.iter().map(|s| s.input().clone()).collect();
    let (report, _) = metrics::evaluate_dataset(&predictions, &data_samples, args.tolerance)?;
    println!("TP FP FN precision recall F1");
    println!("{}", report.record_line());
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let (manifest, samples) = read_dataset(&args.data)?;
    ensure!(!samples.is_empty(), "dataset holds no samples");
    let crystals = manifest.config.num_crystals() as usize;
    let (net, use_geometry) = load_model(&args.model, crystals)?;
    print_config(
        "compare",
        &[
            ("data", args.data.display().to_string()),
            ("model", args.model.display().to_string()),
            ("window", args.window.to_string()),
            ("tolerance", args.tolerance.to_string()),
            ("geometry-filter", args.geometry_filter.to_string()),
            ("geometry (from model)", use_geometry.to_string()),
            ("half-width", args.half_width.to_string()),
        ],
    );
    println!("{}", dataset_summary(&manifest, &samples));

    let scw_cfg = ScwConfig {
        window: args.window,
        geometry_filter: args.geometry_filter,
        ..ScwConfig::default()
    };
    let scw_started = Instant::now();
    let (totals, _, scw_report) =
        scw_over_dataset(&samples, manifest.config, &scw_cfg, args.tolerance)?;
    let scw_elapsed = scw_started.elapsed();
    println!(
        "scw totals: pairs = {} singles = {} multiples = {}",
        totals.pairs.len(),
        totals.singles,
        totals.multiples
    );

    let geometry = GeometryConfig {
        half_width: args.half_width,
    };
    let (predictions, stats) = trainer::predict(&net, &samples, use_geometry, geometry)?;
    let (snn_report, _) = metrics::evaluate_dataset(&predictions, &samples, args.tolerance)?;

    // Wall-clock times are single-machine, end to end per method, and not
    // comparable across hardware.
    let row = |method: &str, report: &MatchReport, seconds: f64| {
        format!(
            "{:<8} {:>10} {:>10} {:>10} {:>10.6} {:>10.6} {:>9.3}s",
            method,
            report.true_positives,
            report.false_positives,
            report.false_negatives,
            report.f1,
            report.precision,
            seconds
        )
    };
    println!(
        "{:<8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "method", "TP", "FP", "FN", "F1", "precision", "time"
    );
    println!("{}", row("scw", &scw_report, scw_elapsed.as_secs_f64()));
    println!("{}", row("snn", &snn_report, stats.elapsed.as_secs_f64()));
    Ok(())
}

fn cmd_inspect(args: InspectArgs) -> Result<()> {
    print_config(
        "inspect",
        &[
            ("data", args.data.display().to_string()),
            ("sample", args.sample.to_string()),
            (
                "out",
                args.out
                    .as_ref()
                    .map_or_else(|| "(stdout)".into(), |p| p.display().to_string()),
            ),
        ],
    );
    let (manifest, samples) = read_dataset(&args.data)?;
    println!("{}", dataset_summary(&manifest, &samples));
    let index = usize::try_from(args.sample).ok().filter(|&i| i < samples.len());
    let Some(index) = index else {
        bail!(
            "sample index {} out of range; dataset holds {} samples",
            args.sample,
            samples.len()
        );
    };
    let sample = &samples[index];
    println!(
        "sample {}: input spikes = {} label spikes = {}",
        index,
        sample.input().len(),
        sample.label().len()
    );
    match &args.out {
        Some(path) => {
            let mut bytes = Vec::new();
            io::export_csv(sample, &mut bytes)?;
            let mut staged = StagedWrites::new();
            staged.stage(path, &bytes)?;
            staged.commit()?;
            println!("wrote csv ({} bytes) to {}", bytes.len(), path.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            io::export_csv(sample, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}
