use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uwmmse_cli::bench::{
    compare_methods, robustness_cross_distribution, size_sweep, summarize, write_results_csv,
    write_summary_csv, Method, MethodSummary, SweepSpec,
};
use uwmmse_cli::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError};
use uwmmse_cli::dataset::{read_dataset, write_dataset, DatasetError};
use uwmmse_cli::runcfg::{ConfigError, FileConfig};
use uwmmse_core::channel::{generate, ChannelFamily, ChannelSpec};
use uwmmse_core::model::ModelParams;
use uwmmse_core::train::{train, GradientMethod, HistoryEntry, TrainConfig, TrainState};
use uwmmse_core::wmmse::{InterferenceMode, ProblemConfig};
use uwmmse_core::{CsiTensor, Error as CoreError};

const DEFAULT_SIGMA: f64 = 2.6e-5;
const DEFAULT_P_MAX: f64 = 1.0;
const DEFAULT_WMMSE_ITERS: usize = 100;
const DEFAULT_TRUNC_ITERS: usize = 4;
const DEFAULT_RICIAN_K_DB: f64 = 20.0;

/// Power allocation for multi-antenna interference channels: classical
/// WMMSE, its truncated variant, and a trained unfolded network.
#[derive(Parser)]
#[command(name = "uwmmse", version)]
struct Cli {
    /// TOML run configuration; explicit flags override its values.
    #[arg(long, global = true, env = "UWMMSE_CONFIG")]
    config: Option<PathBuf>,
    /// Worker threads for evaluation. Timed benchmark passes stay
    /// sequential regardless.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw channel realizations and write them as a dataset file.
    Generate(GenerateArgs),
    /// Train the unfolded model and write the best checkpoint.
    Train(TrainArgs),
    /// Compare the three methods on an existing dataset.
    Eval(EvalArgs),
    /// Generate a test set and time the three methods on it.
    Bench(BenchArgs),
    /// Cross-distribution and size-generalization sweeps from a config file.
    Robustness(RobustnessArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// rayleigh, rician or geometric.
    #[arg(long)]
    family: Option<String>,
    /// Transmitter-receiver pairs M.
    #[arg(long)]
    m: Option<usize>,
    /// Transmit antennas per user T.
    #[arg(long)]
    t: Option<usize>,
    /// Receive antennas per user R.
    #[arg(long)]
    r: Option<usize>,
    /// Number of samples.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Rician K-factor in dB; ignored by the other families.
    #[arg(long)]
    rician_k_db: Option<f64>,
    /// Output dataset path.
    #[arg(long, env = "UWMMSE_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training dataset.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Held-out validation dataset.
    #[arg(long)]
    val: Option<PathBuf>,
    /// Output checkpoint path.
    #[arg(long, env = "UWMMSE_CHECKPOINT")]
    checkpoint: Option<PathBuf>,
    /// Optional per-evaluation history CSV.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Data streams per user d.
    #[arg(long)]
    streams: Option<usize>,
    /// Noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    /// GCN hidden width.
    #[arg(long)]
    hidden: Option<usize>,
    /// Unfolded layer count K.
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    a_max: Option<f64>,
    #[arg(long)]
    b_max: Option<f64>,
    /// exclude_self or include_self.
    #[arg(long)]
    interference_mode: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_iters: Option<u64>,
    /// Validation evaluations without improvement before stopping.
    #[arg(long)]
    patience: Option<usize>,
    /// Iterations between validation evaluations.
    #[arg(long)]
    eval_every: Option<u64>,
    /// analytic or fd.
    #[arg(long)]
    gradient_method: Option<String>,
    /// Relative step for central finite differences.
    #[arg(long)]
    fd_step: Option<f64>,
    /// Seed for initialization and batch sampling.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, env = "UWMMSE_CHECKPOINT")]
    checkpoint: Option<PathBuf>,
    /// Test dataset.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Family label recorded in the results CSV.
    #[arg(long)]
    family: Option<String>,
    /// Per-record results CSV path.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Per-method summary CSV path.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    wmmse_iters: Option<usize>,
    #[arg(long)]
    trunc_iters: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    /// Trained checkpoint; without one the unfolded model runs with the
    /// classical gains a=1, b=0.
    #[arg(long, env = "UWMMSE_CHECKPOINT")]
    checkpoint: Option<PathBuf>,
    /// rayleigh, rician or geometric.
    #[arg(long)]
    family: Option<String>,
    /// Transmitter-receiver pairs M.
    #[arg(long)]
    m: Option<usize>,
    /// Transmit antennas per user T (ignored when a checkpoint sets it).
    #[arg(long)]
    t: Option<usize>,
    /// Receive antennas per user R (ignored when a checkpoint sets it).
    #[arg(long)]
    r: Option<usize>,
    /// Data streams per user d (ignored when a checkpoint sets it).
    #[arg(long)]
    streams: Option<usize>,
    /// Number of samples.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Rician K-factor in dB; ignored by the other families.
    #[arg(long)]
    rician_k_db: Option<f64>,
    /// exclude_self or include_self (ignored when a checkpoint sets it).
    #[arg(long)]
    interference_mode: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    wmmse_iters: Option<usize>,
    #[arg(long)]
    trunc_iters: Option<usize>,
    /// Per-record results CSV path.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Per-method summary CSV path.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct RobustnessArgs {
    /// Directory the grouped CSVs are written into.
    #[arg(long, env = "UWMMSE_OUTDIR")]
    outdir: Option<PathBuf>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    wmmse_iters: Option<usize>,
    #[arg(long)]
    trunc_iters: Option<usize>,
}

enum AppError {
    Usage(String),
    Runtime(String),
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        AppError::Runtime(e.to_string())
    }
}

impl From<DatasetError> for AppError {
    fn from(e: DatasetError) -> Self {
        AppError::Runtime(e.to_string())
    }
}

impl From<CheckpointError> for AppError {
    fn from(e: CheckpointError) -> Self {
        AppError::Runtime(e.to_string())
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Usage(e.to_string())
    }
}

impl From<io::Error> for AppError {
    fn from(e: io::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            let first = rendered
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: usage: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: runtime: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let threads = cli.threads.or(file.threads).unwrap_or(1);
    if threads > 1 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().ok();
    }
    let parallel = threads > 1;
    match cli.cmd {
        Cmd::Generate(a) => cmd_generate(a, &file),
        Cmd::Train(a) => cmd_train(a, &file),
        Cmd::Eval(a) => cmd_eval(a, &file, parallel),
        Cmd::Bench(a) => cmd_bench(a, &file),
        Cmd::Robustness(a) => cmd_robustness(a, &file, parallel),
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, AppError> {
    Err(AppError::Usage(msg.into()))
}

fn required(path: Option<PathBuf>, flag: &str) -> Result<PathBuf, AppError> {
    match path {
        Some(p) => Ok(p),
        None => usage(format!("{flag} is required")),
    }
}

fn parse_family(s: &str) -> Result<ChannelFamily, AppError> {
    s.parse().map_err(|e: CoreError| AppError::Usage(e.to_string()))
}

fn parse_mode(s: &str) -> Result<InterferenceMode, AppError> {
    s.parse().map_err(|e: CoreError| AppError::Usage(e.to_string()))
}

fn parse_gradient(s: &str) -> Result<GradientMethod, AppError> {
    s.parse().map_err(|e: CoreError| AppError::Usage(e.to_string()))
}

fn cmd_generate(a: GenerateArgs, file: &FileConfig) -> Result<(), AppError> {
    let family_name = a.family.or_else(|| file.family.clone()).unwrap_or_else(|| "rayleigh".into());
    let spec = ChannelSpec {
        family: parse_family(&family_name)?,
        users: a.m.or(file.users).unwrap_or(10),
        tx: a.t.or(file.tx).unwrap_or(3),
        rx: a.r.or(file.rx).unwrap_or(3),
        rician_k_db: a.rician_k_db.or(file.rician_k_db).unwrap_or(DEFAULT_RICIAN_K_DB),
        seed: a.seed.or(file.seed).unwrap_or(0),
    };
    let n = a.n.or(file.n).unwrap_or(64);
    let out = required(a.out.or_else(|| file.out.clone()), "--out")?;
    let set = generate(&spec, n)?;
    write_dataset(&out, &set)?;
    println!(
        "wrote {}: family={} M={} T={} R={} n={} seed={}",
        out.display(),
        spec.family.name(),
        spec.users,
        spec.tx,
        spec.rx,
        n,
        spec.seed
    );
    Ok(())
}

fn write_history_csv(path: &Path, history: &[HistoryEntry]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "iteration,train_loss,val_sum_rate")?;
    for h in history {
        writeln!(w, "{},{},{}", h.iteration, h.train_loss, h.val_sum_rate)?;
    }
    w.flush()
}

fn save_train_outputs(
    state: &TrainState,
    best: bool,
    dims: (usize, usize, usize),
    mode: InterferenceMode,
    checkpoint_path: &Path,
    history_path: Option<&Path>,
) -> Result<(), AppError> {
    let (rx, tx, streams) = dims;
    let params = if best { &state.best_params } else { &state.params };
    let ckpt = Checkpoint::from_params(
        params,
        rx,
        tx,
        streams,
        mode,
        Some((&state.adam, state.iteration)),
    );
    save_checkpoint(checkpoint_path, &ckpt)?;
    if let Some(p) = history_path {
        write_history_csv(p, &state.history)?;
    }
    Ok(())
}

fn cmd_train(a: TrainArgs, file: &FileConfig) -> Result<(), AppError> {
    let data_path = required(a.data, "--data")?;
    let val_path = required(a.val, "--val")?;
    let checkpoint_path = required(a.checkpoint, "--checkpoint")?;

    let train_set = read_dataset(&data_path)?;
    let val_set = read_dataset(&val_path)?;
    let (rx, tx) = (train_set[0].rx(), train_set[0].tx());
    if val_set[0].rx() != rx || val_set[0].tx() != tx {
        return Err(AppError::Runtime(format!(
            "training data has R={} T={}, validation data has R={} T={}",
            rx,
            tx,
            val_set[0].rx(),
            val_set[0].tx()
        )));
    }

    let streams = a.streams.or(file.streams).unwrap_or(1);
    let mode_name = a
        .interference_mode
        .or_else(|| file.interference_mode.clone())
        .unwrap_or_else(|| "exclude_self".into());
    let mode = parse_mode(&mode_name)?;
    let pcfg = ProblemConfig {
        streams,
        sigma: a.sigma.or(file.sigma).unwrap_or(DEFAULT_SIGMA),
        p_max: a.p_max.or(file.p_max).unwrap_or(DEFAULT_P_MAX),
        interference_mode: mode,
    };
    let gradient_name = a
        .gradient_method
        .or_else(|| file.gradient_method.clone())
        .unwrap_or_else(|| "analytic".into());
    let tcfg = TrainConfig {
        batch_size: a.batch_size.or(file.batch_size).unwrap_or(64),
        learning_rate: a.learning_rate.or(file.learning_rate).unwrap_or(1e-2),
        max_iters: a.max_iters.or(file.max_iters).unwrap_or(15000),
        patience: a.patience.or(file.patience).unwrap_or(10),
        eval_every: a.eval_every.or(file.eval_every).unwrap_or(100),
        seed: a.seed.or(file.seed).unwrap_or(0),
        gradient_method: parse_gradient(&gradient_name)?,
        fd_step: a.fd_step.or(file.fd_step).unwrap_or(1e-5),
    };
    let hidden = a.hidden.or(file.hidden).unwrap_or(5);
    let layers = a.layers.or(file.layers).unwrap_or(4);
    let mut params = ModelParams::init(tcfg.seed, rx, tx, hidden, layers);
    if let Some(v) = a.a_max.or(file.a_max) {
        params.a_max = v;
    }
    if let Some(v) = a.b_max.or(file.b_max) {
        params.b_max = v;
    }

    println!(
        "training on {} samples (M={} T={} R={}), validating on {}",
        train_set.len(),
        train_set[0].users(),
        tx,
        rx,
        val_set.len()
    );
    println!(
        "hyperparameters: layers={} hidden={} d={} batch_size={} learning_rate={} \
         max_iters={} sigma={} p_max={} interference_mode={} gradient_method={} \
         a_max={} b_max={} patience={} eval_every={} seed={}",
        layers,
        hidden,
        streams,
        tcfg.batch_size,
        tcfg.learning_rate,
        tcfg.max_iters,
        pcfg.sigma,
        pcfg.p_max,
        mode,
        tcfg.gradient_method,
        params.a_max,
        params.b_max,
        tcfg.patience,
        tcfg.eval_every,
        tcfg.seed
    );

    let dims = (rx, tx, streams);
    match train(&train_set, &val_set, params, &tcfg, &pcfg) {
        Ok(state) => {
            save_train_outputs(&state, true, dims, mode, &checkpoint_path, a.history.as_deref())?;
            if state.history.is_empty() {
                println!(
                    "stopped after {} iterations with no validation pass; wrote {}",
                    state.iteration,
                    checkpoint_path.display()
                );
            } else {
                println!(
                    "stopped after {} iterations, best validation sum-rate {:.6} bits; wrote {}",
                    state.iteration,
                    state.best_val_sum_rate,
                    checkpoint_path.display()
                );
            }
            Ok(())
        }
        Err(CoreError::Diverged(state)) => {
            save_train_outputs(&state, false, dims, mode, &checkpoint_path, a.history.as_deref())?;
            Err(AppError::Runtime(format!(
                "training diverged at iteration {}; last finite checkpoint written to {}",
                state.iteration,
                checkpoint_path.display()
            )))
        }
        Err(e) => Err(e.into()),
    }
}

fn print_summaries(summaries: &[MethodSummary]) {
    for s in summaries {
        println!(
            "{}: mean {:.6} bits (std {:.6}, median {:.6}), mean time {:.3} ms (median {:.3} ms), n={}",
            s.method,
            s.mean,
            s.std,
            s.median,
            1e3 * s.time_mean_s,
            1e3 * s.time_median_s,
            s.n
        );
    }
    let find = |m: Method| summaries.iter().find(|s| s.method == m);
    if let (Some(w), Some(u)) = (find(Method::Wmmse), find(Method::Uwmmse)) {
        if u.time_mean_s > 0.0 {
            println!("speedup: {:.2}x (mean wmmse time / mean uwmmse time)", w.time_mean_s / u.time_mean_s);
        }
    }
}

fn write_run_csvs(
    records: &[uwmmse_cli::RunRecord],
    summaries: &[MethodSummary],
    results: Option<&Path>,
    summary: Option<&Path>,
) -> Result<(), AppError> {
    if let Some(p) = results {
        write_results_csv(p, records)?;
    }
    if let Some(p) = summary {
        write_summary_csv(p, summaries)?;
    }
    Ok(())
}

fn cmd_eval(a: EvalArgs, file: &FileConfig, parallel: bool) -> Result<(), AppError> {
    let checkpoint_path = required(a.checkpoint, "--checkpoint")?;
    let data_path = required(a.data, "--data")?;
    let ckpt = load_checkpoint(&checkpoint_path)?;
    let params = ckpt.to_params()?;
    let set = read_dataset(&data_path)?;
    if set[0].rx() != ckpt.rx || set[0].tx() != ckpt.tx {
        return Err(AppError::Runtime(format!(
            "checkpoint built for R={} T={}, dataset has R={} T={}",
            ckpt.rx,
            ckpt.tx,
            set[0].rx(),
            set[0].tx()
        )));
    }
    let cfg = ProblemConfig {
        streams: ckpt.streams,
        sigma: a.sigma.or(file.sigma).unwrap_or(DEFAULT_SIGMA),
        p_max: a.p_max.or(file.p_max).unwrap_or(DEFAULT_P_MAX),
        interference_mode: ckpt.interference_mode().map_err(|e| AppError::Runtime(e.to_string()))?,
    };
    let family =
        a.family.or_else(|| file.family.clone()).unwrap_or_else(|| "unspecified".into());
    let records = compare_methods(
        &set,
        &family,
        &params,
        &cfg,
        a.wmmse_iters.or(file.wmmse_iters).unwrap_or(DEFAULT_WMMSE_ITERS),
        a.trunc_iters.or(file.trunc_iters).unwrap_or(DEFAULT_TRUNC_ITERS),
        parallel,
    )?;
    let summaries = summarize(&records);
    print_summaries(&summaries);
    write_run_csvs(&records, &summaries, a.results.as_deref(), a.summary.as_deref())
}

fn cmd_bench(a: BenchArgs, file: &FileConfig) -> Result<(), AppError> {
    let loaded = match &a.checkpoint {
        Some(p) => Some(load_checkpoint(p)?),
        None => None,
    };
    let (rx, tx) = match &loaded {
        Some(c) => (c.rx, c.tx),
        None => (a.r.or(file.rx).unwrap_or(3), a.t.or(file.tx).unwrap_or(5)),
    };
    let family_name = a.family.or_else(|| file.family.clone()).unwrap_or_else(|| "rayleigh".into());
    let spec = ChannelSpec {
        family: parse_family(&family_name)?,
        users: a.m.or(file.users).unwrap_or(20),
        tx,
        rx,
        rician_k_db: a.rician_k_db.or(file.rician_k_db).unwrap_or(DEFAULT_RICIAN_K_DB),
        seed: a.seed.or(file.seed).unwrap_or(0),
    };
    let (params, streams, mode) = match loaded {
        Some(c) => {
            let params = c.to_params()?;
            let mode = c.interference_mode().map_err(|e| AppError::Runtime(e.to_string()))?;
            (params, c.streams, mode)
        }
        None => {
            let mut params =
                ModelParams::init(spec.seed, rx, tx, file.hidden.unwrap_or(5), file.layers.unwrap_or(4));
            params.pin_classical_gains();
            let mode_name = a
                .interference_mode
                .or_else(|| file.interference_mode.clone())
                .unwrap_or_else(|| "include_self".into());
            let streams = a.streams.or(file.streams).unwrap_or_else(|| 2.min(rx).min(tx));
            (params, streams, parse_mode(&mode_name)?)
        }
    };
    let cfg = ProblemConfig {
        streams,
        sigma: a.sigma.or(file.sigma).unwrap_or(DEFAULT_SIGMA),
        p_max: a.p_max.or(file.p_max).unwrap_or(DEFAULT_P_MAX),
        interference_mode: mode,
    };
    let n = a.n.or(file.n).unwrap_or(64);
    let set = generate(&spec, n)?;
    println!(
        "benchmark: family={} M={} T={} R={} d={} n={} seed={} (sequential timing)",
        spec.family.name(),
        spec.users,
        spec.tx,
        spec.rx,
        cfg.streams,
        n,
        spec.seed
    );
    let records = compare_methods(
        &set,
        spec.family.name(),
        &params,
        &cfg,
        a.wmmse_iters.or(file.wmmse_iters).unwrap_or(DEFAULT_WMMSE_ITERS),
        a.trunc_iters.or(file.trunc_iters).unwrap_or(DEFAULT_TRUNC_ITERS),
        false,
    )?;
    let summaries = summarize(&records);
    print_summaries(&summaries);
    write_run_csvs(&records, &summaries, a.results.as_deref(), a.summary.as_deref())
}

struct LoadedModel {
    family: ChannelFamily,
    params: ModelParams,
    ckpt: Checkpoint,
}

fn load_model(family_name: &str, path: &Path) -> Result<LoadedModel, AppError> {
    let family = parse_family(family_name)?;
    let ckpt = load_checkpoint(path)?;
    let params = ckpt.to_params()?;
    Ok(LoadedModel { family, params, ckpt })
}

fn cmd_robustness(a: RobustnessArgs, file: &FileConfig, parallel: bool) -> Result<(), AppError> {
    if file.cross.is_none() && file.size.is_none() {
        return usage("robustness needs --config with a [cross] and/or [size] section");
    }
    let outdir = a.outdir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&outdir)?;
    let sigma = a.sigma.or(file.sigma).unwrap_or(DEFAULT_SIGMA);
    let p_max = a.p_max.or(file.p_max).unwrap_or(DEFAULT_P_MAX);
    let wmmse_iters = a.wmmse_iters.or(file.wmmse_iters).unwrap_or(DEFAULT_WMMSE_ITERS);
    let trunc_iters = a.trunc_iters.or(file.trunc_iters).unwrap_or(DEFAULT_TRUNC_ITERS);

    if let Some(cross) = &file.cross {
        let mut models = BTreeMap::new();
        let mut reference: Option<(ChannelFamily, Checkpoint)> = None;
        for (name, path) in &cross.checkpoints {
            let m = load_model(name, path)?;
            if let Some((ref_family, ref_ckpt)) = &reference {
                let same = m.ckpt.rx == ref_ckpt.rx
                    && m.ckpt.tx == ref_ckpt.tx
                    && m.ckpt.streams == ref_ckpt.streams
                    && m.ckpt.interference_mode == ref_ckpt.interference_mode;
                if !same {
                    return Err(AppError::Runtime(format!(
                        "checkpoint for {} built for R={} T={} d={} mode={}, checkpoint for {} built for R={} T={} d={} mode={}",
                        ref_family.name(),
                        ref_ckpt.rx,
                        ref_ckpt.tx,
                        ref_ckpt.streams,
                        ref_ckpt.interference_mode,
                        m.family.name(),
                        m.ckpt.rx,
                        m.ckpt.tx,
                        m.ckpt.streams,
                        m.ckpt.interference_mode
                    )));
                }
            } else {
                reference = Some((m.family, m.ckpt.clone()));
            }
            models.insert(m.family, m.params);
        }
        let (_, ref_ckpt) =
            reference.as_ref().expect("deny_unknown_fields guarantees a checkpoints table");
        let mut test_sets: BTreeMap<ChannelFamily, Vec<CsiTensor>> = BTreeMap::new();
        for (name, path) in &cross.test {
            let family = parse_family(name)?;
            let set = read_dataset(path)?;
            if set[0].rx() != ref_ckpt.rx || set[0].tx() != ref_ckpt.tx {
                return Err(AppError::Runtime(format!(
                    "checkpoints built for R={} T={}, {} test data has R={} T={}",
                    ref_ckpt.rx,
                    ref_ckpt.tx,
                    family.name(),
                    set[0].rx(),
                    set[0].tx()
                )));
            }
            test_sets.insert(family, set);
        }
        let cfg = ProblemConfig {
            streams: ref_ckpt.streams,
            sigma,
            p_max,
            interference_mode: ref_ckpt
                .interference_mode()
                .map_err(|e| AppError::Runtime(e.to_string()))?,
        };
        let groups = robustness_cross_distribution(
            &models,
            &test_sets,
            &cfg,
            wmmse_iters,
            trunc_iters,
            parallel,
        )?;
        for g in &groups {
            let stem = format!("cross_{}_on_{}", g.trained_on.name(), g.tested_on.name());
            let summaries = summarize(&g.records);
            write_results_csv(&outdir.join(format!("{stem}.csv")), &g.records)?;
            write_summary_csv(&outdir.join(format!("{stem}_summary.csv")), &summaries)?;
            let mean = |m: Method| {
                summaries.iter().find(|s| s.method == m).map(|s| s.mean).unwrap_or(f64::NAN)
            };
            println!(
                "cross {} on {}: uwmmse mean {:.6} bits, wmmse mean {:.6} bits",
                g.trained_on.name(),
                g.tested_on.name(),
                mean(Method::Uwmmse),
                mean(Method::Wmmse)
            );
        }
    }

    if let Some(size) = &file.size {
        let model = load_model(&size.train_family, &size.checkpoint)?;
        let spec = SweepSpec {
            sizes: size.sizes.clone(),
            train_sizes: size.train_sizes.clone(),
            train_family: model.family,
            test_family: parse_family(&size.test_family)?,
            tx: size.tx.unwrap_or(model.ckpt.tx),
            rx: size.rx.unwrap_or(model.ckpt.rx),
            rician_k_db: size.rician_k_db.unwrap_or(DEFAULT_RICIAN_K_DB),
            samples_per_size: size.samples_per_size.unwrap_or(16),
            seed: size.seed.or(file.seed).unwrap_or(0),
        };
        if spec.tx != model.ckpt.tx || spec.rx != model.ckpt.rx {
            return Err(AppError::Runtime(format!(
                "checkpoint built for R={} T={}, size sweep asks for R={} T={}",
                model.ckpt.rx, model.ckpt.tx, spec.rx, spec.tx
            )));
        }
        let cfg = ProblemConfig {
            streams: model.ckpt.streams,
            sigma,
            p_max,
            interference_mode: model
                .ckpt
                .interference_mode()
                .map_err(|e| AppError::Runtime(e.to_string()))?,
        };
        let mut models = BTreeMap::new();
        models.insert(model.family, model.params);
        let groups = size_sweep(&models, &spec, &cfg, wmmse_iters, trunc_iters, parallel)?;
        for g in &groups {
            let stem = format!("size_{}_M{}", spec.test_family.name(), g.users);
            let summaries = summarize(&g.records);
            write_results_csv(&outdir.join(format!("{stem}.csv")), &g.records)?;
            write_summary_csv(&outdir.join(format!("{stem}_summary.csv")), &summaries)?;
            let mean = |m: Method| {
                summaries.iter().find(|s| s.method == m).map(|s| s.mean).unwrap_or(f64::NAN)
            };
            let w = mean(Method::Wmmse);
            let u = mean(Method::Uwmmse);
            println!(
                "size M={}: uwmmse mean {:.6} bits, wmmse mean {:.6} bits, ratio {:.3}",
                g.users,
                u,
                w,
                u / w
            );
        }
    }
    Ok(())
}
