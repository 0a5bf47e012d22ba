//! Command-line entry point: run experiments, analyze traces, plot curves.
//!
//! Exit codes: 0 on success, 2 for configuration or usage problems
//! (including malformed inputs), 3 for I/O failures.

use banditlab::analysis::{detect_significant_shifts, recompute_measures, BudgetRule, SafetyParams};
use banditlab::env::{AbruptChange, Trace};
use banditlab::error::{Error, Result};
use banditlab::harness::{
    checkpoint_rounds, emit_csv, preset_fig1, run_experiment, run_single_rep, AdversarySpec,
    AlgoKind, Constants, ExperimentConfig,
};
use banditlab::plot::{series_from_run_csv, write_svg, Series};
use clap::{Args, Parser, Subcommand};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "banditlab",
    version,
    about = "Benchmark CLI for non-stationary infinite-armed bandits"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a seeded Monte Carlo experiment and write a checkpoint CSV.
    Run(RunArgs),
    /// Inspect a JSON trace: summary stats or significant-shift detection.
    Analyze(AnalyzeArgs),
    /// Render run CSVs as an SVG of mean regret with std bands.
    Plot(PlotArgs),
    /// Run the three-algorithm rotting-adversary comparison preset.
    Fig1(Fig1Args),
}

#[derive(Args)]
struct RunArgs {
    /// Algorithm: blackbox-ucb, blackbox-se, elimination, or ssucb.
    #[arg(long)]
    algo: Option<AlgoKind>,
    /// Reservoir tail exponent.
    #[arg(long)]
    beta: Option<f64>,
    /// Number of rounds per replication.
    #[arg(long)]
    horizon: Option<u64>,
    /// stationary, rotting-1-over-t, or abrupt:<json-file>.
    #[arg(long)]
    adversary: Option<String>,
    /// Number of independent replications.
    #[arg(long)]
    reps: Option<u32>,
    /// Master seed; replication i derives its own streams from (seed, i).
    #[arg(long)]
    seed: Option<u64>,
    /// Restart threshold multiplier (blackbox scheme).
    #[arg(long)]
    c1: Option<f64>,
    /// Elimination threshold multiplier.
    #[arg(long)]
    c2: Option<f64>,
    /// Exponent on the restart threshold's log factor: 1 or 3.
    #[arg(long)]
    log_exp: Option<u8>,
    /// Carry a log factor in the elimination subsample schedule.
    #[arg(long)]
    subsample_log: bool,
    /// Cap subsamples at the remaining horizon.
    #[arg(long)]
    truncate_subsample: bool,
    /// Exploration constant of UCB indices.
    #[arg(long)]
    ucb_exploration: Option<f64>,
    /// JSON config file with the same fields; explicit flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for replications (default: rayon's choice).
    #[arg(long)]
    threads: Option<usize>,
    /// Also write replication 0's full trace as JSON here.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// JSON trace produced by a run with --trace-out.
    #[arg(long)]
    trace: PathBuf,
    /// Detect significant shifts instead of printing a summary.
    #[arg(long)]
    detect_shifts: bool,
    /// Reservoir tail exponent (required with --detect-shifts).
    #[arg(long)]
    beta: Option<f64>,
    /// Multiplier on the interval safety threshold.
    #[arg(long)]
    kappa_inv: Option<f64>,
    /// windowed (arms sampled since the phase start) or global.
    #[arg(long)]
    budget_rule: Option<BudgetRule>,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Run CSV; repeat the flag for multiple series (named by file stem).
    #[arg(long = "in", required = true)]
    inputs: Vec<PathBuf>,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
    /// Base-2 logarithmic axes.
    #[arg(long)]
    loglog: bool,
}

#[derive(Args)]
struct Fig1Args {
    /// Reservoir tail exponent: 0.8, 1.0, or 1.2.
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 100_000)]
    horizon: u64,
    #[arg(long, default_value_t = 20)]
    reps: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for replications (default: rayon's choice).
    #[arg(long)]
    threads: Option<usize>,
    /// Directory for the per-algorithm CSVs and the combined SVG.
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::Plot(a) => cmd_plot(a),
        Cmd::Fig1(a) => cmd_fig1(a),
    }
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Usage(format!("{flag} is required (directly or via --config)")))
}

fn parse_adversary(s: &str) -> Result<AdversarySpec> {
    match s {
        "stationary" => Ok(AdversarySpec::Stationary),
        "rotting-1-over-t" => Ok(AdversarySpec::Rotting { c: 1.0, per_arm: false }),
        other => {
            if let Some(path) = other.strip_prefix("abrupt:") {
                let file = File::open(path)?;
                let changes: Vec<AbruptChange> = serde_json::from_reader(BufReader::new(file))?;
                Ok(AdversarySpec::Abrupt { changes })
            } else {
                Err(Error::Usage(format!(
                    "unknown adversary {other:?}; expected stationary, rotting-1-over-t, or abrupt:<file>"
                )))
            }
        }
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build a {n}-thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => {
            let file = File::open(path)?;
            serde_json::from_reader::<_, ExperimentConfig>(BufReader::new(file))?
        }
        None => ExperimentConfig {
            algo: require(a.algo, "--algo")?,
            beta: require(a.beta, "--beta")?,
            horizon: require(a.horizon, "--horizon")?,
            adversary: parse_adversary(&require(a.adversary.clone(), "--adversary")?)?,
            reps: require(a.reps, "--reps")?,
            master_seed: require(a.seed, "--seed")?,
            constants: Constants::default(),
        },
    };
    // Explicit flags override file values.
    if let Some(v) = a.algo {
        cfg.algo = v;
    }
    if let Some(v) = a.beta {
        cfg.beta = v;
    }
    if let Some(v) = a.horizon {
        cfg.horizon = v;
    }
    if let Some(s) = &a.adversary {
        cfg.adversary = parse_adversary(s)?;
    }
    if let Some(v) = a.reps {
        cfg.reps = v;
    }
    if let Some(v) = a.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = a.c1 {
        cfg.constants.c1 = v;
    }
    if let Some(v) = a.c2 {
        cfg.constants.c2 = v;
    }
    if let Some(v) = a.log_exp {
        cfg.constants.log_exp = v;
    }
    if a.subsample_log {
        cfg.constants.include_log_in_subsample = true;
    }
    if a.truncate_subsample {
        cfg.constants.truncate_subsample = true;
    }
    if let Some(v) = a.ucb_exploration {
        cfg.constants.ucb_exploration = v;
    }
    cfg.validate()?;

    let result = with_threads(a.threads, || run_experiment(&cfg))??;
    let out = File::create(&a.out)?;
    emit_csv(&result, BufWriter::new(out))?;
    println!("wrote {} ({} reps x {} checkpoints)", a.out.display(), cfg.reps, result.checkpoints.len());

    if let Some(trace_path) = &a.trace_out {
        let trace = run_single_rep(&cfg, 0)?;
        let file = File::create(trace_path)?;
        trace.write_json(BufWriter::new(file))?;
        println!("wrote {} (replication 0 trace)", trace_path.display());
    }
    Ok(())
}

fn load_trace(path: &Path) -> Result<Trace> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"round,") || bytes.starts_with(b"rep,") {
        return Err(Error::Usage(format!(
            "{} is a CSV export, which lacks the mean-change history needed for analysis; \
             use the JSON trace written by run --trace-out",
            path.display()
        )));
    }
    Trace::read_json(bytes.as_slice())
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let trace = load_trace(&a.trace)?;
    let out = File::create(&a.out)?;
    let mut w = BufWriter::new(out);
    if a.detect_shifts {
        let beta = require(a.beta, "--beta")?;
        let kappa_inv = require(a.kappa_inv, "--kappa-inv")?;
        let params =
            SafetyParams::new(beta, kappa_inv)?.with_rule(a.budget_rule.unwrap_or_default());
        let report = detect_significant_shifts(&trace, &params)?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        writeln!(w)?;
        println!(
            "wrote {} ({} shifts over {} rounds)",
            a.out.display(),
            report.taus.len(),
            trace.horizon
        );
    } else {
        let measures = recompute_measures(&trace);
        let episodes = trace.rows.iter().map(|r| r.episode).max().unwrap_or(1);
        let summary = serde_json::json!({
            "horizon": trace.horizon,
            "rounds_recorded": trace.rounds(),
            "arms_sampled": trace.arms.len(),
            "episodes": episodes,
            "cumulative_regret": trace.cumulative_regret(),
            "measures": measures,
        });
        serde_json::to_writer_pretty(&mut w, &summary)?;
        writeln!(w)?;
        println!("wrote {}", a.out.display());
    }
    Ok(())
}

fn series_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_plot(a: PlotArgs) -> Result<()> {
    let mut series: Vec<Series> = Vec::with_capacity(a.inputs.len());
    for path in &a.inputs {
        let file = File::open(path)?;
        series.push(series_from_run_csv(&series_name(path), BufReader::new(file))?);
    }
    let out = File::create(&a.out)?;
    write_svg(&series, a.loglog, BufWriter::new(out))?;
    println!("wrote {} ({} series)", a.out.display(), series.len());
    Ok(())
}

fn cmd_fig1(a: Fig1Args) -> Result<()> {
    if ![0.8, 1.0, 1.2].contains(&a.beta) {
        return Err(Error::Usage(format!(
            "fig1 is defined for beta in {{0.8, 1.0, 1.2}}, got {}",
            a.beta
        )));
    }
    fs::create_dir_all(&a.out_dir)?;
    let configs = preset_fig1(a.beta, a.horizon, a.reps, a.seed);
    let mut series = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let result = with_threads(a.threads, || run_experiment(cfg))??;
        let csv_path = a.out_dir.join(format!("{}.csv", cfg.algo));
        emit_csv(&result, BufWriter::new(File::create(&csv_path)?))?;
        let file = File::open(&csv_path)?;
        series.push(series_from_run_csv(cfg.algo.as_str(), BufReader::new(file))?);
        let last = result.stats.last().expect("at least one checkpoint");
        println!(
            "wrote {} (final mean regret {:.1} over {} checkpoints)",
            csv_path.display(),
            last.mean_regret,
            checkpoint_rounds(a.horizon).len()
        );
    }
    let svg_path = a.out_dir.join("fig1.svg");
    write_svg(&series, false, BufWriter::new(File::create(&svg_path)?))?;
    println!("wrote {}", svg_path.display());
    Ok(())
}
