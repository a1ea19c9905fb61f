//! `pacnull`: modulation index with an analytic white-noise null.
//!
//! Exit codes: 0 on success, 1 on usage or I/O errors, 2 when `--strict`
//! is given and the coupling is not significant.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use pacnull::io::{read_channels_path, write_column, write_qq, write_sweep};
use pacnull::mcval::{ks_distance, mc_null, qq_table};
use pacnull::mi::{mi_pipeline, mi_pipeline_two};
use pacnull::nullmodel::{assess_with, NullModelParams};
use pacnull::scenarios::{simulate, sweep_with, ScenarioConfig, ScenarioKind};
use pacnull::sigproc::{BandSpec, TimeSeries};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Core(#[from] pacnull::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

#[derive(Parser)]
#[command(name = "pacnull", version, about = "Phase-amplitude coupling with an analytic white-noise null")]
struct Cli {
    /// Directory for outputs whose path is not given explicitly.
    #[arg(long, global = true, env = "PACNULL_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "command")]
enum Command {
    /// MI of a recorded signal with its p-value and critical value.
    Mi(MiArgs),
    /// Analytic null parameters, critical value and optional p-value.
    Null(NullArgs),
    /// Write a synthetic coupling signal as CSV.
    Simulate(SimulateArgs),
    /// Compare a Monte Carlo null sample with the analytic beta.
    Validate(ValidateArgs),
    /// MI against coupling strength for a scenario.
    Sweep(SweepArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

fn parse_band(s: &str) -> std::result::Result<BandSpec, String> {
    let parts: Vec<&str> = s.split([',', ':']).map(str::trim).collect();
    match parts.as_slice() {
        [lo, hi] => {
            let lo = lo.parse::<f64>().map_err(|e| format!("bad lower edge: {e}"))?;
            let hi = hi.parse::<f64>().map_err(|e| format!("bad upper edge: {e}"))?;
            Ok(BandSpec::new(lo, hi))
        }
        _ => Err(format!("expected LO,HI but got '{s}'")),
    }
}

/// Seeds given as "1,2,5" or as a half-open range "0..20".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
struct Seeds(Vec<u64>);

impl std::str::FromStr for Seeds {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let num = |p: &str| p.trim().parse::<u64>().map_err(|e| format!("'{p}': {e}"));
        if let Some((a, b)) = s.split_once("..") {
            return Ok(Seeds((num(a)?..num(b)?).collect()));
        }
        s.split(',').filter(|p| !p.trim().is_empty()).map(num).collect::<std::result::Result<_, _>>().map(Seeds)
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct MiArgs {
    /// CSV with one column (phase and amplitude from the same signal) or
    /// two (phase from the first, amplitude from the second).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 300.0)]
    fs: f64,
    /// Phase band as LO,HI in Hz.
    #[arg(long, value_parser = parse_band, default_value = "0.1,5")]
    low: BandSpec,
    /// Amplitude band as LO,HI in Hz.
    #[arg(long, value_parser = parse_band, default_value = "10,75")]
    high: BandSpec,
    #[arg(long, default_value_t = 18)]
    bins: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Exit with code 2 when the coupling is not significant.
    #[arg(long)]
    #[serde(default)]
    strict: bool,
    /// Also write the report (and a manifest) to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct NullArgs {
    /// Sample length.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 18)]
    bins: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Observed MI to turn into a p-value.
    #[arg(long)]
    mi: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SimulateArgs {
    /// am, spikes or hfo.
    #[arg(long)]
    kind: ScenarioKind,
    #[arg(long, default_value_t = 1.0)]
    strength: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300.0)]
    fs: f64,
    #[arg(long, default_value_t = 2.0)]
    duration: f64,
    /// Jitter event times by up to ±1/6 s.
    #[arg(long)]
    #[serde(default)]
    jitter: bool,
    /// Output CSV (defaults to <kind>_<strength>_<seed>.csv in the output directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct ValidateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 18)]
    bins: usize,
    #[arg(long, default_value_t = 10_000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the Q-Q table, sample and report (defaults to the output directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct SweepArgs {
    #[arg(long)]
    kind: ScenarioKind,
    /// Comma-separated coupling strengths.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1")]
    strengths: Vec<f64>,
    /// Comma-separated bin counts.
    #[arg(long = "bins", value_delimiter = ',', default_value = "9,18,36,60")]
    bins_list: Vec<usize>,
    /// Comma-separated seeds or a range such as 0..20.
    #[arg(long, default_value = "0..20")]
    seeds: Seeds,
    #[arg(long, default_value_t = 300.0)]
    fs: f64,
    #[arg(long, default_value_t = 2.0)]
    duration: f64,
    #[arg(long, value_parser = parse_band)]
    low: Option<BandSpec>,
    #[arg(long, value_parser = parse_band)]
    high: Option<BandSpec>,
    /// Output CSV (defaults to sweep_<kind>.csv in the output directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
struct ReplayArgs {
    manifest: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunManifest {
    command: String,
    config: serde_json::Value,
    seed: Option<u64>,
    tool_version: String,
    outputs: Vec<PathBuf>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).map_err(io_err(format!("cannot create {}", path.display())))?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f).and_then(|_| f.flush()).map_err(io_err(format!("cannot write {}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).map_err(io_err(format!("cannot create {}", path.display())))?,
    ))
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn write_manifest(path: &Path, cmd: &Command, seed: Option<u64>, outputs: Vec<PathBuf>) -> Result<()> {
    let manifest = RunManifest {
        command: command_name(cmd).to_string(),
        config: serde_json::to_value(cmd)?,
        seed,
        tool_version: VERSION.to_string(),
        outputs,
    };
    write_json(path, &manifest)
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Mi(_) => "mi",
        Command::Null(_) => "null",
        Command::Simulate(_) => "simulate",
        Command::Validate(_) => "validate",
        Command::Sweep(_) => "sweep",
        Command::Replay(_) => "replay",
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[derive(Serialize)]
struct MiReport {
    mi: f64,
    entropy: f64,
    p_value: f64,
    critical_value: f64,
    significant: bool,
    alpha: f64,
    n: usize,
    bins: usize,
    fs: f64,
    channels: usize,
    low_band: BandSpec,
    high_band: BandSpec,
}

/// Returns whether the MI was significant.
fn run_mi(cmd: &Command, a: &MiArgs) -> Result<bool> {
    let cols = read_channels_path(&a.input).map_err(|e| match e {
        pacnull::Error::Io(source) => CliError::Io {
            context: format!("cannot read {}", a.input.display()),
            source,
        },
        other => CliError::Usage(format!("{}: {other}", a.input.display())),
    })?;
    let n = cols[0].len();
    let value = match cols.as_slice() {
        [x] => mi_pipeline(&TimeSeries::new(x.clone(), a.fs)?, a.low, a.high, a.bins)?,
        [x, y] => mi_pipeline_two(
            &TimeSeries::new(x.clone(), a.fs)?,
            &TimeSeries::new(y.clone(), a.fs)?,
            a.low,
            a.high,
            a.bins,
        )?,
        _ => unreachable!("reader yields one or two columns"),
    };
    let params = NullModelParams::new(n, a.bins)?;
    let verdict = assess_with(&params, value.mi, a.alpha)?;
    let report = MiReport {
        mi: value.mi,
        entropy: value.entropy_nats,
        p_value: verdict.p_value,
        critical_value: verdict.critical_value,
        significant: verdict.significant,
        alpha: a.alpha,
        n,
        bins: a.bins,
        fs: a.fs,
        channels: cols.len(),
        low_band: a.low,
        high_band: a.high,
    };
    print_json(&report)?;
    if let Some(out) = &a.out {
        write_json(out, &report)?;
        write_manifest(&manifest_path(out), cmd, None, vec![out.clone()])?;
    }
    Ok(report.significant)
}

#[derive(Serialize)]
struct NullReport {
    params: NullModelParams,
    alpha: f64,
    critical_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_value: Option<f64>,
}

fn run_null(a: &NullArgs) -> Result<()> {
    let params = NullModelParams::new(a.n, a.bins)?;
    let critical_value = params.critical_value(a.alpha)?;
    let p_value = a.mi.map(|mi| params.p_value(mi)).transpose()?;
    print_json(&NullReport {
        params,
        alpha: a.alpha,
        critical_value,
        mi: a.mi,
        p_value,
    })
}

fn run_simulate(cmd: &Command, a: &SimulateArgs, out_dir: &Path) -> Result<()> {
    let cfg = ScenarioConfig {
        fs: a.fs,
        duration: a.duration,
        jitter: a.jitter,
        ..ScenarioConfig::new(a.kind, a.strength, a.seed)
    };
    let x = simulate(&cfg)?;
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| out_dir.join(format!("{}_{}_{}.csv", a.kind, a.strength, a.seed)));
    let mut w = create(&out)?;
    write_column(&mut w, "signal", x.samples())?;
    w.flush().map_err(io_err(format!("cannot write {}", out.display())))?;
    write_manifest(&manifest_path(&out), cmd, Some(a.seed), vec![out.clone()])?;
    eprintln!("wrote {} samples to {}", x.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct ValidateReport {
    n: usize,
    bins: usize,
    reps: usize,
    seed: u64,
    ks: f64,
    max_quantile_gap: f64,
    mc_mean: f64,
    analytic_mean: f64,
    params: NullModelParams,
}

fn run_validate(cmd: &Command, a: &ValidateArgs, out_dir: &Path) -> Result<()> {
    let dir = a.out.clone().unwrap_or_else(|| out_dir.to_path_buf());
    std::fs::create_dir_all(&dir).map_err(io_err(format!("cannot create {}", dir.display())))?;
    let sample = mc_null(a.n, a.bins, a.reps, a.seed)?;
    let params = NullModelParams::new(a.n, a.bins)?;
    let qs: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
    let qq = qq_table(&sample, &params, &qs)?;
    let max_quantile_gap = qq
        .iter()
        .filter(|r| (0.05..=0.95 + 1e-12).contains(&r.quantile))
        .map(|r| r.relative_gap())
        .fold(0.0, f64::max);
    let report = ValidateReport {
        n: a.n,
        bins: a.bins,
        reps: a.reps,
        seed: a.seed,
        ks: ks_distance(&sample, &params)?,
        max_quantile_gap,
        mc_mean: sample.mean(),
        analytic_mean: params.dist.mean(),
        params,
    };

    let qq_path = dir.join("qq.csv");
    let sample_path = dir.join("samples.csv");
    let report_path = dir.join("ks.json");
    let mut w = create(&qq_path)?;
    write_qq(&mut w, &qq)?;
    w.flush().map_err(io_err(format!("cannot write {}", qq_path.display())))?;
    let mut w = create(&sample_path)?;
    write_column(&mut w, "mi", &sample.mis)?;
    w.flush().map_err(io_err(format!("cannot write {}", sample_path.display())))?;
    write_json(&report_path, &report)?;
    write_manifest(
        &dir.join("manifest.json"),
        cmd,
        Some(a.seed),
        vec![qq_path, sample_path, report_path],
    )?;
    print_json(&report)
}

fn run_sweep(cmd: &Command, a: &SweepArgs, out_dir: &Path) -> Result<()> {
    let mut base = ScenarioConfig {
        fs: a.fs,
        duration: a.duration,
        ..ScenarioConfig::new(a.kind, 0.0, 0)
    };
    if let Some(b) = a.low {
        base.low_band = b;
    }
    if let Some(b) = a.high {
        base.high_band = b;
    }
    let rows = sweep_with(&base, &a.strengths, &a.bins_list, &a.seeds.0)?;
    let out = a.out.clone().unwrap_or_else(|| out_dir.join(format!("sweep_{}.csv", a.kind)));
    let mut w = create(&out)?;
    write_sweep(&mut w, &rows)?;
    w.flush().map_err(io_err(format!("cannot write {}", out.display())))?;
    write_manifest(&manifest_path(&out), cmd, None, vec![out.clone()])?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn run_replay(a: &ReplayArgs, out_dir: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(&a.manifest).map_err(io_err(format!("cannot read {}", a.manifest.display())))?;
    let manifest: RunManifest = serde_json::from_str(&text)?;
    if manifest.tool_version != VERSION {
        eprintln!(
            "note: manifest was written by version {}, this is {VERSION}",
            manifest.tool_version
        );
    }
    let cmd: Command = serde_json::from_value(manifest.config)?;
    if matches!(cmd, Command::Replay(_)) {
        return Err(CliError::Usage("a manifest cannot replay another replay".into()));
    }
    run(&cmd, out_dir)
}

/// Runs one command; the flag is false only for a non-significant `mi`.
fn run(cmd: &Command, out_dir: &Path) -> Result<bool> {
    match cmd {
        Command::Mi(a) => run_mi(cmd, a),
        Command::Null(a) => run_null(a).map(|_| true),
        Command::Simulate(a) => run_simulate(cmd, a, out_dir).map(|_| true),
        Command::Validate(a) => run_validate(cmd, a, out_dir).map(|_| true),
        Command::Sweep(a) => run_sweep(cmd, a, out_dir).map(|_| true),
        Command::Replay(a) => run_replay(a, out_dir),
    }
}

fn strict(cmd: &Command) -> bool {
    matches!(cmd, Command::Mi(a) if a.strict)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let informational = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if informational { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(&cli.command, &cli.out_dir) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) if strict(&cli.command) => ExitCode::from(2),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
