//! `medchain`: run, benchmark and inspect the simulated deployment.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage error, 3 invalid
//! config, 4 I/O failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use medchain_core::benchmark::{emit_tables, run_benchmark, table_csv, BenchError};
use medchain_core::config::{ConfigError, RunConfig};
use medchain_core::devices::{write_trace_csv, FaultKind, FaultSpec, TelemetryReading};
use medchain_core::ledger::{export_blocks, verify_export, TxKind};
use medchain_core::records::RecordError;
use medchain_core::scenario::{run_scenario, RunOutcome, ScenarioError};
use medchain_core::{NodeId, Ticks};

#[derive(Debug)]
enum CliError {
    CheckFailed(String),
    Usage(String),
    ConfigInvalid(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::ConfigInvalid(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::CheckFailed(m) | CliError::Usage(m) | CliError::ConfigInvalid(m) | CliError::Io(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::ConfigInvalid(e.to_string()),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::UnknownDevice(_) => CliError::Usage(e.to_string()),
            _ => CliError::ConfigInvalid(e.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        CliError::ConfigInvalid(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Parser)]
#[command(name = "medchain", version, about = "Deterministic medical-ledger simulator")]
struct Cli {
    /// TOML config file; defaults apply to anything it leaves out.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the default config.
    Init {
        /// Where to write the config.
        #[arg(long, default_value = "medchain.toml")]
        out: PathBuf,
        /// Overwrite an existing file.
        #[arg(long)]
        force: bool,
    },
    /// Run the seeded end-to-end simulation and print its summary.
    Run(RunArgs),
    /// Run the benchmark, write the tables and report, check parity and scaling.
    Bench {
        /// Directory for the CSV tables and report.json.
        #[arg(long, default_value = "bench-out")]
        out_dir: PathBuf,
        /// Trials per batch size; overrides bench.trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Comma-separated, ascending.
        #[arg(long, value_delimiter = ',')]
        batch_sizes: Option<Vec<u64>>,
    },
    /// Run with a fault attached to one device and print the flagged devices.
    InjectFault {
        /// Device to fault, for example device-3.
        #[arg(long)]
        device: NodeId,
        /// stuck-at:<v>, drift:<per-sample>, noise-burst:<multiplier> or dropout:<p>
        #[arg(long)]
        kind: FaultKind,
        /// First tick at which the fault is active.
        #[arg(long)]
        onset: Ticks,
    },
    /// Fetch a record as the given identity after a run.
    Query {
        /// Identity making the request, for example doctor-1.
        #[arg(long = "as")]
        requester: NodeId,
        /// Record id, for example patient-1.
        #[arg(long)]
        record: String,
        /// Storage nodes to take offline before reading.
        #[arg(long)]
        offline: Vec<NodeId>,
    },
    /// Validate a chain file written by `export`.
    Verify {
        /// Chain file, one hex-encoded block per line.
        #[arg(long)]
        chain: PathBuf,
    },
    /// Run and write the chain, telemetry, device traces, flag events,
    /// records and summary to a directory.
    Export {
        /// Directory to write into.
        #[arg(long, default_value = "export")]
        out_dir: PathBuf,
        /// Also write the network dispatch log.
        #[arg(long)]
        trace: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Also write the network dispatch log to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Override run.duration (ticks).
    #[arg(long)]
    duration: Option<Ticks>,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn revalidate(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate().map_err(CliError::ConfigInvalid)
}

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, body).map_err(|e| io_err(path, e))
}

fn summary_json(out: &RunOutcome, cfg: &RunConfig) -> String {
    serde_json::to_string_pretty(&out.summary(cfg.seed)).expect("summary serializes") + "\n"
}

fn cmd_init(cli: &Cli, out: &Path, force: bool) -> Result<(), CliError> {
    if out.exists() && !force {
        return Err(CliError::Usage(format!(
            "{} exists; pass --force to overwrite",
            out.display()
        )));
    }
    let cfg = load_config(cli)?;
    write(out, cfg.to_toml())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_run(cli: &Cli, args: &RunArgs) -> Result<(), CliError> {
    let mut cfg = load_config(cli)?;
    if let Some(d) = args.duration {
        cfg.run.duration = d;
    }
    cfg.run.trace |= args.trace.is_some();
    revalidate(&cfg)?;
    let out = run_scenario(&cfg, &[])?;
    if let (Some(path), Some(lines)) = (&args.trace, &out.trace) {
        write(path, lines.join("\n") + "\n")?;
    }
    print!("{}", summary_json(&out, &cfg));
    Ok(())
}

fn cmd_bench(
    cli: &Cli,
    out_dir: &Path,
    trials: Option<usize>,
    batch_sizes: Option<&[u64]>,
) -> Result<(), CliError> {
    let mut cfg = load_config(cli)?;
    if let Some(t) = trials {
        cfg.bench.trials = t;
    }
    if let Some(b) = batch_sizes {
        cfg.bench.batch_sizes = b.to_vec();
    }
    revalidate(&cfg)?;
    let report = run_benchmark(&cfg.bench_config())?;
    let paths = emit_tables(&report, out_dir).map_err(|e| io_err(out_dir, e))?;

    println!("processing time (s), simulated");
    print!("{}", table_csv(&report.processing_table()));
    println!("processing time (s), reference testbed");
    print!("{}", table_csv(&report.reference.processing_time_s));
    println!("average delay (s), simulated");
    print!("{}", table_csv(&report.delay_table()));
    println!("average delay (s), reference testbed");
    print!("{}", table_csv(&report.reference.average_delay_s));
    let verdict = |p: Option<bool>| match p {
        Some(true) => "pass",
        Some(false) => "FAIL",
        None => "not applicable",
    };
    println!(
        "parity (cv <= {}): {}",
        cfg.bench.cv_bound,
        verdict(report.parity.as_ref().map(|p| p.pass))
    );
    println!(
        "scaling (r2 >= {}): {}",
        cfg.bench.r2_min,
        verdict(report.scaling.as_ref().map(|s| s.pass))
    );
    for p in &paths {
        println!("wrote {}", p.display());
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::CheckFailed("benchmark checks did not pass".into()))
    }
}

fn cmd_inject(cli: &Cli, device: &NodeId, kind: FaultKind, onset: Ticks) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let spec = FaultSpec::new(kind, onset);
    spec.validate().map_err(CliError::Usage)?;
    let out = run_scenario(&cfg, &[(device.clone(), spec)])?;
    let flagged = out.flagged();
    let names: Vec<&str> = flagged.iter().map(NodeId::as_str).collect();
    if names.is_empty() {
        println!("flagged: none");
    } else {
        println!("flagged: {}", names.join(","));
    }
    Ok(())
}

fn cmd_query(cli: &Cli, requester: &NodeId, record: &str, offline: &[NodeId]) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let mut out = run_scenario(&cfg, &[])?;
    for n in offline {
        out.store
            .take_node_offline(n)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match out.store.get_record(&out.chain, record, requester) {
        Ok(r) => {
            println!("{}", serde_json::to_string_pretty(&r).expect("record serializes"));
            Ok(())
        }
        Err(e @ RecordError::NotFound(_)) => Err(CliError::Usage(e.to_string())),
        Err(e) => Err(CliError::CheckFailed(e.to_string())),
    }
}

fn cmd_verify(cli: &Cli, chain: &Path) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let text = fs::read_to_string(chain).map_err(|e| io_err(chain, e))?;
    let report = verify_export(&text, Some(&cfg.ledger.validators));
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    if report.ok {
        println!("chain ok: {} blocks", report.blocks_checked);
        Ok(())
    } else {
        let height = report.failing_height.unwrap_or(0);
        let fault = report.fault.map_or("unknown", |f| f.as_str());
        Err(CliError::CheckFailed(format!(
            "chain invalid at height {height}: {fault}"
        )))
    }
}

fn cmd_export(cli: &Cli, out_dir: &Path, trace: bool) -> Result<(), CliError> {
    let mut cfg = load_config(cli)?;
    cfg.run.trace |= trace;
    let out = run_scenario(&cfg, &[])?;
    write(&out_dir.join("chain.hex"), export_blocks(out.chain.blocks()))?;
    let readings: Vec<&TelemetryReading> = out
        .chain
        .blocks()
        .iter()
        .flat_map(|b| &b.txs)
        .filter_map(|tx| match &tx.kind {
            TxKind::Telemetry(r) => Some(r),
            _ => None,
        })
        .collect();
    write(&out_dir.join("telemetry.csv"), write_trace_csv(readings))?;
    write(&out_dir.join("device_traces.csv"), write_trace_csv(&out.device_readings()))?;
    let flags: String = out
        .chain
        .contract()
        .flag_events()
        .iter()
        .map(|f| serde_json::to_string(f).expect("flag event serializes") + "\n")
        .collect();
    write(&out_dir.join("flags.jsonl"), flags)?;
    if let Some(lines) = &out.trace {
        write(&out_dir.join("trace.jsonl"), lines.join("\n") + "\n")?;
    }
    let records = out_dir.join("records");
    out.store.save(&records).map_err(|e| io_err(&records, e))?;
    write(&out_dir.join("summary.json"), summary_json(&out, &cfg))?;
    write(&out_dir.join("config.toml"), cfg.to_toml())?;
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Init { out, force } => cmd_init(cli, out, *force),
        Command::Run(args) => cmd_run(cli, args),
        Command::Bench {
            out_dir,
            trials,
            batch_sizes,
        } => cmd_bench(cli, out_dir, *trials, batch_sizes.as_deref()),
        Command::InjectFault {
            device,
            kind,
            onset,
        } => cmd_inject(cli, device, *kind, *onset),
        Command::Query {
            requester,
            record,
            offline,
        } => cmd_query(cli, requester, record, offline),
        Command::Verify { chain } => cmd_verify(cli, chain),
        Command::Export { out_dir, trace } => cmd_export(cli, out_dir, *trace),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
