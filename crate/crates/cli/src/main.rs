//! Command-line front end: experiment runner, battery reports, networked key
//! agreement, and one-shot distillation.

mod config;
mod render;

use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use neurokey_cli::{distribution_rows, rows_to_csv, run_batch, Batch};
use neurokey_core::distill::{distill_trace, DistillConfig, HashFn};
use neurokey_core::net::{run_remote_session, NetConfig, TcpTransport};
use neurokey_core::protocol::{default_max_rounds, SessionReport};
use neurokey_core::tpm::{LearningRule, Role, TpmParams, WeightMatrix};
use neurokey_randsuite::{run_suite, SuiteParams};

use config::FileConfig;

#[derive(Parser)]
#[command(
    name = "neurokey",
    version,
    about = "Neural mutual-learning key agreement with key distillation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded synchronizations and report weight distributions
    Simulate(SimulateArgs),
    /// Run the randomness battery on raw and distilled key material
    Nist(NistArgs),
    /// Execute the two-party key agreement over TCP
    Keyagree(KeyagreeArgs),
    /// Distill a secret from a weight-vector file
    Distill(DistillArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum RuleArg {
    Hebbian,
    AntiHebbian,
    RandomWalk,
}

impl RuleArg {
    fn to_rule(self) -> LearningRule {
        match self {
            RuleArg::Hebbian => LearningRule::Hebbian,
            RuleArg::AntiHebbian => LearningRule::AntiHebbian,
            RuleArg::RandomWalk => LearningRule::RandomWalk,
        }
    }
}

impl std::str::FromStr for RuleArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "hebbian" => Ok(RuleArg::Hebbian),
            "anti-hebbian" | "antihebbian" => Ok(RuleArg::AntiHebbian),
            "random-walk" | "randomwalk" => Ok(RuleArg::RandomWalk),
            other => Err(format!("unknown learning rule `{other}`")),
        }
    }
}

#[derive(Args, Debug)]
struct MachineArgs {
    /// Hidden neurons K
    #[arg(long)]
    k: Option<u16>,
    /// Weight bound L
    #[arg(long)]
    l: Option<i16>,
    /// Input bound M
    #[arg(long)]
    m: Option<i16>,
    /// Inputs per neuron N
    #[arg(long)]
    n: Option<u16>,
    /// Learning rule
    #[arg(long)]
    rule: Option<RuleArg>,
    /// Allow M to exceed L (weakens the scheme)
    #[arg(long)]
    allow_large_m: bool,
}

impl MachineArgs {
    fn resolve(&self, cfg: &FileConfig) -> Result<TpmParams> {
        let k = cfg.resolve(self.k, "k", 3)?;
        let l = cfg.resolve(self.l, "l", 8)?;
        let m = cfg.resolve(self.m, "m", 1)?;
        let n = cfg.resolve(self.n, "n", 60)?;
        let rule = cfg.resolve(self.rule, "rule", RuleArg::Hebbian)?.to_rule();
        let params = if self.allow_large_m {
            TpmParams::new_unguarded(k, l, m, n, rule)
        } else {
            TpmParams::new(k, l, m, n, rule)
        };
        params.map_err(|e| anyhow!(e))
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    machine: MachineArgs,
    /// Number of synchronizations
    #[arg(long)]
    sessions: Option<u64>,
    /// Master seed for the whole experiment
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for distribution.csv and summary.json
    #[arg(long)]
    out: Option<PathBuf>,
    /// Config file with the same keys as the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NistArgs {
    #[command(flatten)]
    machine: MachineArgs,
    #[arg(long)]
    sessions: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Substitution hash (sha256 or sha512)
    #[arg(long)]
    hash: Option<String>,
    /// Output directory for nist_report.json
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KeyagreeArgs {
    #[command(flatten)]
    machine: MachineArgs,
    /// Listen for the peer (recipient role)
    #[arg(long, conflicts_with = "connect")]
    listen: bool,
    /// Connect to a listening peer (sender role), HOST or HOST:PORT
    #[arg(long)]
    connect: Option<String>,
    /// TCP port for --listen, or for --connect without an explicit port
    #[arg(long)]
    port: Option<u16>,
    /// Seed for local weights (and, on the sender, the input stream)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    hash: Option<String>,
    /// Output directory for secret.hex and secret.json
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DistillArgs {
    #[command(flatten)]
    machine: MachineArgs,
    /// Text file of K*N whitespace-separated integer weights
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    hash: Option<String>,
    /// Output file for the lowercase hex secret (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Failure classes mapped to exit codes: usage 1, session failure 2, I/O 3.
enum CliError {
    Usage(anyhow::Error),
    Session(anyhow::Error),
    Io(anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Session(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &anyhow::Error {
        match self {
            CliError::Usage(e) | CliError::Session(e) | CliError::Io(e) => e,
        }
    }
}

fn usage<T>(r: Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::Usage)
}

fn io<T>(r: Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::Io)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes, not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Nist(args) => cmd_nist(args),
        Command::Keyagree(args) => cmd_keyagree(args),
        Command::Distill(args) => cmd_distill(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let cfg = FileConfig::load(path).map_err(CliError::Io)?;
    cfg.ensure_known_keys(&[
        "k", "l", "m", "n", "rule", "sessions", "seed", "hash", "port", "out",
    ])
    .map_err(CliError::Usage)?;
    Ok(cfg)
}

fn resolve_hash(flag: &Option<String>, cfg: &FileConfig) -> Result<HashFn> {
    let name = match flag {
        Some(name) => name.clone(),
        None => cfg.get("hash").unwrap_or("sha256").to_string(),
    };
    HashFn::from_name(&name).map_err(|e| anyhow!(e))
}

fn out_dir(flag: Option<PathBuf>, cfg: &FileConfig) -> PathBuf {
    flag.or_else(|| cfg.get("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    params: &'a TpmParams,
    sessions: u64,
    master_seed: u64,
    failures: usize,
    mean_iterations: f64,
    extrema_mass_before: f64,
    max_uniform_deviation_after: f64,
    uniform_reference: f64,
}

fn run_checked_batch(params: &TpmParams, sessions: u64, seed: u64) -> Result<Batch, CliError> {
    if sessions < 1 {
        return Err(CliError::Usage(anyhow!("sessions must be at least 1")));
    }
    let batch = run_batch(params, sessions, seed, default_max_rounds(params));
    if batch.outcomes.is_empty() {
        return Err(CliError::Session(anyhow!(
            "all {sessions} sessions exhausted the round budget"
        )));
    }
    Ok(batch)
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let params = usage(args.machine.resolve(&cfg))?;
    let sessions = usage(cfg.resolve(args.sessions, "sessions", 1000))?;
    let seed = usage(cfg.resolve(args.seed, "seed", 42))?;
    let out = out_dir(args.out, &cfg);

    let batch = run_checked_batch(&params, sessions, seed)?;
    let before = batch.distribution_before();
    let after = batch.distribution_after_equalization();
    let rows = distribution_rows(&before, &after);
    io(write_file(
        &out.join("distribution.csv"),
        rows_to_csv(&rows).as_bytes(),
    ))?;

    let summary = SimulateSummary {
        params: &params,
        sessions,
        master_seed: seed,
        failures: batch.failures.len(),
        mean_iterations: batch.mean_iterations(),
        extrema_mass_before: before.extrema_mass(),
        max_uniform_deviation_after: after.max_uniform_deviation(),
        uniform_reference: 1.0 / (2.0 * f64::from(params.l()) + 1.0),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    io(write_file(&out.join("summary.json"), json.as_bytes()))?;

    println!(
        "{} sessions (M={}): mean iterations {:.1}, extrema mass {:.4}, max post-equalization deviation {:.5}",
        batch.outcomes.len(),
        params.m(),
        summary.mean_iterations,
        summary.extrema_mass_before,
        summary.max_uniform_deviation_after,
    );
    println!("wrote {}", out.join("distribution.csv").display());
    println!("wrote {}", out.join("summary.json").display());
    Ok(())
}

#[derive(Serialize)]
struct NistReportDoc<'a> {
    params: &'a TpmParams,
    sessions: u64,
    master_seed: u64,
    hash: &'static str,
    before_bits: usize,
    after_bits: usize,
    before: &'a neurokey_randsuite::SuiteReport,
    after: &'a neurokey_randsuite::SuiteReport,
}

fn cmd_nist(args: NistArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let params = usage(args.machine.resolve(&cfg))?;
    let sessions = usage(cfg.resolve(args.sessions, "sessions", 1000))?;
    let seed = usage(cfg.resolve(args.seed, "seed", 42))?;
    let hash = usage(resolve_hash(&args.hash, &cfg))?;
    let out = out_dir(args.out, &cfg);

    let batch = run_checked_batch(&params, sessions, seed)?;
    let distill_cfg = DistillConfig {
        hash,
        ..DistillConfig::default()
    };
    let before_bits = batch.before_stream();
    let after_bits = batch.after_stream(&distill_cfg);
    let suite_params = SuiteParams::default();
    let before = run_suite(&before_bits, &suite_params);
    let after = run_suite(&after_bits, &suite_params);

    print!("{}", render::suite_table(&before, &after));

    let doc = NistReportDoc {
        params: &params,
        sessions,
        master_seed: seed,
        hash: hash.name(),
        before_bits: before_bits.len(),
        after_bits: after_bits.len(),
        before: &before,
        after: &after,
    };
    let json = serde_json::to_string_pretty(&doc).expect("report serializes");
    io(write_file(&out.join("nist_report.json"), json.as_bytes()))?;
    println!("wrote {}", out.join("nist_report.json").display());
    Ok(())
}

#[derive(Serialize)]
struct SecretMeta<'a> {
    params: &'a TpmParams,
    role: Role,
    iterations: u64,
    updates: u64,
    sync_digest: String,
    secret_bits: usize,
    hash: &'static str,
}

fn cmd_keyagree(args: KeyagreeArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let params = usage(args.machine.resolve(&cfg))?;
    let seed = usage(cfg.resolve(args.seed, "seed", 42))?;
    let hash = usage(resolve_hash(&args.hash, &cfg))?;
    let port = usage(cfg.resolve(args.port, "port", neurokey_core::net::DEFAULT_PORT))?;
    let out = out_dir(args.out, &cfg);

    let (mut transport, role) = match (&args.connect, args.listen) {
        (Some(target), false) => {
            let addr = if target.contains(':') {
                target.clone()
            } else {
                format!("{target}:{port}")
            };
            let stream = io(TcpStream::connect(&addr).with_context(|| format!("connecting to {addr}")))?;
            let transport = io(TcpTransport::from_stream(stream).context("configuring socket"))?;
            println!("connected to {addr} as sender");
            (transport, Role::Sender)
        }
        (None, true) => {
            let listener =
                io(TcpListener::bind(("0.0.0.0", port)).context("binding listener"))?;
            let local = io(listener.local_addr().context("querying bound address"))?;
            println!("listening on {local}");
            let (stream, peer) = io(listener.accept().context("accepting peer"))?;
            let transport = io(TcpTransport::from_stream(stream).context("configuring socket"))?;
            println!("peer connected from {peer}; acting as recipient");
            (transport, Role::Recipient)
        }
        _ => {
            return Err(CliError::Usage(anyhow!(
                "exactly one of --listen or --connect is required"
            )))
        }
    };

    let net_cfg = NetConfig {
        hash,
        session_id: seed,
        ..NetConfig::default()
    };
    let input_seed = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let report = run_remote_session(&mut transport, &params, role, seed, input_seed, &net_cfg)
        .map_err(|e| CliError::Session(anyhow!("key agreement failed: {e}")))?;

    write_secret_files(&out, &params, role, &report, hash).map_err(CliError::Io)?;
    Ok(())
}

fn write_secret_files(
    out: &Path,
    params: &TpmParams,
    role: Role,
    report: &SessionReport,
    hash: HashFn,
) -> Result<()> {
    let distill_cfg = DistillConfig {
        hash,
        ..DistillConfig::default()
    };
    let trace = distill_trace(&report.final_weights, params, &distill_cfg)
        .map_err(|e| anyhow!("distillation failed: {e}"))?;
    let secret_hex = hex::encode(trace.secret.to_le_bytes());
    write_file(&out.join("secret.hex"), secret_hex.as_bytes())?;
    let meta = SecretMeta {
        params,
        role,
        iterations: report.iterations,
        updates: report.updates,
        sync_digest: hex::encode(report.sync_digest),
        secret_bits: trace.secret.len(),
        hash: hash.name(),
    };
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    write_file(&out.join("secret.json"), json.as_bytes())?;
    println!(
        "synchronized after {} rounds; distilled {} secret bits",
        report.iterations,
        trace.secret.len()
    );
    println!("wrote {}", out.join("secret.hex").display());
    println!("wrote {}", out.join("secret.json").display());
    Ok(())
}

fn cmd_distill(args: DistillArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config)?;
    let params = usage(args.machine.resolve(&cfg))?;
    let hash = usage(resolve_hash(&args.hash, &cfg))?;

    let text = io(std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display())))?;
    let mut values = Vec::new();
    for token in text.split([' ', '\t', '\n', '\r', ',']) {
        if token.is_empty() {
            continue;
        }
        let v: i16 = usage(
            token
                .parse()
                .with_context(|| format!("weight `{token}` is not an integer")),
        )?;
        values.push(v);
    }
    let weights = usage(
        WeightMatrix::from_values(&params, values)
            .map_err(|e| anyhow!("weight file does not match the machine: {e}")),
    )?;
    let distill_cfg = DistillConfig {
        hash,
        ..DistillConfig::default()
    };
    let trace = usage(distill_trace(&weights, &params, &distill_cfg).map_err(|e| anyhow!(e)))?;
    let secret_hex = hex::encode(trace.secret.to_le_bytes());
    match &args.out {
        Some(path) => {
            io(write_file(path, secret_hex.as_bytes()))?;
            println!(
                "distilled {} bits ({} weights kept) -> {}",
                trace.secret.len(),
                trace.kept.len(),
                path.display()
            );
        }
        None => println!("{secret_hex}"),
    }
    Ok(())
}
