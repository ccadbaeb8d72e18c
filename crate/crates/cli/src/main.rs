use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use nostcap::format::{certificate_to_json, parse_policy, read_channel, result_to_json};
use nostcap::{
    average_channel, build_strategy_channel, csi_gain_certificate, enumerate_strategies,
    grid_oracle, make_noisy_post, simulate_policy, solve_cfb, solve_cfb_csi, CertificateStatus,
    Error, NostChannel, Policy, Setting, SimConfig, SimPolicy, SolverConfig,
};

const EXIT_NO_CERTIFICATE: u8 = 1;
const EXIT_NOT_CONNECTED: u8 = 2;
const EXIT_INVALID_INPUT: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;
const EXIT_USAGE: u8 = 64;

const ORACLE_STEP: f64 = 0.005;

#[derive(Parser)]
#[command(name = "nostcap", version, about = "Feedback capacity of NOST finite-state channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the feedback capacity, with or without state information.
    Solve(SolveArgs),
    /// Sweep eta for noisy-POST(alpha, eta) and write a CSV.
    SweepNoisyPost(SweepArgs),
    /// Check whether state information at the encoder can be shown useless.
    CertifyCsi(CertifyArgs),
    /// Simulate the closed loop under a policy.
    Simulate(SimulateArgs),
    /// Check a channel file and list every problem.
    Validate(ChannelArgs),
    /// Brute-force the capacity over a policy grid of spacing 0.005.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct ChannelArgs {
    #[arg(long)]
    channel: PathBuf,
    /// Rescale rows to sum to one before validation.
    #[arg(long)]
    normalize: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SettingArg {
    Fb,
    FbCsi,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    input: ChannelArgs,
    #[arg(long, value_enum, default_value = "fb")]
    setting: SettingArg,
    /// Optimality-gap target in bits.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    eta_start: f64,
    #[arg(long, default_value_t = 1.0)]
    eta_end: f64,
    #[arg(long, default_value_t = 0.05)]
    eta_step: f64,
    /// Restrict to one setting; the other column is left empty.
    #[arg(long, value_enum)]
    setting: Option<SettingArg>,
    #[arg(long)]
    tol: Option<f64>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    input: ChannelArgs,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: ChannelArgs,
    /// A result file from `solve` or a bare `[y'][a]` array.
    #[arg(long)]
    policy: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    input: ChannelArgs,
    #[arg(long, value_enum, default_value = "fb")]
    setting: SettingArg,
}

enum Failure {
    Usage(String),
    Lib(Error),
    Io(PathBuf, std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Io(..) => EXIT_INVALID_INPUT,
            Failure::Lib(e) => match e {
                Error::NotConnected => EXIT_NOT_CONNECTED,
                Error::IterationLimit(_) | Error::Infeasible | Error::Unbounded => {
                    EXIT_NOT_CONVERGED
                }
                _ => EXIT_INVALID_INPUT,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "{msg}"),
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io(path, e) => write!(f, "{}: {e}", path.display()),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn load_channel(args: &ChannelArgs) -> Result<NostChannel, Failure> {
    Ok(read_channel(&read_text(&args.channel)?, args.normalize)?)
}

fn solver_config(tol: Option<f64>) -> Result<SolverConfig, Failure> {
    let mut cfg = SolverConfig::default();
    if let Some(tol) = tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Failure::Usage(format!("--tol must be positive, got {tol}")));
        }
        cfg.tolerance = tol;
    }
    Ok(cfg)
}

fn cmd_solve(args: &SolveArgs) -> CmdResult {
    let cfg = solver_config(args.tol)?;
    let channel = load_channel(&args.input)?;
    let result = match args.setting {
        SettingArg::Fb => solve_cfb(&channel, &cfg)?,
        SettingArg::FbCsi => solve_cfb_csi(&channel, &cfg)?,
    };
    if let Some(out) = &args.out {
        write_text(out, &result_to_json(&result))?;
    }
    println!("{:.6}", result.value_bits);
    Ok(0)
}

fn eta_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>, Failure> {
    let ok = start.is_finite() && end.is_finite() && step > 0.0 && step.is_finite() && start <= end;
    if !ok {
        return Err(Failure::Usage(format!(
            "invalid eta grid {start}:{end}:{step}; need start <= end and step > 0"
        )));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| (start + i as f64 * step).min(end))
        .collect())
}

struct SweepRow {
    eta: f64,
    c_fb: Option<f64>,
    c_fb_csi: Option<f64>,
    a_opt: Option<f64>,
    b_opt: Option<f64>,
}

fn sweep_point(alpha: f64, eta: f64, setting: Option<SettingArg>, cfg: &SolverConfig) -> Result<SweepRow, Error> {
    let channel = make_noisy_post(alpha, eta)?;
    let mut row = SweepRow {
        eta,
        c_fb: None,
        c_fb_csi: None,
        a_opt: None,
        b_opt: None,
    };
    if !matches!(setting, Some(SettingArg::FbCsi)) {
        let r = solve_cfb(&channel, cfg)?;
        row.c_fb = Some(r.value_bits);
        row.a_opt = Some(r.policy.row(0)[1]);
        row.b_opt = Some(r.policy.row(1)[0]);
    }
    if !matches!(setting, Some(SettingArg::Fb)) {
        row.c_fb_csi = Some(solve_cfb_csi(&channel, cfg)?.value_bits);
    }
    Ok(row)
}

fn cmd_sweep(args: &SweepArgs) -> CmdResult {
    let cfg = solver_config(args.tol)?;
    let etas = eta_grid(args.eta_start, args.eta_end, args.eta_step)?;
    make_noisy_post(args.alpha, etas[0])?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("NOSTCAP_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start worker threads: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        etas.par_iter()
            .map(|&eta| sweep_point(args.alpha, eta, args.setting, &cfg))
            .collect::<Result<_, _>>()
    })?;

    let cell = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.10}"));
    let mut csv = String::from("eta,c_fb,c_fb_csi,a_opt,b_opt\n");
    for r in &rows {
        csv.push_str(&format!(
            "{:.6},{},{},{},{}\n",
            r.eta,
            cell(r.c_fb),
            cell(r.c_fb_csi),
            cell(r.a_opt),
            cell(r.b_opt)
        ));
    }
    match &args.out {
        Some(out) => write_text(out, &csv)?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn cmd_certify(args: &CertifyArgs) -> CmdResult {
    let cfg = solver_config(args.tol)?;
    let channel = load_channel(&args.input)?;
    let csi = solve_cfb_csi(&channel, &cfg)?;
    let cert = csi_gain_certificate(&channel, &csi, &cfg)?;
    if let Some(out) = &args.out {
        write_text(out, &certificate_to_json(&cert))?;
    }
    match cert.status {
        CertificateStatus::NoGainCertified => {
            println!("NoGainCertified");
            Ok(0)
        }
        CertificateStatus::NoCertificateFound => {
            println!("NoCertificateFound");
            Ok(EXIT_NO_CERTIFICATE)
        }
    }
}

fn cmd_simulate(args: &SimulateArgs) -> CmdResult {
    if args.steps == 0 {
        return Err(Failure::Usage("--steps must be at least 1".into()));
    }
    let channel = load_channel(&args.input)?;
    let file = parse_policy(&read_text(&args.policy)?)?;
    let policy = Policy::new(file.rows)?;
    let alph = channel.alphabets();
    let cfg = SimConfig::new(args.steps, args.seed);

    let over_strategies = match file.setting {
        Some(Setting::FbCsi) => true,
        Some(Setting::Fb) => false,
        None => {
            let strategies = alph.strategy_count()?;
            if policy.in_size() != alph.x_size && policy.in_size() != strategies {
                return Err(Error::DimensionMismatch(format!(
                    "policy has {} columns; expected |X| = {} or |X|^|S| = {strategies}",
                    policy.in_size(),
                    alph.x_size
                ))
                .into());
            }
            policy.in_size() != alph.x_size
        }
    };
    let report = if over_strategies {
        let strategies = enumerate_strategies(&alph)?;
        simulate_policy(
            &channel,
            SimPolicy::Strategies {
                policy: &policy,
                strategies: &strategies,
            },
            &cfg,
        )?
    } else {
        simulate_policy(&channel, SimPolicy::Inputs(&policy), &cfg)?
    };
    if let Some(out) = &args.out {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_text(out, &json)?;
    }
    println!("{:.6}", report.empirical_rate_bits);
    Ok(0)
}

fn cmd_validate(args: &ChannelArgs) -> CmdResult {
    match load_channel(args) {
        Ok(c) => {
            let a = c.alphabets();
            println!("valid: |X|={} |Y|={} |S|={}", a.x_size, a.y_size, a.s_size);
            Ok(0)
        }
        Err(e) => Err(e),
    }
}

fn cmd_oracle(args: &OracleArgs) -> CmdResult {
    let channel = load_channel(&args.input)?;
    let av = match args.setting {
        SettingArg::Fb => average_channel(&channel),
        SettingArg::FbCsi => {
            build_strategy_channel(&channel, &enumerate_strategies(&channel.alphabets())?)?
        }
    };
    println!("{:.6}", grid_oracle(&av, ORACLE_STEP)?);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::SweepNoisyPost(a) => cmd_sweep(a),
        Command::CertifyCsi(a) => cmd_certify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
