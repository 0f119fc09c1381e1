use clap::{Args, Parser, Subcommand, ValueEnum};
use ncofdm_sync::error::{Error, Result};
use ncofdm_sync::harness::predict::{cfo_csv, table_csv, vi_csv};
use ncofdm_sync::harness::selftest::run_selftest;
use ncofdm_sync::harness::{
    emit_report, parse_list, run_scenario, InterferenceChoice, RunOptions, Scenario,
};
use ncofdm_sync::waveform::PreambleKind;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ncofdm-sync",
    version,
    about = "NC-OFDM preamble synchronization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep writing metrics.csv and trials.csv.gz
    Run(RunArgs),
    /// Closed-form curves as CSV
    Predict(PredictArgs),
    /// Quick invariant checks
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// key = value file; flags given here override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// nogs, gs or dsa
    #[arg(long)]
    scenario: Option<String>,
    /// Comma list of luisa-sc, luisa-simple, luisa-yonly, sc-baseline
    #[arg(long)]
    algo: Option<String>,
    /// dB values: a:step:b, comma list or inf
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    /// dB values: a:step:b, comma list or inf (no interference)
    #[arg(long, allow_hyphen_values = true)]
    sir: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// CFO bound of the LUISA search, or "full"
    #[arg(long)]
    nu_max: Option<String>,
    /// Path false detection probability
    #[arg(long)]
    pfd: Option<String>,
    /// Fine CFO iterations
    #[arg(long)]
    gamma: Option<String>,
    /// none, nbi, nbi:F, wbi or wbi:LO:HI
    #[arg(long)]
    interference: Option<String>,
    /// Enables preamble presence detection at this false alarm probability
    #[arg(long)]
    presence_pfd: Option<String>,
    /// Occupied subcarrier ranges, e.g. -85:-1,1,47:85
    #[arg(long, allow_hyphen_values = true)]
    occupied: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Table,
    Vi,
    Cfo,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Sc,
    Simple,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long, value_enum)]
    what: What,
    /// For vi: nbi:F or wbi:LO:HI
    #[arg(long, default_value = "nbi:24")]
    interference: String,
    /// Scenario whose subcarrier map feeds the vi curve
    #[arg(long, default_value = "nogs")]
    scenario: String,
    #[arg(long, value_enum, default_value = "sc")]
    kind: Kind,
    /// Table: CFO in subcarrier spacings
    #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
    nu: f64,
    /// Table: frequency offset k
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    k: f64,
    /// Table: path delay
    #[arg(long, default_value_t = 0)]
    l: i64,
    /// Cfo: SNR list in dB
    #[arg(long, default_value = "0:2:30", allow_hyphen_values = true)]
    snr: String,
    /// Write here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: RunArgs) -> Result<()> {
    let mut opts = RunOptions::default();
    if let Some(path) = &args.config {
        opts.apply_config(&std::fs::read_to_string(path)?)?;
    }
    let flags = [
        ("scenario", &args.scenario),
        ("algo", &args.algo),
        ("snr", &args.snr),
        ("sir", &args.sir),
        ("trials", &args.trials),
        ("seed", &args.seed),
        ("nu-max", &args.nu_max),
        ("pfd", &args.pfd),
        ("gamma", &args.gamma),
        ("interference", &args.interference),
        ("presence-pfd", &args.presence_pfd),
        ("occupied", &args.occupied),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            opts.set(key, v)?;
        }
    }
    if let Some(out) = args.out {
        opts.out = out;
    }
    let scenario = opts.scenario()?;
    let report = run_scenario(&scenario, &opts.algorithms, &opts.settings, &opts.sweep())?;
    emit_report(&report, &opts.out)?;
    for c in &report.cells {
        println!(
            "{:<13} snr {:>6} sir {:>6}  p_err {:.3e} [{:.2e}, {:.2e}]  ({}/{})",
            c.algorithm,
            c.snr_db,
            c.sir_db,
            c.p_err,
            c.p_err_ci_lo,
            c.p_err_ci_hi,
            c.errors,
            c.trials
        );
    }
    println!("wrote {}", opts.out.display());
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    let kind = match args.kind {
        Kind::Sc => PreambleKind::SchmidlCox,
        Kind::Simple => PreambleKind::Simple,
    };
    let scenario = Scenario::by_name(&args.scenario)?;
    let csv = match args.what {
        What::Table => table_csv(scenario.n_fft(), scenario.n_cp, args.l, args.k, args.nu)?,
        What::Vi => vi_csv(
            &scenario.map,
            kind,
            &InterferenceChoice::parse(&args.interference)?,
        )?,
        What::Cfo => cfo_csv(scenario.n_fft(), &parse_list(&args.snr)?)?,
    };
    match args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn selftest() -> Result<()> {
    let outcomes = run_selftest();
    for o in &outcomes {
        println!(
            "{} {}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(Error::InvalidArgument(format!(
            "{failed} self-test check(s) failed"
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Predict(a) => predict(a),
        Command::Selftest => selftest(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
