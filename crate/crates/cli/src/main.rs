use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use ambc_cli::presets::Preset;
use ambc_cli::sweep::Output;
use ambc_cli::verify::verify;
use ambc_cli::{parse_config, run_sweep, ClosedForm, Config};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

/// Outage and intercept probabilities for uplink NOMA ambient backscatter.
#[derive(Parser)]
#[command(name = "ambc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path (standard output if omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo trials per estimate
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Quadrature order for the cascade integrals
    #[arg(long, global = true)]
    quad_order: Option<usize>,
    /// Gauss-Laguerre order for the BD intercept average
    #[arg(long, global = true)]
    laguerre_order: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form OPs and their floors
    Outage,
    /// Closed-form IPs and their high-SNR constants
    Intercept,
    /// The sweep described by the configuration
    Sweep,
    /// The configured sweep with Monte Carlo columns
    Mc,
    /// Analytic-vs-simulation check; exit status 2 on any failure
    Verify,
    /// Figure data
    Preset {
        #[arg(value_parser = |s: &str| s.parse::<Preset>())]
        name: Preset,
    },
}

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;

fn load(common: &Common, preset: Option<Preset>) -> Result<Config> {
    let mut cfg = match (preset, &common.config) {
        (Some(p), _) => p.config(),
        (None, Some(path)) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text).with_context(|| format!("in {}", path.display()))?
        }
        (None, None) => Config::default(),
    };
    if let Some(t) = common.trials {
        cfg.sweep.mc_trials = t;
    }
    if let Some(s) = common.seed {
        cfg.sweep.seed = s;
    }
    if let Some(n) = common.quad_order {
        cfg.numerics.phi_order = n;
    }
    if let Some(n) = common.laguerre_order {
        cfg.numerics.laguerre_order = n;
    }
    Ok(cfg)
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("writing output"),
    }
}

fn restrict(cfg: &mut Config, keep: &[Output], add: &[Output]) {
    cfg.sweep.outputs.retain(|o| keep.contains(o));
    for o in add {
        if !cfg.sweep.outputs.contains(o) {
            cfg.sweep.outputs.push(*o);
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let common = &cli.common;
    let preset = match cli.command {
        Command::Preset { name } => Some(name),
        _ => None,
    };
    let mut cfg = load(common, preset)?;
    let ops = [Output::OpU2, Output::OpU1, Output::OpBd];
    let ips = [Output::IpU2, Output::IpU1, Output::IpBd];
    match cli.command {
        Command::Outage => restrict(&mut cfg, &[], &[ops[0], ops[1], ops[2], Output::Floors]),
        Command::Intercept => {
            restrict(&mut cfg, &[], &[ips[0], ips[1], ips[2], Output::Asymptotes])
        }
        Command::Mc => {
            if cfg.sweep.op_nodes().is_empty() && cfg.sweep.ip_nodes().is_empty() {
                restrict(
                    &mut cfg,
                    &[],
                    &[ops[0], ops[1], ops[2], ips[0], ips[1], ips[2]],
                );
            }
            restrict(&mut cfg, &Output::ALL, &[Output::Mc]);
        }
        _ => {}
    }
    cfg.sweep
        .validate(&cfg.params)
        .map_err(anyhow::Error::msg)
        .context("invalid sweep")?;
    let eval = ClosedForm::new(cfg.numerics).context("quadrature setup")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.workers)
        .build()
        .context("building worker pool")?;
    pool.install(|| match cli.command {
        Command::Verify => {
            let report = verify(&cfg.params, &cfg.sweep, &eval)?;
            emit(common, &report.render())?;
            Ok(if report.passed() { 0 } else { EXIT_VERIFY })
        }
        _ => {
            emit(
                common,
                &run_sweep(&cfg.params, &cfg.sweep, &cfg.numerics, &eval),
            )?;
            Ok(0)
        }
    })
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
