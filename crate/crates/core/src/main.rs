use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aqec::harness::{emit, run_scenario, Format, HarnessError, Preset, Scenario, ScenarioConfig};
use aqec::model::{CodeVariant, DynamicsLevel};

#[derive(Parser)]
#[command(name = "aqec", version, about = "Autonomous three-qubit error correction simulator", allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Codeword fidelity and subspace populations over time.
    Simulate,
    /// Numeric and analytic optimum of κ_eng and Ω.
    Optimize,
    /// Ramsey fringes (with --signal) or the sensitivity curve.
    Ramsey,
    /// Three-subspace rate model.
    Rates,
    /// All dynamics levels side by side.
    Compare,
    /// Regenerate one figure: fig1, fig5, fig6, fig7, fig8 or fig9.
    Preset { name: Preset },
}

#[derive(Args)]
struct Common {
    /// JSON scenario file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "csv")]
    format: Format,
    /// Worker threads for parameter and τ sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Excitation-number cutoff (1 or 2).
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=2))]
    max_exc: Option<u8>,
    #[arg(long, global = true)]
    level: Option<DynamicsLevel>,
    #[arg(long, global = true)]
    variant: Option<CodeVariant>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Sideband coupling G.
    #[arg(long, global = true)]
    g: Option<f64>,
    #[arg(long, global = true)]
    kappa_eng: Option<f64>,
    #[arg(long, global = true)]
    omega: Option<f64>,
    #[arg(long, global = true)]
    gamma_z: Option<f64>,
    #[arg(long, global = true)]
    gamma_collective_z: Option<f64>,
    /// Signal frequency ω.
    #[arg(long, global = true)]
    signal: Option<f64>,
    #[arg(long, global = true)]
    t_star: Option<f64>,
}

fn set<T: std::fmt::Debug + PartialEq>(name: &str, slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        if *slot != v {
            log::info!("--{name} overrides config value {:?} with {:?}", slot, v);
        }
        *slot = v;
    }
}

fn build_config(cli: Cli) -> Result<(ScenarioConfig, Option<PathBuf>, Format), HarnessError> {
    let c = cli.common;
    let mut cfg = match &c.config {
        Some(path) => ScenarioConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => ScenarioConfig::default(),
    };
    cfg.scenario = match cli.command {
        Command::Simulate => Scenario::Simulate,
        Command::Optimize => Scenario::Optimize,
        Command::Ramsey => Scenario::Ramsey,
        Command::Rates => Scenario::Rates,
        Command::Compare => Scenario::Compare,
        Command::Preset { name } => Scenario::Preset(name),
    };
    set("max-exc", &mut cfg.backend.truncation.max_exc, c.max_exc.map(usize::from));
    set("level", &mut cfg.backend.level, c.level);
    set("variant", &mut cfg.backend.variant, c.variant);
    let p = &mut cfg.params;
    set("gamma", &mut p.gamma, c.gamma);
    set("g", &mut p.g_sideband, c.g);
    set("kappa-eng", &mut p.kappa_eng, c.kappa_eng.map(Some));
    set("omega", &mut p.omega, c.omega);
    set("gamma-z", &mut p.gamma_z, c.gamma_z);
    set("gamma-collective-z", &mut p.gamma_collective_z, c.gamma_collective_z);
    set("signal", &mut p.signal, c.signal);
    set("t-star", &mut cfg.t_star, c.t_star);
    let out = c.out.or_else(|| cfg.output.clone());
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(HarnessError::config("threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::config("threads", e.to_string()))?;
    }
    Ok((cfg, out, c.format))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = build_config(Cli::parse()).and_then(|(cfg, out, format)| {
        let rec = run_scenario(&cfg)?;
        emit(&rec, format, out.as_deref())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
