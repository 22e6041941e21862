//! Scenario configuration, figure presets and result output for the `aqec`
//! command-line tool.

pub mod config;
pub mod output;
pub mod presets;

use std::time::Instant;

use crate::backend::{Backend, BackendSpec};
use crate::effective::EffectiveRates;
use crate::error::Error;
use crate::lindblad::{evolve, evolve_with};
use crate::metrology::{ramsey_run, sensitivity, RamseyConfig};
use crate::model::{single_qubit_reference, DynamicsLevel, ModelParams};
use crate::optimize::{analytic_optimum, default_codeword, numeric_optimum, Regime};
use crate::rates::{derive_rates, solve_rate_model, solve_rate_model_numeric, RateParams};

pub use config::{Grid, Preset, Scenario, ScenarioConfig};
pub use output::{emit, parse_csv, to_csv, Column, Format, Metadata, ResultRecord};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("numeric failure in {context}: {source}")]
    Numeric {
        context: String,
        #[source]
        source: Error,
    },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl HarnessError {
    pub fn config(path: &str, message: impl Into<String>) -> Self {
        HarnessError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 2 for configuration errors, 3 for numeric failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } => 2,
            HarnessError::Numeric { .. } => 3,
            _ => 1,
        }
    }
}

/// Attaches scenario context; parameter errors count as configuration errors.
pub(crate) fn ctx<T>(context: &str, r: crate::Result<T>) -> Result<T, HarnessError> {
    r.map_err(|e| match e {
        Error::InvalidParameter { name, reason } => HarnessError::config(&format!("params.{name}"), reason),
        Error::UnsupportedLevel(..) => HarnessError::config("backend.level", e.to_string()),
        other => HarnessError::Numeric {
            context: context.into(),
            source: other,
        },
    })
}

pub(crate) type Output = (Vec<Column>, Vec<(String, f64)>);

pub(crate) fn col(name: impl Into<String>, values: Vec<f64>) -> Column {
    Column {
        name: name.into(),
        values,
    }
}

/// Maps `f` over `items` (in parallel with the `parallel` feature), keeping
/// the input order.
pub(crate) fn par_map<T: Sync, R: Send>(
    items: &[T],
    f: impl Fn(&T) -> Result<R, HarnessError> + Sync + Send,
) -> Result<Vec<R>, HarnessError> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Fills κ_eng and Ω from the long-time analytic optimum when the level
/// needs them and they are not given.
pub fn resolve_params(p: &ModelParams, level: DynamicsLevel) -> Result<ModelParams, HarnessError> {
    let mut p = p.clone();
    let needs = matches!(
        level,
        DynamicsLevel::EngineeredDecay
            | DynamicsLevel::EffectiveJump
            | DynamicsLevel::FullWithAncilla
            | DynamicsLevel::RateModel
    );
    if needs && p.kappa_eng().is_none() {
        let opt = ctx("analytic optimum", analytic_optimum(p.gamma, p.g_sideband, 2.5, Regime::LongTime))?;
        log::info!(
            "kappa_eng and omega not given; using the analytic optimum {} and {}",
            opt.kappa_eng,
            opt.omega
        );
        p.kappa_eng = Some(opt.kappa_eng);
        p.omega = opt.omega;
    }
    if level == DynamicsLevel::FullWithAncilla && p.kappa == 0.0 {
        let k = 20.0 * p.kappa_eng.unwrap_or(1.0);
        log::info!("ancilla cooling rate not given; using kappa = {k}");
        p.kappa = k;
    }
    if level == DynamicsLevel::IdealJump && p.gamma_corr == 0.0 && p.kappa_eng().is_some() {
        p.gamma_corr = ctx("effective rates", EffectiveRates::from_params(&p))?.gamma_corr();
    }
    Ok(p)
}

/// Codeword fidelity and populations over `times` for one backend.
pub(crate) fn codeword_series(
    p: &ModelParams,
    spec: &BackendSpec,
    times: &[f64],
    cfg: &ScenarioConfig,
) -> Result<(Vec<f64>, Vec<Column>, Option<EffectiveRates>), HarnessError> {
    let context = format!("{} evolution", spec.level);
    let backend = ctx(&context, Backend::new(spec, p))?;
    let (c0, c1) = default_codeword();
    let psi = ctx(&context, backend.system.codeword(c0, c1))?;
    let probes = ctx(&context, backend.system.population_probes(&psi))?;
    let res = ctx(
        &context,
        evolve_with(&backend.model, &psi.projector(), times, &cfg.integrator, &probes),
    )?;
    let factor = backend.fidelity_factor();
    let fid = res.fidelity.iter().map(|f| f * factor).collect();
    let cols = res
        .observables
        .into_iter()
        .map(|(n, v)| col(n, v))
        .collect();
    Ok((fid, cols, backend.rates))
}

pub(crate) fn single_qubit_series(gamma: f64, times: &[f64], cfg: &ScenarioConfig) -> Result<Vec<f64>, HarnessError> {
    let (m, psi) = ctx("single-qubit reference", single_qubit_reference(gamma))?;
    Ok(ctx("single-qubit reference", evolve(&m, &psi.projector(), times, &cfg.integrator))?.fidelity)
}

pub(crate) fn rate_params_for(p: &ModelParams, cfg: &ScenarioConfig) -> Result<RateParams, HarnessError> {
    if let Some(r) = cfg.rates {
        return Ok(r);
    }
    let rates = ctx(
        "effective rates",
        EffectiveRates::with_options(p, &cfg.backend.effective),
    )?;
    Ok(derive_rates(p.gamma, &rates))
}

fn simulate(cfg: &ScenarioConfig) -> Result<Output, HarnessError> {
    let level = cfg.backend.level;
    let times = cfg.times.points();
    if level == DynamicsLevel::RateModel {
        return rates(cfg);
    }
    let p = resolve_params(&cfg.params, level)?;
    let (fid, pops, eff) = codeword_series(&p, &cfg.backend, &times, cfg)?;
    let mut cols = vec![col("t", times), col("fidelity", fid)];
    cols.extend(pops);
    let mut scalars = vec![
        ("kappa_eng".into(), p.kappa_eng().unwrap_or(0.0)),
        ("omega".into(), p.omega),
    ];
    if let Some(r) = eff {
        for (n, k) in r.kappa_eff.iter().enumerate() {
            scalars.push((format!("kappa_eff_{}", n + 1), *k));
        }
        scalars.push(("f_e".into(), r.f_e));
    }
    Ok((cols, scalars))
}

fn optimize(cfg: &ScenarioConfig) -> Result<Output, HarnessError> {
    let level = cfg.backend.level;
    let mut search = cfg.search.clone();
    search.truncation = cfg.backend.truncation;
    search.effective = cfg.backend.effective;
    let num = ctx("numeric optimization", numeric_optimum(&cfg.params, cfg.t_star, level, &search))?;
    let p = &cfg.params;
    let r = cfg.backend.effective.r;
    let long = ctx("analytic optimum", analytic_optimum(p.gamma, p.g_sideband, r, Regime::LongTime))?;
    let short = ctx("analytic optimum", analytic_optimum(p.gamma, p.g_sideband, r, Regime::ShortTime))?;
    let unit = (p.gamma * p.g_sideband * p.g_sideband).cbrt();
    let row = |name: &str, v: f64| col(name, vec![v]);
    let cols = vec![
        row("kappa_eng", num.kappa_eng),
        row("omega", num.omega),
        row("kappa_eng_over_unit", num.kappa_eng / unit),
        row("omega_over_kappa_eng", num.omega / num.kappa_eng),
        row("fidelity", num.fidelity.unwrap_or(f64::NAN)),
        row("alpha", num.alpha),
        row("e0", num.e0),
        row("gamma_eff", num.gamma_eff),
        row("evaluations", num.evaluations as f64),
        row("analytic_long_kappa_eng", long.kappa_eng),
        row("analytic_long_omega", long.omega),
        row("analytic_long_beta_e", long.beta_e),
        row("analytic_long_beta_gamma", long.beta_gamma),
        row("analytic_short_kappa_eng", short.kappa_eng),
        row("analytic_short_omega", short.omega),
        row("analytic_short_beta_e", short.beta_e),
        row("analytic_short_beta_gamma", short.beta_gamma),
    ];
    Ok((cols, vec![]))
}

/// Normalized sensitivity, or +∞ where the fringe slope is not resolved.
pub(crate) fn sensitivity_or_inf(rc: &RamseyConfig, tau: f64) -> Result<f64, HarnessError> {
    match sensitivity(rc, tau) {
        Ok(s) => Ok(s.sensitivity),
        Err(Error::DegenerateOperatingPoint(_)) => Ok(f64::INFINITY),
        Err(e) => ctx("sensitivity", Err(e)),
    }
}

fn ramsey(cfg: &ScenarioConfig) -> Result<Output, HarnessError> {
    let level = cfg.backend.level;
    let p = resolve_params(&cfg.params, level)?;
    let rc = RamseyConfig {
        backend: cfg.backend,
        params: p.clone(),
        ..Default::default()
    };
    let taus = cfg.taus.points();
    if p.signal != 0.0 {
        let p1 = par_map(&taus, |&t| ctx("ramsey", ramsey_run(&rc, t, p.signal)))?;
        return Ok((vec![col("tau_R", taus), col("p1", p1)], vec![("omega".into(), p.signal)]));
    }
    let pts = par_map(&taus, |&t| match sensitivity(&rc, t) {
        Ok(s) => Ok((s.omega, s.p1, s.slope, s.sensitivity)),
        Err(Error::DegenerateOperatingPoint(d)) => {
            let omega = crate::metrology::operating_point(rc.n_probe, t);
            Ok((omega, ctx("ramsey", ramsey_run(&rc, t, omega))?, d, f64::INFINITY))
        }
        Err(e) => ctx("sensitivity", Err(e)),
    })?;
    Ok((
        vec![
            col("tau_R", taus),
            col("omega", pts.iter().map(|x| x.0).collect()),
            col("p1", pts.iter().map(|x| x.1).collect()),
            col("slope", pts.iter().map(|x| x.2).collect()),
            col("sensitivity", pts.iter().map(|x| x.3).collect()),
        ],
        vec![],
    ))
}

fn rates(cfg: &ScenarioConfig) -> Result<Output, HarnessError> {
    let times = cfg.times.points();
    let rp = if cfg.rates.is_some() {
        rate_params_for(&cfg.params, cfg)?
    } else {
        rate_params_for(&resolve_params(&cfg.params, DynamicsLevel::RateModel)?, cfg)?
    };
    let sol = if cfg.back_flow {
        ctx("rate model", solve_rate_model_numeric(&rp, &times, true))?
    } else {
        ctx("rate model", solve_rate_model(&rp, &times))?
    };
    let scalars = vec![
        ("gamma_err".into(), rp.gamma_err),
        ("gamma_corr".into(), rp.gamma_corr),
        ("gamma_leak".into(), rp.gamma_leak),
        ("e0".into(), sol.e0),
        ("gamma_f".into(), sol.gamma_f),
        ("gamma_s".into(), sol.gamma_s),
        ("gamma_eff".into(), sol.gamma_eff),
    ];
    Ok((
        vec![
            col("t", times),
            col("P_l", sol.p_l),
            col("P_c", sol.p_c),
            col("P_u", sol.p_u),
        ],
        scalars,
    ))
}

fn compare(cfg: &ScenarioConfig) -> Result<Output, HarnessError> {
    let times = cfg.times.points();
    let p = resolve_params(&cfg.params, DynamicsLevel::EngineeredDecay)?;
    let spec = |level| BackendSpec { level, ..cfg.backend };
    let (full, _, _) = codeword_series(&p, &spec(DynamicsLevel::EngineeredDecay), &times, cfg)?;
    let (eff, _, rates) = codeword_series(&p, &spec(DynamicsLevel::EffectiveJump), &times, cfg)?;
    let ideal_p = resolve_params(&p, DynamicsLevel::IdealJump)?;
    let (ideal, _, _) = codeword_series(&ideal_p, &spec(DynamicsLevel::IdealJump), &times, cfg)?;
    let (unc, _, _) = codeword_series(&p, &spec(DynamicsLevel::Uncorrected), &times, cfg)?;
    let rp = rate_params_for(&p, cfg)?;
    let rate = ctx("rate model", solve_rate_model(&rp, &times))?.p_l;
    let single = single_qubit_series(p.gamma, &times, cfg)?;
    let f_e = rates.map_or(0.0, |r| r.f_e);
    Ok((
        vec![
            col("t", times),
            col("fidelity_full", full),
            col("fidelity_effective", eff),
            col("fidelity_ideal", ideal),
            col("fidelity_rate", rate),
            col("fidelity_uncorrected", unc),
            col("fidelity_single_qubit", single),
        ],
        vec![
            ("kappa_eng".into(), p.kappa_eng().unwrap_or(0.0)),
            ("omega".into(), p.omega),
            ("gamma_corr".into(), ideal_p.gamma_corr),
            ("f_e".into(), f_e),
        ],
    ))
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ResultRecord, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let (columns, scalars) = match cfg.scenario {
        Scenario::Simulate => simulate(cfg)?,
        Scenario::Optimize => optimize(cfg)?,
        Scenario::Ramsey => ramsey(cfg)?,
        Scenario::Rates => rates(cfg)?,
        Scenario::Compare => compare(cfg)?,
        Scenario::Preset(p) => presets::run(p, cfg)?,
    };
    if let Some(c) = columns.iter().find(|c| c.values.len() != columns[0].values.len()) {
        return Err(HarnessError::Output(format!("column `{}` has a different length", c.name)));
    }
    Ok(ResultRecord {
        scenario: cfg.scenario.to_string(),
        config: cfg.clone(),
        columns,
        scalars,
        metadata: Metadata {
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: cfg.hash(),
            wall_clock_s: start.elapsed().as_secs_f64(),
        },
    })
}
