//! Figure presets. Each returns the columns of one figure; grids are fixed so
//! that outputs are comparable across runs.

use super::{
    codeword_series, col, ctx, par_map, rate_params_for, resolve_params, sensitivity_or_inf,
    single_qubit_series, HarnessError, Output, Preset, ScenarioConfig,
};
use crate::backend::BackendSpec;
use crate::effective::EffectiveRates;
use crate::metrology::{envelope_complementary, ramsey_run, RamseyConfig};
use crate::model::{DynamicsLevel, ModelParams};
use crate::optimize::numeric_optimum;
use crate::rates::solve_rate_model;

/// Sideband couplings of the coupling-strength comparison.
pub const FIG8_COUPLINGS: [f64; 5] = [500.0, 1000.0, 2500.0, 5000.0, 10000.0];
/// Individual dephasing rate of the dephasing comparison.
pub const FIG6_GAMMA_Z: f64 = 1.0 / 50.0;
/// Collective dephasing rate of the dephasing metrology comparison.
pub const FIG9_GAMMA_COLLECTIVE_Z: f64 = 1.0 / 100.0;
/// Signal frequency of the fringe preset.
pub const FIG1_OMEGA: f64 = 2.0;

pub fn run(p: Preset, cfg: &ScenarioConfig) -> Result<Output, HarnessError> {
    match p {
        Preset::Fig1 => fig1(cfg),
        Preset::Fig5 => fig5(cfg),
        Preset::Fig6 => fig6(cfg),
        Preset::Fig7 => fig7(cfg),
        Preset::Fig8 => fig8(cfg),
        Preset::Fig9 => fig9(cfg),
    }
}

/// Fidelity-curve grid: t = k/20 for k = 0..=40.
pub fn curve_times() -> Vec<f64> {
    (0..=40).map(|k| k as f64 / 20.0).collect()
}

/// Waiting times of the sensitivity presets: 41 points log-spaced over
/// [1e-2, 1e2].
pub fn sensitivity_taus() -> Vec<f64> {
    (0..=40).map(|k| 10f64.powf(-2.0 + k as f64 / 10.0)).collect()
}

/// κ_eng and Ω of `cfg.params` when both are given for this coupling,
/// otherwise the numeric optimum at `cfg.t_star` on `level`.
pub fn optimum_params(cfg: &ScenarioConfig, g: f64, level: DynamicsLevel) -> Result<ModelParams, HarnessError> {
    let base = ModelParams {
        g_sideband: g,
        ..cfg.params.clone()
    };
    if base.kappa_eng().is_some() && base.omega > 0.0 && g == cfg.params.g_sideband {
        return Ok(base);
    }
    let mut search = cfg.search.clone();
    search.truncation = cfg.backend.truncation;
    search.effective = cfg.backend.effective;
    let opt = ctx("numeric optimization", numeric_optimum(&base, cfg.t_star, level, &search))?;
    log::info!(
        "G = {g}: optimum kappa_eng = {}, omega = {}, F = {:?}",
        opt.kappa_eng,
        opt.omega,
        opt.fidelity
    );
    Ok(ModelParams {
        kappa_eng: Some(opt.kappa_eng),
        omega: opt.omega,
        ..base
    })
}

fn spec(cfg: &ScenarioConfig, level: DynamicsLevel) -> BackendSpec {
    BackendSpec { level, ..cfg.backend }
}

fn optimum_scalars(p: &ModelParams) -> Vec<(String, f64)> {
    let k = p.kappa_eng().unwrap_or(0.0);
    let unit = (p.gamma * p.g_sideband * p.g_sideband).cbrt();
    vec![
        ("kappa_eng".into(), k),
        ("omega".into(), p.omega),
        ("kappa_eng_over_unit".into(), k / unit),
        ("omega_over_kappa_eng".into(), p.omega / k),
    ]
}

fn ramsey_config(cfg: &ScenarioConfig, level: DynamicsLevel, params: ModelParams) -> RamseyConfig {
    RamseyConfig {
        backend: spec(cfg, level),
        params,
        ..Default::default()
    }
}

fn fig1(cfg: &ScenarioConfig) -> Result<Output, HarnessError> {
    let taus: Vec<f64> = (0..=80).map(|k| k as f64 / 80.0 * 4.0 * std::f64::consts::PI / 6.0).collect();
    let g = cfg.params.g_sideband;
    let noiseless = ramsey_config(
        cfg,
        DynamicsLevel::Uncorrected,
        ModelParams {
            gamma: 0.0,
            ..cfg.params.clone()
        },
    );
    let no_ec = ramsey_config(cfg, DynamicsLevel::Uncorrected, cfg.params.clone());
    let ec_params = resolve_params(&optimum_params(cfg, g, DynamicsLevel::EffectiveJump)?, cfg.ec_level)?;
    let ec = ramsey_config(cfg, cfg.ec_level, ec_params);
    let fringe = |rc: &RamseyConfig| par_map(&taus, |&t| ctx("ramsey", ramsey_run(rc, t, FIG1_OMEGA)));
    Ok((
        vec![
            col("tau_R", taus.clone()),
            col("p1_noiseless", fringe(&noiseless)?),
            col("p1_no_ec", fringe(&no_ec)?),
            col("p1_ec", fringe(&ec)?),
        ],
        vec![("omega".into(), FIG1_OMEGA)],
    ))
}

fn fig5(cfg: &ScenarioConfig) -> Result<Output, HarnessError> {
    let times = curve_times();
    let p = optimum_params(cfg, cfg.params.g_sideband, DynamicsLevel::EngineeredDecay)?;
    let (full, _, _) = codeword_series(&p, &spec(cfg, DynamicsLevel::EngineeredDecay), &times, cfg)?;
    let (eff, _, rates) = codeword_series(&p, &spec(cfg, DynamicsLevel::EffectiveJump), &times, cfg)?;
    let rate = ctx("rate model", solve_rate_model(&rate_params_for(&p, cfg)?, &times))?.p_l;
    let single = single_qubit_series(p.gamma, &times, cfg)?;
    let mut scalars = optimum_scalars(&p);
    scalars.push(("f_e".into(), rates.map_or(0.0, |r| r.f_e)));
    Ok((
        vec![
            col("t", times),
            col("fidelity_full", full),
            col("fidelity_effective", eff),
            col("fidelity_rate", rate),
            col("fidelity_single_qubit", single),
        ],
        scalars,
    ))
}

fn fig6(cfg: &ScenarioConfig) -> Result<Output, HarnessError> {
    let times = curve_times();
    let p = optimum_params(cfg, cfg.params.g_sideband, DynamicsLevel::EffectiveJump)?;
    let full = spec(cfg, DynamicsLevel::EngineeredDecay);
    let (clean, _, _) = codeword_series(&p, &full, &times, cfg)?;
    let dephased_p = ModelParams {
        gamma_z: FIG6_GAMMA_Z,
        ..p.clone()
    };
    let (dephased, _, _) = codeword_series(&dephased_p, &full, &times, cfg)?;
    let envelope = clean
        .iter()
        .zip(&times)
        .map(|(&f, &t)| envelope_complementary(f, FIG6_GAMMA_Z, 0.0, t))
        .collect();
    let mut scalars = optimum_scalars(&p);
    scalars.push(("gamma_z".into(), FIG6_GAMMA_Z));
    Ok((
        vec![
            col("t", times),
            col("F_no_dephasing", clean),
            col("F_dephasing", dephased),
            col("F_envelope", envelope),
        ],
        scalars,
    ))
}

fn sweep(rc: &RamseyConfig, taus: &[f64]) -> Result<Vec<f64>, HarnessError> {
    par_map(taus, |&t| sensitivity_or_inf(rc, t))
}

fn fig7(cfg: &ScenarioConfig) -> Result<Output, HarnessError> {
    let taus = sensitivity_taus();
    let p = optimum_params(cfg, cfg.params.g_sideband, DynamicsLevel::EffectiveJump)?;
    let rates = ctx("effective rates", EffectiveRates::with_options(&p, &cfg.backend.effective))?;
    let ideal_p = ModelParams {
        gamma_corr: rates.kappa_eff[0],
        ..p.clone()
    };
    let noiseless = ModelParams {
        gamma: 0.0,
        ..cfg.params.clone()
    };
    let no_ec = sweep(&ramsey_config(cfg, DynamicsLevel::Uncorrected, p.clone()), &taus)?;
    let ideal = sweep(&ramsey_config(cfg, DynamicsLevel::IdealJump, ideal_p), &taus)?;
    let eff = sweep(&ramsey_config(cfg, cfg.ec_level, p.clone()), &taus)?;
    let clean = sweep(&ramsey_config(cfg, DynamicsLevel::Uncorrected, noiseless), &taus)?;
    let mut scalars = optimum_scalars(&p);
    scalars.push(("gamma_corr".into(), rates.kappa_eff[0]));
    Ok((
        vec![
            col("tau_R", taus),
            col("dw_no_ec", no_ec),
            col("dw_ideal", ideal),
            col("dw_effective", eff),
            col("dw_no_noise", clean),
        ],
        scalars,
    ))
}

fn fig8(cfg: &ScenarioConfig) -> Result<Output, HarnessError> {
    let times = curve_times();
    let mut cols = vec![col("t", times.clone())];
    let mut scalars = Vec::new();
    for g in FIG8_COUPLINGS {
        let p = optimum_params(cfg, g, DynamicsLevel::EffectiveJump)?;
        let (full, _, _) = codeword_series(&p, &spec(cfg, DynamicsLevel::EngineeredDecay), &times, cfg)?;
        let (eff, _, _) = codeword_series(&p, &spec(cfg, DynamicsLevel::EffectiveJump), &times, cfg)?;
        cols.push(col(format!("F_G{g}_full"), full));
        cols.push(col(format!("F_G{g}_effective"), eff));
        scalars.push((format!("kappa_eng_G{g}"), p.kappa_eng().unwrap_or(0.0)));
        scalars.push((format!("omega_G{g}"), p.omega));
    }
    cols.push(col("F_single", single_qubit_series(cfg.params.gamma, &times, cfg)?));
    Ok((cols, scalars))
}

fn fig9(cfg: &ScenarioConfig) -> Result<Output, HarnessError> {
    let taus = sensitivity_taus();
    let p = optimum_params(cfg, cfg.params.g_sideband, DynamicsLevel::EffectiveJump)?;
    let dephased = ModelParams {
        gamma_collective_z: FIG9_GAMMA_COLLECTIVE_Z,
        ..p.clone()
    };
    let noiseless = ModelParams {
        gamma: 0.0,
        ..cfg.params.clone()
    };
    let no_ec = sweep(&ramsey_config(cfg, DynamicsLevel::Uncorrected, dephased.clone()), &taus)?;
    let eff = sweep(&ramsey_config(cfg, cfg.ec_level, dephased), &taus)?;
    let no_ec0 = sweep(&ramsey_config(cfg, DynamicsLevel::Uncorrected, p.clone()), &taus)?;
    let eff0 = sweep(&ramsey_config(cfg, cfg.ec_level, p.clone()), &taus)?;
    let clean = sweep(&ramsey_config(cfg, DynamicsLevel::Uncorrected, noiseless), &taus)?;
    let mut scalars = optimum_scalars(&p);
    scalars.push(("gamma_collective_z".into(), FIG9_GAMMA_COLLECTIVE_Z));
    Ok((
        vec![
            col("tau_R", taus),
            col("dw_no_ec", no_ec),
            col("dw_effective", eff),
            col("dw_no_ec_no_dephasing", no_ec0),
            col("dw_effective_no_dephasing", eff0),
            col("dw_no_noise", clean),
        ],
        scalars,
    ))
}
