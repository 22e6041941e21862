//! WebAssembly bindings for the browser demo. Every exported function returns
//! a flat `Float64Array` holding equal-length columns back to back: the
//! abscissa first, then one column per curve.

use aqec::backend::{Backend, BackendSpec};
use aqec::effective::{EffectiveRates, DEFAULT_R};
use aqec::lindblad::{evolve, IntegratorConfig};
use aqec::metrology::{ramsey_run, sensitivity, RamseyConfig};
use aqec::model::{DynamicsLevel, ModelParams};
use aqec::optimize::{analytic_optimum, default_codeword, Regime};
use aqec::rates::{derive_rates, solve_rate_model};
use aqec::Error;
use wasm_bindgen::prelude::*;

/// Correction parameters at the long-time analytic optimum for coupling `g`.
pub fn optimum_params(g: f64) -> aqec::Result<ModelParams> {
    let opt = analytic_optimum(1.0, g, DEFAULT_R, Regime::LongTime)?;
    Ok(ModelParams::engineered(1.0, g, opt.kappa_eng, opt.omega))
}

fn grid(start: f64, stop: f64, n: usize, log: bool) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = if n > 1 { k as f64 / (n - 1) as f64 } else { 0.0 };
            if log {
                (start.ln() + s * (stop.ln() - start.ln())).exp()
            } else {
                start + s * (stop - start)
            }
        })
        .collect()
}

fn invalid(name: &str, reason: &str) -> Error {
    Error::InvalidParameter {
        name: name.into(),
        reason: reason.into(),
    }
}

fn check_n(n: usize) -> aqec::Result<()> {
    if !(2..=400).contains(&n) {
        return Err(invalid("n", "must be between 2 and 400"));
    }
    Ok(())
}

fn ramsey(level: DynamicsLevel, params: ModelParams) -> RamseyConfig {
    let mut rc = RamseyConfig::new(level, params);
    rc.integrator = IntegratorConfig::default().with_tolerances(1e-8, 1e-10);
    rc
}

/// τ, P₁ without noise, P₁ with bit flips, P₁ with effective correction.
pub fn fringe_columns(g: f64, omega: f64, tau_max: f64, n: usize) -> aqec::Result<Vec<Vec<f64>>> {
    check_n(n)?;
    if !(tau_max > 0.0) {
        return Err(invalid("tau_max", "must be positive"));
    }
    let taus = grid(0.0, tau_max, n, false);
    let clean = ramsey(DynamicsLevel::Uncorrected, ModelParams { gamma: 0.0, ..Default::default() });
    let noisy = ramsey(DynamicsLevel::Uncorrected, ModelParams::default());
    let ec = ramsey(DynamicsLevel::EffectiveJump, optimum_params(g)?);
    let mut cols = vec![taus.clone()];
    for rc in [&clean, &noisy, &ec] {
        cols.push(taus.iter().map(|&t| ramsey_run(rc, t, omega)).collect::<aqec::Result<_>>()?);
    }
    Ok(cols)
}

/// t, codeword fidelity on the effective level, rate-model P_l, single qubit.
pub fn fidelity_columns(g: f64, t_max: f64, n: usize) -> aqec::Result<Vec<Vec<f64>>> {
    check_n(n)?;
    if !(t_max > 0.0) {
        return Err(invalid("t_max", "must be positive"));
    }
    let times = grid(0.0, t_max, n, false);
    let p = optimum_params(g)?;
    let backend = Backend::new(&BackendSpec::new(DynamicsLevel::EffectiveJump), &p)?;
    let (c0, c1) = default_codeword();
    let psi = backend.system.codeword(c0, c1)?;
    let cfg = IntegratorConfig::default().with_tolerances(1e-8, 1e-10);
    let res = evolve(&backend.model, &psi.projector(), &times, &cfg)?;
    let factor = backend.fidelity_factor();
    let eff = res.fidelity.iter().map(|f| f * factor).collect();
    let rates = derive_rates(p.gamma, &EffectiveRates::from_params(&p)?);
    let rate = solve_rate_model(&rates, &times)?.p_l;
    let single = times.iter().map(|t| 0.5 * (1.0 + (-2.0 * t).exp())).collect();
    Ok(vec![times, eff, rate, single])
}

/// τ (log-spaced over [0.01, 100]), |δω|√T without correction, with effective
/// correction and without noise. Unresolved slopes give +∞.
pub fn sensitivity_columns(g: f64, n: usize) -> aqec::Result<Vec<Vec<f64>>> {
    check_n(n)?;
    let taus = grid(1e-2, 1e2, n, true);
    let p = optimum_params(g)?;
    let configs = [
        ramsey(DynamicsLevel::Uncorrected, ModelParams::default()),
        ramsey(DynamicsLevel::EffectiveJump, p),
        ramsey(DynamicsLevel::Uncorrected, ModelParams { gamma: 0.0, ..Default::default() }),
    ];
    let mut cols = vec![taus.clone()];
    for rc in &configs {
        let mut col = Vec::with_capacity(n);
        for &t in &taus {
            col.push(match sensitivity(rc, t) {
                Ok(s) => s.sensitivity,
                Err(Error::DegenerateOperatingPoint(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            });
        }
        cols.push(col);
    }
    Ok(cols)
}

fn flat(r: aqec::Result<Vec<Vec<f64>>>) -> Result<Vec<f64>, String> {
    r.map(|c| c.concat()).map_err(|e| e.to_string())
}

/// Ramsey fringes at signal frequency `omega`: 4 columns of `n` values.
#[wasm_bindgen]
pub fn ramsey_fringes(g: f64, omega: f64, tau_max: f64, n: usize) -> Result<Vec<f64>, String> {
    flat(fringe_columns(g, omega, tau_max, n))
}

/// Codeword fidelity curves: 4 columns of `n` values.
#[wasm_bindgen]
pub fn fidelity_curves(g: f64, t_max: f64, n: usize) -> Result<Vec<f64>, String> {
    flat(fidelity_columns(g, t_max, n))
}

/// Normalized sensitivity curves: 4 columns of `n` values.
#[wasm_bindgen]
pub fn sensitivity_curves(g: f64, n: usize) -> Result<Vec<f64>, String> {
    flat(sensitivity_columns(g, n))
}
