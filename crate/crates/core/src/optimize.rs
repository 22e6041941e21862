//! Optimal engineered cooling rate κ_eng and drive Ω.
//!
//! The analytic optimum follows from the ansatz κ_eng Ω² = αΓG² with α the
//! positive root of `(2 + 5τ)α² + 8(5τ − 1)α − 64(τ + 1) = 0`, where τ is the
//! target time in units of the effective lifetime. The numeric optimum
//! maximizes the simulated codeword fidelity at a target time.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendSpec};
use crate::effective::{EffectiveOptions, EffectiveRates};
use crate::error::{Error, Result};
use crate::lindblad::{evolve, IntegratorConfig};
use crate::model::{DynamicsLevel, ModelParams, Truncation};
use crate::rates::{derive_rates, hockey_stick_summary};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// τ → ∞.
    LongTime,
    /// τ → 0.
    ShortTime,
    Finite(f64),
}

impl Regime {
    pub fn tau(self) -> f64 {
        match self {
            Regime::LongTime => f64::INFINITY,
            Regime::ShortTime => 0.0,
            Regime::Finite(t) => t,
        }
    }
}

/// Positive root of the α quadratic; the τ → ∞ limit is 4(3√5 − 5)/5.
pub fn alpha_of_tau(tau: f64) -> Result<f64> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::param("tau", "must be >= 0"));
    }
    let (a, b, c) = if tau.is_infinite() {
        (5.0, 40.0, -64.0)
    } else {
        (2.0 + 5.0 * tau, 8.0 * (5.0 * tau - 1.0), -64.0 * (tau + 1.0))
    };
    // c < 0 < a, so exactly one root is positive; this form avoids cancellation.
    let disc = (b * b - 4.0 * a * c).sqrt();
    Ok(if b >= 0.0 {
        2.0 * c / (-b - disc)
    } else {
        (-b + disc) / (2.0 * a)
    })
}

fn beta_common(alpha: f64, r: f64) -> f64 {
    (r * r / (4.0 * alpha)).cbrt()
}

/// Coefficient of (Γ/G)^{2/3} in the static error.
pub fn beta_e(alpha: f64, r: f64) -> f64 {
    9.0 / 16.0 * (16.0 + alpha) * beta_common(alpha, r)
}

/// Coefficient of (Γ/G)^{2/3}Γ in the effective decay rate.
pub fn beta_gamma(alpha: f64, r: f64) -> f64 {
    9.0 / 32.0 * (16.0 + alpha) * (4.0 + alpha) * beta_common(alpha, r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub kappa_eng: f64,
    pub omega: f64,
    /// κ_eng Ω² / (ΓG²).
    pub alpha: f64,
    pub regime: Option<Regime>,
    pub e0: f64,
    pub gamma_eff: f64,
    pub beta_e: f64,
    pub beta_gamma: f64,
    /// Achieved F(t*) for numeric searches.
    pub fidelity: Option<f64>,
    pub evaluations: usize,
}

pub fn analytic_optimum(gamma: f64, g: f64, r: f64, regime: Regime) -> Result<OptimizationResult> {
    if !(gamma > 0.0) || !(g > 0.0) {
        return Err(Error::param("gamma/g", "must be positive"));
    }
    if !(r > 0.0) {
        return Err(Error::param("r", "must be positive"));
    }
    if g / gamma < 100.0 {
        log::warn!("G/Γ = {} is outside the regime G ≫ Γ of the analytic optimum", g / gamma);
    }
    let alpha = alpha_of_tau(regime.tau())?;
    let kappa = (r * alpha / 2.0 * gamma * g * g).cbrt();
    let x = (gamma / g).powf(2.0 / 3.0);
    let (be, bg) = (beta_e(alpha, r), beta_gamma(alpha, r));
    Ok(OptimizationResult {
        kappa_eng: kappa,
        omega: (2.0 / r).sqrt() * kappa,
        alpha,
        regime: Some(regime),
        e0: be * x,
        gamma_eff: bg * x * gamma,
        beta_e: be,
        beta_gamma: bg,
        fidelity: None,
        evaluations: 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// κ_eng range in units of ∛(ΓG²).
    pub kappa_range: (f64, f64),
    /// Ω/κ_eng range.
    pub ratio_range: (f64, f64),
    pub grid: (usize, usize),
    pub max_iterations: usize,
    /// Refinement stops once the log-space step falls below this.
    pub min_log_step: f64,
    pub integrator: IntegratorConfig,
    pub truncation: Truncation,
    pub effective: EffectiveOptions,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            kappa_range: (0.1, 10.0),
            ratio_range: (0.2, 2.0),
            grid: (12, 12),
            max_iterations: 40,
            min_log_step: 5e-3,
            integrator: IntegratorConfig::default().with_tolerances(1e-7, 1e-9),
            truncation: Truncation::default(),
            effective: EffectiveOptions::default(),
        }
    }
}

/// (|000⟩ + i|111⟩)/√2 amplitudes.
pub fn default_codeword() -> (C64, C64) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    (C64::new(h, 0.0), C64::new(0.0, h))
}

/// Codeword fidelity at `t_star` (times (1 − f_e) on the effective level).
pub fn fidelity_at(
    params: &ModelParams,
    spec: &BackendSpec,
    t_star: f64,
    integrator: &IntegratorConfig,
) -> Result<f64> {
    let backend = Backend::new(spec, params)?;
    let (c0, c1) = default_codeword();
    let psi = backend.system.codeword(c0, c1)?;
    let res = evolve(&backend.model, &psi.projector(), &[0.0, t_star], integrator)?;
    Ok(res.fidelity[1] * backend.fidelity_factor())
}

fn point_params(base: &ModelParams, kappa: f64, omega: f64) -> ModelParams {
    ModelParams {
        kappa_eng: Some(kappa),
        omega,
        g_ancilla: 0.0,
        ..base.clone()
    }
}

/// Grid search over (κ_eng, Ω) followed by coordinate descent with parabolic
/// steps in (ln κ_eng, ln Ω/κ_eng). Deterministic; ties go to the
/// lexicographically smallest (κ_eng, Ω).
pub fn numeric_optimum(
    base: &ModelParams,
    t_star: f64,
    level: DynamicsLevel,
    cfg: &SearchConfig,
) -> Result<OptimizationResult> {
    if !matches!(level, DynamicsLevel::EngineeredDecay | DynamicsLevel::EffectiveJump) {
        return Err(Error::UnsupportedLevel("numeric optimization", level.to_string()));
    }
    if !(t_star > 0.0) {
        return Err(Error::param("t_star", "must be positive"));
    }
    base.validate()?;
    let (gamma, g) = (base.gamma, base.g_sideband);
    if !(gamma > 0.0) || !(g > 0.0) {
        return Err(Error::param("gamma/g_sideband", "must be positive"));
    }
    let (nk, nr) = cfg.grid;
    if nk < 2 || nr < 2 {
        return Err(Error::param("grid", "needs at least 2 points per axis"));
    }
    let spec = BackendSpec {
        level,
        variant: crate::model::CodeVariant::BitFlipIndividual,
        truncation: cfg.truncation,
        effective: cfg.effective,
    };
    let scale = (gamma * g * g).cbrt();
    let eval = |x: f64, y: f64| -> Result<f64> {
        let kappa = x.exp();
        let omega = (x + y).exp();
        fidelity_at(&point_params(base, kappa, omega), &spec, t_star, &cfg.integrator).map_err(|e| {
            Error::Evaluation {
                kappa_eng: kappa,
                omega,
                source: Box::new(e),
            }
        })
    };

    let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n)
            .map(|i| lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let xs: Vec<f64> = axis(cfg.kappa_range.0 * scale, cfg.kappa_range.1 * scale, nk);
    let ys: Vec<f64> = axis(cfg.ratio_range.0, cfg.ratio_range.1, nr);
    let mut points: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let guess = analytic_optimum(gamma, g, cfg.effective.r, Regime::LongTime)?;
    points.push((guess.kappa_eng.ln(), (guess.omega / guess.kappa_eng).ln()));

    #[cfg(feature = "parallel")]
    let values: Vec<Result<f64>> = {
        use rayon::prelude::*;
        points.par_iter().map(|&(x, y)| eval(x, y)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<Result<f64>> = points.iter().map(|&(x, y)| eval(x, y)).collect();

    // Keyed by the bit patterns of (x, y) so that repeated points are reused.
    let mut cache: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for (&(x, y), v) in points.iter().zip(values) {
        let v = v?;
        cache.insert((x.to_bits(), y.to_bits()), v);
        best = better(best, (v, x, y));
    }
    let mut evaluations = points.len();
    let mut lookup = |x: f64, y: f64, n: &mut usize| -> Result<f64> {
        if let Some(v) = cache.get(&(x.to_bits(), y.to_bits())) {
            return Ok(*v);
        }
        *n += 1;
        let v = eval(x, y)?;
        cache.insert((x.to_bits(), y.to_bits()), v);
        Ok(v)
    };

    let mut h = [xs[1] - xs[0], ys[1] - ys[0]];
    for _ in 0..cfg.max_iterations {
        if h[0].max(h[1]) < cfg.min_log_step {
            break;
        }
        let mut moved = false;
        for axis in 0..2 {
            let (f0, x0, y0) = best;
            let at = |d: f64| if axis == 0 { (x0 + d, y0) } else { (x0, y0 + d) };
            let s = h[axis];
            let (xm, ym) = at(-s);
            let (xp, yp) = at(s);
            let fm = lookup(xm, ym, &mut evaluations)?;
            let fp = lookup(xp, yp, &mut evaluations)?;
            let mut cand = better(better(best, (fm, xm, ym)), (fp, xp, yp));
            let curv = fm - 2.0 * f0 + fp;
            if curv < 0.0 {
                let v = (s * (fm - fp) / (2.0 * curv)).clamp(-s, s);
                if v.abs() > 1e-3 * s {
                    let (xv, yv) = at(v);
                    cand = better(cand, (lookup(xv, yv, &mut evaluations)?, xv, yv));
                }
            }
            if cand != best {
                moved = true;
                best = cand;
            }
        }
        if !moved {
            h = [h[0] / 2.0, h[1] / 2.0];
        }
    }

    let (f, x, y) = best;
    let (kappa, omega) = (x.exp(), (x + y).exp());
    let alpha = kappa * omega * omega / (gamma * g * g);
    let p = point_params(base, kappa, omega);
    let rates = EffectiveRates::with_options(&p, &cfg.effective)?;
    let (e0, gamma_eff) = hockey_stick_summary(&derive_rates(gamma, &rates))?;
    let r = cfg.effective.r;
    Ok(OptimizationResult {
        kappa_eng: kappa,
        omega,
        alpha,
        regime: None,
        e0,
        gamma_eff,
        beta_e: beta_e(alpha, r),
        beta_gamma: beta_gamma(alpha, r),
        fidelity: Some(f),
        evaluations,
    })
}

/// Higher fidelity wins; equal fidelities go to the smaller (κ_eng, Ω).
fn better(a: (f64, f64, f64), b: (f64, f64, f64)) -> (f64, f64, f64) {
    use std::cmp::Ordering::*;
    match b.0.partial_cmp(&a.0) {
        Some(Greater) => b,
        Some(Equal) => {
            let ka = (a.1, a.1 + a.2);
            let kb = (b.1, b.1 + b.2);
            if kb < ka {
                b
            } else {
                a
            }
        }
        _ => a,
    }
}
