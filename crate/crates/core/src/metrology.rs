//! Ramsey interrogation of a GHZ-encoded signal, σ^z-type signal
//! H = (ω/2) Σ σ^z_j, and the resulting frequency sensitivity.

use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendSpec};
use crate::error::{Error, Result};
use crate::lindblad::{evolve, IntegratorConfig};
use crate::model::{DynamicsLevel, ModelParams, System};
use crate::operator::{embed, ion_ops, SparseOperator};
use crate::space::Level;
use crate::state::{DensityMatrix, StateVector};
use crate::C64;

/// Threshold below which the fringe slope is treated as zero.
pub const MIN_SLOPE: f64 = 1e-12;
/// Smallest population difference across the finite-difference stencil that
/// the integrator tolerances resolve.
pub const MIN_FRINGE_DIFFERENCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseDirection {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RamseyConfig {
    pub backend: BackendSpec,
    /// Noise and correction parameters; the signal field is ignored.
    pub params: ModelParams,
    pub integrator: IntegratorConfig,
    /// Finite-difference step; defaults to 1e-4·max(ω, Γ).
    pub h_omega: Option<f64>,
    /// Number of physical probe qubits.
    pub n_probe: usize,
}

impl Default for RamseyConfig {
    fn default() -> Self {
        RamseyConfig {
            backend: BackendSpec::new(DynamicsLevel::Uncorrected),
            params: ModelParams::default(),
            integrator: IntegratorConfig::default().with_tolerances(1e-10, 1e-12),
            h_omega: None,
            n_probe: 3,
        }
    }
}

impl RamseyConfig {
    pub fn new(level: DynamicsLevel, params: ModelParams) -> Self {
        RamseyConfig {
            backend: BackendSpec::new(level),
            params,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityPoint {
    pub tau: f64,
    pub omega: f64,
    pub p1: f64,
    pub slope: f64,
    /// |δω|√T.
    pub sensitivity: f64,
}

fn logical_positions(rho: &DensityMatrix) -> Result<(usize, usize)> {
    let basis = rho.basis();
    let n = basis.space().factors().len();
    let mut d = vec![0; n];
    let p0 = basis.position_of(&d)?;
    d[..3].fill(1);
    let p1 = basis.position_of(&d)?;
    match (p0, p1) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::param("rho", "basis lacks the logical states")),
    }
}

/// Ideal π/2 rotation exp(∓i(π/4)Y_L) on span{|000⟩, |111⟩}.
pub fn ramsey_pulse(rho: &DensityMatrix, dir: PulseDirection) -> Result<DensityMatrix> {
    let (a, b) = logical_positions(rho)?;
    let (c, s) = (FRAC_PI_4.cos(), FRAC_PI_4.sin());
    let s = match dir {
        PulseDirection::Plus => s,
        PulseDirection::Minus => -s,
    };
    // |0_L⟩ → c|0_L⟩ + s|1_L⟩, |1_L⟩ → c|1_L⟩ − s|0_L⟩.
    let mut m: DMatrix<C64> = rho.matrix().clone();
    for j in 0..m.ncols() {
        let (x, y) = (m[(a, j)], m[(b, j)]);
        m[(a, j)] = x * c - y * s;
        m[(b, j)] = x * s + y * c;
    }
    for i in 0..m.nrows() {
        let (x, y) = (m[(i, a)], m[(i, b)]);
        m[(i, a)] = x * c - y * s;
        m[(i, b)] = x * s + y * c;
    }
    DensityMatrix::new_unchecked(rho.basis(), m)
}

/// |1⟩⟨1| on the first ion.
pub fn first_qubit_excited(system: &System) -> Result<SparseOperator> {
    embed(&ion_ops::projector(Level::One), 0, system.space())?.restrict(system.basis())
}

/// P₁ after pulse, free evolution for `tau` under signal `omega`, pulse.
pub fn ramsey_run(cfg: &RamseyConfig, tau: f64, omega: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::param("tau", "must be >= 0"));
    }
    let params = ModelParams {
        signal: omega,
        ..cfg.params.clone()
    };
    let backend = Backend::new(&cfg.backend, &params)?;
    let sys = &backend.system;
    let n = sys.space().factors().len();
    let start = StateVector::product(sys.basis(), &vec![0; n])?.projector();
    let rho0 = ramsey_pulse(&start, PulseDirection::Plus)?;
    let rho = if tau > 0.0 {
        evolve(&backend.model, &rho0, &[0.0, tau], &cfg.integrator)?.final_state
    } else {
        rho0
    };
    let rho = ramsey_pulse(&rho, PulseDirection::Plus)?;
    let p1 = rho.expectation(&first_qubit_excited(sys)?)?.re;
    Ok(p1.clamp(0.0, 1.0))
}

/// Signal strength at the maximal-slope fringe point, 3ωτ = π/2.
pub fn operating_point(n_probe: usize, tau: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 / (n_probe as f64 * tau)
}

/// √(P(1−P)τ)/|dP/dω|, independent of the total time T.
pub fn normalized_sensitivity(p1: f64, slope: f64, tau: f64) -> Result<f64> {
    if slope.abs() < MIN_SLOPE {
        return Err(Error::DegenerateOperatingPoint(slope));
    }
    Ok((p1 * (1.0 - p1) * tau).sqrt() / slope.abs())
}

/// |δω| for a total measurement time `total` with `total/tau` repetitions.
pub fn absolute_uncertainty(p1: f64, slope: f64, tau: f64, total: f64) -> Result<f64> {
    Ok(normalized_sensitivity(p1, slope, tau)? / total.sqrt())
}

/// Central difference; a difference below the integrator resolution counts
/// as a zero slope.
fn slope(cfg: &RamseyConfig, tau: f64, omega: f64, h: f64) -> Result<f64> {
    let dp = ramsey_run(cfg, tau, omega + h)? - ramsey_run(cfg, tau, omega - h)?;
    Ok(if dp.abs() < MIN_FRINGE_DIFFERENCE {
        0.0
    } else {
        dp / (2.0 * h)
    })
}

/// Sensitivity at ω given explicitly.
pub fn sensitivity_at(cfg: &RamseyConfig, tau: f64, omega: f64) -> Result<SensitivityPoint> {
    let h = cfg
        .h_omega
        .unwrap_or(1e-4 * omega.abs().max(cfg.params.gamma));
    if !(h > 0.0) {
        return Err(Error::param("h_omega", "must be positive"));
    }
    let p1 = ramsey_run(cfg, tau, omega)?;
    let d = slope(cfg, tau, omega, h)?;
    let d_half = slope(cfg, tau, omega, h / 2.0)?;
    if d.abs() >= MIN_SLOPE && ((d_half - d) / d).abs() > 1e-3 {
        log::warn!("finite-difference slope not converged at tau = {tau}: {d} vs {d_half}");
    }
    Ok(SensitivityPoint {
        tau,
        omega,
        p1,
        slope: d,
        sensitivity: normalized_sensitivity(p1, d, tau)?,
    })
}

/// Sensitivity at the maximal-slope operating point.
pub fn sensitivity(cfg: &RamseyConfig, tau: f64) -> Result<SensitivityPoint> {
    sensitivity_at(cfg, tau, operating_point(cfg.n_probe, tau))
}

/// F(t)·e^{−(3Γ_z + Γ_Z)t}.
pub fn envelope_complementary(f: f64, gamma_z: f64, gamma_collective_z: f64, t: f64) -> f64 {
    f * (-(3.0 * gamma_z + gamma_collective_z) * t).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    /// |δω|√T of `n_log` independent logical qubits.
    pub product_sensitivity: f64,
    pub product_exponent: f64,
    /// Exponent of N in the entangled-scheme sensitivity.
    pub entangled_n_exponent: f64,
    /// Exponent of the logical error rate in the entangled-scheme sensitivity.
    pub entangled_rate_exponent: f64,
    /// Γ_L = εΓ with ε = Γ/Γ_corr.
    pub logical_rate: f64,
}

pub fn scaling_formulas(n_log: usize, gamma: f64, gamma_corr: f64, tau: f64) -> Result<ScalingReport> {
    if n_log == 0 {
        return Err(Error::param("n_log", "must be at least 1"));
    }
    if !(tau > 0.0) {
        return Err(Error::param("tau", "must be positive"));
    }
    let logical_rate = if gamma_corr > 0.0 {
        gamma * gamma / gamma_corr
    } else {
        f64::INFINITY
    };
    Ok(ScalingReport {
        product_sensitivity: 1.0 / (3.0 * (n_log as f64 * tau).sqrt()),
        product_exponent: -0.5,
        entangled_n_exponent: -5.0 / 6.0,
        entangled_rate_exponent: 1.0 / 6.0,
        logical_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ground_system, CodeVariant};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn noiseless() -> RamseyConfig {
        RamseyConfig::new(
            DynamicsLevel::Uncorrected,
            ModelParams {
                gamma: 0.0,
                ..Default::default()
            },
        )
    }

    #[test]
    fn pulse_examples() {
        let g = ground_system(CodeVariant::BitFlipIndividual).unwrap();
        let zero = StateVector::product(g.basis(), &[0, 0, 0]).unwrap();
        let out = ramsey_pulse(&zero.projector(), PulseDirection::Plus).unwrap();
        let ghz = g.codeword(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)).unwrap();
        assert!((out.fidelity(&ghz).unwrap() - 1.0).abs() < 1e-15);
        let back = ramsey_pulse(&out, PulseDirection::Minus).unwrap();
        assert!((back.matrix() - zero.projector().matrix()).norm() < 1e-15);

        let phi: f64 = 0.7;
        let psi = g
            .codeword(c(FRAC_1_SQRT_2, 0.0), C64::from_polar(FRAC_1_SQRT_2, -phi))
            .unwrap();
        let out = ramsey_pulse(&psi.projector(), PulseDirection::Plus).unwrap();
        let one = StateVector::product(g.basis(), &[1, 1, 1]).unwrap();
        assert!((out.fidelity(&one).unwrap() - (phi / 2.0).cos().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn noiseless_fringes() {
        let cfg = noiseless();
        for (tau, omega) in [(0.3, 1.1), (1.0, 0.4), (2.0, 2.5)] {
            let p = ramsey_run(&cfg, tau, omega).unwrap();
            assert!((p - (1.5 * omega * tau).cos().powi(2)).abs() < 1e-6);
        }
        assert!((ramsey_run(&cfg, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_sensitivity() {
        let cfg = noiseless();
        for tau in [0.1, 1.0, 5.0] {
            let s = sensitivity(&cfg, tau).unwrap();
            assert!((s.sensitivity - 1.0 / (3.0 * tau.sqrt())).abs() < 1e-6 / tau.sqrt());
        }
    }

    #[test]
    fn fringe_extremum_is_degenerate() {
        let cfg = RamseyConfig {
            h_omega: Some(1e-3),
            ..noiseless()
        };
        let err = sensitivity_at(&cfg, 1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateOperatingPoint(_)));
    }

    #[test]
    fn spin_flips_damp_contrast() {
        let omega = 2.0;
        let cfg = RamseyConfig::new(
            DynamicsLevel::Uncorrected,
            ModelParams {
                gamma: omega / 2.0,
                ..Default::default()
            },
        );
        let tau = 2.0 * std::f64::consts::PI / (3.0 * omega);
        let p = ramsey_run(&cfg, tau, omega).unwrap();
        assert!(p < 0.99 && p > 0.0);
    }

    #[test]
    fn envelope_and_scaling() {
        assert_eq!(envelope_complementary(0.8, 0.0, 0.0, 3.0), 0.8);
        assert!((envelope_complementary(1.0, 0.02, 0.0, 1.0) - (-0.06f64).exp()).abs() < 1e-15);
        let s = scaling_formulas(1, 1.0, 50.0, 1.0).unwrap();
        assert!((s.product_sensitivity - 1.0 / 3.0).abs() < 1e-15);
        let s = scaling_formulas(4, 1.0, 50.0, 1.0).unwrap();
        assert!((s.product_sensitivity - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(s.entangled_n_exponent, -5.0 / 6.0);
        assert!(scaling_formulas(0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn normalized_sensitivity_is_independent_of_total_time() {
        let (p, d, tau) = (0.4, 1.3, 0.7);
        let a = absolute_uncertainty(p, d, tau, 10.0).unwrap() * 10f64.sqrt();
        let b = absolute_uncertainty(p, d, tau, 1e4).unwrap() * 1e4f64.sqrt();
        assert!((a - b).abs() < 1e-15 * a);
    }
}
