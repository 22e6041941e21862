//! Three-subspace rate equations for the logical (l), correctable (c) and
//! uncorrectable (u) populations:
//!
//! ```text
//! dP_l/dt = −Γ_err P_l + Γ_corr P_c
//! dP_c/dt =  Γ_err P_l − (Γ_corr + Γ_leak) P_c
//! dP_u/dt =  Γ_leak P_c
//! ```

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::effective::EffectiveRates;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub gamma_err: f64,
    pub gamma_corr: f64,
    pub gamma_leak: f64,
}

impl RateParams {
    pub fn new(gamma_err: f64, gamma_corr: f64, gamma_leak: f64) -> Result<Self> {
        let p = RateParams {
            gamma_err,
            gamma_corr,
            gamma_leak,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_err", self.gamma_err),
            ("gamma_corr", self.gamma_corr),
            ("gamma_leak", self.gamma_leak),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.gamma_err + self.gamma_corr + self.gamma_leak
    }

    /// Γ_f² = Γ_total² − 4 Γ_err Γ_leak.
    pub fn discriminant(&self) -> f64 {
        self.total().powi(2) - 4.0 * self.gamma_err * self.gamma_leak
    }

    /// Generator of (P_l, P_c, P_u). With `back_flow`, further bit flips
    /// return uncorrectable population to the correctable class at Γ_leak.
    pub fn generator(&self, back_flow: bool) -> Matrix3<f64> {
        let (e, c, l) = (self.gamma_err, self.gamma_corr, self.gamma_leak);
        let b = if back_flow { l } else { 0.0 };
        Matrix3::new(
            -e, c, 0.0, //
            e, -(c + l), b, //
            0.0, l, -b,
        )
    }
}

/// Γ_err = 3(Γ + κ_eff,3), Γ_corr = κ_eff,1, Γ_leak = 2(Γ + κ_eff,2).
pub fn derive_rates(gamma: f64, eff: &EffectiveRates) -> RateParams {
    let k = eff.kappa_eff;
    RateParams {
        gamma_err: 3.0 * (gamma + k[2]),
        gamma_corr: k[0],
        gamma_leak: 2.0 * (gamma + k[1]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSolution {
    pub times: Vec<f64>,
    pub p_l: Vec<f64>,
    pub p_c: Vec<f64>,
    pub p_u: Vec<f64>,
    pub e0: f64,
    pub gamma_f: f64,
    pub gamma_s: f64,
    pub gamma_eff: f64,
}

/// Γ_f, Γ_s and (1 − e^{−Γ_f t})/Γ_f, which tends to t at Γ_f = 0.
fn rates_and_kernel(p: &RateParams) -> Result<(f64, f64)> {
    p.validate()?;
    let disc = p.discriminant();
    if disc < 0.0 {
        return Err(Error::RateModel(format!("negative discriminant {disc:e}")));
    }
    let gf = disc.sqrt();
    Ok((gf, (p.total() - gf) / 2.0))
}

fn fast_kernel(gf: f64, t: f64) -> f64 {
    if gf * t < 1e-300 || gf == 0.0 {
        t
    } else {
        -(-gf * t).exp_m1() / gf
    }
}

/// Closed-form populations from P_l(0) = 1.
pub fn solve_rate_model(p: &RateParams, times: &[f64]) -> Result<RateSolution> {
    let (gf, gs) = rates_and_kernel(p)?;
    let mut out = RateSolution {
        times: times.to_vec(),
        p_l: Vec::with_capacity(times.len()),
        p_c: Vec::with_capacity(times.len()),
        p_u: Vec::with_capacity(times.len()),
        e0: if gf > 0.0 { (p.gamma_err - gs) / gf } else { 0.0 },
        gamma_f: gf,
        gamma_s: gs,
        gamma_eff: 0.0,
    };
    out.gamma_eff = p.gamma_leak * out.e0;
    for &t in times {
        if !(t >= 0.0) {
            return Err(Error::InvalidTimeGrid);
        }
        let slow = (-gs * t).exp();
        let k = fast_kernel(gf, t);
        let pl = slow * (1.0 - (p.gamma_err - gs) * k);
        let pc = p.gamma_err * slow * k;
        out.p_l.push(pl);
        out.p_c.push(pc);
        out.p_u.push(1.0 - pl - pc);
    }
    Ok(out)
}

/// Populations by matrix exponential of the generator; supports back flow.
pub fn solve_rate_model_numeric(p: &RateParams, times: &[f64], back_flow: bool) -> Result<RateSolution> {
    let mut sol = solve_rate_model(p, &[])?;
    let m = p.generator(back_flow);
    let p0 = Vector3::new(1.0, 0.0, 0.0);
    for &t in times {
        if !(t >= 0.0) {
            return Err(Error::InvalidTimeGrid);
        }
        let v = (m * t).exp() * p0;
        sol.p_l.push(v[0]);
        sol.p_c.push(v[1]);
        sol.p_u.push(v[2]);
    }
    sol.times = times.to_vec();
    Ok(sol)
}

/// Static error E₀ and effective decay rate Γ_eff = Γ_leak E₀.
pub fn hockey_stick_summary(p: &RateParams) -> Result<(f64, f64)> {
    let (gf, gs) = rates_and_kernel(p)?;
    if gf == 0.0 {
        return Err(Error::RateModel("degenerate fast rate (Γ_f = 0)".into()));
    }
    let e0 = (p.gamma_err - gs) / gf;
    Ok((e0, p.gamma_leak * e0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn derived_rates_large_g_limit() {
        let eff = EffectiveRates {
            kappa_eff: [40.0, 0.0, 0.0],
            r: 2.5,
            f_e: 0.0,
            strong_driving: true,
        };
        let r = derive_rates(1.0, &eff);
        assert_eq!((r.gamma_err, r.gamma_corr, r.gamma_leak), (3.0, 40.0, 2.0));
    }

    #[test]
    fn no_error_channel_keeps_logical_population() {
        let p = RateParams::new(0.0, 5.0, 2.0).unwrap();
        let s = solve_rate_model(&p, &[0.0, 1.0, 10.0]).unwrap();
        assert!(s.p_l.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        let z = RateParams::new(0.0, 0.0, 0.0).unwrap();
        let s = solve_rate_model(&z, &[0.0, 3.0]).unwrap();
        assert_eq!(s.p_l, vec![1.0, 1.0]);
    }

    #[test]
    fn perfect_correction_limits() {
        let p = RateParams::new(3.0, 1e4, 2.0).unwrap();
        let (e0, geff) = hockey_stick_summary(&p).unwrap();
        assert!((e0 / (3.0 / 1e4) - 1.0).abs() < 1e-3);
        assert!((geff / (6.0 / 1e4) - 1.0).abs() < 1e-3);
        let q = RateParams::new(3.0, 10.0, 0.0).unwrap();
        assert_eq!(hockey_stick_summary(&q).unwrap().1, 0.0);
    }

    #[test]
    fn degenerate_fast_rate() {
        let p = RateParams::new(1.0, 0.0, 1.0).unwrap();
        assert!(hockey_stick_summary(&p).is_err());
        let s = solve_rate_model(&p, &[0.5]).unwrap();
        let o = solve_rate_model_numeric(&p, &[0.5], false).unwrap();
        assert!((s.p_l[0] - o.p_l[0]).abs() < 1e-12);
    }

    #[test]
    fn back_flow_reaches_a_steady_state() {
        let p = RateParams::new(3.0, 30.0, 2.0).unwrap();
        let s = solve_rate_model_numeric(&p, &[200.0], true).unwrap();
        assert!(s.p_u[0] > 0.0 && s.p_l[0] > 0.1);
        assert!((s.p_l[0] + s.p_c[0] + s.p_u[0] - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn populations_sum_to_one(e in 0.0f64..10.0, c in 0.0f64..100.0, l in 0.0f64..10.0, t in 0.0f64..50.0) {
            let s = solve_rate_model(&RateParams::new(e, c, l).unwrap(), &[t]).unwrap();
            prop_assert!((s.p_l[0] + s.p_c[0] + s.p_u[0] - 1.0).abs() < 1e-12);
            prop_assert!(s.p_l[0] >= -1e-12 && s.p_c[0] >= -1e-12);
        }
    }
}
