//! Dormand–Prince 5(4) with first-same-as-last reuse and PI step control.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - BETA * 0.75;

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrates `y' = f(y)` for an autonomous system, stopping exactly at every
/// time in `grid` (which must start at the current time) and calling `visit`
/// there.
pub struct Dopri5<F> {
    f: F,
    ctl: StepControl,
    n: usize,
    k: [Vec<f64>; 7],
    y_new: Vec<f64>,
    y_tmp: Vec<f64>,
    h: Option<f64>,
    err_old: f64,
    pub stats: Stats,
}

impl<F: FnMut(&[f64], &mut [f64])> Dopri5<F> {
    pub fn new(f: F, n: usize, ctl: StepControl) -> Self {
        Dopri5 {
            f,
            ctl,
            n,
            k: std::array::from_fn(|_| vec![0.0; n]),
            y_new: vec![0.0; n],
            y_tmp: vec![0.0; n],
            h: None,
            err_old: 1e-4,
            stats: Stats::default(),
        }
    }

    /// Evaluates stage `which` at `y_tmp`.
    fn eval(&mut self, which: usize) {
        self.stats.evaluations += 1;
        (self.f)(&self.y_tmp, &mut self.k[which]);
    }

    fn sc(&self, a: f64, b: f64) -> f64 {
        self.ctl.atol + self.ctl.rtol * a.abs().max(b.abs())
    }

    fn initial_step(&mut self, y: &[f64], span: f64) -> f64 {
        let n = self.n as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..self.n {
            let s = self.sc(y[i], y[i]);
            d0 += (y[i] / s).powi(2);
            d1 += (self.k[0][i] / s).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(span);
        for i in 0..self.n {
            self.y_tmp[i] = y[i] + h0 * self.k[0][i];
        }
        self.eval(1);
        let mut d2 = 0.0;
        for i in 0..self.n {
            let s = self.sc(y[i], y[i]);
            d2 += ((self.k[1][i] - self.k[0][i]) / s).powi(2);
        }
        let d2 = (d2 / n).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Advances `y` from `t0` through the points of `grid` (all > `t0`).
    pub fn integrate(
        &mut self,
        y: &mut [f64],
        t0: f64,
        grid: &[f64],
        mut visit: impl FnMut(usize, &mut [f64]) -> Result<()>,
    ) -> Result<()> {
        let mut t = t0;
        (self.f)(y, &mut self.k[0]);
        self.stats.evaluations += 1;
        for (gi, &target) in grid.iter().enumerate() {
            while t < target {
                let remaining = target - t;
                let mut h = match self.h {
                    Some(h) => h,
                    None => self.initial_step(y, remaining),
                };
                if let Some(m) = self.ctl.max_step {
                    h = h.min(m);
                }
                let last = h >= remaining * (1.0 - 1e-12);
                if last {
                    h = remaining;
                }
                if h <= 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t, step: h });
                }
                if self.stats.accepted + self.stats.rejected >= self.ctl.max_steps {
                    return Err(Error::StepUnderflow { t, step: h });
                }
                let err = self.attempt(y, h);
                if err <= 1.0 {
                    self.stats.accepted += 1;
                    let fac = (SAFETY * err.max(1e-10).powf(-ALPHA) * self.err_old.powf(BETA))
                        .clamp(FAC_MIN, FAC_MAX);
                    self.err_old = err.max(1e-4);
                    y.copy_from_slice(&self.y_new);
                    self.k.swap(0, 6);
                    t = if last { target } else { t + h };
                    let proposed = h * fac;
                    // A step clipped to land on the grid says nothing about
                    // the stable step size; keep the larger of the two.
                    self.h = Some(match self.h {
                        Some(prev) if last => proposed.max(prev),
                        _ => proposed,
                    });
                } else {
                    self.stats.rejected += 1;
                    let fac = (SAFETY * err.powf(-ALPHA)).clamp(FAC_MIN, 1.0);
                    self.h = Some(h * fac);
                }
            }
            visit(gi, y)?;
            // The visitor may renormalize the state.
            (self.f)(y, &mut self.k[0]);
            self.stats.evaluations += 1;
        }
        Ok(())
    }

    fn attempt(&mut self, y: &[f64], h: f64) -> f64 {
        let n = self.n;
        for i in 0..n {
            self.y_tmp[i] = y[i] + h * A21 * self.k[0][i];
        }
        self.eval(1);
        for i in 0..n {
            self.y_tmp[i] = y[i] + h * (A31 * self.k[0][i] + A32 * self.k[1][i]);
        }
        self.eval(2);
        for i in 0..n {
            self.y_tmp[i] =
                y[i] + h * (A41 * self.k[0][i] + A42 * self.k[1][i] + A43 * self.k[2][i]);
        }
        self.eval(3);
        for i in 0..n {
            self.y_tmp[i] = y[i]
                + h * (A51 * self.k[0][i]
                    + A52 * self.k[1][i]
                    + A53 * self.k[2][i]
                    + A54 * self.k[3][i]);
        }
        self.eval(4);
        for i in 0..n {
            self.y_tmp[i] = y[i]
                + h * (A61 * self.k[0][i]
                    + A62 * self.k[1][i]
                    + A63 * self.k[2][i]
                    + A64 * self.k[3][i]
                    + A65 * self.k[4][i]);
        }
        self.eval(5);
        for i in 0..n {
            self.y_new[i] = y[i]
                + h * (A71 * self.k[0][i]
                    + A73 * self.k[2][i]
                    + A74 * self.k[3][i]
                    + A75 * self.k[4][i]
                    + A76 * self.k[5][i]);
        }
        {
            let (f, k, yn) = (&mut self.f, &mut self.k, &self.y_new);
            f(yn, &mut k[6]);
            self.stats.evaluations += 1;
        }
        let mut acc = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * self.k[0][i]
                    + E3 * self.k[2][i]
                    + E4 * self.k[3][i]
                    + E5 * self.k[4][i]
                    + E6 * self.k[5][i]
                    + E7 * self.k[6][i]);
            let s = self.sc(y[i], self.y_new[i]);
            acc += (e / s).powi(2);
        }
        (acc / n.max(1) as f64).sqrt()
    }
}
