//! Acceptance report: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Run with `cargo test --test acceptance`.

use std::sync::Arc;
use std::time::Instant;

use aqec::backend::{Backend, BackendSpec};
use aqec::effective::{kappa_eff, EffectiveRates};
use aqec::harness::{run_scenario, Preset, ResultRecord, ScenarioConfig};
use aqec::lindblad::{evolve, evolve_with, IntegratorConfig, Probe};
use aqec::model::{
    ground_system, single_qubit_reference, CodeVariant, DynamicsLevel, ModelParams, System,
    Truncation,
};
use aqec::operator::{embed, ion_ops, SparseOperator};
use aqec::optimize::{alpha_of_tau, analytic_optimum, default_codeword, Regime};
use aqec::rates::{solve_rate_model, RateParams};
use aqec::space::Basis;
use aqec::state::StateVector;
use aqec::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn at(rec: &ResultRecord, col: &str, t: f64) -> f64 {
    let ts = &rec.columns[0].values;
    let i = ts.iter().position(|&x| (x - t).abs() < 1e-12).expect("grid point");
    rec.column(col).expect("column")[i]
}

fn run(cfg: &ScenarioConfig) -> Result<ResultRecord, String> {
    run_scenario(cfg).map_err(|e| e.to_string())
}

fn fig5(rec: &ResultRecord, secs: f64) -> Outcome {
    let f = at(rec, "fidelity_full", 1.0);
    let pass = (f - 0.90).abs() <= 0.03 && secs < 300.0;
    Ok((pass, format!("F(1/Γ) = {f:.4} (target 0.90 ± 0.03), {secs:.1} s")))
}

fn fig8() -> Outcome {
    let rec = run(&ScenarioConfig::preset(Preset::Fig8))?;
    let gs = [500.0, 1000.0, 2500.0, 5000.0, 10000.0];
    let f: Vec<f64> = gs.iter().map(|g| at(&rec, &format!("F_G{g}_full"), 1.0)).collect();
    let increasing = f.windows(2).all(|w| w[1] > w[0]);
    let mut worst: f64 = 0.0;
    for g in &gs[1..] {
        let full = rec.column(&format!("F_G{g}_full")).unwrap();
        let eff = rec.column(&format!("F_G{g}_effective")).unwrap();
        for (a, b) in full.iter().zip(eff).skip(1) {
            worst = worst.max((a - b).abs());
        }
    }
    let fs: Vec<String> = f.iter().map(|x| format!("{x:.4}")).collect();
    Ok((
        increasing && worst <= 0.03,
        format!("F(1/Γ) full = [{}], max |full − effective| (G ≥ 1000, t > 0) = {worst:.4}", fs.join(", ")),
    ))
}

fn single_qubit() -> Outcome {
    let (m, psi) = single_qubit_reference(1.0).map_err(|e| e.to_string())?;
    let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.1).collect();
    let res = evolve(&m, &psi.projector(), &times, &IntegratorConfig::default()).map_err(|e| e.to_string())?;
    let err = times
        .iter()
        .zip(&res.fidelity)
        .map(|(t, f)| (f - 0.5 * (1.0 + (-2.0 * t).exp())).abs())
        .fold(0.0, f64::max);
    let f1 = res.fidelity[10];
    let f_inf = *res.fidelity.last().unwrap();
    Ok((
        err < 1e-6 && (f1 - 0.5677).abs() < 5e-5 && (f_inf - 0.5).abs() < 1e-6,
        format!("max error {err:.1e}, F(1/Γ) = {f1:.5}, F(20/Γ) = {f_inf:.8}"),
    ))
}

/// Decay rate of 1 − P(|000⟩) from |100⟩ without noise, by a log-linear fit.
fn extracted_rate(p: &ModelParams, kappa_guess: f64) -> Result<f64, String> {
    let e = |e: aqec::Error| e.to_string();
    let sys = System::new(CodeVariant::BitFlipIndividual, DynamicsLevel::EngineeredDecay, Truncation::default())
        .map_err(e)?;
    let model = sys.lindblad_model(p).map_err(e)?;
    let start = StateVector::product(sys.basis(), &[1, 0, 0, 0, 0]).map_err(e)?;
    let target = Probe::pure("p000", &StateVector::product(sys.basis(), &[0, 0, 0, 0, 0]).map_err(e)?).map_err(e)?;
    let (t1, t2) = (0.5 / kappa_guess, 2.5 / kappa_guess);
    let mut times = vec![0.0];
    times.extend((0..=10).map(|k| t1 + (t2 - t1) * k as f64 / 10.0));
    let cfg = IntegratorConfig::default().with_tolerances(1e-10, 1e-13);
    let res = evolve_with(&model, &start.projector(), &times, &cfg, &[target]).map_err(e)?;
    let pts: Vec<(f64, f64)> = times[1..]
        .iter()
        .zip(&res.observable("p000").unwrap()[1..])
        .map(|(&t, &p)| (t, (1.0 - p).ln()))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
    Ok(-sxy / sxx)
}

fn rate_extraction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let g: f64 = rng.gen_range(1000.0..10000.0);
        let kappa = rng.gen_range(0.5..2.0) * g.powf(2.0 / 3.0);
        let omega = rng.gen_range(0.03..0.1) * kappa;
        let p = ModelParams {
            gamma: 0.0,
            ..ModelParams::engineered(1.0, g, kappa, omega)
        };
        let expected = omega * omega / kappa;
        let rate = extracted_rate(&p, expected)?;
        worst = worst.max((rate / expected - 1.0).abs());
    }
    let g = 5000.0;
    let (o, k) = (100.0, 300.0);
    let d = C64::new(g, 0.0);
    let ratio = |d: C64, dm: C64| -> Result<f64, String> {
        let k2 = aqec::effective::effective_detunings(d, dm, g, 2).map_err(|e| e.to_string())?.0;
        let k3 = aqec::effective::effective_detunings(d, dm, g, 3).map_err(|e| e.to_string())?.0;
        Ok(kappa_eff(2, o, k, k2).map_err(|e| e.to_string())? / kappa_eff(3, o, k, k3).map_err(|e| e.to_string())?)
    };
    let r_real = ratio(d, d)?;
    let p = ModelParams::engineered(1.0, g, k, o);
    let rates = EffectiveRates::from_params(&p).map_err(|e| e.to_string())?;
    let r_damped = rates.kappa_eff[1] / rates.kappa_eff[2];
    Ok((
        worst <= 0.05 && (r_real - 4.0).abs() <= 1e-12,
        format!(
            "max |extracted/(Ω²/κ_eng) − 1| = {:.2}% over 20 sets; κ_eff,2/κ_eff,3 = {r_real} at Δ=δ=G (with linewidths {r_damped:.6})",
            100.0 * worst
        ),
    ))
}

type M3 = [[f64; 3]; 3];

fn mul(a: &M3, b: &M3) -> M3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// Scaling and squaring with a degree-20 Taylor polynomial.
fn expm(m: &M3) -> M3 {
    let norm = m.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max);
    let s = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let a: M3 = m.map(|r| r.map(|x| x / 2f64.powi(s)));
    let mut out = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut term = out;
    for k in 1..=20 {
        term = mul(&term, &a).map(|r| r.map(|x| x / k as f64));
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        out = mul(&out, &out);
    }
    out
}

fn rate_model_exactness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
    let mut worst: f64 = 0.0;
    let mut sets = 0;
    while sets < 100 {
        let (e, c, l) = (
            rng.gen_range(0.1..20.0),
            rng.gen_range(1.0..500.0),
            rng.gen_range(0.1..50.0),
        );
        let p = RateParams::new(e, c, l).map_err(|e| e.to_string())?;
        if !(p.discriminant() > 0.0) {
            continue;
        }
        sets += 1;
        let sol = solve_rate_model(&p, &times).map_err(|e| e.to_string())?;
        let gen = [[-e, c, 0.0], [e, -(c + l), 0.0], [0.0, l, 0.0]];
        for (k, &t) in times.iter().enumerate() {
            let u = expm(&gen.map(|r| r.map(|x| x * t)));
            for (got, want) in [sol.p_l[k], sol.p_c[k], sol.p_u[k]].iter().zip([u[0][0], u[1][0], u[2][0]]) {
                worst = worst.max((got - want).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((worst < 1e-10, format!("max |closed form − expm| = {worst:.1e} over 100 sets, {secs:.2} s")))
}

fn optimizer(fig5: &ResultRecord) -> Outcome {
    let a0 = alpha_of_tau(0.0).map_err(|e| e.to_string())?;
    let a_inf = alpha_of_tau(f64::INFINITY).map_err(|e| e.to_string())?;
    let a_inf_exact = 4.0 * (3.0 * 5f64.sqrt() - 5.0) / 5.0;
    let opt = analytic_optimum(1.0, 5000.0, 2.5, Regime::LongTime).map_err(|e| e.to_string())?;
    let unit = (5000.0f64 * 5000.0).cbrt();
    let k_ratio = opt.kappa_eng / unit;
    let num_ratio = fig5.scalar("omega_over_kappa_eng").unwrap();
    Ok((
        a0 == 8.0 && (a_inf - a_inf_exact).abs() <= 1e-12 && (k_ratio - 1.20).abs() <= 0.01 && (0.7..=0.95).contains(&num_ratio),
        format!(
            "α(0) = {a0}, α(∞) − exact = {:.1e}, analytic κ_eng/∛(ΓG²) = {k_ratio:.4}, numeric Ω/κ_eng = {num_ratio:.3}",
            a_inf - a_inf_exact
        ),
    ))
}

fn fig6() -> Outcome {
    let rec = run(&ScenarioConfig::preset(Preset::Fig6))?;
    let drop = at(&rec, "F_no_dephasing", 1.0) - at(&rec, "F_dephasing", 1.0);
    Ok(((drop - 0.05).abs() <= 0.02, format!("F(1/Γ) drop = {drop:.4} (target 0.05 ± 0.02)")))
}

fn fig7() -> Outcome {
    let rec = run(&ScenarioConfig::preset(Preset::Fig7))?;
    let taus = rec.column("tau_R").unwrap();
    let clean_err = taus
        .iter()
        .zip(rec.column("dw_no_noise").unwrap())
        .map(|(t, d)| (d - 1.0 / (3.0 * t.sqrt())).abs())
        .fold(0.0, f64::max);
    let min = |c: &str| rec.column(c).unwrap().iter().cloned().fold(f64::INFINITY, f64::min);
    let (no_ec, eff) = (min("dw_no_ec"), min("dw_effective"));
    let ratio = no_ec / eff;
    Ok((
        clean_err < 1e-6 && ratio >= 5.0,
        format!("noiseless max error {clean_err:.1e}; min |δω|√T {no_ec:.4} uncorrected vs {eff:.4} corrected, ratio {ratio:.1}"),
    ))
}

fn fig9() -> Outcome {
    let rec = run(&ScenarioConfig::preset(Preset::Fig9))?;
    let taus = rec.column("tau_R").unwrap();
    let c = |n: &str| rec.column(n).unwrap();
    let i1 = taus.iter().position(|&t| (t - 1.0).abs() < 1e-9).unwrap();
    let gain_at_1 = c("dw_no_ec")[i1] / c("dw_effective")[i1];
    let mut shrinks = true;
    let mut compared = 0;
    for (i, &t) in taus.iter().enumerate() {
        let vals = [c("dw_no_ec")[i], c("dw_effective")[i], c("dw_no_ec_no_dephasing")[i], c("dw_effective_no_dephasing")[i]];
        if t < 10.0 - 1e-9 || vals.iter().any(|v| !v.is_finite()) {
            continue;
        }
        compared += 1;
        shrinks &= vals[0] / vals[1] < vals[2] / vals[3];
    }
    Ok((
        gain_at_1 >= 2.0 && shrinks && compared > 0,
        format!("gain at τ_R = 1/Γ: {gain_at_1:.2}; advantage smaller with Γ_Z at all {compared} finite points τ_R ≥ 10/Γ: {shrinks}"),
    ))
}

fn properties(opt: &ModelParams) -> Outcome {
    let e = |e: aqec::Error| e.to_string();
    let mut notes = Vec::new();
    let mut pass = true;

    // Trace and positivity along a noisy engineered-decay trajectory.
    let noisy = ModelParams {
        gamma_z: 0.02,
        ..opt.clone()
    };
    let backend = Backend::new(&BackendSpec::new(DynamicsLevel::EngineeredDecay), &noisy).map_err(e)?;
    let (c0, c1) = default_codeword();
    let psi = backend.system.codeword(c0, c1).map_err(e)?;
    let mut cfg = IntegratorConfig::default();
    cfg.keep_states = true;
    let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
    let res = evolve(&backend.model, &psi.projector(), &times, &cfg).map_err(e)?;
    let trace_err = res.trace.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
    let min_eig = res
        .states
        .as_ref()
        .unwrap()
        .iter()
        .map(|r| r.min_eigenvalue())
        .fold(f64::INFINITY, f64::min);
    pass &= trace_err < 1e-9 && min_eig > -1e-9;
    notes.push(format!("trace err {trace_err:.0e}, min eig {min_eig:.0e}"));

    // Dark codewords under every correction operator.
    let mut dark: f64 = 0.0;
    for variant in [
        CodeVariant::BitFlipIndividual,
        CodeVariant::BitFlipCollective,
        CodeVariant::PhaseFlipIndividual,
        CodeVariant::PhaseFlipCollective,
    ] {
        let g = ground_system(variant).map_err(e)?;
        let eng = System::new(variant, DynamicsLevel::EngineeredDecay, Truncation::default()).map_err(e)?;
        let ops = [
            (&g, g.ideal_correction_jumps(1.0).map_err(e)?),
            (&eng, eng.engineered_jumps(opt).map_err(e)?),
        ];
        for (sys, ops) in ops {
            for (a, b) in [(C64::new(1.0, 0.0), C64::new(0.0, 0.0)), (C64::new(0.0, 0.0), C64::new(1.0, 0.0))] {
                let cw = sys.codeword(a, b).map_err(e)?;
                for l in &ops {
                    dark = dark.max(l.apply(cw.amplitudes()).map_err(e)?.norm());
                }
            }
        }
    }
    pass &= dark < 1e-12;
    notes.push(format!("dark {dark:.0e}"));

    // Stabilizer form equals projector form, exhaustively on the 8 ground states.
    let g = ground_system(CodeVariant::BitFlipIndividual).map_err(e)?;
    let basis: &Arc<Basis> = g.basis();
    let on = |j: usize, m| -> Result<SparseOperator, String> {
        embed(&m, j, g.space()).and_then(|o| o.restrict(basis)).map_err(|x| x.to_string())
    };
    let id = SparseOperator::identity(basis);
    let mut stab_err: f64 = 0.0;
    let ideal = g.ideal_correction_jumps(1.0).map_err(e)?;
    for j in 0..3 {
        let (a, b) = ((j + 1) % 3, (j + 2) % 3);
        let viol = |p: usize, q: usize| -> Result<SparseOperator, String> {
            Ok(&(&id - &(&on(p, ion_ops::sigma_z())? * &on(q, ion_ops::sigma_z())?)) * 0.5)
        };
        let stab = &(&on(j, ion_ops::sigma_x())? * &viol(j, a)?) * &viol(j, b)?;
        for k in 0..8 {
            let digits = [k & 1, (k >> 1) & 1, (k >> 2) & 1];
            let s = StateVector::product(basis, &digits).map_err(e)?;
            let d = stab.apply(s.amplitudes()).map_err(e)? - ideal[j].apply(s.amplitudes()).map_err(e)?;
            stab_err = stab_err.max(d.norm());
        }
    }
    pass &= stab_err < 1e-15;
    notes.push(format!("stabilizer≡projector {stab_err:.0e}"));

    // Phase variant is the Hadamard conjugate of the bit-flip variant.
    let gp = ground_system(CodeVariant::PhaseFlipIndividual).map_err(e)?;
    let h = (ion_ops::sigma_x() + ion_ops::sigma_z()) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let w = &(&on(0, h.clone())? * &on(1, h.clone())?) * &on(2, h)?;
    let mut conj_err: f64 = 0.0;
    for (lb, lp) in ideal.iter().zip(gp.ideal_correction_jumps(1.0).map_err(e)?) {
        let c = lb.conjugate_by(&w).map_err(e)?;
        let lp = lp.restrict(basis).map_err(e)?;
        conj_err = conj_err.max(c.max_abs_diff(&lp).map_err(e)?);
    }
    pass &= conj_err < 1e-12;
    notes.push(format!("phase conjugation {conj_err:.0e}"));

    // Truncation robustness in the fig5 scenario.
    let f_at = |max_exc: usize| -> Result<f64, String> {
        let spec = BackendSpec {
            truncation: Truncation { n_max: 1, max_exc },
            ..BackendSpec::new(DynamicsLevel::EngineeredDecay)
        };
        aqec::optimize::fidelity_at(opt, &spec, 1.0, &IntegratorConfig::default()).map_err(|x| x.to_string())
    };
    let shift = (f_at(2)? - f_at(1)?).abs();
    pass &= shift < 0.01;
    notes.push(format!("max-exc 1→2 shift {shift:.4}"));

    Ok((pass, notes.join("; ")))
}

fn main() {
    let mut failures = 0;
    let mut report = |name: &str, outcome: Outcome| {
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            failures += 1;
        }
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    };

    let start = Instant::now();
    let fig5_rec = run(&ScenarioConfig::preset(Preset::Fig5));
    let secs = start.elapsed().as_secs_f64();
    let opt = fig5_rec.as_ref().ok().map(|r| ModelParams {
        kappa_eng: r.scalar("kappa_eng"),
        omega: r.scalar("omega").unwrap(),
        ..ScenarioConfig::default().params
    });
    let need = |o: &Option<ModelParams>| o.clone().ok_or_else(|| "fig5 optimum unavailable".to_string());

    report("fig5 fidelity", fig5_rec.clone().and_then(|r| fig5(&r, secs)));
    report("fig8 coupling hierarchy", fig8());
    report("single-qubit baseline", single_qubit());
    report("effective-rate closed forms", rate_extraction());
    report("rate-model exactness", rate_model_exactness());
    report("optimizer", fig5_rec.clone().and_then(|r| optimizer(&r)));
    report("fig6 dephasing", fig6());
    report("fig7 sensitivity", fig7());
    report("fig9 collective dephasing", fig9());
    report("property suites", need(&opt).and_then(|o| properties(&o)));

    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
