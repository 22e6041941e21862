//! Hamiltonians, noise and correction processes of the three-ion code.
//!
//! Factor order is fixed: ions 1..3, then modes `a`, `b` (when present), then
//! the ancilla modes `c1..c3` (individual variants) or a single `c`
//! (collective variants). Phase-flip variants are obtained by conjugating the
//! bit-flip construction with the per-ion map |0⟩→|+⟩, |1⟩→|−⟩.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{LindbladModel, Probe};
use crate::operator::{embed, ion_ops, projector_count, SparseOperator};
use crate::space::{Basis, Factor, HilbertSpace, Level};
use crate::state::{StateVector, NORM_TOL};
use crate::C64;

pub const N_IONS: usize = 3;

/// Physical rates and couplings in units of the reference rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Γ, individual bit flips.
    pub gamma: f64,
    /// Γ_X, collective bit flips.
    pub gamma_collective_x: f64,
    /// Γ_z, individual phase flips.
    pub gamma_z: f64,
    /// Γ_Z, collective dephasing.
    pub gamma_collective_z: f64,
    /// Ω, carrier drive.
    pub omega: f64,
    /// G, sideband coupling to modes a and b.
    pub g_sideband: f64,
    /// g, coupling to the ancilla modes; derived from κ_eng when zero.
    pub g_ancilla: f64,
    /// κ, ancilla cooling rate.
    pub kappa: f64,
    /// κ_eng; derived as 4g²/κ when absent.
    pub kappa_eng: Option<f64>,
    /// Δ, detuning of |e⟩ and |f⟩; defaults to G.
    pub detuning_excited: Option<f64>,
    /// δ, detuning of modes a and b; defaults to G.
    pub detuning_mode: Option<f64>,
    /// δ_c, ancilla detuning.
    pub detuning_ancilla: f64,
    /// γ, spontaneous emission of |e⟩ and |f⟩ (split equally to |0⟩, |1⟩).
    pub gamma_spont: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    /// ω, signal strength.
    pub signal: f64,
    /// Γ_corr, rate of the ideal correction jumps.
    pub gamma_corr: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            gamma: 1.0,
            gamma_collective_x: 0.0,
            gamma_z: 0.0,
            gamma_collective_z: 0.0,
            omega: 0.0,
            g_sideband: 0.0,
            g_ancilla: 0.0,
            kappa: 0.0,
            kappa_eng: None,
            detuning_excited: None,
            detuning_mode: None,
            detuning_ancilla: 0.0,
            gamma_spont: 0.0,
            kappa_a: 0.0,
            kappa_b: 0.0,
            signal: 0.0,
            gamma_corr: 0.0,
        }
    }
}

impl ModelParams {
    /// Engineered-decay parameters at sideband coupling `g`, Δ = δ = G.
    pub fn engineered(gamma: f64, g: f64, kappa_eng: f64, omega: f64) -> Self {
        ModelParams {
            gamma,
            g_sideband: g,
            kappa_eng: Some(kappa_eng),
            omega,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("gamma", self.gamma),
            ("gamma_collective_x", self.gamma_collective_x),
            ("gamma_z", self.gamma_z),
            ("gamma_collective_z", self.gamma_collective_z),
            ("omega", self.omega),
            ("g_sideband", self.g_sideband),
            ("g_ancilla", self.g_ancilla),
            ("kappa", self.kappa),
            ("kappa_eng", self.kappa_eng.unwrap_or(0.0)),
            ("gamma_spont", self.gamma_spont),
            ("kappa_a", self.kappa_a),
            ("kappa_b", self.kappa_b),
            ("gamma_corr", self.gamma_corr),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("detuning_excited", self.detuning_excited.unwrap_or(0.0)),
            ("detuning_mode", self.detuning_mode.unwrap_or(0.0)),
            ("detuning_ancilla", self.detuning_ancilla),
            ("signal", self.signal),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }

    /// Δ, defaulting to G.
    pub fn delta(&self) -> f64 {
        self.detuning_excited.unwrap_or(self.g_sideband)
    }

    /// δ, defaulting to G.
    pub fn delta_mode(&self) -> f64 {
        self.detuning_mode.unwrap_or(self.g_sideband)
    }

    /// κ_eng, given directly or obtained by eliminating a cooled ancilla
    /// mode (4g²/κ at δ_c = 0).
    pub fn kappa_eng(&self) -> Option<f64> {
        let derived = (self.g_ancilla > 0.0 && self.kappa > 0.0).then(|| {
            let d = self.detuning_ancilla;
            4.0 * self.g_ancilla.powi(2) * self.kappa / (self.kappa.powi(2) + 4.0 * d * d)
        });
        match (self.kappa_eng, derived) {
            (Some(k), Some(d)) => {
                if (k - d).abs() > 1e-9 * k.max(d) {
                    log::warn!("kappa_eng = {k} given directly; couplings imply {d}; using {k}");
                }
                Some(k)
            }
            (Some(k), None) => Some(k),
            (None, d) => d,
        }
    }

    /// g, given directly or chosen so that eliminating the ancilla yields κ_eng.
    pub fn ancilla_coupling(&self) -> Option<f64> {
        if self.g_ancilla > 0.0 {
            return Some(self.g_ancilla);
        }
        let k = self.kappa_eng?;
        (self.kappa > 0.0).then(|| (k * self.kappa).sqrt() / 2.0)
    }

    fn require_kappa_eng(&self) -> Result<f64> {
        self.kappa_eng()
            .ok_or_else(|| Error::param("kappa_eng", "required (directly or via g_ancilla and kappa)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeVariant {
    BitFlipIndividual,
    BitFlipCollective,
    PhaseFlipIndividual,
    PhaseFlipCollective,
}

impl CodeVariant {
    pub fn is_phase(self) -> bool {
        matches!(
            self,
            CodeVariant::PhaseFlipIndividual | CodeVariant::PhaseFlipCollective
        )
    }

    pub fn is_collective(self) -> bool {
        matches!(
            self,
            CodeVariant::BitFlipCollective | CodeVariant::PhaseFlipCollective
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsLevel {
    /// Explicit ancilla modes with cooling.
    FullWithAncilla,
    /// Ancillas eliminated into engineered decay of |e⟩, |f⟩.
    EngineeredDecay,
    /// Excited levels eliminated; correction by effective jumps.
    EffectiveJump,
    /// Ideal conditional correction jumps.
    IdealJump,
    /// Three-subspace rate equations.
    RateModel,
    /// Noise only, no correction.
    Uncorrected,
}

impl fmt::Display for DynamicsLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DynamicsLevel::FullWithAncilla => "full_with_ancilla",
            DynamicsLevel::EngineeredDecay => "engineered_decay",
            DynamicsLevel::EffectiveJump => "effective_jump",
            DynamicsLevel::IdealJump => "ideal_jump",
            DynamicsLevel::RateModel => "rate_model",
            DynamicsLevel::Uncorrected => "uncorrected",
        };
        f.write_str(s)
    }
}

impl DynamicsLevel {
    pub const ALL: [DynamicsLevel; 6] = [
        DynamicsLevel::FullWithAncilla,
        DynamicsLevel::EngineeredDecay,
        DynamicsLevel::EffectiveJump,
        DynamicsLevel::IdealJump,
        DynamicsLevel::RateModel,
        DynamicsLevel::Uncorrected,
    ];
}

impl std::str::FromStr for DynamicsLevel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        DynamicsLevel::ALL
            .into_iter()
            .find(|l| l.to_string() == s)
            .ok_or_else(|| format!("unknown dynamics level `{s}`"))
    }
}

impl fmt::Display for CodeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CodeVariant::BitFlipIndividual => "bit_flip_individual",
            CodeVariant::BitFlipCollective => "bit_flip_collective",
            CodeVariant::PhaseFlipIndividual => "phase_flip_individual",
            CodeVariant::PhaseFlipCollective => "phase_flip_collective",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for CodeVariant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [
            CodeVariant::BitFlipIndividual,
            CodeVariant::BitFlipCollective,
            CodeVariant::PhaseFlipIndividual,
            CodeVariant::PhaseFlipCollective,
        ]
        .into_iter()
        .find(|v| v.to_string() == s)
        .ok_or_else(|| format!("unknown code variant `{s}`"))
    }
}

/// Mode cutoff and excitation truncation. The mode cutoff used is at least
/// `max_exc`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Truncation {
    pub n_max: usize,
    pub max_exc: usize,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { n_max: 1, max_exc: 1 }
    }
}

/// The Hilbert space and truncated basis for one variant and dynamics level,
/// with constructors for every operator of the model.
#[derive(Debug, Clone)]
pub struct System {
    variant: CodeVariant,
    level: DynamicsLevel,
    space: Arc<HilbertSpace>,
    basis: Arc<Basis>,
    mode_a: Option<usize>,
    mode_b: Option<usize>,
    ancillas: Vec<usize>,
    conj: Option<SparseOperator>,
}

impl System {
    pub fn new(variant: CodeVariant, level: DynamicsLevel, trunc: Truncation) -> Result<Self> {
        let mut factors = vec![Factor::Ion; N_IONS];
        let (mut mode_a, mut mode_b, mut ancillas) = (None, None, Vec::new());
        let with_modes = matches!(
            level,
            DynamicsLevel::FullWithAncilla | DynamicsLevel::EngineeredDecay
        );
        if level == DynamicsLevel::RateModel {
            return Err(Error::UnsupportedLevel("a Hilbert space", level.to_string()));
        }
        if with_modes {
            // A mode cutoff below the excitation cutoff would truncate
            // multi-excitation manifolds unevenly.
            let m = Factor::Mode {
                n_max: trunc.n_max.max(trunc.max_exc),
            };
            mode_a = Some(factors.len());
            factors.push(m);
            mode_b = Some(factors.len());
            factors.push(m);
            if level == DynamicsLevel::FullWithAncilla {
                let n_c = if variant.is_collective() { 1 } else { N_IONS };
                for _ in 0..n_c {
                    ancillas.push(factors.len());
                    factors.push(m);
                }
            }
        }
        let space = HilbertSpace::new(factors);
        let max_exc = if with_modes { trunc.max_exc } else { 0 };
        let basis = Basis::truncate(&space, max_exc as i64)?;
        let mut sys = System {
            variant,
            level,
            space,
            basis,
            mode_a,
            mode_b,
            ancillas,
            conj: None,
        };
        if variant.is_phase() {
            let w = ion_ops::ketbra(Level::Plus, Level::Zero)
                + ion_ops::ketbra(Level::Minus, Level::One)
                + ion_ops::projector(Level::E)
                + ion_ops::projector(Level::F);
            let mut total = SparseOperator::identity(&Basis::full(&sys.space));
            for j in 0..N_IONS {
                total = total.checked_mul(&embed(&w, j, &sys.space)?)?;
            }
            sys.conj = Some(total);
        }
        Ok(sys)
    }

    pub fn variant(&self) -> CodeVariant {
        self.variant
    }

    pub fn level(&self) -> DynamicsLevel {
        self.level
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    fn full(&self) -> Arc<Basis> {
        Basis::full(&self.space)
    }

    fn on_ion(&self, j: usize, local: &DMatrix<C64>) -> Result<SparseOperator> {
        embed(local, j, &self.space)
    }

    fn on_mode(&self, f: usize, local: &DMatrix<C64>) -> Result<SparseOperator> {
        embed(local, f, &self.space)
    }

    fn n_max(&self, f: usize) -> usize {
        match self.space.factors()[f] {
            Factor::Mode { n_max } => n_max,
            Factor::Ion => 0,
        }
    }

    fn annihilation(&self, f: usize) -> Result<SparseOperator> {
        self.on_mode(f, &ion_ops::annihilation(self.n_max(f)))
    }

    /// Maps a full-space operator of the bit-flip construction to this
    /// variant's code basis and restricts it to the truncated basis.
    fn encode(&self, op: &SparseOperator) -> Result<SparseOperator> {
        match &self.conj {
            Some(w) => op.conjugate_by(w)?.restrict(&self.basis),
            None => op.restrict(&self.basis),
        }
    }

    /// Restricts a physical (variant-independent) operator.
    fn physical(&self, op: &SparseOperator) -> Result<SparseOperator> {
        op.restrict(&self.basis)
    }

    fn scaled_sum(&self, ops: &[SparseOperator], s: f64) -> SparseOperator {
        let mut acc = SparseOperator::zeros(&self.full());
        for o in ops {
            acc = &acc + o;
        }
        &acc * s
    }

    /// Per-ion engineered-decay lowering part |0⟩⟨e| + |1⟩⟨f|.
    fn lowering(&self, j: usize) -> Result<SparseOperator> {
        self.on_ion(
            j,
            &(ion_ops::ketbra(Level::Zero, Level::E) + ion_ops::ketbra(Level::One, Level::F)),
        )
    }

    /// H_free + H_drive + H_osc (+ H_anc with explicit ancillas).
    pub fn hamiltonian(&self, p: &ModelParams) -> Result<SparseOperator> {
        let (Some(a_f), Some(b_f)) = (self.mode_a, self.mode_b) else {
            return Err(Error::UnsupportedLevel("a Hamiltonian", self.level.to_string()));
        };
        p.validate()?;
        let a = self.annihilation(a_f)?;
        let b = self.annihilation(b_f)?;
        let ad = a.adjoint();
        let bd = b.adjoint();
        let exc = ion_ops::projector(Level::E) + ion_ops::projector(Level::F);
        let drive = ion_ops::ketbra(Level::E, Level::One) + ion_ops::ketbra(Level::F, Level::Zero);
        let mut h = &(&(&ad * &a) + &(&bd * &b)) * p.delta_mode();
        for j in 0..N_IONS {
            h = &h + &(&self.on_ion(j, &exc)? * p.delta());
            let d = self.on_ion(j, &drive)?;
            h = &h + &(&(&d + &d.adjoint()) * (p.omega / 2.0));
            let osc = &(&ad * &self.on_ion(j, &ion_ops::ketbra(Level::One, Level::E))?)
                + &(&bd * &self.on_ion(j, &ion_ops::ketbra(Level::Zero, Level::F))?);
            h = &h + &(&(&osc + &osc.adjoint()) * p.g_sideband);
        }
        if self.level == DynamicsLevel::FullWithAncilla {
            let g = p
                .ancilla_coupling()
                .ok_or_else(|| Error::param("g_ancilla", "required (directly or via kappa_eng and kappa)"))?;
            for (k, &cf) in self.ancillas.iter().enumerate() {
                let c = self.annihilation(cf)?;
                let cd = c.adjoint();
                let ions: Vec<usize> = if self.variant.is_collective() {
                    (0..N_IONS).collect()
                } else {
                    vec![k]
                };
                let lower = self.scaled_sum(
                    &ions.iter().map(|&j| self.lowering(j)).collect::<Result<Vec<_>>>()?,
                    1.0,
                );
                let t = &cd * &lower;
                h = &h + &(&(&t + &t.adjoint()) * g);
                h = &h + &(&(&cd * &c) * p.detuning_ancilla);
            }
        }
        self.encode(&h)
    }

    /// (ω/2) Σ σ^z_j on the physical qubits.
    pub fn signal_hamiltonian(&self, omega: f64) -> Result<SparseOperator> {
        let z: Vec<_> = (0..N_IONS)
            .map(|j| self.on_ion(j, &ion_ops::sigma_z()))
            .collect::<Result<_>>()?;
        self.physical(&self.scaled_sum(&z, omega / 2.0))
    }

    /// Physical bit- and phase-flip noise; each operator only when its rate
    /// is positive.
    pub fn noise_jumps(&self, p: &ModelParams) -> Result<Vec<SparseOperator>> {
        let x: Vec<_> = (0..N_IONS)
            .map(|j| self.on_ion(j, &ion_ops::sigma_x()))
            .collect::<Result<_>>()?;
        let z: Vec<_> = (0..N_IONS)
            .map(|j| self.on_ion(j, &ion_ops::sigma_z()))
            .collect::<Result<_>>()?;
        let mut out = Vec::new();
        if p.gamma > 0.0 {
            for o in &x {
                out.push(self.physical(&(o * p.gamma.sqrt()))?);
            }
        }
        if p.gamma_collective_x > 0.0 {
            out.push(self.physical(&self.scaled_sum(&x, p.gamma_collective_x.sqrt()))?);
        }
        if p.gamma_z > 0.0 {
            for o in &z {
                out.push(self.physical(&(o * p.gamma_z.sqrt()))?);
            }
        }
        if p.gamma_collective_z > 0.0 {
            out.push(self.physical(&self.scaled_sum(&z, p.gamma_collective_z.sqrt()))?);
        }
        Ok(out)
    }

    /// √κ_eng (|0⟩⟨e| + |1⟩⟨f|) per ion, or one summed operator for
    /// collective variants.
    pub fn engineered_jumps(&self, p: &ModelParams) -> Result<Vec<SparseOperator>> {
        let k = p.require_kappa_eng()?;
        if k == 0.0 {
            return Ok(Vec::new());
        }
        let low: Vec<_> = (0..N_IONS).map(|j| self.lowering(j)).collect::<Result<_>>()?;
        if self.variant.is_collective() {
            Ok(vec![self.encode(&self.scaled_sum(&low, k.sqrt()))?])
        } else {
            low.iter().map(|l| self.encode(&(l * k.sqrt()))).collect()
        }
    }

    /// √κ c_j for every ancilla mode.
    pub fn ancilla_jumps(&self, p: &ModelParams) -> Result<Vec<SparseOperator>> {
        if self.level != DynamicsLevel::FullWithAncilla {
            return Err(Error::UnsupportedLevel("ancilla modes", self.level.to_string()));
        }
        if p.kappa == 0.0 {
            return Ok(Vec::new());
        }
        self.ancillas
            .iter()
            .map(|&c| self.physical(&(&self.annihilation(c)? * p.kappa.sqrt())))
            .collect()
    }

    /// `σ^-_j P_{n_1=n} + σ^+_j P_{n_0=n}` in the code basis (unscaled).
    pub fn conditional_flip(&self, j: usize, n: usize) -> Result<SparseOperator> {
        let sm = self.on_ion(j, &ion_ops::sigma_minus())?;
        let sp = self.on_ion(j, &ion_ops::sigma_plus())?;
        let p1 = projector_count(&self.space, Level::One, n)?;
        let p0 = projector_count(&self.space, Level::Zero, n)?;
        self.encode(&(&(&sm * &p1) + &(&sp * &p0)))
    }

    fn per_ion_or_collective(&self, ops: Vec<SparseOperator>) -> Vec<SparseOperator> {
        if self.variant.is_collective() {
            let mut acc = SparseOperator::zeros(&self.basis);
            for o in &ops {
                acc = &acc + o;
            }
            vec![acc]
        } else {
            ops
        }
    }

    /// Ideal majority-vote correction at rate Γ_corr.
    pub fn ideal_correction_jumps(&self, gamma_corr: f64) -> Result<Vec<SparseOperator>> {
        if !(gamma_corr > 0.0) {
            return Ok(Vec::new());
        }
        let ops = (0..N_IONS)
            .map(|j| Ok(&self.conditional_flip(j, 1)? * gamma_corr.sqrt()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.per_ion_or_collective(ops))
    }

    /// Effective correction jumps Σ_n √κ_n (σ^-_j P_{n_1=n} + σ^+_j P_{n_0=n}).
    pub fn effective_jumps(&self, kappa_eff: [f64; 3]) -> Result<Vec<SparseOperator>> {
        let mut ops = Vec::new();
        for j in 0..N_IONS {
            let mut l = SparseOperator::zeros(&self.basis);
            for (n, k) in kappa_eff.iter().enumerate() {
                if *k > 0.0 {
                    l = &l + &(&self.conditional_flip(j, n + 1)? * k.sqrt());
                }
            }
            ops.push(l);
        }
        Ok(self.per_ion_or_collective(ops))
    }

    /// Spontaneous emission √(γ/2)|n⟩⟨m| and decay of modes a, b.
    pub fn imperfection_jumps(&self, p: &ModelParams) -> Result<Vec<SparseOperator>> {
        let mut out = Vec::new();
        if p.gamma_spont > 0.0 && self.mode_a.is_some() {
            let amp = (p.gamma_spont / 2.0).sqrt();
            for j in 0..N_IONS {
                for m in [Level::E, Level::F] {
                    for n in [Level::Zero, Level::One] {
                        let l = self.on_ion(j, &ion_ops::ketbra(n, m))?;
                        out.push(self.physical(&(&l * amp))?);
                    }
                }
            }
        }
        for (f, k) in [(self.mode_a, p.kappa_a), (self.mode_b, p.kappa_b)] {
            if let (Some(f), true) = (f, k > 0.0) {
                out.push(self.physical(&(&self.annihilation(f)? * k.sqrt()))?);
            }
        }
        Ok(out)
    }

    /// c₀|000⟩ + c₁|111⟩ (or |+++⟩, |−−−⟩) with all modes in vacuum.
    pub fn codeword(&self, c0: C64, c1: C64) -> Result<StateVector> {
        let norm = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        let n_f = self.space.factors().len();
        let d0 = vec![0; n_f];
        let mut d1 = vec![0; n_f];
        d1[..N_IONS].fill(1);
        let mut v = nalgebra::DVector::zeros(self.space.dim());
        v[self.space.index(&d0)?] = c0;
        v[self.space.index(&d1)?] = c1;
        if let Some(w) = &self.conj {
            v = w.apply(&v)?;
        }
        let restricted = nalgebra::DVector::from_iterator(
            self.basis.len(),
            self.basis.indices().iter().map(|&i| v[i]),
        );
        StateVector::new(&self.basis, restricted)
    }

    /// Single-error states X_j|ψ⟩ in the code basis.
    pub fn single_error_states(&self, psi: &StateVector) -> Result<Vec<StateVector>> {
        (0..N_IONS)
            .map(|j| {
                let x = self.encode(&self.on_ion(j, &ion_ops::sigma_x())?)?;
                StateVector::new(&self.basis, x.apply(psi.amplitudes())?)
            })
            .collect()
    }

    /// Projector onto the ground levels with every mode in vacuum.
    pub fn ground_vacuum_projector(&self) -> SparseOperator {
        let trip = self
            .basis
            .indices()
            .iter()
            .enumerate()
            .filter(|(_, &c)| self.space.excitation_number(c) == 0)
            .map(|(k, _)| (k, k, C64::new(1.0, 0.0)));
        SparseOperator::from_triplets(&self.basis, trip).expect("indices within basis")
    }

    /// Probes `P_l`, `P_c`, `P_u` and `excited` for codeword `psi`.
    pub fn population_probes(&self, psi: &StateVector) -> Result<Vec<Probe>> {
        let pl = Probe::pure("P_l", psi)?.op;
        let mut pc = SparseOperator::zeros(&self.basis);
        for e in self.single_error_states(psi)? {
            pc = &pc + &Probe::pure("", &e)?.op;
        }
        let gv = self.ground_vacuum_projector();
        let pu = &(&gv - &pl) - &pc;
        let exc = &SparseOperator::identity(&self.basis) - &gv;
        Ok(vec![
            Probe::new("P_l", pl),
            Probe::new("P_c", pc),
            Probe::new("P_u", pu),
            Probe::new("excited", exc),
        ])
    }

    /// Basis permutations for the ion transpositions (1 2) and (2 3); with
    /// individual ancillas the matching ancilla modes move along.
    pub fn ion_symmetries(&self) -> Vec<Vec<usize>> {
        [(0, 1), (1, 2)]
            .iter()
            .map(|&(i, j)| {
                (0..self.basis.len())
                    .map(|k| {
                        let mut d = self.space.digits(self.basis.composite(k));
                        d.swap(i, j);
                        if self.ancillas.len() == N_IONS {
                            d.swap(self.ancillas[i], self.ancillas[j]);
                        }
                        self.basis
                            .position(self.space.index(&d).expect("valid digits"))
                            .expect("truncation is permutation invariant")
                    })
                    .collect()
            })
            .collect()
    }

    /// Complete Lindblad model for this level. The effective level needs
    /// its rates from [`crate::effective`].
    pub fn lindblad_model(&self, p: &ModelParams) -> Result<LindbladModel> {
        p.validate()?;
        let mut jumps = self.noise_jumps(p)?;
        let h = match self.level {
            DynamicsLevel::FullWithAncilla => {
                jumps.extend(self.ancilla_jumps(p)?);
                jumps.extend(self.imperfection_jumps(p)?);
                self.hamiltonian(p)?
            }
            DynamicsLevel::EngineeredDecay => {
                jumps.extend(self.engineered_jumps(p)?);
                jumps.extend(self.imperfection_jumps(p)?);
                self.hamiltonian(p)?
            }
            DynamicsLevel::IdealJump => {
                jumps.extend(self.ideal_correction_jumps(p.gamma_corr)?);
                SparseOperator::zeros(&self.basis)
            }
            DynamicsLevel::Uncorrected => SparseOperator::zeros(&self.basis),
            DynamicsLevel::EffectiveJump => {
                let rates = crate::effective::EffectiveRates::from_params(p)?;
                jumps.extend(self.effective_jumps(rates.kappa_eff)?);
                SparseOperator::zeros(&self.basis)
            }
            DynamicsLevel::RateModel => {
                return Err(Error::UnsupportedLevel("a Lindblad model", self.level.to_string()))
            }
        };
        let h = if p.signal != 0.0 {
            &h + &self.signal_hamiltonian(p.signal)?
        } else {
            h
        };
        Ok(LindbladModel::new(h, jumps)?.with_symmetries(self.ion_symmetries()))
    }
}

/// Hamiltonian at the default truncation (one excitation, n_max = 1).
pub fn build_hamiltonian(
    params: &ModelParams,
    variant: CodeVariant,
    level: DynamicsLevel,
) -> Result<SparseOperator> {
    if !matches!(
        level,
        DynamicsLevel::FullWithAncilla | DynamicsLevel::EngineeredDecay
    ) {
        return Err(Error::UnsupportedLevel("a Hamiltonian", level.to_string()));
    }
    System::new(variant, level, Truncation::default())?.hamiltonian(params)
}

/// Noise jumps on the three-ion ground manifold.
pub fn build_noise_jumps(params: &ModelParams) -> Result<Vec<SparseOperator>> {
    ground_system(CodeVariant::BitFlipIndividual)?.noise_jumps(params)
}

/// Engineered decay jumps on the engineered-decay basis.
pub fn build_engineered_jumps(params: &ModelParams) -> Result<Vec<SparseOperator>> {
    System::new(
        CodeVariant::BitFlipIndividual,
        DynamicsLevel::EngineeredDecay,
        Truncation::default(),
    )?
    .engineered_jumps(params)
}

pub fn build_ancilla_jumps(
    params: &ModelParams,
    variant: CodeVariant,
) -> Result<Vec<SparseOperator>> {
    System::new(variant, DynamicsLevel::FullWithAncilla, Truncation::default())?
        .ancilla_jumps(params)
}

/// Ideal correction jumps on the ground manifold.
pub fn build_ideal_correction_jumps(
    gamma_corr: f64,
    variant: CodeVariant,
) -> Result<Vec<SparseOperator>> {
    ground_system(variant)?.ideal_correction_jumps(gamma_corr)
}

pub fn build_imperfection_jumps(params: &ModelParams) -> Result<Vec<SparseOperator>> {
    System::new(
        CodeVariant::BitFlipIndividual,
        DynamicsLevel::EngineeredDecay,
        Truncation::default(),
    )?
    .imperfection_jumps(params)
}

/// Codeword on the ground manifold.
pub fn initial_codeword(variant: CodeVariant, c0: C64, c1: C64) -> Result<StateVector> {
    ground_system(variant)?.codeword(c0, c1)
}

/// A single unprotected qubit under bit flips at rate Γ, prepared in |0⟩.
pub fn single_qubit_reference(gamma: f64) -> Result<(LindbladModel, StateVector)> {
    if !(gamma >= 0.0) {
        return Err(Error::param("gamma", "must be >= 0"));
    }
    let space = HilbertSpace::new(vec![Factor::Ion]);
    let basis = Basis::truncate(&space, 0)?;
    let x = embed(&ion_ops::sigma_x(), 0, &space)?.restrict(&basis)?;
    let model = LindbladModel::new(SparseOperator::zeros(&basis), vec![&x * gamma.sqrt()])?;
    Ok((model, StateVector::product(&basis, &[0])?))
}

/// The eight-dimensional ground manifold of three ions.
pub fn ground_system(variant: CodeVariant) -> Result<System> {
    System::new(variant, DynamicsLevel::IdealJump, Truncation::default())
}
