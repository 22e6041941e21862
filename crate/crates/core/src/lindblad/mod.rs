//! Lindblad models and master-equation evolution.

mod integrator;
mod superop;

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{same_basis, SparseOperator};
use crate::space::Basis;
use crate::state::{DensityMatrix, StateVector, HERMITIAN_TOL};
use crate::C64;

pub use integrator::Stats;
use integrator::{Dopri5, StepControl};
use superop::ReducedGenerator;

/// A Hamiltonian and jump operators on a common basis, plus optional basis
/// permutations under which the model is expected to be invariant.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    basis: Arc<Basis>,
    h: SparseOperator,
    jumps: Vec<SparseOperator>,
    symmetries: Vec<Vec<usize>>,
}

impl LindbladModel {
    pub fn new(h: SparseOperator, jumps: Vec<SparseOperator>) -> Result<Self> {
        let basis = h.basis().clone();
        if jumps.iter().any(|l| !same_basis(&basis, l.basis())) {
            return Err(Error::BasisMismatch);
        }
        let dev = h.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(LindbladModel {
            basis,
            h,
            jumps: jumps.into_iter().filter(|l| !l.is_zero()).collect(),
            symmetries: Vec::new(),
        })
    }

    /// Declares basis permutations (as position maps) expected to commute
    /// with the dynamics. Each one is verified before use and ignored if it
    /// does not hold.
    pub fn with_symmetries(mut self, perms: Vec<Vec<usize>>) -> Self {
        self.symmetries = perms;
        self
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn hamiltonian(&self) -> &SparseOperator {
        &self.h
    }

    pub fn jumps(&self) -> &[SparseOperator] {
        &self.jumps
    }

    pub fn symmetries(&self) -> &[Vec<usize>] {
        &self.symmetries
    }

    /// Adds a Hermitian term to the Hamiltonian.
    pub fn add_hamiltonian(&mut self, extra: &SparseOperator) -> Result<()> {
        let dev = extra.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        self.h = self.h.checked_add(extra)?;
        Ok(())
    }

    pub fn add_jumps(&mut self, extra: impl IntoIterator<Item = SparseOperator>) -> Result<()> {
        for l in extra {
            if !same_basis(&self.basis, l.basis()) {
                return Err(Error::BasisMismatch);
            }
            if !l.is_zero() {
                self.jumps.push(l);
            }
        }
        Ok(())
    }
}

/// `−i[H,ρ] + Σ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`, evaluated on the dense matrix.
pub fn liouvillian_apply(model: &LindbladModel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if !same_basis(model.basis(), rho.basis()) {
        return Err(Error::BasisMismatch);
    }
    let r = rho.matrix();
    let h = model.h.to_dense();
    let mi = C64::new(0.0, -1.0);
    let mut out = (&h * r - r * &h) * mi;
    for l in &model.jumps {
        let l = l.to_dense();
        let ld = l.adjoint();
        let ldl = &ld * &l;
        out += &l * r * &ld - (&ldl * r + r * &ldl) * C64::new(0.5, 0.0);
    }
    DensityMatrix::new_unchecked(model.basis(), out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step; `None` leaves it to the error controller.
    pub max_step: Option<f64>,
    pub max_steps: usize,
    /// Merge density-matrix entries along verified symmetry orbits.
    pub use_symmetry: bool,
    /// Store ρ at every grid point.
    pub keep_states: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-8,
            atol: 1e-10,
            max_step: None,
            max_steps: 50_000_000,
            use_symmetry: true,
            keep_states: false,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::param("integrator.rtol/atol", "tolerances must be > 0"));
        }
        if let Some(m) = self.max_step {
            if !(m > 0.0) {
                return Err(Error::param("integrator.max_step", "must be > 0"));
            }
        }
        Ok(())
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }
}

/// A named Hermitian observable recorded along the trajectory as `Tr(Aρ)`.
#[derive(Debug, Clone)]
pub struct Probe {
    pub name: String,
    pub op: SparseOperator,
}

impl Probe {
    pub fn new(name: impl Into<String>, op: SparseOperator) -> Self {
        Probe {
            name: name.into(),
            op,
        }
    }

    pub fn pure(name: impl Into<String>, psi: &StateVector) -> Result<Self> {
        let amps = psi.amplitudes();
        let trip = (0..amps.len()).flat_map(|i| {
            (0..amps.len()).filter_map(move |j| {
                let v = amps[i] * amps[j].conj();
                (v != C64::new(0.0, 0.0)).then_some((i, j, v))
            })
        });
        Ok(Probe::new(name, SparseOperator::from_triplets(psi.basis(), trip)?))
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    /// `Tr(ρ(t) ρ₀)`, the fidelity for a pure initial state.
    pub fidelity: Vec<f64>,
    pub trace: Vec<f64>,
    /// Probe traces in the order they were requested.
    pub observables: Vec<(String, Vec<f64>)>,
    pub final_state: DensityMatrix,
    pub states: Option<Vec<DensityMatrix>>,
    pub stats: EvolutionStats,
}

impl EvolutionResult {
    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvolutionStats {
    pub steps: Stats,
    /// Number of reachable density-matrix entries.
    pub support: usize,
    /// Real coordinates actually integrated.
    pub coordinates: usize,
    pub symmetries_used: usize,
    pub renormalizations: usize,
}

fn check_grid(t: &[f64]) -> Result<()> {
    if t.is_empty() || t[0] != 0.0 || t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidTimeGrid);
    }
    Ok(())
}

/// Evolves ρ₀ over `t_grid`, recording the overlap with ρ₀.
pub fn evolve(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    config: &IntegratorConfig,
) -> Result<EvolutionResult> {
    evolve_with(model, rho0, t_grid, config, &[])
}

/// Like [`evolve`], also recording `Tr(Aρ)` for each probe.
pub fn evolve_with(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    config: &IntegratorConfig,
    probes: &[Probe],
) -> Result<EvolutionResult> {
    config.validate()?;
    check_grid(t_grid)?;
    if !same_basis(model.basis(), rho0.basis()) {
        return Err(Error::BasisMismatch);
    }
    for p in probes {
        if !same_basis(model.basis(), p.op.basis()) {
            return Err(Error::BasisMismatch);
        }
    }
    let syms: &[Vec<usize>] = if config.use_symmetry {
        model.symmetries()
    } else {
        &[]
    };
    let gen = ReducedGenerator::build(model, rho0.matrix(), syms);
    let rho0_op = SparseOperator::from_dense(model.basis(), rho0.matrix())?;
    let w_fid = gen.functional(&rho0_op);
    let w_tr = gen.functional(&SparseOperator::identity(model.basis()));
    let w_probes: Vec<Vec<f64>> = probes.iter().map(|p| gen.functional(&p.op)).collect();
    let dot = |w: &[f64], y: &[f64]| w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();

    let n_t = t_grid.len();
    let mut fidelity = Vec::with_capacity(n_t);
    let mut trace = Vec::with_capacity(n_t);
    let mut obs: Vec<Vec<f64>> = vec![Vec::with_capacity(n_t); probes.len()];
    let mut states = config.keep_states.then(Vec::new);
    let mut renorm = 0;

    let mut record = |y: &mut [f64], t: f64| -> Result<()> {
        let tr = dot(&w_tr, y);
        if (tr - 1.0).abs() > 1e-8 {
            log::warn!("trace drift {:.3e} at t = {t}; renormalizing", tr - 1.0);
            renorm += 1;
            y.iter_mut().for_each(|v| *v /= tr);
        }
        fidelity.push(dot(&w_fid, y));
        trace.push(dot(&w_tr, y));
        for (o, w) in obs.iter_mut().zip(&w_probes) {
            o.push(dot(w, y));
        }
        if let Some(s) = states.as_mut() {
            s.push(DensityMatrix::new_unchecked(model.basis(), gen.decode(y))?);
        }
        Ok(())
    };

    let mut y = gen.encode(rho0.matrix());
    record(&mut y, 0.0)?;
    let ctl = StepControl {
        rtol: config.rtol,
        atol: config.atol,
        max_step: config.max_step,
        max_steps: config.max_steps,
    };
    let a = &gen.a;
    let mut solver = Dopri5::new(|x: &[f64], d: &mut [f64]| a.matvec(x, d), gen.n_coords, ctl);
    solver.integrate(&mut y, 0.0, &t_grid[1..], |gi, y| record(y, t_grid[gi + 1]))?;
    let steps = solver.stats;
    drop(record);

    let final_state = DensityMatrix::new_unchecked(model.basis(), gen.decode(&y))?;
    log::debug!(
        "evolve: dim {} support {} coords {} nnz {} syms {} steps {:?}",
        model.dim(),
        gen.support_len(),
        gen.n_coords,
        gen.a.nnz(),
        gen.symmetries_used,
        steps
    );
    Ok(EvolutionResult {
        times: t_grid.to_vec(),
        fidelity,
        trace,
        observables: probes.iter().map(|p| p.name.clone()).zip(obs).collect(),
        final_state,
        states,
        stats: EvolutionStats {
            steps,
            support: gen.support_len(),
            coordinates: gen.n_coords,
            symmetries_used: gen.symmetries_used,
            renormalizations: renorm,
        },
    })
}

/// Dense real-linear generator acting on the vectorized density matrix, for
/// small reference computations.
pub fn dense_superoperator(model: &LindbladModel) -> Result<DMatrix<C64>> {
    let n = model.dim();
    let mut s = DMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for i in 0..n {
            let mut unit = DMatrix::zeros(n, n);
            unit[(i, j)] = C64::new(1.0, 0.0);
            let out = liouvillian_apply(model, &DensityMatrix::new_unchecked(model.basis(), unit)?)?;
            for c in 0..n {
                for r in 0..n {
                    s[(r + c * n, i + j * n)] = out.matrix()[(r, c)];
                }
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{embed, ion_ops};
    use crate::space::{HilbertSpace, Level};
    use nalgebra::DVector;

    fn qubit() -> Arc<Basis> {
        Basis::truncate(&HilbertSpace::ions_and_modes(1, 0, 1), 0).unwrap()
    }

    fn sx(basis: &Arc<Basis>) -> SparseOperator {
        embed(&ion_ops::sigma_x(), 0, basis.space())
            .unwrap()
            .restrict(basis)
            .unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dissipator_on_ground_state() {
        let b = qubit();
        let m = LindbladModel::new(SparseOperator::zeros(&b), vec![sx(&b).scale(c(2f64.sqrt(), 0.0))])
            .unwrap();
        let rho = StateVector::product(&b, &[0]).unwrap().projector();
        let d = liouvillian_apply(&m, &rho).unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[c(-2., 0.), c(0., 0.), c(0., 0.), c(2., 0.)]);
        assert!((d.matrix() - want).norm() < 1e-14);
    }

    #[test]
    fn closed_system_is_commutator() {
        let b = qubit();
        let h = sx(&b);
        let m = LindbladModel::new(h.clone(), vec![]).unwrap();
        let psi = StateVector::normalized(&b, DVector::from_vec(vec![c(1., 0.), c(0., 1.)])).unwrap();
        let rho = psi.projector();
        let d = liouvillian_apply(&m, &rho).unwrap();
        let hd = h.to_dense();
        let want = (&hd * rho.matrix() - rho.matrix() * &hd) * c(0., -1.);
        assert!((d.matrix() - want).norm() < 1e-14);
        assert!(d.trace().norm() < 1e-14);
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let b = qubit();
        let h = embed(&ion_ops::sigma_minus(), 0, b.space()).unwrap().restrict(&b).unwrap();
        assert!(matches!(LindbladModel::new(h, vec![]), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn reduced_generator_matches_dense_liouvillian() {
        // Two ions with a mode, random-ish couplings, ion-swap symmetry.
        let s = HilbertSpace::ions_and_modes(2, 1, 1);
        let b = Basis::truncate(&s, 1).unwrap();
        let full = |m: DMatrix<C64>, f: usize| embed(&m, f, &s).unwrap().restrict(&b).unwrap();
        let a = full(ion_ops::annihilation(1), 2);
        let mut h = &(&a.adjoint() * &a) * 0.5;
        let mut jumps = vec![];
        for ion in 0..2 {
            let up = full(ion_ops::ketbra(Level::E, Level::One), ion);
            let sideband = &a.adjoint() * &up.adjoint();
            h = &h + &(&(&up + &up.adjoint()) * 0.7);
            h = &h + &(&(&sideband + &sideband.adjoint()) * 1.3);
            jumps.push(&full(ion_ops::sigma_x(), ion) * 0.4);
            jumps.push(&full(ion_ops::ketbra(Level::Zero, Level::E), ion) * 0.9);
        }
        let swap: Vec<usize> = (0..b.len())
            .map(|k| {
                let mut d = s.digits(b.composite(k));
                d.swap(0, 1);
                b.position_of(&d).unwrap().unwrap()
            })
            .collect();
        let model = LindbladModel::new(h, jumps).unwrap().with_symmetries(vec![swap]);
        let psi = StateVector::normalized(&b, {
            let mut v = DVector::zeros(b.len());
            v[b.position_of(&[0, 0, 0]).unwrap().unwrap()] = c(1.0, 0.0);
            v[b.position_of(&[1, 1, 0]).unwrap().unwrap()] = c(0.0, 1.0);
            v
        })
        .unwrap();
        let rho0 = psi.projector();
        let with_sym = ReducedGenerator::build(&model, rho0.matrix(), model.symmetries());
        let without = ReducedGenerator::build(&model, rho0.matrix(), &[]);
        assert_eq!(with_sym.symmetries_used, 1);
        assert!(with_sym.n_coords < without.n_coords);

        // A short evolution under both must agree with a dense RK oracle.
        let grid = [0.0, 0.3, 0.6];
        let cfg = IntegratorConfig::default().with_tolerances(1e-11, 1e-13);
        let r1 = evolve(&model, &rho0, &grid, &cfg).unwrap();
        let r2 = evolve(&model, &rho0, &grid, &IntegratorConfig { use_symmetry: false, ..cfg }).unwrap();
        assert!((r1.final_state.matrix() - r2.final_state.matrix()).norm() < 1e-9);

        let sup = dense_superoperator(&model).unwrap();
        let n = b.len();
        let mut v = DVector::from_iterator(n * n, (0..n * n).map(|k| rho0.matrix()[(k % n, k / n)]));
        let steps = 6000;
        let dt = 0.6 / steps as f64;
        for _ in 0..steps {
            let k1 = &sup * &v;
            let k2 = &sup * (&v + &k1 * c(dt / 2.0, 0.0));
            let k3 = &sup * (&v + &k2 * c(dt / 2.0, 0.0));
            let k4 = &sup * (&v + &k3 * c(dt, 0.0));
            v += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
        }
        let dense = DMatrix::from_fn(n, n, |i, j| v[i + j * n]);
        assert!((r1.final_state.matrix() - dense).norm() < 1e-9);
    }

    #[test]
    fn grid_validation() {
        let b = qubit();
        let m = LindbladModel::new(SparseOperator::zeros(&b), vec![]).unwrap();
        let rho = StateVector::product(&b, &[0]).unwrap().projector();
        let cfg = IntegratorConfig::default();
        for g in [&[][..], &[0.1, 0.2][..], &[0.0, 0.2, 0.2][..]] {
            assert_eq!(evolve(&m, &rho, g, &cfg).unwrap_err(), Error::InvalidTimeGrid);
        }
    }

    #[test]
    fn all_rates_zero_is_stationary() {
        let b = qubit();
        let m = LindbladModel::new(SparseOperator::zeros(&b), vec![]).unwrap();
        let psi = StateVector::normalized(&b, DVector::from_vec(vec![c(0.6, 0.), c(0., 0.8)])).unwrap();
        let rho = psi.projector();
        let r = evolve(&m, &rho, &[0.0, 1.0, 5.0], &IntegratorConfig::default()).unwrap();
        assert!((r.final_state.matrix() - rho.matrix()).norm() < 1e-15);
        assert!(r.fidelity.iter().all(|f| (f - 1.0).abs() < 1e-15));
    }
}
