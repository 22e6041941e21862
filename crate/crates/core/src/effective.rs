//! Adiabatic elimination of the excited manifold and the resulting rates.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::LindbladModel;
use crate::model::{CodeVariant, DynamicsLevel, ModelParams, System, Truncation};
use crate::operator::SparseOperator;
use crate::C64;

/// Broadening parameter of the strong-driving preparation rate.
pub const DEFAULT_R: f64 = 2.5;

/// Complex detunings Δ̃ = Δ − i(γ+κ_eng)/2 and δ̃ = δ − iκ_mode/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexDetunings {
    pub excited: C64,
    pub mode: C64,
}

impl ComplexDetunings {
    /// The mode linewidth is the mean of κ_a and κ_b.
    pub fn from_params(p: &ModelParams) -> Result<Self> {
        let k_eng = p.kappa_eng().unwrap_or(0.0);
        Ok(ComplexDetunings {
            excited: C64::new(p.delta(), -(p.gamma_spont + k_eng) / 2.0),
            mode: C64::new(p.delta_mode(), -(p.kappa_a + p.kappa_b) / 4.0),
        })
    }
}

/// (Δ̃_n,eff, δ̃_n,eff, G̃_n,eff) for the sector with `n` qubits able to flip.
pub fn effective_detunings(delta: C64, delta_mode: C64, g: f64, n: u32) -> Result<(C64, C64, C64)> {
    if delta == C64::new(0.0, 0.0) || delta_mode == C64::new(0.0, 0.0) {
        return Err(Error::ZeroDetuning(n));
    }
    if !(g > 0.0) || n == 0 {
        return Err(Error::param("g", "sideband coupling and n must be positive"));
    }
    let nf = n as f64;
    let g2 = g * g;
    Ok((
        delta - nf * g2 / delta_mode,
        delta_mode - nf * g2 / delta,
        nf.sqrt() * g - delta * delta_mode / (nf.sqrt() * g),
    ))
}

/// κ_eng Ω² / (4|Δ̃_n,eff|²).
pub fn kappa_eff(n: u32, omega: f64, kappa_eng: f64, delta_n_eff: C64) -> Result<f64> {
    if omega == 0.0 {
        return Ok(0.0);
    }
    let d2 = delta_n_eff.norm_sqr();
    if d2 == 0.0 {
        return Err(Error::ZeroDetuning(n));
    }
    Ok(kappa_eng * omega * omega / (4.0 * d2))
}

/// κ_eng Ω² / (κ_eng² + rΩ²); saturates at κ_eng/r.
pub fn kappa_eff1_strong(omega: f64, kappa_eng: f64, r: f64) -> f64 {
    let o2 = omega * omega;
    if o2 == 0.0 {
        return 0.0;
    }
    kappa_eng * o2 / (kappa_eng * kappa_eng + r * o2)
}

/// Excited-state population of the corrected codeword, to second order in Ω/G.
pub fn excited_fraction(omega: f64, g: f64) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::param("g_sideband", "must be positive"));
    }
    let s3 = 3f64.sqrt();
    let x = omega * omega / (g * g);
    Ok(3.0 * x / (s3 - 1.0).powi(2) + 3.0 * x / (s3 + 1.0).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EffectiveOptions {
    pub r: f64,
    pub strong_driving: bool,
    /// Feed the Stark-shift Hamiltonian of the elimination back into the model.
    pub include_stark_shifts: bool,
}

impl Default for EffectiveOptions {
    fn default() -> Self {
        EffectiveOptions {
            r: DEFAULT_R,
            strong_driving: true,
            include_stark_shifts: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRates {
    /// κ_eff,n for n = 1, 2, 3.
    pub kappa_eff: [f64; 3],
    pub r: f64,
    pub f_e: f64,
    pub strong_driving: bool,
}

impl EffectiveRates {
    pub fn from_params(p: &ModelParams) -> Result<Self> {
        Self::with_options(p, &EffectiveOptions::default())
    }

    pub fn with_options(p: &ModelParams, opts: &EffectiveOptions) -> Result<Self> {
        p.validate()?;
        let k_eng = p
            .kappa_eng()
            .ok_or_else(|| Error::param("kappa_eng", "required for effective rates"))?;
        let det = ComplexDetunings::from_params(p)?;
        let mut kappa = [0.0; 3];
        for (i, k) in kappa.iter_mut().enumerate() {
            let n = i as u32 + 1;
            let (d_eff, _, _) = effective_detunings(det.excited, det.mode, p.g_sideband, n)?;
            *k = if n == 1 && opts.strong_driving {
                let o2 = p.omega * p.omega;
                if o2 == 0.0 {
                    0.0
                } else {
                    k_eng * o2 / (4.0 * d_eff.norm_sqr() + opts.r * o2)
                }
            } else {
                kappa_eff(n, p.omega, k_eng, d_eff)?
            };
        }
        let f_e = if opts.strong_driving {
            excited_fraction(p.omega, p.g_sideband)?
        } else {
            0.0
        };
        Ok(EffectiveRates {
            kappa_eff: kappa,
            r: opts.r,
            f_e,
            strong_driving: opts.strong_driving,
        })
    }

    /// The correction rate, κ_eff,1.
    pub fn gamma_corr(&self) -> f64 {
        self.kappa_eff[0]
    }
}

/// Effective operators on the ground manifold, indexed by `ground`.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub ground: Vec<usize>,
    pub h_eff: DMatrix<C64>,
    pub jumps: Vec<DMatrix<C64>>,
}

fn components(h: &SparseOperator, members: &[usize]) -> Vec<Vec<usize>> {
    let pos: BTreeMap<usize, usize> = members.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let mut parent: Vec<usize> = (0..members.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (r, c, _) in h.iter() {
        if let (Some(&a), Some(&b)) = (pos.get(&r), pos.get(&c)) {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..members.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(members[i]);
    }
    groups.into_values().collect()
}

/// Eliminates every basis state outside `ground`: with X = H_NH⁻¹ V₊,
/// H_eff = −½ V₋ X + h.c. and L_k,eff = L_k X. `h_nh` is block-diagonalized
/// into its connected components and each block is solved directly.
pub fn effective_reduce(
    v_plus: &SparseOperator,
    h_nh: &SparseOperator,
    decays: &[SparseOperator],
    ground: &[usize],
) -> Result<Reduction> {
    let basis = v_plus.basis();
    let n = basis.len();
    let is_ground: Vec<bool> = (0..n).map(|k| ground.contains(&k)).collect();
    let excited: Vec<usize> = (0..n).filter(|&k| !is_ground[k]).collect();
    let ng = ground.len();
    let gpos: BTreeMap<usize, usize> = ground.iter().enumerate().map(|(i, &g)| (g, i)).collect();

    // X as a sparse map excited index -> row of ground amplitudes.
    let mut x: BTreeMap<usize, DVector<C64>> = BTreeMap::new();
    for block in components(h_nh, &excited) {
        let m = block.len();
        let mut rhs = DMatrix::<C64>::zeros(m, ng);
        let mut any = false;
        for (bi, &e) in block.iter().enumerate() {
            for (gi, &g) in ground.iter().enumerate() {
                let v = v_plus.get(e, g);
                if v != C64::new(0.0, 0.0) {
                    rhs[(bi, gi)] = v;
                    any = true;
                }
            }
        }
        if !any {
            continue;
        }
        let a = DMatrix::from_fn(m, m, |i, j| h_nh.get(block[i], block[j]));
        let sol = a.lu().solve(&rhs).ok_or_else(|| {
            let space = basis.space();
            Error::SingularBlock(format!("{:?}", space.digits(basis.composite(block[0]))))
        })?;
        if sol.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::SingularBlock(format!("{block:?}")));
        }
        for (bi, &e) in block.iter().enumerate() {
            x.insert(e, sol.row(bi).transpose());
        }
    }

    let mut vx = DMatrix::<C64>::zeros(ng, ng);
    for (r, c, v) in v_plus.iter() {
        if let (Some(xr), Some(&gi)) = (x.get(&r), gpos.get(&c)) {
            for gj in 0..ng {
                vx[(gi, gj)] += v.conj() * xr[gj];
            }
        }
    }
    let h_eff = (&vx + vx.adjoint()) * C64::new(-0.5, 0.0);

    let mut jumps = Vec::with_capacity(decays.len());
    for l in decays {
        let mut out = DMatrix::<C64>::zeros(ng, ng);
        for (r, c, v) in l.iter() {
            if let (Some(&gi), Some(xr)) = (gpos.get(&r), x.get(&c)) {
                for gj in 0..ng {
                    out[(gi, gj)] += v * xr[gj];
                }
            }
        }
        jumps.push(out);
    }
    Ok(Reduction {
        ground: ground.to_vec(),
        h_eff,
        jumps,
    })
}

/// Reduced engineered-decay model mapped onto the ground system of `variant`.
#[derive(Debug, Clone)]
pub struct GroundReduction {
    pub system: System,
    pub h_eff: SparseOperator,
    pub jumps: Vec<SparseOperator>,
}

/// Eliminates the excited levels and modes of the engineered-decay model.
/// Noise jumps act within the ground manifold and are not part of the
/// elimination.
pub fn reduce_engineered(p: &ModelParams, variant: CodeVariant) -> Result<GroundReduction> {
    let eng = System::new(variant, DynamicsLevel::EngineeredDecay, Truncation::default())?;
    let gsys = crate::model::ground_system(variant)?;
    let basis = eng.basis().clone();
    let space = basis.space().clone();
    let ground: Vec<usize> = (0..basis.len())
        .filter(|&k| space.excitation_number(basis.composite(k)) == 0)
        .collect();

    let drive_only = ModelParams {
        g_sideband: 0.0,
        detuning_excited: Some(0.0),
        detuning_mode: Some(0.0),
        ..p.clone()
    };
    let h_drive = eng.hamiltonian(&drive_only)?;
    let h_rest = &eng.hamiltonian(p)? - &h_drive;
    let mut decays = eng.engineered_jumps(p)?;
    decays.extend(eng.imperfection_jumps(p)?);
    let mut h_nh = h_rest.clone();
    for l in &decays {
        h_nh = &h_nh - &(&(&l.adjoint() * l) * C64::new(0.0, 0.5));
    }
    let v_plus = SparseOperator::from_triplets(
        &basis,
        h_drive
            .iter()
            .filter(|&(r, c, _)| ground.contains(&c) && !ground.contains(&r)),
    )?;
    let red = effective_reduce(&v_plus, &h_nh, &decays, &ground)?;

    let to_ground = |k: usize| -> Result<usize> {
        let d = space.digits(basis.composite(k));
        gsys.basis()
            .position_of(&d[..3])?
            .ok_or(Error::BasisMismatch)
    };
    let map: Vec<usize> = red.ground.iter().map(|&k| to_ground(k)).collect::<Result<_>>()?;
    let lift = |m: &DMatrix<C64>| -> Result<SparseOperator> {
        let trip = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .filter(|&(i, j)| m[(i, j)].norm() > 0.0)
            .map(|(i, j)| (map[i], map[j], m[(i, j)]));
        SparseOperator::from_triplets(gsys.basis(), trip)
    };
    let h_eff = lift(&red.h_eff)?;
    let jumps = red.jumps.iter().map(lift).collect::<Result<Vec<_>>>()?;
    Ok(GroundReduction {
        system: gsys,
        h_eff,
        jumps,
    })
}

/// Ground-manifold model with the effective correction jumps and noise.
pub fn build_effective_model(
    p: &ModelParams,
    variant: CodeVariant,
    opts: &EffectiveOptions,
) -> Result<(LindbladModel, EffectiveRates)> {
    let sys = System::new(variant, DynamicsLevel::EffectiveJump, Truncation::default())?;
    let rates = EffectiveRates::with_options(p, opts)?;
    let mut jumps = sys.noise_jumps(p)?;
    jumps.extend(sys.effective_jumps(rates.kappa_eff)?);
    let mut h = if p.signal != 0.0 {
        sys.signal_hamiltonian(p.signal)?
    } else {
        SparseOperator::zeros(sys.basis())
    };
    if opts.include_stark_shifts {
        h = &h + &reduce_engineered(p, variant)?.h_eff;
    }
    let model = LindbladModel::new(h, jumps)?.with_symmetries(sys.ion_symmetries());
    Ok((model, rates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::StateVector;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn detuning_examples() {
        let g = 40.0;
        let (d1, _, _) = effective_detunings(c(g, 0.0), c(g, 0.0), g, 1).unwrap();
        assert!(d1.norm() < 1e-12);
        let k = 3.0;
        let (d1, _, _) = effective_detunings(c(g, -k / 2.0), c(g, 0.0), g, 1).unwrap();
        assert!((d1 - c(0.0, -k / 2.0)).norm() < 1e-12);
        let (d2, _, _) = effective_detunings(c(g, 0.0), c(g, 0.0), g, 2).unwrap();
        assert!((d2 - c(-g, 0.0)).norm() < 1e-12);
        let (d3, _, _) = effective_detunings(c(g, 0.0), c(g, 0.0), g, 3).unwrap();
        assert!((d3.norm() - 2.0 * g).abs() < 1e-12);
        assert!(matches!(
            effective_detunings(c(0.0, 0.0), c(g, 0.0), g, 1),
            Err(Error::ZeroDetuning(1))
        ));
    }

    #[test]
    fn rate_examples() {
        let (o, k, g) = (0.3, 5.0, 70.0);
        assert!((kappa_eff(1, o, k, c(0.0, -k / 2.0)).unwrap() - o * o / k).abs() < 1e-15);
        assert!((kappa_eff(2, o, k, c(g, 0.0)).unwrap() - k * o * o / (4.0 * g * g)).abs() < 1e-18);
        assert_eq!(kappa_eff(1, 0.0, k, c(0.0, 0.0)).unwrap(), 0.0);
        assert!(kappa_eff(1, o, k, c(0.0, 0.0)).is_err());
        assert!((kappa_eff1_strong(k, k, 2.5) - k / 3.5).abs() < 1e-14);
        let r: f64 = 2.5;
        let om = (2.0 / r).sqrt() * k;
        assert!((kappa_eff1_strong(om, k, r) - 2.0 * k / (3.0 * r)).abs() < 1e-14);
        let small = 1e-4;
        assert!((kappa_eff1_strong(small, k, r) / (small * small / k) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn excited_fraction_examples() {
        assert_eq!(excited_fraction(0.0, 10.0).unwrap(), 0.0);
        let f = excited_fraction(0.01, 1.0).unwrap();
        assert!((f / 6e-4 - 1.0).abs() < 0.01);
        assert!(excited_fraction(1.0, 0.0).is_err());
    }

    #[test]
    fn closed_forms_at_resonance() {
        let (g, k, o) = (500.0, 4.0, 0.7);
        let p = ModelParams::engineered(1.0, g, k, o);
        let weak = EffectiveRates::with_options(
            &p,
            &EffectiveOptions {
                strong_driving: false,
                ..Default::default()
            },
        )
        .unwrap();
        // The engineered linewidth adds κ²/4 to |Δ̃_n,eff|² for n > 1.
        let q = k * k / 4.0;
        let want = [o * o / k, k * o * o / (4.0 * (g * g + q)), k * o * o / (4.0 * (4.0 * g * g + q))];
        for (a, b) in weak.kappa_eff.iter().zip(want) {
            assert!((a / b - 1.0).abs() < 1e-12);
        }
        assert!((weak.kappa_eff[1] / weak.kappa_eff[2] - 4.0).abs() < 1e-4);
        let strong = EffectiveRates::from_params(&p).unwrap();
        assert!((strong.gamma_corr() - kappa_eff1_strong(o, k, DEFAULT_R)).abs() < 1e-14);
        assert_eq!(strong.kappa_eff[1], weak.kappa_eff[1]);
    }

    proptest! {
        #[test]
        fn strong_rate_monotone_and_bounded(k in 0.1f64..100.0, a in 0.0f64..50.0, b in 0.0f64..50.0, r in 0.5f64..5.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(kappa_eff1_strong(lo, k, r) <= kappa_eff1_strong(hi, k, r) + 1e-15);
            prop_assert!(kappa_eff1_strong(hi, k, r) <= k / r * (1.0 + 1e-12));
        }

        #[test]
        fn closed_forms_hold_for_all_parameters(g in 1.0f64..1e4, k in 0.01f64..100.0, o in 0.0f64..10.0) {
            let p = ModelParams::engineered(1.0, g, k, o);
            let rates = EffectiveRates::with_options(&p, &EffectiveOptions { strong_driving: false, ..Default::default() }).unwrap();
            if o > 0.0 {
                let det = ComplexDetunings::from_params(&p).unwrap();
                for n in 1..=3u32 {
                    let (d, _, _) = effective_detunings(det.excited, det.mode, g, n).unwrap();
                    let closed = match n {
                        1 => o * o / k,
                        _ => k * o * o / (4.0 * (d.re * d.re + k * k / 4.0)),
                    };
                    prop_assert!((rates.kappa_eff[n as usize - 1] / closed - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_coupling_gives_zero_operators() {
        let p = ModelParams::engineered(1.0, 20.0, 2.0, 0.0);
        let red = reduce_engineered(&p, CodeVariant::BitFlipIndividual).unwrap();
        assert!(red.h_eff.is_zero());
        assert!(red.jumps.iter().all(|j| j.is_zero()));
    }

    #[test]
    fn two_by_two_block_inversion() {
        // {|e00⟩, |100⟩⊗|1_a⟩} with Δ = δ = G and decay κ_eng on |e⟩.
        let (g, k, o) = (30.0, 2.0, 0.1);
        let h = DMatrix::from_row_slice(2, 2, &[c(g, -k / 2.0), c(g, 0.0), c(g, 0.0), c(g, 0.0)]);
        let inv = h.try_inverse().unwrap();
        let amp = k.sqrt() * inv[(0, 0)] * (o / 2.0);
        assert!((amp.norm_sqr() - o * o / k).abs() < 1e-14);

        let p = ModelParams::engineered(1.0, g, k, o);
        let red = reduce_engineered(&p, CodeVariant::BitFlipIndividual).unwrap();
        let sys = &red.system;
        let from = StateVector::product(sys.basis(), &[1, 0, 0]).unwrap();
        let to = StateVector::product(sys.basis(), &[0, 0, 0]).unwrap();
        let out = red.jumps[0].apply(from.amplitudes()).unwrap();
        let a = to.amplitudes().dotc(&out);
        assert!((a - amp).norm() < 1e-14);
    }

    #[test]
    fn reduction_matches_effective_jump_structure() {
        let (g, k, o) = (60.0, 3.0, 0.2);
        let p = ModelParams::engineered(1.0, g, k, o);
        for variant in [CodeVariant::BitFlipIndividual, CodeVariant::PhaseFlipIndividual] {
            let red = reduce_engineered(&p, variant).unwrap();
            let weak = EffectiveRates::with_options(
                &p,
                &EffectiveOptions {
                    strong_driving: false,
                    ..Default::default()
                },
            )
            .unwrap();
            let sys = &red.system;
            for (j, l) in red.jumps.iter().enumerate() {
                // Compare L†L, which removes the (state-dependent) phases.
                let want = &sys.effective_jumps(weak.kappa_eff).unwrap()[j];
                let a = &l.adjoint() * l;
                let b = &want.adjoint() * want;
                assert!(a.max_abs_diff(&b).unwrap() < 1e-12 * weak.kappa_eff[0]);
            }
        }
    }

    #[test]
    fn effective_model_is_eight_dimensional() {
        let p = ModelParams::engineered(1.0, 100.0, 5.0, 1.0);
        let (m, rates) =
            build_effective_model(&p, CodeVariant::BitFlipIndividual, &EffectiveOptions::default()).unwrap();
        assert_eq!(m.dim(), 8);
        assert_eq!(m.jumps().len(), 6);
        assert!(rates.f_e > 0.0 && rates.f_e < 1.0);
        let quiet = ModelParams::engineered(1.0, 100.0, 5.0, 0.0);
        let (m, rates) =
            build_effective_model(&quiet, CodeVariant::BitFlipIndividual, &EffectiveOptions::default()).unwrap();
        assert_eq!(rates.kappa_eff, [0.0; 3]);
        assert_eq!(m.jumps().len(), 3);
    }
}
