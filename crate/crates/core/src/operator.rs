//! Sparse complex operators on a (possibly truncated) basis.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::space::{Basis, Factor, HilbertSpace, Level};
use crate::C64;

#[derive(Debug, Clone)]
pub struct SparseOperator {
    basis: Arc<Basis>,
    entries: BTreeMap<(usize, usize), C64>,
}

pub(crate) fn same_basis(a: &Arc<Basis>, b: &Arc<Basis>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl SparseOperator {
    pub fn zeros(basis: &Arc<Basis>) -> Self {
        SparseOperator {
            basis: basis.clone(),
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(basis: &Arc<Basis>) -> Self {
        let entries = (0..basis.len()).map(|i| ((i, i), C64::new(1.0, 0.0))).collect();
        SparseOperator {
            basis: basis.clone(),
            entries,
        }
    }

    /// Builds an operator from `(row, col, value)` triples; repeated positions add.
    pub fn from_triplets(
        basis: &Arc<Basis>,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self> {
        let n = basis.len();
        let mut op = Self::zeros(basis);
        for (r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: r.max(c),
                });
            }
            op.add_entry(r, c, v);
        }
        Ok(op)
    }

    pub fn from_dense(basis: &Arc<Basis>, m: &DMatrix<C64>) -> Result<Self> {
        let n = basis.len();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: m.nrows(),
            });
        }
        let mut op = Self::zeros(basis);
        for c in 0..n {
            for r in 0..n {
                let v = m[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    op.entries.insert((r, c), v);
                }
            }
        }
        Ok(op)
    }

    fn add_entry(&mut self, r: usize, c: usize, v: C64) {
        let e = self.entries.entry((r, c)).or_insert(C64::new(0.0, 0.0));
        *e += v;
        if *e == C64::new(0.0, 0.0) {
            self.entries.remove(&(r, c));
        }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.entries.get(&(r, c)).copied().unwrap_or_default()
    }

    /// Nonzero entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.entries.iter().map(|(&(r, c), &v)| (r, c, v))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if same_basis(&self.basis, &other.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self::zeros(&self.basis);
        if s != C64::new(0.0, 0.0) {
            out.entries = self.entries.iter().map(|(&k, &v)| (k, v * s)).collect();
        }
        out
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut out = self.clone();
        for (&(r, c), &v) in &other.entries {
            out.add_entry(r, c, v);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&-other)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); self.dim()];
        for (&(r, c), &v) in &other.entries {
            rows[r].push((c, v));
        }
        let mut out = Self::zeros(&self.basis);
        for (&(i, k), &a) in &self.entries {
            for &(j, b) in &rows[k] {
                out.add_entry(i, j, a * b);
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        SparseOperator {
            basis: self.basis.clone(),
            entries: self
                .entries
                .iter()
                .map(|(&(r, c), v)| ((c, r), v.conj()))
                .collect(),
        }
    }

    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: v.len(),
            });
        }
        let mut out = DVector::zeros(self.dim());
        for (&(r, c), &a) in &self.entries {
            out[r] += a * v[c];
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (&(r, c), &v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest entrywise modulus of `A − A†`.
    pub fn hermitian_deviation(&self) -> f64 {
        self.entries
            .iter()
            .map(|(&(r, c), &v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Largest entrywise modulus of the difference of two operators.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self
            .checked_sub(other)?
            .entries
            .values()
            .map(|v| v.norm())
            .fold(0.0, f64::max))
    }

    /// Projects onto `target`, dropping rows and columns outside it.
    pub fn restrict(&self, target: &Arc<Basis>) -> Result<Self> {
        let src = self.basis.space();
        let dst = target.space();
        if !(Arc::ptr_eq(src, dst) || src == dst) {
            return Err(Error::BasisMismatch);
        }
        let mut out = Self::zeros(target);
        for (&(r, c), &v) in &self.entries {
            let rr = target.position(self.basis.composite(r));
            let cc = target.position(self.basis.composite(c));
            if let (Some(rr), Some(cc)) = (rr, cc) {
                out.entries.insert((rr, cc), v);
            }
        }
        Ok(out)
    }

    /// `U A U†`.
    pub fn conjugate_by(&self, u: &Self) -> Result<Self> {
        u.checked_mul(self)?.checked_mul(&u.adjoint())
    }
}

impl PartialEq for SparseOperator {
    fn eq(&self, other: &Self) -> bool {
        same_basis(&self.basis, &other.basis) && self.entries == other.entries
    }
}

impl Neg for &SparseOperator {
    type Output = SparseOperator;
    fn neg(self) -> SparseOperator {
        self.scale(C64::new(-1.0, 0.0))
    }
}

// The operator traits panic on basis mismatch; use the checked_* methods
// where mismatched inputs are possible.
impl Add for &SparseOperator {
    type Output = SparseOperator;
    fn add(self, rhs: &SparseOperator) -> SparseOperator {
        self.checked_add(rhs).expect("operator basis mismatch")
    }
}

impl Sub for &SparseOperator {
    type Output = SparseOperator;
    fn sub(self, rhs: &SparseOperator) -> SparseOperator {
        self.checked_sub(rhs).expect("operator basis mismatch")
    }
}

impl Mul for &SparseOperator {
    type Output = SparseOperator;
    fn mul(self, rhs: &SparseOperator) -> SparseOperator {
        self.checked_mul(rhs).expect("operator basis mismatch")
    }
}

impl Mul<C64> for &SparseOperator {
    type Output = SparseOperator;
    fn mul(self, s: C64) -> SparseOperator {
        self.scale(s)
    }
}

impl Mul<f64> for &SparseOperator {
    type Output = SparseOperator;
    fn mul(self, s: f64) -> SparseOperator {
        self.scale(C64::new(s, 0.0))
    }
}

/// Acts as `local` on factor `factor` and as the identity elsewhere.
pub fn embed(
    local: &DMatrix<C64>,
    factor: usize,
    space: &Arc<HilbertSpace>,
) -> Result<SparseOperator> {
    let f = space.factor(factor)?;
    let d = f.dim();
    if local.nrows() != d || local.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: local.nrows(),
        });
    }
    let basis = Basis::full(space);
    let stride = space.stride(factor);
    let mut out = SparseOperator::zeros(&basis);
    for col in 0..space.dim() {
        let k = space.digit(col, factor);
        for r in 0..d {
            let v = local[(r, k)];
            if v != C64::new(0.0, 0.0) {
                let row = col + r * stride - k * stride;
                out.entries.insert((row, col), v);
            }
        }
    }
    Ok(out)
}

/// Projector onto states with exactly `count` ions in `level`.
pub fn projector_count(
    space: &Arc<HilbertSpace>,
    level: Level,
    count: usize,
) -> Result<SparseOperator> {
    let ions = space.ion_factors();
    let basis = Basis::full(space);
    if count > ions.len() {
        return Ok(SparseOperator::zeros(&basis));
    }
    let p = ion_ops::projector(level);
    let q = DMatrix::identity(4, 4) - &p;
    let ps: Vec<_> = ions
        .iter()
        .map(|&i| embed(&p, i, space))
        .collect::<Result<_>>()?;
    let qs: Vec<_> = ions
        .iter()
        .map(|&i| embed(&q, i, space))
        .collect::<Result<_>>()?;
    let mut total = SparseOperator::zeros(&basis);
    for mask in 0u32..(1 << ions.len()) {
        if mask.count_ones() as usize != count {
            continue;
        }
        let mut term = SparseOperator::identity(&basis);
        for j in 0..ions.len() {
            let f = if mask & (1 << j) != 0 { &ps[j] } else { &qs[j] };
            term = term.checked_mul(f)?;
        }
        total = total.checked_add(&term)?;
    }
    Ok(total)
}

/// Small dense single-factor operators.
pub mod ion_ops {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// `|a⟩⟨b|` on one ion.
    pub fn ketbra(a: Level, b: Level) -> DMatrix<C64> {
        let ka = a.ket();
        let kb = b.ket();
        DMatrix::from_fn(4, 4, |i, j| c(ka[i] * kb[j]))
    }

    pub fn projector(l: Level) -> DMatrix<C64> {
        ketbra(l, l)
    }

    pub fn sigma_x() -> DMatrix<C64> {
        ketbra(Level::Zero, Level::One) + ketbra(Level::One, Level::Zero)
    }

    pub fn sigma_y() -> DMatrix<C64> {
        let i = C64::new(0.0, 1.0);
        ketbra(Level::One, Level::Zero) * i - ketbra(Level::Zero, Level::One) * i
    }

    pub fn sigma_z() -> DMatrix<C64> {
        ketbra(Level::Zero, Level::Zero) - ketbra(Level::One, Level::One)
    }

    /// `|0⟩⟨1|`.
    pub fn sigma_minus() -> DMatrix<C64> {
        ketbra(Level::Zero, Level::One)
    }

    /// `|1⟩⟨0|`.
    pub fn sigma_plus() -> DMatrix<C64> {
        ketbra(Level::One, Level::Zero)
    }

    /// Annihilation operator on a mode truncated at `n_max`.
    pub fn annihilation(n_max: usize) -> DMatrix<C64> {
        let d = n_max + 1;
        DMatrix::from_fn(d, d, |i, j| {
            if j == i + 1 {
                c((j as f64).sqrt())
            } else {
                c(0.0)
            }
        })
    }

    pub fn creation(n_max: usize) -> DMatrix<C64> {
        annihilation(n_max).adjoint()
    }

    pub fn identity(f: Factor) -> DMatrix<C64> {
        DMatrix::identity(f.dim(), f.dim())
    }
}

#[cfg(test)]
mod tests {
    use super::ion_ops::*;
    use super::*;
    use proptest::prelude::*;

    fn three_ions() -> Arc<HilbertSpace> {
        HilbertSpace::ions_and_modes(3, 0, 1)
    }

    fn basis_vec(space: &Arc<HilbertSpace>, digits: &[usize]) -> DVector<C64> {
        let mut v = DVector::zeros(space.dim());
        v[space.index(digits).unwrap()] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn embed_sigma_x_flips_first_qubit() {
        let s = three_ions();
        let x1 = embed(&sigma_x(), 0, &s).unwrap();
        let out = x1.apply(&basis_vec(&s, &[0, 0, 0])).unwrap();
        assert_eq!(out, basis_vec(&s, &[1, 0, 0]));
    }

    #[test]
    fn embed_identity_is_identity() {
        let s = HilbertSpace::ions_and_modes(2, 1, 2);
        for i in 0..s.factors().len() {
            let id = embed(&identity(s.factors()[i]), i, &s).unwrap();
            assert_eq!(id, SparseOperator::identity(&Basis::full(&s)));
        }
    }

    #[test]
    fn creation_at_top_of_ladder_vanishes() {
        let s = HilbertSpace::ions_and_modes(1, 1, 1);
        let ad = embed(&creation(1), 1, &s).unwrap();
        let out = ad.apply(&basis_vec(&s, &[0, 1])).unwrap();
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn embed_errors() {
        let s = three_ions();
        assert!(matches!(
            embed(&annihilation(1), 0, &s),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            embed(&sigma_x(), 5, &s),
            Err(Error::FactorOutOfRange { .. })
        ));
    }

    #[test]
    fn projector_count_examples() {
        let s = three_ions();
        let p11 = projector_count(&s, Level::One, 1).unwrap();
        let v = basis_vec(&s, &[1, 0, 0]);
        assert_eq!(p11.apply(&v).unwrap(), v);
        let w = p11.apply(&basis_vec(&s, &[1, 1, 0])).unwrap();
        assert!(w.iter().all(|z| z.norm() == 0.0));
        let p03 = projector_count(&s, Level::Zero, 3).unwrap();
        let v = basis_vec(&s, &[0, 0, 0]);
        assert_eq!(p03.apply(&v).unwrap(), v);
    }

    #[test]
    fn projector_counts_resolve_identity() {
        let s = HilbertSpace::ions_and_modes(3, 1, 1);
        let id = SparseOperator::identity(&Basis::full(&s));
        for l in [Level::Zero, Level::One, Level::E, Level::F, Level::Plus, Level::Minus] {
            let mut sum = SparseOperator::zeros(&Basis::full(&s));
            for n in 0..=3 {
                let p = projector_count(&s, l, n).unwrap();
                assert!(p.max_abs_diff(&(&p * &p)).unwrap() < 1e-14);
                assert!(p.is_hermitian(1e-15));
                sum = &sum + &p;
            }
            assert!(sum.max_abs_diff(&id).unwrap() < 1e-14, "{l}");
        }
    }

    #[test]
    fn restrict_keeps_hermiticity() {
        let s = HilbertSpace::ions_and_modes(3, 2, 1);
        let b = Basis::truncate(&s, 1).unwrap();
        let a = embed(&annihilation(1), 3, &s).unwrap();
        let sp = embed(&ketbra(Level::One, Level::E), 0, &s).unwrap();
        let h = &(&a.adjoint() * &sp) + &(&sp.adjoint() * &a);
        let hr = h.restrict(&b).unwrap();
        assert_eq!(hr.dim(), 48);
        assert!(hr.is_hermitian(0.0));
        assert!(!hr.is_zero());
    }

    #[test]
    fn mismatched_bases_rejected() {
        let a = SparseOperator::identity(&Basis::full(&three_ions()));
        let b = SparseOperator::identity(&Basis::full(&HilbertSpace::ions_and_modes(2, 0, 1)));
        assert_eq!(a.checked_add(&b).unwrap_err(), Error::BasisMismatch);
        assert_eq!(a.checked_mul(&b).unwrap_err(), Error::BasisMismatch);
    }

    fn small_matrix(d: usize) -> impl Strategy<Value = DMatrix<C64>> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d).prop_map(move |v| {
            DMatrix::from_iterator(d, d, v.into_iter().map(|(a, b)| C64::new(a, b)))
        })
    }

    proptest! {
        #[test]
        fn disjoint_embeddings_commute(a in small_matrix(4), b in small_matrix(3)) {
            let s = HilbertSpace::new(vec![Factor::Ion, Factor::Mode { n_max: 2 }, Factor::Ion]);
            let ea = embed(&a, 0, &s).unwrap();
            let eb = embed(&b, 1, &s).unwrap();
            let d = (&ea * &eb).max_abs_diff(&(&eb * &ea)).unwrap();
            prop_assert!(d < 1e-12);
        }

        #[test]
        fn excitation_is_additive(idx in 0usize..1024) {
            let s = HilbertSpace::new(vec![
                Factor::Ion, Factor::Ion, Factor::Mode { n_max: 2 }, Factor::Mode { n_max: 1 },
            ]);
            let idx = idx % s.dim();
            let by_factor: usize = s.digits(idx).iter().zip(s.factors())
                .map(|(&k, f)| f.excitation(k)).sum();
            prop_assert_eq!(s.excitation_number(idx), by_factor);
        }
    }
}
