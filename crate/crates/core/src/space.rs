//! Composite Hilbert spaces of four-level ions and truncated bosonic modes.
//!
//! Composite indices are row-major over the factor list: the first factor is
//! the most significant digit. Ion levels are ordered `0, 1, e, f`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const ION_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Factor {
    Ion,
    Mode { n_max: usize },
}

impl Factor {
    pub fn dim(&self) -> usize {
        match *self {
            Factor::Ion => ION_DIM,
            Factor::Mode { n_max } => n_max + 1,
        }
    }

    /// Contribution of local level `k` to the excitation count.
    pub fn excitation(&self, k: usize) -> usize {
        match self {
            Factor::Ion => usize::from(k >= 2),
            Factor::Mode { .. } => k,
        }
    }
}

/// Ion level label. `Plus` and `Minus` are the ground-state superpositions
/// (|0⟩ ± |1⟩)/√2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Zero,
    One,
    E,
    F,
    Plus,
    Minus,
}

impl Level {
    /// Amplitudes of the level in the `0, 1, e, f` basis.
    pub fn ket(&self) -> [f64; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Level::Zero => [1.0, 0.0, 0.0, 0.0],
            Level::One => [0.0, 1.0, 0.0, 0.0],
            Level::E => [0.0, 0.0, 1.0, 0.0],
            Level::F => [0.0, 0.0, 0.0, 1.0],
            Level::Plus => [h, h, 0.0, 0.0],
            Level::Minus => [h, -h, 0.0, 0.0],
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(Level::Zero),
            "1" => Ok(Level::One),
            "e" => Ok(Level::E),
            "f" => Ok(Level::F),
            "+" => Ok(Level::Plus),
            "-" | "−" => Ok(Level::Minus),
            _ => Err(Error::InvalidLevel(s.to_string())),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Level::Zero => "0",
            Level::One => "1",
            Level::E => "e",
            Level::F => "f",
            Level::Plus => "+",
            Level::Minus => "-",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    factors: Vec<Factor>,
    strides: Vec<usize>,
    dim: usize,
}

impl HilbertSpace {
    pub fn new(factors: Vec<Factor>) -> Arc<Self> {
        let mut strides = vec![1; factors.len()];
        for i in (0..factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * factors[i + 1].dim();
        }
        let dim = factors.iter().map(Factor::dim).product();
        Arc::new(HilbertSpace {
            factors,
            strides,
            dim,
        })
    }

    /// `n_ions` ions followed by `n_modes` modes sharing one cutoff.
    pub fn ions_and_modes(n_ions: usize, n_modes: usize, n_max: usize) -> Arc<Self> {
        let mut f = vec![Factor::Ion; n_ions];
        f.extend(std::iter::repeat(Factor::Mode { n_max }).take(n_modes));
        Self::new(f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> Result<Factor> {
        self.factors.get(i).copied().ok_or(Error::FactorOutOfRange {
            index: i,
            len: self.factors.len(),
        })
    }

    pub fn stride(&self, i: usize) -> usize {
        self.strides[i]
    }

    pub fn ion_factors(&self) -> Vec<usize> {
        self.factor_indices(|f| matches!(f, Factor::Ion))
    }

    pub fn mode_factors(&self) -> Vec<usize> {
        self.factor_indices(|f| matches!(f, Factor::Mode { .. }))
    }

    fn factor_indices(&self, pred: impl Fn(&Factor) -> bool) -> Vec<usize> {
        (0..self.factors.len())
            .filter(|&i| pred(&self.factors[i]))
            .collect()
    }

    /// Local level of factor `i` in composite state `index`.
    pub fn digit(&self, index: usize, i: usize) -> usize {
        (index / self.strides[i]) % self.factors[i].dim()
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        (0..self.factors.len()).map(|i| self.digit(index, i)).collect()
    }

    pub fn index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.factors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.factors.len(),
                actual: digits.len(),
            });
        }
        let mut idx = 0;
        for (i, (&d, f)) in digits.iter().zip(&self.factors).enumerate() {
            if d >= f.dim() {
                return Err(Error::DimensionMismatch {
                    expected: f.dim(),
                    actual: d,
                });
            }
            idx += d * self.strides[i];
        }
        Ok(idx)
    }

    /// Number of ions in `e` or `f` plus the total photon number.
    pub fn excitation_number(&self, index: usize) -> usize {
        self.factors
            .iter()
            .enumerate()
            .map(|(i, f)| f.excitation(self.digit(index, i)))
            .sum()
    }
}

/// An ordered subset of composite basis states of a space.
#[derive(Debug, Clone)]
pub struct Basis {
    space: Arc<HilbertSpace>,
    indices: Vec<usize>,
    lookup: Vec<Option<usize>>,
    max_exc: Option<usize>,
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.space, &other.space) || self.space == other.space)
            && self.indices == other.indices
    }
}

impl Basis {
    pub fn full(space: &Arc<HilbertSpace>) -> Arc<Self> {
        Self::from_indices(space, (0..space.dim()).collect(), None)
    }

    /// Keeps every state whose excitation number is at most `max_exc`.
    pub fn truncate(space: &Arc<HilbertSpace>, max_exc: i64) -> Result<Arc<Self>> {
        if max_exc < 0 {
            return Err(Error::EmptyBasis(max_exc));
        }
        let m = max_exc as usize;
        let idx = (0..space.dim())
            .filter(|&i| space.excitation_number(i) <= m)
            .collect();
        Ok(Self::from_indices(space, idx, Some(m)))
    }

    fn from_indices(
        space: &Arc<HilbertSpace>,
        indices: Vec<usize>,
        max_exc: Option<usize>,
    ) -> Arc<Self> {
        let mut lookup = vec![None; space.dim()];
        for (k, &i) in indices.iter().enumerate() {
            lookup[i] = Some(k);
        }
        Arc::new(Basis {
            space: space.clone(),
            indices,
            lookup,
            max_exc,
        })
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn max_exc(&self) -> Option<usize> {
        self.max_exc
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.space.dim()
    }

    /// Composite index of the `k`-th retained state.
    pub fn composite(&self, k: usize) -> usize {
        self.indices[k]
    }

    /// Position of a composite index in this basis, if retained.
    pub fn position(&self, composite: usize) -> Option<usize> {
        self.lookup.get(composite).copied().flatten()
    }

    /// Position of the state with the given per-factor levels.
    pub fn position_of(&self, digits: &[usize]) -> Result<Option<usize>> {
        Ok(self.position(self.space.index(digits)?))
    }
}
