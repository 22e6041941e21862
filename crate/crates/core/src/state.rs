use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::operator::{same_basis, SparseOperator};
use crate::space::Basis;
use crate::C64;

pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = -1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    basis: Arc<Basis>,
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(basis: &Arc<Basis>, amps: DVector<C64>) -> Result<Self> {
        if amps.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                actual: amps.len(),
            });
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(StateVector {
            basis: basis.clone(),
            amps,
        })
    }

    /// Normalizes `amps` first; fails only on a zero vector.
    pub fn normalized(basis: &Arc<Basis>, amps: DVector<C64>) -> Result<Self> {
        let n = amps.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Self::new(basis, amps.unscale(n))
    }

    /// The basis state with per-factor levels `digits`.
    pub fn product(basis: &Arc<Basis>, digits: &[usize]) -> Result<Self> {
        let k = basis
            .position_of(digits)?
            .ok_or_else(|| Error::param("digits", format!("{digits:?} not in basis")))?;
        let mut v = DVector::zeros(basis.len());
        v[k] = C64::new(1.0, 0.0);
        Self::new(basis, v)
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if !same_basis(&self.basis, &other.basis) {
            return Err(Error::BasisMismatch);
        }
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            basis: self.basis.clone(),
            data: &self.amps * self.amps.adjoint(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    basis: Arc<Basis>,
    data: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(basis: &Arc<Basis>, data: DMatrix<C64>) -> Result<Self> {
        let rho = Self::new_unchecked(basis, data)?;
        rho.validate(HERMITIAN_TOL, TRACE_TOL, PSD_TOL)?;
        Ok(rho)
    }

    /// Checks only the shape; used for derivatives and intermediate states.
    pub fn new_unchecked(basis: &Arc<Basis>, data: DMatrix<C64>) -> Result<Self> {
        let n = basis.len();
        if data.nrows() != n || data.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: data.nrows(),
            });
        }
        Ok(DensityMatrix {
            basis: basis.clone(),
            data,
        })
    }

    pub fn maximally_mixed(basis: &Arc<Basis>) -> Self {
        let n = basis.len();
        DensityMatrix {
            basis: basis.clone(),
            data: DMatrix::identity(n, n).unscale(n as f64),
        }
    }

    pub fn validate(&self, herm_tol: f64, trace_tol: f64, psd_tol: f64) -> Result<()> {
        let dev = self.hermitian_deviation();
        if dev > herm_tol {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {dev:e})"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < psd_tol {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.data
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.data.nrows();
        let mut dev = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                dev = dev.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.data + self.data.adjoint()).unscale(2.0);
        SymmetricEigen::new(h).eigenvalues.min()
    }

    /// `Tr(ρ A)`.
    pub fn expectation(&self, a: &SparseOperator) -> Result<C64> {
        if !same_basis(&self.basis, a.basis()) {
            return Err(Error::BasisMismatch);
        }
        Ok(a.iter().map(|(r, c, v)| v * self.data[(c, r)]).sum())
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity(&self, target: &StateVector) -> Result<f64> {
        if !same_basis(&self.basis, target.basis()) {
            return Err(Error::BasisMismatch);
        }
        let psi = target.amplitudes();
        Ok((psi.adjoint() * &self.data * psi)[(0, 0)].re)
    }
}
