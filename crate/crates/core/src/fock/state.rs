use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::config::HilbertConfig;
use crate::error::{Error, Result};

/// Pure state in the truncated number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: DVector<C64>,
}

impl StateVector {
    /// Validates the norm and the tail invariant of `cfg`.
    pub fn new(cfg: &HilbertConfig, amps: DVector<C64>) -> Result<Self> {
        if amps.len() != cfg.dim {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim,
                found: amps.len(),
            });
        }
        let norm_sqr = amps.norm_squared();
        if (norm_sqr - 1.0).abs() > cfg.atol.max(1e-12) {
            return Err(Error::NotNormalized { norm_sqr });
        }
        let tail_mass: f64 = amps.rows_range(cfg.tail_start()..).norm_squared();
        if tail_mass > cfg.tail_tol {
            return Err(Error::UnderResolved {
                tail_mass,
                tol: cfg.tail_tol,
            });
        }
        Ok(Self { amps })
    }

    /// Normalizes `amps` before validating it.
    pub fn normalized(cfg: &HilbertConfig, mut amps: DVector<C64>) -> Result<Self> {
        let norm = amps.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized {
                norm_sqr: norm * norm,
            });
        }
        amps.unscale_mut(norm);
        Self::new(cfg, amps)
    }

    /// Number state `|n>`.
    pub fn fock(cfg: &HilbertConfig, n: usize) -> Result<Self> {
        if n >= cfg.dim {
            return Err(Error::CutoffTooSmall {
                required: n + 1,
                dim: cfg.dim,
            });
        }
        let mut amps = DVector::zeros(cfg.dim);
        amps[n] = C64::new(1.0, 0.0);
        Self::new(cfg, amps)
    }

    pub(crate) fn from_raw(amps: DVector<C64>) -> Self {
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn tail_mass(&self, cfg: &HilbertConfig) -> f64 {
        self.amps.rows_range(cfg.tail_start()..).norm_squared()
    }

    /// `<psi|op|psi>`.
    pub fn expectation(&self, op: &OperatorMatrix) -> Result<C64> {
        check_dim(op.dim(), self.dim())?;
        Ok(self.amps.dotc(&(&op.mat * &self.amps)))
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            mat: &self.amps * self.amps.adjoint(),
        }
    }

    /// Applies an operator and renormalizes the result.
    pub fn evolve(&self, cfg: &HilbertConfig, op: &OperatorMatrix) -> Result<StateVector> {
        check_dim(op.dim(), self.dim())?;
        StateVector::normalized(cfg, &op.mat * &self.amps)
    }

    /// Multiplies amplitude `n` by `e^{i phi n}`, i.e. applies `exp(i phi n̂)`.
    pub fn rotated(&self, phi: f64) -> StateVector {
        let amps = DVector::from_iterator(
            self.dim(),
            self.amps
                .iter()
                .enumerate()
                .map(|(n, c)| c * C64::from_polar(1.0, phi * n as f64)),
        );
        StateVector { amps }
    }
}

/// Mixed state in the truncated number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    mat: DMatrix<C64>,
}

impl DensityOperator {
    /// Checks Hermiticity, unit trace and positivity (smallest eigenvalue
    /// `>= -atol`).
    pub fn new(cfg: &HilbertConfig, mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != cfg.dim || mat.ncols() != cfg.dim {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim,
                found: mat.nrows(),
            });
        }
        let herm_err = hermitian_defect(&mat);
        if herm_err > cfg.atol {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (max defect {herm_err:.3e})"
            )));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > cfg.atol || tr.im.abs() > cfg.atol {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        let min_eig = min_eigenvalue(&mat);
        if min_eig < -cfg.atol {
            return Err(Error::InvalidDensity(format!(
                "smallest eigenvalue {min_eig:.3e} is negative"
            )));
        }
        Ok(Self { mat })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        psi.to_density()
    }

    /// Convex mixture of pure states with weights summing to one.
    pub fn mixture(cfg: &HilbertConfig, parts: &[(f64, &StateVector)]) -> Result<Self> {
        let mut mat = DMatrix::zeros(cfg.dim, cfg.dim);
        for (w, psi) in parts {
            if *w < 0.0 {
                return Err(Error::InvalidArgument("negative mixture weight".into()));
            }
            check_dim(cfg.dim, psi.dim())?;
            mat += psi.to_density().mat * C64::from(*w);
        }
        Self::new(cfg, mat)
    }

    /// Thermal state with mean photon number `nbar`, truncated and renormalized.
    pub fn thermal(cfg: &HilbertConfig, nbar: f64) -> Result<Self> {
        if nbar < 0.0 {
            return Err(Error::InvalidArgument("nbar must be non-negative".into()));
        }
        let q = nbar / (1.0 + nbar);
        let mut mat = DMatrix::zeros(cfg.dim, cfg.dim);
        let mut p = 1.0 / (1.0 + nbar);
        let mut total = 0.0;
        for n in 0..cfg.dim {
            mat[(n, n)] = C64::from(p);
            total += p;
            p *= q;
        }
        let tail: f64 = (cfg.tail_start()..cfg.dim).map(|n| mat[(n, n)].re).sum();
        if tail / total > cfg.tail_tol {
            return Err(Error::UnderResolved {
                tail_mass: tail / total,
                tol: cfg.tail_tol,
            });
        }
        mat.unscale_mut(total);
        Ok(Self { mat })
    }

    pub(crate) fn from_raw(mat: DMatrix<C64>) -> Self {
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.mat[(n, n)].re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.mat)
    }

    pub fn mean_photon_number(&self) -> f64 {
        (0..self.dim())
            .map(|n| n as f64 * self.mat[(n, n)].re)
            .sum()
    }

    pub fn parity(&self) -> f64 {
        (0..self.dim())
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } * self.mat[(n, n)].re)
            .sum()
    }

    /// Conjugates by `exp(i phi n̂)`, rotating the phase-space picture by `phi`.
    pub fn rotated(&self, phi: f64) -> DensityOperator {
        let d = self.dim();
        let mat = DMatrix::from_fn(d, d, |i, j| {
            self.mat[(i, j)] * C64::from_polar(1.0, phi * (i as f64 - j as f64))
        });
        DensityOperator { mat }
    }

    /// Embeds the state into a larger truncation (zero padding).
    pub fn padded(&self, dim: usize) -> Result<DensityOperator> {
        if dim < self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: dim,
            });
        }
        let mut mat = DMatrix::zeros(dim, dim);
        mat.view_mut((0, 0), (self.dim(), self.dim()))
            .copy_from(&self.mat);
        Ok(DensityOperator { mat })
    }
}

/// Dense operator in the truncated number basis.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    pub mat: DMatrix<C64>,
    pub hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(mat: DMatrix<C64>, hermitian: bool) -> Self {
        Self { mat, hermitian }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim), true)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        Self::new(self.mat.adjoint(), self.hermitian)
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.mat)
    }

    /// Upper-left `k x k` block.
    pub fn block(&self, k: usize) -> DMatrix<C64> {
        self.mat.view((0, 0), (k, k)).into_owned()
    }

    /// Max entrywise distance on the upper-left `k x k` block.
    pub fn block_distance(&self, other: &OperatorMatrix, k: usize) -> f64 {
        max_abs_diff(&self.block(k), &other.block(k))
    }

    /// Ascending eigenvalues (Hermitian operators only).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = self
            .mat
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        vals.sort_by(f64::total_cmp);
        vals
    }
}

/// `Tr(op rho)`.
pub fn expectation(op: &OperatorMatrix, rho: &DensityOperator) -> Result<C64> {
    check_dim(op.dim(), rho.dim())?;
    Ok(trace_of_product(&op.mat, &rho.mat))
}

/// `<psi|rho|psi>`.
pub fn fidelity_with_pure(rho: &DensityOperator, psi: &StateVector) -> Result<f64> {
    check_dim(rho.dim(), psi.dim())?;
    let v = &rho.mat * &psi.amps;
    Ok(psi.amps.dotc(&v).re)
}

pub(crate) fn trace_of_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> HilbertConfig {
        HilbertConfig::new(12).unwrap()
    }

    #[test]
    fn rejects_unnormalized_and_tail_heavy() {
        let c = cfg();
        let mut v = DVector::zeros(12);
        v[0] = C64::new(0.5, 0.0);
        assert!(matches!(
            StateVector::new(&c, v.clone()),
            Err(Error::NotNormalized { .. })
        ));
        v[0] = C64::new(0.0, 0.0);
        v[11] = C64::new(1.0, 0.0);
        assert!(matches!(
            StateVector::new(&c, v),
            Err(Error::UnderResolved { .. })
        ));
    }

    #[test]
    fn density_validation() {
        let c = cfg();
        let mut m = DMatrix::zeros(12, 12);
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        let err = DensityOperator::new(&c, m).unwrap_err();
        assert!(matches!(err, Error::InvalidDensity(_)));

        let psi = StateVector::fock(&c, 2).unwrap();
        let rho = DensityOperator::new(&c, psi.to_density().into_matrix()).unwrap();
        assert!((rho.mean_photon_number() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn fidelity_of_fock_states() {
        let c = cfg();
        let a = StateVector::fock(&c, 1).unwrap();
        let b = StateVector::fock(&c, 3).unwrap();
        assert_eq!(fidelity_with_pure(&a.to_density(), &b).unwrap(), 0.0);
        assert!((fidelity_with_pure(&a.to_density(), &a).unwrap() - 1.0).abs() < 1e-15);
        let other = HilbertConfig::new(13).unwrap();
        let d = StateVector::fock(&other, 1).unwrap();
        assert!(matches!(
            fidelity_with_pure(&a.to_density(), &d),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn thermal_state_mean() {
        let c = HilbertConfig::new(80).unwrap();
        let rho = DensityOperator::thermal(&c, 0.5).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        assert!((rho.mean_photon_number() - 0.5).abs() < 1e-10);
    }
}
