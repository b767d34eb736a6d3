use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::config::{check_amplitude_cutoff, HilbertConfig};
use super::linalg;
use super::state::{OperatorMatrix, StateVector};
use crate::error::{Error, Result};

pub const MAX_SQUEEZE: f64 = 1.5;

/// Ladder operator with `<n-1|a|n> = sqrt(n)`.
pub fn annihilation(cfg: &HilbertConfig) -> OperatorMatrix {
    OperatorMatrix::new(annihilation_matrix(cfg.dim), false)
}

pub fn creation(cfg: &HilbertConfig) -> OperatorMatrix {
    annihilation(cfg).adjoint()
}

pub(crate) fn annihilation_matrix(dim: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::from((n as f64).sqrt());
    }
    a
}

/// `a^k` as a matrix, with exact elements `sqrt(n!/(n-k)!)`.
pub(crate) fn annihilation_power(dim: usize, k: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in k..dim {
        let v: f64 = ((n - k + 1)..=n).map(|j| (j as f64).sqrt()).product();
        a[(n - k, n)] = C64::from(v);
    }
    a
}

/// Number operator `n̂` and parity `Π = e^{i pi n̂}`.
pub fn number_parity_ops(cfg: &HilbertConfig) -> (OperatorMatrix, OperatorMatrix) {
    let n = DMatrix::from_diagonal(&DVector::from_fn(cfg.dim, |i, _| C64::from(i as f64)));
    let p = DMatrix::from_diagonal(&DVector::from_fn(cfg.dim, |i, _| {
        C64::from(if i % 2 == 0 { 1.0 } else { -1.0 })
    }));
    (OperatorMatrix::new(n, true), OperatorMatrix::new(p, true))
}

/// `D(beta) = exp[beta* a - beta a†]`.
///
/// With this sign convention `D(beta)|0> = |-beta>`. This is the exponential
/// of the truncated generator, hence exactly unitary; elements close to the
/// truncation edge differ from the infinite-dimensional operator. State-level
/// helpers such as [`displace_state`] work in a padded space instead.
pub fn displacement(cfg: &HilbertConfig, beta: C64) -> Result<OperatorMatrix> {
    check_amplitude_cutoff(cfg.dim, beta.norm())?;
    Ok(OperatorMatrix::new(
        linalg::displacement_block(beta, cfg.dim, cfg.dim, cfg.dim),
        false,
    ))
}

/// `S(r) = exp[r/2 (a^2 - a†^2)]`; `Var(x)` of `S(r)|0>` is `e^{-2r}/2`.
/// Exponential of the truncated generator, like [`displacement`].
pub fn squeeze(cfg: &HilbertConfig, r: f64) -> Result<OperatorMatrix> {
    check_squeeze(r)?;
    Ok(OperatorMatrix::new(
        linalg::squeeze_block(r, cfg.dim, cfg.dim, cfg.dim),
        false,
    ))
}

pub(crate) fn check_squeeze(r: f64) -> Result<()> {
    if r.is_finite() && r.abs() <= MAX_SQUEEZE {
        Ok(())
    } else {
        Err(Error::SqueezeOutOfRange(r))
    }
}

/// `alpha^n / sqrt(n!)` for `n < len`, without the Gaussian prefactor.
fn coherent_series(alpha: C64, len: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(len);
    let mut t = C64::new(1.0, 0.0);
    for n in 0..len {
        if n > 0 {
            t *= alpha / (n as f64).sqrt();
        }
        out.push(t);
    }
    out
}

/// Coherent state `|alpha>`, renormalized after truncation.
pub fn coherent_state(cfg: &HilbertConfig, alpha: C64) -> Result<StateVector> {
    check_amplitude_cutoff(cfg.dim, alpha.norm())?;
    let amps = DVector::from_vec(coherent_series(alpha, cfg.dim));
    StateVector::normalized(cfg, amps)
}

/// Balanced cat `(|alpha> ± |-alpha>)` normalized.
///
/// Built from the Fock series directly (only even or odd terms survive), which
/// stays accurate for small `|alpha|` where `1 - e^{-2|alpha|^2}` cancels.
pub fn cat_state(cfg: &HilbertConfig, alpha: C64, parity: super::Parity) -> Result<StateVector> {
    multi_headed_cat(
        cfg,
        alpha,
        2,
        if parity == super::Parity::Even { 0 } else { 1 },
    )
}

/// `sum_k e^{i k m 2pi/N} |alpha e^{i k 2pi/N}>` normalized. Its Fock support
/// is `n ≡ -m (mod N)`.
pub fn multi_headed_cat(
    cfg: &HilbertConfig,
    alpha: C64,
    heads: usize,
    sector: usize,
) -> Result<StateVector> {
    if heads < 2 || sector >= heads {
        return Err(Error::BadSymmetryIndex { heads, sector });
    }
    check_amplitude_cutoff(cfg.dim, alpha.norm())?;
    let residue = (heads - sector) % heads;
    let series = coherent_series(alpha, cfg.dim);
    let amps = DVector::from_fn(cfg.dim, |n, _| {
        if n % heads == residue {
            series[n]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    if amps.norm() == 0.0 {
        // alpha = 0 with a sector whose lowest member is n = residue
        let mut v = DVector::zeros(cfg.dim);
        v[residue] = C64::new(1.0, 0.0);
        return StateVector::new(cfg, v);
    }
    StateVector::normalized(cfg, amps)
}

/// Finite-photon approximations of small cats.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhotonicApprox {
    /// `S(r)|1>`, odd parity.
    SinglePhoton,
    /// `S(r)(sqrt(w)|0> + sqrt(1-w)|2>)`, even parity.
    ZeroTwo { omega: f64 },
}

pub fn photonic_approximation(
    cfg: &HilbertConfig,
    kind: PhotonicApprox,
    r: f64,
) -> Result<StateVector> {
    check_squeeze(r)?;
    let mut seed = DVector::zeros(cfg.dim);
    match kind {
        PhotonicApprox::SinglePhoton => seed[1] = C64::new(1.0, 0.0),
        PhotonicApprox::ZeroTwo { omega } => {
            if !(0.0..=1.0).contains(&omega) {
                return Err(Error::InvalidArgument(format!(
                    "omega must lie in [0, 1], got {omega}"
                )));
            }
            seed[0] = C64::from(omega.sqrt());
            seed[2] = C64::from((1.0 - omega).sqrt());
        }
    }
    let work = linalg::squeeze_work_dim(cfg.dim, r);
    let s = linalg::squeeze_block(r, cfg.dim, 3, work);
    let amps = s * seed.rows(0, 3);
    StateVector::normalized(cfg, amps)
}

/// `S(r)|psi>` for a state supported on the first `cfg.dim` levels, computed
/// in the padded squeeze space.
pub fn squeeze_state(cfg: &HilbertConfig, psi: &StateVector, r: f64) -> Result<StateVector> {
    check_squeeze(r)?;
    let support = psi.dim();
    let work = linalg::squeeze_work_dim(cfg.dim.max(support), r);
    let s = linalg::squeeze_block(r, cfg.dim, support, work);
    StateVector::normalized(cfg, s * psi.amplitudes())
}

/// Displaces a pure state by `D(beta)` (the `exp[beta* a - beta a†]` convention).
pub fn displace_state(cfg: &HilbertConfig, psi: &StateVector, beta: C64) -> Result<StateVector> {
    let support = psi.dim();
    let work = linalg::displacement_work_dim(cfg.dim.max(support), beta.norm());
    let d = linalg::displacement_block(beta, cfg.dim, support, work);
    StateVector::normalized(cfg, d * psi.amplitudes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::state::{expectation, max_abs_diff, DensityOperator};
    use crate::fock::Parity;

    fn cfg(dim: usize) -> HilbertConfig {
        HilbertConfig::new(dim).unwrap()
    }

    fn unitarity_defect(op: &OperatorMatrix, k: usize) -> f64 {
        let full = op.mat.adjoint() * &op.mat;
        let block = full.view((0, 0), (k, k)).into_owned();
        max_abs_diff(&block, &DMatrix::identity(k, k))
    }

    #[test]
    fn ladder_matrix_dim3() {
        let a = annihilation(&cfg(8));
        assert_eq!(a.mat[(0, 1)], C64::from(1.0));
        assert!((a.mat[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.mat[(0, 0)], C64::from(0.0));
        assert_eq!(a.mat[(2, 1)], C64::from(0.0));
        let vac = StateVector::fock(&cfg(8), 0).unwrap();
        assert!((&a.mat * vac.amplitudes()).norm() == 0.0);
    }

    #[test]
    fn commutator_on_lower_block() {
        let c = cfg(30);
        let a = annihilation(&c).mat;
        let comm = &a * a.adjoint() - a.adjoint() * &a;
        let k = c.dim - 1;
        let block = comm.view((0, 0), (k, k)).into_owned();
        assert!(max_abs_diff(&block, &DMatrix::identity(k, k)) < c.atol);
    }

    #[test]
    fn annihilation_expectation_on_coherent() {
        let c = cfg(40);
        let psi = coherent_state(&c, C64::from(0.7)).unwrap();
        let v = psi.expectation(&annihilation(&c)).unwrap();
        assert!((v - C64::from(0.7)).norm() < 1e-8);
    }

    #[test]
    fn parity_properties() {
        let c = cfg(40);
        let (_, pi) = number_parity_ops(&c);
        let one = StateVector::fock(&c, 1).unwrap();
        assert_eq!(one.expectation(&pi).unwrap().re, -1.0);
        let sq = &pi.mat * &pi.mat;
        assert_eq!(max_abs_diff(&sq, &DMatrix::identity(40, 40)), 0.0);
        let beta = coherent_state(&c, C64::from(1.0)).unwrap();
        let p = beta.expectation(&pi).unwrap().re;
        assert!((p - (-2.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn displacement_identity_inverse_and_unitarity() {
        let c = cfg(40);
        let d0 = displacement(&c, C64::from(0.0)).unwrap();
        assert!(max_abs_diff(&d0.mat, &DMatrix::identity(40, 40)) < 1e-12);

        let beta = C64::new(1.1, 0.6);
        let d = displacement(&c, beta).unwrap();
        let dm = displacement(&c, -beta).unwrap();
        let k = c.interior();
        let prod = &d.mat * &dm.mat;
        let block = prod.view((0, 0), (k / 2, k / 2)).into_owned();
        assert!(max_abs_diff(&block, &DMatrix::identity(k / 2, k / 2)) < 1e-8);
        assert!(unitarity_defect(&d, k / 2) < 1e-8);
    }

    #[test]
    fn displacement_sign_convention() {
        // D(beta)|0> = |-beta> under exp[beta* a - beta a†]
        let c = cfg(50);
        let d = displacement(&c, C64::from(1.0)).unwrap();
        let vac = StateVector::fock(&c, 0).unwrap();
        let out = d.mat * vac.amplitudes();
        let mut analytic = DVector::zeros(50);
        let mut t = (-0.5f64).exp();
        for n in 0..50 {
            if n > 0 {
                t *= -1.0 / (n as f64).sqrt();
            }
            analytic[n] = C64::from(t);
        }
        let fid = out.dotc(&analytic).norm_sqr();
        assert!(fid > 1.0 - 1e-8, "fidelity {fid}");
    }

    #[test]
    fn squeeze_identity_and_variance() {
        let c = cfg(60);
        let s0 = squeeze(&c, 0.0).unwrap();
        assert!(max_abs_diff(&s0.mat, &DMatrix::identity(60, 60)) < 1e-15);

        let s = squeeze(&c, 0.25).unwrap();
        assert!(unitarity_defect(&s, c.interior()) < 1e-8);
        let vac = StateVector::fock(&c, 0).unwrap();
        let psi = vac.evolve(&c, &s).unwrap();
        let a = annihilation(&c).mat;
        let x = (&a + a.adjoint()) / C64::from(2f64.sqrt());
        let x = OperatorMatrix::new(x, true);
        let mean = psi.expectation(&x).unwrap().re;
        let x2 = OperatorMatrix::new(&x.mat * &x.mat, true);
        let var = psi.expectation(&x2).unwrap().re - mean * mean;
        assert!((var - (-0.5f64).exp() / 2.0).abs() < 1e-6, "var {var}");
        assert!(matches!(squeeze(&c, 1.6), Err(Error::SqueezeOutOfRange(_))));
    }

    #[test]
    fn squeezing_preserves_parity() {
        let c = cfg(60);
        let (_, pi) = number_parity_ops(&c);
        let psi = photonic_approximation(&c, PhotonicApprox::SinglePhoton, 0.4).unwrap();
        assert!((psi.expectation(&pi).unwrap().re + 1.0).abs() < 1e-12);
        let even =
            photonic_approximation(&c, PhotonicApprox::ZeroTwo { omega: 0.618 }, -0.3).unwrap();
        assert!((even.expectation(&pi).unwrap().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn photonic_approximation_limits() {
        let c = cfg(40);
        let one = photonic_approximation(&c, PhotonicApprox::SinglePhoton, 0.0).unwrap();
        assert_eq!(one, StateVector::fock(&c, 1).unwrap());
        let vac = photonic_approximation(&c, PhotonicApprox::ZeroTwo { omega: 1.0 }, 0.0).unwrap();
        assert_eq!(vac, StateVector::fock(&c, 0).unwrap());
        assert!(photonic_approximation(&c, PhotonicApprox::ZeroTwo { omega: 1.2 }, 0.0).is_err());
    }

    #[test]
    fn coherent_state_moments() {
        let c = cfg(60);
        assert_eq!(
            coherent_state(&c, C64::from(0.0)).unwrap(),
            StateVector::fock(&c, 0).unwrap()
        );
        let psi = coherent_state(&c, C64::from(2.0)).unwrap();
        let (n, _) = number_parity_ops(&c);
        assert!((psi.expectation(&n).unwrap().re - 4.0).abs() < 1e-8);

        let c = cfg(40);
        let plus = coherent_state(&c, C64::from(1.0)).unwrap();
        let minus = coherent_state(&c, C64::from(-1.0)).unwrap();
        let ov = plus.inner(&minus).unwrap();
        assert!((ov.re - (-2.0f64).exp()).abs() < 1e-8 && ov.im.abs() < 1e-15);
        assert!(matches!(
            coherent_state(&cfg(20), C64::from(2.0)),
            Err(Error::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn cat_states() {
        let c = cfg(40);
        let (_, pi) = number_parity_ops(&c);
        let odd = cat_state(&c, C64::from(2.0), Parity::Odd).unwrap();
        assert!((odd.expectation(&pi).unwrap().re + 1.0).abs() < 1e-10);
        let even = cat_state(&c, C64::from(1.5), Parity::Even).unwrap();
        assert!((even.amplitudes().norm() - 1.0).abs() < 1e-10);
        let tiny = cat_state(&c, C64::from(1e-3), Parity::Odd).unwrap();
        let one = StateVector::fock(&c, 1).unwrap();
        assert!(tiny.fidelity(&one).unwrap() > 1.0 - 1e-6);

        // compare with the textbook normalization of (|a> - |-a>)
        let a = 1.5;
        let plus = coherent_state(&c, C64::from(a)).unwrap().into_amplitudes();
        let minus = coherent_state(&c, C64::from(-a)).unwrap().into_amplitudes();
        let norm = (2.0 * (1.0 - (-2.0 * a * a).exp())).sqrt();
        let direct = (plus - minus) / C64::from(norm);
        let cat = cat_state(&c, C64::from(a), Parity::Odd).unwrap();
        assert!(cat.amplitudes().dotc(&direct).norm_sqr() > 1.0 - 1e-12);
    }

    #[test]
    fn multi_headed_support() {
        let c = cfg(40);
        let two = multi_headed_cat(&c, C64::from(1.0), 2, 0).unwrap();
        let even = cat_state(&c, C64::from(1.0), Parity::Even).unwrap();
        assert!(two.fidelity(&even).unwrap() > 1.0 - 1e-10);

        let three = multi_headed_cat(&c, C64::from(2.0), 3, 0).unwrap();
        let off: f64 = three
            .populations()
            .iter()
            .enumerate()
            .filter(|(n, _)| n % 3 != 0)
            .map(|(_, p)| p)
            .sum();
        assert!(off < 1e-10);
        for m in 0..3 {
            let s = multi_headed_cat(&c, C64::from(2.0), 3, m).unwrap();
            assert!((s.amplitudes().norm() - 1.0).abs() < 1e-10);
        }
        assert!(matches!(
            multi_headed_cat(&c, C64::from(2.0), 3, 3),
            Err(Error::BadSymmetryIndex { .. })
        ));
    }

    #[test]
    fn multi_headed_matches_coherent_superposition() {
        // Oracle: explicit sum over rotated coherent states.
        let c = cfg(40);
        let alpha = C64::new(1.7, 0.4);
        for m in 0..3 {
            let mut sum = DVector::zeros(40);
            for k in 0..3 {
                let w = std::f64::consts::TAU * k as f64 / 3.0;
                let coh = coherent_state(&c, alpha * C64::from_polar(1.0, w)).unwrap();
                sum += coh.into_amplitudes() * C64::from_polar(1.0, w * m as f64);
            }
            let sum = sum.normalize();
            let s = multi_headed_cat(&c, alpha, 3, m).unwrap();
            assert!(s.amplitudes().dotc(&sum).norm_sqr() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn expectation_basics() {
        let c = cfg(20);
        let rho = StateVector::fock(&c, 2).unwrap().to_density();
        let (n, _) = number_parity_ops(&c);
        assert!((expectation(&n, &rho).unwrap().re - 2.0).abs() < 1e-15);
        let id = OperatorMatrix::identity(20);
        assert!((expectation(&id, &rho).unwrap().re - 1.0).abs() < 1e-15);
        let wrong = OperatorMatrix::identity(21);
        assert!(expectation(&wrong, &rho).is_err());
        let cat = cat_state(&cfg(40), C64::from(1.5), Parity::Odd).unwrap();
        let (_, pi) = number_parity_ops(&cfg(40));
        let v = expectation(&pi, &DensityOperator::from_pure(&cat)).unwrap();
        assert!((v.re + 1.0).abs() < 1e-10);
    }
}
