//! Pure-loss (amplitude damping) channel.
//!
//! Kraus operators `M_k = sqrt((1 - eta^2)^k / k!) eta^{n} a^k`, `k = 0, 1, ...`
//! with amplitude transmissivity `eta`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{check_dim, DensityOperator, HilbertConfig, OperatorMatrix};

const TERM_CUTOFF: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub eta: f64,
    /// Highest Kraus index kept; `None` means `dim - 1` (exact on the truncated space).
    pub kmax: Option<usize>,
}

impl LossSpec {
    pub fn new(eta: f64) -> Result<Self> {
        let spec = Self { eta, kmax: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_kmax(eta: f64, kmax: usize) -> Result<Self> {
        let spec = Self {
            eta,
            kmax: Some(kmax),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `L` percent of the energy lost: `eta = sqrt(1 - L/100)`.
    pub fn from_energy_loss_pct(pct: f64) -> Result<Self> {
        check_pct(pct)?;
        Self::new((1.0 - pct / 100.0).sqrt())
    }

    /// `L` percent of the amplitude lost: `eta = 1 - L/100`.
    pub fn from_amplitude_loss_pct(pct: f64) -> Result<Self> {
        check_pct(pct)?;
        Self::new(1.0 - pct / 100.0)
    }

    pub fn lossless() -> Self {
        Self {
            eta: 1.0,
            kmax: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidArgument(format!(
                "transmissivity must lie in [0, 1], got {}",
                self.eta
            )));
        }
        if self.kmax == Some(0) {
            return Err(Error::InvalidArgument("kmax must be at least 1".into()));
        }
        Ok(())
    }

    /// Fraction of energy transmitted, `eta^2`.
    pub fn energy_transmission(&self) -> f64 {
        self.eta * self.eta
    }

    fn kmax_for(&self, dim: usize) -> usize {
        self.kmax.unwrap_or(dim - 1).min(dim - 1)
    }
}

fn check_pct(pct: f64) -> Result<()> {
    if (0.0..=100.0).contains(&pct) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "loss percentage must lie in [0, 100], got {pct}"
        )))
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// Kraus operators `M_0 ... M_kmax`; identically zero operators are omitted,
/// so `eta = 1` yields only the identity.
pub fn kraus_operators(cfg: &HilbertConfig, spec: &LossSpec) -> Result<Vec<OperatorMatrix>> {
    spec.validate()?;
    let dim = cfg.dim;
    let lf = ln_factorials(dim);
    let damping = 1.0 - spec.eta * spec.eta;
    let mut ops = Vec::new();
    for k in 0..=spec.kmax_for(dim) {
        if k > 0 && damping == 0.0 {
            break;
        }
        let mut m = DMatrix::<C64>::zeros(dim, dim);
        for j in k..dim {
            // <j-k| M_k |j> = sqrt(C(j, k) (1 - eta^2)^k) eta^{j-k}
            let binom = (0.5 * (lf[j] - lf[k] - lf[j - k])).exp();
            let v = binom * damping.powi(k as i32).sqrt() * spec.eta.powi((j - k) as i32);
            m[(j - k, j)] = C64::from(v);
        }
        ops.push(OperatorMatrix::new(m, k == 0));
    }
    Ok(ops)
}

/// `sum_k M_k rho M_k†`, evaluated elementwise:
/// `out_{mn} = sum_k sqrt(C(m+k,k) C(n+k,k)) (1-eta^2)^k eta^{m+n} rho_{m+k,n+k}`.
pub fn apply_loss(rho: &DensityOperator, spec: &LossSpec) -> Result<DensityOperator> {
    spec.validate()?;
    let dim = rho.dim();
    if spec.eta == 1.0 {
        return Ok(rho.clone());
    }
    let src = rho.matrix();
    let lf = ln_factorials(dim);
    let damping = 1.0 - spec.eta * spec.eta;
    let ln_eta = spec.eta.ln();
    let ln_damp = damping.ln();
    let total = src.trace().re;
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    let mut accumulated = 0.0;
    for k in 0..=spec.kmax_for(dim) {
        let size = dim - k;
        // amplitude factor for index m: sqrt(C(m+k, k) (1-eta^2)^k) eta^m
        let factors: Vec<f64> = (0..size)
            .map(|m| {
                let ln_binom = lf[m + k] - lf[k] - lf[m];
                let ln_pow = if k == 0 { 0.0 } else { k as f64 * ln_damp };
                let ln_eta_m = if m == 0 { 0.0 } else { m as f64 * ln_eta };
                (0.5 * (ln_binom + ln_pow) + ln_eta_m).exp()
            })
            .collect();
        let mut weight = 0.0;
        for n in 0..size {
            let fnn = factors[n];
            if fnn == 0.0 {
                continue;
            }
            for m in 0..size {
                let v = src[(m + k, n + k)] * (factors[m] * fnn);
                out[(m, n)] += v;
            }
            weight += src[(n + k, n + k)].re * fnn * fnn;
        }
        accumulated += weight;
        if k > 0 && (total - accumulated).abs() < TERM_CUTOFF {
            break;
        }
    }
    let herm = (&out + out.adjoint()) * C64::from(0.5);
    Ok(DensityOperator::from_raw(herm))
}

/// Applies the channel by explicit Kraus sums; slower than [`apply_loss`] and
/// kept as an independent reference.
pub fn apply_kraus(rho: &DensityOperator, ops: &[OperatorMatrix]) -> Result<DensityOperator> {
    let dim = rho.dim();
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    for op in ops {
        check_dim(dim, op.dim())?;
        out += &op.mat * rho.matrix() * op.mat.adjoint();
    }
    Ok(DensityOperator::from_raw(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{
        cat_state, coherent_state, fidelity_with_pure, max_abs_diff, wigner_point, Parity,
        StateVector,
    };

    fn cfg(dim: usize) -> HilbertConfig {
        HilbertConfig::new(dim).unwrap()
    }

    #[test]
    fn lossless_has_single_identity_operator() {
        let ops = kraus_operators(&cfg(20), &LossSpec::lossless()).unwrap();
        assert_eq!(ops.len(), 1);
        assert!(max_abs_diff(&ops[0].mat, &DMatrix::identity(20, 20)) < 1e-15);
    }

    #[test]
    fn completeness_on_interior() {
        let c = cfg(40);
        let ops = kraus_operators(&c, &LossSpec::new(0.8).unwrap()).unwrap();
        let mut sum = DMatrix::<C64>::zeros(40, 40);
        for op in &ops {
            sum += op.mat.adjoint() * &op.mat;
        }
        let k = c.interior();
        let block = sum.view((0, 0), (k, k)).into_owned();
        assert!(max_abs_diff(&block, &DMatrix::identity(k, k)) < 1e-8);
    }

    #[test]
    fn full_loss_gives_vacuum() {
        let c = cfg(20);
        let rho = StateVector::fock(&c, 3).unwrap().to_density();
        let out = apply_loss(&rho, &LossSpec::new(0.0).unwrap()).unwrap();
        assert!((out.matrix()[(0, 0)].re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn elementwise_matches_kraus_sum() {
        let c = cfg(30);
        let rho = cat_state(&c, C64::new(1.3, 0.4), Parity::Odd)
            .unwrap()
            .to_density();
        let spec = LossSpec::new(0.75).unwrap();
        let fast = apply_loss(&rho, &spec).unwrap();
        let slow = apply_kraus(&rho, &kraus_operators(&c, &spec).unwrap()).unwrap();
        assert!(max_abs_diff(fast.matrix(), slow.matrix()) < 1e-13);
    }

    #[test]
    fn coherent_maps_to_coherent() {
        let c = cfg(40);
        let rho = coherent_state(&c, C64::from(1.5)).unwrap().to_density();
        let out = apply_loss(&rho, &LossSpec::new(0.8).unwrap()).unwrap();
        let target = coherent_state(&c, C64::from(1.2)).unwrap();
        assert!(fidelity_with_pure(&out, &target).unwrap() > 1.0 - 1e-8);
        assert!((out.mean_photon_number() - 0.64 * rho.mean_photon_number()).abs() < 1e-6);
    }

    #[test]
    fn unit_transmissivity_is_identity() {
        let c = cfg(30);
        let rho = cat_state(&c, C64::from(2.0), Parity::Even)
            .unwrap()
            .to_density();
        let out = apply_loss(&rho, &LossSpec::new(1.0).unwrap()).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-12);
    }

    #[test]
    fn half_energy_loss_removes_negativity() {
        let c = cfg(40);
        let rho = cat_state(&c, C64::from(1.5), Parity::Odd)
            .unwrap()
            .to_density();
        let out = apply_loss(&rho, &LossSpec::new(0.5f64.sqrt()).unwrap()).unwrap();
        let mut min = f64::INFINITY;
        for i in 0..41 {
            for j in 0..41 {
                let x = -4.0 + 0.2 * i as f64;
                let p = -4.0 + 0.2 * j as f64;
                min = min.min(wigner_point(&out, x, p).unwrap());
            }
        }
        assert!(min >= -1e-3, "min W = {min}");
        // and the input is genuinely negative
        assert!(wigner_point(&rho, 0.0, 0.0).unwrap() < -0.3);
    }

    #[test]
    fn loss_percent_conventions() {
        let e = LossSpec::from_energy_loss_pct(30.0).unwrap();
        assert!((e.energy_transmission() - 0.7).abs() < 1e-12);
        let a = LossSpec::from_amplitude_loss_pct(10.0).unwrap();
        assert!((a.eta - 0.9).abs() < 1e-12);
        assert!(LossSpec::new(1.2).is_err());
        assert!(LossSpec::with_kmax(0.5, 0).is_err());
    }
}
