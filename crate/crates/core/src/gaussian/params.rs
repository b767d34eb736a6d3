use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock::{HilbertConfig, Parity, StateVector};

/// Pure single-mode Gaussian state.
///
/// `(u, v)` are the means of `x̂` and `p̂`; the covariance is
/// `R(theta) diag(e^{-4r}, e^{4r}) R(theta)^T / 2`. In the Fock basis the state
/// is `D_std((u + iv)/sqrt 2) exp(-i theta n̂) S(2r)|0>`, where `D_std` is the
/// displacement with `D_std(b)|0> = |b>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub theta: f64,
}

/// Covariance entries `[[A, C], [C, B]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covariance {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Covariance {
    pub fn det(&self) -> f64 {
        self.a * self.b - self.c * self.c
    }
}

impl GaussianParams {
    pub const VACUUM: GaussianParams = GaussianParams {
        u: 0.0,
        v: 0.0,
        r: 0.0,
        theta: 0.0,
    };

    pub fn new(u: f64, v: f64, r: f64, theta: f64) -> Self {
        Self { u, v, r, theta }
    }

    /// The coherent state `|beta>` (standard convention, `<a> = beta`).
    pub fn coherent(beta: C64) -> Self {
        Self::new(beta.re * 2f64.sqrt(), beta.im * 2f64.sqrt(), 0.0, 0.0)
    }

    pub(crate) fn from_slice(x: &[f64]) -> Self {
        Self::new(x[0], x[1], x[2], x[3]).canonical()
    }

    /// Same state with `theta` folded into `[0, pi)`.
    pub fn canonical(self) -> Self {
        Self {
            theta: self.theta.rem_euclid(PI),
            ..self
        }
    }

    /// `<a>` of the state.
    pub fn mean_amplitude(&self) -> C64 {
        C64::new(self.u, self.v) * FRAC_1_SQRT_2
    }

    pub fn covariance(&self) -> Covariance {
        let (s, c) = self.theta.sin_cos();
        let em = (-4.0 * self.r).exp();
        let ep = (4.0 * self.r).exp();
        Covariance {
            a: 0.5 * (em * c * c + ep * s * s),
            b: 0.5 * (ep * c * c + em * s * s),
            c: 0.5 * (ep - em) * c * s,
        }
    }

    /// `<Π>` = `exp[2(u(Cv - Bu) + v(Cu - Av))]` for a pure state.
    pub fn parity_expectation(&self) -> f64 {
        let Covariance { a, b, c } = self.covariance();
        let (u, v) = (self.u, self.v);
        (2.0 * (u * (c * v - b * u) + v * (c * u - a * v))).exp()
    }

    /// Fock amplitudes `<n|psi>` for `n < len` and the probability mass beyond.
    ///
    /// Uses the three-term recurrence implied by the annihilator
    /// `mu (a - b0) + nu (a† - b0*)`, `mu = cosh(2r) e^{i theta}`,
    /// `nu = sinh(2r) e^{-i theta}`, seeded with the exact vacuum overlap.
    pub fn fock_amplitudes(&self, len: usize) -> (Vec<C64>, f64) {
        let b0 = self.mean_amplitude();
        let s = 2.0 * self.r;
        let mu = C64::from_polar(s.cosh(), self.theta);
        let nu = C64::from_polar(s.sinh(), -self.theta);
        let kappa = mu * b0 + nu * b0.conj();

        let cov = self.covariance();
        // Sigma = sigma + I/2
        let (sa, sb, sc) = (cov.a + 0.5, cov.b + 0.5, cov.c);
        let det = sa * sb - sc * sc;
        let (u, v) = (self.u, self.v);
        let quad = (sb * u * u - 2.0 * sc * u * v + sa * v * v) / det;
        let c0 = ((-0.5 * quad).exp() / det.sqrt()).sqrt();

        let mut amps = Vec::with_capacity(len);
        amps.push(C64::from(c0));
        if len > 1 {
            amps.push(kappa * c0 / mu);
        }
        for n in 1..len.saturating_sub(1) {
            let next = (kappa * amps[n] - nu * (n as f64).sqrt() * amps[n - 1])
                / (mu * ((n + 1) as f64).sqrt());
            amps.push(next);
        }
        amps.truncate(len);
        let kept: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        (amps, (1.0 - kept).max(0.0))
    }

    /// The state as a [`StateVector`] in the given truncation.
    pub fn to_state(&self, cfg: &HilbertConfig) -> Result<StateVector> {
        let (amps, _) = self.fock_amplitudes(cfg.dim);
        StateVector::new(cfg, DVector::from_vec(amps))
    }
}

/// Closed-form `<O±(alpha, gamma)>` for a pure Gaussian state.
///
/// With `beta = alpha^2` the quartic part is a polynomial in `(u, v, A, B, C)`;
/// the parity part is `gamma (1 ∓ <Π>)`. Purity (`AB - C^2 = 1/4`) is used only
/// in the parity exponent.
pub fn gaussian_expectation(gp: &GaussianParams, alpha: C64, gamma: f64, parity: Parity) -> f64 {
    quartic_expectation(gp, alpha) + gamma * (1.0 - parity.sign() * gp.parity_expectation())
}

/// `<(a†^2 - alpha*^2)(a^2 - alpha^2)>` for a pure Gaussian state.
pub fn quartic_expectation(gp: &GaussianParams, alpha: C64) -> f64 {
    let Covariance { a, b, c } = gp.covariance();
    let (u, v) = (gp.u, gp.v);
    let beta = alpha * alpha;
    let (u2, v2) = (u * u, v * v);
    let bracket = v2 * v2
        + 2.0 * ((u2 + a) * v2 + 4.0 * c * u * v + b * u2 + 2.0 * c * c + a * b)
        + 6.0 * b * v2
        + u2 * u2
        + 6.0 * a * u2
        + 3.0 * b * b
        + 3.0 * a * a
        - 1.0;
    0.25 * bracket - u2 - v2 - beta.re * (u2 - v2 - b + a) - 2.0 * beta.im * (u * v + c)
        + beta.norm_sqr()
        - a
        - b
        + 0.75
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, displace_state, squeeze_state};

    fn fock_state(gp: &GaussianParams, dim: usize) -> StateVector {
        // Oracle: explicit padded operators applied to the vacuum.
        let c = HilbertConfig::new(dim).unwrap();
        let vac = StateVector::fock(&c, 0).unwrap();
        let sq = squeeze_state(&c, &vac, 2.0 * gp.r).unwrap();
        let rot = sq.rotated(-gp.theta);
        displace_state(&c, &rot, -gp.mean_amplitude()).unwrap()
    }

    fn fock_quartic(psi: &StateVector, alpha: C64) -> f64 {
        let amps = psi.amplitudes();
        let dim = psi.dim();
        let a2 = alpha * alpha;
        (0..dim)
            .map(|n| {
                let lowered = if n + 2 < dim {
                    amps[n + 2] * (((n + 1) * (n + 2)) as f64).sqrt()
                } else {
                    C64::from(0.0)
                };
                (lowered - a2 * amps[n]).norm_sqr()
            })
            .sum()
    }

    #[test]
    fn covariance_examples() {
        let vac = GaussianParams::new(0.3, -0.2, 0.0, 1.1).covariance();
        assert!((vac.a - 0.5).abs() < 1e-15 && (vac.b - 0.5).abs() < 1e-15 && vac.c.abs() < 1e-15);
        let c = GaussianParams::new(0.0, 0.0, 0.1, 0.0).covariance();
        assert!((c.a - 0.5 * (-0.4f64).exp()).abs() < 1e-15);
        assert!((c.b - 0.5 * 0.4f64.exp()).abs() < 1e-15);
        assert_eq!(c.c, 0.0);
        let p = GaussianParams::new(0.0, 0.0, 0.3, 0.7).covariance();
        assert!((p.det() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn recurrence_matches_operator_construction() {
        for gp in [
            GaussianParams::new(0.0, 0.0, 0.0, 0.0),
            GaussianParams::new(1.1, -0.4, 0.0, 0.0),
            GaussianParams::new(0.0, 0.0, 0.3, 0.0),
            GaussianParams::new(0.8, 0.5, -0.2, 0.9),
            GaussianParams::new(-1.5, 0.3, 0.35, 2.4),
        ] {
            let psi = fock_state(&gp, 60);
            let (amps, tail) = gp.fock_amplitudes(60);
            let overlap: C64 = amps
                .iter()
                .zip(psi.amplitudes().iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            assert!(
                overlap.norm_sqr() > 1.0 - 1e-10,
                "{gp:?}: {}",
                overlap.norm_sqr()
            );
            assert!(tail < 1e-10);
            // same phase convention up to a global factor: compare <a>
            let mean: C64 = (1..60)
                .map(|n| amps[n - 1].conj() * amps[n] * (n as f64).sqrt())
                .sum();
            assert!((mean - gp.mean_amplitude()).norm() < 1e-9);
        }
    }

    #[test]
    fn coherent_params_reproduce_coherent_state() {
        let c = HilbertConfig::new(40).unwrap();
        let beta = C64::new(0.9, -0.6);
        let psi = GaussianParams::coherent(beta).to_state(&c).unwrap();
        let target = coherent_state(&c, beta).unwrap();
        assert!(psi.fidelity(&target).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn closed_form_vacuum_odd() {
        let e = gaussian_expectation(&GaussianParams::VACUUM, C64::from(0.0), 1.0, Parity::Odd);
        assert!((e - 2.0).abs() < 1e-10);
    }

    #[test]
    fn closed_form_coherent_at_alpha() {
        let alpha = 2.0;
        let gp = GaussianParams::coherent(C64::from(alpha));
        let e = gaussian_expectation(&gp, C64::from(alpha), 0.7, Parity::Even);
        let expected = 0.7 * (1.0 - (-2.0 * alpha * alpha).exp());
        assert!((e - expected).abs() < 1e-7, "{e} vs {expected}");
    }

    #[test]
    fn closed_form_matches_fock_numerics() {
        let alpha = C64::new(1.5, 0.0);
        for gp in [
            GaussianParams::new(0.7, -0.3, 0.2, 0.4),
            GaussianParams::new(-1.2, 0.9, -0.3, 2.0),
            GaussianParams::new(2.0, 0.1, 0.1, 1.3),
            GaussianParams::new(0.0, 1.5, -0.15, 0.2),
        ] {
            let psi = fock_state(&gp, 80);
            let numeric = fock_quartic(&psi, alpha) + 1.0 * (1.0 + psi.to_density().parity());
            let closed = gaussian_expectation(&gp, alpha, 1.0, Parity::Odd);
            assert!(
                (numeric - closed).abs() < 1e-6,
                "{gp:?}: {numeric} vs {closed}"
            );
        }
    }

    #[test]
    fn complex_alpha_closed_form() {
        let alpha = C64::new(0.8, 0.9);
        let gp = GaussianParams::new(0.4, -1.0, 0.25, 0.6);
        let psi = fock_state(&gp, 80);
        let numeric = fock_quartic(&psi, alpha);
        assert!((numeric - quartic_expectation(&gp, alpha)).abs() < 1e-6);
    }
}
