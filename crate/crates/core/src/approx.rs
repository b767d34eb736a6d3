//! Witness-optimal parameters of the squeezed photonic cat approximations.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{photonic_approximation, HilbertConfig, Parity, PhotonicApprox, StateVector};
use crate::optimize::golden_section;
use crate::witness::{witness_operator, WitnessParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxOptimum {
    pub kind: ApproxKind,
    /// Weight of `|0>`; `None` for the single-photon state.
    pub omega: Option<f64>,
    pub r: f64,
    pub value: f64,
    /// Golden-section polish of the grid optimum.
    pub refined_omega: Option<f64>,
    pub refined_r: f64,
    pub refined_value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApproxKind {
    SinglePhoton,
    ZeroTwo,
}

/// `<O>` of `S(r)(sqrt(w)|0> + sqrt(1-w)|2>)` as a function of `w` for fixed `r`.
fn zero_two_form(
    cfg: &HilbertConfig,
    params: &WitnessParams,
    r: f64,
) -> Result<impl Fn(f64) -> f64> {
    let op = witness_operator(cfg, params)?;
    let zero = photonic_approximation(cfg, PhotonicApprox::ZeroTwo { omega: 1.0 }, r)?;
    let two = photonic_approximation(cfg, PhotonicApprox::ZeroTwo { omega: 0.0 }, r)?;
    let (z, t) = (zero.amplitudes(), two.amplitudes());
    let oz = &op.mat * z;
    let ot = &op.mat * t;
    let m00 = z.dotc(&oz).re;
    let m22 = t.dotc(&ot).re;
    let m02 = z.dotc(&ot).re;
    Ok(move |w: f64| w * m00 + (1.0 - w) * m22 + 2.0 * (w * (1.0 - w)).sqrt() * m02)
}

fn single_photon_value(cfg: &HilbertConfig, params: &WitnessParams, r: f64) -> Result<f64> {
    let psi: StateVector = photonic_approximation(cfg, PhotonicApprox::SinglePhoton, r)?;
    let op = witness_operator(cfg, params)?;
    Ok(psi.expectation(&op)?.re)
}

fn check_grid(r_grid: &[f64]) -> Result<()> {
    if r_grid.len() < 3 || r_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "squeezing grid needs at least three increasing values".into(),
        ));
    }
    Ok(())
}

/// Grid search of `<O+(alpha, gamma)>` over `(omega, r)` for the squeezed
/// zero/two-photon superposition; `omega` runs over `omega_steps + 1` points
/// on `[0, 1]`.
pub fn zero_two_optimum(
    cfg: &HilbertConfig,
    alpha: f64,
    gamma: f64,
    r_grid: &[f64],
    omega_steps: usize,
) -> Result<ApproxOptimum> {
    check_grid(r_grid)?;
    if omega_steps < 2 {
        return Err(Error::InvalidArgument(
            "omega grid needs at least 3 points".into(),
        ));
    }
    let params = WitnessParams::two_head(C64::from(alpha), gamma, Parity::Even);
    let mut best = (f64::INFINITY, 0.0, 0.0, 0);
    for (k, &r) in r_grid.iter().enumerate() {
        let f = zero_two_form(cfg, &params, r)?;
        for j in 0..=omega_steps {
            let w = j as f64 / omega_steps as f64;
            let v = f(w);
            if v < best.0 {
                best = (v, w, r, k);
            }
        }
    }
    let (value, omega, r, k) = best;
    let lo = r_grid[k.saturating_sub(1)];
    let hi = r_grid[(k + 1).min(r_grid.len() - 1)];
    let inner = |r: f64| -> f64 {
        match zero_two_form(cfg, &params, r) {
            Ok(f) => golden_section(&mut |w| f(w), 0.0, 1.0, 1e-10).1,
            Err(_) => f64::INFINITY,
        }
    };
    let (refined_r, refined_value) = golden_section(&mut |r| inner(r), lo, hi, 1e-9);
    let f = zero_two_form(cfg, &params, refined_r)?;
    let (refined_omega, _) = golden_section(&mut |w| f(w), 0.0, 1.0, 1e-10);
    Ok(ApproxOptimum {
        kind: ApproxKind::ZeroTwo,
        omega: Some(omega),
        r,
        value,
        refined_omega: Some(refined_omega),
        refined_r,
        refined_value,
    })
}

/// Grid search of `<O-(alpha, gamma)>` over `r` for the squeezed single photon.
pub fn single_photon_optimum(
    cfg: &HilbertConfig,
    alpha: f64,
    gamma: f64,
    r_grid: &[f64],
) -> Result<ApproxOptimum> {
    check_grid(r_grid)?;
    let params = WitnessParams::two_head(C64::from(alpha), gamma, Parity::Odd);
    let values: Vec<f64> = r_grid
        .iter()
        .map(|&r| single_photon_value(cfg, &params, r))
        .collect::<Result<_>>()?;
    let k = (0..values.len())
        .min_by(|&i, &j| values[i].total_cmp(&values[j]))
        .expect("non-empty grid");
    let lo = r_grid[k.saturating_sub(1)];
    let hi = r_grid[(k + 1).min(r_grid.len() - 1)];
    let (refined_r, refined_value) = golden_section(
        &mut |r| single_photon_value(cfg, &params, r).unwrap_or(f64::INFINITY),
        lo,
        hi,
        1e-9,
    );
    Ok(ApproxOptimum {
        kind: ApproxKind::SinglePhoton,
        omega: None,
        r: r_grid[k],
        value: values[k],
        refined_omega: None,
        refined_r,
        refined_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::uniform_grid;

    #[test]
    fn zero_two_form_matches_direct_state() {
        let c = HilbertConfig::new(60).unwrap();
        let params = WitnessParams::two_head(C64::from(1.0), 1.0, Parity::Even);
        let f = zero_two_form(&c, &params, -0.2).unwrap();
        let psi = photonic_approximation(&c, PhotonicApprox::ZeroTwo { omega: 0.4 }, -0.2).unwrap();
        let direct = psi
            .expectation(&witness_operator(&c, &params).unwrap())
            .unwrap()
            .re;
        assert!((f(0.4) - direct).abs() < 1e-10);
    }

    #[test]
    fn single_photon_optimum_near_known_squeezing() {
        let c = HilbertConfig::new(60).unwrap();
        let grid = uniform_grid(-0.6, 0.01, 61);
        let opt = single_photon_optimum(&c, 1.0, 1.0, &grid).unwrap();
        assert!((opt.refined_r + 0.2877).abs() < 2e-3, "{}", opt.refined_r);
        assert!(opt.refined_value <= opt.value + 1e-12);
    }
}
