//! Witness operators whose ground states are cat states, their measurable
//! decomposition, and their low-lying spectrum.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    annihilation_matrix, annihilation_power, check_amplitude_cutoff, check_squeeze, linalg,
    DensityOperator, HilbertConfig, OperatorMatrix, Parity, StateVector,
};
use crate::measurement::NumberDistribution;

/// Parameters of `O±(alpha, gamma, r)` and of the N-headed operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessParams {
    pub alpha: C64,
    pub gamma: f64,
    pub parity: Parity,
    pub squeeze_r: f64,
    pub heads: usize,
    pub sector: usize,
}

impl WitnessParams {
    /// `(a†^2 - alpha*^2)(a^2 - alpha^2) + gamma (1 ∓ Π)`.
    pub fn two_head(alpha: C64, gamma: f64, parity: Parity) -> Self {
        Self {
            alpha,
            gamma,
            parity,
            squeeze_r: 0.0,
            heads: 2,
            sector: if parity == Parity::Even { 0 } else { 1 },
        }
    }

    /// `(a†^N - alpha*^N)(a^N - alpha^N) + gamma (1 - P_m)` with `P_m` the
    /// projector on `n ≡ -m (mod N)`.
    pub fn multi_head(alpha: C64, gamma: f64, heads: usize, sector: usize) -> Self {
        Self {
            alpha,
            gamma,
            parity: Parity::Even,
            squeeze_r: 0.0,
            heads,
            sector,
        }
    }

    pub fn with_squeeze(self, r: f64) -> Self {
        Self {
            squeeze_r: r,
            ..self
        }
    }

    pub fn is_multi_head(&self) -> bool {
        self.heads != 2
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be finite and non-negative, got {}",
                self.gamma
            )));
        }
        if self.heads < 2 || self.sector >= self.heads {
            return Err(Error::BadSymmetryIndex {
                heads: self.heads,
                sector: self.sector,
            });
        }
        check_squeeze(self.squeeze_r)
    }
}

fn parity_term(dim: usize, gamma: f64, parity: Parity) -> DMatrix<C64> {
    DMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| {
        let p = if n % 2 == 0 { 1.0 } else { -1.0 };
        C64::from(gamma * (1.0 - parity.sign() * p))
    }))
}

fn check_plain(params: &WitnessParams) -> Result<()> {
    if params.heads != 2 || params.squeeze_r != 0.0 {
        return Err(Error::InvalidArgument(
            "expected the plain two-headed operator (N = 2, r = 0)".into(),
        ));
    }
    Ok(())
}

/// Matrix of the witness described by `params`: the plain two-headed form,
/// its squeezed version when `squeeze_r != 0`, or the N-headed form.
pub fn witness_operator(cfg: &HilbertConfig, params: &WitnessParams) -> Result<OperatorMatrix> {
    params.validate()?;
    if params.is_multi_head() {
        return multi_head_operator(cfg, params);
    }
    if params.squeeze_r != 0.0 {
        return squeezed_witness_operator(cfg, params);
    }
    check_amplitude_cutoff(cfg.dim, params.alpha.norm())?;
    let dim = cfg.dim;
    let a2 = annihilation_power(dim, 2);
    let lower = a2 - DMatrix::identity(dim, dim) * (params.alpha * params.alpha);
    let op = lower.adjoint() * &lower + parity_term(dim, params.gamma, params.parity);
    Ok(OperatorMatrix::new(op, true))
}

/// `S†(r) O±(alpha, gamma) S(r)`.
///
/// Uses `S† a S = a cosh r - a† sinh r`: the lowering part `b^2 - alpha^2` is
/// built in a space four levels larger, where every element needed for the
/// leading block is exact, then cropped. `Π` commutes with `S`.
pub fn squeezed_witness_operator(
    cfg: &HilbertConfig,
    params: &WitnessParams,
) -> Result<OperatorMatrix> {
    params.validate()?;
    check_amplitude_cutoff(cfg.dim, params.alpha.norm())?;
    let dim = cfg.dim;
    let pad = dim + 4;
    let a = annihilation_matrix(pad);
    let (c, s) = (params.squeeze_r.cosh(), params.squeeze_r.sinh());
    let b = &a * C64::from(c) - a.adjoint() * C64::from(s);
    let lower = &b * &b - DMatrix::identity(pad, pad) * (params.alpha * params.alpha);
    let full = lower.adjoint() * &lower;
    let op =
        full.view((0, 0), (dim, dim)).into_owned() + parity_term(dim, params.gamma, params.parity);
    Ok(OperatorMatrix::new(op, true))
}

/// `(a†^N - alpha*^N)(a^N - alpha^N) + gamma (1 - sum_k |Nk - m><Nk - m|)`,
/// where the sum runs over non-negative levels `n ≡ -m (mod N)`.
pub fn multi_head_operator(cfg: &HilbertConfig, params: &WitnessParams) -> Result<OperatorMatrix> {
    params.validate()?;
    check_amplitude_cutoff(cfg.dim, params.alpha.norm())?;
    let dim = cfg.dim;
    let heads = params.heads;
    let residue = (heads - params.sector) % heads;
    let target = params.alpha.powu(heads as u32);
    let lower = annihilation_power(dim, heads) - DMatrix::identity(dim, dim) * target;
    let projector = DMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| {
        C64::from(if n % heads == residue {
            0.0
        } else {
            params.gamma
        })
    }));
    Ok(OperatorMatrix::new(
        lower.adjoint() * &lower + projector,
        true,
    ))
}

/// The witness rewritten through number operators and displacements:
///
/// `2n^2 + |alpha|^2 (4n + 1) + 2|alpha|^4 - n
///   - [D†(alpha) n^2 D(alpha) + D(alpha) n^2 D†(alpha)] / 2 + gamma (1 ∓ Π)`
///
/// with `D(beta) = exp[beta* a - beta a†]`. The displaced `n^2` terms are
/// evaluated with displacement blocks from a padded space.
pub fn decomposed_witness(cfg: &HilbertConfig, params: &WitnessParams) -> Result<OperatorMatrix> {
    params.validate()?;
    check_plain(params)?;
    let alpha = params.alpha;
    check_amplitude_cutoff(cfg.dim, alpha.norm())?;
    let dim = cfg.dim;
    let a2 = alpha.norm_sqr();

    let mut op = DMatrix::<C64>::zeros(dim, dim);
    for n in 0..dim {
        let nf = n as f64;
        op[(n, n)] = C64::from(2.0 * nf * nf + a2 * (4.0 * nf + 1.0) + 2.0 * a2 * a2 - nf);
    }
    let width = linalg::displacement_work_dim(dim, alpha.norm());
    let work = linalg::displacement_work_dim(width, alpha.norm());
    let n2 = DVector::from_fn(width, |k, _| C64::from((k * k) as f64));
    for beta in [-alpha, alpha] {
        // D(beta) n^2 D†(beta): beta = -alpha gives D†(alpha) n^2 D(alpha)
        let d = linalg::displacement_block(beta, dim, width, work);
        let weighted = DMatrix::from_fn(dim, width, |i, k| d[(i, k)] * n2[k]);
        op -= weighted * d.adjoint() * C64::from(0.5);
    }
    op += parity_term(dim, params.gamma, params.parity);
    let herm = (&op + op.adjoint()) * C64::from(0.5);
    Ok(OperatorMatrix::new(herm, true))
}

/// One eigenpair of a witness operator.
#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: f64,
    pub state: StateVector,
    /// Eigenvalue exceeds `dim / 2`; such levels are dominated by truncation.
    pub truncation_dominated: bool,
}

pub const MAX_SPECTRUM: usize = 8;

/// The `k` lowest eigenpairs in ascending order.
pub fn operator_spectrum(
    cfg: &HilbertConfig,
    params: &WitnessParams,
    k: usize,
) -> Result<Vec<Eigenpair>> {
    if k == 0 || k > MAX_SPECTRUM {
        return Err(Error::InvalidArgument(format!(
            "spectrum size must be in 1..={MAX_SPECTRUM}, got {k}"
        )));
    }
    let op = witness_operator(cfg, params)?;
    let eig = SymmetricEigen::new(op.mat);
    let mut order: Vec<usize> = (0..cfg.dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    Ok(order
        .into_iter()
        .take(k)
        .map(|i| {
            let value = eig.eigenvalues[i];
            let mut v = eig.eigenvectors.column(i).into_owned();
            // fix the global phase: largest component real and positive
            let (imax, _) = v.iter().enumerate().fold((0, 0.0), |acc, (j, c)| {
                if c.norm() > acc.1 {
                    (j, c.norm())
                } else {
                    acc
                }
            });
            let phase = v[imax].conj() / v[imax].norm();
            v *= phase;
            Eigenpair {
                value,
                state: StateVector::from_raw(v),
                truncation_dominated: value > 0.5 * cfg.dim as f64,
            }
        })
        .collect())
}

fn sum_weighted(p: &[f64], w: impl Fn(usize) -> f64) -> f64 {
    p.iter().enumerate().map(|(n, &q)| q * w(n)).sum()
}

const DISPLACEMENT_TOL: f64 = 1e-12;

/// Witness expectation assembled from photon-number distributions measured
/// after displacements `0`, `+alpha` and `-alpha`:
///
/// `sum_n p_n(0) [2n^2 - (1 - 4|alpha|^2) n ∓ gamma (-1)^n]
///   - sum_n [p_n(alpha) + p_n(-alpha)] n^2 / 2 + 2|alpha|^4 + |alpha|^2 + gamma`.
pub fn expectation_via_distributions(
    p0: &NumberDistribution,
    pplus: &NumberDistribution,
    pminus: &NumberDistribution,
    params: &WitnessParams,
) -> Result<f64> {
    check_plain(params)?;
    for p in [p0, pplus, pminus] {
        p.check_normalized(1e-8)?;
    }
    check_displacements(
        p0.displacement,
        pplus.displacement,
        pminus.displacement,
        params.alpha,
    )?;
    Ok(distribution_sum(
        &p0.probs,
        &pplus.probs,
        &pminus.probs,
        params,
    ))
}

pub(crate) fn check_displacements(d0: C64, dp: C64, dm: C64, alpha: C64) -> Result<()> {
    let ok = d0.norm() <= DISPLACEMENT_TOL
        && (dp - alpha).norm() <= DISPLACEMENT_TOL
        && (dm + alpha).norm() <= DISPLACEMENT_TOL;
    if ok {
        Ok(())
    } else {
        Err(Error::DisplacementMismatch(format!(
            "expected displacements (0, {alpha}, {}), got ({d0}, {dp}, {dm})",
            -alpha
        )))
    }
}

/// The distribution sum with probabilities (or frequencies) as plain slices.
pub(crate) fn distribution_sum(
    p0: &[f64],
    pplus: &[f64],
    pminus: &[f64],
    params: &WitnessParams,
) -> f64 {
    let a2 = params.alpha.norm_sqr();
    let gamma = params.gamma;
    let s = params.parity.sign();
    let zero = sum_weighted(p0, |n| {
        let alt = if n % 2 == 0 { 1.0 } else { -1.0 };
        let n = n as f64;
        2.0 * n * n - (1.0 - 4.0 * a2) * n - s * gamma * alt
    });
    let squared = |n: usize| (n * n) as f64;
    let plus = sum_weighted(pplus, squared);
    let minus = sum_weighted(pminus, squared);
    zero - 0.5 * (plus + minus) + 2.0 * a2 * a2 + a2 + gamma
}

/// Moments of `rho` that determine every witness expectation with `N` heads.
#[derive(Clone, Debug, PartialEq)]
pub struct StateMoments {
    pub heads: usize,
    pub normal: f64,
    pub lowering: C64,
    /// Population of each residue class `n mod N`.
    pub residues: Vec<f64>,
}

impl StateMoments {
    pub fn of(rho: &DensityOperator, heads: usize) -> Self {
        let m = rho.matrix();
        let dim = rho.dim();
        let falling = |n: usize| -> f64 {
            if n < heads {
                0.0
            } else {
                ((n - heads + 1)..=n).map(|j| j as f64).product()
            }
        };
        let mut normal = 0.0;
        let mut lowering = C64::from(0.0);
        let mut residues = vec![0.0; heads];
        for n in 0..dim {
            let p = m[(n, n)].re;
            normal += falling(n) * p;
            residues[n % heads] += p;
            if n + heads < dim {
                // <n| a^N rho |n> = sqrt((n+N)!/n!) rho_{n+N, n}
                lowering += m[(n + heads, n)] * falling(n + heads).sqrt();
            }
        }
        Self {
            heads,
            normal,
            lowering,
            residues,
        }
    }

    /// `<(a†^N - alpha*^N)(a^N - alpha^N)>`.
    pub fn lowering_term(&self, alpha: C64) -> f64 {
        let t = alpha.powu(self.heads as u32);
        self.normal - 2.0 * (t.conj() * self.lowering).re + t.norm_sqr()
    }

    /// Weight outside the residue class of the target (`n ≡ -m mod N`).
    pub fn off_sector(&self, sector: usize) -> f64 {
        let residue = (self.heads - sector % self.heads) % self.heads;
        1.0 - self.residues[residue]
    }

    /// Coefficient of `gamma` in the witness expectation.
    pub fn gamma_coefficient(&self, params: &WitnessParams) -> f64 {
        if params.is_multi_head() {
            self.off_sector(params.sector)
        } else {
            let parity = self.residues[0] - self.residues[1];
            1.0 - params.parity.sign() * parity
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{
        cat_state, coherent_state, expectation, max_abs_diff, multi_headed_cat, squeeze,
    };

    fn cfg(dim: usize) -> HilbertConfig {
        HilbertConfig::new(dim).unwrap()
    }

    #[test]
    fn ideal_cat_is_annihilated() {
        let c = cfg(60);
        let p = WitnessParams::two_head(C64::from(1.5), 1.0, Parity::Odd);
        let op = witness_operator(&c, &p).unwrap();
        let cat = cat_state(&c, C64::from(1.5), Parity::Odd).unwrap();
        assert!(cat.expectation(&op).unwrap().re.abs() < 1e-8);
        assert!(op.hermitian_defect() < 1e-12);
    }

    #[test]
    fn coherent_closed_form() {
        let c = cfg(60);
        let (alpha, beta, gamma) = (C64::from(2.0), C64::from(1.3), 0.7);
        for parity in Parity::BOTH {
            let op = witness_operator(&c, &WitnessParams::two_head(alpha, gamma, parity)).unwrap();
            let psi = coherent_state(&c, beta).unwrap();
            let got = psi.expectation(&op).unwrap().re;
            let expected = (beta * beta - alpha * alpha).norm_sqr()
                + gamma * (1.0 - parity.sign() * (-2.0 * beta.norm_sqr()).exp());
            assert!((got - expected).abs() < 1e-7);
        }
    }

    #[test]
    fn opposite_parity_cat_scores_two_gamma() {
        let c = cfg(60);
        let op = witness_operator(
            &c,
            &WitnessParams::two_head(C64::from(2.0), 1.0, Parity::Even),
        )
        .unwrap();
        let odd = cat_state(&c, C64::from(2.0), Parity::Odd).unwrap();
        assert!((odd.expectation(&op).unwrap().re - 2.0).abs() < 1e-8);
    }

    #[test]
    fn squeezed_operator_matches_conjugation() {
        let c = cfg(60);
        let r = 0.3;
        let base = WitnessParams::two_head(C64::from(1.5), 1.0, Parity::Odd);
        let sq = squeezed_witness_operator(&c, &base.with_squeeze(r)).unwrap();
        // oracle: explicit conjugation in a larger space, cropped
        let big = cfg(160);
        let s = squeeze(&big, r).unwrap();
        let o = witness_operator(&big, &base).unwrap();
        let conj = s.mat.adjoint() * &o.mat * &s.mat;
        let k = c.interior();
        let err = max_abs_diff(&sq.block(k), &conj.view((0, 0), (k, k)).into_owned());
        assert!(err < 1e-7, "err {err}");

        let zero = squeezed_witness_operator(&c, &base.with_squeeze(0.0)).unwrap();
        let plain = witness_operator(&c, &base).unwrap();
        assert!(max_abs_diff(&zero.mat, &plain.mat) < 1e-10);
    }

    #[test]
    fn squeezed_ground_state() {
        let c = cfg(80);
        let alpha = C64::from(1.5);
        let p = WitnessParams::two_head(alpha, 1.0, Parity::Odd).with_squeeze(0.3);
        let op = squeezed_witness_operator(&c, &p).unwrap();
        let cat = cat_state(&c, alpha, Parity::Odd).unwrap();
        let ground = crate::fock::squeeze_state(&c, &cat, -0.3).unwrap();
        assert!(ground.expectation(&op).unwrap().re.abs() < 1e-7);
    }

    #[test]
    fn decomposition_identity() {
        let c = cfg(80);
        for (a, g) in [(0.5, 0.5), (1.0, 1.0), (2.0, 1.0), (2.5, 5.0), (0.0, 2.0)] {
            for parity in Parity::BOTH {
                let p = WitnessParams::two_head(C64::from(a), g, parity);
                let direct = witness_operator(&c, &p).unwrap();
                let decomposed = decomposed_witness(&c, &p).unwrap();
                let err = direct.block_distance(&decomposed, c.interior());
                assert!(err < 1e-9, "alpha {a} gamma {g}: {err}");
            }
        }
    }

    #[test]
    fn decomposition_with_complex_alpha() {
        let c = cfg(60);
        let p = WitnessParams::two_head(C64::new(0.9, -0.7), 0.3, Parity::Even);
        let err = witness_operator(&c, &p)
            .unwrap()
            .block_distance(&decomposed_witness(&c, &p).unwrap(), c.interior());
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn spectrum_ground_pair() {
        let c = cfg(60);
        for parity in Parity::BOTH {
            let p = WitnessParams::two_head(C64::from(2.0), 1.0, parity);
            let spec = operator_spectrum(&c, &p, 4).unwrap();
            assert!(spec[0].value.abs() < 1e-7);
            assert!((spec[1].value - 2.0).abs() < 1e-7);
            let same = cat_state(&c, C64::from(2.0), parity).unwrap();
            let other = cat_state(&c, C64::from(2.0), parity.opposite()).unwrap();
            assert!(spec[0].state.fidelity(&same).unwrap() > 1.0 - 1e-7);
            assert!(spec[1].state.fidelity(&other).unwrap() > 1.0 - 1e-6);
            assert!(spec.windows(2).all(|w| w[0].value <= w[1].value));
        }
        assert!(operator_spectrum(
            &c,
            &WitnessParams::two_head(C64::from(2.0), 1.0, Parity::Odd),
            9
        )
        .is_err());
    }

    #[test]
    fn multi_head_ground_states() {
        let c = cfg(60);
        for m in 0..3 {
            let p = WitnessParams::multi_head(C64::from(2.0), 1.0, 3, m);
            let op = multi_head_operator(&c, &p).unwrap();
            let cat = multi_headed_cat(&c, C64::from(2.0), 3, m).unwrap();
            assert!(cat.expectation(&op).unwrap().re.abs() < 1e-7);
        }
        let p2 = WitnessParams::multi_head(C64::from(1.0), 1.0, 2, 1);
        let op = multi_head_operator(&c, &p2).unwrap();
        let odd = cat_state(&c, C64::from(1.0), Parity::Odd).unwrap();
        assert!(odd.expectation(&op).unwrap().re.abs() < 1e-8);
        assert!(matches!(
            multi_head_operator(&c, &WitnessParams::multi_head(C64::from(1.0), 1.0, 3, 3)),
            Err(Error::BadSymmetryIndex { .. })
        ));
    }

    #[test]
    fn multi_head_on_coherent_state() {
        let c = cfg(60);
        let alpha = C64::from(2.0);
        let psi = coherent_state(&c, alpha).unwrap();
        for m in 0..3 {
            let op = multi_head_operator(&c, &WitnessParams::multi_head(alpha, 1.0, 3, m)).unwrap();
            // Poisson weight of n ≡ -m (mod 3)
            let residue = (3 - m) % 3;
            let mut term = (-4.0f64).exp();
            let mut weight = 0.0;
            for n in 0..60usize {
                if n > 0 {
                    term *= 4.0 / n as f64;
                }
                if n % 3 == residue {
                    weight += term;
                }
            }
            let got = psi.expectation(&op).unwrap().re;
            assert!((got - (1.0 - weight)).abs() < 1e-8, "m {m}: {got}");
        }
    }

    #[test]
    fn moments_reproduce_operator_expectations() {
        let c = cfg(50);
        let rho = DensityOperator::mixture(
            &c,
            &[
                (
                    0.6,
                    &cat_state(&c, C64::new(1.2, 0.5), Parity::Odd).unwrap(),
                ),
                (0.4, &coherent_state(&c, C64::new(-0.3, 0.8)).unwrap()),
            ],
        )
        .unwrap();
        for p in [
            WitnessParams::two_head(C64::new(1.1, 0.2), 0.8, Parity::Odd),
            WitnessParams::two_head(C64::from(0.7), 2.0, Parity::Even),
            WitnessParams::multi_head(C64::from(1.4), 0.5, 3, 1),
        ] {
            let op = witness_operator(&c, &p).unwrap();
            let direct = expectation(&op, &rho).unwrap().re;
            let m = StateMoments::of(&rho, p.heads);
            let via = m.lowering_term(p.alpha) + p.gamma * m.gamma_coefficient(&p);
            assert!((direct - via).abs() < 1e-10, "{p:?}: {direct} vs {via}");
        }
    }

    #[test]
    fn psd_on_interior() {
        let c = cfg(60);
        for a in [0.5, 1.5, 2.5] {
            for g in [0.0, 1.0, 5.0] {
                for parity in Parity::BOTH {
                    let op =
                        witness_operator(&c, &WitnessParams::two_head(C64::from(a), g, parity))
                            .unwrap();
                    let k = c.interior();
                    let block = OperatorMatrix::new(op.block(k), true);
                    assert!(block.eigenvalues()[0] > -1e-8);
                }
            }
        }
    }
}
