//! Catability and normalized infidelity, for a fixed target amplitude and
//! globally over real amplitudes and both parities.
//!
//! For a state `rho` and witness parameters `(alpha, gamma)` the catability is
//! `min_gamma Tr(O rho) / min_G Tr(O rho_G)` with the minimum in the denominator
//! taken over Gaussian states. Because `Tr(O rho) = Q + gamma d` is affine in
//! `gamma`, a state is summarized by two numbers per amplitude.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    cat_state, fidelity_with_pure, multi_headed_cat, DensityOperator, HilbertConfig, Parity,
};
use crate::gaussian::{uniform_grid, CatFamily, GaussianBenchmark};
use crate::optimize::golden_section;
use crate::witness::{StateMoments, WitnessParams};

/// Floors below this are treated as zero and the corresponding `gamma` is skipped.
pub const FLOOR_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSearch {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub tol: f64,
    pub refine: bool,
}

impl Default for GammaSearch {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 5.0,
            points: 51,
            tol: 1e-4,
            refine: true,
        }
    }
}

impl GammaSearch {
    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(
            self.lo,
            (self.hi - self.lo) / (self.points - 1) as f64,
            self.points,
        )
    }

    pub fn grid_only(self) -> Self {
        Self {
            refine: false,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 || !(self.hi > self.lo) || self.lo < 0.0 || !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "invalid gamma search {self:?}"
            )));
        }
        Ok(())
    }
}

/// Real-amplitude grid for global searches, followed by golden-section
/// refinement around the best node of each parity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaSearch {
    pub start: f64,
    pub step: f64,
    pub points: usize,
    pub tol: f64,
}

impl Default for AlphaSearch {
    fn default() -> Self {
        Self {
            start: 0.05,
            step: 0.05,
            points: 80,
            tol: 1e-3,
        }
    }
}

impl AlphaSearch {
    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.start, self.step, self.points)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 || !(self.step > 0.0) || !(self.start > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "invalid alpha search {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    /// Catability or normalized infidelity.
    pub value: f64,
    /// Minimizing `gamma`; absent for the infidelity.
    pub optimal_gamma: Option<f64>,
    pub optimal_alpha: C64,
    pub family: CatFamily,
    pub numerator: f64,
    /// Gaussian floor (catability) or `1 - ceiling` (infidelity).
    pub gaussian_floor: f64,
    /// The minimizing `gamma` sits on an end of the search interval.
    pub at_gamma_boundary: bool,
    /// Every Gaussian optimization behind this value converged.
    pub converged: bool,
}

impl MetricResult {
    pub fn parity(&self) -> Option<Parity> {
        match self.family {
            CatFamily::TwoHead(p) => Some(p),
            CatFamily::MultiHead { .. } => None,
        }
    }
}

/// Minimum over `gamma` of `(q + gamma d) / floor(gamma)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaOptimum {
    pub gamma: f64,
    pub value: f64,
    pub numerator: f64,
    pub floor: f64,
    pub at_boundary: bool,
    pub converged: bool,
}

pub fn minimize_ratio(
    q: f64,
    d: f64,
    family: CatFamily,
    alpha: f64,
    search: &GammaSearch,
    bench: &dyn GaussianBenchmark,
) -> Result<GammaOptimum> {
    search.validate()?;
    let mut converged = true;
    let mut eval = |gamma: f64| -> Result<Option<(f64, f64)>> {
        let e = bench.floor(family, alpha, gamma)?;
        converged &= e.converged;
        if e.value < FLOOR_EPS {
            return Ok(None);
        }
        Ok(Some(((q + gamma * d) / e.value, e.value)))
    };
    let grid = search.grid();
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, &g) in grid.iter().enumerate() {
        if let Some((ratio, floor)) = eval(g)? {
            if best.is_none_or(|b| ratio < b.1) {
                best = Some((i, ratio, floor));
            }
        }
    }
    let (i, mut value, mut floor) = best.ok_or_else(|| {
        Error::BenchmarkUnavailable(format!(
            "Gaussian floor vanishes on the whole gamma grid at alpha = {alpha}"
        ))
    })?;
    let mut gamma = grid[i];
    if search.refine {
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(grid.len() - 1)];
        let mut failure = None;
        let (g, _) = golden_section(
            &mut |g| match eval(g) {
                Ok(Some((r, _))) => r,
                Ok(None) => f64::INFINITY,
                Err(e) => {
                    failure = Some(e);
                    f64::INFINITY
                }
            },
            lo,
            hi,
            search.tol,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        if let Some((r, f)) = eval(g)? {
            if r < value {
                value = r;
                floor = f;
                gamma = g;
            }
        }
    }
    let edge = search.tol.max(1e-12);
    Ok(GammaOptimum {
        gamma,
        value,
        numerator: q + gamma * d,
        floor,
        at_boundary: gamma <= search.lo + edge || gamma >= search.hi - edge,
        converged,
    })
}

fn two_head_terms(m: &StateMoments, alpha: C64, parity: Parity) -> (f64, f64) {
    let p = WitnessParams::two_head(alpha, 0.0, parity);
    (m.lowering_term(alpha), m.gamma_coefficient(&p))
}

fn catability_from_moments(
    m: &StateMoments,
    alpha: C64,
    parity: Parity,
    search: &GammaSearch,
    bench: &dyn GaussianBenchmark,
) -> Result<MetricResult> {
    let (q, d) = two_head_terms(m, alpha, parity);
    let family = CatFamily::TwoHead(parity);
    let opt = minimize_ratio(q, d, family, alpha.norm(), search, bench)?;
    Ok(to_result(opt, alpha, family))
}

fn to_result(opt: GammaOptimum, alpha: C64, family: CatFamily) -> MetricResult {
    MetricResult {
        value: opt.value,
        optimal_gamma: Some(opt.gamma),
        optimal_alpha: alpha,
        family,
        numerator: opt.numerator,
        gaussian_floor: opt.floor,
        at_gamma_boundary: opt.at_boundary,
        converged: opt.converged,
    }
}

/// Catability of `rho` with respect to the two-headed witness at `alpha`.
pub fn catability(
    rho: &DensityOperator,
    alpha: C64,
    parity: Parity,
    search: &GammaSearch,
    bench: &dyn GaussianBenchmark,
) -> Result<MetricResult> {
    let m = StateMoments::of(rho, 2);
    catability_from_moments(&m, alpha, parity, search, bench)
}

/// Catability with respect to the N-headed witness with symmetry index `sector`.
pub fn multi_head_catability(
    rho: &DensityOperator,
    alpha: C64,
    heads: usize,
    sector: usize,
    search: &GammaSearch,
    bench: &dyn GaussianBenchmark,
) -> Result<MetricResult> {
    let family = CatFamily::MultiHead { heads, sector };
    family.validate()?;
    let m = StateMoments::of(rho, heads);
    let q = m.lowering_term(alpha);
    let d = m.off_sector(sector);
    let opt = minimize_ratio(q, d, family, alpha.norm(), search, bench)?;
    Ok(to_result(opt, alpha, family))
}

/// One evaluated point of a global search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub alpha: f64,
    pub parity: Parity,
    pub value: f64,
    pub gamma: Option<f64>,
    pub refinement: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalResult {
    pub best: MetricResult,
    pub trace: Vec<TracePoint>,
}

/// Shared grid-then-golden search over `|alpha|` and both parities.
///
/// Each parity is refined around its best grid node and around every entry
/// of `seeds`, by golden section within one grid step.
fn global_search<F>(search: &AlphaSearch, seeds: &[f64], eval: F) -> Result<GlobalResult>
where
    F: Fn(f64, Parity, bool) -> Result<MetricResult> + Sync,
{
    search.validate()?;
    let grid = search.grid();
    let (first, last) = (grid[0], grid[grid.len() - 1]);
    let nodes: Vec<(Parity, f64)> = Parity::BOTH
        .iter()
        .flat_map(|&p| grid.iter().map(move |&a| (p, a)))
        .collect();
    let coarse: Vec<Option<MetricResult>> = nodes
        .par_iter()
        .map(|&(p, a)| match eval(a, p, false) {
            Ok(r) => Ok(Some(r)),
            Err(Error::BenchmarkUnavailable(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    let mut trace: Vec<TracePoint> = nodes
        .iter()
        .zip(&coarse)
        .filter_map(|(&(p, a), r)| {
            r.map(|r| TracePoint {
                alpha: a,
                parity: p,
                value: r.value,
                gamma: r.optimal_gamma,
                refinement: false,
            })
        })
        .collect();

    let mut best: Option<MetricResult> = None;
    let consider = |r: MetricResult, best: &mut Option<MetricResult>| {
        if best.is_none_or(|b| r.value < b.value) {
            *best = Some(r);
        }
    };
    for parity in Parity::BOTH {
        let offset = if parity == Parity::Even {
            0
        } else {
            grid.len()
        };
        let node = (0..grid.len())
            .filter(|&i| coarse[offset + i].is_some())
            .min_by(|&i, &j| {
                let a = coarse[offset + i].unwrap().value;
                let b = coarse[offset + j].unwrap().value;
                a.total_cmp(&b)
            });
        let mut centers: Vec<f64> = node.map(|i| grid[i]).into_iter().collect();
        centers.extend(seeds.iter().filter(|s| (first..=last).contains(*s)));
        for center in centers {
            let mut probe = |a: f64| -> Result<Option<MetricResult>> {
                match eval(a, parity, true) {
                    Ok(r) => {
                        trace.push(TracePoint {
                            alpha: a,
                            parity,
                            value: r.value,
                            gamma: r.optimal_gamma,
                            refinement: true,
                        });
                        Ok(Some(r))
                    }
                    Err(Error::BenchmarkUnavailable(_)) => Ok(None),
                    Err(e) => Err(e),
                }
            };
            if let Some(r) = probe(center)? {
                consider(r, &mut best);
            }
            let lo = (center - search.step).max(first);
            let hi = (center + search.step).min(last);
            let mut failure = None;
            let (a_opt, _) = golden_section(
                &mut |a| match probe(a) {
                    Ok(Some(r)) => r.value,
                    Ok(None) => f64::INFINITY,
                    Err(e) => {
                        failure = Some(e);
                        f64::INFINITY
                    }
                },
                lo,
                hi,
                search.tol,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            if let Some(r) = probe(a_opt)? {
                consider(r, &mut best);
            }
        }
    }
    let best = best.ok_or_else(|| {
        Error::BenchmarkUnavailable("no amplitude on the search grid has a usable benchmark".into())
    })?;
    Ok(GlobalResult { best, trace })
}

/// Phase that aligns `alpha^2` with `<a^2>`; zero when `<a^2>` vanishes.
fn aligned_phase(m: &StateMoments) -> f64 {
    if m.lowering.norm() > 1e-14 {
        0.5 * m.lowering.arg()
    } else {
        0.0
    }
}

/// Minimum of the catability over complex `alpha` with `|alpha|` on the search
/// grid and both parities.
///
/// For fixed `|alpha|` the Gaussian floor and the parity term do not depend on
/// the phase of `alpha`, and the quartic term is smallest when `alpha^2` is
/// parallel to `<a^2>`, so the phase is fixed to that direction. The quartic
/// term vanishes for coherent-state mixtures at `|alpha|^2 = |<a^2>|`, where
/// the ratio can dip sharply; that amplitude is always refined.
pub fn global_catability(
    rho: &DensityOperator,
    alpha_search: &AlphaSearch,
    gamma_search: &GammaSearch,
    bench: &dyn GaussianBenchmark,
) -> Result<GlobalResult> {
    let m = StateMoments::of(rho, 2);
    let phase = C64::from_polar(1.0, aligned_phase(&m));
    let coarse = gamma_search.grid_only();
    let seed = m.lowering.norm().sqrt();
    global_search(alpha_search, &[seed], |a, p, fine| {
        let s = if fine { gamma_search } else { &coarse };
        catability_from_moments(&m, phase * a, p, s, bench)
    })
}

fn infidelity_ratio(
    fidelity: f64,
    alpha: C64,
    family: CatFamily,
    bench: &dyn GaussianBenchmark,
) -> Result<MetricResult> {
    let ceiling = bench.fidelity_ceiling(family, alpha.norm())?;
    let denom = 1.0 - ceiling.value;
    if denom < FLOOR_EPS {
        return Err(Error::BenchmarkUnavailable(format!(
            "a Gaussian state reproduces the target at alpha = {alpha}"
        )));
    }
    let numerator = (1.0 - fidelity).max(0.0);
    Ok(MetricResult {
        value: numerator / denom,
        optimal_gamma: None,
        optimal_alpha: alpha,
        family,
        numerator,
        gaussian_floor: denom,
        at_gamma_boundary: false,
        converged: ceiling.converged,
    })
}

fn state_cfg(rho: &DensityOperator) -> Result<HilbertConfig> {
    HilbertConfig::new(rho.dim())
}

/// `(1 - <cat|rho|cat>) / min_G (1 - <cat|rho_G|cat>)`.
pub fn normalized_infidelity(
    rho: &DensityOperator,
    alpha: C64,
    parity: Parity,
    bench: &dyn GaussianBenchmark,
) -> Result<MetricResult> {
    let cat = cat_state(&state_cfg(rho)?, alpha, parity)?;
    let f = fidelity_with_pure(rho, &cat)?;
    infidelity_ratio(f, alpha, CatFamily::TwoHead(parity), bench)
}

pub fn multi_head_infidelity(
    rho: &DensityOperator,
    alpha: C64,
    heads: usize,
    sector: usize,
    bench: &dyn GaussianBenchmark,
) -> Result<MetricResult> {
    let cat = multi_headed_cat(&state_cfg(rho)?, alpha, heads, sector)?;
    let f = fidelity_with_pure(rho, &cat)?;
    infidelity_ratio(f, alpha, CatFamily::MultiHead { heads, sector }, bench)
}

/// Minimum of the normalized infidelity over `|alpha|` and both parities, with
/// the phase of `alpha` aligned to `<a^2>` as in [`global_catability`].
pub fn global_normalized_infidelity(
    rho: &DensityOperator,
    alpha_search: &AlphaSearch,
    bench: &dyn GaussianBenchmark,
) -> Result<GlobalResult> {
    let phase = C64::from_polar(1.0, aligned_phase(&StateMoments::of(rho, 2)));
    global_search(alpha_search, &[], |a, p, _| {
        normalized_infidelity(rho, phase * a, p, bench)
    })
}
