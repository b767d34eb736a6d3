use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::params::{gaussian_expectation, GaussianParams};
use crate::error::{Error, Result};
use crate::fock::{default_cutoff, Parity, MAX_SQUEEZE};
use crate::optimize::{latin_hypercube, multi_start, NelderMeadOptions};

/// Which cat target a benchmark refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CatFamily {
    /// Balanced two-component cat of the given parity.
    TwoHead(Parity),
    /// `N`-component cat with symmetry index `m`, supported on `n ≡ -m (mod N)`.
    MultiHead { heads: usize, sector: usize },
}

impl CatFamily {
    pub fn heads(self) -> usize {
        match self {
            CatFamily::TwoHead(_) => 2,
            CatFamily::MultiHead { heads, .. } => heads,
        }
    }

    /// Photon-number residue class of the target.
    pub fn residue(self) -> usize {
        match self {
            CatFamily::TwoHead(Parity::Even) => 0,
            CatFamily::TwoHead(Parity::Odd) => 1,
            CatFamily::MultiHead { heads, sector } => (heads - sector % heads) % heads,
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            CatFamily::MultiHead { heads, sector } if heads < 2 || sector >= heads => {
                Err(Error::BadSymmetryIndex { heads, sector })
            }
            _ => Ok(()),
        }
    }
}

/// Result of a Gaussian extremization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub value: f64,
    pub params: GaussianParams,
    pub converged: bool,
    pub evaluations: usize,
}

/// Multi-start settings for the Gaussian searches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBudget {
    pub starts: usize,
    pub seed: u64,
    pub nelder_mead: NelderMeadOptions,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            starts: 32,
            seed: 0x5eed_ca75,
            nelder_mead: NelderMeadOptions::default(),
        }
    }
}

const STEP: [f64; 4] = [0.3, 0.3, 0.1, 0.4];
const TAIL_LIMIT: f64 = 1e-10;

fn start_points(alpha: f64, budget: &SearchBudget) -> Vec<Vec<f64>> {
    let half = 2f64.sqrt() * (alpha.abs() + 2.0);
    let bounds = [(-half, half), (-half, half), (-1.0, 1.0), (0.0, PI)];
    let mut starts = latin_hypercube(budget.starts, &bounds, budget.seed);
    let peak = 2f64.sqrt() * alpha.abs();
    starts.push(vec![peak, 0.0, 0.0, 0.0]);
    starts.push(vec![-peak, 0.0, 0.0, 0.0]);
    starts.push(vec![0.0, 0.0, 0.0, 0.0]);
    starts.push(vec![0.0, 0.0, -0.2, 0.0]);
    starts
}

fn run(alpha: f64, budget: &SearchBudget, mut f: impl FnMut(&GaussianParams) -> f64) -> Extremum {
    let mut objective = |x: &[f64]| {
        if x[2].abs() > MAX_SQUEEZE {
            return f64::INFINITY;
        }
        f(&GaussianParams::new(x[0], x[1], x[2], x[3]))
    };
    let starts = start_points(alpha, budget);
    let m = multi_start(&mut objective, &starts, &STEP, &budget.nelder_mead);
    Extremum {
        value: m.value,
        params: GaussianParams::from_slice(&m.x),
        converged: m.converged,
        evaluations: m.evaluations,
    }
}

/// Minimal `<O±(alpha, gamma)>` over pure Gaussian states, from the closed form.
/// The target amplitude is taken real and non-negative; the minimum depends on
/// `|alpha|` only.
pub fn minimize_gaussian_expectation(
    alpha: f64,
    gamma: f64,
    parity: Parity,
    budget: &SearchBudget,
) -> Result<Extremum> {
    check_gamma(gamma)?;
    let a = C64::from(alpha.abs());
    Ok(run(alpha, budget, |gp| {
        gaussian_expectation(gp, a, gamma, parity)
    }))
}

/// Fock length used for Gaussian amplitudes around a target of size `alpha`.
fn amplitude_len(alpha: f64) -> usize {
    2 * default_cutoff(alpha) + 40
}

/// Minimal `<O^(N)(alpha, gamma, m)>` over pure Gaussian states, evaluated from
/// Fock amplitudes: `||(a^N - alpha^N) psi||^2 + gamma (1 - P_m)`.
pub fn minimize_multi_head_expectation(
    alpha: f64,
    gamma: f64,
    family: CatFamily,
    budget: &SearchBudget,
) -> Result<Extremum> {
    check_gamma(gamma)?;
    family.validate()?;
    let len = amplitude_len(alpha);
    let heads = family.heads();
    let residue = family.residue();
    let target = alpha.abs().powi(heads as i32);
    let lowering: Vec<f64> = (0..len)
        .map(|n| {
            if n + heads < len {
                ((n + 1)..=(n + heads)).map(|j| (j as f64).sqrt()).product()
            } else {
                0.0
            }
        })
        .collect();
    let result = run(alpha, budget, |gp| {
        let (amps, tail) = gp.fock_amplitudes(len);
        if tail > TAIL_LIMIT || amps.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return f64::INFINITY;
        }
        let mut quartic = 0.0;
        let mut sector = 0.0;
        for n in 0..len {
            let lowered = if n + heads < len {
                amps[n + heads] * lowering[n]
            } else {
                C64::from(0.0)
            };
            quartic += (lowered - amps[n] * target).norm_sqr();
            if n % heads == residue {
                sector += amps[n].norm_sqr();
            }
        }
        quartic + gamma * (1.0 - sector)
    });
    Ok(result)
}

/// Maximal fidelity `|<cat|psi_G>|^2` over pure Gaussian states.
pub fn maximize_gaussian_fidelity(
    alpha: f64,
    family: CatFamily,
    budget: &SearchBudget,
) -> Result<Extremum> {
    family.validate()?;
    let alpha = alpha.abs();
    let len = amplitude_len(alpha);
    let cat = cat_amplitudes(alpha, family, len);
    let result = run(alpha, budget, |gp| {
        let (amps, _) = gp.fock_amplitudes(len);
        let overlap: C64 = cat
            .iter()
            .zip(&amps)
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, a)| *a * *c)
            .sum();
        let f = overlap.norm_sqr();
        if f.is_finite() {
            1.0 - f
        } else {
            f64::INFINITY
        }
    });
    Ok(Extremum {
        value: 1.0 - result.value,
        ..result
    })
}

/// Real normalized cat amplitudes for real `alpha >= 0`.
fn cat_amplitudes(alpha: f64, family: CatFamily, len: usize) -> Vec<f64> {
    let heads = family.heads();
    let residue = family.residue();
    let mut term = 1.0;
    let mut out = Vec::with_capacity(len);
    for n in 0..len {
        if n > 0 {
            term *= alpha / (n as f64).sqrt();
        }
        out.push(if n % heads == residue { term } else { 0.0 });
    }
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        out[residue] = 1.0;
        return out;
    }
    out.iter().map(|x| x / norm).collect()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "gamma must be finite and non-negative, got {gamma}"
        )))
    }
}

/// Source of the Gaussian normalizations used by the metrics.
pub trait GaussianBenchmark: Sync {
    /// Minimal witness expectation over Gaussian states.
    fn floor(&self, family: CatFamily, alpha: f64, gamma: f64) -> Result<Extremum>;

    /// Maximal fidelity between a Gaussian state and the target cat.
    fn fidelity_ceiling(&self, family: CatFamily, alpha: f64) -> Result<Extremum>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Key {
    Floor(CatFamily, u64, u64),
    Ceiling(CatFamily, u64),
}

/// Runs the optimizer on demand and memoizes results by exact argument bits.
#[derive(Debug, Default)]
pub struct DirectBenchmark {
    budget: SearchBudget,
    memo: Mutex<HashMap<Key, Extremum>>,
}

impl DirectBenchmark {
    pub fn new(budget: SearchBudget) -> Self {
        Self {
            budget,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn budget(&self) -> &SearchBudget {
        &self.budget
    }

    pub fn cached_entries(&self) -> usize {
        self.memo.lock().unwrap().len()
    }

    pub(crate) fn preload_floor(&self, family: CatFamily, alpha: f64, gamma: f64, e: Extremum) {
        self.memo.lock().unwrap().insert(
            Key::Floor(family, alpha.abs().to_bits(), gamma.to_bits()),
            e,
        );
    }

    pub(crate) fn preload_ceiling(&self, family: CatFamily, alpha: f64, e: Extremum) {
        self.memo
            .lock()
            .unwrap()
            .insert(Key::Ceiling(family, alpha.abs().to_bits()), e);
    }

    fn cached(&self, key: Key, compute: impl FnOnce() -> Result<Extremum>) -> Result<Extremum> {
        if let Some(e) = self.memo.lock().unwrap().get(&key) {
            return Ok(*e);
        }
        let e = compute()?;
        self.memo.lock().unwrap().insert(key, e);
        Ok(e)
    }
}

impl GaussianBenchmark for DirectBenchmark {
    fn floor(&self, family: CatFamily, alpha: f64, gamma: f64) -> Result<Extremum> {
        let alpha = alpha.abs();
        let key = Key::Floor(family, alpha.to_bits(), gamma.to_bits());
        self.cached(key, || match family {
            CatFamily::TwoHead(p) => minimize_gaussian_expectation(alpha, gamma, p, &self.budget),
            _ => minimize_multi_head_expectation(alpha, gamma, family, &self.budget),
        })
    }

    fn fidelity_ceiling(&self, family: CatFamily, alpha: f64) -> Result<Extremum> {
        let alpha = alpha.abs();
        self.cached(Key::Ceiling(family, alpha.to_bits()), || {
            maximize_gaussian_fidelity(alpha, family, &self.budget)
        })
    }
}
