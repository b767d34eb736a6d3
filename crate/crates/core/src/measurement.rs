//! Simulated direct measurement: displaced photon counting, finite-shot
//! sampling, the three-setting estimator, ensembles and the two-step protocol.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{check_amplitude_cutoff, linalg, DensityOperator, Parity};
use crate::gaussian::{uniform_grid, CatFamily, GaussianBenchmark};
use crate::metrics::{minimize_ratio, GammaSearch};
use crate::witness::{check_displacements, distribution_sum, WitnessParams};

/// `p_n(beta)`: photon-number distribution of `D(beta) rho D†(beta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumberDistribution {
    pub probs: Vec<f64>,
    pub displacement: C64,
}

impl NumberDistribution {
    pub fn new(probs: Vec<f64>, displacement: C64) -> Result<Self> {
        let d = Self {
            probs,
            displacement,
        };
        d.check_normalized(1e-8)?;
        Ok(d)
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let total: f64 = self.probs.iter().sum();
        if self.probs.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > tol {
            return Err(Error::UnnormalizedDistribution(total));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }
}

/// Leading rows of `D(beta)` acting on the support of a `dim`-level state.
struct Displacer {
    block: DMatrix<C64>,
    beta: C64,
}

impl Displacer {
    fn new(dim: usize, beta: C64) -> Result<Self> {
        check_amplitude_cutoff(dim, beta.norm())?;
        let len = linalg::displacement_work_dim(dim, beta.norm());
        let work = linalg::displacement_work_dim(len, beta.norm());
        Ok(Self {
            block: linalg::displacement_block(beta, len, dim, work),
            beta,
        })
    }

    fn distribution(&self, rho: &DensityOperator) -> NumberDistribution {
        let d = &self.block;
        let dr = d * rho.matrix();
        let mut probs: Vec<f64> = (0..d.nrows())
            .map(|k| {
                (0..d.ncols())
                    .map(|j| (dr[(k, j)] * d[(k, j)].conj()).re)
                    .sum::<f64>()
            })
            .collect();
        for p in probs.iter_mut() {
            if *p < 0.0 {
                debug_assert!(*p > -1e-10, "negative probability {p}");
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        NumberDistribution {
            probs,
            displacement: self.beta,
        }
    }
}

/// Diagonal of `D(beta) rho D†(beta)` with `D(beta) = exp[beta* a - beta a†]`.
///
/// The distribution is computed in a padded space and has one entry per padded
/// level; values below zero from round-off are clipped and the result
/// renormalized.
pub fn displaced_number_distribution(
    rho: &DensityOperator,
    beta: C64,
) -> Result<NumberDistribution> {
    Ok(Displacer::new(rho.dim(), beta)?.distribution(rho))
}

/// Photon-count frequencies from a finite number of runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountHistogram {
    pub counts: Vec<u64>,
    pub shots: u64,
    pub displacement: C64,
    pub seed: u64,
}

impl CountHistogram {
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.shots as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn mean(&self) -> f64 {
        let total: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(n, &c)| n as f64 * c as f64)
            .sum();
        total / self.shots as f64
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn multinomial(probs: &[f64], shots: u64, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut left = shots;
    let mut mass = 1.0;
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() || mass <= 0.0 {
            counts[k] = left;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(left, q)
            .expect("probability clamped to [0, 1]")
            .sample(rng);
        counts[k] = draw;
        left -= draw;
        mass -= p;
    }
    counts
}

fn sample_stream(dist: &NumberDistribution, shots: u64, seed: u64, stream: u64) -> CountHistogram {
    let mut rng = rng_for(seed, stream);
    let counts = multinomial(&dist.probs, shots, &mut rng);
    debug_assert_eq!(counts.len(), dist.probs.len());
    CountHistogram {
        counts,
        shots,
        displacement: dist.displacement,
        seed,
    }
}

/// Draws `shots` outcomes from `dist`. Deterministic in `(dist, shots, seed)`.
pub fn sample_histogram(
    dist: &NumberDistribution,
    shots: u64,
    seed: u64,
) -> Result<CountHistogram> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    Ok(sample_stream(dist, shots, seed, 0))
}

fn check_two_head(params: &WitnessParams) -> Result<()> {
    params.validate()?;
    if params.is_multi_head() || params.squeeze_r != 0.0 {
        return Err(Error::InvalidArgument(
            "the three-setting estimator applies to the unsqueezed two-headed witness".into(),
        ));
    }
    Ok(())
}

/// Witness estimate with the measured frequencies in place of `p_n(0)`,
/// `p_n(alpha)` and `p_n(-alpha)`.
pub fn estimate_from_histograms(
    h0: &CountHistogram,
    hplus: &CountHistogram,
    hminus: &CountHistogram,
    params: &WitnessParams,
) -> Result<f64> {
    check_two_head(params)?;
    check_displacements(
        h0.displacement,
        hplus.displacement,
        hminus.displacement,
        params.alpha,
    )?;
    Ok(distribution_sum(
        &h0.frequencies(),
        &hplus.frequencies(),
        &hminus.frequencies(),
        params,
    ))
}

fn weighted_variance(freqs: &[f64], w: impl Fn(usize) -> f64) -> f64 {
    let mean: f64 = freqs.iter().enumerate().map(|(n, f)| f * w(n)).sum();
    freqs
        .iter()
        .enumerate()
        .map(|(n, f)| f * (w(n) - mean).powi(2))
        .sum()
}

/// Plug-in standard error of [`estimate_from_histograms`], treating the three
/// settings as independent.
pub fn estimate_std_error(
    h0: &CountHistogram,
    hplus: &CountHistogram,
    hminus: &CountHistogram,
    params: &WitnessParams,
) -> Result<f64> {
    check_two_head(params)?;
    let a2 = params.alpha.norm_sqr();
    let s = params.parity.sign();
    let g = params.gamma;
    let v0 = weighted_variance(&h0.frequencies(), |n| {
        let alt = if n % 2 == 0 { 1.0 } else { -1.0 };
        let n = n as f64;
        2.0 * n * n - (1.0 - 4.0 * a2) * n - s * g * alt
    });
    let sq = |n: usize| (n * n) as f64;
    let vp = weighted_variance(&hplus.frequencies(), sq);
    let vm = weighted_variance(&hminus.frequencies(), sq);
    Ok(
        (v0 / h0.shots as f64 + 0.25 * vp / hplus.shots as f64 + 0.25 * vm / hminus.shots as f64)
            .sqrt(),
    )
}

/// Ensemble statistics of the estimator for a sequence of shot counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub shots_schedule: Vec<u64>,
    pub mean_estimates: Vec<f64>,
    pub std_devs: Vec<f64>,
    pub true_value: f64,
    pub trials: usize,
    pub seed: u64,
}

impl EnsembleReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("shots,mean,std,true_value,trials,seed\n");
        for ((n, m), s) in self
            .shots_schedule
            .iter()
            .zip(&self.mean_estimates)
            .zip(&self.std_devs)
        {
            out.push_str(&format!(
                "{n},{m:.12e},{s:.12e},{:.12e},{},{}\n",
                self.true_value, self.trials, self.seed
            ));
        }
        out
    }
}

/// The exact distributions for the three settings `0, +alpha, -alpha`.
pub fn setting_distributions(rho: &DensityOperator, alpha: C64) -> Result<[NumberDistribution; 3]> {
    Ok([
        displaced_number_distribution(rho, C64::from(0.0))?,
        displaced_number_distribution(rho, alpha)?,
        displaced_number_distribution(rho, -alpha)?,
    ])
}

/// Repeats the simulated experiment `trials` times for every entry of the
/// schedule. Trials run in parallel with one random stream per
/// (schedule entry, trial, setting); the reduction order is fixed.
pub fn run_ensemble(
    rho: &DensityOperator,
    params: &WitnessParams,
    shots_schedule: &[u64],
    trials: usize,
    seed: u64,
) -> Result<EnsembleReport> {
    check_two_head(params)?;
    if trials < 2 {
        return Err(Error::InvalidArgument(
            "an ensemble needs at least two trials".into(),
        ));
    }
    if shots_schedule.contains(&0) {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let dists = setting_distributions(rho, params.alpha)?;
    let true_value = distribution_sum(&dists[0].probs, &dists[1].probs, &dists[2].probs, params);
    let mut mean_estimates = Vec::with_capacity(shots_schedule.len());
    let mut std_devs = Vec::with_capacity(shots_schedule.len());
    for (idx, &shots) in shots_schedule.iter().enumerate() {
        let estimates: Vec<f64> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let base = 3 * (idx as u64 * trials as u64 + t as u64);
                let h: Vec<Vec<f64>> = (0..3)
                    .map(|s| sample_stream(&dists[s], shots, seed, base + s as u64).frequencies())
                    .collect();
                distribution_sum(&h[0], &h[1], &h[2], params)
            })
            .collect();
        let n = trials as f64;
        let mean = estimates.iter().sum::<f64>() / n;
        let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
        mean_estimates.push(mean);
        std_devs.push(var.sqrt());
    }
    Ok(EnsembleReport {
        shots_schedule: shots_schedule.to_vec(),
        mean_estimates,
        std_devs,
        true_value,
        trials,
        seed,
    })
}

/// `sqrt(max(0, mean photon number))` of the undisplaced counts. A first-order
/// estimate of `|alpha|`; exact in the large-amplitude limit of a cat.
pub fn estimate_amplitude(h0: &CountHistogram) -> Result<f64> {
    if h0.shots < 100 {
        return Err(Error::InvalidArgument(format!(
            "amplitude estimate needs at least 100 shots, got {}",
            h0.shots
        )));
    }
    Ok(h0.mean().max(0.0).sqrt())
}

/// Statistic recorded at each phase of the scan.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseStatistic {
    /// Frequency of the zero-photon outcome; maximal when a coherent
    /// component is displaced onto the origin.
    #[default]
    Vacuum,
    /// Negative mean photon number, so that maxima again mark the components.
    /// Blind to states with vanishing `<a>`, parity eigenstates included.
    NegMeanPhoton,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseScan {
    /// `(phi, P(phi))` for every grid point.
    pub points: Vec<(f64, f64)>,
    /// Local maxima of `P`, best first; ties go to the smaller `phi`.
    pub maxima: Vec<f64>,
    /// The best maximum exceeds the median of the scan by more than four
    /// standard errors (or by `1e-9` for exact probabilities).
    pub distinct: bool,
    pub statistic: PhaseStatistic,
}

impl PhaseScan {
    pub fn best(&self) -> Option<f64> {
        self.maxima.first().copied()
    }
}

/// Uniform grid of `points` phases on `[0, pi)`.
pub fn phase_grid(points: usize) -> Vec<f64> {
    uniform_grid(0.0, PI / points as f64, points)
}

fn periodic_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut found = Vec::new();
    for i in 0..n {
        let prev = values[(i + n - 1) % n];
        if !(values[i] > prev) {
            continue;
        }
        // walk to the end of a plateau; the plateau start represents it
        let mut j = i;
        let mut steps = 0;
        while values[(j + 1) % n] == values[i] && steps < n {
            j = (j + 1) % n;
            steps += 1;
        }
        if values[(j + 1) % n] < values[i] {
            found.push(i);
        }
    }
    found.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    found
}

fn scan_statistic(dist: &[f64], statistic: PhaseStatistic) -> f64 {
    match statistic {
        PhaseStatistic::Vacuum => dist[0],
        PhaseStatistic::NegMeanPhoton => -dist
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum::<f64>(),
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn phase_scan_streams(
    rho: &DensityOperator,
    amp: f64,
    phi_grid: &[f64],
    shots_per_point: Option<u64>,
    seed: u64,
    first_stream: u64,
    statistic: PhaseStatistic,
) -> Result<PhaseScan> {
    if phi_grid.is_empty() {
        return Err(Error::InvalidArgument("empty phase grid".into()));
    }
    if shots_per_point == Some(0) {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    // D(amp e^{i phi}) = U D(amp) U† with U = e^{i phi n}, so the scan rotates
    // the state and reuses a single displacement.
    let displacer = Displacer::new(rho.dim(), C64::from(amp))?;
    let samples: Vec<(f64, f64)> = phi_grid
        .par_iter()
        .enumerate()
        .map(|(i, &phi)| {
            let mut dist = displacer.distribution(&rho.rotated(-phi));
            dist.displacement = C64::from_polar(amp, phi);
            let (value, sigma) = match shots_per_point {
                None => (scan_statistic(&dist.probs, statistic), 0.0),
                Some(shots) => {
                    let h = sample_stream(&dist, shots, seed, first_stream + i as u64);
                    let f = h.frequencies();
                    let v = scan_statistic(&f, statistic);
                    let spread = match statistic {
                        PhaseStatistic::Vacuum => f[0] * (1.0 - f[0]),
                        PhaseStatistic::NegMeanPhoton => weighted_variance(&f, |n| n as f64),
                    };
                    (v, (spread / shots as f64).sqrt())
                }
            };
            (value, sigma)
        })
        .collect();
    let values: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let idx = periodic_maxima(&values);
    let distinct = match idx.first() {
        None => false,
        Some(&i) => {
            let margin = if shots_per_point.is_some() {
                4.0 * samples[i].1.max(1.0 / shots_per_point.unwrap_or(1) as f64)
            } else {
                1e-9
            };
            values[i] - median(&values) > margin
        }
    };
    Ok(PhaseScan {
        points: phi_grid.iter().copied().zip(values).collect(),
        maxima: idx.iter().map(|&i| phi_grid[i]).collect(),
        distinct,
        statistic,
    })
}

/// Scans the displacement phase at fixed modulus `amp`. With
/// `shots_per_point = None` exact probabilities are used.
///
/// The grid is treated as periodic when locating local maxima.
pub fn phase_scan(
    rho: &DensityOperator,
    amp: f64,
    phi_grid: &[f64],
    shots_per_point: Option<u64>,
    seed: u64,
    statistic: PhaseStatistic,
) -> Result<PhaseScan> {
    phase_scan_streams(rho, amp, phi_grid, shots_per_point, seed, 0, statistic)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOptions {
    pub shots_per_setting: u64,
    pub phase_points: usize,
    pub seed: u64,
    pub statistic: PhaseStatistic,
    pub gamma_search: GammaSearch,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self {
            shots_per_setting: 10_000,
            phase_points: 60,
            seed: 0,
            statistic: PhaseStatistic::Vacuum,
            gamma_search: GammaSearch::default(),
        }
    }
}

/// Estimate for one parity at the orientation found by the protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolEstimate {
    pub parity: Parity,
    pub gamma: f64,
    pub witness_estimate: f64,
    pub witness_std_error: f64,
    pub gaussian_floor: f64,
    pub catability: f64,
    pub catability_std_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub amplitude_estimate: f64,
    pub scan: PhaseScan,
    pub phase_estimate: f64,
    pub alpha_estimate: C64,
    /// One entry per parity for which a Gaussian floor is available.
    pub estimates: Vec<ProtocolEstimate>,
    pub shots_per_setting: u64,
    pub seed: u64,
}

impl ProtocolReport {
    /// The smaller catability estimate of the two parities.
    pub fn best(&self) -> Option<&ProtocolEstimate> {
        self.estimates
            .iter()
            .min_by(|a, b| a.catability.total_cmp(&b.catability))
    }
}

/// Two-step protocol: estimate `|alpha|` from undisplaced counts, locate the
/// phase by scanning displaced vacuum frequencies, then measure the two
/// remaining displaced distributions and estimate the catability of both
/// parities.
///
/// A poorly chosen `(alpha, phi)` only increases the witness estimate for the
/// chosen amplitude, and the Gaussian floor is evaluated at that same
/// amplitude, so orientation errors cannot produce spurious certification.
pub fn full_protocol(
    rho: &DensityOperator,
    opts: &ProtocolOptions,
    bench: &dyn GaussianBenchmark,
) -> Result<ProtocolReport> {
    let shots = opts.shots_per_setting;
    if shots < 100 {
        return Err(Error::InvalidArgument(format!(
            "the protocol needs at least 100 shots per setting, got {shots}"
        )));
    }
    if opts.phase_points == 0 {
        return Err(Error::InvalidArgument(
            "phase grid needs at least one point".into(),
        ));
    }
    let seed = opts.seed;
    let p0 = displaced_number_distribution(rho, C64::from(0.0))?;
    let h0 = sample_stream(&p0, shots, seed, 0);
    let amp = estimate_amplitude(&h0)?;

    let grid = phase_grid(opts.phase_points);
    let scan = phase_scan_streams(rho, amp, &grid, Some(shots), seed, 1, opts.statistic)?;
    let phi = scan.best().unwrap_or(0.0);
    let alpha = C64::from_polar(amp, phi);

    let tail = 1 + opts.phase_points as u64;
    let hp = sample_stream(
        &displaced_number_distribution(rho, alpha)?,
        shots,
        seed,
        tail,
    );
    let hm = sample_stream(
        &displaced_number_distribution(rho, -alpha)?,
        shots,
        seed,
        tail + 1,
    );

    let mut estimates = Vec::with_capacity(2);
    for parity in Parity::BOTH {
        let at = |g: f64| WitnessParams::two_head(alpha, g, parity);
        let q = estimate_from_histograms(&h0, &hp, &hm, &at(0.0))?;
        let d = estimate_from_histograms(&h0, &hp, &hm, &at(1.0))? - q;
        let opt = match minimize_ratio(
            q,
            d,
            CatFamily::TwoHead(parity),
            amp,
            &opts.gamma_search,
            bench,
        ) {
            Ok(o) => o,
            Err(Error::BenchmarkUnavailable(_)) => continue,
            Err(e) => return Err(e),
        };
        let se = estimate_std_error(&h0, &hp, &hm, &at(opt.gamma))?;
        estimates.push(ProtocolEstimate {
            parity,
            gamma: opt.gamma,
            witness_estimate: opt.numerator,
            witness_std_error: se,
            gaussian_floor: opt.floor,
            catability: opt.value,
            catability_std_error: se / opt.floor,
        });
    }
    Ok(ProtocolReport {
        amplitude_estimate: amp,
        scan,
        phase_estimate: phi,
        alpha_estimate: alpha,
        estimates,
        shots_per_setting: shots,
        seed,
    })
}
