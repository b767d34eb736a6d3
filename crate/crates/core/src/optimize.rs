//! Derivative-free minimizers: Nelder-Mead with deterministic multi-start, and
//! golden-section search on an interval.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadOptions {
    /// Stop once the largest vertex distance from the best vertex drops below this.
    pub xtol: f64,
    /// Stop once `f_worst - f_best <= ftol * (1 + |f_best|)`.
    pub ftol: f64,
    pub max_evals: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            xtol: 1e-8,
            ftol: 1e-15,
            max_evals: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder-Mead simplex search from `x0`, with initial edge lengths `step`.
pub fn nelder_mead<F>(f: &mut F, x0: &[f64], step: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evals)).collect();

    // standard coefficients
    let (refl, expand, contract, shrink) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .map(|v| dist(v, &simplex[0]))
            .fold(0.0, f64::max);
        let spread = values[n] - values[0];
        if diameter < opts.xtol || spread <= opts.ftol * (1.0 + values[0].abs()) {
            converged = true;
            break;
        }
        if evals >= opts.max_evals {
            break;
        }

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(refl);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(expand);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let xc = along(contract * refl);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-contract);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    for (x, b) in simplex[i].iter_mut().zip(&best) {
                        *x = b + shrink * (*x - b);
                    }
                    values[i] = eval(&simplex[i], &mut evals);
                }
            }
        }
    }
    Minimum {
        x: simplex[0].clone(),
        value: values[0],
        evaluations: evals,
        converged,
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `count` Latin-hypercube points in the box `bounds[i] = (lo, hi)`.
pub fn latin_hypercube(count: usize, bounds: &[(f64, f64)], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![vec![0.0; bounds.len()]; count];
    for (d, &(lo, hi)) in bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..count).collect();
        strata.shuffle(&mut rng);
        for (p, s) in points.iter_mut().zip(strata) {
            let t = (s as f64 + rng.random::<f64>()) / count as f64;
            p[d] = lo + t * (hi - lo);
        }
    }
    points
}

/// Runs Nelder-Mead from every start, restarts once from the best point found,
/// and returns the overall minimum. Evaluations are summed over all runs.
pub fn multi_start<F>(
    f: &mut F,
    starts: &[Vec<f64>],
    step: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let mut total = 0;
    let mut best: Option<Minimum> = None;
    for s in starts {
        let m = nelder_mead(f, s, step, opts);
        total += m.evaluations;
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let mut best = best.expect("at least one start");
    let small: Vec<f64> = step.iter().map(|s| s * 0.05).collect();
    let polish = nelder_mead(f, &best.x, &small, opts);
    total += polish.evaluations;
    if polish.value <= best.value {
        best = Minimum {
            converged: polish.converged || best.converged,
            ..polish
        };
    }
    best.evaluations = total;
    best
}

/// Golden-section minimization of a unimodal `f` on `[lo, hi]` until the
/// bracket is shorter than `tol`. Returns `(x, f(x))` for the best point seen.
pub fn golden_section<F>(f: &mut F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let mut f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions {
            max_evals: 5000,
            ..Default::default()
        };
        let m = nelder_mead(&mut f, &[-1.2, 1.0], &[0.5, 0.5], &opts);
        assert!(m.converged);
        assert!(
            (m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6,
            "{:?}",
            m.x
        );
    }

    #[test]
    fn multi_start_finds_global_of_double_well() {
        let mut f = |x: &[f64]| (x[0] * x[0] - 1.0).powi(2) + 0.3 * x[0] + x[1] * x[1];
        let starts = latin_hypercube(8, &[(-2.0, 2.0), (-1.0, 1.0)], 7);
        let m = multi_start(&mut f, &starts, &[0.3, 0.3], &NelderMeadOptions::default());
        assert!(m.x[0] < 0.0);
    }

    #[test]
    fn lhs_is_stratified_and_deterministic() {
        let pts = latin_hypercube(10, &[(0.0, 1.0), (-5.0, 5.0)], 3);
        assert_eq!(pts, latin_hypercube(10, &[(0.0, 1.0), (-5.0, 5.0)], 3));
        let mut strata: Vec<usize> = pts.iter().map(|p| (p[0] * 10.0) as usize).collect();
        strata.sort();
        assert_eq!(strata, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_section(&mut |x: f64| (x - 0.3).powi(2) + 1.0, 0.0, 5.0, 1e-6);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-12);
    }
}
