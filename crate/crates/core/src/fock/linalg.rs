//! Unitary exponentials of ladder-operator generators.
//!
//! Both generators used here become real symmetric matrices after a diagonal
//! phase change of basis:
//!
//! * `b (a - a†) = i sqrt(2) b p̂` and `p̂ = R x̂ R†` with `R = diag(i^n)`, so a
//!   displacement is diagonalized by the (tridiagonal) position matrix;
//! * `a^2 - a†^2 = U† (-i (a^2 + a†^2)) U` with `U = diag(e^{i pi n / 4})`.
//!
//! The exponential is evaluated in a padded space and cropped, so matrix
//! elements between low-lying number states do not see the truncation edge.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Generator {
    Position,
    QuadraticSum,
}

struct Eigen {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
}

type EigenCache = Mutex<HashMap<(Generator, usize), Arc<Eigen>>>;

fn cache() -> &'static EigenCache {
    static CACHE: OnceLock<EigenCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn eigen(kind: Generator, dim: usize) -> Arc<Eigen> {
    if let Some(e) = cache().lock().unwrap().get(&(kind, dim)) {
        return Arc::clone(e);
    }
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    match kind {
        Generator::Position => {
            for n in 0..dim - 1 {
                let v = ((n + 1) as f64 / 2.0).sqrt();
                m[(n, n + 1)] = v;
                m[(n + 1, n)] = v;
            }
        }
        Generator::QuadraticSum => {
            for n in 0..dim.saturating_sub(2) {
                let v = (((n + 1) * (n + 2)) as f64).sqrt();
                m[(n, n + 2)] = v;
                m[(n + 2, n)] = v;
            }
        }
    }
    let SymmetricEigen {
        eigenvectors,
        eigenvalues,
    } = SymmetricEigen::new(m);
    let e = Arc::new(Eigen {
        vectors: eigenvectors,
        values: eigenvalues,
    });
    cache()
        .lock()
        .unwrap()
        .entry((kind, dim))
        .or_insert_with(|| Arc::clone(&e));
    e
}

/// `[V diag(e^{i t lambda}) V^T]` restricted to the leading `rows x cols` block.
fn phased_block(e: &Eigen, t: f64, rows: usize, cols: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let w = e.values.len();
    let vr = e.vectors.rows(0, rows);
    let vc = e.vectors.rows(0, cols);
    let mut scaled_cos = DMatrix::<f64>::zeros(rows, w);
    let mut scaled_sin = DMatrix::<f64>::zeros(rows, w);
    for k in 0..w {
        let (s, c) = (t * e.values[k]).sin_cos();
        for i in 0..rows {
            let v = vr[(i, k)];
            scaled_cos[(i, k)] = v * c;
            scaled_sin[(i, k)] = v * s;
        }
    }
    let vct = vc.transpose();
    (scaled_cos * &vct, scaled_sin * vct)
}

/// Working dimension for a displacement of modulus `b` that keeps the
/// `dim x dim` block accurate.
pub(crate) fn displacement_work_dim(dim: usize, b: f64) -> usize {
    let reach = ((dim as f64).sqrt() + b.abs() + 7.0).powi(2).ceil() as usize;
    reach.max(dim + 16)
}

/// Working dimension for a squeeze of parameter `r`.
pub(crate) fn squeeze_work_dim(dim: usize, r: f64) -> usize {
    let r = r.abs();
    if r == 0.0 {
        return dim;
    }
    let decay = r.tanh().ln();
    let tail = if decay < 0.0 {
        2 * ((1e-18f64).ln() / decay).ceil() as usize
    } else {
        0
    };
    let spread = (dim as f64 * (2.0 * r).exp()).ceil() as usize;
    (spread + tail + 20).min(4 * dim + 400).max(dim + 8)
}

/// Leading `rows x cols` block of `D(beta) = exp[beta* a - beta a†]` computed
/// in a working space of dimension `work`.
pub(crate) fn displacement_block(beta: C64, rows: usize, cols: usize, work: usize) -> DMatrix<C64> {
    let b = beta.norm();
    let phi = if b > 0.0 { beta.arg() } else { 0.0 };
    let e = eigen(Generator::Position, work);
    let (re, im) = phased_block(&e, std::f64::consts::SQRT_2 * b, rows, cols);
    // D_{mn} = (i e^{i phi})^{m-n} [V e^{i sqrt2 b x} V^T]_{mn}
    let step = C64::from_polar(1.0, phi + std::f64::consts::FRAC_PI_2);
    let phases = phase_powers(step, rows.max(cols));
    DMatrix::from_fn(rows, cols, |m, n| {
        C64::new(re[(m, n)], im[(m, n)]) * phases[m] * phases[n].conj()
    })
}

/// Leading `rows x cols` block of `S(r) = exp[r/2 (a^2 - a†^2)]`.
pub(crate) fn squeeze_block(r: f64, rows: usize, cols: usize, work: usize) -> DMatrix<C64> {
    if r == 0.0 {
        return DMatrix::from_fn(rows, cols, |i, j| {
            if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
    }
    let e = eigen(Generator::QuadraticSum, work);
    let (re, im) = phased_block(&e, -0.5 * r, rows, cols);
    // S_{mn} = e^{i pi (n - m) / 4} [V e^{-i r/2 K} V^T]_{mn}
    let step = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    let phases = phase_powers(step, rows.max(cols));
    DMatrix::from_fn(rows, cols, |m, n| {
        C64::new(re[(m, n)], im[(m, n)]) * phases[n] * phases[m].conj()
    })
}

fn phase_powers(step: C64, len: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(len);
    let arg = step.arg();
    for n in 0..len {
        out.push(C64::from_polar(1.0, arg * n as f64));
    }
    out
}
