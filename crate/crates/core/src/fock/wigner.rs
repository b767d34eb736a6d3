use num_complex::Complex64 as C64;

use super::state::DensityOperator;
use crate::error::{Error, Result};

/// Wigner function `W(x, p)` with `x = (a + a†)/sqrt 2`, normalized so that
/// `pi W(0, 0) = <Π>`.
///
/// Equals `(1/pi) Tr[D(beta) rho D†(beta) Π]` at `beta = (x + ip)/sqrt 2` under
/// the `exp[beta* a - beta a†]` displacement. The sum over `|m><n|` Wigner
/// kernels uses the three-term Laguerre recurrence, so no displaced matrices
/// are formed and the result carries no truncation error beyond that of `rho`.
pub fn wigner_point(rho: &DensityOperator, x: f64, p: f64) -> Result<f64> {
    let dim = rho.dim();
    let limit = (2.0 * dim as f64).sqrt();
    if !(x.abs() <= limit && p.abs() <= limit) {
        return Err(Error::OutOfResolvedRegion { x, p });
    }
    Ok(wigner_unchecked(rho, x, p))
}

/// Wigner function over the row-major grid `xs x ps`; entry `[i][j]` is at
/// `(xs[j], ps[i])`.
pub fn wigner_grid(rho: &DensityOperator, xs: &[f64], ps: &[f64]) -> Result<Vec<Vec<f64>>> {
    ps.iter()
        .map(|&p| xs.iter().map(|&x| wigner_point(rho, x, p)).collect())
        .collect()
}

fn wigner_unchecked(rho: &DensityOperator, x: f64, p: f64) -> f64 {
    let m = rho.matrix();
    let dim = rho.dim();
    let a = C64::new(x, p) / std::f64::consts::SQRT_2;
    let two_a = a * 2.0;
    let two_ac = a.conj() * 2.0;
    let mut kernels = vec![C64::new(0.0, 0.0); dim];
    kernels[0] = C64::from((-2.0 * a.norm_sqr()).exp() / std::f64::consts::PI);
    let mut w = m[(0, 0)].re * kernels[0].re;
    for n in 1..dim {
        kernels[n] = two_a * kernels[n - 1] / (n as f64).sqrt();
        w += 2.0 * (m[(0, n)] * kernels[n]).re;
    }
    for row in 1..dim {
        let sr = (row as f64).sqrt();
        let mut temp = kernels[row];
        kernels[row] = (two_ac * temp - kernels[row - 1] * sr) / sr;
        w += (m[(row, row)] * kernels[row]).re;
        for n in row + 1..dim {
            let next = (two_a * kernels[n - 1] - temp * sr) / (n as f64).sqrt();
            temp = kernels[n];
            kernels[n] = next;
            w += 2.0 * (m[(row, n)] * kernels[n]).re;
        }
    }
    w
}
