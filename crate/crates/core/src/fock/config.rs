use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation and tolerance settings shared by every Fock-space object.
///
/// The basis is `|0>, |1>, ..., |dim-1>`. `tail_tol` bounds the probability
/// mass a state may carry in the top 10% of the basis before it is treated as
/// under-resolved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HilbertConfig {
    pub dim: usize,
    pub tail_tol: f64,
    pub atol: f64,
}

pub const MIN_DIM: usize = 8;
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
pub const DEFAULT_ATOL: f64 = 1e-10;

impl HilbertConfig {
    pub fn new(dim: usize) -> Result<Self> {
        Self::with_tolerances(dim, DEFAULT_TAIL_TOL, DEFAULT_ATOL)
    }

    pub fn with_tolerances(dim: usize, tail_tol: f64, atol: f64) -> Result<Self> {
        let cfg = Self {
            dim,
            tail_tol,
            atol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default cutoff for states whose coherent amplitudes have modulus
    /// `amplitude`: `max(40, ceil(|a|^2 + 8|a| + 20))`.
    pub fn for_amplitude(amplitude: f64) -> Self {
        Self {
            dim: default_cutoff(amplitude),
            tail_tol: DEFAULT_TAIL_TOL,
            atol: DEFAULT_ATOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < MIN_DIM {
            return Err(Error::InvalidConfig(format!(
                "dim must be at least {MIN_DIM}, got {}",
                self.dim
            )));
        }
        if !(self.tail_tol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::InvalidConfig(
                "tail_tol and atol must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Number of basis states in the interior block `n < 0.8 dim`, where
    /// operator identities are checked free of truncation-edge artifacts.
    pub fn interior(&self) -> usize {
        (4 * self.dim).div_ceil(5)
    }

    /// First index of the top-10% tail block.
    pub fn tail_start(&self) -> usize {
        self.dim - self.dim.div_ceil(10)
    }
}

pub fn default_cutoff(amplitude: f64) -> usize {
    let a = amplitude.abs();
    let rule = (a * a + 8.0 * a + 20.0).ceil() as usize;
    rule.max(40)
}

/// Cutoff precondition for coherent-type constructions: `|a|^2 + 6|a| + 10 <= dim`.
pub(crate) fn check_amplitude_cutoff(dim: usize, amplitude: f64) -> Result<()> {
    let a = amplitude.abs();
    let required = (a * a + 6.0 * a + 10.0).ceil() as usize;
    if required > dim {
        Err(Error::CutoffTooSmall { required, dim })
    } else {
        Ok(())
    }
}

/// Photon-number parity label of a cat state and of the witness branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    #[serde(rename = "+")]
    Even,
    #[serde(rename = "-")]
    Odd,
}

impl Parity {
    pub const BOTH: [Parity; 2] = [Parity::Even, Parity::Odd];

    /// `+1` for even, `-1` for odd.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Parity::Even => "+",
            Parity::Odd => "-",
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "even" | "plus" | "+1" => Ok(Parity::Even),
            "-" | "odd" | "minus" | "-1" => Ok(Parity::Odd),
            other => Err(Error::InvalidArgument(format!("unknown parity '{other}'"))),
        }
    }
}

/// How a squeezing level quoted in dB maps onto the Fock-space parameter `r`
/// of `S(r) = exp[r/2 (a^2 - a†^2)]`.
///
/// `VarianceE2r` reads dB as the quadrature-variance ratio `e^{-2r}` that
/// `S(r)` actually produces. `VarianceE4r` reads it as `e^{-4r}`, the law of
/// the `diag(e^{-2r}, e^{2r})` covariance parametrization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SqueezeConvention {
    #[default]
    VarianceE2r,
    VarianceE4r,
}

impl SqueezeConvention {
    fn exponent(self) -> f64 {
        match self {
            SqueezeConvention::VarianceE2r => 2.0,
            SqueezeConvention::VarianceE4r => 4.0,
        }
    }

    /// Squeeze parameter for a level in dB. Negative dB gives negative `r`,
    /// i.e. a state elongated along `x`, the orientation of real-amplitude cats.
    pub fn db_to_r(self, db: f64) -> f64 {
        db * std::f64::consts::LN_10 / (10.0 * self.exponent())
    }

    /// Inverse of [`db_to_r`](Self::db_to_r).
    pub fn r_to_db(self, r: f64) -> f64 {
        r * 10.0 * self.exponent() / std::f64::consts::LN_10
    }

    pub fn name(self) -> &'static str {
        match self {
            SqueezeConvention::VarianceE2r => "variance-e2r",
            SqueezeConvention::VarianceE4r => "variance-e4r",
        }
    }
}

impl FromStr for SqueezeConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "variance-e2r" | "e2r" => Ok(SqueezeConvention::VarianceE2r),
            "variance-e4r" | "e4r" => Ok(SqueezeConvention::VarianceE4r),
            other => Err(Error::InvalidArgument(format!(
                "unknown dB convention '{other}' (expected e2r or e4r)"
            ))),
        }
    }
}
