use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use catability::fock::{
    cat_state, coherent_state, default_cutoff, multi_headed_cat, photonic_approximation,
    PhotonicApprox,
};
use catability::loss::{apply_loss, LossSpec};
use catability::{Complex64 as C64, DensityOperator, HilbertConfig, Parity, StateVector};
use clap::Args;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

const MIN_DEFAULT_DIM: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Cat,
    Multihead,
    SqueezedFock,
    Squeezed02,
    Coherent,
    Vacuum,
    Thermal,
    File(PathBuf),
}

impl FromStr for StateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "cat" => StateKind::Cat,
            "multihead" => StateKind::Multihead,
            "squeezed-fock" => StateKind::SqueezedFock,
            "squeezed-02" => StateKind::Squeezed02,
            "coherent" => StateKind::Coherent,
            "vacuum" => StateKind::Vacuum,
            "thermal" => StateKind::Thermal,
            other => match other.strip_prefix("file:") {
                Some(path) if !path.is_empty() => StateKind::File(PathBuf::from(path)),
                _ => {
                    return Err(format!(
                        "unknown state '{other}' (expected cat, multihead, squeezed-fock, \
                         squeezed-02, coherent, vacuum, thermal or file:PATH)"
                    ))
                }
            },
        })
    }
}

/// Parses `1.5`, `0.7i`, `1+0.5i`, `-1.2-0.4i`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("invalid complex number '{s}'");
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(C64::from).map_err(|_| bad());
    };
    let split = body
        .char_indices()
        .skip(1)
        .filter(|&(i, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
        .map(|(i, _)| i)
        .last();
    let (re, im) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    Ok(C64::new(
        re.parse().map_err(|_| bad())?,
        im.parse().map_err(|_| bad())?,
    ))
}

/// Input state and optional loss, shared by the state-driven subcommands.
#[derive(Args, Clone, Debug)]
pub struct StateArgs {
    /// cat, multihead, squeezed-fock, squeezed-02, coherent, vacuum, thermal or file:PATH
    pub state: StateKind,
    /// Coherent amplitude of the state (complex, e.g. `1.5` or `1+0.5i`).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub alpha: Option<C64>,
    /// Parity of a cat state: `+` or `-`.
    #[arg(long, allow_hyphen_values = true)]
    pub sign: Option<Parity>,
    /// Number of heads of a multi-headed cat.
    #[arg(long, default_value_t = 3)]
    pub heads: usize,
    /// Symmetry index of a multi-headed cat.
    #[arg(long, default_value_t = 0)]
    pub sector: usize,
    /// Squeezing in dB (negative for `x`-elongated states), under the dB convention.
    #[arg(long, allow_hyphen_values = true)]
    pub db: Option<f64>,
    /// Squeezing parameter `r` directly.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "db")]
    pub r: Option<f64>,
    /// Weight of `|0>` in the squeezed 0/2 superposition.
    #[arg(long, default_value_t = 0.618)]
    pub omega: f64,
    /// Mean photon number of a thermal state.
    #[arg(long, default_value_t = 1.0)]
    pub nbar: f64,
    /// Amplitude transmissivity of a loss channel applied to the state.
    #[arg(long)]
    pub loss_eta: Option<f64>,
    /// Loss in percent, under the loss convention.
    #[arg(long, conflicts_with = "loss_eta")]
    pub loss: Option<f64>,
}

/// A constructed input state with the parameters that describe it.
pub struct Prepared {
    pub rho: DensityOperator,
    pub alpha: Option<C64>,
    pub parity: Option<Parity>,
    pub multi_head: Option<(usize, usize)>,
    pub eta: f64,
}

impl StateArgs {
    fn require_alpha(&self) -> Result<C64, CliError> {
        self.alpha
            .ok_or_else(|| CliError::validation(format!("state {:?} needs --alpha", self.state)))
    }

    fn squeeze_r(&self, cfg: &RunConfig) -> Result<f64, CliError> {
        match (self.r, self.db) {
            (Some(r), _) => Ok(r),
            (None, Some(db)) => Ok(cfg.squeeze_convention().db_to_r(db)),
            (None, None) => Err(CliError::validation("squeezed states need --db or --r")),
        }
    }

    fn default_dim(&self, cfg: &RunConfig) -> Result<usize, CliError> {
        let by_tail = |q: f64| -> usize {
            if q <= 0.0 {
                0
            } else {
                ((1e-12f64).ln() / q.ln()).ceil() as usize + 20
            }
        };
        let dim = match self.state {
            StateKind::Cat | StateKind::Coherent | StateKind::Multihead => {
                default_cutoff(self.require_alpha()?.norm())
            }
            StateKind::SqueezedFock | StateKind::Squeezed02 => {
                by_tail(self.squeeze_r(cfg)?.abs().tanh())
            }
            StateKind::Thermal => by_tail(self.nbar / (1.0 + self.nbar)),
            StateKind::Vacuum | StateKind::File(_) => 0,
        };
        Ok(dim.max(MIN_DEFAULT_DIM))
    }

    /// Builds the state, applying the requested loss.
    pub fn prepare(&self, cfg: &RunConfig) -> Result<Prepared, CliError> {
        let (rho, alpha, parity, multi_head) = match &self.state {
            StateKind::File(path) => (read_density_file(path, cfg.dim)?, None, None, None),
            _ => {
                let dim = match cfg.dim {
                    Some(d) => d,
                    None => self.default_dim(cfg)?,
                };
                let hc = HilbertConfig::new(dim)?;
                self.pure_state(&hc, cfg)?
            }
        };
        let spec = match (self.loss_eta, self.loss) {
            (Some(eta), _) => LossSpec::new(eta)?,
            (None, Some(pct)) => cfg.loss_convention.spec(pct)?,
            (None, None) => LossSpec::lossless(),
        };
        let rho = if spec.eta < 1.0 {
            apply_loss(&rho, &spec)?
        } else {
            rho
        };
        Ok(Prepared {
            rho,
            alpha,
            parity,
            multi_head,
            eta: spec.eta,
        })
    }

    #[allow(clippy::type_complexity)]
    fn pure_state(
        &self,
        hc: &HilbertConfig,
        cfg: &RunConfig,
    ) -> Result<
        (
            DensityOperator,
            Option<C64>,
            Option<Parity>,
            Option<(usize, usize)>,
        ),
        CliError,
    > {
        let pure = |psi: StateVector| psi.to_density();
        Ok(match self.state {
            StateKind::Cat => {
                let alpha = self.require_alpha()?;
                let parity = self
                    .sign
                    .ok_or_else(|| CliError::validation("cat states need --sign + or -"))?;
                (
                    pure(cat_state(hc, alpha, parity)?),
                    Some(alpha),
                    Some(parity),
                    None,
                )
            }
            StateKind::Multihead => {
                let alpha = self.require_alpha()?;
                let psi = multi_headed_cat(hc, alpha, self.heads, self.sector)?;
                (
                    pure(psi),
                    Some(alpha),
                    None,
                    Some((self.heads, self.sector)),
                )
            }
            StateKind::Coherent => {
                let alpha = self.require_alpha()?;
                (pure(coherent_state(hc, alpha)?), Some(alpha), None, None)
            }
            StateKind::SqueezedFock => {
                let psi =
                    photonic_approximation(hc, PhotonicApprox::SinglePhoton, self.squeeze_r(cfg)?)?;
                (pure(psi), None, Some(Parity::Odd), None)
            }
            StateKind::Squeezed02 => {
                let kind = PhotonicApprox::ZeroTwo { omega: self.omega };
                let psi = photonic_approximation(hc, kind, self.squeeze_r(cfg)?)?;
                (pure(psi), None, Some(Parity::Even), None)
            }
            StateKind::Vacuum => (pure(StateVector::fock(hc, 0)?), None, None, None),
            StateKind::Thermal => (DensityOperator::thermal(hc, self.nbar)?, None, None, None),
            StateKind::File(_) => unreachable!("file states are read separately"),
        })
    }
}

/// Reads a density matrix: first line `dim`, then `row col re im` entries.
/// Missing entries are zero; blank lines and `#` comments are skipped. A
/// larger `pad_to` embeds the matrix in a bigger space.
pub fn read_density_file(
    path: &PathBuf,
    pad_to: Option<usize>,
) -> Result<DensityOperator, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::validation(format!("cannot read state file {}: {e}", path.display()))
    })?;
    let bad = |line: usize, what: &str| {
        CliError::validation(format!("{}:{line}: {what}", path.display()))
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (n0, first) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let dim: usize = first
        .parse()
        .map_err(|_| bad(n0, "expected the dimension"))?;
    let size = match pad_to {
        Some(d) if d < dim => {
            return Err(CliError::validation(format!(
                "--dim {d} is smaller than the file dimension {dim}"
            )))
        }
        Some(d) => d,
        None => dim,
    };
    let mut mat = DMatrix::<C64>::zeros(size, size);
    for (n, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad(n, "expected 'row col re im'"));
        }
        let row: usize = f[0].parse().map_err(|_| bad(n, "bad row"))?;
        let col: usize = f[1].parse().map_err(|_| bad(n, "bad column"))?;
        if row >= dim || col >= dim {
            return Err(bad(n, "index out of range"));
        }
        let re: f64 = f[2].parse().map_err(|_| bad(n, "bad real part"))?;
        let im: f64 = f[3].parse().map_err(|_| bad(n, "bad imaginary part"))?;
        mat[(row, col)] = C64::new(re, im);
    }
    Ok(DensityOperator::new(&HilbertConfig::new(size)?, mat)?)
}

/// Inverse of [`read_density_file`].
#[cfg(test)]
pub fn density_file_text(rho: &DensityOperator) -> String {
    let m = rho.matrix();
    let mut s = format!("{}\n", rho.dim());
    for r in 0..rho.dim() {
        for c in 0..rho.dim() {
            let z = m[(r, c)];
            if z != C64::new(0.0, 0.0) {
                s.push_str(&format!("{r} {c} {:e} {:e}\n", z.re, z.im));
            }
        }
    }
    s
}
