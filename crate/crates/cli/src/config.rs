use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use catability::fock::SqueezeConvention;
use catability::gaussian::TABLE_DIR_ENV;
use catability::loss::LossSpec;
use clap::{Args, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum LossConvention {
    /// `x%` loss removes `x%` of the mean photon number: `eta = sqrt(1 - x/100)`.
    Energy,
    /// `x%` loss scales the amplitude by `1 - x/100`.
    Amplitude,
}

impl LossConvention {
    pub fn spec(self, pct: f64) -> catability::Result<LossSpec> {
        match self {
            LossConvention::Energy => LossSpec::from_energy_loss_pct(pct),
            LossConvention::Amplitude => LossSpec::from_amplitude_loss_pct(pct),
        }
    }

    /// Loss percentage corresponding to the amplitude transmissivity `eta`.
    pub fn pct(self, eta: f64) -> f64 {
        match self {
            LossConvention::Energy => 100.0 * (1.0 - eta * eta),
            LossConvention::Amplitude => 100.0 * (1.0 - eta),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossConvention::Energy => "energy",
            LossConvention::Amplitude => "amplitude",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DbConvention {
    E2r,
    E4r,
}

impl From<DbConvention> for SqueezeConvention {
    fn from(c: DbConvention) -> Self {
        match c {
            DbConvention::E2r => SqueezeConvention::VarianceE2r,
            DbConvention::E4r => SqueezeConvention::VarianceE4r,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Options shared by every subcommand. Each may also come from the config file.
#[derive(Args, Clone, Debug, Default)]
pub struct GlobalArgs {
    /// Flat `key = value` configuration file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Fock cutoff; defaults depend on the state.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Directory holding precomputed benchmark tables.
    #[arg(long, global = true, env = TABLE_DIR_ENV)]
    pub table_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub db_convention: Option<DbConvention>,
    #[arg(long, global = true, value_enum)]
    pub loss_convention: Option<LossConvention>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Amplitude grid: `a,b,c` or `start:stop:count`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha_grid: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma_grid: Option<String>,
    /// Transmissivity grid for loss sweeps.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eta_grid: Option<String>,
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub dim: Option<usize>,
    pub table_dir: Option<PathBuf>,
    pub db_convention: DbConvention,
    pub loss_convention: LossConvention,
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub seed: u64,
    pub format: Format,
    pub alpha_grid: Option<Vec<f64>>,
    pub gamma_grid: Option<Vec<f64>>,
    pub eta_grid: Option<Vec<f64>>,
}

impl RunConfig {
    /// Merges flags over the config file and checks paths and grids.
    /// `creates_tables` allows a table directory that does not exist yet.
    pub fn resolve(args: &GlobalArgs, creates_tables: bool) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => read_config_file(path)?,
            None => BTreeMap::new(),
        };
        let get = |key: &str| file.get(key).map(String::as_str);

        let dim = match (args.dim, get("dim")) {
            (Some(d), _) => Some(d),
            (None, Some(s)) => Some(parse_value("dim", s)?),
            (None, None) => None,
        };
        let table_dir = args
            .table_dir
            .clone()
            .or_else(|| get("table_dir").map(PathBuf::from));
        let db_convention = match (args.db_convention, get("db_convention")) {
            (Some(c), _) => c,
            (None, Some(s)) => parse_enum("db_convention", s)?,
            (None, None) => DbConvention::E2r,
        };
        let loss_convention = match (args.loss_convention, get("loss_convention")) {
            (Some(c), _) => c,
            (None, Some(s)) => parse_enum("loss_convention", s)?,
            (None, None) => LossConvention::Energy,
        };
        let format = match (args.format, get("format")) {
            (Some(f), _) => f,
            (None, Some(s)) => parse_enum("format", s)?,
            (None, None) => Format::Csv,
        };
        let out_dir = args
            .out_dir
            .clone()
            .or_else(|| get("out_dir").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let seed = match (args.seed, get("seed")) {
            (Some(s), _) => s,
            (None, Some(s)) => parse_value("seed", s)?,
            (None, None) => 0,
        };
        let grid = |flag: &Option<String>, key: &str| -> Result<Option<Vec<f64>>, CliError> {
            flag.as_deref()
                .or_else(|| get(key))
                .map(|s| parse_grid(key, s))
                .transpose()
        };
        let cfg = Self {
            dim,
            table_dir,
            db_convention,
            loss_convention,
            out_dir,
            seed,
            format,
            alpha_grid: grid(&args.alpha_grid, "alpha_grid")?,
            gamma_grid: grid(&args.gamma_grid, "gamma_grid")?,
            eta_grid: grid(&args.eta_grid, "eta_grid")?,
        };
        cfg.check_paths(creates_tables)?;
        Ok(cfg)
    }

    fn check_paths(&self, creates_tables: bool) -> Result<(), CliError> {
        if let Some(dir) = &self.table_dir {
            if !creates_tables && !dir.is_dir() {
                return Err(CliError::validation(format!(
                    "table directory {} does not exist",
                    dir.display()
                )));
            }
        }
        fs::create_dir_all(&self.out_dir).map_err(|e| {
            CliError::validation(format!(
                "cannot create output directory {}: {e}",
                self.out_dir.display()
            ))
        })?;
        Ok(())
    }

    pub fn squeeze_convention(&self) -> SqueezeConvention {
        self.db_convention.into()
    }

    /// Short SHA-256 digest of the configuration, excluding the output directory.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }
}

fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::validation(format!("cannot read config file {}: {e}", path.display()))
    })?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::validation(format!("config line {} is not key = value", i + 1))
        })?;
        let key = key.trim().replace('-', "_");
        const KEYS: [&str; 10] = [
            "dim",
            "table_dir",
            "db_convention",
            "loss_convention",
            "out_dir",
            "seed",
            "format",
            "alpha_grid",
            "gamma_grid",
            "eta_grid",
        ];
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::validation(format!("unknown config key '{key}'")));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn parse_value<T: std::str::FromStr>(key: &str, s: &str) -> Result<T, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::validation(format!("invalid value '{s}' for {key}")))
}

fn parse_enum<T: ValueEnum>(key: &str, s: &str) -> Result<T, CliError> {
    T::from_str(s.trim(), true)
        .map_err(|_| CliError::validation(format!("invalid value '{s}' for {key}")))
}

/// `a,b,c` or `start:stop:count` (inclusive, evenly spaced). The result must
/// be non-empty and strictly increasing.
pub fn parse_grid(name: &str, s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::validation(format!("invalid {name} '{s}'"));
    let values: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(CliError::validation(format!("{name} is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::validation(format!(
            "{name} must be finite and strictly increasing"
        )));
    }
    Ok(values)
}
