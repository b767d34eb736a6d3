use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::search::{CatFamily, DirectBenchmark, Extremum, GaussianBenchmark};
use crate::error::{Error, Result};
use crate::fock::{Parity, SqueezeConvention};

const FORMAT: &str = "catability-benchmark-table";
const VERSION: u32 = 2;

/// Mean amplitude above which an optimal Gaussian counts as displaced.
const BASIN_TOL: f64 = 1e-2;

/// Environment variable naming a directory for cached benchmark tables.
pub const TABLE_DIR_ENV: &str = "CATABILITY_TABLE_DIR";

/// `start + step * i` for `i < n`. Grids built this way are bit-identical
/// wherever they are rebuilt, which is what lets table nodes seed the memo.
pub fn uniform_grid(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| start + step * i as f64).collect()
}

pub fn default_alpha_grid() -> Vec<f64> {
    uniform_grid(0.05, 0.05, 80)
}

pub fn default_gamma_grid() -> Vec<f64> {
    uniform_grid(0.0, 0.1, 51)
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::GridMismatch(format!(
            "{name} grid needs at least two nodes"
        )));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::GridMismatch(format!(
            "{name} grid must be strictly increasing"
        )));
    }
    Ok(())
}

/// Precomputed two-headed Gaussian floors on an `(alpha, gamma)` grid plus
/// fidelity ceilings on the `alpha` grid, for one parity.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkTable {
    pub alpha_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub parity: Parity,
    pub convention: SqueezeConvention,
    /// Row-major, `floors[i * gamma_grid.len() + j]` at `(alpha_i, gamma_j)`.
    pub floors: Vec<f64>,
    /// Whether each floor is attained by a displaced (rather than centered)
    /// Gaussian. The floor has a kink where this changes.
    pub floor_displaced: Vec<bool>,
    pub ceilings: Vec<f64>,
    pub ceiling_displaced: Vec<bool>,
    pub all_converged: bool,
}

/// Bracketing index and weight for linear interpolation.
fn locate(grid: &[f64], x: f64) -> Option<(usize, f64)> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if !(x >= lo && x <= hi) {
        return None;
    }
    let k = grid.partition_point(|&g| g <= x).clamp(1, grid.len() - 1) - 1;
    let t = (x - grid[k]) / (grid[k + 1] - grid[k]);
    Some((k, t))
}

/// Four-point Lagrange weights around `x` (fewer on short grids). The stencil
/// is shifted inward at the ends; at a node the weights are exactly one and zero.
fn stencil(grid: &[f64], x: f64) -> Option<Vec<(usize, f64)>> {
    let (k, _) = locate(grid, x)?;
    let width = grid.len().min(4);
    let first = k.saturating_sub(1).min(grid.len() - width);
    let nodes: Vec<usize> = (first..first + width).collect();
    Some(
        nodes
            .iter()
            .map(|&i| {
                let w = nodes
                    .iter()
                    .filter(|&&j| j != i)
                    .map(|&j| (x - grid[j]) / (grid[i] - grid[j]))
                    .product();
                (i, w)
            })
            .collect(),
    )
}

impl BenchmarkTable {
    /// Builds the table with `bench`, in parallel over nodes. Every node value
    /// is also left in `bench`'s memo.
    pub fn build(
        alpha_grid: Vec<f64>,
        gamma_grid: Vec<f64>,
        parity: Parity,
        convention: SqueezeConvention,
        bench: &DirectBenchmark,
    ) -> Result<Self> {
        check_grid("alpha", &alpha_grid)?;
        check_grid("gamma", &gamma_grid)?;
        let family = CatFamily::TwoHead(parity);
        let nodes: Vec<(f64, f64)> = alpha_grid
            .iter()
            .flat_map(|&a| gamma_grid.iter().map(move |&g| (a, g)))
            .collect();
        let floors: Vec<Extremum> = nodes
            .par_iter()
            .map(|&(a, g)| bench.floor(family, a, g))
            .collect::<Result<_>>()?;
        let ceilings: Vec<Extremum> = alpha_grid
            .par_iter()
            .map(|&a| bench.fidelity_ceiling(family, a))
            .collect::<Result<_>>()?;
        let all_converged = floors.iter().chain(&ceilings).all(|e| e.converged);
        Ok(Self {
            alpha_grid,
            gamma_grid,
            parity,
            convention,
            floors: floors.iter().map(|e| e.value).collect(),
            floor_displaced: floors.iter().map(displaced).collect(),
            ceilings: ceilings.iter().map(|e| e.value).collect(),
            ceiling_displaced: ceilings.iter().map(displaced).collect(),
            all_converged,
        })
    }

    pub fn family(&self) -> CatFamily {
        CatFamily::TwoHead(self.parity)
    }

    pub fn node_floor(&self, i: usize, j: usize) -> f64 {
        self.floors[i * self.gamma_grid.len() + j]
    }

    pub fn contains(&self, alpha: f64, gamma: f64) -> bool {
        locate(&self.alpha_grid, alpha.abs()).is_some() && locate(&self.gamma_grid, gamma).is_some()
    }

    /// True when every node of the interpolation stencil around `(alpha, gamma)`
    /// lies in the same basin, so the floor is smooth there.
    pub fn floor_smooth_at(&self, alpha: f64, gamma: f64) -> bool {
        let (Some(sa), Some(sg)) = (
            stencil(&self.alpha_grid, alpha.abs()),
            stencil(&self.gamma_grid, gamma),
        ) else {
            return false;
        };
        let n = self.gamma_grid.len();
        let mut tags = sa
            .iter()
            .flat_map(|&(i, _)| sg.iter().map(move |&(j, _)| i * n + j))
            .map(|k| self.floor_displaced[k]);
        let first = tags.next();
        tags.all(|t| Some(t) == first)
    }

    pub fn ceiling_smooth_at(&self, alpha: f64) -> bool {
        let Some(sa) = stencil(&self.alpha_grid, alpha.abs()) else {
            return false;
        };
        let first = self.ceiling_displaced[sa[0].0];
        sa.iter().all(|&(i, _)| self.ceiling_displaced[i] == first)
    }

    /// Tensor-product cubic interpolation of the floor.
    pub fn floor_at(&self, alpha: f64, gamma: f64) -> Result<f64> {
        let sa = stencil(&self.alpha_grid, alpha.abs())
            .ok_or_else(|| Error::GridMismatch(format!("alpha {alpha} outside the table grid")))?;
        let sg = stencil(&self.gamma_grid, gamma)
            .ok_or_else(|| Error::GridMismatch(format!("gamma {gamma} outside the table grid")))?;
        Ok(sa
            .iter()
            .map(|&(i, wa)| {
                wa * sg
                    .iter()
                    .map(|&(j, wg)| wg * self.node_floor(i, j))
                    .sum::<f64>()
            })
            .sum())
    }

    /// Cubic interpolation of the fidelity ceiling.
    pub fn ceiling_at(&self, alpha: f64) -> Result<f64> {
        let sa = stencil(&self.alpha_grid, alpha.abs())
            .ok_or_else(|| Error::GridMismatch(format!("alpha {alpha} outside the table grid")))?;
        Ok(sa.iter().map(|&(i, w)| w * self.ceilings[i]).sum())
    }

    /// Copies node values into `bench`'s memo so direct queries at grid nodes
    /// return the tabulated numbers.
    pub fn preload(&self, bench: &DirectBenchmark) {
        let family = self.family();
        for (i, &a) in self.alpha_grid.iter().enumerate() {
            for (j, &g) in self.gamma_grid.iter().enumerate() {
                bench.preload_floor(family, a, g, tabulated(self.node_floor(i, j)));
            }
            bench.preload_ceiling(family, a, tabulated(self.ceilings[i]));
        }
    }

    fn body(&self) -> String {
        let mut s = String::new();
        for (i, a) in self.alpha_grid.iter().enumerate() {
            let row: Vec<String> = (0..self.gamma_grid.len())
                .map(|j| self.node_floor(i, j).to_string())
                .collect();
            let _ = writeln!(s, "floor {a} {}", row.join(" "));
            let tags: Vec<&str> = (0..self.gamma_grid.len())
                .map(|j| tag(self.floor_displaced[i * self.gamma_grid.len() + j]))
                .collect();
            let _ = writeln!(s, "basin {a} {}", tags.join(" "));
        }
        for (i, (a, c)) in self.alpha_grid.iter().zip(&self.ceilings).enumerate() {
            let _ = writeln!(s, "ceiling {a} {c} {}", tag(self.ceiling_displaced[i]));
        }
        s
    }

    fn header(&self, checksum: &str) -> String {
        let join = |g: &[f64]| g.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        format!(
            "{FORMAT} {VERSION}\nsign {}\ndb_convention {}\nconverged {}\nalpha_grid {}\ngamma_grid {}\nchecksum {checksum}\n",
            self.parity,
            self.convention.name(),
            self.all_converged,
            join(&self.alpha_grid),
            join(&self.gamma_grid),
        )
    }

    pub fn to_text(&self) -> String {
        let body = self.body();
        let checksum = hex(&Sha256::digest(body.as_bytes()));
        format!("{}{body}", self.header(&checksum))
    }

    /// Writes the table atomically (temporary file, then rename).
    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let corrupt = |m: &str| Error::CorruptTableFile(m.to_string());
        let mut lines = text.lines();
        let mut field = |name: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| corrupt("truncated header"))?;
            line.strip_prefix(name)
                .map(|rest| rest.trim().to_string())
                .ok_or_else(|| corrupt(&format!("expected '{name}' line")))
        };
        let magic = field(FORMAT)?;
        if magic != VERSION.to_string() {
            return Err(corrupt(&format!("unsupported version {magic}")));
        }
        let parity: Parity = field("sign")?.parse().map_err(|_| corrupt("bad sign"))?;
        let convention: SqueezeConvention = field("db_convention")?
            .parse()
            .map_err(|_| corrupt("bad convention"))?;
        let all_converged: bool = field("converged")?
            .parse()
            .map_err(|_| corrupt("bad flag"))?;
        let alpha_grid =
            parse_floats(&field("alpha_grid")?).ok_or_else(|| corrupt("bad alpha grid"))?;
        let gamma_grid =
            parse_floats(&field("gamma_grid")?).ok_or_else(|| corrupt("bad gamma grid"))?;
        let checksum = field("checksum")?;

        let header_len: usize = text.lines().take(7).map(|l| l.len() + 1).sum();
        let body = text
            .get(header_len..)
            .ok_or_else(|| corrupt("missing body"))?;
        if hex(&Sha256::digest(body.as_bytes())) != checksum {
            return Err(corrupt("checksum mismatch"));
        }
        check_grid("alpha", &alpha_grid).map_err(|_| corrupt("alpha grid not increasing"))?;
        check_grid("gamma", &gamma_grid).map_err(|_| corrupt("gamma grid not increasing"))?;

        let mut floors = Vec::with_capacity(alpha_grid.len() * gamma_grid.len());
        let mut floor_displaced = Vec::with_capacity(floors.capacity());
        let mut ceilings = Vec::with_capacity(alpha_grid.len());
        let mut ceiling_displaced = Vec::with_capacity(alpha_grid.len());
        for line in body.lines() {
            let mut parts = line.split_whitespace();
            let tag = parts.next();
            let values = parse_floats(&parts.collect::<Vec<_>>().join(" "))
                .ok_or_else(|| corrupt("bad number in body"))?;
            match tag {
                Some("floor") if values.len() == gamma_grid.len() + 1 => {
                    floors.extend_from_slice(&values[1..])
                }
                Some("basin") if values.len() == gamma_grid.len() + 1 => {
                    for &v in &values[1..] {
                        floor_displaced.push(untag(v).ok_or_else(|| corrupt("bad basin tag"))?);
                    }
                }
                Some("ceiling") if values.len() == 3 => {
                    ceilings.push(values[1]);
                    ceiling_displaced
                        .push(untag(values[2]).ok_or_else(|| corrupt("bad basin tag"))?);
                }
                _ => return Err(corrupt("malformed body line")),
            }
        }
        if floors.len() != alpha_grid.len() * gamma_grid.len()
            || floor_displaced.len() != floors.len()
            || ceilings.len() != alpha_grid.len()
        {
            return Err(corrupt("body size does not match grids"));
        }
        Ok(Self {
            alpha_grid,
            gamma_grid,
            parity,
            convention,
            floors,
            floor_displaced,
            ceilings,
            ceiling_displaced,
            all_converged,
        })
    }

    /// Plain CSV view: one row per `(alpha, gamma)` node.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("sign,alpha,gamma,floor,fidelity_ceiling\n");
        for (i, a) in self.alpha_grid.iter().enumerate() {
            for (j, g) in self.gamma_grid.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{a},{g},{},{}",
                    self.parity,
                    self.node_floor(i, j),
                    self.ceilings[i]
                );
            }
        }
        s
    }

    /// Checks that this table was built on the given grids.
    pub fn ensure_grids(&self, alpha_grid: &[f64], gamma_grid: &[f64]) -> Result<()> {
        if self.alpha_grid != alpha_grid || self.gamma_grid != gamma_grid {
            return Err(Error::GridMismatch(
                "table grids differ from the requested grids".into(),
            ));
        }
        Ok(())
    }
}

fn tabulated(value: f64) -> Extremum {
    Extremum {
        value,
        params: super::params::GaussianParams::VACUUM,
        converged: true,
        evaluations: 0,
    }
}

fn displaced(e: &Extremum) -> bool {
    e.params.mean_amplitude().norm() > BASIN_TOL
}

fn tag(displaced: bool) -> &'static str {
    if displaced {
        "1"
    } else {
        "0"
    }
}

fn untag(v: f64) -> Option<bool> {
    match v {
        0.0 => Some(false),
        1.0 => Some(true),
        _ => None,
    }
}

fn parse_floats(s: &str) -> Option<Vec<f64>> {
    s.split_whitespace().map(|t| t.parse().ok()).collect()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("table"),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Conventional file name of the table for `parity` inside a table directory.
pub fn table_path(dir: &Path, parity: Parity) -> PathBuf {
    let tag = match parity {
        Parity::Even => "even",
        Parity::Odd => "odd",
    };
    dir.join(format!("gaussian_table_{tag}.txt"))
}

/// Benchmark that serves two-headed floors and ceilings from tables when the
/// query lies inside their grids on a smooth patch, and falls back to direct
/// optimization otherwise (off-grid `|alpha|`, basin switch within the stencil,
/// N-headed targets, missing parity).
pub struct TableBenchmark {
    tables: Vec<BenchmarkTable>,
    fallback: DirectBenchmark,
}

impl TableBenchmark {
    pub fn new(tables: Vec<BenchmarkTable>, fallback: DirectBenchmark) -> Self {
        Self { tables, fallback }
    }

    /// Loads whichever of the two parity tables exist in `dir`.
    pub fn from_dir(dir: &Path, fallback: DirectBenchmark) -> Result<Self> {
        let mut tables = Vec::new();
        for p in Parity::BOTH {
            let path = table_path(dir, p);
            if path.exists() {
                tables.push(BenchmarkTable::load(&path)?);
            }
        }
        Ok(Self::new(tables, fallback))
    }

    pub fn tables(&self) -> &[BenchmarkTable] {
        &self.tables
    }

    fn table_for(&self, family: CatFamily) -> Option<&BenchmarkTable> {
        self.tables.iter().find(|t| t.family() == family)
    }
}

impl GaussianBenchmark for TableBenchmark {
    fn floor(&self, family: CatFamily, alpha: f64, gamma: f64) -> Result<Extremum> {
        match self.table_for(family) {
            Some(t) if t.floor_smooth_at(alpha, gamma) => Ok(tabulated(t.floor_at(alpha, gamma)?)),
            _ => self.fallback.floor(family, alpha, gamma),
        }
    }

    fn fidelity_ceiling(&self, family: CatFamily, alpha: f64) -> Result<Extremum> {
        match self.table_for(family) {
            Some(t) if t.ceiling_smooth_at(alpha) => Ok(tabulated(t.ceiling_at(alpha)?)),
            _ => self.fallback.fidelity_ceiling(family, alpha),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_table() -> (BenchmarkTable, DirectBenchmark) {
        let bench = DirectBenchmark::default();
        let t = BenchmarkTable::build(
            uniform_grid(1.0, 0.25, 3),
            uniform_grid(0.0, 0.5, 3),
            Parity::Odd,
            SqueezeConvention::default(),
            &bench,
        )
        .unwrap();
        (t, bench)
    }

    #[test]
    fn round_trip_is_bitwise() {
        let (t, _) = small_table();
        let dir = tempfile::tempdir().unwrap();
        let path = table_path(dir.path(), Parity::Odd);
        t.save(&path).unwrap();
        let back = BenchmarkTable::load(&path).unwrap();
        assert_eq!(back, t);
        for (x, y) in back.floors.iter().zip(&t.floors) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn tampering_is_detected() {
        let (t, _) = small_table();
        let text = t.to_text().replacen("ceiling 1 ", "ceiling 1 1", 1);
        assert!(matches!(
            BenchmarkTable::from_text(&text),
            Err(Error::CorruptTableFile(_))
        ));
    }

    #[test]
    fn nodes_match_direct_and_interpolate_between() {
        let (t, bench) = small_table();
        let direct = bench.floor(t.family(), 1.25, 0.5).unwrap().value;
        assert_eq!(t.floor_at(1.25, 0.5).unwrap(), direct);
        let mid = t.floor_at(1.125, 0.25).unwrap();
        let exact = bench.floor(t.family(), 1.125, 0.25).unwrap().value;
        assert!((mid - exact).abs() < 0.02 * exact, "{mid} vs {exact}");
        assert!(t.floor_at(3.0, 0.1).is_err());
    }

    #[test]
    fn stencil_reproduces_cubics() {
        let grid = uniform_grid(0.0, 0.5, 7);
        let f = |x: f64| 2.0 * x * x * x - x + 0.5;
        for x in [0.1, 0.7, 1.6, 2.9, 3.0] {
            let s = stencil(&grid, x).unwrap();
            let v: f64 = s.iter().map(|&(i, w)| w * f(grid[i])).sum();
            assert!((v - f(x)).abs() < 1e-12, "{x}");
        }
        let at_node = stencil(&grid, 1.5).unwrap();
        assert!(at_node
            .iter()
            .all(|&(i, w)| if i == 3 { w == 1.0 } else { w == 0.0 }));
        assert!(stencil(&grid, 3.1).is_none());
    }

    #[test]
    fn basin_switch_falls_back_to_direct() {
        let bench = DirectBenchmark::default();
        let t = BenchmarkTable::build(
            uniform_grid(1.3, 0.05, 4),
            vec![1.5, 1.55, 1.6],
            Parity::Even,
            SqueezeConvention::default(),
            &bench,
        )
        .unwrap();
        assert!(!t.floor_displaced[0]);
        assert!(t.floor_displaced[t.floor_displaced.len() - 1]);
        assert!(!t.floor_smooth_at(1.37, 1.55));
        let back = BenchmarkTable::from_text(&t.to_text()).unwrap();
        assert_eq!(back.floor_displaced, t.floor_displaced);
        let family = t.family();
        let tb = TableBenchmark::new(vec![t], DirectBenchmark::default());
        let served = tb.floor(family, 1.37, 1.55).unwrap().value;
        let direct = bench.floor(family, 1.37, 1.55).unwrap().value;
        assert_eq!(served, direct);
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let (t, _) = small_table();
        assert_eq!(t.to_csv().lines().count(), 1 + 9);
    }

    #[test]
    fn bad_grid_rejected() {
        let bench = DirectBenchmark::default();
        let r = BenchmarkTable::build(
            vec![1.0, 0.5],
            vec![0.0, 1.0],
            Parity::Odd,
            SqueezeConvention::default(),
            &bench,
        );
        assert!(matches!(r, Err(Error::GridMismatch(_))));
    }
}
