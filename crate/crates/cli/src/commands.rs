use std::path::{Path, PathBuf};

use catability::approx::{single_photon_optimum, zero_two_optimum, ApproxOptimum};
use catability::fock::{cat_state, multi_headed_cat, wigner_grid, SqueezeConvention};
use catability::gaussian::{
    default_alpha_grid, default_gamma_grid, table_path, BenchmarkTable, CatFamily, DirectBenchmark,
    GaussianBenchmark, TableBenchmark,
};
use catability::loss::{apply_loss, LossSpec};
use catability::measurement::{full_protocol, run_ensemble, ProtocolOptions};
use catability::metrics::{
    catability, global_catability, global_normalized_infidelity, multi_head_catability,
    multi_head_infidelity, normalized_infidelity, AlphaSearch, GammaSearch, GlobalResult,
    MetricResult,
};
use catability::witness::{operator_spectrum, WitnessParams};
use catability::{Complex64 as C64, DensityOperator, HilbertConfig, Parity};
use clap::{Args, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{parse_grid, RunConfig};
use crate::error::CliError;
use crate::output::{num, opt, text, Table, Writer};
use crate::state::{parse_complex, Prepared, StateArgs};

/// Outcome of a command: whether every numerical search converged.
pub struct Outcome {
    pub converged: bool,
    pub written: Vec<PathBuf>,
}

fn done(w: Writer, converged: bool) -> Outcome {
    Outcome {
        converged,
        written: w.written,
    }
}

fn benchmark(cfg: &RunConfig) -> Result<Box<dyn GaussianBenchmark>, CliError> {
    Ok(match &cfg.table_dir {
        Some(dir) => Box::new(TableBenchmark::from_dir(dir, DirectBenchmark::default())?),
        None => Box::new(DirectBenchmark::default()),
    })
}

fn alpha_search(cfg: &RunConfig) -> Result<AlphaSearch, CliError> {
    match &cfg.alpha_grid {
        None => Ok(AlphaSearch::default()),
        Some(g) => {
            if g.len() < 2 || g[0] <= 0.0 {
                return Err(CliError::validation(
                    "the alpha grid of a global search needs two or more positive nodes",
                ));
            }
            let step = g[1] - g[0];
            if g.windows(2)
                .any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.max(1.0))
            {
                return Err(CliError::validation(
                    "the alpha grid of a global search must be evenly spaced",
                ));
            }
            Ok(AlphaSearch {
                start: g[0],
                step,
                points: g.len(),
                ..AlphaSearch::default()
            })
        }
    }
}

fn gamma_search(cfg: &RunConfig) -> Result<GammaSearch, CliError> {
    match &cfg.gamma_grid {
        None => Ok(GammaSearch::default()),
        Some(g) => {
            let s = GammaSearch {
                lo: g[0],
                hi: g[g.len() - 1],
                points: g.len(),
                ..GammaSearch::default()
            };
            s.validate()?;
            Ok(s)
        }
    }
}

fn sign_of(p: Option<Parity>) -> Value {
    p.map_or(Value::Null, text)
}

fn smaller(a: MetricResult, b: MetricResult) -> MetricResult {
    if b.value < a.value {
        b
    } else {
        a
    }
}

// ---------------------------------------------------------------- catability

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Xi,
    Zeta,
    Both,
}

#[derive(Args, Debug)]
pub struct CatabilityArgs {
    #[command(flatten)]
    pub state: StateArgs,
    /// Target amplitude of the metric; defaults to the state's amplitude.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub target_alpha: Option<C64>,
    /// Minimize over amplitude and parity even when an amplitude is known.
    #[arg(long)]
    pub global: bool,
    #[arg(long, value_enum, default_value_t = Metric::Both)]
    pub metric: Metric,
}

#[derive(Serialize)]
struct MetricReport {
    value: f64,
    sign: Option<Parity>,
    global: bool,
    result: MetricResult,
    trace: Vec<catability::metrics::TracePoint>,
}

impl MetricReport {
    fn fixed(result: MetricResult) -> Self {
        Self {
            value: result.value,
            sign: result.parity(),
            global: false,
            result,
            trace: Vec::new(),
        }
    }

    fn global(g: GlobalResult) -> Self {
        Self {
            value: g.best.value,
            sign: g.best.parity(),
            global: true,
            result: g.best,
            trace: g.trace,
        }
    }
}

/// Fixed-amplitude metrics for `state`, over one parity or the better of both.
fn fixed_metrics(
    state: &Prepared,
    alpha: C64,
    parity: Option<Parity>,
    want: (bool, bool),
    search: &GammaSearch,
    bench: &dyn GaussianBenchmark,
) -> Result<(Option<MetricResult>, Option<MetricResult>), CliError> {
    if let Some((heads, sector)) = state.multi_head {
        let xi = want
            .0
            .then(|| multi_head_catability(&state.rho, alpha, heads, sector, search, bench))
            .transpose()?;
        let zeta = want
            .1
            .then(|| multi_head_infidelity(&state.rho, alpha, heads, sector, bench))
            .transpose()?;
        return Ok((xi, zeta));
    }
    let parities: Vec<Parity> = match parity {
        Some(p) => vec![p],
        None => Parity::BOTH.to_vec(),
    };
    let mut xi: Option<MetricResult> = None;
    let mut zeta: Option<MetricResult> = None;
    for p in parities {
        if want.0 {
            let r = catability(&state.rho, alpha, p, search, bench)?;
            xi = Some(xi.map_or(r, |x| smaller(x, r)));
        }
        if want.1 {
            let r = normalized_infidelity(&state.rho, alpha, p, bench)?;
            zeta = Some(zeta.map_or(r, |z| smaller(z, r)));
        }
    }
    Ok((xi, zeta))
}

pub fn cmd_catability(cfg: &RunConfig, args: &CatabilityArgs) -> Result<Outcome, CliError> {
    let state = args.state.prepare(cfg)?;
    let bench = benchmark(cfg)?;
    let gsearch = gamma_search(cfg)?;
    let want = (args.metric != Metric::Zeta, args.metric != Metric::Xi);
    let target = args.target_alpha.or(state.alpha);
    let mut reports: Vec<(&str, MetricReport)> = Vec::new();
    match target {
        Some(alpha) if !args.global => {
            let parity = args.state.sign.or(state.parity);
            let (xi, zeta) = fixed_metrics(&state, alpha, parity, want, &gsearch, bench.as_ref())?;
            reports.extend(xi.map(|r| ("xi", MetricReport::fixed(r))));
            reports.extend(zeta.map(|r| ("zeta", MetricReport::fixed(r))));
        }
        _ => {
            if state.multi_head.is_some() {
                return Err(CliError::validation(
                    "the global search covers two-headed cats; give --alpha for N-headed states",
                ));
            }
            let asearch = alpha_search(cfg)?;
            if want.0 {
                let g = global_catability(&state.rho, &asearch, &gsearch, bench.as_ref())?;
                reports.push(("xi", MetricReport::global(g)));
            }
            if want.1 {
                let g = global_normalized_infidelity(&state.rho, &asearch, bench.as_ref())?;
                reports.push(("zeta", MetricReport::global(g)));
            }
        }
    }
    let converged = reports.iter().all(|(_, r)| r.result.converged);
    let mut w = Writer::new(cfg, "catability");
    let mut doc: serde_json::Map<String, Value> = reports
        .iter()
        .map(|(k, r)| {
            (
                k.to_string(),
                serde_json::to_value(r).expect("serializable"),
            )
        })
        .collect();
    doc.insert(
        "input".into(),
        json!({ "dim": state.rho.dim(), "eta": state.eta }),
    );
    match cfg.format {
        crate::config::Format::Json => {
            w.json("catability", &doc)?;
        }
        crate::config::Format::Csv => {
            let mut t = Table::new(&[
                "metric",
                "value",
                "alpha_re",
                "alpha_im",
                "gamma",
                "sign",
                "global",
                "numerator",
                "gaussian_floor",
                "at_gamma_boundary",
                "converged",
            ]);
            let mut trace =
                Table::new(&["metric", "alpha", "sign", "value", "gamma", "refinement"]);
            for (k, r) in &reports {
                let m = &r.result;
                t.push(vec![
                    text(k),
                    num(m.value),
                    num(m.optimal_alpha.re),
                    num(m.optimal_alpha.im),
                    opt(m.optimal_gamma),
                    sign_of(m.parity()),
                    json!(r.global),
                    num(m.numerator),
                    num(m.gaussian_floor),
                    json!(m.at_gamma_boundary),
                    json!(m.converged),
                ]);
                for p in &r.trace {
                    trace.push(vec![
                        text(k),
                        num(p.alpha),
                        text(p.parity),
                        num(p.value),
                        opt(p.gamma),
                        json!(p.refinement),
                    ]);
                }
            }
            w.csv("catability", &t)?;
            if !trace.rows.is_empty() {
                w.csv("catability_trace", &trace)?;
            }
        }
    }
    let summary: serde_json::Map<String, Value> = reports
        .iter()
        .map(|(k, r)| {
            (
                k.to_string(),
                json!({ "value": r.value, "sign": r.sign, "alpha": r.result.optimal_alpha,
                        "gamma": r.result.optimal_gamma, "global": r.global }),
            )
        })
        .collect();
    println!("{}", Value::Object(summary));
    Ok(done(w, converged))
}

// ---------------------------------------------------------------- sweep-loss

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub state: StateArgs,
}

/// Violations of "non-increasing in eta" along an ascending eta grid.
fn monotonicity(etas: &[f64], values: &[f64]) -> Vec<Value> {
    etas.windows(2)
        .zip(values.windows(2))
        .filter(|(_, v)| v[1] > v[0] + 1e-9)
        .map(|(e, v)| json!({ "eta_low": e[0], "eta_high": e[1], "value_low": v[0], "value_high": v[1] }))
        .collect()
}

/// Largest eta at which `value >= 1`, i.e. where certification is lost.
fn threshold(etas: &[f64], values: &[f64]) -> Option<f64> {
    etas.iter()
        .zip(values)
        .filter(|(_, &v)| v >= 1.0)
        .map(|(&e, _)| e)
        .next_back()
}

pub fn cmd_sweep_loss(cfg: &RunConfig, args: &SweepArgs) -> Result<Outcome, CliError> {
    if args.state.loss.is_some() || args.state.loss_eta.is_some() {
        return Err(CliError::validation(
            "sweep-loss sets the loss itself; drop --loss/--loss-eta",
        ));
    }
    let etas = cfg
        .eta_grid
        .clone()
        .unwrap_or_else(|| (0..=10).map(|i| 0.5 + 0.05 * i as f64).collect());
    if etas.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(CliError::validation("eta grid must lie in [0, 1]"));
    }
    let ideal = args.state.prepare(cfg)?;
    let bench = benchmark(cfg)?;
    let asearch = alpha_search(cfg)?;
    let gsearch = gamma_search(cfg)?;
    let mut t = Table::new(&[
        "eta",
        "loss_pct",
        "xi",
        "zeta",
        "optimal_alpha",
        "optimal_gamma",
        "sign",
        "zeta_alpha",
        "zeta_sign",
        "converged",
    ]);
    let (mut xis, mut zetas) = (Vec::new(), Vec::new());
    let mut converged = true;
    for &eta in &etas {
        let rho = if eta < 1.0 {
            apply_loss(&ideal.rho, &LossSpec::new(eta)?)?
        } else {
            ideal.rho.clone()
        };
        let xi = global_catability(&rho, &asearch, &gsearch, bench.as_ref())?.best;
        let zeta = global_normalized_infidelity(&rho, &asearch, bench.as_ref())?.best;
        converged &= xi.converged && zeta.converged;
        xis.push(xi.value);
        zetas.push(zeta.value);
        t.push(vec![
            num(eta),
            num(cfg.loss_convention.pct(eta)),
            num(xi.value),
            num(zeta.value),
            num(xi.optimal_alpha.norm()),
            opt(xi.optimal_gamma),
            sign_of(xi.parity()),
            num(zeta.optimal_alpha.norm()),
            sign_of(zeta.parity()),
            json!(xi.converged && zeta.converged),
        ]);
    }
    let xi_violations = monotonicity(&etas, &xis);
    let zeta_violations = monotonicity(&etas, &zetas);
    let report = json!({
        "xi_non_increasing": xi_violations.is_empty(),
        "zeta_non_increasing": zeta_violations.is_empty(),
        "xi_violations": xi_violations,
        "zeta_violations": zeta_violations,
        "xi_threshold_eta": threshold(&etas, &xis),
        "zeta_threshold_eta": threshold(&etas, &zetas),
        "loss_convention": cfg.loss_convention.name(),
    });
    let mut w = Writer::new(cfg, "sweep-loss");
    w.table("sweep_loss", &t)?;
    w.json("sweep_loss_report", &report)?;
    println!("{report}");
    Ok(done(w, converged))
}

// ---------------------------------------------------------------- mc

#[derive(Args, Debug)]
pub struct McArgs {
    #[command(flatten)]
    pub state: StateArgs,
    /// Shots per setting, one ensemble per entry.
    #[arg(long, default_value = "1000,4000")]
    pub shots: String,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Loss percentages applied to the state, under both conventions.
    #[arg(long, default_value = "0,10,20,30")]
    pub losses: String,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Witness amplitude; defaults to the state's amplitude.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub target_alpha: Option<C64>,
}

fn parse_u64_list(name: &str, s: &str) -> Result<Vec<u64>, CliError> {
    let v: Vec<u64> = s
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::validation(format!("invalid {name} '{s}'")))?;
    if v.is_empty() || v.contains(&0) {
        return Err(CliError::validation(format!("{name} must be positive")));
    }
    Ok(v)
}

pub fn cmd_mc(cfg: &RunConfig, args: &McArgs) -> Result<Outcome, CliError> {
    let shots = parse_u64_list("shots", &args.shots)?;
    let losses = parse_grid("losses", &args.losses)?;
    let state = args.state.prepare(cfg)?;
    let alpha = args
        .target_alpha
        .or(state.alpha)
        .ok_or_else(|| CliError::validation("mc needs --alpha or --target-alpha"))?;
    let parity = state.parity.or(args.state.sign).unwrap_or(Parity::Even);
    let params = WitnessParams::two_head(alpha, args.gamma, parity);
    let mut w = Writer::new(cfg, "mc");
    let mut summary = Table::new(&[
        "convention",
        "loss_pct",
        "eta",
        "shots",
        "mean",
        "std",
        "true_value",
        "trials",
        "file",
    ]);
    let mut ordering = serde_json::Map::new();
    for conv in [
        crate::config::LossConvention::Energy,
        crate::config::LossConvention::Amplitude,
    ] {
        let mut first_std: Vec<(f64, f64)> = Vec::new();
        for &loss in &losses {
            let spec = conv.spec(loss)?;
            let rho = if spec.eta < 1.0 {
                apply_loss(&state.rho, &spec)?
            } else {
                state.rho.clone()
            };
            let report = run_ensemble(&rho, &params, &shots, args.trials, cfg.seed)?;
            let stem = format!("mc_{}_{}", conv.name(), loss);
            let path = w.csv_text(&stem, &report.to_csv())?;
            let file = path.file_name().map(|f| f.to_string_lossy().into_owned());
            for (i, &n) in shots.iter().enumerate() {
                summary.push(vec![
                    text(conv.name()),
                    num(loss),
                    num(spec.eta),
                    json!(n),
                    num(report.mean_estimates[i]),
                    num(report.std_devs[i]),
                    num(report.true_value),
                    json!(args.trials),
                    json!(file),
                ]);
            }
            first_std.push((loss, report.std_devs[0]));
        }
        let largest = first_std
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|x| x.0);
        ordering.insert(
            conv.name().to_string(),
            json!({ "largest_std_at_loss_pct": largest,
                    "zero_loss_largest": first_std.iter().any(|x| x.0 == 0.0) && largest == Some(0.0) }),
        );
    }
    w.table("mc_summary", &summary)?;
    w.json("mc_ordering", &ordering)?;
    println!("{}", Value::Object(ordering));
    Ok(done(w, true))
}

// ---------------------------------------------------------------- spectrum

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex, default_value = "2")]
    pub alpha: C64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, allow_hyphen_values = true, default_value = "-")]
    pub sign: Parity,
    /// Number of eigenpairs (at most 8).
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Also write the Wigner function of each eigenstate.
    #[arg(long)]
    pub wigner: bool,
    /// Phase-space axis for `--wigner`, `start:stop:count`.
    #[arg(long, default_value = "-5:5:101", allow_hyphen_values = true)]
    pub grid: String,
}

fn wigner_table(rho: &DensityOperator, xs: &[f64], ps: &[f64]) -> Result<Table, CliError> {
    let w = wigner_grid(rho, xs, ps)?;
    let mut t = Table::new(&["x", "p", "w"]);
    for (i, &p) in ps.iter().enumerate() {
        for (j, &x) in xs.iter().enumerate() {
            t.push(vec![num(x), num(p), num(w[i][j])]);
        }
    }
    Ok(t)
}

pub fn cmd_spectrum(cfg: &RunConfig, args: &SpectrumArgs) -> Result<Outcome, CliError> {
    let dim = cfg
        .dim
        .unwrap_or_else(|| catability::fock::default_cutoff(args.alpha.norm()).max(60));
    let hc = HilbertConfig::new(dim)?;
    let params = WitnessParams::two_head(args.alpha, args.gamma, args.sign);
    let spec = operator_spectrum(&hc, &params, args.k)?;
    let same = cat_state(&hc, args.alpha, args.sign)?;
    let other = cat_state(&hc, args.alpha, args.sign.opposite())?;
    let mut t = Table::new(&[
        "index",
        "eigenvalue",
        "parity",
        "fidelity_same_cat",
        "fidelity_opposite_cat",
        "truncation_dominated",
    ]);
    for (i, e) in spec.iter().enumerate() {
        let rho = e.state.to_density();
        t.push(vec![
            json!(i),
            num(e.value),
            num(rho.parity()),
            num(e.state.fidelity(&same)?),
            num(e.state.fidelity(&other)?),
            json!(e.truncation_dominated),
        ]);
    }
    let mut w = Writer::new(cfg, "spectrum");
    w.table("spectrum", &t)?;
    if args.wigner {
        let axis = parse_grid("grid", &args.grid)?;
        for (i, e) in spec.iter().enumerate() {
            let wt = wigner_table(&e.state.to_density(), &axis, &axis)?;
            w.table(&format!("spectrum_state{i}_wigner"), &wt)?;
        }
    }
    let values: Vec<f64> = spec.iter().map(|e| e.value).collect();
    println!("{}", json!({ "eigenvalues": values, "dim": dim }));
    Ok(done(w, true))
}

// ---------------------------------------------------------------- wigner

#[derive(Args, Debug)]
pub struct WignerArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value = "-5:5:101", allow_hyphen_values = true)]
    pub x_grid: String,
    #[arg(long, default_value = "-5:5:101", allow_hyphen_values = true)]
    pub p_grid: String,
}

pub fn cmd_wigner(cfg: &RunConfig, args: &WignerArgs) -> Result<Outcome, CliError> {
    let xs = parse_grid("x grid", &args.x_grid)?;
    let ps = parse_grid("p grid", &args.p_grid)?;
    let state = args.state.prepare(cfg)?;
    let t = wigner_table(&state.rho, &xs, &ps)?;
    let (min, max) = t
        .rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |acc, r| {
            let v = r[2].as_f64().unwrap_or(f64::NAN);
            (acc.0.min(v), acc.1.max(v))
        });
    let mut w = Writer::new(cfg, "wigner");
    w.table("wigner", &t)?;
    println!(
        "{}",
        json!({ "min": min, "max": max, "points": t.rows.len() })
    );
    Ok(done(w, true))
}

// ---------------------------------------------------------------- table

#[derive(Subcommand, Debug)]
pub enum TableAction {
    /// Tabulate Gaussian floors and fidelity ceilings.
    Build(TableArgs),
    /// Re-minimize random nodes and off-grid points against the stored table.
    Verify(VerifyArgs),
    /// Write the tables as CSV.
    Export(TableArgs),
}

#[derive(Args, Debug)]
pub struct TableArgs {
    /// `+`, `-` or `both`.
    #[arg(long, default_value = "both", allow_hyphen_values = true)]
    pub sign: String,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub table: TableArgs,
    /// Random nodes re-minimized per table.
    #[arg(long, default_value_t = 20)]
    pub nodes: usize,
    /// Random off-grid points checked against interpolation per table.
    #[arg(long, default_value_t = 20)]
    pub probes: usize,
}

fn parities(sign: &str) -> Result<Vec<Parity>, CliError> {
    if sign == "both" {
        return Ok(Parity::BOTH.to_vec());
    }
    Ok(vec![sign.parse::<Parity>()?])
}

fn table_dir(cfg: &RunConfig) -> PathBuf {
    cfg.table_dir.clone().unwrap_or_else(|| cfg.out_dir.clone())
}

fn load_table(dir: &Path, p: Parity) -> Result<BenchmarkTable, CliError> {
    let path = table_path(dir, p);
    if !path.exists() {
        return Err(CliError::validation(format!(
            "no table for sign {p} at {}",
            path.display()
        )));
    }
    Ok(BenchmarkTable::load(&path)?)
}

pub fn cmd_table(cfg: &RunConfig, action: &TableAction) -> Result<Outcome, CliError> {
    let dir = table_dir(cfg);
    match action {
        TableAction::Build(a) => {
            let alpha = cfg.alpha_grid.clone().unwrap_or_else(default_alpha_grid);
            let gamma = cfg.gamma_grid.clone().unwrap_or_else(default_gamma_grid);
            let bench = DirectBenchmark::default();
            let mut converged = true;
            let mut built = Vec::new();
            for p in parities(&a.sign)? {
                let t = BenchmarkTable::build(
                    alpha.clone(),
                    gamma.clone(),
                    p,
                    cfg.squeeze_convention(),
                    &bench,
                )?;
                converged &= t.all_converged;
                let path = table_path(&dir, p);
                t.save(&path)?;
                built.push(path.display().to_string());
            }
            println!("{}", json!({ "tables": built, "converged": converged }));
            Ok(Outcome {
                converged,
                written: built.into_iter().map(PathBuf::from).collect(),
            })
        }
        TableAction::Export(a) => {
            let mut w = Writer::new(cfg, "table-export");
            let mut rows = 0;
            for p in parities(&a.sign)? {
                let t = load_table(&dir, p)?;
                let stem = format!("table_{}", if p == Parity::Even { "even" } else { "odd" });
                rows += t.alpha_grid.len() * t.gamma_grid.len();
                w.csv_text(&stem, &t.to_csv())?;
            }
            println!("{}", json!({ "rows": rows }));
            Ok(done(w, true))
        }
        TableAction::Verify(a) => cmd_table_verify(cfg, &dir, a),
    }
}

fn cmd_table_verify(cfg: &RunConfig, dir: &Path, a: &VerifyArgs) -> Result<Outcome, CliError> {
    let bench = DirectBenchmark::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = Table::new(&[
        "kind", "sign", "alpha", "gamma", "source", "table", "direct", "abs_dev", "rel_dev",
    ]);
    let (mut node_dev, mut probe_rel): (f64, f64) = (0.0, 0.0);
    let mut converged = true;
    for p in parities(&a.table.sign)? {
        let table = load_table(dir, p)?;
        let family = CatFamily::TwoHead(p);
        let (na, ng) = (table.alpha_grid.len(), table.gamma_grid.len());
        let (alo, ahi) = (table.alpha_grid[0], table.alpha_grid[na - 1]);
        let (glo, ghi) = (table.gamma_grid[0], table.gamma_grid[ng - 1]);
        let nodes: Vec<(f64, f64, f64)> = (0..a.nodes)
            .map(|_| {
                let (i, j) = (rng.random_range(0..na), rng.random_range(0..ng));
                (
                    table.alpha_grid[i],
                    table.gamma_grid[j],
                    table.node_floor(i, j),
                )
            })
            .collect();
        let probes: Vec<(f64, f64)> = (0..a.probes)
            .map(|_| (rng.random_range(alo..ahi), rng.random_range(glo..ghi)))
            .collect();
        let smooth: Vec<bool> = probes
            .iter()
            .map(|&(x, g)| table.floor_smooth_at(x, g))
            .collect();
        let served = TableBenchmark::new(vec![table], DirectBenchmark::default());
        let mut record =
            |kind: &str, source: &str, alpha: f64, gamma: f64, tab: f64| -> Result<f64, CliError> {
                let e = bench.floor(family, alpha, gamma)?;
                converged &= e.converged;
                let dev = (tab - e.value).abs();
                let rel = dev / e.value.abs().max(f64::MIN_POSITIVE);
                t.push(vec![
                    text(kind),
                    text(p),
                    num(alpha),
                    num(gamma),
                    text(source),
                    num(tab),
                    num(e.value),
                    num(dev),
                    num(rel),
                ]);
                Ok(if kind == "node" { dev } else { rel })
            };
        for (alpha, gamma, v) in nodes {
            node_dev = node_dev.max(record("node", "table", alpha, gamma, v)?);
        }
        for ((alpha, gamma), smooth) in probes.into_iter().zip(smooth) {
            let v = served.floor(family, alpha, gamma)?.value;
            let source = if smooth { "table" } else { "direct" };
            probe_rel = probe_rel.max(record("probe", source, alpha, gamma, v)?);
        }
    }
    let mut w = Writer::new(cfg, "table-verify");
    w.table("table_verify", &t)?;
    let summary =
        json!({ "max_node_deviation": node_dev, "max_probe_relative_deviation": probe_rel });
    w.json("table_verify_summary", &summary)?;
    println!("{summary}");
    Ok(done(w, converged))
}

// ---------------------------------------------------------------- multihead

#[derive(Args, Debug)]
pub struct MultiheadArgs {
    #[arg(long, default_value_t = 3)]
    pub heads: usize,
    /// Symmetry index; all sectors when omitted.
    #[arg(long)]
    pub sector: Option<usize>,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex, default_value = "2")]
    pub alpha: C64,
    /// Cross-evaluate every (state sector, operator sector) pair on ideal states.
    #[arg(long)]
    pub cross: bool,
}

pub fn cmd_multihead(cfg: &RunConfig, args: &MultiheadArgs) -> Result<Outcome, CliError> {
    let heads = args.heads;
    let sectors: Vec<usize> = match args.sector {
        Some(m) => vec![m],
        None => (0..heads).collect(),
    };
    let etas = cfg
        .eta_grid
        .clone()
        .unwrap_or_else(|| (0..=10).map(|i| 0.5 + 0.05 * i as f64).collect());
    if etas.iter().any(|e| !(0.0..=1.0).contains(e)) {
        return Err(CliError::validation("eta grid must lie in [0, 1]"));
    }
    let dim = cfg
        .dim
        .unwrap_or_else(|| catability::fock::default_cutoff(args.alpha.norm()).max(60));
    let hc = HilbertConfig::new(dim)?;
    let bench = benchmark(cfg)?;
    let search = gamma_search(cfg)?;
    let mut converged = true;
    let mut t = Table::new(&[
        "heads",
        "sector",
        "eta",
        "loss_pct",
        "xi",
        "zeta",
        "optimal_gamma",
        "converged",
    ]);
    for &m in &sectors {
        let ideal = multi_headed_cat(&hc, args.alpha, heads, m)?.to_density();
        for &eta in &etas {
            let rho = if eta < 1.0 {
                apply_loss(&ideal, &LossSpec::new(eta)?)?
            } else {
                ideal.clone()
            };
            let xi = multi_head_catability(&rho, args.alpha, heads, m, &search, bench.as_ref())?;
            let zeta = multi_head_infidelity(&rho, args.alpha, heads, m, bench.as_ref())?;
            converged &= xi.converged && zeta.converged;
            t.push(vec![
                json!(heads),
                json!(m),
                num(eta),
                num(cfg.loss_convention.pct(eta)),
                num(xi.value),
                num(zeta.value),
                opt(xi.optimal_gamma),
                json!(xi.converged && zeta.converged),
            ]);
        }
    }
    let mut w = Writer::new(cfg, "multihead");
    w.table("multihead", &t)?;
    if args.cross {
        let mut c = Table::new(&["state_sector", "operator_sector", "xi"]);
        for s in 0..heads {
            let rho = multi_headed_cat(&hc, args.alpha, heads, s)?.to_density();
            for o in 0..heads {
                let xi =
                    multi_head_catability(&rho, args.alpha, heads, o, &search, bench.as_ref())?;
                c.push(vec![json!(s), json!(o), num(xi.value)]);
            }
        }
        w.table("multihead_cross", &c)?;
    }
    println!(
        "{}",
        json!({ "rows": t.rows.len(), "converged": converged })
    );
    Ok(done(w, converged))
}

// ---------------------------------------------------------------- optimize-approx

#[derive(Args, Debug)]
pub struct ApproxArgs {
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Squeezing grid `start:stop:count`.
    #[arg(long, default_value = "-0.8:0.8:321", allow_hyphen_values = true)]
    pub r_grid: String,
    /// Number of intervals of the omega grid on [0, 1].
    #[arg(long, default_value_t = 1000)]
    pub omega_steps: usize,
}

fn approx_row(t: &mut Table, o: &ApproxOptimum) {
    let db = |c: SqueezeConvention, r: f64| num(c.r_to_db(r));
    t.push(vec![
        text(match o.kind {
            catability::approx::ApproxKind::SinglePhoton => "single-photon",
            catability::approx::ApproxKind::ZeroTwo => "zero-two",
        }),
        opt(o.omega),
        num(o.r),
        num(o.value),
        opt(o.refined_omega),
        num(o.refined_r),
        num(o.refined_value),
        db(SqueezeConvention::VarianceE2r, o.refined_r),
        db(SqueezeConvention::VarianceE4r, o.refined_r),
    ]);
}

pub fn cmd_optimize_approx(cfg: &RunConfig, args: &ApproxArgs) -> Result<Outcome, CliError> {
    let r_grid = parse_grid("r grid", &args.r_grid)?;
    let dim = cfg.dim.unwrap_or(80);
    let hc = HilbertConfig::new(dim)?;
    let zero_two = zero_two_optimum(&hc, args.alpha, args.gamma, &r_grid, args.omega_steps)?;
    let single = single_photon_optimum(&hc, args.alpha, args.gamma, &r_grid)?;
    let mut t = Table::new(&[
        "kind",
        "omega",
        "r",
        "value",
        "refined_omega",
        "refined_r",
        "refined_value",
        "db_variance_e2r",
        "db_variance_e4r",
    ]);
    approx_row(&mut t, &zero_two);
    approx_row(&mut t, &single);
    let mut w = Writer::new(cfg, "optimize-approx");
    w.table("optimize_approx", &t)?;
    println!(
        "{}",
        json!({ "zero_two": { "omega": zero_two.omega, "r": zero_two.r },
                "single_photon": { "r": single.refined_r } })
    );
    Ok(done(w, true))
}

// ---------------------------------------------------------------- protocol

#[derive(Args, Debug)]
pub struct ProtocolArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = 10_000)]
    pub shots: u64,
    #[arg(long, default_value_t = 60)]
    pub phase_points: usize,
}

pub fn cmd_protocol(cfg: &RunConfig, args: &ProtocolArgs) -> Result<Outcome, CliError> {
    let state = args.state.prepare(cfg)?;
    let bench = benchmark(cfg)?;
    let opts = ProtocolOptions {
        shots_per_setting: args.shots,
        phase_points: args.phase_points,
        seed: cfg.seed,
        gamma_search: gamma_search(cfg)?,
        ..ProtocolOptions::default()
    };
    let report = full_protocol(&state.rho, &opts, bench.as_ref())?;
    let mut w = Writer::new(cfg, "protocol");
    w.json("protocol", &report)?;
    let best = report.best();
    println!(
        "{}",
        json!({ "alpha_estimate": report.alpha_estimate,
                "catability": best.map(|b| b.catability),
                "std_error": best.map(|b| b.catability_std_error),
                "sign": best.map(|b| b.parity) })
    );
    Ok(done(w, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use catability::gaussian::uniform_grid;

    #[test]
    fn monotonicity_and_threshold() {
        let etas = [0.5, 0.7, 0.9, 1.0];
        assert!(monotonicity(&etas, &[1.2, 0.8, 0.3, 0.0]).is_empty());
        assert_eq!(monotonicity(&etas, &[1.2, 0.8, 0.9, 0.0]).len(), 1);
        assert_eq!(threshold(&etas, &[1.2, 1.0, 0.3, 0.0]), Some(0.7));
        assert_eq!(threshold(&etas, &[0.9, 0.8, 0.3, 0.0]), None);
    }

    #[test]
    fn alpha_grid_must_be_uniform() {
        let mut cfg = RunConfig::resolve(
            &crate::config::GlobalArgs {
                out_dir: Some(std::env::temp_dir()),
                ..Default::default()
            },
            false,
        )
        .unwrap();
        cfg.alpha_grid = Some(vec![0.1, 0.2, 0.4]);
        assert!(alpha_search(&cfg).is_err());
        cfg.alpha_grid = Some(uniform_grid(0.1, 0.1, 5));
        let s = alpha_search(&cfg).unwrap();
        assert_eq!(s.points, 5);
    }
}
