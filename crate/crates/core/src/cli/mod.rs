//! Experiment runner: a flat TOML config in, a JSON report and CSV tables
//! out.
//!
//! ```toml
//! map = "torus_linear:2,1,1,1"
//! orders = [1, 2, 3, 4]
//! mode = "cyclic"
//! analyses = ["speed", "spectral"]
//! out = "results/report.json"
//! ```

pub mod json;
pub mod oracle;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{entropy_gap, EntropyGap};
use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::lax::{grid_for, lax_approximate, LaxMode};
use crate::maps::{MeasureMap, Sampling};
use crate::metrics::{record_for, ApproxRecord, SpeedSpec};
use crate::perm::CellPermutation;
use crate::spectral::{cesaro_mixing_diagnostic, spectral_type, CesaroDiagnostic, SpectralMeasure};
use crate::towers::{rank_one_base, rokhlin_tower, two_column_partition, RankOneCertificate, Tower};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Speed,
    Towers,
    RankOne,
    Entropy,
    Spectral,
    Cesaro,
}

impl Analysis {
    pub fn csv_name(self) -> &'static str {
        match self {
            Analysis::Speed => "speed.csv",
            Analysis::Towers => "towers.csv",
            Analysis::RankOne => "rank_one.csv",
            Analysis::Entropy => "entropy.csv",
            Analysis::Spectral => "spectral.csv",
            Analysis::Cesaro => "cesaro.csv",
        }
    }
}

/// Samples per axis, or `"exact"` for maps that translate whole cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SamplingKey {
    PerAxis(usize),
    Named(String),
}

impl SamplingKey {
    fn resolve(&self) -> Result<Sampling> {
        match self {
            SamplingKey::PerAxis(0) => Err(Error::ConfigError("sampling must be at least 1".into())),
            SamplingKey::PerAxis(s) => Ok(Sampling::Stratified(*s)),
            SamplingKey::Named(s) if s == "exact" => Ok(Sampling::Exact),
            SamplingKey::Named(s) => Err(Error::ConfigError(format!("unknown sampling `{s}`"))),
        }
    }
}

fn default_dim() -> usize {
    2
}
fn default_mode() -> LaxMode {
    LaxMode::Plain
}
fn default_sampling() -> SamplingKey {
    SamplingKey::PerAxis(8)
}
fn default_refine() -> u32 {
    4
}
fn default_theta() -> String {
    "inv_q".into()
}
fn default_out() -> PathBuf {
    PathBuf::from("report.json")
}
fn default_entropy_length() -> usize {
    3
}
fn default_tower_height() -> usize {
    2
}
fn default_two_column() -> [usize; 2] {
    [2, 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub map: String,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub orders: Vec<u32>,
    #[serde(default = "default_mode")]
    pub mode: LaxMode,
    #[serde(default = "default_sampling")]
    pub sampling: SamplingKey,
    #[serde(default = "default_refine")]
    pub refine: u32,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
    /// Target speed family, see [`SpeedSpec`].
    #[serde(default = "default_theta")]
    pub theta: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Longest itinerary for the entropy table.
    #[serde(default = "default_entropy_length")]
    pub entropy_length: usize,
    #[serde(default = "default_tower_height")]
    pub tower_height: usize,
    /// Column heights of the two-column partition.
    #[serde(default = "default_two_column")]
    pub two_column: [usize; 2],
}

/// Command-line values that replace config keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub map: Option<String>,
    pub orders: Option<String>,
    pub mode: Option<String>,
    pub out: Option<PathBuf>,
}

/// `"1,2,5"` or the inclusive range `"1-4"`.
pub fn parse_orders(s: &str) -> Result<Vec<u32>> {
    let bad = || Error::ConfigError(format!("bad order list `{s}`"));
    if let Some((a, b)) = s.split_once('-') {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().parse().map_err(|_| bad())?;
        return if a <= b { Ok((a..=b).collect()) } else { Err(bad()) };
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

/// Everything a run needs, checked.
#[derive(Debug, Clone)]
pub struct Plan {
    pub map: MeasureMap,
    pub sampling: Sampling,
    pub theta: SpeedSpec,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigError(e.message().to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(m) = &o.map {
            self.map = m.clone();
        }
        if let Some(s) = &o.orders {
            self.orders = parse_orders(s)?;
        }
        if let Some(s) = &o.mode {
            self.mode = s.parse()?;
        }
        if let Some(p) = &o.out {
            self.out = p.clone();
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<Plan> {
        let fail = |m: &str| Err(Error::ConfigError(m.into()));
        if self.orders.is_empty() || self.orders.windows(2).any(|w| w[0] >= w[1]) {
            return fail("orders must be nonempty and increasing");
        }
        if self.refine < 1 {
            return fail("refine must be at least 1");
        }
        if self.entropy_length < 1 || self.tower_height < 1 {
            return fail("entropy_length and tower_height must be at least 1");
        }
        let mut seen = self.analyses.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.analyses.len() {
            return fail("analyses listed twice");
        }
        let map = MeasureMap::parse(&self.map, self.dim)?;
        let sampling = self.sampling.resolve()?;
        let theta = self.theta.parse()?;
        // fail early on grids the budget refuses
        for &m in &self.orders {
            grid_for(&map, m).map_err(|e| Error::ConfigError(e.to_string()))?;
        }
        Ok(Plan { map, sampling, theta })
    }

    fn wants(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }
}

/// A section that may legitimately not apply to a given permutation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Outcome<T> {
    Ok(T),
    Skipped { error: String, message: String },
}

impl<T> From<Result<T>> for Outcome<T> {
    fn from(r: Result<T>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Skipped { error: e.name().into(), message: e.to_string() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateSummary {
    pub strong_bound: f64,
    pub plain_bound: f64,
    pub shift_bound: f64,
    pub max_cell_diameter: f64,
    pub max_image_diameter: f64,
    pub all_matched_positive: bool,
    pub final_positive_fraction: f64,
    pub cycle_lengths: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoColumnSummary {
    pub p: usize,
    pub q2: usize,
    pub t1: Vec<usize>,
    pub t2: Vec<usize>,
    pub exact_cover: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TowerSummary {
    pub rokhlin: Outcome<Tower>,
    pub two_column: Outcome<TwoColumnSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CesaroSummary {
    pub e1: Vec<usize>,
    pub e2: Vec<usize>,
    pub n: usize,
    pub diagnostic: CesaroDiagnostic,
    /// Unsigned average equals `μ(E1) μ(E2)`.
    pub identity_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    pub order: u32,
    pub q: usize,
    pub grid: DyadicGrid,
    pub mode: LaxMode,
    pub certificate: CertificateSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speed: Option<ApproxRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub towers: Option<TowerSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_one: Option<Outcome<RankOneCertificate>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy: Option<Vec<EntropyGap>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralMeasure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cesaro: Option<CesaroSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tool {
    pub name: String,
    pub version: String,
}

/// Wall-clock seconds. Never feeds back into results.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Timing {
    pub total: f64,
    /// Per order, seconds per stage.
    pub stages: Vec<BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: Tool,
    pub config: ExperimentConfig,
    /// Canonical form of the map string.
    pub map: String,
    pub orders: Vec<OrderReport>,
    pub timing: Timing,
}

impl Report {
    /// The report as JSON, floats at 17 significant digits.
    pub fn to_json(&self) -> Result<String> {
        json::to_string(self).map_err(|e| Error::IoError(e.to_string()))
    }

    /// The report JSON without the timing block, for comparisons.
    pub fn to_json_without_timing(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.timing = Timing::default();
        copy.to_json()
    }
}

fn random_subset(rng: &mut ChaCha8Rng, q: usize) -> Vec<usize> {
    (0..q).filter(|_| rng.random_bool(0.5)).collect()
}

fn run_order(cfg: &ExperimentConfig, plan: &Plan, order: u32) -> Result<(OrderReport, BTreeMap<String, f64>)> {
    let mut clock = BTreeMap::new();
    let mut tick = Instant::now();
    let mut lap = |name: &str, clock: &mut BTreeMap<String, f64>| {
        clock.insert(name.to_string(), tick.elapsed().as_secs_f64());
        tick = Instant::now();
    };
    let map = &plan.map;
    let grid = grid_for(map, order)?;
    let q = grid.cell_count();
    let (perm, cert) = lax_approximate(map, &grid, plan.sampling, cfg.mode)?;
    lap("lax", &mut clock);
    let mut report = OrderReport {
        order,
        q,
        grid,
        mode: cfg.mode,
        certificate: CertificateSummary {
            strong_bound: cert.strong_bound,
            plain_bound: cert.plain_bound,
            shift_bound: cert.shift_bound,
            max_cell_diameter: cert.max_cell_diameter,
            max_image_diameter: cert.max_image_diameter,
            all_matched_positive: cert.all_matched_positive(),
            final_positive_fraction: cert.final_positive_fraction(),
            cycle_lengths: cert.cycle_lengths.clone(),
        },
        speed: None,
        towers: None,
        rank_one: None,
        entropy: None,
        spectral: None,
        cesaro: None,
    };
    if cfg.wants(Analysis::Speed) {
        report.speed = Some(record_for(map, &grid, &perm, &cert, &plan.theta, cfg.refine)?);
        lap("speed", &mut clock);
    }
    if cfg.wants(Analysis::Towers) {
        report.towers = Some(towers(cfg, &perm));
        lap("towers", &mut clock);
    }
    if cfg.wants(Analysis::RankOne) {
        report.rank_one = Some(rank_one_base(map, &perm, &grid, cfg.refine).into());
        lap("rank_one", &mut clock);
    }
    if cfg.wants(Analysis::Entropy) {
        let rows = (1..=cfg.entropy_length)
            .map(|l| entropy_gap(map, &perm, &grid, l, cfg.refine))
            .collect::<Result<Vec<_>>>()?;
        report.entropy = Some(rows);
        lap("entropy", &mut clock);
    }
    if cfg.wants(Analysis::Spectral) {
        report.spectral = Some(spectral_type(&perm));
        lap("spectral", &mut clock);
    }
    if cfg.wants(Analysis::Cesaro) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ ((order as u64) << 32));
        let e1 = random_subset(&mut rng, q);
        let e2 = random_subset(&mut rng, q);
        let diagnostic = cesaro_mixing_diagnostic(&perm, &e1, &e2, q)?;
        let identity_holds = diagnostic.unsigned_average == diagnostic.product;
        report.cesaro = Some(CesaroSummary { e1, e2, n: q, diagnostic, identity_holds });
        lap("cesaro", &mut clock);
    }
    Ok((report, clock))
}

fn towers(cfg: &ExperimentConfig, perm: &CellPermutation) -> TowerSummary {
    let [p, q2] = cfg.two_column;
    let two = two_column_partition(perm, p, q2, false).map(|t| TwoColumnSummary {
        p,
        q2,
        exact_cover: t.is_exact_cover(perm),
        t1: t.t1,
        t2: t.t2,
    });
    TowerSummary { rokhlin: rokhlin_tower(perm, cfg.tower_height).into(), two_column: two.into() }
}

/// Runs every order (in parallel) and assembles the report in config order.
pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let plan = cfg.validate()?;
    let start = Instant::now();
    let results = cfg
        .orders
        .par_iter()
        .map(|&m| run_order(cfg, &plan, m))
        .collect::<Result<Vec<_>>>()?;
    let (orders, stages) = results.into_iter().unzip();
    Ok(Report {
        tool: Tool { name: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into() },
        config: cfg.clone(),
        map: plan.map.to_string(),
        orders,
        timing: Timing { total: start.elapsed().as_secs_f64(), stages },
    })
}

fn csv_table(report: &Report, analysis: Analysis) -> String {
    use json::float_cell as f;
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    match analysis {
        Analysis::Speed => {
            line("order,q,delta_sum,theta,pass".into());
            for r in report.orders.iter().filter_map(|o| o.speed.as_ref()) {
                line(format!("{},{},{},{},{}", r.order, r.q, f(r.delta_sum), f(r.theta), r.pass));
            }
        }
        Analysis::Spectral => {
            line("order,num,den,weight".into());
            for o in &report.orders {
                for a in o.spectral.iter().flat_map(|m| &m.atoms) {
                    line(format!("{},{},{},{}", o.order, a.num, a.den, f(a.weight)));
                }
            }
        }
        Analysis::Entropy => {
            line("order,l,H_l,bound".into());
            for o in &report.orders {
                for g in o.entropy.iter().flatten() {
                    line(format!("{},{},{},{}", o.order, g.l, f(g.map_entropy), f(g.bound)));
                }
            }
        }
        Analysis::Towers => {
            line("order,kind,heights,bases,coverage".into());
            for o in &report.orders {
                let Some(t) = &o.towers else { continue };
                if let Outcome::Ok(r) = &t.rokhlin {
                    line(format!("{},rokhlin,{},{},{}", o.order, r.height, r.base.len(), f(r.coverage)));
                }
                if let Outcome::Ok(c) = &t.two_column {
                    let covered = if c.exact_cover { 1.0 } else { 0.0 };
                    line(format!("{},two_column,{}/{},{}/{},{}", o.order, c.p, c.q2, c.t1.len(), c.t2.len(), f(covered)));
                }
            }
        }
        Analysis::RankOne => {
            line("order,start_cell,base_cells,fine_cells,deficit,return_overlap,disjoint".into());
            for o in &report.orders {
                if let Some(Outcome::Ok(c)) = &o.rank_one {
                    let (k, n) = c.base_measure;
                    line(format!("{},{},{},{},{},{},{}", o.order, c.start_cell, k, n, f(c.deficit), f(c.return_overlap), c.disjointness_ok));
                }
            }
        }
        Analysis::Cesaro => {
            line("order,n,num,den".into());
            for o in &report.orders {
                for (i, a) in o.cesaro.iter().flat_map(|c| c.diagnostic.partial.iter().enumerate()) {
                    let _ = write!(out, "{},{},{},{}\n", o.order, i + 1, a.0.numer(), a.0.denom());
                }
            }
        }
    }
    out
}

/// Writes one CSV per analysis in the config into `dir`.
pub fn emit_plot_data(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    let io = |e: std::io::Error| Error::IoError(e.to_string());
    let mut written = Vec::new();
    if report.config.analyses.is_empty() {
        return Ok(written);
    }
    fs::create_dir_all(dir).map_err(io)?;
    for &a in &report.config.analyses {
        let path = dir.join(a.csv_name());
        fs::write(&path, csv_table(report, a)).map_err(io)?;
        written.push(path);
    }
    Ok(written)
}

/// Runs, then writes the report and its tables next to `cfg.out`.
pub fn execute(cfg: &ExperimentConfig) -> Result<(Report, Vec<PathBuf>)> {
    let report = run(cfg)?;
    let io = |e: std::io::Error| Error::IoError(e.to_string());
    let dir = cfg.out.parent().map(Path::to_path_buf).unwrap_or_default();
    if !dir.as_os_str().is_empty() {
        fs::create_dir_all(&dir).map_err(io)?;
    }
    fs::write(&cfg.out, report.to_json()?).map_err(io)?;
    let mut files = vec![cfg.out.clone()];
    files.extend(emit_plot_data(&report, &dir)?);
    Ok((report, files))
}

/// Process exit code for an error: 2 for configuration, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ConfigError(_) => 2,
        _ => 1,
    }
}

/// `{"error": <name>, "message": <text>}`.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({ "error": e.name(), "message": e.to_string() }).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(text).unwrap()
    }

    #[test]
    fn identity_has_zero_delta_sum() {
        let c = cfg("map = \"identity\"\norders = [1, 2]\nanalyses = [\"speed\"]\n");
        let r = run(&c).unwrap();
        assert_eq!(r.orders.len(), 2);
        for o in &r.orders {
            assert_eq!(o.speed.as_ref().unwrap().delta_sum, 0.0);
        }
    }

    #[test]
    fn cat_map_speed_and_spectral() {
        let c = cfg("map = \"torus_linear:2,1,1,1\"\norders = [1, 2, 3, 4]\nmode = \"cyclic\"\nanalyses = [\"speed\", \"spectral\"]\n");
        let r = run(&c).unwrap();
        for o in &r.orders {
            assert_eq!(o.certificate.cycle_lengths, vec![o.q]);
            let atoms = &o.spectral.as_ref().unwrap().atoms;
            assert_eq!(atoms.len(), o.q);
            assert!(atoms.iter().all(|a| (o.q as u64) % a.den == 0));
        }
    }

    #[test]
    fn config_errors() {
        let bad = |t: &str| ExperimentConfig::from_toml_str(t).and_then(|c| c.validate().map(|_| ())).unwrap_err();
        assert_eq!(bad("map = \"warp:3\"\norders = [1]\n").name(), "ConfigError");
        assert_eq!(bad("map = \"identity\"\norders = []\n").name(), "ConfigError");
        assert_eq!(bad("map = \"identity\"\norders = [2, 1]\n").name(), "ConfigError");
        assert_eq!(bad("map = \"identity\"\norders = [1]\nanalyses = [\"speed\", \"speed\"]\n").name(), "ConfigError");
        assert_eq!(bad("map = \"identity\"\norders = [1]\nanalyses = [\"plots\"]\n").name(), "ConfigError");
        assert_eq!(bad("map = \"identity\"\norders = [1]\nrefine = 0\n").name(), "ConfigError");
        assert_eq!(bad("map = \"identity\"\norders = [1]\ncolour = 3\n").name(), "ConfigError");
        assert_eq!(bad("map = \"identity\"\norders = [1]\nsampling = \"dense\"\n").name(), "ConfigError");
        assert_eq!(exit_code(&Error::ConfigError(String::new())), 2);
        assert_eq!(exit_code(&Error::NotExact), 1);
        assert!(error_json(&Error::NotExact).contains("\"error\":\"NotExact\""));
    }

    #[test]
    fn overrides_and_order_lists() {
        assert_eq!(parse_orders("1-4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_orders("2, 5").unwrap(), vec![2, 5]);
        assert!(parse_orders("4-1").is_err());
        let mut c = cfg("map = \"identity\"\norders = [1]\n");
        c.apply(&Overrides { map: Some("baker:2".into()), orders: Some("1-2".into()), mode: Some("plain".into()), out: None })
            .unwrap();
        assert_eq!((c.map.as_str(), c.orders.clone(), c.mode), ("baker:2", vec![1, 2], LaxMode::Plain));
    }

    #[test]
    fn csv_files_follow_analyses() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.json");
        let none = ExperimentConfig { out: out.clone(), ..cfg("map = \"identity\"\norders = [1]\n") };
        let (_, files) = execute(&none).unwrap();
        assert_eq!(files, vec![out.clone()]);
        let speed = ExperimentConfig { analyses: vec![Analysis::Speed], ..none.clone() };
        assert_eq!(execute(&speed).unwrap().1.len(), 2);
        let all = ExperimentConfig {
            analyses: vec![Analysis::Speed, Analysis::Towers, Analysis::RankOne, Analysis::Entropy, Analysis::Spectral, Analysis::Cesaro],
            map: "translation:0.5,0.25".into(),
            orders: vec![2],
            ..none
        };
        let (report, files) = execute(&all).unwrap();
        assert_eq!(files.len(), 7);
        let speed_csv = fs::read_to_string(dir.path().join("speed.csv")).unwrap();
        assert!(speed_csv.starts_with("order,q,delta_sum,theta,pass\n2,16,"));
        let ces = report.orders[0].cesaro.as_ref().unwrap();
        assert_eq!(ces.identity_holds, report.orders[0].certificate.cycle_lengths.len() == 1);
    }

    #[test]
    fn deterministic_modulo_timing() {
        let c = cfg("map = \"torus_linear:2,1,1,1\"\norders = [1, 2, 3]\nanalyses = [\"speed\", \"cesaro\", \"entropy\"]\nentropy_length = 2\n");
        let a = run(&c).unwrap().to_json_without_timing().unwrap();
        let b = run(&c).unwrap().to_json_without_timing().unwrap();
        assert_eq!(a, b);
    }
}
