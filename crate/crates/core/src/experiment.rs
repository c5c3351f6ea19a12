//! Sweep experiments and bound tables.
//!
//! An experiment trains the optimal model at each grid point (a sample size
//! or a privacy budget), samples `M` private models, and records the spread of
//! their fairness next to the bounds. Configs use a `key = value` text format:
//!
//! ```text
//! # lines starting with '#' are comments
//! synthetic = spec.txt          # or: csv = data.csv (with sensitive_col / label_col)
//! lambda = 1.0
//! notions = equalized-odds, accuracy-parity
//! mechanism = output-perturbation
//! sweep = n                     # or: epsilon
//! grid_min = 100
//! grid_max = 10000
//! grid_count = 3
//! epsilon = 1.0
//! draws = 100
//! zeta = 0.01
//! delta = auto                  # 1/n^2, or a fixed value
//! seed = 42
//! out_dir = results
//! ```
//!
//! Every key is listed in [`ExperimentConfig::KEYS`]. Relative paths are
//! resolved against the config file's directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::bounds::{
    gap_bound, margin_profile, refined_lipschitz_profile, resolve_distance, DistanceInput, Variant,
};
use crate::dataset::{load_csv, split, synthesize, Dataset, Schema, SyntheticSpec};
use crate::error::{Error, Result};
use crate::fairness::{coefficients, fairness_levels, Notion};
use crate::model::LinearModel;
use crate::privacy::{
    auto_delta, dpsgd_distance_bound_with, dpsgd_stream, output_perturb_stream, DpSgdConfig, Mechanism,
    NoiseExponent, PrivacyParams,
};
use crate::rng::{stream_id, substream};
use crate::trainer::{constants, fit_erm_with, FitOptions, LossConstants};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv { path: PathBuf, schema: Schema },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    N,
    Epsilon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaPolicy {
    /// `delta = 1 / n^2`.
    InverseSquare,
    Fixed(f64),
}

impl DeltaPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(DeltaPolicy::InverseSquare);
        }
        s.parse::<f64>()
            .map(DeltaPolicy::Fixed)
            .map_err(|_| Error::Config(format!("delta must be 'auto' or a number, got {s:?}")))
    }

    pub fn delta(self, n: usize) -> f64 {
        match self {
            DeltaPolicy::InverseSquare => auto_delta(n),
            DeltaPolicy::Fixed(d) => d,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub lambda: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub notions: Vec<Notion>,
    /// Desirable labels for equality of opportunity.
    pub desirable: Vec<usize>,
    pub mechanism: Mechanism,
    pub noise_exponent: NoiseExponent,
    pub sweep: SweepAxis,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_count: usize,
    /// Budget when sweeping `n`.
    pub epsilon: f64,
    /// Sample size when sweeping `epsilon` (whole dataset when `None`).
    pub n: Option<usize>,
    pub draws: usize,
    pub zeta: f64,
    pub delta: DeltaPolicy,
    /// Seed of the private draws.
    pub seed: u64,
    /// Seed of data synthesis, subsampling and splitting.
    pub data_seed: u64,
    /// Held-out share used for evaluation; evaluation is on the training
    /// sample when `None`.
    pub test_fraction: Option<f64>,
    /// Ball radius for DP-SGD; defaults to the optimum's radius.
    pub radius: Option<f64>,
    pub out_dir: PathBuf,
    canonical: BTreeMap<String, String>,
}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value {v:?} for {key}")))
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 26] = [
        "csv",
        "synthetic",
        "sensitive_col",
        "label_col",
        "label_values",
        "sensitive_values",
        "lambda",
        "tol",
        "max_iters",
        "notions",
        "desirable",
        "mechanism",
        "noise_exponent",
        "sweep",
        "grid_min",
        "grid_max",
        "grid_count",
        "epsilon",
        "n",
        "draws",
        "zeta",
        "delta",
        "seed",
        "data_seed",
        "test_fraction",
        "out_dir",
    ];

    /// Parses a config file; relative paths resolve against its directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")), &[])
    }

    /// Parses config text, then applies `key=value` overrides in order.
    pub fn parse(text: &str, base: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return cfg_err(format!("line {}: expected key = value", i + 1));
            };
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        for (k, v) in overrides {
            kv.insert(k.clone(), v.clone());
        }
        for k in kv.keys() {
            if !Self::KEYS.contains(&k.as_str()) && k != "radius" {
                return cfg_err(format!("unknown config key {k:?}"));
            }
        }
        Self::from_map(kv, base)
    }

    fn from_map(kv: BTreeMap<String, String>, base: &Path) -> Result<Self> {
        let get = |k: &str| kv.get(k).map(String::as_str);
        let list = |v: &str| -> Vec<String> {
            v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
        };
        let source = match (get("csv"), get("synthetic")) {
            (Some(p), None) => {
                let mut schema = Schema::new(
                    get("sensitive_col").unwrap_or("sensitive"),
                    get("label_col").unwrap_or("label"),
                );
                if let Some(v) = get("label_values") {
                    schema = schema.with_label_values(list(v));
                }
                if let Some(v) = get("sensitive_values") {
                    schema = schema.with_sensitive_values(list(v));
                }
                DataSource::Csv {
                    path: base.join(p),
                    schema,
                }
            }
            (None, Some(p)) => {
                let spec = SyntheticSpec::from_file(base.join(p)).map_err(|e| Error::Config(e.to_string()))?;
                DataSource::Synthetic(spec)
            }
            _ => return cfg_err("exactly one of 'csv' and 'synthetic' must be set"),
        };
        let num = |k: &str, default: f64| -> Result<f64> { get(k).map_or(Ok(default), |v| parse_num(k, v)) };
        let int = |k: &str, default: usize| -> Result<usize> { get(k).map_or(Ok(default), |v| parse_num(k, v)) };
        let notions = list(get("notions").unwrap_or("equalized-odds"))
            .iter()
            .map(|s| Notion::parse(s).map_err(|e| Error::Config(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let desirable = list(get("desirable").unwrap_or("1"))
            .iter()
            .map(|s| parse_num("desirable", s))
            .collect::<Result<Vec<usize>>>()?;
        let mechanism = Mechanism::parse(get("mechanism").unwrap_or("output-perturbation"))
            .map_err(|e| Error::Config(e.to_string()))?;
        let noise_exponent = NoiseExponent::parse(get("noise_exponent").unwrap_or("t-squared"))
            .map_err(|e| Error::Config(e.to_string()))?;
        let sweep = match get("sweep").unwrap_or("n") {
            "n" => SweepAxis::N,
            "epsilon" => SweepAxis::Epsilon,
            other => return cfg_err(format!("sweep must be 'n' or 'epsilon', got {other:?}")),
        };
        let seed = match get("seed") {
            Some(v) => parse_num("seed", v)?,
            None => return cfg_err("'seed' is required"),
        };
        let cfg = Self {
            source,
            lambda: num("lambda", 1.0)?,
            tol: num("tol", 1e-10)?,
            max_iters: int("max_iters", 200_000)?,
            notions,
            desirable,
            mechanism,
            noise_exponent,
            sweep,
            grid_min: num("grid_min", 100.0)?,
            grid_max: num("grid_max", 10_000.0)?,
            grid_count: int("grid_count", 3)?,
            epsilon: num("epsilon", 1.0)?,
            n: get("n").map(|v| parse_num("n", v)).transpose()?,
            draws: int("draws", 100)?,
            zeta: num("zeta", 0.01)?,
            delta: DeltaPolicy::parse(get("delta").unwrap_or("auto"))?,
            seed,
            data_seed: get("data_seed").map_or(Ok(seed), |v| parse_num("data_seed", v))?,
            test_fraction: get("test_fraction").map(|v| parse_num("test_fraction", v)).transpose()?,
            radius: get("radius").map(|v| parse_num("radius", v)).transpose()?,
            out_dir: base.join(get("out_dir").unwrap_or("results")),
            canonical: kv,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.grid_count == 0 {
            return cfg_err("grid_count must be at least 1");
        }
        if self.draws == 0 {
            return cfg_err("draws must be at least 1");
        }
        if !(self.grid_min > 0.0 && self.grid_min <= self.grid_max) {
            return cfg_err("grid endpoints must satisfy 0 < grid_min <= grid_max");
        }
        if self.notions.is_empty() {
            return cfg_err("at least one notion is required");
        }
        if !(self.lambda > 0.0) || !(self.zeta > 0.0 && self.zeta < 1.0) {
            return cfg_err("lambda must be positive and zeta in (0, 1)");
        }
        Ok(())
    }

    /// SHA-256 of the sorted `key=value` pairs.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.canonical {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        hex::encode(h.finalize())
    }

    /// `grid_count` log-spaced values from `grid_min` to `grid_max`.
    pub fn grid(&self) -> Vec<f64> {
        log_grid(self.grid_min, self.grid_max, self.grid_count)
    }
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// One output row: a (grid point, notion, group) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub grid_value: f64,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub notion: Notion,
    pub k: usize,
    pub group: String,
    pub fair_star: f64,
    pub fair_priv_min: f64,
    pub fair_priv_max: f64,
    /// Best-variant bound at the mechanism's distance bound.
    pub bound_lemma: f64,
    /// Best-variant bound at the largest measured distance.
    pub bound_measured: f64,
    /// Best-variant bound on the refined profile of the farthest draw.
    pub bound_refined: f64,
    pub dist_lemma: f64,
    pub dist_measured_max: f64,
    /// Draws whose fairness gap exceeds `bound_lemma`.
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config_hash: String,
    pub rows: Vec<ExperimentRow>,
    /// `(grid value, error message)` for grid points that failed.
    pub failures: Vec<(f64, String)>,
    /// Training-set share evaluated on.
    pub eval_split: &'static str,
    pub provenance: &'static str,
}

fn load_pool(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.source {
        DataSource::Csv { path, schema } => load_csv(path, schema),
        DataSource::Synthetic(spec) => synthesize(spec, cfg.data_seed),
    }
}

/// First `n` examples of a seeded permutation, so larger samples contain smaller ones.
fn subsample(pool: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    if n > pool.n() {
        return Err(Error::Argument(format!("requested n = {n} exceeds the {} available examples", pool.n())));
    }
    if n == pool.n() {
        return Ok(pool.clone());
    }
    let mut perm: Vec<usize> = (0..pool.n()).collect();
    perm.shuffle(&mut substream(seed, 1));
    let mut idx = perm[..n].to_vec();
    idx.sort_unstable();
    pool.subset(&idx)
}

/// Runs the sweep. Grid points run in order; the private draws of each run
/// in parallel on independent substreams keyed by (grid index, draw index).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let pool = load_pool(cfg)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (gi, &value) in cfg.grid().iter().enumerate() {
        let (n, epsilon) = match cfg.sweep {
            SweepAxis::N => (value.round() as usize, cfg.epsilon),
            SweepAxis::Epsilon => (cfg.n.unwrap_or(pool.n()), value),
        };
        match grid_point(cfg, &pool, gi as u32, value, n, epsilon) {
            Ok(mut r) => rows.append(&mut r),
            Err(e) => {
                warn!("grid point {value} failed: {e}");
                failures.push((value, e.to_string()));
            }
        }
    }
    Ok(ExperimentResult {
        config_hash: cfg.hash(),
        rows,
        failures,
        eval_split: if cfg.test_fraction.is_some() { "test" } else { "train" },
        provenance: match cfg.mechanism {
            Mechanism::OutputPerturbation => "lemma2",
            Mechanism::DpSgd => "lemma3",
        },
    })
}

struct Draw {
    model: LinearModel,
    dist: f64,
}

fn grid_point(cfg: &ExperimentConfig, pool: &Dataset, gi: u32, value: f64, n: usize, epsilon: f64) -> Result<Vec<ExperimentRow>> {
    let sample = subsample(pool, n, cfg.data_seed)?;
    let (train, eval) = match cfg.test_fraction {
        Some(f) => split(&sample, 1.0 - f, cfg.data_seed)?,
        None => (sample.clone(), sample),
    };
    let delta = cfg.delta.delta(train.n());
    let pp = PrivacyParams::new(epsilon, delta, cfg.zeta, cfg.mechanism, cfg.seed)?;
    let fit = fit_erm_with(
        &train,
        &FitOptions::new(cfg.lambda).tol(cfg.tol).max_iters(cfg.max_iters),
    )?;
    let hstar = match (cfg.mechanism, cfg.radius) {
        (Mechanism::DpSgd, Some(r)) => fit.model.with_radius(r.max(fit.model.norm()))?,
        _ => fit.model,
    };
    let c = constants(&train, cfg.lambda, hstar.radius())?;
    let input = distance_input(cfg, &c, train.n(), &pp, &hstar);
    let (dist_lemma, _, _) = resolve_distance(&input, hstar.num_params());
    info!("grid point {value}: n = {}, epsilon = {epsilon}, dist bound = {dist_lemma:e}", train.n());

    let sgd = match cfg.mechanism {
        Mechanism::DpSgd => {
            let b = dpsgd_distance_bound_with(&c, train.n(), &pp, 2.0 * c.radius, cfg.noise_exponent);
            Some(DpSgdConfig {
                iterations: b.iterations,
                step: 1.0 / (2.0 * c.smoothness),
                sigma2: b.sigma2,
                radius: c.radius,
                noise_exponent: cfg.noise_exponent,
            })
        }
        Mechanism::OutputPerturbation => None,
    };
    let draws: Vec<Draw> = (0..cfg.draws as u32)
        .into_par_iter()
        .map(|j| {
            let stream = stream_id(gi, j);
            let model = match &sgd {
                None => output_perturb_stream(&hstar, &c, train.n(), &pp, stream)?,
                Some(sgd) => dpsgd_stream(&train, &c, &pp, sgd, stream)?,
            };
            let dist = model.distance(&hstar)?;
            Ok(Draw { model, dist })
        })
        .collect::<Result<Vec<_>>>()?;
    let (far_idx, dist_max) = draws
        .iter()
        .enumerate()
        .map(|(i, d)| (i, d.dist))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });

    let mut rows = Vec::new();
    for &notion in &cfg.notions {
        let spec = coefficients(&eval, notion, &cfg.desirable)?;
        let profile = margin_profile(&hstar, &eval, spec.partition())?;
        let refined = refined_lipschitz_profile(&hstar, &draws[far_idx].model, &eval, spec.partition())?;
        let star = fairness_levels(&hstar, &eval, &spec)?;
        let privs: Vec<Vec<f64>> = draws
            .iter()
            .map(|d| fairness_levels(&d.model, &eval, &spec))
            .collect::<Result<_>>()?;
        for k in 0..spec.k() {
            let bound_lemma = gap_bound(&profile, &spec, k, dist_lemma, Variant::Best);
            let vals = privs.iter().map(|f| f[k]);
            rows.push(ExperimentRow {
                grid_value: value,
                n: train.n(),
                epsilon,
                delta,
                notion,
                k,
                group: spec.partition().describe(k, &eval),
                fair_star: star[k],
                fair_priv_min: vals.clone().fold(f64::INFINITY, f64::min),
                fair_priv_max: vals.clone().fold(f64::NEG_INFINITY, f64::max),
                bound_lemma,
                bound_measured: gap_bound(&profile, &spec, k, dist_max, Variant::Best),
                bound_refined: gap_bound(&refined, &spec, k, dist_max, Variant::Best),
                dist_lemma,
                dist_measured_max: dist_max,
                violations: vals.filter(|f| (f - star[k]).abs() > bound_lemma).count(),
            });
        }
    }
    Ok(rows)
}

fn distance_input(
    cfg: &ExperimentConfig,
    c: &LossConstants,
    n: usize,
    pp: &PrivacyParams,
    hstar: &LinearModel,
) -> DistanceInput {
    match cfg.mechanism {
        Mechanism::OutputPerturbation => DistanceInput::OutputPerturbation {
            constants: *c,
            n,
            params: *pp,
        },
        Mechanism::DpSgd => DistanceInput::DpSgd {
            constants: *c,
            n,
            params: *pp,
            h0_dist: 2.0 * hstar.radius(),
        },
    }
}

pub const EXPERIMENT_COLUMNS: &str = "grid_value,n,epsilon,delta,notion,k,group,fair_star,fair_priv_min,fair_priv_max,bound_lemma,bound_measured,bound_refined,dist_lemma,dist_measured_max,violations";

impl ExperimentResult {
    fn metadata(&self, cfg: &ExperimentConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# config_sha256={}", self.config_hash);
        let _ = writeln!(s, "# seed={} data_seed={}", cfg.seed, cfg.data_seed);
        let _ = writeln!(s, "# eval_split={}", self.eval_split);
        let _ = writeln!(
            s,
            "# dist_provenance: bound_lemma={} bound_measured=measured bound_refined=measured",
            self.provenance
        );
        s
    }

    /// Experiment CSV: metadata comment lines, header, one line per row.
    pub fn to_csv(&self, cfg: &ExperimentConfig) -> String {
        let mut s = self.metadata(cfg);
        s.push_str(EXPERIMENT_COLUMNS);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:?},{},{:?},{:?},{},{},\"{}\",{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
                r.grid_value,
                r.n,
                r.epsilon,
                r.delta,
                r.notion.name(),
                r.k,
                r.group,
                r.fair_star,
                r.fair_priv_min,
                r.fair_priv_max,
                r.bound_lemma,
                r.bound_measured,
                r.bound_refined,
                r.dist_lemma,
                r.dist_measured_max,
                r.violations
            );
        }
        s
    }

    pub fn failures_csv(&self, cfg: &ExperimentConfig) -> String {
        let mut s = self.metadata(cfg);
        s.push_str("grid_value,error\n");
        for (v, e) in &self.failures {
            let _ = writeln!(s, "{v:?},\"{}\"", e.replace('"', "'"));
        }
        s
    }

    /// Writes `experiment.csv` and `failures.csv` into the config's output directory.
    pub fn write(&self, cfg: &ExperimentConfig) -> Result<PathBuf> {
        fs::create_dir_all(&cfg.out_dir)?;
        let main = cfg.out_dir.join("experiment.csv");
        fs::write(&main, self.to_csv(cfg))?;
        fs::write(cfg.out_dir.join("failures.csv"), self.failures_csv(cfg))?;
        Ok(main)
    }
}

/// One dataset of a bound table.
#[derive(Debug, Clone)]
pub struct TableEntry {
    pub name: String,
    /// Optimal non-private model.
    pub model: LinearModel,
    /// Loss constants of the training objective.
    pub constants: LossConstants,
    /// Training-set size.
    pub train_n: usize,
    /// Data the bounds are evaluated on.
    pub eval: Dataset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub name: String,
    pub n: usize,
    /// Group-averaged best-variant bound per notion; `None` if the notion
    /// does not apply to the data.
    pub cells: Vec<Option<f64>>,
}

/// Group-averaged best-variant output-perturbation bounds per notion.
pub fn table_report(
    entries: &[TableEntry],
    notions: &[Notion],
    desirable: &[usize],
    epsilon: f64,
    zeta: f64,
    delta: DeltaPolicy,
) -> Result<Vec<TableRow>> {
    entries
        .iter()
        .map(|e| {
            let pp = PrivacyParams::new(epsilon, delta.delta(e.train_n), zeta, Mechanism::OutputPerturbation, 0)?;
            let input = DistanceInput::OutputPerturbation {
                constants: e.constants,
                n: e.train_n,
                params: pp,
            };
            let (dist, _, _) = resolve_distance(&input, e.model.num_params());
            let cells = notions
                .iter()
                .map(|&notion| {
                    let spec = match coefficients(&e.eval, notion, desirable) {
                        Ok(s) => s,
                        Err(Error::Argument(msg)) => {
                            warn!("{} / {}: {msg}", e.name, notion.name());
                            return Ok(None);
                        }
                        Err(other) => return Err(other),
                    };
                    let profile = margin_profile(&e.model, &e.eval, spec.partition())?;
                    let total: f64 = (0..spec.k())
                        .map(|k| gap_bound(&profile, &spec, k, dist, Variant::Best))
                        .sum();
                    Ok(Some(total / spec.k() as f64))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TableRow {
                name: e.name.clone(),
                n: e.train_n,
                cells,
            })
        })
        .collect()
}

pub fn write_table(rows: &[TableRow], notions: &[Notion], w: &mut impl Write) -> std::io::Result<()> {
    write!(w, "dataset,n")?;
    for n in notions {
        write!(w, ",{}", n.name())?;
    }
    writeln!(w)?;
    for r in rows {
        write!(w, "{},{}", r.name, r.n)?;
        for c in &r.cells {
            match c {
                Some(v) => write!(w, ",{v:?}")?,
                None => write!(w, ",NA")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_file(dir: &Path, per_cell: usize) -> PathBuf {
        let p = dir.join("spec.txt");
        let text = format!(
            "features = 2\nlabels = 2\nsensitive = 2\n\
             cell.0.0.count = {per_cell}\ncell.0.0.mean = -1.5, 0.5\n\
             cell.0.1.count = {per_cell}\ncell.0.1.mean = -1.0, -0.5\n\
             cell.1.0.count = {per_cell}\ncell.1.0.mean = 1.5, 0.5\n\
             cell.1.1.count = {per_cell}\ncell.1.1.mean = 1.0, -0.5\n"
        );
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(100.0, 10_000.0, 3);
        assert_eq!(g[0], 100.0);
        assert!((g[1] - 1000.0).abs() < 1e-9);
        assert_eq!(g[2], 10_000.0);
        assert_eq!(log_grid(5.0, 50.0, 1), vec![5.0]);
    }

    #[test]
    fn config_parsing() {
        let dir = tempfile::tempdir().unwrap();
        spec_file(dir.path(), 10);
        let text = "synthetic = spec.txt\nseed = 3\nnotions = equalized-odds, accuracy\ndelta = 1e-5\n";
        let cfg = ExperimentConfig::parse(text, dir.path(), &[]).unwrap();
        assert_eq!(cfg.notions, vec![Notion::EqualizedOdds, Notion::Accuracy]);
        assert_eq!(cfg.delta, DeltaPolicy::Fixed(1e-5));
        assert_eq!(cfg.data_seed, 3);
        let other = ExperimentConfig::parse(text, dir.path(), &[("seed".into(), "4".into())]).unwrap();
        assert_ne!(cfg.hash(), other.hash());
        assert!(matches!(
            ExperimentConfig::parse("synthetic = spec.txt\n", dir.path(), &[]),
            Err(Error::Config(_))
        ));
        assert!(ExperimentConfig::parse("synthetic = spec.txt\nseed = 1\nbogus = 2\n", dir.path(), &[]).is_err());
        assert!(ExperimentConfig::parse("synthetic = spec.txt\nseed = 1\ndraws = 0\n", dir.path(), &[]).is_err());
    }

    #[test]
    fn single_draw_has_degenerate_envelope_and_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        spec_file(dir.path(), 25);
        let text = "synthetic = spec.txt\nseed = 9\ndraws = 1\ngrid_min = 100\ngrid_max = 100\ngrid_count = 1\nnotions = accuracy-parity\n";
        let cfg = ExperimentConfig::parse(text, dir.path(), &[]).unwrap();
        let a = run_experiment(&cfg).unwrap();
        assert!(a.failures.is_empty());
        for r in &a.rows {
            assert_eq!(r.fair_priv_min, r.fair_priv_max);
        }
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.to_csv(&cfg), b.to_csv(&cfg));
    }

    #[test]
    fn failing_grid_points_are_recorded() {
        let dir = tempfile::tempdir().unwrap();
        spec_file(dir.path(), 5);
        let text = "synthetic = spec.txt\nseed = 9\ndraws = 2\ngrid_min = 10\ngrid_max = 1000\ngrid_count = 2\n";
        let cfg = ExperimentConfig::parse(text, dir.path(), &[]).unwrap();
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].0, 1000.0);
        assert!(!r.rows.is_empty());
    }
}
