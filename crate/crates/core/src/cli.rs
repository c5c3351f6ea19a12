//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::bounds::{theorem3_report, DistanceInput, Variant};
use crate::dataset::{load_csv, save_csv, synthesize, Dataset, Schema, SyntheticSpec};
use crate::error::{arg_err, Error, Result};
use crate::experiment::{run_experiment, table_report, write_table, DeltaPolicy, ExperimentConfig, TableEntry};
use crate::fairness::{coefficients, fairness_levels, Notion};
use crate::finite_sample::{slacks, FiniteSampleMode, FiniteSampleParams};
use crate::model::LinearModel;
use crate::privacy::{
    dpsgd, dpsgd_distance_bound_with, output_perturb, outputperturb_distance_bound, DpSgdConfig, Mechanism,
    NoiseExponent, PrivacyParams,
};
use crate::trainer::{constants, fit_erm_with, FitOptions};

#[derive(Debug, Parser)]
#[command(name = "fairbound", version, about = "Fairness bounds for differentially private linear classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Column layout of input CSV files.
#[derive(Debug, Clone, Args)]
pub struct CsvArgs {
    #[arg(long, default_value = "sensitive")]
    pub sensitive_col: String,
    #[arg(long, default_value = "label")]
    pub label_col: String,
    /// Comma-separated label values in id order (default: order of appearance).
    #[arg(long, value_delimiter = ',')]
    pub label_values: Option<Vec<String>>,
    /// Comma-separated sensitive values in id order.
    #[arg(long, value_delimiter = ',')]
    pub sensitive_values: Option<Vec<String>>,
}

impl CsvArgs {
    pub fn schema(&self) -> Schema {
        let mut s = Schema::new(&self.sensitive_col, &self.label_col);
        if let Some(v) = &self.label_values {
            s = s.with_label_values(v.clone());
        }
        if let Some(v) = &self.sensitive_values {
            s = s.with_sensitive_values(v.clone());
        }
        s
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a synthetic dataset from a cell spec.
    GenData {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the regularized softmax model.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        csv: CsvArgs,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
        /// Ball radius; projected gradient descent is used when set.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Produce a private model with output perturbation or DP-SGD.
    Privatize {
        /// Optimal model (output perturbation) or any model fixing the radius (DP-SGD).
        #[arg(long)]
        model: PathBuf,
        /// Training data.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        csv: CsvArgs,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value = "output-perturbation")]
        mechanism: String,
        #[arg(long)]
        epsilon: f64,
        /// `auto` for 1/n^2.
        #[arg(long, default_value = "auto")]
        delta: String,
        #[arg(long, default_value_t = 0.01)]
        zeta: f64,
        #[arg(long, default_value = "t-squared")]
        noise_exponent: String,
        /// DP-SGD step count; derived from the distance bound when omitted.
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-group fairness levels of a model.
    Audit {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        csv: CsvArgs,
        /// Comma-separated notions, or `all`.
        #[arg(long, value_delimiter = ',', default_value = "all")]
        notion: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        desirable: Vec<usize>,
        /// `off`, `independent` or `dependent`.
        #[arg(long, default_value = "off")]
        finite_sample: String,
        /// Failure probability of the finite-sample interval.
        #[arg(long, default_value_t = 0.05)]
        fs_delta: f64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Bounds on the fairness gap between a model and its private counterpart.
    Bound {
        /// Reference (optimal) model.
        #[arg(long)]
        model: PathBuf,
        /// Second model; its measured distance replaces the mechanism bound.
        #[arg(long)]
        other: Option<PathBuf>,
        /// Evaluation data.
        #[arg(long)]
        data: PathBuf,
        /// Training data fixing n and B (defaults to --data).
        #[arg(long)]
        train_data: Option<PathBuf>,
        #[command(flatten)]
        csv: CsvArgs,
        #[arg(long, value_delimiter = ',', default_value = "all")]
        notion: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        desirable: Vec<usize>,
        #[arg(long, default_value = "output-perturbation")]
        mechanism: String,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value = "auto")]
        delta: String,
        #[arg(long, default_value_t = 0.01)]
        zeta: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Variant summarized on stderr; the report lists all of them.
        #[arg(long, default_value = "best")]
        variant: String,
        #[arg(long, default_value = "off")]
        finite_sample: String,
        #[arg(long, default_value_t = 0.05)]
        fs_delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep described by a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// `key=value` config overrides.
        #[arg(long = "set")]
        set: Vec<String>,
    },
    /// Group-averaged bounds per dataset and notion.
    Table {
        #[arg(long, required = true)]
        name: Vec<String>,
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
        #[arg(long, required = true)]
        train_data: Vec<PathBuf>,
        /// Evaluation data per dataset (defaults to the training data).
        #[arg(long)]
        data: Vec<PathBuf>,
        #[command(flatten)]
        csv: CsvArgs,
        #[arg(long, value_delimiter = ',', default_value = "all")]
        notion: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        desirable: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value = "auto")]
        delta: String,
        #[arg(long, default_value_t = 0.01)]
        zeta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn parse_notions(names: &[String]) -> Result<Vec<Notion>> {
    if names.len() == 1 && names[0] == "all" {
        return Ok(Notion::ALL.to_vec());
    }
    names.iter().map(|n| Notion::parse(n)).collect()
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn delta_for(s: &str, n: usize) -> Result<f64> {
    DeltaPolicy::parse(s)
        .map(|p| p.delta(n))
        .map_err(|_| Error::Argument(format!("delta must be 'auto' or a number, got {s:?}")))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { spec, seed, out } => {
            let d = synthesize(&SyntheticSpec::from_file(spec)?, seed)?;
            save_csv(&d, &out)?;
            info!("wrote {} examples to {}", d.n(), out.display());
            Ok(())
        }
        Command::Train {
            data,
            csv,
            lambda,
            tol,
            max_iters,
            radius,
            out,
        } => {
            let d = load_csv(data, &csv.schema())?;
            let mut opts = FitOptions::new(lambda).tol(tol).max_iters(max_iters);
            if let Some(r) = radius {
                opts = opts.radius(r);
            }
            let fit = fit_erm_with(&d, &opts)?;
            info!(
                "converged in {} iterations, gradient norm {:e}, R = {}",
                fit.iterations,
                fit.grad_norm,
                fit.model.radius()
            );
            fit.model.save(out)
        }
        Command::Privatize {
            model,
            data,
            csv,
            lambda,
            mechanism,
            epsilon,
            delta,
            zeta,
            noise_exponent,
            iterations,
            seed,
            out,
        } => {
            let h = LinearModel::load(model)?;
            let d = load_csv(data, &csv.schema())?;
            let mech = Mechanism::parse(&mechanism)?;
            let pp = PrivacyParams::new(epsilon, delta_for(&delta, d.n())?, zeta, mech, seed)?;
            let c = constants(&d, lambda, h.radius())?;
            let private = match mech {
                Mechanism::OutputPerturbation => {
                    let bound = outputperturb_distance_bound(h.num_params(), &c, d.n(), &pp);
                    info!("distance bound {bound:e} with probability {}", 1.0 - zeta);
                    output_perturb(&h, &c, d.n(), &pp)?
                }
                Mechanism::DpSgd => {
                    let exponent = NoiseExponent::parse(&noise_exponent)?;
                    let b = dpsgd_distance_bound_with(&c, d.n(), &pp, 2.0 * c.radius, exponent);
                    let t = iterations.unwrap_or(b.iterations);
                    let cfg = if t == 0 {
                        warn!("distance bound is degenerate; returning the initial point");
                        DpSgdConfig {
                            iterations: 0,
                            step: 1.0 / (2.0 * c.smoothness),
                            sigma2: 0.0,
                            radius: c.radius,
                            noise_exponent: exponent,
                        }
                    } else {
                        DpSgdConfig::calibrated(&c, d.n(), &pp, t, exponent)?
                    };
                    info!("DP-SGD: T = {t}, sigma^2 = {:e}, distance bound {:e}", cfg.sigma2, b.distance);
                    dpsgd(&d, &c, &pp, &cfg)?
                }
            };
            private.save(out)
        }
        Command::Audit {
            model,
            data,
            csv,
            notion,
            desirable,
            finite_sample,
            fs_delta,
            report,
        } => {
            let h = LinearModel::load(model)?;
            let d = load_csv(data, &csv.schema())?;
            let mode = FiniteSampleMode::parse(&finite_sample)?;
            let mut w = sink(report.as_deref())?;
            write!(w, "notion,k,group,fairness,flags")?;
            if mode != FiniteSampleMode::Off {
                write!(w, ",slack,lower,upper,confidence")?;
            }
            writeln!(w)?;
            for notion in parse_notions(&notion)? {
                let spec = match coefficients(&d, notion, &desirable) {
                    Ok(s) => s,
                    Err(e @ (Error::Argument(_) | Error::Unsupported(_))) => {
                        warn!("skipping {}: {e}", notion.name());
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let levels = fairness_levels(&h, &d, &spec)?;
                let fs = if mode == FiniteSampleMode::Off {
                    None
                } else {
                    let fp = FiniteSampleParams::from_spec(&spec, fs_delta, d.num_labels(), h.num_params())?;
                    Some(slacks(&fp, mode))
                };
                for (k, f) in levels.iter().enumerate() {
                    let mut flags = spec.row_flags(k);
                    let group = spec.partition().describe(k, &d);
                    match &fs {
                        None => writeln!(w, "{},{k},\"{group}\",{f:?},{flags}", notion.name())?,
                        Some(s) => {
                            let (slack, sf) = s[k];
                            flags |= sf;
                            writeln!(
                                w,
                                "{},{k},\"{group}\",{f:?},{flags},{slack:?},{:?},{:?},{:?}",
                                notion.name(),
                                f - slack,
                                f + slack,
                                1.0 - fs_delta
                            )?
                        }
                    }
                }
            }
            w.flush()?;
            Ok(())
        }
        Command::Bound {
            model,
            other,
            data,
            train_data,
            csv,
            notion,
            desirable,
            mechanism,
            epsilon,
            delta,
            zeta,
            lambda,
            variant,
            finite_sample,
            fs_delta,
            out,
        } => {
            let h = LinearModel::load(model)?;
            let schema = csv.schema();
            let eval = load_csv(&data, &schema)?;
            let train = match &train_data {
                Some(p) => load_csv(p, &schema)?,
                None => eval.clone(),
            };
            let variant = Variant::parse(&variant)?;
            let mode = FiniteSampleMode::parse(&finite_sample)?;
            let input = match other {
                Some(p) => DistanceInput::Measured(h.distance(&LinearModel::load(p)?)?),
                None => distance_input(&h, &train, &mechanism, epsilon, &delta, zeta, lambda)?,
            };
            let bound_confidence = match input {
                DistanceInput::Measured(_) => 1.0,
                _ => 1.0 - zeta,
            };
            let mut w = sink(out.as_deref())?;
            let mut header_written = false;
            for notion in parse_notions(&notion)? {
                let spec = match coefficients(&eval, notion, &desirable) {
                    Ok(s) => s,
                    Err(e @ (Error::Argument(_) | Error::Unsupported(_))) => {
                        warn!("skipping {}: {e}", notion.name());
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let mut report = theorem3_report(&h, &eval, &spec, &input)?;
                if mode != FiniteSampleMode::Off {
                    let fp = FiniteSampleParams::from_spec(&spec, fs_delta, eval.num_labels(), h.num_params())?;
                    let s = slacks(&fp, mode).into_iter().map(|(v, _)| v).collect();
                    report = report.with_slack(s, bound_confidence - fs_delta);
                }
                eprintln!(
                    "{}: mean {} bound {:.6} at dist {:e} ({})",
                    notion.name(),
                    variant.name(),
                    report.aggregate(variant),
                    report.dist,
                    report.provenance.name()
                );
                if !header_written {
                    report.write_header(&mut w)?;
                    header_written = true;
                }
                report.write_rows(&mut w)?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Experiment { config, seed, set } => {
            let text = std::fs::read_to_string(&config)?;
            let mut overrides = Vec::new();
            for kv in &set {
                let Some((k, v)) = kv.split_once('=') else {
                    return Err(Error::Config(format!("--set expects key=value, got {kv:?}")));
                };
                overrides.push((k.trim().to_string(), v.trim().to_string()));
            }
            if let Some(s) = seed {
                overrides.push(("seed".into(), s.to_string()));
            }
            let base = config.parent().unwrap_or(Path::new("."));
            let cfg = ExperimentConfig::parse(&text, base, &overrides)?;
            let result = run_experiment(&cfg)?;
            let path = result.write(&cfg)?;
            info!(
                "wrote {} rows to {} ({} failed grid points)",
                result.rows.len(),
                path.display(),
                result.failures.len()
            );
            Ok(())
        }
        Command::Table {
            name,
            model,
            train_data,
            data,
            csv,
            notion,
            desirable,
            lambda,
            epsilon,
            delta,
            zeta,
            out,
        } => {
            if model.len() != name.len() || train_data.len() != name.len() || !(data.is_empty() || data.len() == name.len()) {
                return arg_err("--name, --model, --train-data (and --data if given) must be repeated equally often");
            }
            let schema = csv.schema();
            let delta = DeltaPolicy::parse(&delta).map_err(|e| Error::Argument(e.to_string()))?;
            let mut entries = Vec::new();
            for i in 0..name.len() {
                let h = LinearModel::load(&model[i])?;
                let train = load_csv(&train_data[i], &schema)?;
                let eval = match data.get(i) {
                    Some(p) => load_csv(p, &schema)?,
                    None => train.clone(),
                };
                entries.push(TableEntry {
                    name: name[i].clone(),
                    constants: constants(&train, lambda, h.radius())?,
                    model: h,
                    train_n: train.n(),
                    eval,
                });
            }
            let notions = parse_notions(&notion)?;
            let rows = table_report(&entries, &notions, &desirable, epsilon, zeta, delta)?;
            let mut w = sink(out.as_deref())?;
            write_table(&rows, &notions, &mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn distance_input(
    h: &LinearModel,
    train: &Dataset,
    mechanism: &str,
    epsilon: f64,
    delta: &str,
    zeta: f64,
    lambda: f64,
) -> Result<DistanceInput> {
    let mech = Mechanism::parse(mechanism)?;
    let params = PrivacyParams::new(epsilon, delta_for(delta, train.n())?, zeta, mech, 0)?;
    let c = constants(train, lambda, h.radius())?;
    Ok(match mech {
        Mechanism::OutputPerturbation => DistanceInput::OutputPerturbation {
            constants: c,
            n: train.n(),
            params,
        },
        Mechanism::DpSgd => DistanceInput::DpSgd {
            constants: c,
            n: train.n(),
            params,
            h0_dist: 2.0 * c.radius,
        },
    })
}
