//! Certified bounds on how much differential privacy can move the group
//! fairness of a linear multiclass classifier.
//!
//! The pipeline: load or synthesize a [`Dataset`], fit the regularized softmax
//! optimum with [`fit_erm`], privatize it with [`output_perturb`] or [`dpsgd`],
//! measure per-group fairness with [`fairness_levels`], and bound the gap
//! between the optimal and private models from margins alone with
//! [`theorem3_report`] or [`gap_bound`]. [`experiment`] runs whole sweeps and
//! [`cli`] exposes everything as the `fairbound` command.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod fairness;
pub mod finite_sample;
pub mod flags;
pub mod model;
pub mod privacy;
pub mod rng;
pub mod trainer;

pub use bounds::{
    bound_report, gap_bound, margin_profile, refined_lipschitz_profile, resolve_distance, theorem3_bound,
    theorem3_report, BoundReport, DistanceInput, DistanceSource, MarginProfile, Variant,
};
pub use dataset::{load_csv, partition, read_csv, save_csv, split, synthesize, Dataset, Example, Grouping, Schema, SyntheticSpec};
pub use error::{Error, Result};
pub use experiment::{run_experiment, table_report, ExperimentConfig};
pub use fairness::{coefficients, direct_fairness, fairness_levels, FairnessSpec, Notion};
pub use finite_sample::{dependent_slack, independent_slack, FiniteSampleMode, FiniteSampleParams};
pub use flags::Flags;
pub use model::LinearModel;
pub use privacy::{
    dpsgd, dpsgd_distance_bound, output_perturb, outputperturb_distance_bound, DpSgdConfig, Mechanism,
    NoiseExponent, PrivacyParams,
};
pub use trainer::{constants, fit_erm, fit_erm_with, FitOptions, LossConstants};
