//! Finite-sample slack between empirical fairness and its population value.
//!
//! Both slacks have the form `alpha_C + sum_k' |C_k^k'| alpha_k'`, where
//! `alpha_C = sqrt(ln(B3 (2K+1) / delta) / (B4 n))` covers the estimated
//! coefficients. When the model does not depend on the sample,
//! `alpha_k' = sqrt(ln(2 (2K+1) / delta) / (n p_k'))`. Otherwise a uniform
//! convergence term over a class of Natarajan dimension `d_H` is paid:
//! `alpha_k' = sqrt(64 (d_H (ln(n p_k' / 2) + 2 ln|Y|) + ln(8 (2K+1) / delta)) / (n p_k'))`.

use crate::error::{arg_err, Result};
use crate::fairness::FairnessSpec;
use crate::flags::Flags;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FiniteSampleMode {
    #[default]
    Off,
    /// Model independent of the evaluation sample.
    Independent,
    /// Model fitted on the evaluation sample.
    Dependent,
}

impl FiniteSampleMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(FiniteSampleMode::Off),
            "independent" => Ok(FiniteSampleMode::Independent),
            "dependent" => Ok(FiniteSampleMode::Dependent),
            other => arg_err(format!("unknown finite-sample mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSampleParams {
    pub k: usize,
    pub delta: f64,
    pub n: usize,
    /// `p_k'` per group.
    pub proportions: Vec<f64>,
    /// `|C_k^k'|`, `K x K` row-major.
    pub coeff_abs: Vec<f64>,
    pub b3: f64,
    pub b4: f64,
    /// Natarajan dimension of the hypothesis class.
    pub d_h: f64,
    pub num_labels: usize,
}

impl FiniteSampleParams {
    /// Parameters for a fairness spec with the default constants
    /// `B3 = 2(K+1)`, `B4 = 2` and `d_H = |Y| p` (`num_params`).
    pub fn from_spec(spec: &FairnessSpec, delta: f64, num_labels: usize, num_params: usize) -> Result<Self> {
        let part = spec.partition();
        let k = spec.k();
        let coeff_abs = (0..k).flat_map(|r| spec.row(r).iter().map(|c| c.abs())).collect();
        let fp = Self {
            k,
            delta,
            n: part.assignment.len(),
            proportions: part.proportions.clone(),
            coeff_abs,
            b3: 2.0 * (k as f64 + 1.0),
            b4: 2.0,
            d_h: num_params as f64,
            num_labels,
        };
        fp.validate()?;
        Ok(fp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return arg_err(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.n == 0 || self.k == 0 {
            return arg_err("n and K must be positive");
        }
        if self.proportions.len() != self.k || self.coeff_abs.len() != self.k * self.k {
            return arg_err("finite-sample parameter shapes do not match K");
        }
        if !(self.b3 > 0.0 && self.b4 > 0.0) || !(self.d_h >= 0.0) {
            return arg_err("B3 and B4 must be positive and d_H nonnegative");
        }
        Ok(())
    }

    /// `n >= 8 ln((2K+1)/delta) / min_k' p_k'`.
    pub fn precondition_holds(&self) -> bool {
        let min_p = self.proportions.iter().copied().fold(f64::INFINITY, f64::min);
        min_p > 0.0 && self.n as f64 >= 8.0 * self.log_term(1.0) / min_p
    }

    fn log_term(&self, factor: f64) -> f64 {
        (factor * (2.0 * self.k as f64 + 1.0) / self.delta).ln()
    }
}

/// Coefficient-estimation term `alpha_C`.
pub fn alpha_c(fp: &FiniteSampleParams) -> f64 {
    (fp.log_term(fp.b3) / (fp.b4 * fp.n as f64)).sqrt()
}

fn slack(fp: &FiniteSampleParams, k: usize, alpha: impl Fn(f64) -> f64) -> (f64, Flags) {
    let mut flags = if fp.precondition_holds() {
        Flags::empty()
    } else {
        Flags::SMALL_SAMPLE
    };
    let mut total = alpha_c(fp);
    for (kp, &c) in fp.coeff_abs[k * fp.k..(k + 1) * fp.k].iter().enumerate() {
        let p = fp.proportions[kp];
        if p == 0.0 {
            flags |= Flags::EMPTY_GROUP;
            continue;
        }
        if c != 0.0 {
            total += c * alpha(fp.n as f64 * p);
        }
    }
    (total, flags)
}

/// Slack for a model independent of the sample.
pub fn independent_slack(fp: &FiniteSampleParams, k: usize) -> (f64, Flags) {
    let log = fp.log_term(2.0);
    slack(fp, k, |np| (log / np).sqrt())
}

/// Slack for a model fitted on the sample.
pub fn dependent_slack(fp: &FiniteSampleParams, k: usize) -> (f64, Flags) {
    let log = fp.log_term(8.0);
    let ln_labels = (fp.num_labels as f64).ln();
    slack(fp, k, |np| {
        let radicand = 64.0 * (fp.d_h * ((np / 2.0).ln() + 2.0 * ln_labels) + log) / np;
        radicand.max(0.0).sqrt()
    })
}

/// Slack of every group under `mode` (zeros when off).
pub fn slacks(fp: &FiniteSampleParams, mode: FiniteSampleMode) -> Vec<(f64, Flags)> {
    (0..fp.k)
        .map(|k| match mode {
            FiniteSampleMode::Off => (0.0, Flags::empty()),
            FiniteSampleMode::Independent => independent_slack(fp, k),
            FiniteSampleMode::Dependent => dependent_slack(fp, k),
        })
        .collect()
}
