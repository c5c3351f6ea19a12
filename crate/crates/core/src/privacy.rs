//! Differentially private estimates of the ERM optimum and their distance
//! bounds.
//!
//! Two mechanisms are provided: output perturbation (Gaussian noise on the
//! exact optimum, then projection) and DP-SGD (projected one-sample SGD with
//! Gaussian noise on every step). Both bounds are returned on the distance
//! `||h_priv - h*||_F`, not its square.

use log::warn;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::error::{arg_err, Result};
use crate::model::{project_weights, LinearModel};
use crate::rng::{substream, StreamRng};
use crate::trainer::{gradient_raw, gradient_second_moment, LossConstants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mechanism {
    OutputPerturbation,
    DpSgd,
}

impl Mechanism {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "output-perturbation" | "output_perturbation" => Ok(Mechanism::OutputPerturbation),
            "dp-sgd" | "dp_sgd" | "dpsgd" => Ok(Mechanism::DpSgd),
            other => arg_err(format!("unknown mechanism {other:?}")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::OutputPerturbation => "output-perturbation",
            Mechanism::DpSgd => "dp-sgd",
        }
    }
}

/// Privacy budget, bound failure probability, mechanism and seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
    pub zeta: f64,
    pub mechanism: Mechanism,
    pub seed: u64,
}

impl PrivacyParams {
    /// Validates `epsilon > 0`, `delta, zeta in (0, 1)`. Logs a warning when
    /// `epsilon >= 1`, where the closed-form calibrations are loose.
    pub fn new(epsilon: f64, delta: f64, zeta: f64, mechanism: Mechanism, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return arg_err(format!("epsilon must be positive and finite, got {epsilon}"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return arg_err(format!("delta must lie in (0, 1), got {delta}"));
        }
        if !(zeta > 0.0 && zeta < 1.0) {
            return arg_err(format!("zeta must lie in (0, 1), got {zeta}"));
        }
        if epsilon >= 1.0 {
            warn!("epsilon = {epsilon} >= 1: noise calibration assumes epsilon < 1");
        }
        Ok(Self {
            epsilon,
            delta,
            zeta,
            mechanism,
            seed,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// `delta = 1 / n^2`.
pub fn auto_delta(n: usize) -> f64 {
    let n = n as f64;
    1.0 / (n * n)
}

/// Output-perturbation noise variance `8 Lambda^2 log(1.25/delta) / (mu^2 n^2 eps^2)`.
pub fn outputperturb_noise(c: &LossConstants, n: usize, epsilon: f64, delta: f64) -> f64 {
    let n = n as f64;
    let mu = c.strong_convexity();
    8.0 * c.lipschitz * c.lipschitz * (1.25 / delta).ln() / (mu * mu * n * n * epsilon * epsilon)
}

/// `project(h* + G, R)` with `G_ij ~ N(0, sigma^2)`, drawn from substream 0
/// of `pp.seed`.
pub fn output_perturb(hstar: &LinearModel, c: &LossConstants, n: usize, pp: &PrivacyParams) -> Result<LinearModel> {
    output_perturb_stream(hstar, c, n, pp, 0)
}

/// [`output_perturb`] drawing from substream `stream`, for independent
/// repeated draws under one seed.
pub fn output_perturb_stream(
    hstar: &LinearModel,
    c: &LossConstants,
    n: usize,
    pp: &PrivacyParams,
    stream: u64,
) -> Result<LinearModel> {
    if pp.mechanism != Mechanism::OutputPerturbation {
        return arg_err("output_perturb requires the output-perturbation mechanism");
    }
    if n == 0 {
        return arg_err("n must be positive");
    }
    let sigma = outputperturb_noise(c, n, pp.epsilon, pp.delta).sqrt();
    let mut rng = substream(pp.seed, stream);
    let noisy: Vec<f64> = hstar
        .weights()
        .iter()
        .map(|w| w + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let r = hstar.radius();
    Ok(LinearModel::from_raw(
        project_weights(noisy, r),
        hstar.num_labels(),
        hstar.dim(),
        r,
    ))
}

/// High-probability bound on `||h_priv - h*||_F` for output perturbation:
/// `sqrt(32 p log(1.25/delta) log(2/zeta)) Lambda / (mu n eps)`, with `p` the
/// parameter count. Holds with probability at least `1 - zeta`.
pub fn outputperturb_distance_bound(p: usize, c: &LossConstants, n: usize, pp: &PrivacyParams) -> f64 {
    let logs = 32.0 * p as f64 * (1.25 / pp.delta).ln() * (2.0 / pp.zeta).ln();
    logs.sqrt() * c.lipschitz / (c.strong_convexity() * n as f64 * pp.epsilon)
}

/// Power of `T` in the DP-SGD noise calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseExponent {
    /// `T^2`: the larger of the two published calibrations.
    #[default]
    TSquared,
    /// `T`: the calibration the distance bound is derived with.
    TLinear,
}

impl NoiseExponent {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "t-squared" | "t_squared" | "T_squared" => Ok(NoiseExponent::TSquared),
            "t-linear" | "t_linear" | "T_linear" => Ok(NoiseExponent::TLinear),
            other => arg_err(format!("unknown noise exponent {other:?}")),
        }
    }
}

/// Per-step DP-SGD noise variance
/// `64 Lambda^2 T^a log(3T/delta) log(2/delta) / (n^2 eps^2)`, `a` in {1, 2}.
pub fn dpsgd_noise(lipschitz: f64, t: usize, n: usize, epsilon: f64, delta: f64, exponent: NoiseExponent) -> f64 {
    let tf = t as f64;
    let n = n as f64;
    let tpow = match exponent {
        NoiseExponent::TSquared => tf * tf,
        NoiseExponent::TLinear => tf,
    };
    64.0 * lipschitz * lipschitz * tpow * (3.0 * tf / delta).ln() * (2.0 / delta).ln() / (n * n * epsilon * epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpSgdConfig {
    /// Number of steps `T`.
    pub iterations: usize,
    /// Step size `gamma`, at most `1 / (2 beta)`.
    pub step: f64,
    /// Per-step noise variance.
    pub sigma2: f64,
    /// Ball radius `R`.
    pub radius: f64,
    pub noise_exponent: NoiseExponent,
}

impl DpSgdConfig {
    /// `gamma = 1 / (2 beta)`, `R = c.radius`, noise from [`dpsgd_noise`].
    pub fn calibrated(
        c: &LossConstants,
        n: usize,
        pp: &PrivacyParams,
        iterations: usize,
        exponent: NoiseExponent,
    ) -> Result<Self> {
        if iterations == 0 {
            return arg_err("DP-SGD needs at least one iteration");
        }
        Ok(Self {
            iterations,
            step: 1.0 / (2.0 * c.smoothness),
            sigma2: dpsgd_noise(c.lipschitz, iterations, n, pp.epsilon, pp.delta, exponent),
            radius: c.radius,
            noise_exponent: exponent,
        })
    }
}

/// Projected noisy SGD from `h^0 = 0`: each step samples one example
/// uniformly with replacement, adds `N(0, sigma^2 I)` to its gradient, steps
/// by `gamma` and projects onto the ball. Deterministic per `pp.seed`.
pub fn dpsgd(d: &Dataset, c: &LossConstants, pp: &PrivacyParams, cfg: &DpSgdConfig) -> Result<LinearModel> {
    dpsgd_stream(d, c, pp, cfg, 0)
}

/// [`dpsgd`] drawing from substream `stream`.
pub fn dpsgd_stream(
    d: &Dataset,
    c: &LossConstants,
    pp: &PrivacyParams,
    cfg: &DpSgdConfig,
    stream: u64,
) -> Result<LinearModel> {
    if !(cfg.step > 0.0) || cfg.step > (1.0 + 1e-12) / (2.0 * c.smoothness) {
        return arg_err(format!(
            "step {} must lie in (0, 1/(2 beta)] = (0, {}]",
            cfg.step,
            1.0 / (2.0 * c.smoothness)
        ));
    }
    if !(cfg.sigma2 >= 0.0) || !cfg.sigma2.is_finite() {
        return arg_err(format!("sigma2 must be finite and nonnegative, got {}", cfg.sigma2));
    }
    if !(cfg.radius > 0.0) {
        return arg_err(format!("radius must be positive, got {}", cfg.radius));
    }
    let dim = d.dim();
    let labels = d.num_labels();
    let sigma = cfg.sigma2.sqrt();
    let mut rng: StreamRng = substream(pp.seed, stream);
    let mut w = vec![0.0; labels * dim];
    for _ in 0..cfg.iterations {
        let i = rng.random_range(0..d.n());
        let g = gradient_raw(&w, dim, &d.examples()[i], c.lambda);
        let next: Vec<f64> = w
            .iter()
            .zip(&g)
            .map(|(wi, gi)| wi - cfg.step * (gi + sigma * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        w = project_weights(next, cfg.radius);
    }
    Ok(LinearModel::from_raw(w, labels, dim, cfg.radius))
}

/// DP-SGD distance bound together with the step count and noise it assumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpSgdBound {
    pub distance: f64,
    pub iterations: usize,
    pub sigma2: f64,
    /// Set when `h^0` is already within the noise floor; `distance` is then
    /// the supplied `||h^0 - h*||` bound and no steps are needed.
    pub degenerate: bool,
}

/// [`dpsgd_distance_bound_with`] using the default noise exponent.
pub fn dpsgd_distance_bound(c: &LossConstants, n: usize, pp: &PrivacyParams, h0_dist_bound: f64) -> DpSgdBound {
    dpsgd_distance_bound_with(c, n, pp, h0_dist_bound, NoiseExponent::default())
}

/// Bound on `||h^T - h*||` holding with probability `1 - zeta`.
///
/// With `M^2 = 64 Lambda^2 log(2/delta) / (n^2 eps^2)` and
/// `a = mu beta h0^2 / (2 M^2)`, uses `T = ceil((2 beta / mu) ln a)` steps and
/// returns the square root of
/// `512 Lambda^2 log(2/delta) / (zeta mu^2 n^2 eps^2) * ln a * ln(6 beta ln a / (mu delta))`.
/// `exponent` only affects the reported `sigma2`.
pub fn dpsgd_distance_bound_with(
    c: &LossConstants,
    n: usize,
    pp: &PrivacyParams,
    h0_dist_bound: f64,
    exponent: NoiseExponent,
) -> DpSgdBound {
    let lip = c.lipschitz;
    let mu = c.strong_convexity();
    let beta = c.smoothness;
    let nf = n as f64;
    let eps = pp.epsilon;
    let delta = pp.delta;
    let m2 = 64.0 * lip * lip * (2.0 / delta).ln() / (nf * nf * eps * eps);
    let a = mu * beta * h0_dist_bound * h0_dist_bound / (2.0 * m2);
    if a <= 1.0 {
        return DpSgdBound {
            distance: h0_dist_bound,
            iterations: 0,
            sigma2: 0.0,
            degenerate: true,
        };
    }
    let ln_a = a.ln();
    let iterations = ((2.0 * beta / mu * ln_a).ceil() as usize).max(1);
    let v = 512.0 * lip * lip * (2.0 / delta).ln() / (pp.zeta * mu * mu * nf * nf * eps * eps)
        * ln_a
        * (6.0 * beta * ln_a / (mu * delta)).ln();
    DpSgdBound {
        distance: v.max(0.0).sqrt(),
        iterations,
        sigma2: dpsgd_noise(lip, iterations, n, eps, delta, exponent),
        degenerate: false,
    }
}

/// Gradient second moment at the optimum against the DP-SGD noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceCheck {
    pub sigma_star2: f64,
    pub sigma2: f64,
}

impl VarianceCheck {
    pub fn holds(&self) -> bool {
        self.sigma_star2 <= self.sigma2
    }
}

/// Computes `E_i ||grad l(h*; x_i, y_i)||^2` and warns if it exceeds `sigma2`,
/// which the DP-SGD distance bound assumes does not happen.
pub fn check_gradient_variance(hstar: &LinearModel, d: &Dataset, lambda: f64, sigma2: f64) -> VarianceCheck {
    let check = VarianceCheck {
        sigma_star2: gradient_second_moment(hstar, d, lambda),
        sigma2,
    };
    if !check.holds() {
        warn!(
            "gradient second moment at the optimum ({:e}) exceeds the DP-SGD noise variance ({:e}); the distance bound's assumption fails",
            check.sigma_star2, sigma2
        );
    }
    check
}
