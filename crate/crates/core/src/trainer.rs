//! Ridge-regularized softmax cross-entropy and its deterministic solver.
//!
//! The per-example loss is
//! `l(W; x, y) = logsumexp(W x) - (W x)_y + (lambda / 2) ||W||_F^2`,
//! which is `lambda`-strongly convex. On the ball `||W||_F <= R` its gradient
//! norm is at most `sqrt(2) B + lambda R` (since `||softmax - e_y||_2 <= sqrt(2)`),
//! and `B^2 + lambda` bounds its smoothness.

use crate::dataset::{Dataset, Example};
use crate::error::{arg_err, Error, Result};
use crate::model::{frobenius, project_weights, LinearModel};

/// Constants of the loss the privacy mechanisms are calibrated with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConstants {
    /// Ridge weight; also the strong-convexity modulus `mu`.
    pub lambda: f64,
    /// Lipschitz constant `Lambda` of the per-example loss over the ball.
    pub lipschitz: f64,
    /// Smoothness constant `beta`.
    pub smoothness: f64,
    /// Hypothesis-ball radius `R`.
    pub radius: f64,
    /// Feature norm bound `B`.
    pub feature_norm_bound: f64,
}

impl LossConstants {
    /// Strong convexity modulus `mu` (equal to `lambda`).
    pub fn strong_convexity(&self) -> f64 {
        self.lambda
    }
}

/// `mu = lambda`, `Lambda = sqrt(2) B + lambda R`, `beta = B^2 + lambda`.
pub fn constants(d: &Dataset, lambda: f64, radius: f64) -> Result<LossConstants> {
    constants_for_bound(d.feature_norm_bound(), lambda, radius)
}

/// [`constants`] from an explicit feature norm bound `B`.
pub fn constants_for_bound(feature_norm_bound: f64, lambda: f64, radius: f64) -> Result<LossConstants> {
    if !(lambda > 0.0) {
        return arg_err(format!("lambda must be positive, got {lambda}"));
    }
    if !(radius > 0.0) {
        return arg_err(format!("radius must be positive, got {radius}"));
    }
    let b = feature_norm_bound;
    Ok(LossConstants {
        lambda,
        lipschitz: std::f64::consts::SQRT_2 * b + lambda * radius,
        smoothness: b * b + lambda,
        radius,
        feature_norm_bound: b,
    })
}

fn logits(w: &[f64], dim: usize, x: &[f64]) -> Vec<f64> {
    w.chunks_exact(dim)
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Softmax probabilities and log-sum-exp of `z`.
fn softmax(z: &[f64]) -> (Vec<f64>, f64) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    (exps.iter().map(|e| e / sum).collect(), max + sum.ln())
}

fn cross_entropy(w: &[f64], dim: usize, e: &Example) -> f64 {
    let z = logits(w, dim, &e.features);
    let (_, lse) = softmax(&z);
    lse - z[e.label]
}

/// Adds `(softmax(Wx) - e_y) x^T` into `acc`, scaled by `scale`.
fn accumulate_data_gradient(w: &[f64], dim: usize, e: &Example, scale: f64, acc: &mut [f64]) {
    let z = logits(w, dim, &e.features);
    let (mut probs, _) = softmax(&z);
    probs[e.label] -= 1.0;
    for (y, r) in probs.iter().enumerate() {
        let coef = r * scale;
        if coef == 0.0 {
            continue;
        }
        for (a, x) in acc[y * dim..(y + 1) * dim].iter_mut().zip(&e.features) {
            *a += coef * x;
        }
    }
}

/// Regularized empirical risk `(1/n) sum_i CE_i + (lambda/2) ||W||_F^2`.
pub fn loss(m: &LinearModel, d: &Dataset, lambda: f64) -> f64 {
    loss_raw(m.weights(), m.dim(), d, lambda)
}

fn loss_raw(w: &[f64], dim: usize, d: &Dataset, lambda: f64) -> f64 {
    let ce: f64 = d.examples().iter().map(|e| cross_entropy(w, dim, e)).sum();
    let sq: f64 = w.iter().map(|v| v * v).sum();
    ce / d.n() as f64 + 0.5 * lambda * sq
}

/// Per-example gradient `(softmax(Wx) - onehot(y)) x^T + lambda W`, row-major.
pub fn gradient(m: &LinearModel, example: &Example, lambda: f64) -> Vec<f64> {
    gradient_raw(m.weights(), m.dim(), example, lambda)
}

pub(crate) fn gradient_raw(w: &[f64], dim: usize, example: &Example, lambda: f64) -> Vec<f64> {
    let mut g: Vec<f64> = w.iter().map(|v| lambda * v).collect();
    accumulate_data_gradient(w, dim, example, 1.0, &mut g);
    g
}

/// Gradient of the regularized empirical risk.
pub fn full_gradient(m: &LinearModel, d: &Dataset, lambda: f64) -> Vec<f64> {
    full_gradient_raw(m.weights(), m.dim(), d, lambda)
}

fn full_gradient_raw(w: &[f64], dim: usize, d: &Dataset, lambda: f64) -> Vec<f64> {
    let mut g = vec![0.0; w.len()];
    let inv_n = 1.0 / d.n() as f64;
    for e in d.examples() {
        accumulate_data_gradient(w, dim, e, inv_n, &mut g);
    }
    for (gi, wi) in g.iter_mut().zip(w) {
        *gi += lambda * wi;
    }
    g
}

/// `E_i ||grad l(W; x_i, y_i)||^2` over the dataset.
pub fn gradient_second_moment(m: &LinearModel, d: &Dataset, lambda: f64) -> f64 {
    let total: f64 = d
        .examples()
        .iter()
        .map(|e| gradient(m, e, lambda).iter().map(|v| v * v).sum::<f64>())
        .sum();
    total / d.n() as f64
}

/// Solver settings for [`fit_erm_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub lambda: f64,
    /// Stop once the (projected) gradient norm is at most `tol`.
    pub tol: f64,
    pub max_iters: usize,
    /// Fixed ball radius. When `None` the problem is unconstrained and the
    /// returned model gets `R = 2 ||h*||_F`.
    pub radius: Option<f64>,
    /// Record the objective at every iterate.
    pub trace: bool,
}

impl FitOptions {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            tol: 1e-10,
            max_iters: 200_000,
            radius: None,
            trace: false,
        }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn radius(mut self, radius: f64) -> Self {
        self.radius = Some(radius);
        self
    }

    pub fn trace(mut self, on: bool) -> Self {
        self.trace = on;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub model: LinearModel,
    pub iterations: usize,
    /// Stationarity measure at the returned model.
    pub grad_norm: f64,
    /// Objective values at each iterate, when requested.
    pub losses: Vec<f64>,
}

/// Minimizes the regularized risk by full-batch gradient descent with step
/// `1 / beta`, starting from zero (see [`fit_erm_with`]).
pub fn fit_erm(d: &Dataset, lambda: f64, tol: f64, max_iters: usize) -> Result<LinearModel> {
    fit_erm_with(d, &FitOptions::new(lambda).tol(tol).max_iters(max_iters)).map(|o| o.model)
}

/// Deterministic (projected) gradient descent; bit-reproducible for fixed inputs.
pub fn fit_erm_with(d: &Dataset, opts: &FitOptions) -> Result<FitOutcome> {
    let lambda = opts.lambda;
    if !(lambda > 0.0) {
        return arg_err(format!("lambda must be positive, got {lambda}"));
    }
    if !(opts.tol > 0.0) {
        return arg_err(format!("tol must be positive, got {}", opts.tol));
    }
    if let Some(r) = opts.radius {
        if !(r > 0.0) {
            return arg_err(format!("radius must be positive, got {r}"));
        }
    }
    let dim = d.dim();
    let labels = d.num_labels();
    let b = d.feature_norm_bound();
    let beta = b * b + lambda;
    let step = 1.0 / beta;
    let mut w = vec![0.0; labels * dim];
    let mut losses = Vec::new();
    let mut grad_norm = f64::INFINITY;
    for iter in 0..=opts.max_iters {
        if opts.trace {
            losses.push(loss_raw(&w, dim, d, lambda));
        }
        let g = full_gradient_raw(&w, dim, d, lambda);
        let next: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - step * gi).collect();
        let next = match opts.radius {
            Some(r) => project_weights(next, r),
            None => next,
        };
        grad_norm = match opts.radius {
            None => frobenius(&g),
            Some(_) => {
                beta * w
                    .iter()
                    .zip(&next)
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt()
            }
        };
        if grad_norm <= opts.tol {
            let radius = match opts.radius {
                Some(r) => r,
                None => {
                    let r = 2.0 * frobenius(&w);
                    if r > 0.0 {
                        r
                    } else {
                        1.0
                    }
                }
            };
            return Ok(FitOutcome {
                model: LinearModel::new(w, labels, dim, radius)?,
                iterations: iter,
                grad_norm,
                losses,
            });
        }
        w = next;
    }
    Err(Error::Convergence {
        iterations: opts.max_iters,
        grad_norm,
    })
}
