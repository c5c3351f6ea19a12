//! Linear multi-class hypotheses `h(x, y) = W_y . x`.
//!
//! The hypothesis norm is the Frobenius norm of `W`, so model distances,
//! ball projections and the privacy noise all live in the same Euclidean
//! space of `labels * p` parameters.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{arg_err, Error, Result};

/// Weight matrix with one row per label, plus the hypothesis-ball radius.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    weights: Vec<f64>,
    num_labels: usize,
    dim: usize,
    radius: f64,
}

impl LinearModel {
    /// Builds a model from row-major weights. Fails if the shape is wrong,
    /// an entry is not finite, `radius <= 0`, or `||W||_F > radius + 1e-9`.
    pub fn new(weights: Vec<f64>, num_labels: usize, dim: usize, radius: f64) -> Result<Self> {
        if weights.len() != num_labels * dim {
            return arg_err(format!(
                "expected {num_labels}x{dim} weights, got {}",
                weights.len()
            ));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return arg_err("non-finite weight");
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return arg_err(format!("radius must be positive and finite, got {radius}"));
        }
        let m = Self {
            weights,
            num_labels,
            dim,
            radius,
        };
        if m.norm() > radius + 1e-9 {
            return arg_err(format!("||W||_F = {} exceeds radius {radius}", m.norm()));
        }
        Ok(m)
    }

    pub fn zeros(num_labels: usize, dim: usize, radius: f64) -> Result<Self> {
        Self::new(vec![0.0; num_labels * dim], num_labels, dim, radius)
    }

    /// Builds a model from rows `W_y`.
    pub fn from_rows(rows: &[Vec<f64>], radius: f64) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return arg_err("ragged weight rows");
        }
        Self::new(rows.concat(), rows.len(), dim, radius)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, label: usize) -> &[f64] {
        &self.weights[label * self.dim..(label + 1) * self.dim]
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of parameters `labels * p`.
    pub fn num_params(&self) -> usize {
        self.weights.len()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Same weights, different ball radius (must still contain `W`).
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(self.weights.clone(), self.num_labels, self.dim, radius)
    }

    /// `||W||_F`.
    pub fn norm(&self) -> f64 {
        frobenius(&self.weights)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return arg_err(format!("feature length {} != model dimension {}", x.len(), self.dim));
        }
        Ok(())
    }

    /// All label scores `W x`.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.weights.chunks_exact(self.dim).map(|row| dot(row, x)).collect())
    }

    /// `argmax_y W_y . x`; ties go to the lowest label id.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let scores = self.scores(x)?;
        let mut best = 0;
        for (y, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = y;
            }
        }
        Ok(best)
    }

    /// Confidence margin `W_y . x - max_{y' != y} W_{y'} . x`.
    pub fn margin(&self, x: &[f64], y: usize) -> Result<f64> {
        if self.num_labels < 2 {
            return Err(Error::Unsupported("margin needs at least two labels".into()));
        }
        if y >= self.num_labels {
            return arg_err(format!("label {y} out of range"));
        }
        let scores = self.scores(x)?;
        let other = scores
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != y)
            .map(|(_, &s)| s)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(scores[y] - other)
    }

    /// Frobenius distance `||W - W'||_F`.
    pub fn distance(&self, other: &LinearModel) -> Result<f64> {
        self.check_shape(other)?;
        Ok(self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub(crate) fn check_shape(&self, other: &LinearModel) -> Result<()> {
        if self.num_labels != other.num_labels || self.dim != other.dim {
            return arg_err(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.num_labels, self.dim, other.num_labels, other.dim
            ));
        }
        Ok(())
    }

    /// Radial projection onto the Frobenius ball of radius `radius`; the
    /// result carries that radius.
    pub fn project(&self, radius: f64) -> Result<LinearModel> {
        if !(radius > 0.0) {
            return arg_err(format!("projection radius must be positive, got {radius}"));
        }
        Ok(Self {
            weights: project_weights(self.weights.clone(), radius),
            num_labels: self.num_labels,
            dim: self.dim,
            radius,
        })
    }

    /// Plain-text matrix format (see [`LinearModel::parse`]).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} {:?}", self.num_labels, self.dim, self.radius);
        for row in self.weights.chunks_exact(self.dim.max(1)) {
            let line: Vec<String> = row.iter().map(|w| format!("{w:?}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Parses the text model format:
    ///
    /// ```text
    /// <labels> <p> <R>
    /// <W_0,0> <W_0,1> ... <W_0,p-1>
    /// ...                              (one line per label)
    /// ```
    ///
    /// Fields are separated by single spaces; numbers use shortest
    /// round-trip decimal formatting so parsing restores them exactly.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse {
            row: 1,
            message: "empty model file".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                row: 1,
                message: "header must be `labels p R`".into(),
            });
        }
        let bad = |row: usize, what: &str| Error::Parse {
            row,
            message: format!("invalid {what}"),
        };
        let num_labels: usize = fields[0].parse().map_err(|_| bad(1, "label count"))?;
        let dim: usize = fields[1].parse().map_err(|_| bad(1, "dimension"))?;
        let radius: f64 = fields[2].parse().map_err(|_| bad(1, "radius"))?;
        let mut weights = Vec::with_capacity(num_labels * dim);
        for y in 0..num_labels {
            let row_no = y + 2;
            let line = lines.next().ok_or_else(|| bad(row_no, "missing weight row"))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|_| bad(row_no, "weight")))
                .collect::<Result<_>>()?;
            if row.len() != dim {
                return Err(bad(row_no, "row length"));
            }
            weights.extend(row);
        }
        if lines.next().is_some() {
            return Err(bad(num_labels + 2, "trailing content"));
        }
        Self::new(weights, num_labels, dim, radius)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub(crate) fn from_raw(weights: Vec<f64>, num_labels: usize, dim: usize, radius: f64) -> Self {
        debug_assert_eq!(weights.len(), num_labels * dim);
        Self {
            weights,
            num_labels,
            dim,
            radius,
        }
    }
}

/// Pointwise Lipschitz constant of the margin for linear models, `2 ||x||_2`.
pub fn pointwise_lipschitz(x: &[f64]) -> f64 {
    2.0 * frobenius(x)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

pub(crate) fn frobenius(w: &[f64]) -> f64 {
    w.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn project_weights(mut w: Vec<f64>, radius: f64) -> Vec<f64> {
    let norm = frobenius(&w);
    if norm > radius {
        let scale = radius / norm;
        w.iter_mut().for_each(|v| *v *= scale);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eye() -> LinearModel {
        LinearModel::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], 10.0).unwrap()
    }

    #[test]
    fn predict_examples() {
        assert_eq!(eye().predict(&[2.0, 0.0]).unwrap(), 0);
        assert_eq!(eye().predict(&[0.0, 3.0]).unwrap(), 1);
        let zero = LinearModel::zeros(3, 2, 1.0).unwrap();
        assert_eq!(zero.predict(&[5.0, -1.0]).unwrap(), 0);
        assert!(eye().predict(&[1.0]).is_err());
    }

    #[test]
    fn margin_examples() {
        assert_eq!(eye().margin(&[2.0, 0.0], 0).unwrap(), 2.0);
        assert_eq!(eye().margin(&[2.0, 0.0], 1).unwrap(), -2.0);
        let zero = LinearModel::zeros(2, 2, 1.0).unwrap();
        assert_eq!(zero.margin(&[2.0, 7.0], 1).unwrap(), 0.0);
        let single = LinearModel::zeros(1, 2, 1.0).unwrap();
        assert!(matches!(single.margin(&[1.0, 1.0], 0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(pointwise_lipschitz(&[3.0, 4.0, 0.0]), 10.0);
        assert_eq!(pointwise_lipschitz(&[0.0, 0.0]), 0.0);
        assert_eq!(pointwise_lipschitz(&[1.0, 1.0, 1.0, 1.0]), 4.0);
    }

    #[test]
    fn distance_examples() {
        let m = eye();
        assert_eq!(m.distance(&m).unwrap(), 0.0);
        let a = LinearModel::from_rows(&[vec![3.0, 0.0], vec![0.0, 4.0]], 10.0).unwrap();
        let z = LinearModel::zeros(2, 2, 10.0).unwrap();
        assert_eq!(a.distance(&z).unwrap(), 5.0);
        let b = LinearModel::from_rows(&[vec![5.0, 0.0], vec![0.0, 0.0]], 10.0).unwrap();
        assert_eq!(b.distance(&z).unwrap(), 5.0);
        assert!(a.distance(&LinearModel::zeros(2, 3, 1.0).unwrap()).is_err());
    }

    #[test]
    fn project_examples() {
        let m = LinearModel::from_rows(&[vec![2.0, 0.0]], 10.0).unwrap();
        assert_eq!(m.project(3.0).unwrap().weights(), m.weights());
        let big = LinearModel::from_rows(&[vec![0.0, 4.0]], 10.0).unwrap();
        let p = big.project(2.0).unwrap();
        assert_eq!(p.weights(), &[0.0, 2.0]);
        assert_eq!(p.norm(), 2.0);
        let z = LinearModel::zeros(2, 2, 1.0).unwrap();
        assert_eq!(z.project(0.5).unwrap().weights(), z.weights());
        assert!(z.project(0.0).is_err());
    }

    #[test]
    fn constructor_rejects_outside_ball() {
        assert!(LinearModel::from_rows(&[vec![3.0, 4.0]], 4.0).is_err());
        assert!(LinearModel::from_rows(&[vec![3.0, 4.0]], 5.0).is_ok());
        assert!(LinearModel::new(vec![f64::NAN], 1, 1, 1.0).is_err());
    }

    #[test]
    fn text_format() {
        let m = LinearModel::from_rows(&[vec![0.1, -2.0], vec![1e-300, 3.0]], 7.5).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("2 2 7.5\n0.1 -2.0\n"));
        assert_eq!(LinearModel::parse(&text).unwrap(), m);
        assert!(LinearModel::parse("2 2 1.0\n0 0\n").is_err());
        assert!(LinearModel::parse("1 2 1.0\n0 0 0\n").is_err());
        assert!(LinearModel::parse("").is_err());
    }

    fn model_strategy(labels: usize, dim: usize) -> impl Strategy<Value = LinearModel> {
        prop::collection::vec(-3.0f64..3.0, labels * dim)
            .prop_map(move |w| LinearModel::new(w, labels, dim, 100.0).unwrap())
    }

    proptest! {
        #[test]
        fn margin_sign_matches_prediction(
            m in model_strategy(3, 3),
            x in prop::collection::vec(-2.0f64..2.0, 3),
            y in 0usize..3,
        ) {
            let rho = m.margin(&x, y).unwrap();
            let pred = m.predict(&x).unwrap();
            if rho > 0.0 { prop_assert_eq!(pred, y); }
            if rho < 0.0 { prop_assert_ne!(pred, y); }
        }

        #[test]
        fn margin_is_lipschitz(
            a in model_strategy(3, 4),
            b in model_strategy(3, 4),
            x in prop::collection::vec(-2.0f64..2.0, 4),
            y in 0usize..3,
        ) {
            let diff = (a.margin(&x, y).unwrap() - b.margin(&x, y).unwrap()).abs();
            prop_assert!(diff <= pointwise_lipschitz(&x) * a.distance(&b).unwrap() + 1e-9);
        }

        #[test]
        fn projection_idempotent_and_nonexpansive(
            a in model_strategy(2, 3),
            b in model_strategy(2, 3),
            r in 0.1f64..5.0,
        ) {
            let pa = a.project(r).unwrap();
            let pb = b.project(r).unwrap();
            prop_assert!(pa.norm() <= r * (1.0 + 1e-12));
            let ppa = pa.project(r).unwrap();
            prop_assert!(ppa.distance(&pa).unwrap() <= 1e-12 * r);
            prop_assert!(pa.distance(&pb).unwrap() <= a.distance(&b).unwrap() + 1e-12);
        }

        #[test]
        fn text_round_trip(m in model_strategy(2, 3)) {
            prop_assert_eq!(LinearModel::parse(&m.to_text()).unwrap(), m);
        }
    }
}
