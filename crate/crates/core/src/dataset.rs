//! Labeled classification data with a sensitive attribute.
//!
//! Every example carries its features with a constant `1.0` intercept feature
//! appended as the last coordinate, so a linear model's ridge penalty covers
//! the intercept and strong convexity stays exactly `lambda`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{arg_err, Error, Result};
use crate::rng::substream;

/// One labeled example `(x, s, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    /// Feature vector including the trailing intercept feature.
    pub features: Vec<f64>,
    pub sensitive: usize,
    pub label: usize,
}

/// An immutable collection of examples plus the id tables used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<Example>,
    num_labels: usize,
    num_sensitive: usize,
    feature_norm_bound: f64,
    feature_names: Vec<String>,
    sensitive_column: String,
    label_column: String,
    sensitive_names: Vec<String>,
    label_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from examples whose features already include the
    /// intercept. Label and sensitive names default to their numeric ids.
    pub fn new(examples: Vec<Example>, num_labels: usize, num_sensitive: usize) -> Result<Self> {
        let dim = examples.first().map(|e| e.features.len()).ok_or(Error::EmptyDataset)?;
        let feature_names = (0..dim.saturating_sub(1)).map(|j| format!("x{j}")).collect();
        Self::with_names(
            examples,
            feature_names,
            ("sensitive".into(), (0..num_sensitive).map(|s| s.to_string()).collect()),
            ("label".into(), (0..num_labels).map(|y| y.to_string()).collect()),
        )
    }

    fn with_names(
        examples: Vec<Example>,
        feature_names: Vec<String>,
        sensitive: (String, Vec<String>),
        label: (String, Vec<String>),
    ) -> Result<Self> {
        let (sensitive_column, sensitive_names) = sensitive;
        let (label_column, label_names) = label;
        let num_sensitive = sensitive_names.len();
        let num_labels = label_names.len();
        if examples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let dim = feature_names.len() + 1;
        for (i, e) in examples.iter().enumerate() {
            if e.features.len() != dim {
                return arg_err(format!(
                    "example {i} has {} features, expected {dim}",
                    e.features.len()
                ));
            }
            if e.features.iter().any(|v| !v.is_finite()) {
                return arg_err(format!("example {i} has a non-finite feature"));
            }
            if e.label >= num_labels {
                return arg_err(format!("example {i} has label {} >= {num_labels}", e.label));
            }
            if e.sensitive >= num_sensitive {
                return arg_err(format!(
                    "example {i} has sensitive value {} >= {num_sensitive}",
                    e.sensitive
                ));
            }
        }
        let feature_norm_bound = max_norm(&examples);
        Ok(Self {
            examples,
            num_labels,
            num_sensitive,
            feature_norm_bound,
            feature_names,
            sensitive_column,
            label_column,
            sensitive_names,
            label_names,
        })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn n(&self) -> usize {
        self.examples.len()
    }

    /// Feature dimension `p`, intercept included.
    pub fn dim(&self) -> usize {
        self.feature_names.len() + 1
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn num_sensitive(&self) -> usize {
        self.num_sensitive
    }

    /// `B = max_i ||x_i||_2`.
    pub fn feature_norm_bound(&self) -> f64 {
        self.feature_norm_bound
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn sensitive_names(&self) -> &[String] {
        &self.sensitive_names
    }

    pub fn label_column(&self) -> &str {
        &self.label_column
    }

    pub fn sensitive_column(&self) -> &str {
        &self.sensitive_column
    }

    /// The examples at `indices` (in that order), keeping id tables.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut examples = Vec::with_capacity(indices.len());
        for &i in indices {
            let e = self
                .examples
                .get(i)
                .ok_or_else(|| Error::Argument(format!("index {i} out of range")))?;
            examples.push(e.clone());
        }
        if examples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let feature_norm_bound = max_norm(&examples);
        Ok(Self {
            examples,
            feature_norm_bound,
            ..self.clone_meta()
        })
    }

    /// Replaces example `index` by `replacement`; used to build neighboring datasets.
    pub fn with_replaced(&self, index: usize, replacement: Example) -> Result<Self> {
        let mut examples = self.examples.clone();
        match examples.get_mut(index) {
            Some(slot) => *slot = replacement,
            None => return arg_err(format!("index {index} out of range")),
        }
        Self::with_names(
            examples,
            self.feature_names.clone(),
            (self.sensitive_column.clone(), self.sensitive_names.clone()),
            (self.label_column.clone(), self.label_names.clone()),
        )
    }

    fn clone_meta(&self) -> Self {
        Self {
            examples: Vec::new(),
            num_labels: self.num_labels,
            num_sensitive: self.num_sensitive,
            feature_norm_bound: 0.0,
            feature_names: self.feature_names.clone(),
            sensitive_column: self.sensitive_column.clone(),
            label_column: self.label_column.clone(),
            sensitive_names: self.sensitive_names.clone(),
            label_names: self.label_names.clone(),
        }
    }
}

fn max_norm(examples: &[Example]) -> f64 {
    examples
        .iter()
        .map(|e| e.features.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Column roles for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub sensitive_col: String,
    pub label_col: String,
    /// Fixed value order for the label column. When absent, ids follow
    /// first appearance in the file.
    pub label_values: Option<Vec<String>>,
    /// Fixed value order for the sensitive column.
    pub sensitive_values: Option<Vec<String>>,
}

impl Schema {
    pub fn new(sensitive_col: impl Into<String>, label_col: impl Into<String>) -> Self {
        Self {
            sensitive_col: sensitive_col.into(),
            label_col: label_col.into(),
            label_values: None,
            sensitive_values: None,
        }
    }

    pub fn with_label_values(mut self, values: Vec<String>) -> Self {
        self.label_values = Some(values);
        self
    }

    pub fn with_sensitive_values(mut self, values: Vec<String>) -> Self {
        self.sensitive_values = Some(values);
        self
    }
}

/// Dense id assignment for a categorical column.
struct IdTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
    fixed: bool,
}

impl IdTable {
    fn new(fixed: Option<&Vec<String>>) -> Self {
        match fixed {
            Some(values) => Self {
                names: values.clone(),
                index: values.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect(),
                fixed: true,
            },
            None => Self {
                names: Vec::new(),
                index: HashMap::new(),
                fixed: false,
            },
        }
    }

    fn id(&mut self, value: &str, row: usize, column: &str) -> Result<usize> {
        if let Some(&id) = self.index.get(value) {
            return Ok(id);
        }
        if self.fixed {
            return Err(Error::Parse {
                row,
                message: format!("value {value:?} of column {column:?} is not a declared value"),
            });
        }
        let id = self.names.len();
        self.names.push(value.to_string());
        self.index.insert(value.to_string(), id);
        Ok(id)
    }
}

/// Reads a CSV file (see [`read_csv`]).
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    read_csv(File::open(path)?, schema)
}

/// Reads comma-separated data with a mandatory header.
///
/// Rows are numbered from 1 for the first data row in parse errors.
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyDataset);
    }
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("missing column {name:?}")))
    };
    let s_col = position(&schema.sensitive_col)?;
    let y_col = position(&schema.label_col)?;
    if s_col == y_col {
        return Err(Error::Schema("sensitive and label columns coincide".into()));
    }
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != s_col && c != y_col).collect();
    let feature_names = feature_cols.iter().map(|&c| headers[c].trim().to_string()).collect();

    let mut sensitive = IdTable::new(schema.sensitive_values.as_ref());
    let mut labels = IdTable::new(schema.label_values.as_ref());
    let mut examples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        let mut features = Vec::with_capacity(feature_cols.len() + 1);
        for &c in &feature_cols {
            let cell = record[c].trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                message: format!("non-numeric value {cell:?} in column {:?}", &headers[c]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("non-finite value in column {:?}", &headers[c]),
                });
            }
            features.push(v);
        }
        features.push(1.0);
        let s = sensitive.id(record[s_col].trim(), row, &schema.sensitive_col)?;
        let y = labels.id(record[y_col].trim(), row, &schema.label_col)?;
        examples.push(Example {
            features,
            sensitive: s,
            label: y,
        });
    }
    if examples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Dataset::with_names(
        examples,
        feature_names,
        (schema.sensitive_col.clone(), sensitive.names),
        (schema.label_col.clone(), labels.names),
    )
}

/// Writes `d` as CSV (features without the intercept, then the sensitive and
/// label columns). Floats use shortest round-trip formatting.
pub fn write_csv<W: Write>(d: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = d.feature_names.iter().map(String::as_str).collect();
    header.push(&d.sensitive_column);
    header.push(&d.label_column);
    w.write_record(&header)?;
    for e in &d.examples {
        let mut row: Vec<String> = e.features[..e.features.len() - 1]
            .iter()
            .map(|v| format!("{v:?}"))
            .collect();
        row.push(d.sensitive_names[e.sensitive].clone());
        row.push(d.label_names[e.label].clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv(d, File::create(path)?)
}

/// Covariance of one synthetic cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Diagonal(Vec<f64>),
    /// Row-major, symmetric positive semi-definite.
    Full(Vec<f64>),
}

/// Gaussian class-conditional cell `(label, sensitive)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub label: usize,
    pub sensitive: usize,
    pub count: usize,
    pub mean: Vec<f64>,
    pub covariance: Covariance,
}

/// Recipe for a synthetic dataset: one Gaussian per (label, sensitive) cell.
///
/// Text grammar (one `key = value` per line, `#` starts a comment):
///
/// ```text
/// features = 2
/// labels = 2
/// sensitive = 2
/// cell.<label>.<sensitive>.count = 500
/// cell.<label>.<sensitive>.mean = 2.0, 0.0
/// cell.<label>.<sensitive>.var = 1.0, 1.0        # diagonal covariance
/// cell.<label>.<sensitive>.cov = 1, 0, 0, 1      # or full, row-major
/// ```
///
/// Unlisted cells get count 0; a missing mean is zero and a missing
/// covariance is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub features: usize,
    pub num_labels: usize,
    pub num_sensitive: usize,
    pub cells: Vec<CellSpec>,
}

impl SyntheticSpec {
    /// Same mean/covariance shape for every cell, `count` examples each.
    pub fn uniform(features: usize, num_labels: usize, num_sensitive: usize, count: usize) -> Self {
        let mut cells = Vec::new();
        for label in 0..num_labels {
            for sensitive in 0..num_sensitive {
                cells.push(CellSpec {
                    label,
                    sensitive,
                    count,
                    mean: vec![0.0; features],
                    covariance: Covariance::Diagonal(vec![1.0; features]),
                });
            }
        }
        Self {
            features,
            num_labels,
            num_sensitive,
            cells,
        }
    }

    pub fn cell_mut(&mut self, label: usize, sensitive: usize) -> Option<&mut CellSpec> {
        self.cells
            .iter_mut()
            .find(|c| c.label == label && c.sensitive == sensitive)
    }

    pub fn total(&self) -> usize {
        self.cells.iter().map(|c| c.count).sum()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg_err = |line: usize, msg: String| Error::Config(format!("line {line}: {msg}"));
        let mut scalars: HashMap<&str, usize> = HashMap::new();
        let mut cell_entries: Vec<(usize, usize, usize, &str, &str)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(line_no, "expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "features" | "labels" | "sensitive" => {
                    let v = value
                        .parse()
                        .map_err(|_| cfg_err(line_no, format!("{key} must be an integer")))?;
                    scalars.insert(key, v);
                }
                _ => {
                    let parts: Vec<&str> = key.split('.').collect();
                    if parts.len() != 4 || parts[0] != "cell" {
                        return Err(cfg_err(line_no, format!("unknown key {key:?}")));
                    }
                    let y = parts[1]
                        .parse()
                        .map_err(|_| cfg_err(line_no, "cell label must be an integer".into()))?;
                    let s = parts[2]
                        .parse()
                        .map_err(|_| cfg_err(line_no, "cell sensitive value must be an integer".into()))?;
                    cell_entries.push((line_no, y, s, parts[3], value));
                }
            }
        }
        let get = |k: &str| {
            scalars
                .get(k)
                .copied()
                .ok_or_else(|| Error::Config(format!("missing key {k:?}")))
        };
        let mut spec = Self::uniform(get("features")?, get("labels")?, get("sensitive")?, 0);
        let features = spec.features;
        for (line_no, y, s, field, value) in cell_entries {
            let cell = spec
                .cell_mut(y, s)
                .ok_or_else(|| cfg_err(line_no, format!("cell ({y},{s}) out of range")))?;
            let floats = || -> Result<Vec<f64>> {
                value
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<f64>()
                            .map_err(|_| cfg_err(line_no, format!("bad number {t:?}")))
                    })
                    .collect()
            };
            match field {
                "count" => {
                    cell.count = value
                        .parse()
                        .map_err(|_| cfg_err(line_no, "count must be an integer".into()))?
                }
                "mean" => cell.mean = floats()?,
                "var" => cell.covariance = Covariance::Diagonal(floats()?),
                "cov" => cell.covariance = Covariance::Full(floats()?),
                other => return Err(cfg_err(line_no, format!("unknown cell field {other:?}"))),
            }
            let expected_cov = match &cell.covariance {
                Covariance::Diagonal(_) => features,
                Covariance::Full(_) => features * features,
            };
            let cov_len = match &cell.covariance {
                Covariance::Diagonal(v) | Covariance::Full(v) => v.len(),
            };
            if cell.mean.len() != features || cov_len != expected_cov {
                return Err(cfg_err(line_no, "dimension does not match `features`".into()));
            }
        }
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Lower-triangular factor `L` with `L L^T = cov`, tolerating zero pivots.
fn psd_factor(cov: &[f64], dim: usize) -> Result<Vec<f64>> {
    let scale = (0..dim).map(|i| cov[i * dim + i].abs()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-12 * scale;
    for i in 0..dim {
        for j in 0..i {
            if (cov[i * dim + j] - cov[j * dim + i]).abs() > tol {
                return arg_err("covariance is not symmetric");
            }
        }
    }
    let mut l = vec![0.0; dim * dim];
    for j in 0..dim {
        let mut d = cov[j * dim + j];
        for k in 0..j {
            d -= l[j * dim + k] * l[j * dim + k];
        }
        if d < -tol {
            return arg_err("covariance is not positive semi-definite");
        }
        if d <= tol {
            // Zero pivot: the rest of this column must vanish too.
            for i in j + 1..dim {
                let mut v = cov[i * dim + j];
                for k in 0..j {
                    v -= l[i * dim + k] * l[j * dim + k];
                }
                if v.abs() > 1e-9 * scale {
                    return arg_err("covariance is not positive semi-definite");
                }
            }
            continue;
        }
        let djj = d.sqrt();
        l[j * dim + j] = djj;
        for i in j + 1..dim {
            let mut v = cov[i * dim + j];
            for k in 0..j {
                v -= l[i * dim + k] * l[j * dim + k];
            }
            l[i * dim + j] = v / djj;
        }
    }
    Ok(l)
}

/// Draws a dataset from `spec`. Cells are emitted in (label, sensitive)
/// order; the output is a pure function of `(spec, seed)`.
pub fn synthesize(spec: &SyntheticSpec, seed: u64) -> Result<Dataset> {
    if spec.total() == 0 {
        return Err(Error::EmptyDataset);
    }
    let p = spec.features;
    let mut rng = substream(seed, 0);
    let mut examples = Vec::with_capacity(spec.total());
    let mut cells: Vec<&CellSpec> = spec.cells.iter().collect();
    cells.sort_by_key(|c| (c.label, c.sensitive));
    for cell in cells {
        if cell.label >= spec.num_labels || cell.sensitive >= spec.num_sensitive {
            return arg_err(format!("cell ({},{}) out of range", cell.label, cell.sensitive));
        }
        if cell.mean.len() != p {
            return arg_err("cell mean has the wrong dimension");
        }
        let factor = match &cell.covariance {
            Covariance::Diagonal(v) => {
                if v.len() != p || v.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                    return arg_err("diagonal covariance must have p nonnegative entries");
                }
                let mut l = vec![0.0; p * p];
                for i in 0..p {
                    l[i * p + i] = v[i].sqrt();
                }
                l
            }
            Covariance::Full(v) => {
                if v.len() != p * p {
                    return arg_err("full covariance must have p*p entries");
                }
                psd_factor(v, p)?
            }
        };
        for _ in 0..cell.count {
            let z: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut features: Vec<f64> = (0..p)
                .map(|i| cell.mean[i] + (0..=i).map(|k| factor[i * p + k] * z[k]).sum::<f64>())
                .collect();
            features.push(1.0);
            examples.push(Example {
                features,
                sensitive: cell.sensitive,
                label: cell.label,
            });
        }
    }
    Dataset::new(examples, spec.num_labels, spec.num_sensitive)
}

/// Index sets of a seeded random split; both sorted ascending.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return arg_err(format!("split fraction {fraction} outside (0, 1)"));
    }
    let n_train = (fraction * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return arg_err(format!("split of {n} examples at {fraction} leaves an empty part"));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut substream(seed, 0));
    let mut train = perm[..n_train].to_vec();
    let mut test = perm[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Seeded train/test split; `fraction` is the share kept for training.
pub fn split(d: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(d.n(), fraction, seed)?;
    Ok((d.subset(&train)?, d.subset(&test)?))
}

/// How examples are assigned to fairness groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// One group holding everything.
    Single,
    /// `K = |S|`, group = sensitive id.
    BySensitive,
    /// `K = |Y| * |S|`, group = `label * |S| + sensitive`.
    ByLabelAndSensitive,
}

/// Disjoint cover of a dataset by `K` groups.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPartition {
    pub grouping: Grouping,
    pub k: usize,
    pub assignment: Vec<usize>,
    pub counts: Vec<usize>,
    pub proportions: Vec<f64>,
    num_sensitive: usize,
}

impl GroupPartition {
    pub fn group_of(&self, example: usize) -> usize {
        self.assignment[example]
    }

    pub fn is_empty_group(&self, group: usize) -> bool {
        self.counts[group] == 0
    }

    /// `(label, sensitive)` coordinates of a group, `None` where not applicable.
    pub fn coordinates(&self, group: usize) -> (Option<usize>, Option<usize>) {
        match self.grouping {
            Grouping::Single => (None, None),
            Grouping::BySensitive => (None, Some(group)),
            Grouping::ByLabelAndSensitive => {
                (Some(group / self.num_sensitive), Some(group % self.num_sensitive))
            }
        }
    }

    /// Human-readable group name such as `y=1,s=b`.
    pub fn describe(&self, group: usize, d: &Dataset) -> String {
        match self.coordinates(group) {
            (None, None) => "all".to_string(),
            (None, Some(s)) => format!("s={}", d.sensitive_names()[s]),
            (Some(y), Some(s)) => format!("y={},s={}", d.label_names()[y], d.sensitive_names()[s]),
            (Some(y), None) => format!("y={}", d.label_names()[y]),
        }
    }
}

pub fn partition(d: &Dataset, grouping: Grouping) -> GroupPartition {
    let ns = d.num_sensitive();
    let k = match grouping {
        Grouping::Single => 1,
        Grouping::BySensitive => ns,
        Grouping::ByLabelAndSensitive => d.num_labels() * ns,
    };
    let assignment: Vec<usize> = d
        .examples()
        .iter()
        .map(|e| match grouping {
            Grouping::Single => 0,
            Grouping::BySensitive => e.sensitive,
            Grouping::ByLabelAndSensitive => e.label * ns + e.sensitive,
        })
        .collect();
    let mut counts = vec![0usize; k];
    for &g in &assignment {
        counts[g] += 1;
    }
    let n = d.n() as f64;
    let proportions = counts.iter().map(|&c| c as f64 / n).collect();
    GroupPartition {
        grouping,
        k,
        assignment,
        counts,
        proportions,
        num_sensitive: ns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        Schema::new("s", "y")
    }

    #[test]
    fn loads_three_rows_with_intercept() {
        let csv = "f1,f2,s,y\n1.0,2.0,a,0\n3.0,4.0,b,1\n0.5,0.5,a,1\n";
        let d = read_csv(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.dim(), 3);
        assert_eq!(
            d.examples()[0],
            Example {
                features: vec![1.0, 2.0, 1.0],
                sensitive: 0,
                label: 0
            }
        );
        assert_eq!(d.sensitive_names(), ["a", "b"]);
        assert_eq!(d.label_names(), ["0", "1"]);
        assert_eq!(d.feature_norm_bound(), 26f64.sqrt());
    }

    #[test]
    fn ids_follow_first_appearance() {
        let csv = "s,f,y\nb,1,yes\na,2,no\nb,3,no\n";
        let d = read_csv(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(d.sensitive_names(), ["b", "a"]);
        assert_eq!(d.label_names(), ["yes", "no"]);
        assert_eq!(d.examples()[1].sensitive, 1);
    }

    #[test]
    fn declared_values_fix_ids() {
        let csv = "f,s,y\n1,b,1\n2,a,0\n";
        let s = schema()
            .with_label_values(vec!["0".into(), "1".into()])
            .with_sensitive_values(vec!["a".into(), "b".into()]);
        let d = read_csv(csv.as_bytes(), &s).unwrap();
        assert_eq!(d.examples()[0].label, 1);
        assert_eq!(d.examples()[0].sensitive, 1);
        let bad = "f,s,y\n1,c,1\n";
        assert!(matches!(read_csv(bad.as_bytes(), &s), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn csv_errors() {
        let missing = "f1,s\n1,a\n";
        assert!(matches!(read_csv(missing.as_bytes(), &schema()), Err(Error::Schema(_))));
        let bad = "f1,s,y\n1,a,0\nzz,b,1\n";
        match read_csv(bad.as_bytes(), &schema()) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(read_csv("".as_bytes(), &schema()), Err(Error::EmptyDataset)));
        assert!(matches!(
            read_csv("f1,s,y\n".as_bytes(), &schema()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let csv = "f1,f2,s,y\n0.1,-3.3333333333333335,a,0\n1e-300,2.5,b,1\n";
        let d = read_csv(csv.as_bytes(), &schema()).unwrap();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &schema()).unwrap();
        assert_eq!(d, back);
    }

    fn four_cells(count: usize) -> SyntheticSpec {
        SyntheticSpec::uniform(2, 2, 2, count)
    }

    #[test]
    fn synthesize_is_deterministic() {
        let spec = four_cells(5);
        let a = synthesize(&spec, 7).unwrap();
        let b = synthesize(&spec, 7).unwrap();
        assert_eq!(a.n(), 20);
        assert_eq!(a, b);
        let c = synthesize(&spec, 8).unwrap();
        assert_ne!(a, c);
        assert!(a.examples().iter().all(|e| e.features[2] == 1.0));
    }

    #[test]
    fn synthesize_empty_cell_gives_zero_proportion() {
        let mut spec = four_cells(5);
        spec.cell_mut(1, 0).unwrap().count = 0;
        let d = synthesize(&spec, 1).unwrap();
        let part = partition(&d, Grouping::ByLabelAndSensitive);
        assert_eq!(part.proportions[2], 0.0);
        assert_eq!(d.n(), 15);
        let mut empty = four_cells(0);
        empty.cells.clear();
        assert!(matches!(synthesize(&empty, 1), Err(Error::EmptyDataset)));
    }

    #[test]
    fn synthesize_full_covariance() {
        let mut spec = four_cells(200);
        for c in &mut spec.cells {
            // Rank-one covariance: second coordinate copies the first.
            c.covariance = Covariance::Full(vec![1.0, 1.0, 1.0, 1.0]);
        }
        let d = synthesize(&spec, 3).unwrap();
        assert!(d.examples().iter().all(|e| (e.features[0] - e.features[1]).abs() < 1e-12));
        spec.cells[0].covariance = Covariance::Full(vec![1.0, 2.0, 2.0, 1.0]);
        assert!(synthesize(&spec, 3).is_err());
    }

    #[test]
    fn synthetic_spec_grammar() {
        let text = "features = 2\nlabels = 2\nsensitive = 2 # two groups\n\
                    cell.0.0.count = 3\ncell.0.0.mean = -2, 0\ncell.1.1.count = 4\n\
                    cell.1.1.var = 0.5, 0.25\n";
        let spec = SyntheticSpec::parse(text).unwrap();
        assert_eq!(spec.total(), 7);
        let c = spec.cells.iter().find(|c| c.label == 1 && c.sensitive == 1).unwrap();
        assert_eq!(c.covariance, Covariance::Diagonal(vec![0.5, 0.25]));
        assert!(SyntheticSpec::parse("features = 2\nlabels = 2\nsensitive = 2\nbogus = 1").is_err());
        assert!(SyntheticSpec::parse("features = 2\nlabels = 2\nsensitive = 2\ncell.0.0.mean = 1").is_err());
        assert!(SyntheticSpec::parse("labels = 2\nsensitive = 2").is_err());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = synthesize(&SyntheticSpec::uniform(1, 2, 1, 5), 0).unwrap();
        let (a, b) = split(&d, 0.9, 1).unwrap();
        assert_eq!((a.n(), b.n()), (9, 1));
        assert_eq!(split_indices(10, 0.9, 4).unwrap(), split_indices(10, 0.9, 4).unwrap());
        let (tr, te) = split_indices(20, 0.5, 3).unwrap();
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 20);
        assert!(split(&d, 1.0, 1).is_err());
        assert!(split(&d, 0.0, 1).is_err());
        assert!(split(&d, 0.01, 1).is_err());
    }

    #[test]
    fn partitions() {
        let d = synthesize(&SyntheticSpec::uniform(1, 2, 2, 3), 0).unwrap();
        let p = partition(&d, Grouping::ByLabelAndSensitive);
        assert_eq!(p.k, 4);
        assert_eq!(p.describe(3, &d), "y=1,s=1");
        let p = partition(&d, Grouping::BySensitive);
        assert_eq!(p.k, 2);
        assert!((p.proportions.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let mut spec = SyntheticSpec::uniform(1, 2, 2, 3);
        spec.cell_mut(0, 1).unwrap().count = 0;
        spec.cell_mut(1, 1).unwrap().count = 0;
        let d = synthesize(&spec, 0).unwrap();
        assert_eq!(partition(&d, Grouping::BySensitive).proportions, vec![1.0, 0.0]);
    }
}
