//! Bounds on how much group fairness can move between two nearby models.
//!
//! For an example with margin `rho` under `h` and pointwise Lipschitz
//! constant `L`, no model within distance `dist` of `h` can change whether the
//! example is classified correctly unless `|rho| <= L * dist` ("at risk").
//! Every conditional-accuracy term of a fairness functional therefore moves
//! by at most the at-risk probability of its group, which is bounded here in
//! three ways:
//!
//! * Markov: `E[L / |rho|] * dist`;
//! * truncated Markov: the same expectation restricted to at-risk examples;
//! * Chernoff: `inf_t e^{t dist} E[e^{-t |rho| / L}]`, optionally restricted to
//!   at-risk examples, minimized by golden-section search.
//!
//! Ratio conventions: `L = 0` gives ratio 0 (the margin cannot move), and
//! `rho = 0` with `L > 0` gives `+inf`.

use std::io::Write;

use crate::dataset::{Dataset, GroupPartition};
use crate::error::{arg_err, Result};
use crate::fairness::FairnessSpec;
use crate::flags::Flags;
use crate::model::{dot, pointwise_lipschitz, LinearModel};
use crate::privacy::{dpsgd_distance_bound, outputperturb_distance_bound, PrivacyParams};
use crate::trainer::LossConstants;

/// Per-example `(|rho|, L)` pairs with their group, the only data the bounds use.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginProfile {
    margins: Vec<f64>,
    lipschitz: Vec<f64>,
    groups: Vec<usize>,
    counts: Vec<usize>,
}

impl MarginProfile {
    pub fn from_parts(margins: Vec<f64>, lipschitz: Vec<f64>, groups: Vec<usize>, k: usize) -> Result<Self> {
        if margins.len() != lipschitz.len() || margins.len() != groups.len() {
            return arg_err("margin profile columns differ in length");
        }
        if margins.iter().chain(&lipschitz).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return arg_err("margins and Lipschitz constants must be finite and nonnegative");
        }
        let mut counts = vec![0usize; k];
        for &g in &groups {
            if g >= k {
                return arg_err(format!("group {g} out of range (K = {k})"));
            }
            counts[g] += 1;
        }
        Ok(Self {
            margins,
            lipschitz,
            groups,
            counts,
        })
    }

    pub fn len(&self) -> usize {
        self.margins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.margins.is_empty()
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn margins(&self) -> &[f64] {
        &self.margins
    }

    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn group_size(&self, group: usize) -> usize {
        self.counts[group]
    }

    fn members(&self, group: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.groups
            .iter()
            .zip(self.margins.iter().zip(&self.lipschitz))
            .filter(move |(g, _)| **g == group)
            .map(|(_, (&m, &l))| (m, l))
    }
}

/// `|rho(h, x_i, y_i)|` and `L_i = 2 ||x_i||` for every example.
pub fn margin_profile(m: &LinearModel, d: &Dataset, part: &GroupPartition) -> Result<MarginProfile> {
    let mut margins = Vec::with_capacity(d.n());
    let mut lipschitz = Vec::with_capacity(d.n());
    for e in d.examples() {
        margins.push(m.margin(&e.features, e.label)?.abs());
        lipschitz.push(pointwise_lipschitz(&e.features));
    }
    MarginProfile::from_parts(margins, lipschitz, part.assignment.clone(), part.k)
}

/// Profile whose Lipschitz constants are `2 max_y |(W_y - W'_y) . x| / ||W_y - W'_y||`
/// (rows with `W_y = W'_y` skipped, 0 if all are); margins come from `h`.
/// Only usable when both models are known.
pub fn refined_lipschitz_profile(
    h: &LinearModel,
    hprime: &LinearModel,
    d: &Dataset,
    part: &GroupPartition,
) -> Result<MarginProfile> {
    h.check_shape(hprime)?;
    let diffs: Vec<(Vec<f64>, f64)> = (0..h.num_labels())
        .map(|y| {
            let row: Vec<f64> = h.row(y).iter().zip(hprime.row(y)).map(|(a, b)| a - b).collect();
            let norm = dot(&row, &row).sqrt();
            (row, norm)
        })
        .filter(|(_, norm)| *norm > 0.0)
        .collect();
    let mut margins = Vec::with_capacity(d.n());
    let mut lipschitz = Vec::with_capacity(d.n());
    for e in d.examples() {
        margins.push(h.margin(&e.features, e.label)?.abs());
        let l = diffs
            .iter()
            .map(|(row, norm)| (dot(row, &e.features) / norm).abs())
            .fold(0.0, f64::max);
        lipschitz.push(2.0 * l);
    }
    MarginProfile::from_parts(margins, lipschitz, part.assignment.clone(), part.k)
}

fn ratio(margin: f64, l: f64) -> f64 {
    if l == 0.0 {
        0.0
    } else if margin == 0.0 {
        f64::INFINITY
    } else {
        l / margin
    }
}

fn at_risk(margin: f64, l: f64, dist: f64) -> bool {
    l > 0.0 && margin <= l * dist
}

/// Group mean of `L / |rho|`; 0 with [`Flags::EMPTY_GROUP`] for an empty group.
pub fn mean_ratio(profile: &MarginProfile, group: usize) -> (f64, Flags) {
    let n = profile.group_size(group);
    if n == 0 {
        return (0.0, Flags::EMPTY_GROUP);
    }
    let total: f64 = profile.members(group).map(|(m, l)| ratio(m, l)).sum();
    let flags = if total.is_infinite() { Flags::INFINITE } else { Flags::empty() };
    (total / n as f64, flags)
}

fn weighted_sum(spec: &FairnessSpec, k: usize, mut term: impl FnMut(usize) -> (f64, Flags)) -> (f64, Flags) {
    let mut total = 0.0;
    let mut flags = Flags::empty();
    for (kp, c) in spec.row(k).iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let (v, f) = term(kp);
        total += c.abs() * v;
        flags |= f;
    }
    (total, flags)
}

/// `chi_k = sum_k' |C_k^k'| E[L / |rho| | D_k']`, possibly `+inf`.
pub fn chi(profile: &MarginProfile, spec: &FairnessSpec, k: usize) -> (f64, Flags) {
    weighted_sum(spec, k, |kp| mean_ratio(profile, kp))
}

fn markov_term(profile: &MarginProfile, group: usize, dist: f64) -> (f64, Flags) {
    if dist == 0.0 {
        return (0.0, Flags::empty());
    }
    let (m, f) = mean_ratio(profile, group);
    (m * dist, f)
}

/// `chi_k * dist` (0 at `dist = 0` even when `chi_k` is infinite).
pub fn markov_gap_bound(profile: &MarginProfile, spec: &FairnessSpec, k: usize, dist: f64) -> f64 {
    weighted_sum(spec, k, |kp| markov_term(profile, kp, dist)).0
}

/// `dist * mean(L/|rho| * 1{at risk})` over one group.
pub fn truncated_term(profile: &MarginProfile, group: usize, dist: f64) -> (f64, Flags) {
    let n = profile.group_size(group);
    if n == 0 {
        return (0.0, Flags::EMPTY_GROUP);
    }
    if dist == 0.0 {
        return (0.0, Flags::empty());
    }
    let total: f64 = profile
        .members(group)
        .filter(|&(m, l)| at_risk(m, l, dist))
        .map(|(m, l)| ratio(m, l))
        .sum();
    let flags = if total.is_infinite() { Flags::INFINITE } else { Flags::empty() };
    (total / n as f64 * dist, flags)
}

/// Markov bound with the expectation restricted to at-risk examples.
pub fn truncated_markov_gap_bound(profile: &MarginProfile, spec: &FairnessSpec, k: usize, dist: f64) -> f64 {
    weighted_sum(spec, k, |kp| truncated_term(profile, kp, dist)).0
}

/// Minimizer of a unimodal `g` on `[a, b]` to within `tol`.
pub fn golden_section(mut g: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a < b) {
        return arg_err(format!("golden section needs a < b, got [{a}, {b}]"));
    }
    if !(tol > 0.0) {
        return arg_err(format!("tolerance must be positive, got {tol}"));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut g1 = g(x1);
    let mut g2 = g(x2);
    while hi - lo > tol {
        if g1 <= g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - inv_phi * (hi - lo);
            g1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + inv_phi * (hi - lo);
            g2 = g(x2);
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Whether the Chernoff mean keeps only at-risk examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    #[default]
    On,
    Off,
}

const CHERNOFF_T_CAP: f64 = 1e6;

/// `min_{t in [0, t_max]} e^{t dist} mean_group(e^{-t |rho| / L})`, clamped to
/// `[0, 1]`, and 0 at `dist = 0`. With truncation, examples that are not at
/// risk contribute 0.
/// `t_max` is found by doubling from 1 until `g` has grown three doublings in
/// a row or `t` reaches `1e6`.
pub fn chernoff_term_bound(profile: &MarginProfile, group: usize, dist: f64, truncation: Truncation) -> (f64, Flags) {
    let n = profile.group_size(group);
    if n == 0 {
        return (0.0, Flags::EMPTY_GROUP);
    }
    if dist == 0.0 {
        return (0.0, Flags::empty());
    }
    // Exponent rates |rho| / L of the included examples; L = 0 terms vanish for t > 0.
    let rates: Vec<f64> = profile
        .members(group)
        .filter(|&(m, l)| truncation == Truncation::Off || at_risk(m, l, dist))
        .map(|(m, l)| if l == 0.0 { f64::INFINITY } else { m / l })
        .collect();
    let g0 = rates.len() as f64 / n as f64;
    let finite: Vec<f64> = rates.into_iter().filter(|r| r.is_finite()).collect();
    if finite.is_empty() {
        return (0.0, Flags::empty());
    }
    let ln_n = (n as f64).ln();
    let log_g = |t: f64| {
        let max = finite.iter().map(|r| -t * r).fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = finite.iter().map(|r| (-t * r - max).exp()).sum();
        t * dist + max + s.ln() - ln_n
    };
    let mut t = 1.0;
    let mut last = log_g(t);
    let mut rises = 0;
    while rises < 3 && t < CHERNOFF_T_CAP {
        let next = (2.0 * t).min(CHERNOFF_T_CAP);
        let v = log_g(next);
        rises = if v > last { rises + 1 } else { 0 };
        last = v;
        t = next;
    }
    let t_max = t;
    let t_star = golden_section(log_g, 0.0, t_max, 1e-8 * t_max).expect("valid bracket");
    let best = g0.min(log_g(t_star).exp()).min(log_g(t_max).exp());
    (best.clamp(0.0, 1.0), Flags::empty())
}

/// Sum of |C|-weighted truncated Chernoff terms.
pub fn chernoff_gap_bound(profile: &MarginProfile, spec: &FairnessSpec, k: usize, dist: f64) -> f64 {
    weighted_sum(spec, k, |kp| chernoff_term_bound(profile, kp, dist, Truncation::On)).0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Markov,
    Truncated,
    Chernoff,
    /// Per-term minimum of the truncated and Chernoff terms.
    Best,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Markov, Variant::Truncated, Variant::Chernoff, Variant::Best];

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "markov" => Ok(Variant::Markov),
            "truncated" => Ok(Variant::Truncated),
            "chernoff" => Ok(Variant::Chernoff),
            "best" => Ok(Variant::Best),
            other => arg_err(format!("unknown bound variant {other:?}")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Markov => "markov",
            Variant::Truncated => "truncated",
            Variant::Chernoff => "chernoff",
            Variant::Best => "best",
        }
    }
}

/// Bound on `|F_k(h) - F_k(h')|` for any `h'` within `dist` of the profiled model.
pub fn gap_bound(profile: &MarginProfile, spec: &FairnessSpec, k: usize, dist: f64, variant: Variant) -> f64 {
    gap_bound_flagged(profile, spec, k, dist, variant).0
}

fn gap_bound_flagged(profile: &MarginProfile, spec: &FairnessSpec, k: usize, dist: f64, variant: Variant) -> (f64, Flags) {
    weighted_sum(spec, k, |kp| match variant {
        Variant::Markov => markov_term(profile, kp, dist),
        Variant::Truncated => truncated_term(profile, kp, dist),
        Variant::Chernoff => chernoff_term_bound(profile, kp, dist, Truncation::On),
        Variant::Best => {
            let (a, fa) = truncated_term(profile, kp, dist);
            let (b, fb) = chernoff_term_bound(profile, kp, dist, Truncation::On);
            (a.min(b), (fa | fb) - Flags::INFINITE)
        }
    })
}

/// Where a distance fed into the bounds came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistanceSource {
    /// Output-perturbation high-probability bound.
    Lemma2,
    /// DP-SGD high-probability bound.
    Lemma3,
    /// Actual distance between two known models.
    Measured,
}

impl DistanceSource {
    pub fn name(self) -> &'static str {
        match self {
            DistanceSource::Lemma2 => "lemma2",
            DistanceSource::Lemma3 => "lemma3",
            DistanceSource::Measured => "measured",
        }
    }
}

/// How to obtain the private-vs-optimal distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistanceInput {
    /// `n` is the training-set size the mechanism was calibrated for.
    OutputPerturbation { constants: LossConstants, n: usize, params: PrivacyParams },
    /// `h0_dist` bounds `||h^0 - h*||` (use `2R` when unsure).
    DpSgd {
        constants: LossConstants,
        n: usize,
        params: PrivacyParams,
        h0_dist: f64,
    },
    Measured(f64),
}

/// Distance value, its provenance and diagnostics. `num_params` is the model
/// parameter count `|Y| p`.
pub fn resolve_distance(input: &DistanceInput, num_params: usize) -> (f64, DistanceSource, Flags) {
    match *input {
        DistanceInput::OutputPerturbation { constants, n, params } => (
            outputperturb_distance_bound(num_params, &constants, n, &params),
            DistanceSource::Lemma2,
            Flags::empty(),
        ),
        DistanceInput::DpSgd {
            constants,
            n,
            params,
            h0_dist,
        } => {
            let b = dpsgd_distance_bound(&constants, n, &params, h0_dist);
            let flags = if b.degenerate {
                Flags::DEGENERATE_DISTANCE
            } else {
                Flags::empty()
            };
            (b.distance, DistanceSource::Lemma3, flags)
        }
        DistanceInput::Measured(d) => (d, DistanceSource::Measured, Flags::empty()),
    }
}

/// All variants for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupBound {
    pub k: usize,
    pub chi: f64,
    pub markov: f64,
    pub truncated: f64,
    pub chernoff: f64,
    pub best: f64,
    pub flags: Flags,
}

impl GroupBound {
    pub fn get(&self, variant: Variant) -> f64 {
        match variant {
            Variant::Markov => self.markov,
            Variant::Truncated => self.truncated,
            Variant::Chernoff => self.chernoff,
            Variant::Best => self.best,
        }
    }
}

/// Finite-sample columns attached to a report.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackColumns {
    pub slack: Vec<f64>,
    pub confidence: f64,
}

/// Per-group bounds for one notion at one distance.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub notion: String,
    pub dist: f64,
    pub provenance: DistanceSource,
    pub groups: Vec<GroupBound>,
    pub finite_sample: Option<SlackColumns>,
}

/// Evaluates every group and variant of `spec` at `dist`.
pub fn bound_report(profile: &MarginProfile, spec: &FairnessSpec, dist: f64, provenance: DistanceSource) -> BoundReport {
    let groups = (0..spec.k())
        .map(|k| group_bound(profile, spec, k, dist, Flags::empty()))
        .collect();
    BoundReport {
        notion: spec.notion().name().to_string(),
        dist,
        provenance,
        groups,
        finite_sample: None,
    }
}

fn group_bound(profile: &MarginProfile, spec: &FairnessSpec, k: usize, dist: f64, extra: Flags) -> GroupBound {
    let (chi_v, chi_f) = chi(profile, spec, k);
    let mut flags = extra | chi_f | spec.row_flags(k);
    let mut value = |variant| {
        let (v, f) = gap_bound_flagged(profile, spec, k, dist, variant);
        flags |= f;
        v
    };
    let markov = value(Variant::Markov);
    let truncated = value(Variant::Truncated);
    let chernoff = value(Variant::Chernoff);
    let best = value(Variant::Best);
    GroupBound {
        k,
        chi: chi_v,
        markov,
        truncated,
        chernoff,
        best,
        flags,
    }
}

/// End-to-end bound for group `k`: profiles `reference` on `d`, resolves the
/// distance and applies `variant`.
pub fn theorem3_bound(
    reference: &LinearModel,
    d: &Dataset,
    spec: &FairnessSpec,
    k: usize,
    input: &DistanceInput,
    variant: Variant,
) -> Result<f64> {
    if k >= spec.k() {
        return arg_err(format!("group {k} out of range (K = {})", spec.k()));
    }
    let profile = margin_profile(reference, d, spec.partition())?;
    let (dist, _, _) = resolve_distance(input, reference.num_params());
    Ok(gap_bound(&profile, spec, k, dist, variant))
}

/// [`theorem3_bound`] for all groups and variants.
pub fn theorem3_report(reference: &LinearModel, d: &Dataset, spec: &FairnessSpec, input: &DistanceInput) -> Result<BoundReport> {
    let profile = margin_profile(reference, d, spec.partition())?;
    let (dist, provenance, flags) = resolve_distance(input, reference.num_params());
    let groups = (0..spec.k())
        .map(|k| group_bound(&profile, spec, k, dist, flags))
        .collect();
    Ok(BoundReport {
        notion: spec.notion().name().to_string(),
        dist,
        provenance,
        groups,
        finite_sample: None,
    })
}

impl BoundReport {
    /// Mean of one variant over groups.
    pub fn aggregate(&self, variant: Variant) -> f64 {
        self.groups.iter().map(|g| g.get(variant)).sum::<f64>() / self.groups.len() as f64
    }

    pub fn with_slack(mut self, slack: Vec<f64>, confidence: f64) -> Self {
        self.finite_sample = Some(SlackColumns { slack, confidence });
        self
    }

    pub fn write_header(&self, w: &mut impl Write) -> std::io::Result<()> {
        write!(w, "notion,k,chi,dist,dist_provenance,markov,truncated,chernoff,best,flags")?;
        if self.finite_sample.is_some() {
            write!(w, ",slack,combined_bound,combined_confidence")?;
        }
        writeln!(w)
    }

    pub fn write_rows(&self, w: &mut impl Write) -> std::io::Result<()> {
        for g in &self.groups {
            write!(
                w,
                "{},{},{:?},{:?},{},{:?},{:?},{:?},{:?},{}",
                self.notion,
                g.k,
                g.chi,
                self.dist,
                self.provenance.name(),
                g.markov,
                g.truncated,
                g.chernoff,
                g.best,
                g.flags
            )?;
            if let Some(fs) = &self.finite_sample {
                let s = fs.slack[g.k];
                write!(w, ",{:?},{:?},{:?}", s, g.best + s, fs.confidence)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        self.write_header(w)?;
        self.write_rows(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{partition, Example, Grouping};
    use crate::fairness::{coefficients, fairness_levels, Notion};
    use proptest::prelude::*;

    fn single_group(margins: &[f64], lips: &[f64]) -> MarginProfile {
        MarginProfile::from_parts(margins.to_vec(), lips.to_vec(), vec![0; margins.len()], 1).unwrap()
    }

    fn unit_spec(d: &Dataset) -> FairnessSpec {
        coefficients(d, Notion::Accuracy, &[]).unwrap()
    }

    fn tiny() -> Dataset {
        let ex = |f: [f64; 3], y| Example {
            features: f.to_vec(),
            sensitive: 0,
            label: y,
        };
        Dataset::new(vec![ex([3.0, 4.0, 1.0], 0), ex([1.0, 1.0, 1.0], 1)], 2, 1).unwrap()
    }

    #[test]
    fn profile_hand_example() {
        let d = tiny();
        let m = LinearModel::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]], 5.0).unwrap();
        let part = partition(&d, Grouping::Single);
        let p = margin_profile(&m, &d, &part).unwrap();
        assert_eq!(p.margins()[0], 3.0);
        assert_eq!(p.lipschitz()[0], 2.0 * 26f64.sqrt());
        let z = LinearModel::zeros(2, 3, 1.0).unwrap();
        assert!(margin_profile(&z, &d, &part).unwrap().margins().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn chi_cases() {
        let d = tiny();
        let spec = unit_spec(&d);
        let p = single_group(&[1.0, 1.0], &[1.0, 3.0]);
        assert_eq!(chi(&p, &spec, 0).0, 2.0);
        let z = single_group(&[0.0, 1.0], &[1.0, 3.0]);
        let (v, f) = chi(&z, &spec, 0);
        assert!(v.is_infinite() && f.contains(Flags::INFINITE));
        let part = partition(&d, Grouping::Single);
        let zero = FairnessSpec::from_parts(Notion::Accuracy, part, vec![0.0], vec![0.0], vec![]).unwrap();
        assert_eq!(chi(&z, &zero, 0).0, 0.0);
    }

    #[test]
    fn markov_arithmetic_and_zero_distance() {
        let d = tiny();
        let spec = unit_spec(&d);
        let p = single_group(&[1.0, 1.0], &[1.0, 3.0]);
        assert_eq!(markov_gap_bound(&p, &spec, 0, 0.25), 0.5);
        let z = single_group(&[0.0, 1.0], &[1.0, 3.0]);
        for v in Variant::ALL {
            assert_eq!(gap_bound(&z, &spec, 0, 0.0, v), 0.0);
        }
    }

    #[test]
    fn golden_section_cases() {
        let t = golden_section(|t| (t - 3.0) * (t - 3.0), 0.0, 10.0, 1e-6).unwrap();
        assert!((t - 3.0).abs() <= 1e-6);
        let t = golden_section(|t| t, 0.0, 1.0, 1e-9).unwrap();
        assert!(t <= 1e-9);
        let t = golden_section(|_| 1.0, 2.0, 5.0, 1e-6).unwrap();
        assert!((2.0..=5.0).contains(&t));
        assert!(golden_section(|t| t, 1.0, 1.0, 1e-6).is_err());
    }

    fn grid_oracle(rates: &[f64], dist: f64, t_max: f64) -> f64 {
        (0..=200_000)
            .map(|i| t_max * i as f64 / 200_000.0)
            .map(|t| rates.iter().map(|r| (t * (dist - r)).exp()).sum::<f64>() / rates.len() as f64)
            .fold(1.0, f64::min)
    }

    #[test]
    fn chernoff_cases() {
        let zero = single_group(&[0.0, 0.0], &[1.0, 2.0]);
        assert_eq!(chernoff_term_bound(&zero, 0, 0.3, Truncation::Off).0, 1.0);
        let one = single_group(&[1.0], &[1.0]);
        let v = chernoff_term_bound(&one, 0, 0.5, Truncation::Off).0;
        assert!(v <= grid_oracle(&[1.0], 0.5, 1e6) + 1e-12);
        assert_eq!(chernoff_term_bound(&one, 0, 0.5, Truncation::On).0, 0.0);
        let mixed = single_group(&[0.1, 0.5, 2.0, 3.0], &[1.0, 1.0, 1.0, 1.0]);
        let v = chernoff_term_bound(&mixed, 0, 0.4, Truncation::Off).0;
        let oracle = grid_oracle(&[0.1, 0.5, 2.0, 3.0], 0.4, 50.0);
        assert!((v - oracle).abs() <= 1e-6, "{v} vs {oracle}");
        let empty = MarginProfile::from_parts(vec![1.0], vec![1.0], vec![0], 2).unwrap();
        assert_eq!(chernoff_term_bound(&empty, 1, 0.4, Truncation::On), (0.0, Flags::EMPTY_GROUP));
    }

    #[test]
    fn truncated_chernoff_is_at_risk_fraction() {
        let p = single_group(&[0.1, 0.5, 2.0, 3.0], &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(chernoff_term_bound(&p, 0, 0.6, Truncation::On).0, 0.5);
    }

    #[test]
    fn refined_profile_cases() {
        let d = tiny();
        let part = partition(&d, Grouping::Single);
        let h = LinearModel::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 5.0).unwrap();
        let p = refined_lipschitz_profile(&h, &h, &d, &part).unwrap();
        assert!(p.lipschitz().iter().all(|&l| l == 0.0));
        // Difference only along the intercept-free axis 2; example x has x_2 = 1.
        let h2 = LinearModel::from_rows(&[vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 0.0]], 5.0).unwrap();
        let p = refined_lipschitz_profile(&h, &h2, &d, &part).unwrap();
        assert_eq!(p.lipschitz()[0], 2.0);
        let e = Dataset::new(
            vec![Example {
                features: vec![1.0, 1.0, 0.0],
                sensitive: 0,
                label: 0,
            }],
            2,
            1,
        )
        .unwrap();
        let pe = partition(&e, Grouping::Single);
        assert_eq!(refined_lipschitz_profile(&h, &h2, &e, &pe).unwrap().lipschitz()[0], 0.0);
    }

    #[test]
    fn report_csv_columns() {
        let d = tiny();
        let spec = unit_spec(&d);
        let p = single_group(&[0.0, 1.0], &[1.0, 3.0]);
        let r = bound_report(&p, &spec, 0.1, DistanceSource::Measured).with_slack(vec![0.05], 0.9);
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "notion,k,chi,dist,dist_provenance,markov,truncated,chernoff,best,flags,slack,combined_bound,combined_confidence"
        );
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "accuracy");
        assert_eq!(row[2], "inf");
        assert_eq!(row[4], "measured");
        assert!(row[9].contains("infinite"));
    }

    fn arb_pair() -> impl Strategy<Value = (Dataset, LinearModel, LinearModel)> {
        (2usize..30).prop_flat_map(|n| {
            (
                prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0usize..2, 0usize..2), n),
                prop::collection::vec(-2.0f64..2.0, 6),
                prop::collection::vec(-1.0f64..1.0, 6),
                0.0f64..1.0,
            )
                .prop_map(|(rows, w, dw, scale)| {
                    let ex: Vec<Example> = rows
                        .iter()
                        .map(|&(a, b, s, y)| Example {
                            features: vec![a, b, 1.0],
                            sensitive: s,
                            label: y,
                        })
                        .collect();
                    let w2: Vec<f64> = w.iter().zip(&dw).map(|(a, b)| a + scale * b).collect();
                    (
                        Dataset::new(ex, 2, 2).unwrap(),
                        LinearModel::new(w, 2, 3, 100.0).unwrap(),
                        LinearModel::new(w2, 2, 3, 100.0).unwrap(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn every_variant_is_valid_and_ordered((d, h, h2) in arb_pair()) {
            let dist = h.distance(&h2).unwrap();
            for notion in Notion::ALL {
                let spec = coefficients(&d, notion, &[1]).unwrap();
                let profile = margin_profile(&h, &d, spec.partition()).unwrap();
                let refined = refined_lipschitz_profile(&h, &h2, &d, spec.partition()).unwrap();
                let fa = fairness_levels(&h, &d, &spec).unwrap();
                let fb = fairness_levels(&h2, &d, &spec).unwrap();
                for k in 0..spec.k() {
                    let gap = (fa[k] - fb[k]).abs();
                    for v in Variant::ALL {
                        prop_assert!(gap <= gap_bound(&profile, &spec, k, dist, v) + 1e-12);
                        prop_assert!(gap <= gap_bound(&refined, &spec, k, dist, v) + 1e-12);
                        prop_assert!(gap_bound(&refined, &spec, k, dist, v) <= gap_bound(&profile, &spec, k, dist, v) + 1e-12);
                    }
                    let m = gap_bound(&profile, &spec, k, dist, Variant::Markov);
                    let t = gap_bound(&profile, &spec, k, dist, Variant::Truncated);
                    let b = gap_bound(&profile, &spec, k, dist, Variant::Best);
                    prop_assert!(b <= t && t <= m);
                }
            }
        }

        #[test]
        fn markov_and_truncated_monotone_in_distance(
            margins in prop::collection::vec(0.0f64..3.0, 1..20),
            d1 in 0.0f64..2.0,
            d2 in 0.0f64..2.0,
        ) {
            let lips: Vec<f64> = margins.iter().enumerate().map(|(i, _)| 0.5 + (i % 3) as f64).collect();
            let p = single_group(&margins, &lips);
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(truncated_term(&p, 0, lo).0 <= truncated_term(&p, 0, hi).0);
            prop_assert!(markov_term(&p, 0, lo).0 <= markov_term(&p, 0, hi).0);
            let c_lo = chernoff_term_bound(&p, 0, lo, Truncation::On).0;
            let c_hi = chernoff_term_bound(&p, 0, hi, Truncation::On).0;
            prop_assert!(c_lo <= c_hi);
            prop_assert!((0.0..=1.0).contains(&c_hi));
        }

        #[test]
        fn bounds_ignore_example_order((d, h, _h2) in arb_pair(), dist in 0.0f64..1.0) {
            let spec = coefficients(&d, Notion::EqualizedOdds, &[]).unwrap();
            let mut idx: Vec<usize> = (0..d.n()).collect();
            idx.reverse();
            let rd = d.subset(&idx).unwrap();
            let rspec = coefficients(&rd, Notion::EqualizedOdds, &[]).unwrap();
            let p = margin_profile(&h, &d, spec.partition()).unwrap();
            let rp = margin_profile(&h, &rd, rspec.partition()).unwrap();
            for k in 0..spec.k() {
                for v in Variant::ALL {
                    let a = gap_bound(&p, &spec, k, dist, v);
                    let b = gap_bound(&rp, &rspec, k, dist, v);
                    prop_assert!(a == b || (a - b).abs() <= 1e-12 * a.abs().max(1.0));
                }
            }
        }
    }
}
