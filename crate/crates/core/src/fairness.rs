//! Group fairness as affine functions of group-conditional accuracies.
//!
//! Every supported notion is written as
//! `F_k(h) = C_k^0 + sum_k' C_k^k' P(H(X) = Y | D_k')`, with coefficients
//! estimated from the same data the fairness is evaluated on. Groups used as
//! rows and as conditioning events coincide: label-and-sensitive cells for
//! equalized odds, equality of opportunity and demographic parity, sensitive
//! groups for accuracy parity, and a single group for plain accuracy.
//!
//! When a conditioning event in the definition of `F_k` has no examples, the
//! whole row (and `F_k`) is 0 and flagged [`Flags::ZERO_MASS`]. Empty groups
//! therefore always carry zero coefficients.

use crate::dataset::{partition, Dataset, GroupPartition, Grouping};
use crate::error::{arg_err, Result};
use crate::flags::Flags;
use crate::model::LinearModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Notion {
    EqualizedOdds,
    EqualityOfOpportunity,
    AccuracyParity,
    /// Binary labels only.
    DemographicParity,
    /// Overall accuracy, one group.
    Accuracy,
}

impl Notion {
    pub const ALL: [Notion; 5] = [
        Notion::EqualityOfOpportunity,
        Notion::EqualizedOdds,
        Notion::DemographicParity,
        Notion::AccuracyParity,
        Notion::Accuracy,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "equalized-odds" => Ok(Notion::EqualizedOdds),
            "equality-of-opportunity" => Ok(Notion::EqualityOfOpportunity),
            "accuracy-parity" => Ok(Notion::AccuracyParity),
            "demographic-parity" | "demographic-parity-binary" => Ok(Notion::DemographicParity),
            "accuracy" => Ok(Notion::Accuracy),
            _ => arg_err(format!("unknown fairness notion {s:?}")),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Notion::EqualizedOdds => "equalized-odds",
            Notion::EqualityOfOpportunity => "equality-of-opportunity",
            Notion::AccuracyParity => "accuracy-parity",
            Notion::DemographicParity => "demographic-parity",
            Notion::Accuracy => "accuracy",
        }
    }

    pub fn grouping(self) -> Grouping {
        match self {
            Notion::EqualizedOdds | Notion::EqualityOfOpportunity | Notion::DemographicParity => {
                Grouping::ByLabelAndSensitive
            }
            Notion::AccuracyParity => Grouping::BySensitive,
            Notion::Accuracy => Grouping::Single,
        }
    }
}

/// A fairness notion instantiated on a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessSpec {
    notion: Notion,
    partition: GroupPartition,
    c0: Vec<f64>,
    coeffs: Vec<f64>,
    desirable: Vec<usize>,
    row_flags: Vec<Flags>,
}

impl FairnessSpec {
    /// Assembles a spec from explicit coefficients (`coeffs` is `K x K`,
    /// row-major).
    pub fn from_parts(
        notion: Notion,
        partition: GroupPartition,
        c0: Vec<f64>,
        coeffs: Vec<f64>,
        desirable: Vec<usize>,
    ) -> Result<Self> {
        let k = partition.k;
        if c0.len() != k || coeffs.len() != k * k {
            return arg_err(format!(
                "coefficient shapes {} and {} do not match K = {k}",
                c0.len(),
                coeffs.len()
            ));
        }
        if c0.iter().chain(&coeffs).any(|c| !c.is_finite()) {
            return arg_err("non-finite fairness coefficient");
        }
        Ok(Self {
            notion,
            partition,
            c0,
            coeffs,
            desirable,
            row_flags: vec![Flags::empty(); k],
        })
    }

    pub fn notion(&self) -> Notion {
        self.notion
    }

    pub fn partition(&self) -> &GroupPartition {
        &self.partition
    }

    pub fn k(&self) -> usize {
        self.partition.k
    }

    pub fn c0(&self, k: usize) -> f64 {
        self.c0[k]
    }

    /// `C_k^{k'}`.
    pub fn coeff(&self, k: usize, kp: usize) -> f64 {
        self.coeffs[k * self.k() + kp]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.coeffs[k * self.k()..(k + 1) * self.k()]
    }

    pub fn desirable(&self) -> &[usize] {
        &self.desirable
    }

    /// Diagnostics for row `k` (zero-mass conventions).
    pub fn row_flags(&self, k: usize) -> Flags {
        self.row_flags[k]
    }

    /// Evaluates `F_k` from precomputed conditional accuracies (one per group).
    pub fn evaluate(&self, k: usize, accuracies: &[f64]) -> f64 {
        self.c0[k] + self.row(k).iter().zip(accuracies).map(|(c, a)| c * a).sum::<f64>()
    }
}

struct Counts {
    n: f64,
    label: Vec<f64>,
    sensitive: Vec<f64>,
    /// `[y * |S| + r]`
    joint: Vec<f64>,
}

fn counts(d: &Dataset) -> Counts {
    let ns = d.num_sensitive();
    let mut c = Counts {
        n: d.n() as f64,
        label: vec![0.0; d.num_labels()],
        sensitive: vec![0.0; ns],
        joint: vec![0.0; d.num_labels() * ns],
    };
    for e in d.examples() {
        c.label[e.label] += 1.0;
        c.sensitive[e.sensitive] += 1.0;
        c.joint[e.label * ns + e.sensitive] += 1.0;
    }
    c
}

fn check_notion(d: &Dataset, notion: Notion, desirable: &[usize]) -> Result<()> {
    match notion {
        Notion::DemographicParity if d.num_labels() != 2 => arg_err(format!(
            "demographic parity needs binary labels, got {}",
            d.num_labels()
        )),
        Notion::EqualityOfOpportunity if desirable.is_empty() => {
            arg_err("equality of opportunity needs a nonempty desirable label set")
        }
        _ if desirable.iter().any(|&y| y >= d.num_labels()) => {
            arg_err("desirable label id out of range")
        }
        _ => Ok(()),
    }
}

/// Empirical coefficient table of `notion` on `d`. `desirable` is the set of
/// desirable labels, used only by equality of opportunity.
pub fn coefficients(d: &Dataset, notion: Notion, desirable: &[usize]) -> Result<FairnessSpec> {
    check_notion(d, notion, desirable)?;
    let part = partition(d, notion.grouping());
    let k = part.k;
    let ns = d.num_sensitive();
    let c = counts(d);
    let mut c0 = vec![0.0; k];
    let mut coeffs = vec![0.0; k * k];
    let mut row_flags = vec![Flags::empty(); k];
    let cell = |y: usize, r: usize| y * ns + r;
    match notion {
        Notion::EqualizedOdds | Notion::EqualityOfOpportunity => {
            for y in 0..d.num_labels() {
                for r in 0..ns {
                    let row = cell(y, r);
                    if notion == Notion::EqualityOfOpportunity && !desirable.contains(&y) {
                        continue;
                    }
                    if c.joint[row] == 0.0 {
                        row_flags[row] |= Flags::ZERO_MASS;
                        continue;
                    }
                    for rp in 0..ns {
                        let p = c.joint[cell(y, rp)] / c.label[y];
                        coeffs[row * k + cell(y, rp)] = if rp == r { 1.0 - p } else { -p };
                    }
                }
            }
        }
        Notion::AccuracyParity => {
            for r in 0..ns {
                if c.sensitive[r] == 0.0 {
                    row_flags[r] |= Flags::ZERO_MASS;
                    continue;
                }
                for rp in 0..ns {
                    let p = c.sensitive[rp] / c.n;
                    coeffs[r * k + rp] = if rp == r { 1.0 - p } else { -p };
                }
            }
        }
        Notion::DemographicParity => {
            for y in 0..2 {
                let ybar = 1 - y;
                for r in 0..ns {
                    let row = cell(y, r);
                    if c.sensitive[r] == 0.0 {
                        row_flags[row] |= Flags::ZERO_MASS;
                        continue;
                    }
                    let p_y = c.label[y] / c.n;
                    let p_y_given_r = c.joint[cell(y, r)] / c.sensitive[r];
                    let p_ybar_given_r = c.joint[cell(ybar, r)] / c.sensitive[r];
                    c0[row] = p_y - p_y_given_r;
                    for rp in 0..ns {
                        let p_y_rp = c.joint[cell(y, rp)] / c.n;
                        let p_ybar_rp = c.joint[cell(ybar, rp)] / c.n;
                        if rp == r {
                            coeffs[row * k + cell(y, r)] = p_y_given_r - p_y_rp;
                            coeffs[row * k + cell(ybar, r)] = p_ybar_rp - p_ybar_given_r;
                        } else {
                            coeffs[row * k + cell(y, rp)] = -p_y_rp;
                            coeffs[row * k + cell(ybar, rp)] = p_ybar_rp;
                        }
                    }
                }
            }
        }
        Notion::Accuracy => coeffs[0] = 1.0,
    }
    Ok(FairnessSpec {
        notion,
        partition: part,
        c0,
        coeffs,
        desirable: desirable.to_vec(),
        row_flags,
    })
}

/// Predicted label of every example.
pub fn predictions(m: &LinearModel, d: &Dataset) -> Result<Vec<usize>> {
    d.examples().iter().map(|e| m.predict(&e.features)).collect()
}

/// Fraction of group members classified correctly; 0 with
/// [`Flags::EMPTY_GROUP`] for an empty group.
pub fn conditional_accuracy(m: &LinearModel, d: &Dataset, group: usize, part: &GroupPartition) -> Result<(f64, Flags)> {
    if part.is_empty_group(group) {
        return Ok((0.0, Flags::EMPTY_GROUP));
    }
    let mut correct = 0usize;
    for (i, e) in d.examples().iter().enumerate() {
        if part.group_of(i) == group && m.predict(&e.features)? == e.label {
            correct += 1;
        }
    }
    Ok((correct as f64 / part.counts[group] as f64, Flags::empty()))
}

/// Conditional accuracy of every group in one pass.
pub fn conditional_accuracies(m: &LinearModel, d: &Dataset, part: &GroupPartition) -> Result<Vec<f64>> {
    let preds = predictions(m, d)?;
    Ok(accuracies_from_predictions(&preds, d, part))
}

pub(crate) fn accuracies_from_predictions(preds: &[usize], d: &Dataset, part: &GroupPartition) -> Vec<f64> {
    let mut correct = vec![0usize; part.k];
    for (i, (e, &p)) in d.examples().iter().zip(preds).enumerate() {
        if p == e.label {
            correct[part.group_of(i)] += 1;
        }
    }
    correct
        .iter()
        .zip(&part.counts)
        .map(|(&c, &n)| if n == 0 { 0.0 } else { c as f64 / n as f64 })
        .collect()
}

/// `F_k(h)` through the coefficient form.
pub fn group_fairness(m: &LinearModel, d: &Dataset, spec: &FairnessSpec, k: usize) -> Result<f64> {
    if k >= spec.k() {
        return arg_err(format!("group {k} out of range (K = {})", spec.k()));
    }
    let acc = conditional_accuracies(m, d, spec.partition())?;
    Ok(spec.evaluate(k, &acc))
}

/// `F_k(h)` for every group.
pub fn fairness_levels(m: &LinearModel, d: &Dataset, spec: &FairnessSpec) -> Result<Vec<f64>> {
    let acc = conditional_accuracies(m, d, spec.partition())?;
    Ok((0..spec.k()).map(|k| spec.evaluate(k, &acc)).collect())
}

/// Mean absolute fairness level `(1/K) sum_k |F_k|`.
pub fn aggregate_fairness(m: &LinearModel, d: &Dataset, spec: &FairnessSpec) -> Result<f64> {
    let levels = fairness_levels(m, d, spec)?;
    Ok(levels.iter().map(|f| f.abs()).sum::<f64>() / levels.len() as f64)
}

/// Evaluates the notion's definition directly from counts, without the
/// coefficient table. Group index `k` follows the notion's grouping.
pub fn direct_fairness(
    m: &LinearModel,
    d: &Dataset,
    notion: Notion,
    k: usize,
    desirable: &[usize],
) -> Result<(f64, Flags)> {
    check_notion(d, notion, desirable)?;
    let ns = d.num_sensitive();
    let preds = predictions(m, d)?;
    let rows = d.examples().iter().zip(&preds);
    let ratio = |hits: usize, total: usize| hits as f64 / total as f64;
    match notion {
        Notion::EqualizedOdds | Notion::EqualityOfOpportunity => {
            let (y, r) = (k / ns, k % ns);
            if y >= d.num_labels() {
                return arg_err(format!("group {k} out of range"));
            }
            if notion == Notion::EqualityOfOpportunity && !desirable.contains(&y) {
                return Ok((0.0, Flags::empty()));
            }
            let (mut in_cell, mut hit_cell, mut in_label, mut hit_label) = (0, 0, 0, 0);
            for (e, &p) in rows {
                if e.label != y {
                    continue;
                }
                in_label += 1;
                hit_label += (p == y) as usize;
                if e.sensitive == r {
                    in_cell += 1;
                    hit_cell += (p == y) as usize;
                }
            }
            if in_cell == 0 {
                return Ok((0.0, Flags::ZERO_MASS));
            }
            Ok((ratio(hit_cell, in_cell) - ratio(hit_label, in_label), Flags::empty()))
        }
        Notion::AccuracyParity => {
            if k >= ns {
                return arg_err(format!("group {k} out of range"));
            }
            let (mut in_group, mut hit_group, mut hit_all) = (0, 0, 0);
            for (e, &p) in rows {
                let ok = (p == e.label) as usize;
                hit_all += ok;
                if e.sensitive == k {
                    in_group += 1;
                    hit_group += ok;
                }
            }
            if in_group == 0 {
                return Ok((0.0, Flags::ZERO_MASS));
            }
            Ok((ratio(hit_group, in_group) - ratio(hit_all, d.n()), Flags::empty()))
        }
        Notion::DemographicParity => {
            let (y, r) = (k / ns, k % ns);
            if y >= 2 {
                return arg_err(format!("group {k} out of range"));
            }
            let (mut in_group, mut pred_y_group, mut pred_y_all) = (0, 0, 0);
            for (e, &p) in rows {
                pred_y_all += (p == y) as usize;
                if e.sensitive == r {
                    in_group += 1;
                    pred_y_group += (p == y) as usize;
                }
            }
            if in_group == 0 {
                return Ok((0.0, Flags::ZERO_MASS));
            }
            Ok((ratio(pred_y_group, in_group) - ratio(pred_y_all, d.n()), Flags::empty()))
        }
        Notion::Accuracy => {
            if k != 0 {
                return arg_err(format!("group {k} out of range"));
            }
            let hits = rows.filter(|(e, &p)| p == e.label).count();
            Ok((ratio(hits, d.n()), Flags::empty()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Example;
    use proptest::prelude::*;

    fn ex(f: &[f64], s: usize, y: usize) -> Example {
        Example {
            features: f.to_vec(),
            sensitive: s,
            label: y,
        }
    }

    /// Two examples per (label, sensitive) cell with features `[1, 0]` or `[0, 1]`.
    fn balanced() -> Dataset {
        let mut v = Vec::new();
        for y in 0..2 {
            for s in 0..2 {
                let f = if y == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
                v.push(ex(&f, s, y));
                v.push(ex(&f, s, y));
            }
        }
        Dataset::new(v, 2, 2).unwrap()
    }

    fn perfect() -> LinearModel {
        LinearModel::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], 10.0).unwrap()
    }

    #[test]
    fn equalized_odds_balanced_table() {
        let spec = coefficients(&balanced(), Notion::EqualizedOdds, &[]).unwrap();
        assert_eq!(spec.k(), 4);
        assert_eq!(spec.coeff(0, 0), 0.5);
        assert_eq!(spec.coeff(0, 1), -0.5);
        assert_eq!(spec.coeff(0, 2), 0.0);
        for k in 0..4 {
            assert_eq!(spec.c0(k) + spec.row(k).iter().sum::<f64>(), 0.0);
        }
    }

    #[test]
    fn accuracy_parity_table() {
        let mut v = Vec::new();
        for i in 0..10 {
            v.push(ex(&[1.0], (i >= 3) as usize, i % 2));
        }
        let d = Dataset::new(v, 2, 2).unwrap();
        let spec = coefficients(&d, Notion::AccuracyParity, &[]).unwrap();
        assert!((spec.coeff(0, 0) - 0.7).abs() < 1e-15);
        assert!((spec.coeff(0, 1) + 0.7).abs() < 1e-15);
        assert!((spec.coeff(1, 0) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn equality_of_opportunity_zeroes_undesired_rows() {
        let spec = coefficients(&balanced(), Notion::EqualityOfOpportunity, &[1]).unwrap();
        for k in 0..2 {
            assert_eq!(spec.c0(k), 0.0);
            assert!(spec.row(k).iter().all(|&c| c == 0.0));
        }
        assert_eq!(spec.coeff(2, 2), 0.5);
        assert!(coefficients(&balanced(), Notion::EqualityOfOpportunity, &[]).is_err());
    }

    #[test]
    fn demographic_parity_needs_binary_labels() {
        let d = Dataset::new(vec![ex(&[1.0], 0, 2)], 3, 1).unwrap();
        assert!(coefficients(&d, Notion::DemographicParity, &[]).is_err());
    }

    #[test]
    fn zero_mass_rows_are_zeroed_and_flagged() {
        let d = Dataset::new(vec![ex(&[1.0], 0, 0), ex(&[2.0], 0, 1)], 2, 2).unwrap();
        let spec = coefficients(&d, Notion::EqualizedOdds, &[]).unwrap();
        assert!(spec.row_flags(1).contains(Flags::ZERO_MASS));
        assert!(spec.row(1).iter().all(|&c| c == 0.0));
        let m = LinearModel::zeros(2, 1, 1.0).unwrap();
        let (v, f) = direct_fairness(&m, &d, Notion::EqualizedOdds, 1, &[]).unwrap();
        assert_eq!(v, 0.0);
        assert!(f.contains(Flags::ZERO_MASS));
    }

    #[test]
    fn conditional_accuracy_cases() {
        let d = balanced();
        let part = partition(&d, Grouping::ByLabelAndSensitive);
        for g in 0..4 {
            assert_eq!(conditional_accuracy(&perfect(), &d, g, &part).unwrap().0, 1.0);
        }
        let zero = LinearModel::zeros(2, 2, 1.0).unwrap();
        let by_s = partition(&d, Grouping::BySensitive);
        // Ties go to label 0, so accuracy is the label-0 share.
        assert_eq!(conditional_accuracy(&zero, &d, 0, &by_s).unwrap().0, 0.5);
        let lopsided = Dataset::new(vec![ex(&[1.0], 0, 0)], 2, 2).unwrap();
        let p = partition(&lopsided, Grouping::BySensitive);
        let m = LinearModel::zeros(2, 1, 1.0).unwrap();
        assert_eq!(conditional_accuracy(&m, &lopsided, 1, &p).unwrap(), (0.0, Flags::EMPTY_GROUP));
    }

    #[test]
    fn perfect_classifier_is_fair_for_equalized_odds() {
        let d = balanced();
        let spec = coefficients(&d, Notion::EqualizedOdds, &[]).unwrap();
        for f in fairness_levels(&perfect(), &d, &spec).unwrap() {
            assert_eq!(f, 0.0);
        }
        for k in 0..4 {
            assert_eq!(direct_fairness(&perfect(), &d, Notion::EqualizedOdds, k, &[]).unwrap().0, 0.0);
        }
    }

    #[test]
    fn constant_classifier_has_demographic_parity() {
        let d = balanced();
        let zero = LinearModel::zeros(2, 2, 1.0).unwrap();
        for k in 0..4 {
            assert_eq!(direct_fairness(&zero, &d, Notion::DemographicParity, k, &[]).unwrap().0, 0.0);
        }
    }

    #[test]
    fn null_coefficients_and_aggregate() {
        let d = balanced();
        let part = partition(&d, Grouping::BySensitive);
        let spec = FairnessSpec::from_parts(Notion::AccuracyParity, part.clone(), vec![0.0; 2], vec![0.0; 4], vec![])
            .unwrap();
        assert_eq!(group_fairness(&perfect(), &d, &spec, 0).unwrap(), 0.0);
        let spec = FairnessSpec::from_parts(Notion::AccuracyParity, part, vec![0.2, -0.2], vec![0.0; 4], vec![]).unwrap();
        assert!((aggregate_fairness(&perfect(), &d, &spec).unwrap() - 0.2).abs() < 1e-15);
    }

    fn arb_instance() -> impl Strategy<Value = (Dataset, LinearModel)> {
        (1usize..50).prop_flat_map(|n| {
            (
                prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0usize..2, 0usize..2), n),
                prop::collection::vec(-2.0f64..2.0, 6),
            )
                .prop_map(|(rows, w)| {
                    let ex: Vec<Example> = rows.iter().map(|&(a, b, s, y)| ex(&[a, b, 1.0], s, y)).collect();
                    (Dataset::new(ex, 2, 2).unwrap(), LinearModel::new(w, 2, 3, 10.0).unwrap())
                })
        })
    }

    proptest! {
        #[test]
        fn coefficient_form_matches_definition((d, m) in arb_instance()) {
            for notion in Notion::ALL {
                let spec = coefficients(&d, notion, &[1]).unwrap();
                let levels = fairness_levels(&m, &d, &spec).unwrap();
                for (k, &f) in levels.iter().enumerate() {
                    let (direct, _) = direct_fairness(&m, &d, notion, k, &[1]).unwrap();
                    prop_assert!((f - direct).abs() <= 1e-12, "{notion:?} k={k}: {f} vs {direct}");
                    prop_assert!((-1.0..=1.0).contains(&f) || notion == Notion::Accuracy);
                }
            }
        }

        #[test]
        fn accuracy_parity_weighted_sum_vanishes((d, m) in arb_instance()) {
            let spec = coefficients(&d, Notion::AccuracyParity, &[]).unwrap();
            let levels = fairness_levels(&m, &d, &spec).unwrap();
            let s: f64 = levels.iter().zip(&spec.partition().proportions).map(|(f, p)| f * p).sum();
            prop_assert!(s.abs() <= 1e-12);
        }

        #[test]
        fn equalized_odds_rows_sum_to_zero((d, _m) in arb_instance()) {
            let spec = coefficients(&d, Notion::EqualizedOdds, &[]).unwrap();
            for k in 0..spec.k() {
                prop_assert!((spec.c0(k) + spec.row(k).iter().sum::<f64>()).abs() <= 1e-12);
            }
        }

        #[test]
        fn weighted_group_accuracy_is_overall_accuracy((d, m) in arb_instance()) {
            let part = partition(&d, Grouping::ByLabelAndSensitive);
            let acc = conditional_accuracies(&m, &d, &part).unwrap();
            let weighted: f64 = acc.iter().zip(&part.proportions).map(|(a, p)| a * p).sum();
            let overall = direct_fairness(&m, &d, Notion::Accuracy, 0, &[]).unwrap().0;
            prop_assert!((weighted - overall).abs() <= 1e-12);
        }
    }
}
