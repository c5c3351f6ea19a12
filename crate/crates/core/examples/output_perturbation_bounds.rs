//! Privatize with output perturbation and compare the certified bound to the
//! fairness change actually observed.

use fairbound::privacy::output_perturb;
use fairbound::{
    coefficients, constants, fairness_levels, fit_erm, synthesize, theorem3_report, DistanceInput, Mechanism,
    Notion, PrivacyParams, SyntheticSpec, Variant,
};

fn main() -> fairbound::Result<()> {
    let mut spec = SyntheticSpec::uniform(4, 2, 2, 2500);
    for cell in &mut spec.cells {
        let y = if cell.label == 1 { 1.0 } else { -1.0 };
        let s = if cell.sensitive == 1 { 0.5 } else { -0.5 };
        cell.mean = vec![y, 0.5 * y + s, s, 0.0];
    }
    let d = synthesize(&spec, 2)?;
    let n = d.n();
    let lambda = 1.0;
    let hstar = fit_erm(&d, lambda, 1e-10, 100_000)?;
    let c = constants(&d, lambda, hstar.radius())?;

    for epsilon in [0.1, 1.0, 10.0] {
        let pp = PrivacyParams::new(epsilon, 1.0 / (n * n) as f64, 0.01, Mechanism::OutputPerturbation, 7)?;
        let private = output_perturb(&hstar, &c, n, &pp)?;
        let input = DistanceInput::OutputPerturbation { constants: c, n, params: pp };
        let notion_spec = coefficients(&d, Notion::EqualizedOdds, &[1])?;
        let report = theorem3_report(&hstar, &d, &notion_spec, &input)?;
        let before = fairness_levels(&hstar, &d, &notion_spec)?;
        let after = fairness_levels(&private, &d, &notion_spec)?;
        let observed = before
            .iter()
            .zip(&after)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "eps = {epsilon:>4}: dist bound {:.2e}, measured {:.2e}, max observed gap {observed:.2e}, mean best bound {:.2e}",
            report.dist,
            private.distance(&hstar)?,
            report.aggregate(Variant::Best)
        );
    }
    Ok(())
}
