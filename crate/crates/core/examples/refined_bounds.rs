//! When both models are known, per-example Lipschitz constants along the
//! actual direction of change tighten the bound.

use fairbound::bounds::{bound_report, DistanceSource};
use fairbound::privacy::output_perturb;
use fairbound::{
    coefficients, constants, fit_erm, margin_profile, refined_lipschitz_profile, synthesize, Mechanism, Notion,
    PrivacyParams, SyntheticSpec, Variant,
};

fn main() -> fairbound::Result<()> {
    let mut spec = SyntheticSpec::uniform(5, 3, 2, 300);
    for cell in &mut spec.cells {
        let mut mean = vec![0.0; 5];
        mean[cell.label] = 1.5;
        mean[4] = cell.sensitive as f64 - 0.5;
        cell.mean = mean;
    }
    let d = synthesize(&spec, 6)?;
    let hstar = fit_erm(&d, 1.0, 1e-10, 100_000)?;
    let c = constants(&d, 1.0, hstar.radius())?;
    let pp = PrivacyParams::new(2.0, 1e-6, 0.01, Mechanism::OutputPerturbation, 8)?;
    let private = output_perturb(&hstar, &c, d.n(), &pp)?;
    let dist = private.distance(&hstar)?;

    let s = coefficients(&d, Notion::EqualizedOdds, &[])?;
    let standard = bound_report(&margin_profile(&hstar, &d, s.partition())?, &s, dist, DistanceSource::Measured);
    let refined = bound_report(
        &refined_lipschitz_profile(&hstar, &private, &d, s.partition())?,
        &s,
        dist,
        DistanceSource::Measured,
    );
    for v in Variant::ALL {
        println!(
            "{:<10} standard {:.4e}  refined {:.4e}",
            v.name(),
            standard.aggregate(v),
            refined.aggregate(v)
        );
    }
    Ok(())
}
