//! The three bound variants on one margin profile as the distance grows.

use fairbound::bounds::MarginProfile;
use fairbound::bounds::{chernoff_gap_bound, markov_gap_bound, truncated_markov_gap_bound};
use fairbound::{coefficients, gap_bound, synthesize, Notion, SyntheticSpec, Variant};

fn main() -> fairbound::Result<()> {
    let d = synthesize(&SyntheticSpec::uniform(1, 2, 1, 200), 4)?;
    let spec = coefficients(&d, Notion::Accuracy, &[])?;
    // Margins spread over [0.05, 2] with unit Lipschitz constants.
    let margins: Vec<f64> = (0..d.n()).map(|i| 0.05 + 1.95 * i as f64 / d.n() as f64).collect();
    let profile = MarginProfile::from_parts(margins, vec![1.0; d.n()], vec![0; d.n()], 1)?;

    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "dist", "markov", "truncated", "chernoff", "best");
    for dist in [1e-3, 1e-2, 0.05, 0.1, 0.5, 1.0] {
        println!(
            "{dist:>8} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            markov_gap_bound(&profile, &spec, 0, dist),
            truncated_markov_gap_bound(&profile, &spec, 0, dist),
            chernoff_gap_bound(&profile, &spec, 0, dist),
            gap_bound(&profile, &spec, 0, dist, Variant::Best)
        );
    }
    Ok(())
}
