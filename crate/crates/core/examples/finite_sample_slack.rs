//! Finite-sample slack for a model independent of, or fitted on, the sample.

use fairbound::finite_sample::{dependent_slack, independent_slack, FiniteSampleParams};
use fairbound::{coefficients, fit_erm, synthesize, Notion, SyntheticSpec};

fn main() -> fairbound::Result<()> {
    for per_cell in [1_000, 10_000, 100_000] {
        let mut spec = SyntheticSpec::uniform(2, 2, 2, per_cell);
        for cell in &mut spec.cells {
            cell.mean = vec![if cell.label == 1 { 1.0 } else { -1.0 }, 0.0];
        }
        let d = synthesize(&spec, 5)?;
        let h = fit_erm(&d, 1.0, 1e-8, 100_000)?;
        let s = coefficients(&d, Notion::AccuracyParity, &[])?;
        let fp = FiniteSampleParams::from_spec(&s, 0.05, d.num_labels(), h.num_params())?;
        let (ind, _) = independent_slack(&fp, 0);
        let (dep, flags) = dependent_slack(&fp, 0);
        println!("n = {:>7}: independent {ind:.4}, dependent {dep:.4} {flags}", d.n());
    }
    Ok(())
}
