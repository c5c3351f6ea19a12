//! Fit the non-private optimum on synthetic data and print per-group fairness.

use fairbound::{coefficients, fairness_levels, fit_erm_with, synthesize, FitOptions, Notion, SyntheticSpec};

fn main() -> fairbound::Result<()> {
    let mut spec = SyntheticSpec::uniform(3, 2, 2, 400);
    for cell in &mut spec.cells {
        let y = if cell.label == 1 { 1.0 } else { -1.0 };
        cell.mean = vec![y, 0.4 * cell.sensitive as f64, -0.2];
    }
    // Group 1 is under-represented among positives.
    spec.cell_mut(1, 1).unwrap().count = 100;
    let d = synthesize(&spec, 1)?;

    let fit = fit_erm_with(&d, &FitOptions::new(0.1).tol(1e-10))?;
    println!(
        "n = {}, iterations = {}, |h*| = {:.4}, R = {:.4}",
        d.n(),
        fit.iterations,
        fit.model.norm(),
        fit.model.radius()
    );

    for notion in Notion::ALL {
        let spec = coefficients(&d, notion, &[1])?;
        let levels = fairness_levels(&fit.model, &d, &spec)?;
        for (k, f) in levels.iter().enumerate() {
            println!("{:<24} {:<10} {f:+.4}", notion.name(), spec.partition().describe(k, &d));
        }
    }
    Ok(())
}
