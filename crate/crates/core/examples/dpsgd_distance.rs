//! Run DP-SGD at the step count its distance bound prescribes and check how
//! far the result lands from the optimum.

use fairbound::privacy::dpsgd_distance_bound_with;
use fairbound::{constants, dpsgd, fit_erm, synthesize, DpSgdConfig, Mechanism, NoiseExponent, PrivacyParams, SyntheticSpec};

fn main() -> fairbound::Result<()> {
    let mut spec = SyntheticSpec::uniform(2, 2, 2, 1000);
    for cell in &mut spec.cells {
        cell.mean = vec![if cell.label == 1 { 1.0 } else { -1.0 }, 0.3];
    }
    let d = synthesize(&spec, 3)?;
    let n = d.n();
    let hstar = fit_erm(&d, 1.0, 1e-10, 100_000)?;
    let c = constants(&d, 1.0, hstar.radius())?;

    for exponent in [NoiseExponent::TLinear, NoiseExponent::TSquared] {
        let mut worst: f64 = 0.0;
        let mut bound = None;
        for seed in 0..10 {
            let pp = PrivacyParams::new(1.0, 1.0 / (n * n) as f64, 0.5, Mechanism::DpSgd, seed)?;
            let b = dpsgd_distance_bound_with(&c, n, &pp, 2.0 * c.radius, exponent);
            let cfg = DpSgdConfig {
                iterations: b.iterations,
                step: 1.0 / (2.0 * c.smoothness),
                sigma2: b.sigma2,
                radius: c.radius,
                noise_exponent: exponent,
            };
            let h = dpsgd(&d, &c, &pp, &cfg)?;
            worst = worst.max(h.distance(&hstar)?);
            bound = Some(b);
        }
        let b = bound.unwrap();
        println!(
            "{exponent:?}: T = {}, sigma^2 = {:.3e}, bound {:.4}, worst of 10 runs {worst:.4}",
            b.iterations, b.sigma2, b.distance
        );
    }
    Ok(())
}
