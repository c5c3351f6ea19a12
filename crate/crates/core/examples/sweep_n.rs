//! Sample-size sweep: private fairness envelope against the bounds.

use fairbound::experiment::ExperimentConfig;
use fairbound::run_experiment;

fn main() -> fairbound::Result<()> {
    let dir = std::env::temp_dir().join("fairbound-sweep-n");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(
        dir.join("spec.txt"),
        "features = 2\nlabels = 2\nsensitive = 2\n\
         cell.0.0.count = 3000\ncell.0.0.mean = -1.0, 0.4\n\
         cell.0.1.count = 2000\ncell.0.1.mean = -0.7, -0.4\n\
         cell.1.0.count = 2000\ncell.1.0.mean = 1.0, 0.4\n\
         cell.1.1.count = 3000\ncell.1.1.mean = 0.7, -0.4\n",
    )?;
    let text = "synthetic = spec.txt\nseed = 1\ndraws = 50\nsweep = n\n\
                grid_min = 500\ngrid_max = 10000\ngrid_count = 4\n\
                notions = accuracy-parity\nout_dir = out\n";
    let cfg = ExperimentConfig::parse(text, &dir, &[])?;
    let result = run_experiment(&cfg)?;
    println!("{:>6} {:>6} {:>10} {:>10} {:>10} {:>10}", "n", "group", "F*", "width", "bound", "measured");
    for r in &result.rows {
        println!(
            "{:>6} {:>6} {:>+10.4} {:>10.2e} {:>10.2e} {:>10.2e}",
            r.n,
            r.group,
            r.fair_star,
            r.fair_priv_max - r.fair_priv_min,
            r.bound_lemma,
            r.bound_measured
        );
    }
    println!("csv written to {}", result.write(&cfg)?.display());
    Ok(())
}
