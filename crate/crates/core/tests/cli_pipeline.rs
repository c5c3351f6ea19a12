use std::fs;
use std::path::Path;

use fairbound::cli::main_with_args;

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("fairbound").chain(args.iter().copied()))
}

fn write_inputs(dir: &Path) {
    fs::write(
        dir.join("spec.txt"),
        "features = 2\nlabels = 2\nsensitive = 2\n\
         cell.0.0.count = 60\ncell.0.0.mean = -1, 0.5\n\
         cell.0.1.count = 40\ncell.0.1.mean = -1, -0.5\n\
         cell.1.0.count = 40\ncell.1.0.mean = 1, 0.5\n\
         cell.1.1.count = 60\ncell.1.1.mean = 1, -0.5\n",
    )
    .unwrap();
    fs::write(
        dir.join("exp.txt"),
        "synthetic = spec.txt\nseed = 1\ndraws = 4\ngrid_min = 80\ngrid_max = 200\ngrid_count = 2\ndata_seed = 7\nout_dir = out\n",
    )
    .unwrap();
}

#[test]
fn experiment_seed_override_changes_only_seeded_output() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let cfg = dir.path().join("exp.txt");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(run(&["experiment", "--config", cfg]), 0);
    let a = fs::read_to_string(dir.path().join("out/experiment.csv")).unwrap();
    assert_eq!(run(&["experiment", "--config", cfg, "--seed", "2"]), 0);
    let b = fs::read_to_string(dir.path().join("out/experiment.csv")).unwrap();
    assert_ne!(a, b);

    let table = |text: &str| -> Vec<csv::StringRecord> {
        csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes())
            .records()
            .map(Result::unwrap)
            .collect()
    };
    // 2 grid points x 4 equalized-odds groups.
    assert_eq!(table(&a).len(), 8);
    assert_eq!(&table(&a)[0][6], "y=0,s=0");
    // With the data seed pinned, the optimum does not depend on the draw seed.
    let fair_star = |text: &str| -> Vec<String> { table(text).iter().map(|r| r[7].to_string()).collect() };
    assert_eq!(fair_star(&a), fair_star(&b));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let cfg = dir.path().join("exp.txt");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(run(&["experiment", "--config", cfg, "--set", "bogus=1"]), 2);
    assert_eq!(run(&["experiment", "--config", cfg, "--set", "sweep=lambda"]), 2);
    assert_eq!(run(&["experiment", "--config", cfg, "--set", "nonsense"]), 2);
}

#[test]
fn train_bound_and_table_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_string();
    assert_eq!(run(&["gen-data", "--spec", &p("spec.txt"), "--seed", "4", "--out", &p("d.csv")]), 0);
    let labels = ["--label-values", "0,1", "--sensitive-values", "0,1"];
    let (d, h, b, t) = (p("d.csv"), p("h.txt"), p("b.csv"), p("t.csv"));
    let mut train: Vec<&str> = vec!["train", "--data", &d, "--out", &h];
    train.extend(labels);
    assert_eq!(run(&train), 0);

    let mut bound: Vec<&str> = vec!["bound", "--model", &h, "--data", &d, "--notion", "accuracy-parity", "--out", &b];
    bound.extend(labels);
    assert_eq!(run(&bound), 0);
    let csv = fs::read_to_string(&b).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "notion,k,chi,dist,dist_provenance,markov,truncated,chernoff,best,flags"
    );
    assert_eq!(lines.count(), 2);

    let mut table: Vec<&str> = vec!["table", "--name", "synthetic", "--model", &h, "--train-data", &d, "--out", &t];
    table.extend(labels);
    assert_eq!(run(&table), 0);
    let csv = fs::read_to_string(&t).unwrap();
    assert!(csv.starts_with("dataset,n,equality-of-opportunity,equalized-odds,demographic-parity,accuracy-parity,accuracy\n"));
    assert!(csv.contains("synthetic,200,"));
}
