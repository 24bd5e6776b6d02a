use std::fs;
use std::path::{Path, PathBuf};

use sls_cli::{run, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION};
use sls_core::reachability::ReachError;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn sls(args: &[&str]) -> i32 {
    run(std::iter::once("sls").chain(args.iter().copied()))
}

fn read_dir_sorted(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            (p.file_name().unwrap().into(), bytes)
        })
        .collect();
    files.sort();
    files
}

#[test]
fn validate_accepts_the_bundled_inputs() {
    assert_eq!(sls(&["validate", "--game", &data("evasion.sg"), "--dra", &data("eventually_target.dra")]), EXIT_OK);
}

#[test]
fn input_errors_exit_with_two() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let game = data("evasion.sg");
    let dra = data("eventually_target.dra");
    assert_eq!(sls(&["synth-max-prob", "--game", &game, "--dra", "missing.dra", "--out", o]), EXIT_VALIDATION);
    assert_eq!(sls(&["synth-max-prob", "--game", &game, "--dra", &dra, "--out", o, "--delta", "0"]), EXIT_VALIDATION);
    assert_eq!(sls(&["synth-max-prob", "--game", &game]), EXIT_VALIDATION);
    assert_eq!(sls(&["validate", "--game", &game, "--policy", &dra]), EXIT_VALIDATION);

    let bad = out.path().join("bad.sg");
    fs::write(&bad, "sg v1\nstates a\n").unwrap();
    assert_eq!(sls(&["validate", "--game", bad.to_str().unwrap()]), EXIT_VALIDATION);

    // Labels over propositions the automaton does not know.
    assert_eq!(sls(&["validate", "--game", &game, "--dra", &data("eventually_a.dra")]), EXIT_VALIDATION);
}

#[test]
fn numerical_failures_exit_with_three() {
    let e = anyhow::Error::from(sls_core::Error::from(ReachError::NonConvergence(5)));
    assert_eq!(sls_cli::commands::exit_code(&e), EXIT_NUMERICAL);
}

#[test]
fn evasion_policy_mixes_evenly() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let code = sls(&[
        "synth-max-prob",
        "--game",
        &data("evasion.sg"),
        "--dra",
        &data("eventually_target.dra"),
        "--delta",
        "1e-10",
        "--out",
        o,
    ]);
    assert_eq!(code, EXIT_OK);
    let policy = fs::read_to_string(out.path().join("policy.txt")).unwrap();
    let start: Vec<f64> = policy
        .lines()
        .filter(|l| l.starts_with("start|q0 "))
        .map(|l| l.rsplit(' ').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(start.len(), 2);
    assert!(start.iter().all(|p| (p - 0.5).abs() <= 1e-6), "{start:?}");
    let values = fs::read_to_string(out.path().join("start_values.csv")).unwrap();
    assert!(values.contains("start,1"));
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = tempfile::tempdir().unwrap();
    let cfg_path = cfg.path().join("grid.toml");
    fs::write(&cfg_path, "n = 4\nsamples = 200\nseed = 5\n\n[[blocks]]\nprop = \"obstacle\"\nfrom = [1, 1]\nto = [2, 1]\n")
        .unwrap();
    let grid = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &grid {
        let o = d.path().to_str().unwrap();
        assert_eq!(sls(&["gen-gridworld", "--config", cfg_path.to_str().unwrap(), "--out", o]), EXIT_OK);
    }
    assert_eq!(read_dir_sorted(grid[0].path()), read_dir_sorted(grid[1].path()));

    let game = grid[0].path().join("game.sg");
    let dra = cfg.path().join("safe.dra");
    fs::write(
        &dra,
        "dra v1\nalphabet obstacle oob\nstates ok crash\ninitial ok\nedges\nok !obstacle & !oob ok\n\
         ok obstacle | oob crash\ncrash true crash\npairs\n1 L:{crash} K:{ok}\n",
    )
    .unwrap();
    let runs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &runs {
        let code = sls(&[
            "compare",
            "--game",
            game.to_str().unwrap(),
            "--dra",
            dra.to_str().unwrap(),
            "--psi",
            "G !obstacle",
            "--alpha",
            "20",
            "--runs",
            "200",
            "--seed",
            "3",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
    }
    assert_eq!(read_dir_sorted(runs[0].path()), read_dir_sorted(runs[1].path()));
}
