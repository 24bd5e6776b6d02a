mod oracles;

use nalgebra::DMatrix;
use rand::Rng;
use sls_core::acpc::{evaluate_chain, policy_iteration, CostAssignment, PiOptions, Solver, SubGame};

fn random_chain(rng: &mut rand_chacha::ChaCha8Rng, m: usize) -> Vec<Vec<(usize, f64)>> {
    (0..m)
        .map(|_| {
            let k = rng.random_range(1..=3);
            oracles::random_row(rng, m, k)
        })
        .collect()
}

fn dense(rows: &[Vec<(usize, f64)>]) -> DMatrix<f64> {
    let m = rows.len();
    let mut p = DMatrix::zeros(m, m);
    for (i, r) in rows.iter().enumerate() {
        for &(j, x) in r {
            p[(i, j)] += x;
        }
    }
    p
}

#[test]
fn two_and_three_state_cycles() {
    let two = vec![vec![(1, 1.0)], vec![(0, 1.0)]];
    let three = vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(0, 1.0)]];
    for solver in [Solver::Full, Solver::Reduced] {
        let a = evaluate_chain(&two, &[0.0, 20.0], &[true, false], solver).unwrap();
        let b = evaluate_chain(&three, &[0.0, 20.0, 20.0], &[true, false, false], solver).unwrap();
        assert!(a.j.iter().all(|j| (j - 20.0).abs() <= 1e-9));
        assert!(b.j.iter().all(|j| (j - 40.0).abs() <= 1e-9));
        assert!(a.max_residual() <= 1e-8 && b.max_residual() <= 1e-8);
    }
}

#[test]
fn random_chains_satisfy_the_identities() {
    let mut rng = oracles::rng(41);
    let mut evaluated = 0;
    while evaluated < 300 {
        let m = rng.random_range(1..=12);
        let rows = random_chain(&mut rng, m);
        let cycle: Vec<bool> = (0..m).map(|_| rng.random_bool(0.4)).collect();
        let g: Vec<f64> = (0..m).map(|_| if rng.random_bool(0.5) { 0.0 } else { 20.0 }).collect();
        // Chains with a recurrent class outside the cycle set are refused.
        let Ok(full) = evaluate_chain(&rows, &g, &cycle, Solver::Full) else {
            continue;
        };
        let reduced = evaluate_chain(&rows, &g, &cycle, Solver::Reduced).unwrap();
        assert!(full.max_residual() <= 1e-8, "{:?}", full.residuals);
        assert!(reduced.max_residual() <= 1e-8, "{:?}", reduced.residuals);
        for i in 0..m {
            assert!((full.j[i] - reduced.j[i]).abs() <= 1e-8 * (1.0 + full.j[i].abs()));
        }
        if full.unichain {
            let want = oracles::cost_per_cycle(&dense(&rows), &g, &cycle);
            assert!((full.j[0] - want).abs() <= 1e-8 * (1.0 + want.abs()), "{} vs {want}", full.j[0]);
        }
        evaluated += 1;
    }
}

#[test]
fn adversary_free_policy_iteration_matches_enumeration() {
    let mut rng = oracles::rng(42);
    for case in 0..20 {
        let m = rng.random_range(2..=6);
        let game = oracles::random_unichain(&mut rng, m, 3);
        let mut cycle = vec![false; m];
        cycle[0] = true;
        for c in cycle.iter_mut().skip(1) {
            *c = rng.random_bool(0.3);
        }
        let cost = CostAssignment {
            alpha: 20.0,
            g: (0..m).map(|_| if rng.random_bool(0.5) { 0.0 } else { 20.0 }).collect(),
        };
        let enabled = (0..m).map(|s| (0..game.num_ctrl(s)).collect()).collect();
        let sub = SubGame::new(&game, (0..m).collect(), enabled, &cycle).unwrap();
        let res = policy_iteration(&sub, &cost, None, None, &PiOptions::default()).unwrap();
        let want = oracles::min_cost_per_cycle(&game, &cost.g, &cycle);
        assert!((res.gain() - want).abs() <= 1e-6, "case {case}: {} vs {want}", res.gain());
        for w in res.trace.windows(2) {
            let (a, b) = (max(&w[0]), max(&w[1]));
            assert!(b <= a + 1e-10, "gain rose from {a} to {b}");
        }
    }
}

fn max(j: &[f64]) -> f64 {
    j.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn policy_iteration_gains_never_rise() {
    let mut rng = oracles::rng(43);
    let mut runs = 0;
    while runs < 30 {
        let shape = oracles::GameShape {
            states: rng.random_range(2..=6),
            max_ctrl: 3,
            max_adv: 2,
            max_support: 3,
            alphabet: vec!["a"],
        };
        let game = oracles::random_game(&mut rng, &shape);
        let m = game.num_states();
        let cycle: Vec<bool> = (0..m).map(|s| s == 0 || rng.random_bool(0.3)).collect();
        let cost = CostAssignment {
            alpha: 20.0,
            g: (0..m).map(|_| if rng.random_bool(0.5) { 0.0 } else { 20.0 }).collect(),
        };
        let enabled = (0..m).map(|s| (0..game.num_ctrl(s)).collect()).collect();
        let sub = SubGame::new(&game, (0..m).collect(), enabled, &cycle).unwrap();
        // Components where the adversary can avoid the cycle set are skipped.
        let Ok(res) = policy_iteration(&sub, &cost, None, None, &PiOptions::default()) else {
            continue;
        };
        for w in res.trace.windows(2) {
            assert!(max(&w[1]) <= max(&w[0]) + 1e-10);
        }
        assert!(res.gain_bias.max_residual() <= 1e-8);
        runs += 1;
    }
}
