mod oracles;

use rand::Rng;
use sls_core::matrix_game::{solve_min_max, solve_zero_sum, MatrixGame};

fn random_payoff(rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Vec<f64>> {
    let m = rng.random_range(2..=3);
    let n = rng.random_range(2..=3);
    (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

fn gap(a: &[Vec<f64>], x: &[f64], y: &[f64]) -> f64 {
    let (m, n) = (a.len(), a[0].len());
    let lower = (0..n)
        .map(|j| (0..m).map(|i| x[i] * a[i][j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let upper = (0..m)
        .map(|i| (0..n).map(|j| a[i][j] * y[j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    upper - lower
}

#[test]
fn random_games_match_support_enumeration() {
    let mut rng = oracles::rng(11);
    for _ in 0..1000 {
        let a = random_payoff(&mut rng);
        let sol = solve_zero_sum(&MatrixGame::new(a.clone()).unwrap()).unwrap();
        let v = oracles::matrix_value(&a);
        assert!((sol.value - v).abs() <= 2e-3, "{a:?}: {} vs {v}", sol.value);
        assert!(gap(&a, &sol.row_strategy, &sol.col_strategy) <= 1e-8);
    }
}

#[test]
fn grid_search_brackets_the_value() {
    let mut rng = oracles::rng(12);
    for _ in 0..100 {
        let a = random_payoff(&mut rng);
        let sol = solve_zero_sum(&MatrixGame::new(a.clone()).unwrap()).unwrap();
        let grid = oracles::matrix_value_grid(&a, 300);
        assert!(grid <= sol.value + 1e-9);
        assert!(sol.value - grid <= 2e-2);
    }
}

#[test]
fn min_max_is_the_negated_game() {
    let mut rng = oracles::rng(13);
    for _ in 0..200 {
        let a = random_payoff(&mut rng);
        let neg: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
        let sol = solve_min_max(&MatrixGame::new(a.clone()).unwrap()).unwrap();
        assert!((sol.value + oracles::matrix_value(&neg)).abs() <= 1e-9);
        // The row player now minimizes.
        let worst = (0..a[0].len())
            .map(|j| (0..a.len()).map(|i| sol.row_strategy[i] * a[i][j]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((worst - sol.value).abs() <= 1e-9);
    }
}

#[test]
fn matching_pennies() {
    let sol = solve_zero_sum(&MatrixGame::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()).unwrap();
    assert!((sol.value - 0.5).abs() < 1e-12);
    assert!((sol.row_strategy[0] - 0.5).abs() < 1e-12);
    assert!((sol.col_strategy[0] - 0.5).abs() < 1e-12);
}
