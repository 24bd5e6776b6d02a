//! Zero-sum matrix games solved by a dense simplex.
//!
//! The row player maximizes `xᵀ A y`, the column player minimizes it.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixGameError {
    #[error("payoff matrix must be non-empty and rectangular with finite entries")]
    InvalidPayoff,
    #[error("simplex did not terminate within {0} pivots")]
    NumericalFailure(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
}

impl MatrixGame {
    pub fn new(payoff: Vec<Vec<f64>>) -> Result<Self, MatrixGameError> {
        let rows = payoff.len();
        let cols = payoff.first().map(Vec::len).unwrap_or(0);
        if rows == 0 || cols == 0 || payoff.iter().any(|r| r.len() != cols) {
            return Err(MatrixGameError::InvalidPayoff);
        }
        let a: Vec<f64> = payoff.into_iter().flatten().collect();
        if a.iter().any(|x| !x.is_finite()) {
            return Err(MatrixGameError::InvalidPayoff);
        }
        Ok(Self { rows, cols, a })
    }

    /// Row-major `rows × cols` payoff.
    pub fn from_flat(rows: usize, cols: usize, a: Vec<f64>) -> Result<Self, MatrixGameError> {
        if rows == 0 || cols == 0 || a.len() != rows * cols || a.iter().any(|x| !x.is_finite()) {
            return Err(MatrixGameError::InvalidPayoff);
        }
        Ok(Self { rows, cols, a })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    pub fn negated_transpose(&self) -> MatrixGame {
        let mut a = Vec::with_capacity(self.a.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                a.push(-self.get(i, j));
            }
        }
        MatrixGame {
            rows: self.cols,
            cols: self.rows,
            a,
        }
    }

    /// `xᵀ A y`.
    pub fn payoff(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += x[i] * self.get(i, j) * y[j];
            }
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSolution {
    pub value: f64,
    pub row_strategy: Vec<f64>,
    pub col_strategy: Vec<f64>,
}

const PIVOT_TOL: f64 = 1e-12;
const SUPPORT_TOL: f64 = 1e-12;

fn normalize(v: &mut [f64]) {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
}

/// Solves the game exactly up to floating point. The payoff is rescaled to
/// `B = (A − min) / (max − min) + 1`, so entries lie in `[1, 2]` whatever
/// the spread of `A`, then `max Σy  s.t.  B y ≤ 1, y ≥ 0` is solved with
/// Bland's rule. The column strategy is `y / Σy`, the row strategy comes
/// from the slack reduced costs, and the value of `B` is `1 / Σy`.
pub fn solve_zero_sum(g: &MatrixGame) -> Result<GameSolution, MatrixGameError> {
    let (m, k) = (g.rows, g.cols);
    if m == 1 || k == 1 {
        return Ok(solve_degenerate(g));
    }
    let min = g.a.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = g.a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range == 0.0 {
        let mut x = vec![0.0; m];
        let mut y = vec![0.0; k];
        x[0] = 1.0;
        y[0] = 1.0;
        return Ok(GameSolution {
            value: min,
            row_strategy: x,
            col_strategy: y,
        });
    }

    // Tableau: m constraint rows, columns y_0..y_{k-1}, s_0..s_{m-1}, rhs.
    let width = k + m + 1;
    let mut t = vec![0.0f64; (m + 1) * width];
    for i in 0..m {
        for j in 0..k {
            t[i * width + j] = (g.get(i, j) - min) / range + 1.0;
        }
        t[i * width + k + i] = 1.0;
        t[i * width + k + m] = 1.0;
    }
    let obj = m * width;
    for j in 0..k {
        t[obj + j] = -1.0;
    }
    let mut basis: Vec<usize> = (k..k + m).collect();

    let cap = 100 * (m + k) + 1000;
    let mut pivots = 0;
    loop {
        let entering = (0..k + m).find(|&j| t[obj + j] < -PIVOT_TOL);
        let Some(e) = entering else { break };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t[i * width + e];
            if a > PIVOT_TOL {
                let ratio = t[i * width + k + m] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - PIVOT_TOL
                            || (ratio <= lr + PIVOT_TOL && basis[i] < basis[li])
                        {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        // Entries are ≥ 1, so every column has a positive entry.
        let Some((r, _)) = leave else {
            return Err(MatrixGameError::NumericalFailure(pivots));
        };
        let piv = t[r * width + e];
        for x in &mut t[r * width..(r + 1) * width] {
            *x /= piv;
        }
        for i in 0..=m {
            if i == r {
                continue;
            }
            let f = t[i * width + e];
            if f != 0.0 {
                for j in 0..width {
                    t[i * width + j] -= f * t[r * width + j];
                }
                t[i * width + e] = 0.0;
            }
        }
        basis[r] = e;
        pivots += 1;
        if pivots > cap {
            return Err(MatrixGameError::NumericalFailure(pivots));
        }
    }

    let mut y = vec![0.0; k];
    for (i, &b) in basis.iter().enumerate() {
        if b < k {
            y[b] = t[i * width + k + m];
        }
    }
    let total = t[obj + k + m];
    if !(total > 0.0 && total.is_finite()) {
        return Err(MatrixGameError::NumericalFailure(pivots));
    }
    let mut x: Vec<f64> = (0..m).map(|i| t[obj + k + i]).collect();
    normalize(&mut x);
    normalize(&mut y);
    let value = polish(g, &mut x, &mut y).unwrap_or((1.0 / total - 1.0) * range + min);
    Ok(GameSolution {
        value,
        row_strategy: x,
        col_strategy: y,
    })
}

/// Re-solves the equalizing equations on the supports found by the
/// simplex, which removes the rounding the pivots accumulate. Keeps the
/// simplex answer unless the supports are square and the refined
/// strategies are still optimal.
fn polish(g: &MatrixGame, x: &mut [f64], y: &mut [f64]) -> Option<f64> {
    let rows: Vec<usize> = (0..g.rows).filter(|&i| x[i] > SUPPORT_TOL).collect();
    let cols: Vec<usize> = (0..g.cols).filter(|&j| y[j] > SUPPORT_TOL).collect();
    let n = rows.len();
    if n != cols.len() {
        return None;
    }
    let mut ax = DMatrix::zeros(n + 1, n + 1);
    let mut ay = DMatrix::zeros(n + 1, n + 1);
    for r in 0..n {
        for c in 0..n {
            ax[(r, c)] = g.get(rows[c], cols[r]);
            ay[(r, c)] = g.get(rows[r], cols[c]);
        }
        ax[(r, n)] = -1.0;
        ay[(r, n)] = -1.0;
        ax[(n, r)] = 1.0;
        ay[(n, r)] = 1.0;
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let sx = ax.lu().solve(&rhs)?;
    let sy = ay.lu().solve(&rhs)?;
    let v = sx[n];
    if !v.is_finite() || (v - sy[n]).abs() > 1e-12 * (1.0 + v.abs()) || (0..n).any(|c| sx[c] < 0.0 || sy[c] < 0.0) {
        return None;
    }
    let mut nx = vec![0.0; g.rows];
    let mut ny = vec![0.0; g.cols];
    for c in 0..n {
        nx[rows[c]] = sx[c];
        ny[cols[c]] = sy[c];
    }
    let slack = 1e-12 * (1.0 + v.abs());
    let col_ok = (0..g.cols).all(|j| (0..g.rows).map(|i| nx[i] * g.get(i, j)).sum::<f64>() >= v - slack);
    let row_ok = (0..g.rows).all(|i| (0..g.cols).map(|j| g.get(i, j) * ny[j]).sum::<f64>() <= v + slack);
    if !(col_ok && row_ok) {
        return None;
    }
    x.copy_from_slice(&nx);
    y.copy_from_slice(&ny);
    Some(v)
}

/// One row or one column: the optimum is a pure best response, first index
/// on ties.
fn solve_degenerate(g: &MatrixGame) -> GameSolution {
    let (m, k) = (g.rows, g.cols);
    let mut x = vec![0.0; m];
    let mut y = vec![0.0; k];
    if m == 1 {
        let j = (0..k).fold(0, |b, j| if g.get(0, j) < g.get(0, b) { j } else { b });
        x[0] = 1.0;
        y[j] = 1.0;
        GameSolution {
            value: g.get(0, j),
            row_strategy: x,
            col_strategy: y,
        }
    } else {
        let i = (0..m).fold(0, |b, i| if g.get(i, 0) > g.get(b, 0) { i } else { b });
        x[i] = 1.0;
        y[0] = 1.0;
        GameSolution {
            value: g.get(i, 0),
            row_strategy: x,
            col_strategy: y,
        }
    }
}

/// Solves the game where the row player minimizes: `min_x max_y xᵀ A y`.
pub fn solve_min_max(g: &MatrixGame) -> Result<GameSolution, MatrixGameError> {
    let neg = MatrixGame {
        rows: g.rows,
        cols: g.cols,
        a: g.a.iter().map(|x| -x).collect(),
    };
    let sol = solve_zero_sum(&neg)?;
    Ok(GameSolution {
        value: -sol.value,
        ..sol
    })
}
