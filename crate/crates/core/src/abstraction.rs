//! Finite stochastic game abstraction of continuous dynamics by sampling.
//!
//! For every region `i` and primitive pair `(u_C, u_A)`, `K` states are
//! drawn from the region and pushed through one noisy step. The successor
//! regions are counted and `Pr(i, u_C, u_A, j) = count_j / K`. Successors
//! outside the partition go to an absorbing sink labeled `oob`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::game::{GameError, Row, StochasticGame};
use crate::ltl::Alphabet;

pub const OOB: &str = "oob";

#[derive(Debug, Error)]
pub enum AbstractionError {
    #[error("cannot sample a state inside region {0}")]
    DegenerateRegion(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// A named representative input.
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub name: String,
    pub u: Vec<f64>,
}

impl Primitive {
    pub fn new(name: impl Into<String>, u: Vec<f64>) -> Self {
        Self { name: name.into(), u }
    }
}

/// Discrete-time dynamics `x' = f(x, u_C, u_A, ϑ)` over a region partition.
pub trait DynamicsOracle: Sync {
    fn num_regions(&self) -> usize;
    /// Region containing `x`, or `None` when out of bounds.
    fn region_of(&self, x: &[f64]) -> Option<usize>;
    /// A state inside `region`; `None` if the region cannot be sampled.
    fn sample_state(&self, region: usize, rng: &mut dyn RngCore) -> Option<Vec<f64>>;
    /// One step; the noise is drawn from `rng`.
    fn step(&self, x: &[f64], uc: &[f64], ua: &[f64], rng: &mut dyn RngCore) -> Vec<f64>;
    fn controller_primitives(&self) -> &[Primitive];
    fn adversary_primitives(&self) -> &[Primitive];
}

/// Names and labels of the regions.
#[derive(Debug, Clone, PartialEq)]
pub struct Regions {
    pub names: Vec<String>,
    pub labels: Vec<Vec<String>>,
    /// Atomic propositions of the game, besides `oob` which is always added.
    pub alphabet: Vec<String>,
    pub initial: usize,
}

/// Seed of the sampling task for `(region, uc, ua)`.
pub fn task_rng(seed: u64, region: usize, uc: usize, ua: usize, nc: usize, na: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((region * nc + uc) * na + ua) as u64);
    rng
}

pub fn build_game(
    oracle: &dyn DynamicsOracle,
    samples_per_cell: usize,
    regions: &Regions,
    seed: u64,
) -> Result<StochasticGame, AbstractionError> {
    let n = oracle.num_regions();
    if n == 0 {
        return Err(AbstractionError::InvalidParameter("no regions".into()));
    }
    if samples_per_cell == 0 {
        return Err(AbstractionError::InvalidParameter("samples per cell must be at least 1".into()));
    }
    if regions.names.len() != n || regions.labels.len() != n {
        return Err(AbstractionError::InvalidParameter(format!(
            "expected {n} region names and labels"
        )));
    }
    if regions.initial >= n {
        return Err(AbstractionError::InvalidParameter("initial region out of range".into()));
    }
    let ctrl = oracle.controller_primitives();
    let adv = oracle.adversary_primitives();
    let (nc, na) = (ctrl.len(), adv.len());
    if nc == 0 || na == 0 {
        return Err(AbstractionError::InvalidParameter("empty primitive set".into()));
    }
    let mut props = regions.alphabet.clone();
    props.push(OOB.to_string());
    props.sort();
    props.dedup();
    let alphabet = Alphabet::new(props).map_err(|e| AbstractionError::InvalidParameter(e.to_string()))?;

    let sink = n;
    let k = samples_per_cell;
    let kernel: Vec<Vec<Row>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rows = Vec::with_capacity(nc * na);
            let mut counts = vec![0usize; n + 1];
            for (c, pc) in ctrl.iter().enumerate() {
                for (a, pa) in adv.iter().enumerate() {
                    let mut rng = task_rng(seed, i, c, a, nc, na);
                    counts.iter_mut().for_each(|x| *x = 0);
                    for _ in 0..k {
                        let x = oracle
                            .sample_state(i, &mut rng)
                            .ok_or(AbstractionError::DegenerateRegion(i))?;
                        let y = oracle.step(&x, &pc.u, &pa.u, &mut rng);
                        counts[oracle.region_of(&y).unwrap_or(sink)] += 1;
                    }
                    rows.push(
                        counts
                            .iter()
                            .enumerate()
                            .filter(|&(_, &m)| m > 0)
                            .map(|(j, &m)| (j, m as f64 / k as f64))
                            .collect(),
                    );
                }
            }
            Ok(rows)
        })
        .collect::<Result<_, AbstractionError>>()?;
    let mut kernel = kernel;
    kernel.push(vec![vec![(sink, 1.0)]; nc * na]);

    let mut names = regions.names.clone();
    names.push(OOB.to_string());
    let mut labels = Vec::with_capacity(n + 1);
    for l in &regions.labels {
        labels.push(
            alphabet
                .letter(l)
                .map_err(|e| AbstractionError::InvalidParameter(e.to_string()))?,
        );
    }
    labels.push(alphabet.letter([OOB]).expect("oob in alphabet"));
    let cn: Vec<String> = ctrl.iter().map(|p| p.name.clone()).collect();
    let an: Vec<String> = adv.iter().map(|p| p.name.clone()).collect();
    let game = StochasticGame::new(
        names,
        alphabet,
        labels,
        vec![cn; n + 1],
        vec![an; n + 1],
        kernel,
        regions.initial,
    )?;
    Ok(game)
}

/// How states are drawn inside a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellSampling {
    Uniform,
    Center,
}

/// Planar single integrator `x' = x + (u_C + u_A + ϑ) Δt` on an `n × n`
/// grid of square cells. Region `row * n + col` covers
/// `[col·w, (col+1)·w) × [row·w, (row+1)·w)`.
#[derive(Debug, Clone)]
pub struct GridWorld {
    pub n: usize,
    pub cell: f64,
    pub dt: f64,
    pub sigma: f64,
    /// Noise is conditioned on `|ϑ_i| ≤ bound` by rejection.
    pub noise_bound: Option<f64>,
    pub sampling: CellSampling,
    pub ctrl: Vec<Primitive>,
    pub adv: Vec<Primitive>,
}

/// The zero input followed by the four compass moves of magnitude `m`.
pub fn compass_primitives(m: f64, stay_name: &str) -> Vec<Primitive> {
    vec![
        Primitive::new(stay_name, vec![0.0, 0.0]),
        Primitive::new("e", vec![m, 0.0]),
        Primitive::new("w", vec![-m, 0.0]),
        Primitive::new("n", vec![0.0, m]),
        Primitive::new("s", vec![0.0, -m]),
    ]
}

/// [`compass_primitives`] plus the four diagonals (corners of `[−m, m]²`).
pub fn octant_primitives(m: f64, stay_name: &str) -> Vec<Primitive> {
    let mut p = compass_primitives(m, stay_name);
    p.extend([
        Primitive::new("ne", vec![m, m]),
        Primitive::new("nw", vec![-m, m]),
        Primitive::new("se", vec![m, -m]),
        Primitive::new("sw", vec![-m, -m]),
    ]);
    p
}

impl GridWorld {
    /// `U = [−0.3, 0.3]²`, `A = [−0.2, 0.2]²`, `σ = 0.15` truncated to
    /// `[−0.05, 0.05]²`, unit time step and cells of width 0.3.
    pub fn uav(n: usize) -> Self {
        Self {
            n,
            cell: 0.3,
            dt: 1.0,
            sigma: 0.15,
            noise_bound: Some(0.05),
            sampling: CellSampling::Uniform,
            ctrl: octant_primitives(0.3, "stay"),
            adv: octant_primitives(0.2, "none"),
        }
    }

    pub fn region(&self, col: usize, row: usize) -> usize {
        row * self.n + col
    }

    /// `(col, row)` of a region.
    pub fn coords(&self, r: usize) -> (usize, usize) {
        (r % self.n, r / self.n)
    }

    pub fn region_name(&self, r: usize) -> String {
        let (c, w) = self.coords(r);
        format!("c{c}_{w}")
    }

    fn noise(&self, rng: &mut dyn RngCore) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let normal = Normal::new(0.0, self.sigma).expect("finite sigma");
        match self.noise_bound {
            None => normal.sample(rng),
            Some(b) => loop {
                let x = normal.sample(rng);
                if x.abs() <= b {
                    return x;
                }
            },
        }
    }
}

impl DynamicsOracle for GridWorld {
    fn num_regions(&self) -> usize {
        self.n * self.n
    }

    fn region_of(&self, x: &[f64]) -> Option<usize> {
        let side = self.n as f64 * self.cell;
        if !(x[0] >= 0.0 && x[0] < side && x[1] >= 0.0 && x[1] < side) {
            return None;
        }
        let col = ((x[0] / self.cell) as usize).min(self.n - 1);
        let row = ((x[1] / self.cell) as usize).min(self.n - 1);
        Some(self.region(col, row))
    }

    fn sample_state(&self, region: usize, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        if region >= self.num_regions() || !(self.cell > 0.0) {
            return None;
        }
        let (c, r) = self.coords(region);
        let (x0, y0) = (c as f64 * self.cell, r as f64 * self.cell);
        let x = match self.sampling {
            CellSampling::Center => vec![x0 + 0.5 * self.cell, y0 + 0.5 * self.cell],
            CellSampling::Uniform => vec![
                x0 + rng.random::<f64>() * self.cell,
                y0 + rng.random::<f64>() * self.cell,
            ],
        };
        (self.region_of(&x) == Some(region)).then_some(x)
    }

    fn step(&self, x: &[f64], uc: &[f64], ua: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        (0..2)
            .map(|i| x[i] + (uc[i] + ua[i] + self.noise(rng)) * self.dt)
            .collect()
    }

    fn controller_primitives(&self) -> &[Primitive] {
        &self.ctrl
    }

    fn adversary_primitives(&self) -> &[Primitive] {
        &self.adv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Cells `[i, i+1)` on the line, `x' = x + u_C + u_A`.
    struct Line;

    impl DynamicsOracle for Line {
        fn num_regions(&self) -> usize {
            2
        }
        fn region_of(&self, x: &[f64]) -> Option<usize> {
            (x[0] >= 0.0 && x[0] < 2.0).then(|| x[0] as usize)
        }
        fn sample_state(&self, region: usize, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
            Some(vec![region as f64 + rng.random::<f64>()])
        }
        fn step(&self, x: &[f64], uc: &[f64], ua: &[f64], _: &mut dyn RngCore) -> Vec<f64> {
            vec![x[0] + uc[0] + ua[0]]
        }
        fn controller_primitives(&self) -> &[Primitive] {
            static P: std::sync::OnceLock<Vec<Primitive>> = std::sync::OnceLock::new();
            P.get_or_init(|| vec![Primitive::new("zero", vec![0.0]), Primitive::new("one", vec![1.0])])
        }
        fn adversary_primitives(&self) -> &[Primitive] {
            static P: std::sync::OnceLock<Vec<Primitive>> = std::sync::OnceLock::new();
            P.get_or_init(|| vec![Primitive::new("none", vec![0.0])])
        }
    }

    fn line_regions() -> Regions {
        Regions {
            names: vec!["a".into(), "b".into()],
            labels: vec![vec![], vec!["goal".into()]],
            alphabet: vec!["goal".into()],
            initial: 0,
        }
    }

    #[test]
    fn deterministic_shift() {
        let g = build_game(&Line, 50, &line_regions(), 7).unwrap();
        assert_eq!(g.num_states(), 3);
        assert_eq!(g.row(0, 1, 0), &[(1, 1.0)]);
        assert_eq!(g.row(0, 0, 0), &[(0, 1.0)]);
        assert_eq!(g.row(1, 1, 0), &[(2, 1.0)]);
        assert_eq!(g.row(2, 0, 0), &[(2, 1.0)]);
        assert!(g.alphabet().contains(OOB));
    }

    #[test]
    fn rejects_zero_samples() {
        assert!(matches!(
            build_game(&Line, 0, &line_regions(), 0),
            Err(AbstractionError::InvalidParameter(_))
        ));
    }

    #[test]
    fn noiseless_grid_is_deterministic() {
        let mut w = GridWorld::uav(3);
        w.sigma = 0.0;
        w.adv = vec![Primitive::new("none", vec![0.0, 0.0])];
        let regions = Regions {
            names: (0..9).map(|r| w.region_name(r)).collect(),
            labels: vec![vec![]; 9],
            alphabet: vec![],
            initial: 0,
        };
        let g = build_game(&w, 200, &regions, 3).unwrap();
        for s in 0..g.num_states() {
            for uc in 0..g.num_ctrl(s) {
                assert_eq!(g.row(s, uc, 0).len(), 1);
            }
        }
        assert_eq!(g.row(w.region(1, 1), 1, 0), &[(w.region(2, 1), 1.0)]);
        assert_eq!(g.row(w.region(0, 1), 2, 0), &[(9, 1.0)]);
    }
}
