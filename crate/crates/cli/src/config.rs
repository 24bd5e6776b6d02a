//! Grid-world configuration (TOML).
//!
//! ```toml
//! n = 10
//! samples = 1000
//! seed = 7
//! initial = [0, 0]
//!
//! [dynamics]
//! cell = 0.3
//! sigma = 0.15
//! noise_bound = 0.05   # 0 for untruncated noise
//!
//! [labels]
//! home = [[0, 0]]
//! dest1 = [[8, 1]]
//!
//! [[blocks]]
//! prop = "obstacle"
//! from = [4, 3]
//! to = [5, 6]
//! ```
//!
//! Cells are `[col, row]`; blocks are inclusive rectangles.

use std::collections::BTreeMap;

use serde::Deserialize;

use sls_core::abstraction::{build_game, octant_primitives, AbstractionError, CellSampling, GridWorld, Regions};
use sls_core::game::StochasticGame;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub initial: Option<[usize; 2]>,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub labels: BTreeMap<String, Vec<[usize; 2]>>,
    #[serde(default)]
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub cell: f64,
    pub dt: f64,
    pub sigma: f64,
    pub noise_bound: f64,
    pub control: f64,
    pub attack: f64,
    /// Sample cell centers instead of uniform positions.
    pub center: bool,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            cell: 0.3,
            dt: 1.0,
            sigma: 0.15,
            noise_bound: 0.05,
            control: 0.3,
            attack: 0.2,
            center: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub prop: String,
    pub from: [usize; 2],
    pub to: [usize; 2],
}

pub const DEFAULT_SAMPLES: usize = 1000;

impl GridConfig {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn world(&self, n: usize) -> GridWorld {
        let d = &self.dynamics;
        let mut w = GridWorld::uav(n);
        w.cell = d.cell;
        w.dt = d.dt;
        w.sigma = d.sigma;
        w.noise_bound = (d.noise_bound > 0.0).then_some(d.noise_bound);
        w.sampling = if d.center { CellSampling::Center } else { CellSampling::Uniform };
        w.ctrl = octant_primitives(d.control, "stay");
        w.adv = if d.attack == 0.0 {
            octant_primitives(0.0, "none").into_iter().take(1).collect()
        } else {
            octant_primitives(d.attack, "none")
        };
        w
    }

    /// Region names, labels and alphabet for an `n × n` grid.
    pub fn regions(&self, w: &GridWorld) -> Result<Regions, AbstractionError> {
        let n = w.n;
        let mut labels = vec![Vec::<String>::new(); n * n];
        let mut alphabet: Vec<String> = Vec::new();
        let mut mark = |prop: &str, c: usize, r: usize| -> Result<(), AbstractionError> {
            if c >= n || r >= n {
                return Err(AbstractionError::InvalidParameter(format!(
                    "cell [{c}, {r}] of {prop} outside the {n}x{n} grid"
                )));
            }
            let l = &mut labels[w.region(c, r)];
            if !l.iter().any(|x| x == prop) {
                l.push(prop.to_string());
                l.sort();
            }
            Ok(())
        };
        for (prop, cells) in &self.labels {
            alphabet.push(prop.clone());
            for &[c, r] in cells {
                mark(prop, c, r)?;
            }
        }
        for b in &self.blocks {
            alphabet.push(b.prop.clone());
            for c in b.from[0].min(b.to[0])..=b.from[0].max(b.to[0]) {
                for r in b.from[1].min(b.to[1])..=b.from[1].max(b.to[1]) {
                    mark(&b.prop, c, r)?;
                }
            }
        }
        alphabet.sort();
        alphabet.dedup();
        let [c0, r0] = self.initial.unwrap_or([0, 0]);
        if c0 >= n || r0 >= n {
            return Err(AbstractionError::InvalidParameter("initial cell outside the grid".into()));
        }
        Ok(Regions {
            names: (0..n * n).map(|r| w.region_name(r)).collect(),
            labels,
            alphabet,
            initial: w.region(c0, r0),
        })
    }

    /// Abstraction of the configured grid. Arguments override the file.
    pub fn build(
        &self,
        n: Option<usize>,
        samples: Option<usize>,
        seed: Option<u64>,
    ) -> Result<(StochasticGame, GridWorld), AbstractionError> {
        let n = n.or(self.n).unwrap_or(10);
        if n == 0 {
            return Err(AbstractionError::InvalidParameter("grid size must be positive".into()));
        }
        let w = self.world(n);
        let regions = self.regions(&w)?;
        let k = samples.or(self.samples).unwrap_or(DEFAULT_SAMPLES);
        let g = build_game(&w, k, &regions, seed.or(self.seed).unwrap_or(0))?;
        Ok((g, w))
    }
}
