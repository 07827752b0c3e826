//! Seeded target-motion model for time-varying coverage objectives.
//!
//! Targets random-walk on a grid; actions are fixed rectangular sensing
//! regions. The walk is driven by its own seed, so the objective is
//! reproducible independently of the run seed that drives the learners.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::objective::{CoverageObjective, TargetSet};

/// Grid dimensions, target count, and walk seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MotionModel {
    pub grid_width: usize,
    pub grid_height: usize,
    pub num_targets: usize,
    pub seed: u64,
}

/// Inclusive rectangle of grid cells sensed by one action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Region {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }
}

impl MotionModel {
    fn validate(&self, regions: &[Region]) -> Result<()> {
        if self.grid_width == 0 || self.grid_height == 0 {
            return Err(Error::Input("grid dimensions must be positive".into()));
        }
        if self.num_targets == 0 {
            return Err(Error::Input(
                "motion model needs at least one target".into(),
            ));
        }
        for (i, r) in regions.iter().enumerate() {
            if r.x1 < r.x0 || r.y1 < r.y0 {
                return Err(Error::Input(format!("region {i} is inverted")));
            }
            if r.x1 >= self.grid_width || r.y1 >= self.grid_height {
                return Err(Error::Input(format!("region {i} leaves the grid")));
            }
        }
        Ok(())
    }

    /// Target positions for every step `1..=horizon`. Each target starts
    /// uniformly at random and then steps {stay, N, S, E, W} with equal
    /// probability, clamped to the grid.
    pub fn positions(&self, horizon: usize) -> Vec<Vec<(usize, usize)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut current: Vec<(usize, usize)> = (0..self.num_targets)
            .map(|_| {
                (
                    rng.random_range(0..self.grid_width),
                    rng.random_range(0..self.grid_height),
                )
            })
            .collect();
        let mut all = Vec::with_capacity(horizon);
        for step in 0..horizon {
            if step > 0 {
                for pos in &mut current {
                    match rng.random_range(0..5u8) {
                        1 if pos.1 + 1 < self.grid_height => pos.1 += 1,
                        2 if pos.1 > 0 => pos.1 -= 1,
                        3 if pos.0 + 1 < self.grid_width => pos.0 += 1,
                        4 if pos.0 > 0 => pos.0 -= 1,
                        _ => {}
                    }
                }
            }
            all.push(current.clone());
        }
        all
    }

    /// Precompute the per-step coverage objective for `1..=horizon`.
    pub fn build_objective(&self, regions: &[Region], horizon: usize) -> Result<CoverageObjective> {
        self.validate(regions)?;
        if horizon == 0 {
            return Err(Error::Input("horizon must be at least 1".into()));
        }
        let positions = self.positions(horizon);
        let mut per_step = Vec::with_capacity(horizon);
        for pos in &positions {
            let covers = regions
                .iter()
                .map(|r| {
                    TargetSet::from_targets(
                        self.num_targets,
                        pos.iter()
                            .enumerate()
                            .filter(|(_, &(x, y))| r.contains(x, y))
                            .map(|(k, _)| k),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            per_step.push(covers);
        }
        CoverageObjective::from_per_step_sets(self.num_targets, per_step)
    }
}
