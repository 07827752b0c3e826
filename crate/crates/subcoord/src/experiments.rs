//! Multi-seed sweeps and the single-agent delayed-bandit harness used by
//! the verification suite and the `sweep` CLI subcommand.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{run, Scenario, Trace};
use crate::error::{Error, Result};
use crate::learner::LearnerState;
use crate::metrics::{approximation_gap, BoundReport};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

pub fn summarize(xs: &[f64]) -> SummaryStats {
    let n = xs.len();
    assert!(n > 0, "cannot summarize an empty sample");
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std_err = if n > 1 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    SummaryStats { mean, std_err, n }
}

/// Per-seed results of one scenario run.
#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub mean_value: f64,
    /// Mean joint value over the final 10% of steps.
    pub tail_mean_value: f64,
    pub report: BoundReport,
}

/// Run the scenario once per seed and measure the bound terms on every
/// realized trace.
pub fn sweep(base: &Scenario, seeds: &[u64]) -> Result<Vec<SeedOutcome>> {
    seeds
        .iter()
        .map(|&seed| {
            let scenario = base.with_seed(seed);
            let trace = run(&scenario)?;
            let report = approximation_gap(
                &scenario.objective,
                &trace.actions,
                &scenario.ground,
                &scenario.topology,
            )?;
            Ok(SeedOutcome {
                seed,
                mean_value: trace.mean_value(),
                tail_mean_value: trace.tail_mean_value(0.1),
                report,
            })
        })
        .collect()
}

/// Run the scenario once per seed without bound diagnostics (for instances
/// beyond the brute-force guard, or when only the traces matter).
pub fn sweep_traces(base: &Scenario, seeds: &[u64]) -> Result<Vec<Trace>> {
    seeds.iter().map(|&s| run(&base.with_seed(s))).collect()
}

/// Single learner against a fixed reward table with artificial feedback
/// delay — the bandit protocol stripped of the network.
#[derive(Debug, Clone, Copy)]
pub struct DelayedBanditConfig {
    pub arms: usize,
    pub delay: u32,
    pub horizon: usize,
}

/// Realized static regret of one run: `T · max_a r_a − Σ_t r_{a_t}`.
pub fn delayed_bandit_regret(cfg: &DelayedBanditConfig, rewards: &[f64], seed: u64) -> Result<f64> {
    if rewards.len() != cfg.arms {
        return Err(Error::Input(format!(
            "reward table has {} entries for {} arms",
            rewards.len(),
            cfg.arms
        )));
    }
    if rewards.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::Input("rewards must lie in [0, 1]".into()));
    }
    let mut learner = LearnerState::new(cfg.arms, cfg.delay, cfg.horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = cfg.delay as usize;
    let mut total = 0.0;
    for t in 1..=cfg.horizon {
        let a = learner.sample(&mut rng);
        total += rewards[a];
        if t > d {
            let s = t - d;
            let played = learner
                .pending_decision(s)
                .expect("decision at s is still outstanding")
                .action;
            learner.feed(s, rewards[played])?;
        }
    }
    let best = rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(cfg.horizon as f64 * best - total)
}

/// Mean realized regret over a seed grid.
pub fn mean_delayed_bandit_regret(
    cfg: &DelayedBanditConfig,
    rewards: &[f64],
    seeds: &[u64],
) -> Result<SummaryStats> {
    let samples = seeds
        .iter()
        .map(|&s| delayed_bandit_regret(cfg, rewards, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&samples))
}

/// Evenly spread reward table in `[0.2, 0.9]` with a unique best arm;
/// the canonical table for regret-growth experiments.
pub fn spread_reward_table(arms: usize) -> Vec<f64> {
    (0..arms)
        .map(|a| 0.2 + 0.7 * (a as f64 / (arms.max(2) - 1) as f64))
        .collect()
}
