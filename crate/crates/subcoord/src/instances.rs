//! Instance generators for experiments and verification: a fixed
//! three-agent benchmark, random coverage objectives, and random digraphs.

use rand::Rng;

use crate::objective::{CoverageObjective, GroundSet, RewardScale};
use crate::AgentId;

/// Fixed benchmark: 3 agents × 3 actions over 15 targets.
///
/// Each agent owns a "big" action covering three shared targets plus one
/// private target (singleton value 4), a two-target private action, and a
/// duplicate action overlapping the shared pool. Isolated agents all chase
/// the big action (joint value 6), while coordinated agents split into one
/// big + two private picks (joint value 8, the optimum). Curvature is 0.75.
pub fn benchmark_three_agents() -> (GroundSet, CoverageObjective, RewardScale) {
    // Targets: 0-2 shared pool, 3-5 big-private, 6-11 solo pairs,
    // 12-14 dup-private.
    let covers: Vec<Vec<usize>> = vec![
        // Agent 0: big, solo, dup.
        vec![0, 1, 2, 3],
        vec![6, 7],
        vec![0, 12],
        // Agent 1.
        vec![0, 1, 2, 4],
        vec![8, 9],
        vec![0, 13],
        // Agent 2.
        vec![0, 1, 2, 5],
        vec![10, 11],
        vec![0, 14],
    ];
    let ground = GroundSet::from_counts(&[3, 3, 3]).expect("static instance");
    let objective = CoverageObjective::from_static_covers(15, covers).expect("static instance");
    let scale = RewardScale::new(4.0).expect("static instance");
    (ground, objective, scale)
}

/// Random static coverage objective with at most `max_total_actions`
/// actions split over 2–4 agents. Suitable for the exhaustive property
/// checkers when `max_total_actions ≤ 12`.
pub fn random_coverage<R: Rng + ?Sized>(
    rng: &mut R,
    max_total_actions: usize,
) -> (GroundSet, CoverageObjective, RewardScale) {
    let max_total = max_total_actions.max(2);
    let agents = rng.random_range(2..=4usize.min(max_total));
    let mut counts = vec![1usize; agents];
    let mut total = agents;
    while total < max_total && rng.random::<f64>() < 0.7 {
        counts[rng.random_range(0..agents)] += 1;
        total += 1;
    }
    let targets = rng.random_range(1..=12usize);
    let density = rng.random_range(0.2..0.7);
    let covers: Vec<Vec<usize>> = (0..total)
        .map(|_| {
            (0..targets)
                .filter(|_| rng.random::<f64>() < density)
                .collect()
        })
        .collect();
    let max_cover = covers.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let ground = GroundSet::from_counts(&counts).expect("counts are positive");
    let objective =
        CoverageObjective::from_static_covers(targets, covers).expect("covers fit the universe");
    let scale = RewardScale::new(max_cover as f64).expect("positive");
    (ground, objective, scale)
}

/// Random static coverage objective with exactly `agents` agents and
/// `actions_per_agent` actions each — for runs where the topology fixes
/// the agent count.
pub fn random_coverage_for_agents<R: Rng + ?Sized>(
    rng: &mut R,
    agents: usize,
    actions_per_agent: usize,
    targets: usize,
) -> (GroundSet, CoverageObjective, RewardScale) {
    let total = agents * actions_per_agent;
    let covers: Vec<Vec<usize>> = (0..total)
        .map(|_| (0..targets).filter(|_| rng.random::<f64>() < 0.4).collect())
        .collect();
    let max_cover = covers.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let ground = GroundSet::from_counts(&vec![actions_per_agent; agents]).expect("positive");
    let objective =
        CoverageObjective::from_static_covers(targets, covers).expect("covers fit the universe");
    let scale = RewardScale::new(max_cover as f64).expect("positive");
    (ground, objective, scale)
}

/// Edge list of an Erdős–Rényi digraph on `n` agents (no self-loops).
pub fn random_digraph<R: Rng + ?Sized>(rng: &mut R, n: usize, p: f64) -> Vec<(AgentId, AgentId)> {
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if i != j && rng.random::<f64>() < p {
                edges.push((j, i));
            }
        }
    }
    edges
}
