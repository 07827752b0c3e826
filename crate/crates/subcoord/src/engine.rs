//! Lockstep simulation of the distributed online greedy protocol.
//!
//! Each timestep runs four phases for every agent: sample an action from
//! the learner, broadcast it, step the message bus once, and feed every
//! decision whose delayed feedback completed this step. All agents sample
//! before any message moves, so there is no intra-step information
//! leakage. Runs are deterministic given the scenario seed: every agent
//! owns an independent RNG stream derived from (seed, agent id).

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::learner::LearnerState;
use crate::network::{MessageBus, Topology};
use crate::objective::{CoverageObjective, GroundSet, RewardScale, SetFunction};
use crate::{ActionId, AgentId, Timestep};

/// Everything a run needs: who talks to whom, what actions exist, how they
/// score, and how long to play.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Topology,
    pub ground: GroundSet,
    pub objective: CoverageObjective,
    pub scale: RewardScale,
    pub horizon: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Input("horizon must be at least 1".into()));
        }
        if self.topology.num_agents() != self.ground.num_agents() {
            return Err(Error::Input(format!(
                "topology has {} agents but the ground set has {}",
                self.topology.num_agents(),
                self.ground.num_agents()
            )));
        }
        if self.objective.num_actions() != self.ground.num_actions() {
            return Err(Error::Input(format!(
                "objective knows {} actions but the ground set has {}",
                self.objective.num_actions(),
                self.ground.num_actions()
            )));
        }
        Ok(())
    }

    /// Same scenario with a different seed (used by seed sweeps).
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.seed = seed;
        s
    }
}

/// Reward bookkeeping for one (agent, decision step).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardRecord {
    /// Normalized reward fed to the learner.
    pub reward: f64,
    /// Step at which the feedback completed (`s + d_i`).
    pub available_at: Timestep,
}

/// Full record of a run. Row `(t, i)` covers agent `i`'s decision at step
/// `t`; its reward entry stays `None` when the feedback would only have
/// completed after the horizon and was dropped.
#[derive(Debug, Clone)]
pub struct Trace {
    pub num_agents: usize,
    pub horizon: usize,
    pub seed: u64,
    /// `actions[t-1][i]`: global action id selected by agent `i` at `t`.
    pub actions: Vec<Vec<ActionId>>,
    /// `joint_values[t-1]`: objective value of the joint action at `t`.
    pub joint_values: Vec<f64>,
    /// `rewards[t-1][i]`: feedback for the decision made at `t`.
    pub rewards: Vec<Vec<Option<RewardRecord>>>,
    /// `evals[t-1][i]`: objective evaluations charged to agent `i` at `t`.
    pub evals: Vec<Vec<u64>>,
    /// `messages[t-1][i]`: messages handled by agent `i` at `t`.
    pub messages: Vec<Vec<u64>>,
}

/// Derive agent `i`'s RNG seed from the scenario seed (splitmix64 mix), so
/// streams are independent of agent iteration order.
fn agent_seed(seed: u64, agent: AgentId) -> u64 {
    let mut z = seed ^ (agent as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Normalized reward for agent `i`'s decision at step `s`, recomputed from
/// a record of everyone's actions: the marginal gain of `a_{i,s}` given its
/// multi-hop in-neighborhood's actions at `s`, divided by the scale.
/// Costs exactly two objective evaluations.
pub fn reward_for(
    scenario: &Scenario,
    actions: &[Vec<ActionId>],
    i: AgentId,
    s: Timestep,
) -> Result<f64> {
    let row = actions
        .get(s - 1)
        .ok_or_else(|| Error::Protocol(format!("no recorded actions for step {s}")))?;
    if row.len() != scenario.topology.num_agents() {
        return Err(Error::Protocol(format!(
            "incomplete action row at step {s}: {} of {} agents",
            row.len(),
            scenario.topology.num_agents()
        )));
    }
    let neighbors: Vec<ActionId> = scenario
        .topology
        .in_neighborhood(i)
        .iter()
        .map(|&j| row[j])
        .collect();
    let raw = scenario.objective.marginal_gain(s, row[i], &neighbors)?;
    scenario.scale.normalize(raw)
}

/// Run the full protocol and record a [`Trace`].
pub fn run(scenario: &Scenario) -> Result<Trace> {
    scenario.validate()?;
    let topo = &scenario.topology;
    let n = topo.num_agents();
    let horizon = scenario.horizon;

    let mut learners: Vec<LearnerState> = (0..n)
        .map(|i| LearnerState::new(scenario.ground.actions_of(i).len(), topo.delay(i), horizon))
        .collect::<Result<Vec<_>>>()?;
    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| ChaCha8Rng::seed_from_u64(agent_seed(scenario.seed, i)))
        .collect();
    let mut bus = MessageBus::new(topo);

    let mut actions: Vec<Vec<ActionId>> = Vec::with_capacity(horizon);
    let mut joint_values = Vec::with_capacity(horizon);
    let mut rewards: Vec<Vec<Option<RewardRecord>>> = vec![vec![None; n]; horizon];
    let mut evals = vec![vec![0u64; n]; horizon];
    let mut messages = vec![vec![0u64; n]; horizon];

    for t in 1..=horizon {
        // Phase 1: everyone samples.
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            let local = learners[i].sample(&mut rngs[i]);
            debug_assert_eq!(learners[i].current_step(), t);
            row.push(scenario.ground.actions_of(i)[local]);
        }

        // Phase 2: everyone broadcasts.
        for (i, &a) in row.iter().enumerate() {
            bus.broadcast(topo, i, t, a)?;
        }
        actions.push(row);

        // Phase 3: the bus moves everything one hop.
        for (i, delivered) in bus.step(topo).iter().enumerate() {
            messages[t - 1][i] = delivered.len() as u64;
        }

        // Phase 4: feed every decision whose feedback completed at t.
        for i in 0..n {
            for s in bus.complete_at(topo, i, t) {
                let own = actions[s - 1][i];
                let mut neighbor_actions = Vec::with_capacity(topo.in_neighborhood(i).len());
                for &j in topo.in_neighborhood(i) {
                    let a = bus.action_of(i, j, s).ok_or_else(|| {
                        Error::Protocol(format!(
                            "agent {i} is missing {j}'s action for step {s} at step {t}"
                        ))
                    })?;
                    neighbor_actions.push(a);
                }
                let before = scenario.objective.eval_count();
                let raw = scenario
                    .objective
                    .marginal_gain(s, own, &neighbor_actions)?;
                debug_assert_eq!(scenario.objective.eval_count() - before, 2);
                let reward = scenario.scale.normalize(raw)?;
                learners[i].feed(s, reward)?;
                rewards[s - 1][i] = Some(RewardRecord {
                    reward,
                    available_at: t,
                });
                evals[t - 1][i] += 2;
            }
        }

        // Instrumentation: joint objective value (charged to no agent).
        joint_values.push(scenario.objective.evaluate(t, &actions[t - 1])?);
    }

    Ok(Trace {
        num_agents: n,
        horizon,
        seed: scenario.seed,
        actions,
        joint_values,
        rewards,
        evals,
        messages,
    })
}

impl Trace {
    /// Mean joint value over `1..=horizon`.
    pub fn mean_value(&self) -> f64 {
        self.joint_values.iter().sum::<f64>() / self.horizon as f64
    }

    /// Mean joint value over the final `fraction` of the run (e.g. 0.1 for
    /// the last 10% of steps).
    pub fn tail_mean_value(&self, fraction: f64) -> f64 {
        let keep = ((self.horizon as f64 * fraction).ceil() as usize).clamp(1, self.horizon);
        let tail = &self.joint_values[self.horizon - keep..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }

    /// Serialize as CSV with one row per (t, agent). Reward columns are
    /// empty for decisions whose feedback was dropped at the horizon.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("t,agent,action,f_joint,reward_s,reward_available_at,msgs,evals\n");
        for t in 1..=self.horizon {
            for i in 0..self.num_agents {
                let (reward, avail) = match self.rewards[t - 1][i] {
                    Some(r) => (r.reward.to_string(), r.available_at.to_string()),
                    None => (String::new(), String::new()),
                };
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    t,
                    i,
                    self.actions[t - 1][i],
                    self.joint_values[t - 1],
                    reward,
                    avail,
                    self.messages[t - 1][i],
                    self.evals[t - 1][i],
                )
                .expect("writing to a String cannot fail");
            }
        }
        out
    }

    /// Recover the per-step action matrix from a trace CSV.
    pub fn actions_from_csv(csv: &str) -> Result<Vec<Vec<ActionId>>> {
        let mut rows: Vec<(usize, usize, ActionId)> = Vec::new();
        for (lineno, line) in csv.lines().enumerate() {
            if lineno == 0 || line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let parse = |field: Option<&str>, name: &str| -> Result<usize> {
                field
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Parse {
                        line: lineno + 1,
                        msg: format!("bad {name} field"),
                    })
            };
            let t = parse(fields.next(), "t")?;
            let agent = parse(fields.next(), "agent")?;
            let action = parse(fields.next(), "action")?;
            rows.push((t, agent, action));
        }
        if rows.is_empty() {
            return Err(Error::Parse {
                line: 1,
                msg: "trace has no data rows".into(),
            });
        }
        let horizon = rows.iter().map(|r| r.0).max().unwrap();
        let agents = rows.iter().map(|r| r.1).max().unwrap() + 1;
        let mut actions = vec![vec![usize::MAX; agents]; horizon];
        for (t, i, a) in rows {
            if t == 0 {
                return Err(Error::Parse {
                    line: 0,
                    msg: "timesteps are 1-based".into(),
                });
            }
            actions[t - 1][i] = a;
        }
        if actions.iter().flatten().any(|&a| a == usize::MAX) {
            return Err(Error::Parse {
                line: 0,
                msg: "trace is missing (t, agent) rows".into(),
            });
        }
        Ok(actions)
    }
}

/// Per-step computation and communication load, aggregated over a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterReport {
    /// Mean objective evaluations per (agent, step).
    pub evals_mean: f64,
    pub evals_max: u64,
    /// Mean messages handled per (agent, step).
    pub msgs_mean: f64,
    pub msgs_max: u64,
    /// True when every step with completed feedback charged exactly two
    /// evaluations per feed.
    pub two_evals_per_feed: bool,
}

/// Aggregate the trace's per-agent counters.
pub fn counters(trace: &Trace) -> CounterReport {
    let cells = (trace.horizon * trace.num_agents) as f64;
    let evals_total: u64 = trace.evals.iter().flatten().sum();
    let msgs_total: u64 = trace.messages.iter().flatten().sum();
    let evals_max = trace.evals.iter().flatten().copied().max().unwrap_or(0);
    let msgs_max = trace.messages.iter().flatten().copied().max().unwrap_or(0);

    // Feeds completed at step t for agent i = rewards with available_at == t.
    let mut feeds_at = vec![vec![0u64; trace.num_agents]; trace.horizon];
    for per_agent in &trace.rewards {
        for (i, r) in per_agent.iter().enumerate() {
            if let Some(r) = r {
                feeds_at[r.available_at - 1][i] += 1;
            }
        }
    }
    let two_evals_per_feed = trace
        .evals
        .iter()
        .zip(&feeds_at)
        .all(|(evals, feeds)| evals.iter().zip(feeds).all(|(&e, &f)| e == 2 * f));

    CounterReport {
        evals_mean: evals_total as f64 / cells,
        evals_max,
        msgs_mean: msgs_total as f64 / cells,
        msgs_max,
        two_evals_per_feed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    fn small_scenario(topology: Topology, horizon: usize, seed: u64) -> Scenario {
        let (ground, objective, scale) = instances::benchmark_three_agents();
        Scenario {
            topology,
            ground,
            objective,
            scale,
            horizon,
            seed,
        }
    }

    #[test]
    fn single_action_agents_produce_a_constant_trace() {
        let ground = GroundSet::from_counts(&[1, 1]).unwrap();
        let objective = CoverageObjective::from_static_covers(2, vec![vec![0], vec![1]]).unwrap();
        let scenario = Scenario {
            topology: Topology::edgeless(2).unwrap(),
            ground,
            objective,
            scale: RewardScale::new(1.0).unwrap(),
            horizon: 20,
            seed: 7,
        };
        let trace = run(&scenario).unwrap();
        for t in 0..20 {
            assert_eq!(trace.actions[t], vec![0, 1]);
            assert_eq!(trace.joint_values[t], 2.0);
        }
    }

    #[test]
    fn identical_seeds_give_byte_identical_traces() {
        let s = small_scenario(Topology::ring(3).unwrap(), 200, 99);
        let a = run(&s).unwrap().to_csv();
        let b = run(&s).unwrap().to_csv();
        assert_eq!(a, b);
        let c = run(&s.with_seed(100)).unwrap().to_csv();
        assert_ne!(a, c);
    }

    #[test]
    fn feedback_arrives_exactly_at_s_plus_delay() {
        let topo = Topology::path(3).unwrap();
        let s = small_scenario(topo, 50, 3);
        let trace = run(&s).unwrap();
        for t in 1..=50usize {
            for i in 0..3usize {
                let d = s.topology.delay(i) as usize;
                match &trace.rewards[t - 1][i] {
                    Some(r) => assert_eq!(r.available_at, t + d),
                    None => assert!(t + d > 50, "only horizon-edge feedback may drop"),
                }
            }
        }
    }

    #[test]
    fn two_evaluations_per_fed_step() {
        for topo in [
            Topology::complete(3).unwrap(),
            Topology::path(3).unwrap(),
            Topology::edgeless(3).unwrap(),
        ] {
            let s = small_scenario(topo, 60, 5);
            let trace = run(&s).unwrap();
            let report = counters(&trace);
            assert!(report.two_evals_per_feed);
        }
    }

    #[test]
    fn recorded_rewards_match_recomputation() {
        let s = small_scenario(Topology::ring(3).unwrap(), 80, 11);
        let trace = run(&s).unwrap();
        for t in 1..=80usize {
            for i in 0..3 {
                if let Some(r) = &trace.rewards[t - 1][i] {
                    let again = reward_for(&s, &trace.actions, i, t).unwrap();
                    assert!((again - r.reward).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn isolated_agent_reward_is_normalized_singleton_value() {
        let s = small_scenario(Topology::edgeless(3).unwrap(), 30, 2);
        let trace = run(&s).unwrap();
        for t in 1..=30usize {
            for i in 0..3 {
                let r = trace.rewards[t - 1][i].as_ref().unwrap();
                assert_eq!(r.available_at, t);
                let singleton = s.objective.evaluate(t, &[trace.actions[t - 1][i]]).unwrap();
                assert!((r.reward - singleton / s.scale.max_reward()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn replaying_recorded_feedback_reproduces_decisions() {
        // Lockstep causality: decisions depend only on feedback for
        // s ≤ t − d_i, so replaying the recorded schedule must reproduce
        // the action sequence exactly.
        let s = small_scenario(Topology::complete(3).unwrap(), 120, 21);
        let trace = run(&s).unwrap();

        let n = 3;
        let mut learners: Vec<LearnerState> = (0..n)
            .map(|i| {
                LearnerState::new(s.ground.actions_of(i).len(), s.topology.delay(i), s.horizon)
                    .unwrap()
            })
            .collect();
        let mut rngs: Vec<ChaCha8Rng> = (0..n)
            .map(|i| ChaCha8Rng::seed_from_u64(agent_seed(s.seed, i)))
            .collect();
        for t in 1..=s.horizon {
            for (i, (learner, rng)) in learners.iter_mut().zip(&mut rngs).enumerate() {
                let local = learner.sample(rng);
                assert_eq!(s.ground.actions_of(i)[local], trace.actions[t - 1][i]);
            }
            for (i, learner) in learners.iter_mut().enumerate() {
                let d = s.topology.delay(i) as usize;
                if t > d {
                    if let Some(r) = &trace.rewards[t - d - 1][i] {
                        assert_eq!(r.available_at, t);
                        learner.feed(t - d, r.reward).unwrap();
                    }
                }
            }
        }
    }

    #[test]
    fn csv_round_trips_actions() {
        let s = small_scenario(Topology::path(3).unwrap(), 40, 13);
        let trace = run(&s).unwrap();
        let csv = trace.to_csv();
        let actions = Trace::actions_from_csv(&csv).unwrap();
        assert_eq!(actions, trace.actions);
    }

    #[test]
    fn edgeless_runs_handle_no_messages() {
        let s = small_scenario(Topology::edgeless(3).unwrap(), 25, 1);
        let trace = run(&s).unwrap();
        assert_eq!(counters(&trace).msgs_max, 0);
    }

    #[test]
    fn modular_objective_converges_to_the_optimum() {
        // Disjoint covers (curvature 0): no decentralization loss, so the
        // converged tail mean must reach the brute-force optimum.
        let ground = GroundSet::from_counts(&[2, 2]).unwrap();
        let objective = CoverageObjective::from_static_covers(
            7,
            vec![vec![0], vec![1, 2], vec![3], vec![4, 5, 6]],
        )
        .unwrap();
        let scenario = Scenario {
            topology: Topology::complete(2).unwrap(),
            ground,
            objective,
            scale: RewardScale::new(3.0).unwrap(),
            horizon: 5000,
            seed: 12,
        };
        let trace = run(&scenario).unwrap();
        let opt =
            crate::baselines::brute_force_optimal(&scenario.objective, &[1], &scenario.ground)
                .unwrap();
        assert_eq!(opt.value, 5.0);
        assert!((trace.tail_mean_value(0.1) - opt.value).abs() < 0.05);
    }

    #[test]
    fn reward_for_overlap_cases() {
        // Agent 1 hears agent 0. Full overlap zeroes the reward; disjoint
        // picks earn the full normalized singleton value.
        let ground = GroundSet::from_counts(&[1, 2]).unwrap();
        let objective =
            CoverageObjective::from_static_covers(3, vec![vec![0, 1], vec![0, 1], vec![2]])
                .unwrap();
        let scenario = Scenario {
            topology: Topology::path(2).unwrap(),
            ground,
            objective,
            scale: RewardScale::new(2.0).unwrap(),
            horizon: 4,
            seed: 0,
        };
        let covered = vec![vec![0, 1]];
        assert_eq!(reward_for(&scenario, &covered, 1, 1).unwrap(), 0.0);
        let disjoint = vec![vec![0, 2]];
        assert_eq!(reward_for(&scenario, &disjoint, 1, 1).unwrap(), 0.5);
        // Missing rows are protocol errors.
        assert!(matches!(
            reward_for(&scenario, &covered, 1, 2),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn smoothed_time_average_improves_on_static_objectives() {
        // Window means over T/10 steps, averaged across seeds, must be
        // non-decreasing up to 3 standard errors.
        let windows = 10usize;
        let horizon = 3000usize;
        let seeds: Vec<u64> = (0..20).collect();
        let mut per_seed: Vec<Vec<f64>> = Vec::new();
        for &seed in &seeds {
            let s = small_scenario(Topology::complete(3).unwrap(), horizon, seed);
            let trace = run(&s).unwrap();
            let w = horizon / windows;
            per_seed.push(
                (0..windows)
                    .map(|k| trace.joint_values[k * w..(k + 1) * w].iter().sum::<f64>() / w as f64)
                    .collect(),
            );
        }
        for k in 0..windows - 1 {
            let diffs: Vec<f64> = per_seed.iter().map(|w| w[k + 1] - w[k]).collect();
            let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
            let var =
                diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64;
            let se = (var / diffs.len() as f64).sqrt();
            assert!(
                mean >= -3.0 * se,
                "window {k}: mean diff {mean} below −3·SE {se}"
            );
        }
    }
}
