//! Comparison oracles: brute-force optimum, sequential greedy, and
//! isolated (no-coordination) greedy. Ties always break toward the
//! lexicographically smaller action id, so outputs are deterministic.

use crate::error::{Error, Result};
use crate::objective::{set_gain, GroundSet, SetFunction};
use crate::{ActionId, AgentId, Timestep};

/// Largest joint action space the brute-force oracle will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// One action per agent together with its objective value (summed over the
/// timesteps the caller asked for).
#[derive(Debug, Clone, PartialEq)]
pub struct JointAction {
    pub actions: Vec<ActionId>,
    pub value: f64,
}

/// Exact maximizer of `Σ_{t ∈ ts} f_t` over the joint action space
/// (one fixed action per agent held across the whole horizon).
pub fn brute_force_optimal<F: SetFunction + ?Sized>(
    f: &F,
    ts: &[Timestep],
    ground: &GroundSet,
) -> Result<JointAction> {
    if ts.is_empty() {
        return Err(Error::Input("need at least one timestep".into()));
    }
    if ground.joint_size() > BRUTE_FORCE_LIMIT {
        return Err(Error::Capacity(format!(
            "joint action space {} exceeds the brute-force limit {BRUTE_FORCE_LIMIT}",
            ground.joint_size()
        )));
    }
    let n = ground.num_agents();
    // Time-invariant functions only need one evaluation per joint action.
    let eval_ts: &[Timestep] = if f.is_time_invariant() { &ts[..1] } else { ts };
    let multiplier = if f.is_time_invariant() {
        ts.len() as f64
    } else {
        1.0
    };

    let mut indices = vec![0usize; n];
    let mut best: Option<JointAction> = None;
    let mut joint = Vec::with_capacity(n);
    loop {
        joint.clear();
        joint.extend((0..n).map(|i| ground.actions_of(i)[indices[i]]));
        let mut value = 0.0;
        for &t in eval_ts {
            value += f.value(t, &joint)?;
        }
        value *= multiplier;
        // Strict improvement keeps the lexicographically-first maximizer.
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(JointAction {
                actions: joint.clone(),
                value,
            });
        }
        // Odometer over per-agent indices, last agent fastest.
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(best.unwrap());
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < ground.actions_of(pos).len() {
                break;
            }
            indices[pos] = 0;
        }
    }
}

/// Each agent, in the given order, picks the action with the largest
/// marginal gain given its predecessors' picks.
pub fn sequential_greedy<F: SetFunction + ?Sized>(
    f: &F,
    t: Timestep,
    ground: &GroundSet,
    order: &[AgentId],
) -> Result<JointAction> {
    let n = ground.num_agents();
    if order.len() != n {
        return Err(Error::Input(format!(
            "order must list all {n} agents exactly once"
        )));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return Err(Error::Input("order is not a permutation of agents".into()));
        }
        seen[i] = true;
    }

    let mut picked: Vec<ActionId> = Vec::with_capacity(n);
    let mut by_agent = vec![0; n];
    for &i in order {
        let mut best: Option<(ActionId, f64)> = None;
        for &a in ground.actions_of(i) {
            let gain = set_gain(f, t, a, &picked)?;
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((a, gain));
            }
        }
        let (a, _) = best.expect("agents own at least one action");
        picked.push(a);
        by_agent[i] = a;
    }
    let value = f.value(t, &by_agent)?;
    Ok(JointAction {
        actions: by_agent,
        value,
    })
}

/// Every agent independently picks its best singleton — the fully
/// decentralized baseline.
pub fn isolated_greedy<F: SetFunction + ?Sized>(
    f: &F,
    t: Timestep,
    ground: &GroundSet,
) -> Result<JointAction> {
    let n = ground.num_agents();
    let mut actions = Vec::with_capacity(n);
    for i in 0..n {
        let mut best: Option<(ActionId, f64)> = None;
        for &a in ground.actions_of(i) {
            let v = f.value(t, &[a])?;
            if best.is_none_or(|(_, g)| v > g) {
                best = Some((a, v));
            }
        }
        actions.push(best.expect("agents own at least one action").0);
    }
    let value = f.value(t, &actions)?;
    Ok(JointAction { actions, value })
}
