//! Coverage objectives over a joint ground set, plus structural checks.
//!
//! The value of a set of actions is the number of distinct targets covered
//! by the union of their cover sets. Such functions are normalized,
//! monotone, submodular, and 2nd-order submodular; the checkers in this
//! module verify those properties exhaustively on desk-scale instances and
//! are also the oracle used to vet hand-built counterexamples.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::{ActionId, AgentId, Timestep};

/// Largest ground set accepted by the exhaustive property checkers.
pub const EXHAUSTIVE_LIMIT: usize = 12;

/// Hard cap on the target universe (keeps set unions allocation-free).
pub const MAX_TARGETS: usize = 1024;

const MAX_TARGET_BLOCKS: usize = MAX_TARGETS / 64;

// ---------------------------------------------------------------------------
// TargetSet
// ---------------------------------------------------------------------------

/// A set of target ids, stored as a fixed-width bitmask.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TargetSet {
    blocks: Vec<u64>,
}

impl TargetSet {
    /// Empty set sized for a universe of `num_targets`.
    pub fn empty(num_targets: usize) -> Result<Self> {
        if num_targets > MAX_TARGETS {
            return Err(Error::Capacity(format!(
                "target universe {num_targets} exceeds the {MAX_TARGETS} cap"
            )));
        }
        Ok(Self {
            blocks: vec![0; num_targets.div_ceil(64).max(1)],
        })
    }

    /// Build from explicit target ids.
    pub fn from_targets<I>(num_targets: usize, targets: I) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut set = Self::empty(num_targets)?;
        for t in targets {
            if t >= num_targets {
                return Err(Error::Input(format!(
                    "target id {t} outside universe of {num_targets}"
                )));
            }
            set.blocks[t / 64] |= 1 << (t % 64);
        }
        Ok(set)
    }

    pub fn insert(&mut self, target: usize) {
        debug_assert!(target / 64 < self.blocks.len());
        self.blocks[target / 64] |= 1 << (target % 64);
    }

    pub fn contains(&self, target: usize) -> bool {
        self.blocks
            .get(target / 64)
            .is_some_and(|b| b & (1 << (target % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }
}

// ---------------------------------------------------------------------------
// SetFunction
// ---------------------------------------------------------------------------

/// A set function over action ids `0..num_actions()`, possibly varying with
/// the timestep. Implemented by [`CoverageObjective`] and by the explicit
/// [`TableFunction`] used to vet the property checkers.
pub trait SetFunction {
    fn num_actions(&self) -> usize;

    /// Value of the set of `actions` at timestep `t` (1-based). Duplicate
    /// ids are harmless (set semantics).
    fn value(&self, t: Timestep, actions: &[ActionId]) -> Result<f64>;

    /// True when the function is the same at every timestep, which lets
    /// horizon-wide computations evaluate a single step.
    fn is_time_invariant(&self) -> bool {
        false
    }
}

/// Marginal gain of adding `a` to `base`: `f(base ∪ {a}) − f(base)`.
///
/// Costs exactly two `value` calls, which is what the per-step computation
/// counters assume.
pub fn set_gain<F: SetFunction + ?Sized>(
    f: &F,
    t: Timestep,
    a: ActionId,
    base: &[ActionId],
) -> Result<f64> {
    let mut with: Vec<ActionId> = Vec::with_capacity(base.len() + 1);
    with.extend_from_slice(base);
    with.push(a);
    Ok(f.value(t, &with)? - f.value(t, base)?)
}

// ---------------------------------------------------------------------------
// GroundSet
// ---------------------------------------------------------------------------

/// Per-agent action lists. Action ids are globally unique (a disjoint union
/// tagged by owner), so a joint action is just a set of ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundSet {
    per_agent: Vec<Vec<ActionId>>,
    owner: Vec<AgentId>,
}

impl GroundSet {
    /// Contiguous ids assigned agent-major: agent 0 owns `0..counts[0]`, etc.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let mut next = 0;
        let mut lists = Vec::with_capacity(counts.len());
        for &k in counts {
            lists.push((next..next + k).collect());
            next += k;
        }
        Self::from_lists(lists)
    }

    /// Explicit per-agent id lists. Ids must partition `0..total` and every
    /// agent must own at least one action.
    pub fn from_lists(per_agent: Vec<Vec<ActionId>>) -> Result<Self> {
        if per_agent.is_empty() {
            return Err(Error::Input("ground set needs at least one agent".into()));
        }
        let total: usize = per_agent.iter().map(Vec::len).sum();
        let mut owner = vec![usize::MAX; total];
        for (agent, list) in per_agent.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::Input(format!("agent {agent} has no actions")));
            }
            for &a in list {
                if a >= total {
                    return Err(Error::Input(format!("action id {a} out of range")));
                }
                if owner[a] != usize::MAX {
                    return Err(Error::Input(format!(
                        "action id {a} assigned to two agents"
                    )));
                }
                owner[a] = agent;
            }
        }
        Ok(Self { per_agent, owner })
    }

    pub fn num_agents(&self) -> usize {
        self.per_agent.len()
    }

    pub fn num_actions(&self) -> usize {
        self.owner.len()
    }

    pub fn actions_of(&self, agent: AgentId) -> &[ActionId] {
        &self.per_agent[agent]
    }

    pub fn owner_of(&self, action: ActionId) -> Result<AgentId> {
        self.owner
            .get(action)
            .copied()
            .ok_or_else(|| Error::Input(format!("unknown action id {action}")))
    }

    /// Size of the joint action space `Π_i |V_i|`, saturating at `u128::MAX`.
    pub fn joint_size(&self) -> u128 {
        self.per_agent
            .iter()
            .fold(1u128, |acc, l| acc.saturating_mul(l.len() as u128))
    }
}

// ---------------------------------------------------------------------------
// CoverageObjective
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum CoverTimeline {
    /// Same cover map at every timestep.
    Static(Vec<TargetSet>),
    /// One cover map per timestep, `1..=len`.
    PerStep(Vec<Vec<TargetSet>>),
}

/// A (possibly time-varying) coverage objective: the value of an action set
/// is the number of distinct targets covered by the union of the actions'
/// cover sets.
///
/// Evaluation is read-only; the only mutable element is an atomic counter of
/// `value`/`evaluate` calls used by the computation-cost diagnostics.
#[derive(Debug)]
pub struct CoverageObjective {
    num_targets: usize,
    timeline: CoverTimeline,
    evals: AtomicU64,
}

impl Clone for CoverageObjective {
    /// Clones share the cover maps but start with a fresh evaluation counter.
    fn clone(&self) -> Self {
        Self {
            num_targets: self.num_targets,
            timeline: match &self.timeline {
                CoverTimeline::Static(c) => CoverTimeline::Static(c.clone()),
                CoverTimeline::PerStep(c) => CoverTimeline::PerStep(c.clone()),
            },
            evals: AtomicU64::new(0),
        }
    }
}

impl CoverageObjective {
    /// Static objective from per-action target lists.
    pub fn from_static_covers(num_targets: usize, covers: Vec<Vec<usize>>) -> Result<Self> {
        let sets = covers
            .into_iter()
            .map(|c| TargetSet::from_targets(num_targets, c))
            .collect::<Result<Vec<_>>>()?;
        Self::from_static_sets(num_targets, sets)
    }

    pub fn from_static_sets(num_targets: usize, covers: Vec<TargetSet>) -> Result<Self> {
        if covers.is_empty() {
            return Err(Error::Input("objective needs at least one action".into()));
        }
        Ok(Self {
            num_targets,
            timeline: CoverTimeline::Static(covers),
            evals: AtomicU64::new(0),
        })
    }

    /// Time-varying objective: `covers[t-1][action]` for `t in 1..=covers.len()`.
    pub fn from_per_step_sets(num_targets: usize, covers: Vec<Vec<TargetSet>>) -> Result<Self> {
        if covers.is_empty() || covers[0].is_empty() {
            return Err(Error::Input(
                "per-step objective needs at least one step and one action".into(),
            ));
        }
        let n = covers[0].len();
        if covers.iter().any(|c| c.len() != n) {
            return Err(Error::Input(
                "per-step cover maps must all have the same action count".into(),
            ));
        }
        Ok(Self {
            num_targets,
            timeline: CoverTimeline::PerStep(covers),
            evals: AtomicU64::new(0),
        })
    }

    pub fn num_targets(&self) -> usize {
        self.num_targets
    }

    /// Number of `evaluate` calls since construction (or since `clone`).
    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    fn covers_at(&self, t: Timestep) -> Result<&[TargetSet]> {
        if t == 0 {
            return Err(Error::Input("timesteps are 1-based".into()));
        }
        match &self.timeline {
            CoverTimeline::Static(c) => Ok(c),
            CoverTimeline::PerStep(c) => c.get(t - 1).map(Vec::as_slice).ok_or_else(|| {
                Error::Input(format!(
                    "timestep {t} beyond the objective horizon {}",
                    c.len()
                ))
            }),
        }
    }

    /// Cover set of `action` at timestep `t`.
    pub fn cover(&self, t: Timestep, action: ActionId) -> Result<&TargetSet> {
        self.covers_at(t)?
            .get(action)
            .ok_or_else(|| Error::Input(format!("unknown action id {action}")))
    }

    /// `f_t(S)`: distinct targets covered by the union of `actions`' covers.
    /// Empty input evaluates to 0. Bumps the evaluation counter once.
    pub fn evaluate(&self, t: Timestep, actions: &[ActionId]) -> Result<f64> {
        let covers = self.covers_at(t)?;
        let mut acc = [0u64; MAX_TARGET_BLOCKS];
        for &a in actions {
            let c = covers
                .get(a)
                .ok_or_else(|| Error::Input(format!("unknown action id {a}")))?;
            for (slot, block) in acc.iter_mut().zip(&c.blocks) {
                *slot |= block;
            }
        }
        self.evals.fetch_add(1, Ordering::Relaxed);
        let covered: u32 = acc.iter().map(|b| b.count_ones()).sum();
        Ok(f64::from(covered))
    }

    /// `f_t(S ∪ {a}) − f_t(S)`: costs exactly two evaluations.
    pub fn marginal_gain(&self, t: Timestep, a: ActionId, base: &[ActionId]) -> Result<f64> {
        set_gain(self, t, a, base)
    }
}

impl SetFunction for CoverageObjective {
    fn num_actions(&self) -> usize {
        match &self.timeline {
            CoverTimeline::Static(c) => c.len(),
            CoverTimeline::PerStep(c) => c[0].len(),
        }
    }

    fn value(&self, t: Timestep, actions: &[ActionId]) -> Result<f64> {
        self.evaluate(t, actions)
    }

    fn is_time_invariant(&self) -> bool {
        matches!(self.timeline, CoverTimeline::Static(_))
    }
}

// ---------------------------------------------------------------------------
// TableFunction
// ---------------------------------------------------------------------------

/// A set function given by an explicit table over all subsets of a small
/// ground set; `values[mask]` is the value of the subset encoded by `mask`.
/// Used to hand-build (possibly property-violating) functions in tests.
#[derive(Debug, Clone)]
pub struct TableFunction {
    num_actions: usize,
    values: Vec<f64>,
}

impl TableFunction {
    pub fn new(num_actions: usize, values: Vec<f64>) -> Result<Self> {
        if num_actions > EXHAUSTIVE_LIMIT {
            return Err(Error::Capacity(format!(
                "table function limited to {EXHAUSTIVE_LIMIT} actions"
            )));
        }
        if values.len() != 1 << num_actions {
            return Err(Error::Input(format!(
                "table needs {} entries, got {}",
                1usize << num_actions,
                values.len()
            )));
        }
        Ok(Self {
            num_actions,
            values,
        })
    }

    pub fn from_fn(num_actions: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        let values = (0..1usize << num_actions).map(f).collect();
        Self::new(num_actions, values)
    }
}

impl SetFunction for TableFunction {
    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn value(&self, _t: Timestep, actions: &[ActionId]) -> Result<f64> {
        let mut mask = 0usize;
        for &a in actions {
            if a >= self.num_actions {
                return Err(Error::Input(format!("unknown action id {a}")));
            }
            mask |= 1 << a;
        }
        Ok(self.values[mask])
    }

    fn is_time_invariant(&self) -> bool {
        true
    }
}

// ---------------------------------------------------------------------------
// RewardScale
// ---------------------------------------------------------------------------

/// A priori bound on any singleton value, used to map raw marginal gains
/// into `[0, 1]`. One global scale is shared by all agents so that rewards
/// stay comparable across the network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardScale {
    max_reward: f64,
}

impl RewardScale {
    pub fn new(max_reward: f64) -> Result<Self> {
        if !max_reward.is_finite() || max_reward <= 0.0 {
            return Err(Error::Input(format!(
                "reward scale must be positive, got {max_reward}"
            )));
        }
        Ok(Self { max_reward })
    }

    /// Largest singleton value over the given timesteps.
    pub fn from_max_singleton<F: SetFunction + ?Sized>(
        f: &F,
        ts: impl IntoIterator<Item = Timestep>,
    ) -> Result<Self> {
        let mut best = 0.0f64;
        for t in ts {
            for a in 0..f.num_actions() {
                best = best.max(f.value(t, &[a])?);
            }
            if f.is_time_invariant() {
                break;
            }
        }
        Self::new(best)
    }

    pub fn max_reward(&self) -> f64 {
        self.max_reward
    }

    /// `raw / R_max`. A raw reward above the scale signals a bad scale or a
    /// non-submodular objective and is rejected.
    pub fn normalize(&self, raw: f64) -> Result<f64> {
        if raw < 0.0 || raw > self.max_reward {
            return Err(Error::Invariant(format!(
                "raw reward {raw} outside [0, {}]",
                self.max_reward
            )));
        }
        Ok(raw / self.max_reward)
    }
}

// ---------------------------------------------------------------------------
// Structural checks
// ---------------------------------------------------------------------------

/// First violation found by [`check_submodular_monotone`].
#[derive(Debug, Clone, PartialEq)]
pub enum StructureViolation {
    Normalization {
        value: f64,
    },
    Monotonicity {
        base: Vec<ActionId>,
        element: ActionId,
        before: f64,
        after: f64,
    },
    Submodularity {
        small: Vec<ActionId>,
        large: Vec<ActionId>,
        element: ActionId,
        gain_small: f64,
        gain_large: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub normalized: bool,
    pub monotone: bool,
    pub submodular: bool,
    pub witness: Option<StructureViolation>,
}

impl StructureReport {
    pub fn all_hold(&self) -> bool {
        self.normalized && self.monotone && self.submodular
    }
}

/// Witness tuple for a failed 2nd-order check: disjoint sets and an element
/// for which the diminishing-returns-of-marginal-gains inequality fails.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderViolation {
    pub set_a: Vec<ActionId>,
    pub set_b: Vec<ActionId>,
    pub set_c: Vec<ActionId>,
    pub element: ActionId,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderReport {
    pub holds: bool,
    pub witness: Option<SecondOrderViolation>,
}

const CHECK_EPS: f64 = 1e-9;

fn mask_to_actions(mask: usize, n: usize) -> Vec<ActionId> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

/// Tabulate `f` over all subsets of its ground set at timestep `t`.
fn value_table<F: SetFunction + ?Sized>(f: &F, t: Timestep) -> Result<Vec<f64>> {
    let n = f.num_actions();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::Capacity(format!(
            "exhaustive checks limited to {EXHAUSTIVE_LIMIT} actions, ground set has {n}"
        )));
    }
    let mut table = Vec::with_capacity(1 << n);
    let mut buf: Vec<ActionId> = Vec::with_capacity(n);
    for mask in 0..1usize << n {
        buf.clear();
        buf.extend((0..n).filter(|i| mask & (1 << i) != 0));
        table.push(f.value(t, &buf)?);
    }
    Ok(table)
}

/// Exhaustively check normalization, monotonicity, and submodularity of `f`
/// at timestep `t`. Monotonicity is checked on every single-element
/// extension (equivalent to the pairwise form); submodularity on every pair
/// `S ⊆ B` with `a ∉ B`. The first counterexample found, if any, is
/// reported.
pub fn check_submodular_monotone<F: SetFunction + ?Sized>(
    f: &F,
    t: Timestep,
) -> Result<StructureReport> {
    let n = f.num_actions();
    let table = value_table(f, t)?;
    let full = (1usize << n) - 1;

    let normalized = table[0].abs() <= CHECK_EPS;
    let mut witness = if normalized {
        None
    } else {
        Some(StructureViolation::Normalization { value: table[0] })
    };

    let mut monotone = true;
    'mono: for mask in 0..=full {
        for i in 0..n {
            if mask & (1 << i) != 0 {
                continue;
            }
            let before = table[mask];
            let after = table[mask | (1 << i)];
            if after < before - CHECK_EPS {
                monotone = false;
                witness.get_or_insert(StructureViolation::Monotonicity {
                    base: mask_to_actions(mask, n),
                    element: i,
                    before,
                    after,
                });
                break 'mono;
            }
        }
    }

    let mut submodular = true;
    'sub: for large in 0..=full {
        for a in 0..n {
            if large & (1 << a) != 0 {
                continue;
            }
            let bit = 1 << a;
            let gain_large = table[large | bit] - table[large];
            // All S ⊆ large.
            let mut small = large;
            loop {
                let gain_small = table[small | bit] - table[small];
                if gain_small < gain_large - CHECK_EPS {
                    submodular = false;
                    witness.get_or_insert(StructureViolation::Submodularity {
                        small: mask_to_actions(small, n),
                        large: mask_to_actions(large, n),
                        element: a,
                        gain_small,
                        gain_large,
                    });
                    break 'sub;
                }
                if small == 0 {
                    break;
                }
                small = (small - 1) & large;
            }
        }
    }

    Ok(StructureReport {
        normalized,
        monotone,
        submodular,
        witness,
    })
}

/// Exhaustively check 2nd-order submodularity of `f` at timestep `t`:
/// for all pairwise-disjoint `A, B, C` and every element `s`,
/// `f(s|C) − f(s|A∪C) ≥ f(s|B∪C) − f(s|A∪B∪C)`.
pub fn check_second_order<F: SetFunction + ?Sized>(
    f: &F,
    t: Timestep,
) -> Result<SecondOrderReport> {
    let n = f.num_actions();
    let table = value_table(f, t)?;
    let full = (1usize << n) - 1;

    for a_mask in 0..=full {
        let rest_ab = full & !a_mask;
        let mut b_mask = rest_ab;
        loop {
            let rest_c = rest_ab & !b_mask;
            let mut c_mask = rest_c;
            loop {
                for s in 0..n {
                    let bit = 1usize << s;
                    let g = |mask: usize| table[mask | bit] - table[mask];
                    let lhs = g(c_mask) - g(a_mask | c_mask);
                    let rhs = g(b_mask | c_mask) - g(a_mask | b_mask | c_mask);
                    if lhs < rhs - CHECK_EPS {
                        return Ok(SecondOrderReport {
                            holds: false,
                            witness: Some(SecondOrderViolation {
                                set_a: mask_to_actions(a_mask, n),
                                set_b: mask_to_actions(b_mask, n),
                                set_c: mask_to_actions(c_mask, n),
                                element: s,
                                lhs,
                                rhs,
                            }),
                        });
                    }
                }
                if c_mask == 0 {
                    break;
                }
                c_mask = (c_mask - 1) & rest_c;
            }
            if b_mask == 0 {
                break;
            }
            b_mask = (b_mask - 1) & rest_ab;
        }
    }

    Ok(SecondOrderReport {
        holds: true,
        witness: None,
    })
}

// ---------------------------------------------------------------------------
// Curvature
// ---------------------------------------------------------------------------

/// Curvature at timestep `t`:
/// `κ = 1 − min_v [f(V) − f(V∖{v})] / f({v})`.
///
/// Elements with `f({v}) = 0` contribute nothing and are skipped; if every
/// element is skipped the function is treated as modular (`κ = 0`). The
/// result is clamped to `[0, 1]`.
pub fn curvature<F: SetFunction + ?Sized>(f: &F, t: Timestep) -> Result<f64> {
    let n = f.num_actions();
    let all: Vec<ActionId> = (0..n).collect();
    let f_all = f.value(t, &all)?;
    let mut min_ratio: Option<f64> = None;
    let mut without: Vec<ActionId> = Vec::with_capacity(n - 1);
    for v in 0..n {
        let singleton = f.value(t, &[v])?;
        if singleton <= 0.0 {
            continue;
        }
        without.clear();
        without.extend(all.iter().copied().filter(|&u| u != v));
        let drop = f_all - f.value(t, &without)?;
        let ratio = drop / singleton;
        min_ratio = Some(min_ratio.map_or(ratio, |m: f64| m.min(ratio)));
    }
    Ok(match min_ratio {
        Some(m) => (1.0 - m).clamp(0.0, 1.0),
        None => 0.0,
    })
}

/// `κ_f = max_t κ_{f_t}` over the given timesteps. Time-invariant functions
/// are evaluated once.
pub fn curvature_over<F: SetFunction + ?Sized>(
    f: &F,
    ts: impl IntoIterator<Item = Timestep>,
) -> Result<f64> {
    let mut max = 0.0f64;
    let mut any = false;
    for t in ts {
        any = true;
        max = max.max(curvature(f, t)?);
        if f.is_time_invariant() {
            break;
        }
    }
    if !any {
        return Err(Error::Input("curvature needs at least one timestep".into()));
    }
    Ok(max)
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
