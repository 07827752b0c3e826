//! Multi-agent submodular coordination with delayed bandit feedback.
//!
//! Agents repeatedly pick actions to maximize a shared coverage-style
//! objective they cannot inspect in advance. Each agent runs an
//! exponential-weights bandit over its own action set, broadcasts its pick
//! over a directed multi-hop network, and — once the relayed actions of
//! its in-neighborhood arrive, `d_i` steps later — scores its past pick by
//! the marginal gain it contributed and updates its weights.
//!
//! The crate provides:
//!
//! - [`objective`]: coverage objectives, marginal gains, curvature, and
//!   exhaustive structural checks (monotone/submodular/2nd-order);
//! - [`network`]: directed topologies, multi-hop in-neighborhoods and
//!   delays, and the store-and-forward message bus;
//! - [`learner`]: the per-agent delayed-feedback bandit;
//! - [`engine`]: the lockstep simulation producing full traces;
//! - [`baselines`]: brute-force, sequential-greedy, and isolated oracles;
//! - [`metrics`]: regret, coin, bound reports, and the inequality-chain
//!   verifier;
//! - [`experiments`], [`instances`], [`scenario`], [`motion`]: sweeps,
//!   generators, and the plain-text file formats used by the CLI.

pub mod baselines;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod instances;
pub mod learner;
pub mod metrics;
pub mod motion;
pub mod network;
pub mod objective;
pub mod scenario;

pub use error::{Error, Result};

/// Agent index, `0..num_agents`.
pub type AgentId = usize;
/// Globally unique action id (the joint ground set is a disjoint union).
pub type ActionId = usize;
/// 1-based simulation timestep.
pub type Timestep = usize;
