//! Plain-text scenario and topology files.
//!
//! Both formats are line-oriented: `#` starts a comment, blank lines are
//! ignored, and fields are whitespace-separated.
//!
//! Scenario files describe agents, actions, and the objective. Static form:
//!
//! ```text
//! agents 2
//! targets 3
//! rmax 2            # optional; defaults to the largest cover size
//! action 0 0 1      # agent 0: an action covering targets 0 and 1
//! action 0 2
//! action 1 1
//! ```
//!
//! Motion form (targets random-walk on a grid; actions are fixed
//! rectangles `x0 y0 x1 y1`, inclusive):
//!
//! ```text
//! agents 2
//! grid 8 6
//! motion-targets 10
//! motion-seed 7     # optional, default 0
//! region 0 0 0 3 5
//! region 1 4 0 7 5
//! ```
//!
//! Action ids are assigned in file order; ties in the oracles and
//! learners break toward earlier lines.
//!
//! Topology files list directed channels `j -> i` as `edge j i`:
//!
//! ```text
//! agents 3
//! edge 0 1
//! edge 1 2
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::motion::{MotionModel, Region};
use crate::network::Topology;
use crate::objective::{CoverageObjective, GroundSet, RewardScale, SetFunction};
use crate::AgentId;

/// Objective description found in a scenario file.
#[derive(Debug, Clone)]
pub enum ObjectiveSpec {
    Static {
        targets: usize,
        /// (owner, covered targets) per action, in file order.
        covers: Vec<(AgentId, Vec<usize>)>,
    },
    Motion {
        grid: (usize, usize),
        targets: usize,
        seed: u64,
        /// (owner, sensed region) per action, in file order.
        regions: Vec<(AgentId, Region)>,
    },
}

/// Parsed scenario file.
#[derive(Debug, Clone)]
pub struct ScenarioFile {
    pub num_agents: usize,
    pub rmax: Option<f64>,
    pub objective: ObjectiveSpec,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_field<T: std::str::FromStr>(
    tokens: &mut std::str::SplitWhitespace<'_>,
    line: usize,
    what: &str,
) -> Result<T> {
    tokens
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| parse_err(line, format!("expected {what}")))
}

impl ScenarioFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut num_agents: Option<usize> = None;
        let mut targets: Option<usize> = None;
        let mut rmax: Option<f64> = None;
        let mut grid: Option<(usize, usize)> = None;
        let mut motion_targets: Option<usize> = None;
        let mut motion_seed: u64 = 0;
        let mut covers: Vec<(AgentId, Vec<usize>)> = Vec::new();
        let mut regions: Vec<(AgentId, Region)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let key = tokens.next().unwrap();
            match key {
                "agents" => num_agents = Some(parse_field(&mut tokens, lineno, "agent count")?),
                "targets" => targets = Some(parse_field(&mut tokens, lineno, "target count")?),
                "rmax" => rmax = Some(parse_field(&mut tokens, lineno, "reward scale")?),
                "grid" => {
                    let w = parse_field(&mut tokens, lineno, "grid width")?;
                    let h = parse_field(&mut tokens, lineno, "grid height")?;
                    grid = Some((w, h));
                }
                "motion-targets" => {
                    motion_targets = Some(parse_field(&mut tokens, lineno, "target count")?)
                }
                "motion-seed" => motion_seed = parse_field(&mut tokens, lineno, "motion seed")?,
                "action" => {
                    let agent: AgentId = parse_field(&mut tokens, lineno, "agent id")?;
                    let ts = tokens
                        .map(|v| {
                            v.parse()
                                .map_err(|_| parse_err(lineno, format!("bad target id {v}")))
                        })
                        .collect::<Result<Vec<usize>>>()?;
                    covers.push((agent, ts));
                }
                "region" => {
                    let agent: AgentId = parse_field(&mut tokens, lineno, "agent id")?;
                    let x0 = parse_field(&mut tokens, lineno, "x0")?;
                    let y0 = parse_field(&mut tokens, lineno, "y0")?;
                    let x1 = parse_field(&mut tokens, lineno, "x1")?;
                    let y1 = parse_field(&mut tokens, lineno, "y1")?;
                    regions.push((agent, Region { x0, y0, x1, y1 }));
                }
                other => return Err(parse_err(lineno, format!("unknown key `{other}`"))),
            }
        }

        let num_agents = num_agents.ok_or_else(|| parse_err(0, "missing `agents` declaration"))?;
        let objective = match (targets, grid) {
            (Some(targets), None) => {
                if !regions.is_empty() {
                    return Err(parse_err(0, "static scenarios use `action`, not `region`"));
                }
                ObjectiveSpec::Static { targets, covers }
            }
            (None, Some(grid)) => {
                if !covers.is_empty() {
                    return Err(parse_err(0, "motion scenarios use `region`, not `action`"));
                }
                ObjectiveSpec::Motion {
                    grid,
                    targets: motion_targets
                        .ok_or_else(|| parse_err(0, "missing `motion-targets`"))?,
                    seed: motion_seed,
                    regions,
                }
            }
            (Some(_), Some(_)) => {
                return Err(parse_err(0, "declare either `targets` or `grid`, not both"))
            }
            (None, None) => return Err(parse_err(0, "missing `targets` or `grid`")),
        };

        Ok(Self {
            num_agents,
            rmax,
            objective,
        })
    }

    /// Realize the ground set, objective, and reward scale. Motion
    /// scenarios precompute covers for `1..=horizon`.
    pub fn build(&self, horizon: usize) -> Result<(GroundSet, CoverageObjective, RewardScale)> {
        let owners: Vec<AgentId> = match &self.objective {
            ObjectiveSpec::Static { covers, .. } => covers.iter().map(|c| c.0).collect(),
            ObjectiveSpec::Motion { regions, .. } => regions.iter().map(|r| r.0).collect(),
        };
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); self.num_agents];
        for (action_id, &agent) in owners.iter().enumerate() {
            if agent >= self.num_agents {
                return Err(Error::Input(format!(
                    "action {action_id} names agent {agent}, but only {} exist",
                    self.num_agents
                )));
            }
            lists[agent].push(action_id);
        }
        let ground = GroundSet::from_lists(lists)?;

        let objective = match &self.objective {
            ObjectiveSpec::Static { targets, covers } => CoverageObjective::from_static_covers(
                *targets,
                covers.iter().map(|(_, ts)| ts.clone()).collect(),
            )?,
            ObjectiveSpec::Motion {
                grid,
                targets,
                seed,
                regions,
            } => {
                let model = MotionModel {
                    grid_width: grid.0,
                    grid_height: grid.1,
                    num_targets: *targets,
                    seed: *seed,
                };
                let rects: Vec<Region> = regions.iter().map(|(_, r)| *r).collect();
                model.build_objective(&rects, horizon)?
            }
        };

        let scale = match self.rmax {
            Some(r) => RewardScale::new(r)?,
            None => {
                let ts: Vec<usize> = if objective.is_time_invariant() {
                    vec![1]
                } else {
                    (1..=horizon).collect()
                };
                RewardScale::from_max_singleton(&objective, ts)?
            }
        };

        Ok((ground, objective, scale))
    }
}

/// Parse a topology argument: either a preset (`complete:N`, `edgeless:N`,
/// `ring:N`, `path:N`, `erdos:N:P:SEED`) or a path to a topology file.
pub fn topology_from_spec(spec: &str) -> Result<Topology> {
    let mut parts = spec.split(':');
    let head = parts.next().unwrap_or("");
    let parse_n = |v: Option<&str>| -> Result<usize> {
        v.and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Input(format!("preset `{spec}` needs an agent count")))
    };
    match head {
        "complete" => Topology::complete(parse_n(parts.next())?),
        "edgeless" => Topology::edgeless(parse_n(parts.next())?),
        "ring" => Topology::ring(parse_n(parts.next())?),
        "path" => Topology::path(parse_n(parts.next())?),
        "erdos" => {
            let n = parse_n(parts.next())?;
            let p: f64 = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Input("erdos preset needs a probability".into()))?;
            let seed: u64 = parts
                .next()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Input("erdos preset needs a seed".into()))?;
            Topology::erdos_renyi(n, p, seed)
        }
        _ => parse_topology_file(&std::fs::read_to_string(spec)?),
    }
}

/// Parse the `agents N` / `edge J I` topology file format.
pub fn parse_topology_file(text: &str) -> Result<Topology> {
    let mut num_agents: Option<usize> = None;
    let mut edges: Vec<(AgentId, AgentId)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next().unwrap() {
            "agents" => num_agents = Some(parse_field(&mut tokens, lineno, "agent count")?),
            "edge" => {
                let j = parse_field(&mut tokens, lineno, "source agent")?;
                let i = parse_field(&mut tokens, lineno, "destination agent")?;
                edges.push((j, i));
            }
            other => return Err(parse_err(lineno, format!("unknown key `{other}`"))),
        }
    }
    let n = num_agents.ok_or_else(|| parse_err(0, "missing `agents` declaration"))?;
    Topology::new(n, &edges)
}
