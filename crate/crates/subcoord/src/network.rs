//! Directed communication graph and store-and-forward message bus.
//!
//! An edge `(j → i)` lets `i` receive from `j`. Agent `i`'s neighborhood
//! `N_i` is every agent with a directed path to `i` (multi-hop,
//! excluding `i` itself), and its delay `d_i` is the hop count of the
//! farthest such agent — the number of bus steps until feedback for a
//! decision at step `s` is complete at step `s + d_i`. Isolated agents
//! (`N_i = ∅`) use `d_i = 0`: their feedback needs no communication.
//!
//! Relaying is flood-with-dedup: on first sight of a message an agent
//! forwards it to its out-neighbors at the next bus step. Copies stop
//! relaying once they have traveled `d̄ = max_i d_i` hops, which is enough
//! to reach every agent that can ever need them and keeps per-step traffic
//! constant (no congestion growth).

use std::collections::{HashMap, HashSet, VecDeque};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::{ActionId, AgentId, Timestep};

// ---------------------------------------------------------------------------
// Topology
// ---------------------------------------------------------------------------

/// Directed communication graph with derived multi-hop in-neighborhoods,
/// hop distances, and per-agent delays.
#[derive(Debug, Clone)]
pub struct Topology {
    num_agents: usize,
    out_edges: Vec<Vec<AgentId>>,
    in_neighborhoods: Vec<Vec<AgentId>>,
    /// `in_dist[i][j]` = shortest hop count j → i, `None` if unreachable.
    in_dist: Vec<Vec<Option<u32>>>,
    delays: Vec<u32>,
    max_delay: u32,
}

impl Topology {
    /// Build from directed channels `(j, i)` meaning `j → i`. Duplicate
    /// edges are ignored; self-loops and out-of-range endpoints are
    /// rejected.
    pub fn new(num_agents: usize, edges: &[(AgentId, AgentId)]) -> Result<Self> {
        if num_agents == 0 {
            return Err(Error::Input("topology needs at least one agent".into()));
        }
        let mut out_edges = vec![Vec::new(); num_agents];
        for &(j, i) in edges {
            if j >= num_agents || i >= num_agents {
                return Err(Error::Input(format!(
                    "edge ({j} -> {i}) out of range for {num_agents} agents"
                )));
            }
            if j == i {
                return Err(Error::Input(format!("self-loop on agent {i}")));
            }
            if !out_edges[j].contains(&i) {
                out_edges[j].push(i);
            }
        }
        for l in &mut out_edges {
            l.sort_unstable();
        }

        // Reverse BFS from each agent gives hop distances j → i.
        let mut in_edges = vec![Vec::new(); num_agents];
        for (j, outs) in out_edges.iter().enumerate() {
            for &i in outs {
                in_edges[i].push(j);
            }
        }
        let mut in_dist = vec![vec![None; num_agents]; num_agents];
        let mut in_neighborhoods = vec![Vec::new(); num_agents];
        let mut delays = vec![0u32; num_agents];
        for i in 0..num_agents {
            let mut queue = VecDeque::new();
            in_dist[i][i] = Some(0);
            queue.push_back(i);
            while let Some(x) = queue.pop_front() {
                let d = in_dist[i][x].unwrap();
                for &j in &in_edges[x] {
                    if in_dist[i][j].is_none() {
                        in_dist[i][j] = Some(d + 1);
                        queue.push_back(j);
                    }
                }
            }
            for (j, dist) in in_dist[i].iter().enumerate() {
                if j != i {
                    if let Some(d) = dist {
                        in_neighborhoods[i].push(j);
                        delays[i] = delays[i].max(*d);
                    }
                }
            }
        }
        let max_delay = delays.iter().copied().max().unwrap_or(0);

        Ok(Self {
            num_agents,
            out_edges,
            in_neighborhoods,
            in_dist,
            delays,
            max_delay,
        })
    }

    pub fn complete(num_agents: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for j in 0..num_agents {
            for i in 0..num_agents {
                if i != j {
                    edges.push((j, i));
                }
            }
        }
        Self::new(num_agents, &edges)
    }

    pub fn edgeless(num_agents: usize) -> Result<Self> {
        Self::new(num_agents, &[])
    }

    /// Directed cycle `0 → 1 → ... → n−1 → 0`.
    pub fn ring(num_agents: usize) -> Result<Self> {
        if num_agents < 2 {
            return Self::edgeless(num_agents);
        }
        let edges: Vec<_> = (0..num_agents).map(|i| (i, (i + 1) % num_agents)).collect();
        Self::new(num_agents, &edges)
    }

    /// Directed path `0 → 1 → ... → n−1`.
    pub fn path(num_agents: usize) -> Result<Self> {
        let edges: Vec<_> = (1..num_agents).map(|i| (i - 1, i)).collect();
        Self::new(num_agents, &edges)
    }

    /// Erdős–Rényi digraph: each ordered pair is a channel with
    /// probability `p`, drawn from a seeded stream.
    pub fn erdos_renyi(num_agents: usize, p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Input(format!("edge probability {p} outside [0,1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for j in 0..num_agents {
            for i in 0..num_agents {
                if i != j && rng.random::<f64>() < p {
                    edges.push((j, i));
                }
            }
        }
        Self::new(num_agents, &edges)
    }

    pub fn num_agents(&self) -> usize {
        self.num_agents
    }

    pub fn out_neighbors(&self, agent: AgentId) -> &[AgentId] {
        &self.out_edges[agent]
    }

    /// Multi-hop in-neighborhood `N_i`, sorted, excluding `i`.
    pub fn in_neighborhood(&self, agent: AgentId) -> &[AgentId] {
        &self.in_neighborhoods[agent]
    }

    /// `N_i^c = N ∖ ({i} ∪ N_i)`: agents whose actions `i` never hears.
    pub fn non_neighborhood(&self, agent: AgentId) -> Vec<AgentId> {
        (0..self.num_agents)
            .filter(|&j| j != agent && !self.in_neighborhoods[agent].contains(&j))
            .collect()
    }

    /// Shortest hop count `from → to`, if any path exists.
    pub fn hop_distance(&self, from: AgentId, to: AgentId) -> Option<u32> {
        self.in_dist[to][from].filter(|_| from != to)
    }

    /// Feedback delay `d_i` (0 for isolated agents).
    pub fn delay(&self, agent: AgentId) -> u32 {
        self.delays[agent]
    }

    /// `d̄ = max_i d_i`.
    pub fn max_delay(&self) -> u32 {
        self.max_delay
    }
}

// ---------------------------------------------------------------------------
// Messages and the bus
// ---------------------------------------------------------------------------

/// An action announcement in flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub origin: AgentId,
    /// Decision timestep the action belongs to.
    pub step: Timestep,
    pub action: ActionId,
    /// Hops traveled so far (1 on first delivery).
    pub hops: u32,
}

/// Store-and-forward bus, stepped once per simulation timestep by a single
/// coordinator. Broadcasts and relays enqueued during one step are
/// delivered on the next `step` call, so a message needs exactly
/// `hop distance` bus steps to arrive.
#[derive(Debug)]
pub struct MessageBus {
    num_agents: usize,
    /// Deliver on the next `step` call.
    in_flight: Vec<(AgentId, Message)>,
    /// Accumulates this step's broadcasts and relays.
    staged: Vec<(AgentId, Message)>,
    /// Per agent: (origin, step) pairs already seen (dedup + relay guard).
    seen: Vec<HashSet<(AgentId, Timestep)>>,
    /// Per agent: delivered actions, retained for reward computation.
    store: Vec<HashMap<(AgentId, Timestep), ActionId>>,
    /// Per agent: most recent broadcast step (one broadcast per step).
    last_broadcast: Vec<Option<Timestep>>,
    steps_run: usize,
}

impl MessageBus {
    pub fn new(topology: &Topology) -> Self {
        let n = topology.num_agents();
        Self {
            num_agents: n,
            in_flight: Vec::new(),
            staged: Vec::new(),
            seen: vec![HashSet::new(); n],
            store: vec![HashMap::new(); n],
            last_broadcast: vec![None; n],
            steps_run: 0,
        }
    }

    pub fn steps_run(&self) -> usize {
        self.steps_run
    }

    /// Announce `origin`'s action for step `s` to its out-neighbors
    /// (delivered on the next bus step). Exactly one broadcast per
    /// (origin, step) is allowed.
    pub fn broadcast(
        &mut self,
        topology: &Topology,
        origin: AgentId,
        s: Timestep,
        action: ActionId,
    ) -> Result<()> {
        if origin >= self.num_agents {
            return Err(Error::Input(format!("unknown agent {origin}")));
        }
        if self.last_broadcast[origin].is_some_and(|prev| prev >= s) {
            return Err(Error::Protocol(format!(
                "agent {origin} already broadcast for step {s}"
            )));
        }
        self.last_broadcast[origin] = Some(s);
        // Own announcements are marked seen so a cycle cannot bounce them
        // back into circulation.
        self.seen[origin].insert((origin, s));
        let msg = Message {
            origin,
            step: s,
            action,
            hops: 1,
        };
        for &dst in topology.out_neighbors(origin) {
            self.staged.push((dst, msg));
        }
        Ok(())
    }

    /// Deliver everything enqueued before this step; newly seen messages
    /// are stored and relayed (hop budget permitting) for the next step.
    /// Returns the messages handled by each agent, duplicates included.
    pub fn step(&mut self, topology: &Topology) -> Vec<Vec<Message>> {
        let batch = std::mem::take(&mut self.in_flight);
        let mut delivered: Vec<Vec<Message>> = vec![Vec::new(); self.num_agents];
        for (dst, msg) in batch {
            delivered[dst].push(msg);
            if self.seen[dst].insert((msg.origin, msg.step)) {
                self.store[dst].insert((msg.origin, msg.step), msg.action);
                if msg.hops < topology.max_delay() {
                    let relayed = Message {
                        hops: msg.hops + 1,
                        ..msg
                    };
                    for &nb in topology.out_neighbors(dst) {
                        self.staged.push((nb, relayed));
                    }
                }
            }
        }
        self.in_flight = std::mem::take(&mut self.staged);
        self.steps_run += 1;
        delivered
    }

    /// Action of `origin` at step `s` as held by `agent`, if delivered.
    pub fn action_of(&self, agent: AgentId, origin: AgentId, s: Timestep) -> Option<ActionId> {
        self.store[agent].get(&(origin, s)).copied()
    }

    /// Decision steps whose full neighbor action set is due at step `t`
    /// for `agent`: `{s : s + d_i = t}`, or `{t}` for isolated agents.
    /// Near the start of the run the set is empty (warm-up).
    pub fn complete_at(&self, topology: &Topology, agent: AgentId, t: Timestep) -> Vec<Timestep> {
        if topology.in_neighborhood(agent).is_empty() {
            return vec![t];
        }
        let d = topology.delay(agent) as usize;
        if t > d {
            vec![t - d]
        } else {
            Vec::new()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_topology_neighborhoods_and_delays() {
        // Directed line 0 → 1 → 2.
        let topo = Topology::path(3).unwrap();
        assert_eq!(topo.in_neighborhood(2), &[0, 1]);
        assert_eq!(topo.delay(2), 2);
        assert_eq!(topo.in_neighborhood(0), &[] as &[usize]);
        assert_eq!(topo.delay(0), 0);
        assert_eq!(topo.in_neighborhood(1), &[0]);
        assert_eq!(topo.delay(1), 1);
        assert_eq!(topo.max_delay(), 2);
        assert_eq!(topo.non_neighborhood(1), vec![2]);
    }

    #[test]
    fn complete_digraph_is_fully_centralized() {
        let topo = Topology::complete(4).unwrap();
        for i in 0..4 {
            assert_eq!(topo.in_neighborhood(i).len(), 3);
            assert_eq!(topo.delay(i), 1);
            assert!(topo.non_neighborhood(i).is_empty());
        }
    }

    #[test]
    fn edgeless_graph_is_fully_decentralized() {
        let topo = Topology::edgeless(3).unwrap();
        for i in 0..3 {
            assert!(topo.in_neighborhood(i).is_empty());
            assert_eq!(topo.delay(i), 0);
        }
        assert_eq!(topo.max_delay(), 0);
    }

    #[test]
    fn topology_rejects_bad_edges() {
        assert!(matches!(Topology::new(3, &[(0, 0)]), Err(Error::Input(_))));
        assert!(matches!(Topology::new(3, &[(0, 5)]), Err(Error::Input(_))));
        // Duplicates are fine.
        let t = Topology::new(3, &[(0, 1), (0, 1)]).unwrap();
        assert_eq!(t.out_neighbors(0), &[1]);
    }

    #[test]
    fn flooding_delivers_along_the_path_on_schedule() {
        let topo = Topology::path(3).unwrap();
        let mut bus = MessageBus::new(&topo);
        // Step 5: agent 0 broadcasts; everyone else idles (their broadcasts
        // are irrelevant here but keep the protocol honest).
        bus.broadcast(&topo, 0, 5, 42).unwrap();
        let d5 = bus.step(&topo);
        assert!(d5.iter().all(|m| m.is_empty()), "nothing in flight yet");

        // Bus step of timestep 6: one hop.
        let d6 = bus.step(&topo);
        assert_eq!(d6[1].len(), 1);
        assert_eq!(bus.action_of(1, 0, 5), Some(42));
        assert_eq!(bus.action_of(2, 0, 5), None);

        // Bus step of timestep 7 = 5 + d_2: two hops.
        let d7 = bus.step(&topo);
        assert_eq!(d7[2].len(), 1);
        assert_eq!(d7[2][0].hops, 2);
        assert_eq!(bus.action_of(2, 0, 5), Some(42));
    }

    #[test]
    fn diamond_graph_deduplicates_but_counts_both_copies() {
        // 0→1, 0→2, 1→3, 2→3: agent 3 handles two copies, stores one.
        let topo = Topology::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let mut bus = MessageBus::new(&topo);
        bus.broadcast(&topo, 0, 1, 9).unwrap();
        bus.step(&topo);
        let d = bus.step(&topo);
        assert_eq!(d[1].len(), 1);
        assert_eq!(d[2].len(), 1);
        let d = bus.step(&topo);
        assert_eq!(d[3].len(), 2, "two relayed copies arrive");
        assert_eq!(bus.action_of(3, 0, 1), Some(9));
    }

    #[test]
    fn double_broadcast_is_a_protocol_error() {
        let topo = Topology::complete(2).unwrap();
        let mut bus = MessageBus::new(&topo);
        bus.broadcast(&topo, 0, 1, 0).unwrap();
        assert!(matches!(
            bus.broadcast(&topo, 0, 1, 0),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn isolated_broadcast_goes_nowhere() {
        let topo = Topology::edgeless(2).unwrap();
        let mut bus = MessageBus::new(&topo);
        bus.broadcast(&topo, 0, 1, 3).unwrap();
        for _ in 0..5 {
            let d = bus.step(&topo);
            assert!(d.iter().all(|m| m.is_empty()));
        }
    }

    #[test]
    fn complete_at_schedule() {
        let topo = Topology::path(3).unwrap();
        let bus = MessageBus::new(&topo);
        // d_2 = 2: at t=7 the full set for s=5 is due.
        assert_eq!(bus.complete_at(&topo, 2, 7), vec![5]);
        // Warm-up: nothing due yet.
        assert!(bus.complete_at(&topo, 2, 1).is_empty());
        assert!(bus.complete_at(&topo, 2, 2).is_empty());
        // Isolated agents get immediate feedback.
        assert_eq!(bus.complete_at(&topo, 0, 4), vec![4]);
    }

    #[test]
    fn fully_connected_complete_at_is_previous_step() {
        let topo = Topology::complete(3).unwrap();
        let bus = MessageBus::new(&topo);
        for t in 2..10 {
            assert_eq!(bus.complete_at(&topo, 1, t), vec![t - 1]);
        }
        assert!(bus.complete_at(&topo, 1, 1).is_empty());
    }

    #[test]
    fn cycles_do_not_recirculate_own_messages() {
        // 0 → 1 → 2 → 0: without the own-seen guard, 0's message would
        // loop forever.
        let topo = Topology::ring(3).unwrap();
        let mut bus = MessageBus::new(&topo);
        bus.broadcast(&topo, 0, 1, 7).unwrap();
        let mut total = 0;
        for _ in 0..10 {
            total += bus.step(&topo).iter().map(Vec::len).sum::<usize>();
        }
        // One delivery to agent 1 and one relayed delivery to agent 2;
        // the hop budget d̄ = 2 is spent before the copy returns to 0.
        assert_eq!(total, 2);
    }

    #[test]
    fn delivery_by_deadline_with_eccentricity_tightness_on_random_graphs() {
        for seed in 0..20 {
            let n = 4 + (seed as usize % 9);
            let topo = Topology::erdos_renyi(n, 0.3, seed).unwrap();
            let mut bus = MessageBus::new(&topo);
            let s = 1;
            for j in 0..n {
                bus.broadcast(&topo, j, s, j).unwrap();
            }
            let mut arrival: HashMap<(usize, usize), usize> = HashMap::new();
            for t in s..=s + topo.max_delay() as usize + 1 {
                for (dst, msgs) in bus.step(&topo).iter().enumerate() {
                    for m in msgs {
                        arrival.entry((m.origin, dst)).or_insert(t);
                    }
                }
            }
            for i in 0..n {
                let mut tight = topo.in_neighborhood(i).is_empty();
                for &j in topo.in_neighborhood(i) {
                    let at = *arrival.get(&(j, i)).expect("delivery missing");
                    let dist = topo.hop_distance(j, i).unwrap() as usize;
                    assert_eq!(at, s + dist, "first arrival at hop distance");
                    assert!(at <= s + topo.delay(i) as usize);
                    if at == s + topo.delay(i) as usize {
                        tight = true;
                    }
                }
                assert!(tight, "delay d_i must be achieved by some neighbor");
            }
        }
    }
}
