//! Stochastic failure and recovery dynamics on a duplex network.
//!
//! One call to [`SimulationState::step`] performs a synchronous update from
//! the activity snapshot left by the previous step:
//!
//! 1. every node draws an internal failure with its owner's `p1`; a hit on a
//!    node that is already internally failed restarts its spell, so the node
//!    recovers `tau` steps after its most recent hit;
//! 2. nodes whose spell ended become eligible again;
//! 3. every eligible node whose neighbourhood was critical in the snapshot
//!    fails externally with probability `p2` for this one step;
//! 4. the takeover or substitution hook runs and the clock advances.
//!
//! Each node owns a private random stream and consumes exactly two uniforms
//! per step (internal, then external), so the outcome does not depend on the
//! order nodes are visited in and twin runs that share a seed see the same
//! draws.

pub mod cost;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use cost::{threshold_after_acquisition, update_threshold_batch, Acquisition, CostLedger};

use crate::error::DynamicsError;
use crate::rng::{derive_stream, Stream};
use crate::topology::{DuplexNetwork, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activity {
    Active,
    InternalFailed,
    ExternalFailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeState {
    pub activity: Activity,
    /// Step at which the current contiguous internal-failure spell began.
    pub internal_fail_start: Option<u64>,
    /// First step at which the node is no longer internally failed.
    pub recover_at: Option<u64>,
    /// Step at which the current contiguous inactive spell (internal or
    /// external) began.
    pub inactive_since: Option<u64>,
}

impl NodeState {
    pub const ACTIVE: NodeState = NodeState {
        activity: Activity::Active,
        internal_fail_start: None,
        recover_at: None,
        inactive_since: None,
    };

    pub fn is_active(&self) -> bool {
        self.activity == Activity::Active
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    None,
    Takeover,
    Substitution,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::None => "none",
            Mechanism::Takeover => "takeover",
            Mechanism::Substitution => "substitution",
        }
    }
}

/// Separate thresholds for the other network's neighbours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossThresholds {
    /// Applied by S-owned nodes to their inter (W-born) neighbours.
    pub t_ws: f64,
    /// Applied by W-owned nodes to their inter (S-born) neighbours.
    pub t_sw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsParams {
    pub p1_s: f64,
    pub p1_w: f64,
    pub p2: f64,
    pub tau: u32,
    pub t_s: f64,
    pub t_w: f64,
    /// `Some` switches to dual-threshold criticality.
    pub cross: Option<CrossThresholds>,
    /// Takeover / substitution after inactivity longer than `n * tau`.
    pub n: f64,
    pub mechanism: Mechanism,
    pub cost_enabled: bool,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        DynamicsParams {
            p1_s: 0.0,
            p1_w: 0.0,
            p2: 0.0,
            tau: 50,
            t_s: 0.3,
            t_w: 0.7,
            cross: None,
            n: 2.5,
            mechanism: Mechanism::None,
            cost_enabled: false,
        }
    }
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let unit = |field: &'static str, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(DynamicsError::Param {
                    field,
                    value,
                    reason: "must lie in [0, 1]",
                })
            }
        };
        unit("p1_s", self.p1_s)?;
        unit("p1_w", self.p1_w)?;
        unit("p2", self.p2)?;
        unit("t_s", self.t_s)?;
        unit("t_w", self.t_w)?;
        if let Some(c) = self.cross {
            unit("t_ws", c.t_ws)?;
            unit("t_sw", c.t_sw)?;
        }
        if self.t_s > self.t_w {
            return Err(DynamicsError::Param {
                field: "t_s",
                value: self.t_s,
                reason: "the strong network needs t_s <= t_w",
            });
        }
        if self.tau < 1 {
            return Err(DynamicsError::Param {
                field: "tau",
                value: self.tau as f64,
                reason: "must be >= 1",
            });
        }
        if !(self.n > 0.0) {
            return Err(DynamicsError::Param {
                field: "n",
                value: self.n,
                reason: "must be > 0",
            });
        }
        if self.mechanism == Mechanism::Substitution && self.cross.is_none() {
            return Err(DynamicsError::Param {
                field: "mechanism",
                value: f64::NAN,
                reason: "substitution needs dual thresholds (t_ws, t_sw)",
            });
        }
        Ok(())
    }

    /// Spell length (in steps) that must be exceeded before acquisition.
    pub fn acquisition_period(&self) -> f64 {
        self.n * self.tau as f64
    }
}

/// Active-neighbour counts of one node and the resulting verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighborhood {
    pub intra_active: usize,
    pub intra_total: usize,
    pub inter_active: usize,
    pub inter_total: usize,
    pub critical: bool,
}

impl Neighborhood {
    pub fn total_fraction(&self) -> Option<f64> {
        fraction(self.intra_active + self.inter_active, self.intra_total + self.inter_total)
    }

    pub fn intra_fraction(&self) -> Option<f64> {
        fraction(self.intra_active, self.intra_total)
    }

    pub fn inter_fraction(&self) -> Option<f64> {
        fraction(self.inter_active, self.inter_total)
    }
}

fn fraction(active: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| active as f64 / total as f64)
}

/// A channel with no neighbours is never critical.
#[inline]
fn at_or_below(active: usize, total: usize, threshold: f64) -> bool {
    total > 0 && (active as f64 / total as f64) <= threshold
}

/// Thresholds governing one owner's nodes.
#[derive(Debug, Clone, Copy)]
struct Rule {
    own: f64,
    cross: Option<f64>,
}

/// One independent stream per node.
#[derive(Debug, Clone)]
pub struct NodeStreams {
    streams: Vec<Stream>,
}

impl NodeStreams {
    pub fn new(base_seed: u64, replicate: u64, nodes: usize) -> Self {
        NodeStreams {
            streams: (0..nodes as u64)
                .map(|v| derive_stream(base_seed, replicate, Some(v)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.streams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streams.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SimulationState {
    network: Arc<DuplexNetwork>,
    nodes: Vec<NodeState>,
    owners: Vec<Label>,
    active: Vec<bool>,
    scratch: Vec<bool>,
    ledger: CostLedger,
    clock: u64,
    /// Edges with at least one endpoint owned by S / W.
    links: [usize; 2],
    active_counts: [usize; 2],
}

impl SimulationState {
    /// Every node active and owned by its home network.
    pub fn new(network: Arc<DuplexNetwork>, params: &DynamicsParams) -> Self {
        let n = network.len();
        let owners: Vec<Label> = (0..n).map(|v| network.home(v)).collect();
        let mass = network.total_degree(Label::S) as f64;
        let links = initial_links(&network);
        let (ns, nw) = network.initial_counts();
        SimulationState {
            nodes: vec![NodeState::ACTIVE; n],
            owners,
            active: vec![true; n],
            scratch: vec![true; n],
            ledger: CostLedger::new(mass, params.t_s),
            clock: 0,
            links,
            active_counts: [ns, nw],
            network,
        }
    }

    /// Every node externally failed at t0, used as the failed-start sheet of
    /// phase diagrams.
    pub fn all_failed(network: Arc<DuplexNetwork>, params: &DynamicsParams) -> Self {
        let mut state = Self::new(network, params);
        for s in &mut state.nodes {
            s.activity = Activity::ExternalFailed;
            s.inactive_since = Some(0);
        }
        state.active.iter_mut().for_each(|a| *a = false);
        state.active_counts = [0, 0];
        state
    }

    pub fn network(&self) -> &Arc<DuplexNetwork> {
        &self.network
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn node(&self, v: usize) -> &NodeState {
        &self.nodes[v]
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn owner(&self, v: usize) -> Label {
        self.owners[v]
    }

    pub fn owners(&self) -> &[Label] {
        &self.owners
    }

    pub fn ledger(&self) -> &CostLedger {
        &self.ledger
    }

    pub fn initial_counts(&self) -> (usize, usize) {
        self.network.initial_counts()
    }

    /// Live threshold of the strong network.
    pub fn threshold_s(&self) -> f64 {
        self.ledger.threshold()
    }

    /// Number of acquisitions so far.
    pub fn acquisitions(&self) -> usize {
        self.ledger.acquisitions().len()
    }

    /// Overwrite one node's state, e.g. to prepare a hand-built scenario.
    pub fn set_node(&mut self, v: usize, state: NodeState) {
        let was = self.active[v];
        let now = state.is_active();
        self.nodes[v] = state;
        self.active[v] = now;
        let o = self.owners[v].index();
        match (was, now) {
            (true, false) => self.active_counts[o] -= 1,
            (false, true) => self.active_counts[o] += 1,
            _ => {}
        }
    }

    fn rule(&self, owner: Label, params: &DynamicsParams) -> Rule {
        match owner {
            Label::S => Rule {
                own: self.ledger.threshold(),
                cross: params.cross.map(|c| c.t_ws),
            },
            Label::W => Rule {
                own: params.t_w,
                cross: params.cross.map(|c| c.t_sw),
            },
        }
    }

    /// Criticality of `v` against the current activity snapshot.
    ///
    /// Single-threshold mode compares the active fraction over all
    /// neighbours with the owner's threshold; dual mode is critical when the
    /// intra fraction is at or below the owner's threshold or the inter
    /// fraction is at or below its cross threshold. Isolated nodes are never
    /// critical.
    pub fn neighborhood_critical(&self, v: usize, params: &DynamicsParams) -> Neighborhood {
        let rule = self.rule(self.owners[v], params);
        neighborhood(&self.network, &self.active, v, rule)
    }

    /// `(f_S, f_W)`: active nodes currently owned by each network over its
    /// initial node count. `f_S` exceeds one once enough acquired nodes are
    /// active.
    pub fn measure_fractions(&self) -> (f64, f64) {
        let (ns, nw) = self.network.initial_counts();
        (
            self.active_counts[0] as f64 / ns as f64,
            self.active_counts[1] as f64 / nw as f64,
        )
    }

    /// `(wealth_S, wealth_W)` with wealth = (links touching the network's
    /// nodes) * (1 - threshold). An inter link counts once for each owner
    /// it touches.
    pub fn wealth(&self, params: &DynamicsParams) -> (f64, f64) {
        (
            self.links[0] as f64 * (1.0 - self.ledger.threshold()),
            self.links[1] as f64 * (1.0 - params.t_w),
        )
    }

    /// Link tallies recomputed from scratch.
    pub fn count_links(&self) -> [usize; 2] {
        let mut links = [0usize; 2];
        for (u, v, _) in self.network.edges() {
            let (a, b) = (self.owners[u], self.owners[v]);
            links[a.index()] += 1;
            if b != a {
                links[b.index()] += 1;
            }
        }
        links
    }

    pub fn links(&self) -> [usize; 2] {
        self.links
    }

    /// Advance one step, visiting nodes in index order.
    pub fn step(&mut self, params: &DynamicsParams, streams: &mut NodeStreams) -> Vec<Acquisition> {
        let n = self.network.len();
        self.step_inner(params, streams, 0..n)
    }

    /// [`step`](Self::step) with an explicit visiting order; `order` must be
    /// a permutation of the node indices. The result is the same for every
    /// order.
    pub fn step_ordered(
        &mut self,
        params: &DynamicsParams,
        streams: &mut NodeStreams,
        order: &[usize],
    ) -> Vec<Acquisition> {
        assert_eq!(order.len(), self.network.len());
        self.step_inner(params, streams, order.iter().copied())
    }

    fn step_inner(
        &mut self,
        params: &DynamicsParams,
        streams: &mut NodeStreams,
        order: impl Iterator<Item = usize>,
    ) -> Vec<Acquisition> {
        assert_eq!(streams.len(), self.network.len());
        let t = self.clock;
        let tau = params.tau as u64;
        let rules = [self.rule(Label::S, params), self.rule(Label::W, params)];
        let p1 = [params.p1_s, params.p1_w];
        let net = &*self.network;
        let snapshot = &self.active;
        let next = &mut self.scratch;

        for v in order {
            let owner = self.owners[v].index();
            let rng = &mut streams.streams[v];
            let u_internal: f64 = rng.random();
            let u_external: f64 = rng.random();
            let st = &mut self.nodes[v];

            if u_internal < p1[owner] {
                if st.recover_at.is_none_or(|r| r <= t) {
                    st.internal_fail_start = Some(t);
                }
                st.recover_at = Some(t + tau);
            }
            let internally_failed = st.recover_at.is_some_and(|r| r > t);
            if !internally_failed {
                st.recover_at = None;
                st.internal_fail_start = None;
            }

            st.activity = if internally_failed {
                Activity::InternalFailed
            } else if u_external < params.p2 && neighborhood(net, snapshot, v, rules[owner]).critical {
                Activity::ExternalFailed
            } else {
                Activity::Active
            };

            if st.activity == Activity::Active {
                st.inactive_since = None;
            } else if st.inactive_since.is_none() {
                st.inactive_since = Some(t);
            }
            next[v] = st.activity == Activity::Active;
        }
        std::mem::swap(&mut self.active, &mut self.scratch);

        let events = self.apply_mechanism(params);
        self.recount_active();
        self.clock += 1;
        events
    }

    fn recount_active(&mut self) {
        let mut counts = [0usize; 2];
        for (v, &a) in self.active.iter().enumerate() {
            if a {
                counts[self.owners[v].index()] += 1;
            }
        }
        self.active_counts = counts;
    }

    fn apply_mechanism(&mut self, params: &DynamicsParams) -> Vec<Acquisition> {
        match params.mechanism {
            Mechanism::None => Vec::new(),
            Mechanism::Takeover => self.apply_takeover(params),
            Mechanism::Substitution => self.apply_substitution(params),
        }
    }

    /// Acquire every W-owned node whose contiguous internal-failure spell is
    /// longer than `n * tau` steps. Acquired nodes are reset active and are
    /// governed by S's thresholds and `p1_s` from then on.
    pub fn apply_takeover(&mut self, params: &DynamicsParams) -> Vec<Acquisition> {
        self.acquire_where(params, |st| st.internal_fail_start)
    }

    /// Replace every W-owned node that has been inactive (internally or
    /// externally) for longer than `n * tau` steps by an S node on the same
    /// links.
    pub fn apply_substitution(&mut self, params: &DynamicsParams) -> Vec<Acquisition> {
        self.acquire_where(params, |st| st.inactive_since)
    }

    fn acquire_where(
        &mut self,
        params: &DynamicsParams,
        spell_start: impl Fn(&NodeState) -> Option<u64>,
    ) -> Vec<Acquisition> {
        let t = self.clock;
        let period = params.acquisition_period();
        let mut events = Vec::new();
        for v in self.network.nodes(Label::W) {
            if self.owners[v] != Label::W {
                continue;
            }
            let Some(start) = spell_start(&self.nodes[v]) else {
                continue;
            };
            // spell covers steps start..=t
            if ((t - start + 1) as f64) <= period {
                continue;
            }
            let acq = Acquisition {
                step: t,
                node: v,
                degree: self.network.degree(v),
            };
            self.acquire(v);
            self.ledger.record(acq, params.cost_enabled, params.t_w);
            events.push(acq);
        }
        events
    }

    fn acquire(&mut self, v: usize) {
        for &u in self.network.neighbors(v) {
            if self.owners[u as usize] == Label::S {
                self.links[Label::W.index()] -= 1;
            } else {
                self.links[Label::S.index()] += 1;
            }
        }
        self.owners[v] = Label::S;
        self.nodes[v] = NodeState::ACTIVE;
        self.active[v] = true;
    }
}

fn neighborhood(net: &DuplexNetwork, active: &[bool], v: usize, rule: Rule) -> Neighborhood {
    let intra = net.intra_neighbors(v);
    let inter = net.inter_neighbors(v);
    let intra_active = intra.iter().filter(|&&u| active[u as usize]).count();
    let inter_active = inter.iter().filter(|&&u| active[u as usize]).count();
    let critical = match rule.cross {
        None => at_or_below(intra_active + inter_active, intra.len() + inter.len(), rule.own),
        Some(cross) => {
            at_or_below(intra_active, intra.len(), rule.own) || at_or_below(inter_active, inter.len(), cross)
        }
    };
    Neighborhood {
        intra_active,
        intra_total: intra.len(),
        inter_active,
        inter_total: inter.len(),
        critical,
    }
}

fn initial_links(net: &DuplexNetwork) -> [usize; 2] {
    let mut links = [0usize; 2];
    for (u, v, _) in net.edges() {
        let (a, b) = (net.home(u), net.home(v));
        links[a.index()] += 1;
        if b != a {
            links[b.index()] += 1;
        }
    }
    links
}
