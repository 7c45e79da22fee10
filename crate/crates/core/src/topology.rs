//! Duplex topologies: two node populations (S and W) with intra-network
//! links inside each population and inter-network links between them.
//!
//! Nodes `0..n_s` are born in S, nodes `n_s..n_s + n_w` in W. Adjacency is
//! stored in compressed rows with each row split into its intra part followed
//! by its inter part, both sorted ascending.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::TopologyError;

/// Network label: the strong network S or the weak network W.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    S,
    W,
}

impl Label {
    pub fn other(self) -> Label {
        match self {
            Label::S => Label::W,
            Label::W => Label::S,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Label::S => 0,
            Label::W => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::S => "S",
            Label::W => "W",
        })
    }
}

/// A node and the network it was created in. Ownership changes are tracked
/// by the simulation state; the home label never changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeRef {
    pub index: usize,
    pub home: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    IntraS,
    IntraW,
    Inter,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::IntraS => "intra_S",
            EdgeKind::IntraW => "intra_W",
            EdgeKind::Inter => "inter",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    Ba,
    Er,
    ErAssortative,
    RandomRegular,
}

impl TopologyKind {
    pub fn name(self) -> &'static str {
        match self {
            TopologyKind::Ba => "ba",
            TopologyKind::Er => "er",
            TopologyKind::ErAssortative => "er-assortative",
            TopologyKind::RandomRegular => "random-regular",
        }
    }
}

/// How ER (and assortative ER) edge totals are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErDensity {
    /// Same intra and inter edge totals as the BA construction with the
    /// config's `n0`, `m_s`, `m_w`, `m_sw`.
    MatchBa,
    /// Exact edge counts, G(n, M) style.
    Edges {
        intra_s: usize,
        intra_w: usize,
        inter: usize,
    },
    /// Independent edge probabilities, G(n, p) style.
    Probability {
        intra_s: f64,
        intra_w: f64,
        inter: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegularDegrees {
    pub k_s: usize,
    pub k_w: usize,
    /// Inter neighbours of every S node (in W).
    pub k_ws: usize,
    /// Inter neighbours of every W node (in S).
    pub k_sw: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub kind: TopologyKind,
    pub nodes_s: usize,
    pub nodes_w: usize,
    pub n0: usize,
    pub m_s: usize,
    pub m_w: usize,
    pub m_sw: usize,
    pub er: ErDensity,
    pub regular: RegularDegrees,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            kind: TopologyKind::Ba,
            nodes_s: 1000,
            nodes_w: 1000,
            n0: 3,
            m_s: 3,
            m_w: 3,
            m_sw: 2,
            er: ErDensity::MatchBa,
            regular: RegularDegrees {
                k_s: 20,
                k_w: 5,
                k_ws: 10,
                k_sw: 10,
            },
        }
    }
}

/// Attempts allowed per requested link in rejection-sampled wiring.
pub const REJECTION_ATTEMPTS_PER_LINK: u64 = 10_000;
/// Restarts allowed for configuration-model stub matching.
pub const MATCHING_RESTARTS: u32 = 1_000;

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), TopologyError> {
        let cfg = |msg: String| Err(TopologyError::Config(msg));
        if self.nodes_s == 0 || self.nodes_w == 0 {
            return cfg("both networks need at least one node".into());
        }
        if u32::try_from(self.nodes_s + self.nodes_w).is_err() {
            return cfg("total node count must fit in 32 bits".into());
        }
        match self.kind {
            TopologyKind::Ba | TopologyKind::Er | TopologyKind::ErAssortative => {
                let needs_ba = self.kind == TopologyKind::Ba || self.er == ErDensity::MatchBa;
                if needs_ba {
                    if self.m_s < 1 || self.m_w < 1 {
                        return cfg(format!(
                            "m_s and m_w must be >= 1 (got {} and {})",
                            self.m_s, self.m_w
                        ));
                    }
                    let m_max = self.m_s.max(self.m_w).max(self.m_sw);
                    if self.n0 < m_max {
                        return cfg(format!("n0 = {} must be >= max(m_s, m_w, m_sw) = {m_max}", self.n0));
                    }
                    if self.nodes_s < self.n0 || self.nodes_w < self.n0 {
                        return cfg(format!("network sizes must be >= n0 = {}", self.n0));
                    }
                }
                if self.kind != TopologyKind::Ba {
                    let (is, iw, x) = self.er_edge_targets();
                    let ps = pairs(self.nodes_s);
                    let pw = pairs(self.nodes_w);
                    let px = self.nodes_s * self.nodes_w;
                    if let ErDensity::Probability { intra_s, intra_w, inter } = self.er {
                        for (name, p) in [("intra_s", intra_s), ("intra_w", intra_w), ("inter", inter)] {
                            if !(0.0..=1.0).contains(&p) {
                                return cfg(format!("ER probability {name} = {p} outside [0, 1]"));
                            }
                        }
                    } else if is > ps || iw > pw || x > px {
                        return cfg(format!(
                            "requested edges ({is}, {iw}, {x}) exceed possible pairs ({ps}, {pw}, {px})"
                        ));
                    }
                }
            }
            TopologyKind::RandomRegular => {
                let d = self.regular;
                let (ns, nw) = (self.nodes_s, self.nodes_w);
                let bad = |m: String| Err(TopologyError::NotGraphical(m));
                if d.k_s >= ns.max(1) && d.k_s > 0 {
                    return bad(format!("k_s = {} needs more than {ns} nodes", d.k_s));
                }
                if d.k_w >= nw.max(1) && d.k_w > 0 {
                    return bad(format!("k_w = {} needs more than {nw} nodes", d.k_w));
                }
                if (d.k_s * ns) % 2 != 0 || (d.k_w * nw) % 2 != 0 {
                    return bad("k * N must be even within each network".into());
                }
                if d.k_ws * ns != d.k_sw * nw {
                    return bad(format!(
                        "k_ws * N_s = {} differs from k_sw * N_w = {}",
                        d.k_ws * ns,
                        d.k_sw * nw
                    ));
                }
                if d.k_ws > nw || d.k_sw > ns {
                    return bad("inter degree exceeds the size of the other network".into());
                }
            }
        }
        Ok(())
    }

    /// Intra and inter edge totals of the BA construction.
    pub fn ba_edge_totals(&self) -> (usize, usize, usize) {
        let seed = pairs(self.n0);
        let grown_s = self.nodes_s.saturating_sub(self.n0);
        let grown_w = self.nodes_w.saturating_sub(self.n0);
        (
            seed + self.m_s * grown_s,
            seed + self.m_w * grown_w,
            self.m_sw * (grown_s + grown_w),
        )
    }

    fn er_edge_targets(&self) -> (usize, usize, usize) {
        match self.er {
            ErDensity::MatchBa => self.ba_edge_totals(),
            ErDensity::Edges { intra_s, intra_w, inter } => (intra_s, intra_w, inter),
            ErDensity::Probability { .. } => (0, 0, 0),
        }
    }
}

fn pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Immutable duplex network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplexNetwork {
    n_s: usize,
    n_w: usize,
    offsets: Vec<usize>,
    split: Vec<usize>,
    neighbors: Vec<u32>,
}

impl DuplexNetwork {
    /// Build from per-node intra and inter neighbour lists. Lists are sorted
    /// and the result is checked against the duplex invariants.
    pub fn from_adjacency(
        n_s: usize,
        n_w: usize,
        mut intra: Vec<Vec<u32>>,
        mut inter: Vec<Vec<u32>>,
    ) -> Result<Self, TopologyError> {
        let n = n_s + n_w;
        if intra.len() != n || inter.len() != n {
            return Err(TopologyError::Config("adjacency length mismatch".into()));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut split = Vec::with_capacity(n);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for v in 0..n {
            intra[v].sort_unstable();
            inter[v].sort_unstable();
            neighbors.extend_from_slice(&intra[v]);
            split.push(neighbors.len());
            neighbors.extend_from_slice(&inter[v]);
            offsets.push(neighbors.len());
        }
        let net = DuplexNetwork {
            n_s,
            n_w,
            offsets,
            split,
            neighbors,
        };
        net.check_invariants()?;
        Ok(net)
    }

    pub fn check_invariants(&self) -> Result<(), TopologyError> {
        let err = |m: String| Err(TopologyError::Config(m));
        for v in 0..self.len() {
            let home = self.home(v);
            for w in self.intra_neighbors(v).windows(2).chain(self.inter_neighbors(v).windows(2)) {
                if w[0] == w[1] {
                    return err(format!("duplicate edge at node {v}"));
                }
            }
            for &u in self.intra_neighbors(v) {
                let u = u as usize;
                if u == v {
                    return err(format!("self-loop at node {v}"));
                }
                if self.home(u) != home {
                    return err(format!("intra edge {v}-{u} crosses networks"));
                }
                if self.intra_neighbors(u).binary_search(&(v as u32)).is_err() {
                    return err(format!("asymmetric edge {v}-{u}"));
                }
            }
            for &u in self.inter_neighbors(v) {
                let u = u as usize;
                if self.home(u) == home {
                    return err(format!("inter edge {v}-{u} stays inside {home}"));
                }
                if self.inter_neighbors(u).binary_search(&(v as u32)).is_err() {
                    return err(format!("asymmetric edge {v}-{u}"));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_s + self.n_w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(N_S0, N_W0)`.
    pub fn initial_counts(&self) -> (usize, usize) {
        (self.n_s, self.n_w)
    }

    pub fn count(&self, label: Label) -> usize {
        match label {
            Label::S => self.n_s,
            Label::W => self.n_w,
        }
    }

    pub fn home(&self, v: usize) -> Label {
        if v < self.n_s {
            Label::S
        } else {
            Label::W
        }
    }

    pub fn node(&self, v: usize) -> NodeRef {
        NodeRef {
            index: v,
            home: self.home(v),
        }
    }

    pub fn nodes(&self, label: Label) -> std::ops::Range<usize> {
        match label {
            Label::S => 0..self.n_s,
            Label::W => self.n_s..self.len(),
        }
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn intra_neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.offsets[v]..self.split[v]]
    }

    #[inline]
    pub fn inter_neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[self.split[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn intra_degree(&self, v: usize) -> usize {
        self.split[v] - self.offsets[v]
    }

    pub fn inter_degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.split[v]
    }

    /// Mean total (intra + inter) degree over the nodes born in `label`.
    pub fn mean_total_degree(&self, label: Label) -> f64 {
        let range = self.nodes(label);
        let n = range.len();
        if n == 0 {
            return 0.0;
        }
        range.map(|v| self.degree(v)).sum::<usize>() as f64 / n as f64
    }

    pub fn total_degree(&self, label: Label) -> usize {
        self.nodes(label).map(|v| self.degree(v)).sum()
    }

    /// Every undirected edge once, as `(u, v, kind)` with `u < v`, in
    /// ascending order of `u` then `v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, EdgeKind)> + '_ {
        (0..self.len()).flat_map(move |u| {
            let kind_intra = match self.home(u) {
                Label::S => EdgeKind::IntraS,
                Label::W => EdgeKind::IntraW,
            };
            let intra = self
                .intra_neighbors(u)
                .iter()
                .map(move |&v| (v as usize, kind_intra));
            let inter = self
                .inter_neighbors(u)
                .iter()
                .map(|&v| (v as usize, EdgeKind::Inter));
            let mut row: Vec<(usize, EdgeKind)> = intra.chain(inter).filter(|&(v, _)| v > u).collect();
            row.sort_unstable_by_key(|&(v, _)| v);
            row.into_iter().map(move |(v, k)| (u, v, k))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Number of edges of one kind.
    pub fn edge_count_of(&self, kind: EdgeKind) -> usize {
        match kind {
            EdgeKind::IntraS => self.nodes(Label::S).map(|v| self.intra_degree(v)).sum::<usize>() / 2,
            EdgeKind::IntraW => self.nodes(Label::W).map(|v| self.intra_degree(v)).sum::<usize>() / 2,
            EdgeKind::Inter => self.nodes(Label::S).map(|v| self.inter_degree(v)).sum(),
        }
    }

    /// Edge-list dump: a `#` header line followed by `u v kind` per edge.
    pub fn write_edge_list<W: Write>(&self, out: &mut W, header: &str) -> io::Result<()> {
        writeln!(out, "# {header}")?;
        for (u, v, kind) in self.edges() {
            writeln!(out, "{u} {v} {kind}")?;
        }
        Ok(())
    }
}

/// Generate the topology named by `config.kind`.
pub fn generate<R: Rng>(config: &GeneratorConfig, rng: &mut R) -> Result<DuplexNetwork, TopologyError> {
    match config.kind {
        TopologyKind::Ba => gen_interconnected_ba(config, rng),
        TopologyKind::Er => gen_interconnected_er(config, rng),
        TopologyKind::ErAssortative => gen_interconnected_er_assortative(config, rng),
        TopologyKind::RandomRegular => gen_random_regular_duplex(config, rng),
    }
}

struct Builder {
    n_s: usize,
    n_w: usize,
    intra: Vec<Vec<u32>>,
    inter: Vec<Vec<u32>>,
}

impl Builder {
    fn new(n_s: usize, n_w: usize) -> Self {
        let n = n_s + n_w;
        Builder {
            n_s,
            n_w,
            intra: vec![Vec::new(); n],
            inter: vec![Vec::new(); n],
        }
    }

    fn add_intra(&mut self, u: usize, v: usize) {
        self.intra[u].push(v as u32);
        self.intra[v].push(u as u32);
    }

    fn add_inter(&mut self, u: usize, v: usize) {
        self.inter[u].push(v as u32);
        self.inter[v].push(u as u32);
    }

    fn finish(self) -> Result<DuplexNetwork, TopologyError> {
        DuplexNetwork::from_adjacency(self.n_s, self.n_w, self.intra, self.inter)
    }
}

/// Draw `m` distinct nodes from `base..base + count` with probability
/// proportional to their current total degree. `stubs` lists each node once
/// per incident edge endpoint. Zero total weight falls back to uniform.
fn preferential_targets<R: Rng>(
    rng: &mut R,
    m: usize,
    base: usize,
    count: usize,
    stubs: &[u32],
    out: &mut Vec<usize>,
) {
    out.clear();
    if m == 0 {
        return;
    }
    debug_assert!(m <= count);
    let mut misses = 0usize;
    while out.len() < m {
        let pick = if stubs.is_empty() || misses > 64 * m {
            base + rng.random_range(0..count)
        } else {
            stubs[rng.random_range(0..stubs.len())] as usize
        };
        if out.contains(&pick) {
            misses += 1;
        } else {
            out.push(pick);
        }
    }
}

/// Two BA networks grown in lockstep. Each new S node attaches to `m_s`
/// existing S nodes and `m_sw` existing W nodes, each class drawn without
/// replacement with probability proportional to total degree; W nodes mirror
/// this with `m_w` and `m_sw`. Seeds are `n0`-cliques with no inter links.
pub fn gen_interconnected_ba<R: Rng>(
    config: &GeneratorConfig,
    rng: &mut R,
) -> Result<DuplexNetwork, TopologyError> {
    config.validate()?;
    if config.kind != TopologyKind::Ba {
        return Err(TopologyError::Config("gen_interconnected_ba needs kind = ba".into()));
    }
    let (ns, nw, n0) = (config.nodes_s, config.nodes_w, config.n0);
    let mut b = Builder::new(ns, nw);
    let mut stubs: [Vec<u32>; 2] = [Vec::new(), Vec::new()];
    for (label, base) in [(Label::S, 0), (Label::W, ns)] {
        for i in 0..n0 {
            for j in (i + 1)..n0 {
                b.add_intra(base + i, base + j);
                stubs[label.index()].push((base + i) as u32);
                stubs[label.index()].push((base + j) as u32);
            }
        }
    }

    let mut grown = [n0, n0];
    let mut intra_t = Vec::new();
    let mut inter_t = Vec::new();
    while grown[0] < ns || grown[1] < nw {
        for label in [Label::S, Label::W] {
            let (own, other) = (label.index(), label.other().index());
            let size = if label == Label::S { ns } else { nw };
            if grown[own] >= size {
                continue;
            }
            let (own_base, other_base) = match label {
                Label::S => (0, ns),
                Label::W => (ns, 0),
            };
            let m_own = if label == Label::S { config.m_s } else { config.m_w };
            let v = own_base + grown[own];
            preferential_targets(rng, m_own, own_base, grown[own], &stubs[own], &mut intra_t);
            preferential_targets(rng, config.m_sw, other_base, grown[other], &stubs[other], &mut inter_t);
            for &u in &intra_t {
                b.add_intra(u, v);
                stubs[own].push(u as u32);
                stubs[own].push(v as u32);
            }
            for &u in &inter_t {
                b.add_inter(u, v);
                stubs[other].push(u as u32);
                stubs[own].push(v as u32);
            }
            grown[own] += 1;
        }
    }
    b.finish()
}

/// `m` distinct integers from `0..population`, returned sorted (Floyd).
fn sample_distinct<R: Rng>(rng: &mut R, population: usize, m: usize) -> Vec<usize> {
    let mut chosen = HashSet::with_capacity(m * 2);
    for j in (population - m)..population {
        let t = rng.random_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    let mut out: Vec<usize> = chosen.into_iter().collect();
    out.sort_unstable();
    out
}

/// Decode a row-major index into the strict upper triangle of an `n x n`
/// matrix.
fn unrank_pair(n: usize, p: usize) -> (usize, usize) {
    // row i starts at i*n - i*(i+1)/2
    let start = |i: usize| i * n - i * (i + 1) / 2;
    let (mut lo, mut hi) = (0usize, n - 1);
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if start(mid) <= p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let i = lo;
    let j = i + 1 + (p - start(i));
    (i, j)
}

fn er_intra<R: Rng>(rng: &mut R, b: &mut Builder, base: usize, n: usize, density: Density) {
    match density {
        Density::Edges(m) => {
            for p in sample_distinct(rng, pairs(n), m) {
                let (i, j) = unrank_pair(n, p);
                b.add_intra(base + i, base + j);
            }
        }
        Density::Prob(p) => {
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < p {
                        b.add_intra(base + i, base + j);
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Density {
    Edges(usize),
    Prob(f64),
}

fn er_densities(config: &GeneratorConfig) -> (Density, Density, Density) {
    match config.er {
        ErDensity::Probability { intra_s, intra_w, inter } => {
            (Density::Prob(intra_s), Density::Prob(intra_w), Density::Prob(inter))
        }
        _ => {
            let (s, w, x) = config.er_edge_targets();
            (Density::Edges(s), Density::Edges(w), Density::Edges(x))
        }
    }
}

/// Two ER networks with uniformly random inter links.
pub fn gen_interconnected_er<R: Rng>(
    config: &GeneratorConfig,
    rng: &mut R,
) -> Result<DuplexNetwork, TopologyError> {
    config.validate()?;
    let (ns, nw) = (config.nodes_s, config.nodes_w);
    let (ds, dw, dx) = er_densities(config);
    let mut b = Builder::new(ns, nw);
    er_intra(rng, &mut b, 0, ns, ds);
    er_intra(rng, &mut b, ns, nw, dw);
    match dx {
        Density::Edges(m) => {
            for p in sample_distinct(rng, ns * nw, m) {
                b.add_inter(p / nw, ns + p % nw);
            }
        }
        Density::Prob(p) => {
            for u in 0..ns {
                for v in 0..nw {
                    if rng.random::<f64>() < p {
                        b.add_inter(u, ns + v);
                    }
                }
            }
        }
    }
    b.finish()
}

/// Acceptance probability for an inter link between nodes of intra degree
/// `d1` and `d2`: `1 / (|d1 - d2| + 1)`.
pub fn assortative_acceptance(d1: usize, d2: usize) -> f64 {
    1.0 / (d1.abs_diff(d2) as f64 + 1.0)
}

/// ER intra networks with degree-assortative inter wiring: uniformly drawn
/// candidate pairs are accepted with [`assortative_acceptance`] of their
/// intra degrees until the inter budget is met.
pub fn gen_interconnected_er_assortative<R: Rng>(
    config: &GeneratorConfig,
    rng: &mut R,
) -> Result<DuplexNetwork, TopologyError> {
    config.validate()?;
    let (ns, nw) = (config.nodes_s, config.nodes_w);
    let (ds, dw, dx) = er_densities(config);
    let mut b = Builder::new(ns, nw);
    er_intra(rng, &mut b, 0, ns, ds);
    er_intra(rng, &mut b, ns, nw, dw);
    let budget = match dx {
        Density::Edges(m) => m,
        Density::Prob(p) => (p * (ns * nw) as f64).round() as usize,
    };
    let degrees: Vec<usize> = b.intra.iter().map(Vec::len).collect();
    wire_assortative(rng, &mut b, &degrees, budget)?;
    b.finish()
}

fn wire_assortative<R: Rng>(
    rng: &mut R,
    b: &mut Builder,
    degrees: &[usize],
    budget: usize,
) -> Result<(), TopologyError> {
    let (ns, nw) = (b.n_s, b.n_w);
    let cap = REJECTION_ATTEMPTS_PER_LINK.saturating_mul(budget.max(1) as u64);
    let mut present: HashSet<(u32, u32)> = HashSet::with_capacity(budget * 2);
    let mut attempts = 0u64;
    while present.len() < budget {
        if attempts >= cap {
            return Err(TopologyError::BudgetUnreachable {
                what: "assortative inter wiring",
                budget,
                attempts,
            });
        }
        attempts += 1;
        let u = rng.random_range(0..ns);
        let v = ns + rng.random_range(0..nw);
        let accept = rng.random::<f64>() < assortative_acceptance(degrees[u], degrees[v]);
        if accept && present.insert((u as u32, v as u32)) {
            b.add_inter(u, v);
        }
    }
    Ok(())
}

/// Duplex random-regular topology via configuration-model stub matching:
/// every S node has exactly `k_s` intra and `k_ws` inter neighbours, every W
/// node `k_w` intra and `k_sw` inter neighbours. Self-loops and multi-edges
/// are rejected; unmatched stubs are reshuffled, and the whole class is
/// restarted if the leftovers admit no valid pair.
pub fn gen_random_regular_duplex<R: Rng>(
    config: &GeneratorConfig,
    rng: &mut R,
) -> Result<DuplexNetwork, TopologyError> {
    config.validate()?;
    let (ns, nw) = (config.nodes_s, config.nodes_w);
    let d = config.regular;
    let mut b = Builder::new(ns, nw);
    for (u, v) in regular_unipartite(rng, ns, d.k_s)? {
        b.add_intra(u, v);
    }
    for (u, v) in regular_unipartite(rng, nw, d.k_w)? {
        b.add_intra(ns + u, ns + v);
    }
    for (u, v) in regular_bipartite(rng, ns, d.k_ws, nw, d.k_sw)? {
        b.add_inter(u, ns + v);
    }
    b.finish()
}

fn ordered(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

fn regular_unipartite<R: Rng>(rng: &mut R, n: usize, k: usize) -> Result<Vec<(usize, usize)>, TopologyError> {
    if k == 0 {
        return Ok(Vec::new());
    }
    'restart: for _ in 0..MATCHING_RESTARTS {
        let mut edges: HashSet<(usize, usize)> = HashSet::with_capacity(n * k);
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, k)).collect();
        while !stubs.is_empty() {
            stubs.shuffle(rng);
            let mut left = Vec::new();
            for pair in stubs.chunks_exact(2) {
                let (u, v) = (pair[0], pair[1]);
                if u != v && !edges.contains(&ordered(u, v)) {
                    edges.insert(ordered(u, v));
                } else {
                    left.push(u);
                    left.push(v);
                }
            }
            if !left.is_empty() {
                let suitable = left
                    .iter()
                    .enumerate()
                    .any(|(i, &u)| left[i + 1..].iter().any(|&v| u != v && !edges.contains(&ordered(u, v))));
                if !suitable {
                    continue 'restart;
                }
            }
            stubs = left;
        }
        let mut out: Vec<(usize, usize)> = edges.into_iter().collect();
        out.sort_unstable();
        return Ok(out);
    }
    Err(TopologyError::MatchingFailed {
        restarts: MATCHING_RESTARTS,
    })
}

fn regular_bipartite<R: Rng>(
    rng: &mut R,
    n_left: usize,
    k_left: usize,
    n_right: usize,
    k_right: usize,
) -> Result<Vec<(usize, usize)>, TopologyError> {
    if k_left == 0 {
        return Ok(Vec::new());
    }
    'restart: for _ in 0..MATCHING_RESTARTS {
        let mut edges: HashSet<(usize, usize)> = HashSet::with_capacity(n_left * k_left);
        let mut left: Vec<usize> = (0..n_left).flat_map(|v| std::iter::repeat_n(v, k_left)).collect();
        let mut right: Vec<usize> = (0..n_right).flat_map(|v| std::iter::repeat_n(v, k_right)).collect();
        while !left.is_empty() {
            right.shuffle(rng);
            let mut rest_l = Vec::new();
            let mut rest_r = Vec::new();
            for (&u, &v) in left.iter().zip(&right) {
                if edges.insert((u, v)) {
                    continue;
                }
                rest_l.push(u);
                rest_r.push(v);
            }
            if !rest_l.is_empty() {
                let suitable = rest_l
                    .iter()
                    .any(|&u| rest_r.iter().any(|&v| !edges.contains(&(u, v))));
                if !suitable {
                    continue 'restart;
                }
            }
            left = rest_l;
            right = rest_r;
        }
        let mut out: Vec<(usize, usize)> = edges.into_iter().collect();
        out.sort_unstable();
        return Ok(out);
    }
    Err(TopologyError::MatchingFailed {
        restarts: MATCHING_RESTARTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    fn ba(n: usize, n0: usize, m_s: usize, m_w: usize, m_sw: usize) -> GeneratorConfig {
        GeneratorConfig {
            kind: TopologyKind::Ba,
            nodes_s: n,
            nodes_w: n,
            n0,
            m_s,
            m_w,
            m_sw,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn ba_birth_stubs_match_attachment_counts() {
        let cfg = ba(1000, 3, 3, 3, 2);
        let net = gen_interconnected_ba(&cfg, &mut derive_stream(1, 0, None)).unwrap();
        // A node born at growth step g has exactly m_s intra and m_sw inter
        // links to nodes with smaller birth order in its respective target
        // network. Reconstruct birth order: S node i and W node n+i are born
        // in the same step, S first.
        let n = 1000;
        for i in 3..n {
            let v = i;
            let older_intra = net.intra_neighbors(v).iter().filter(|&&u| (u as usize) < v).count();
            // W nodes older than S node i: W indices < n + i.
            let older_inter = net.inter_neighbors(v).iter().filter(|&&u| (u as usize) < n + i).count();
            assert_eq!(older_intra, 3, "S node {v}");
            assert_eq!(older_inter, 2, "S node {v}");
            let w = n + i;
            let older_intra_w = net.intra_neighbors(w).iter().filter(|&&u| (u as usize) < w).count();
            let older_inter_w = net.inter_neighbors(w).iter().filter(|&&u| (u as usize) <= i).count();
            assert_eq!(older_intra_w, 3, "W node {w}");
            assert_eq!(older_inter_w, 2, "W node {w}");
        }
    }

    #[test]
    fn ba_decoupled_limit() {
        let cfg = ba(200, 3, 3, 2, 0);
        let net = gen_interconnected_ba(&cfg, &mut derive_stream(5, 0, None)).unwrap();
        assert!((0..net.len()).all(|v| net.inter_degree(v) == 0));
    }

    #[test]
    fn ba_small_edge_count() {
        let cfg = GeneratorConfig {
            n0: 3,
            ..ba(50, 3, 2, 2, 1)
        };
        let net = gen_interconnected_ba(&cfg, &mut derive_stream(9, 0, None)).unwrap();
        let intra_s = net.edges().filter(|e| e.2 == EdgeKind::IntraS).count();
        assert_eq!(intra_s, 3 * 2 / 2 + 2 * (50 - 3));
        assert_eq!(net.edge_count_of(EdgeKind::Inter), 2 * (50 - 3));
    }

    #[test]
    fn config_rejects_bad_attachment() {
        let mut cfg = ba(100, 2, 3, 3, 2);
        assert!(matches!(cfg.validate(), Err(TopologyError::Config(_))));
        cfg.n0 = 3;
        cfg.m_s = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn er_zero_probability_is_empty() {
        let cfg = GeneratorConfig {
            kind: TopologyKind::Er,
            nodes_s: 100,
            nodes_w: 100,
            er: ErDensity::Probability {
                intra_s: 0.0,
                intra_w: 0.0,
                inter: 0.05,
            },
            ..GeneratorConfig::default()
        };
        let net = gen_interconnected_er(&cfg, &mut derive_stream(3, 0, None)).unwrap();
        assert!((0..net.len()).all(|v| net.intra_degree(v) == 0));
        assert!(net.edge_count_of(EdgeKind::Inter) > 0);
    }

    #[test]
    fn er_matches_ba_totals_by_default() {
        let cfg = GeneratorConfig {
            kind: TopologyKind::Er,
            ..GeneratorConfig::default()
        };
        let net = gen_interconnected_er(&cfg, &mut derive_stream(3, 0, None)).unwrap();
        let (s, w, x) = cfg.ba_edge_totals();
        assert_eq!(net.edge_count_of(EdgeKind::IntraS), s);
        assert_eq!(net.edge_count_of(EdgeKind::IntraW), w);
        assert_eq!(net.edge_count_of(EdgeKind::Inter), x);
    }

    #[test]
    fn er_too_many_edges_is_config_error() {
        let cfg = GeneratorConfig {
            kind: TopologyKind::Er,
            nodes_s: 10,
            nodes_w: 10,
            er: ErDensity::Edges {
                intra_s: 46,
                intra_w: 10,
                inter: 10,
            },
            ..GeneratorConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(TopologyError::Config(_))));
    }

    #[test]
    fn unrank_covers_upper_triangle() {
        let n = 7;
        let all: Vec<_> = (0..pairs(n)).map(|p| unrank_pair(n, p)).collect();
        let mut expect = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                expect.push((i, j));
            }
        }
        assert_eq!(all, expect);
    }

    #[test]
    fn acceptance_probability_classes() {
        assert_eq!(assortative_acceptance(4, 4), 1.0);
        assert!((assortative_acceptance(2, 10) - 1.0 / 9.0).abs() < 1e-15);
        assert!((assortative_acceptance(10, 2) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn regular_small_ring_like_instance() {
        let cfg = GeneratorConfig {
            kind: TopologyKind::RandomRegular,
            nodes_s: 10,
            nodes_w: 10,
            regular: RegularDegrees {
                k_s: 3,
                k_w: 3,
                k_ws: 0,
                k_sw: 0,
            },
            ..GeneratorConfig::default()
        };
        for seed in 0..20 {
            let net = gen_random_regular_duplex(&cfg, &mut derive_stream(seed, 0, None)).unwrap();
            for v in 0..net.len() {
                assert_eq!(net.intra_degree(v), 3);
                assert_eq!(net.inter_degree(v), 0);
            }
        }
    }

    #[test]
    fn regular_rejects_odd_stub_total() {
        let cfg = GeneratorConfig {
            kind: TopologyKind::RandomRegular,
            nodes_s: 9,
            nodes_w: 10,
            regular: RegularDegrees {
                k_s: 3,
                k_w: 3,
                k_ws: 1,
                k_sw: 1,
            },
            ..GeneratorConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(TopologyError::NotGraphical(_))));
    }

    #[test]
    fn edge_list_dump_format() {
        let cfg = ba(10, 3, 2, 2, 1);
        let net = gen_interconnected_ba(&cfg, &mut derive_stream(1, 0, None)).unwrap();
        let mut buf = Vec::new();
        net.write_edge_list(&mut buf, "kind=ba seed=1").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# kind=ba seed=1"));
        let body: Vec<&str> = lines.collect();
        assert_eq!(body.len(), net.edge_count());
        for line in body {
            let parts: Vec<&str> = line.split(' ').collect();
            assert_eq!(parts.len(), 3);
            assert!(["intra_S", "intra_W", "inter"].contains(&parts[2]));
        }
    }
}
