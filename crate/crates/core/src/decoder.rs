//! Space-time minimum-weight matching decoder and the majority-vote
//! detectors used during hole movement and contact measurement.
//!
//! Each detection event gets its own boundary partner, and partners are
//! joined to each other at zero weight, so any subset of events may be sent
//! to the boundary while the graph always has a perfect matching.

use std::collections::{HashMap, VecDeque};

use rustworkx_core::max_weight_matching::max_weight_matching;
use rustworkx_core::petgraph::graph::UnGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{GenKind, Lattice, Pos};
use crate::noise::Frame;
use crate::pauli::{commutes, QubitId};
use crate::tableau::Tableau;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("odd number of events and no boundary to absorb one")]
    Infeasible,
    #[error("rounds have inconsistent lengths")]
    RaggedHistory,
    #[error("expected {expected_rows} rows of {expected_cols} outcomes")]
    BadDimensions { expected_rows: usize, expected_cols: usize },
    #[error("vote is tied")]
    Tie,
    #[error("matcher failure: {0}")]
    Matcher(String),
}

/// Reported generator signs, one vector per round, in a fixed generator order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyndromeHistory {
    /// Lattice generator id of each slot.
    pub generators: Vec<usize>,
    pub rounds: Vec<Vec<i8>>,
}

impl SyndromeHistory {
    pub fn new(generators: Vec<usize>) -> Self {
        SyndromeHistory { generators, rounds: Vec::new() }
    }

    pub fn push(&mut self, round: Vec<i8>) -> Result<(), DecodeError> {
        if round.len() != self.generators.len() {
            return Err(DecodeError::RaggedHistory);
        }
        self.rounds.push(round);
        Ok(())
    }
}

/// `(slot, round)` pairs where a report differs from the previous round
/// (round 0 is compared against `+1` initialisation).
pub fn detection_events(h: &SyndromeHistory) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut prev = vec![1i8; h.generators.len()];
    for (t, round) in h.rounds.iter().enumerate() {
        for (s, (&a, b)) in round.iter().zip(prev.iter_mut()).enumerate() {
            if a != *b {
                out.push((s, t));
            }
            *b = a;
        }
    }
    out
}

/// Unit-weight graph of active cells of one kind plus a single boundary node.
#[derive(Clone, Debug)]
pub struct CellGraph {
    pub kind: GenKind,
    pub cells: Vec<Pos>,
    index: HashMap<Pos, usize>,
    dist: Vec<Vec<u32>>,
    prev: Vec<Vec<(u32, QubitId)>>,
}

const UNREACHED: u32 = u32::MAX;

impl CellGraph {
    pub fn new(lat: &Lattice, kind: GenKind) -> CellGraph {
        let cells: Vec<Pos> = lat.active_generators().filter(|g| g.kind == kind).map(|g| g.pos).collect();
        let index: HashMap<Pos, usize> = cells.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let b = cells.len();
        let mut adj: Vec<Vec<(usize, QubitId)>> = vec![Vec::new(); b + 1];
        for (i, &p) in cells.iter().enumerate() {
            for (n, q) in lat.cell_edges(p) {
                match n.and_then(|n| index.get(&n)) {
                    Some(&j) => adj[i].push((j, q)),
                    None => {
                        adj[i].push((b, q));
                        adj[b].push((i, q));
                    }
                }
            }
        }
        let mut dist = Vec::with_capacity(b + 1);
        let mut prev = Vec::with_capacity(b + 1);
        for s in 0..=b {
            let mut d = vec![UNREACHED; b + 1];
            let mut pv = vec![(UNREACHED, 0); b + 1];
            d[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &(v, q) in &adj[u] {
                    if d[v] == UNREACHED {
                        d[v] = d[u] + 1;
                        pv[v] = (u as u32, q);
                        queue.push_back(v);
                    }
                }
            }
            dist.push(d);
            prev.push(pv);
        }
        CellGraph { kind, cells, index, dist, prev }
    }

    pub fn boundary(&self) -> usize {
        self.cells.len()
    }

    pub fn node_of(&self, p: Pos) -> Option<usize> {
        self.index.get(&p).copied()
    }

    /// Hop count between nodes (`None` if disconnected).
    pub fn distance(&self, a: usize, b: usize) -> Option<u32> {
        let d = self.dist[a][b];
        (d != UNREACHED).then_some(d)
    }

    /// Qubits along a shortest path from `a` to `b`.
    pub fn path(&self, a: usize, b: usize) -> Vec<QubitId> {
        let mut out = Vec::new();
        let mut v = b;
        while v != a {
            let (u, q) = self.prev[a][v];
            if u == UNREACHED {
                return Vec::new();
            }
            out.push(q);
            v = u as usize;
        }
        out
    }
}

/// Space-time detection event on a cell graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub node: usize,
    pub round: usize,
}

/// Nodes `0..k` are events, `k..2k` their boundary partners.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingGraph {
    pub events: Vec<Event>,
    pub edges: Vec<(usize, usize, u32)>,
}

impl MatchingGraph {
    pub fn build(g: &CellGraph, events: &[Event]) -> MatchingGraph {
        let k = events.len();
        let mut edges = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                if let Some(d) = g.distance(events[i].node, events[j].node) {
                    edges.push((i, j, d + events[i].round.abs_diff(events[j].round) as u32));
                }
            }
            if let Some(d) = g.distance(events[i].node, g.boundary()) {
                edges.push((i, k + i, d));
            }
        }
        for i in 0..k {
            for j in i + 1..k {
                edges.push((k + i, k + j, 0));
            }
        }
        MatchingGraph { events: events.to_vec(), edges }
    }

    /// Explicit weights: `w[i][j]` between events, `b[i]` to the boundary.
    pub fn from_weights(w: &[Vec<Option<u32>>], b: &[Option<u32>]) -> MatchingGraph {
        let k = b.len();
        let mut edges = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                if let Some(x) = w[i][j] {
                    edges.push((i, j, x));
                }
            }
            if let Some(x) = b[i] {
                edges.push((i, k + i, x));
            }
        }
        for i in 0..k {
            for j in i + 1..k {
                edges.push((k + i, k + j, 0));
            }
        }
        let events = (0..k).map(|i| Event { node: i, round: 0 }).collect();
        MatchingGraph { events, edges }
    }

    pub fn num_events(&self) -> usize {
        self.events.len()
    }

    fn weights(&self) -> (Vec<Vec<Option<u32>>>, Vec<Option<u32>>) {
        let k = self.num_events();
        let mut w = vec![vec![None; k]; k];
        let mut b = vec![None; k];
        for &(i, j, x) in &self.edges {
            if j < k {
                w[i][j] = Some(x);
                w[j][i] = Some(x);
            } else if i < k {
                b[i] = Some(x);
            }
        }
        (w, b)
    }
}

/// Each event paired with another event or with the boundary (`None`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub pairs: Vec<(usize, Option<usize>)>,
    pub weight: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchMethod {
    /// Subset dynamic programming up to `EXACT_LIMIT` events, blossom beyond.
    #[default]
    Auto,
    Exact,
    Blossom,
}

pub const EXACT_LIMIT: usize = 10;

/// Minimum-weight perfect matching.
pub fn match_graph(g: &MatchingGraph, method: MatchMethod) -> Result<Pairing, DecodeError> {
    let k = g.num_events();
    if k == 0 {
        return Ok(Pairing { pairs: Vec::new(), weight: 0 });
    }
    let use_exact = match method {
        MatchMethod::Auto => k <= EXACT_LIMIT,
        MatchMethod::Exact => true,
        MatchMethod::Blossom => false,
    };
    if use_exact {
        exact_matching(g)
    } else {
        blossom_matching(g)
    }
}

fn exact_matching(g: &MatchingGraph) -> Result<Pairing, DecodeError> {
    let k = g.num_events();
    let (w, b) = g.weights();
    let full = (1usize << k) - 1;
    const INF: u64 = u64::MAX;
    let mut best = vec![INF; 1 << k];
    let mut choice = vec![(0usize, usize::MAX); 1 << k];
    best[0] = 0;
    for mask in 1..=full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        if let Some(x) = b[i] {
            if best[rest] != INF && best[rest] + x as u64 <= best[mask] {
                best[mask] = best[rest] + x as u64;
                choice[mask] = (i, usize::MAX);
            }
        }
        let mut m = rest;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            m &= m - 1;
            if let Some(x) = w[i][j] {
                let r = rest & !(1 << j);
                if best[r] != INF && best[r] + (x as u64) < best[mask] {
                    best[mask] = best[r] + x as u64;
                    choice[mask] = (i, j);
                }
            }
        }
    }
    if best[full] == INF {
        return Err(DecodeError::Infeasible);
    }
    let mut pairs = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let (i, j) = choice[mask];
        if j == usize::MAX {
            pairs.push((i, None));
            mask &= !(1 << i);
        } else {
            pairs.push((i, Some(j)));
            mask &= !(1 << i) & !(1 << j);
        }
    }
    pairs.sort();
    Ok(Pairing { pairs, weight: best[full] })
}

fn blossom_matching(g: &MatchingGraph) -> Result<Pairing, DecodeError> {
    let k = g.num_events();
    let top = g.edges.iter().map(|e| e.2 as i128).max().unwrap_or(0) + 1;
    let mut graph: UnGraph<(), i128> = UnGraph::with_capacity(2 * k, g.edges.len());
    for _ in 0..2 * k {
        graph.add_node(());
    }
    for &(i, j, x) in &g.edges {
        graph.add_edge((i as u32).into(), (j as u32).into(), top - x as i128);
    }
    let m =
        max_weight_matching(&graph, true, |e| Ok::<i128, String>(*e.weight()), false).map_err(DecodeError::Matcher)?;
    if m.len() != k {
        return Err(DecodeError::Infeasible);
    }
    let (w, b) = g.weights();
    let mut pairs = Vec::new();
    let mut weight = 0u64;
    for (a, c) in m {
        let (a, c) = (a.min(c), a.max(c));
        if c < k {
            pairs.push((a, Some(c)));
            weight += w[a][c].expect("edge exists") as u64;
        } else if a < k {
            pairs.push((a, None));
            weight += b[a].expect("edge exists") as u64;
        }
    }
    pairs.sort();
    Ok(Pairing { pairs, weight })
}

/// Matching decoder for both error types on a fixed lattice.
#[derive(Clone, Debug)]
pub struct Decoder {
    /// Plaquette graph: locates `σ_x` errors.
    pub plaquettes: CellGraph,
    /// Vertex graph: locates `σ_z` errors.
    pub vertices: CellGraph,
    pub method: MatchMethod,
}

impl Decoder {
    pub fn new(lat: &Lattice) -> Decoder {
        Decoder {
            plaquettes: CellGraph::new(lat, GenKind::Plaquette),
            vertices: CellGraph::new(lat, GenKind::Vertex),
            method: MatchMethod::Auto,
        }
    }

    pub fn graph(&self, kind: GenKind) -> &CellGraph {
        match kind {
            GenKind::Plaquette => &self.plaquettes,
            GenKind::Vertex => &self.vertices,
        }
    }

    /// Qubits to flip for the events of one graph.
    pub fn correction(&self, kind: GenKind, events: &[Event]) -> Result<Vec<QubitId>, DecodeError> {
        let g = self.graph(kind);
        let mg = MatchingGraph::build(g, events);
        let pairing = match_graph(&mg, self.method)?;
        Ok(pairing_qubits(g, events, &pairing))
    }
}

/// Union (mod 2) of the shortest paths selected by a pairing.
pub fn pairing_qubits(g: &CellGraph, events: &[Event], pairing: &Pairing) -> Vec<QubitId> {
    let mut flips: HashMap<QubitId, bool> = HashMap::new();
    for &(i, j) in &pairing.pairs {
        let a = events[i].node;
        let b = j.map(|j| events[j].node).unwrap_or(g.boundary());
        for q in g.path(a, b) {
            *flips.entry(q).or_default() ^= true;
        }
    }
    let mut out: Vec<QubitId> = flips.into_iter().filter(|(_, v)| *v).map(|(q, _)| q).collect();
    out.sort_unstable();
    out
}

/// Residual error after correction and which logical pairs it corrupts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrectionOutcome {
    pub frame: Frame,
    pub logical_failure: Vec<bool>,
}

/// Applies the pairing's corrections of the graph's error type to `frame`.
pub fn decide_and_correct(
    tab: &Tableau,
    g: &CellGraph,
    events: &[Event],
    pairing: &Pairing,
    frame: &Frame,
) -> CorrectionOutcome {
    let mut f = frame.clone();
    for q in pairing_qubits(g, events, pairing) {
        match g.kind {
            GenKind::Plaquette => f.x[q as usize] ^= true,
            GenKind::Vertex => f.z[q as usize] ^= true,
        }
    }
    let residual = f.to_pauli();
    let logical_failure =
        tab.logicals().iter().map(|l| !commutes(&residual, &l.x) || !commutes(&residual, &l.z)).collect();
    CorrectionOutcome { frame: f, logical_failure }
}

/// Perfect-syndrome decode of a static error on an undeformed lattice.
pub fn decode_static(
    lat: &Lattice,
    tab: &Tableau,
    dec: &Decoder,
    error: &Frame,
) -> Result<CorrectionOutcome, DecodeError> {
    let mut f = error.clone();
    for kind in [GenKind::Plaquette, GenKind::Vertex] {
        let g = dec.graph(kind);
        let events: Vec<Event> = g
            .cells
            .iter()
            .enumerate()
            .filter(|(_, &p)| {
                let gd = lat.generator_at(p).expect("cell");
                let parity = gd.support.iter().filter(|&&q| match kind {
                    GenKind::Plaquette => f.x[q as usize],
                    GenKind::Vertex => f.z[q as usize],
                });
                parity.count() % 2 == 1
            })
            .map(|(i, _)| Event { node: i, round: 0 })
            .collect();
        let pairing = match_graph(&MatchingGraph::build(g, &events), dec.method)?;
        f = decide_and_correct(tab, g, &events, &pairing, &f).frame;
    }
    let out = decide_and_correct(tab, &dec.plaquettes, &[], &Pairing { pairs: vec![], weight: 0 }, &f);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteResult {
    pub trigger_full_ec: bool,
    pub flagged_rows: Vec<usize>,
}

/// Row-wise vote over the in-hole measurements after a `d/8`-unit expansion:
/// a row is flagged when at least half of its outcomes are `-1`.
pub fn movement_vote(rows: &[Vec<i8>], d: usize) -> Result<VoteResult, DecodeError> {
    let (nr, nc) = (d / 4, d / 8);
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) || nc == 0 {
        return Err(DecodeError::BadDimensions { expected_rows: nr, expected_cols: nc });
    }
    let flagged_rows: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| 2 * r.iter().filter(|&&v| v < 0).count() >= r.len())
        .map(|(i, _)| i)
        .collect();
    Ok(VoteResult { trigger_full_ec: !flagged_rows.is_empty(), flagged_rows })
}

/// Majority sign of repeated single-qubit outcomes.
pub fn contact_vote(outcomes: &[i8]) -> Result<i8, DecodeError> {
    let neg = outcomes.iter().filter(|&&v| v < 0).count();
    let pos = outcomes.len() - neg;
    match pos.cmp(&neg) {
        std::cmp::Ordering::Greater => Ok(1),
        std::cmp::Ordering::Less => Ok(-1),
        std::cmp::Ordering::Equal => Err(DecodeError::Tie),
    }
}
