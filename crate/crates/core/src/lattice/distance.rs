//! Shortest Logical chains by breadth-first search.
//!
//! Face chains: nodes are the live cells plus one node Ω standing for every
//! tube and the outer boundary. A chain without syndrome is a set of closed
//! walks; the relevant ones pass through Ω, so the search runs over
//! `(node, cocycle mask)` from `(Ω, 0)` back to some `(Ω, m ≠ 0)`.
//!
//! Edge chains are closed loops of vertices. For each cocycle the search
//! walks the parity double cover from every endpoint of a cocycle edge.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{DefectSpec, LogicalReps, QubitKind, RhgLattice, ZChain, OMEGA};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceReport {
    /// Shortest face chain joining the first two tubes (or the only tube to
    /// the outer boundary).
    pub connecting: Option<usize>,
    /// Shortest Logical face chain of any kind.
    pub primal: Option<usize>,
    /// Shortest edge loop around the first tube.
    pub encircling: Option<usize>,
    /// Shortest Logical edge chain of any kind.
    pub dual: Option<usize>,
}

impl DistanceReport {
    pub fn min(&self) -> Option<usize> {
        match (self.primal, self.dual) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

type Adjacency = Vec<Vec<(u32, u32)>>;

fn walk_back(parent: &[(u32, u32)], mut state: usize, start: usize) -> Vec<usize> {
    let mut qubits = Vec::new();
    while state != start {
        let (prev, q) = parent[state];
        qubits.push(q as usize);
        state = prev as usize;
    }
    qubits
}

pub(super) fn search(
    lattice: &RhgLattice,
    spec: &DefectSpec,
    reps: &LogicalReps,
) -> Result<(DistanceReport, Option<ZChain>, Option<ZChain>)> {
    let tubes = spec.tubes.len();
    if tubes > 8 {
        return Err(Error::Unsupported("distance search supports at most 8 tubes".into()));
    }
    let cells = lattice.num_cells();
    let omega = cells;
    let mut primal: Adjacency = vec![Vec::new(); cells + 1];
    let mut dual: Adjacency = vec![Vec::new(); lattice.num_vertices()];
    for q in 0..lattice.num_qubits() {
        if !spec.active[q] {
            continue;
        }
        let [a, b] = spec.ends[q];
        match lattice.kind(q) {
            QubitKind::Face => {
                let node = |e: u32| if e == OMEGA { omega as u32 } else { e };
                let (a, b) = (node(a), node(b));
                primal[a as usize].push((b, q as u32));
                if a != b {
                    primal[b as usize].push((a, q as u32));
                }
            }
            QubitKind::Edge => {
                let (a, b) = (a - cells as u32, b - cells as u32);
                dual[a as usize].push((b, q as u32));
                dual[b as usize].push((a, q as u32));
            }
        }
    }

    let mut report = DistanceReport::default();
    let primal_bits = (1u64 << tubes) - 1;
    let target = if tubes >= 2 { 0b11 } else { 0b1 };
    let masks = 1usize << tubes;
    let state = |node: usize, m: u64| node * masks + m as usize;
    let mut dist = vec![u32::MAX; (cells + 1) * masks];
    let mut parent = vec![(0u32, 0u32); (cells + 1) * masks];
    let start = state(omega, 0);
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut connecting = None;
    while let Some(s) = queue.pop_front() {
        let (node, m) = (s / masks, (s % masks) as u64);
        for &(next, q) in &primal[node] {
            let nm = m ^ (reps.masks[q as usize] & primal_bits);
            let ns = state(next as usize, nm);
            if dist[ns] != u32::MAX {
                continue;
            }
            dist[ns] = dist[s] + 1;
            parent[ns] = (s as u32, q);
            if next as usize == omega && nm != 0 {
                report.primal.get_or_insert(dist[ns] as usize);
                if nm == target && report.connecting.is_none() {
                    report.connecting = Some(dist[ns] as usize);
                    connecting = Some(ZChain::from_qubits(walk_back(&parent, ns, start)));
                }
            }
            queue.push_back(ns);
        }
    }

    let mut encircling = None;
    for (b, cocycle) in reps.cocycles.iter().enumerate().skip(tubes) {
        let bit = 1u64 << b;
        let mut starts: Vec<u32> =
            cocycle.qubits().iter().flat_map(|&q| spec.ends[q]).map(|e| e - cells as u32).collect();
        starts.sort_unstable();
        starts.dedup();
        let mut best: Option<(usize, Vec<usize>)> = None;
        let nv = dual.len();
        let mut dist = vec![u32::MAX; 2 * nv];
        let mut parent = vec![(0u32, 0u32); 2 * nv];
        for &u in &starts {
            dist.fill(u32::MAX);
            let start = 2 * u as usize;
            dist[start] = 0;
            let mut queue = VecDeque::from([start]);
            'bfs: while let Some(s) = queue.pop_front() {
                if let Some((len, _)) = &best {
                    if dist[s] as usize + 1 >= *len {
                        break;
                    }
                }
                let (node, p) = (s / 2, s % 2);
                for &(next, q) in &dual[node] {
                    let np = p ^ ((reps.masks[q as usize] & bit != 0) as usize);
                    let ns = 2 * next as usize + np;
                    if dist[ns] != u32::MAX {
                        continue;
                    }
                    dist[ns] = dist[s] + 1;
                    parent[ns] = (s as u32, q);
                    if next == u && np == 1 {
                        best = Some((dist[ns] as usize, walk_back(&parent, ns, start)));
                        break 'bfs;
                    }
                    queue.push_back(ns);
                }
            }
        }
        if let Some((len, path)) = best {
            report.dual = Some(report.dual.map_or(len, |d: usize| d.min(len)));
            if b == tubes {
                report.encircling = Some(len);
                encircling = Some(ZChain::from_qubits(path));
            }
        }
    }
    Ok((report, connecting, encircling))
}
