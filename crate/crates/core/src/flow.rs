//! Proof flow and weight updates for a single exemplar.
//!
//! `u(e)` is the probability that the node under `e` passes true (it is
//! true, or `e` is absent). A bottom-up sweep computes `u`; a top-down sweep
//! pulls the root flows toward the exemplar's classification, producing
//! adjusted flows `v` and new weights.

use std::collections::BTreeMap;

use crate::dtgraph::{DtGraph, EdgeIx, NodeKind};
use crate::theory::{ClassificationVector, Example, Exemplar};

pub const DEFAULT_EPS: f64 = 0.01;

/// Lower bound for updated weights.
pub const P_FLOOR: f64 = 1e-12;

/// Per-edge flow.
pub type FlowMap = Vec<f64>;

/// Per-edge adjusted flow.
pub type AdjustMap = Vec<f64>;

/// Flow for a crisp example.
pub fn bottom_up(g: &DtGraph, ex: &Example) -> FlowMap {
    bottom_up_with(g, &g.weights(), |p| if ex.contains(p) { 1.0 } else { 0.0 })
}

/// Flow with explicit weights and a real-valued truth for each observable.
pub fn bottom_up_with(g: &DtGraph, p: &[f64], truth: impl Fn(&str) -> f64) -> FlowMap {
    let mut u = vec![0.0; g.edge_count()];
    for &n in g.topo_nodes().iter().rev() {
        let kids = g.children(n);
        let pass = if kids.is_empty() {
            match g.node(n) {
                NodeKind::Literal { prop, negated: false } => 1.0 - truth(prop),
                _ => 1.0,
            }
        } else {
            kids.iter().map(|&e| u[e]).product()
        };
        for &e in g.parents(n) {
            u[e] = 1.0 - p[e] * pass;
        }
    }
    u
}

/// Flow into each root, in `g.roots()` order.
pub fn root_flows(g: &DtGraph, u: &[f64]) -> Vec<f64> {
    g.roots().iter().map(|r| g.root_edge(r).map_or(1.0, |e| u[e])).collect()
}

/// Result of a top-down sweep.
#[derive(Clone, Debug)]
pub struct Update {
    pub v: AdjustMap,
    pub p_new: Vec<f64>,
    /// Edges visited; equals the edge count.
    pub visits: usize,
    /// Values clipped into range.
    pub clamps: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        1.0
    }
}

fn change_score(v: f64, u: f64) -> f64 {
    let (hi, lo) = if v > u { (v, u) } else { (u, v) };
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        (1.0 - hi / lo).abs()
    }
}

/// Adjusted flows and new weights for target `target`. `eps` may be 0 for
/// oracle comparisons.
pub fn top_down(g: &DtGraph, u: &[f64], target: &BTreeMap<String, bool>, eps: f64) -> Update {
    let m = g.edge_count();
    let mut v = vec![0.0; m];
    let mut p_new = g.weights();
    let mut visits = 0;
    let mut clamps = 0;
    for &e in g.topo_edges() {
        visits += 1;
        let edge = g.edge(e);
        let raw = if edge.parent == 0 {
            let root = g.node_name(edge.child);
            if target.get(root).copied().unwrap_or(false) {
                1.0 - eps
            } else {
                eps
            }
        } else {
            let mut best = None;
            let mut best_score = f64::NEG_INFINITY;
            for &f in g.parents(edge.parent) {
                let s = change_score(v[f], u[f]);
                if s > best_score {
                    best = Some(f);
                    best_score = s;
                }
            }
            let f = best.expect("non-root edge has a parent edge");
            1.0 - (1.0 - u[e]) * ratio(v[f], u[f])
        };
        v[e] = raw.clamp(0.0, 1.0);
        let p = edge.p;
        let q = 1.0 - (1.0 - p) * ratio(v[e], u[e]);
        p_new[e] = q.clamp(P_FLOOR, 1.0);
        if v[e] != raw || p_new[e] != q {
            clamps += 1;
            log::debug!("clamped {}: v {raw} -> {}, p {q} -> {}", g.edge_name(e), v[e], p_new[e]);
        }
    }
    Update { v, p_new, visits, clamps }
}

/// Bottom-up then top-down, applying the new weights in place.
pub fn process_exemplar_mut(g: &mut DtGraph, x: &Exemplar, eps: f64) -> Update {
    let u = bottom_up(g, &x.example);
    let upd = top_down(g, &u, &x.target, eps);
    g.set_mutable_weights(&upd.p_new);
    upd
}

/// Pure form of [`process_exemplar_mut`].
pub fn process_exemplar(g: &DtGraph, x: &Exemplar, eps: f64) -> DtGraph {
    let mut k = g.clone();
    process_exemplar_mut(&mut k, x, eps);
    k
}

/// Crisp NAND evaluation ignoring weights. `present[e] == false` removes
/// edge `e`. Returns the truth value of every node.
pub fn node_truth(g: &DtGraph, ex: &Example, present: Option<&[bool]>) -> Vec<bool> {
    let mut truth = vec![false; g.node_count()];
    for &n in g.topo_nodes().iter().rev() {
        let kids = g.children(n);
        truth[n] = match g.node(n) {
            NodeKind::Literal { prop, negated: false } if kids.is_empty() => ex.contains(prop),
            _ => kids
                .iter()
                .filter(|&&e| present.is_none_or(|m| m[e]))
                .any(|&e| !truth[g.edge(e).child]),
        };
    }
    truth
}

/// Classification computed from the graph structure alone.
pub fn classify_graph(g: &DtGraph, ex: &Example) -> ClassificationVector {
    let truth = node_truth(g, ex, None);
    g.roots().iter().map(|r| (r.clone(), g.node_id(r).is_some_and(|n| truth[n]))).collect()
}

/// True if the graph's structure classifies `x` correctly for every root.
pub fn graph_agrees(g: &DtGraph, x: &Exemplar) -> bool {
    let got = classify_graph(g, &x.example);
    got.iter().all(|(r, v)| x.target.get(r).copied().unwrap_or(false) == *v)
}

/// Index of edge `e` among `g.topo_edges()`; handy for printing.
pub fn topo_position(g: &DtGraph) -> Vec<usize> {
    let mut pos = vec![0; g.edge_count()];
    for (i, &e) in g.topo_edges().iter().enumerate() {
        pos[e] = i;
    }
    pos
}

#[doc(hidden)]
pub fn edge_value(g: &DtGraph, values: &[f64], name: &str) -> f64 {
    let e: EdgeIx = g.edge_by_name(name).unwrap_or_else(|| panic!("no edge {name}"));
    values[e]
}
