//! Default weights from semantic impact, bias, and radicality.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::control::LogEntry;
use crate::dtgraph::{DtGraph, EdgeIx};
use crate::flow::bottom_up_with;
use crate::Error;

pub const DEFAULT_C: f64 = 1e6;

/// Per-edge semantic impact.
pub type ImpactMap = Vec<f64>;

/// A-priori truth probability of each observable.
#[derive(Clone, Debug, PartialEq)]
pub struct Prior {
    pub default: f64,
    pub overrides: BTreeMap<String, f64>,
}

impl Default for Prior {
    fn default() -> Self {
        Prior { default: 0.5, overrides: BTreeMap::new() }
    }
}

impl Prior {
    pub fn get(&self, prop: &str) -> f64 {
        self.overrides.get(prop).copied().unwrap_or(self.default)
    }

    /// `prop value` per line.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut prior = Prior::default();
        for (ln, line) in text.lines().enumerate() {
            let src = line.split('#').next().unwrap_or("").trim();
            if src.is_empty() {
                continue;
            }
            let bad = || Error::Syntax { line: ln + 1, col: 1, msg: "expected `<prop> <probability>`".into() };
            let (prop, v) = src.split_once(char::is_whitespace).ok_or_else(bad)?;
            let v: f64 = v.trim().parse().map_err(|_| bad())?;
            if !(0.0..=1.0).contains(&v) {
                return Err(bad());
            }
            prior.overrides.insert(prop.to_string(), v);
        }
        Ok(prior)
    }
}

/// Weights of the reference assignment: 1/2 on mutable edges, 1 elsewhere.
fn half_weights(g: &DtGraph) -> Vec<f64> {
    (0..g.edge_count()).map(|e| if g.is_mutable(e) { 0.5 } else { 1.0 }).collect()
}

/// Impact of each edge, by one top-down pass over the reference flows.
///
/// The step from a parent edge `f` to `e` multiplies by
/// `(1 - u(e)) / (p(e) u(e))`; with `p(e) = 1/2` this is `2(1 - u)/u`. Fixed
/// edges use their weight 1. Where several parents exist the largest parent
/// impact is used, and a zero flow passes the parent impact through.
pub fn semantic_impact(g: &DtGraph, prior: &Prior) -> ImpactMap {
    let p = half_weights(g);
    let u = bottom_up_with(g, &p, |s| prior.get(s));
    let mut m = vec![0.0; g.edge_count()];
    for &e in g.topo_edges() {
        let parent = g.edge(e).parent;
        m[e] = if parent == 0 {
            1.0 - u[e]
        } else {
            let mf = g.parents(parent).iter().map(|&f| m[f]).fold(0.0, f64::max);
            if u[e] > 0.0 {
                mf * (1.0 - u[e]) / (p[e] * u[e])
            } else {
                mf
            }
        };
    }
    m
}

/// Reference definition of the impact of `e`: root flow with `e` and all of
/// its ancestors at weight 1, against root flow with `e` deleted. Summed
/// over roots.
pub fn semantic_impact_two_run(g: &DtGraph, prior: &Prior, e: EdgeIx) -> f64 {
    let mut p = half_weights(g);
    let mut stack = vec![e];
    let mut seen = BTreeSet::new();
    while let Some(x) = stack.pop() {
        if seen.insert(x) {
            p[x] = 1.0;
            stack.extend(g.parents(g.edge(x).parent).iter().copied());
        }
    }
    let on = bottom_up_with(g, &p, |s| prior.get(s));
    p[e] = 0.0;
    let off = bottom_up_with(g, &p, |s| prior.get(s));
    g.roots()
        .iter()
        .filter_map(|r| g.root_edge(r))
        .map(|r| (on[r] - off[r]).abs())
        .sum()
}

/// `C^M / (C^M + 1)`, evaluated without overflow.
pub fn weight_from_impact(m: f64, c: f64) -> f64 {
    1.0 / (1.0 + c.powf(-m))
}

/// Graph carrying default weights on every mutable edge.
pub fn default_weights(g: &DtGraph, c: f64, prior: &Prior) -> DtGraph {
    let m = semantic_impact(g, prior);
    let p: Vec<f64> = m.iter().map(|&x| weight_from_impact(x, c)).collect();
    let mut k = g.clone();
    k.set_mutable_weights(&p);
    k
}

/// Softens confidence in `s` and hardens it elsewhere by the power `1/beta`.
pub fn apply_bias(g: &DtGraph, s: &BTreeSet<EdgeIx>, beta: f64) -> Result<DtGraph, Error> {
    if beta.is_nan() || beta < 1.0 {
        return Err(Error::Config(format!("bias {beta} < 1")));
    }
    let mut k = g.clone();
    let p: Vec<f64> = (0..g.edge_count())
        .map(|e| {
            let w = g.weight(e);
            if s.contains(&e) {
                1.0 - (1.0 - w).powf(1.0 / beta)
            } else {
                w.powf(1.0 / beta)
            }
        })
        .collect();
    k.set_mutable_weights(&p);
    Ok(k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogBase {
    E,
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadFormula {
    /// `-log p` over kept edges plus `-log(1-p)` over revised edges.
    Full,
    /// Revised edges only.
    RevisedOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scheme {
    pub base: LogBase,
    pub formula: RadFormula,
}

impl Scheme {
    pub const NATURAL: Scheme = Scheme { base: LogBase::E, formula: RadFormula::Full };

    pub fn all() -> [Scheme; 4] {
        let mut out = [Scheme::NATURAL; 4];
        let mut i = 0;
        for base in [LogBase::E, LogBase::Two] {
            for formula in [RadFormula::Full, RadFormula::RevisedOnly] {
                out[i] = Scheme { base, formula };
                i += 1;
            }
        }
        out
    }

    fn log(self, x: f64) -> f64 {
        match self.base {
            LogBase::E => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let base = match self.base {
            LogBase::E => "ln",
            LogBase::Two => "log2",
        };
        let formula = match self.formula {
            RadFormula::Full => "full",
            RadFormula::RevisedOnly => "revised-only",
        };
        write!(f, "{base}/{formula}")
    }
}

/// Cost of revising the edges in `s`. Infinite if some revised edge has
/// weight 1.
pub fn radicality(g: &DtGraph, s: &BTreeSet<EdgeIx>, scheme: Scheme) -> f64 {
    g.mutable_edges()
        .map(|e| {
            let p = g.weight(e);
            if s.contains(&e) {
                -scheme.log(1.0 - p)
            } else if scheme.formula == RadFormula::Full {
                -scheme.log(p)
            } else {
                0.0
            }
        })
        .sum()
}

/// Radicality of the revisions recorded in `log` relative to `k0`.
pub fn radicality_of_log(k0: &DtGraph, log: &[LogEntry], scheme: Scheme) -> Result<f64, Error> {
    let s = crate::control::revised_edges(k0, log)?;
    Ok(radicality(k0, &s, scheme))
}
