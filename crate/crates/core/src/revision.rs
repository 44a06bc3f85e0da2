//! Locating and repairing a flawed edge.
//!
//! For a suspect edge we compare root flow with the edge forced present
//! against root flow with it removed. Exemplars whose correct classification
//! depends on the edge are *needed*; those it obstructs are *destructive*.
//! An edge nobody needs is deleted; otherwise a decision tree separating the
//! two groups is grafted beneath it.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dtgraph::{DtGraph, EdgeIx, NodeKind};
use crate::flow::bottom_up_with;
use crate::theory::{fresh, Example, Exemplar, Literal};
use crate::Error;

/// R above this marks the edge as needed.
pub const NEEDED: f64 = 2.0;
/// R below this marks the edge as destructive.
pub const DESTRUCTIVE: f64 = 0.5;

/// `num / den` with `0/0 = 1` and `x/0 = inf`.
fn safe_ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Relevance ratio of `e` for `x`, one value per root in `g.roots()` order.
pub fn r_values(g: &DtGraph, x: &Exemplar, e: EdgeIx) -> Vec<f64> {
    let mut p = g.weights();
    let truth = |s: &str| if x.example.contains(s) { 1.0 } else { 0.0 };
    p[e] = 1.0;
    let with = bottom_up_with(g, &p, truth);
    p[e] = 0.0;
    let without = bottom_up_with(g, &p, truth);
    g.roots()
        .iter()
        .map(|r| {
            let re = g.root_edge(r).expect("root edge");
            let (a, b) = (with[re], without[re]);
            if x.target.get(r).copied().unwrap_or(false) {
                safe_ratio(a, b)
            } else {
                safe_ratio(1.0 - a, 1.0 - b)
            }
        })
        .collect()
}

/// Relevance ratio of `e` for `x` at a single root.
pub fn r_value(g: &DtGraph, x: &Exemplar, root: &str, e: EdgeIx) -> f64 {
    let i = g.roots().iter().position(|r| r == root).expect("known root");
    r_values(g, x, e)[i]
}

/// Indices into the exemplar list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceSets {
    pub needed: Vec<usize>,
    pub destructive: Vec<usize>,
}

pub fn relevance_sets(g: &DtGraph, z: &[Exemplar], e: EdgeIx) -> RelevanceSets {
    let mut sets = RelevanceSets::default();
    for (i, x) in z.iter().enumerate() {
        let r = r_values(g, x, e);
        if r.iter().any(|&v| v > NEEDED) {
            sets.needed.push(i);
        } else if r.iter().any(|&v| v < DESTRUCTIVE) {
            sets.destructive.push(i);
        }
    }
    sets
}

/// Disjunction of conjunctions of observable literals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dnf(pub Vec<Vec<Literal>>);

impl Dnf {
    pub fn eval(&self, ex: &Example) -> bool {
        self.0.iter().any(|c| c.iter().all(|l| l.holds(ex.contains(&l.prop))))
    }
}

impl fmt::Display for Dnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .0
            .iter()
            .map(|c| c.iter().map(Literal::to_string).collect::<Vec<_>>().join(" & "))
            .collect();
        f.write_str(&terms.join(" | "))
    }
}

fn entropy(a: usize, b: usize) -> f64 {
    let n = (a + b) as f64;
    [a, b]
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| {
            let q = k as f64 / n;
            -q * q.log2()
        })
        .sum()
}

/// Decision tree by information gain, read off as the disjunction of its
/// paths to positive leaves. Only attributes that split the current node
/// are considered; ties go to the first attribute in name order.
pub fn dnf_id3(pos: &[&Example], neg: &[&Example], observables: &BTreeSet<String>) -> Result<Dnf, Error> {
    if pos.is_empty() {
        return Err(Error::NoPositives);
    }
    let attrs: Vec<&str> = observables.iter().map(String::as_str).collect();
    if neg.is_empty() {
        return Ok(cover(pos, &attrs));
    }
    let mut out = Vec::new();
    grow(pos.to_vec(), neg.to_vec(), &attrs, &mut Vec::new(), &mut out)?;
    Ok(Dnf(out))
}

fn grow<'a>(
    pos: Vec<&'a Example>,
    neg: Vec<&'a Example>,
    attrs: &[&str],
    path: &mut Vec<Literal>,
    out: &mut Vec<Vec<Literal>>,
) -> Result<(), Error> {
    if neg.is_empty() {
        out.push(path.clone());
        return Ok(());
    }
    if pos.is_empty() {
        return Ok(());
    }
    let base = entropy(pos.len(), neg.len());
    let n = (pos.len() + neg.len()) as f64;
    let mut best: Option<(&str, f64)> = None;
    for &a in attrs {
        let pt = pos.iter().filter(|x| x.contains(a)).count();
        let nt = neg.iter().filter(|x| x.contains(a)).count();
        let (pf, nf) = (pos.len() - pt, neg.len() - nt);
        if pt + nt == 0 || pf + nf == 0 {
            continue;
        }
        let gain = base
            - ((pt + nt) as f64 / n) * entropy(pt, nt)
            - ((pf + nf) as f64 / n) * entropy(pf, nf);
        if best.is_none_or(|(_, g)| gain > g) {
            best = Some((a, gain));
        }
    }
    let (a, _) = best.ok_or(Error::Inseparable)?;
    let (pt, pf): (Vec<_>, Vec<_>) = pos.into_iter().partition(|x| x.contains(a));
    let (nt, nf): (Vec<_>, Vec<_>) = neg.into_iter().partition(|x| x.contains(a));
    path.push(Literal::pos(a));
    grow(pt, nt, attrs, path, out)?;
    path.pop();
    path.push(Literal::neg(a));
    grow(pf, nf, attrs, path, out)?;
    path.pop();
    Ok(())
}

/// With nothing to exclude, greedily picks single literals covering the
/// positives: most covered first, positive before negative, then by name.
fn cover(pos: &[&Example], attrs: &[&str]) -> Dnf {
    let mut left: Vec<&Example> = pos.to_vec();
    let mut terms = Vec::new();
    while !left.is_empty() {
        let mut best: Option<(Literal, usize)> = None;
        for negated in [false, true] {
            for &a in attrs {
                let lit = Literal { prop: a.to_string(), negated };
                let k = left.iter().filter(|x| lit.holds(x.contains(a))).count();
                if k > 0 && best.as_ref().is_none_or(|(_, b)| k > *b) {
                    best = Some((lit, k));
                }
            }
        }
        let Some((lit, _)) = best else {
            // no attributes at all: nothing distinguishes anything
            terms.push(Vec::new());
            break;
        };
        left.retain(|x| !lit.holds(x.contains(&lit.prop)));
        terms.push(vec![lit]);
    }
    Dnf(terms)
}

/// Fresh-name source for generated literals and clauses.
#[derive(Clone, Debug, Default)]
pub struct NameGen {
    literals: usize,
    clauses: usize,
    nodes: usize,
}

impl NameGen {
    fn next(counter: &mut usize, prefix: &str, taken: &mut BTreeSet<String>) -> String {
        *counter += 1;
        let name = fresh(&format!("{prefix}{counter}"), taken);
        taken.insert(name.clone());
        name
    }

    pub fn literal(&mut self, taken: &mut BTreeSet<String>) -> String {
        Self::next(&mut self.literals, "l", taken)
    }

    pub fn clause(&mut self, taken: &mut BTreeSet<String>) -> String {
        Self::next(&mut self.clauses, "CL", taken)
    }

    pub fn node(&mut self, taken: &mut BTreeSet<String>) -> String {
        Self::next(&mut self.nodes, "t", taken)
    }
}

/// How an induced subtree is attached under the host node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Clause host, single conjunct: its literals join the clause body.
    ClauseLiterals,
    /// Clause host: `~l` joins the body; `l` has one clause per conjunct.
    ClauseNegated { l: String, labels: Vec<String> },
    /// Literal host: one new clause per conjunct.
    LiteralClauses { labels: Vec<String> },
    /// Literal host: new clause `t: host <- l`; `l` has one clause per conjunct.
    LiteralDefined { t: String, l: String, labels: Vec<String> },
    /// Leaf or negative host: the edge now leads to `l`, defined by
    /// `keep: l <- old` plus one clause per conjunct.
    Replace { l: String, keep: String, labels: Vec<String> },
}

/// A structural decision, replayable with [`apply_plan`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Plan {
    Delete { edge: String },
    Reset { edge: String, lambda: f64 },
    Suture { edge: String, lambda: f64, dnf: Dnf, shape: Shape },
}

impl Plan {
    pub fn edge(&self) -> &str {
        match self {
            Plan::Delete { edge } | Plan::Reset { edge, .. } | Plan::Suture { edge, .. } => edge,
        }
    }

    pub fn is_structural(&self) -> bool {
        !matches!(self, Plan::Reset { .. })
    }
}

/// Decides how to repair `e` without touching the graph.
pub fn plan_revision(
    g: &DtGraph,
    z: &[Exemplar],
    e: EdgeIx,
    lambda: f64,
    simplify: bool,
    observables: &BTreeSet<String>,
    names: &mut NameGen,
) -> Result<(Plan, RelevanceSets), Error> {
    let edge = g.edge_name(e).to_string();
    let sets = relevance_sets(g, z, e);
    if sets.destructive.is_empty() {
        return Ok((Plan::Reset { edge, lambda }, sets));
    }
    if sets.needed.is_empty() {
        return Ok((Plan::Delete { edge }, sets));
    }
    let d: Vec<&Example> = sets.destructive.iter().map(|&i| &z[i].example).collect();
    let n: Vec<&Example> = sets.needed.iter().map(|&i| &z[i].example).collect();
    let mut taken = g.taken_names();
    taken.extend(observables.iter().cloned());
    let host = g.edge(e).child;
    let labels = |k: usize, names: &mut NameGen, taken: &mut BTreeSet<String>| -> Vec<String> {
        (0..k).map(|_| names.clause(taken)).collect()
    };
    let (dnf, shape) = match g.node(host) {
        NodeKind::Clause { .. } => {
            let direct = if simplify {
                let keep = dnf_id3(&n, &d, observables)?;
                let fresh_literal = |l: &Literal| {
                    g.node_id(&NodeKind::Literal { prop: l.prop.clone(), negated: l.negated }.name())
                        .is_none_or(|c| g.find_edge(g.node_name(host), g.node_name(c)).is_none())
                };
                (keep.0.len() == 1 && keep.0[0].iter().all(fresh_literal)).then_some(keep)
            } else {
                None
            };
            match direct {
                Some(dnf) => (dnf, Shape::ClauseLiterals),
                None => {
                    let dnf = dnf_id3(&d, &n, observables)?;
                    let l = names.literal(&mut taken);
                    let labels = labels(dnf.0.len(), names, &mut taken);
                    (dnf, Shape::ClauseNegated { l, labels })
                }
            }
        }
        NodeKind::Literal { negated: false, .. } if !g.children(host).is_empty() => {
            let dnf = dnf_id3(&d, &n, observables)?;
            if simplify {
                let labels = labels(dnf.0.len(), names, &mut taken);
                (dnf, Shape::LiteralClauses { labels })
            } else {
                let t = names.node(&mut taken);
                let l = names.literal(&mut taken);
                let labels = labels(dnf.0.len(), names, &mut taken);
                (dnf, Shape::LiteralDefined { t, l, labels })
            }
        }
        _ => {
            let dnf = dnf_id3(&d, &n, observables)?;
            let l = names.literal(&mut taken);
            let keep = names.clause(&mut taken);
            let labels = labels(dnf.0.len(), names, &mut taken);
            (dnf, Shape::Replace { l, keep, labels })
        }
    };
    Ok((Plan::Suture { edge, lambda, dnf, shape }, sets))
}

fn add_conjunct(g: &mut DtGraph, parent: usize, label: &str, p: f64, conj: &[Literal]) {
    let c = g.clause_node(label);
    g.push_edge(parent, c, p);
    for lit in conj {
        let n = g.literal_node(&lit.prop, lit.negated);
        g.push_edge(c, n, 1.0);
    }
}

/// Carries out a plan.
pub fn apply_plan(g: &mut DtGraph, plan: &Plan) -> Result<(), Error> {
    let e = g.edge_by_name_or_err(plan.edge())?;
    if !g.is_mutable(e) {
        return Err(Error::FixedEdge(plan.edge().to_string()));
    }
    match plan {
        Plan::Delete { .. } => return g.delete_edge(e),
        Plan::Reset { lambda, .. } => return g.set_weight(e, *lambda),
        Plan::Suture { lambda, dnf, shape, .. } => {
            let lambda = *lambda;
            let host = g.edge(e).child;
            match shape {
                Shape::ClauseLiterals => {
                    g.set_weight(e, lambda)?;
                    for lit in dnf.0.iter().flatten() {
                        let n = g.literal_node(&lit.prop, lit.negated);
                        g.push_edge(host, n, lambda);
                    }
                }
                Shape::ClauseNegated { l, labels } => {
                    g.set_weight(e, lambda)?;
                    let neg = g.literal_node(l, true);
                    g.push_edge(host, neg, lambda);
                    let pos = g.literal_node(l, false);
                    for (label, conj) in labels.iter().zip(&dnf.0) {
                        add_conjunct(g, pos, label, 1.0, conj);
                    }
                }
                Shape::LiteralClauses { labels } => {
                    g.set_weight(e, lambda)?;
                    for (label, conj) in labels.iter().zip(&dnf.0) {
                        add_conjunct(g, host, label, lambda, conj);
                    }
                }
                Shape::LiteralDefined { t, l, labels } => {
                    g.set_weight(e, lambda)?;
                    let tn = g.clause_node(t);
                    g.push_edge(host, tn, lambda);
                    let ln = g.literal_node(l, false);
                    g.push_edge(tn, ln, 1.0);
                    for (label, conj) in labels.iter().zip(&dnf.0) {
                        add_conjunct(g, ln, label, 1.0, conj);
                    }
                }
                Shape::Replace { l, keep, labels } => {
                    let ln = g.literal_node(l, false);
                    g.redirect_edge(e, ln, lambda);
                    let kc = g.clause_node(keep);
                    g.push_edge(ln, kc, 1.0);
                    g.push_edge(kc, host, 1.0);
                    for (label, conj) in labels.iter().zip(&dnf.0) {
                        add_conjunct(g, ln, label, lambda, conj);
                    }
                }
            }
        }
    }
    g.rebuild();
    debug_assert_eq!(g.check(), Ok(()));
    Ok(())
}

/// Plans and applies a repair of `e`.
pub fn revise(
    g: &mut DtGraph,
    z: &[Exemplar],
    e: EdgeIx,
    lambda: f64,
    simplify: bool,
    observables: &BTreeSet<String>,
    names: &mut NameGen,
) -> Result<(Plan, RelevanceSets), Error> {
    let (plan, sets) = plan_revision(g, z, e, lambda, simplify, observables, names)?;
    apply_plan(g, &plan)?;
    Ok((plan, sets))
}
