//! Weighted dt-graphs.
//!
//! Every literal of the theory becomes a node (positive and negative forms
//! are distinct), every clause becomes a node hanging under its head, and an
//! artificial anchor points at each root. Evaluated as NAND gates, the graph
//! computes the same classification as the theory.
//!
//! Node and edge indices are dense and are invalidated by any structural
//! mutation (`delete_edge`, the suture helpers followed by `rebuild`). Names
//! (`parent/child`) are stable.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::theory::{Clause, DomainTheory, Literal};
use crate::Error;

pub type NodeId = usize;
pub type EdgeIx = usize;

/// Name under which the anchor is rendered.
pub const ANCHOR: &str = "$root";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    Anchor,
    Literal { prop: String, negated: bool },
    Clause { label: String },
}

impl NodeKind {
    pub fn name(&self) -> String {
        match self {
            NodeKind::Anchor => ANCHOR.to_string(),
            NodeKind::Literal { prop, negated: true } => format!("~{prop}"),
            NodeKind::Literal { prop, negated: false } => prop.clone(),
            NodeKind::Clause { label } => label.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    /// head literal to clause
    Clause,
    /// clause to body literal
    Literal,
    /// `~P` to `P`
    Negation,
    /// anchor to root
    Root,
}

impl EdgeKind {
    /// Root and negation edges always carry weight 1.
    pub fn is_fixed(self) -> bool {
        matches!(self, EdgeKind::Root | EdgeKind::Negation)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
    Ambiguous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub parent: NodeId,
    pub child: NodeId,
    pub kind: EdgeKind,
    pub p: f64,
}

#[derive(Clone, Debug)]
pub struct DtGraph {
    nodes: Vec<NodeKind>,
    names: Vec<String>,
    index: HashMap<String, NodeId>,
    edges: Vec<Edge>,
    edge_names: Vec<String>,
    out: Vec<Vec<EdgeIx>>,
    inc: Vec<Vec<EdgeIx>>,
    node_order: Vec<NodeId>,
    edge_order: Vec<EdgeIx>,
    roots: Vec<String>,
}

impl PartialEq for DtGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges && self.roots == other.roots
    }
}

impl DtGraph {
    /// All weights start at 1.
    pub fn build(t: &DomainTheory) -> Self {
        let mut g = DtGraph {
            nodes: vec![NodeKind::Anchor],
            names: vec![ANCHOR.to_string()],
            index: HashMap::from([(ANCHOR.to_string(), 0)]),
            edges: Vec::new(),
            edge_names: Vec::new(),
            out: Vec::new(),
            inc: Vec::new(),
            node_order: Vec::new(),
            edge_order: Vec::new(),
            roots: t.roots().to_vec(),
        };
        for r in t.roots() {
            let n = g.literal_node(r, false);
            g.push_edge(0, n, 1.0);
        }
        for c in t.clauses() {
            let head = g.literal_node(&c.head, false);
            let cn = g.clause_node(&c.label);
            g.push_edge(head, cn, 1.0);
            for lit in &c.body {
                let ln = g.literal_node(&lit.prop, lit.negated);
                g.push_edge(cn, ln, 1.0);
            }
        }
        g.rebuild();
        g
    }

    pub fn roots(&self) -> &[String] {
        &self.roots
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, n: NodeId) -> &NodeKind {
        &self.nodes[n]
    }

    pub fn node_name(&self, n: NodeId) -> &str {
        &self.names[n]
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn edge(&self, e: EdgeIx) -> &Edge {
        &self.edges[e]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `parent/child`.
    pub fn edge_name(&self, e: EdgeIx) -> &str {
        &self.edge_names[e]
    }

    pub fn find_edge(&self, parent: &str, child: &str) -> Option<EdgeIx> {
        let (p, c) = (self.node_id(parent)?, self.node_id(child)?);
        self.out[p].iter().copied().find(|&e| self.edges[e].child == c)
    }

    /// Resolves `parent/child`, trying every `/` split point.
    pub fn edge_by_name(&self, name: &str) -> Option<EdgeIx> {
        name.match_indices('/').find_map(|(i, _)| self.find_edge(&name[..i], &name[i + 1..]))
    }

    pub fn edge_by_name_or_err(&self, name: &str) -> Result<EdgeIx, Error> {
        self.edge_by_name(name).ok_or_else(|| Error::UnknownEdge(name.to_string()))
    }

    /// Out-edges of `n` in insertion order.
    pub fn children(&self, n: NodeId) -> &[EdgeIx] {
        &self.out[n]
    }

    /// In-edges of `n`, sorted by edge name.
    pub fn parents(&self, n: NodeId) -> &[EdgeIx] {
        &self.inc[n]
    }

    /// Edges such that every edge into a node precedes every edge out of it.
    pub fn topo_edges(&self) -> &[EdgeIx] {
        &self.edge_order
    }

    /// Nodes from the anchor downwards.
    pub fn topo_nodes(&self) -> &[NodeId] {
        &self.node_order
    }

    /// Edge from the anchor to `root`.
    pub fn root_edge(&self, root: &str) -> Option<EdgeIx> {
        self.find_edge(ANCHOR, root)
    }

    pub fn is_mutable(&self, e: EdgeIx) -> bool {
        !self.edges[e].kind.is_fixed()
    }

    pub fn mutable_edges(&self) -> impl Iterator<Item = EdgeIx> + '_ {
        (0..self.edges.len()).filter(|&e| self.is_mutable(e))
    }

    pub fn weight(&self, e: EdgeIx) -> f64 {
        self.edges[e].p
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.p).collect()
    }

    pub fn set_weight(&mut self, e: EdgeIx, p: f64) -> Result<(), Error> {
        if self.edges[e].kind.is_fixed() {
            return Err(Error::FixedEdge(self.edge_names[e].clone()));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::BadWeight(p));
        }
        self.edges[e].p = p;
        Ok(())
    }

    /// Overwrites all mutable weights; fixed edges keep weight 1.
    pub(crate) fn set_mutable_weights(&mut self, p: &[f64]) {
        debug_assert_eq!(p.len(), self.edges.len());
        for (edge, &w) in self.edges.iter_mut().zip(p) {
            if !edge.kind.is_fixed() {
                edge.p = w;
            }
        }
    }

    /// Applies `edge <parent>/<child> p=<decimal>` lines; unlisted edges are
    /// left alone.
    pub fn apply_weight_file(&mut self, text: &str) -> Result<(), Error> {
        for (ln, line) in text.lines().enumerate() {
            let src = line.split('#').next().unwrap_or("").trim();
            if src.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Syntax { line: ln + 1, col: 1, msg: msg.to_string() };
            let mut parts = src.split_whitespace();
            if parts.next() != Some("edge") {
                return Err(bad("expected `edge`"));
            }
            let name = parts.next().ok_or_else(|| bad("missing edge"))?;
            let p: f64 = parts
                .next()
                .and_then(|s| s.strip_prefix("p="))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("expected p=<decimal>"))?;
            if parts.next().is_some() {
                return Err(bad("trailing input"));
            }
            let e = self.edge_by_name_or_err(name)?;
            if self.edges[e].kind.is_fixed() {
                if p != 1.0 {
                    return Err(Error::FixedEdge(name.to_string()));
                }
            } else {
                self.set_weight(e, p)?;
            }
        }
        Ok(())
    }

    /// One line per edge in topological order.
    pub fn weight_file(&self) -> String {
        self.edge_order
            .iter()
            .map(|&e| format!("edge {} p={}\n", self.edge_names[e], self.edges[e].p))
            .collect()
    }

    /// Removes `e` and everything no longer reachable from the anchor.
    pub fn delete_edge(&mut self, e: EdgeIx) -> Result<(), Error> {
        if self.edges[e].kind.is_fixed() {
            return Err(Error::FixedEdge(self.edge_names[e].clone()));
        }
        self.edges.remove(e);
        self.rebuild();
        Ok(())
    }

    /// Parity of the distance from the roots to each edge's source node.
    /// Negation edges count as one step; root edges are even.
    pub fn edge_parity(&self) -> Vec<Parity> {
        // bit 0: reachable at even distance, bit 1: at odd distance
        let mut seen = vec![0u8; self.nodes.len()];
        for &n in &self.node_order {
            if n == 0 {
                continue;
            }
            for &e in &self.inc[n] {
                let parent = self.edges[e].parent;
                seen[n] |= if parent == 0 { 1 } else { ((seen[parent] & 1) << 1) | ((seen[parent] & 2) >> 1) };
            }
        }
        self.edges
            .iter()
            .map(|edge| match (edge.parent, seen[edge.parent]) {
                (0, _) | (_, 1) => Parity::Even,
                (_, 2) => Parity::Odd,
                _ => Parity::Ambiguous,
            })
            .collect()
    }

    /// Reads the graph back as a theory. Clause nodes keep their labels and
    /// body order; a clause node without children yields a `true` body.
    pub fn to_theory(&self) -> Result<DomainTheory, Error> {
        let mut clauses = Vec::new();
        for (n, kind) in self.nodes.iter().enumerate() {
            let NodeKind::Clause { label } = kind else { continue };
            let head = match self.inc[n].first().map(|&e| &self.nodes[self.edges[e].parent]) {
                Some(NodeKind::Literal { prop, negated: false }) => prop.clone(),
                _ => return Err(Error::Log(format!("clause node `{label}` has no head"))),
            };
            let mut body = Vec::new();
            for &e in &self.out[n] {
                match &self.nodes[self.edges[e].child] {
                    NodeKind::Literal { prop, negated } => body.push(Literal { prop: prop.clone(), negated: *negated }),
                    other => return Err(Error::Log(format!("clause `{label}` has non-literal child {}", other.name()))),
                }
            }
            clauses.push(Clause { label: label.clone(), head, body });
        }
        for r in &self.roots {
            if !clauses.iter().any(|c| &c.head == r) {
                return Err(Error::RootWithoutClauses(r.clone()));
            }
        }
        DomainTheory::new(clauses)
    }

    /// Every node name plus every proposition name.
    pub fn taken_names(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.names.iter().cloned().collect();
        for n in &self.nodes {
            if let NodeKind::Literal { prop, .. } = n {
                out.insert(prop.clone());
            }
        }
        out
    }

    /// All `2^|mutable|` deletion patterns over the given edges with their
    /// probabilities. `kept[i]` refers to `mutable[i]`.
    pub fn enumerate_subgraphs(&self, mutable: &[EdgeIx]) -> Result<impl Iterator<Item = (Vec<bool>, f64)> + '_, Error> {
        const LIMIT: usize = 20;
        if mutable.len() > LIMIT {
            return Err(Error::TooManyEdges(mutable.len(), LIMIT));
        }
        let ps: Vec<f64> = mutable.iter().map(|&e| self.edges[e].p).collect();
        Ok((0u32..1 << ps.len()).map(move |mask| {
            let kept: Vec<bool> = (0..ps.len()).map(|i| mask & (1 << i) != 0).collect();
            let prob = kept.iter().zip(&ps).map(|(&k, &p)| if k { p } else { 1.0 - p }).product();
            (kept, prob)
        }))
    }

    // -- construction primitives; call `rebuild` after a batch of edits --

    /// Gets or creates the node for a literal; negative literals get their
    /// negation edge on creation.
    pub fn literal_node(&mut self, prop: &str, negated: bool) -> NodeId {
        let kind = NodeKind::Literal { prop: prop.to_string(), negated };
        if let Some(n) = self.node_id(&kind.name()) {
            return n;
        }
        let n = self.push_node(kind);
        if negated {
            let pos = self.literal_node(prop, false);
            self.push_edge(n, pos, 1.0);
        }
        n
    }

    /// Gets or creates a clause node.
    pub fn clause_node(&mut self, label: &str) -> NodeId {
        match self.node_id(label) {
            Some(n) => n,
            None => self.push_node(NodeKind::Clause { label: label.to_string() }),
        }
    }

    fn push_node(&mut self, kind: NodeKind) -> NodeId {
        let n = self.nodes.len();
        let name = kind.name();
        self.index.insert(name.clone(), n);
        self.names.push(name);
        self.nodes.push(kind);
        n
    }

    /// Adds an edge whose kind follows from the node kinds.
    pub fn push_edge(&mut self, parent: NodeId, child: NodeId, p: f64) -> EdgeIx {
        let kind = match (&self.nodes[parent], &self.nodes[child]) {
            (NodeKind::Anchor, _) => EdgeKind::Root,
            (NodeKind::Literal { negated: true, .. }, _) => EdgeKind::Negation,
            (NodeKind::Literal { .. }, _) => EdgeKind::Clause,
            (NodeKind::Clause { .. }, _) => EdgeKind::Literal,
        };
        let p = if kind.is_fixed() { 1.0 } else { p };
        self.edges.push(Edge { parent, child, kind, p });
        self.edges.len() - 1
    }

    /// Points `e` at a different child, keeping its position among siblings.
    pub fn redirect_edge(&mut self, e: EdgeIx, child: NodeId, p: f64) {
        self.edges[e].child = child;
        self.edges[e].p = p;
    }

    /// Drops unreachable nodes and recomputes every derived index.
    pub fn rebuild(&mut self) {
        let n = self.nodes.len();
        let mut out = vec![Vec::new(); n];
        for (i, e) in self.edges.iter().enumerate() {
            out[e.parent].push(i);
        }
        let mut reach = vec![false; n];
        let mut stack = vec![0];
        reach[0] = true;
        while let Some(x) = stack.pop() {
            for &e in &out[x] {
                let c = self.edges[e].child;
                if !reach[c] {
                    reach[c] = true;
                    stack.push(c);
                }
            }
        }
        if reach.iter().any(|r| !r) {
            let mut remap = vec![usize::MAX; n];
            let mut nodes = Vec::new();
            for (i, kind) in self.nodes.drain(..).enumerate() {
                if reach[i] {
                    remap[i] = nodes.len();
                    nodes.push(kind);
                }
            }
            self.nodes = nodes;
            self.edges.retain(|e| reach[e.parent]);
            for e in &mut self.edges {
                e.parent = remap[e.parent];
                e.child = remap[e.child];
            }
        }
        let n = self.nodes.len();
        self.names = self.nodes.iter().map(NodeKind::name).collect();
        self.index = self.names.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        self.edge_names =
            self.edges.iter().map(|e| format!("{}/{}", self.names[e.parent], self.names[e.child])).collect();
        self.out = vec![Vec::new(); n];
        self.inc = vec![Vec::new(); n];
        for (i, e) in self.edges.iter().enumerate() {
            self.out[e.parent].push(i);
            self.inc[e.child].push(i);
        }
        for list in &mut self.inc {
            list.sort_by(|&a, &b| self.edge_names[a].cmp(&self.edge_names[b]));
        }
        // Kahn's algorithm, ready nodes taken in name order
        let mut indeg: Vec<usize> = self.inc.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<(&str, NodeId)> = BTreeSet::new();
        ready.insert((ANCHOR, 0));
        let mut order = Vec::with_capacity(n);
        while let Some(first) = ready.pop_first() {
            let x = first.1;
            order.push(x);
            for &e in &self.out[x] {
                let c = self.edges[e].child;
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert((&self.names[c], c));
                }
            }
        }
        debug_assert_eq!(order.len(), n, "dt-graph must be acyclic");
        self.edge_order = order.iter().flat_map(|&x| self.out[x].iter().copied()).collect();
        self.node_order = order;
    }

    /// Structural invariants; used by tests and debug assertions.
    pub fn check(&self) -> Result<(), String> {
        if self.node_order.len() != self.nodes.len() {
            return Err("graph is cyclic or has unreachable nodes".into());
        }
        let mut pairs = BTreeSet::new();
        for (i, e) in self.edges.iter().enumerate() {
            if !pairs.insert((e.parent, e.child)) {
                return Err(format!("duplicate edge {}", self.edge_names[i]));
            }
            if e.kind.is_fixed() && e.p != 1.0 {
                return Err(format!("fixed edge {} has weight {}", self.edge_names[i], e.p));
            }
            if !(e.p > 0.0 && e.p <= 1.0) {
                return Err(format!("edge {} has weight {}", self.edge_names[i], e.p));
            }
        }
        for (n, kind) in self.nodes.iter().enumerate() {
            if matches!(kind, NodeKind::Clause { .. }) && self.inc[n].len() != 1 {
                return Err(format!("clause node {} has {} parents", self.names[n], self.inc[n].len()));
            }
        }
        Ok(())
    }
}
