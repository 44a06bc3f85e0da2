//! Property checks shared by the proptest suites and the acceptance target.
//! Each takes a seed and builds its own random instance.
#![allow(dead_code)]

use std::collections::BTreeSet;

use ptr_core::control::{consistency_check, ptr, replay, PtrConfig};
use ptr_core::dtgraph::{DtGraph, EdgeIx, Parity};
use ptr_core::flow::{bottom_up, bottom_up_with, root_flows, top_down};
use ptr_core::harness::gen;
use ptr_core::theory::{DomainTheory, Example, Exemplar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<(), String>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Unambiguous single-root graph: a tree with negation or a negation-free DAG.
pub fn unambiguous_graph(r: &mut ChaCha8Rng) -> (DomainTheory, DtGraph) {
    let t = if r.random_bool(0.5) { gen::tree_theory(r, 4, true) } else { gen::dag_theory(r, 25, 8) };
    let mut g = DtGraph::build(&t);
    let es: Vec<EdgeIx> = g.mutable_edges().collect();
    for e in es {
        if r.random_bool(0.8) {
            g.set_weight(e, r.random_range(0.01..1.0)).unwrap();
        }
    }
    (t, g)
}

pub fn random_exemplar(r: &mut ChaCha8Rng, t: &DomainTheory) -> Exemplar {
    let ex = gen::example(r, t);
    Exemplar::single(ex, &t.roots()[0], r.random_bool(0.5))
}

/// Edges of weight 1 keep weight 1 through an update.
pub fn immutability(seed: u64) -> Check {
    let mut r = rng(seed);
    let (t, g) = unambiguous_graph(&mut r);
    let x = random_exemplar(&mut r, &t);
    let eps = r.random_range(0.0..0.5);
    let upd = top_down(&g, &bottom_up(&g, &x.example), &x.target, eps);
    for e in 0..g.edge_count() {
        if g.weight(e) == 1.0 {
            ensure(upd.p_new[e] == 1.0, || format!("{} moved to {}", g.edge_name(e), upd.p_new[e]))?;
        }
    }
    Ok(())
}

/// When the root flow is pulled up, even edges gain weight and odd edges
/// lose it; pulling down reverses both. An IN exemplar pulls up unless the
/// root flow already exceeds `1 - eps`, and symmetrically for OUT.
pub fn monotone_direction(seed: u64) -> Check {
    let mut r = rng(seed);
    let t = gen::dag_theory(&mut r, 25, 8);
    let mut g = DtGraph::build(&t);
    let es: Vec<EdgeIx> = g.mutable_edges().collect();
    for e in es {
        g.set_weight(e, r.random_range(0.01..1.0)).unwrap();
    }
    let x = random_exemplar(&mut r, &t);
    let eps = 0.01;
    let u = bottom_up(&g, &x.example);
    let upd = top_down(&g, &u, &x.target, eps);
    let re = g.root_edge(&t.roots()[0]).unwrap();
    let up = upd.v[re] >= u[re];
    let target = x.target[&t.roots()[0]];
    if target && u[re] <= 1.0 - eps {
        ensure(up, || "IN exemplar pulled the root down".into())?;
    }
    if !target && u[re] >= eps {
        ensure(!up, || "OUT exemplar pulled the root up".into())?;
    }
    let parity = g.edge_parity();
    for e in g.mutable_edges() {
        let (p, q) = (g.weight(e), upd.p_new[e]);
        let gains = match parity[e] {
            Parity::Even => up,
            Parity::Odd => !up,
            Parity::Ambiguous => return Err(format!("{} ambiguous in a negation-free graph", g.edge_name(e))),
        };
        let ok = if gains { q >= p - 1e-12 } else { q <= p + 1e-12 };
        ensure(ok, || format!("{} {:?} went {p} -> {q} (root pulled up: {up})", g.edge_name(e), parity[e]))?;
    }
    Ok(())
}

/// Dropping an even edge never raises the root flow; dropping an odd edge
/// never lowers it.
pub fn deletion_monotonicity(seed: u64) -> Check {
    let mut r = rng(seed);
    let (t, g) = unambiguous_graph(&mut r);
    let ex = gen::example(&mut r, &t);
    let truth = |p: &str| if ex.contains(p) { 1.0 } else { 0.0 };
    let re = g.root_edge(&t.roots()[0]).unwrap();
    let before = bottom_up_with(&g, &g.weights(), truth)[re];
    let mutable: Vec<EdgeIx> = g.mutable_edges().collect();
    let e = mutable[r.random_range(0..mutable.len())];
    let mut p = g.weights();
    p[e] = 0.0;
    let after = bottom_up_with(&g, &p, truth)[re];
    let ok = match g.edge_parity()[e] {
        Parity::Even => after <= before + 1e-12,
        Parity::Odd => after >= before - 1e-12,
        Parity::Ambiguous => return Err(format!("{} ambiguous", g.edge_name(e))),
    };
    ensure(ok, || format!("dropping {} moved the root flow {before} -> {after}", g.edge_name(e)))
}

/// A graph consistent with its exemplars stays consistent after one update.
/// Instances that start inconsistent are skipped.
pub fn consistency_preserved(seed: u64) -> Check {
    let mut r = rng(seed);
    let (t, g) = unambiguous_graph(&mut r);
    let z: Vec<Exemplar> = (0..r.random_range(1..=10)).map(|_| random_exemplar(&mut r, &t)).collect();
    if !consistency_check(&g, &z).is_empty() {
        return Ok(());
    }
    let x = &z[r.random_range(0..z.len())];
    let k = ptr_core::flow::process_exemplar(&g, x, r.random_range(0.001..0.5));
    let bad = consistency_check(&k, &z);
    ensure(bad.is_empty(), || format!("update with {x} broke consistency for {bad:?}"))
}

/// Replaying the log of a run reproduces its final graph exactly.
pub fn log_replay(seed: u64) -> Check {
    let mut r = rng(seed);
    let (k0, z) = gen::convergence_instance(&mut r);
    let cfg = PtrConfig { seed, ..Default::default() };
    let out = ptr(&k0, &z, &cfg).map_err(|e| e.to_string())?;
    let again = replay(&k0, &z, &out.log, cfg.eps).map_err(|e| e.to_string())?;
    ensure(again == out.graph, || "replayed graph differs".into())?;
    let rerun = ptr(&k0, &z, &cfg).map_err(|e| e.to_string())?;
    ensure(rerun.log == out.log && rerun.theory == out.theory, || "rerun with the same seed differs".into())
}

/// Crisp flow at the root agrees with the theory's classification.
pub fn crisp_flow_classifies(t: &DomainTheory, ex: &Example) -> Check {
    let g = DtGraph::build(t);
    let u = root_flows(&g, &bottom_up(&g, ex));
    let c = t.classify(ex).map_err(|e| e.to_string())?;
    for (root, flow) in g.roots().iter().zip(u) {
        ensure(flow == if c[root] { 1.0 } else { 0.0 }, || format!("{root}: flow {flow}, class {}", c[root]))?;
    }
    Ok(())
}

pub fn edge_names(g: &DtGraph, s: &BTreeSet<EdgeIx>) -> Vec<String> {
    s.iter().map(|&e| g.edge_name(e).to_string()).collect()
}
