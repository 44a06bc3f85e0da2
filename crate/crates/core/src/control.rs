//! The revision loop, consistency checking, and ranking-only classification.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dtgraph::{DtGraph, EdgeIx, NodeKind};
use crate::flow::{bottom_up, graph_agrees, process_exemplar_mut, root_flows, DEFAULT_EPS};
use crate::revision::{apply_plan, revise, NameGen, Plan};
use crate::theory::{DomainTheory, Example, Exemplar};
use crate::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Order {
    /// A fresh seeded permutation every cycle.
    #[default]
    Shuffled,
    /// The exemplars as given, every cycle.
    AsGiven,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtrConfig {
    /// Initial revision threshold.
    pub sigma: f64,
    /// Initial reset weight for revised and added edges.
    pub lambda: f64,
    pub dsigma: f64,
    pub dlambda: f64,
    pub eps: f64,
    pub seed: u64,
    pub simplify: bool,
    /// Defaults to `ceil(max(1/dsigma, 1/dlambda)) + 2`.
    pub max_cycles: Option<usize>,
    pub order: Order,
}

impl Default for PtrConfig {
    fn default() -> Self {
        PtrConfig {
            sigma: 0.1,
            lambda: 0.7,
            dsigma: 0.03,
            dlambda: 0.03,
            eps: DEFAULT_EPS,
            seed: 1,
            simplify: true,
            max_cycles: None,
            order: Order::Shuffled,
        }
    }
}

impl PtrConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.sigma > 0.0 && self.sigma <= 1.0) {
            return bad("sigma must lie in (0, 1]");
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return bad("lambda must lie in (0, 1]");
        }
        if !(self.dsigma >= 0.0 && self.dlambda >= 0.0) {
            return bad("increments must be nonnegative");
        }
        if !(self.eps > 0.0 && self.eps < 0.5) {
            return bad("eps must lie in (0, 1/2)");
        }
        Ok(())
    }

    /// Cycles after which both the threshold and the reset weight are 1.
    pub fn cycle_bound(&self) -> usize {
        let b = (1.0 / self.dsigma).max(1.0 / self.dlambda).ceil();
        if b.is_finite() {
            b as usize
        } else {
            10_000
        }
    }

    pub fn cycle_guard(&self) -> usize {
        self.max_cycles.unwrap_or(self.cycle_bound() + 2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    AllCorrect,
    AllWeightsOne,
    CycleGuard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "entry", rename_all = "snake_case")]
pub enum LogEntry {
    /// Weights updated from exemplar `exemplar` (index into the input).
    Update { exemplar: usize },
    Revision {
        #[serde(flatten)]
        plan: Plan,
        /// Weight that triggered the revision.
        p: f64,
        needed: Vec<usize>,
        destructive: Vec<usize>,
        /// Edges that did not exist before.
        created: Vec<String>,
    },
    CycleBoundary { sigma: f64, lambda: f64 },
}

#[derive(Clone, Debug)]
pub struct PtrOutcome {
    pub graph: DtGraph,
    pub theory: DomainTheory,
    pub log: Vec<LogEntry>,
    pub exemplars_processed: usize,
    /// Deletions and sutures.
    pub revisions: usize,
    /// Sub-threshold edges reset without structural change.
    pub resets: usize,
    pub cycles: usize,
    pub terminated_by: Termination,
}

/// Observables for induction: leaf propositions of the graph plus every
/// proposition mentioned by an exemplar.
pub fn vocabulary(g: &DtGraph, z: &[Exemplar]) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = z.iter().flat_map(|x| x.example.true_observables.iter().cloned()).collect();
    for n in 0..g.node_count() {
        if let NodeKind::Literal { prop, negated: false } = g.node(n) {
            if g.children(n).is_empty() {
                out.insert(prop.clone());
            }
        }
    }
    out
}

fn all_correct(g: &DtGraph, z: &[Exemplar]) -> bool {
    z.iter().all(|x| graph_agrees(g, x))
}

fn weakest(g: &DtGraph) -> Option<EdgeIx> {
    let mut best: Option<EdgeIx> = None;
    for e in g.mutable_edges() {
        best = match best {
            Some(b) if (g.weight(b), g.edge_name(b)) <= (g.weight(e), g.edge_name(e)) => Some(b),
            _ => Some(e),
        };
    }
    best
}

/// Revises `k0` until its structure classifies every exemplar in `z`.
pub fn ptr(k0: &DtGraph, z: &[Exemplar], cfg: &PtrConfig) -> Result<PtrOutcome, Error> {
    cfg.validate()?;
    if z.is_empty() {
        return Err(Error::Config("no exemplars".into()));
    }
    let vocab = vocabulary(k0, z);
    let mut g = k0.clone();
    let mut names = NameGen::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut sigma, mut lambda) = (cfg.sigma, cfg.lambda);
    let mut log = Vec::new();
    let (mut processed, mut revisions, mut resets, mut cycles) = (0, 0, 0, 0);
    let guard = cfg.cycle_guard();
    let mut order: Vec<usize> = (0..z.len()).collect();

    let terminated_by = 'outer: {
        if all_correct(&g, z) {
            break 'outer Termination::AllCorrect;
        }
        loop {
            if cycles >= guard {
                log::warn!("cycle guard {guard} reached");
                break 'outer Termination::CycleGuard;
            }
            if cfg.order == Order::Shuffled {
                order.shuffle(&mut rng);
            }
            for &i in &order {
                process_exemplar_mut(&mut g, &z[i], cfg.eps);
                processed += 1;
                log.push(LogEntry::Update { exemplar: i });
                if let Some(e) = weakest(&g).filter(|&e| g.weight(e) <= sigma) {
                    let p = g.weight(e);
                    let before: BTreeSet<String> = (0..g.edge_count()).map(|x| g.edge_name(x).to_string()).collect();
                    let (plan, sets) = revise(&mut g, z, e, lambda, cfg.simplify, &vocab, &mut names)?;
                    log::info!("revised {} (p={p:.4}): {plan:?}", plan.edge());
                    if plan.is_structural() {
                        revisions += 1;
                    } else {
                        resets += 1;
                    }
                    let created = (0..g.edge_count())
                        .map(|x| g.edge_name(x).to_string())
                        .filter(|n| !before.contains(n))
                        .collect();
                    log.push(LogEntry::Revision {
                        plan,
                        p,
                        needed: sets.needed,
                        destructive: sets.destructive,
                        created,
                    });
                    if all_correct(&g, z) {
                        break 'outer Termination::AllCorrect;
                    }
                }
                if g.mutable_edges().all(|e| g.weight(e) == 1.0) {
                    break 'outer Termination::AllWeightsOne;
                }
            }
            cycles += 1;
            sigma = (sigma + cfg.dsigma).min(1.0);
            lambda = (lambda + cfg.dlambda).min(1.0);
            log.push(LogEntry::CycleBoundary { sigma, lambda });
        }
    };
    let theory = g.to_theory()?;
    Ok(PtrOutcome {
        graph: g,
        theory,
        log,
        exemplars_processed: processed,
        revisions,
        resets,
        cycles,
        terminated_by,
    })
}

/// Re-applies a log to the starting graph.
pub fn replay(k0: &DtGraph, z: &[Exemplar], log: &[LogEntry], eps: f64) -> Result<DtGraph, Error> {
    let mut g = k0.clone();
    for entry in log {
        match entry {
            LogEntry::Update { exemplar } => {
                let x = z.get(*exemplar).ok_or_else(|| Error::Log(format!("no exemplar {exemplar}")))?;
                process_exemplar_mut(&mut g, x, eps);
            }
            LogEntry::Revision { plan, .. } => apply_plan(&mut g, plan)?,
            LogEntry::CycleBoundary { .. } => {}
        }
    }
    Ok(g)
}

/// Edges of `k0` that the log deletes or grafts onto.
pub fn revised_edges(k0: &DtGraph, log: &[LogEntry]) -> Result<BTreeSet<EdgeIx>, Error> {
    let mut created = BTreeSet::new();
    let mut s = BTreeSet::new();
    for entry in log {
        if let LogEntry::Revision { plan, created: new, .. } = entry {
            if plan.is_structural() {
                match k0.edge_by_name(plan.edge()) {
                    Some(e) => {
                        s.insert(e);
                    }
                    None if created.contains(plan.edge()) => {}
                    None => return Err(Error::UnknownEdge(plan.edge().to_string())),
                }
            }
            created.extend(new.iter().cloned());
        }
    }
    Ok(s)
}

/// `(exemplar index, root)` pairs whose target has zero probability under
/// the current weights.
pub fn consistency_check(g: &DtGraph, z: &[Exemplar]) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for (i, x) in z.iter().enumerate() {
        let flows = root_flows(g, &bottom_up(g, &x.example));
        for (r, u) in g.roots().iter().zip(flows) {
            let ok = if x.target.get(r).copied().unwrap_or(false) { u > 0.0 } else { u < 1.0 };
            if !ok {
                out.push((i, r.clone()));
            }
        }
    }
    out
}

/// Labels the top `percent`% of `test` by root flow as positive.
pub fn ptrstar(k: &DtGraph, test: &[Example], percent: f64) -> Result<Vec<bool>, Error> {
    if k.roots().len() != 1 {
        return Err(Error::MultiRoot(k.roots().len()));
    }
    if !(0.0..=100.0).contains(&percent) {
        return Err(Error::Config(format!("cutoff {percent} outside [0, 100]")));
    }
    let flows: Vec<f64> = test.iter().map(|x| root_flows(k, &bottom_up(k, x))[0]).collect();
    let mut idx: Vec<usize> = (0..test.len()).collect();
    idx.sort_by(|&a, &b| flows[b].total_cmp(&flows[a]));
    let take = ((percent * test.len() as f64 / 100.0) - 1e-9).ceil().max(0.0) as usize;
    let mut out = vec![false; test.len()];
    for &i in idx.iter().take(take) {
        out[i] = true;
    }
    Ok(out)
}
