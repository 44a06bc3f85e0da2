//! Experiment tooling: error injection into the synthetic theory, exemplar
//! sampling, brute-force oracles, experiment runs and random instances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{ptr, revised_edges, PtrConfig, Termination};
use crate::dtgraph::{DtGraph, EdgeIx};
use crate::flow::node_truth;
use crate::theory::{fresh, parse_theory, Clause, DomainTheory, Example, Exemplar, Literal};
use crate::weights::{apply_bias, default_weights, radicality, Prior, Scheme, DEFAULT_C};
use crate::{fixtures, Error};

/// Radicality scheme used for experiment ratios: base-2 costs over revised
/// edges only. Of the four candidates it lands closest to the reference
/// restoration costs for the synthetic theory.
pub const CALIBRATED: Scheme = Scheme { base: crate::weights::LogBase::Two, formula: crate::weights::RadFormula::RevisedOnly };

/// Reference restoration costs for 3, 6, 9, 12 and 15 injected errors.
pub const REFERENCE_RESTORE: [(usize, f64); 5] = [(3, 7.32), (6, 17.53), (9, 22.66), (12, 27.15), (15, 33.60)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Edit {
    AddClause(Clause),
    DeleteClause(String),
    AddLiteral(String, Literal),
    DeleteLiteral(String, Literal),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorScript(pub Vec<Edit>);

fn parse_literal(s: &str) -> Literal {
    match s.strip_prefix('~') {
        Some(p) => Literal::neg(p),
        None => Literal::pos(s),
    }
}

/// One edit per line:
/// `add-clause <clause>`, `delete-clause <label>`,
/// `add-literal <label> <lit>`, `delete-literal <label> <lit>`.
pub fn parse_error_script(text: &str) -> Result<ErrorScript, Error> {
    let mut edits = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let src = line.split('#').next().unwrap_or("").trim();
        if src.is_empty() {
            continue;
        }
        let bad = |m: &str| Error::Script(format!("line {}: {m}", ln + 1));
        let (op, rest) = src.split_once(char::is_whitespace).ok_or_else(|| bad("missing operand"))?;
        let args: Vec<&str> = rest.split_whitespace().collect();
        edits.push(match op {
            "add-clause" => {
                let t = parse_theory(rest).map_err(|e| bad(&e.to_string()))?;
                match t.clauses() {
                    [c] => Edit::AddClause(c.clone()),
                    _ => return Err(bad("expected one clause")),
                }
            }
            "delete-clause" if args.len() == 1 => Edit::DeleteClause(args[0].to_string()),
            "add-literal" if args.len() == 2 => Edit::AddLiteral(args[0].to_string(), parse_literal(args[1])),
            "delete-literal" if args.len() == 2 => Edit::DeleteLiteral(args[0].to_string(), parse_literal(args[1])),
            _ => return Err(bad("unrecognized edit")),
        });
    }
    Ok(ErrorScript(edits))
}

/// The base theory after the first `prefix` edits.
pub fn inject_errors(base: &DomainTheory, script: &ErrorScript, prefix: usize) -> Result<DomainTheory, Error> {
    if prefix > script.0.len() {
        return Err(Error::Script(format!("prefix {prefix} exceeds {} edits", script.0.len())));
    }
    let mut clauses = base.clauses().to_vec();
    for edit in &script.0[..prefix] {
        let find = |clauses: &[Clause], label: &str| {
            clauses.iter().position(|c| c.label == label).ok_or_else(|| Error::Script(format!("no clause `{label}`")))
        };
        match edit {
            Edit::AddClause(c) => clauses.push(c.clone()),
            Edit::DeleteClause(l) => {
                let i = find(&clauses, l)?;
                clauses.remove(i);
            }
            Edit::AddLiteral(l, lit) => {
                let i = find(&clauses, l)?;
                clauses[i].body.push(lit.clone());
            }
            Edit::DeleteLiteral(l, lit) => {
                let i = find(&clauses, l)?;
                let j = clauses[i]
                    .body
                    .iter()
                    .position(|x| x == lit)
                    .ok_or_else(|| Error::Script(format!("`{l}` has no literal `{lit}`")))?;
                clauses[i].body.remove(j);
            }
        }
    }
    DomainTheory::new(clauses)
}

/// Cheapest mutable edge whose revision lets a new clause for `prop` take
/// effect: an edge into the proposition, looking through fixed edges.
fn dilution_edge(g: &DtGraph, prop: &str, scheme: Scheme) -> Option<EdgeIx> {
    let mut frontier = vec![g.node_id(prop)?];
    let mut seen = BTreeSet::new();
    let mut found = Vec::new();
    while let Some(n) = frontier.pop() {
        if !seen.insert(n) {
            continue;
        }
        for &e in g.parents(n) {
            if g.is_mutable(e) {
                found.push(e);
            } else if g.edge(e).parent != 0 {
                frontier.push(g.edge(e).parent);
            }
        }
    }
    let cost = |e: EdgeIx| radicality(g, &BTreeSet::from([e]), scheme);
    found.into_iter().min_by(|&a, &b| cost(a).total_cmp(&cost(b)).then_with(|| g.edge_name(a).cmp(g.edge_name(b))))
}

/// Edges of the flawed graph `g` (built from `flawed`) that must be revised
/// to recover `base`: added clauses and literals are deleted, a clause
/// missing a literal is diluted through its clause edge, and a missing
/// clause dilutes an edge into its head.
pub fn restore_set(g: &DtGraph, base: &DomainTheory, flawed: &DomainTheory, scheme: Scheme) -> Result<BTreeSet<EdgeIx>, Error> {
    let mut s = BTreeSet::new();
    let lookup = |parent: &str, child: &str| {
        g.find_edge(parent, child).ok_or_else(|| Error::UnknownEdge(format!("{parent}/{child}")))
    };
    for c in flawed.clauses() {
        match base.clause(&c.label) {
            None => {
                s.insert(lookup(&c.head, &c.label)?);
            }
            Some(orig) => {
                for lit in c.body.iter().filter(|l| !orig.body.contains(l)) {
                    s.insert(lookup(&c.label, &lit.to_string())?);
                }
                if orig.body.iter().any(|l| !c.body.contains(l)) {
                    s.insert(lookup(&c.head, &c.label)?);
                }
            }
        }
    }
    for c in base.clauses().iter().filter(|c| flawed.clause(&c.label).is_none()) {
        let e = dilution_edge(g, &c.head, scheme).ok_or_else(|| Error::UnknownEdge(format!("*/{}", c.head)))?;
        s.insert(e);
    }
    Ok(s)
}

/// Synthetic theory, its error script and the flawed theory after `i` edits.
pub struct Synthetic {
    pub base: DomainTheory,
    pub script: ErrorScript,
}

impl Synthetic {
    pub fn load() -> Self {
        Synthetic {
            base: parse_theory(fixtures::SYNTHETIC_THEORY).expect("bundled theory parses"),
            script: parse_error_script(fixtures::SYNTHETIC_ERRORS).expect("bundled script parses"),
        }
    }

    pub fn flawed(&self, i: usize) -> Result<DomainTheory, Error> {
        inject_errors(&self.base, &self.script, i)
    }

    /// Default-weighted graph of the flawed theory.
    pub fn weighted(&self, i: usize) -> Result<DtGraph, Error> {
        Ok(default_weights(&DtGraph::build(&self.flawed(i)?), DEFAULT_C, &Prior::default()))
    }

    /// Cost of restoring the original theory from the `i`-th flawed one.
    pub fn restore_radicality(&self, i: usize, scheme: Scheme) -> Result<f64, Error> {
        let g = self.weighted(i)?;
        let s = restore_set(&g, &self.base, &self.flawed(i)?, scheme)?;
        Ok(radicality(&g, &s, scheme))
    }
}

/// `n` distinct uniformly random examples labeled by `oracle`.
pub fn sample_exemplars(oracle: &DomainTheory, n: usize, rng: &mut impl Rng) -> Result<Vec<Exemplar>, Error> {
    let obs: Vec<&String> = oracle.observables().iter().collect();
    if obs.len() < 63 && n > 1usize << obs.len() {
        return Err(Error::SampleTooLarge(n, obs.len()));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let bits: Vec<bool> = obs.iter().map(|_| rng.random_bool(0.5)).collect();
        if !seen.insert(bits.clone()) {
            continue;
        }
        let example = Example::new(obs.iter().zip(&bits).filter(|(_, &b)| b).map(|(p, _)| p.as_str()));
        let target = oracle.classify(&example)?;
        out.push(Exemplar { example, target });
    }
    Ok(out)
}

/// Mutable edges with weight below 1: the only ones that can be absent.
fn uncertain_edges(g: &DtGraph) -> Vec<EdgeIx> {
    g.mutable_edges().filter(|&e| g.weight(e) < 1.0).collect()
}

fn presence(g: &DtGraph, uncertain: &[EdgeIx], kept: &[bool]) -> Vec<bool> {
    let mut present = vec![true; g.edge_count()];
    for (&e, &k) in uncertain.iter().zip(kept) {
        present[e] = k;
    }
    present
}

/// Probability over subgraphs that `e` is absent or its lower node is true.
pub fn oracle_unused_probability(g: &DtGraph, ex: &Example, e: EdgeIx) -> Result<f64, Error> {
    let unc = uncertain_edges(g);
    let child = g.edge(e).child;
    let mut total = 0.0;
    for (kept, prob) in g.enumerate_subgraphs(&unc)? {
        let present = presence(g, &unc, &kept);
        if !present[e] || node_truth(g, ex, Some(&present))[child] {
            total += prob;
        }
    }
    Ok(total)
}

/// Probability that `e` is present given that the subgraph classifies `x`
/// correctly. Single-root graphs only.
pub fn oracle_conditional_weight(g: &DtGraph, x: &Exemplar, e: EdgeIx) -> Result<f64, Error> {
    if g.roots().len() != 1 {
        return Err(Error::MultiRoot(g.roots().len()));
    }
    let root = &g.roots()[0];
    let r = g.node_id(root).expect("root node");
    let want = x.target.get(root).copied().unwrap_or(false);
    let unc = uncertain_edges(g);
    let (mut num, mut den) = (0.0, 0.0);
    for (kept, prob) in g.enumerate_subgraphs(&unc)? {
        let present = presence(g, &unc, &kept);
        if node_truth(g, &x.example, Some(&present))[r] == want {
            den += prob;
            if present[e] {
                num += prob;
            }
        }
    }
    if den == 0.0 {
        return Err(Error::ImpossibleExemplar);
    }
    Ok(num / den)
}

/// SplitMix64 mix of a base seed with a cell key.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut x = base;
    for &p in parts {
        x = x.wrapping_add(p.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^= x >> 31;
    }
    x
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Number of edits from the error script.
    pub errors: usize,
    /// Nested training sizes, drawn from the front of each partition.
    pub train: Vec<usize>,
    pub test: usize,
    pub partitions: usize,
    pub trials: usize,
    pub seed: u64,
    /// Weight bias toward the known fault edges.
    pub bias: Option<f64>,
    pub cfg: PtrConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            errors: 3,
            train: vec![20, 40, 60, 80, 100],
            test: 100,
            partitions: 10,
            trials: 10,
            seed: 1,
            bias: None,
            cfg: PtrConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub theory: String,
    pub train: usize,
    pub trial: usize,
    pub test_error: f64,
    pub radicality_ratio: f64,
    pub exemplars: usize,
    pub revisions: usize,
    pub clauses: usize,
    pub literals: usize,
    #[serde(skip)]
    pub terminated_by: Option<Termination>,
    /// Deleted edges with the number of exemplars processed at the time.
    #[serde(skip)]
    pub deletions: Vec<(String, usize)>,
}

pub const CSV_HEADER: &str = "theory,train,trial,test_error,radicality_ratio,exemplars,revisions,clauses,literals";

/// Six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = 5 - x.abs().log10().floor() as i32;
    if (0..=17).contains(&digits) {
        let s = format!("{:.*}", digits as usize, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.theory,
            r.train,
            r.trial,
            sig6(r.test_error),
            sig6(r.radicality_ratio),
            r.exemplars,
            r.revisions,
            r.clauses,
            r.literals
        );
    }
    out
}

/// Runs PTR on the flawed synthetic theory over every (partition, train
/// size, trial) cell. Rows are ordered by that key.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<MetricsRow>, Error> {
    let syn = Synthetic::load();
    run_experiment_on(&syn, spec)
}

pub fn run_experiment_on(syn: &Synthetic, spec: &ExperimentSpec) -> Result<Vec<MetricsRow>, Error> {
    let flawed = syn.flawed(spec.errors)?;
    let k_plain = syn.weighted(spec.errors)?;
    let fault = restore_set(&k_plain, &syn.base, &flawed, CALIBRATED)?;
    let k0 = match spec.bias {
        Some(beta) => apply_bias(&k_plain, &fault, beta)?,
        None => k_plain.clone(),
    };
    let denom = radicality(&k_plain, &fault, CALIBRATED);
    let max_train = spec.train.iter().copied().max().unwrap_or(0);
    let id = format!("G{}", spec.errors);
    let mut rows = Vec::new();
    for part in 0..spec.partitions {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &[0, part as u64]));
        let pool = sample_exemplars(&syn.base, max_train + spec.test, &mut rng)?;
        let (train_pool, test) = pool.split_at(max_train);
        for &n in &spec.train {
            for trial in 0..spec.trials {
                let cfg = PtrConfig {
                    seed: derive_seed(spec.seed, &[1, part as u64, n as u64, trial as u64]),
                    ..spec.cfg.clone()
                };
                let z = &train_pool[..n];
                let row = if z.is_empty() {
                    let wrong = test.iter().filter(|x| !flawed.agrees(x).unwrap_or(false)).count();
                    MetricsRow {
                        theory: id.clone(),
                        train: n,
                        trial,
                        test_error: percent(wrong, test.len()),
                        radicality_ratio: 0.0,
                        exemplars: 0,
                        revisions: 0,
                        clauses: flawed.clauses().len(),
                        literals: flawed.clauses().iter().map(|c| c.body.len()).sum(),
                        terminated_by: Some(Termination::AllCorrect),
                        deletions: Vec::new(),
                    }
                } else {
                    let out = ptr(&k0, z, &cfg)?;
                    let wrong = test.iter().filter(|x| !out.theory.agrees(x).unwrap_or(false)).count();
                    let s = revised_edges(&k_plain, &out.log)?;
                    let rad = radicality(&k_plain, &s, CALIBRATED);
                    let ratio = if fault.is_empty() { 0.0 } else { rad / denom };
                    MetricsRow {
                        theory: id.clone(),
                        train: n,
                        trial,
                        test_error: percent(wrong, test.len()),
                        radicality_ratio: ratio,
                        exemplars: out.exemplars_processed,
                        revisions: out.revisions,
                        clauses: out.theory.clauses().len(),
                        literals: out.theory.clauses().iter().map(|c| c.body.len()).sum(),
                        terminated_by: Some(out.terminated_by),
                        deletions: deletions(&out.log),
                    }
                };
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

fn percent(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * k as f64 / n as f64
    }
}

fn deletions(log: &[crate::control::LogEntry]) -> Vec<(String, usize)> {
    use crate::control::LogEntry;
    use crate::revision::Plan;
    let mut processed = 0;
    let mut out = Vec::new();
    for entry in log {
        match entry {
            LogEntry::Update { .. } => processed += 1,
            LogEntry::Revision { plan: Plan::Delete { edge }, .. } => out.push((edge.clone(), processed)),
            _ => {}
        }
    }
    out
}

/// Mean of a column over rows matching `keep`.
pub fn mean(rows: &[MetricsRow], keep: impl Fn(&MetricsRow) -> bool, col: impl Fn(&MetricsRow) -> f64) -> f64 {
    let xs: Vec<f64> = rows.iter().filter(|r| keep(r)).map(col).collect();
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Random instances for oracle and convergence checks.
pub mod gen {
    use super::*;

    struct Names {
        props: usize,
        obs: usize,
    }

    /// A tree-shaped theory with root `r`: every proposition occurs once.
    pub fn tree_theory(rng: &mut impl Rng, max_depth: usize, negation: bool) -> DomainTheory {
        let mut clauses = Vec::new();
        let mut names = Names { props: 0, obs: 0 };
        define(rng, "r", 0, max_depth, negation, &mut names, &mut clauses);
        DomainTheory::new(clauses).expect("generated tree theory is valid")
    }

    fn define(
        rng: &mut impl Rng,
        head: &str,
        depth: usize,
        max_depth: usize,
        negation: bool,
        names: &mut Names,
        clauses: &mut Vec<Clause>,
    ) {
        for _ in 0..rng.random_range(1..=2) {
            let label = format!("C{}", clauses.len() + 1);
            let idx = clauses.len();
            clauses.push(Clause { label, head: head.to_string(), body: Vec::new() });
            let mut body = Vec::new();
            for _ in 0..rng.random_range(1..=3) {
                let negated = negation && rng.random_bool(0.3);
                let prop = if depth + 1 < max_depth && rng.random_bool(0.35) {
                    names.props += 1;
                    let p = format!("q{}", names.props);
                    define(rng, &p, depth + 1, max_depth, negation, names, clauses);
                    p
                } else {
                    names.obs += 1;
                    format!("o{}", names.obs)
                };
                body.push(Literal { prop, negated });
            }
            clauses[idx].body = body;
        }
    }

    /// Graph of `t` with up to `max_uncertain` mutable edges given weights in
    /// `[0.05, 0.95]`; the rest keep weight 1.
    pub fn weighted(rng: &mut impl Rng, t: &DomainTheory, max_uncertain: usize) -> DtGraph {
        let mut g = DtGraph::build(t);
        let mut mutable: Vec<EdgeIx> = g.mutable_edges().collect();
        for i in (1..mutable.len()).rev() {
            mutable.swap(i, rng.random_range(0..=i));
        }
        for &e in mutable.iter().take(max_uncertain) {
            g.set_weight(e, rng.random_range(0.05..0.95)).expect("mutable edge");
        }
        g
    }

    /// Uniform example over the theory's observables.
    pub fn example(rng: &mut impl Rng, t: &DomainTheory) -> Example {
        Example::new(t.observables().iter().filter(|_| rng.random_bool(0.5)).cloned())
    }

    /// Negation-free, single-root DAG theory; internal propositions may be
    /// shared between bodies.
    pub fn dag_theory(rng: &mut impl Rng, max_clauses: usize, observables: usize) -> DomainTheory {
        let internals = rng.random_range(2..=6usize);
        let obs: Vec<String> = (1..=observables).map(|i| format!("o{i}")).collect();
        let props: Vec<String> = (1..=internals).map(|i| format!("q{i}")).collect();
        loop {
            let mut clauses: Vec<Clause> = Vec::new();
            let mut pending = vec!["r".to_string()];
            let mut defined = BTreeSet::new();
            while let Some(h) = pending.pop() {
                if !defined.insert(h.clone()) {
                    continue;
                }
                let level = props.iter().position(|p| *p == h).map_or(0, |i| i + 1);
                for _ in 0..rng.random_range(1..=3) {
                    let mut body: Vec<Literal> = Vec::new();
                    for _ in 0..rng.random_range(1..=3) {
                        let prop = if level < internals && rng.random_bool(0.4) {
                            props[rng.random_range(level..internals)].clone()
                        } else {
                            obs[rng.random_range(0..obs.len())].clone()
                        };
                        if props.contains(&prop) {
                            pending.push(prop.clone());
                        }
                        let lit = Literal::pos(prop);
                        if !body.contains(&lit) {
                            body.push(lit);
                        }
                    }
                    clauses.push(Clause { label: format!("C{}", clauses.len() + 1), head: h.clone(), body });
                }
            }
            if clauses.len() <= max_clauses {
                if let Ok(t) = DomainTheory::new(clauses) {
                    if t.roots().len() == 1 {
                        return t;
                    }
                }
            }
        }
    }

    /// Acyclic theory with negation and possibly several roots.
    pub fn theory(rng: &mut impl Rng, max_clauses: usize) -> DomainTheory {
        let heads = rng.random_range(1..=6usize);
        let obs = rng.random_range(1..=8usize);
        let n = rng.random_range(1..=max_clauses.max(1));
        let mut clauses = Vec::with_capacity(n);
        for k in 0..n {
            let h = rng.random_range(0..heads);
            let mut body: Vec<Literal> = Vec::new();
            for _ in 0..rng.random_range(1..=4) {
                let prop = if h + 1 < heads && rng.random_bool(0.4) {
                    format!("h{}", rng.random_range(h + 1..heads))
                } else {
                    format!("o{}", rng.random_range(0..obs))
                };
                let lit = Literal { prop, negated: rng.random_bool(0.3) };
                if !body.iter().any(|l| l.prop == lit.prop) {
                    body.push(lit);
                }
            }
            clauses.push(Clause { label: format!("C{}", k + 1), head: format!("h{h}"), body });
        }
        DomainTheory::new(clauses).expect("heads only depend on later heads")
    }

    /// One random structural edit that keeps the theory valid.
    pub fn perturb(rng: &mut impl Rng, t: &DomainTheory) -> DomainTheory {
        let obs: Vec<&String> = t.observables().iter().collect();
        loop {
            let mut clauses = t.clauses().to_vec();
            let i = rng.random_range(0..clauses.len());
            match rng.random_range(0..4) {
                0 if clauses[i].body.len() > 1 => {
                    let j = rng.random_range(0..clauses[i].body.len());
                    clauses[i].body.remove(j);
                }
                1 => {
                    let lit = Literal::pos(obs[rng.random_range(0..obs.len())].clone());
                    if clauses[i].body.contains(&lit) {
                        continue;
                    }
                    clauses[i].body.push(lit);
                }
                2 if clauses.iter().filter(|c| c.head == clauses[i].head).count() > 1 => {
                    clauses.remove(i);
                }
                3 => {
                    let taken: BTreeSet<String> = t.names();
                    let label = fresh(&format!("X{}", clauses.len() + 1), &taken);
                    let lit = Literal::pos(obs[rng.random_range(0..obs.len())].clone());
                    let head = clauses[i].head.clone();
                    clauses.push(Clause { label, head, body: vec![lit] });
                }
                _ => continue,
            }
            if let Ok(p) = DomainTheory::new(clauses) {
                if p.roots() == t.roots() {
                    return p;
                }
            }
        }
    }

    /// A revision problem: random weights in `[0.3, 0.99]` on a negation-free
    /// theory, with distinct exemplars labeled by a perturbed copy of the
    /// theory. At least one exemplar is positive.
    pub fn convergence_instance(rng: &mut impl Rng) -> (DtGraph, Vec<Exemplar>) {
        loop {
            let t = dag_theory(rng, 25, 8);
            let mut target = t.clone();
            for _ in 0..rng.random_range(1..=3) {
                target = perturb(rng, &target);
            }
            let root = t.roots()[0].clone();
            let obs: Vec<String> = t.observables().iter().cloned().collect();
            let n = rng.random_range(5..=40usize).min(1 << obs.len());
            let mut seen = BTreeSet::new();
            let mut z = Vec::new();
            while z.len() < n {
                let ex = Example::new(obs.iter().filter(|_| rng.random_bool(0.5)).cloned());
                if !seen.insert(ex.clone()) {
                    continue;
                }
                let value = target.evaluate(&ex).expect("observables only").get(&root).copied().unwrap_or(false);
                z.push(Exemplar { example: ex, target: BTreeMap::from([(root.clone(), value)]) });
            }
            // a root with no positive exemplars loses every clause, which no
            // theory can express
            if !z.iter().any(|x| x.target[&root]) {
                continue;
            }
            let mut g = DtGraph::build(&t);
            let es: Vec<EdgeIx> = g.mutable_edges().collect();
            for e in es {
                g.set_weight(e, rng.random_range(0.3..0.99)).expect("mutable edge");
            }
            return (g, z);
        }
    }
}
