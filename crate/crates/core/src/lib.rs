//! Probabilistic theory revision.
//!
//! A propositional domain theory is compiled into a weighted dt-graph whose
//! edge weights express confidence in each clause and literal. Classified
//! exemplars push proof flow through the graph, lowering the weights of
//! suspect elements; elements that fall below a threshold are deleted or
//! patched with an induced subtree until every exemplar is classified
//! correctly.
//!
//! ```
//! use ptr_core::{control, dtgraph, fixtures, theory};
//!
//! let t = theory::parse_theory(fixtures::STOCK_THEORY).unwrap();
//! let mut k = dtgraph::DtGraph::build(&t);
//! k.apply_weight_file(fixtures::STOCK_WEIGHTS).unwrap();
//! let z = theory::parse_exemplars(fixtures::STOCK_EXEMPLARS).unwrap();
//! let out = control::ptr(&k, &z, &control::PtrConfig::default()).unwrap();
//! assert_eq!(out.terminated_by, control::Termination::AllCorrect);
//! ```

pub mod control;
pub mod dtgraph;
pub mod flow;
pub mod harness;
pub mod revision;
pub mod theory;
pub mod weights;

pub use control::{ptr, PtrConfig, PtrOutcome, Termination};
pub use dtgraph::{DtGraph, EdgeKind, NodeKind, Parity};
pub use theory::{Clause, DomainTheory, Example, Exemplar, Literal};

/// Bundled data files.
pub mod fixtures {
    pub const STOCK_THEORY: &str = include_str!("../data/stock.theory");
    pub const STOCK_WEIGHTS: &str = include_str!("../data/stock.weights");
    pub const STOCK_EXEMPLARS: &str = include_str!("../data/stock.exemplars");
    pub const SYNTHETIC_THEORY: &str = include_str!("../data/synthetic.theory");
    pub const SYNTHETIC_ERRORS: &str = include_str!("../data/synthetic.errors");
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("empty theory")]
    EmptyTheory,
    #[error("theory has no root")]
    NoRoot,
    #[error("invalid identifier `{0}`")]
    BadIdentifier(String),
    #[error("duplicate clause label `{0}`")]
    DuplicateLabel(String),
    #[error("clause `{label}` repeats literal `{literal}`")]
    DuplicateLiteral { label: String, literal: String },
    #[error("label `{0}` is also used as a proposition")]
    LabelClash(String),
    #[error("cyclic dependency: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("`{0}` is not an observable proposition")]
    NotObservable(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("edge `{0}` has a fixed weight")]
    FixedEdge(String),
    #[error("weight {0} outside (0, 1]")]
    BadWeight(f64),
    #[error("root `{0}` has no clauses left")]
    RootWithoutClauses(String),
    #[error("{0} mutable edges exceed the enumeration limit of {1}")]
    TooManyEdges(usize, usize),
    #[error("inseparable relevance sets")]
    Inseparable,
    #[error("no positive examples to describe")]
    NoPositives,
    #[error("exemplar impossible under prior")]
    ImpossibleExemplar,
    #[error("graph has {0} roots; only single-root graphs are supported here")]
    MultiRoot(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("error script: {0}")]
    Script(String),
    #[error("cannot sample {0} distinct examples over {1} observables")]
    SampleTooLarge(usize, usize),
    #[error("revision log: {0}")]
    Log(String),
}
