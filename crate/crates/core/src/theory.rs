//! Propositional domain theories and exemplars.
//!
//! A theory is an ordered list of labeled clauses `H <- B` evaluated under
//! the closed-world assumption. Propositions that never head a clause are
//! observable; heads that never occur in a body are roots.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Error;

/// A possibly negated proposition.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub prop: String,
    pub negated: bool,
}

impl Literal {
    pub fn pos(prop: impl Into<String>) -> Self {
        Literal { prop: prop.into(), negated: false }
    }

    pub fn neg(prop: impl Into<String>) -> Self {
        Literal { prop: prop.into(), negated: true }
    }

    pub fn holds(&self, truth: bool) -> bool {
        truth != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "~{}", self.prop)
        } else {
            f.write_str(&self.prop)
        }
    }
}

/// `label: head <- body.` An empty body is written `true`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub label: String,
    pub head: String,
    pub body: Vec<Literal>,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} <- ", self.label, self.head)?;
        if self.body.is_empty() {
            f.write_str("true")?;
        }
        for (i, lit) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{lit}")?;
        }
        f.write_str(".")
    }
}

/// Validated, acyclic domain theory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainTheory {
    clauses: Vec<Clause>,
    roots: Vec<String>,
    observables: BTreeSet<String>,
    heads: BTreeSet<String>,
}

/// Set of true observables; everything else is false.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Example {
    pub true_observables: BTreeSet<String>,
}

impl Example {
    pub fn new<I, S>(props: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Example { true_observables: props.into_iter().map(Into::into).collect() }
    }

    pub fn contains(&self, prop: &str) -> bool {
        self.true_observables.contains(prop)
    }
}

/// An example together with its correct classification for every root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub example: Example,
    pub target: BTreeMap<String, bool>,
}

impl Exemplar {
    pub fn single(example: Example, root: &str, value: bool) -> Self {
        Exemplar { example, target: BTreeMap::from([(root.to_string(), value)]) }
    }
}

impl fmt::Display for Exemplar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let obs: Vec<&str> = self.example.true_observables.iter().map(String::as_str).collect();
        f.write_str(&obs.join(" "))?;
        f.write_str(if obs.is_empty() { "|" } else { " |" })?;
        for (root, v) in &self.target {
            write!(f, " {root}={}", u8::from(*v))?;
        }
        Ok(())
    }
}

/// Root name to truth value.
pub type ClassificationVector = BTreeMap<String, bool>;

const RESERVED: &[char] = &['~', ',', '.', ':', '|', '#'];

/// True if `name` is a legal proposition or label identifier.
pub fn is_identifier(name: &str) -> bool {
    !name.is_empty()
        && name != "true"
        && !name.contains("->")
        && !name.contains("<-")
        && !name.chars().any(|c| c.is_whitespace() || RESERVED.contains(&c))
}

impl DomainTheory {
    /// Validates clauses and derives roots and observables.
    pub fn new(clauses: Vec<Clause>) -> Result<Self, Error> {
        if clauses.is_empty() {
            return Err(Error::EmptyTheory);
        }
        let mut labels = BTreeSet::new();
        let mut heads = BTreeSet::new();
        let mut in_body = BTreeSet::new();
        for c in &clauses {
            for name in std::iter::once(&c.label)
                .chain(std::iter::once(&c.head))
                .chain(c.body.iter().map(|l| &l.prop))
            {
                if !is_identifier(name) {
                    return Err(Error::BadIdentifier(name.clone()));
                }
            }
            if !labels.insert(c.label.clone()) {
                return Err(Error::DuplicateLabel(c.label.clone()));
            }
            let mut seen = BTreeSet::new();
            for lit in &c.body {
                if !seen.insert(lit) {
                    return Err(Error::DuplicateLiteral { label: c.label.clone(), literal: lit.to_string() });
                }
                in_body.insert(lit.prop.clone());
            }
            heads.insert(c.head.clone());
        }
        let props: BTreeSet<&String> = heads.iter().chain(in_body.iter()).collect();
        if let Some(l) = labels.iter().find(|l| props.contains(l)) {
            return Err(Error::LabelClash(l.clone()));
        }
        let mut roots = Vec::new();
        for c in &clauses {
            if !in_body.contains(&c.head) && !roots.contains(&c.head) {
                roots.push(c.head.clone());
            }
        }
        let observables = in_body.difference(&heads).cloned().collect();
        let t = DomainTheory { clauses, roots, observables, heads };
        t.check_stratified()?;
        if t.roots.is_empty() {
            return Err(Error::NoRoot);
        }
        Ok(t)
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// Roots in order of first appearance as a head.
    pub fn roots(&self) -> &[String] {
        &self.roots
    }

    pub fn observables(&self) -> &BTreeSet<String> {
        &self.observables
    }

    pub fn is_head(&self, prop: &str) -> bool {
        self.heads.contains(prop)
    }

    pub fn clause(&self, label: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.label == label)
    }

    /// Every label and proposition name in use.
    pub fn names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for c in &self.clauses {
            out.insert(c.label.clone());
            out.insert(c.head.clone());
            out.extend(c.body.iter().map(|l| l.prop.clone()));
        }
        out
    }

    /// Requires the head-to-body dependency graph to be acyclic.
    pub fn check_stratified(&self) -> Result<(), Error> {
        let mut deps: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for c in &self.clauses {
            let d = deps.entry(&c.head).or_default();
            for lit in &c.body {
                if !d.contains(&lit.prop.as_str()) {
                    d.push(&lit.prop);
                }
            }
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: HashMap<&str, u8> = HashMap::new();
        for &start in deps.keys() {
            if state.get(start).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack: Vec<(&str, usize)> = vec![(start, 0)];
            state.insert(start, 1);
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                let children = deps.get(node).map(Vec::as_slice).unwrap_or(&[]);
                if *next < children.len() {
                    let child = children[*next];
                    *next += 1;
                    match state.get(child).copied().unwrap_or(0) {
                        0 => {
                            state.insert(child, 1);
                            stack.push((child, 0));
                        }
                        1 => {
                            let pos = stack.iter().position(|(n, _)| *n == child).unwrap_or(0);
                            let mut cycle: Vec<String> = stack[pos..].iter().map(|(n, _)| n.to_string()).collect();
                            cycle.push(child.to_string());
                            return Err(Error::Cycle(cycle));
                        }
                        _ => {}
                    }
                } else {
                    state.insert(node, 2);
                    stack.pop();
                }
            }
        }
        Ok(())
    }

    /// Truth of every proposition under the closed-world assumption.
    pub fn evaluate(&self, ex: &Example) -> Result<HashMap<String, bool>, Error> {
        self.check_example(ex)?;
        let mut memo: HashMap<String, bool> = HashMap::new();
        let mut by_head: HashMap<&str, Vec<&Clause>> = HashMap::new();
        for c in &self.clauses {
            by_head.entry(&c.head).or_default().push(c);
        }
        fn truth<'a>(
            p: &'a str,
            by_head: &HashMap<&'a str, Vec<&'a Clause>>,
            ex: &Example,
            memo: &mut HashMap<String, bool>,
        ) -> bool {
            if let Some(&v) = memo.get(p) {
                return v;
            }
            let v = match by_head.get(p) {
                None => ex.contains(p),
                Some(cs) => cs
                    .iter()
                    .any(|c| c.body.iter().all(|l| l.holds(truth(&l.prop, by_head, ex, memo)))),
            };
            memo.insert(p.to_string(), v);
            v
        }
        for c in &self.clauses {
            truth(&c.head, &by_head, ex, &mut memo);
        }
        Ok(memo)
    }

    /// Errors if `ex` asserts a proposition that heads a clause.
    pub fn check_example(&self, ex: &Example) -> Result<(), Error> {
        match ex.true_observables.iter().find(|p| self.heads.contains(*p)) {
            Some(p) => Err(Error::NotObservable(p.clone())),
            None => Ok(()),
        }
    }

    /// Classification of every root.
    pub fn classify(&self, ex: &Example) -> Result<ClassificationVector, Error> {
        let truth = self.evaluate(ex)?;
        Ok(self.roots.iter().map(|r| (r.clone(), truth[r])).collect())
    }

    /// True if every root agrees with the exemplar's target.
    pub fn agrees(&self, x: &Exemplar) -> Result<bool, Error> {
        let got = self.classify(&x.example)?;
        Ok(self.roots.iter().all(|r| x.target.get(r).copied().unwrap_or(false) == got[r]))
    }
}

impl fmt::Display for DomainTheory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { line, col, msg: msg.into() }
}

struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    line: usize,
    src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Cursor { chars: src.char_indices().collect(), pos: 0, line, src }
    }

    fn col(&self) -> usize {
        self.pos + 1
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn rest(&self) -> &'a str {
        match self.chars.get(self.pos) {
            Some(&(i, _)) => &self.src[i..],
            None => "",
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.chars().count();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, Error> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || RESERVED.contains(&c) || self.rest().starts_with("<-") || self.rest().starts_with("->") {
                break;
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(syntax(self.line, self.col(), "expected identifier"));
        }
        Ok(self.chars[start..self.pos].iter().map(|&(_, c)| c).collect())
    }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

/// Parses the clause grammar. Unlabeled clauses are labeled `C<k>` by
/// position, with `_` appended until the name is unused.
pub fn parse_theory(text: &str) -> Result<DomainTheory, Error> {
    struct Raw {
        label: Option<String>,
        head: String,
        body: Vec<Literal>,
    }
    let mut raws = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let src = strip_comment(line);
        let mut cur = Cursor::new(src, line_no);
        cur.skip_ws();
        while cur.peek().is_some() {
            let first = cur.ident()?;
            let (label, head) = if cur.eat(":") { (Some(first), cur.ident()?) } else { (None, first) };
            if !cur.eat("<-") {
                return Err(syntax(line_no, cur.col(), "expected `<-`"));
            }
            let mut body = Vec::new();
            cur.skip_ws();
            if cur.rest().starts_with("true") {
                let save = cur.pos;
                cur.pos += 4;
                if cur.eat(".") {
                    raws.push(Raw { label, head, body });
                    cur.skip_ws();
                    continue;
                }
                cur.pos = save;
            }
            loop {
                let negated = cur.eat("~");
                let prop = cur.ident()?;
                body.push(Literal { prop, negated });
                if cur.eat(",") {
                    continue;
                }
                if cur.eat(".") {
                    break;
                }
                cur.skip_ws();
                return Err(syntax(line_no, cur.col(), "expected `,` or `.`"));
            }
            raws.push(Raw { label, head, body });
            cur.skip_ws();
        }
    }
    let mut taken: BTreeSet<String> = BTreeSet::new();
    for r in &raws {
        taken.extend(r.label.iter().cloned());
        taken.insert(r.head.clone());
        taken.extend(r.body.iter().map(|l| l.prop.clone()));
    }
    let clauses = raws
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let label = r.label.unwrap_or_else(|| {
                let name = fresh(&format!("C{}", i + 1), &taken);
                taken.insert(name.clone());
                name
            });
            Clause { label, head: r.head, body: r.body }
        })
        .collect();
    DomainTheory::new(clauses)
}

/// `base` with `_` appended until it is not in `taken`.
pub fn fresh(base: &str, taken: &BTreeSet<String>) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('_');
    }
    name
}

/// Text that reparses to an equal theory.
pub fn serialize_theory(t: &DomainTheory) -> String {
    t.to_string()
}

/// Parses `obs1 obs2 | root=1 ...` lines; blank and `#` lines are skipped.
pub fn parse_exemplars(text: &str) -> Result<Vec<Exemplar>, Error> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let src = strip_comment(line);
        if src.trim().is_empty() {
            continue;
        }
        out.push(parse_exemplar_line(src).map_err(|msg| syntax(ln + 1, 1, msg))?);
    }
    Ok(out)
}

/// Parses a single exemplar line.
pub fn parse_exemplar(line: &str) -> Result<Exemplar, Error> {
    parse_exemplar_line(line).map_err(|msg| syntax(1, 1, msg))
}

fn parse_exemplar_line(src: &str) -> Result<Exemplar, String> {
    let (obs, tgt) = src.split_once('|').ok_or("expected `|`")?;
    let mut example = Example::default();
    for p in obs.split_whitespace() {
        if !is_identifier(p) {
            return Err(format!("bad observable `{p}`"));
        }
        example.true_observables.insert(p.to_string());
    }
    let mut target = BTreeMap::new();
    for kv in tgt.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("expected root=0|1, got `{kv}`"))?;
        let v = match v {
            "1" => true,
            "0" => false,
            _ => return Err(format!("bad class value `{v}`")),
        };
        target.insert(k.to_string(), v);
    }
    if target.is_empty() {
        return Err("no target".into());
    }
    Ok(Exemplar { example, target })
}

/// One exemplar per line.
pub fn serialize_exemplars(xs: &[Exemplar]) -> String {
    xs.iter().map(|x| format!("{x}\n")).collect()
}
