//! Abstract argument graphs and grounded-extension computation.
//!
//! A graph is extracted from a public state by reading unary `a(x)` atoms as
//! argument nodes and binary `a(u,v)` atoms as attacks (u attacks v); attack
//! endpoints count as nodes even without an explicit `a(x)`. The grounded
//! extension is the least fixpoint of the defended-arguments operator; a
//! power-set oracle over complete extensions backs it in tests.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{Polarity, StateSet, Term};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ArgumentGraph {
    pub arguments: BTreeSet<Term>,
    pub attacks: BTreeSet<(Term, Term)>,
}

impl ArgumentGraph {
    pub fn attackers_of<'a>(&'a self, x: &'a Term) -> impl Iterator<Item = &'a Term> + 'a {
        self.attacks.iter().filter(move |(_, v)| v == x).map(|(u, _)| u)
    }

    /// Arguments defended by `set`: every attacker is itself attacked from
    /// within `set`.
    fn defended(&self, set: &BTreeSet<Term>) -> BTreeSet<Term> {
        self.arguments
            .iter()
            .filter(|x| {
                self.attackers_of(x)
                    .all(|u| set.iter().any(|d| self.attacks.contains(&(d.clone(), u.clone()))))
            })
            .cloned()
            .collect()
    }

    fn conflict_free(&self, set: &BTreeSet<Term>) -> bool {
        !set.iter().any(|u| set.iter().any(|v| self.attacks.contains(&(u.clone(), v.clone()))))
    }
}

/// Read the argument graph off a public state. Only positive `a` atoms
/// contribute; arity selects node (`a/1`) versus attack (`a/2`).
pub fn extract_graph(public: &StateSet) -> ArgumentGraph {
    let mut g = ArgumentGraph::default();
    for lit in public.iter() {
        if lit.polarity != Polarity::Positive || lit.atom.predicate != "a" {
            continue;
        }
        match lit.atom.args.as_slice() {
            [x] => {
                g.arguments.insert(x.clone());
            }
            [u, v] => {
                g.arguments.insert(u.clone());
                g.arguments.insert(v.clone());
                g.attacks.insert((u.clone(), v.clone()));
            }
            _ => {}
        }
    }
    g
}

/// Grounded extension by fixpoint iteration from the empty set. The operator
/// is monotone, so iteration terminates in at most |arguments| rounds.
pub fn grounded_fixpoint(g: &ArgumentGraph) -> BTreeSet<Term> {
    let mut current = BTreeSet::new();
    loop {
        let next = g.defended(&current);
        if next == current {
            return current;
        }
        debug_assert!(current.is_subset(&next), "operator iteration must grow");
        current = next;
    }
}

/// Independent oracle: the unique minimal complete extension, found by
/// scanning all subsets. Guarded to small graphs.
pub fn grounded_bruteforce(g: &ArgumentGraph) -> BTreeSet<Term> {
    assert!(g.arguments.len() <= 20, "brute-force oracle limited to 20 arguments");
    let args: Vec<&Term> = g.arguments.iter().collect();
    let mut best: Option<BTreeSet<Term>> = None;
    for mask in 0u32..(1 << args.len()) {
        let set: BTreeSet<Term> = args
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, t)| (*t).clone())
            .collect();
        // complete: conflict-free and exactly its own defended set
        if g.conflict_free(&set) && g.defended(&set) == set {
            match &best {
                Some(b) if set.len() >= b.len() => {}
                _ => best = Some(set),
            }
        }
    }
    best.expect("every graph has a grounded extension")
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphParseError {
    #[error("line {line}: expected 'arg <id>' or 'att <source> <target>', found {text:?}")]
    BadLine { line: usize, text: String },
    #[error("line {line}: attack endpoint {id:?} is not a declared argument")]
    UnknownArgument { line: usize, id: String },
}

/// Plain-text graph format: one `arg <id>` or `att <source> <target>`
/// directive per line; `#` starts a comment. Attack endpoints must be
/// declared.
pub fn parse_graph(text: &str) -> Result<ArgumentGraph, GraphParseError> {
    let mut g = ArgumentGraph::default();
    let mut pending: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        match fields.as_slice() {
            ["arg", id] => {
                g.arguments.insert(Term::Const(id.to_string()));
            }
            ["att", u, v] => pending.push((line, u.to_string(), v.to_string())),
            _ => {
                return Err(GraphParseError::BadLine { line, text: content.to_string() });
            }
        }
    }
    for (line, u, v) in pending {
        for id in [&u, &v] {
            if !g.arguments.contains(&Term::Const(id.clone())) {
                return Err(GraphParseError::UnknownArgument { line, id: id.clone() });
            }
        }
        g.attacks.insert((Term::Const(u), Term::Const(v)));
    }
    Ok(g)
}
