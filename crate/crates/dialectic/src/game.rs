//! Minimax analysis of a dialogue machine.
//!
//! The machine is unrolled into a game tree: agent 1 maximises, agent 2
//! minimises. A branch that reaches the closing double-pass is cut at the
//! last contentful state — the two trailing empty-letter copies before a
//! terminal are not materialised as tree nodes. Leaf utility is 1 when one of
//! agent 1's goals (`g(x)` in its private state) sits in the grounded
//! extension of the argument graph read off the public state, 0 otherwise;
//! the weighted variant divides by the leaf's depth to favour short wins.

use std::time::Instant;

use num_rational::Rational64;
use thiserror::Error;

use crate::af::{extract_graph, grounded_fixpoint};
use crate::fsm::DialogueFsm;
use crate::model::{Label, Polarity, Term};

/// When a branch of the unrolled tree stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndFunction {
    /// Follow every branch to the machine's closing double-pass; a reachable
    /// cycle is an error.
    Exhaustive,
    /// Stop a branch as soon as every successor already occurs on it.
    NonRepetitive,
    /// Cut every branch at this depth (root has depth 1).
    FixedDepth(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilityFunction {
    Grounded,
    WeightedGrounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameNode {
    /// Index of the machine state this node carries.
    pub state: usize,
    /// Root is depth 1.
    pub depth: usize,
    /// Letter taken from the parent; `None` at the root.
    pub edge: Option<Label>,
    pub children: Vec<GameNode>,
    pub value: Rational64,
}

impl GameNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(GameNode::node_count).sum::<usize>()
    }

    pub fn max_depth(&self) -> usize {
        self.children.iter().map(GameNode::max_depth).max().unwrap_or(self.depth)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GameError {
    #[error("non-terminating under exhaustive end function: state {state} recurs")]
    NonTerminating { state: usize },
    #[error("tree node cap exceeded: {count} nodes constructed")]
    NodeCapExceeded { count: usize },
    #[error("deadline exceeded during tree construction")]
    Timeout,
}

#[derive(Debug, Clone, Default)]
pub struct TreeOptions {
    pub max_nodes: Option<usize>,
    pub deadline: Option<Instant>,
}

/// A branch ends where only the terminal tail remains: the state's sole
/// successor is an empty letter into a state whose sole successor is an
/// empty letter into a terminal copy.
fn at_end(fsm: &DialogueFsm, state: usize) -> bool {
    let mut out = fsm.outgoing(state);
    let (first, rest) = (out.next(), out.next());
    match (first, rest) {
        (Some(t), None) if t.label.is_empty() => {
            let mut out2 = fsm.outgoing(t.to);
            match (out2.next(), out2.next()) {
                (Some(u), None) => u.label.is_empty() && fsm.states[u.to].turn == 0,
                _ => false,
            }
        }
        _ => false,
    }
}

/// Unroll the machine from its start state. Values are left at zero; use
/// [`evaluate`] or [`analyze`] to fill them in.
pub fn unroll(
    fsm: &DialogueFsm,
    end: EndFunction,
    options: &TreeOptions,
) -> Result<GameNode, GameError> {
    let mut count = 0usize;
    let mut path = Vec::new();
    grow(fsm, fsm.start, 1, None, end, options, &mut path, &mut count)
}

#[allow(clippy::too_many_arguments)]
fn grow(
    fsm: &DialogueFsm,
    state: usize,
    depth: usize,
    edge: Option<Label>,
    end: EndFunction,
    options: &TreeOptions,
    path: &mut Vec<usize>,
    count: &mut usize,
) -> Result<GameNode, GameError> {
    if let Some(deadline) = options.deadline {
        if Instant::now() >= deadline {
            return Err(GameError::Timeout);
        }
    }
    *count += 1;
    if let Some(cap) = options.max_nodes {
        if *count > cap {
            return Err(GameError::NodeCapExceeded { count: *count });
        }
    }
    let mut node =
        GameNode { state, depth, edge, children: Vec::new(), value: Rational64::from(0) };
    let cut = at_end(fsm, state)
        || matches!(end, EndFunction::FixedDepth(d) if depth >= d)
        || fsm.states[state].turn == 0;
    if cut {
        return Ok(node);
    }
    path.push(state);
    for t in fsm.outgoing(state) {
        if path.contains(&t.to) {
            match end {
                EndFunction::Exhaustive => {
                    path.pop();
                    return Err(GameError::NonTerminating { state: t.to });
                }
                // repeats end the branch: the repeating successor is skipped
                EndFunction::NonRepetitive => continue,
                EndFunction::FixedDepth(_) => {}
            }
        }
        let child = grow(fsm, t.to, depth + 1, Some(t.label.clone()), end, options, path, count);
        match child {
            Ok(c) => node.children.push(c),
            Err(e) => {
                path.pop();
                return Err(e);
            }
        }
    }
    path.pop();
    Ok(node)
}

/// Goal arguments: terms `x` with a positive `g(x)` in agent 1's private
/// state at the leaf.
fn goals(fsm: &DialogueFsm, state: usize) -> Vec<Term> {
    fsm.states[state]
        .s1
        .iter()
        .filter(|l| {
            l.polarity == Polarity::Positive && l.atom.predicate == "g" && l.atom.arity() == 1
        })
        .map(|l| l.atom.args[0].clone())
        .collect()
}

pub fn leaf_utility(
    fsm: &DialogueFsm,
    state: usize,
    depth: usize,
    utility: UtilityFunction,
) -> Rational64 {
    let grounded = grounded_fixpoint(&extract_graph(&fsm.states[state].p));
    let won = goals(fsm, state).iter().any(|x| grounded.contains(x));
    let base = Rational64::from(i64::from(won));
    match utility {
        UtilityFunction::Grounded => base,
        UtilityFunction::WeightedGrounded => base / Rational64::from(depth as i64),
    }
}

/// Fill in minimax values bottom-up: agent 1's turns maximise, agent 2's
/// minimise.
pub fn evaluate(fsm: &DialogueFsm, node: &mut GameNode, utility: UtilityFunction) {
    if node.children.is_empty() {
        node.value = leaf_utility(fsm, node.state, node.depth, utility);
        return;
    }
    for c in &mut node.children {
        evaluate(fsm, c, utility);
    }
    let values = node.children.iter().map(|c| c.value);
    node.value = match fsm.states[node.state].turn {
        1 => values.max().unwrap(),
        2 => values.min().unwrap(),
        _ => unreachable!("terminals are never internal nodes"),
    };
}

pub fn analyze(
    fsm: &DialogueFsm,
    end: EndFunction,
    utility: UtilityFunction,
    options: &TreeOptions,
) -> Result<GameNode, GameError> {
    let mut root = unroll(fsm, end, options)?;
    evaluate(fsm, &mut root, utility);
    Ok(root)
}

// ---------------------------------------------------------------------------
// Export

pub fn export_tree_json(root: &GameNode) -> String {
    fn build(n: &GameNode) -> serde_json::Value {
        serde_json::json!({
            "state": n.state,
            "depth": n.depth,
            "edge": n.edge.as_ref().map(|l| l.to_string()),
            "value": n.value.to_string(),
            "children": n.children.iter().map(build).collect::<Vec<_>>(),
        })
    }
    let mut s = serde_json::to_string_pretty(&build(root)).expect("serialization cannot fail");
    s.push('\n');
    s
}

pub fn export_tree_dot(root: &GameNode) -> String {
    fn walk(n: &GameNode, id: &mut usize, out: &mut String) -> usize {
        let me = *id;
        *id += 1;
        out.push_str(&format!(
            "  n{me} [shape=box, label=\"s{} [{}]\"];\n",
            n.state, n.value
        ));
        for c in &n.children {
            let child = walk(c, id, out);
            let label = c.edge.as_ref().map(|l| l.to_string()).unwrap_or_default();
            out.push_str(&format!("  n{me} -> n{child} [label=\"{label}\"];\n"));
        }
        me
    }
    let mut out = String::from("digraph game {\n");
    let mut id = 0;
    walk(root, &mut id, &mut out);
    out.push_str("}\n");
    out
}
