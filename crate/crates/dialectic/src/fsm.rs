//! Compilation of a system plus one initial state into the finite state
//! machine of its dialogues, plus acceptance checking and DOT/JSON export.
//!
//! Machine states are turn-marked content tuples `(turn, s1, p, s2)` with
//! `turn = 0` for terminals; letters are action-set pairs. Construction is a
//! worklist reachability pass: the agent whose turn it is expands a state by
//! its candidate action sets; when nothing fires the single empty letter is
//! emitted, and a second consecutive pass closes the branch with a terminal
//! copy of the state.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    apply_actions, candidate_actions, ActionRule, ActionSet, ExecutionState, Label, StateSet,
    TraceString,
};

/// A machine state: whose move it is (0 marks a terminal) and the three
/// state components. Identity is structural over all four fields.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FsmState {
    pub turn: u8,
    pub s1: StateSet,
    pub p: StateSet,
    pub s2: StateSet,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Transition {
    pub from: usize,
    pub label: Label,
    pub to: usize,
}

/// The compiled machine. States are indexed in discovery order; `start` is
/// always index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialogueFsm {
    pub states: Vec<FsmState>,
    pub transitions: Vec<Transition>,
    pub start: usize,
    pub terminals: BTreeSet<usize>,
    pub alphabet: BTreeSet<Label>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("state-space cap exceeded: {count} states constructed")]
    StateCapExceeded { count: usize },
    #[error("deadline exceeded during construction")]
    Timeout,
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Abort once more than this many states have been constructed.
    pub max_states: Option<usize>,
    /// Cooperative wall-clock cutoff, checked between state expansions.
    pub deadline: Option<Instant>,
}

/// Compile the machine representing `(rules1, rules2)` from `initial`.
pub fn build_machine(
    rules1: &[ActionRule],
    rules2: &[ActionRule],
    initial: &ExecutionState,
) -> Result<DialogueFsm, BuildError> {
    build_machine_with(rules1, rules2, initial, &BuildOptions::default())
}

pub fn build_machine_with(
    rules1: &[ActionRule],
    rules2: &[ActionRule],
    initial: &ExecutionState,
    options: &BuildOptions,
) -> Result<DialogueFsm, BuildError> {
    assert!(initial.has_empty_actions(), "initial state must have empty action sets");
    let start = FsmState {
        turn: 1,
        s1: initial.s1.clone(),
        p: initial.p.clone(),
        s2: initial.s2.clone(),
    };
    let mut states: Vec<FsmState> = vec![start.clone()];
    let mut index: HashMap<FsmState, usize> = HashMap::from([(start, 0)]);
    // whether the state was first reached over an empty letter; a forced pass
    // from such a state is the second consecutive pass and closes the branch
    let mut via_pass: Vec<bool> = vec![false];
    let mut transitions: Vec<Transition> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::from([0]);

    while let Some(id) = queue.pop_front() {
        if let Some(deadline) = options.deadline {
            if Instant::now() >= deadline {
                return Err(BuildError::Timeout);
            }
        }
        let state = states[id].clone();
        let reached_by_pass = via_pass[id];
        debug_assert_ne!(state.turn, 0);
        let agent = state.turn;
        let private = if agent == 1 { &state.s1 } else { &state.s2 };
        let candidates = candidate_actions(
            if agent == 1 { rules1 } else { rules2 },
            private,
            &state.p,
        );
        let passing = candidates.len() == 1 && candidates.iter().next().unwrap().is_empty();

        let mut intern = |st: FsmState,
                          reached_by_pass: bool,
                          states: &mut Vec<FsmState>,
                          queue: &mut VecDeque<usize>|
         -> Result<usize, BuildError> {
            if let Some(&i) = index.get(&st) {
                return Ok(i);
            }
            let i = states.len();
            if let Some(cap) = options.max_states {
                if i + 1 > cap {
                    return Err(BuildError::StateCapExceeded { count: i + 1 });
                }
            }
            index.insert(st.clone(), i);
            via_pass.push(reached_by_pass);
            states.push(st);
            if states[i].turn != 0 {
                queue.push_back(i);
            }
            Ok(i)
        };

        if passing {
            let next_turn = if reached_by_pass { 0 } else { flip(agent) };
            let target = FsmState {
                turn: next_turn,
                s1: state.s1.clone(),
                p: state.p.clone(),
                s2: state.s2.clone(),
            };
            let to = intern(target, true, &mut states, &mut queue)?;
            transitions.push(Transition { from: id, label: Label::empty(), to });
        } else {
            for actions in candidates {
                let exec = ExecutionState {
                    s1: state.s1.clone(),
                    p: state.p.clone(),
                    s2: state.s2.clone(),
                    a1: ActionSet::new(),
                    a2: ActionSet::new(),
                };
                let (a1, a2) = if agent == 1 {
                    (actions.clone(), ActionSet::new())
                } else {
                    (ActionSet::new(), actions.clone())
                };
                let next = apply_actions(&exec, &a1, &a2);
                let target = FsmState { turn: flip(agent), s1: next.s1, p: next.p, s2: next.s2 };
                let to = intern(target, false, &mut states, &mut queue)?;
                transitions.push(Transition { from: id, label: Label { a1, a2 }, to });
            }
        }
    }

    transitions.sort();
    transitions.dedup();
    let terminals = states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.turn == 0)
        .map(|(i, _)| i)
        .collect();
    let alphabet = transitions.iter().map(|t| t.label.clone()).collect();
    Ok(DialogueFsm { states, transitions, start: 0, terminals, alphabet })
}

fn flip(agent: u8) -> u8 {
    if agent == 1 {
        2
    } else {
        1
    }
}

impl DialogueFsm {
    pub fn outgoing(&self, from: usize) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.from == from)
    }

    /// True iff running the trace from the start state traverses existing
    /// transitions and ends in a terminal.
    pub fn accepts(&self, trace: &[Label]) -> bool {
        let mut current = self.start;
        for label in trace {
            match self.outgoing(current).find(|t| &t.label == label) {
                Some(t) => current = t.to,
                None => return false,
            }
        }
        self.terminals.contains(&current)
    }

    /// Every accepted trace of length at most `max_len`.
    pub fn accepted_traces(&self, max_len: usize) -> BTreeSet<TraceString> {
        let mut out = BTreeSet::new();
        let mut stack: Vec<(usize, TraceString)> = vec![(self.start, Vec::new())];
        while let Some((state, trace)) = stack.pop() {
            if self.terminals.contains(&state) {
                out.insert(trace.clone());
            }
            if trace.len() == max_len {
                continue;
            }
            for t in self.outgoing(state) {
                let mut next = trace.clone();
                next.push(t.label.clone());
                stack.push((t.to, next));
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "states={} transitions={} terminals={}",
            self.states.len(),
            self.transitions.len(),
            self.terminals.len()
        )
    }
}

// ---------------------------------------------------------------------------
// Export / import

fn fmt_units(set: &ActionSet) -> String {
    set.iter().map(|u| u.to_string()).collect::<Vec<_>>().join(", ")
}

/// DOT digraph; terminal states are double-circled, labels list action units.
pub fn export_dot(fsm: &DialogueFsm) -> String {
    let mut out = String::from("digraph dialogue {\n  rankdir=LR;\n");
    for (i, s) in fsm.states.iter().enumerate() {
        let shape = if s.turn == 0 { "doublecircle" } else { "circle" };
        out.push_str(&format!(
            "  s{i} [shape={shape}, label=\"s{i} (turn {})\\n{} | {} | {}\"];\n",
            s.turn, s.s1, s.p, s.s2
        ));
    }
    for t in &fsm.transitions {
        out.push_str(&format!(
            "  s{} -> s{} [label=\"({{{}}}, {{{}}})\"];\n",
            t.from,
            t.to,
            fmt_units(&t.label.a1),
            fmt_units(&t.label.a2)
        ));
    }
    out.push_str("}\n");
    out
}

const SCHEMA: &str = "dialectic-fsm/v1";

#[derive(Serialize, Deserialize)]
struct JsonFsm {
    schema: String,
    states: Vec<JsonState>,
    transitions: Vec<JsonTransition>,
    start: usize,
    terminals: Vec<usize>,
    alphabet: Vec<JsonLabel>,
}

#[derive(Serialize, Deserialize)]
struct JsonState {
    turn: u8,
    s1: Vec<String>,
    p: Vec<String>,
    s2: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonLabel {
    a1: Vec<String>,
    a2: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonTransition {
    from: usize,
    label: JsonLabel,
    to: usize,
}

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema {found:?}, expected {SCHEMA:?}")]
    Schema { found: String },
    #[error("state index {index} out of range ({len} states)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("bad {what} {text:?}: {source}")]
    BadTerm { what: &'static str, text: String, source: crate::dsl::ParseError },
}

fn state_to_json(s: &FsmState) -> JsonState {
    let lits = |st: &StateSet| st.iter().map(|l| l.to_string()).collect();
    JsonState { turn: s.turn, s1: lits(&s.s1), p: lits(&s.p), s2: lits(&s.s2) }
}

fn label_to_json(l: &Label) -> JsonLabel {
    let units = |a: &ActionSet| a.iter().map(|u| u.to_string()).collect();
    JsonLabel { a1: units(&l.a1), a2: units(&l.a2) }
}

/// Stable JSON form: sorted literal and unit lists throughout.
pub fn export_json(fsm: &DialogueFsm) -> String {
    let doc = JsonFsm {
        schema: SCHEMA.to_string(),
        states: fsm.states.iter().map(state_to_json).collect(),
        transitions: fsm
            .transitions
            .iter()
            .map(|t| JsonTransition { from: t.from, label: label_to_json(&t.label), to: t.to })
            .collect(),
        start: fsm.start,
        terminals: fsm.terminals.iter().copied().collect(),
        alphabet: fsm.alphabet.iter().map(label_to_json).collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("serialization cannot fail");
    s.push('\n');
    s
}

fn state_from_json(s: &JsonState) -> Result<FsmState, JsonError> {
    let lits = |v: &[String]| -> Result<StateSet, JsonError> {
        v.iter()
            .map(|t| {
                crate::dsl::parse_literal(t).map_err(|e| JsonError::BadTerm {
                    what: "literal",
                    text: t.clone(),
                    source: e,
                })
            })
            .collect::<Result<_, _>>()
            .map(StateSet)
    };
    Ok(FsmState { turn: s.turn, s1: lits(&s.s1)?, p: lits(&s.p)?, s2: lits(&s.s2)? })
}

fn label_from_json(l: &JsonLabel) -> Result<Label, JsonError> {
    let units = |v: &[String]| -> Result<ActionSet, JsonError> {
        v.iter()
            .map(|t| {
                crate::dsl::parse_action_unit(t).map_err(|e| JsonError::BadTerm {
                    what: "action unit",
                    text: t.clone(),
                    source: e,
                })
            })
            .collect::<Result<_, _>>()
            .map(ActionSet)
    };
    Ok(Label { a1: units(&l.a1)?, a2: units(&l.a2)? })
}

pub fn import_json(text: &str) -> Result<DialogueFsm, JsonError> {
    let doc: JsonFsm = serde_json::from_str(text)?;
    if doc.schema != SCHEMA {
        return Err(JsonError::Schema { found: doc.schema });
    }
    let len = doc.states.len();
    let check = |index: usize| -> Result<usize, JsonError> {
        if index < len {
            Ok(index)
        } else {
            Err(JsonError::IndexOutOfRange { index, len })
        }
    };
    let states = doc.states.iter().map(state_from_json).collect::<Result<Vec<_>, _>>()?;
    let transitions = doc
        .transitions
        .iter()
        .map(|t| {
            Ok::<_, JsonError>(Transition {
                from: check(t.from)?,
                label: label_from_json(&t.label)?,
                to: check(t.to)?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let terminals =
        doc.terminals.iter().map(|&i| check(i)).collect::<Result<BTreeSet<_>, _>>()?;
    let alphabet =
        doc.alphabet.iter().map(label_from_json).collect::<Result<BTreeSet<_>, _>>()?;
    Ok(DialogueFsm { states, transitions, start: check(doc.start)?, terminals, alphabet })
}

/// Structural sanity checks shared by tests: start turn, terminal marking,
/// alphabet closure, turn alternation, and reachability.
pub fn validate(fsm: &DialogueFsm) {
    assert_eq!(fsm.states[fsm.start].turn, 1, "start state must be agent 1's turn");
    for (i, s) in fsm.states.iter().enumerate() {
        assert_eq!(
            s.turn == 0,
            fsm.terminals.contains(&i),
            "terminal set must be exactly the turn-0 states"
        );
        if s.turn == 0 {
            assert_eq!(fsm.outgoing(i).count(), 0, "terminals have no outgoing transitions");
        }
    }
    let labels: BTreeSet<Label> = fsm.transitions.iter().map(|t| t.label.clone()).collect();
    assert_eq!(labels, fsm.alphabet, "alphabet must be the set of used labels");
    for t in &fsm.transitions {
        let from = &fsm.states[t.from];
        let to = &fsm.states[t.to];
        match from.turn {
            1 => {
                assert!(t.label.a2.is_empty(), "agent 2 silent on agent 1's move");
                assert!(to.turn == 2 || to.turn == 0);
            }
            2 => {
                assert!(t.label.a1.is_empty(), "agent 1 silent on agent 2's move");
                assert!(to.turn == 1 || to.turn == 0);
            }
            _ => panic!("transition out of a terminal"),
        }
    }
    // reachability from start
    let mut seen = BTreeSet::from([fsm.start]);
    let mut stack = vec![fsm.start];
    while let Some(s) = stack.pop() {
        for t in fsm.outgoing(s) {
            if seen.insert(t.to) {
                stack.push(t.to);
            }
        }
    }
    assert_eq!(seen.len(), fsm.states.len(), "every state must be reachable from start");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_spec;
    use crate::exec::{enumerate_executions, reflect};

    const CLAIM_CYCLE: &str = r#"
agent1 { b(a) => pub+ c(a) & pub- c(~a); }
agent2 { b(~a) => pub+ c(~a) & pub- c(a); }
initial { private1: b(a); public: ; private2: b(~a); }
"#;

    const CHAIN: &str = r#"
agent1 {
  g(a) & n(a) => pub+ a(a) & priv- n(a);
  a(b,a) & n(c) & e(c,b) => pub+ a(c,b) & priv- n(c);
}
agent2 {
  a(a) & n(b) & e(b,a) => pub+ a(b,a) & priv- n(b);
}
initial {
  private1: g(a), n(a), n(c), e(c,b);
  public: ;
  private2: n(b), e(b,a);
}
"#;

    fn build(spec: &str) -> DialogueFsm {
        let doc = parse_spec(spec).unwrap();
        build_machine(&doc.system.rules1, &doc.system.rules2, &doc.initial).unwrap()
    }

    #[test]
    fn claim_cycle_machine_is_a_three_state_loop() {
        let fsm = build(CLAIM_CYCLE);
        assert_eq!(fsm.states.len(), 3);
        assert_eq!(fsm.transitions.len(), 3);
        assert!(fsm.terminals.is_empty());
        validate(&fsm);
        // the cycle revisits the claim/counter-claim pair of states
        let from2: Vec<usize> = fsm.outgoing(2).map(|t| t.to).collect();
        assert_eq!(from2, vec![1]);
    }

    #[test]
    fn chain_machine_matches_hand_propagation() {
        let fsm = build(CHAIN);
        assert_eq!(fsm.states.len(), 6);
        assert_eq!(fsm.transitions.len(), 5);
        assert_eq!(fsm.terminals.len(), 1);
        validate(&fsm);
        let terminal = &fsm.states[*fsm.terminals.iter().next().unwrap()];
        assert_eq!(terminal.p.to_string(), "{a(a), a(b,a), a(c,b)}");
        assert_eq!(terminal.s1.to_string(), "{e(c,b), g(a)}");
        assert_eq!(terminal.s2.to_string(), "{e(b,a)}");
        // labels along the single chain
        let labels: Vec<String> = {
            let mut cur = fsm.start;
            let mut v = Vec::new();
            while let Some(t) = fsm.outgoing(cur).next() {
                v.push(t.label.to_string());
                cur = t.to;
            }
            v
        };
        assert_eq!(
            labels,
            vec![
                "({priv- n(a), pub+ a(a)}, {})",
                "({}, {priv- n(b), pub+ a(b,a)})",
                "({priv- n(c), pub+ a(c,b)}, {})",
                "({}, {})",
                "({}, {})",
            ]
        );
    }

    #[test]
    fn accepts_exactly_the_reflected_finite_executions() {
        let doc = parse_spec(CHAIN).unwrap();
        let fsm = build(CHAIN);
        let execs = enumerate_executions(&doc.system, &doc.initial, 12);
        let finite: BTreeSet<TraceString> =
            execs.iter().filter(|e| e.is_finite()).map(reflect).collect();
        assert_eq!(fsm.accepted_traces(12), finite);
        let the_trace = finite.iter().next().unwrap();
        assert!(fsm.accepts(the_trace));
        // a proper prefix ends at a non-terminal
        assert!(!fsm.accepts(&the_trace[..2]));
    }

    #[test]
    fn cycle_machine_accepts_no_finite_trace() {
        let fsm = build(CLAIM_CYCLE);
        assert!(fsm.accepted_traces(12).is_empty());
    }

    #[test]
    fn no_rules_machine_accepts_the_double_pass() {
        let fsm = build("initial { private1: p; public: ; private2: ; }");
        assert_eq!(fsm.states.len(), 3);
        assert_eq!(fsm.terminals.len(), 1);
        assert!(fsm.accepts(&[Label::empty(), Label::empty()]));
        assert!(!fsm.accepts(&[Label::empty()]));
    }

    #[test]
    fn state_cap_is_enforced() {
        let doc = parse_spec(CHAIN).unwrap();
        let err = build_machine_with(
            &doc.system.rules1,
            &doc.system.rules2,
            &doc.initial,
            &BuildOptions { max_states: Some(2), deadline: None },
        )
        .unwrap_err();
        assert!(matches!(err, BuildError::StateCapExceeded { count } if count > 2));
    }

    #[test]
    fn building_twice_is_identical() {
        let a = build(CHAIN);
        let b = build(CHAIN);
        assert_eq!(a, b);
        assert_eq!(export_json(&a), export_json(&b));
    }

    #[test]
    fn json_round_trip_is_identity() {
        for spec in [CHAIN, CLAIM_CYCLE] {
            let fsm = build(spec);
            let json = export_json(&fsm);
            let back = import_json(&json).unwrap();
            assert_eq!(back, fsm);
            assert_eq!(export_json(&back), json);
        }
    }

    #[test]
    fn json_import_rejects_bad_schema_and_indices() {
        let fsm = build(CLAIM_CYCLE);
        let json = export_json(&fsm);
        let wrong = json.replace("dialectic-fsm/v1", "dialectic-fsm/v0");
        assert!(matches!(import_json(&wrong), Err(JsonError::Schema { .. })));
        let bad = json.replace("\"start\": 0", "\"start\": 99");
        assert!(matches!(import_json(&bad), Err(JsonError::IndexOutOfRange { .. })));
    }

    #[test]
    fn dot_export_counts_nodes_and_edges() {
        let fsm = build(CLAIM_CYCLE);
        let dot = export_dot(&fsm);
        assert_eq!(dot.matches("[shape=").count(), 3);
        assert_eq!(dot.matches(" -> ").count(), 3);
        let chain = build(CHAIN);
        let dot = export_dot(&chain);
        assert_eq!(dot.matches("doublecircle").count(), 1);
    }
}
