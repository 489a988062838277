//! Bounded enumeration of the executions a system generates from an initial
//! state. This is an independent route to the dialogue language: the machine
//! builder in [`crate::fsm`] is checked against it.

use crate::model::{
    apply_actions, candidate_actions, ActionSet, ExecutionState, Label, System, TraceString,
};

/// Whether an enumerated execution actually terminated or merely hit the
/// step budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Termination {
    /// Both agents passed on consecutive steps; the execution is complete.
    Finite,
    /// The step budget ran out first; the states are a proper prefix.
    TruncatedPrefix,
}

/// A time series of execution states. `states[0]` is the initial state and
/// carries empty action sets; `states[n]` for `n >= 1` carries the actions
/// chosen at step `n`, which produce the contents of `states[n + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Execution {
    pub states: Vec<ExecutionState>,
    pub terminal: Termination,
}

impl Execution {
    pub fn is_finite(&self) -> bool {
        self.terminal == Termination::Finite
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// The string of action-pair letters of an execution, one per step from 1.
pub fn reflect(e: &Execution) -> TraceString {
    e.states[1..]
        .iter()
        .map(|st| Label { a1: st.a1.clone(), a2: st.a2.clone() })
        .collect()
}

/// Depth-first enumeration of every execution generated from `initial`,
/// truncated at `max_steps` action steps.
///
/// Turn taking: agent 1 moves at odd steps, agent 2 at even steps; the mover
/// picks any candidate action set and passes only when no rule fires. An
/// execution is finite once two consecutive steps carry empty actions.
pub fn enumerate_executions(
    system: &System,
    initial: &ExecutionState,
    max_steps: usize,
) -> Vec<Execution> {
    assert!(max_steps >= 2, "max_steps must be at least 2");
    assert!(initial.has_empty_actions(), "initial state must have empty action sets");
    let mut out = Vec::new();
    let prefix = vec![initial.clone()];
    extend(system, prefix, max_steps, &mut out);
    out.sort();
    out
}

fn extend(system: &System, prefix: Vec<ExecutionState>, max_steps: usize, out: &mut Vec<Execution>) {
    let n = prefix.len(); // index of the step being chosen
    let current = apply_actions(
        prefix.last().unwrap(),
        &prefix.last().unwrap().a1.clone(),
        &prefix.last().unwrap().a2.clone(),
    );
    // current now holds the contents for index n; its action sets are stale
    let agent: u8 = if n % 2 == 1 { 1 } else { 2 };
    let (private, public) = match agent {
        1 => (&current.s1, &current.p),
        _ => (&current.s2, &current.p),
    };
    let candidates = candidate_actions(system.rules_for(agent), private, public);
    for actions in candidates {
        let step = ExecutionState {
            s1: current.s1.clone(),
            p: current.p.clone(),
            s2: current.s2.clone(),
            a1: if agent == 1 { actions.clone() } else { ActionSet::new() },
            a2: if agent == 2 { actions.clone() } else { ActionSet::new() },
        };
        let prev_empty = n >= 2 && prefix[n - 1].has_empty_actions();
        let this_empty = actions.is_empty();
        let mut states = prefix.clone();
        states.push(step);
        if prev_empty && this_empty {
            out.push(Execution { states, terminal: Termination::Finite });
        } else if n == max_steps {
            out.push(Execution { states, terminal: Termination::TruncatedPrefix });
        } else {
            extend(system, states, max_steps, out);
        }
    }
}
