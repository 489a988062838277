//! Ground object model and single-step semantics for two-agent executable
//! logic: literals and states, condition and action formulae, rule firing,
//! minimal satisfaction, and state propagation.

use std::collections::BTreeSet;
use std::fmt;

/// A ground term: a constant, or an object-level negation of a constant
/// (the `~a` inside `c(~a)`). Object negation is part of the term, not a
/// connective; `c(a)` and `c(~a)` are unrelated atoms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(String),
    Neg(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Neg(c) => write!(f, "~{c}"),
        }
    }
}

/// A ground atom, e.g. `a(b,a)` or `g(x)`. Arity zero is written without
/// parentheses.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom { predicate: predicate.into(), args }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, t) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{t}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

/// A ground literal: an atom or its classical negation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub polarity: Polarity,
    pub atom: Atom,
}

impl Literal {
    pub fn positive(atom: Atom) -> Self {
        Literal { polarity: Polarity::Positive, atom }
    }

    pub fn negative(atom: Atom) -> Self {
        Literal { polarity: Polarity::Negative, atom }
    }

    pub fn complement(&self) -> Self {
        Literal {
            polarity: match self.polarity {
                Polarity::Positive => Polarity::Negative,
                Polarity::Negative => Polarity::Positive,
            },
            atom: self.atom.clone(),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.polarity == Polarity::Negative {
            write!(f, "!")?;
        }
        write!(f, "{}", self.atom)
    }
}

/// A duplicate-free set of ground literals. May contain a complementary pair;
/// consistency is queryable, not enforced.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateSet(pub BTreeSet<Literal>);

impl StateSet {
    pub fn new() -> Self {
        StateSet(BTreeSet::new())
    }

    pub fn from_literals(lits: impl IntoIterator<Item = Literal>) -> Self {
        StateSet(lits.into_iter().collect())
    }

    pub fn contains(&self, lit: &Literal) -> bool {
        self.0.contains(lit)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Literal> {
        self.0.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        StateSet(self.0.union(&other.0).cloned().collect())
    }
}

impl fmt::Display for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

/// Condition side of a rule: a classical formula over ground atoms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConditionFormula {
    Atom(Atom),
    Not(Box<ConditionFormula>),
    And(Box<ConditionFormula>, Box<ConditionFormula>),
    Or(Box<ConditionFormula>, Box<ConditionFormula>),
}

impl ConditionFormula {
    /// All atoms occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<&Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut BTreeSet<&'a Atom>) {
        match self {
            ConditionFormula::Atom(a) => {
                out.insert(a);
            }
            ConditionFormula::Not(f) => f.collect_atoms(out),
            ConditionFormula::And(l, r) | ConditionFormula::Or(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    /// Evaluate under a total assignment of the formula's atoms.
    pub fn eval(&self, assignment: &dyn Fn(&Atom) -> bool) -> bool {
        match self {
            ConditionFormula::Atom(a) => assignment(a),
            ConditionFormula::Not(f) => !f.eval(assignment),
            ConditionFormula::And(l, r) => l.eval(assignment) && r.eval(assignment),
            ConditionFormula::Or(l, r) => l.eval(assignment) || r.eval(assignment),
        }
    }
}

/// Where an action unit applies and whether it adds or deletes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionOp {
    /// Add to the acting agent's next private state.
    PrivAdd,
    /// Delete from the acting agent's next private state.
    PrivDel,
    /// Add to the next public state.
    PubAdd,
    /// Delete from the next public state.
    PubDel,
}

impl fmt::Display for ActionOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ActionOp::PrivAdd => "priv+",
            ActionOp::PrivDel => "priv-",
            ActionOp::PubAdd => "pub+",
            ActionOp::PubDel => "pub-",
        };
        write!(f, "{s}")
    }
}

/// An atomic update instruction over a ground literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionUnit {
    pub op: ActionOp,
    pub literal: Literal,
}

impl ActionUnit {
    pub fn new(op: ActionOp, literal: Literal) -> Self {
        ActionUnit { op, literal }
    }
}

impl fmt::Display for ActionUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.op, self.literal)
    }
}

/// Head side of a rule: action units combined with `and`/`or` (no negation).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionFormula {
    Unit(ActionUnit),
    And(Box<ActionFormula>, Box<ActionFormula>),
    Or(Box<ActionFormula>, Box<ActionFormula>),
}

impl ActionFormula {
    pub fn units(&self) -> BTreeSet<&ActionUnit> {
        let mut out = BTreeSet::new();
        self.collect_units(&mut out);
        out
    }

    fn collect_units<'a>(&'a self, out: &mut BTreeSet<&'a ActionUnit>) {
        match self {
            ActionFormula::Unit(u) => {
                out.insert(u);
            }
            ActionFormula::And(l, r) | ActionFormula::Or(l, r) => {
                l.collect_units(out);
                r.collect_units(out);
            }
        }
    }
}

/// A duplicate-free set of action units; the value of one agent's move.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionSet(pub BTreeSet<ActionUnit>);

impl ActionSet {
    pub fn new() -> Self {
        ActionSet(BTreeSet::new())
    }

    pub fn from_units(units: impl IntoIterator<Item = ActionUnit>) -> Self {
        ActionSet(units.into_iter().collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ActionUnit> {
        self.0.iter()
    }

    pub fn is_subset(&self, other: &ActionSet) -> bool {
        self.0.is_subset(&other.0)
    }
}

impl fmt::Display for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, u) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{u}")?;
        }
        write!(f, "}}")
    }
}

/// `condition => head`; fires when the mover's private state plus the public
/// state entails the condition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionRule {
    pub condition: ConditionFormula,
    pub head: ActionFormula,
}

/// One row of an execution: the three state components plus the action sets
/// chosen at this step.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExecutionState {
    pub s1: StateSet,
    pub a1: ActionSet,
    pub p: StateSet,
    pub a2: ActionSet,
    pub s2: StateSet,
}

impl ExecutionState {
    pub fn initial(s1: StateSet, p: StateSet, s2: StateSet) -> Self {
        ExecutionState { s1, a1: ActionSet::new(), p, a2: ActionSet::new(), s2 }
    }

    pub fn has_empty_actions(&self) -> bool {
        self.a1.is_empty() && self.a2.is_empty()
    }
}

/// The rules of both agents plus the admissible initial states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct System {
    pub rules1: Vec<ActionRule>,
    pub rules2: Vec<ActionRule>,
    pub initials: Vec<ExecutionState>,
}

impl System {
    pub fn rules_for(&self, agent: u8) -> &[ActionRule] {
        match agent {
            1 => &self.rules1,
            2 => &self.rules2,
            _ => panic!("agent must be 1 or 2"),
        }
    }
}

/// One letter of a trace: the pair of action sets taken at a step. In a
/// turn-taking system at most one component is nonempty.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub a1: ActionSet,
    pub a2: ActionSet,
}

impl Label {
    pub fn empty() -> Self {
        Label::default()
    }

    pub fn by_agent(agent: u8, actions: ActionSet) -> Self {
        match agent {
            1 => Label { a1: actions, a2: ActionSet::new() },
            2 => Label { a1: ActionSet::new(), a2: actions },
            _ => panic!("agent must be 1 or 2"),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.a1.is_empty() && self.a2.is_empty()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a1, self.a2)
    }
}

/// The string of action-pair letters read off a finite execution.
pub type TraceString = Vec<Label>;

/// False iff the state contains some atom in both polarities.
pub fn is_consistent(state: &StateSet) -> bool {
    state.iter().all(|l| !state.contains(&l.complement()))
}

/// Classical entailment of a condition by a literal set.
///
/// The state induces a partial assignment on the formula's atoms (present
/// positively: true; present negatively: false; otherwise unconstrained);
/// the formula must hold under every completion. An inconsistent state
/// entails everything.
pub fn entails(state: &StateSet, formula: &ConditionFormula) -> bool {
    if !is_consistent(state) {
        return true;
    }
    let atoms: Vec<&Atom> = formula.atoms().into_iter().collect();
    let mut forced: Vec<Option<bool>> = Vec::with_capacity(atoms.len());
    let mut free: Vec<usize> = Vec::new();
    for (i, atom) in atoms.iter().enumerate() {
        let pos = state.contains(&Literal::positive((*atom).clone()));
        let neg = state.contains(&Literal::negative((*atom).clone()));
        // state is consistent here, so not both
        if pos {
            forced.push(Some(true));
        } else if neg {
            forced.push(Some(false));
        } else {
            forced.push(None);
            free.push(i);
        }
    }
    // every completion of the partial assignment must satisfy the formula
    for mask in 0u64..(1u64 << free.len()) {
        let mut values = forced.clone();
        for (bit, &idx) in free.iter().enumerate() {
            values[idx] = Some(mask >> bit & 1 == 1);
        }
        let assign = |a: &Atom| -> bool {
            let i = atoms.iter().position(|x| *x == a).expect("atom of formula");
            values[i].unwrap()
        };
        if !formula.eval(&assign) {
            return false;
        }
    }
    true
}

/// Recursive satisfaction of an action formula by an action set: a unit holds
/// iff it is a member, `and` iff both sides hold, `or` iff either does.
pub fn satisfies(actions: &ActionSet, formula: &ActionFormula) -> bool {
    match formula {
        ActionFormula::Unit(u) => actions.0.contains(u),
        ActionFormula::And(l, r) => satisfies(actions, l) && satisfies(actions, r),
        ActionFormula::Or(l, r) => satisfies(actions, l) || satisfies(actions, r),
    }
}

/// The subset-minimal action sets satisfying a head, via distribution into
/// disjunctive normal form followed by antichain pruning.
pub fn minimal_disjuncts(head: &ActionFormula) -> BTreeSet<ActionSet> {
    let disjuncts = dnf(head);
    let mut out: BTreeSet<ActionSet> = BTreeSet::new();
    for d in &disjuncts {
        if disjuncts.iter().any(|other| other.0.is_subset(&d.0) && other.0 != d.0) {
            continue;
        }
        out.insert(d.clone());
    }
    out
}

fn dnf(formula: &ActionFormula) -> Vec<ActionSet> {
    match formula {
        ActionFormula::Unit(u) => vec![ActionSet::from_units([u.clone()])],
        ActionFormula::Or(l, r) => {
            let mut v = dnf(l);
            v.extend(dnf(r));
            v
        }
        ActionFormula::And(l, r) => {
            let left = dnf(l);
            let right = dnf(r);
            let mut v = Vec::with_capacity(left.len() * right.len());
            for a in &left {
                for b in &right {
                    v.push(ActionSet(a.0.union(&b.0).cloned().collect()));
                }
            }
            v
        }
    }
}

/// Heads of all rules whose condition is entailed by `private ∪ public`, in
/// declaration order, duplicates preserved.
pub fn fired_heads<'a>(
    rules: &'a [ActionRule],
    private: &StateSet,
    public: &StateSet,
) -> Vec<&'a ActionFormula> {
    let union = private.union(public);
    rules
        .iter()
        .filter(|r| entails(&union, &r.condition))
        .map(|r| &r.head)
        .collect()
}

/// All moves available to an agent: the union over fired heads of their
/// minimal satisfying action sets. When nothing fires the only move is the
/// forced pass, the empty action set.
pub fn candidate_actions(
    rules: &[ActionRule],
    private: &StateSet,
    public: &StateSet,
) -> BTreeSet<ActionSet> {
    let fired = fired_heads(rules, private, public);
    if fired.is_empty() {
        return BTreeSet::from([ActionSet::new()]);
    }
    let mut out = BTreeSet::new();
    for head in fired {
        out.extend(minimal_disjuncts(head));
    }
    out
}

fn update(state: &StateSet, actions: &ActionSet, del: ActionOp, add: ActionOp) -> StateSet {
    let mut next = state.0.clone();
    for u in actions.iter() {
        if u.op == del {
            next.remove(&u.literal);
        }
    }
    for u in actions.iter() {
        if u.op == add {
            next.insert(u.literal.clone());
        }
    }
    StateSet(next)
}

/// Propagate one step: each agent's next private state from its own actions,
/// the next public state from the union of both. Deletes apply before adds,
/// so an add beats a delete of the same literal.
pub fn apply_actions(state: &ExecutionState, a1: &ActionSet, a2: &ActionSet) -> ExecutionState {
    let joint = ActionSet(a1.0.union(&a2.0).cloned().collect());
    ExecutionState {
        s1: update(&state.s1, a1, ActionOp::PrivDel, ActionOp::PrivAdd),
        p: update(&state.p, &joint, ActionOp::PubDel, ActionOp::PubAdd),
        s2: update(&state.s2, a2, ActionOp::PrivDel, ActionOp::PrivAdd),
        a1: a1.clone(),
        a2: a2.clone(),
    }
}
