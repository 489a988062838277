//! Randomised benchmark over generated dialogue systems.
//!
//! Each instance partitions a fixed pool of arguments between the two
//! agents, gives agent 1 a single goal argument, and draws per-agent attack
//! counts uniformly from `0..=max_attacks_per_agent` (attacker owned by the
//! agent, target owned by the opponent). Every run compiles the machine,
//! unrolls the exhaustive game tree, and backs up grounded minimax values
//! under a wall-clock deadline; a batch is summarised as one CSV row.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fsm::{build_machine_with, BuildError, BuildOptions};
use crate::game::{analyze, EndFunction, GameError, TreeOptions, UtilityFunction};
use crate::model::{
    ActionFormula, ActionOp, ActionRule, ActionUnit, Atom, ConditionFormula, ExecutionState,
    Literal, StateSet, Term,
};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub runs: usize,
    pub num_arguments: usize,
    pub max_attacks_per_agent: usize,
    pub timeout: Duration,
    pub seed: u64,
    pub threads: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            runs: 100,
            num_arguments: 20,
            max_attacks_per_agent: 20,
            timeout: Duration::from_secs(100),
            seed: 0,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// A generated two-agent system plus its drawn attack counts.
#[derive(Debug, Clone)]
pub struct Instance {
    pub rules1: Vec<ActionRule>,
    pub rules2: Vec<ActionRule>,
    pub initial: ExecutionState,
    pub attacks1: usize,
    pub attacks2: usize,
}

fn arg(i: usize) -> Term {
    Term::Const(format!("x{i}"))
}

fn atom1(pred: &str, x: &Term) -> Atom {
    Atom::new(pred, vec![x.clone()])
}

fn atom2(pred: &str, u: &Term, v: &Term) -> Atom {
    Atom::new(pred, vec![u.clone(), v.clone()])
}

fn cond(atoms: Vec<Atom>) -> ConditionFormula {
    atoms
        .into_iter()
        .map(ConditionFormula::Atom)
        .reduce(|l, r| ConditionFormula::And(Box::new(l), Box::new(r)))
        .expect("nonempty condition")
}

fn head(units: Vec<ActionUnit>) -> ActionFormula {
    units
        .into_iter()
        .map(ActionFormula::Unit)
        .reduce(|l, r| ActionFormula::And(Box::new(l), Box::new(r)))
        .expect("nonempty head")
}

fn add(atom: Atom) -> ActionUnit {
    ActionUnit::new(ActionOp::PubAdd, Literal::positive(atom))
}

fn del(atom: Atom) -> ActionUnit {
    ActionUnit::new(ActionOp::PrivDel, Literal::positive(atom))
}

/// The rule for putting forward an owned attack `(u, v)`: available once `v`
/// is public, usable once, and recorded as an `e(u,v)` capability in the
/// initial private state.
fn attack_rule(u: &Term, v: &Term) -> ActionRule {
    ActionRule {
        condition: cond(vec![atom1("a", v), atom1("n", u), atom2("e", u, v)]),
        head: head(vec![add(atom2("a", u, v)), del(atom1("n", u))]),
    }
}

/// The goal-claim rule for agent 1's goal argument `x`.
fn goal_rule(x: &Term) -> ActionRule {
    ActionRule {
        condition: cond(vec![atom1("g", x), atom1("n", x)]),
        head: head(vec![add(atom1("a", x)), del(atom1("n", x))]),
    }
}

pub fn gen_instance(
    rng: &mut ChaCha8Rng,
    num_arguments: usize,
    max_attacks_per_agent: usize,
) -> Instance {
    assert!(num_arguments >= 2, "need at least one argument per agent");
    let mut pool: Vec<usize> = (0..num_arguments).collect();
    pool.shuffle(rng);
    let split = rng.gen_range(1..num_arguments);
    let (own1, own2) = pool.split_at(split);
    let goal = arg(own1[rng.gen_range(0..own1.len())]);

    let draw_attacks = |rng: &mut ChaCha8Rng, from: &[usize], to: &[usize]| {
        let cap = from.len() * to.len();
        let count = rng.gen_range(0..=max_attacks_per_agent).min(cap);
        let mut attacks = std::collections::BTreeSet::new();
        while attacks.len() < count {
            let u = from[rng.gen_range(0..from.len())];
            let v = to[rng.gen_range(0..to.len())];
            attacks.insert((arg(u), arg(v)));
        }
        attacks
    };
    let attacks1 = draw_attacks(rng, own1, own2);
    let attacks2 = draw_attacks(rng, own2, own1);

    let private = |own: &[usize], attacks: &std::collections::BTreeSet<(Term, Term)>| {
        let mut s = StateSet::new();
        for &i in own {
            s.0.insert(Literal::positive(atom1("n", &arg(i))));
        }
        for (u, v) in attacks {
            s.0.insert(Literal::positive(atom2("e", u, v)));
        }
        s
    };
    let mut s1 = private(own1, &attacks1);
    s1.0.insert(Literal::positive(atom1("g", &goal)));
    let s2 = private(own2, &attacks2);

    let mut rules1 = vec![goal_rule(&goal)];
    rules1.extend(attacks1.iter().map(|(u, v)| attack_rule(u, v)));
    let rules2: Vec<ActionRule> = attacks2.iter().map(|(u, v)| attack_rule(u, v)).collect();

    Instance {
        rules1,
        rules2,
        initial: ExecutionState::initial(s1, StateSet::new(), s2),
        attacks1: attacks1.len(),
        attacks2: attacks2.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Completed,
    TimedOut,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub run: usize,
    pub attacks1: usize,
    pub attacks2: usize,
    pub fsm_states: usize,
    pub fsm_transitions: usize,
    pub tree_nodes: usize,
    pub runtime: Duration,
    pub outcome: RunOutcome,
    /// The exhaustive unroll failed (a cycle) and a depth-cut tree was used.
    pub fixed_depth_fallback: bool,
}

/// One summary row. Size and time averages cover completed runs only;
/// `avg_attacks` is the per-agent attack count averaged over every run.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub avg_attacks: f64,
    pub avg_fsm_nodes: f64,
    pub avg_fsm_transitions: f64,
    pub avg_tree_nodes: f64,
    pub avg_runtime_s: f64,
    pub median_runtime_s: f64,
    pub timeouts: usize,
    pub seed: u64,
}

pub const CSV_HEADER: &str =
    "avg_attacks,avg_fsm_nodes,avg_fsm_transitions,avg_tree_nodes,avg_runtime_s,median_runtime_s,timeouts,seed";

impl BenchRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{:.3},{:.3},{:.3},{:.3},{:.6},{:.6},{},{}",
            self.avg_attacks,
            self.avg_fsm_nodes,
            self.avg_fsm_transitions,
            self.avg_tree_nodes,
            self.avg_runtime_s,
            self.median_runtime_s,
            self.timeouts,
            self.seed
        )
    }
}

fn run_one(config: &BenchConfig, run: usize) -> RunResult {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(run as u64 + 1);
    let instance = gen_instance(&mut rng, config.num_arguments, config.max_attacks_per_agent);
    let start = Instant::now();
    let deadline = start + config.timeout;
    let mut result = RunResult {
        run,
        attacks1: instance.attacks1,
        attacks2: instance.attacks2,
        fsm_states: 0,
        fsm_transitions: 0,
        tree_nodes: 0,
        runtime: Duration::ZERO,
        outcome: RunOutcome::TimedOut,
        fixed_depth_fallback: false,
    };
    let options = BuildOptions { max_states: None, deadline: Some(deadline) };
    let fsm = match build_machine_with(&instance.rules1, &instance.rules2, &instance.initial, &options)
    {
        Ok(fsm) => fsm,
        Err(BuildError::Timeout) | Err(BuildError::StateCapExceeded { .. }) => {
            result.runtime = start.elapsed();
            return result;
        }
    };
    result.fsm_states = fsm.states.len();
    result.fsm_transitions = fsm.transitions.len();
    let tree_options = TreeOptions { max_nodes: None, deadline: Some(deadline) };
    let mut tree =
        analyze(&fsm, EndFunction::Exhaustive, UtilityFunction::Grounded, &tree_options);
    if let Err(GameError::NonTerminating { .. }) = tree {
        // generated systems only delete from private states, so cycles are
        // not expected; cut at twice the longest possible move count if one
        // ever appears
        result.fixed_depth_fallback = true;
        let depth = 2 * (config.num_arguments + 2 * config.max_attacks_per_agent) + 3;
        tree = analyze(
            &fsm,
            EndFunction::FixedDepth(depth),
            UtilityFunction::Grounded,
            &tree_options,
        );
    }
    result.runtime = start.elapsed();
    match tree {
        Ok(root) => {
            result.tree_nodes = root.node_count();
            result.outcome = RunOutcome::Completed;
        }
        Err(_) => {
            result.outcome = RunOutcome::TimedOut;
        }
    }
    result
}

/// Run the whole batch on a small worker pool and aggregate.
pub fn run_benchmark(config: &BenchConfig) -> (BenchRow, Vec<RunResult>) {
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::with_capacity(config.runs));
    let workers = config.threads.clamp(1, config.runs.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let run = next.fetch_add(1, Ordering::Relaxed);
                if run >= config.runs {
                    break;
                }
                let r = run_one(config, run);
                results.lock().unwrap().push(r);
            });
        }
    });
    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|r| r.run);
    (summarise(config, &results), results)
}

fn summarise(config: &BenchConfig, results: &[RunResult]) -> BenchRow {
    let total = results.len().max(1) as f64;
    let avg_attacks =
        results.iter().map(|r| (r.attacks1 + r.attacks2) as f64 / 2.0).sum::<f64>() / total;
    let completed: Vec<&RunResult> =
        results.iter().filter(|r| r.outcome == RunOutcome::Completed).collect();
    let done = completed.len().max(1) as f64;
    let mean = |f: &dyn Fn(&RunResult) -> f64| completed.iter().map(|r| f(r)).sum::<f64>() / done;
    let mut times: Vec<f64> = completed.iter().map(|r| r.runtime.as_secs_f64()).collect();
    times.sort_by(f64::total_cmp);
    let median = match times.len() {
        0 => 0.0,
        n if n % 2 == 1 => times[n / 2],
        n => (times[n / 2 - 1] + times[n / 2]) / 2.0,
    };
    BenchRow {
        avg_attacks,
        avg_fsm_nodes: mean(&|r| r.fsm_states as f64),
        avg_fsm_transitions: mean(&|r| r.fsm_transitions as f64),
        avg_tree_nodes: mean(&|r| r.tree_nodes as f64),
        avg_runtime_s: mean(&|r| r.runtime.as_secs_f64()),
        median_runtime_s: median,
        timeouts: results.len() - completed.len(),
        seed: config.seed,
    }
}

/// One JSON object per run, newline separated.
pub fn jsonl(results: &[RunResult]) -> String {
    let mut out = String::new();
    for r in results {
        let line = serde_json::json!({
            "run": r.run,
            "attacks1": r.attacks1,
            "attacks2": r.attacks2,
            "fsm_states": r.fsm_states,
            "fsm_transitions": r.fsm_transitions,
            "tree_nodes": r.tree_nodes,
            "runtime_s": r.runtime.as_secs_f64(),
            "outcome": match r.outcome {
                RunOutcome::Completed => "completed",
                RunOutcome::TimedOut => "timeout",
            },
            "fixed_depth_fallback": r.fixed_depth_fallback,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::enumerate_executions;
    use crate::model::System;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn generated_instances_respect_the_schema() {
        for seed in 0..30 {
            let mut r = rng(seed);
            let inst = gen_instance(&mut r, 8, 5);
            assert_eq!(inst.rules1.len(), 1 + inst.attacks1);
            assert_eq!(inst.rules2.len(), inst.attacks2);
            assert!(inst.attacks1 <= 5 && inst.attacks2 <= 5);
            // exactly one goal fact, in agent 1's private state
            let goals =
                inst.initial.s1.iter().filter(|l| l.atom.predicate == "g").count();
            assert_eq!(goals, 1);
            assert!(inst.initial.s2.iter().all(|l| l.atom.predicate != "g"));
            assert!(inst.initial.p.is_empty());
            // attackers owned, targets owned by the opponent
            let n1: Vec<String> = inst
                .initial
                .s1
                .iter()
                .filter(|l| l.atom.predicate == "n")
                .map(|l| l.atom.args[0].to_string())
                .collect();
            for l in inst.initial.s1.iter().filter(|l| l.atom.predicate == "e") {
                assert!(n1.contains(&l.atom.args[0].to_string()));
                assert!(!n1.contains(&l.atom.args[1].to_string()));
            }
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed_and_stream() {
        let a = gen_instance(&mut rng(7), 10, 6);
        let b = gen_instance(&mut rng(7), 10, 6);
        assert_eq!(a.initial, b.initial);
        assert_eq!(a.rules1, b.rules1);
        let c = gen_instance(&mut rng(8), 10, 6);
        assert!(a.initial != c.initial || a.rules1 != c.rules1);
    }

    #[test]
    fn generated_executions_always_terminate() {
        // moves strictly consume n-facts, so every dialogue is finite
        for seed in 0..10 {
            let mut r = rng(seed);
            let inst = gen_instance(&mut r, 5, 3);
            let system = System {
                rules1: inst.rules1.clone(),
                rules2: inst.rules2.clone(),
                initials: vec![inst.initial.clone()],
            };
            let budget = 2 * 5 + 2 * 3 + 4;
            for e in enumerate_executions(&system, &inst.initial, budget) {
                assert!(e.is_finite(), "seed {seed} produced a truncated execution");
            }
        }
    }

    #[test]
    fn small_batch_aggregates_cleanly() {
        let config = BenchConfig {
            runs: 12,
            num_arguments: 6,
            max_attacks_per_agent: 4,
            timeout: Duration::from_secs(30),
            seed: 42,
            threads: 3,
        };
        let (row, results) = run_benchmark(&config);
        assert_eq!(results.len(), 12);
        assert_eq!(row.timeouts, 0);
        assert!(results.iter().all(|r| !r.fixed_depth_fallback));
        assert!(row.avg_fsm_nodes >= 3.0); // even a no-move dialogue has 3 states
        assert!(row.avg_tree_nodes >= 1.0);
        assert!(row.avg_attacks <= 4.0);
        assert!(row.median_runtime_s <= row.avg_runtime_s * 12.0 + 1.0);
        // the summary row is what lands in the CSV
        let line = row.csv_row();
        assert_eq!(line.split(',').count(), CSV_HEADER.split(',').count());
        assert!(line.ends_with(",0,42"));
        let log = jsonl(&results);
        assert_eq!(log.lines().count(), 12);
    }

    #[test]
    fn batches_are_reproducible() {
        let config = BenchConfig {
            runs: 6,
            num_arguments: 6,
            max_attacks_per_agent: 3,
            timeout: Duration::from_secs(30),
            seed: 9,
            threads: 2,
        };
        let (row_a, a) = run_benchmark(&config);
        let (row_b, b) = run_benchmark(&config);
        assert_eq!(row_a.avg_attacks, row_b.avg_attacks);
        assert_eq!(row_a.avg_fsm_nodes, row_b.avg_fsm_nodes);
        assert_eq!(row_a.timeouts, row_b.timeouts);
        let sizes = |rs: &[RunResult]| -> Vec<(usize, usize, usize)> {
            rs.iter().map(|r| (r.fsm_states, r.fsm_transitions, r.tree_nodes)).collect()
        };
        assert_eq!(sizes(&a), sizes(&b));
    }
}
