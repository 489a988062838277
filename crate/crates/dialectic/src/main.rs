//! Command-line front end: validate dialogue specifications, compile them to
//! machines, run the game analysis, enumerate executions, compute grounded
//! extensions of standalone graphs, and drive the benchmark.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 analysis error,
//! 3 resource cap exceeded.

use std::path::PathBuf;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use dialectic::af::{grounded_fixpoint, parse_graph};
use dialectic::bench::{run_benchmark, BenchConfig, CSV_HEADER};
use dialectic::dsl::{parse_spec, serialize_spec, SpecDocument};
use dialectic::exec::enumerate_executions;
use dialectic::fsm::{build_machine_with, export_dot, export_json, BuildError, BuildOptions};
use dialectic::game::{
    analyze, export_tree_json, EndFunction, GameError, TreeOptions, UtilityFunction,
};

const EXIT_USAGE: i32 = 1;
const EXIT_ANALYSIS: i32 = 2;
const EXIT_RESOURCE: i32 = 3;

#[derive(Parser)]
#[command(name = "dialectic", version, about = "Dialogue machines and their game analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a specification and echo its canonical form
    Check { spec: PathBuf },
    /// Compile a specification into its dialogue machine
    BuildFsm(BuildFsmArgs),
    /// Unroll the machine into a game tree and print the root minimax value
    Analyze(AnalyzeArgs),
    /// List the reflected traces of the bounded execution enumeration
    Enumerate {
        spec: PathBuf,
        /// Bound on the number of action steps per execution
        #[arg(long, default_value_t = 12)]
        max_steps: usize,
    },
    /// Print the grounded extension of a standalone argument graph
    Grounded { graph: PathBuf },
    /// Run a randomised benchmark batch and print one summary CSV row
    Bench(BenchArgs),
}

#[derive(Args)]
struct BuildFsmArgs {
    spec: PathBuf,
    /// Write the machine as a DOT digraph
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write the machine as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    /// Abort once more than this many states are constructed
    #[arg(long)]
    max_states: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    spec: PathBuf,
    /// When a branch ends: exhaustive, norepeat, or depth:N
    #[arg(long, default_value = "exhaustive", value_parser = parse_end)]
    end: EndFunction,
    /// Leaf scoring: grounded or weighted
    #[arg(long, default_value = "grounded", value_parser = parse_utility)]
    utility: UtilityFunction,
    /// Write the valued tree as JSON
    #[arg(long)]
    tree_out: Option<PathBuf>,
    /// Abort once more than this many tree nodes are constructed
    #[arg(long)]
    max_nodes: Option<usize>,
}

#[derive(Args)]
struct BenchArgs {
    /// Number of generated instances
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Size of the argument pool shared by the two agents
    #[arg(long = "args", default_value_t = 20)]
    num_args: usize,
    /// Upper bound of the per-agent uniform attack-count draw
    #[arg(long, default_value_t = 20)]
    max_attacks: usize,
    /// Per-run wall-clock timeout in seconds
    #[arg(long, default_value_t = 100)]
    timeout: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads
    #[arg(long, default_value_t = 0, help = "Worker threads (0 = all cores)")]
    jobs: usize,
    /// Also write header + row to this CSV file
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write a JSON-lines per-run log
    #[arg(long)]
    log: Option<PathBuf>,
}

fn parse_end(s: &str) -> Result<EndFunction, String> {
    match s {
        "exhaustive" => Ok(EndFunction::Exhaustive),
        "norepeat" => Ok(EndFunction::NonRepetitive),
        _ => match s.strip_prefix("depth:").map(str::parse::<usize>) {
            Some(Ok(d)) if d >= 1 => Ok(EndFunction::FixedDepth(d)),
            _ => Err(format!("expected 'exhaustive', 'norepeat', or 'depth:N', found {s:?}")),
        },
    }
}

fn parse_utility(s: &str) -> Result<UtilityFunction, String> {
    match s {
        "grounded" => Ok(UtilityFunction::Grounded),
        "weighted" => Ok(UtilityFunction::WeightedGrounded),
        _ => Err(format!("expected 'grounded' or 'weighted', found {s:?}")),
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprint!("{e}");
            return EXIT_USAGE;
        }
    };
    match cli.command {
        Command::Check { spec } => check(&spec),
        Command::BuildFsm(args) => build_fsm(&args),
        Command::Analyze(args) => run_analyze(&args),
        Command::Enumerate { spec, max_steps } => enumerate(&spec, max_steps),
        Command::Grounded { graph } => grounded(&graph),
        Command::Bench(args) => bench(&args),
    }
}

fn fail(code: i32, message: impl std::fmt::Display) -> i32 {
    eprintln!("error: {message}");
    code
}

fn load_spec(path: &PathBuf) -> Result<SpecDocument, i32> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))?;
    parse_spec(&text).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn write_file(path: &PathBuf, content: &str) -> Result<(), i32> {
    std::fs::write(path, content)
        .map_err(|e| fail(EXIT_USAGE, format!("cannot write {}: {e}", path.display())))
}

fn check(path: &PathBuf) -> i32 {
    match load_spec(path) {
        Ok(doc) => {
            print!("{}", serialize_spec(&doc));
            0
        }
        Err(code) => code,
    }
}

fn build_fsm(args: &BuildFsmArgs) -> i32 {
    let doc = match load_spec(&args.spec) {
        Ok(doc) => doc,
        Err(code) => return code,
    };
    let options = BuildOptions { max_states: args.max_states, deadline: None };
    let fsm =
        match build_machine_with(&doc.system.rules1, &doc.system.rules2, &doc.initial, &options) {
            Ok(fsm) => fsm,
            Err(e @ BuildError::StateCapExceeded { .. }) => return fail(EXIT_RESOURCE, e),
            Err(e) => return fail(EXIT_ANALYSIS, e),
        };
    if let Some(path) = &args.dot {
        if let Err(code) = write_file(path, &export_dot(&fsm)) {
            return code;
        }
    }
    if let Some(path) = &args.json {
        if let Err(code) = write_file(path, &export_json(&fsm)) {
            return code;
        }
    }
    println!("{}", fsm.summary());
    0
}

fn run_analyze(args: &AnalyzeArgs) -> i32 {
    let doc = match load_spec(&args.spec) {
        Ok(doc) => doc,
        Err(code) => return code,
    };
    let fsm = match dialectic::fsm::build_machine(&doc.system.rules1, &doc.system.rules2, &doc.initial)
    {
        Ok(fsm) => fsm,
        Err(e) => return fail(EXIT_ANALYSIS, e),
    };
    let options = TreeOptions { max_nodes: args.max_nodes, deadline: None };
    let root = match analyze(&fsm, args.end, args.utility, &options) {
        Ok(root) => root,
        Err(e @ GameError::NodeCapExceeded { .. }) => return fail(EXIT_RESOURCE, e),
        Err(e) => return fail(EXIT_ANALYSIS, e),
    };
    if let Some(path) = &args.tree_out {
        if let Err(code) = write_file(path, &export_tree_json(&root)) {
            return code;
        }
    }
    println!("root={}", root.value);
    0
}

fn enumerate(path: &PathBuf, max_steps: usize) -> i32 {
    if max_steps < 2 {
        return fail(EXIT_USAGE, "--max-steps must be at least 2");
    }
    let doc = match load_spec(path) {
        Ok(doc) => doc,
        Err(code) => return code,
    };
    for e in enumerate_executions(&doc.system, &doc.initial, max_steps) {
        let status = if e.is_finite() { "finite" } else { "truncated" };
        let labels: Vec<String> =
            dialectic::exec::reflect(&e).iter().map(|l| l.to_string()).collect();
        println!("{status} {}", labels.join(" "));
    }
    0
}

fn grounded(path: &PathBuf) -> i32 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_USAGE, format!("cannot read {}: {e}", path.display())),
    };
    let graph = match parse_graph(&text) {
        Ok(g) => g,
        Err(e) => return fail(EXIT_USAGE, format!("{}: {e}", path.display())),
    };
    let members: Vec<String> =
        grounded_fixpoint(&graph).iter().map(|t| t.to_string()).collect();
    println!("{}", members.join(" "));
    0
}

fn bench(args: &BenchArgs) -> i32 {
    let config = BenchConfig {
        runs: args.runs,
        num_arguments: args.num_args,
        max_attacks_per_agent: args.max_attacks,
        timeout: Duration::from_secs(args.timeout),
        seed: args.seed,
        threads: if args.jobs == 0 { BenchConfig::default().threads } else { args.jobs },
    };
    if config.runs == 0 {
        return fail(EXIT_USAGE, "--runs must be at least 1");
    }
    if config.num_arguments < 2 {
        return fail(EXIT_USAGE, "--args must be at least 2");
    }
    let (row, results) = run_benchmark(&config);
    let table = format!("{CSV_HEADER}\n{}\n", row.csv_row());
    print!("{table}");
    if let Some(path) = &args.csv {
        if let Err(code) = write_file(path, &table) {
            return code;
        }
    }
    if let Some(path) = &args.log {
        if let Err(code) = write_file(path, &dialectic::bench::jsonl(&results)) {
            return code;
        }
    }
    0
}
