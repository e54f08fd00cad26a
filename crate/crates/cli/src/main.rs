mod bench;
mod maps;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use shortcut_csp::backdoor::{self, Backdoor, EvalOptions};
use shortcut_csp::gadgets::{self, DoorSpec, Graph, HittingSetInstance, PlantedDoor, PlantedSpec};
use shortcut_csp::language::{Language, RelationSpec};
use shortcut_csp::model::Instance;
use shortcut_csp::oracle::{AClosureSolver, Oracle, OracleSolver, TargetSolver};
use shortcut_csp::sidedoor::{self, Sidedoor, SidedoorOptions};
use shortcut_csp::simpmap::SimplificationMap;
use shortcut_csp::Error;

use report::Report;

pub const EXIT_SAT: u8 = 0;
pub const EXIT_UNSAT: u8 = 1;
pub const EXIT_NONE: u8 = 2;
pub const EXIT_ERROR: u8 = 3;
pub const EXIT_USAGE: u8 = 4;

#[derive(Parser)]
#[command(name = "shortcut-csp", version, about = "Backdoor and sidedoor solving for qualitative constraint instances")]
struct Cli {
    /// Worker threads (1 disables parallel evaluation).
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Emit one JSON object per line instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Add wall-clock elapsed time to reports.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide an instance.
    Solve(SolveArgs),
    /// Search for a backdoor or sidedoor within a budget.
    Detect(DetectArgs),
    /// Compute a simplification or branching map.
    ComputeMap(ComputeMapArgs),
    /// Generate instances.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run a seeded benchmark suite and check counters against their bounds.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Strategy {
    Oracle,
    Backdoor,
    Sidedoor,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    Oracle,
    Aclosure,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "oracle")]
    strategy: Strategy,
    /// Backdoor or sidedoor file.
    #[arg(long)]
    door: Option<PathBuf>,
    /// Map file or built-in map name.
    #[arg(long)]
    map: Option<String>,
    /// Solver for the target-language instances.
    #[arg(long, value_enum, default_value = "oracle")]
    solver: SolverKind,
    /// Skip backdoor pairs carrying only the full relation.
    #[arg(long)]
    trivial_skip: bool,
    /// Print one line per branch on standard error.
    #[arg(long)]
    trace: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DoorKind {
    Backdoor,
    Sidedoor,
}

#[derive(Args)]
struct DetectArgs {
    instance: PathBuf,
    #[arg(long, value_enum)]
    kind: DoorKind,
    #[arg(long)]
    k: usize,
    /// Sidedoor radius.
    #[arg(long)]
    r: Option<usize>,
    /// Simplification map (backdoors).
    #[arg(long)]
    map: Option<String>,
    /// Target language spec (sidedoors).
    #[arg(long)]
    target: Option<String>,
    /// Write the door file here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MapKind {
    Simp,
    Branch,
}

#[derive(Args)]
struct ComputeMapArgs {
    #[arg(long, value_enum)]
    kind: MapKind,
    /// Source language spec or file.
    #[arg(long)]
    source: String,
    /// Target language spec or file.
    #[arg(long)]
    target: String,
    /// Branching map radius.
    #[arg(long)]
    r: Option<usize>,
    /// Positive definition file for branching maps.
    #[arg(long)]
    defs: Option<PathBuf>,
    /// Write the map here; without it the map goes to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Random instance with a planted backdoor or sidedoor.
    Planted(PlantedArgs),
    /// Backdoor-detection instance from a hitting-set file.
    HittingSet(ReductionArgs),
    /// Sidedoor-detection instance from a graph file.
    EdgePartition(ReductionArgs),
    /// The `R_k` relation as a relation spec.
    Rk {
        #[arg(long)]
        k: usize,
    },
}

#[derive(Args)]
struct PlantedArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "rcc5:all")]
    source: String,
    #[arg(long, default_value = "rcc5:basic")]
    target: String,
    #[arg(long, value_enum)]
    door: DoorKind,
    /// Backdoor pairs.
    #[arg(long, default_value_t = 2)]
    size: usize,
    #[arg(long, default_value_t = 3)]
    radius: usize,
    #[arg(long, default_value_t = 1)]
    sets: usize,
    /// Constrain every pair inside each sidedoor set.
    #[arg(long)]
    full: bool,
    /// Filler target constraints.
    #[arg(long, default_value_t = 0)]
    extra: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    door_out: Option<PathBuf>,
}

#[derive(Args)]
struct ReductionArgs {
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct BenchArgs {
    /// backdoor-rcc5, sidedoor2-rcc5 or sidedoor3-rcc5.
    #[arg(long)]
    pub suite: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    #[arg(long)]
    pub trivial_skip: bool,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure with its exit code.
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    pub fn module(message: impl Into<String>) -> Self {
        Failure { code: EXIT_ERROR, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::module(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::module(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

pub struct Ctx {
    pub json: bool,
    pub timings: bool,
    pub parallel: bool,
    pub started: Instant,
    pub echo: Vec<String>,
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_SAT };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.jobs == 0 {
        eprintln!("error: --jobs must be at least 1");
        return ExitCode::from(EXIT_USAGE);
    }
    let ctx = Ctx {
        json: cli.json,
        timings: cli.timings,
        parallel: cli.jobs > 1,
        started: Instant::now(),
        echo: echo_args(&args[1..]),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    let result = pool.install(|| run(cli.command, &ctx));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Arguments echoed into reports, without flags that must not change output.
fn echo_args(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--jobs" {
            skip = true;
            continue;
        }
        if a.starts_with("--jobs=") || a == "--timings" {
            continue;
        }
        out.push(a.clone());
    }
    out
}

fn run(cmd: Command, ctx: &Ctx) -> CliResult<u8> {
    match cmd {
        Command::Solve(a) => solve(a, ctx),
        Command::Detect(a) => detect(a, ctx),
        Command::ComputeMap(a) => compute_map(a, ctx),
        Command::Gen(g) => generate(g, ctx),
        Command::Bench(a) => bench::run(a, ctx),
    }
}

fn load_instance(path: &PathBuf) -> CliResult<Instance> {
    Instance::load(path).map_err(|e| Failure::module(format!("{}: {e}", path.display())))
}

fn read(path: &PathBuf) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::module(format!("{}: {e}", path.display())))
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::module(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn instance_stats(inst: &Instance) -> serde_json::Value {
    json!({
        "variables": inst.num_vars(),
        "constraints": inst.constraints().len(),
        "scheme": inst.scheme().name(),
    })
}

fn solve(a: SolveArgs, ctx: &Ctx) -> CliResult<u8> {
    let oracle = Oracle::new();
    let solver: Box<dyn TargetSolver> = match a.solver {
        SolverKind::Oracle => Box::new(OracleSolver(oracle.clone())),
        SolverKind::Aclosure => Box::new(AClosureSolver),
    };
    if a.strategy != Strategy::Oracle {
        if a.map.is_none() {
            return Err(Failure::usage("--map is required for this strategy"));
        }
        if a.door.is_none() {
            return Err(Failure::usage("--door is required for this strategy"));
        }
    }
    let inst = load_instance(&a.instance)?;
    let mut rep = Report::new("solve", ctx);
    rep.set("instance", instance_stats(&inst));
    let (sat, trace) = match a.strategy {
        Strategy::Oracle => {
            rep.set("strategy", "oracle");
            let cert = oracle.find_certificate(&inst)?;
            if let Some(c) = &cert {
                debug_assert!(c.satisfies(&inst));
            }
            (cert.is_some(), Vec::new())
        }
        Strategy::Backdoor => {
            let map = maps::simp_map(a.map.as_deref().unwrap(), &oracle)?;
            let door = Backdoor::from_json(&read(a.door.as_ref().unwrap())?, &inst)?;
            let opts = EvalOptions { trivial_skip: a.trivial_skip, parallel: ctx.parallel, trace: a.trace };
            let r = backdoor::evaluate(&inst, &door, &map, solver.as_ref(), &oracle, opts)?;
            rep.set("strategy", "backdoor");
            rep.set("solver", solver.name());
            rep.set("door_size", door.len());
            let formula = if a.trivial_skip { "(m-1)^|B|" } else { "m^|B|" };
            rep.bound("branches", r.branches as u128, formula, r.bound);
            (r.sat, r.trace)
        }
        Strategy::Sidedoor => {
            let map = maps::branch_map(a.map.as_deref().unwrap(), &oracle)?;
            let door = Sidedoor::from_json(&read(a.door.as_ref().unwrap())?, &inst)?;
            let opts = SidedoorOptions { parallel: ctx.parallel, trace: a.trace };
            let r = sidedoor::evaluate(&inst, &door, &map, solver.as_ref(), opts)?;
            rep.set("strategy", "sidedoor");
            rep.set("solver", solver.name());
            rep.set("door_size", door.len());
            rep.set("branching_factor", r.factor);
            rep.bound("leaves", r.leaves, "c^|S|", r.bound);
            (r.sat, r.trace)
        }
    };
    for line in trace {
        eprintln!("{line}");
    }
    rep.set("answer", if sat { "SAT" } else { "UNSAT" });
    rep.emit()?;
    Ok(if sat { EXIT_SAT } else { EXIT_UNSAT })
}

fn detect(a: DetectArgs, ctx: &Ctx) -> CliResult<u8> {
    let oracle = Oracle::new();
    let inst = load_instance(&a.instance)?;
    let mut rep = Report::new("detect", ctx);
    rep.set("instance", instance_stats(&inst));
    rep.set("k", a.k);
    let door_json = match a.kind {
        DoorKind::Backdoor => {
            let spec = a.map.as_deref().ok_or_else(|| Failure::usage("--map is required for backdoor detection"))?;
            let map = maps::simp_map(spec, &oracle)?;
            let r = backdoor::detect(&inst, a.k, &map, &oracle)?;
            rep.set("kind", "backdoor");
            rep.bound("nodes", r.nodes, "C(a,2)^(k+1)", r.bound);
            r.door.map(|d| d.to_json(&inst))
        }
        DoorKind::Sidedoor => {
            let spec = a.target.as_deref().ok_or_else(|| Failure::usage("--target is required for sidedoor detection"))?;
            let r = a.r.ok_or_else(|| Failure::usage("--r is required for sidedoor detection"))?;
            let target = Language::load(spec)?;
            let res = sidedoor::detect(&inst, r, a.k, &target);
            rep.set("kind", "sidedoor");
            rep.set("radius", r);
            rep.bound("families", res.families, "(rk)^(rk)", res.bound);
            res.door.map(|d| d.to_json(&inst))
        }
    };
    let code = match &door_json {
        Some(text) => {
            let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Failure::module(e.to_string()))?;
            rep.set("answer", "FOUND");
            rep.set("door", v);
            if let Some(p) = &a.out {
                write_or_print(&Some(p.clone()), text)?;
            }
            EXIT_SAT
        }
        None => {
            rep.set("answer", "NONE");
            EXIT_NONE
        }
    };
    rep.emit()?;
    Ok(code)
}

fn compute_map(a: ComputeMapArgs, ctx: &Ctx) -> CliResult<u8> {
    let oracle = Oracle::new();
    let source = Language::load(&a.source)?;
    let target = Language::load(&a.target)?;
    let mut rep = Report::new("compute-map", ctx);
    let text = match a.kind {
        MapKind::Simp => {
            let map = SimplificationMap::compute(&source, &target, &oracle, shortcut_csp::language::DEFAULT_ARITY_CAP)?;
            let defined = map.entries().filter(|(_, e)| e.is_some()).count();
            rep.set("kind", "simp");
            rep.set("entries", map.len());
            rep.set("defined", defined);
            map.to_json()
        }
        MapKind::Branch => {
            let r = a.r.ok_or_else(|| Failure::usage("--r is required for branching maps"))?;
            let map = match &a.defs {
                Some(p) => {
                    let defs = shortcut_csp::branchmap::parse_definitions(&read(p)?, &source, &target)?;
                    shortcut_csp::branchmap::BranchingMap::synthesize(&source, &target, r, defs, &oracle)?
                }
                None => shortcut_csp::branchmap::BranchingMap::synthesize_from_backdoor_triple(&source, &target, r, &oracle)?,
            };
            let windows = map.populate()?;
            let mut checked = 0;
            for e in map.memoized() {
                if !map.check_entry(&e)? {
                    return Err(Failure::module("branching map entry fails solution preservation"));
                }
                checked += 1;
            }
            rep.set("kind", "branch");
            rep.set("radius", r);
            rep.set("windows", windows);
            rep.set("checked", checked);
            rep.set("unpruned_factor", map.unpruned_factor());
            rep.set("branching_factor", map.branching_factor());
            map.to_json()
        }
    };
    match &a.out {
        Some(_) => {
            write_or_print(&a.out, &text)?;
            rep.emit()?;
        }
        None => print!("{text}"),
    }
    Ok(EXIT_SAT)
}

fn generate(g: GenCommand, ctx: &Ctx) -> CliResult<u8> {
    let _ = ctx;
    match g {
        GenCommand::Planted(a) => {
            let door = match a.door {
                DoorKind::Backdoor => DoorSpec::Backdoor { size: a.size },
                DoorKind::Sidedoor => DoorSpec::Sidedoor { radius: a.radius, sets: a.sets, full: a.full },
            };
            let spec = PlantedSpec { source: a.source, target: a.target, door, extra: a.extra };
            let p = gadgets::generate_planted(a.n, &spec, a.seed)?;
            write_or_print(&a.out, &p.instance.to_json())?;
            if let Some(path) = &a.door_out {
                let text = match &p.door {
                    PlantedDoor::Backdoor(b) => b.to_json(&p.instance),
                    PlantedDoor::Sidedoor(s) => s.to_json(&p.instance),
                };
                write_or_print(&Some(path.clone()), &text)?;
            }
        }
        GenCommand::HittingSet(a) => {
            let hs: HittingSetInstance =
                serde_json::from_str(&read(&a.input)?).map_err(|e| Failure::module(e.to_string()))?;
            let (inst, _) = gadgets::hitting_set_reduction(&hs)?;
            write_or_print(&a.out, &inst.to_json())?;
        }
        GenCommand::EdgePartition(a) => {
            let raw: Graph = serde_json::from_str(&read(&a.input)?).map_err(|e| Failure::module(e.to_string()))?;
            let g = Graph::new(raw.vertices, raw.edges)?;
            let (inst, _, _) = gadgets::edge_partition_reduction(&g)?;
            write_or_print(&a.out, &inst.to_json())?;
        }
        GenCommand::Rk { k } => {
            let rel = shortcut_csp::algebra::Relation::Dnf(gadgets::build_rk(k)?);
            let eq = shortcut_csp::algebra::load_scheme("eq")?;
            let spec = RelationSpec::from_relation(&eq, &rel);
            let mut text = serde_json::to_string_pretty(&spec).map_err(|e| Failure::module(e.to_string()))?;
            text.push('\n');
            print!("{text}");
        }
    }
    Ok(EXIT_SAT)
}
