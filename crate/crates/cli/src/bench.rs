use std::fmt::Write as _;

use rayon::prelude::*;

use shortcut_csp::backdoor::{self, EvalOptions};
use shortcut_csp::branchmap::BranchingMap;
use shortcut_csp::gadgets::{generate_planted, DoorSpec, PlantedDoor, PlantedSpec};
use shortcut_csp::oracle::{Oracle, OracleSolver};
use shortcut_csp::sidedoor::{self, SidedoorOptions};
use shortcut_csp::simpmap::SimplificationMap;

use crate::{maps, BenchArgs, CliResult, Ctx, Failure, EXIT_SAT};

const HEADER: &str = "suite,index,seed,variables,constraints,door_size,answer,oracle,counter,bound,ok";

struct Row {
    seed: u64,
    variables: usize,
    constraints: usize,
    door: usize,
    sat: bool,
    oracle: bool,
    counter: u128,
    bound: u128,
}

enum Suite {
    Backdoor(SimplificationMap),
    Sidedoor(BranchingMap),
}

fn spec_for(suite: &str, index: usize) -> CliResult<(usize, PlantedSpec)> {
    Ok(match suite {
        "backdoor-rcc5" => (
            6,
            PlantedSpec {
                source: "rcc5:all".into(),
                target: "rcc5:basic".into(),
                door: DoorSpec::Backdoor { size: 1 + index % 4 },
                extra: 3,
            },
        ),
        "sidedoor2-rcc5" => (
            6,
            PlantedSpec {
                source: "rcc5:all".into(),
                target: "rcc5:gamma".into(),
                door: DoorSpec::Sidedoor { radius: 2, sets: 1 + index % 3, full: true },
                extra: 6,
            },
        ),
        "sidedoor3-rcc5" => (
            6,
            PlantedSpec {
                source: "rcc5:all".into(),
                target: "rcc5:gamma".into(),
                door: DoorSpec::Sidedoor { radius: 3, sets: 2, full: true },
                extra: 4,
            },
        ),
        other => return Err(Failure::usage(format!("unknown suite `{other}`"))),
    })
}

fn run_row(suite: &Suite, name: &str, index: usize, seed: u64, trivial_skip: bool, oracle: &Oracle) -> CliResult<Row> {
    let (n, spec) = spec_for(name, index)?;
    let p = generate_planted(n, &spec, seed)?;
    let inst = &p.instance;
    let solver = OracleSolver(oracle.clone());
    let truth = oracle.satisfiable(inst)?;
    let (sat, counter, bound, door) = match (suite, &p.door) {
        (Suite::Backdoor(map), PlantedDoor::Backdoor(b)) => {
            let opts = EvalOptions { trivial_skip, ..Default::default() };
            let r = backdoor::evaluate(inst, b, map, &solver, oracle, opts)?;
            (r.sat, r.branches as u128, r.bound, b.len())
        }
        (Suite::Sidedoor(map), PlantedDoor::Sidedoor(s)) => {
            let r = sidedoor::evaluate(inst, s, map, &solver, SidedoorOptions::default())?;
            // bound against the whole map's factor, not the rows visited so far
            let c = match name {
                "sidedoor2-rcc5" => 2u128,
                _ => 7,
            };
            (r.sat, r.leaves, c.pow(s.len() as u32), s.len())
        }
        _ => unreachable!("suite and door kind agree"),
    };
    Ok(Row {
        seed,
        variables: inst.num_vars(),
        constraints: inst.constraints().len(),
        door,
        sat,
        oracle: truth,
        counter,
        bound,
    })
}

pub fn run(a: BenchArgs, ctx: &Ctx) -> CliResult<u8> {
    let oracle = Oracle::new();
    let suite = match a.suite.as_str() {
        "backdoor-rcc5" => Suite::Backdoor(maps::simp_map("simp:rcc5:all,rcc5:basic", &oracle)?),
        "sidedoor2-rcc5" => Suite::Sidedoor(BranchingMap::rcc5_pp_split(2, &oracle)?),
        "sidedoor3-rcc5" => Suite::Sidedoor(BranchingMap::rcc5_pp_split(3, &oracle)?),
        other => return Err(Failure::usage(format!("unknown suite `{other}`"))),
    };
    let job = |i: usize| run_row(&suite, &a.suite, i, a.seed.wrapping_add(i as u64), a.trivial_skip, &oracle);
    let rows: Vec<CliResult<Row>> = if ctx.parallel {
        (0..a.count).into_par_iter().map(job).collect()
    } else {
        (0..a.count).map(job).collect()
    };
    let mut csv = String::from(HEADER);
    csv.push('\n');
    let mut failures = 0;
    for (i, r) in rows.into_iter().enumerate() {
        let r = r?;
        let ok = r.counter <= r.bound && r.sat == r.oracle;
        failures += usize::from(!ok);
        let answer = |b: bool| if b { "SAT" } else { "UNSAT" };
        writeln!(
            csv,
            "{},{i},{},{},{},{},{},{},{},{},{ok}",
            a.suite,
            r.seed,
            r.variables,
            r.constraints,
            r.door,
            answer(r.sat),
            answer(r.oracle),
            r.counter,
            r.bound
        )
        .expect("string write");
    }
    match &a.out {
        Some(p) => std::fs::write(p, &csv).map_err(|e| Failure::module(format!("{}: {e}", p.display())))?,
        None => print!("{csv}"),
    }
    if ctx.timings {
        eprintln!("elapsed_ms: {:.3}", ctx.started.elapsed().as_secs_f64() * 1000.0);
    }
    if failures > 0 {
        return Err(Failure::module(format!("{failures} rows violated their bound or disagreed with the oracle")));
    }
    Ok(EXIT_SAT)
}
