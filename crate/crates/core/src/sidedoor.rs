//! Sidedoors: families of small variable sets covering every non-target
//! constraint. Evaluation branches through a branching map one set at a time;
//! detection enumerates families over the constrained variables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::branchmap::BranchingMap;
use crate::error::{Error, Result};
use crate::language::Language;
use crate::model::{Instance, VarId};
use crate::oracle::TargetSolver;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Sidedoor {
    pub radius: usize,
    sets: Vec<Vec<VarId>>,
}

#[derive(Serialize, Deserialize)]
struct SidedoorFile {
    radius: usize,
    sets: Vec<Vec<String>>,
}

impl Sidedoor {
    /// Sets keep their listed order; each set is sorted and deduplicated.
    pub fn new(radius: usize, sets: impl IntoIterator<Item = Vec<VarId>>) -> Self {
        let sets = sets
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        Sidedoor { radius, sets }
    }

    pub fn from_names<S: AsRef<str>>(inst: &Instance, radius: usize, sets: &[Vec<S>]) -> Result<Self> {
        let sets = sets
            .iter()
            .map(|s| {
                s.iter()
                    .map(|n| inst.var_id(n.as_ref()).ok_or_else(|| Error::UnknownVariable(n.as_ref().to_string())))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Sidedoor::new(radius, sets))
    }

    pub fn sets(&self) -> &[Vec<VarId>] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn describe(&self, inst: &Instance) -> String {
        let parts: Vec<String> = self
            .sets
            .iter()
            .map(|s| {
                let names: Vec<&str> = s.iter().map(|&v| inst.var_name(v)).collect();
                format!("{{{}}}", names.join(","))
            })
            .collect();
        format!("[{}]", parts.join(","))
    }

    pub fn to_json(&self, inst: &Instance) -> String {
        let file = SidedoorFile {
            radius: self.radius,
            sets: self.sets.iter().map(|s| s.iter().map(|&v| inst.var_name(v).to_string()).collect()).collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("sidedoor serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, inst: &Instance) -> Result<Self> {
        let file: SidedoorFile = serde_json::from_str(text)?;
        Sidedoor::from_names(inst, file.radius, &file.sets)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SidedoorViolation {
    /// Set index whose size exceeds the radius.
    Oversized(usize),
    /// Non-target constraint index not inside any set.
    Uncovered(usize),
}

/// Checks set sizes and that every constraint outside `target` lies inside some set.
pub fn validate_sidedoor(inst: &Instance, door: &Sidedoor, target: &Language) -> Option<SidedoorViolation> {
    if let Some(i) = door.sets.iter().position(|s| s.len() > door.radius) {
        return Some(SidedoorViolation::Oversized(i));
    }
    uncovered(inst, &door.sets, target).map(SidedoorViolation::Uncovered)
}

fn uncovered(inst: &Instance, sets: &[Vec<VarId>], target: &Language) -> Option<usize> {
    inst.constraints().iter().position(|c| {
        let (name, rel) = inst.relation(c.rel);
        !target.contains(name, rel) && !sets.iter().any(|s| c.scope.iter().all(|v| s.binary_search(v).is_ok()))
    })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SidedoorOptions {
    pub parallel: bool,
    pub trace: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SidedoorReport {
    pub sat: bool,
    pub leaves: u128,
    /// Branching factor over the windows this run visited.
    pub factor: usize,
    /// `c^|S|`.
    pub bound: u128,
    pub trace: Vec<String>,
}

struct Node {
    sat: bool,
    leaves: u128,
    trace: Vec<String>,
}

/// Pads `set` to `radius` with the lowest-numbered variables not in it.
pub fn pad_set(set: &[VarId], radius: usize, num_vars: usize) -> Vec<VarId> {
    let mut out = set.to_vec();
    let mut v = 0;
    while out.len() < radius && v < num_vars {
        if !out.contains(&v) {
            out.push(v);
        }
        v += 1;
    }
    out.sort_unstable();
    out
}

fn recurse(
    inst: &Instance,
    sets: &[Vec<VarId>],
    depth: usize,
    map: &BranchingMap,
    solver: &dyn TargetSolver,
    opts: SidedoorOptions,
) -> Result<Node> {
    let Some((first, rest)) = sets.split_first() else {
        let sat = solver.solve(inst)?;
        return Ok(Node { sat, leaves: 1, trace: Vec::new() });
    };
    let s = pad_set(first, map.radius(), inst.num_vars());
    let local = inst.restrict(&s);
    let branches = map.apply(&local)?;
    let label = {
        let names: Vec<&str> = s.iter().map(|&v| inst.var_name(v)).collect();
        format!("{{{}}}", names.join(","))
    };
    let run = |(i, b): (usize, &Instance)| -> Result<Node> {
        let spliced = inst.splice(b)?;
        debug_assert!(
            uncovered(&spliced, rest, map.target()).is_none(),
            "remaining sets stop covering after splicing"
        );
        let mut node = recurse(&spliced, rest, depth + 1, map, solver, opts)?;
        if opts.trace {
            let result = if node.sat { "SAT" } else { "UNSAT" };
            node.trace.insert(0, format!("depth={depth} set={label} branch={i} result={result}"));
        }
        Ok(node)
    };
    let children: Vec<Result<Node>> = if opts.parallel {
        branches.par_iter().enumerate().map(run).collect()
    } else {
        branches.iter().enumerate().map(run).collect()
    };
    let mut out = Node { sat: false, leaves: 0, trace: Vec::new() };
    if opts.trace && branches.is_empty() {
        out.trace.push(format!("depth={depth} set={label} branch=none result=UNSAT"));
    }
    for c in children {
        let c = c?;
        out.sat |= c.sat;
        out.leaves += c.leaves;
        out.trace.extend(c.trace);
    }
    Ok(out)
}

/// Decides `inst` by branching on the sets of `door` in listed order.
pub fn evaluate(
    inst: &Instance,
    door: &Sidedoor,
    map: &BranchingMap,
    solver: &dyn TargetSolver,
    opts: SidedoorOptions,
) -> Result<SidedoorReport> {
    if door.radius != map.radius() {
        return Err(Error::RadiusMismatch { door: door.radius, map: map.radius() });
    }
    match validate_sidedoor(inst, door, map.target()) {
        None => {}
        Some(SidedoorViolation::Oversized(i)) => {
            return Err(Error::NotASidedoor(format!("set #{i} has more than {} variables", door.radius)));
        }
        Some(SidedoorViolation::Uncovered(ci)) => {
            return Err(Error::NotASidedoor(format!("constraint #{ci} is not covered")));
        }
    }
    let node = recurse(inst, &door.sets, 0, map, solver, opts)?;
    let factor = map.branching_factor();
    Ok(SidedoorReport {
        sat: node.sat,
        leaves: node.leaves,
        factor,
        bound: (factor as u128).saturating_pow(door.len() as u32),
        trace: node.trace,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SidedoorDetectReport {
    pub door: Option<Sidedoor>,
    /// Families checked.
    pub families: u128,
    /// `(rk)^(rk)`.
    pub bound: u128,
}

/// All size-`r` subsets of `items` in lexicographic order.
pub fn subsets(items: &[VarId], r: usize) -> Vec<Vec<VarId>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(items: &[VarId], r: usize, start: usize, cur: &mut Vec<VarId>, out: &mut Vec<Vec<VarId>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < r - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, r, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, r, 0, &mut cur, &mut out);
    out
}

/// Calls `f` on every `j`-combination of indices `0..n` in lexicographic
/// order until it returns true.
pub fn for_each_combination(n: usize, j: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    if j > n {
        return false;
    }
    let mut idx: Vec<usize> = (0..j).collect();
    loop {
        if f(&idx) {
            return true;
        }
        let mut p = j;
        loop {
            if p == 0 {
                return false;
            }
            p -= 1;
            if idx[p] < n - j + p {
                break;
            }
        }
        idx[p] += 1;
        for q in p + 1..j {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// Finds a sidedoor of at most `k` sets of radius `r`, preferring fewer sets,
/// then the lexicographically first family of subsets.
pub fn detect(inst: &Instance, r: usize, k: usize, target: &Language) -> SidedoorDetectReport {
    let rk = (r * k) as u128;
    let bound = rk.saturating_pow(rk as u32);
    let mut families = 0u128;
    let hard: Vec<&[VarId]> = inst
        .constraints()
        .iter()
        .filter(|c| {
            let (name, rel) = inst.relation(c.rel);
            !target.contains(name, rel)
        })
        .map(|c| c.scope.as_slice())
        .collect();
    let mut live: Vec<VarId> = hard.iter().flat_map(|s| s.iter().copied()).collect();
    live.sort_unstable();
    live.dedup();
    let none = |families| SidedoorDetectReport { door: None, families, bound };
    if hard.is_empty() {
        return SidedoorDetectReport { door: Some(Sidedoor::new(r, [])), families: 1, bound };
    }
    if live.len() > r * k {
        return none(0);
    }
    let pool = subsets(&live, r.min(live.len()));
    for j in 1..=k {
        let mut found = None;
        for_each_combination(pool.len(), j, |idx| {
            families += 1;
            let sets: Vec<Vec<VarId>> = idx.iter().map(|&i| pool[i].clone()).collect();
            let covered = hard
                .iter()
                .all(|scope| sets.iter().any(|s| scope.iter().all(|v| s.binary_search(v).is_ok())));
            if covered {
                found = Some(sets);
            }
            covered
        });
        if let Some(sets) = found {
            return SidedoorDetectReport { door: Some(Sidedoor::new(r, sets)), families, bound };
        }
    }
    none(families)
}
