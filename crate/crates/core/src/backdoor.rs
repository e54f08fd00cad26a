//! Backdoors: validation, evaluation by branching over consistent pair
//! assignments, and bounded search-tree detection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::BasicSet;
use crate::error::{Error, Result};
use crate::model::{Instance, PairAssignment, VarId};
use crate::oracle::{Network, Oracle, TargetSolver};
use crate::simpmap::{Lookup, ReducedKey, SimplificationMap};

/// A set of variable pairs, stored sorted with the smaller id first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Backdoor {
    pairs: Vec<(VarId, VarId)>,
}

#[derive(Serialize, Deserialize)]
struct BackdoorFile {
    pairs: Vec<(String, String)>,
}

impl Backdoor {
    pub fn new(pairs: impl IntoIterator<Item = (VarId, VarId)>) -> Self {
        let mut pairs: Vec<_> = pairs.into_iter().map(|(x, y)| (x.min(y), x.max(y))).collect();
        pairs.sort_unstable();
        pairs.dedup();
        Backdoor { pairs }
    }

    pub fn from_names<S: AsRef<str>>(inst: &Instance, pairs: &[(S, S)]) -> Result<Self> {
        let id = |n: &str| inst.var_id(n).ok_or_else(|| Error::UnknownVariable(n.to_string()));
        let ids = pairs
            .iter()
            .map(|(a, b)| Ok((id(a.as_ref())?, id(b.as_ref())?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Backdoor::new(ids))
    }

    pub fn pairs(&self) -> &[(VarId, VarId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, x: VarId, y: VarId) -> bool {
        self.pairs.binary_search(&(x.min(y), x.max(y))).is_ok()
    }

    pub fn with(&self, pair: (VarId, VarId)) -> Backdoor {
        Backdoor::new(self.pairs.iter().copied().chain(std::iter::once(pair)))
    }

    pub fn describe(&self, inst: &Instance) -> String {
        let parts: Vec<String> = self
            .pairs
            .iter()
            .map(|&(x, y)| format!("{}-{}", inst.var_name(x), inst.var_name(y)))
            .collect();
        format!("{{{}}}", parts.join(","))
    }

    pub fn to_json(&self, inst: &Instance) -> String {
        let file = BackdoorFile {
            pairs: self
                .pairs
                .iter()
                .map(|&(x, y)| (inst.var_name(x).to_string(), inst.var_name(y).to_string()))
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("backdoor serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, inst: &Instance) -> Result<Self> {
        let file: BackdoorFile = serde_json::from_str(text)?;
        Backdoor::from_names(inst, &file.pairs)
    }
}

/// Enumerates consistent assignments of `cands[i]` to `pairs[i]`, pruning
/// with closure after each choice. Pairs with `None` candidates stay unset.
fn consistent_alphas(
    inst: &Instance,
    pairs: &[(VarId, VarId)],
    cands: &[Option<BasicSet>],
    oracle: &Oracle,
) -> Result<Vec<PairAssignment>> {
    let scheme = inst.scheme();
    let mut out = Vec::new();
    type AlphaCtx<'a> = (&'a Instance, &'a [(VarId, VarId)], &'a [Option<BasicSet>], &'a Oracle);
    fn rec(
        k: usize,
        net: &Network,
        alpha: &mut PairAssignment,
        ctx: AlphaCtx,
        out: &mut Vec<PairAssignment>,
    ) -> Result<()> {
        let (inst, pairs, cands, oracle) = ctx;
        let scheme = inst.scheme();
        if k == pairs.len() {
            if oracle.network_consistent(scheme, net)? {
                out.push(alpha.clone());
            }
            return Ok(());
        }
        let (x, y) = pairs[k];
        let Some(cand) = cands[k] else {
            return rec(k + 1, net, alpha, ctx, out);
        };
        for b in cand.iter() {
            if x == y && !scheme.identity().contains(b) {
                continue;
            }
            let mut next = net.clone();
            next.refine(scheme, x, y, BasicSet::singleton(b));
            if next.get(x, y).is_empty() || !crate::oracle::aclosure(scheme, &mut next) {
                continue;
            }
            alpha.set(scheme, x, y, b)?;
            rec(k + 1, &next, alpha, ctx, out)?;
            alpha.remove(x, y);
        }
        Ok(())
    }
    let net = Network::new(scheme, inst.num_vars());
    rec(0, &net, &mut PairAssignment::new(), (inst, pairs, cands, oracle), &mut out)?;
    Ok(out)
}

/// A failing (α, constraint) witness for a non-backdoor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub alpha: PairAssignment,
    pub constraint: usize,
}

/// Checks that Σ is defined on every constraint under every consistent α on `door`.
pub fn validate_backdoor(
    inst: &Instance,
    door: &Backdoor,
    map: &SimplificationMap,
    oracle: &Oracle,
) -> Result<Option<Violation>> {
    let full = Some(inst.scheme().full());
    let alphas = consistent_alphas(inst, door.pairs(), &vec![full; door.len()], oracle)?;
    for alpha in alphas {
        for ci in 0..inst.constraints().len() {
            if !map.is_defined(inst, ci, &alpha)? {
                return Ok(Some(Violation { alpha, constraint: ci }));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EvalOptions {
    /// Skip pairs only covered by the full relation and restrict other pairs
    /// to the basics their union constraints allow.
    pub trivial_skip: bool,
    pub parallel: bool,
    pub trace: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalReport {
    pub sat: bool,
    /// Consistent complete assignments evaluated.
    pub branches: usize,
    /// Theoretical branch bound (`m^|B|`, or `(m-1)^|B|` with trivial skip).
    pub bound: u128,
    pub trace: Vec<String>,
}

fn pair_candidates(inst: &Instance, door: &Backdoor, map: &SimplificationMap, skip: bool) -> Result<Vec<Option<BasicSet>>> {
    let scheme = inst.scheme();
    let full = scheme.full();
    if !skip {
        return Ok(vec![Some(full); door.len()]);
    }
    let empty = PairAssignment::new();
    let mut out = Vec::with_capacity(door.len());
    for &(x, y) in door.pairs() {
        let mut cand = full;
        let mut all_binary = true;
        let mut defined_alone = true;
        for (ci, c) in inst.constraints().iter().enumerate() {
            if !(c.scope.contains(&x) && c.scope.contains(&y)) {
                continue;
            }
            match inst.rel_of(c).as_union() {
                Some(mask) => {
                    cand &= if c.scope[0] == x { mask } else { scheme.converse_set(mask) };
                    defined_alone &= map.is_defined(inst, ci, &empty)?;
                }
                None => all_binary = false,
            }
        }
        if cand == full && all_binary && defined_alone {
            out.push(None);
        } else {
            out.push(Some(cand));
        }
    }
    Ok(out)
}

enum Branch {
    Sat,
    Unsat,
    Undefined(usize),
}

fn run_branch(
    inst: &Instance,
    alpha: &PairAssignment,
    map: &SimplificationMap,
    solver: &dyn TargetSolver,
) -> Result<Branch> {
    let mut translated = Instance::with_variables(inst.scheme().clone(), &inst.variables().iter().collect::<Vec<_>>());
    let mut dead = false;
    for ci in 0..inst.constraints().len() {
        match map.lookup(inst, ci, alpha)? {
            Lookup::Undefined => return Ok(Branch::Undefined(ci)),
            Lookup::Unsat => dead = true,
            Lookup::Local(local) => {
                if !dead {
                    translated.append(&local)?;
                }
            }
        }
    }
    if dead {
        return Ok(Branch::Unsat);
    }
    Ok(if solver.solve(&translated)? { Branch::Sat } else { Branch::Unsat })
}

/// Decides `inst` by branching over every consistent α on `door` and solving
/// the simplified target instances.
pub fn evaluate(
    inst: &Instance,
    door: &Backdoor,
    map: &SimplificationMap,
    solver: &dyn TargetSolver,
    oracle: &Oracle,
    opts: EvalOptions,
) -> Result<EvalReport> {
    let m = inst.scheme().m() as u128;
    let cands = pair_candidates(inst, door, map, opts.trivial_skip)?;
    let alphas = consistent_alphas(inst, door.pairs(), &cands, oracle)?;
    let results: Vec<Result<Branch>> = if opts.parallel {
        alphas.par_iter().map(|a| run_branch(inst, a, map, solver)).collect()
    } else {
        alphas.iter().map(|a| run_branch(inst, a, map, solver)).collect()
    };
    let mut sat = false;
    let mut trace = Vec::new();
    for (alpha, r) in alphas.iter().zip(results) {
        let r = r?;
        let label = match r {
            Branch::Sat => "SAT",
            Branch::Unsat => "UNSAT",
            Branch::Undefined(_) => "undef",
        };
        if opts.trace {
            trace.push(format!("alpha={} consistent=true result={label}", alpha.describe(inst)));
        }
        match r {
            Branch::Sat => sat = true,
            Branch::Unsat => {}
            Branch::Undefined(ci) => {
                return Err(Error::NotABackdoor { alpha: alpha.describe(inst), constraint: ci });
            }
        }
    }
    let base = if opts.trivial_skip { m - 1 } else { m };
    Ok(EvalReport {
        sat,
        branches: alphas.len(),
        bound: base.saturating_pow(door.len() as u32),
        trace,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectReport {
    pub door: Option<Backdoor>,
    /// Search-tree nodes visited.
    pub nodes: u128,
    /// Tree-size bound `C(a,2)^(k+1)`.
    pub bound: u128,
    /// `C(a,2)` for the maximum registered relation arity `a` (at least 2).
    pub branching: u128,
}

fn scope_pairs(scope: &[VarId]) -> Vec<(VarId, VarId)> {
    let mut out = Vec::new();
    for i in 0..scope.len() {
        for j in i + 1..scope.len() {
            let (x, y) = (scope[i], scope[j]);
            if x != y {
                let p = (x.min(y), x.max(y));
                if !out.contains(&p) {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// The first constraint (input order) that some consistent α on `door` leaves undefined.
fn violating_constraint(inst: &Instance, door: &Backdoor, map: &SimplificationMap, oracle: &Oracle) -> Result<Option<usize>> {
    let full = Some(inst.scheme().full());
    let alphas = consistent_alphas(inst, door.pairs(), &vec![full; door.len()], oracle)?;
    let mut seen = std::collections::HashSet::new();
    for ci in 0..inst.constraints().len() {
        for alpha in &alphas {
            // α only matters through the key
            let key = ReducedKey::of(inst, ci, alpha);
            if !seen.insert(key) {
                continue;
            }
            if !map.is_defined(inst, ci, alpha)? {
                return Ok(Some(ci));
            }
        }
        seen.clear();
    }
    Ok(None)
}

/// Bounded search tree for a backdoor of size at most `k`. A node with a
/// single child is extended in place rather than counted again.
pub fn detect(inst: &Instance, k: usize, map: &SimplificationMap, oracle: &Oracle) -> Result<DetectReport> {
    let a = inst.relations().values().map(|r| r.arity()).max().unwrap_or(0).max(2) as u128;
    let b = a * (a - 1) / 2;
    let bound = b.saturating_pow(k as u32 + 1);
    let mut nodes = 0u128;
    fn node(
        inst: &Instance,
        mut door: Backdoor,
        k: usize,
        map: &SimplificationMap,
        oracle: &Oracle,
        nodes: &mut u128,
    ) -> Result<Option<Backdoor>> {
        *nodes += 1;
        loop {
            let Some(ci) = violating_constraint(inst, &door, map, oracle)? else {
                return Ok(Some(door));
            };
            if door.len() >= k {
                return Ok(None);
            }
            let children: Vec<_> = scope_pairs(&inst.constraints()[ci].scope)
                .into_iter()
                .filter(|&(x, y)| !door.contains(x, y))
                .collect();
            if children.len() == 1 {
                door = door.with(children[0]);
                continue;
            }
            for pair in children {
                if let Some(found) = node(inst, door.with(pair), k, map, oracle, nodes)? {
                    return Ok(Some(found));
                }
            }
            return Ok(None);
        }
    }
    let door = node(inst, Backdoor::default(), k, map, oracle, &mut nodes)?;
    Ok(DetectReport { door, nodes, bound, branching: b })
}

/// Greedily drops pairs while the set remains a backdoor.
pub fn shrink(inst: &Instance, door: &Backdoor, map: &SimplificationMap, oracle: &Oracle) -> Result<Backdoor> {
    let mut cur = door.clone();
    let mut i = 0;
    while i < cur.len() {
        let trial = Backdoor::new(cur.pairs.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &p)| p));
        if validate_backdoor(inst, &trial, map, oracle)?.is_none() {
            cur = trial;
        } else {
            i += 1;
        }
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::Language;
    use crate::oracle::OracleSolver;

    fn delta_setup() -> (Language, SimplificationMap) {
        let lang = Language::load("eq:delta+basic").unwrap();
        let basic = Language::load("eq:basic").unwrap();
        let map = SimplificationMap::compute(&lang, &basic, &Oracle::new(), 4).unwrap();
        (lang, map)
    }

    #[test]
    fn delta_pairs_form_a_backdoor() {
        let (lang, map) = delta_setup();
        let mut inst = Instance::with_variables(lang.scheme().clone(), &["a", "b", "c", "d"]);
        inst.add_from_language(&lang, "delta", &["a", "b", "c"]).unwrap();
        inst.add_from_language(&lang, "delta", &["b", "c", "d"]).unwrap();
        inst.add_from_language(&lang, "!=", &["a", "d"]).unwrap();
        let oracle = Oracle::new();
        let door = Backdoor::from_names(&inst, &[("a", "b"), ("b", "c")]).unwrap();
        assert!(validate_backdoor(&inst, &door, &map, &oracle).unwrap().is_none());
        let v = validate_backdoor(&inst, &Backdoor::default(), &map, &oracle).unwrap().unwrap();
        assert_eq!(v.constraint, 0);

        let rep = evaluate(&inst, &door, &map, &OracleSolver::default(), &oracle, EvalOptions::default()).unwrap();
        assert_eq!(rep.sat, oracle.satisfiable(&inst).unwrap());
        assert!(rep.branches as u128 <= rep.bound);
        assert!(matches!(
            evaluate(&inst, &Backdoor::default(), &map, &OracleSolver::default(), &oracle, EvalOptions::default()),
            Err(Error::NotABackdoor { .. })
        ));

        let det = detect(&inst, 2, &map, &oracle).unwrap();
        let found = det.door.unwrap();
        assert!(found.len() <= 2);
        assert!(validate_backdoor(&inst, &found, &map, &oracle).unwrap().is_none());
        assert!(det.nodes <= det.bound);
        // b-c is shared by both delta scopes
        let one = detect(&inst, 1, &map, &oracle).unwrap().door.unwrap();
        assert_eq!(one, Backdoor::from_names(&inst, &[("b", "c")]).unwrap());
        assert!(detect(&inst, 0, &map, &oracle).unwrap().door.is_none());
    }

    #[test]
    fn target_only_instances() {
        let (lang, map) = delta_setup();
        let mut inst = Instance::with_variables(lang.scheme().clone(), &["a", "b"]);
        inst.add_from_language(&lang, "!=", &["a", "b"]).unwrap();
        let oracle = Oracle::new();
        let det = detect(&inst, 0, &map, &oracle).unwrap();
        assert_eq!(det.door, Some(Backdoor::default()));
        assert_eq!(det.nodes, 1);
        let rep = evaluate(&inst, &Backdoor::default(), &map, &OracleSolver::default(), &oracle, EvalOptions::default()).unwrap();
        assert!(rep.sat);
        assert_eq!(rep.branches, 1);
    }

    #[test]
    fn json_and_shrink() {
        let (lang, map) = delta_setup();
        let mut inst = Instance::with_variables(lang.scheme().clone(), &["a", "b", "c"]);
        inst.add_from_language(&lang, "delta", &["a", "b", "c"]).unwrap();
        let door = Backdoor::from_names(&inst, &[("c", "a"), ("a", "b"), ("b", "c")]).unwrap();
        let text = door.to_json(&inst);
        assert_eq!(Backdoor::from_json(&text, &inst).unwrap(), door);
        let small = shrink(&inst, &door, &map, &Oracle::new()).unwrap();
        assert_eq!(small.len(), 1);
    }

    #[test]
    fn trivial_skip_on_rcc5() {
        let all = Language::load("rcc5:all").unwrap();
        let basic = Language::load("rcc5:basic").unwrap();
        let map = SimplificationMap::compute(&all, &basic, &Oracle::new(), 4).unwrap();
        let mut inst = Instance::with_variables(all.scheme().clone(), &["x", "y", "z"]);
        inst.add_from_language(&all, "PP|PPi", &["x", "y"]).unwrap();
        inst.add_from_language(&all, "DR|PO", &["y", "z"]).unwrap();
        inst.add_from_language(&all, "DR|PO|PP|PPi|EQ", &["x", "z"]).unwrap();
        let oracle = Oracle::new();
        let door = Backdoor::from_names(&inst, &[("x", "y"), ("y", "z"), ("x", "z")]).unwrap();
        assert!(validate_backdoor(&inst, &door, &map, &oracle).unwrap().is_none());
        let solver = OracleSolver::default();
        let plain = evaluate(&inst, &door, &map, &solver, &oracle, EvalOptions::default()).unwrap();
        let opts = EvalOptions { trivial_skip: true, ..Default::default() };
        let skip = evaluate(&inst, &door, &map, &solver, &oracle, opts).unwrap();
        assert_eq!(plain.sat, skip.sat);
        assert!(plain.sat);
        assert!(skip.branches <= 4);
        assert!(plain.branches as u128 <= 125);
    }
}
