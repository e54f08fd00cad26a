//! Branching maps: radius-`r` windows of source constraints are rewritten
//! into lists of target-only windows whose solution sets cover the original.
//! Entries are synthesized lazily from positive DNF definitions and memoized.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::algebra::{eliminate_negation, BasicSet, Formula, Relation, Scheme};
use crate::error::{Error, Result};
use crate::language::{rcc5_lambda, rcc5_outside_gamma, Language, DEFAULT_ARITY_CAP};
use crate::model::Instance;
use crate::oracle::{CertificateUniverse, Oracle};

/// A constraint over window slots `0..r`.
pub type SlotConstraint = (String, Vec<usize>);

/// Positive DNF definitions: relation name to clauses of binary target atoms
/// `(target relation, position, position)`.
pub type Definitions = IndexMap<String, Vec<Vec<(String, usize, usize)>>>;

#[derive(Deserialize)]
#[serde(untagged)]
enum DefinitionSpec {
    Clauses(Vec<Vec<(String, usize, usize)>>),
    Formula(Formula),
}

/// Parses a definition file. Formula definitions must be negation-free; their
/// atoms are mapped to the target relations naming single basics.
pub fn parse_definitions(text: &str, source: &Language, target: &Language) -> Result<Definitions> {
    let raw: IndexMap<String, DefinitionSpec> = serde_json::from_str(text)?;
    let scheme = source.scheme();
    let mut out = Definitions::new();
    for (name, spec) in raw {
        let clauses = match spec {
            DefinitionSpec::Clauses(c) => c,
            DefinitionSpec::Formula(f) => {
                if f.has_negation() {
                    return Err(Error::NegationInDefinition(name));
                }
                let arity = source.get(&name).ok_or_else(|| Error::UnknownRelation(name.clone()))?.arity();
                let dnf = eliminate_negation(&f, arity, scheme, DEFAULT_ARITY_CAP)?;
                dnf.clauses()
                    .iter()
                    .map(|cl| {
                        cl.iter()
                            .map(|a| {
                                let t = target
                                    .name_of_union(BasicSet::singleton(a.basic))
                                    .ok_or_else(|| Error::UnknownRelation(scheme.basic_name(a.basic).to_string()))?;
                                Ok((t.to_string(), a.i, a.j))
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        out.insert(name, clauses);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchProvenance {
    Synthesized,
    Builtin,
}

/// One memoized window: its branches after pruning and the count before.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchEntry {
    pub key: Vec<SlotConstraint>,
    pub branches: Vec<Vec<SlotConstraint>>,
    pub unpruned: usize,
}

/// Ω: a lazily populated branching map from `source` to `target`.
pub struct BranchingMap {
    scheme: Arc<Scheme>,
    source: Language,
    target: Language,
    radius: usize,
    defs: Definitions,
    provenance: BranchProvenance,
    oracle: Oracle,
    memo: Mutex<HashMap<Vec<SlotConstraint>, Arc<BranchEntry>>>,
    universe: Mutex<Option<Arc<CertificateUniverse>>>,
}

impl fmt::Debug for BranchingMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BranchingMap")
            .field("scheme", &self.scheme.name())
            .field("radius", &self.radius)
            .field("relations", &self.source.len())
            .field("provenance", &self.provenance)
            .field("memoized", &self.memo.lock().unwrap().len())
            .finish()
    }
}

fn slot_name(i: usize) -> String {
    format!("x{}", i + 1)
}

fn format_constraint((name, scope): &SlotConstraint) -> String {
    let vars: Vec<String> = scope.iter().map(|&v| slot_name(v)).collect();
    format!("{name}({})", vars.join(","))
}

fn canonical(mut cs: Vec<SlotConstraint>) -> Vec<SlotConstraint> {
    cs.sort();
    cs.dedup();
    cs
}

impl BranchingMap {
    /// Builds Ω from definitions of every source relation outside the target.
    /// The source language is widened by the target.
    pub fn synthesize(source: &Language, target: &Language, radius: usize, defs: Definitions, oracle: &Oracle) -> Result<Self> {
        let full = source.union_with(target)?;
        let a = full.max_arity();
        if a > radius {
            return Err(Error::RadiusTooSmall { radius, arity: a });
        }
        for (name, rel) in full.relations() {
            if target.contains(name, rel) {
                continue;
            }
            let clauses = defs.get(name).ok_or_else(|| Error::MissingDefinition(name.to_string()))?;
            for atom in clauses.iter().flatten() {
                if target.get(&atom.0).is_none() {
                    return Err(Error::UnknownRelation(atom.0.clone()));
                }
                if atom.1 >= rel.arity() || atom.2 >= rel.arity() {
                    return Err(Error::ArityMismatch { relation: name.to_string(), expected: rel.arity(), found: atom.1.max(atom.2) + 1 });
                }
            }
        }
        Ok(BranchingMap {
            scheme: full.scheme().clone(),
            source: full,
            target: target.clone(),
            radius,
            defs,
            provenance: BranchProvenance::Synthesized,
            oracle: oracle.clone(),
            memo: Mutex::new(HashMap::new()),
            universe: Mutex::new(None),
        })
    }

    /// Ω for `⟦S ∪ basics, T ∪ basics, r⟧`: each source relation is defined by
    /// its own basic DNF, read through the basic relations.
    pub fn synthesize_from_backdoor_triple(source: &Language, target: &Language, radius: usize, oracle: &Oracle) -> Result<Self> {
        let scheme = source.scheme().clone();
        if scheme.name() != target.scheme().name() {
            return Err(Error::SchemeMismatch(scheme.name().into(), target.scheme().name().into()));
        }
        let a = source.max_arity().max(target.max_arity());
        if radius < a.max(2) {
            return Err(Error::RadiusTooSmall { radius, arity: a.max(2) });
        }
        let basics = Language::load(&format!("{}:basic", scheme.name()))
            .or_else(|_| basic_language(&scheme))?;
        let target = target.union_with(&basics)?;
        let source = source.union_with(&basics)?;
        let mut defs = Definitions::new();
        for (name, rel) in source.relations() {
            if target.contains(name, rel) {
                continue;
            }
            let clauses = rel
                .to_dnf()
                .clauses()
                .iter()
                .map(|cl| {
                    cl.iter()
                        .map(|a| {
                            let t = target.name_of_union(BasicSet::singleton(a.basic)).expect("basic registered");
                            (t.to_string(), a.i, a.j)
                        })
                        .collect()
                })
                .collect();
            defs.insert(name.to_string(), clauses);
        }
        BranchingMap::synthesize(&source, &target, radius, defs, oracle)
    }

    /// Splits every RCC-5 relation outside the tractable fragment into its
    /// PP part and its PP-free part.
    pub fn rcc5_pp_split(radius: usize, oracle: &Oracle) -> Result<Self> {
        let source = Language::load("rcc5:all")?;
        let target = Language::load("rcc5:gamma")?;
        let s = source.scheme().clone();
        let pp = BasicSet::singleton(s.basic_index("PP").expect("rcc5 basic"));
        let lambda = rcc5_lambda(&s);
        let mut defs = Definitions::new();
        for (name, rel) in source.relations() {
            let mask = rel.as_union().expect("union relation");
            if rcc5_outside_gamma(&s, mask) {
                defs.insert(
                    name.to_string(),
                    vec![
                        vec![(s.format_set(mask & pp), 0, 1)],
                        vec![(s.format_set(mask & lambda), 0, 1)],
                    ],
                );
            }
        }
        let mut map = BranchingMap::synthesize(&source, &target, radius, defs, oracle)?;
        map.provenance = BranchProvenance::Builtin;
        Ok(map)
    }

    /// The δ map: radius 3 over the equality basics.
    pub fn delta(oracle: &Oracle) -> Result<Self> {
        let mut map = BranchingMap::synthesize_from_backdoor_triple(
            &Language::load("eq:delta")?,
            &Language::load("eq:basic")?,
            3,
            oracle,
        )?;
        map.provenance = BranchProvenance::Builtin;
        Ok(map)
    }

    pub fn scheme(&self) -> &Arc<Scheme> {
        &self.scheme
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn source(&self) -> &Language {
        &self.source
    }

    pub fn target(&self) -> &Language {
        &self.target
    }

    pub fn definitions(&self) -> &Definitions {
        &self.defs
    }

    pub fn provenance(&self) -> BranchProvenance {
        self.provenance
    }

    /// Whether a named relation counts as a target relation.
    pub fn in_target(&self, name: &str, rel: &Relation) -> bool {
        self.target.contains(name, rel)
    }

    /// Largest pruned branch list among visited windows.
    pub fn branching_factor(&self) -> usize {
        self.memo.lock().unwrap().values().map(|e| e.branches.len()).max().unwrap_or(1).max(1)
    }

    /// Largest branch list before pruning among visited windows.
    pub fn unpruned_factor(&self) -> usize {
        self.memo.lock().unwrap().values().map(|e| e.unpruned).max().unwrap_or(1).max(1)
    }

    pub fn memoized(&self) -> Vec<Arc<BranchEntry>> {
        let mut v: Vec<_> = self.memo.lock().unwrap().values().cloned().collect();
        v.sort_by(|a, b| a.key.cmp(&b.key));
        v
    }

    fn window_instance(&self, cs: &[SlotConstraint]) -> Result<Instance> {
        let names: Vec<String> = (0..self.radius).map(slot_name).collect();
        let mut inst = Instance::with_variables(self.scheme.clone(), &names);
        for (name, scope) in cs {
            let rel = self
                .source
                .get(name)
                .or_else(|| self.target.get(name))
                .ok_or_else(|| Error::UnknownRelation(name.clone()))?;
            let idx = inst.add_relation(name, rel.clone())?;
            inst.push_constraint(idx, scope.clone())?;
        }
        Ok(inst)
    }

    /// Expands the first non-target constraint until only target atoms
    /// remain. Diagonal atoms are dropped when they hold on the identity and
    /// kill the branch when they cannot.
    fn expand(&self, cs: Vec<SlotConstraint>, out: &mut Vec<Vec<SlotConstraint>>) -> Result<()> {
        let pos = cs.iter().position(|(name, _)| {
            let rel = self.source.get(name).expect("window relations come from the source");
            !self.target.contains(name, rel)
        });
        let Some(pos) = pos else {
            out.push(canonical(cs));
            return Ok(());
        };
        let (name, scope) = &cs[pos];
        let clauses = self.defs.get(name).ok_or_else(|| Error::MissingDefinition(name.clone()))?;
        let identity = self.scheme.identity();
        'clause: for clause in clauses {
            let mut next: Vec<SlotConstraint> = cs.iter().enumerate().filter(|&(i, _)| i != pos).map(|(_, c)| c.clone()).collect();
            for (t, i, j) in clause {
                let (x, y) = (scope[*i], scope[*j]);
                if x == y {
                    if let Some(mask) = self.target.get(t).and_then(|r| r.as_union()) {
                        if identity.is_subset(mask) {
                            continue;
                        }
                        if (mask & identity).is_empty() {
                            continue 'clause;
                        }
                    }
                }
                let flipped = (x > y)
                    .then(|| self.target.get(t).and_then(|r| r.as_union()))
                    .flatten()
                    .and_then(|mask| self.target.name_of_union(self.scheme.converse_set(mask)));
                match flipped {
                    Some(c) => next.push((c.to_string(), vec![y, x])),
                    None => next.push((t.clone(), vec![x, y])),
                }
            }
            self.expand(next, out)?;
        }
        Ok(())
    }

    fn compute(&self, key: &[SlotConstraint]) -> Result<BranchEntry> {
        let mut raw = Vec::new();
        self.expand(key.to_vec(), &mut raw)?;
        let unpruned = raw.len();
        let mut seen = BTreeSet::new();
        let mut branches = Vec::new();
        for b in raw {
            if !seen.insert(b.clone()) {
                continue;
            }
            if self.oracle.satisfiable(&self.window_instance(&b)?)? {
                branches.push(b);
            }
        }
        Ok(BranchEntry { key: key.to_vec(), branches, unpruned })
    }

    /// The memoized entry of a canonical window, computing it on first use.
    pub fn entry(&self, key: Vec<SlotConstraint>) -> Result<Arc<BranchEntry>> {
        let key = canonical(key);
        for (_, scope) in &key {
            if scope.iter().any(|&v| v >= self.radius) {
                return Err(Error::RadiusExceeded { size: scope.iter().max().unwrap() + 1, radius: self.radius });
            }
        }
        if let Some(e) = self.memo.lock().unwrap().get(&key) {
            return Ok(e.clone());
        }
        // computed outside the lock; racing duplicates agree
        let e = Arc::new(self.compute(&key)?);
        self.memo.lock().unwrap().entry(key).or_insert(e.clone());
        Ok(e)
    }

    /// Ω applied to a local instance of at most `r` variables. Branches come
    /// back over the local variables. An empty list means unsatisfiable.
    pub fn apply(&self, local: &Instance) -> Result<Vec<Instance>> {
        if local.num_vars() > self.radius {
            return Err(Error::RadiusExceeded { size: local.num_vars(), radius: self.radius });
        }
        let mut key = Vec::with_capacity(local.constraints().len());
        for c in local.constraints() {
            let (name, rel) = local.relation(c.rel);
            if !self.source.contains(name, rel) {
                return Err(Error::MissingRelationFamily(name.to_string()));
            }
            key.push((name.to_string(), c.scope.clone()));
        }
        let entry = self.entry(key)?;
        let names: Vec<&str> = local.variables().iter().map(|s| s.as_str()).collect();
        entry
            .branches
            .iter()
            .map(|b| {
                let mut inst = Instance::with_variables(self.scheme.clone(), &names);
                for (t, scope) in b {
                    let idx = inst.add_relation(t, self.target.get(t).expect("target atom").clone())?;
                    inst.push_constraint(idx, scope.clone())?;
                }
                Ok(inst)
            })
            .collect()
    }

    fn universe(&self) -> Result<Arc<CertificateUniverse>> {
        let mut slot = self.universe.lock().unwrap();
        if let Some(u) = slot.as_ref() {
            return Ok(u.clone());
        }
        let u = Arc::new(CertificateUniverse::new(&self.oracle, &self.scheme, self.radius)?);
        *slot = Some(u.clone());
        Ok(u)
    }

    /// Solution preservation: the window's certificates are exactly the
    /// union of its branches' certificates.
    pub fn check_entry(&self, entry: &BranchEntry) -> Result<bool> {
        let u = self.universe()?;
        let key: BTreeSet<usize> = u.models(&self.window_instance(&entry.key)?).into_iter().collect();
        let mut union = BTreeSet::new();
        for b in &entry.branches {
            union.extend(u.models(&self.window_instance(b)?));
        }
        Ok(key == union)
    }

    /// Visits every window made of one source constraint per slot pair, with
    /// scopes in slot order. Returns the number of windows visited.
    pub fn visit_full_windows(&self) -> Result<usize> {
        let binaries: Vec<&str> = self.source.relations().filter(|(_, r)| r.arity() == 2).map(|(n, _)| n).collect();
        let pairs: Vec<(usize, usize)> =
            (0..self.radius).flat_map(|i| (i + 1..self.radius).map(move |j| (i, j))).collect();
        let mut count = 0;
        let mut idx = vec![0usize; pairs.len()];
        if binaries.is_empty() {
            return Ok(0);
        }
        loop {
            let key = pairs
                .iter()
                .zip(&idx)
                .map(|(&(i, j), &r)| (binaries[r].to_string(), vec![i, j]))
                .collect();
            self.entry(key)?;
            count += 1;
            let mut p = 0;
            loop {
                if p == idx.len() {
                    return Ok(count);
                }
                idx[p] += 1;
                if idx[p] < binaries.len() {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
    }

    /// Visits each relation alone on slots `0..arity`, then every full
    /// binary window. Returns the number of memoized windows.
    pub fn populate(&self) -> Result<usize> {
        let singles: Vec<SlotConstraint> =
            self.source.relations().map(|(n, r)| (n.to_string(), (0..r.arity()).collect())).collect();
        for c in &singles {
            self.entry(vec![c.clone()])?;
        }
        self.visit_full_windows()?;
        Ok(self.memo.lock().unwrap().len())
    }

    /// Memo table dump: window to branch lists, constraints printed over `x1..xr`.
    pub fn to_json(&self) -> String {
        let entries: IndexMap<String, Vec<Vec<String>>> = self
            .memoized()
            .iter()
            .map(|e| {
                let key: Vec<String> = e.key.iter().map(format_constraint).collect();
                let branches = e.branches.iter().map(|b| b.iter().map(format_constraint).collect()).collect();
                (key.join(";"), branches)
            })
            .collect();
        let v = serde_json::json!({
            "scheme": self.scheme.name(),
            "radius": self.radius,
            "provenance": self.provenance,
            "branching_factor": self.branching_factor(),
            "unpruned_factor": self.unpruned_factor(),
            "source": self.source.to_json_value(),
            "target": self.target.to_json_value(),
            "definitions": self.defs,
            "entries": entries,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("map serializes");
        s.push('\n');
        s
    }

    /// Rebuilds a map from a dump. Only languages, radius and definitions are
    /// read; entries are recomputed on demand.
    pub fn from_json(text: &str, oracle: &Oracle) -> Result<Self> {
        #[derive(Deserialize)]
        struct Dump {
            radius: usize,
            provenance: BranchProvenance,
            source: serde_json::Value,
            target: serde_json::Value,
            definitions: Definitions,
        }
        let d: Dump = serde_json::from_str(text)?;
        let source = Language::from_json(&d.source.to_string())?;
        let target = Language::from_json(&d.target.to_string())?;
        let mut map = BranchingMap::synthesize(&source, &target, d.radius, d.definitions, oracle)?;
        map.provenance = d.provenance;
        Ok(map)
    }
}

fn basic_language(scheme: &Arc<Scheme>) -> Result<Language> {
    let mut lang = Language::new(scheme.clone());
    for b in 0..scheme.m() {
        lang.insert(scheme.basic_name(b), Relation::Union(BasicSet::singleton(b)))?;
    }
    Ok(lang)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(inst: &Instance) -> BTreeSet<String> {
        inst.constraints()
            .iter()
            .map(|c| {
                let vars: Vec<&str> = c.scope.iter().map(|&v| inst.var_name(v)).collect();
                format!("{}({})", inst.rel_name_of(c), vars.join(","))
            })
            .collect()
    }

    #[test]
    fn delta_map_examples() {
        let oracle = Oracle::new();
        let map = BranchingMap::delta(&oracle).unwrap();
        let lang = Language::load("eq:delta+basic").unwrap();
        let mut local = Instance::with_variables(lang.scheme().clone(), &["x1", "x2", "x3"]);
        local.add_from_language(&lang, "delta", &["x1", "x2", "x3"]).unwrap();
        let out = map.apply(&local).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(names(&out[0]), ["=(x1,x2)", "!=(x1,x3)"].iter().map(|s| s.to_string()).collect());
        assert_eq!(names(&out[1]), ["!=(x1,x2)", "=(x2,x3)"].iter().map(|s| s.to_string()).collect());

        let mut rep = Instance::with_variables(lang.scheme().clone(), &["x1", "x3"]);
        rep.add_from_language(&lang, "delta", &["x1", "x1", "x3"]).unwrap();
        let out = map.apply(&rep).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(names(&out[0]), ["!=(x1,x3)".to_string()].into());

        // the rotated pair stays satisfiable through x1!=x2, x2=x3
        let mut two = Instance::with_variables(lang.scheme().clone(), &["x1", "x2", "x3"]);
        two.add_from_language(&lang, "delta", &["x1", "x2", "x3"]).unwrap();
        two.add_from_language(&lang, "delta", &["x2", "x3", "x1"]).unwrap();
        let out = map.apply(&two).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(names(&out[0]), ["!=(x1,x2)", "=(x2,x3)"].iter().map(|s| s.to_string()).collect());

        for e in map.memoized() {
            assert!(map.check_entry(&e).unwrap());
        }
        assert!(matches!(
            map.apply(&Instance::with_variables(lang.scheme().clone(), &["a", "b", "c", "d"])),
            Err(Error::RadiusExceeded { .. })
        ));
    }

    #[test]
    fn target_windows_pass_through() {
        let oracle = Oracle::new();
        let map = BranchingMap::delta(&oracle).unwrap();
        let lang = Language::load("eq:basic").unwrap();
        let mut local = Instance::with_variables(lang.scheme().clone(), &["a", "b"]);
        local.add_from_language(&lang, "!=", &["a", "b"]).unwrap();
        let out = map.apply(&local).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(names(&out[0]), names(&local));
    }

    #[test]
    fn rcc5_split_factors() {
        let oracle = Oracle::new();
        let two = BranchingMap::rcc5_pp_split(2, &oracle).unwrap();
        assert_eq!(two.visit_full_windows().unwrap(), 31);
        assert_eq!(two.branching_factor(), 2);
        for e in two.memoized() {
            assert!(two.check_entry(&e).unwrap());
        }
        let three = BranchingMap::rcc5_pp_split(3, &oracle).unwrap();
        let key = vec![
            ("PP|PPi".to_string(), vec![0, 1]),
            ("PP|PPi".to_string(), vec![1, 2]),
            ("PP|PPi".to_string(), vec![0, 2]),
        ];
        let e = three.entry(key).unwrap();
        assert_eq!(e.unpruned, 8);
        assert!(e.branches.len() <= 7);
        assert!(three.check_entry(&e).unwrap());
    }

    #[test]
    fn synthesis_preconditions() {
        let oracle = Oracle::new();
        let delta = Language::load("eq:delta").unwrap();
        let basic = Language::load("eq:basic").unwrap();
        assert!(matches!(
            BranchingMap::synthesize_from_backdoor_triple(&delta, &basic, 2, &oracle),
            Err(Error::RadiusTooSmall { .. })
        ));
        let all = Language::load("rcc5:all").unwrap();
        let rbasic = Language::load("rcc5:basic").unwrap();
        assert!(matches!(
            BranchingMap::synthesize_from_backdoor_triple(&all, &rbasic, 1, &oracle),
            Err(Error::RadiusTooSmall { .. })
        ));
        assert!(matches!(
            BranchingMap::synthesize(&delta, &basic, 3, Definitions::new(), &oracle),
            Err(Error::MissingDefinition(_))
        ));
        let text = r#"{"delta": {"or": [{"and": [{"atom": [0,1,"="]}, {"not": {"atom": [0,2,"="]}}]}]}}"#;
        assert!(matches!(parse_definitions(text, &delta, &basic), Err(Error::NegationInDefinition(_))));
        let text = r#"{"delta": {"or": [{"and": [{"atom": [0,1,"="]}, {"atom": [0,2,"!="]}]},
                                        {"and": [{"atom": [0,1,"!="]}, {"atom": [1,2,"="]}]}]}}"#;
        let defs = parse_definitions(text, &delta, &basic).unwrap();
        let map = BranchingMap::synthesize(&delta, &basic, 3, defs, &oracle).unwrap();
        let e = map.entry(vec![("delta".into(), vec![0, 1, 2])]).unwrap();
        assert_eq!(e.branches.len(), 2);
        let again = BranchingMap::from_json(&map.to_json(), &oracle).unwrap();
        assert_eq!(again.entry(vec![("delta".into(), vec![0, 1, 2])]).unwrap().branches, e.branches);
        // identity map when the source is inside the target
        let id = BranchingMap::synthesize(&basic, &basic, 2, Definitions::new(), &oracle).unwrap();
        let e = id.entry(vec![("=".into(), vec![0, 1])]).unwrap();
        assert_eq!(e.branches, vec![vec![("=".to_string(), vec![0, 1])]]);
    }

    #[test]
    fn rcc5_basic_triple_is_bounded_by_clause_count() {
        let oracle = Oracle::new();
        let all = Language::load("rcc5:all").unwrap();
        let rbasic = Language::load("rcc5:basic").unwrap();
        let map = BranchingMap::synthesize_from_backdoor_triple(&all, &rbasic, 2, &oracle).unwrap();
        map.visit_full_windows().unwrap();
        assert_eq!(map.branching_factor(), 5);
        assert_eq!(map.entry(vec![("DR|PO".into(), vec![0, 1])]).unwrap().branches.len(), 2);
    }
}
