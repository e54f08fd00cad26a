//! Simplification maps: reduced-constraint keys, generic computation for
//! finite languages with binary targets, and the built-in map for `R_k`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use indexmap::IndexMap;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{BasicSet, Relation, Scheme};
use crate::error::{Error, Result};
use crate::gadgets::build_rk;
use crate::language::{Language, DEFAULT_ARITY_CAP};
use crate::model::{Instance, PairAssignment};
use crate::oracle::{CertificateUniverse, Network, Oracle};

/// Relation name used for the unsatisfiable marker atom.
pub const UNSAT_RELATION: &str = "EMPTY";

/// Canonical description of a reduced constraint: the relation, the
/// repetition pattern of its scope, and α on pairs of scope classes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReducedKey {
    pub relation: String,
    /// Restricted growth string: class index of each scope position.
    pub pattern: Vec<usize>,
    /// `((p, q), basic)` with `p < q` (or `p == q` when diagonals carry choice), sorted.
    pub alpha: Vec<((usize, usize), usize)>,
}

fn growth_pattern<T: PartialEq + Copy>(scope: &[T]) -> (Vec<usize>, Vec<T>) {
    let mut reps: Vec<T> = Vec::new();
    let pattern = scope
        .iter()
        .map(|v| match reps.iter().position(|r| r == v) {
            Some(p) => p,
            None => {
                reps.push(*v);
                reps.len() - 1
            }
        })
        .collect();
    (pattern, reps)
}

fn class_pairs(q: usize, diag: bool) -> Vec<(usize, usize)> {
    (0..q)
        .flat_map(|p| (p..q).map(move |r| (p, r)))
        .filter(|&(p, r)| p < r || diag)
        .collect()
}

impl ReducedKey {
    /// Key of constraint `ci` of `inst` under `alpha`.
    pub fn of(inst: &Instance, ci: usize, alpha: &PairAssignment) -> ReducedKey {
        let scheme = inst.scheme();
        let c = &inst.constraints()[ci];
        let (pattern, reps) = growth_pattern(&c.scope);
        let mut out = Vec::new();
        if !alpha.is_empty() {
            for (p, q) in class_pairs(reps.len(), scheme.has_diagonal_choice()) {
                if let Some(b) = alpha.get(scheme, reps[p], reps[q]) {
                    out.push(((p, q), b));
                }
            }
        }
        ReducedKey { relation: inst.rel_name_of(c).to_string(), pattern, alpha: out }
    }

    pub fn classes(&self) -> usize {
        self.pattern.iter().copied().max().map_or(0, |m| m + 1)
    }

    pub fn canonical(&self, scheme: &Scheme) -> String {
        let pattern: Vec<String> = self.pattern.iter().map(|p| p.to_string()).collect();
        let alpha: Vec<String> = self
            .alpha
            .iter()
            .map(|((p, q), b)| format!("{p}-{q}:{}", scheme.basic_name(*b)))
            .collect();
        format!("{}/{}/{}", self.relation, pattern.join("."), alpha.join(","))
    }

    pub fn parse(text: &str, scheme: &Scheme) -> Result<ReducedKey> {
        let bad = |m: &str| Error::parse(format!("key `{text}`"), m.to_string());
        let mut parts = text.rsplitn(3, '/');
        let alpha_txt = parts.next().ok_or_else(|| bad("missing alpha"))?;
        let pattern_txt = parts.next().ok_or_else(|| bad("missing pattern"))?;
        let relation = parts.next().ok_or_else(|| bad("missing relation"))?.to_string();
        let pattern = pattern_txt
            .split('.')
            .map(|p| p.parse::<usize>().map_err(|_| bad("bad pattern")))
            .collect::<Result<Vec<_>>>()?;
        let mut alpha = Vec::new();
        if !alpha_txt.is_empty() {
            for entry in alpha_txt.split(',') {
                let (pq, b) = entry.split_once(':').ok_or_else(|| bad("bad alpha entry"))?;
                let (p, q) = pq.split_once('-').ok_or_else(|| bad("bad alpha pair"))?;
                let p = p.parse().map_err(|_| bad("bad alpha pair"))?;
                let q = q.parse().map_err(|_| bad("bad alpha pair"))?;
                let b = scheme.basic_index(b).ok_or_else(|| bad("unknown basic"))?;
                alpha.push(((p, q), b));
            }
        }
        Ok(ReducedKey { relation, pattern, alpha })
    }

    /// The reduced constraint over class variables `c0..`.
    pub fn local_instance(&self, scheme: &Arc<Scheme>, rel: &Relation) -> Result<Instance> {
        let q = self.classes();
        let names: Vec<String> = (0..q).map(|i| format!("c{i}")).collect();
        let mut inst = Instance::with_variables(scheme.clone(), &names);
        let idx = inst.add_relation(&self.relation, rel.clone())?;
        inst.push_constraint(idx, self.pattern.clone())?;
        for &((p, r), b) in &self.alpha {
            let idx = inst.add_relation(scheme.basic_name(b), Relation::Union(BasicSet::singleton(b)))?;
            inst.push_constraint(idx, vec![p, r])?;
        }
        Ok(inst)
    }
}

/// A defined map entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimpEntry {
    /// Conjunction of target atoms `(T-name, p, q)` over class indices.
    Formula(Vec<(String, usize, usize)>),
    Unsat,
}

impl fmt::Display for SimpEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpEntry::Unsat => write!(f, "UNSAT"),
            SimpEntry::Formula(atoms) => {
                let parts: Vec<String> = atoms.iter().map(|(t, p, q)| format!("{t}(c{p},c{q})")).collect();
                write!(f, "{{{}}}", parts.join(", "))
            }
        }
    }
}

/// Result of looking up a constraint under α.
#[derive(Clone, Debug)]
pub enum Lookup {
    Undefined,
    Unsat,
    /// Target constraints over the constraint's scope variables.
    Local(Instance),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Computed,
    Builtin,
}

/// Σ: a partial map from reduced constraints to target formulas.
pub struct SimplificationMap {
    scheme: Arc<Scheme>,
    source: Language,
    target: Language,
    cap: usize,
    provenance: Provenance,
    rk_rule: bool,
    table: IndexMap<String, Option<SimpEntry>>,
    oracle: Oracle,
    universes: Mutex<HashMap<usize, Arc<CertificateUniverse>>>,
}

impl fmt::Debug for SimplificationMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimplificationMap")
            .field("scheme", &self.scheme.name())
            .field("entries", &self.table.len())
            .field("provenance", &self.provenance)
            .finish()
    }
}

fn rk_arity(name: &str) -> Option<usize> {
    name.strip_prefix('R').and_then(|k| k.parse::<usize>().ok()).filter(|&k| k >= 2)
}

fn is_rk(name: &str, rel: &Relation) -> bool {
    let Some(k) = rk_arity(name) else {
        return false;
    };
    match (rel, build_rk(k)) {
        (Relation::Dnf(d), Ok(rk)) => *d == rk,
        _ => false,
    }
}

/// The polynomial-time entry for `R_k` under a key, following the gadget's
/// case analysis: any equal pair forces all equal, any unequal pair forces
/// all distinct, and with nothing fixed there is no entry.
pub fn builtin_rk_entry(key: &ReducedKey, scheme: &Scheme) -> Option<SimpEntry> {
    let q = key.classes();
    let identity = scheme.identity();
    let has_eq = q < key.pattern.len() || key.alpha.iter().any(|&(_, b)| identity.contains(b));
    let has_neq = key.alpha.iter().any(|&((p, r), b)| p != r && !identity.contains(b));
    let eq = scheme.basic_name(scheme.identity_basic().expect("equality scheme")).to_string();
    let neq = scheme.format_set(BasicSet(scheme.full().0 & !identity.0));
    match (has_eq, has_neq) {
        (true, true) => Some(SimpEntry::Unsat),
        (true, false) => Some(SimpEntry::Formula((1..q).map(|i| (eq.clone(), 0, i)).collect())),
        (false, true) => Some(SimpEntry::Formula(
            (0..q).flat_map(|p| (p + 1..q).map(move |r| (p, r))).map(|(p, r)| (neq.clone(), p, r)).collect(),
        )),
        (false, false) => None,
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FormulaJson {
    Atoms(Vec<(String, usize, usize)>),
    Marker(String),
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    key: String,
    formula: Option<FormulaJson>,
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    scheme: String,
    source: serde_json::Value,
    target: serde_json::Value,
    cap: usize,
    provenance: Provenance,
    entries: Vec<EntryJson>,
}

impl SimplificationMap {
    fn empty(source: Language, target: Language, cap: usize, provenance: Provenance, oracle: Oracle) -> Result<Self> {
        let scheme = source.scheme().clone();
        if scheme.name() != target.scheme().name() {
            return Err(Error::SchemeMismatch(scheme.name().into(), target.scheme().name().into()));
        }
        let source = source.union_with(&target)?;
        for (name, rel) in target.relations() {
            if rel.as_union().is_none() {
                return Err(Error::NonBinaryTarget(name.to_string()));
            }
        }
        Ok(SimplificationMap {
            scheme,
            source,
            target,
            cap,
            provenance,
            rk_rule: false,
            table: IndexMap::new(),
            oracle,
            universes: Mutex::new(HashMap::new()),
        })
    }

    /// Computes every entry for keys over `source ∪ target`.
    pub fn compute(source: &Language, target: &Language, oracle: &Oracle, cap: usize) -> Result<Self> {
        let arity = source.max_arity();
        if arity > cap {
            return Err(Error::ArityCapExceeded { arity, cap });
        }
        let mut map = SimplificationMap::empty(source.clone(), target.clone(), cap, Provenance::Computed, oracle.clone())?;
        let keys = map.all_keys()?;
        let entries: Vec<Result<Option<SimpEntry>>> = keys.par_iter().map(|k| map.compute_entry(k)).collect();
        for (k, e) in keys.iter().zip(entries) {
            map.table.insert(k.canonical(&map.scheme), e?);
        }
        Ok(map)
    }

    /// The built-in map for the `R_k` family over the equality scheme. Target
    /// relations are `=` and `!=`; entries for them are computed generically.
    pub fn builtin_rk(oracle: &Oracle) -> Result<Self> {
        let target = Language::load("eq:basic")?;
        let mut map = SimplificationMap::compute(&target, &target, oracle, DEFAULT_ARITY_CAP)?;
        map.provenance = Provenance::Builtin;
        map.rk_rule = true;
        Ok(map)
    }

    pub fn scheme(&self) -> &Arc<Scheme> {
        &self.scheme
    }

    pub fn source(&self) -> &Language {
        &self.source
    }

    pub fn target(&self) -> &Language {
        &self.target
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, Option<&SimpEntry>)> {
        self.table.iter().map(|(k, v)| (k.as_str(), v.as_ref()))
    }

    fn universe(&self, n: usize) -> Result<Arc<CertificateUniverse>> {
        if let Some(u) = self.universes.lock().expect("universe cache").get(&n) {
            return Ok(u.clone());
        }
        let u = Arc::new(CertificateUniverse::new(&self.oracle, &self.scheme, n)?);
        self.universes.lock().expect("universe cache").insert(n, u.clone());
        Ok(u)
    }

    fn all_keys(&self) -> Result<Vec<ReducedKey>> {
        let scheme = &*self.scheme;
        let diag = scheme.has_diagonal_choice();
        let mut keys = Vec::new();
        for (name, rel) in self.source.relations() {
            for pattern in growth_strings(rel.arity()) {
                let q = pattern.iter().max().map_or(0, |m| m + 1);
                let pairs = class_pairs(q, diag);
                let choices: Vec<Vec<Option<usize>>> = pairs
                    .iter()
                    .map(|&(p, r)| {
                        let allowed = if p == r { scheme.identity() } else { scheme.full() };
                        std::iter::once(None).chain(allowed.iter().map(Some)).collect()
                    })
                    .collect();
                for pick in cartesian(&choices) {
                    let alpha: Vec<((usize, usize), usize)> = pairs
                        .iter()
                        .zip(&pick)
                        .filter_map(|(&pq, b)| b.map(|b| (pq, b)))
                        .collect();
                    let mut net = Network::new(scheme, q);
                    for &((p, r), b) in &alpha {
                        net.refine(scheme, p, r, BasicSet::singleton(b));
                    }
                    if !self.oracle.network_consistent(scheme, &net)? {
                        continue;
                    }
                    keys.push(ReducedKey { relation: name.to_string(), pattern: pattern.clone(), alpha });
                }
            }
        }
        Ok(keys)
    }

    /// Finds the entry for `key` by per-pair tightest target masks.
    pub fn compute_entry(&self, key: &ReducedKey) -> Result<Option<SimpEntry>> {
        let rel = self.relation_for(&key.relation)?;
        let scheme = &self.scheme;
        let local = key.local_instance(scheme, &rel)?;
        let q = key.classes();
        let universe = self.universe(q)?;
        let models: BTreeSet<usize> = universe.models(&local).into_iter().collect();
        if models.is_empty() {
            return Ok(Some(SimpEntry::Unsat));
        }
        let certs = universe.certificates();
        let mut atoms: Vec<(String, usize, usize, BasicSet)> = Vec::new();
        let mut tight: Vec<((usize, usize), BasicSet)> = Vec::new();
        for (p, r) in class_pairs(q, scheme.has_diagonal_choice()) {
            let seen: BasicSet = models.iter().map(|&k| certs[k].get(p, r)).collect();
            let mut best = if p == r { scheme.identity() } else { scheme.full() };
            let mut pair_atoms = Vec::new();
            let orientations: &[bool] = if p == r { &[false] } else { &[false, true] };
            for &backward in orientations {
                for (name, trel) in self.target.relations() {
                    let mask = trel.as_union().ok_or_else(|| Error::NonBinaryTarget(name.to_string()))?;
                    // masks are kept relative to (p, r)
                    let (mask, a, b) = if backward { (scheme.converse_set(mask), r, p) } else { (mask, p, r) };
                    if seen.is_subset(mask) && !best.is_subset(mask) {
                        best &= mask;
                        pair_atoms.push((name.to_string(), a, b, mask));
                    }
                }
            }
            // drop atoms made redundant by later, tighter ones
            let mut k = 0;
            while k < pair_atoms.len() {
                let rest = pair_atoms
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != k)
                    .fold(if p == r { scheme.identity() } else { scheme.full() }, |acc, (_, a)| acc & a.3);
                if rest == best {
                    pair_atoms.remove(k);
                } else {
                    k += 1;
                }
            }
            atoms.extend(pair_atoms);
            tight.push(((p, r), best));
        }
        let holds = |atoms: &[(String, usize, usize, BasicSet)], cert: usize| {
            atoms.iter().all(|(_, a, b, mask)| mask.contains(certs[cert].get(*a.min(b), *a.max(b))))
        };
        let same_models = |atoms: &[(String, usize, usize, BasicSet)]| {
            (0..certs.len()).all(|k| holds(atoms, k) == models.contains(&k))
        };
        if !same_models(&atoms) {
            return Ok(None);
        }
        let mut k = atoms.len();
        while k > 0 {
            k -= 1;
            let mut trial = atoms.clone();
            trial.remove(k);
            if same_models(&trial) {
                atoms = trial;
            }
        }
        Ok(Some(SimpEntry::Formula(atoms.into_iter().map(|(n, a, b, _)| (n, a, b)).collect())))
    }

    fn relation_for(&self, name: &str) -> Result<Relation> {
        if let Some(r) = self.source.get(name) {
            return Ok(r.clone());
        }
        match rk_arity(name) {
            Some(k) if self.rk_rule => Ok(Relation::Dnf(build_rk(k)?)),
            _ => Err(Error::MissingRelationFamily(name.to_string())),
        }
    }

    /// Σ at a key. Keys missing from the table (inconsistent α) are computed.
    pub fn entry(&self, key: &ReducedKey) -> Result<Option<SimpEntry>> {
        if self.rk_rule && self.source.get(&key.relation).is_none() && rk_arity(&key.relation).is_some() {
            return Ok(builtin_rk_entry(key, &self.scheme));
        }
        match self.table.get(&key.canonical(&self.scheme)) {
            Some(e) => Ok(e.clone()),
            None => self.compute_entry(key),
        }
    }

    fn covers(&self, name: &str, rel: &Relation) -> bool {
        self.source.contains(name, rel) || (self.rk_rule && is_rk(name, rel))
    }

    /// Σ(c|α) for constraint `ci` of `inst`.
    pub fn lookup(&self, inst: &Instance, ci: usize, alpha: &PairAssignment) -> Result<Lookup> {
        let c = &inst.constraints()[ci];
        let (name, rel) = inst.relation(c.rel);
        if !self.covers(name, rel) {
            return Err(Error::MissingRelationFamily(name.to_string()));
        }
        let key = ReducedKey::of(inst, ci, alpha);
        Ok(match self.entry(&key)? {
            None => Lookup::Undefined,
            Some(SimpEntry::Unsat) => Lookup::Unsat,
            Some(SimpEntry::Formula(atoms)) => {
                let (_, reps) = growth_pattern(&c.scope);
                let names: Vec<&str> = reps.iter().map(|&v| inst.var_name(v)).collect();
                let mut local = Instance::with_variables(self.scheme.clone(), &names);
                for (t, p, q) in atoms {
                    let trel = self.target.get(&t).ok_or_else(|| Error::UnknownRelation(t.clone()))?;
                    let idx = local.add_relation(&t, trel.clone())?;
                    local.push_constraint(idx, vec![p, q])?;
                }
                Lookup::Local(local)
            }
        })
    }

    /// Whether Σ(c|α) is defined.
    pub fn is_defined(&self, inst: &Instance, ci: usize, alpha: &PairAssignment) -> Result<bool> {
        let c = &inst.constraints()[ci];
        let (name, rel) = inst.relation(c.rel);
        if !self.covers(name, rel) {
            return Err(Error::MissingRelationFamily(name.to_string()));
        }
        Ok(self.entry(&ReducedKey::of(inst, ci, alpha))?.is_some())
    }

    /// Checks an entry against the oracle: a defined entry has exactly the
    /// certificates of the reduced constraint, an undefined one has no
    /// equivalent in the binary candidate space.
    pub fn check_entry(&self, key: &ReducedKey, entry: &Option<SimpEntry>) -> Result<bool> {
        match entry {
            None => Ok(self.compute_entry(key)?.is_none()),
            Some(e) => {
                let local = key.local_instance(&self.scheme, &self.relation_for(&key.relation)?)?;
                let formula = self.entry_instance(key, e)?;
                let u = self.universe(key.classes())?;
                Ok(u.models(&local) == u.models(&formula))
            }
        }
    }

    /// The entry as an instance over class variables `c0..`.
    pub fn entry_instance(&self, key: &ReducedKey, entry: &SimpEntry) -> Result<Instance> {
        let q = key.classes();
        let names: Vec<String> = (0..q).map(|i| format!("c{i}")).collect();
        let mut inst = Instance::with_variables(self.scheme.clone(), &names);
        match entry {
            SimpEntry::Unsat => {
                let idx = inst.add_relation(UNSAT_RELATION, Relation::Union(BasicSet::EMPTY))?;
                inst.push_constraint(idx, vec![0, q.saturating_sub(1)])?;
            }
            SimpEntry::Formula(atoms) => {
                for (t, p, r) in atoms {
                    let rel = self.target.get(t).ok_or_else(|| Error::UnknownRelation(t.clone()))?;
                    let idx = inst.add_relation(t, rel.clone())?;
                    inst.push_constraint(idx, vec![*p, *r])?;
                }
            }
        }
        Ok(inst)
    }

    /// Re-derives `count` randomly chosen entries (seeded) and compares.
    pub fn verify_sample(&self, count: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.table.len();
        let picks = sample(&mut rng, n, count.min(n)).into_vec();
        for i in picks {
            let (k, e) = self.table.get_index(i).expect("index in range");
            let key = ReducedKey::parse(k, &self.scheme)?;
            if self.compute_entry(&key)? != *e {
                return Err(Error::Invalid(format!("map entry `{k}` does not match its reduced constraint")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = MapFile {
            scheme: self.scheme.name().to_string(),
            source: self.source.to_json_value(),
            target: self.target.to_json_value(),
            cap: self.cap,
            provenance: self.provenance,
            entries: self
                .table
                .iter()
                .map(|(k, e)| EntryJson {
                    key: k.clone(),
                    formula: e.as_ref().map(|e| match e {
                        SimpEntry::Unsat => FormulaJson::Marker("UNSAT".into()),
                        SimpEntry::Formula(atoms) => FormulaJson::Atoms(atoms.clone()),
                    }),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("map serializes");
        s.push('\n');
        s
    }

    /// Parses a map file and verifies a seeded sample of 100 entries.
    pub fn from_json(text: &str, oracle: &Oracle) -> Result<Self> {
        let file: MapFile = serde_json::from_str(text)?;
        let source = Language::from_json(&file.source.to_string())?;
        let target = Language::from_json(&file.target.to_string())?;
        let mut map = SimplificationMap::empty(source, target, file.cap, file.provenance, oracle.clone())?;
        if file.provenance == Provenance::Builtin {
            map.rk_rule = true;
        }
        for e in file.entries {
            let entry = match e.formula {
                None => None,
                Some(FormulaJson::Marker(m)) if m == "UNSAT" => Some(SimpEntry::Unsat),
                Some(FormulaJson::Marker(m)) => {
                    return Err(Error::parse(format!("entry `{}`", e.key), format!("unknown marker `{m}`")))
                }
                Some(FormulaJson::Atoms(a)) => Some(SimpEntry::Formula(a)),
            };
            ReducedKey::parse(&e.key, &map.scheme)?;
            map.table.insert(e.key, entry);
        }
        map.verify_sample(100, 0)?;
        Ok(map)
    }
}

/// All restricted growth strings of length `k`.
pub fn growth_strings(k: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, k: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for c in 0..=max {
            cur.push(c);
            rec(cur, k, if c == max { max + 1 } else { max }, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k == 0 {
        out.push(Vec::new());
    } else {
        rec(&mut Vec::new(), k, 0, &mut out);
    }
    out
}

fn cartesian<T: Clone>(choices: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for opts in choices {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut v = prefix.clone();
                    v.push(o.clone());
                    v
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::load_scheme;

    fn key(relation: &str, pattern: &[usize], alpha: &[((usize, usize), usize)]) -> ReducedKey {
        ReducedKey { relation: relation.into(), pattern: pattern.to_vec(), alpha: alpha.to_vec() }
    }

    #[test]
    fn growth_strings_counts() {
        assert_eq!(growth_strings(3).len(), 5);
        assert_eq!(growth_strings(4).len(), 15);
        assert_eq!(growth_strings(2), vec![vec![0, 0], vec![0, 1]]);
    }

    #[test]
    fn key_canonical_round_trip() {
        let s = load_scheme("rcc5").unwrap();
        let k = key("PP|PPi", &[0, 1], &[((0, 1), 2)]);
        let text = k.canonical(&s);
        assert_eq!(text, "PP|PPi/0.1/0-1:PP");
        assert_eq!(ReducedKey::parse(&text, &s).unwrap(), k);
        let k = key("a/b", &[0, 0, 1], &[]);
        assert_eq!(ReducedKey::parse(&k.canonical(&s), &s).unwrap(), k);
    }

    #[test]
    fn rcc5_union_map_is_unsat_or_basic() {
        let all = Language::load("rcc5:all").unwrap();
        let basic = Language::load("rcc5:basic").unwrap();
        let map = SimplificationMap::compute(&all, &basic, &Oracle::new(), 4).unwrap();
        let s = map.scheme().clone();
        for (name, rel) in all.relations() {
            let mask = rel.as_union().unwrap();
            for b in 0..5 {
                let e = map.entry(&key(name, &[0, 1], &[((0, 1), b)])).unwrap();
                if mask.contains(b) {
                    assert_eq!(e, Some(SimpEntry::Formula(vec![(s.basic_name(b).into(), 0, 1)])), "{name} {b}");
                } else {
                    assert_eq!(e, Some(SimpEntry::Unsat));
                }
            }
            let free = map.entry(&key(name, &[0, 1], &[])).unwrap();
            assert_eq!(free.is_some(), mask.len() == 1 || mask == s.full(), "{name}");
        }
    }

    #[test]
    fn delta_entries() {
        let delta = Language::load("eq:delta").unwrap();
        let basic = Language::load("eq:basic").unwrap();
        let map = SimplificationMap::compute(&delta, &basic, &Oracle::new(), 4).unwrap();
        let e = map.entry(&key("delta", &[0, 1, 2], &[((0, 1), 0)])).unwrap();
        assert_eq!(e, Some(SimpEntry::Formula(vec![("=".into(), 0, 1), ("!=".into(), 0, 2)])));
        assert_eq!(map.entry(&key("delta", &[0, 1, 2], &[])).unwrap(), None);
        assert_eq!(
            map.entry(&key("delta", &[0, 0, 1], &[])).unwrap(),
            Some(SimpEntry::Formula(vec![("!=".into(), 0, 1)]))
        );
        for (k, e) in map.entries() {
            let key = ReducedKey::parse(k, map.scheme()).unwrap();
            assert!(map.check_entry(&key, &e.cloned()).unwrap(), "{k}");
        }
    }

    #[test]
    fn lookup_cases() {
        let lang = Language::load("eq:delta+basic").unwrap();
        let basic = Language::load("eq:basic").unwrap();
        let map = SimplificationMap::compute(&lang, &basic, &Oracle::new(), 4).unwrap();
        let s = lang.scheme().clone();
        let mut inst = Instance::with_variables(s.clone(), &["x", "z", "w"]);
        inst.add_from_language(&lang, "!=", &["x", "z"]).unwrap();
        inst.add_from_language(&lang, "delta", &["x", "x", "z"]).unwrap();
        let alpha = PairAssignment::new();
        match map.lookup(&inst, 0, &alpha).unwrap() {
            Lookup::Local(l) => assert_eq!(l.to_string(), "{!=(x,z)}"),
            other => panic!("{other:?}"),
        }
        match map.lookup(&inst, 1, &alpha).unwrap() {
            Lookup::Local(l) => assert_eq!(l.to_string(), "{!=(x,z)}"),
            other => panic!("{other:?}"),
        }
        let mut alpha = PairAssignment::new();
        alpha.set(&s, 0, 1, 0).unwrap();
        assert!(matches!(map.lookup(&inst, 0, &alpha).unwrap(), Lookup::Unsat));
        let unsat = map.entry_instance(&key("!=", &[0, 1], &[((0, 1), 0)]), &SimpEntry::Unsat).unwrap();
        assert!(Oracle::new().find_certificate(&unsat).unwrap().is_none());

        let r3 = Language::load("eq:R3").unwrap();
        inst.add_from_language(&r3, "R3", &["x", "z", "w"]).unwrap();
        assert!(matches!(map.lookup(&inst, 2, &alpha), Err(Error::MissingRelationFamily(_))));
    }

    #[test]
    fn builtin_rk_cases() {
        let map = SimplificationMap::builtin_rk(&Oracle::new()).unwrap();
        let s = map.scheme().clone();
        let (eq, ne) = (s.basic_index("=").unwrap(), s.basic_index("!=").unwrap());
        assert_eq!(
            map.entry(&key("R3", &[0, 1, 2], &[((0, 1), eq)])).unwrap(),
            Some(SimpEntry::Formula(vec![("=".into(), 0, 1), ("=".into(), 0, 2)]))
        );
        assert_eq!(
            map.entry(&key("R3", &[0, 1, 2], &[((0, 1), ne)])).unwrap(),
            Some(SimpEntry::Formula(vec![("!=".into(), 0, 1), ("!=".into(), 0, 2), ("!=".into(), 1, 2)]))
        );
        assert_eq!(map.entry(&key("R3", &[0, 1, 2], &[])).unwrap(), None);
        assert_eq!(map.entry(&key("R3", &[0, 0, 1], &[((0, 1), ne)])).unwrap(), Some(SimpEntry::Unsat));
        assert_eq!(
            map.entry(&key("R4", &[0, 0, 1, 2], &[])).unwrap(),
            Some(SimpEntry::Formula(vec![("=".into(), 0, 1), ("=".into(), 0, 2)]))
        );
    }

    #[test]
    fn generic_agrees_with_builtin_on_r3() {
        let r3 = Language::load("eq:R3").unwrap();
        let basic = Language::load("eq:basic").unwrap();
        let generic = SimplificationMap::compute(&r3, &basic, &Oracle::new(), 4).unwrap();
        let builtin = SimplificationMap::builtin_rk(&Oracle::new()).unwrap();
        let mut seen = 0;
        for (k, e) in generic.entries() {
            let key = ReducedKey::parse(k, generic.scheme()).unwrap();
            if key.relation != "R3" {
                continue;
            }
            seen += 1;
            let b = builtin.entry(&key).unwrap();
            assert_eq!(b.is_some(), e.is_some(), "{k}");
            assert!(builtin.check_entry(&key, &b).unwrap(), "{k}");
        }
        assert!(seen > 20);
    }

    #[test]
    fn file_round_trip() {
        let delta = Language::load("eq:delta").unwrap();
        let basic = Language::load("eq:basic").unwrap();
        let map = SimplificationMap::compute(&delta, &basic, &Oracle::new(), 4).unwrap();
        let text = map.to_json();
        let back = SimplificationMap::from_json(&text, &Oracle::new()).unwrap();
        assert_eq!(back.to_json(), text);
        let tampered = text.replacen("\"UNSAT\"", "[]", 1);
        assert!(SimplificationMap::from_json(&tampered, &Oracle::new()).is_err());
    }

    #[test]
    fn non_binary_target_rejected() {
        let delta = Language::load("eq:delta").unwrap();
        let err = SimplificationMap::compute(&delta, &delta, &Oracle::new(), 4).unwrap_err();
        assert!(matches!(err, Error::NonBinaryTarget(_)));
        let err = SimplificationMap::compute(&delta, &Language::load("eq:basic").unwrap(), &Oracle::new(), 2).unwrap_err();
        assert!(matches!(err, Error::ArityCapExceeded { .. }));
    }
}
