//! Instances, constraints, partial pair assignments and the instance file format.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

use crate::algebra::{load_scheme, BasicSet, Relation, Scheme};
use crate::error::{Error, Result};
use crate::language::{Language, RelationSpec, DEFAULT_ARITY_CAP};

pub type VarId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    /// Index into the instance's relation registry.
    pub rel: usize,
    pub scope: Vec<VarId>,
}

#[derive(Clone, Debug)]
pub struct Instance {
    scheme: Arc<Scheme>,
    variables: IndexSet<String>,
    relations: IndexMap<String, Relation>,
    constraints: Vec<Constraint>,
}

impl Instance {
    pub fn new(scheme: Arc<Scheme>) -> Self {
        Instance {
            scheme,
            variables: IndexSet::new(),
            relations: IndexMap::new(),
            constraints: Vec::new(),
        }
    }

    pub fn with_variables<S: AsRef<str>>(scheme: Arc<Scheme>, names: &[S]) -> Self {
        let mut inst = Instance::new(scheme);
        for n in names {
            inst.add_variable(n.as_ref());
        }
        inst
    }

    pub fn scheme(&self) -> &Arc<Scheme> {
        &self.scheme
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn variables(&self) -> &IndexSet<String> {
        &self.variables
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.variables[v]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.variables.get_index_of(name)
    }

    fn require_var(&self, name: &str) -> Result<VarId> {
        self.var_id(name).ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Adds a variable, returning the existing id if already present.
    pub fn add_variable(&mut self, name: &str) -> VarId {
        self.variables.insert_full(name.to_string()).0
    }

    /// Registers a relation; re-registering an identical definition is a no-op.
    pub fn add_relation(&mut self, name: &str, rel: Relation) -> Result<usize> {
        if let Some((idx, _, existing)) = self.relations.get_full(name) {
            if *existing != rel {
                return Err(Error::RelationConflict(name.to_string()));
            }
            return Ok(idx);
        }
        Ok(self.relations.insert_full(name.to_string(), rel).0)
    }

    pub fn relations(&self) -> &IndexMap<String, Relation> {
        &self.relations
    }

    pub fn relation(&self, idx: usize) -> (&str, &Relation) {
        let (n, r) = self.relations.get_index(idx).expect("relation index");
        (n.as_str(), r)
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.get_index_of(name)
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn rel_of(&self, c: &Constraint) -> &Relation {
        self.relation(c.rel).1
    }

    pub fn rel_name_of(&self, c: &Constraint) -> &str {
        self.relation(c.rel).0
    }

    /// Appends a constraint over registered relation `rel`.
    pub fn push_constraint(&mut self, rel: usize, scope: Vec<VarId>) -> Result<()> {
        let (name, r) = self.relation(rel);
        if r.arity() != scope.len() {
            return Err(Error::ArityMismatch {
                relation: name.to_string(),
                expected: r.arity(),
                found: scope.len(),
            });
        }
        if let Some(&v) = scope.iter().find(|&&v| v >= self.variables.len()) {
            return Err(Error::UnknownVariable(format!("#{v}")));
        }
        self.constraints.push(Constraint { rel, scope });
        Ok(())
    }

    pub fn add_constraint<S: AsRef<str>>(&mut self, rel: &str, scope: &[S]) -> Result<()> {
        let idx = self
            .relation_index(rel)
            .ok_or_else(|| Error::UnknownRelation(rel.to_string()))?;
        let scope = scope
            .iter()
            .map(|n| self.require_var(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        self.push_constraint(idx, scope)
    }

    /// Registers `name` from `lang` if needed, then adds the constraint.
    pub fn add_from_language<S: AsRef<str>>(&mut self, lang: &Language, rel: &str, scope: &[S]) -> Result<()> {
        let r = lang.get(rel).ok_or_else(|| Error::UnknownRelation(rel.to_string()))?;
        self.add_relation(rel, r.clone())?;
        self.add_constraint(rel, scope)
    }

    /// Constraints as (relation name, scope names), sorted; a multiset view.
    pub fn constraint_multiset(&self) -> Vec<(String, Vec<String>)> {
        let mut out: Vec<_> = self
            .constraints
            .iter()
            .map(|c| {
                (
                    self.rel_name_of(c).to_string(),
                    c.scope.iter().map(|&v| self.var_name(v).to_string()).collect(),
                )
            })
            .collect();
        out.sort();
        out
    }

    fn copy_constraint_from(&mut self, other: &Instance, c: &Constraint) -> Result<()> {
        let (name, rel) = other.relation(c.rel);
        let idx = self.add_relation(name, rel.clone())?;
        let scope = c
            .scope
            .iter()
            .map(|&v| self.require_var(other.var_name(v)))
            .collect::<Result<Vec<_>>>()?;
        self.constraints.push(Constraint { rel: idx, scope });
        Ok(())
    }

    /// Appends all constraints of `other`, whose variables must exist here.
    pub fn append(&mut self, other: &Instance) -> Result<()> {
        for c in &other.constraints {
            self.copy_constraint_from(other, c)?;
        }
        Ok(())
    }

    /// The sub-instance on `vars`: constraints whose scope lies inside `vars`.
    /// Variable order follows this instance.
    pub fn restrict(&self, vars: &[VarId]) -> Instance {
        let keep: IndexSet<VarId> = vars.iter().copied().collect();
        let mut out = Instance::new(self.scheme.clone());
        out.relations = self.relations.clone();
        for (v, name) in self.variables.iter().enumerate() {
            if keep.contains(&v) {
                out.add_variable(name);
            }
        }
        for c in &self.constraints {
            if c.scope.iter().all(|v| keep.contains(v)) {
                let scope = c.scope.iter().map(|&v| out.var_id(self.var_name(v)).unwrap()).collect();
                out.constraints.push(Constraint { rel: c.rel, scope });
            }
        }
        out
    }

    pub fn restrict_names<S: AsRef<str>>(&self, names: &[S]) -> Result<Instance> {
        let ids = names.iter().map(|n| self.require_var(n.as_ref())).collect::<Result<Vec<_>>>()?;
        Ok(self.restrict(&ids))
    }

    /// Replaces every constraint covered by `local`'s variables with the
    /// constraints of `local`. The variable set is unchanged.
    pub fn splice(&self, local: &Instance) -> Result<Instance> {
        if self.scheme.name() != local.scheme.name() {
            return Err(Error::SchemeMismatch(self.scheme.name().into(), local.scheme.name().into()));
        }
        let mut inside = vec![false; self.num_vars()];
        for name in local.variables() {
            inside[self.require_var(name)?] = true;
        }
        let mut out = Instance::new(self.scheme.clone());
        out.variables = self.variables.clone();
        out.relations = self.relations.clone();
        out.constraints = self
            .constraints
            .iter()
            .filter(|c| !c.scope.iter().all(|&v| inside[v]))
            .cloned()
            .collect();
        for c in &local.constraints {
            out.copy_constraint_from(local, c)?;
        }
        Ok(out)
    }

    /// The constraint conjoined with the α atoms on its own scope, as an
    /// instance over the scope's distinct variables.
    pub fn reduce_constraint(&self, ci: usize, alpha: &PairAssignment) -> Result<Instance> {
        let c = &self.constraints[ci];
        let mut out = Instance::new(self.scheme.clone());
        for &v in &c.scope {
            out.add_variable(self.var_name(v));
        }
        out.copy_constraint_from(self, c)?;
        let diag = self.scheme.has_diagonal_choice();
        for ((a, b), basic) in alpha.iter() {
            if !(c.scope.contains(&a) && c.scope.contains(&b)) || (a == b && !diag) {
                continue;
            }
            let name = self.scheme.basic_name(basic);
            let idx = out.add_relation(name, Relation::Union(BasicSet::singleton(basic)))?;
            let scope = vec![out.var_id(self.var_name(a)).unwrap(), out.var_id(self.var_name(b)).unwrap()];
            out.constraints.push(Constraint { rel: idx, scope });
        }
        Ok(out)
    }

    pub fn max_arity(&self) -> usize {
        self.constraints.iter().map(|c| c.scope.len()).max().unwrap_or(0)
    }

    pub fn from_json(text: &str) -> Result<Instance> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        file.into_instance()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(InstanceFile::from_instance(self)).expect("instance serializes")
    }

    /// Canonical pretty-printed JSON, newline terminated.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&InstanceFile::from_instance(self)).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Instance> {
        Instance::from_json(&std::fs::read_to_string(path)?)
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, c) in self.constraints.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            let scope: Vec<_> = c.scope.iter().map(|&v| self.var_name(v)).collect();
            write!(f, "{}({})", self.rel_name_of(c), scope.join(","))?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintEntry {
    rel: String,
    scope: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    scheme: String,
    relations: IndexMap<String, RelationSpec>,
    variables: Vec<String>,
    constraints: Vec<ConstraintEntry>,
}

impl InstanceFile {
    fn from_instance(inst: &Instance) -> Self {
        InstanceFile {
            scheme: inst.scheme.name().to_string(),
            relations: inst
                .relations
                .iter()
                .map(|(n, r)| (n.clone(), RelationSpec::from_relation(&inst.scheme, r)))
                .collect(),
            variables: inst.variables.iter().cloned().collect(),
            constraints: inst
                .constraints
                .iter()
                .map(|c| ConstraintEntry {
                    rel: inst.rel_name_of(c).to_string(),
                    scope: c.scope.iter().map(|&v| inst.var_name(v).to_string()).collect(),
                })
                .collect(),
        }
    }

    fn into_instance(self) -> Result<Instance> {
        let scheme = load_scheme(&self.scheme)?;
        let mut inst = Instance::new(scheme.clone());
        for v in &self.variables {
            if inst.var_id(v).is_some() {
                return Err(Error::parse("variables", format!("duplicate variable `{v}`")));
            }
            inst.add_variable(v);
        }
        for (name, spec) in &self.relations {
            let rel = spec.to_relation(&scheme, name, DEFAULT_ARITY_CAP)?;
            inst.add_relation(name, rel)?;
        }
        for (k, c) in self.constraints.iter().enumerate() {
            let rel = inst
                .relation_index(&c.rel)
                .ok_or_else(|| Error::UnknownRelation(c.rel.clone()))?;
            let mut scope = Vec::with_capacity(c.scope.len());
            for v in &c.scope {
                scope.push(inst.var_id(v).ok_or_else(|| {
                    Error::parse(format!("constraints[{k}].scope"), format!("undeclared variable `{v}`"))
                })?);
            }
            inst.push_constraint(rel, scope)?;
        }
        Ok(inst)
    }
}

/// A partial map from variable pairs to basics. Pairs are stored with the
/// smaller variable id first; the reversed pair reads the converse.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairAssignment {
    map: BTreeMap<(VarId, VarId), usize>,
}

impl PairAssignment {
    pub fn new() -> Self {
        PairAssignment::default()
    }

    pub fn set(&mut self, scheme: &Scheme, x: VarId, y: VarId, basic: usize) -> Result<()> {
        if x == y && !scheme.identity().contains(basic) {
            return Err(Error::InconsistentAlphaDiagonal(format!("#{x}")));
        }
        let (key, b) = if x <= y { ((x, y), basic) } else { ((y, x), scheme.converse(basic)) };
        self.map.insert(key, b);
        Ok(())
    }

    pub fn get(&self, scheme: &Scheme, x: VarId, y: VarId) -> Option<usize> {
        if x <= y {
            self.map.get(&(x, y)).copied()
        } else {
            self.map.get(&(y, x)).map(|&b| scheme.converse(b))
        }
    }

    pub fn remove(&mut self, x: VarId, y: VarId) {
        self.map.remove(&(x.min(y), x.max(y)));
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Normalized entries `((x, y), basic)` with `x <= y`.
    pub fn iter(&self) -> impl Iterator<Item = ((VarId, VarId), usize)> + '_ {
        self.map.iter().map(|(&k, &b)| (k, b))
    }

    /// `x-y:basic` entries joined by commas.
    pub fn describe(&self, inst: &Instance) -> String {
        let parts: Vec<String> = self
            .iter()
            .map(|((x, y), b)| format!("{}-{}:{}", inst.var_name(x), inst.var_name(y), inst.scheme().basic_name(b)))
            .collect();
        format!("{{{}}}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::{beta_relation, Language};

    fn beta_instance() -> Instance {
        let p = load_scheme("point").unwrap();
        let mut inst = Instance::with_variables(p.clone(), &["x", "y", "z", "w"]);
        inst.add_relation("beta", beta_relation(&p)).unwrap();
        inst.add_constraint("beta", &["x", "y", "z"]).unwrap();
        inst.add_constraint("beta", &["y", "z", "w"]).unwrap();
        inst
    }

    #[test]
    fn restrict_cases() {
        let inst = beta_instance();
        let all: Vec<_> = (0..4).collect();
        assert_eq!(inst.restrict(&all).constraint_multiset(), inst.constraint_multiset());
        let r = inst.restrict_names(&["x", "y", "z"]).unwrap();
        assert_eq!(r.to_string(), "{beta(x,y,z)}");
        let empty = inst.restrict(&[]);
        assert_eq!(empty.num_vars(), 0);
        assert!(empty.constraints().is_empty());
        assert!(matches!(inst.restrict_names(&["q"]), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn splice_replaces_covered_constraints() {
        let s = load_scheme("rcc5").unwrap();
        let lang = Language::load("rcc5:all").unwrap();
        let mut inst = Instance::with_variables(s.clone(), &["x", "y", "z"]);
        inst.add_from_language(&lang, "PP|PPi", &["x", "y"]).unwrap();
        inst.add_from_language(&lang, "DR|PO", &["y", "z"]).unwrap();
        let mut local = Instance::with_variables(s.clone(), &["x", "y"]);
        local.add_from_language(&lang, "PP", &["x", "y"]).unwrap();
        let out = inst.splice(&local).unwrap();
        assert_eq!(out.to_string(), "{DR|PO(y,z), PP(x,y)}");
        assert_eq!(out.num_vars(), 3);

        let back = inst.splice(&inst.restrict(&[0, 1])).unwrap();
        assert_eq!(back.constraint_multiset(), inst.constraint_multiset());

        let p = load_scheme("point").unwrap();
        assert!(matches!(inst.splice(&Instance::new(p)), Err(Error::SchemeMismatch(..))));
        let stray = Instance::with_variables(s, &["q"]);
        assert!(matches!(inst.splice(&stray), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn reduce_constraint_adds_scope_atoms() {
        let s = load_scheme("rcc5").unwrap();
        let lang = Language::load("rcc5:all").unwrap();
        let mut inst = Instance::with_variables(s.clone(), &["x", "y", "z"]);
        inst.add_from_language(&lang, "PP|EQ", &["x", "y"]).unwrap();
        let mut alpha = PairAssignment::new();
        let r = inst.reduce_constraint(0, &alpha).unwrap();
        assert_eq!(r.to_string(), "{PP|EQ(x,y)}");
        alpha.set(&s, 1, 0, s.basic_index("PPi").unwrap()).unwrap();
        alpha.set(&s, 1, 2, 0).unwrap();
        let r = inst.reduce_constraint(0, &alpha).unwrap();
        assert_eq!(r.to_string(), "{PP|EQ(x,y), PP(x,y)}");
        assert_eq!(r.num_vars(), 2);
    }

    #[test]
    fn alpha_normalization() {
        let s = load_scheme("rcc5").unwrap();
        let mut a = PairAssignment::new();
        a.set(&s, 2, 1, s.basic_index("PP").unwrap()).unwrap();
        assert_eq!(a.get(&s, 1, 2), s.basic_index("PPi"));
        assert_eq!(a.get(&s, 2, 1), s.basic_index("PP"));
        assert!(matches!(a.set(&s, 0, 0, 0), Err(Error::InconsistentAlphaDiagonal(_))));
        a.set(&s, 0, 0, s.basic_index("EQ").unwrap()).unwrap();
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let text = r#"{
  "scheme": "rcc5",
  "relations": {
    "PP|EQ": {
      "arity": 2,
      "union": ["PP", "EQ"]
    }
  },
  "variables": ["x", "y"],
  "constraints": [
    {
      "rel": "PP|EQ",
      "scope": ["x", "y"]
    }
  ]
}
"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!((inst.num_vars(), inst.constraints().len()), (2, 1));
        let canon = inst.to_json();
        assert_eq!(Instance::from_json(&canon).unwrap().to_json(), canon);

        let bad = text.replace(r#""scope": ["x", "y"]"#, r#""scope": ["x", "q"]"#);
        assert!(matches!(Instance::from_json(&bad), Err(Error::Parse { .. })));
        let bad = text.replace(r#""rel": "PP|EQ""#, r#""rel": "nope""#);
        assert!(matches!(Instance::from_json(&bad), Err(Error::UnknownRelation(_))));
        let bad = text.replace(r#""scope": ["x", "y"]"#, r#""scope": ["x"]"#);
        assert!(matches!(Instance::from_json(&bad), Err(Error::ArityMismatch { .. })));
        assert!(matches!(Instance::from_json("{"), Err(Error::Parse { .. })));
    }
}
