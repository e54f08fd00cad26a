//! Named, finite constraint languages over a scheme, and the JSON form of
//! relation definitions shared by instance, language and map files.

use std::path::Path;
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::algebra::{eliminate_negation, load_scheme, Atom, BasicSet, DnfRel, Formula, Relation, Scheme};
use crate::error::{Error, Result};

/// Default arity cap for relations read from files.
pub const DEFAULT_ARITY_CAP: usize = 4;

/// On-disk relation definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationSpec {
    pub arity: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub union: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dnf: Option<Vec<Vec<(usize, usize, String)>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula: Option<Formula>,
}

impl RelationSpec {
    pub fn from_relation(scheme: &Scheme, rel: &Relation) -> Self {
        match rel {
            Relation::Union(mask) => RelationSpec {
                arity: 2,
                union: Some(scheme.set_names(*mask)),
                dnf: None,
                formula: None,
            },
            Relation::Dnf(d) => RelationSpec {
                arity: d.arity(),
                union: None,
                dnf: Some(
                    d.clauses()
                        .iter()
                        .map(|c| {
                            c.iter()
                                .map(|a| (a.i, a.j, scheme.basic_name(a.basic).to_string()))
                                .collect()
                        })
                        .collect(),
                ),
                formula: None,
            },
        }
    }

    pub fn to_relation(&self, scheme: &Scheme, name: &str, cap: usize) -> Result<Relation> {
        let loc = format!("relations.{name}");
        match (&self.union, &self.dnf, &self.formula) {
            (Some(basics), None, None) => {
                if self.arity != 2 {
                    return Err(Error::parse(loc, "a union relation must have arity 2"));
                }
                let mask = scheme.parse_set(basics).map_err(|e| Error::parse(&loc, e.to_string()))?;
                Ok(Relation::Union(mask))
            }
            (None, Some(clauses), None) => {
                if self.arity > cap {
                    return Err(Error::ArityCapExceeded { arity: self.arity, cap });
                }
                let mut out = Vec::with_capacity(clauses.len());
                for clause in clauses {
                    let mut atoms = Vec::with_capacity(clause.len());
                    for (i, j, b) in clause {
                        let basic = scheme
                            .basic_index(b)
                            .ok_or_else(|| Error::parse(&loc, format!("unknown basic `{b}`")))?;
                        if *i >= self.arity || *j >= self.arity {
                            return Err(Error::parse(&loc, format!("position out of range in atom ({i}, {j}, {b})")));
                        }
                        atoms.push(Atom::new(*i, *j, basic));
                    }
                    out.push(atoms);
                }
                Ok(Relation::Dnf(DnfRel::new(scheme, self.arity, out)?))
            }
            (None, None, Some(f)) => {
                let d = eliminate_negation(f, self.arity, scheme, cap)?;
                Ok(Relation::Dnf(d).simplified(scheme))
            }
            _ => Err(Error::parse(loc, "expected exactly one of `union`, `dnf`, `formula`")),
        }
    }
}

/// A finite set of named relations over one scheme.
#[derive(Clone, Debug)]
pub struct Language {
    scheme: Arc<Scheme>,
    relations: IndexMap<String, Relation>,
}

#[derive(Serialize, Deserialize)]
struct LanguageFile {
    scheme: String,
    relations: IndexMap<String, RelationSpec>,
}

impl Language {
    pub fn new(scheme: Arc<Scheme>) -> Self {
        Language { scheme, relations: IndexMap::new() }
    }

    pub fn scheme(&self) -> &Arc<Scheme> {
        &self.scheme
    }

    pub fn insert(&mut self, name: impl Into<String>, rel: Relation) -> Result<()> {
        let name = name.into();
        match self.relations.get(&name) {
            Some(existing) if *existing != rel => Err(Error::RelationConflict(name)),
            Some(_) => Ok(()),
            None => {
                self.relations.insert(name, rel);
                Ok(())
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    /// Syntactic membership: the name is registered with this exact definition.
    pub fn contains(&self, name: &str, rel: &Relation) -> bool {
        self.relations.get(name) == Some(rel)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|(n, r)| (n.as_str(), r))
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn max_arity(&self) -> usize {
        self.relations.values().map(Relation::arity).max().unwrap_or(0)
    }

    pub fn union_with(&self, other: &Language) -> Result<Language> {
        if self.scheme.name() != other.scheme.name() {
            return Err(Error::SchemeMismatch(self.scheme.name().into(), other.scheme.name().into()));
        }
        let mut out = self.clone();
        for (n, r) in other.relations() {
            out.insert(n, r.clone())?;
        }
        Ok(out)
    }

    /// The name under which a union mask is registered, if any.
    pub fn name_of_union(&self, mask: BasicSet) -> Option<&str> {
        self.relations
            .iter()
            .find(|(_, r)| r.as_union() == Some(mask))
            .map(|(n, _)| n.as_str())
    }

    /// Parses a language spec: a built-in name, `a+b` for unions of
    /// built-ins, or a JSON file path.
    pub fn load(spec: &str) -> Result<Language> {
        if Path::new(spec).is_file() {
            let text = std::fs::read_to_string(spec)?;
            return Language::from_json(&text);
        }
        let mut parts = spec.split('+');
        let first = parts.next().unwrap_or_default();
        let (scheme_name, _) = first
            .split_once(':')
            .ok_or_else(|| Error::Invalid(format!("unknown language `{spec}`")))?;
        let mut lang = builtin(first)?;
        for p in parts {
            let p = if p.contains(':') { p.to_string() } else { format!("{scheme_name}:{p}") };
            lang = lang.union_with(&builtin(&p)?)?;
        }
        Ok(lang)
    }

    pub fn from_json(text: &str) -> Result<Language> {
        let file: LanguageFile = serde_json::from_str(text)?;
        let scheme = load_scheme(&file.scheme)?;
        let mut lang = Language::new(scheme.clone());
        for (name, spec) in &file.relations {
            lang.insert(name.clone(), spec.to_relation(&scheme, name, DEFAULT_ARITY_CAP)?)?;
        }
        Ok(lang)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let file = LanguageFile {
            scheme: self.scheme.name().to_string(),
            relations: self
                .relations
                .iter()
                .map(|(n, r)| (n.clone(), RelationSpec::from_relation(&self.scheme, r)))
                .collect(),
        };
        serde_json::to_value(file).expect("language serializes")
    }
}

/// RCC-5 masks outside the tractable fragment: containing PP and PPi but not PO.
pub fn rcc5_outside_gamma(scheme: &Scheme, mask: BasicSet) -> bool {
    let pp = scheme.basic_index("PP").expect("rcc5 basic");
    let ppi = scheme.basic_index("PPi").expect("rcc5 basic");
    let po = scheme.basic_index("PO").expect("rcc5 basic");
    mask.contains(pp) && mask.contains(ppi) && !mask.contains(po)
}

/// `PPi|DR|PO|EQ`, the complement of PP.
pub fn rcc5_lambda(scheme: &Scheme) -> BasicSet {
    let pp = scheme.basic_index("PP").expect("rcc5 basic");
    BasicSet(scheme.full().0 & !BasicSet::singleton(pp).0)
}

fn dnf(scheme: &Scheme, arity: usize, clauses: &[&[(usize, usize, &str)]]) -> Relation {
    let clauses = clauses
        .iter()
        .map(|c| {
            c.iter()
                .map(|(i, j, b)| Atom::new(*i, *j, scheme.basic_index(b).expect("builtin basic")))
                .collect()
        })
        .collect();
    Relation::Dnf(DnfRel::new(scheme, arity, clauses).expect("builtin relation"))
}

/// The ternary equality relation `(x=y & x!=z) | (x!=y & y=z)`.
pub fn delta_relation(scheme: &Scheme) -> Relation {
    dnf(scheme, 3, &[&[(0, 1, "="), (0, 2, "!=")], &[(0, 1, "!="), (1, 2, "=")]])
}

/// Betweenness `x<y<z | z<y<x` over the point scheme.
pub fn beta_relation(scheme: &Scheme) -> Relation {
    dnf(scheme, 3, &[&[(0, 1, "<"), (1, 2, "<")], &[(2, 1, "<"), (1, 0, "<")]])
}

fn builtin(spec: &str) -> Result<Language> {
    let (scheme_name, which) = spec
        .split_once(':')
        .ok_or_else(|| Error::Invalid(format!("unknown language `{spec}`")))?;
    let scheme = load_scheme(scheme_name)?;
    let mut lang = Language::new(scheme.clone());
    let s = &*scheme;
    let all_unions = |lang: &mut Language, keep: &dyn Fn(BasicSet) -> bool| {
        for mask in 1..=s.full().0 {
            let mask = BasicSet(mask);
            if keep(mask) {
                lang.relations.insert(s.format_set(mask), Relation::Union(mask));
            }
        }
    };
    match (scheme_name, which) {
        (_, "all") => all_unions(&mut lang, &|_| true),
        (_, "basic") => all_unions(&mut lang, &|m| m.len() == 1),
        ("rcc5", "gamma") => all_unions(&mut lang, &|m| !rcc5_outside_gamma(s, m)),
        ("eq", "delta") => {
            lang.relations.insert("delta".into(), delta_relation(s));
        }
        ("point", "beta") => {
            lang.relations.insert("beta".into(), beta_relation(s));
        }
        ("eq", w) if w.starts_with('R') => {
            let k: usize = w[1..].parse().map_err(|_| Error::Invalid(format!("unknown language `{spec}`")))?;
            let rel = crate::gadgets::build_rk(k)?;
            lang.relations.insert(format!("R{k}"), Relation::Dnf(rel));
        }
        _ => return Err(Error::Invalid(format!("unknown language `{spec}`"))),
    }
    Ok(lang)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rcc5_languages() {
        let all = Language::load("rcc5:all").unwrap();
        assert_eq!(all.len(), 31);
        let gamma = Language::load("rcc5:gamma").unwrap();
        assert_eq!(gamma.len(), 27);
        assert!(gamma.get("PP|PPi").is_none());
        assert!(gamma.get("DR|PP|PPi|EQ").is_none());
        assert!(gamma.get("DR|PO|PPi|EQ").is_some());
        let basic = Language::load("rcc5:basic").unwrap();
        assert_eq!(basic.relations().map(|(n, _)| n).collect::<Vec<_>>(), vec!["DR", "PO", "PP", "PPi", "EQ"]);
        assert_eq!(all.scheme().format_set(rcc5_lambda(all.scheme())), "DR|PO|PPi|EQ");
    }

    #[test]
    fn combined_and_file_languages() {
        let l = Language::load("eq:delta+basic").unwrap();
        assert_eq!(l.relations().map(|(n, _)| n).collect::<Vec<_>>(), vec!["delta", "=", "!="]);
        let text = serde_json::to_string(&l.to_json_value()).unwrap();
        let again = Language::from_json(&text).unwrap();
        assert!(again.contains("delta", l.get("delta").unwrap()));
        assert!(Language::load("eq:nothing").is_err());
    }

    #[test]
    fn formula_specs() {
        let s = load_scheme("rcc5").unwrap();
        let spec: RelationSpec =
            serde_json::from_str(r#"{"arity":2,"formula":{"not":{"atom":[0,1,"EQ"]}}}"#).unwrap();
        let r = spec.to_relation(&s, "neq", 4).unwrap();
        assert_eq!(r, Relation::Union(s.parse_set(&["DR", "PO", "PP", "PPi"]).unwrap()));
        let bad: RelationSpec = serde_json::from_str(r#"{"arity":3,"union":["DR"]}"#).unwrap();
        assert!(matches!(bad.to_relation(&s, "x", 4), Err(Error::Parse { .. })));
    }
}
