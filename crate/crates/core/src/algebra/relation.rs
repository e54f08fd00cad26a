use serde::{Deserialize, Serialize};

use super::{BasicSet, Scheme};
use crate::error::{Error, Result};

/// `basic(x_i, x_j)` over argument positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub i: usize,
    pub j: usize,
    pub basic: usize,
}

impl Atom {
    pub fn new(i: usize, j: usize, basic: usize) -> Self {
        Atom { i, j, basic }
    }

    /// Orients the atom so that `i <= j`.
    pub fn oriented(self, scheme: &Scheme) -> Self {
        if self.i > self.j {
            Atom { i: self.j, j: self.i, basic: scheme.converse(self.basic) }
        } else {
            self
        }
    }
}

/// A positive DNF over basic atoms. An empty clause list is the empty relation;
/// an empty clause is always true.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DnfRel {
    arity: usize,
    clauses: Vec<Vec<Atom>>,
}

enum ClauseState {
    Dead,
    Live(Vec<Atom>),
}

fn normalize_clause(scheme: &Scheme, atoms: impl IntoIterator<Item = Atom>) -> ClauseState {
    let identity = scheme.identity();
    let mut out: Vec<Atom> = Vec::new();
    for a in atoms {
        let a = a.oriented(scheme);
        if a.i == a.j {
            if !identity.contains(a.basic) {
                return ClauseState::Dead;
            }
            if !scheme.has_diagonal_choice() {
                continue;
            }
        }
        out.push(a);
    }
    out.sort_unstable();
    out.dedup();
    if out.windows(2).any(|w| w[0].i == w[1].i && w[0].j == w[1].j) {
        return ClauseState::Dead;
    }
    ClauseState::Live(out)
}

fn is_subset_sorted(a: &[Atom], b: &[Atom]) -> bool {
    let mut it = b.iter();
    'outer: for x in a {
        for y in it.by_ref() {
            if y == x {
                continue 'outer;
            }
            if y > x {
                return false;
            }
        }
        return false;
    }
    true
}

/// Drops duplicate and subsumed clauses, keeping first-occurrence order.
fn prune_clauses(clauses: Vec<Vec<Atom>>) -> Vec<Vec<Atom>> {
    let mut keep = vec![true; clauses.len()];
    for a in 0..clauses.len() {
        if !keep[a] {
            continue;
        }
        for b in 0..clauses.len() {
            if a == b || !keep[b] {
                continue;
            }
            let sub = is_subset_sorted(&clauses[a], &clauses[b]);
            if sub && (clauses[a].len() < clauses[b].len() || a < b) {
                keep[b] = false;
            }
        }
    }
    clauses.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c).collect()
}

impl DnfRel {
    pub fn new(scheme: &Scheme, arity: usize, clauses: Vec<Vec<Atom>>) -> Result<Self> {
        for atom in clauses.iter().flatten() {
            if atom.i >= arity || atom.j >= arity || atom.basic >= scheme.m() {
                return Err(Error::Invalid(format!(
                    "atom ({}, {}, {}) out of range for arity {arity}",
                    atom.i, atom.j, atom.basic
                )));
            }
        }
        let live = clauses
            .into_iter()
            .filter_map(|c| match normalize_clause(scheme, c) {
                ClauseState::Live(c) => Some(c),
                ClauseState::Dead => None,
            })
            .collect();
        Ok(DnfRel { arity, clauses: prune_clauses(live) })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn clauses(&self) -> &[Vec<Atom>] {
        &self.clauses
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Collapses a binary DNF whose clauses are single `(0,1)` atoms into a union.
    pub fn as_union(&self, scheme: &Scheme) -> Option<BasicSet> {
        if self.arity != 2 {
            return None;
        }
        let mut mask = BasicSet::EMPTY;
        for c in &self.clauses {
            match c.as_slice() {
                [] => return Some(scheme.full()),
                [a] if a.i == 0 && a.j == 1 => mask.insert(a.basic),
                _ => return None,
            }
        }
        Some(mask)
    }
}

/// A constraint relation: a binary union of basics or a positive DNF.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Union(BasicSet),
    Dnf(DnfRel),
}

impl Relation {
    pub fn arity(&self) -> usize {
        match self {
            Relation::Union(_) => 2,
            Relation::Dnf(d) => d.arity(),
        }
    }

    pub fn as_union(&self) -> Option<BasicSet> {
        match self {
            Relation::Union(m) => Some(*m),
            Relation::Dnf(_) => None,
        }
    }

    /// Turns a binary single-atom DNF into a union; otherwise unchanged.
    pub fn simplified(self, scheme: &Scheme) -> Relation {
        match self {
            Relation::Dnf(d) => match d.as_union(scheme) {
                Some(mask) => Relation::Union(mask),
                None => Relation::Dnf(d),
            },
            r => r,
        }
    }

    /// Clause view of the relation.
    pub fn to_dnf(&self) -> DnfRel {
        match self {
            Relation::Union(mask) => DnfRel {
                arity: 2,
                clauses: mask.iter().map(|b| vec![Atom::new(0, 1, b)]).collect(),
            },
            Relation::Dnf(d) => d.clone(),
        }
    }

    /// Membership test given the basic holding between argument positions.
    pub fn holds(&self, basic_at: impl Fn(usize, usize) -> usize) -> bool {
        match self {
            Relation::Union(mask) => mask.contains(basic_at(0, 1)),
            Relation::Dnf(d) => d
                .clauses
                .iter()
                .any(|c| c.iter().all(|a| basic_at(a.i, a.j) == a.basic)),
        }
    }
}

/// Quantifier-free formula over basic atoms on argument positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formula {
    Atom(usize, usize, String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    True,
    False,
}

impl Formula {
    pub fn has_negation(&self) -> bool {
        match self {
            Formula::Not(_) => true,
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(Formula::has_negation),
            _ => false,
        }
    }

    fn max_position(&self) -> Option<usize> {
        match self {
            Formula::Atom(i, j, _) => Some(*i.max(j)),
            Formula::Not(f) => f.max_position(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().filter_map(|f| f.max_position()).max(),
            _ => None,
        }
    }
}

/// Positive formula after pushing negations to atoms and expanding them.
enum Nnf {
    Atoms(usize, usize, BasicSet),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
    True,
    False,
}

fn to_nnf(f: &Formula, negated: bool, scheme: &Scheme) -> Result<Nnf> {
    Ok(match (f, negated) {
        (Formula::Atom(i, j, name), neg) => {
            let b = scheme
                .basic_index(name)
                .ok_or_else(|| Error::UnknownRelation(name.clone()))?;
            let mut set = BasicSet::singleton(b);
            if neg {
                set = BasicSet(scheme.full().0 & !set.0);
            }
            Nnf::Atoms(*i, *j, set)
        }
        (Formula::Not(inner), neg) => to_nnf(inner, !neg, scheme)?,
        (Formula::And(fs), false) | (Formula::Or(fs), true) => {
            Nnf::And(fs.iter().map(|g| to_nnf(g, negated, scheme)).collect::<Result<_>>()?)
        }
        (Formula::Or(fs), false) | (Formula::And(fs), true) => {
            Nnf::Or(fs.iter().map(|g| to_nnf(g, negated, scheme)).collect::<Result<_>>()?)
        }
        (Formula::True, false) | (Formula::False, true) => Nnf::True,
        (Formula::False, false) | (Formula::True, true) => Nnf::False,
    })
}

fn nnf_to_clauses(f: &Nnf, scheme: &Scheme) -> Vec<Vec<Atom>> {
    match f {
        Nnf::Atoms(i, j, set) => set.iter().map(|b| vec![Atom::new(*i, *j, b)]).collect(),
        Nnf::True => vec![Vec::new()],
        Nnf::False => Vec::new(),
        Nnf::Or(fs) => {
            let all = fs.iter().flat_map(|g| nnf_to_clauses(g, scheme)).collect();
            prune_clauses(all)
        }
        Nnf::And(fs) => {
            let mut acc: Vec<Vec<Atom>> = vec![Vec::new()];
            for g in fs {
                let rhs = nnf_to_clauses(g, scheme);
                let mut next = Vec::new();
                for a in &acc {
                    for b in &rhs {
                        if let ClauseState::Live(c) =
                            normalize_clause(scheme, a.iter().chain(b.iter()).copied())
                        {
                            next.push(c);
                        }
                    }
                }
                acc = prune_clauses(next);
                if acc.is_empty() {
                    break;
                }
            }
            acc
        }
    }
}

/// Rewrites a formula with negation into a positive DNF by replacing each
/// negated atom with the disjunction of the remaining basics.
pub fn eliminate_negation(formula: &Formula, arity: usize, scheme: &Scheme, cap: usize) -> Result<DnfRel> {
    if arity > cap {
        return Err(Error::ArityCapExceeded { arity, cap });
    }
    if let Some(p) = formula.max_position() {
        if p >= arity {
            return Err(Error::Invalid(format!("position {p} out of range for arity {arity}")));
        }
    }
    let nnf = to_nnf(formula, false, scheme)?;
    let clauses = nnf_to_clauses(&nnf, scheme);
    DnfRel::new(scheme, arity, clauses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::load_scheme;

    fn atom(i: usize, j: usize, b: &str) -> Formula {
        Formula::Atom(i, j, b.to_string())
    }

    #[test]
    fn negated_eq_is_complement() {
        let s = load_scheme("rcc5").unwrap();
        let d = eliminate_negation(&Formula::Not(Box::new(atom(0, 1, "EQ"))), 2, &s, 4).unwrap();
        let mask = d.as_union(&s).unwrap();
        assert_eq!(s.set_names(mask), vec!["DR", "PO", "PP", "PPi"]);

        let p = load_scheme("point").unwrap();
        let d = eliminate_negation(&Formula::Not(Box::new(atom(0, 1, "<"))), 2, &p, 4).unwrap();
        assert_eq!(p.set_names(d.as_union(&p).unwrap()), vec!["=", ">"]);
    }

    #[test]
    fn positive_input_is_kept() {
        let e = load_scheme("eq").unwrap();
        let delta = Formula::Or(vec![
            Formula::And(vec![atom(0, 1, "="), atom(0, 2, "!=")]),
            Formula::And(vec![atom(0, 1, "!="), atom(1, 2, "=")]),
            Formula::And(vec![atom(0, 1, "="), atom(0, 2, "!=")]),
        ]);
        let d = eliminate_negation(&delta, 3, &e, 4).unwrap();
        assert_eq!(d.clauses().len(), 2);
        assert_eq!(d.clauses()[0], vec![Atom::new(0, 1, 0), Atom::new(0, 2, 1)]);
        assert_eq!(d.clauses()[1], vec![Atom::new(0, 1, 1), Atom::new(1, 2, 0)]);
    }

    #[test]
    fn arity_cap() {
        let e = load_scheme("eq").unwrap();
        let err = eliminate_negation(&Formula::True, 5, &e, 4).unwrap_err();
        assert!(matches!(err, Error::ArityCapExceeded { arity: 5, cap: 4 }));
    }

    #[test]
    fn converse_orientation_and_contradiction() {
        let p = load_scheme("point").unwrap();
        // y > x is the same atom as x < y
        let f = Formula::And(vec![atom(1, 0, ">"), atom(0, 1, "<")]);
        let d = eliminate_negation(&f, 2, &p, 4).unwrap();
        assert_eq!(p.set_names(d.as_union(&p).unwrap()), vec!["<"]);
        let f = Formula::And(vec![atom(1, 0, "<"), atom(0, 1, "<")]);
        assert!(eliminate_negation(&f, 2, &p, 4).unwrap().is_empty());
    }

    #[test]
    fn diagonal_atoms() {
        let e = load_scheme("eq").unwrap();
        let f = Formula::And(vec![atom(0, 0, "="), atom(0, 1, "!=")]);
        let d = eliminate_negation(&f, 2, &e, 4).unwrap();
        assert_eq!(d.clauses(), &[vec![Atom::new(0, 1, 1)]]);
        let f = atom(1, 1, "!=");
        assert!(eliminate_negation(&f, 2, &e, 4).unwrap().is_empty());
    }

    #[test]
    fn subsumption() {
        let e = load_scheme("eq").unwrap();
        let f = Formula::Or(vec![Formula::And(vec![atom(0, 1, "="), atom(1, 2, "=")]), atom(0, 1, "=")]);
        let d = eliminate_negation(&f, 3, &e, 4).unwrap();
        assert_eq!(d.clauses(), &[vec![Atom::new(0, 1, 0)]]);
    }

    #[test]
    fn formula_json() {
        let f: Formula = serde_json::from_str(r#"{"not":{"and":[{"atom":[0,1,"EQ"]},"true"]}}"#).unwrap();
        assert!(f.has_negation());
        let back = serde_json::to_string(&f).unwrap();
        assert_eq!(back, r#"{"not":{"and":[{"atom":[0,1,"EQ"]},"true"]}}"#);
    }
}
