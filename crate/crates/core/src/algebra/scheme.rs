use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::BasicSet;
use crate::error::{Error, Result};

/// Basics are stored in a `u32` bit set.
pub const MAX_BASICS: usize = 32;

const RCC5_TABLE: &str = include_str!("../../data/schemes/rcc5.json");
const POINT_TABLE: &str = include_str!("../../data/schemes/point.json");
const EQ_TABLE: &str = include_str!("../../data/schemes/eq.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DomainTag {
    Equality,
    DenseOrder,
    Rcc5,
    Finite(usize),
    Custom,
}

impl DomainTag {
    fn parse(s: &str) -> Self {
        match s {
            "equality" => DomainTag::Equality,
            "dense-order" => DomainTag::DenseOrder,
            "rcc5" => DomainTag::Rcc5,
            _ => DomainTag::Custom,
        }
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainTag::Equality => write!(f, "equality"),
            DomainTag::DenseOrder => write!(f, "dense-order"),
            DomainTag::Rcc5 => write!(f, "rcc5"),
            DomainTag::Finite(d) => write!(f, "finite({d})"),
            DomainTag::Custom => write!(f, "custom"),
        }
    }
}

/// A finite partition scheme with its converse permutation and weak
/// composition table.
///
/// The identity is kept as a set of basics. For the usual schemes it is a
/// singleton; the finite-domain scheme expresses equality as the disjunction
/// of its diagonal singletons, so diagonal pairs range over that block.
pub struct Scheme {
    name: String,
    basics: Vec<String>,
    identity: BasicSet,
    converse: Vec<usize>,
    composition: Vec<BasicSet>,
    aclosure_decides_basics: bool,
    domain: DomainTag,
    set_converse: Vec<BasicSet>,
    set_compose: Option<Vec<BasicSet>>,
}

impl fmt::Debug for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scheme")
            .field("name", &self.name)
            .field("basics", &self.basics)
            .finish()
    }
}

impl PartialEq for Scheme {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.basics == other.basics
            && self.identity == other.identity
            && self.converse == other.converse
            && self.composition == other.composition
    }
}

impl Scheme {
    /// Builds a scheme from raw tables and checks every partition-scheme invariant.
    pub fn from_tables(
        name: impl Into<String>,
        domain: DomainTag,
        basics: Vec<String>,
        identity: BasicSet,
        converse: Vec<usize>,
        composition: Vec<Vec<BasicSet>>,
        aclosure_decides_basics: bool,
    ) -> Result<Self> {
        let m = basics.len();
        if m == 0 || m > MAX_BASICS {
            return Err(Error::MalformedTable(format!(
                "scheme must have between 1 and {MAX_BASICS} basics, got {m}"
            )));
        }
        for (i, b) in basics.iter().enumerate() {
            if basics[..i].contains(b) {
                return Err(Error::MalformedTable(format!("duplicate basic `{b}`")));
            }
        }
        if converse.len() != m || converse.iter().any(|&c| c >= m) {
            return Err(Error::MalformedTable("converse is not a map over the basics".into()));
        }
        if composition.len() != m || composition.iter().any(|row| row.len() != m) {
            return Err(Error::MalformedTable("composition table is not m x m".into()));
        }
        let full = BasicSet::full(m);
        if identity.is_empty() || !identity.is_subset(full) {
            return Err(Error::MalformedTable("identity must be a nonempty set of basics".into()));
        }
        let mut scheme = Scheme {
            name: name.into(),
            basics,
            identity,
            converse,
            composition: composition.into_iter().flatten().collect(),
            aclosure_decides_basics,
            domain,
            set_converse: Vec::new(),
            set_compose: None,
        };
        scheme.validate()?;
        scheme.build_caches();
        Ok(scheme)
    }

    fn validate(&self) -> Result<()> {
        let m = self.m();
        let full = self.full();
        for b in 0..m {
            if self.converse[self.converse[b]] != b {
                return Err(Error::MalformedTable(format!(
                    "converse is not an involution at `{}`",
                    self.basics[b]
                )));
            }
            for c in 0..m {
                if !self.composition[b * m + c].is_subset(full) {
                    return Err(Error::MalformedTable(format!(
                        "composition ({}, {}) names unknown basics",
                        self.basics[b], self.basics[c]
                    )));
                }
            }
        }
        let conv_id: BasicSet = self.identity.iter().map(|b| self.converse[b]).collect();
        if conv_id != self.identity {
            return Err(Error::MalformedTable("identity is not closed under converse".into()));
        }
        for b in 0..m {
            let single = BasicSet::singleton(b);
            let left = self.compose_slow(self.identity, single);
            let right = self.compose_slow(single, self.identity);
            if left != single || right != single {
                return Err(Error::MalformedTable(format!(
                    "identity law fails for `{}`: id o b = {}, b o id = {}",
                    self.basics[b],
                    self.format_set(left),
                    self.format_set(right)
                )));
            }
        }
        for b1 in 0..m {
            for b2 in 0..m {
                let s = self.composition[b1 * m + b2];
                let lhs = self.composition[self.converse[b2] * m + self.converse[b1]];
                let rhs: BasicSet = s.iter().map(|x| self.converse[x]).collect();
                if lhs != rhs {
                    return Err(Error::MalformedTable(format!(
                        "converse law fails for triple ({}, {}, {}): expected {}",
                        self.basics[b1],
                        self.basics[b2],
                        self.format_set(s),
                        self.format_set(rhs)
                    )));
                }
            }
        }
        Ok(())
    }

    fn build_caches(&mut self) {
        let m = self.m();
        if m <= 12 {
            self.set_converse = (0..1u32 << m)
                .map(|mask| BasicSet(mask).iter().map(|b| self.converse[b]).collect())
                .collect();
        }
        if m <= 6 {
            let n = 1usize << m;
            let mut table = vec![BasicSet::EMPTY; n * n];
            for a in 0..n {
                for b in 0..n {
                    table[a * n + b] = self.compose_slow(BasicSet(a as u32), BasicSet(b as u32));
                }
            }
            self.set_compose = Some(table);
        }
    }

    fn compose_slow(&self, a: BasicSet, b: BasicSet) -> BasicSet {
        let m = self.m();
        let mut out = BasicSet::EMPTY;
        for x in a.iter() {
            for y in b.iter() {
                out |= self.composition[x * m + y];
            }
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of basic relations.
    #[inline]
    pub fn m(&self) -> usize {
        self.basics.len()
    }

    pub fn basics(&self) -> &[String] {
        &self.basics
    }

    pub fn basic_name(&self, b: usize) -> &str {
        &self.basics[b]
    }

    pub fn basic_index(&self, name: &str) -> Option<usize> {
        self.basics.iter().position(|b| b == name)
    }

    #[inline]
    pub fn full(&self) -> BasicSet {
        BasicSet::full(self.m())
    }

    /// Basics allowed on a diagonal pair `(x, x)`.
    #[inline]
    pub fn identity(&self) -> BasicSet {
        self.identity
    }

    /// The equality basic, when equality is a single basic.
    pub fn identity_basic(&self) -> Option<usize> {
        self.identity.single()
    }

    /// True when the diagonal carries information (finite-domain scheme).
    #[inline]
    pub fn has_diagonal_choice(&self) -> bool {
        self.identity.len() > 1
    }

    #[inline]
    pub fn converse(&self, b: usize) -> usize {
        self.converse[b]
    }

    #[inline]
    pub fn converse_set(&self, s: BasicSet) -> BasicSet {
        if let Some(&c) = self.set_converse.get(s.0 as usize) {
            c
        } else {
            s.iter().map(|b| self.converse[b]).collect()
        }
    }

    #[inline]
    pub fn compose_basic(&self, a: usize, b: usize) -> BasicSet {
        self.composition[a * self.m() + b]
    }

    #[inline]
    pub fn compose(&self, a: BasicSet, b: BasicSet) -> BasicSet {
        match &self.set_compose {
            Some(table) => table[((a.0 as usize) << self.m()) | b.0 as usize],
            None => self.compose_slow(a, b),
        }
    }

    pub fn aclosure_decides_basics(&self) -> bool {
        self.aclosure_decides_basics
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    /// Resolves a list of basic names into a set.
    pub fn parse_set<S: AsRef<str>>(&self, names: &[S]) -> Result<BasicSet> {
        names
            .iter()
            .map(|n| {
                self.basic_index(n.as_ref())
                    .ok_or_else(|| Error::parse("basic", format!("unknown basic `{}`", n.as_ref())))
            })
            .collect()
    }

    pub fn set_names(&self, s: BasicSet) -> Vec<String> {
        s.iter().map(|b| self.basics[b].clone()).collect()
    }

    /// Canonical textual name of a union: basics in table order joined by `|`.
    pub fn format_set(&self, s: BasicSet) -> String {
        if s.is_empty() {
            return "EMPTY".to_string();
        }
        self.set_names(s).join("|")
    }

    /// Serializable table form, in the same layout accepted by [`load_scheme`].
    pub fn to_table_json(&self) -> serde_json::Value {
        let m = self.m();
        let mut composition = IndexMap::new();
        for a in 0..m {
            let mut row = IndexMap::new();
            for b in 0..m {
                row.insert(self.basics[b].clone(), self.set_names(self.composition[a * m + b]));
            }
            composition.insert(self.basics[a].clone(), row);
        }
        let identity = if let Some(b) = self.identity_basic() {
            serde_json::Value::String(self.basics[b].clone())
        } else {
            serde_json::json!(self.set_names(self.identity))
        };
        let converse: IndexMap<_, _> = (0..m)
            .map(|b| (self.basics[b].clone(), self.basics[self.converse[b]].clone()))
            .collect();
        serde_json::json!({
            "name": self.name,
            "domain": self.domain.to_string(),
            "basics": self.basics,
            "identity": identity,
            "converse": converse,
            "composition": composition,
            "aclosure_decides_basics": self.aclosure_decides_basics,
        })
    }
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeFile {
    name: Option<String>,
    domain: Option<String>,
    basics: Vec<String>,
    identity: OneOrMany,
    converse: IndexMap<String, String>,
    composition: IndexMap<String, IndexMap<String, Vec<String>>>,
    aclosure_decides_basics: bool,
}

fn parse_table(text: &str, fallback_name: &str) -> Result<Scheme> {
    let file: SchemeFile =
        serde_json::from_str(text).map_err(|e| Error::MalformedTable(e.to_string()))?;
    let m = file.basics.len();
    let index = |n: &str| -> Result<usize> {
        file.basics
            .iter()
            .position(|b| b == n)
            .ok_or_else(|| Error::MalformedTable(format!("unknown basic `{n}`")))
    };
    let identity: BasicSet = match &file.identity {
        OneOrMany::One(n) => BasicSet::singleton(index(n)?),
        OneOrMany::Many(ns) => ns.iter().map(|n| index(n)).collect::<Result<_>>()?,
    };
    let mut converse = vec![usize::MAX; m];
    for (a, b) in &file.converse {
        converse[index(a)?] = index(b)?;
    }
    if let Some(b) = converse.iter().position(|&c| c == usize::MAX) {
        return Err(Error::MalformedTable(format!("missing converse for `{}`", file.basics[b])));
    }
    let mut composition = vec![vec![None; m]; m];
    for (a, row) in &file.composition {
        let ai = index(a)?;
        for (b, names) in row {
            let bi = index(b)?;
            let s: BasicSet = names.iter().map(|n| index(n)).collect::<Result<_>>()?;
            composition[ai][bi] = Some(s);
        }
    }
    let composition = composition
        .into_iter()
        .enumerate()
        .map(|(a, row)| {
            row.into_iter()
                .enumerate()
                .map(|(b, e)| {
                    e.ok_or_else(|| {
                        Error::MalformedTable(format!(
                            "composition entry ({}, {}) is not listed",
                            file.basics[a], file.basics[b]
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let domain = file.domain.as_deref().map(DomainTag::parse).unwrap_or(DomainTag::Custom);
    Scheme::from_tables(
        file.name.unwrap_or_else(|| fallback_name.to_string()),
        domain,
        file.basics,
        identity,
        converse,
        composition,
        file.aclosure_decides_basics,
    )
}

fn finite_scheme(d: usize) -> Result<Scheme> {
    if d == 0 || d * d > MAX_BASICS {
        return Err(Error::UnknownScheme(format!("finite:{d}")));
    }
    let idx = |i: usize, j: usize| i * d + j;
    let basics = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| {
            if d < 10 {
                format!("R_{}{}", i + 1, j + 1)
            } else {
                format!("R_{}.{}", i + 1, j + 1)
            }
        })
        .collect();
    let identity: BasicSet = (0..d).map(|i| idx(i, i)).collect();
    let converse = (0..d * d).map(|b| idx(b % d, b / d)).collect();
    let composition = (0..d * d)
        .map(|a| {
            (0..d * d)
                .map(|b| {
                    let (i, j) = (a / d, a % d);
                    let (k, l) = (b / d, b % d);
                    if j == k {
                        BasicSet::singleton(idx(i, l))
                    } else {
                        BasicSet::EMPTY
                    }
                })
                .collect()
        })
        .collect();
    Scheme::from_tables(
        format!("finite:{d}"),
        DomainTag::Finite(d),
        basics,
        identity,
        converse,
        composition,
        true,
    )
}

/// Loads a built-in scheme (`rcc5`, `point`, `eq`, `finite:<d>`) or a JSON table file.
pub fn load_scheme(source: &str) -> Result<Arc<Scheme>> {
    static BUILTIN: OnceLock<Mutex<HashMap<String, Arc<Scheme>>>> = OnceLock::new();
    let cache = BUILTIN.get_or_init(Default::default);
    let builtin = matches!(source, "rcc5" | "point" | "eq") || source.starts_with("finite:");
    if builtin {
        if let Some(s) = cache.lock().expect("scheme cache").get(source) {
            return Ok(s.clone());
        }
    }
    let scheme = match source {
        "rcc5" => parse_table(RCC5_TABLE, "rcc5")?,
        "point" => parse_table(POINT_TABLE, "point")?,
        "eq" => parse_table(EQ_TABLE, "eq")?,
        _ => {
            if let Some(d) = source.strip_prefix("finite:") {
                let d: usize = d.parse().map_err(|_| Error::UnknownScheme(source.to_string()))?;
                finite_scheme(d)?
            } else if Path::new(source).is_file() {
                let text = std::fs::read_to_string(source)?;
                parse_table(&text, source)?
            } else {
                return Err(Error::UnknownScheme(source.to_string()));
            }
        }
    };
    let scheme = Arc::new(scheme);
    if builtin {
        cache.lock().expect("scheme cache").insert(source.to_string(), scheme.clone());
    }
    Ok(scheme)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_load() {
        let r = load_scheme("rcc5").unwrap();
        assert_eq!(r.basics(), &["DR", "PO", "PP", "PPi", "EQ"]);
        assert_eq!(r.identity_basic(), Some(4));
        let p = load_scheme("point").unwrap();
        assert_eq!(p.basics(), &["=", "<", ">"]);
        let e = load_scheme("eq").unwrap();
        assert_eq!(e.m(), 2);
    }

    #[test]
    fn finite_two() {
        let f = load_scheme("finite:2").unwrap();
        assert_eq!(f.basics(), &["R_11", "R_12", "R_21", "R_22"]);
        assert_eq!(f.identity_basic(), None);
        assert_eq!(f.set_names(f.identity()), vec!["R_11", "R_22"]);
        assert_eq!(f.converse(1), 2);
        assert_eq!(f.domain(), DomainTag::Finite(2));
    }

    #[test]
    fn unknown_scheme() {
        assert!(matches!(load_scheme("allen"), Err(Error::UnknownScheme(_))));
        assert!(matches!(load_scheme("finite:x"), Err(Error::UnknownScheme(_))));
    }

    #[test]
    fn round_trip_table() {
        let r = load_scheme("rcc5").unwrap();
        let text = serde_json::to_string(&r.to_table_json()).unwrap();
        let again = parse_table(&text, "x").unwrap();
        assert_eq!(*r, again);
    }

    #[test]
    fn malformed_tables_report_triples() {
        let mut v = load_scheme("point").unwrap().to_table_json();
        v["composition"]["<"][">"] = serde_json::json!(["<"]);
        let err = parse_table(&v.to_string(), "bad").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("converse law"), "{msg}");

        let mut v = load_scheme("point").unwrap().to_table_json();
        v["composition"]["<"].as_object_mut().unwrap().remove("=");
        let err = parse_table(&v.to_string(), "bad").unwrap_err();
        assert!(err.to_string().contains("not listed"));

        let mut v = load_scheme("point").unwrap().to_table_json();
        v["converse"]["<"] = serde_json::json!("<");
        assert!(matches!(parse_table(&v.to_string(), "bad"), Err(Error::MalformedTable(_))));

        let mut v = load_scheme("point").unwrap().to_table_json();
        v["composition"]["="]["<"] = serde_json::json!(["<", "="]);
        let err = parse_table(&v.to_string(), "bad").unwrap_err();
        assert!(err.to_string().contains("identity law"));
    }

    /// Composition of the point and equality tables against concrete models.
    #[test]
    fn small_models_confirm_tables() {
        fn basic_of(scheme: &Scheme, a: i32, b: i32) -> usize {
            let name = match scheme.name() {
                "point" => match a.cmp(&b) {
                    std::cmp::Ordering::Equal => "=",
                    std::cmp::Ordering::Less => "<",
                    std::cmp::Ordering::Greater => ">",
                },
                _ => {
                    if a == b {
                        "="
                    } else {
                        "!="
                    }
                }
            };
            scheme.basic_index(name).unwrap()
        }
        for name in ["point", "eq"] {
            let s = load_scheme(name).unwrap();
            let m = s.m();
            let mut seen = vec![BasicSet::EMPTY; m * m];
            for x in 0..3 {
                for y in 0..3 {
                    for z in 0..3 {
                        let (a, b, c) = (basic_of(&s, x, y), basic_of(&s, y, z), basic_of(&s, x, z));
                        seen[a * m + b].insert(c);
                    }
                }
            }
            for a in 0..m {
                for b in 0..m {
                    assert_eq!(s.compose_basic(a, b), seen[a * m + b], "{name}: {a} o {b}");
                }
            }
        }
    }
}
