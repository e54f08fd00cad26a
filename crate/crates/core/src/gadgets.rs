//! Instance generators from hardness constructions, used as test factories.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{load_scheme, Atom, DnfRel, Formula, Relation};
use crate::backdoor::Backdoor;
use crate::error::{Error, Result};
use crate::language::Language;
use crate::model::Instance;
use crate::sidedoor::Sidedoor;

/// `R_k` over the equality scheme: all arguments equal, or all pairwise distinct.
pub fn build_rk(k: usize) -> Result<DnfRel> {
    if k < 2 {
        return Err(Error::KTooSmall(k));
    }
    let eq = load_scheme("eq")?;
    let (same, diff) = (eq.basic_index("=").unwrap(), eq.basic_index("!=").unwrap());
    let all = |b: usize| index_pairs(k).into_iter().map(|(i, j)| Atom::new(i, j, b)).collect::<Vec<_>>();
    DnfRel::new(&eq, k, vec![all(same), all(diff)])
}

fn index_pairs(k: usize) -> Vec<(usize, usize)> {
    (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect()
}

/// `R_k` as the conjunction over all pairs of pairs of `x_i != x_j or x_l = x_m`.
pub fn rk_cnf(k: usize) -> Result<Formula> {
    if k < 2 {
        return Err(Error::KTooSmall(k));
    }
    let pairs = index_pairs(k);
    let mut clauses = Vec::new();
    for &(i, j) in &pairs {
        for &(l, m) in &pairs {
            clauses.push(Formula::Or(vec![
                Formula::Not(Box::new(Formula::Atom(i, j, "=".into()))),
                Formula::Atom(l, m, "=".into()),
            ]));
        }
    }
    Ok(Formula::And(clauses))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HittingSetInstance {
    pub universe: Vec<String>,
    pub family: Vec<Vec<String>>,
    #[serde(default)]
    pub k: usize,
}

impl HittingSetInstance {
    pub fn validate(&self) -> Result<()> {
        for f in &self.family {
            if f.is_empty() {
                return Err(Error::Invalid("hitting-set family contains an empty set".into()));
            }
            if let Some(x) = f.iter().find(|x| !self.universe.contains(x)) {
                return Err(Error::Invalid(format!("`{x}` is not in the universe")));
            }
        }
        Ok(())
    }

    /// Minimum hitting set size by exhaustive search.
    pub fn min_hitting_set(&self) -> usize {
        let n = self.universe.len();
        let masks: Vec<u32> = self
            .family
            .iter()
            .map(|f| f.iter().map(|x| 1u32 << self.universe.iter().position(|u| u == x).unwrap()).fold(0, |a, b| a | b))
            .collect();
        (0u32..1 << n)
            .filter(|s| masks.iter().all(|m| m & s != 0))
            .map(|s| s.count_ones() as usize)
            .min()
            .unwrap_or(0)
    }
}

/// Detection instance over `U ∪ {n}` with one `R_{|F|+1}(F ∪ {n})` per member.
/// Returns the instance and the budget `k`.
pub fn hitting_set_reduction(hs: &HittingSetInstance) -> Result<(Instance, usize)> {
    hs.validate()?;
    let eq = load_scheme("eq")?;
    let mut hub = "n".to_string();
    while hs.universe.contains(&hub) {
        hub.push('_');
    }
    let mut names = hs.universe.clone();
    names.push(hub.clone());
    let mut inst = Instance::with_variables(eq, &names);
    for f in &hs.family {
        let mut members: Vec<&String> = f.iter().collect();
        members.sort_by_key(|x| hs.universe.iter().position(|u| u == *x));
        members.dedup();
        let arity = members.len() + 1;
        let idx = inst.add_relation(&format!("R{arity}"), Relation::Dnf(build_rk(arity)?))?;
        let mut scope: Vec<usize> = members.iter().map(|x| inst.var_id(x).unwrap()).collect();
        scope.push(inst.var_id(&hub).unwrap());
        inst.push_constraint(idx, scope)?;
    }
    Ok((inst, hs.k))
}

/// A simple undirected graph on vertices `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Rejects self-loops and out-of-range endpoints; parallel edges are merged.
    pub fn new(vertices: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Invalid(format!("self-loop on vertex {a}")));
            }
            if a.max(b) >= vertices {
                return Err(Error::Invalid(format!("edge ({a},{b}) leaves the vertex range")));
            }
            out.push((a.min(b), a.max(b)));
        }
        out.sort_unstable();
        out.dedup();
        Ok(Graph { vertices, edges: out })
    }

    pub fn complete(n: usize) -> Self {
        Graph::new(n, index_pairs(n)).expect("complete graph is simple")
    }

    /// Whether the edges split into edge-disjoint triangles.
    pub fn has_triangle_partition(&self) -> bool {
        fn rec(left: &mut Vec<(usize, usize)>) -> bool {
            let Some(&(a, b)) = left.first() else {
                return true;
            };
            let has = |l: &Vec<(usize, usize)>, x: usize, y: usize| l.contains(&(x.min(y), x.max(y)));
            let thirds: Vec<usize> = left
                .iter()
                .flat_map(|&(x, y)| [x, y])
                .filter(|&c| c != a && c != b && has(left, a, c) && has(left, b, c))
                .collect();
            let mut tried = Vec::new();
            for c in thirds {
                if tried.contains(&c) {
                    continue;
                }
                tried.push(c);
                let tri = [(a, b), (a.min(c), a.max(c)), (b.min(c), b.max(c))];
                let mut next: Vec<_> = left.iter().copied().filter(|e| !tri.contains(e)).collect();
                if rec(&mut next) {
                    return true;
                }
            }
            false
        }
        self.edges.len().is_multiple_of(3) && rec(&mut self.edges.clone())
    }
}

/// The rcc5 relation placed on every edge. It lies outside the tractable fragment.
pub const EDGE_RELATION: &str = "PP|PPi";

/// One `PP|PPi` constraint per edge; radius 3 and budget `|E|/3`.
pub fn edge_partition_reduction(g: &Graph) -> Result<(Instance, usize, usize)> {
    if !g.edges.len().is_multiple_of(3) {
        return Err(Error::BadEdgeCount(g.edges.len()));
    }
    let scheme = load_scheme("rcc5")?;
    let names: Vec<String> = (0..g.vertices).map(|v| format!("v{v}")).collect();
    let mut inst = Instance::with_variables(scheme.clone(), &names);
    let mask = scheme.parse_set(&["PP", "PPi"])?;
    let idx = inst.add_relation(EDGE_RELATION, Relation::Union(mask))?;
    for &(a, b) in &g.edges {
        inst.push_constraint(idx, vec![a, b])?;
    }
    Ok((inst, 3, g.edges.len() / 3))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum DoorSpec {
    /// `size` random pairs carry source relations outside the target.
    Backdoor { size: usize },
    /// Consecutive blocks of `radius` variables; each block's pairs carry
    /// source relations (all pairs when `full`, else one random pair).
    Sidedoor { radius: usize, sets: usize, full: bool },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedSpec {
    /// Language spec of the hard relations.
    pub source: String,
    /// Language spec of the filler relations.
    pub target: String,
    pub door: DoorSpec,
    /// Filler target constraints on random pairs.
    pub extra: usize,
}

#[derive(Clone, Debug)]
pub enum PlantedDoor {
    Backdoor(Backdoor),
    Sidedoor(Sidedoor),
}

#[derive(Clone, Debug)]
pub struct Planted {
    pub instance: Instance,
    pub door: PlantedDoor,
}

fn binary_menu(lang: &Language, keep: impl Fn(&str, &Relation) -> bool) -> Vec<(&str, &Relation)> {
    lang.relations().filter(|(n, r)| r.arity() == 2 && keep(n, r)).collect()
}

/// Random binary instance on `x0..x{n-1}` with a planted backdoor or sidedoor.
pub fn generate_planted(n: usize, spec: &PlantedSpec, seed: u64) -> Result<Planted> {
    let source = Language::load(&spec.source)?;
    let target = Language::load(&spec.target)?;
    if source.scheme().name() != target.scheme().name() {
        return Err(Error::SchemeMismatch(source.scheme().name().into(), target.scheme().name().into()));
    }
    let hard = binary_menu(&source, |n, r| !target.contains(n, r));
    let easy = binary_menu(&target, |_, _| true);
    if hard.is_empty() {
        return Err(Error::SpecInfeasible("no binary source relation outside the target".into()));
    }
    if easy.is_empty() && spec.extra > 0 {
        return Err(Error::SpecInfeasible("no binary target relation for filler constraints".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n).map(|v| format!("x{v}")).collect();
    let mut inst = Instance::with_variables(source.scheme().clone(), &names);
    let place = |inst: &mut Instance, (name, rel): (&str, &Relation), x: usize, y: usize| -> Result<()> {
        let idx = inst.add_relation(name, rel.clone())?;
        inst.push_constraint(idx, vec![x, y])
    };
    let all_pairs = index_pairs(n);
    let door = match spec.door {
        DoorSpec::Backdoor { size } => {
            if size > all_pairs.len() {
                return Err(Error::SpecInfeasible(format!("{size} pairs requested on {n} variables")));
            }
            let mut chosen: Vec<(usize, usize)> = all_pairs.choose_multiple(&mut rng, size).copied().collect();
            chosen.sort_unstable();
            for &(x, y) in &chosen {
                let r = hard[rng.gen_range(0..hard.len())];
                place(&mut inst, r, x, y)?;
            }
            PlantedDoor::Backdoor(Backdoor::new(chosen))
        }
        DoorSpec::Sidedoor { radius, sets, full } => {
            if radius < 2 || radius * sets > n {
                return Err(Error::SpecInfeasible(format!("{sets} sets of radius {radius} on {n} variables")));
            }
            let blocks: Vec<Vec<usize>> = (0..sets).map(|s| (s * radius..(s + 1) * radius).collect()).collect();
            for b in &blocks {
                let pairs: Vec<(usize, usize)> = index_pairs(radius).into_iter().map(|(i, j)| (b[i], b[j])).collect();
                let used = if full { pairs } else { vec![pairs[rng.gen_range(0..pairs.len())]] };
                for (x, y) in used {
                    let r = hard[rng.gen_range(0..hard.len())];
                    place(&mut inst, r, x, y)?;
                }
            }
            PlantedDoor::Sidedoor(Sidedoor::new(radius, blocks))
        }
    };
    if !all_pairs.is_empty() {
        for _ in 0..spec.extra {
            let (x, y) = all_pairs[rng.gen_range(0..all_pairs.len())];
            let r = easy[rng.gen_range(0..easy.len())];
            let (x, y) = if rng.gen_bool(0.5) { (x, y) } else { (y, x) };
            place(&mut inst, r, x, y)?;
        }
    }
    Ok(Planted { instance: inst, door })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::eliminate_negation;
    use crate::oracle::Oracle;

    #[test]
    fn rk_membership() {
        let eq = load_scheme("eq").unwrap();
        let (same, diff) = (eq.basic_index("=").unwrap(), eq.basic_index("!=").unwrap());
        let r3 = Relation::Dnf(build_rk(3).unwrap());
        // value tuples mapped to basics
        let holds = |t: [u8; 3]| r3.holds(|i, j| if t[i] == t[j] { same } else { diff });
        assert!(holds([1, 1, 1]));
        assert!(holds([1, 2, 3]));
        assert!(!holds([1, 1, 2]));
        assert!(!holds([2, 1, 1]));
        assert!(matches!(build_rk(1), Err(Error::KTooSmall(1))));
    }

    #[test]
    fn rk_dnf_matches_cnf() {
        let eq = load_scheme("eq").unwrap();
        for k in [3, 4] {
            let cnf = eliminate_negation(&rk_cnf(k).unwrap(), k, &eq, 4).unwrap();
            let dnf = build_rk(k).unwrap();
            let names: Vec<String> = (0..k).map(|i| format!("x{i}")).collect();
            let mut a = Instance::with_variables(eq.clone(), &names);
            let idx = a.add_relation("cnf", Relation::Dnf(cnf)).unwrap();
            a.push_constraint(idx, (0..k).collect()).unwrap();
            let mut b = Instance::with_variables(eq.clone(), &names);
            let idx = b.add_relation("dnf", Relation::Dnf(dnf)).unwrap();
            b.push_constraint(idx, (0..k).collect()).unwrap();
            assert!(Oracle::new().equivalent(&a, &b).unwrap());
        }
    }

    #[test]
    fn hitting_sets() {
        let hs = HittingSetInstance {
            universe: vec!["a".into(), "b".into()],
            family: vec![vec!["a".into()], vec!["b".into()]],
            k: 2,
        };
        assert_eq!(hs.min_hitting_set(), 2);
        let (inst, k) = hitting_set_reduction(&hs).unwrap();
        assert_eq!(k, 2);
        assert_eq!(inst.num_vars(), 3);
        assert_eq!(inst.to_string(), "{R2(a,n), R2(b,n)}");
        let one = HittingSetInstance { family: vec![vec!["a".into(), "b".into()]], ..hs.clone() };
        assert_eq!(one.min_hitting_set(), 1);
        let bad = HittingSetInstance { family: vec![vec!["z".into()]], ..hs };
        assert!(hitting_set_reduction(&bad).is_err());
    }

    #[test]
    fn triangle_partitions() {
        assert!(Graph::complete(3).has_triangle_partition());
        assert!(!Graph::complete(4).has_triangle_partition());
        assert!(Graph::new(0, []).unwrap().has_triangle_partition());
        let bowtie = Graph::new(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)]).unwrap();
        assert!(bowtie.has_triangle_partition());
        assert!(edge_partition_reduction(&Graph::complete(4)).is_ok());
        let (inst, r, k) = edge_partition_reduction(&bowtie).unwrap();
        assert_eq!((inst.constraints().len(), r, k), (6, 3, 2));
        assert!(matches!(edge_partition_reduction(&Graph::new(3, [(0, 1)]).unwrap()), Err(Error::BadEdgeCount(1))));
        assert!(Graph::new(2, [(1, 1)]).is_err());
    }

    #[test]
    fn planted_is_deterministic() {
        let spec = PlantedSpec {
            source: "rcc5:all".into(),
            target: "rcc5:gamma".into(),
            door: DoorSpec::Sidedoor { radius: 3, sets: 2, full: true },
            extra: 4,
        };
        let a = generate_planted(6, &spec, 7).unwrap();
        let b = generate_planted(6, &spec, 7).unwrap();
        assert_eq!(a.instance.to_json(), b.instance.to_json());
        assert_eq!(a.instance.constraints().len(), 10);
        let bad = PlantedSpec { door: DoorSpec::Sidedoor { radius: 3, sets: 3, full: true }, ..spec };
        assert!(matches!(generate_planted(6, &bad, 0), Err(Error::SpecInfeasible(_))));
    }
}
