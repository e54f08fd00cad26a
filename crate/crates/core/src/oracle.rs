//! Ground truth: complete-certificate search and enumeration with algebraic
//! closure propagation, plus brute-force checkers over concrete domains.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::algebra::{BasicSet, Relation, Scheme};
use crate::error::{Error, Result};
use crate::model::Instance;

/// A network of union masks over `n` variables, kept converse-closed.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Network {
    n: usize,
    masks: Vec<BasicSet>,
}

impl fmt::Debug for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Network[")?;
        for i in 0..self.n {
            for j in i + 1..self.n {
                write!(f, " {i}{j}:{:?}", self.get(i, j))?;
            }
        }
        write!(f, " ]")
    }
}

impl Network {
    /// Every off-diagonal pair unconstrained, diagonals on the identity.
    pub fn new(scheme: &Scheme, n: usize) -> Self {
        let mut masks = vec![scheme.full(); n * n];
        for i in 0..n {
            masks[i * n + i] = scheme.identity();
        }
        Network { n, masks }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> BasicSet {
        self.masks[i * self.n + j]
    }

    /// Intersects `(i, j)` with `mask`; returns whether it changed.
    #[inline]
    pub fn refine(&mut self, scheme: &Scheme, i: usize, j: usize, mask: BasicSet) -> bool {
        let old = self.masks[i * self.n + j];
        let new = old & mask;
        if new == old {
            return false;
        }
        self.masks[i * self.n + j] = new;
        self.masks[j * self.n + i] = scheme.converse_set(new);
        true
    }

    pub fn is_atomic(&self) -> bool {
        self.masks.iter().all(|m| m.len() == 1)
    }
}

/// Path-consistency closure. Returns false iff some mask becomes empty.
pub fn aclosure(scheme: &Scheme, net: &mut Network) -> bool {
    let n = net.n;
    if net.masks.iter().any(|m| m.is_empty()) {
        return false;
    }
    let queue: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    close_from(scheme, net, queue)
}

fn close_from(scheme: &Scheme, net: &mut Network, mut queue: Vec<(usize, usize)>) -> bool {
    let n = net.n;
    let mut queued = vec![false; n * n];
    for &(i, j) in &queue {
        queued[i * n + j] = true;
    }
    while let Some((i, j)) = queue.pop() {
        queued[i * n + j] = false;
        let ij = net.get(i, j);
        for k in 0..n {
            let through = scheme.compose(ij, net.get(j, k));
            if net.refine(scheme, i, k, through) {
                if net.get(i, k).is_empty() {
                    return false;
                }
                if !queued[i * n + k] {
                    queued[i * n + k] = true;
                    queue.push((i, k));
                }
            }
            let through = scheme.compose(net.get(k, i), ij);
            if net.refine(scheme, k, j, through) {
                if net.get(k, j).is_empty() {
                    return false;
                }
                if !queued[k * n + j] {
                    queued[k * n + j] = true;
                    queue.push((k, j));
                }
            }
        }
    }
    true
}

/// A complete, converse-consistent assignment of one basic to every ordered pair.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Certificate {
    vars: Vec<String>,
    basics: Vec<usize>,
}

impl fmt::Debug for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Certificate{:?}", self.basics)
    }
}

impl Certificate {
    fn from_network(vars: Vec<String>, net: &Network) -> Self {
        let basics = net.masks.iter().map(|m| m.single().expect("atomic network")).collect();
        Certificate { vars, basics }
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> usize {
        self.basics[i * self.vars.len() + j]
    }

    /// Raw row-major basic matrix.
    pub fn matrix(&self) -> &[usize] {
        &self.basics
    }

    /// Whether every constraint of `inst` holds. Variables are matched by name.
    pub fn satisfies(&self, inst: &Instance) -> bool {
        let idx: Vec<Option<usize>> = inst
            .variables()
            .iter()
            .map(|v| self.vars.iter().position(|w| w == v))
            .collect();
        inst.constraints().iter().all(|c| {
            let scope: Option<Vec<usize>> = c.scope.iter().map(|&v| idx[v]).collect();
            match scope {
                Some(scope) => inst.rel_of(c).holds(|i, j| self.get(scope[i], scope[j])),
                None => false,
            }
        })
    }

    /// The certificate as a basic constraint network instance.
    pub fn to_instance(&self, scheme: &Arc<Scheme>) -> Instance {
        let mut inst = Instance::with_variables(scheme.clone(), &self.vars);
        let n = self.vars.len();
        for i in 0..n {
            for j in i..n {
                if i == j && !scheme.has_diagonal_choice() {
                    continue;
                }
                let b = self.get(i, j);
                let rel = inst
                    .add_relation(scheme.basic_name(b), Relation::Union(BasicSet::singleton(b)))
                    .expect("basic relations do not conflict");
                inst.push_constraint(rel, vec![i, j]).expect("valid scope");
            }
        }
        inst
    }

    pub fn to_json_value(&self, scheme: &Scheme) -> serde_json::Value {
        let n = self.vars.len();
        let mut pairs = IndexMap::new();
        for i in 0..n {
            for j in i..n {
                if i == j && !scheme.has_diagonal_choice() {
                    continue;
                }
                pairs.insert(
                    format!("{},{}", self.vars[i], self.vars[j]),
                    scheme.basic_name(self.get(i, j)).to_string(),
                );
            }
        }
        serde_json::json!({ "pairs": pairs })
    }
}

/// Clauses of `(i, j, basic)` atoms over network indices.
type CompiledDnf = Vec<Vec<(usize, usize, usize)>>;

/// Constraint checking plan for an instance.
struct Compiled {
    base: Network,
    /// DNF constraints as clauses of `(u, v, basic)` with `u <= v`.
    dnfs: Vec<CompiledDnf>,
}

fn compile(inst: &Instance) -> Option<Compiled> {
    let scheme = inst.scheme();
    let mut base = Network::new(scheme, inst.num_vars());
    let mut dnfs = Vec::new();
    for c in inst.constraints() {
        match inst.rel_of(c) {
            Relation::Union(mask) => {
                let (x, y) = (c.scope[0], c.scope[1]);
                base.refine(scheme, x, y, *mask);
                if base.get(x, y).is_empty() {
                    return None;
                }
            }
            Relation::Dnf(d) => {
                let mut clauses = Vec::new();
                'clause: for clause in d.clauses() {
                    let mut atoms = Vec::new();
                    for a in clause {
                        let (mut u, mut v, mut b) = (c.scope[a.i], c.scope[a.j], a.basic);
                        if u > v {
                            std::mem::swap(&mut u, &mut v);
                            b = scheme.converse(b);
                        }
                        if u == v && !scheme.identity().contains(b) {
                            continue 'clause;
                        }
                        if u == v && !scheme.has_diagonal_choice() {
                            continue;
                        }
                        atoms.push((u, v, b));
                    }
                    atoms.sort_unstable();
                    atoms.dedup();
                    if atoms.windows(2).any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
                        continue;
                    }
                    clauses.push(atoms);
                }
                if clauses.is_empty() {
                    return None;
                }
                if clauses.iter().any(|c| c.is_empty()) {
                    continue;
                }
                dnfs.push(clauses);
            }
        }
    }
    Some(Compiled { base, dnfs })
}

/// Narrows masks using the DNFs. `None` on conflict, else whether anything changed.
fn propagate_dnfs(scheme: &Scheme, net: &mut Network, dnfs: &[CompiledDnf]) -> Option<Vec<(usize, usize)>> {
    let mut changed = Vec::new();
    for clauses in dnfs {
        let viable: Vec<&Vec<(usize, usize, usize)>> = clauses
            .iter()
            .filter(|c| c.iter().all(|&(u, v, b)| net.get(u, v).contains(b)))
            .collect();
        let first = viable.first()?;
        // pairs mentioned by every viable clause can be narrowed to the union of their basics
        'pair: for &(u, v, _) in first.iter() {
            let mut allowed = BasicSet::EMPTY;
            for c in &viable {
                match c.iter().find(|a| a.0 == u && a.1 == v) {
                    Some(&(_, _, b)) => allowed.insert(b),
                    None => continue 'pair,
                }
            }
            if net.refine(scheme, u, v, allowed) {
                changed.push((u, v));
            }
        }
    }
    Some(changed)
}

fn propagate(scheme: &Scheme, net: &mut Network, dnfs: &[CompiledDnf], mut queue: Vec<(usize, usize)>) -> bool {
    loop {
        if !close_from(scheme, net, queue) {
            return false;
        }
        match propagate_dnfs(scheme, net, dnfs) {
            None => return false,
            Some(ch) if ch.is_empty() => return true,
            Some(ch) => {
                if ch.iter().any(|&(u, v)| net.get(u, v).is_empty()) {
                    return false;
                }
                queue = ch;
            }
        }
    }
}

/// Decides consistency of a network of basic relations (one basic per pair).
pub type BasicNetworkChecker = dyn Fn(&Scheme, &Network) -> bool + Send + Sync;

/// Default exhaustive variable caps by scheme size.
pub fn default_enumeration_cap(scheme: &Scheme) -> usize {
    match scheme.m() {
        0..=3 => 7,
        4..=5 => 5,
        _ => 4,
    }
}

/// Certificate search. Uses algebraic closure as the decision procedure for
/// basic networks unless a concrete checker is supplied.
#[derive(Clone, Default)]
pub struct Oracle {
    checker: Option<Arc<BasicNetworkChecker>>,
    cap: Option<usize>,
}

impl fmt::Debug for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Oracle")
            .field("custom_checker", &self.checker.is_some())
            .field("cap", &self.cap)
            .finish()
    }
}

enum Flow {
    Continue,
    Stop,
}

impl Oracle {
    pub fn new() -> Self {
        Oracle::default()
    }

    pub fn with_checker(checker: Arc<BasicNetworkChecker>) -> Self {
        Oracle { checker: Some(checker), cap: None }
    }

    /// Overrides the exhaustive variable cap used by enumeration.
    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = Some(cap);
        self
    }

    fn ensure_decidable(&self, scheme: &Scheme) -> Result<()> {
        if self.checker.is_none() && !scheme.aclosure_decides_basics() {
            return Err(Error::OracleUnavailable(scheme.name().to_string()));
        }
        Ok(())
    }

    fn accept_leaf(&self, scheme: &Scheme, net: &Network) -> bool {
        match &self.checker {
            Some(check) => check(scheme, net),
            None => true,
        }
    }

    fn search(&self, scheme: &Scheme, net: Network, dnfs: &[CompiledDnf], leaf: &mut dyn FnMut(&Network) -> Flow) -> Flow {
        let n = net.n;
        let diag = scheme.has_diagonal_choice();
        let mut pick = None;
        'find: for i in 0..n {
            for j in i..n {
                if (i < j || diag) && net.get(i, j).len() > 1 {
                    pick = Some((i, j));
                    break 'find;
                }
            }
        }
        let Some((i, j)) = pick else {
            if self.accept_leaf(scheme, &net) {
                return leaf(&net);
            }
            return Flow::Continue;
        };
        for b in net.get(i, j).iter() {
            let mut child = net.clone();
            child.refine(scheme, i, j, BasicSet::singleton(b));
            if propagate(scheme, &mut child, dnfs, vec![(i, j)]) {
                if let Flow::Stop = self.search(scheme, child, dnfs, leaf) {
                    return Flow::Stop;
                }
            }
        }
        Flow::Continue
    }

    fn prepared(&self, inst: &Instance) -> Result<Option<Compiled>> {
        let scheme = inst.scheme();
        self.ensure_decidable(scheme)?;
        let Some(mut c) = compile(inst) else {
            return Ok(None);
        };
        let n = c.base.n;
        let queue = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        if !propagate(scheme, &mut c.base, &c.dnfs, queue) {
            return Ok(None);
        }
        Ok(Some(c))
    }

    /// A certificate implying every constraint, or `None` if unsatisfiable.
    pub fn find_certificate(&self, inst: &Instance) -> Result<Option<Certificate>> {
        let Some(c) = self.prepared(inst)? else {
            return Ok(None);
        };
        let vars: Vec<String> = inst.variables().iter().cloned().collect();
        let mut found = None;
        self.search(inst.scheme(), c.base, &c.dnfs, &mut |net| {
            found = Some(Certificate::from_network(vars.clone(), net));
            Flow::Stop
        });
        Ok(found)
    }

    pub fn satisfiable(&self, inst: &Instance) -> Result<bool> {
        Ok(self.find_certificate(inst)?.is_some())
    }

    /// All certificates of `inst`, in search order.
    pub fn enumerate_certificates(&self, inst: &Instance) -> Result<Vec<Certificate>> {
        let cap = self.cap.unwrap_or_else(|| default_enumeration_cap(inst.scheme()));
        if inst.num_vars() > cap {
            return Err(Error::CapExceeded { what: "variables", value: inst.num_vars(), cap });
        }
        let Some(c) = self.prepared(inst)? else {
            return Ok(Vec::new());
        };
        let vars: Vec<String> = inst.variables().iter().cloned().collect();
        let mut out = Vec::new();
        self.search(inst.scheme(), c.base, &c.dnfs, &mut |net| {
            out.push(Certificate::from_network(vars.clone(), net));
            Flow::Continue
        });
        Ok(out)
    }

    /// Whether two instances over the same variables have the same certificates.
    pub fn equivalent(&self, a: &Instance, b: &Instance) -> Result<bool> {
        if a.scheme().name() != b.scheme().name() {
            return Err(Error::SchemeMismatch(a.scheme().name().into(), b.scheme().name().into()));
        }
        let same_vars = a.num_vars() == b.num_vars() && a.variables().iter().all(|v| b.var_id(v).is_some());
        if !same_vars {
            return Err(Error::VariableSetMismatch);
        }
        let b = reorder_like(b, a);
        let ca: BTreeSet<Vec<usize>> = self.enumerate_certificates(a)?.into_iter().map(|c| c.basics).collect();
        let cb: BTreeSet<Vec<usize>> = self.enumerate_certificates(&b)?.into_iter().map(|c| c.basics).collect();
        Ok(ca == cb)
    }

    /// Consistency of an arbitrary union network (closure plus search).
    pub fn network_consistent(&self, scheme: &Scheme, net: &Network) -> Result<bool> {
        self.ensure_decidable(scheme)?;
        let mut net = net.clone();
        if !aclosure(scheme, &mut net) {
            return Ok(false);
        }
        let mut found = false;
        self.search(scheme, net, &[], &mut |_| {
            found = true;
            Flow::Stop
        });
        Ok(found)
    }
}

/// `b` with its variables listed in `a`'s order.
fn reorder_like(b: &Instance, a: &Instance) -> Instance {
    if b.variables().iter().eq(a.variables().iter()) {
        return b.clone();
    }
    Instance::with_variables(b.scheme().clone(), &a.variables().iter().collect::<Vec<_>>())
        .splice(b)
        .expect("same variables")
}

/// All consistent certificates on `n` anonymous variables, for filtering many
/// small instances over the same window.
pub struct CertificateUniverse {
    n: usize,
    certs: Vec<Certificate>,
}

impl CertificateUniverse {
    pub fn new(oracle: &Oracle, scheme: &Arc<Scheme>, n: usize) -> Result<Self> {
        let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let inst = Instance::with_variables(scheme.clone(), &names);
        let certs = oracle.clone().with_cap(n.max(1)).enumerate_certificates(&inst)?;
        Ok(CertificateUniverse { n, certs })
    }

    pub fn len(&self) -> usize {
        self.certs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.certs.is_empty()
    }

    pub fn certificates(&self) -> &[Certificate] {
        &self.certs
    }

    /// Indices of certificates satisfying `inst`, whose variables are matched
    /// to universe positions by their order in `inst` (padding allowed).
    pub fn models(&self, inst: &Instance) -> Vec<usize> {
        assert!(inst.num_vars() <= self.n, "instance larger than the universe window");
        self.certs
            .iter()
            .enumerate()
            .filter(|(_, cert)| {
                inst.constraints().iter().all(|c| inst.rel_of(c).holds(|i, j| cert.get(c.scope[i], c.scope[j])))
            })
            .map(|(k, _)| k)
            .collect()
    }
}

fn concrete_check(inst: &Instance, basic_of: impl Fn(usize, usize) -> usize) -> bool {
    inst.constraints()
        .iter()
        .all(|c| inst.rel_of(c).holds(|i, j| basic_of(c.scope[i], c.scope[j])))
}

/// Satisfiability over the equality domain by enumerating set partitions.
pub fn brute_force_equality(inst: &Instance) -> Result<bool> {
    let s = inst.scheme();
    if s.name() != "eq" {
        return Err(Error::WrongScheme { expected: "eq", found: s.name().to_string() });
    }
    let n = inst.num_vars();
    if n > 8 {
        return Err(Error::CapExceeded { what: "variables", value: n, cap: 8 });
    }
    let (same, diff) = (s.basic_index("=").unwrap(), s.basic_index("!=").unwrap());
    let mut block = vec![0usize; n];
    fn rec(k: usize, max: usize, block: &mut Vec<usize>, test: &dyn Fn(&[usize]) -> bool) -> bool {
        if k == block.len() {
            return test(block);
        }
        for b in 0..=max {
            block[k] = b;
            if rec(k + 1, max.max(b + 1), block, test) {
                return true;
            }
        }
        false
    }
    let test = |block: &[usize]| concrete_check(inst, |u, v| if block[u] == block[v] { same } else { diff });
    Ok(rec(0, 0, &mut block, &test))
}

/// Satisfiability over a dense order by enumerating weak orders of the variables.
pub fn brute_force_order(inst: &Instance) -> Result<bool> {
    let s = inst.scheme();
    if s.name() != "point" {
        return Err(Error::WrongScheme { expected: "point", found: s.name().to_string() });
    }
    let n = inst.num_vars();
    if n > 7 {
        return Err(Error::CapExceeded { what: "variables", value: n, cap: 7 });
    }
    let (eq, lt, gt) = (s.basic_index("=").unwrap(), s.basic_index("<").unwrap(), s.basic_index(">").unwrap());
    let mut rank = vec![0usize; n];
    loop {
        let ok = concrete_check(inst, |u, v| match rank[u].cmp(&rank[v]) {
            std::cmp::Ordering::Equal => eq,
            std::cmp::Ordering::Less => lt,
            std::cmp::Ordering::Greater => gt,
        });
        if ok {
            return Ok(true);
        }
        let mut k = 0;
        loop {
            if k == n {
                return Ok(false);
            }
            rank[k] += 1;
            if rank[k] < n {
                break;
            }
            rank[k] = 0;
            k += 1;
        }
    }
}

/// Decides instances of the target language.
pub trait TargetSolver: Sync {
    fn name(&self) -> &'static str;
    fn solve(&self, inst: &Instance) -> Result<bool>;
}

/// Complete certificate search; correct for every language.
#[derive(Clone, Debug, Default)]
pub struct OracleSolver(pub Oracle);

impl TargetSolver for OracleSolver {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn solve(&self, inst: &Instance) -> Result<bool> {
        self.0.satisfiable(inst)
    }
}

/// Algebraic closure alone. Complete only for languages on which closure
/// decides consistency (RCC-5's tractable fragment, point and equality unions).
#[derive(Clone, Copy, Debug, Default)]
pub struct AClosureSolver;

impl TargetSolver for AClosureSolver {
    fn name(&self) -> &'static str {
        "aclosure"
    }

    fn solve(&self, inst: &Instance) -> Result<bool> {
        let scheme = inst.scheme();
        let mut net = Network::new(scheme, inst.num_vars());
        for c in inst.constraints() {
            let mask = inst.rel_of(c).as_union().ok_or_else(|| {
                Error::Invalid(format!("closure solver needs binary union constraints, got `{}`", inst.rel_name_of(c)))
            })?;
            net.refine(scheme, c.scope[0], c.scope[1], mask);
        }
        Ok(aclosure(scheme, &mut net))
    }
}

/// Convenience wrapper using the default oracle.
pub fn find_certificate(inst: &Instance) -> Result<Option<Certificate>> {
    Oracle::new().find_certificate(inst)
}

/// Convenience wrapper using the default oracle and caps.
pub fn enumerate_certificates(inst: &Instance) -> Result<Vec<Certificate>> {
    Oracle::new().enumerate_certificates(inst)
}

pub fn equivalent(a: &Instance, b: &Instance) -> Result<bool> {
    Oracle::new().equivalent(a, b)
}
