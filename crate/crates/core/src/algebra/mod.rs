//! Partition schemes and the relation representations built over them.
//!
//! A scheme is a finite set of jointly exhaustive, pairwise disjoint binary
//! relations ("basics") closed under converse and containing equality. Binary
//! constraints are unions of basics, stored as bit sets; higher-arity
//! relations are positive DNFs over basic atoms.

mod relation;
mod scheme;

use std::fmt;
use std::ops::{BitAnd, BitAndAssign, BitOr, BitOrAssign};

pub use relation::{eliminate_negation, Atom, DnfRel, Formula, Relation};
pub use scheme::{load_scheme, DomainTag, Scheme, MAX_BASICS};

/// A set of basic relations, one bit per basic index.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BasicSet(pub u32);

impl BasicSet {
    pub const EMPTY: BasicSet = BasicSet(0);

    #[inline]
    pub fn singleton(b: usize) -> Self {
        BasicSet(1 << b)
    }

    #[inline]
    pub fn full(m: usize) -> Self {
        if m >= 32 {
            BasicSet(u32::MAX)
        } else {
            BasicSet((1u32 << m) - 1)
        }
    }

    #[inline]
    pub fn contains(self, b: usize) -> bool {
        self.0 & (1 << b) != 0
    }

    #[inline]
    pub fn insert(&mut self, b: usize) {
        self.0 |= 1 << b;
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn is_subset(self, other: BasicSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// The sole member, if this is a singleton.
    #[inline]
    pub fn single(self) -> Option<usize> {
        if self.0.count_ones() == 1 {
            Some(self.0.trailing_zeros() as usize)
        } else {
            None
        }
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(b)
            }
        })
    }
}

impl FromIterator<usize> for BasicSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = BasicSet::EMPTY;
        for b in iter {
            s.insert(b);
        }
        s
    }
}

impl BitAnd for BasicSet {
    type Output = BasicSet;
    #[inline]
    fn bitand(self, rhs: Self) -> Self {
        BasicSet(self.0 & rhs.0)
    }
}

impl BitAndAssign for BasicSet {
    #[inline]
    fn bitand_assign(&mut self, rhs: Self) {
        self.0 &= rhs.0;
    }
}

impl BitOr for BasicSet {
    type Output = BasicSet;
    #[inline]
    fn bitor(self, rhs: Self) -> Self {
        BasicSet(self.0 | rhs.0)
    }
}

impl BitOrAssign for BasicSet {
    #[inline]
    fn bitor_assign(&mut self, rhs: Self) {
        self.0 |= rhs.0;
    }
}

impl fmt::Debug for BasicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, b) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "}}")
    }
}

/// Converse of a union relation: every basic mapped through the converse permutation.
pub fn converse_rel(scheme: &Scheme, r: BasicSet) -> BasicSet {
    scheme.converse_set(r)
}

/// Weak composition lifted to unions of basics.
pub fn compose_union(scheme: &Scheme, a: BasicSet, b: BasicSet) -> BasicSet {
    scheme.compose(a, b)
}

pub fn intersect(a: BasicSet, b: BasicSet) -> BasicSet {
    a & b
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rcc5() -> std::sync::Arc<Scheme> {
        load_scheme("rcc5").unwrap()
    }

    fn set(s: &Scheme, names: &[&str]) -> BasicSet {
        names.iter().map(|n| s.basic_index(n).unwrap()).collect()
    }

    #[test]
    fn basic_set_ops() {
        let s = BasicSet::singleton(0) | BasicSet::singleton(3);
        assert_eq!(s.len(), 2);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 3]);
        assert_eq!(s.single(), None);
        assert_eq!(BasicSet::singleton(4).single(), Some(4));
        assert!(BasicSet::singleton(3).is_subset(s));
        assert_eq!(BasicSet::full(5).0, 0b11111);
    }

    #[test]
    fn converse_examples() {
        let s = rcc5();
        assert_eq!(converse_rel(&s, set(&s, &["PP"])), set(&s, &["PPi"]));
        assert_eq!(converse_rel(&s, set(&s, &["EQ"])), set(&s, &["EQ"]));
        assert_eq!(converse_rel(&s, s.full()), s.full());
    }

    #[test]
    fn compose_examples() {
        let s = rcc5();
        let pp = set(&s, &["PP"]);
        assert_eq!(compose_union(&s, pp, pp), pp);
        let eq = set(&s, &["EQ"]);
        for mask in 0..32u32 {
            let x = BasicSet(mask);
            assert_eq!(compose_union(&s, eq, x), x);
            assert_eq!(compose_union(&s, x, eq), x);
        }
        let p = load_scheme("point").unwrap();
        let lt = set(&p, &["<"]);
        assert_eq!(compose_union(&p, lt, lt), lt);
    }

    #[test]
    fn intersect_examples() {
        let s = rcc5();
        assert_eq!(intersect(set(&s, &["PP", "EQ"]), set(&s, &["PP"])), set(&s, &["PP"]));
        let x = set(&s, &["DR", "PO"]);
        assert_eq!(intersect(x, x), x);
        assert!(intersect(set(&s, &["PP"]), set(&s, &["DR"])).is_empty());
    }

    proptest! {
        #[test]
        fn converse_is_involution(mask in 0u32..32) {
            let s = rcc5();
            let r = BasicSet(mask);
            prop_assert_eq!(converse_rel(&s, converse_rel(&s, r)), r);
        }

        #[test]
        fn intersect_laws(a in 0u32..32, b in 0u32..32, c in 0u32..32) {
            let (a, b, c) = (BasicSet(a), BasicSet(b), BasicSet(c));
            prop_assert_eq!(intersect(a, b), intersect(b, a));
            prop_assert_eq!(intersect(intersect(a, b), c), intersect(a, intersect(b, c)));
            prop_assert_eq!(intersect(a, a), a);
        }

        #[test]
        fn composition_respects_converse(a in 0u32..32, b in 0u32..32) {
            let s = rcc5();
            let (a, b) = (BasicSet(a), BasicSet(b));
            prop_assert_eq!(
                converse_rel(&s, compose_union(&s, a, b)),
                compose_union(&s, converse_rel(&s, b), converse_rel(&s, a))
            );
        }
    }
}
