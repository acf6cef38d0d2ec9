use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Default cap on explicitly enumerated group orders.
pub const DEFAULT_GROUP_CAP: usize = 50_000;

/// A permutation of `{0, .., degree - 1}` in image-list form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm(Vec<usize>);

impl Perm {
    /// Panics if `images` is not a permutation.
    pub fn new(images: Vec<usize>) -> Self {
        Self::try_new(images).expect("not a permutation")
    }

    pub fn try_new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x >= n || std::mem::replace(&mut seen[x], true) {
                return Err(Error::Invalid(format!("{images:?} is not a permutation")));
            }
        }
        Ok(Self(images))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// The transposition of `a` and `b` on `n` points.
    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut p = Self::identity(n);
        p.0.swap(a, b);
        p
    }

    /// The cyclic shift `x -> x + 1 mod n`.
    pub fn rotation(n: usize) -> Self {
        Self((0..n).map(|x| (x + 1) % n).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn apply(&self, x: usize) -> usize {
        self.0[x]
    }

    pub fn apply_tuple(&self, t: &[usize]) -> Vec<usize> {
        t.iter().map(|&x| self.0[x]).collect()
    }

    /// `(self · h)(x) = self(h(x))`.
    pub fn compose(&self, h: &Perm) -> Perm {
        Perm(h.0.iter().map(|&x| self.0[x]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.0.len()];
        for (x, &y) in self.0.iter().enumerate() {
            inv[y] = x;
        }
        Perm(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// Parses the image-list form `"0 2 1 3"`.
    pub fn parse(text: &str) -> Result<Perm> {
        let images = text
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Invalid(format!("bad permutation entry {t:?}"))))
            .collect::<Result<Vec<usize>>>()?;
        Perm::try_new(images)
    }
}

impl fmt::Debug for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Perm{:?}", self.0)
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

/// How permutations move the points a caller cares about. The natural
/// action moves points directly; [`MaskAction`] moves bitmasks of points,
/// which is how atom permutations act on a finite Boolean algebra.
pub trait Action: Sync {
    fn act(&self, g: &Perm, x: usize) -> usize;

    fn act_tuple(&self, g: &Perm, t: &[usize]) -> Vec<usize> {
        t.iter().map(|&x| self.act(g, x)).collect()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Natural;

impl Action for Natural {
    fn act(&self, g: &Perm, x: usize) -> usize {
        g.apply(x)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MaskAction;

impl Action for MaskAction {
    fn act(&self, g: &Perm, x: usize) -> usize {
        let mut out = 0;
        let mut rest = x;
        while rest != 0 {
            let bit = rest.trailing_zeros() as usize;
            out |= 1 << g.apply(bit);
            rest &= rest - 1;
        }
        out
    }
}

/// An explicitly enumerated permutation group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermGroup {
    degree: usize,
    elements: BTreeSet<Perm>,
}

impl PermGroup {
    /// Closes `generators` under composition, refusing to exceed `cap`.
    pub fn from_generators(degree: usize, generators: &[Perm], cap: usize) -> Result<PermGroup> {
        if let Some(g) = generators.iter().find(|g| g.degree() != degree) {
            return Err(Error::Invalid(format!("generator {g} has degree {}", g.degree())));
        }
        let mut elements = BTreeSet::new();
        let id = Perm::identity(degree);
        elements.insert(id.clone());
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for g in generators {
                let y = x.compose(g);
                if elements.insert(y.clone()) {
                    if elements.len() > cap {
                        return Err(Error::CapExceeded { what: "group closure".into(), actual: elements.len(), cap });
                    }
                    queue.push_back(y);
                }
            }
        }
        Ok(PermGroup { degree, elements })
    }

    /// Checks closure under composition and inverse.
    pub fn from_elements(degree: usize, elements: impl IntoIterator<Item = Perm>) -> Result<PermGroup> {
        let group = Self::from_elements_unchecked(degree, elements);
        if !group.contains(&Perm::identity(degree)) {
            return Err(Error::Invalid("element set lacks the identity".into()));
        }
        for x in &group.elements {
            if x.degree() != degree || !group.contains(&x.inverse()) {
                return Err(Error::Invalid(format!("{x} has no inverse in the set")));
            }
            for y in &group.elements {
                if !group.contains(&x.compose(y)) {
                    return Err(Error::Invalid(format!("set not closed: {x} * {y}")));
                }
            }
        }
        Ok(group)
    }

    pub fn from_elements_unchecked(degree: usize, elements: impl IntoIterator<Item = Perm>) -> PermGroup {
        PermGroup { degree, elements: elements.into_iter().collect() }
    }

    pub fn symmetric(n: usize) -> PermGroup {
        let mut gens = Vec::new();
        if n >= 2 {
            gens.push(Perm::transposition(n, 0, 1));
            gens.push(Perm::rotation(n));
        }
        Self::from_generators(n, &gens, usize::MAX).expect("no cap")
    }

    pub fn cyclic(n: usize) -> PermGroup {
        Self::from_generators(n, &[Perm::rotation(n)], usize::MAX).expect("no cap")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, g: &Perm) -> bool {
        self.elements.contains(g)
    }

    pub fn elements(&self) -> &BTreeSet<Perm> {
        &self.elements
    }

    pub fn iter(&self) -> impl Iterator<Item = &Perm> {
        self.elements.iter()
    }

    pub fn as_subset(&self) -> GroupSubset {
        GroupSubset { degree: self.degree, members: self.elements.clone() }
    }

    /// The subset `members`, checked to lie in the group.
    pub fn subset(&self, members: impl IntoIterator<Item = Perm>) -> Result<GroupSubset> {
        let members: BTreeSet<Perm> = members.into_iter().collect();
        if let Some(x) = members.iter().find(|x| !self.contains(x)) {
            return Err(Error::Invalid(format!("{x} is not a group element")));
        }
        Ok(GroupSubset { degree: self.degree, members })
    }

    pub fn orbit(&self, action: &dyn Action, tuple: &[usize]) -> BTreeSet<Vec<usize>> {
        self.elements.iter().map(|g| action.act_tuple(g, tuple)).collect()
    }
}

/// A finite subset of a permutation group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupSubset {
    degree: usize,
    members: BTreeSet<Perm>,
}

impl GroupSubset {
    pub fn new(degree: usize, members: impl IntoIterator<Item = Perm>) -> Self {
        Self { degree, members: members.into_iter().collect() }
    }

    pub fn identity(degree: usize) -> Self {
        Self::new(degree, [Perm::identity(degree)])
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, g: &Perm) -> bool {
        self.members.contains(g)
    }

    pub fn members(&self) -> &BTreeSet<Perm> {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = &Perm> {
        self.members.iter()
    }

    pub fn inverse(&self) -> GroupSubset {
        Self::new(self.degree, self.members.iter().map(Perm::inverse))
    }

    pub fn is_symmetric(&self) -> bool {
        self.members.iter().all(|x| self.members.contains(&x.inverse()))
    }

    pub fn is_subset_of(&self, other: &GroupSubset) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn union(&self, other: &GroupSubset) -> GroupSubset {
        Self::new(self.degree, self.members.union(&other.members).cloned())
    }

    pub fn apply_to(&self, action: &dyn Action, tuple: &[usize]) -> BTreeSet<Vec<usize>> {
        self.members.iter().map(|g| action.act_tuple(g, tuple)).collect()
    }
}

/// `{ g ∈ G : g·x = x for every entry x of points }` under `action`.
pub fn stabilizer_under(g: &PermGroup, action: &dyn Action, points: &[usize]) -> GroupSubset {
    GroupSubset::new(g.degree(), g.iter().filter(|h| points.iter().all(|&x| action.act(h, x) == x)).cloned())
}

pub fn pointwise_stabilizer(g: &PermGroup, points: &[usize]) -> GroupSubset {
    stabilizer_under(g, &Natural, points)
}

/// `{ xy : x ∈ X, y ∈ Y }`.
pub fn product_set(x: &GroupSubset, y: &GroupSubset) -> GroupSubset {
    let mut members = BTreeSet::new();
    for a in x.iter() {
        for b in y.iter() {
            members.insert(a.compose(b));
        }
    }
    GroupSubset { degree: x.degree, members }
}

/// `X^n`, with `X^0 = {1}`.
pub fn power(x: &GroupSubset, n: usize) -> GroupSubset {
    let mut acc = GroupSubset::identity(x.degree);
    for _ in 0..n {
        acc = product_set(&acc, x);
    }
    acc
}

/// The subgroup generated by a subset.
pub fn generated_subgroup(x: &GroupSubset, cap: usize) -> Result<PermGroup> {
    let gens: Vec<Perm> = x.iter().cloned().collect();
    PermGroup::from_generators(x.degree(), &gens, cap)
}
