use std::ops::ControlFlow;

use super::{for_each_tuple, Morphism, Structure};
use crate::error::{Error, Result};
use crate::groups::{Perm, PermGroup};

/// Default size cap for exhaustive automorphism enumeration.
pub const DEFAULT_AUTOMORPHISM_CAP: usize = 10;

pub fn is_embedding(a: &Structure, m: &Structure, f: &Morphism) -> bool {
    if a.signature() != m.signature() || f.map.len() != a.size() {
        return false;
    }
    if f.map.iter().any(|&x| x >= m.size()) || !f.is_injective() {
        return false;
    }
    let sig = a.signature();
    for (r, (_, arity)) in sig.relations.iter().enumerate() {
        let mut ok = true;
        for_each_tuple(a.size(), *arity, |t| {
            if ok && a.holds(r, t) != m.holds(r, &f.apply_tuple(t)) {
                ok = false;
            }
        });
        if !ok {
            return false;
        }
    }
    for (g, (_, arity)) in sig.functions.iter().enumerate() {
        let mut ok = true;
        for_each_tuple(a.size(), *arity, |t| {
            if ok && f.apply(a.apply_function(g, t)) != m.apply_function(g, &f.apply_tuple(t)) {
                ok = false;
            }
        });
        if !ok {
            return false;
        }
    }
    for c in 0..sig.constants.len() {
        if f.apply(a.constant(c)) != m.constant(c) {
            return false;
        }
    }
    (0..a.size()).all(|x| a.invariant_labels(x) == m.invariant_labels(f.apply(x)))
}

struct RelCheck {
    r: usize,
    tuple: Vec<usize>,
    holds: bool,
}

struct FnCheck {
    f: usize,
    args: Vec<usize>,
    value: usize,
}

/// Backtracking search for embeddings `A ↪ M`, optionally with some images
/// prescribed. Elements of `A` are assigned in order `0, 1, ..` with
/// candidates tried in ascending order, so results come out sorted
/// lexicographically by image tuple.
pub struct EmbeddingSearch<'a> {
    a: &'a Structure,
    m: &'a Structure,
    fixed: Vec<Option<usize>>,
    limit: Option<usize>,
}

impl<'a> EmbeddingSearch<'a> {
    pub fn new(a: &'a Structure, m: &'a Structure) -> Self {
        Self { a, m, fixed: vec![None; a.size()], limit: None }
    }

    /// Requires the embedding to send `x` to `y`.
    pub fn fix(mut self, x: usize, y: usize) -> Self {
        self.fixed[x] = Some(y);
        self
    }

    pub fn fix_all(mut self, pairs: &[(usize, usize)]) -> Self {
        for &(x, y) in pairs {
            self.fixed[x] = Some(y);
        }
        self
    }

    pub fn limit(mut self, limit: usize) -> Self {
        self.limit = Some(limit);
        self
    }

    pub fn run(self) -> Vec<Morphism> {
        let mut out = Vec::new();
        let limit = self.limit;
        self.visit(|f| {
            out.push(f.clone());
            if limit.is_some_and(|l| out.len() >= l) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        out
    }

    pub fn first(self) -> Option<Morphism> {
        self.limit(1).run().pop()
    }

    /// Calls `visit` on each embedding until it returns `Break`.
    pub fn visit(self, mut visit: impl FnMut(&Morphism) -> ControlFlow<()>) {
        let (a, m) = (self.a, self.m);
        if a.signature() != m.signature() || a.size() > m.size() {
            return;
        }
        let n = a.size();
        let mut forced = self.fixed.clone();
        for c in 0..a.signature().constants.len() {
            let (x, y) = (a.constant(c), m.constant(c));
            match forced[x] {
                Some(z) if z != y => return,
                _ => forced[x] = Some(y),
            }
        }
        if forced.iter().flatten().any(|&y| y >= m.size()) {
            return;
        }
        let mut rel_checks: Vec<Vec<RelCheck>> = (0..n).map(|_| Vec::new()).collect();
        for (r, (_, arity)) in a.signature().relations.iter().enumerate() {
            for_each_tuple(n, *arity, |t| {
                let top = *t.iter().max().unwrap();
                rel_checks[top].push(RelCheck { r, tuple: t.to_vec(), holds: a.holds(r, t) });
            });
        }
        let mut fn_checks: Vec<Vec<FnCheck>> = (0..n).map(|_| Vec::new()).collect();
        for (f, (_, arity)) in a.signature().functions.iter().enumerate() {
            for_each_tuple(n, *arity, |t| {
                let value = a.apply_function(f, t);
                let top = (*t.iter().max().unwrap()).max(value);
                fn_checks[top].push(FnCheck { f, args: t.to_vec(), value });
            });
        }
        let labels: Vec<_> = (0..n).map(|x| a.invariant_labels(x)).collect();
        let mut state = Search {
            m,
            forced,
            rel_checks,
            fn_checks,
            labels,
            map: Vec::with_capacity(n),
            used: vec![false; m.size()],
            scratch: Vec::new(),
        };
        let _ = state.extend(n, &mut visit);
    }
}

struct Search<'a> {
    m: &'a Structure,
    forced: Vec<Option<usize>>,
    rel_checks: Vec<Vec<RelCheck>>,
    fn_checks: Vec<Vec<FnCheck>>,
    labels: Vec<Vec<Option<&'a str>>>,
    map: Vec<usize>,
    used: Vec<bool>,
    scratch: Vec<usize>,
}

impl Search<'_> {
    fn consistent(&mut self, i: usize) -> bool {
        let m = self.m;
        if m.invariant_labels(self.map[i]) != self.labels[i] {
            return false;
        }
        for check in &self.rel_checks[i] {
            self.scratch.clear();
            self.scratch.extend(check.tuple.iter().map(|&x| self.map[x]));
            if m.holds(check.r, &self.scratch) != check.holds {
                return false;
            }
        }
        for check in &self.fn_checks[i] {
            self.scratch.clear();
            self.scratch.extend(check.args.iter().map(|&x| self.map[x]));
            if m.apply_function(check.f, &self.scratch) != self.map[check.value] {
                return false;
            }
        }
        true
    }

    fn extend(&mut self, n: usize, visit: &mut impl FnMut(&Morphism) -> ControlFlow<()>) -> ControlFlow<()> {
        let i = self.map.len();
        if i == n {
            return visit(&Morphism::new(self.map.clone()));
        }
        let candidates: Vec<usize> = match self.forced[i] {
            Some(y) => vec![y],
            None => (0..self.m.size()).collect(),
        };
        for y in candidates {
            if self.used[y] {
                continue;
            }
            self.map.push(y);
            self.used[y] = true;
            let result = if self.consistent(i) { self.extend(n, visit) } else { ControlFlow::Continue(()) };
            self.used[y] = false;
            self.map.pop();
            result?;
        }
        ControlFlow::Continue(())
    }
}

/// All embeddings `A ↪ M` in lexicographic order of image tuples.
pub fn enumerate_embeddings(a: &Structure, m: &Structure) -> Vec<Morphism> {
    EmbeddingSearch::new(a, m).run()
}

/// The first embedding sending each `x` to `y` for `(x, y)` in `fixed`.
pub fn first_embedding_with(a: &Structure, m: &Structure, fixed: &[(usize, usize)]) -> Option<Morphism> {
    EmbeddingSearch::new(a, m).fix_all(fixed).first()
}

pub fn automorphism_group(m: &Structure) -> Result<PermGroup> {
    automorphism_group_with_cap(m, DEFAULT_AUTOMORPHISM_CAP)
}

/// All automorphisms of `m`, refusing structures larger than `cap`.
pub fn automorphism_group_with_cap(m: &Structure, cap: usize) -> Result<PermGroup> {
    if m.size() > cap {
        return Err(Error::CapExceeded { what: "automorphism enumeration".into(), actual: m.size(), cap });
    }
    let elements: Vec<Perm> = enumerate_embeddings(m, m).into_iter().map(|f| Perm::new(f.map)).collect();
    Ok(PermGroup::from_elements_unchecked(m.size(), elements))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::structures::Signature;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Structure {
        let mut s = Structure::new(Arc::new(Signature::new().relation("E", 2)), n);
        for &(u, v) in edges {
            s.add_tuple(0, vec![u, v]);
            s.add_tuple(0, vec![v, u]);
        }
        s
    }

    fn injections(n: usize, m: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for_each_tuple(m, n, |t| {
            let mut seen = vec![false; m];
            if t.iter().all(|&x| !std::mem::replace(&mut seen[x], true)) {
                out.push(t.to_vec());
            }
        });
        out
    }

    #[test]
    fn point_into_five() {
        let a = graph(1, &[]);
        let m = graph(5, &[(0, 1)]);
        assert_eq!(enumerate_embeddings(&a, &m).len(), 5);
    }

    #[test]
    fn edge_into_path() {
        let a = graph(2, &[(0, 1)]);
        let p3 = graph(3, &[(0, 1), (1, 2)]);
        let embs = enumerate_embeddings(&a, &p3);
        let maps: Vec<_> = embs.iter().map(|f| f.map.clone()).collect();
        assert_eq!(maps, vec![vec![0, 1], vec![1, 0], vec![1, 2], vec![2, 1]]);
    }

    #[test]
    fn identity_and_collapse() {
        let p3 = graph(3, &[(0, 1), (1, 2)]);
        assert!(is_embedding(&p3, &p3, &Morphism::identity(3)));
        let two = graph(2, &[(0, 1)]);
        assert!(!is_embedding(&two, &two, &Morphism::new(vec![0, 0])));
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let small = [graph(3, &[(0, 1)]), graph(3, &[(0, 1), (1, 2)]), graph(2, &[])];
        let big = [graph(4, &[(0, 1), (1, 2), (2, 3)]), graph(4, &[(0, 1), (0, 2), (0, 3)])];
        for a in &small {
            for m in &big {
                let expected: Vec<Vec<usize>> = injections(a.size(), m.size())
                    .into_iter()
                    .filter(|t| is_embedding(a, m, &Morphism::new(t.clone())))
                    .collect();
                let got: Vec<Vec<usize>> = enumerate_embeddings(a, m).into_iter().map(|f| f.map).collect();
                assert_eq!(got, expected);
            }
        }
    }

    #[test]
    fn fixed_images_are_respected() {
        let p3 = graph(3, &[(0, 1), (1, 2)]);
        let edge = graph(2, &[(0, 1)]);
        let f = first_embedding_with(&edge, &p3, &[(0, 2)]).unwrap();
        assert_eq!(f.map, vec![2, 1]);
        assert!(first_embedding_with(&edge, &p3, &[(0, 0), (1, 2)]).is_none());
    }

    #[test]
    fn automorphism_counts() {
        let empty = Structure::new(Arc::new(Signature::new()), 3);
        assert_eq!(automorphism_group(&empty).unwrap().order(), 6);
        let p3 = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(automorphism_group(&p3).unwrap().order(), 2);
        let big = Structure::new(Arc::new(Signature::new()), 11);
        assert!(matches!(automorphism_group(&big), Err(Error::CapExceeded { cap: 10, .. })));
    }

    #[test]
    fn functions_must_commute() {
        let sig = Arc::new(Signature::new().function("s", 1));
        let mut cyc = Structure::new(sig.clone(), 3);
        for x in 0..3 {
            cyc.set_function(0, &[x], (x + 1) % 3);
        }
        let auts = enumerate_embeddings(&cyc, &cyc);
        assert_eq!(auts.len(), 3);
        assert!(auts.iter().all(|f| is_embedding(&cyc, &cyc, f)));
    }
}
