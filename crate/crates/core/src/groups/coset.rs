use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use super::{generated_subgroup, power, product_set, GroupSubset, Perm, PermGroup};
use crate::error::{Error, Result};

/// The coset graph on `G/V` with edges `{gV, gaV}` for `a ∈ A`. Cosets are
/// numbered in order of their least element; self-loops (from `a ∈ V`)
/// are dropped.
#[derive(Clone, Debug)]
pub struct CosetGraph {
    pub cosets: Vec<BTreeSet<Perm>>,
    pub coset_of: BTreeMap<Perm, usize>,
    pub edges: BTreeSet<(usize, usize)>,
    pub generators: GroupSubset,
    pub subgroup: GroupSubset,
    pub group: PermGroup,
}

pub fn cayley_abels_graph(g: &PermGroup, v: &GroupSubset, a: &GroupSubset) -> Result<CosetGraph> {
    if !a.is_symmetric() {
        let bad = a.iter().find(|x| !a.contains(&x.inverse())).expect("asymmetric");
        return Err(Error::NotSymmetric(format!("inverse of {bad} missing")));
    }
    if !v.contains(&Perm::identity(g.degree())) || product_set(v, v) != *v {
        return Err(Error::Invalid("V is not a subgroup".into()));
    }
    if let Some(x) = v.iter().chain(a.iter()).find(|x| !g.contains(x)) {
        return Err(Error::Invalid(format!("{x} is not in G")));
    }
    let mut cosets = Vec::new();
    let mut coset_of = BTreeMap::new();
    for x in g.iter() {
        if coset_of.contains_key(x) {
            continue;
        }
        let id = cosets.len();
        let coset: BTreeSet<Perm> = v.iter().map(|h| x.compose(h)).collect();
        for y in &coset {
            coset_of.insert(y.clone(), id);
        }
        cosets.push(coset);
    }
    let mut edges = BTreeSet::new();
    for x in g.iter() {
        for s in a.iter() {
            let (p, q) = (coset_of[x], coset_of[&x.compose(s)]);
            if p != q {
                edges.insert((p.min(q), p.max(q)));
            }
        }
    }
    Ok(CosetGraph { cosets, coset_of, edges, generators: a.clone(), subgroup: v.clone(), group: g.clone() })
}

impl CosetGraph {
    pub fn vertex_count(&self) -> usize {
        self.cosets.len()
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.cosets.len()];
        for &(p, q) in &self.edges {
            adj[p].push(q);
            adj[q].push(p);
        }
        adj
    }

    /// BFS distances from the coset `1V`; `None` marks unreachable cosets.
    pub fn distances_from_base(&self) -> Vec<Option<usize>> {
        let base = self.coset_of[&Perm::identity(self.group.degree())];
        let adj = self.adjacency();
        let mut dist = vec![None; self.cosets.len()];
        dist[base] = Some(0);
        let mut queue = VecDeque::from([base]);
        while let Some(p) = queue.pop_front() {
            for &q in &adj[p] {
                if dist[q].is_none() {
                    dist[q] = Some(dist[p].unwrap() + 1);
                    queue.push_back(q);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.distances_from_base().iter().all(Option::is_some)
    }

    pub fn diameter(&self) -> Option<usize> {
        let d = self.distances_from_base();
        d.iter().copied().collect::<Option<Vec<_>>>().map(|v| v.into_iter().max().unwrap_or(0))
    }

    pub fn is_complete(&self) -> bool {
        let n = self.cosets.len();
        self.edges.len() == n * (n - 1) / 2
    }

    /// Connected exactly when `⟨V ∪ A⟩ = G`.
    pub fn connectivity_matches_generation(&self) -> bool {
        let span = generated_subgroup(&self.subgroup.union(&self.generators), self.group.order())
            .map(|h| h.order() == self.group.order())
            .unwrap_or(false);
        span == self.is_connected()
    }

    /// Every element whose coset lies within distance `k` of `1V` lies in
    /// `A^k V`, reading `A^k` as words of length at most `k`. Guaranteed
    /// when `AV = VA`, e.g. for `A = VUV`.
    pub fn ball_within_words(&self, k: usize) -> bool {
        let with_one = self.generators.union(&GroupSubset::identity(self.group.degree()));
        let words = product_set(&power(&with_one, k), &self.subgroup);
        let dist = self.distances_from_base();
        self.cosets
            .iter()
            .enumerate()
            .filter(|(i, _)| dist[*i].is_some_and(|d| d <= k))
            .all(|(_, c)| c.iter().all(|x| words.contains(x)))
    }

    /// The left action of `G` permutes edges.
    pub fn is_left_invariant(&self) -> bool {
        self.group.iter().all(|x| {
            self.edges.iter().all(|&(p, q)| {
                let rep_p = self.cosets[p].iter().next().unwrap();
                let rep_q = self.cosets[q].iter().next().unwrap();
                let (p2, q2) = (self.coset_of[&x.compose(rep_p)], self.coset_of[&x.compose(rep_q)]);
                self.edges.contains(&(p2.min(q2), p2.max(q2)))
            })
        })
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph cosets {\n");
        for (i, c) in self.cosets.iter().enumerate() {
            let rep = c.iter().next().unwrap();
            let _ = writeln!(out, "  c{i} [label=\"{rep}\"];");
        }
        for (p, q) in &self.edges {
            let _ = writeln!(out, "  c{p} -- c{q};");
        }
        out.push_str("}\n");
        out
    }
}
