//! Orbital-type graphs `X_{ā,S}`, their path metrics, and weighted
//! metrics along an increasing chain of edge families.

mod formula;
mod qi;

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::fraisse::LimitApproximation;
use crate::orbits::{orbital_type, pointed_type};
use crate::structures::TypeCode;

pub use formula::{emit_distance_formula, parse_formula, Formula};
pub use qi::{qi_fit, qi_fit_with_step, verify_ended_tree_qi, verify_tree_qi, verify_urysohn_qi, QiSample};

/// A natural number or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtNat {
    Finite(u64),
    Infinite,
}

impl ExtNat {
    pub fn finite(self) -> Option<u64> {
        match self {
            ExtNat::Finite(v) => Some(v),
            ExtNat::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        self != ExtNat::Infinite
    }
}

impl std::ops::Add for ExtNat {
    type Output = ExtNat;
    fn add(self, rhs: ExtNat) -> ExtNat {
        match (self, rhs) {
            (ExtNat::Finite(a), ExtNat::Finite(b)) => ExtNat::Finite(a + b),
            _ => ExtNat::Infinite,
        }
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Finite(v) => write!(f, "{v}"),
            ExtNat::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeFamily {
    pub codes: BTreeSet<TypeCode>,
}

impl EdgeFamily {
    pub fn new(codes: impl IntoIterator<Item = TypeCode>) -> Self {
        Self { codes: codes.into_iter().collect() }
    }

    pub fn contains(&self, code: &TypeCode) -> bool {
        self.codes.contains(code)
    }

    pub fn is_subset(&self, other: &EdgeFamily) -> bool {
        self.codes.is_subset(&other.codes)
    }
}

/// An increasing chain `R_1 ⊆ R_2 ⊆ … ⊆ R_N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedFamily {
    chain: Vec<EdgeFamily>,
}

impl WeightedFamily {
    pub fn new(chain: Vec<EdgeFamily>) -> Result<Self> {
        for (i, w) in chain.windows(2).enumerate() {
            if !w[0].is_subset(&w[1]) {
                return Err(Error::Invalid(format!("R_{} is not contained in R_{}", i + 1, i + 2)));
            }
        }
        Ok(Self { chain })
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn level(&self, n: usize) -> &EdgeFamily {
        &self.chain[n - 1]
    }

    /// Least `n` with `code ∈ R_n`.
    pub fn weight_of(&self, code: &TypeCode) -> Option<u64> {
        self.chain.iter().position(|r| r.contains(code)).map(|i| i as u64 + 1)
    }
}

/// An undirected graph on explicit tuples with weighted edges (weight 1
/// for plain orbit graphs).
#[derive(Clone, Debug)]
pub struct OrbitGraph {
    pub base: Vec<usize>,
    pub vertices: Vec<Vec<usize>>,
    pub adjacency: Vec<Vec<(usize, u64)>>,
    pub margin: u64,
    /// Tuples of the base's type left out for lying too close to the boundary.
    pub excluded: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl OrbitGraph {
    /// A graph on `n` abstract vertices `(0) … (n-1)`.
    pub fn from_edges(n: usize, edges: &[(usize, usize, u64)]) -> Self {
        let vertices: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        let mut g = Self::empty(Vec::new(), vertices, 0);
        for &(u, v, w) in edges {
            g.add_edge(u, v, w);
        }
        g
    }

    fn empty(base: Vec<usize>, vertices: Vec<Vec<usize>>, margin: u64) -> Self {
        let index = vertices.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let adjacency = vec![Vec::new(); vertices.len()];
        Self { base, vertices, adjacency, margin, excluded: Vec::new(), index }
    }

    fn add_edge(&mut self, u: usize, v: usize, w: u64) {
        if u == v {
            return;
        }
        for (a, b) in [(u, v), (v, u)] {
            match self.adjacency[a].iter_mut().find(|(x, _)| *x == b) {
                Some(e) => e.1 = e.1.min(w),
                None => self.adjacency[a].push((b, w)),
            }
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn index_of(&self, t: &[usize]) -> Result<usize> {
        self.index.get(t).copied().ok_or_else(|| Error::NotAVertex(t.to_vec()))
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].iter().any(|(x, _)| *x == v)
    }

    /// Hop distances from `src` (edge weights ignored).
    pub fn hop_distances(&self, src: usize) -> Vec<ExtNat> {
        let mut dist = vec![ExtNat::Infinite; self.vertices.len()];
        dist[src] = ExtNat::Finite(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].finite().unwrap();
            for &(v, _) in &self.adjacency[u] {
                if dist[v] == ExtNat::Infinite {
                    dist[v] = ExtNat::Finite(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Weighted shortest-path distances from `src`.
    pub fn weighted_distances(&self, src: usize) -> Vec<ExtNat> {
        let mut dist = vec![ExtNat::Infinite; self.vertices.len()];
        dist[src] = ExtNat::Finite(0);
        let mut heap = BinaryHeap::from([Reverse((0u64, src))]);
        while let Some(Reverse((d, u))) = heap.pop() {
            if ExtNat::Finite(d) > dist[u] {
                continue;
            }
            for &(v, w) in &self.adjacency[u] {
                let nd = d + w;
                if ExtNat::Finite(nd) < dist[v] {
                    dist[v] = ExtNat::Finite(nd);
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        dist
    }

    /// Connected components as vertex-index lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.vertices.len()];
        let mut out = Vec::new();
        for s in 0..self.vertices.len() {
            if seen[s] {
                continue;
            }
            let comp: Vec<usize> =
                self.hop_distances(s).iter().enumerate().filter(|(_, d)| d.is_finite()).map(|(v, _)| v).collect();
            for &v in &comp {
                seen[v] = true;
            }
            out.push(comp);
        }
        out
    }

    pub fn to_dot(&self, codes: Option<&[TypeCode]>) -> String {
        let mut out = String::from("graph X {\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let t: Vec<String> = v.iter().map(usize::to_string).collect();
            let label = match codes {
                Some(c) => format!("({}) {}", t.join(","), c[i].short()),
                None => format!("({})", t.join(",")),
            };
            let _ = writeln!(out, "  v{i} [label=\"{label}\"];");
        }
        for (u, adj) in self.adjacency.iter().enumerate() {
            for &(v, w) in adj {
                if u < v {
                    if w == 1 {
                        let _ = writeln!(out, "  v{u} -- v{v};");
                    } else {
                        let _ = writeln!(out, "  v{u} -- v{v} [label=\"{w}\"];");
                    }
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Vertices: interior tuples (at `margin`) sharing the type of `a`.
fn orbit_vertices(m: &LimitApproximation, a: &[usize], margin: u64) -> Result<(Vec<Vec<usize>>, Vec<Vec<usize>>)> {
    if !m.is_interior(a, margin) {
        return Err(Error::NotInterior(format!("{a:?} at margin {margin}")));
    }
    let code = orbital_type(m, a)?.code;
    let mut vertices = Vec::new();
    let mut excluded = Vec::new();
    crate::structures::for_each_tuple(m.structure.size(), a.len(), |t| {
        if m.is_interior(t, margin) {
            if pointed_type(&m.structure, t).code == code {
                vertices.push(t.to_vec());
            }
        } else if pointed_type(&m.structure, t).code == code {
            excluded.push(t.to_vec());
        }
    });
    Ok((vertices, excluded))
}

fn pair_code(m: &LimitApproximation, b: &[usize], c: &[usize]) -> TypeCode {
    let mut t = b.to_vec();
    t.extend_from_slice(c);
    pointed_type(&m.structure, &t).code
}

/// `X_{ā,S}` on the interior at `margin`.
pub fn build_orbit_graph(m: &LimitApproximation, a: &[usize], s: &EdgeFamily, margin: u64) -> Result<OrbitGraph> {
    build_orbit_graph_filtered(m, a, s, margin, &|_, _| true)
}

/// As [`build_orbit_graph`], testing only pairs accepted by `prefilter`.
/// The filter must accept every pair whose type lies in `s`.
pub fn build_orbit_graph_filtered(
    m: &LimitApproximation,
    a: &[usize],
    s: &EdgeFamily,
    margin: u64,
    prefilter: &dyn Fn(&[usize], &[usize]) -> bool,
) -> Result<OrbitGraph> {
    let (vertices, excluded) = orbit_vertices(m, a, margin)?;
    let mut g = OrbitGraph::empty(a.to_vec(), vertices, margin);
    g.excluded = excluded;
    let n = g.vertices.len();
    for u in 0..n {
        for v in u + 1..n {
            let (b, c) = (&g.vertices[u], &g.vertices[v]);
            if !(prefilter(b, c) || prefilter(c, b)) {
                continue;
            }
            if s.contains(&pair_code(m, b, c)) || s.contains(&pair_code(m, c, b)) {
                g.add_edge(u, v, 1);
            }
        }
    }
    Ok(g)
}

/// Graph on the interior orbit of `a` whose edge `{b̄, c̄}` has weight
/// `min{n : O(b̄,c̄) ∈ R_n or O(c̄,b̄) ∈ R_n}`.
pub fn build_weighted_graph(
    m: &LimitApproximation,
    a: &[usize],
    w: &WeightedFamily,
    margin: u64,
) -> Result<OrbitGraph> {
    let (vertices, excluded) = orbit_vertices(m, a, margin)?;
    let mut g = OrbitGraph::empty(a.to_vec(), vertices, margin);
    g.excluded = excluded;
    let n = g.vertices.len();
    for u in 0..n {
        for v in u + 1..n {
            let (b, c) = (&g.vertices[u], &g.vertices[v]);
            let fw = w.weight_of(&pair_code(m, b, c));
            let bw = w.weight_of(&pair_code(m, c, b));
            if let Some(weight) = fw.into_iter().chain(bw).min() {
                g.add_edge(u, v, weight);
            }
        }
    }
    Ok(g)
}

/// Path distance in `g`; `∞` across components.
pub fn rho(g: &OrbitGraph, b: &[usize], c: &[usize]) -> Result<ExtNat> {
    let (u, v) = (g.index_of(b)?, g.index_of(c)?);
    Ok(g.hop_distances(u)[v])
}

/// Weighted distance in a graph from [`build_weighted_graph`].
pub fn rho_weighted(g: &OrbitGraph, b: &[usize], c: &[usize]) -> Result<ExtNat> {
    let (u, v) = (g.index_of(b)?, g.index_of(c)?);
    Ok(g.weighted_distances(u)[v])
}

/// The graph of level `n` of a weighted graph: edges of weight at most `n`.
pub fn level_graph(g: &OrbitGraph, n: u64) -> OrbitGraph {
    let mut h = OrbitGraph::empty(g.base.clone(), g.vertices.clone(), g.margin);
    for (u, adj) in g.adjacency.iter().enumerate() {
        for &(v, w) in adj {
            if w <= n {
                h.add_edge(u, v, 1);
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraisse::{build_limit_approximation, builtin_ended_tree_class, builtin_tree_class, RootedTree};
    use proptest::prelude::*;

    fn tree_setup(depth: usize) -> (LimitApproximation, EdgeFamily) {
        let m = build_limit_approximation(&builtin_tree_class(3), 2, depth).unwrap();
        let r = EdgeFamily::new([orbital_type(&m, &[0, 1]).unwrap().code]);
        (m, r)
    }

    #[test]
    fn tree_graph_is_the_tree() {
        let (m, r) = tree_setup(4);
        let g = build_orbit_graph(&m, &[0], &r, 0).unwrap();
        let t = RootedTree::regular(3, 4);
        let interior: Vec<usize> = (0..t.len()).filter(|&v| t.depth[v] < 4).collect();
        assert_eq!(g.vertex_count(), interior.len());
        assert_eq!(g.edge_count(), interior.len() - 1);
        for &u in &interior {
            for &v in &interior {
                assert_eq!(rho(&g, &[u], &[v]).unwrap(), ExtNat::Finite(t.distance(u, v) as u64));
            }
        }
        assert_eq!(g.excluded.len(), t.len() - interior.len());
        assert!(matches!(rho(&g, &[t.len() - 1], &[0]), Err(Error::NotAVertex(_))));
    }

    #[test]
    fn empty_family_is_edgeless() {
        let (m, _) = tree_setup(3);
        let g = build_orbit_graph(&m, &[0], &EdgeFamily::default(), 0).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(rho(&g, &[0], &[0]).unwrap(), ExtNat::Finite(0));
        assert_eq!(rho(&g, &[0], &[1]).unwrap(), ExtNat::Infinite);
    }

    #[test]
    fn ended_tree_with_both_orientations() {
        let m = build_limit_approximation(&builtin_ended_tree_class(3), 2, 4).unwrap();
        let up = orbital_type(&m, &[0, 1]).unwrap().code;
        let down = orbital_type(&m, &[1, 0]).unwrap().code;
        assert_ne!(up, down);
        let t = RootedTree::regular(3, 4);
        let g = build_orbit_graph(&m, &[0], &EdgeFamily::new([up.clone(), down]), 0).unwrap();
        let leaf_free = (0..t.len()).filter(|&v| t.depth[v] < 4).count();
        assert_eq!(g.edge_count(), leaf_free - 1);
        // One orientation already gives the tree, since edges symmetrize.
        let one = build_orbit_graph(&m, &[0], &EdgeFamily::new([up]), 0).unwrap();
        assert_eq!(one.edge_count(), g.edge_count());
    }

    #[test]
    fn margin_excludes_near_boundary_vertices() {
        let (m, r) = tree_setup(4);
        let g = build_orbit_graph(&m, &[0], &r, 1).unwrap();
        assert_eq!(g.vertex_count(), 1 + 3 + 6);
        assert_eq!(g.excluded.len(), 12 + 24);
        assert!(build_orbit_graph(&m, &[30], &r, 2).is_err());
    }

    #[test]
    fn weighted_chain_example() {
        // Path 0 - 1 - 2 - 3 with middle edge only in R_2.
        let g = OrbitGraph::from_edges(4, &[(0, 1, 1), (1, 2, 2), (2, 3, 1)]);
        assert_eq!(rho_weighted(&g, &[0], &[3]).unwrap(), ExtNat::Finite(4));
        assert_eq!(rho_weighted(&g, &[2], &[2]).unwrap(), ExtNat::Finite(0));
        assert_eq!(rho(&level_graph(&g, 1), &[0], &[3]).unwrap(), ExtNat::Infinite);
    }

    #[test]
    fn chain_inclusions_are_checked() {
        let (m, _) = tree_setup(3);
        let a = orbital_type(&m, &[0, 1]).unwrap().code;
        let b = orbital_type(&m, &[1, 2]).unwrap().code;
        let bad = WeightedFamily::new(vec![EdgeFamily::new([a.clone()]), EdgeFamily::new([b.clone()])]);
        assert!(bad.is_err());
        let good = WeightedFamily::new(vec![EdgeFamily::new([a.clone()]), EdgeFamily::new([a, b])]).unwrap();
        let g = build_weighted_graph(&m, &[0], &good, 0).unwrap();
        // Siblings are at distance 2 via their parent, or 2 via one R_2 edge.
        assert_eq!(rho_weighted(&g, &[1], &[2]).unwrap(), ExtNat::Finite(2));
        assert_eq!(rho_weighted(&g, &[4], &[2]).unwrap(), ExtNat::Finite(3));
    }

    /// Minimum over all decompositions `b = d_0, …, d_k = c` and levels
    /// `n_i` of `Σ n_i · ρ_{R_{n_i}}(d_{i-1}, d_i)`.
    fn decomposition_minimum(g: &OrbitGraph, levels: u64, b: usize, c: usize) -> ExtNat {
        let n = g.vertex_count();
        let hop: Vec<Vec<Vec<ExtNat>>> =
            (1..=levels).map(|l| (0..n).map(|s| level_graph(g, l).hop_distances(s)).collect()).collect();
        let step = |x: usize, y: usize| -> ExtNat {
            (0..levels as usize)
                .filter_map(|l| hop[l][x][y].finite().map(|d| d * (l as u64 + 1)))
                .min()
                .map_or(ExtNat::Infinite, ExtNat::Finite)
        };
        let mut best = ExtNat::Infinite;
        fn walk(
            at: usize,
            c: usize,
            used: &mut Vec<bool>,
            acc: ExtNat,
            step: &dyn Fn(usize, usize) -> ExtNat,
            best: &mut ExtNat,
        ) {
            if at == c {
                *best = (*best).min(acc);
                return;
            }
            for next in 0..used.len() {
                if !used[next] {
                    let s = step(at, next);
                    if s.is_finite() {
                        used[next] = true;
                        walk(next, c, used, acc + s, step, best);
                        used[next] = false;
                    }
                }
            }
        }
        let mut used = vec![false; n];
        used[b] = true;
        walk(b, c, &mut used, ExtNat::Finite(0), &step, &mut best);
        if b == c {
            return ExtNat::Finite(0);
        }
        best
    }

    fn arb_weighted_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize, u64)>)> {
        (2usize..=6)
            .prop_flat_map(|n| {
                let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
                let k = pairs.len();
                (Just(n), Just(pairs), proptest::collection::vec(0u64..=3, k))
            })
            .prop_map(|(n, pairs, ws)| {
                let edges = pairs.into_iter().zip(ws).filter(|(_, w)| *w > 0).map(|((u, v), w)| (u, v, w)).collect();
                (n, edges)
            })
    }

    proptest! {
        #[test]
        fn weight_collapse_matches_decompositions((n, edges) in arb_weighted_graph()) {
            let g = OrbitGraph::from_edges(n, &edges);
            for b in 0..n {
                let fast = g.weighted_distances(b);
                for c in 0..n {
                    prop_assert_eq!(fast[c], decomposition_minimum(&g, 3, b, c));
                    // ρ_(R_n) ≤ m implies ρ_{R_m} ≤ m.
                    if let Some(m) = fast[c].finite() {
                        if (1..=3).contains(&m) {
                            let hop = level_graph(&g, m).hop_distances(b)[c];
                            prop_assert!(hop <= ExtNat::Finite(m));
                        }
                    }
                    // Weighted distance dominates the top-level hop distance.
                    prop_assert!(fast[c] >= level_graph(&g, 3).hop_distances(b)[c]);
                }
            }
        }

        #[test]
        fn rho_is_a_metric_on_components(
            n in 1usize..9,
            edges in proptest::collection::vec((0usize..9, 0usize..9), 0..20),
        ) {
            let edges: Vec<(usize, usize, u64)> =
                edges.into_iter().filter(|(u, v)| *u < n && *v < n).map(|(u, v)| (u, v, 1)).collect();
            let g = OrbitGraph::from_edges(n, &edges);
            let d: Vec<Vec<ExtNat>> = (0..n).map(|s| g.hop_distances(s)).collect();
            for x in 0..n {
                prop_assert_eq!(d[x][x], ExtNat::Finite(0));
                for y in 0..n {
                    prop_assert_eq!(d[x][y], d[y][x]);
                    if x != y {
                        prop_assert!(d[x][y] != ExtNat::Finite(0));
                    }
                    for z in 0..n {
                        prop_assert!(d[x][z] <= d[x][y] + d[y][z]);
                    }
                }
            }
        }
    }

    #[test]
    fn orbit_graph_is_automorphism_equivariant() {
        let (m, r) = tree_setup(4);
        let g = build_orbit_graph(&m, &[0], &r, 0).unwrap();
        let t = RootedTree::regular(3, 4);
        // Rotate the root's three subtrees; this preserves depth, hence the interior.
        let mut perm = vec![0; t.len()];
        fn map_subtree(t: &RootedTree, from: usize, to: usize, perm: &mut Vec<usize>) {
            perm[from] = to;
            for (a, b) in t.children[from].iter().zip(&t.children[to]) {
                map_subtree(t, *a, *b, perm);
            }
        }
        for i in 0..3 {
            map_subtree(&t, t.children[0][i], t.children[0][(i + 1) % 3], &mut perm);
        }
        for u in 0..g.vertex_count() {
            for &(v, _) in &g.adjacency[u] {
                let (gu, gv) = (perm[g.vertices[u][0]], perm[g.vertices[v][0]]);
                let (iu, iv) = (g.index_of(&[gu]).unwrap(), g.index_of(&[gv]).unwrap());
                assert!(g.has_edge(iu, iv));
            }
        }
    }

    #[test]
    fn dot_export_lists_edges() {
        let g = OrbitGraph::from_edges(3, &[(0, 1, 1), (1, 2, 2)]);
        let dot = g.to_dot(None);
        assert!(dot.contains("v0 -- v1;"));
        assert!(dot.contains("v1 -- v2 [label=\"2\"];"));
    }
}
