//! Truncated regular trees, their geodesic expansion, and ended trees.

use std::sync::Arc;

use crate::structures::{Signature, Structure};

/// A rooted tree with vertices numbered in breadth-first order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedTree {
    pub parent: Vec<Option<usize>>,
    pub depth: Vec<usize>,
    pub children: Vec<Vec<usize>>,
    pub valence: usize,
    pub max_depth: usize,
}

impl RootedTree {
    /// Root with `valence` children, every other non-leaf with
    /// `valence - 1` children, leaves at `max_depth`.
    pub fn regular(valence: usize, max_depth: usize) -> Self {
        assert!(valence >= 2, "valence must be at least 2");
        let mut parent = vec![None];
        let mut depth = vec![0];
        let mut children = vec![Vec::new()];
        let mut frontier = vec![0];
        for d in 1..=max_depth {
            let mut next = Vec::new();
            for &v in &frontier {
                let count = if v == 0 { valence } else { valence - 1 };
                for _ in 0..count {
                    let c = parent.len();
                    parent.push(Some(v));
                    depth.push(d);
                    children.push(Vec::new());
                    children[v].push(c);
                    next.push(c);
                }
            }
            frontier = next;
        }
        Self { parent, depth, children, valence, max_depth }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn is_ancestor(&self, a: usize, mut v: usize) -> bool {
        while self.depth[v] > self.depth[a] {
            v = self.parent[v].expect("non-root has a parent");
        }
        v == a
    }

    pub fn distance(&self, mut u: usize, mut v: usize) -> usize {
        let mut d = 0;
        while u != v {
            if self.depth[u] >= self.depth[v] {
                u = self.parent[u].unwrap();
            } else {
                v = self.parent[v].unwrap();
            }
            d += 1;
        }
        d
    }

    /// The vertex set with the path metric, as a space of `cls` (`None`
    /// when some distance is not admissible).
    pub fn path_metric(&self, cls: &super::MetricClass) -> Option<Structure> {
        let n = self.len();
        let d: Vec<Vec<super::Dist>> =
            (0..n).map(|x| (0..n).map(|y| super::Dist::from_integer(self.distance(x, y) as i64)).collect()).collect();
        cls.space(&d)
    }

    /// The vertex after `t` on the geodesic from `t` to `s` (`t` if equal).
    pub fn first_step(&self, t: usize, s: usize) -> usize {
        if t == s {
            return t;
        }
        if self.depth[s] > self.depth[t] {
            let mut v = s;
            while self.depth[v] > self.depth[t] + 1 {
                v = self.parent[v].unwrap();
            }
            if self.parent[v] == Some(t) {
                return v;
            }
        }
        self.parent[t].expect("root reaches every vertex downwards")
    }

    /// Vertices on the geodesic from `u` to `v`, inclusive.
    pub fn geodesic(&self, u: usize, v: usize) -> Vec<usize> {
        let mut path = vec![u];
        let mut x = u;
        while x != v {
            x = self.first_step(x, v);
            path.push(x);
        }
        path
    }

    /// The designated end ray: root, first child, first child, ..
    pub fn on_ray(&self, v: usize) -> bool {
        let mut x = v;
        while let Some(p) = self.parent[x] {
            if self.children[p][0] != x {
                return false;
            }
            x = p;
        }
        true
    }

    /// Next vertex from `v` towards the end (`None` at the tip of the ray).
    pub fn successor(&self, v: usize) -> Option<usize> {
        if self.on_ray(v) {
            self.children[v].first().copied()
        } else {
            self.parent[v]
        }
    }

    /// The path from `v` towards the end, excluding `v`.
    pub fn successors(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut x = v;
        while let Some(y) = self.successor(x) {
            out.push(y);
            x = y;
        }
        out
    }

    fn edge_structure(&self, sig: Arc<Signature>) -> Structure {
        let mut s = Structure::new(sig, self.len());
        for (v, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                s.add_tuple(0, vec![v, p]);
                s.add_tuple(0, vec![p, v]);
            }
        }
        for v in 0..self.len() {
            s.set_label(v, "depth", self.depth[v].to_string());
        }
        s
    }

    pub fn edge_signature() -> Arc<Signature> {
        Arc::new(Signature::new().relation("E", 2))
    }

    pub fn geodesic_signature() -> Arc<Signature> {
        Arc::new(Signature::new().relation("E", 2).function("theta", 2))
    }

    pub fn ended_signature() -> Arc<Signature> {
        Arc::new(Signature::new().relation("E", 2).relation("lt", 2).function("theta", 2))
    }

    pub fn structure(&self) -> Structure {
        self.edge_structure(Self::edge_signature())
    }

    fn fill_theta(&self, s: &mut Structure, f: usize) {
        for t in 0..self.len() {
            for u in 0..self.len() {
                s.set_function(f, &[t, u], self.first_step(t, u));
            }
        }
    }

    /// The tree expanded by the first-step function.
    pub fn with_geodesics(&self) -> Structure {
        let mut s = self.edge_structure(Self::geodesic_signature());
        self.fill_theta(&mut s, 0);
        s
    }

    /// The tree expanded by the end order and the first-step function.
    pub fn ended(&self) -> Structure {
        let mut s = self.edge_structure(Self::ended_signature());
        for v in 0..self.len() {
            for w in self.successors(v) {
                s.add_tuple(1, vec![v, w]);
            }
        }
        self.fill_theta(&mut s, 0);
        s
    }
}

/// The truncated regular tree as a bare edge structure with depth labels.
pub fn builtin_truncated_regular_tree(valence: usize, depth: usize) -> Structure {
    RootedTree::regular(valence, depth).structure()
}

/// The truncated tree with end order `lt` (towards the first-child ray)
/// and first-step function `theta`.
pub fn builtin_ended_tree(valence: usize, depth: usize) -> Structure {
    RootedTree::regular(valence, depth).ended()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::generated_substructure;

    #[test]
    fn vertex_counts() {
        assert_eq!(RootedTree::regular(3, 3).len(), 22);
        assert_eq!(RootedTree::regular(2, 1).len(), 3);
        assert_eq!(RootedTree::regular(2, 2).len(), 5);
        assert_eq!(RootedTree::regular(4, 5).len(), 1 + 4 + 12 + 36 + 108 + 324);
    }

    #[test]
    fn regular_interior_acyclic_connected() {
        let t = RootedTree::regular(3, 4);
        let s = t.structure();
        assert_eq!(s.relation(0).len(), 2 * (t.len() - 1));
        for v in 0..t.len() {
            let degree = s.relation(0).iter().filter(|e| e[0] == v).count();
            if t.depth[v] < t.max_depth {
                assert_eq!(degree, 3);
            } else {
                assert_eq!(degree, 1);
            }
        }
    }

    #[test]
    fn distances_and_steps() {
        let t = RootedTree::regular(3, 3);
        let leaf = t.len() - 1;
        assert_eq!(t.distance(0, leaf), 3);
        assert_eq!(t.geodesic(leaf, 0).len(), 4);
        let c = t.children[0][1];
        assert_eq!(t.first_step(0, leaf), t.geodesic(0, leaf)[1]);
        assert_eq!(t.first_step(c, 0), 0);
    }

    #[test]
    fn ended_tree_order_and_theta() {
        let t = RootedTree::regular(3, 3);
        let s = t.ended();
        let (e, lt) = (0, 1);
        let first = t.children[0][0];
        let second = t.children[0][1];
        assert!(s.holds(lt, &[0, first]));
        assert!(s.holds(lt, &[second, 0]));
        assert!(s.holds(lt, &[second, first]));
        for v in 0..t.len() {
            assert_eq!(s.apply_function(0, &[v, v]), v);
        }
        for edge in s.relation(e) {
            assert_eq!(s.apply_function(0, &[edge[0], edge[1]]), edge[1]);
        }
    }

    #[test]
    fn theta_closure_adds_midpoint() {
        let t = RootedTree::regular(3, 3);
        let s = t.ended();
        let a = t.children[0][1];
        let b = t.children[0][2];
        let (sub, inc) = generated_substructure(&s, &[a, b]);
        assert_eq!(sub.size(), 3);
        assert!(inc.map.contains(&0));
    }
}
