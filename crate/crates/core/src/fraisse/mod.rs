//! Classes of finite structures: axiom checking, built-in classes, and
//! finite approximations of their limits.

pub mod dyadic;
mod limit;
pub mod metric;
pub mod trees;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::report::Report;
use crate::structures::{
    canonical_form, closure, for_each_tuple, EmbeddingSearch, Morphism, Signature, Structure, TypeCode,
};

pub use dyadic::{builtin_dyadic_algebra, DyadicAlgebra, DYADIC_LEVEL_CAP};
pub use limit::{build_limit_approximation, CertificateEntry, Deficit, LimitApproximation};
pub use metric::{Dist, MetricClass};
pub use trees::{builtin_ended_tree, builtin_truncated_regular_tree, RootedTree};

pub type Membership = Arc<dyn Fn(&Structure) -> bool + Send + Sync>;
/// All members on exactly `n` points (duplicates up to isomorphism allowed).
pub type Generator = Arc<dyn Fn(usize) -> Vec<Structure> + Send + Sync>;
/// Combinatorial size of a pair of tuples: tree distance, rounded-up metric
/// distance, or generated-subalgebra size. Must be isomorphism invariant.
pub type RadiusFn = Arc<dyn Fn(&Structure, &[usize], &[usize]) -> u64 + Send + Sync>;

#[derive(Clone, Debug)]
pub enum ClassKind {
    Relational,
    Metric(MetricClass),
    Tree { valence: usize },
    EndedTree { valence: usize },
    Dyadic { level: usize },
}

#[derive(Clone)]
pub struct ClassSpec {
    pub name: String,
    pub signature: Arc<Signature>,
    /// Largest structure the class's limit builder may create.
    pub size_bound: usize,
    pub kind: ClassKind,
    membership: Membership,
    generator: Option<Generator>,
    radius: Option<RadiusFn>,
}

impl fmt::Debug for ClassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClassSpec")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("size_bound", &self.size_bound)
            .finish()
    }
}

impl ClassSpec {
    pub fn new(name: &str, signature: Arc<Signature>, membership: Membership) -> Self {
        Self {
            name: name.to_string(),
            signature,
            size_bound: 4096,
            kind: ClassKind::Relational,
            membership,
            generator: None,
            radius: None,
        }
    }

    pub fn with_generator(mut self, generator: Generator) -> Self {
        self.generator = Some(generator);
        self
    }

    pub fn with_radius(mut self, radius: RadiusFn) -> Self {
        self.radius = Some(radius);
        self
    }

    pub fn with_size_bound(mut self, bound: usize) -> Self {
        self.size_bound = bound;
        self
    }

    pub fn with_kind(mut self, kind: ClassKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn is_member(&self, s: &Structure) -> bool {
        s.signature() == self.signature.as_ref() && (self.membership)(s)
    }

    pub fn membership(&self) -> &Membership {
        &self.membership
    }

    pub fn radius(&self) -> Option<&RadiusFn> {
        self.radius.as_ref()
    }

    /// Members on `n` points, one per isomorphism type, in canonical order.
    pub fn members(&self, n: usize) -> Result<Vec<Structure>> {
        let generator = self.generator.as_ref().ok_or(Error::NoGenerator)?;
        let mut by_code: BTreeMap<TypeCode, Structure> = BTreeMap::new();
        for s in generator(n) {
            if self.is_member(&s) {
                by_code.entry(canonical_form(&s, &[])).or_insert(s);
            }
        }
        Ok(by_code.into_values().collect())
    }
}

/// All simple graphs on `n` vertices over the signature `E/2`.
pub fn all_graphs(n: usize) -> Vec<Structure> {
    let sig = Arc::new(Signature::new().relation("E", 2));
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|y| (0..y).map(move |x| (x, y))).collect();
    (0..1u64 << pairs.len())
        .map(|mask| {
            let mut g = Structure::new(sig.clone(), n);
            for (i, &(x, y)) in pairs.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    g.add_tuple(0, vec![x, y]);
                    g.add_tuple(0, vec![y, x]);
                }
            }
            g
        })
        .collect()
}

fn is_simple_graph(g: &Structure) -> bool {
    g.relation(0).iter().all(|e| e[0] != e[1] && g.holds(0, &[e[1], e[0]]))
}

/// A class of simple graphs cut out by `predicate`.
pub fn graph_class(name: &str, predicate: impl Fn(&Structure) -> bool + Send + Sync + 'static) -> ClassSpec {
    ClassSpec::new(
        name,
        Arc::new(Signature::new().relation("E", 2)),
        Arc::new(move |g| is_simple_graph(g) && predicate(g)),
    )
    .with_generator(Arc::new(all_graphs))
}

pub fn triangle_free_graphs() -> ClassSpec {
    graph_class("triangle-free graphs", |g| {
        let n = g.size();
        !(0..n).any(|x| {
            (x + 1..n).any(|y| (y + 1..n).any(|z| g.holds(0, &[x, y]) && g.holds(0, &[y, z]) && g.holds(0, &[x, z])))
        })
    })
}

pub fn builtin_urysohn_class(distances: &[Dist], diameter: Dist) -> Result<ClassSpec> {
    let cls = MetricClass::new(distances, diameter)?;
    let member = cls.clone();
    let generate = cls.clone();
    let measure = cls.clone();
    Ok(ClassSpec::new("metric spaces", cls.signature().clone(), Arc::new(move |m| member.is_member(m)))
        .with_generator(Arc::new(move |n| generate.all_members(n)))
        .with_radius(Arc::new(move |m, a, b| {
            let mut r = 0;
            for &x in a {
                for &y in b {
                    let d = measure.distance(m, x, y).unwrap_or_else(|| measure.cap());
                    r = r.max(d.ceil().to_integer() as u64);
                }
            }
            r
        }))
        .with_kind(ClassKind::Metric(cls)))
}

fn tree_radius() -> RadiusFn {
    Arc::new(|m, a, b| {
        let mut r = 0;
        for &x in a {
            for &y in b {
                r = r.max(theta_distance(m, x, y));
            }
        }
        r
    })
}

/// Geodesic length between `x` and `y` by iterating `theta` (function 0).
pub fn theta_distance(m: &Structure, mut x: usize, y: usize) -> u64 {
    let mut d = 0;
    while x != y {
        x = m.apply_function(0, &[x, y]);
        d += 1;
        if d as usize > m.size() {
            break;
        }
    }
    d
}

/// Finite subtrees of the regular tree of the given valence, expanded by
/// the first-step function.
pub fn builtin_tree_class(valence: usize) -> ClassSpec {
    ClassSpec::new(
        "geodesic trees",
        RootedTree::geodesic_signature(),
        Arc::new(move |m| is_geodesic_tree(m, valence, false)),
    )
    .with_radius(tree_radius())
    .with_kind(ClassKind::Tree { valence })
}

/// Finite substructures of the ended tree: convex subtrees with end order
/// and first-step function.
pub fn builtin_ended_tree_class(valence: usize) -> ClassSpec {
    ClassSpec::new("ended trees", RootedTree::ended_signature(), Arc::new(move |m| is_geodesic_tree(m, valence, true)))
        .with_radius(tree_radius())
        .with_kind(ClassKind::EndedTree { valence })
}

pub fn builtin_dyadic_class(level: usize) -> Result<ClassSpec> {
    let alg = builtin_dyadic_algebra(level)?;
    let elems = alg.elements()?;
    let target = elems.clone();
    Ok(ClassSpec::new(
        "dyadic algebras",
        DyadicAlgebra::element_signature(),
        Arc::new(move |m| EmbeddingSearch::new(m, &target).first().is_some()),
    )
    .with_radius(Arc::new(|m, a, b| {
        let seed: Vec<usize> = a.iter().chain(b).copied().collect();
        closure(m, &seed).len() as u64
    }))
    .with_kind(ClassKind::Dyadic { level }))
}

/// Whether `m` (signature `E`, [`lt`,] `theta`) is a finite tree with
/// maximum degree at most `valence`, `theta` the geodesic first step and,
/// when `ended`, `lt` the transitive closure of a successor map in which
/// every vertex has at most one successor, a neighbour, and at most
/// `valence - 1` predecessors.
pub fn is_geodesic_tree(m: &Structure, valence: usize, ended: bool) -> bool {
    let n = m.size();
    if n == 0 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for e in m.relation(0) {
        if e[0] == e[1] || !m.holds(0, &[e[1], e[0]]) {
            return false;
        }
        adj[e[0]].push(e[1]);
    }
    if m.relation(0).len() != 2 * (n - 1) || adj.iter().any(|a| a.len() > valence) {
        return false;
    }
    let mut parent = vec![usize::MAX; n];
    let mut order = vec![0];
    parent[0] = 0;
    let mut i = 0;
    while i < order.len() {
        let v = order[i];
        for &w in &adj[v] {
            if parent[w] == usize::MAX {
                parent[w] = v;
                order.push(w);
            }
        }
        i += 1;
    }
    if order.len() != n {
        return false;
    }
    let dist = |a: usize, b: usize| -> Vec<usize> {
        let mut prev = vec![usize::MAX; n];
        prev[a] = a;
        let mut queue = std::collections::VecDeque::from([a]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if prev[w] == usize::MAX {
                    prev[w] = v;
                    queue.push_back(w);
                }
            }
        }
        let mut path = vec![b];
        let mut x = b;
        while x != a {
            x = prev[x];
            path.push(x);
        }
        path.reverse();
        path
    };
    for t in 0..n {
        for s in 0..n {
            let path = dist(t, s);
            let expected = if t == s { t } else { path[1] };
            if m.apply_function(0, &[t, s]) != expected {
                return false;
            }
        }
    }
    if ended {
        let lt = 1;
        let mut succ = vec![None; n];
        for v in 0..n {
            let ups: Vec<usize> = adj[v].iter().copied().filter(|&w| m.holds(lt, &[v, w])).collect();
            if ups.len() > 1 {
                return false;
            }
            succ[v] = ups.first().copied();
            if adj[v].len() - ups.len() > valence - 1 {
                return false;
            }
        }
        for v in 0..n {
            for w in adj[v].iter() {
                if m.holds(lt, &[v, *w]) == m.holds(lt, &[*w, v]) {
                    return false;
                }
            }
            let mut chain = Vec::new();
            let mut x = v;
            while let Some(y) = succ[x] {
                chain.push(y);
                x = y;
                if chain.len() > n {
                    return false;
                }
            }
            for w in 0..n {
                if m.holds(lt, &[v, w]) != chain.contains(&w) {
                    return false;
                }
            }
        }
    }
    true
}

/// Counterexamples to the class axioms found among structures of size at
/// most `n`.
#[derive(Clone, Debug, Default)]
pub struct ClassAxiomReport {
    pub n: usize,
    pub members_per_size: Vec<usize>,
    pub hp: Vec<String>,
    pub jep: Vec<String>,
    pub ap: Vec<String>,
    pub ap_instances: usize,
}

impl ClassAxiomReport {
    pub fn passed(&self) -> bool {
        self.hp.is_empty() && self.jep.is_empty() && self.ap.is_empty()
    }

    pub fn report(&self, name: &str) -> Report {
        let mut r = Report::new(format!("class axioms: {name}"));
        r.context("size cap", self.n);
        r.note(format!("members per size: {:?}", self.members_per_size));
        r.note(format!("amalgamation instances: {}", self.ap_instances));
        for (tag, list) in [("HP", &self.hp), ("JEP", &self.jep), ("AP", &self.ap)] {
            if list.is_empty() {
                r.note(format!("{tag}: pass"));
            }
            for c in list {
                r.fail(format!("{tag}: {c}"));
            }
        }
        r
    }
}

fn describe(s: &Structure) -> String {
    let mut parts = Vec::new();
    for (r, (name, _)) in s.signature().relations.iter().enumerate() {
        let tuples: Vec<String> = s.relation(r).iter().map(|t| format!("{t:?}")).collect();
        if !tuples.is_empty() {
            parts.push(format!("{name}{{{}}}", tuples.join(",")));
        }
    }
    format!("size {} [{}]", s.size(), parts.join(" "))
}

/// Exhaustive HP/JEP/AP check over all members of size at most `n`.
pub fn check_class_axioms(spec: &ClassSpec, n: usize) -> Result<ClassAxiomReport> {
    let mut by_size = Vec::new();
    for m in 0..=n {
        by_size.push(spec.members(m)?);
    }
    let mut report =
        ClassAxiomReport { n, members_per_size: by_size.iter().map(Vec::len).collect(), ..Default::default() };

    for members in &by_size {
        for s in members {
            for mask in 0u64..1 << s.size() {
                let seed: Vec<usize> = (0..s.size()).filter(|i| mask >> i & 1 == 1).collect();
                let elems = closure(s, &seed);
                let sub = s.induced(&elems);
                if !spec.is_member(&sub) {
                    report.hp.push(format!("{} has non-member substructure on {elems:?}", describe(s)));
                }
            }
        }
    }

    let embeds = |a: &Structure, c: &Structure| EmbeddingSearch::new(a, c).first().is_some();
    for (i, xs) in by_size.iter().enumerate() {
        for (j, ys) in by_size.iter().enumerate().skip(i) {
            if i + j > n || i == 0 {
                continue;
            }
            for a in xs {
                for b in ys {
                    let found = (j..=i + j).any(|k| by_size[k].iter().any(|c| embeds(a, c) && embeds(b, c)));
                    if !found {
                        report.jep.push(format!("{} and {} have no joint extension", describe(a), describe(b)));
                    }
                }
            }
        }
    }

    for (ia, bases) in by_size.iter().enumerate() {
        for base in bases {
            for (i1, w1s) in by_size.iter().enumerate().skip(ia) {
                for (i2, w2s) in by_size.iter().enumerate().skip(i1) {
                    if i1 + i2 - ia > n {
                        continue;
                    }
                    for b1 in w1s {
                        let etas1 = EmbeddingSearch::new(base, b1).run();
                        for b2 in w2s {
                            for eta1 in &etas1 {
                                for eta2 in EmbeddingSearch::new(base, b2).run() {
                                    report.ap_instances += 1;
                                    let ok = (i2..=i1 + i2 - ia)
                                        .any(|k| by_size[k].iter().any(|c| amalgamates(base, b1, b2, eta1, &eta2, c)));
                                    if !ok {
                                        report.ap.push(format!(
                                            "base {} into {} via {:?} and {} via {:?}",
                                            describe(base),
                                            describe(b1),
                                            eta1.map,
                                            describe(b2),
                                            eta2.map
                                        ));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Embeddings `ζ_1: B_1 → C`, `ζ_2: B_2 → C` with `ζ_1 η_1 = ζ_2 η_2`.
pub fn find_cocone_legs(
    base: &Structure,
    b1: &Structure,
    b2: &Structure,
    eta1: &Morphism,
    eta2: &Morphism,
    c: &Structure,
) -> Option<(Morphism, Morphism)> {
    for zeta1 in EmbeddingSearch::new(b1, c).run() {
        let fixed: Vec<(usize, usize)> =
            (0..base.size()).map(|x| (eta2.apply(x), zeta1.apply(eta1.apply(x)))).collect();
        if let Some(zeta2) = EmbeddingSearch::new(b2, c).fix_all(&fixed).first() {
            return Some((zeta1, zeta2));
        }
    }
    None
}

fn amalgamates(
    base: &Structure,
    b1: &Structure,
    b2: &Structure,
    eta1: &Morphism,
    eta2: &Morphism,
    c: &Structure,
) -> bool {
    find_cocone_legs(base, b1, b2, eta1, eta2, c).is_some()
}

/// Enumerates every relational structure over `sig` on `n` points; used
/// as a generator for small relational classes.
pub fn all_relational_structures(sig: &Arc<Signature>, n: usize) -> Vec<Structure> {
    let mut slots: Vec<(usize, Vec<usize>)> = Vec::new();
    for (r, (_, arity)) in sig.relations.iter().enumerate() {
        for_each_tuple(n, *arity, |t| slots.push((r, t.to_vec())));
    }
    assert!(slots.len() <= 24, "too many relation slots for exhaustive enumeration");
    (0..1u64 << slots.len())
        .map(|mask| {
            let mut s = Structure::new(sig.clone(), n);
            for (i, (r, t)) in slots.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    s.add_tuple(*r, t.clone());
                }
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn two_distance_metrics_form_a_class() {
        let ds = [Ratio::from_integer(1), Ratio::from_integer(2)];
        let spec = builtin_urysohn_class(&ds, Ratio::from_integer(2)).unwrap();
        let r = check_class_axioms(&spec, 4).unwrap();
        assert!(r.passed(), "{:?}", r);
        assert_eq!(r.members_per_size[..4], [1, 1, 2, 4]);
    }

    #[test]
    fn triangle_free_graphs_form_a_class() {
        let r = check_class_axioms(&triangle_free_graphs(), 4).unwrap();
        assert!(r.passed(), "{:?}", r);
        assert_eq!(r.members_per_size, vec![1, 1, 2, 3, 7]);
    }

    #[test]
    fn non_hereditary_class_is_caught() {
        let spec = graph_class("edge but no P3", |g| {
            let n = g.size();
            let has_edge = !g.relation(0).is_empty();
            let has_p3 =
                (0..n).any(|m| (0..n).any(|x| (0..n).any(|y| x != y && g.holds(0, &[x, m]) && g.holds(0, &[m, y]))));
            has_edge && !has_p3
        });
        let r = check_class_axioms(&spec, 3).unwrap();
        assert!(!r.hp.is_empty());
    }

    #[test]
    fn missing_generator_is_an_error() {
        let spec = builtin_tree_class(3);
        assert_eq!(check_class_axioms(&spec, 2).unwrap_err(), Error::NoGenerator);
    }

    #[test]
    fn tree_membership() {
        let t = RootedTree::regular(3, 2);
        assert!(is_geodesic_tree(&t.with_geodesics(), 3, false));
        assert!(!is_geodesic_tree(&t.with_geodesics(), 2, false));
        assert!(is_geodesic_tree(&t.ended(), 3, true));
        let mut broken = t.ended();
        broken.remove_tuple(1, &[0, 1]);
        assert!(!is_geodesic_tree(&broken, 3, true));
    }

    #[test]
    fn relational_enumeration_counts() {
        let sig = Arc::new(Signature::new().relation("E", 2));
        assert_eq!(all_relational_structures(&sig, 2).len(), 16);
    }
}
