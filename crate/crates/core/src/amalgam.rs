//! Functorial amalgamation operators and their certification sweeps.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::fraisse::metric::is_metric;
use crate::fraisse::{is_geodesic_tree, Dist, MetricClass, RootedTree};
use crate::report::Report;
use crate::structures::{canonical_form, is_embedding, text, EmbeddingSearch, Morphism, Structure};

#[derive(Clone, Debug)]
pub struct AmalgamationProblem {
    pub base: Structure,
    pub wing1: Structure,
    pub eta1: Morphism,
    pub wing2: Structure,
    pub eta2: Morphism,
}

impl AmalgamationProblem {
    pub fn new(base: Structure, wing1: Structure, eta1: Morphism, wing2: Structure, eta2: Morphism) -> Result<Self> {
        for (w, eta) in [(&wing1, &eta1), (&wing2, &eta2)] {
            if eta.map.len() != base.size() || !is_embedding(&base, w, eta) {
                return Err(Error::Amalgamation("base map is not an embedding".into()));
            }
        }
        Ok(Self { base, wing1, eta1, wing2, eta2 })
    }

    pub fn swapped(&self) -> Self {
        Self {
            base: self.base.clone(),
            wing1: self.wing2.clone(),
            eta1: self.eta2.clone(),
            wing2: self.wing1.clone(),
            eta2: self.eta1.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Cocone {
    pub apex: Structure,
    pub zeta1: Morphism,
    pub zeta2: Morphism,
}

fn morphism_line(name: &str, f: &Morphism) -> String {
    let images: Vec<String> = f.map.iter().map(usize::to_string).collect();
    format!("{name} {}\n", images.join(" "))
}

/// Problem and cocone as structure documents separated by `---`, then a
/// `diagram` block listing the images of the four maps.
pub fn diagram_text(p: &AmalgamationProblem, c: &Cocone) -> String {
    let mut out = String::new();
    for (name, s) in [("base", &p.base), ("wing1", &p.wing1), ("wing2", &p.wing2), ("apex", &c.apex)] {
        let _ = writeln!(out, "# {name}");
        out.push_str(&text::write_structure(s));
        out.push_str("---\n");
    }
    out.push_str("diagram\n");
    out.push_str(&morphism_line("eta1", &p.eta1));
    out.push_str(&morphism_line("eta2", &p.eta2));
    out.push_str(&morphism_line("zeta1", &c.zeta1));
    out.push_str(&morphism_line("zeta2", &c.zeta2));
    out.push_str("end\n");
    out
}

pub trait AmalgamOperator: Send + Sync {
    fn name(&self) -> String;
    fn base(&self) -> &Structure;
    fn is_member(&self, m: &Structure) -> bool;
    fn amalgamate(&self, p: &AmalgamationProblem) -> Result<Cocone>;
    /// Wings `η: base ↪ B` with `|B| ≤ n`, one per isomorphism type over the
    /// base.
    fn wings(&self, n: usize) -> Vec<(Structure, Morphism)>;
}

/// Runs the operator and checks the cocone: legs are embeddings, they
/// commute over the base, and the apex is in the class.
pub fn evaluate(op: &dyn AmalgamOperator, p: &AmalgamationProblem) -> Result<Cocone> {
    let c = op.amalgamate(p)?;
    if !is_embedding(&p.wing1, &c.apex, &c.zeta1) || !is_embedding(&p.wing2, &c.apex, &c.zeta2) {
        return Err(Error::Amalgamation(format!("{}: a leg is not an embedding", op.name())));
    }
    if c.zeta1.compose(&p.eta1) != c.zeta2.compose(&p.eta2) {
        return Err(Error::Amalgamation(format!("{}: legs disagree on the base", op.name())));
    }
    if !op.is_member(&c.apex) {
        return Err(Error::Amalgamation(format!("{}: apex leaves the class", op.name())));
    }
    Ok(c)
}

/// Apex universe: wing 1 in order, then wing 2 minus the image of the base.
/// `glue` lists extra pairs `(wing-2 element, wing-1 element)` to identify.
fn layout(p: &AmalgamationProblem, glue: &[(usize, usize)]) -> (usize, Morphism, Morphism) {
    let n1 = p.wing1.size();
    let mut zeta2 = vec![usize::MAX; p.wing2.size()];
    for (a, &y) in p.eta2.map.iter().enumerate() {
        zeta2[y] = p.eta1.map[a];
    }
    for &(y, x) in glue {
        zeta2[y] = x;
    }
    let mut next = n1;
    for z in zeta2.iter_mut().filter(|z| **z == usize::MAX) {
        *z = next;
        next += 1;
    }
    (next, Morphism::identity(n1), Morphism::new(zeta2))
}

fn metric_of(cls: &MetricClass, m: &Structure) -> Result<Vec<Vec<Dist>>> {
    cls.matrix(m).ok_or_else(|| Error::Amalgamation("wing is not a metric space in the class".into()))
}

fn metric_wings(cls: &MetricClass, n: usize, pointed: bool) -> Vec<(Structure, Morphism)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let lo = usize::from(pointed);
    for size in lo..=n {
        for d in cls.all_matrices(size) {
            let s = cls.space(&d).expect("enumerated matrices are admissible");
            let tuple: Vec<usize> = if pointed { vec![0] } else { Vec::new() };
            if seen.insert(canonical_form(&s, &tuple)) {
                out.push((s, Morphism::new(tuple)));
            }
        }
    }
    out
}

/// Metric amalgam over a single point `p`: `d(a, b) = d(a, p) + d(p, b)`.
pub struct ThetaMetricPoint {
    class: MetricClass,
    wing_class: MetricClass,
    base: Structure,
}

/// `class` holds the cocones; sweeps draw wings from `wing_class`.
pub fn theta_metric_point(class: MetricClass, wing_class: MetricClass) -> ThetaMetricPoint {
    let base = class.space(&[vec![Dist::from_integer(0)]]).unwrap();
    ThetaMetricPoint { class, wing_class, base }
}

impl AmalgamOperator for ThetaMetricPoint {
    fn name(&self) -> String {
        "metric amalgam over a point".into()
    }

    fn base(&self) -> &Structure {
        &self.base
    }

    fn is_member(&self, m: &Structure) -> bool {
        self.class.is_member(m)
    }

    fn amalgamate(&self, p: &AmalgamationProblem) -> Result<Cocone> {
        if p.base.size() != 1 {
            return Err(Error::Amalgamation("base must be a single point".into()));
        }
        let d1 = metric_of(&self.class, &p.wing1)?;
        let d2 = metric_of(&self.class, &p.wing2)?;
        let (p1, p2) = (p.eta1.map[0], p.eta2.map[0]);
        let (n, z1, z2) = layout(p, &[]);
        let mut d = vec![vec![Dist::from_integer(0); n]; n];
        for a in 0..d1.len() {
            for b in 0..d1.len() {
                d[a][b] = d1[a][b];
            }
        }
        for a in 0..d2.len() {
            for b in 0..d2.len() {
                d[z2.apply(a)][z2.apply(b)] = d2[a][b];
            }
        }
        for a in (0..d1.len()).filter(|&a| a != p1) {
            for b in (0..d2.len()).filter(|&b| b != p2) {
                let v = d1[a][p1] + d2[p2][b];
                if !self.class.contains(&v) {
                    return Err(Error::Amalgamation(format!(
                        "cross distance {v} between wing-1 point {a} and wing-2 point {b} is not admissible"
                    )));
                }
                let (x, y) = (z1.apply(a), z2.apply(b));
                d[x][y] = v;
                d[y][x] = v;
            }
        }
        if !is_metric(&d) {
            return Err(Error::Amalgamation("amalgam violates the triangle inequality".into()));
        }
        Ok(Cocone { apex: self.class.space(&d).unwrap(), zeta1: z1, zeta2: z2 })
    }

    fn wings(&self, n: usize) -> Vec<(Structure, Morphism)> {
        metric_wings(&self.wing_class, n, true)
            .into_iter()
            .map(|(s, eta)| (self.class.space(&self.wing_class.matrix(&s).unwrap()).unwrap(), eta))
            .collect()
    }
}

/// Amalgam over the empty space with every cross distance equal to `r`.
pub struct ThetaMetricBounded {
    class: MetricClass,
    r: Dist,
    base: Structure,
}

pub fn theta_metric_bounded(class: MetricClass, r: Dist) -> Result<ThetaMetricBounded> {
    if !class.contains(&r) {
        return Err(Error::Amalgamation(format!("{r} is not an admissible distance")));
    }
    let base = class.space(&[]).unwrap();
    Ok(ThetaMetricBounded { class, r, base })
}

impl AmalgamOperator for ThetaMetricBounded {
    fn name(&self) -> String {
        format!("metric amalgam at distance {}", self.r)
    }

    fn base(&self) -> &Structure {
        &self.base
    }

    fn is_member(&self, m: &Structure) -> bool {
        self.class.is_member(m)
    }

    fn amalgamate(&self, p: &AmalgamationProblem) -> Result<Cocone> {
        if p.base.size() != 0 {
            return Err(Error::Amalgamation("base must be empty".into()));
        }
        let d1 = metric_of(&self.class, &p.wing1)?;
        let d2 = metric_of(&self.class, &p.wing2)?;
        let (n, z1, z2) = layout(p, &[]);
        let mut d = vec![vec![self.r; n]; n];
        for (x, row) in d.iter_mut().enumerate() {
            row[x] = Dist::from_integer(0);
        }
        for a in 0..d1.len() {
            for b in 0..d1.len() {
                d[a][b] = d1[a][b];
            }
        }
        for a in 0..d2.len() {
            for b in 0..d2.len() {
                d[z2.apply(a)][z2.apply(b)] = d2[a][b];
            }
        }
        if !is_metric(&d) {
            return Err(Error::Amalgamation(format!("cross distance {} violates the triangle inequality", self.r)));
        }
        Ok(Cocone { apex: self.class.space(&d).unwrap(), zeta1: z1, zeta2: z2 })
    }

    fn wings(&self, n: usize) -> Vec<(Structure, Morphism)> {
        metric_wings(&self.class, n, false)
    }
}

/// Amalgam of ended-tree substructures over a vertex, merging the
/// successor chains of the two base vertices as far as both reach.
pub struct ThetaEndedTree {
    base: Structure,
    deep: Mutex<BTreeMap<(usize, usize), Arc<(RootedTree, Structure)>>>,
}

pub fn theta_ended_tree() -> ThetaEndedTree {
    let mut base = Structure::new(RootedTree::ended_signature(), 1);
    base.set_function(0, &[0, 0], 0);
    ThetaEndedTree { base, deep: Mutex::new(BTreeMap::new()) }
}

fn successor_of(m: &Structure, x: usize) -> Option<usize> {
    (0..m.size()).find(|&y| m.holds(0, &[x, y]) && m.holds(1, &[x, y]))
}

fn chain_from(m: &Structure, t: usize) -> Vec<usize> {
    let mut out = vec![t];
    let mut x = t;
    while let Some(y) = successor_of(m, x) {
        out.push(y);
        x = y;
    }
    out
}

/// Builds `E`, `lt` and `theta` on a finite tree from its edges and a
/// successor map.
fn ended_structure(n: usize, edges: &BTreeSet<(usize, usize)>, succ: &[Option<usize>]) -> Structure {
    let mut s = Structure::new(RootedTree::ended_signature(), n);
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        s.add_tuple(0, vec![a, b]);
        adj[a].push(b);
    }
    for x in 0..n {
        let mut y = x;
        let mut steps = 0;
        while let Some(z) = succ[y] {
            s.add_tuple(1, vec![x, z]);
            y = z;
            steps += 1;
            if steps > n {
                break;
            }
        }
    }
    for t in 0..n {
        let mut first = vec![usize::MAX; n];
        first[t] = t;
        let mut queue = VecDeque::new();
        for &w in &adj[t] {
            first[w] = w;
            queue.push_back(w);
        }
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if first[w] == usize::MAX {
                    first[w] = first[v];
                    queue.push_back(w);
                }
            }
        }
        for u in 0..n {
            s.set_function(0, &[t, u], if first[u] == usize::MAX { t } else { first[u] });
        }
    }
    s
}

impl ThetaEndedTree {
    fn deep_tree(&self, valence: usize, depth: usize) -> Arc<(RootedTree, Structure)> {
        let mut cache = self.deep.lock().unwrap();
        cache
            .entry((valence, depth))
            .or_insert_with(|| {
                let t = RootedTree::regular(valence, depth);
                let s = t.ended();
                Arc::new((t, s))
            })
            .clone()
    }

    /// Embeds a finite ended tree into a truncated regular ended tree deep
    /// enough to hold it, top vertex on the end ray.
    pub fn embeds_in_deep_tree(&self, m: &Structure) -> bool {
        if m.size() == 0 {
            return true;
        }
        let preds = (0..m.size())
            .map(|x| (0..m.size()).filter(|&y| m.holds(0, &[y, x]) && m.holds(1, &[y, x])).count())
            .max()
            .unwrap_or(0);
        let valence = preds.max(2) + 1;
        let chains: Vec<Vec<usize>> = (0..m.size()).map(|x| chain_from(m, x)).collect();
        let top = *chains[0].last().unwrap();
        let height = chains.iter().map(|c| c.len() - 1).max().unwrap();
        let deep = self.deep_tree(valence, 2 * height + 1);
        let (tree, big) = (&deep.0, &deep.1);
        let mut anchor = 0;
        for _ in 0..height {
            anchor = tree.children[anchor][0];
        }
        EmbeddingSearch::new(m, big).fix(top, anchor).first().is_some()
    }

    fn ambient(&self, n: usize) -> (Arc<(RootedTree, Structure)>, usize) {
        let deep = self.deep_tree(n.max(3), 2 * n + 1);
        let mut anchor = 0;
        for _ in 0..n {
            anchor = deep.0.children[anchor][0];
        }
        (deep, anchor)
    }
}

impl AmalgamOperator for ThetaEndedTree {
    fn name(&self) -> String {
        "ended-tree amalgam over a vertex".into()
    }

    fn base(&self) -> &Structure {
        &self.base
    }

    fn is_member(&self, m: &Structure) -> bool {
        is_geodesic_tree(m, usize::MAX, true) && self.embeds_in_deep_tree(m)
    }

    fn amalgamate(&self, p: &AmalgamationProblem) -> Result<Cocone> {
        if p.base.size() != 1 {
            return Err(Error::Amalgamation("base must be a single vertex".into()));
        }
        for w in [&p.wing1, &p.wing2] {
            if w.signature() != self.base.signature() || !is_geodesic_tree(w, usize::MAX, true) {
                return Err(Error::Amalgamation("wing is not an ended-tree substructure".into()));
            }
        }
        let c1 = chain_from(&p.wing1, p.eta1.map[0]);
        let c2 = chain_from(&p.wing2, p.eta2.map[0]);
        let k = c1.len().min(c2.len());
        let glue: Vec<(usize, usize)> = (1..k).map(|i| (c2[i], c1[i])).collect();
        let (n, z1, z2) = layout(p, &glue);
        let mut edges = BTreeSet::new();
        let mut succ: Vec<Option<usize>> = vec![None; n];
        for (w, z) in [(&p.wing1, &z1), (&p.wing2, &z2)] {
            for e in w.relation(0) {
                edges.insert((z.apply(e[0]), z.apply(e[1])));
            }
            for x in 0..w.size() {
                if let Some(y) = successor_of(w, x) {
                    let (zx, zy) = (z.apply(x), z.apply(y));
                    match succ[zx] {
                        Some(prev) if prev != zy => {
                            return Err(Error::Amalgamation(format!("conflicting successors at apex vertex {zx}")))
                        }
                        _ => succ[zx] = Some(zy),
                    }
                }
            }
        }
        let apex = ended_structure(n, &edges, &succ);
        Ok(Cocone { apex, zeta1: z1, zeta2: z2 })
    }

    fn wings(&self, n: usize) -> Vec<(Structure, Morphism)> {
        let (deep, anchor) = self.ambient(n);
        let (tree, big) = (&deep.0, &deep.1);
        let neighbours = |v: usize| -> Vec<usize> {
            let mut out: Vec<usize> = tree.children[v].clone();
            out.extend(tree.parent[v]);
            out
        };
        let mut sets: BTreeSet<Vec<usize>> = BTreeSet::from([vec![anchor]]);
        let mut frontier = vec![vec![anchor]];
        for _ in 1..n {
            let mut next = Vec::new();
            for s in &frontier {
                for &v in s {
                    for w in neighbours(v) {
                        if !s.contains(&w) {
                            let mut t = s.clone();
                            t.push(w);
                            t.sort_unstable();
                            if sets.insert(t.clone()) {
                                next.push(t);
                            }
                        }
                    }
                }
            }
            frontier = next;
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for s in sets {
            let w = big.induced(&s);
            let t = s.binary_search(&anchor).unwrap();
            if seen.insert(canonical_form(&w, &[t])) {
                out.push((w, Morphism::new(vec![t])));
            }
        }
        out.sort_by_key(|(w, _)| w.size());
        out
    }
}

fn problem(op: &dyn AmalgamOperator, w1: &(Structure, Morphism), w2: &(Structure, Morphism)) -> AmalgamationProblem {
    AmalgamationProblem {
        base: op.base().clone(),
        wing1: w1.0.clone(),
        eta1: w1.1.clone(),
        wing2: w2.0.clone(),
        eta2: w2.1.clone(),
    }
}

/// Prescribed images, or `None` when two constraints collide.
fn merge_constraints(pairs: impl IntoIterator<Item = (usize, usize)>) -> Option<Vec<(usize, usize)>> {
    let mut map = BTreeMap::new();
    for (x, y) in pairs {
        if *map.entry(x).or_insert(y) != y {
            return None;
        }
    }
    Some(map.into_iter().collect())
}

const WITNESS_LINES: usize = 20;

fn record(report: &mut Report, count: &mut usize, line: String) {
    *count += 1;
    if *count <= WITNESS_LINES {
        report.fail(line);
    }
}

fn wing_label(w: &(Structure, Morphism)) -> String {
    format!("{}@{}", canonical_form(&w.0, &w.1.map).short(), w.0.size())
}

/// For all wing pairs of size at most `n`: the swapped problem's cocone is
/// isomorphic to the original by a map exchanging the legs.
pub fn check_theta_symmetry(op: &dyn AmalgamOperator, n: usize) -> Report {
    let mut report = Report::new(format!("symmetry: {}", op.name()));
    report.context("wing_cap", n);
    let wings = op.wings(n);
    let mut instances = 0usize;
    let mut failures = 0usize;
    for w1 in &wings {
        for w2 in &wings {
            instances += 1;
            let p = problem(op, w1, w2);
            let (c, c_swapped) = match (evaluate(op, &p), evaluate(op, &p.swapped())) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    record(&mut report, &mut failures, format!("({}, {}): {e}", wing_label(w1), wing_label(w2)));
                    continue;
                }
            };
            let fixed = merge_constraints(
                (0..w1.0.size())
                    .map(|x| (c.zeta1.apply(x), c_swapped.zeta2.apply(x)))
                    .chain((0..w2.0.size()).map(|y| (c.zeta2.apply(y), c_swapped.zeta1.apply(y)))),
            );
            let ok = c.apex.size() == c_swapped.apex.size()
                && fixed.is_some_and(|f| EmbeddingSearch::new(&c.apex, &c_swapped.apex).fix_all(&f).first().is_some());
            if !ok {
                record(
                    &mut report,
                    &mut failures,
                    format!("({}, {}): no isomorphism exchanging the legs", wing_label(w1), wing_label(w2)),
                );
            }
        }
    }
    report.context("wings", wings.len()).context("instances", instances).context("failures", failures);
    report
}

/// All wing extensions `ι: B ↪ B'` over the base with `|B'| ≤ n`.
fn extensions(op: &dyn AmalgamOperator, wings: &[(Structure, Morphism)]) -> Vec<(usize, usize, Morphism)> {
    let mut out = Vec::new();
    for (i, (w, eta)) in wings.iter().enumerate() {
        for (j, (w2, eta2)) in wings.iter().enumerate() {
            if w.size() > w2.size() {
                continue;
            }
            let fix: Vec<(usize, usize)> = (0..op.base().size()).map(|a| (eta.apply(a), eta2.apply(a))).collect();
            for iota in EmbeddingSearch::new(w, w2).fix_all(&fix).run() {
                out.push((i, j, iota));
            }
        }
    }
    out
}

/// For every pair of wing extensions `ι_i: B_i ↪ B'_i` commuting with the
/// base maps, an embedding `σ` of the cocones with `σ∘ζ_i = ζ'_i∘ι_i`.
pub fn check_theta_functoriality(op: &dyn AmalgamOperator, n: usize) -> Report {
    let mut report = Report::new(format!("functoriality: {}", op.name()));
    report.context("wing_cap", n);
    let wings = op.wings(n);
    let ext = extensions(op, &wings);
    let mut cache: BTreeMap<(usize, usize), Result<Cocone>> = BTreeMap::new();
    let mut cocone = |i: usize, j: usize| -> Result<Cocone> {
        cache.entry((i, j)).or_insert_with(|| evaluate(op, &problem(op, &wings[i], &wings[j]))).clone()
    };
    let mut instances = 0usize;
    let mut failures = 0usize;
    for (i1, j1, iota1) in &ext {
        for (i2, j2, iota2) in &ext {
            instances += 1;
            let tag = || {
                format!(
                    "{} -> {} via {:?}, {} -> {} via {:?}",
                    wing_label(&wings[*i1]),
                    wing_label(&wings[*j1]),
                    iota1.map,
                    wing_label(&wings[*i2]),
                    wing_label(&wings[*j2]),
                    iota2.map
                )
            };
            let (c, c2) = match (cocone(*i1, *i2), cocone(*j1, *j2)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => {
                    record(&mut report, &mut failures, format!("{}: {e}", tag()));
                    continue;
                }
            };
            let fixed = merge_constraints(
                (0..wings[*i1].0.size())
                    .map(|x| (c.zeta1.apply(x), c2.zeta1.apply(iota1.apply(x))))
                    .chain((0..wings[*i2].0.size()).map(|y| (c.zeta2.apply(y), c2.zeta2.apply(iota2.apply(y))))),
            );
            let found = fixed.is_some_and(|f| EmbeddingSearch::new(&c.apex, &c2.apex).fix_all(&f).first().is_some());
            if !found {
                record(&mut report, &mut failures, format!("{}: no commuting embedding of the cocones", tag()));
            }
        }
    }
    report
        .context("wings", wings.len())
        .context("extensions", ext.len())
        .context("instances", instances)
        .context("failures", failures);
    report
}
