//! Orbital independence relations over a finite base and the four-axiom
//! checker.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::amalgam::{evaluate, AmalgamOperator, AmalgamationProblem};
use crate::error::{Error, Result};
use crate::fraisse::{builtin_dyadic_algebra, DyadicAlgebra, RootedTree};
use crate::groups::{orbit_code, Action, Perm, PermGroup};
use crate::report::{csv_field, Report};
use crate::structures::{closure, is_isomorphic, EmbeddingSearch, Morphism, Structure};

pub type RelFn = Arc<dyn Fn(&[usize], &[usize]) -> Result<bool> + Send + Sync>;

/// `B ⫫_A C` on finite sets of elements of a fixed ambient structure.
#[derive(Clone)]
pub struct IndependenceRelation {
    pub name: String,
    pub base: Vec<usize>,
    rel: RelFn,
}

impl std::fmt::Debug for IndependenceRelation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IndependenceRelation").field("name", &self.name).field("base", &self.base).finish()
    }
}

impl IndependenceRelation {
    pub fn new(name: impl Into<String>, base: Vec<usize>, rel: RelFn) -> Self {
        Self { name: name.into(), base, rel }
    }

    pub fn holds(&self, b: &[usize], c: &[usize]) -> Result<bool> {
        (self.rel)(b, c)
    }
}

/// Measure independence on the dyadic algebra of the given level: the
/// generated subalgebras satisfy `μ(x ∩ y) = μ(x)·μ(y)`. Checking atoms of
/// the two subalgebras suffices since both sides are additive.
pub fn builtin_measure_independence(level: usize) -> Result<IndependenceRelation> {
    let alg = builtin_dyadic_algebra(level)?;
    let rel: RelFn = Arc::new(move |b, c| {
        if let Some(&x) = b.iter().chain(c).find(|&&x| !alg.is_element(x)) {
            return Err(Error::Invalid(format!("{x} is not an element of the algebra")));
        }
        let n = alg.atom_count() as u32;
        let (pa, qa) = (alg.cells(b), alg.cells(c));
        Ok(pa.iter().all(|&x| qa.iter().all(|&y| (x & y).count_ones() * n == x.count_ones() * y.count_ones())))
    });
    Ok(IndependenceRelation::new(format!("measure independence, level {level}"), Vec::new(), rel))
}

fn hull(tree: &RootedTree, t: usize, set: &[usize]) -> BTreeSet<usize> {
    let mut out = BTreeSet::from([t]);
    for &x in set {
        out.extend(tree.geodesic(t, x));
    }
    out
}

/// `conv(B ∪ {t}) ∩ conv(C ∪ {t}) = {t}` on the non-leaf vertices.
pub fn builtin_convex_hull_independence(tree: &RootedTree, t: usize) -> Result<IndependenceRelation> {
    let interior = |v: usize| v < tree.len() && tree.depth[v] < tree.max_depth;
    if !interior(t) {
        return Err(Error::NotInterior(format!("vertex {t}")));
    }
    let tree = tree.clone();
    let rel: RelFn = Arc::new(move |b, c| {
        if let Some(&x) = b.iter().chain(c).find(|&&x| !(x < tree.len() && tree.depth[x] < tree.max_depth)) {
            return Err(Error::NotInterior(format!("vertex {x}")));
        }
        let (hb, hc) = (hull(&tree, t, b), hull(&tree, t, c));
        Ok(hb.intersection(&hc).eq([t].iter()))
    });
    Ok(IndependenceRelation::new(format!("convex hull independence over {t}"), vec![t], rel))
}

/// `B₁ ⫫_A B₂` iff `⟨A∪B₁∪B₂⟩` embeds into `Θ(⟨A∪B₁⟩, ⟨A∪B₂⟩)` extending
/// both legs.
pub fn induced_independence(
    theta: Arc<dyn AmalgamOperator>,
    ambient: Arc<Structure>,
    a_set: &[usize],
) -> Result<IndependenceRelation> {
    let a_el = closure(&ambient, a_set);
    let iso = is_isomorphic(theta.base(), &ambient.induced(&a_el))
        .ok_or_else(|| Error::Amalgamation("operator base is not isomorphic to the generated base".into()))?;
    let base_points: Vec<usize> = iso.map.iter().map(|&i| a_el[i]).collect();
    let name = format!("independence induced by {}", theta.name());
    let a_seed = a_set.to_vec();
    let rel: RelFn = Arc::new(move |b1, b2| {
        let gen = |extra: &[usize]| -> Vec<usize> {
            let seed: Vec<usize> = a_seed.iter().chain(extra).copied().collect();
            closure(&ambient, &seed)
        };
        let (e1, e2) = (gen(b1), gen(b2));
        let both: Vec<usize> = b1.iter().chain(b2).copied().collect();
        let ed = gen(&both);
        let pos = |set: &[usize], x: usize| set.binary_search(&x).expect("base lies in every wing");
        let eta = |set: &[usize]| Morphism::new(base_points.iter().map(|&x| pos(set, x)).collect());
        let p = AmalgamationProblem {
            base: theta.base().clone(),
            wing1: ambient.induced(&e1),
            eta1: eta(&e1),
            wing2: ambient.induced(&e2),
            eta2: eta(&e2),
        };
        let c = evaluate(theta.as_ref(), &p)?;
        let mut fixed: BTreeMap<usize, usize> = BTreeMap::new();
        for (set, zeta) in [(&e1, &c.zeta1), (&e2, &c.zeta2)] {
            for (i, &x) in set.iter().enumerate() {
                let y = zeta.apply(i);
                if *fixed.entry(pos(&ed, x)).or_insert(y) != y {
                    return Ok(false);
                }
            }
        }
        let d = ambient.induced(&ed);
        let fixed: Vec<(usize, usize)> = fixed.into_iter().collect();
        Ok(EmbeddingSearch::new(&d, &c.apex).fix_all(&fixed).first().is_some())
    });
    Ok(IndependenceRelation::new(name, a_set.to_vec(), rel))
}

/// Automorphism witnesses for the axiom checker.
pub trait ExtensionOracle: Sync {
    fn describe(&self) -> String;
    /// The region `B` and `C` range over.
    fn points(&self) -> Vec<usize>;
    /// Points searched for images `fB` in reduced mode; a superset of
    /// `points`, listed first.
    fn witness_pool(&self) -> Vec<usize> {
        self.points()
    }
    fn act(&self, g: &Perm, x: usize) -> usize;
    /// A complete invariant of the orbit of `tuple` under the pointwise
    /// stabilizer of `fixed`.
    fn type_over(&self, fixed: &[usize], tuple: &[usize]) -> Vec<u64>;
    /// An automorphism fixing `fixed` pointwise and sending `from` to `to`.
    fn extension(&self, fixed: &[usize], from: &[usize], to: &[usize]) -> Option<Perm>;
    /// The whole group, when it is small enough to enumerate.
    fn group(&self) -> Option<&PermGroup> {
        None
    }
}

fn cat(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().chain(b).copied().collect()
}

/// An explicitly enumerated group acting on `points`.
pub struct GroupOracle<'a> {
    pub group: &'a PermGroup,
    pub action: &'a dyn Action,
    pub points: Vec<usize>,
}

impl ExtensionOracle for GroupOracle<'_> {
    fn describe(&self) -> String {
        format!("explicit group of order {}", self.group.order())
    }

    fn points(&self) -> Vec<usize> {
        self.points.clone()
    }

    fn act(&self, g: &Perm, x: usize) -> usize {
        self.action.act(g, x)
    }

    fn type_over(&self, fixed: &[usize], tuple: &[usize]) -> Vec<u64> {
        orbit_code(self.group, self.action, &cat(fixed, tuple)).into_iter().map(|x| x as u64).collect()
    }

    fn extension(&self, fixed: &[usize], from: &[usize], to: &[usize]) -> Option<Perm> {
        let (src, dst) = (cat(fixed, from), cat(fixed, to));
        self.group.iter().find(|g| self.action.act_tuple(g, &src) == dst).cloned()
    }

    fn group(&self) -> Option<&PermGroup> {
        Some(self.group)
    }
}

/// Atom permutations of a dyadic algebra, without enumerating them: two
/// tuples of elements are in one orbit iff every Boolean combination has
/// the same number of atoms.
pub struct DyadicOracle {
    alg: DyadicAlgebra,
    points: Vec<usize>,
    shifted: Vec<usize>,
}

impl DyadicOracle {
    /// All elements of the given level, acted on by its own atom
    /// permutations.
    pub fn new(level: usize) -> Result<Self> {
        let alg = builtin_dyadic_algebra(level)?;
        let points = (0..alg.element_count()).collect();
        Ok(Self { alg, points, shifted: Vec::new() })
    }

    /// Elements of `level` refined into the algebra of level `ambient`,
    /// acted on by the atom permutations of the finer algebra.
    pub fn with_room(level: usize, ambient: usize) -> Result<Self> {
        if ambient < level {
            return Err(Error::Invalid("ambient level below the point level".into()));
        }
        let coarse = builtin_dyadic_algebra(level)?;
        let alg = builtin_dyadic_algebra(ambient)?;
        let points: Vec<usize> = (0..coarse.element_count()).map(|m| coarse.refine(m, ambient)).collect();
        // The same events read off the last `level` bits of the atom word.
        let low = (1usize << level) - 1;
        let shifted = (0..coarse.element_count())
            .map(|m| (0..alg.atom_count()).filter(|&a| m >> (a & low) & 1 == 1).fold(0, |acc, a| acc | 1 << a))
            .filter(|x| !points.contains(x))
            .collect();
        Ok(Self { alg, points, shifted })
    }

    fn pattern(&self, tuple: &[usize], atom: usize) -> usize {
        tuple.iter().enumerate().fold(0, |acc, (i, &m)| acc | (m >> atom & 1) << i)
    }
}

impl ExtensionOracle for DyadicOracle {
    fn describe(&self) -> String {
        format!("atom-pattern extension search in level {}", self.alg.level)
    }

    fn points(&self) -> Vec<usize> {
        self.points.clone()
    }

    fn witness_pool(&self) -> Vec<usize> {
        cat(&self.points, &self.shifted)
    }

    fn act(&self, g: &Perm, x: usize) -> usize {
        crate::groups::MaskAction.act(g, x)
    }

    fn type_over(&self, fixed: &[usize], tuple: &[usize]) -> Vec<u64> {
        let t = cat(fixed, tuple);
        let mut counts = vec![0u64; 1 << t.len()];
        for a in 0..self.alg.atom_count() {
            counts[self.pattern(&t, a)] += 1;
        }
        counts
    }

    fn extension(&self, fixed: &[usize], from: &[usize], to: &[usize]) -> Option<Perm> {
        let (src, dst) = (cat(fixed, from), cat(fixed, to));
        let n = self.alg.atom_count();
        let mut targets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for a in 0..n {
            targets.entry(self.pattern(&dst, a)).or_default().push(a);
        }
        let mut images = vec![0; n];
        for a in 0..n {
            images[a] = targets.get_mut(&self.pattern(&src, a))?.pop()?;
        }
        let g = Perm::try_new(images).ok()?;
        (crate::groups::MaskAction.act_tuple(&g, &src) == dst).then_some(g)
    }
}

/// Automorphisms of a truncated regular tree (all of which fix the root),
/// acting on its non-leaf vertices.
pub struct TreeOracle {
    tree: RootedTree,
}

impl TreeOracle {
    pub fn new(tree: RootedTree) -> Self {
        Self { tree }
    }

    pub fn tree(&self) -> &RootedTree {
        &self.tree
    }
}

impl ExtensionOracle for TreeOracle {
    fn describe(&self) -> String {
        format!("tree extension search, valence {} depth {}", self.tree.valence, self.tree.max_depth)
    }

    fn points(&self) -> Vec<usize> {
        (0..self.tree.len()).filter(|&v| self.tree.depth[v] < self.tree.max_depth).collect()
    }

    fn act(&self, g: &Perm, x: usize) -> usize {
        g.apply(x)
    }

    /// Distances among the root, `fixed` and `tuple`: a distance-preserving
    /// map fixing the root extends to the hulls and then level by level.
    fn type_over(&self, fixed: &[usize], tuple: &[usize]) -> Vec<u64> {
        let t = cat(&[0], &cat(fixed, tuple));
        let mut out = Vec::with_capacity(t.len() * t.len());
        for &x in &t {
            for &y in &t {
                out.push(self.tree.distance(x, y) as u64);
            }
        }
        out
    }

    fn extension(&self, fixed: &[usize], from: &[usize], to: &[usize]) -> Option<Perm> {
        let tree = &self.tree;
        let (src, dst) = (cat(&[0], &cat(fixed, from)), cat(&[0], &cat(fixed, to)));
        let mut map = vec![usize::MAX; tree.len()];
        for (&x, &y) in src.iter().zip(&dst) {
            let (mut x, mut y) = (x, y);
            if tree.depth[x] != tree.depth[y] {
                return None;
            }
            loop {
                if map[x] != usize::MAX && map[x] != y {
                    return None;
                }
                map[x] = y;
                match (tree.parent[x], tree.parent[y]) {
                    (Some(px), Some(py)) => (x, y) = (px, py),
                    _ => break,
                }
            }
        }
        // Level by level: mapped children keep their images, the others
        // fill the remaining children in order.
        let mut used = vec![false; tree.len()];
        for &y in map.iter().filter(|&&y| y != usize::MAX) {
            if std::mem::replace(&mut used[y], true) {
                return None;
            }
        }
        let mut order = vec![0];
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            let w = map[v];
            let free: Vec<usize> = tree.children[w].iter().copied().filter(|&c| !used[c]).collect();
            let mut free = free.into_iter();
            for &c in &tree.children[v] {
                if map[c] == usize::MAX {
                    let d = free.next()?;
                    map[c] = d;
                    used[d] = true;
                } else if tree.parent[map[c]] != Some(w) {
                    return None;
                }
                order.push(c);
            }
            i += 1;
        }
        let g = Perm::try_new(map).ok()?;
        let ok = (1..tree.len()).all(|v| tree.parent[g.apply(v)] == tree.parent[v].map(|p| g.apply(p)));
        (ok && g.apply_tuple(&src) == dst).then_some(g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxiomMode {
    /// Every pair of sets and every group element.
    Exhaustive,
    /// Orbit representatives for `C` and orbit invariants in place of
    /// group enumeration, with witnesses built by extension search.
    Reduced,
    /// As `Reduced`, but with every set as `C`.
    AllPairs,
}

#[derive(Clone, Copy, Debug)]
pub struct AxiomConfig {
    pub n: usize,
    pub mode: AxiomMode,
    /// Candidates tried per existence instance before giving up.
    pub budget: usize,
}

impl AxiomConfig {
    pub fn new(n: usize, mode: AxiomMode) -> Self {
        Self { n, mode, budget: 1_000_000 }
    }
}

#[derive(Clone, Debug, Default)]
pub struct AxiomTally {
    pub checked: usize,
    pub failed: usize,
    pub inconclusive: usize,
}

#[derive(Clone, Debug, Default)]
pub struct AxiomReport {
    pub symmetry: AxiomTally,
    pub monotonicity: AxiomTally,
    pub existence: AxiomTally,
    pub stationarity: AxiomTally,
    pub counterexamples: Vec<String>,
    pub undecided: Vec<String>,
    pub pairs: usize,
}

const WITNESS_LINES: usize = 25;

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.total_failed() == 0 && self.total_inconclusive() == 0
    }

    pub fn total_failed(&self) -> usize {
        self.tallies().iter().map(|(_, t)| t.failed).sum()
    }

    pub fn total_inconclusive(&self) -> usize {
        self.tallies().iter().map(|(_, t)| t.inconclusive).sum()
    }

    fn tallies(&self) -> [(&'static str, &AxiomTally); 4] {
        [
            ("symmetry", &self.symmetry),
            ("monotonicity", &self.monotonicity),
            ("existence", &self.existence),
            ("stationarity", &self.stationarity),
        ]
    }

    fn fail(&mut self, which: fn(&mut Self) -> &mut AxiomTally, line: String) {
        which(self).failed += 1;
        if self.counterexamples.len() < WITNESS_LINES {
            self.counterexamples.push(line);
        }
    }

    fn undecided(&mut self, which: fn(&mut Self) -> &mut AxiomTally, line: String) {
        which(self).inconclusive += 1;
        if self.undecided.len() < WITNESS_LINES {
            self.undecided.push(line);
        }
    }

    pub fn report(&self, title: &str, context: &[(&str, String)]) -> Report {
        let mut r = Report::new(title);
        for (k, v) in context {
            r.context(k, v);
        }
        r.context("pairs", self.pairs);
        for (name, t) in self.tallies() {
            r.note(format!("{name}: checked {} failed {} inconclusive {}", t.checked, t.failed, t.inconclusive));
        }
        for l in &self.counterexamples {
            r.fail(l.clone());
        }
        let extra = self.total_failed().saturating_sub(self.counterexamples.len());
        if extra > 0 {
            r.fail(format!("{extra} further counterexamples"));
        }
        for l in &self.undecided {
            r.undecided(l.clone());
        }
        let extra = self.total_inconclusive().saturating_sub(self.undecided.len());
        if extra > 0 {
            r.undecided(format!("{extra} further undecided instances"));
        }
        r
    }
}

/// Sets of at most `n` points, by size then lexicographically.
pub fn small_sets(points: &[usize], n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![(Vec::new(), 0usize)];
    for _ in 0..n {
        let mut next = Vec::new();
        for (s, from) in &layer {
            for (i, &p) in points.iter().enumerate().skip(*from) {
                let mut t: Vec<usize> = s.clone();
                t.push(p);
                out.push(t.clone());
                next.push((t, i + 1));
            }
        }
        layer = next;
    }
    out
}

fn subsets(c: &[usize]) -> Vec<Vec<usize>> {
    (0..1usize << c.len()).map(|m| (0..c.len()).filter(|i| m >> i & 1 == 1).map(|i| c[i]).collect()).collect()
}

fn permutations(s: &[usize]) -> Vec<Vec<usize>> {
    if s.len() <= 1 {
        return vec![s.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..s.len() {
        let mut rest = s.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn image_set(oracle: &dyn ExtensionOracle, g: &Perm, s: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = s.iter().map(|&x| oracle.act(g, x)).collect();
    v.sort_unstable();
    v
}

fn sorted(t: &[usize]) -> Vec<usize> {
    let mut v = t.to_vec();
    v.sort_unstable();
    v
}

/// Symmetry and monotonicity for one pair.
fn combinatorial(rel: &IndependenceRelation, b: &[usize], c: &[usize], out: &mut AxiomReport) -> Result<bool> {
    let r = rel.holds(b, c)?;
    out.symmetry.checked += 1;
    if r != rel.holds(c, b)? {
        out.fail(|a| &mut a.symmetry, format!("symmetry: B={b:?} C={c:?}: B indep C is {r}, reverse differs"));
    }
    if r {
        for d in subsets(c) {
            out.monotonicity.checked += 1;
            if !rel.holds(b, &d)? {
                out.fail(
                    |a| &mut a.monotonicity,
                    format!("monotonicity: B={b:?} C={c:?} D={d:?}: B indep C but not B indep D"),
                );
            }
        }
    }
    Ok(r)
}

/// Checks symmetry, monotonicity, existence and stationarity of `rel` on
/// sets of at most `cfg.n` points of the oracle's region.
pub fn check_axioms(oracle: &dyn ExtensionOracle, rel: &IndependenceRelation, cfg: AxiomConfig) -> Result<AxiomReport> {
    match cfg.mode {
        AxiomMode::Exhaustive => {
            let group =
                oracle.group().ok_or_else(|| Error::Invalid("exhaustive mode needs an enumerated group".into()))?;
            exhaustive(oracle, group, rel, cfg)
        }
        AxiomMode::Reduced | AxiomMode::AllPairs => reduced(oracle, rel, cfg),
    }
}

fn exhaustive(
    oracle: &dyn ExtensionOracle,
    group: &PermGroup,
    rel: &IndependenceRelation,
    cfg: AxiomConfig,
) -> Result<AxiomReport> {
    let points = oracle.points();
    let sets = small_sets(&points, cfg.n);
    let fixes = |g: &Perm, s: &[usize]| s.iter().all(|&x| oracle.act(g, x) == x);
    let v_a: Vec<&Perm> = group.iter().filter(|g| fixes(g, &rel.base)).collect();
    let mut out = AxiomReport::default();
    for c in &sets {
        let v_c: Vec<&Perm> = group.iter().filter(|g| fixes(g, c)).collect();
        for b in &sets {
            out.pairs += 1;
            let r = combinatorial(rel, b, c, &mut out)?;

            out.existence.checked += 1;
            let mut found = false;
            for f in v_a.iter().take(cfg.budget) {
                if rel.holds(&image_set(oracle, f, b), c)? {
                    found = true;
                    break;
                }
            }
            if !found {
                if v_a.len() > cfg.budget {
                    out.undecided(|a| &mut a.existence, format!("existence: B={b:?} C={c:?}: budget exhausted"));
                } else {
                    out.fail(|a| &mut a.existence, format!("existence: B={b:?} C={c:?}: no f in V_A with fB indep C"));
                }
            }

            if r {
                for g in &v_a {
                    if !rel.holds(&image_set(oracle, g, b), c)? {
                        continue;
                    }
                    out.stationarity.checked += 1;
                    let agrees = v_c.iter().any(|f| b.iter().all(|&x| oracle.act(f, x) == oracle.act(g, x)));
                    if !agrees {
                        out.fail(
                            |a| &mut a.stationarity,
                            format!("stationarity: B={b:?} C={c:?} g={g}: no f in V_C agreeing with g on B"),
                        );
                    }
                }
            }
        }
    }
    Ok(out)
}

fn reduced(oracle: &dyn ExtensionOracle, rel: &IndependenceRelation, cfg: AxiomConfig) -> Result<AxiomReport> {
    let a = &rel.base;
    let points = oracle.points();
    let sets = small_sets(&points, cfg.n);

    // Orbit representatives of C under V_A.
    let set_key = |s: &[usize]| permutations(s).iter().map(|p| oracle.type_over(a, p)).min().unwrap();
    let mut seen = BTreeSet::new();
    let reps: Vec<&Vec<usize>> = if cfg.mode == AxiomMode::AllPairs {
        sets.iter().collect()
    } else {
        sets.iter().filter(|s| seen.insert(set_key(s))).collect()
    };

    // Ordered tuples of distinct pool points, grouped by type over A; only
    // classes meeting the region are checked.
    let region: BTreeSet<usize> = points.iter().copied().collect();
    let mut classes: BTreeMap<Vec<u64>, Vec<Vec<usize>>> = BTreeMap::new();
    for s in &small_sets(&oracle.witness_pool(), cfg.n) {
        for t in permutations(s) {
            classes.entry(oracle.type_over(a, &t)).or_default().push(t);
        }
    }
    classes.retain(|_, m| m[0].iter().all(|x| region.contains(x)));

    let mut out = AxiomReport::default();
    for c in reps {
        for b in &sets {
            out.pairs += 1;
            combinatorial(rel, b, c, &mut out)?;
        }
        for members in classes.values() {
            out.existence.checked += 1;
            let mut independent = Vec::new();
            let mut exhausted = false;
            for (tried, t) in members.iter().enumerate() {
                if tried == cfg.budget {
                    exhausted = true;
                    break;
                }
                if rel.holds(&sorted(t), c)? {
                    independent.push(t);
                }
            }
            let rep = &members[0];
            let Some(&first) = independent.first() else {
                let line = format!("existence: B={:?} C={c:?}: no f in V_A with fB indep C", sorted(rep));
                if exhausted {
                    out.undecided(|a| &mut a.existence, line);
                } else {
                    out.fail(|a| &mut a.existence, line);
                }
                continue;
            };
            // Stationarity: every independent member has the type over C
            // of the first one, realized by an explicit f in V_C.
            let want = oracle.type_over(c, first);
            for &t in &independent[1..] {
                out.stationarity.checked += 1;
                if oracle.type_over(c, t) != want {
                    out.fail(
                        |a| &mut a.stationarity,
                        format!("stationarity: B={first:?} C={c:?} gB={t:?}: no f in V_C agreeing with g on B"),
                    );
                    continue;
                }
                match oracle.extension(c, first, t) {
                    Some(f) if image_set(oracle, &f, c) == *c && c.iter().all(|&x| oracle.act(&f, x) == x) => {}
                    _ => out.fail(
                        |a| &mut a.stationarity,
                        format!("stationarity: B={first:?} C={c:?} gB={t:?}: extension search found no witness"),
                    ),
                }
            }
        }
    }
    Ok(out)
}

/// Independence verdicts as CSV rows `B,C,verdict,id`.
pub fn verdicts_csv(rel: &IndependenceRelation, pairs: &[(Vec<usize>, Vec<usize>)]) -> Result<String> {
    let mut out = String::from("B,C,verdict,id\n");
    let join = |s: &[usize]| s.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    for (i, (b, c)) in pairs.iter().enumerate() {
        let v = if rel.holds(b, c)? { "independent" } else { "dependent" };
        out.push_str(&format!("{},{},{v},{i}\n", csv_field(&join(b)), csv_field(&join(c))));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amalgam::theta_metric_point;
    use crate::fraisse::{Dist, MetricClass};
    use crate::groups::MaskAction;
    use num_rational::Ratio;

    fn q(v: i64) -> Dist {
        Ratio::from_integer(v)
    }

    #[test]
    fn measure_examples() {
        let rel = builtin_measure_independence(2).unwrap();
        let alg = builtin_dyadic_algebra(2).unwrap();
        let (first, second) = (alg.bit_event(0), alg.bit_event(1));
        assert!(rel.holds(&[first], &[second]).unwrap());
        assert!(!rel.holds(&[first], &[first]).unwrap());
        assert!(!rel.holds(&[0b0001], &[0b0001]).unwrap());
        for x in 0..16 {
            assert!(rel.holds(&[0], &[x]).unwrap());
            assert!(rel.holds(&[alg.full()], &[x]).unwrap());
        }
        assert!(rel.holds(&[99], &[1]).is_err());
    }

    /// Direct product identity over all intersections of chosen elements.
    fn literal_measure(alg: &DyadicAlgebra, b: &[usize], c: &[usize]) -> bool {
        let sb = alg.generated_subalgebra(b);
        let sc = alg.generated_subalgebra(c);
        sb.iter().all(|&x| sc.iter().all(|&y| alg.measure(x & y) == alg.measure(x) * alg.measure(y)))
    }

    #[test]
    fn measure_relation_matches_literal_identity() {
        let rel = builtin_measure_independence(2).unwrap();
        let alg = builtin_dyadic_algebra(2).unwrap();
        let sets = small_sets(&(0..16).collect::<Vec<_>>(), 2);
        for b in &sets {
            for c in &sets {
                assert_eq!(rel.holds(b, c).unwrap(), literal_measure(&alg, b, c), "{b:?} {c:?}");
            }
        }
    }

    #[test]
    fn measure_relation_is_atom_invariant() {
        let rel = builtin_measure_independence(2).unwrap();
        let s4 = PermGroup::symmetric(4);
        let sets = small_sets(&(0..16).collect::<Vec<_>>(), 2);
        for g in s4.iter() {
            for b in sets.iter().step_by(7) {
                for c in sets.iter().step_by(5) {
                    let gb = sorted(&MaskAction.act_tuple(g, b));
                    let gc = sorted(&MaskAction.act_tuple(g, c));
                    assert_eq!(rel.holds(b, c).unwrap(), rel.holds(&gb, &gc).unwrap());
                }
            }
        }
    }

    #[test]
    fn level_two_alone_lacks_existence() {
        // Two atoms of measure 1/4 cannot be made independent without
        // finer atoms; the other three axioms hold.
        let rel = builtin_measure_independence(2).unwrap();
        let s4 = PermGroup::symmetric(4);
        let oracle = GroupOracle { group: &s4, action: &MaskAction, points: (0..16).collect() };
        let ex = check_axioms(&oracle, &rel, AxiomConfig::new(2, AxiomMode::Exhaustive)).unwrap();
        assert!(ex.existence.failed > 0);
        assert!(ex.counterexamples.iter().any(|l| l.starts_with("existence: B=[1] C=[1]")));
        assert_eq!(ex.symmetry.failed + ex.monotonicity.failed + ex.stationarity.failed, 0);
        assert!(ex.stationarity.checked > 0);
        let red = check_axioms(&oracle, &rel, AxiomConfig::new(2, AxiomMode::AllPairs)).unwrap();
        let dy = DyadicOracle::new(2).unwrap();
        let red2 = check_axioms(&dy, &rel, AxiomConfig::new(2, AxiomMode::AllPairs)).unwrap();
        assert_eq!(red.existence.failed, red2.existence.failed);
        assert_eq!(red.stationarity.checked, red2.stationarity.checked);
    }

    #[test]
    fn level_two_in_level_four_passes() {
        let rel = builtin_measure_independence(4).unwrap();
        let dy = DyadicOracle::with_room(2, 4).unwrap();
        let all = check_axioms(&dy, &rel, AxiomConfig::new(2, AxiomMode::AllPairs)).unwrap();
        assert!(all.passed(), "{:?}", all.counterexamples);
        let red = check_axioms(&dy, &rel, AxiomConfig::new(2, AxiomMode::Reduced)).unwrap();
        assert!(red.passed());
        assert!(red.pairs < all.pairs);
    }

    #[test]
    fn dyadic_oracle_agrees_with_group() {
        let s4 = PermGroup::symmetric(4);
        let go = GroupOracle { group: &s4, action: &MaskAction, points: (0..16).collect() };
        let dy = DyadicOracle::new(2).unwrap();
        let tuples: Vec<Vec<usize>> = (0..16).flat_map(|x| (0..16).map(move |y| vec![x, y])).collect();
        for fixed in [vec![], vec![0b0011]] {
            for t in &tuples {
                for u in tuples.iter().step_by(3) {
                    let same_g = go.type_over(&fixed, t) == go.type_over(&fixed, u);
                    let same_d = dy.type_over(&fixed, t) == dy.type_over(&fixed, u);
                    assert_eq!(same_g, same_d);
                    assert_eq!(dy.extension(&fixed, t, u).is_some(), same_d);
                }
            }
        }
    }

    #[test]
    fn broken_relation_is_caught() {
        // Monotonicity fails: independent only from sets of size two.
        let rel = IndependenceRelation::new("broken", vec![], Arc::new(|_, c| Ok(c.len() == 2)));
        let s4 = PermGroup::symmetric(4);
        let oracle = GroupOracle { group: &s4, action: &MaskAction, points: (0..16).collect() };
        let r = check_axioms(&oracle, &rel, AxiomConfig::new(2, AxiomMode::Exhaustive)).unwrap();
        assert!(r.symmetry.failed > 0);
        let rel = IndependenceRelation::new("broken", vec![], Arc::new(|b, c| Ok(b.len() + c.len() != 1)));
        let r = check_axioms(&oracle, &rel, AxiomConfig::new(1, AxiomMode::Exhaustive)).unwrap();
        assert!(r.monotonicity.failed > 0);
        assert!(r.report("t", &[]).render().contains("monotonicity: B="));
    }

    #[test]
    fn convex_hull_examples() {
        let tree = RootedTree::regular(4, 5);
        let rel = builtin_convex_hull_independence(&tree, 0).unwrap();
        let (a, b) = (tree.children[0][0], tree.children[0][1]);
        let (a2, b2) = (tree.children[a][0], tree.children[b][1]);
        assert!(rel.holds(&[a2], &[b2]).unwrap());
        assert!(!rel.holds(&[a], &[a]).unwrap());
        assert!(!rel.holds(&[a2], &[a]).unwrap());
        for v in [0, a, b2] {
            assert!(rel.holds(&[0], &[v]).unwrap());
        }
        let leaf = tree.len() - 1;
        assert!(rel.holds(&[leaf], &[a]).is_err());
        assert!(builtin_convex_hull_independence(&tree, leaf).is_err());
    }

    #[test]
    fn tree_oracle_types_match_extension() {
        let o = TreeOracle::new(RootedTree::regular(3, 3));
        let pts = o.points();
        for &x in &pts {
            for &y in &pts {
                for &z in &pts {
                    let same = o.type_over(&[z], &[x]) == o.type_over(&[z], &[y]);
                    let ext = o.extension(&[z], &[x], &[y]);
                    assert_eq!(same, ext.is_some(), "{x} {y} over {z}");
                }
            }
        }
    }

    #[test]
    fn tree_axioms_hold_with_four_branches() {
        let tree = RootedTree::regular(4, 5);
        let rel = builtin_convex_hull_independence(&tree, 0).unwrap();
        let r = check_axioms(&TreeOracle::new(tree), &rel, AxiomConfig::new(2, AxiomMode::Reduced)).unwrap();
        assert!(r.passed(), "{:?}", r.counterexamples);
    }

    #[test]
    fn three_branches_are_too_few_for_existence() {
        let tree = RootedTree::regular(3, 3);
        let rel = builtin_convex_hull_independence(&tree, 0).unwrap();
        let r = check_axioms(&TreeOracle::new(tree), &rel, AxiomConfig::new(2, AxiomMode::Reduced)).unwrap();
        assert!(r.existence.failed > 0);
        assert_eq!(r.symmetry.failed + r.monotonicity.failed + r.stationarity.failed, 0);
    }

    fn subdivided_star(legs: usize, len: usize) -> RootedTree {
        let mut t =
            RootedTree { parent: vec![None], depth: vec![0], children: vec![vec![]], valence: legs, max_depth: len };
        for _ in 0..legs {
            let mut prev = 0;
            for d in 1..=len {
                let v = t.parent.len();
                t.parent.push(Some(prev));
                t.depth.push(d);
                t.children.push(vec![]);
                t.children[prev].push(v);
                prev = v;
            }
        }
        t
    }

    #[test]
    fn induced_metric_examples() {
        let cls = MetricClass::integers(8, 8).unwrap();
        let op = Arc::new(theta_metric_point(cls.clone(), cls.clone()));
        let dm = |v: [[i64; 3]; 3]| {
            let d: Vec<Vec<Dist>> = v.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
            Arc::new(cls.space(&d).unwrap())
        };
        // Points p, a, b with d(a,p)=2, d(p,b)=3.
        let rel = induced_independence(op.clone(), dm([[0, 2, 3], [2, 0, 5], [3, 5, 0]]), &[0]).unwrap();
        assert!(rel.holds(&[1], &[2]).unwrap());
        assert!(rel.holds(&[1], &[0]).unwrap());
        let rel = induced_independence(op, dm([[0, 2, 3], [2, 0, 4], [3, 4, 0]]), &[0]).unwrap();
        assert!(!rel.holds(&[1], &[2]).unwrap());
        assert!(rel.holds(&[2], &[]).unwrap());
    }

    #[test]
    fn induced_independence_is_convex_hull_on_trees() {
        // A star with three legs of length three, and a small regular tree.
        for tree in [subdivided_star(3, 3), RootedTree::regular(3, 3)] {
            let cls = MetricClass::integers(6, 6).unwrap();
            let ambient = Arc::new(tree.path_metric(&cls).unwrap());
            let op = Arc::new(theta_metric_point(cls.clone(), cls));
            let ind = induced_independence(op, ambient, &[0]).unwrap();
            let hulls = |b: &[usize], c: &[usize]| hull(&tree, 0, b).intersection(&hull(&tree, 0, c)).eq([0].iter());
            let sets = small_sets(&(0..tree.len()).collect::<Vec<_>>(), 2);
            for b in &sets {
                for c in &sets {
                    assert_eq!(ind.holds(b, c).unwrap(), hulls(b, c), "{b:?} {c:?}");
                }
            }
        }
    }

    #[test]
    fn csv_rows() {
        let rel = builtin_measure_independence(1).unwrap();
        let csv = verdicts_csv(&rel, &[(vec![1], vec![1]), (vec![], vec![2])]).unwrap();
        assert_eq!(csv, "B,C,verdict,id\n1,1,dependent,0\n,2,independent,1\n");
    }
}
