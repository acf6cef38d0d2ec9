//! Finite approximations of Fraïssé limits built by iterated one-point
//! amalgamation.

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::structures::{for_each_tuple, is_embedding, EmbeddingSearch, Morphism, Structure};

use super::{ClassKind, ClassSpec, Dist, RootedTree};

/// A verified one-point extension: `extension` restricted to its first
/// `base.len()` points is the substructure on `base`, its last point is new,
/// and `witness` embeds it into the approximation over `base`.
#[derive(Clone, Debug)]
pub struct CertificateEntry {
    pub base: Vec<usize>,
    pub extension: Structure,
    pub witness: Morphism,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Deficit {
    pub base: Vec<usize>,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct LimitApproximation {
    pub structure: Structure,
    pub k: usize,
    pub steps: usize,
    pub rounds: usize,
    pub closed: bool,
    /// Rounds of extension work each point has received; `None` when the
    /// point lies in a closed approximation.
    pub slack: Vec<Option<u64>>,
    pub certificate: Vec<CertificateEntry>,
    pub deficits: Vec<Deficit>,
    pub family: String,
}

impl LimitApproximation {
    /// Whether every point generated by `tuple` has slack above `margin`.
    pub fn is_interior(&self, tuple: &[usize], margin: u64) -> bool {
        crate::structures::closure(&self.structure, tuple).iter().all(|&x| self.slack[x].is_none_or(|s| s > margin))
    }

    pub fn interior_points(&self, margin: u64) -> Vec<usize> {
        (0..self.structure.size()).filter(|&x| self.is_interior(&[x], margin)).collect()
    }

    /// Largest margin at which `tuple` is interior (`None` = unbounded).
    pub fn margin_of(&self, tuple: &[usize]) -> Option<u64> {
        crate::structures::closure(&self.structure, tuple)
            .iter()
            .filter_map(|&x| self.slack[x])
            .min()
            .map(|s| s.saturating_sub(1))
    }

    /// Re-checks every certificate entry by an independent embedding search.
    pub fn recheck(&self) -> bool {
        self.certificate.iter().all(|e| {
            let fixed: Vec<(usize, usize)> = e.base.iter().copied().enumerate().collect();
            is_embedding(&e.extension, &self.structure, &e.witness)
                && EmbeddingSearch::new(&e.extension, &self.structure).fix_all(&fixed).first().is_some()
        })
    }
}

pub fn build_limit_approximation(spec: &ClassSpec, k: usize, steps: usize) -> Result<LimitApproximation> {
    match &spec.kind {
        ClassKind::Tree { valence } => Ok(tree_approximation(spec, *valence, k, steps, false)),
        ClassKind::EndedTree { valence } => Ok(tree_approximation(spec, *valence, k, steps, true)),
        ClassKind::Dyadic { level } => dyadic_approximation(*level, k, steps),
        _ => Builder::new(spec, k).run(steps),
    }
}

fn tree_approximation(spec: &ClassSpec, valence: usize, k: usize, steps: usize, ended: bool) -> LimitApproximation {
    let depth = steps.max(1);
    let t = RootedTree::regular(valence, depth);
    let structure = if ended { t.ended() } else { t.with_geodesics() };
    let slack: Vec<Option<u64>> = t.depth.iter().map(|&d| Some((depth - d) as u64)).collect();
    let mut certificate = Vec::new();
    let mut deficits = Vec::new();
    let edge = spec.signature.clone();
    for v in 0..t.len() {
        if t.depth[v] == depth {
            deficits.push(Deficit { base: vec![v], reason: format!("boundary vertex has 1 of {valence} neighbours") });
            continue;
        }
        let w = t.children[v][0];
        let sub = structure.induced(&{
            let mut e = vec![v, w];
            e.sort_unstable();
            e
        });
        let (extension, witness) =
            if v < w { (sub, Morphism::new(vec![v, w])) } else { (sub.permuted(&[1, 0]), Morphism::new(vec![v, w])) };
        debug_assert_eq!(extension.signature(), edge.as_ref());
        certificate.push(CertificateEntry { base: vec![v], extension, witness });
    }
    let kind = if ended { "ended tree" } else { "tree" };
    LimitApproximation {
        structure,
        k,
        steps,
        rounds: depth,
        closed: false,
        slack,
        certificate,
        deficits,
        family: format!("{kind} valence={valence} depth={depth}"),
    }
}

fn dyadic_approximation(level: usize, k: usize, steps: usize) -> Result<LimitApproximation> {
    let alg = super::builtin_dyadic_algebra(level)?;
    let structure = alg.elements()?;
    let slack: Vec<Option<u64>> = (0..alg.element_count())
        .map(|x| {
            let j = (0..=level)
                .find(|&j| {
                    let block = 1usize << (level - j);
                    (0..alg.atom_count()).step_by(block).all(|s| {
                        let cell = ((1usize << block) - 1) << s;
                        x & cell == 0 || x & cell == cell
                    })
                })
                .unwrap_or(level);
            Some((level - j + 1) as u64)
        })
        .collect();
    let deficits = (0..alg.element_count())
        .filter(|&x| slack[x] == Some(1))
        .map(|x| Deficit { base: vec![x], reason: "element cannot be halved at this level".into() })
        .collect();
    Ok(LimitApproximation {
        structure,
        k,
        steps,
        rounds: 0,
        closed: false,
        slack,
        certificate: Vec::new(),
        deficits,
        family: format!("dyadic level={level}"),
    })
}

struct Builder<'a> {
    spec: &'a ClassSpec,
    k: usize,
    m: Structure,
    /// Distance matrix mirror of `m` for metric classes; `m` itself is only
    /// materialized at the end.
    dist: Option<Vec<Vec<Dist>>>,
    created: Vec<usize>,
    rng: ChaCha8Rng,
}

/// A one-point extension demand over a base: a Katětov profile for metric
/// classes, an explicit structure otherwise.
enum Demand {
    Profile(Vec<Dist>),
    Structure(Structure),
}

impl<'a> Builder<'a> {
    fn new(spec: &'a ClassSpec, k: usize) -> Self {
        let dist = matches!(spec.kind, ClassKind::Metric(_)).then(Vec::new);
        Self {
            spec,
            k,
            m: Structure::new(spec.signature.clone(), 0),
            dist,
            created: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    fn size(&self) -> usize {
        self.created.len()
    }

    fn submatrix(d: &[Vec<Dist>], base: &[usize]) -> Vec<Vec<Dist>> {
        base.iter().map(|&x| base.iter().map(|&y| d[x][y]).collect()).collect()
    }

    fn demands(&self, base: &[usize]) -> Result<Vec<Demand>> {
        if let (ClassKind::Metric(cls), Some(d)) = (&self.spec.kind, &self.dist) {
            return Ok(cls.katetov_functions(&Self::submatrix(d, base)).into_iter().map(Demand::Profile).collect());
        }
        let a = self.m.induced(base);
        let n = a.size();
        let sig = a.signature();
        if !sig.is_relational() || !sig.constants.is_empty() {
            return Err(Error::Invalid("limit builder needs a relational signature".into()));
        }
        let mut slots = Vec::new();
        for (r, (_, arity)) in sig.relations.iter().enumerate() {
            for_each_tuple(n + 1, *arity, |t| {
                if t.contains(&n) {
                    slots.push((r, t.to_vec()));
                }
            });
        }
        if slots.len() > 20 {
            return Err(Error::CapExceeded { what: "extension slots".into(), actual: slots.len(), cap: 20 });
        }
        let bare = a.with_new_elements(1);
        Ok((0..1u64 << slots.len())
            .filter_map(|mask| {
                let mut b = bare.clone();
                for (i, (r, t)) in slots.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        b.add_tuple(*r, t.clone());
                    }
                }
                self.spec.is_member(&b).then_some(Demand::Structure(b))
            })
            .collect())
    }

    fn realizer(&self, base: &[usize], demand: &Demand) -> Option<usize> {
        let mut candidates = (0..self.size()).filter(|c| !base.contains(c));
        match demand {
            Demand::Profile(f) => {
                let d = self.dist.as_ref().expect("metric mode");
                candidates.find(|&c| base.iter().zip(f).all(|(&a, v)| d[a][c] == *v))
            }
            Demand::Structure(b) => candidates.find(|&c| {
                let mut map = base.to_vec();
                map.push(c);
                is_embedding(b, &self.m, &Morphism::new(map))
            }),
        }
    }

    /// Adds a point realizing the demand over `base`. Relational classes use
    /// the free amalgam. For metric classes the distances to points outside
    /// the base are drawn one at a time from the admissible Katětov interval
    /// with a fixed-seed generator; the capped extension never closes up.
    fn add_point(&mut self, base: &[usize], demand: &Demand, round: usize) -> Result<()> {
        let n = self.size();
        match demand {
            Demand::Profile(f) => {
                let ClassKind::Metric(cls) = &self.spec.kind else { unreachable!() };
                let d = self.dist.as_mut().expect("metric mode");
                let mut g: Vec<Option<Dist>> = vec![None; n];
                for (&a, v) in base.iter().zip(f) {
                    g[a] = Some(*v);
                }
                let mut fixed: Vec<usize> = base.to_vec();
                for c in 0..n {
                    if g[c].is_some() {
                        continue;
                    }
                    let lo = fixed.iter().map(|&p| (g[p].unwrap() - d[p][c]).abs()).max();
                    let hi = fixed.iter().map(|&p| g[p].unwrap() + d[p][c]).min();
                    let choices: Vec<Dist> = cls
                        .distances()
                        .iter()
                        .copied()
                        .filter(|v| lo.is_none_or(|lo| *v >= lo) && hi.is_none_or(|hi| *v <= hi))
                        .collect();
                    g[c] = Some(*choices.choose(&mut self.rng).expect("Katětov extensions exist"));
                    fixed.push(c);
                }
                let row: Vec<Dist> = g.into_iter().map(Option::unwrap).collect();
                for (c, v) in row.iter().enumerate() {
                    d[c].push(*v);
                }
                let mut last = row;
                last.push(Dist::zero());
                d.push(last);
            }
            Demand::Structure(b) => {
                let mut next = self.m.with_new_elements(1);
                let mut map = base.to_vec();
                map.push(n);
                for r in 0..b.signature().relations.len() {
                    for t in b.relation(r) {
                        if t.contains(&base.len()) {
                            next.add_tuple(r, t.iter().map(|&x| map[x]).collect());
                        }
                    }
                }
                if !self.spec.is_member(&next) {
                    return Err(Error::Amalgamation("free amalgam leaves the class".into()));
                }
                self.m = next;
            }
        }
        self.created.push(round);
        Ok(())
    }

    fn subsets(&self) -> Vec<Vec<usize>> {
        let n = self.size();
        let mut out = vec![Vec::new()];
        let mut frontier = vec![Vec::new()];
        for _ in 0..self.k {
            let mut next = Vec::new();
            for s in &frontier {
                let start = s.last().map_or(0, |&x| x + 1);
                for x in start..n {
                    let mut t: Vec<usize> = s.clone();
                    t.push(x);
                    next.push(t);
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    fn materialize(&mut self) {
        if let (ClassKind::Metric(cls), Some(d)) = (&self.spec.kind, &self.dist) {
            self.m = cls.space(d).expect("admissible distances");
        }
    }

    fn seed(&mut self) -> Result<()> {
        let Ok(members) = self.spec.members(self.k + 1) else { return Ok(()) };
        for c in members.iter().rev() {
            if self.size() + c.size() > self.spec.size_bound {
                break;
            }
            self.materialize();
            if EmbeddingSearch::new(c, &self.m).first().is_some() {
                continue;
            }
            let start = self.size();
            for j in 0..c.size() {
                let base: Vec<usize> = (start..start + j).collect();
                let demand = match &self.spec.kind {
                    ClassKind::Metric(cls) => Demand::Profile((0..j).map(|i| cls.distance(c, i, j).unwrap()).collect()),
                    _ => Demand::Structure(c.induced(&(0..=j).collect::<Vec<_>>())),
                };
                self.add_point(&base, &demand, 0)?;
            }
        }
        Ok(())
    }

    fn extension_structure(&self, base: &[usize], demand: Demand) -> Structure {
        match demand {
            Demand::Structure(b) => b,
            Demand::Profile(f) => {
                let ClassKind::Metric(cls) = &self.spec.kind else { unreachable!() };
                let mut e = Self::submatrix(self.dist.as_ref().unwrap(), base);
                for (i, row) in e.iter_mut().enumerate() {
                    row.push(f[i]);
                }
                let mut last = f;
                last.push(Dist::zero());
                e.push(last);
                cls.space(&e).expect("Katětov values are admissible")
            }
        }
    }

    fn run(mut self, steps: usize) -> Result<LimitApproximation> {
        self.seed()?;
        let mut rounds = 0;
        let mut closed = false;
        let mut overflow = false;
        while rounds < steps && !overflow {
            rounds += 1;
            let mut added = false;
            for base in self.subsets() {
                for demand in self.demands(&base)? {
                    if self.realizer(&base, &demand).is_some() {
                        continue;
                    }
                    if self.size() >= self.spec.size_bound {
                        overflow = true;
                        break;
                    }
                    self.add_point(&base, &demand, rounds)?;
                    added = true;
                }
                if overflow {
                    break;
                }
            }
            if !added && !overflow {
                closed = true;
                break;
            }
        }
        self.materialize();

        let mut certificate = Vec::new();
        let mut deficits = Vec::new();
        for base in self.subsets() {
            for demand in self.demands(&base)? {
                let found = self.realizer(&base, &demand);
                match found {
                    Some(c) => {
                        let mut map = base.clone();
                        map.push(c);
                        certificate.push(CertificateEntry {
                            base: base.clone(),
                            extension: self.extension_structure(&base, demand),
                            witness: Morphism::new(map),
                        })
                    }
                    None => {
                        deficits.push(Deficit { base: base.clone(), reason: "one-point extension not realized".into() })
                    }
                }
            }
        }
        let slack = if closed {
            vec![None; self.size()]
        } else {
            self.created.iter().map(|&r| Some(rounds.saturating_sub(r) as u64)).collect()
        };
        Ok(LimitApproximation {
            structure: self.m,
            k: self.k,
            steps,
            rounds,
            closed,
            slack,
            certificate,
            deficits,
            family: self.spec.name.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{builtin_tree_class, builtin_urysohn_class, triangle_free_graphs, MetricClass};
    use super::*;
    use num_rational::Ratio;

    fn ints(v: &[i64]) -> Vec<super::super::Dist> {
        v.iter().map(|&x| Ratio::from_integer(x)).collect()
    }

    #[test]
    fn single_distance_gives_complete_graph() {
        let spec = builtin_urysohn_class(&ints(&[1]), Ratio::from_integer(1)).unwrap();
        let lim = build_limit_approximation(&spec, 3, 5).unwrap();
        assert_eq!(lim.structure.size(), 4);
        assert!(lim.closed);
        assert_eq!(lim.rounds, 1);
        assert!(lim.deficits.is_empty());
        assert!(lim.recheck());
    }

    #[test]
    fn two_distances_extend_every_pair() {
        let spec = builtin_urysohn_class(&ints(&[1, 2]), Ratio::from_integer(2)).unwrap();
        let lim = build_limit_approximation(&spec, 2, 10).unwrap();
        assert!(lim.closed, "size {}", lim.structure.size());
        assert!(lim.deficits.is_empty());
        assert!(lim.recheck());
        let cls = MetricClass::integers(2, 2).unwrap();
        let d = cls.matrix(&lim.structure).unwrap();
        // Independent oracle: every pair and every Katětov profile over it.
        let n = d.len();
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                for fx in 1..=2 {
                    for fy in 1..=2 {
                        let dxy = d[x][y].to_integer();
                        if (fx - fy).abs() > dxy || dxy > fx + fy {
                            continue;
                        }
                        let hit = (0..n)
                            .any(|z| z != x && z != y && d[x][z].to_integer() == fx && d[y][z].to_integer() == fy);
                        assert!(hit, "pair ({x},{y}) profile ({fx},{fy})");
                    }
                }
            }
        }
    }

    #[test]
    fn small_budget_reports_deficits() {
        let spec = builtin_urysohn_class(&ints(&[1, 2, 3]), Ratio::from_integer(3)).unwrap();
        let lim = build_limit_approximation(&spec, 2, 1).unwrap();
        assert!(!lim.closed);
        assert!(!lim.deficits.is_empty());
        assert!(lim.slack.contains(&Some(0)));
        assert!(lim.recheck());
    }

    #[test]
    fn tree_boundary_is_deficient() {
        let spec = builtin_tree_class(3);
        let lim = build_limit_approximation(&spec, 2, 3).unwrap();
        assert_eq!(lim.structure.size(), 22);
        assert_eq!(lim.deficits.len(), 12);
        assert!(lim.recheck());
        assert!(lim.is_interior(&[0], 2));
        assert!(!lim.is_interior(&[0], 3));
    }

    #[test]
    fn triangle_free_extension_property() {
        let lim = build_limit_approximation(&triangle_free_graphs(), 1, 6).unwrap();
        assert!(lim.closed);
        assert!(lim.recheck());
    }

    #[test]
    fn dyadic_slack_tracks_resolution() {
        let lim = dyadic_approximation(2, 2, 0).unwrap();
        assert_eq!(lim.slack[0b1111], Some(3));
        assert_eq!(lim.slack[0b1100], Some(2));
        assert_eq!(lim.slack[0b0110], Some(1));
        assert!(lim.is_interior(&[0b0001, 0b0010], 0));
        assert!(!lim.is_interior(&[0b0001], 1));
    }
}
