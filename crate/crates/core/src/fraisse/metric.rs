//! Finite metric spaces with distances in a finite set, encoded as one
//! symmetric binary relation per distance value.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::structures::{Signature, Structure};

pub type Dist = Ratio<i64>;

/// Parses `3` or `3/2`.
pub fn parse_dist(s: &str) -> Result<Dist> {
    let bad = || Error::Invalid(format!("bad distance {s:?}"));
    match s.split_once('/') {
        Some((p, q)) => {
            let (p, q): (i64, i64) = (p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?);
            if q == 0 {
                return Err(bad());
            }
            Ok(Ratio::new(p, q))
        }
        None => Ok(Ratio::from_integer(s.trim().parse().map_err(|_| bad())?)),
    }
}

fn relation_name(d: &Dist) -> String {
    format!("d{d}")
}

/// The class of finite metric spaces with distances in `S ∩ (0, D]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricClass {
    distances: Vec<Dist>,
    diameter: Dist,
    signature: Arc<Signature>,
}

impl MetricClass {
    /// Requires every positive `s` in `S ∩ (0, D]` and closure of that set
    /// under sums that stay within `D`.
    pub fn new(distances: &[Dist], diameter: Dist) -> Result<Self> {
        if distances.iter().any(|d| *d <= Dist::zero()) {
            return Err(Error::DistanceSet("distances must be positive".into()));
        }
        let set: BTreeSet<Dist> = distances.iter().copied().filter(|d| *d <= diameter).collect();
        if set.is_empty() {
            return Err(Error::DistanceSet("no distance within the diameter bound".into()));
        }
        for a in &set {
            for b in &set {
                let sum = a + b;
                if sum <= diameter && !set.contains(&sum) {
                    return Err(Error::DistanceSet(format!("{a} + {b} = {sum} is missing")));
                }
            }
        }
        let distances: Vec<Dist> = set.into_iter().collect();
        let mut sig = Signature::new();
        for d in &distances {
            sig = sig.relation(&relation_name(d), 2);
        }
        Ok(Self { distances, diameter, signature: Arc::new(sig) })
    }

    pub fn integers(max: i64, diameter: i64) -> Result<Self> {
        let ds: Vec<Dist> = (1..=max).map(Ratio::from_integer).collect();
        Self::new(&ds, Ratio::from_integer(diameter))
    }

    pub fn distances(&self) -> &[Dist] {
        &self.distances
    }

    pub fn diameter(&self) -> Dist {
        self.diameter
    }

    /// Largest admissible distance; capped sums saturate here.
    pub fn cap(&self) -> Dist {
        *self.distances.last().unwrap()
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn index_of(&self, d: &Dist) -> Option<usize> {
        self.distances.binary_search(d).ok()
    }

    pub fn contains(&self, d: &Dist) -> bool {
        self.index_of(d).is_some()
    }

    /// Builds a space from a symmetric matrix; `None` if some entry is not
    /// admissible. Triangle inequalities are not checked here.
    pub fn space(&self, matrix: &[Vec<Dist>]) -> Option<Structure> {
        let n = matrix.len();
        let mut s = Structure::new(self.signature.clone(), n);
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    s.add_tuple(self.index_of(&matrix[x][y])?, vec![x, y]);
                }
            }
        }
        Some(s)
    }

    pub fn distance(&self, m: &Structure, x: usize, y: usize) -> Option<Dist> {
        if x == y {
            return Some(Dist::zero());
        }
        (0..self.distances.len()).find(|&r| m.holds(r, &[x, y])).map(|r| self.distances[r])
    }

    /// Distance matrix, `None` if some pair carries no distance.
    pub fn matrix(&self, m: &Structure) -> Option<Vec<Vec<Dist>>> {
        let n = m.size();
        let mut d = vec![vec![Dist::zero(); n]; n];
        for r in 0..self.distances.len() {
            for t in m.relation(r) {
                if t[0] == t[1] || !d[t[0]][t[1]].is_zero() {
                    return None;
                }
                d[t[0]][t[1]] = self.distances[r];
            }
        }
        for x in 0..n {
            for y in 0..n {
                if x != y && d[x][y].is_zero() {
                    return None;
                }
            }
        }
        Some(d)
    }

    pub fn is_member(&self, m: &Structure) -> bool {
        if m.signature() != self.signature.as_ref() {
            return false;
        }
        match self.matrix(m) {
            None => false,
            Some(d) => is_metric(&d),
        }
    }

    /// All Katětov functions on `m`: distance profiles of a new point.
    pub fn katetov_functions(&self, d: &[Vec<Dist>]) -> Vec<Vec<Dist>> {
        let n = d.len();
        let mut out = Vec::new();
        let mut f: Vec<Dist> = Vec::with_capacity(n);
        fn rec(cls: &MetricClass, d: &[Vec<Dist>], f: &mut Vec<Dist>, out: &mut Vec<Vec<Dist>>) {
            let i = f.len();
            if i == d.len() {
                out.push(f.clone());
                return;
            }
            for &v in &cls.distances {
                let ok = (0..i).all(|j| {
                    let (a, b) = (v, f[j]);
                    let dij = d[i][j];
                    (a - b).abs() <= dij && dij <= a + b
                });
                if ok {
                    f.push(v);
                    rec(cls, d, f, out);
                    f.pop();
                }
            }
        }
        rec(self, d, &mut f, &mut out);
        debug_assert_eq!(out.iter().filter(|g| g.len() != n).count(), 0);
        out
    }

    /// Extends a Katětov function defined on the points `base` of `d` to
    /// every point by `min(cap, min_a f(a) + d(a, c))`.
    pub fn capped_extension(&self, d: &[Vec<Dist>], base: &[usize], f: &[Dist]) -> Vec<Dist> {
        (0..d.len())
            .map(|c| base.iter().zip(f).map(|(&a, &fa)| fa + d[a][c]).fold(self.cap(), |acc, v| acc.min(v)))
            .collect()
    }

    /// All members on `n` points, as distance matrices.
    pub fn all_matrices(&self, n: usize) -> Vec<Vec<Vec<Dist>>> {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|y| (0..y).map(move |x| (x, y))).collect();
        let mut out = Vec::new();
        let mut d = vec![vec![Dist::zero(); n]; n];
        fn rec(
            cls: &MetricClass,
            pairs: &[(usize, usize)],
            k: usize,
            d: &mut Vec<Vec<Dist>>,
            out: &mut Vec<Vec<Vec<Dist>>>,
        ) {
            if k == pairs.len() {
                out.push(d.clone());
                return;
            }
            let (x, y) = pairs[k];
            for &v in &cls.distances {
                d[x][y] = v;
                d[y][x] = v;
                // Pairs are set in order (0,1), (0,2), (1,2), (0,3), ..; setting
                // (x, y) completes exactly the triangles through z < x.
                let ok = (0..x).all(|z| {
                    let (a, b) = (d[x][z], d[y][z]);
                    v <= a + b && a <= v + b && b <= v + a
                });
                if ok {
                    rec(cls, pairs, k + 1, d, out);
                }
            }
            d[x][y] = Dist::zero();
            d[y][x] = Dist::zero();
        }
        rec(self, &pairs, 0, &mut d, &mut out);
        out
    }

    pub fn all_members(&self, n: usize) -> Vec<Structure> {
        self.all_matrices(n).iter().map(|d| self.space(d).expect("admissible")).collect()
    }
}

/// Triangle inequality, symmetry, zero diagonal, positivity off it.
pub fn is_metric(d: &[Vec<Dist>]) -> bool {
    let n = d.len();
    for x in 0..n {
        if !d[x][x].is_zero() {
            return false;
        }
        for y in 0..n {
            if d[x][y] != d[y][x] || (x != y && d[x][y] <= Dist::zero()) {
                return false;
            }
            for z in 0..n {
                if d[x][z] > d[x][y] + d[y][z] {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn int(v: i64) -> Dist {
        Ratio::from_integer(v)
    }

    fn triangle(a: i64, b: i64, c: i64) -> Vec<Vec<Dist>> {
        vec![vec![int(0), int(a), int(b)], vec![int(a), int(0), int(c)], vec![int(b), int(c), int(0)]]
    }

    #[test]
    fn membership() {
        let cls = MetricClass::integers(10, 10).unwrap();
        assert!(cls.is_member(&cls.space(&triangle(3, 4, 5)).unwrap()));
        assert!(!cls.is_member(&cls.space(&triangle(1, 1, 3)).unwrap()));
    }

    #[test]
    fn additive_closure_is_checked() {
        let err = MetricClass::new(&[int(1), int(3)], int(4)).unwrap_err();
        assert_eq!(err, Error::DistanceSet("1 + 1 = 2 is missing".into()));
        assert!(MetricClass::new(&[int(1), int(3)], int(1)).is_ok());
        let half = MetricClass::new(&[Ratio::new(1, 2), int(1)], int(1)).unwrap();
        assert_eq!(half.signature().relations[0].0, "d1/2");
    }

    #[test]
    fn parse_distances() {
        assert_eq!(parse_dist("3/2").unwrap(), Ratio::new(3, 2));
        assert_eq!(parse_dist("7").unwrap(), int(7));
        assert!(parse_dist("x").is_err());
        assert!(parse_dist("1/0").is_err());
    }

    #[test]
    fn member_counts_match_brute_force() {
        let cls = MetricClass::integers(3, 3).unwrap();
        for n in 0..=4 {
            let pairs = n * (n.max(1) - 1) / 2;
            let mut brute = 0;
            for code in 0..3usize.pow(pairs as u32) {
                let mut d = vec![vec![int(0); n]; n];
                let mut c = code;
                for y in 0..n {
                    for x in 0..y {
                        let v = int((c % 3) as i64 + 1);
                        c /= 3;
                        d[x][y] = v;
                        d[y][x] = v;
                    }
                }
                if is_metric(&d) {
                    brute += 1;
                }
            }
            assert_eq!(cls.all_matrices(n).len(), brute, "n = {n}");
        }
    }

    #[test]
    fn katetov_profiles_extend_metrics() {
        let cls = MetricClass::integers(3, 3).unwrap();
        let d = triangle(1, 2, 3);
        for f in cls.katetov_functions(&d) {
            let mut e = d.clone();
            for (i, row) in e.iter_mut().enumerate() {
                row.push(f[i]);
            }
            let mut last = f.clone();
            last.push(int(0));
            e.push(last);
            assert!(is_metric(&e));
        }
    }

    #[test]
    fn capped_extension_is_katetov() {
        let cls = MetricClass::integers(10, 10).unwrap();
        let d = triangle(3, 4, 5);
        let g = cls.capped_extension(&d, &[0], &[int(2)]);
        assert_eq!(g, vec![int(2), int(5), int(6)]);
        let empty = cls.capped_extension(&d, &[], &[]);
        assert_eq!(empty, vec![int(10); 3]);
    }
}
