use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::{for_each_tuple, Morphism, Structure};

/// Canonical fingerprint of a pointed finite structure. Two pointed
/// structures get equal codes iff they are isomorphic by a map carrying
/// one tuple onto the other.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeCode(Arc<[u64]>);

impl TypeCode {
    pub fn words(&self) -> &[u64] {
        &self.0
    }

    /// SHA-256 of the little-endian encoding, as lowercase hex.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for w in self.0.iter() {
            hasher.update(w.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }

    pub fn short(&self) -> String {
        self.digest()[..12].to_string()
    }
}

impl fmt::Debug for TypeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TypeCode({})", self.short())
    }
}

impl fmt::Display for TypeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.digest())
    }
}

const VALUE_POS: u64 = u64::MAX;

enum Incidence {
    Rel { r: usize, tuple: usize, pos: usize },
    Fun { f: usize, index: usize, pos: u64 },
}

struct Canonizer<'a> {
    a: &'a Structure,
    tuple: &'a [usize],
    rel_tuples: Vec<Vec<Vec<usize>>>,
    fn_args: Vec<Vec<Vec<usize>>>,
    incidence: Vec<Vec<Incidence>>,
    best: Option<(Vec<u64>, Vec<usize>)>,
    automorphisms: Vec<Vec<usize>>,
}

impl<'a> Canonizer<'a> {
    fn new(a: &'a Structure, tuple: &'a [usize]) -> Self {
        let n = a.size();
        let mut incidence: Vec<Vec<Incidence>> = (0..n).map(|_| Vec::new()).collect();
        let rel_tuples: Vec<Vec<Vec<usize>>> =
            (0..a.signature().relations.len()).map(|r| a.relation(r).iter().cloned().collect()).collect();
        for (r, tuples) in rel_tuples.iter().enumerate() {
            for (i, t) in tuples.iter().enumerate() {
                for (pos, &x) in t.iter().enumerate() {
                    incidence[x].push(Incidence::Rel { r, tuple: i, pos });
                }
            }
        }
        let mut fn_args = Vec::new();
        for (f, (_, arity)) in a.signature().functions.iter().enumerate() {
            let mut args = Vec::new();
            for_each_tuple(n, *arity, |t| args.push(t.to_vec()));
            for (index, t) in args.iter().enumerate() {
                for (pos, &x) in t.iter().enumerate() {
                    incidence[x].push(Incidence::Fun { f, index, pos: pos as u64 });
                }
                let v = a.function_table(f)[index];
                incidence[v].push(Incidence::Fun { f, index, pos: VALUE_POS });
            }
            fn_args.push(args);
        }
        Self { a, tuple, rel_tuples, fn_args, incidence, best: None, automorphisms: Vec::new() }
    }

    fn initial_colors(&self) -> Vec<usize> {
        let n = self.a.size();
        let mut keys: Vec<Vec<u64>> = vec![Vec::new(); n];
        for (x, key) in keys.iter_mut().enumerate() {
            key.push(0);
            for (i, &y) in self.tuple.iter().enumerate() {
                if y == x {
                    key.push(i as u64 + 1);
                }
            }
            key.push(0);
            for c in 0..self.a.signature().constants.len() {
                if self.a.constant(c) == x {
                    key.push(c as u64 + 1);
                }
            }
            for label in self.a.invariant_labels(x) {
                key.push(0);
                match label {
                    None => key.push(0),
                    Some(s) => encode_str(key, s),
                }
            }
        }
        rank(&keys)
    }

    fn refine(&self, colors: &mut Vec<usize>) {
        let n = self.a.size();
        let mut classes = count_classes(colors);
        loop {
            let mut sigs: Vec<Vec<u64>> = Vec::with_capacity(n);
            for x in 0..n {
                let mut descriptors: Vec<Vec<u64>> = self.incidence[x]
                    .iter()
                    .map(|inc| match *inc {
                        Incidence::Rel { r, tuple, pos } => {
                            let t = &self.rel_tuples[r][tuple];
                            let mut d = vec![0, r as u64, pos as u64];
                            d.extend(t.iter().map(|&y| colors[y] as u64));
                            d
                        }
                        Incidence::Fun { f, index, pos } => {
                            let args = &self.fn_args[f][index];
                            let mut d = vec![1, f as u64, pos];
                            d.extend(args.iter().map(|&y| colors[y] as u64));
                            d.push(colors[self.a.function_table(f)[index]] as u64);
                            d
                        }
                    })
                    .collect();
                descriptors.sort_unstable();
                let mut sig = vec![colors[x] as u64];
                for d in descriptors {
                    sig.push(d.len() as u64);
                    sig.extend(d);
                }
                sigs.push(sig);
            }
            *colors = rank(&sigs);
            let now = count_classes(colors);
            if now == classes {
                return;
            }
            classes = now;
        }
    }

    fn encode(&self, labeling: &[usize]) -> Vec<u64> {
        let a = self.a;
        let n = a.size();
        let sig = a.signature();
        let mut out = Vec::new();
        for (name, arity) in &sig.relations {
            encode_str(&mut out, name);
            out.push(*arity as u64);
        }
        out.push(u64::MAX);
        for (name, arity) in &sig.functions {
            encode_str(&mut out, name);
            out.push(*arity as u64);
        }
        out.push(u64::MAX);
        for name in &sig.constants {
            encode_str(&mut out, name);
        }
        out.push(u64::MAX);
        out.push(n as u64);
        out.push(self.tuple.len() as u64);
        out.extend(self.tuple.iter().map(|&x| labeling[x] as u64));
        for r in 0..sig.relations.len() {
            let mut mapped: Vec<Vec<usize>> =
                self.rel_tuples[r].iter().map(|t| t.iter().map(|&x| labeling[x]).collect()).collect();
            mapped.sort_unstable();
            out.push(mapped.len() as u64);
            for t in mapped {
                out.extend(t.into_iter().map(|x| x as u64));
            }
        }
        let mut inverse = vec![0; n];
        for (old, &new) in labeling.iter().enumerate() {
            inverse[new] = old;
        }
        for (f, (_, arity)) in sig.functions.iter().enumerate() {
            for_each_tuple(n, *arity, |t| {
                let old: Vec<usize> = t.iter().map(|&x| inverse[x]).collect();
                out.push(labeling[a.apply_function(f, &old)] as u64);
            });
        }
        for c in 0..sig.constants.len() {
            out.push(labeling[a.constant(c)] as u64);
        }
        for key in &sig.label_keys {
            encode_str(&mut out, key);
            for &old in &inverse {
                match a.label(old, key) {
                    None => out.push(0),
                    Some(s) => {
                        out.push(1);
                        encode_str(&mut out, s);
                    }
                }
            }
        }
        out
    }

    fn is_automorphism(&self, perm: &[usize]) -> bool {
        let a = self.a;
        for (r, tuples) in self.rel_tuples.iter().enumerate() {
            for t in tuples {
                let image: Vec<usize> = t.iter().map(|&x| perm[x]).collect();
                if !a.holds(r, &image) {
                    return false;
                }
            }
        }
        for (f, args) in self.fn_args.iter().enumerate() {
            for (index, t) in args.iter().enumerate() {
                let image: Vec<usize> = t.iter().map(|&x| perm[x]).collect();
                if a.apply_function(f, &image) != perm[a.function_table(f)[index]] {
                    return false;
                }
            }
        }
        true
    }

    fn search(&mut self, mut colors: Vec<usize>, prefix: &mut Vec<usize>) {
        self.refine(&mut colors);
        let n = self.a.size();
        let mut cells: Vec<Vec<usize>> = vec![Vec::new(); n];
        for x in 0..n {
            cells[colors[x]].push(x);
        }
        let Some(target) = cells.iter().position(|c| c.len() > 1) else {
            self.leaf(colors);
            return;
        };
        let cell = cells[target].clone();
        let mut explored: Vec<usize> = Vec::new();
        for &v in &cell {
            if explored.iter().any(|&u| self.equivalent(u, v, prefix)) {
                continue;
            }
            explored.push(v);
            let mut next: Vec<usize> = colors.iter().map(|&c| 2 * c + 1).collect();
            next[v] = 2 * colors[v];
            prefix.push(v);
            self.search(rank_usize(&next), prefix);
            prefix.pop();
        }
    }

    /// Whether `u` and `v` lie in one orbit of a known automorphism
    /// subgroup fixing `prefix` pointwise, or are swapped by one.
    fn equivalent(&self, u: usize, v: usize, prefix: &[usize]) -> bool {
        let n = self.a.size();
        let fixing: Vec<&Vec<usize>> =
            self.automorphisms.iter().filter(|g| prefix.iter().all(|&p| g[p] == p)).collect();
        if !fixing.is_empty() {
            let mut parent: Vec<usize> = (0..n).collect();
            fn find(parent: &mut [usize], mut x: usize) -> usize {
                while parent[x] != x {
                    parent[x] = parent[parent[x]];
                    x = parent[x];
                }
                x
            }
            for g in &fixing {
                for x in 0..n {
                    let (rx, ry) = (find(&mut parent, x), find(&mut parent, g[x]));
                    if rx != ry {
                        parent[rx] = ry;
                    }
                }
            }
            if find(&mut parent, u) == find(&mut parent, v) {
                return true;
            }
        }
        let mut swap: Vec<usize> = (0..n).collect();
        swap.swap(u, v);
        self.is_automorphism(&swap)
    }

    fn leaf(&mut self, labeling: Vec<usize>) {
        let code = self.encode(&labeling);
        match &self.best {
            None => self.best = Some((code, labeling)),
            Some((best, best_lab)) => match code.cmp(best) {
                std::cmp::Ordering::Less => self.best = Some((code, labeling)),
                std::cmp::Ordering::Equal => {
                    let n = labeling.len();
                    let mut best_inv = vec![0; n];
                    for (old, &new) in best_lab.iter().enumerate() {
                        best_inv[new] = old;
                    }
                    let auto: Vec<usize> = (0..n).map(|x| best_inv[labeling[x]]).collect();
                    if auto.iter().enumerate().any(|(i, &x)| i != x) {
                        self.automorphisms.push(auto);
                    }
                }
                std::cmp::Ordering::Greater => {}
            },
        }
    }
}

fn encode_str(out: &mut Vec<u64>, s: &str) {
    let bytes = s.as_bytes();
    out.push(bytes.len() as u64);
    for chunk in bytes.chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        out.push(u64::from_le_bytes(word));
    }
}

fn rank<T: Ord>(keys: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&x, &y| keys[x].cmp(&keys[y]));
    let mut colors = vec![0; keys.len()];
    let mut c = 0;
    for i in 0..order.len() {
        if i > 0 && keys[order[i]] != keys[order[i - 1]] {
            c += 1;
        }
        colors[order[i]] = c;
    }
    colors
}

fn rank_usize(keys: &[usize]) -> Vec<usize> {
    rank(keys)
}

fn count_classes(colors: &[usize]) -> usize {
    colors.iter().max().map_or(0, |&m| m + 1)
}

/// Canonical code of `(a, tuple)` together with a canonical relabeling
/// (old element -> new position).
pub fn canonical_labeling(a: &Structure, tuple: &[usize]) -> (TypeCode, Vec<usize>) {
    let mut canon = Canonizer::new(a, tuple);
    let colors = canon.initial_colors();
    canon.search(colors, &mut Vec::new());
    let (code, labeling) = canon.best.expect("search visits at least one leaf");
    (TypeCode(code.into()), labeling)
}

pub fn canonical_form(a: &Structure, tuple: &[usize]) -> TypeCode {
    canonical_labeling(a, tuple).0
}

/// An isomorphism `a -> b` carrying `ta` to `tb` entrywise, if any.
pub fn is_isomorphic_pointed(a: &Structure, ta: &[usize], b: &Structure, tb: &[usize]) -> Option<Morphism> {
    if a.size() != b.size() || ta.len() != tb.len() || a.signature() != b.signature() {
        return None;
    }
    let (ca, la) = canonical_labeling(a, ta);
    let (cb, lb) = canonical_labeling(b, tb);
    if ca != cb {
        return None;
    }
    let mut lb_inv = vec![0; b.size()];
    for (old, &new) in lb.iter().enumerate() {
        lb_inv[new] = old;
    }
    Some(Morphism::new(la.iter().map(|&x| lb_inv[x]).collect()))
}

pub fn is_isomorphic(a: &Structure, b: &Structure) -> Option<Morphism> {
    is_isomorphic_pointed(a, &[], b, &[])
}
