//! Finite permutation groups, product-set arithmetic, factorization
//! certificates and coset graphs.

mod coset;
mod perm;

use std::collections::{BTreeMap, BTreeSet};

pub use coset::{cayley_abels_graph, CosetGraph};
pub use perm::{
    generated_subgroup, pointwise_stabilizer, power, product_set, stabilizer_under, Action, GroupSubset, MaskAction,
    Natural, Perm, PermGroup, DEFAULT_GROUP_CAP,
};

use crate::report::Report;

/// Orbit code of a tuple under `G`: the lexicographically least tuple in
/// its orbit. For the full automorphism group of a finite structure this is
/// exactly the orbital type.
pub fn orbit_code(g: &PermGroup, action: &dyn Action, tuple: &[usize]) -> Vec<usize> {
    g.iter().map(|h| action.act_tuple(h, tuple)).min().unwrap_or_else(|| tuple.to_vec())
}

fn concat(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().chain(b).copied().collect()
}

/// For each code in `s`, the first group element `f` (in element order)
/// with `O(ā, f·ā)` equal to it; codes with no such `f` are returned
/// separately.
pub fn witnesses_for_codes(g: &PermGroup, a: &[usize], s: &BTreeSet<Vec<usize>>) -> (GroupSubset, Vec<Vec<usize>>) {
    let mut found: BTreeMap<Vec<usize>, Perm> = BTreeMap::new();
    for f in g.iter() {
        let code = orbit_code(g, &Natural, &concat(a, &f.apply_tuple(a)));
        if s.contains(&code) {
            found.entry(code).or_insert_with(|| f.clone());
        }
    }
    let missing = s.iter().filter(|c| !found.contains_key(*c)).cloned().collect();
    (GroupSubset::new(g.degree(), found.into_values()), missing)
}

/// Endpoints of S-paths `ā = ā_0, .., ā_n` inside the orbit of `ā`.
pub fn path_endpoints(g: &PermGroup, a: &[usize], s: &BTreeSet<Vec<usize>>, n: usize) -> BTreeSet<Vec<usize>> {
    let orbit: Vec<Vec<usize>> = g.orbit(&Natural, a).into_iter().collect();
    let mut step: BTreeMap<&Vec<usize>, Vec<&Vec<usize>>> = BTreeMap::new();
    for b in &orbit {
        for c in &orbit {
            if s.contains(&orbit_code(g, &Natural, &concat(b, c))) {
                step.entry(b).or_default().push(c);
            }
        }
    }
    let mut layer: BTreeSet<Vec<usize>> = BTreeSet::from([a.to_vec()]);
    for _ in 0..n {
        let mut next = BTreeSet::new();
        for b in &layer {
            for c in step.get(b).into_iter().flatten() {
                next.insert((*c).clone());
            }
        }
        layer = next;
    }
    layer
}

/// `(V_ā F)^n · ā`.
pub fn word_images(g: &PermGroup, a: &[usize], f: &GroupSubset, n: usize) -> BTreeSet<Vec<usize>> {
    let vf = product_set(&pointwise_stabilizer(g, a), f);
    power(&vf, n).apply_to(&Natural, a)
}

#[derive(Clone, Debug)]
pub struct LemmaCheck {
    pub f: GroupSubset,
    pub s: BTreeSet<Vec<usize>>,
    pub unrealizable: Vec<Vec<usize>>,
    pub path_endpoints: BTreeSet<Vec<usize>>,
    pub word_images: BTreeSet<Vec<usize>>,
    /// Path endpoints outside the word images.
    pub paths_not_words: Vec<Vec<usize>>,
    /// Word images with no path.
    pub words_not_paths: Vec<Vec<usize>>,
    /// Steps of constructed witness paths whose code fell outside `s`.
    pub bad_steps: usize,
    pub n: usize,
}

impl LemmaCheck {
    pub fn report(&self, title: &str) -> Report {
        let mut r = Report::new(title);
        r.context("n", self.n).context("F", self.f.len()).context("S", self.s.len());
        r.note(format!("path endpoints: {}", self.path_endpoints.len()));
        r.note(format!("word images: {}", self.word_images.len()));
        for c in &self.unrealizable {
            r.note(format!("code {c:?} not realized from the base tuple; skipped"));
        }
        for x in &self.paths_not_words {
            r.fail(format!("path endpoint {x:?} not in (V F)^n"));
        }
        for x in &self.words_not_paths {
            r.fail(format!("word image {x:?} not reached by an S-path"));
        }
        if self.bad_steps > 0 {
            r.fail(format!("{} witness steps left S", self.bad_steps));
        }
        r
    }
}

/// Builds `F` from `S` (one witness per realizable code) and checks that
/// every S-path endpoint lies in `(V_ā F)^n · ā`.
pub fn check_lemma_paths_to_words(g: &PermGroup, a: &[usize], s: &BTreeSet<Vec<usize>>, n: usize) -> LemmaCheck {
    let (f, unrealizable) = witnesses_for_codes(g, a, s);
    let paths = path_endpoints(g, a, s, n);
    let words = word_images(g, a, &f, n);
    let paths_not_words = paths.difference(&words).cloned().collect();
    LemmaCheck {
        f,
        s: s.clone(),
        unrealizable,
        path_endpoints: paths,
        word_images: words,
        paths_not_words,
        words_not_paths: Vec::new(),
        bad_steps: 0,
        n,
    }
}

/// Builds `S = { O(ā, f·ā) : f ∈ F }` and, for every `g ∈ (V_ā F)^n`,
/// constructs the path `ā_i = h_1 f_1 .. h_i f_i · ā`, checking each step
/// has its code in `S` and that the path ends at `g·ā`.
pub fn check_lemma_words_to_paths(g: &PermGroup, a: &[usize], f: &GroupSubset, n: usize) -> LemmaCheck {
    let s: BTreeSet<Vec<usize>> = f.iter().map(|x| orbit_code(g, &Natural, &concat(a, &x.apply_tuple(a)))).collect();
    let v = pointwise_stabilizer(g, a);
    let mut layer: BTreeSet<Perm> = BTreeSet::from([Perm::identity(g.degree())]);
    let mut bad_steps = 0;
    for _ in 0..n {
        let mut next = BTreeSet::new();
        for p in &layer {
            let from = p.apply_tuple(a);
            for h in v.iter() {
                for x in f.iter() {
                    let q = p.compose(h).compose(x);
                    let to = q.apply_tuple(a);
                    if !s.contains(&orbit_code(g, &Natural, &concat(&from, &to))) {
                        bad_steps += 1;
                    }
                    next.insert(q);
                }
            }
        }
        layer = next;
    }
    let reached: BTreeSet<Vec<usize>> = layer.iter().map(|q| q.apply_tuple(a)).collect();
    let words = word_images(g, a, f, n);
    let paths = path_endpoints(g, a, &s, n);
    let words_not_paths = words.difference(&paths).cloned().collect();
    debug_assert_eq!(reached, words);
    LemmaCheck {
        f: f.clone(),
        s,
        unrealizable: Vec::new(),
        path_endpoints: paths,
        word_images: words,
        paths_not_words: Vec::new(),
        words_not_paths,
        bad_steps,
        n,
    }
}

/// Both lemmas at once: with `F` built from `S`, S-path endpoints and
/// `(V_ā F)^n · ā` must coincide exactly.
pub fn check_lemma_correspondence(g: &PermGroup, a: &[usize], s: &BTreeSet<Vec<usize>>, n: usize) -> LemmaCheck {
    let forward = check_lemma_paths_to_words(g, a, s, n);
    let backward = check_lemma_words_to_paths(g, a, &forward.f, n);
    let words_not_paths = forward.word_images.difference(&forward.path_endpoints).cloned().collect();
    LemmaCheck { words_not_paths, bad_steps: backward.bad_steps, ..forward }
}

#[derive(Clone, Debug)]
pub struct CameronFactorization {
    pub f: GroupSubset,
    pub stabilizer_order: usize,
    pub verified: bool,
}

/// `F` from `V_ā`-orbit representatives on `G·ā`, then `G = V_ā F V_ā`
/// checked element by element.
pub fn cameron_factorization(g: &PermGroup, a: &[usize]) -> CameronFactorization {
    let v = pointwise_stabilizer(g, a);
    let orbit = g.orbit(&Natural, a);
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut reps = Vec::new();
    for b in &orbit {
        if seen.contains(b) {
            continue;
        }
        seen.extend(v.apply_to(&Natural, b));
        reps.push(b.clone());
    }
    let f = GroupSubset::new(
        g.degree(),
        reps.iter().map(|b| g.iter().find(|x| &x.apply_tuple(a) == b).expect("b in orbit").clone()),
    );
    let vfv = product_set(&product_set(&v, &f), &v);
    let verified = vfv == g.as_subset();
    CameronFactorization { f, stabilizer_order: v.len(), verified }
}

#[derive(Clone, Debug)]
pub struct ObFactorization {
    pub witness: Option<Perm>,
    pub u_order: usize,
    pub v_a_order: usize,
    pub product_size: usize,
    pub missing: usize,
}

impl ObFactorization {
    pub fn verified(&self) -> bool {
        self.witness.is_some() && self.missing == 0
    }

    pub fn report(&self) -> Report {
        let mut r = Report::new("V_A = U F U F U");
        r.context("|V_A|", self.v_a_order).context("|U|", self.u_order);
        match &self.witness {
            None => r.fail("no f in V_A with fB independent from B; contradicts existence"),
            Some(f) => {
                r.note(format!("witness f = {f}"));
                r.note(format!("|UFUFU| = {}", self.product_size));
                if self.missing > 0 {
                    r.fail(format!("{} elements of V_A outside UFUFU", self.missing));
                }
            }
        }
        r
    }
}

/// Picks `f ∈ V_A` with `f·B` independent from `B`, sets `F = {f, f⁻¹}` and
/// `U = V_B`, and checks `V_A ⊆ U F U F U` exhaustively.
pub fn indep_ob_factorization(
    g: &PermGroup,
    action: &dyn Action,
    a_set: &[usize],
    b_set: &[usize],
    rel: &dyn Fn(&[usize], &[usize]) -> bool,
) -> ObFactorization {
    let v_a = stabilizer_under(g, action, a_set);
    let u = stabilizer_under(g, action, b_set);
    let witness = v_a.iter().find(|f| rel(&action.act_tuple(f, b_set), b_set)).cloned();
    let Some(f) = witness else {
        return ObFactorization {
            witness: None,
            u_order: u.len(),
            v_a_order: v_a.len(),
            product_size: 0,
            missing: v_a.len(),
        };
    };
    let ff = GroupSubset::new(g.degree(), [f.clone(), f.inverse()]);
    let ufu = product_set(&product_set(&u, &ff), &u);
    let full = product_set(&product_set(&ufu, &ff), &u);
    let missing = v_a.iter().filter(|x| !full.contains(x)).count();
    ObFactorization { witness: Some(f), u_order: u.len(), v_a_order: v_a.len(), product_size: full.len(), missing }
}
