//! Finite first-order structures over an explicit signature.
//!
//! Universes are always `{0, .., size - 1}`. Relations are stored as sets of
//! tuples, functions as total tables indexed in mixed radix, constants as
//! element indices. Labels are per-element metadata; only the label keys the
//! signature lists as invariant take part in embeddings and canonical forms.

mod canon;
mod embed;
pub mod text;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};

pub use canon::{canonical_form, canonical_labeling, is_isomorphic, is_isomorphic_pointed, TypeCode};
pub use embed::{
    automorphism_group, automorphism_group_with_cap, enumerate_embeddings, first_embedding_with, is_embedding,
    EmbeddingSearch, DEFAULT_AUTOMORPHISM_CAP,
};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    pub relations: Vec<(String, usize)>,
    pub functions: Vec<(String, usize)>,
    pub constants: Vec<String>,
    /// Label keys that are part of the isomorphism type (e.g. a measure).
    pub label_keys: Vec<String>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn relation(mut self, name: &str, arity: usize) -> Self {
        self.relations.push((name.to_string(), arity));
        self
    }

    pub fn function(mut self, name: &str, arity: usize) -> Self {
        self.functions.push((name.to_string(), arity));
        self
    }

    pub fn constant(mut self, name: &str) -> Self {
        self.constants.push(name.to_string());
        self
    }

    pub fn invariant_label(mut self, key: &str) -> Self {
        self.label_keys.push(key.to_string());
        self
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        let names = self
            .relations
            .iter()
            .map(|(n, _)| n)
            .chain(self.functions.iter().map(|(n, _)| n))
            .chain(self.constants.iter());
        for name in names {
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(Error::Signature(format!("bad symbol name {name:?}")));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Signature(format!("duplicate symbol {name}")));
            }
        }
        for (name, arity) in self.relations.iter().chain(self.functions.iter()) {
            if *arity == 0 {
                return Err(Error::Signature(format!("symbol {name} has arity 0")));
            }
        }
        let mut keys = BTreeSet::new();
        for key in &self.label_keys {
            if !keys.insert(key) {
                return Err(Error::Signature(format!("duplicate label key {key}")));
            }
        }
        Ok(())
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|(n, _)| n == name)
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|(n, _)| n == name)
    }

    pub fn constant_index(&self, name: &str) -> Option<usize> {
        self.constants.iter().position(|n| n == name)
    }

    pub fn is_relational(&self) -> bool {
        self.functions.is_empty() && self.constants.is_empty()
    }
}

/// A total map between universes, stored as the image list of the source.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Morphism {
    pub map: Vec<usize>,
}

impl Morphism {
    pub fn new(map: Vec<usize>) -> Self {
        Self { map }
    }

    pub fn identity(n: usize) -> Self {
        Self { map: (0..n).collect() }
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    pub fn apply_tuple(&self, t: &[usize]) -> Vec<usize> {
        t.iter().map(|&x| self.map[x]).collect()
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &Morphism) -> Morphism {
        Morphism { map: inner.map.iter().map(|&x| self.map[x]).collect() }
    }

    pub fn is_injective(&self) -> bool {
        let set: BTreeSet<_> = self.map.iter().collect();
        set.len() == self.map.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    signature: Arc<Signature>,
    size: usize,
    relations: Vec<BTreeSet<Vec<usize>>>,
    functions: Vec<Vec<usize>>,
    constants: Vec<usize>,
    labels: Vec<BTreeMap<String, String>>,
}

pub(crate) fn table_len(size: usize, arity: usize) -> usize {
    size.checked_pow(arity as u32).expect("function table too large")
}

impl Structure {
    /// An empty structure: no relation tuples, functions constantly 0,
    /// constants at 0. Callers fill in the tables before use.
    pub fn new(signature: Arc<Signature>, size: usize) -> Self {
        let relations = vec![BTreeSet::new(); signature.relations.len()];
        let functions = signature.functions.iter().map(|(_, a)| vec![0; table_len(size, *a)]).collect();
        let constants = vec![0; signature.constants.len()];
        Self { signature, size, relations, functions, constants, labels: vec![BTreeMap::new(); size] }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn signature_arc(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn universe(&self) -> std::ops::Range<usize> {
        0..self.size
    }

    pub fn relation(&self, r: usize) -> &BTreeSet<Vec<usize>> {
        &self.relations[r]
    }

    pub fn relation_by_name(&self, name: &str) -> Option<&BTreeSet<Vec<usize>>> {
        self.signature.relation_index(name).map(|r| &self.relations[r])
    }

    pub fn add_tuple(&mut self, r: usize, tuple: Vec<usize>) {
        debug_assert_eq!(tuple.len(), self.signature.relations[r].1);
        self.relations[r].insert(tuple);
    }

    pub fn remove_tuple(&mut self, r: usize, tuple: &[usize]) -> bool {
        self.relations[r].remove(tuple)
    }

    pub fn holds(&self, r: usize, tuple: &[usize]) -> bool {
        self.relations[r].contains(tuple)
    }

    pub(crate) fn fn_index(&self, args: &[usize]) -> usize {
        args.iter().fold(0, |acc, &a| acc * self.size + a)
    }

    pub fn apply_function(&self, f: usize, args: &[usize]) -> usize {
        self.functions[f][self.fn_index(args)]
    }

    pub fn set_function(&mut self, f: usize, args: &[usize], value: usize) {
        let idx = self.fn_index(args);
        self.functions[f][idx] = value;
    }

    pub(crate) fn function_table(&self, f: usize) -> &[usize] {
        &self.functions[f]
    }

    pub fn constant(&self, c: usize) -> usize {
        self.constants[c]
    }

    pub fn set_constant(&mut self, c: usize, value: usize) {
        self.constants[c] = value;
    }

    pub fn label(&self, x: usize, key: &str) -> Option<&str> {
        self.labels[x].get(key).map(String::as_str)
    }

    pub fn labels(&self, x: usize) -> &BTreeMap<String, String> {
        &self.labels[x]
    }

    pub fn set_label(&mut self, x: usize, key: &str, value: impl Into<String>) {
        self.labels[x].insert(key.to_string(), value.into());
    }

    /// Values of the invariant labels of `x`, in signature order.
    pub fn invariant_labels(&self, x: usize) -> Vec<Option<&str>> {
        self.signature.label_keys.iter().map(|k| self.label(x, k)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.signature.validate()?;
        for (r, (name, arity)) in self.signature.relations.iter().enumerate() {
            for t in &self.relations[r] {
                if t.len() != *arity {
                    return Err(Error::Structure(format!("tuple {t:?} in {name} has wrong arity")));
                }
                if let Some(x) = t.iter().find(|&&x| x >= self.size) {
                    return Err(Error::Structure(format!("element {x} in {name} out of bounds")));
                }
            }
        }
        for (f, (name, arity)) in self.signature.functions.iter().enumerate() {
            if self.functions[f].len() != table_len(self.size, *arity) {
                return Err(Error::Structure(format!("function {name} table has wrong length")));
            }
            if let Some(v) = self.functions[f].iter().find(|&&v| v >= self.size) {
                return Err(Error::Structure(format!("function {name} value {v} out of bounds")));
            }
        }
        for (c, name) in self.signature.constants.iter().enumerate() {
            if self.constants[c] >= self.size {
                return Err(Error::Structure(format!("constant {name} unassigned or out of bounds")));
            }
        }
        Ok(())
    }

    /// The substructure induced on `elements` (sorted, deduplicated by the
    /// caller); the set must already be closed under functions and contain
    /// the constants.
    pub fn induced(&self, elements: &[usize]) -> Structure {
        let mut position = vec![usize::MAX; self.size];
        for (i, &x) in elements.iter().enumerate() {
            position[x] = i;
        }
        let n = elements.len();
        let mut out = Structure::new(self.signature.clone(), n);
        for (r, (_, arity)) in self.signature.relations.iter().enumerate() {
            let candidates = table_len(n, *arity);
            if candidates <= self.relations[r].len() {
                for_each_tuple(n, *arity, |t| {
                    let image: Vec<usize> = t.iter().map(|&i| elements[i]).collect();
                    if self.holds(r, &image) {
                        out.relations[r].insert(t.to_vec());
                    }
                });
            } else {
                for t in &self.relations[r] {
                    if t.iter().all(|&x| position[x] != usize::MAX) {
                        out.relations[r].insert(t.iter().map(|&x| position[x]).collect());
                    }
                }
            }
        }
        for (f, (_, arity)) in self.signature.functions.iter().enumerate() {
            let mut idx = 0;
            for_each_tuple(n, *arity, |t| {
                let image: Vec<usize> = t.iter().map(|&i| elements[i]).collect();
                let v = self.apply_function(f, &image);
                out.functions[f][idx] = position[v];
                idx += 1;
            });
        }
        for c in 0..self.constants.len() {
            out.constants[c] = position[self.constants[c]];
        }
        for (i, &x) in elements.iter().enumerate() {
            out.labels[i] = self.labels[x].clone();
        }
        out
    }

    /// Relabels the universe along a permutation `perm` (old -> new).
    pub fn permuted(&self, perm: &[usize]) -> Structure {
        let n = self.size;
        let mut inverse = vec![0; n];
        for (old, &new) in perm.iter().enumerate() {
            inverse[new] = old;
        }
        let mut out = Structure::new(self.signature.clone(), n);
        for r in 0..self.relations.len() {
            out.relations[r] = self.relations[r].iter().map(|t| t.iter().map(|&x| perm[x]).collect()).collect();
        }
        for (f, (_, arity)) in self.signature.functions.iter().enumerate() {
            let mut idx = 0;
            for_each_tuple(n, *arity, |t| {
                let old: Vec<usize> = t.iter().map(|&x| inverse[x]).collect();
                out.functions[f][idx] = perm[self.apply_function(f, &old)];
                idx += 1;
            });
        }
        for c in 0..self.constants.len() {
            out.constants[c] = perm[self.constants[c]];
        }
        for x in 0..n {
            out.labels[perm[x]] = self.labels[x].clone();
        }
        out
    }

    /// Appends `extra` fresh elements with no relation tuples; function
    /// tables are re-indexed and new entries point at element 0.
    pub fn with_new_elements(&self, extra: usize) -> Structure {
        let n = self.size + extra;
        let mut out = Structure::new(self.signature.clone(), n);
        out.relations = self.relations.clone();
        for (f, (_, arity)) in self.signature.functions.iter().enumerate() {
            let mut idx = 0;
            for_each_tuple(n, *arity, |t| {
                if t.iter().all(|&x| x < self.size) {
                    out.functions[f][idx] = self.apply_function(f, t);
                }
                idx += 1;
            });
        }
        out.constants = self.constants.clone();
        out.labels[..self.size].clone_from_slice(&self.labels);
        out
    }
}

/// Calls `visit` on every tuple of length `arity` over `{0..n-1}` in
/// lexicographic order.
pub fn for_each_tuple(n: usize, arity: usize, mut visit: impl FnMut(&[usize])) {
    if arity == 0 {
        visit(&[]);
        return;
    }
    if n == 0 {
        return;
    }
    let mut t = vec![0; arity];
    loop {
        visit(&t);
        let mut i = arity;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            t[i] += 1;
            if t[i] < n {
                break;
            }
            t[i] = 0;
        }
    }
}

/// Closure of `seed` under functions and constants, sorted.
pub fn closure(m: &Structure, seed: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; m.size()];
    let mut members: Vec<usize> = Vec::new();
    let push = |x: usize, inside: &mut Vec<bool>, members: &mut Vec<usize>| {
        if !inside[x] {
            inside[x] = true;
            members.push(x);
        }
    };
    for &x in seed {
        push(x, &mut inside, &mut members);
    }
    for c in 0..m.signature().constants.len() {
        push(m.constant(c), &mut inside, &mut members);
    }
    let arities: Vec<usize> = m.signature().functions.iter().map(|(_, a)| *a).collect();
    if !arities.is_empty() {
        loop {
            let before = members.len();
            let current = members.clone();
            for (f, &arity) in arities.iter().enumerate() {
                for_each_tuple(current.len(), arity, |t| {
                    let args: Vec<usize> = t.iter().map(|&i| current[i]).collect();
                    let v = m.apply_function(f, &args);
                    push(v, &mut inside, &mut members);
                });
            }
            if members.len() == before {
                break;
            }
        }
    }
    members.sort_unstable();
    members
}

/// The substructure generated by `seed`, with its inclusion embedding.
pub fn generated_substructure(m: &Structure, seed: &[usize]) -> (Structure, Morphism) {
    let elements = closure(m, seed);
    let sub = m.induced(&elements);
    (sub, Morphism::new(elements))
}
