//! Orbital types of tuples, decided by canonical forms of pointed generated
//! substructures.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fraisse::{LimitApproximation, RadiusFn};
use crate::structures::{canonical_form, generated_substructure, text, Structure, TypeCode};

#[derive(Clone, Debug)]
pub struct OrbitalType {
    pub code: TypeCode,
    pub arity: usize,
    /// The generated substructure, with the tuple renamed into it.
    pub representative: Structure,
    pub tuple: Vec<usize>,
}

impl OrbitalType {
    /// Hex digest followed by the representative in the structure text
    /// format.
    pub fn witness_block(&self) -> String {
        let tuple: Vec<String> = self.tuple.iter().map(usize::to_string).collect();
        format!(
            "type {}\ntuple {}\n{}",
            self.code.digest(),
            tuple.join(" "),
            text::write_structure(&self.representative)
        )
    }
}

/// Type of a tuple in an arbitrary finite structure, without margin checks.
pub fn pointed_type(m: &Structure, tuple: &[usize]) -> OrbitalType {
    let (sub, inc) = generated_substructure(m, tuple);
    let local: Vec<usize> =
        tuple.iter().map(|x| inc.map.binary_search(x).expect("tuple lies in its closure")).collect();
    OrbitalType { code: canonical_form(&sub, &local), arity: tuple.len(), representative: sub, tuple: local }
}

pub fn orbital_type(m: &LimitApproximation, tuple: &[usize]) -> Result<OrbitalType> {
    if let Some(&x) = tuple.iter().find(|&&x| x >= m.structure.size()) {
        return Err(Error::NotInterior(format!("{x} is not an element")));
    }
    if !m.is_interior(tuple, 0) {
        let bad: Vec<usize> =
            crate::structures::closure(&m.structure, tuple).into_iter().filter(|&x| m.slack[x] == Some(0)).collect();
        return Err(Error::NotInterior(format!("{tuple:?} generates boundary points {bad:?}")));
    }
    Ok(pointed_type(&m.structure, tuple))
}

pub fn same_orbit(m: &LimitApproximation, a: &[usize], b: &[usize]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::Arity { expected: a.len(), actual: b.len() });
    }
    Ok(orbital_type(m, a)?.code == orbital_type(m, b)?.code)
}

/// Interior tuples of the given arity, lexicographic.
pub fn interior_tuples(m: &LimitApproximation, arity: usize, margin: u64) -> Vec<Vec<usize>> {
    let points = m.interior_points(margin);
    let mut out = Vec::new();
    crate::structures::for_each_tuple(points.len(), arity, |t| {
        let tuple: Vec<usize> = t.iter().map(|&i| points[i]).collect();
        if m.is_interior(&tuple, margin) {
            out.push(tuple);
        }
    });
    out
}

/// Codes `O(ā', b̄)` for `ā'` in the orbit of `ā` and `b̄` ranging over
/// `b_arity`-tuples of fresh distinct interior points whose radius from
/// `ā'` is between 1 and `r`.
pub fn enumerate_pair_types(
    m: &LimitApproximation,
    a: &[usize],
    b_arity: usize,
    r: u64,
    radius: &RadiusFn,
) -> Result<BTreeMap<TypeCode, OrbitalType>> {
    if !m.is_interior(a, r) {
        return Err(Error::NotInterior(format!("{a:?} needs margin {r}")));
    }
    let code = orbital_type(m, a)?.code;
    let mut out = BTreeMap::new();
    for a2 in interior_tuples(m, a.len(), 0) {
        if orbital_type(m, &a2)?.code != code {
            continue;
        }
        for b in interior_tuples(m, b_arity, 0) {
            if b.iter().any(|x| a2.contains(x)) || (1..b.len()).any(|i| b[..i].contains(&b[i])) {
                continue;
            }
            let d = radius(&m.structure, &a2, &b);
            if d == 0 || d > r {
                continue;
            }
            let mut t = a2.clone();
            t.extend(&b);
            if m.is_interior(&t, 0) {
                let ty = pointed_type(&m.structure, &t);
                out.entry(ty.code.clone()).or_insert(ty);
            }
        }
    }
    Ok(out)
}

/// Codes of the given explicit tuples.
pub fn pair_types_over(m: &LimitApproximation, tuples: &[Vec<usize>]) -> Result<BTreeMap<TypeCode, OrbitalType>> {
    let mut out = BTreeMap::new();
    for t in tuples {
        let ty = orbital_type(m, t)?;
        out.entry(ty.code.clone()).or_insert(ty);
    }
    Ok(out)
}
