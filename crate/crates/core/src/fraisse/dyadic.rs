//! Finite dyadic measured Boolean algebras.
//!
//! Level `L` has `2^L` atoms of measure `2^-L`. Atom `i` corresponds to the
//! binary word of `i` with the most significant bit first, so the "first
//! bit" event is the set of atoms whose top bit is 1. Algebra elements are
//! atom sets encoded as bitmasks.

use std::sync::Arc;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::structures::{Signature, Structure};

/// Highest level accepted for the atom representation (one bit per atom in
/// a 64-bit mask).
pub const DYADIC_LEVEL_CAP: usize = 6;
/// Highest level whose full element structure is materialized.
pub const DYADIC_MATERIALIZE_CAP: usize = 3;

#[derive(Clone, Debug)]
pub struct DyadicAlgebra {
    pub level: usize,
    /// The atoms, each labelled with its measure.
    pub atoms: Structure,
}

pub fn builtin_dyadic_algebra(level: usize) -> Result<DyadicAlgebra> {
    if level > DYADIC_LEVEL_CAP {
        return Err(Error::CapExceeded { what: "dyadic level".into(), actual: level, cap: DYADIC_LEVEL_CAP });
    }
    let sig = Arc::new(Signature::new().invariant_label("mu"));
    let n = 1usize << level;
    let mut atoms = Structure::new(sig, n);
    let weight = Ratio::new(1i64, n as i64).to_string();
    for a in 0..n {
        atoms.set_label(a, "mu", weight.clone());
    }
    Ok(DyadicAlgebra { level, atoms })
}

impl DyadicAlgebra {
    pub fn atom_count(&self) -> usize {
        1 << self.level
    }

    /// Number of elements; only meaningful below level 6.
    pub fn element_count(&self) -> usize {
        1 << self.atom_count()
    }

    pub fn full(&self) -> usize {
        usize::MAX >> (usize::BITS as usize - self.atom_count())
    }

    pub fn is_element(&self, mask: usize) -> bool {
        mask & !self.full() == 0
    }

    /// The same event in the algebra of level `finer`: atom `a` becomes the
    /// block of atoms whose words start with the word of `a`.
    pub fn refine(&self, mask: usize, finer: usize) -> usize {
        assert!(finer >= self.level && finer <= DYADIC_LEVEL_CAP);
        let width = 1usize << (finer - self.level);
        let block = usize::MAX >> (usize::BITS as usize - width);
        (0..self.atom_count()).filter(|a| mask >> a & 1 == 1).fold(0, |m, a| m | block << (a * width))
    }

    /// Cells of the partition generated by `masks` (the atoms of the
    /// generated subalgebra), computed by splitting.
    pub fn cells(&self, masks: &[usize]) -> Vec<usize> {
        let mut cells = vec![self.full()];
        for &m in masks {
            cells = cells.into_iter().flat_map(|c| [c & m, c & !m]).filter(|&c| c != 0).collect();
        }
        cells
    }

    pub fn measure(&self, mask: usize) -> Ratio<i64> {
        Ratio::new(mask.count_ones() as i64, self.atom_count() as i64)
    }

    /// The event "bit `i` of the atom word is 1" (bit 0 is the first bit).
    pub fn bit_event(&self, i: usize) -> usize {
        let shift = self.level - 1 - i;
        (0..self.atom_count()).filter(|a| a >> shift & 1 == 1).fold(0, |m, a| m | 1 << a)
    }

    /// The four-element subalgebra generated by a bit event.
    pub fn bit_subalgebra(&self, i: usize) -> Vec<usize> {
        let e = self.bit_event(i);
        let mut v = vec![0, e, self.full() ^ e, self.full()];
        v.sort_unstable();
        v
    }

    pub fn element_signature() -> Arc<Signature> {
        Arc::new(
            Signature::new()
                .function("meet", 2)
                .function("join", 2)
                .function("compl", 1)
                .constant("zero")
                .constant("one")
                .invariant_label("measure"),
        )
    }

    /// The algebra as a first-order structure on its bitmask elements.
    pub fn elements(&self) -> Result<Structure> {
        if self.level > DYADIC_MATERIALIZE_CAP {
            return Err(Error::CapExceeded {
                what: "materialized dyadic level".into(),
                actual: self.level,
                cap: DYADIC_MATERIALIZE_CAP,
            });
        }
        let n = self.element_count();
        let mut s = Structure::new(Self::element_signature(), n);
        for x in 0..n {
            for y in 0..n {
                s.set_function(0, &[x, y], x & y);
                s.set_function(1, &[x, y], x | y);
            }
            s.set_function(2, &[x], self.full() ^ x);
            s.set_label(x, "measure", self.measure(x).to_string());
        }
        s.set_constant(0, 0);
        s.set_constant(1, self.full());
        Ok(s)
    }

    /// Atoms of the subalgebra generated by `masks`: the nonempty cells of
    /// the partition they induce.
    pub fn generated_atoms(&self, masks: &[usize]) -> Vec<usize> {
        let mut cells = std::collections::BTreeMap::<Vec<bool>, usize>::new();
        for a in 0..self.atom_count() {
            let key: Vec<bool> = masks.iter().map(|m| m >> a & 1 == 1).collect();
            *cells.entry(key).or_default() |= 1 << a;
        }
        cells.into_values().collect()
    }

    /// Elements of the subalgebra generated by `masks`, sorted.
    pub fn generated_subalgebra(&self, masks: &[usize]) -> Vec<usize> {
        let atoms = self.generated_atoms(masks);
        let mut out: Vec<usize> = (0..1usize << atoms.len())
            .map(|pick| atoms.iter().enumerate().filter(|(i, _)| pick >> i & 1 == 1).fold(0, |m, (_, a)| m | a))
            .collect();
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{Action, MaskAction, PermGroup};
    use crate::structures::{automorphism_group_with_cap, generated_substructure};

    #[test]
    fn sizes_and_measures() {
        let d1 = builtin_dyadic_algebra(1).unwrap();
        assert_eq!((d1.atom_count(), d1.element_count()), (2, 4));
        let d2 = builtin_dyadic_algebra(2).unwrap();
        assert_eq!(d2.atoms.label(0, "mu"), Some("1/4"));
        assert!(builtin_dyadic_algebra(7).is_err());
        assert_eq!(builtin_dyadic_algebra(6).unwrap().full(), usize::MAX);
        let a = builtin_dyadic_algebra(1).unwrap();
        assert_eq!(a.refine(0b10, 3), 0b1111_0000);
        assert!(builtin_dyadic_algebra(4).unwrap().elements().is_err());
    }

    #[test]
    fn bit_events() {
        let d2 = builtin_dyadic_algebra(2).unwrap();
        assert_eq!(d2.bit_event(0), 0b1100);
        assert_eq!(d2.bit_event(1), 0b1010);
        assert_eq!(d2.bit_subalgebra(0), vec![0, 0b0011, 0b1100, 0b1111]);
    }

    #[test]
    fn element_automorphisms_are_atom_permutations() {
        let d2 = builtin_dyadic_algebra(2).unwrap();
        let elems = d2.elements().unwrap();
        let auts = automorphism_group_with_cap(&elems, 16).unwrap();
        let s4 = PermGroup::symmetric(4);
        let induced: std::collections::BTreeSet<Vec<usize>> =
            s4.iter().map(|g| (0..16).map(|x| MaskAction.act(g, x)).collect()).collect();
        let found: std::collections::BTreeSet<Vec<usize>> = auts.iter().map(|g| g.images().to_vec()).collect();
        assert_eq!(found, induced);
        assert_eq!(automorphism_group_with_cap(&d2.atoms, 10).unwrap().order(), 24);
    }

    #[test]
    fn subalgebra_closure_matches_structure_closure() {
        let d2 = builtin_dyadic_algebra(2).unwrap();
        let elems = d2.elements().unwrap();
        for masks in [vec![0b0001], vec![0b0011, 0b0101], vec![]] {
            let (_, inc) = generated_substructure(&elems, &masks);
            assert_eq!(inc.map, d2.generated_subalgebra(&masks));
        }
    }
}
