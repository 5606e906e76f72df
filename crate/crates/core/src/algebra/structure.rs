use serde::Serialize;

use super::{Congruence, FiniteAlgebra};
use crate::error::Result;

/// Why an algebra fails one of the Fregean structure checks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructureWitness {
    /// Two distinct congruences with the same 1-coset.
    NotOneRegular { alpha: Vec<u32>, beta: Vec<u32> },
    /// Distinct elements generating the same congruence with `1`.
    NotOrderable { a: usize, b: usize },
    /// `(x, z)` lies in `alpha ∘ beta` but not in `beta ∘ alpha`.
    NotPermuting {
        alpha: Vec<u32>,
        beta: Vec<u32>,
        x: usize,
        z: usize,
    },
}

impl FiniteAlgebra {
    pub fn check_one_regular(&self, cap: usize) -> Result<Option<StructureWitness>> {
        let lat = self.congruence_lattice(cap)?;
        let mut seen: std::collections::HashMap<Vec<usize>, usize> = Default::default();
        for (i, c) in lat.elements().iter().enumerate() {
            if let Some(&j) = seen.get(&c.coset(self.one())) {
                return Ok(Some(StructureWitness::NotOneRegular {
                    alpha: lat.get(j).labels().to_vec(),
                    beta: c.labels().to_vec(),
                }));
            }
            seen.insert(c.coset(self.one()), i);
        }
        Ok(None)
    }

    pub fn check_congruence_orderable(&self) -> Option<StructureWitness> {
        let principal = self.principal_filters();
        let mut seen: std::collections::HashMap<&Congruence, usize> = Default::default();
        for (a, c) in principal.iter().enumerate() {
            if let Some(&b) = seen.get(c) {
                return Some(StructureWitness::NotOrderable { a: b, b: a });
            }
            seen.insert(c, a);
        }
        None
    }

    /// Checks `α ∘ β = β ∘ α` for every pair of congruences.
    pub fn check_permuting(&self, cap: usize) -> Result<Option<StructureWitness>> {
        let lat = self.congruence_lattice(cap)?;
        let elems = lat.elements();
        let n = self.size();
        for (i, alpha) in elems.iter().enumerate() {
            for beta in &elems[i + 1..] {
                for x in 0..n {
                    for z in 0..n {
                        let ab = alpha.composes(beta, x, z);
                        if ab != beta.composes(alpha, x, z) {
                            let (alpha, beta) = if ab { (alpha, beta) } else { (beta, alpha) };
                            return Ok(Some(StructureWitness::NotPermuting {
                                alpha: alpha.labels().to_vec(),
                                beta: beta.labels().to_vec(),
                                x,
                                z,
                            }));
                        }
                    }
                }
            }
        }
        Ok(None)
    }

    /// The largest non-unit element `∗` and the monolith, if the algebra is
    /// subdirectly irreducible.
    ///
    /// On congruence orderable algebras `a ≤ b` iff `Θ(1,b) ⊆ Θ(1,a)`, so
    /// `∗` is the element whose principal congruence lies below all others.
    /// Otherwise the congruence lattice is searched for a unique atom.
    pub fn subdirectly_irreducible(&self) -> Option<(usize, Congruence)> {
        if self.size() < 2 {
            return None;
        }
        let one = self.one();
        if self.check_congruence_orderable().is_none() {
            let principal = self.principal_filters();
            let star = (0..self.size()).filter(|&a| a != one).find(|&a| {
                (0..self.size())
                    .filter(|&b| b != one)
                    .all(|b| principal[a].refines(&principal[b]))
            })?;
            return Some((star, principal[star].clone()));
        }
        let lat = self.congruence_lattice(super::DEFAULT_MAX_CONGRUENCES).ok()?;
        let atoms = lat.atoms();
        if atoms.len() != 1 {
            return None;
        }
        let mono = lat.get(atoms[0]).clone();
        let star = mono.coset(one).into_iter().find(|&a| a != one)?;
        Some((star, mono))
    }
}
