use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;

use super::{Congruence, FiniteAlgebra};
use crate::error::{Error, Result};

/// A 1-coset together with the least congruence having it as 1-coset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Filter {
    members: FixedBitSet,
    congruence: Congruence,
}

impl Filter {
    fn from_congruence(congruence: Congruence, one: usize) -> Self {
        let mut members = FixedBitSet::with_capacity(congruence.size());
        for a in congruence.coset(one) {
            members.insert(a);
        }
        Filter {
            members,
            congruence,
        }
    }

    pub fn members(&self) -> &FixedBitSet {
        &self.members
    }

    pub fn contains(&self, a: usize) -> bool {
        self.members.contains(a)
    }

    pub fn len(&self) -> usize {
        self.members.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn congruence(&self) -> &Congruence {
        &self.congruence
    }

    pub fn is_subset(&self, other: &Filter) -> bool {
        self.members.is_subset(&other.members)
    }

    /// Size of the quotient by the underlying congruence.
    pub fn quotient_size(&self) -> usize {
        self.congruence.num_blocks()
    }
}

/// A meet-irreducible filter and its unique upper cover, both as indices
/// into the owning [`FilterLattice`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeetIrreducible {
    pub eta: usize,
    pub eta_plus: usize,
}

/// All filters, i.e. the join-closure of the principal filters `[a)`.
///
/// Elements are sorted by size, then by members; index 0 is `{1}`.
#[derive(Clone, Debug)]
pub struct FilterLattice {
    filters: Vec<Filter>,
    index: HashMap<FixedBitSet, usize>,
    principal: Vec<usize>,
    /// `join_principal[f][a]` is the index of `f ∨ [a)`.
    join_principal: Vec<Vec<u32>>,
    irreducibles: Vec<MeetIrreducible>,
}

impl FiniteAlgebra {
    /// Θ(1, a) for every element `a`.
    pub fn principal_filters(&self) -> Vec<Congruence> {
        (0..self.size())
            .into_par_iter()
            .map(|a| self.principal_congruence(self.one(), a))
            .collect()
    }

    pub fn filter_lattice(&self, cap: usize) -> Result<FilterLattice> {
        FilterLattice::new(self, cap)
    }

    /// 1-coset of the congruence generated by `(a, 1)` for `a` in `gens`.
    pub fn filter_generated(&self, gens: &[usize]) -> Filter {
        let pairs: Vec<(usize, usize)> = gens.iter().map(|&a| (a, self.one())).collect();
        Filter::from_congruence(self.congruence_generated(None, &pairs), self.one())
    }
}

/// 1-coset of `a ∨ b`, using `parent` as union-find scratch space.
fn join_coset(a: &Congruence, b: &Congruence, one: usize, parent: &mut [u32]) -> FixedBitSet {
    let n = a.size();
    let mut first = vec![u32::MAX; a.num_blocks().max(b.num_blocks())];
    for (x, &l) in a.labels().iter().enumerate() {
        let slot = &mut first[l as usize];
        if *slot == u32::MAX {
            *slot = x as u32;
        }
        parent[x] = *slot;
    }
    fn find(parent: &mut [u32], mut x: usize) -> usize {
        while parent[x] as usize != x {
            let p = parent[x] as usize;
            parent[x] = parent[p];
            x = p;
        }
        x
    }
    first.iter_mut().for_each(|s| *s = u32::MAX);
    for (x, &l) in b.labels().iter().enumerate() {
        let slot = &mut first[l as usize];
        if *slot == u32::MAX {
            *slot = x as u32;
        } else {
            let (r1, r2) = (find(parent, *slot as usize), find(parent, x));
            if r1 != r2 {
                parent[r1.max(r2)] = r1.min(r2) as u32;
            }
        }
    }
    let root = find(parent, one);
    let mut members = FixedBitSet::with_capacity(n);
    for x in 0..n {
        if find(parent, x) == root {
            members.insert(x);
        }
    }
    members
}

impl FilterLattice {
    pub fn new(alg: &FiniteAlgebra, cap: usize) -> Result<Self> {
        let n = alg.size();
        let one = alg.one();
        let principals = alg.principal_filters();

        let mut filters: Vec<Filter> = Vec::new();
        let mut index: HashMap<FixedBitSet, usize> = HashMap::new();
        let intern = |f: Filter, filters: &mut Vec<Filter>, index: &mut HashMap<FixedBitSet, usize>| -> Result<usize> {
            if let Some(&i) = index.get(&f.members) {
                return Ok(i);
            }
            if filters.len() >= cap {
                return Err(Error::cap("filters", cap));
            }
            index.insert(f.members.clone(), filters.len());
            filters.push(f);
            Ok(filters.len() - 1)
        };

        let mut principal = Vec::with_capacity(n);
        intern(Filter::from_congruence(Congruence::identity(n), one), &mut filters, &mut index)?;
        for c in &principals {
            principal.push(intern(Filter::from_congruence(c.clone(), one), &mut filters, &mut index)?);
        }

        let mut join_principal: Vec<Vec<u32>> = Vec::new();
        let mut done = 0;
        let mut parent = vec![0u32; n];
        while done < filters.len() {
            let f = filters[done].clone();
            let mut row = Vec::with_capacity(n);
            for (a, theta) in principals.iter().enumerate() {
                if f.contains(a) {
                    row.push(done as u32);
                    continue;
                }
                let members = join_coset(&f.congruence, theta, one, &mut parent);
                let j = match index.get(&members) {
                    Some(&j) => j,
                    None => {
                        let c = f.congruence.join(theta);
                        intern(Filter { members, congruence: c }, &mut filters, &mut index)?
                    }
                };
                row.push(j as u32);
            }
            join_principal.push(row);
            done += 1;
        }

        // renumber by (size, members)
        let mut order: Vec<usize> = (0..filters.len()).collect();
        order.sort_by(|&x, &y| {
            filters[x]
                .len()
                .cmp(&filters[y].len())
                .then_with(|| filters[x].members.ones().cmp(filters[y].members.ones()))
        });
        let mut rank = vec![0u32; filters.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new as u32;
        }
        let filters: Vec<Filter> = order.iter().map(|&o| filters[o].clone()).collect();
        let join_principal: Vec<Vec<u32>> = order
            .iter()
            .map(|&o| join_principal[o].iter().map(|&j| rank[j as usize]).collect())
            .collect();
        let principal = principal.iter().map(|&p| rank[p] as usize).collect();
        let index = filters
            .iter()
            .enumerate()
            .map(|(i, f)| (f.members.clone(), i))
            .collect();

        let mut lattice = FilterLattice {
            filters,
            index,
            principal,
            join_principal,
            irreducibles: Vec::new(),
        };
        lattice.irreducibles = (0..lattice.len())
            .filter_map(|eta| {
                let covers = lattice.upper_covers(eta);
                (covers.len() == 1).then(|| MeetIrreducible {
                    eta,
                    eta_plus: covers[0],
                })
            })
            .collect();
        Ok(lattice)
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn get(&self, i: usize) -> &Filter {
        &self.filters[i]
    }

    pub fn filters(&self) -> &[Filter] {
        &self.filters
    }

    pub fn index_of(&self, members: &FixedBitSet) -> Option<usize> {
        self.index.get(members).copied()
    }

    /// Index of `[a)`.
    pub fn principal(&self, a: usize) -> usize {
        self.principal[a]
    }

    pub fn join_principal(&self, f: usize, a: usize) -> usize {
        self.join_principal[f][a] as usize
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.filters[i].is_subset(&self.filters[j])
    }

    pub fn join(&self, i: usize, j: usize) -> usize {
        self.filters[j]
            .members
            .ones()
            .fold(i, |acc, a| self.join_principal(acc, a))
    }

    pub fn top(&self) -> usize {
        self.filters.len() - 1
    }

    /// Minimal filters strictly above `f`.
    pub fn upper_covers(&self, f: usize) -> Vec<usize> {
        let mut cands: Vec<usize> = self.join_principal[f]
            .iter()
            .map(|&j| j as usize)
            .filter(|&j| j != f)
            .collect();
        cands.sort_unstable();
        cands.dedup();
        // indices grow with size, so a candidate is minimal iff no earlier
        // minimal candidate lies below it
        let mut minimal: Vec<usize> = Vec::new();
        for c in cands {
            if !minimal.iter().any(|&m| self.leq(m, c)) {
                minimal.push(c);
            }
        }
        minimal
    }

    /// Meet-irreducible filters with their covers, in increasing index order.
    pub fn meet_irreducibles(&self) -> &[MeetIrreducible] {
        &self.irreducibles
    }

    /// Number of filters on a longest chain from `{1}` up to `f`.
    pub fn height(&self, f: usize) -> usize {
        // indices are sorted by size, so a linear pass suffices
        let mut h = vec![0usize; f + 1];
        for i in 1..=f {
            if !self.leq(i, f) {
                continue;
            }
            h[i] = (0..i)
                .filter(|&j| self.leq(j, i) && self.filters[j].len() < self.filters[i].len())
                .map(|j| h[j] + 1)
                .max()
                .unwrap_or(0);
        }
        h[f]
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn b2_filters() {
        let b = b2();
        let lat = b.filter_lattice(100).unwrap();
        assert_eq!(lat.len(), 2);
        assert_eq!(
            lat.meet_irreducibles(),
            &[MeetIrreducible { eta: 0, eta_plus: 1 }]
        );
        assert_eq!(lat.get(1).len(), 2);
    }

    #[test]
    fn boolean_square_has_three_irreducibles() {
        // oracle: subgroups of Z2 x Z2 containing the identity element 1
        let b = b2();
        let p = FiniteAlgebra::product(&[&b, &b]).unwrap();
        let lat = p.filter_lattice(100).unwrap();
        assert_eq!(lat.len(), 5);
        let irr = lat.meet_irreducibles();
        assert_eq!(irr.len(), 3);
        for m in irr {
            assert_eq!(lat.get(m.eta).quotient_size(), 2);
            assert_eq!(m.eta_plus, lat.top());
        }
    }

    #[test]
    fn h5_filters_and_height() {
        let h = h5();
        let lat = h.filter_lattice(100).unwrap();
        // filters of a finite Heyting algebra are the principal ones
        assert_eq!(lat.len(), 5);
        let mono = lat.meet_irreducibles()[0];
        assert_eq!(mono.eta, 0);
        let plus: Vec<usize> = lat.get(mono.eta_plus).members().ones().collect();
        assert_eq!(plus, vec![3, 4]);
        assert_eq!(lat.height(lat.top()), 3);
        assert_eq!(lat.height(0), 0);
        for a in 0..5 {
            assert!(lat.get(lat.principal(a)).contains(a));
        }
    }
}
