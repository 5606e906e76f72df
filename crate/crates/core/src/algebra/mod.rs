//! Finite algebras given by operation tables over `{0, ..., n-1}`.

mod congruence;
mod filter;
mod hom;
mod json;
mod structure;

pub use congruence::{Congruence, CongruenceLattice};
pub use filter::{Filter, FilterLattice, MeetIrreducible};
pub use hom::Homomorphism;
pub use json::AlgebraFile;
pub use structure::StructureWitness;

use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::term::{OpId, Signature, Term};

/// Default bound on the number of congruences (or filters) enumerated.
pub const DEFAULT_MAX_CONGRUENCES: usize = 5000;

#[derive(Clone, Debug)]
pub struct FiniteAlgebra {
    sig: Arc<Signature>,
    size: usize,
    one: usize,
    tables: Vec<Vec<u32>>,
    names: Option<Vec<String>>,
}

impl PartialEq for FiniteAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.one == other.one && self.tables == other.tables
    }
}

impl Eq for FiniteAlgebra {}

/// Row-major index of an argument tuple.
fn table_index(size: usize, args: &[usize]) -> usize {
    args.iter().fold(0, |acc, &a| acc * size + a)
}

impl FiniteAlgebra {
    /// Tables are indexed by `OpId` and stored row-major.
    pub fn new(
        sig: Arc<Signature>,
        size: usize,
        tables: Vec<Vec<u32>>,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidAlgebra("empty universe".into()));
        }
        if tables.len() != sig.ops().len() {
            return Err(Error::InvalidAlgebra(format!(
                "expected {} tables, found {}",
                sig.ops().len(),
                tables.len()
            )));
        }
        for (decl, table) in sig.ops().iter().zip(&tables) {
            let expected = size
                .checked_pow(decl.arity as u32)
                .ok_or_else(|| Error::InvalidAlgebra(format!("table for `{}` too large", decl.name)))?;
            if table.len() != expected {
                return Err(Error::InvalidAlgebra(format!(
                    "table for `{}` has {} entries, expected {}",
                    decl.name,
                    table.len(),
                    expected
                )));
            }
            if let Some(bad) = table.iter().find(|&&v| v as usize >= size) {
                return Err(Error::InvalidAlgebra(format!(
                    "table for `{}` contains {} outside the universe",
                    decl.name, bad
                )));
            }
        }
        if let Some(names) = &names {
            if names.len() != size {
                return Err(Error::InvalidAlgebra("wrong number of element names".into()));
            }
        }
        let one = tables[sig.one().index()][0] as usize;
        Ok(FiniteAlgebra {
            sig,
            size,
            one,
            tables,
            names,
        })
    }

    /// Builds the tables by calling `f(op, args)` on every tuple.
    pub fn from_fn(
        sig: Arc<Signature>,
        size: usize,
        names: Option<Vec<String>>,
        mut f: impl FnMut(OpId, &[usize]) -> usize,
    ) -> Result<Self> {
        let mut tables = Vec::with_capacity(sig.ops().len());
        for id in sig.op_ids() {
            let arity = sig.op(id).arity;
            let mut table = Vec::with_capacity(size.pow(arity as u32));
            for_each_tuple(size, arity, |args| table.push(f(id, args) as u32));
            tables.push(table);
        }
        FiniteAlgebra::new(sig, size, tables, names)
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn one(&self) -> usize {
        self.one
    }

    pub fn table(&self, op: OpId) -> &[u32] {
        &self.tables[op.index()]
    }

    pub fn tables(&self) -> &[Vec<u32>] {
        &self.tables
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn element_name(&self, a: usize) -> String {
        match &self.names {
            Some(n) => n[a].clone(),
            None => a.to_string(),
        }
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.size {
            return Err(Error::InvalidAlgebra("wrong number of element names".into()));
        }
        self.names = Some(names);
        Ok(self)
    }

    #[inline]
    pub fn apply(&self, op: OpId, args: &[usize]) -> usize {
        self.tables[op.index()][table_index(self.size, args)] as usize
    }

    #[inline]
    pub fn apply2(&self, op: OpId, a: usize, b: usize) -> usize {
        self.tables[op.index()][a * self.size + b] as usize
    }

    pub fn constant(&self, op: OpId) -> usize {
        self.tables[op.index()][0] as usize
    }

    /// Value of `t` with `x_i` interpreted as `assignment[i-1]`.
    pub fn evaluate(&self, t: &Term, assignment: &[usize]) -> Result<usize> {
        if let Some(v) = t.variables().into_iter().find(|&v| v as usize > assignment.len()) {
            return Err(Error::MissingAssignment(v));
        }
        Ok(self.eval(t, assignment))
    }

    /// Like [`evaluate`](Self::evaluate) without the coverage check.
    pub fn eval(&self, t: &Term, assignment: &[usize]) -> usize {
        match t {
            Term::Var(i) => assignment[*i as usize - 1],
            Term::App(op, args) => match args.len() {
                0 => self.constant(*op),
                1 => self.tables[op.index()][self.eval(&args[0], assignment)] as usize,
                2 => {
                    let a = self.eval(&args[0], assignment);
                    let b = self.eval(&args[1], assignment);
                    self.apply2(*op, a, b)
                }
                _ => {
                    let vals: Vec<usize> = args.iter().map(|a| self.eval(a, assignment)).collect();
                    self.apply(*op, &vals)
                }
            },
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.size == 1
    }

    /// Smallest subuniverse containing `gens` and every constant.
    pub fn subuniverse(&self, gens: &[usize]) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.size);
        let mut members = Vec::new();
        let push = |set: &mut FixedBitSet, members: &mut Vec<usize>, a: usize| {
            if !set.put(a) {
                members.push(a);
            }
        };
        for id in self.sig.constants() {
            push(&mut set, &mut members, self.constant(id));
        }
        for &g in gens {
            push(&mut set, &mut members, g);
        }
        let mut done = 0;
        while done < members.len() {
            let frontier = members.len();
            for id in self.sig.op_ids() {
                let arity = self.sig.op(id).arity;
                if arity == 0 {
                    continue;
                }
                // tuples over the current members with at least one new entry
                let current: Vec<usize> = members[..frontier].to_vec();
                for_each_tuple(current.len(), arity, |idx| {
                    if idx.iter().all(|&k| k < done) {
                        return;
                    }
                    let args: Vec<usize> = idx.iter().map(|&k| current[k]).collect();
                    let v = self.apply(id, &args);
                    push(&mut set, &mut members, v);
                });
            }
            done = frontier;
        }
        set
    }

    /// The subalgebra on a subuniverse, elements renumbered in increasing
    /// order. Returns the algebra and the embedding.
    pub fn subalgebra(&self, universe: &FixedBitSet) -> Result<(FiniteAlgebra, Vec<usize>)> {
        let embed: Vec<usize> = universe.ones().collect();
        let mut back = vec![usize::MAX; self.size];
        for (i, &a) in embed.iter().enumerate() {
            back[a] = i;
        }
        let names = self
            .names
            .as_ref()
            .map(|n| embed.iter().map(|&a| n[a].clone()).collect());
        let mut closed = true;
        let sub = FiniteAlgebra::from_fn(self.sig.clone(), embed.len(), names, |op, args| {
            let outer: Vec<usize> = args.iter().map(|&a| embed[a]).collect();
            let v = back[self.apply(op, &outer)];
            if v == usize::MAX {
                closed = false;
                0
            } else {
                v
            }
        })?;
        if !closed {
            return Err(Error::InvalidAlgebra("subset is not a subuniverse".into()));
        }
        Ok((sub, embed))
    }

    /// All subuniverses, found by closing every subset of a greedy
    /// generating pool. Bounded by `cap` subsets examined.
    pub fn subuniverses(&self, cap: usize) -> Result<Vec<FixedBitSet>> {
        if self.size >= usize::BITS as usize || (1usize << self.size) > cap {
            return Err(Error::cap("subsets enumerated for subalgebras", cap));
        }
        let mut seen = std::collections::BTreeSet::new();
        for mask in 0usize..(1 << self.size) {
            let gens: Vec<usize> = (0..self.size).filter(|i| mask >> i & 1 == 1).collect();
            let s = self.subuniverse(&gens);
            seen.insert(s.ones().collect::<Vec<_>>());
        }
        Ok(seen
            .into_iter()
            .map(|v| {
                let mut b = FixedBitSet::with_capacity(self.size);
                v.into_iter().for_each(|i| b.insert(i));
                b
            })
            .collect())
    }

    /// Direct product; elements are tuples in mixed radix with the first
    /// factor most significant.
    pub fn product(factors: &[&FiniteAlgebra]) -> Result<FiniteAlgebra> {
        let first = factors
            .first()
            .ok_or_else(|| Error::InvalidAlgebra("empty product".into()))?;
        let sig = first.sig.clone();
        let sizes: Vec<usize> = factors.iter().map(|a| a.size).collect();
        let size: usize = sizes.iter().product();
        let decode = |mut x: usize| {
            let mut coords = vec![0; sizes.len()];
            for k in (0..sizes.len()).rev() {
                coords[k] = x % sizes[k];
                x /= sizes[k];
            }
            coords
        };
        let encode = |coords: &[usize]| coords.iter().zip(&sizes).fold(0, |acc, (&c, &s)| acc * s + c);
        let names = if factors.iter().all(|a| a.names.is_some()) {
            Some(
                (0..size)
                    .map(|x| {
                        let parts: Vec<String> = decode(x)
                            .iter()
                            .zip(factors)
                            .map(|(&c, a)| a.element_name(c))
                            .collect();
                        format!("({})", parts.join(","))
                    })
                    .collect(),
            )
        } else {
            None
        };
        FiniteAlgebra::from_fn(sig, size, names, |op, args| {
            let decoded: Vec<Vec<usize>> = args.iter().map(|&a| decode(a)).collect();
            let coords: Vec<usize> = factors
                .iter()
                .enumerate()
                .map(|(k, alg)| {
                    let local: Vec<usize> = decoded.iter().map(|d| d[k]).collect();
                    alg.apply(op, &local)
                })
                .collect();
            encode(&coords)
        })
    }

    /// Does every operation keep `set` closed? Returns the first violation.
    pub fn closed_under_ops(&self, set: &FixedBitSet) -> Option<(OpId, Vec<usize>)> {
        let members: Vec<usize> = set.ones().collect();
        for id in self.sig.op_ids() {
            let arity = self.sig.op(id).arity;
            let mut found = None;
            for_each_tuple(members.len(), arity, |idx| {
                if found.is_some() {
                    return;
                }
                let args: Vec<usize> = idx.iter().map(|&k| members[k]).collect();
                if !set.contains(self.apply(id, &args)) {
                    found = Some(args);
                }
            });
            if let Some(args) = found {
                return Some((id, args));
            }
        }
        None
    }
}

/// Calls `f` on every tuple in `{0..base}^len`, last position fastest.
pub fn for_each_tuple(base: usize, len: usize, mut f: impl FnMut(&[usize])) {
    let mut tuple = vec![0usize; len];
    if len > 0 && base == 0 {
        return;
    }
    loop {
        f(&tuple);
        let mut k = len;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            tuple[k] += 1;
            if tuple[k] < base {
                break;
            }
            tuple[k] = 0;
        }
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn h5_counterexample_values() {
        let h = h5();
        let sig = h.signature().clone();
        let t = sig.parse("x2 j(x1, i(x1, 0))").unwrap();
        let (a, c, one) = (1, 3, 4);
        assert_eq!(h.evaluate(&t, &[a, one]).unwrap(), c);
        let t00 = sig.parse("(x2 j(x1, i(x1, 0))) 0 0").unwrap();
        assert_eq!(h.evaluate(&t00, &[a, one]).unwrap(), one);
    }

    #[test]
    fn xx_is_one() {
        let h = h5();
        let t = h.signature().parse("x1 x1").unwrap();
        for a in 0..5 {
            assert_eq!(h.evaluate(&t, &[a]).unwrap(), h.one());
        }
        assert_eq!(
            h.evaluate(&t, &[]).unwrap_err(),
            Error::MissingAssignment(1)
        );
    }

    #[test]
    fn product_and_subuniverse() {
        let b = b2();
        let p = FiniteAlgebra::product(&[&b, &b]).unwrap();
        assert_eq!(p.size(), 4);
        assert_eq!(p.one(), 3);
        assert_eq!(p.subuniverse(&[]).count_ones(..), 1);
        assert_eq!(p.subuniverse(&[0]).count_ones(..), 2);
        assert_eq!(p.subuniverse(&[1, 2]).count_ones(..), 4);
        let h = h5();
        // {0, a, b, 1} is closed under → and ∧ but not ∨
        let mut s = FixedBitSet::with_capacity(5);
        [0, 1, 2, 4].into_iter().for_each(|i| s.insert(i));
        let (op, args) = h.closed_under_ops(&s).unwrap();
        assert_eq!(h.signature().op(op).name, "j");
        assert_eq!(h.apply(op, &args), 3);
    }
}
