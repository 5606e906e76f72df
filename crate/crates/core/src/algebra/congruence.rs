use std::collections::HashMap;

use super::{for_each_tuple, FiniteAlgebra};
use crate::error::{Error, Result};

/// A partition of the universe, stored as block labels in first-occurrence
/// order so that equal partitions have equal arrays.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Congruence {
    blocks: Vec<u32>,
    count: u32,
}

impl Congruence {
    pub fn from_labels<T: Copy + Eq + std::hash::Hash>(labels: &[T]) -> Self {
        let mut seen = HashMap::new();
        let blocks = labels
            .iter()
            .map(|l| {
                let next = seen.len() as u32;
                *seen.entry(*l).or_insert(next)
            })
            .collect();
        let count = seen.len() as u32;
        Congruence { blocks, count }
    }

    /// Like [`from_labels`](Self::from_labels) for labels below `len`.
    pub fn from_small_labels(labels: &[u32]) -> Self {
        let mut map = vec![u32::MAX; labels.len()];
        let mut count = 0;
        let blocks = labels
            .iter()
            .map(|&l| {
                let slot = &mut map[l as usize];
                if *slot == u32::MAX {
                    *slot = count;
                    count += 1;
                }
                *slot
            })
            .collect();
        Congruence { blocks, count }
    }

    pub fn identity(size: usize) -> Self {
        Congruence {
            blocks: (0..size as u32).collect(),
            count: size as u32,
        }
    }

    pub fn total(size: usize) -> Self {
        Congruence {
            blocks: vec![0; size],
            count: size.min(1) as u32,
        }
    }

    pub fn size(&self) -> usize {
        self.blocks.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.blocks
    }

    #[inline]
    pub fn block(&self, a: usize) -> usize {
        self.blocks[a] as usize
    }

    #[inline]
    pub fn related(&self, a: usize, b: usize) -> bool {
        self.blocks[a] == self.blocks[b]
    }

    pub fn num_blocks(&self) -> usize {
        self.count as usize
    }

    pub fn is_identity(&self) -> bool {
        self.num_blocks() == self.size()
    }

    pub fn is_total(&self) -> bool {
        self.num_blocks() <= 1
    }

    /// Elements of the block containing `a`.
    pub fn coset(&self, a: usize) -> Vec<usize> {
        let b = self.blocks[a];
        (0..self.size()).filter(|&x| self.blocks[x] == b).collect()
    }

    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (x, &b) in self.blocks.iter().enumerate() {
            out[b as usize].push(x);
        }
        out
    }

    /// `self ⊆ other`.
    pub fn refines(&self, other: &Congruence) -> bool {
        // each block of self must map into a single block of other
        let mut image = vec![u32::MAX; self.num_blocks()];
        for (x, &b) in self.blocks.iter().enumerate() {
            let slot = &mut image[b as usize];
            if *slot == u32::MAX {
                *slot = other.blocks[x];
            } else if *slot != other.blocks[x] {
                return false;
            }
        }
        true
    }

    pub fn join(&self, other: &Congruence) -> Congruence {
        let mut uf = UnionFind::from_partition(self);
        let mut first = vec![u32::MAX; other.num_blocks()];
        for (x, &b) in other.blocks.iter().enumerate() {
            let slot = &mut first[b as usize];
            if *slot == u32::MAX {
                *slot = x as u32;
            } else {
                uf.union(*slot as usize, x);
            }
        }
        uf.to_congruence()
    }

    pub fn meet(&self, other: &Congruence) -> Congruence {
        let pairs: Vec<(u32, u32)> = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(&a, &b)| (a, b))
            .collect();
        Congruence::from_labels(&pairs)
    }

    /// `(x, z) ∈ self ∘ other`: some `y` with `x self y` and `y other z`.
    pub fn composes(&self, other: &Congruence, x: usize, z: usize) -> bool {
        (0..self.size()).any(|y| self.related(x, y) && other.related(y, z))
    }

    /// Checks compatibility with every operation; returns a violating
    /// `(op name, u, v)` pair of tuples if any.
    pub fn compatibility_violation(
        &self,
        alg: &FiniteAlgebra,
    ) -> Option<(String, Vec<usize>, Vec<usize>)> {
        let sig = alg.signature();
        for id in sig.op_ids() {
            let arity = sig.op(id).arity;
            let mut found = None;
            for_each_tuple(alg.size(), arity, |u| {
                if found.is_some() {
                    return;
                }
                // vary one coordinate within its block
                for j in 0..arity {
                    for w in self.coset(u[j]) {
                        let mut v = u.to_vec();
                        v[j] = w;
                        if !self.related(alg.apply(id, u), alg.apply(id, &v)) {
                            found = Some((u.to_vec(), v));
                            return;
                        }
                    }
                }
            });
            if let Some((u, v)) = found {
                return Some((sig.op(id).name.clone(), u, v));
            }
        }
        None
    }

    /// Checked constructor: the labels must form a congruence of `alg`.
    pub fn new_checked<T: Copy + Eq + std::hash::Hash>(
        alg: &FiniteAlgebra,
        labels: &[T],
    ) -> Result<Self> {
        if labels.len() != alg.size() {
            return Err(Error::InvalidAlgebra("partition has the wrong length".into()));
        }
        let c = Congruence::from_labels(labels);
        if let Some((op, u, v)) = c.compatibility_violation(alg) {
            return Err(Error::InvalidAlgebra(format!(
                "partition not compatible with `{op}` at {u:?} / {v:?}"
            )));
        }
        Ok(c)
    }
}

pub(crate) struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    pub fn from_partition(c: &Congruence) -> Self {
        let mut first = vec![u32::MAX; c.num_blocks()];
        let mut parent = Vec::with_capacity(c.size());
        for (x, &b) in c.blocks.iter().enumerate() {
            let slot = &mut first[b as usize];
            if *slot == u32::MAX {
                *slot = x as u32;
            }
            parent.push(*slot);
        }
        UnionFind { parent }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }

    /// Returns true if two distinct classes were merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo as u32;
        true
    }

    pub fn to_congruence(&mut self) -> Congruence {
        let roots: Vec<u32> = (0..self.parent.len()).map(|x| self.find(x) as u32).collect();
        Congruence::from_small_labels(&roots)
    }
}

impl FiniteAlgebra {
    /// Smallest congruence containing `base` and the given pairs, closing
    /// under unary polynomials `f(c..., _, c...)` of every basic operation.
    pub fn congruence_generated(
        &self,
        base: Option<&Congruence>,
        pairs: &[(usize, usize)],
    ) -> Congruence {
        let n = self.size();
        let mut uf = match base {
            Some(b) => UnionFind::from_partition(b),
            None => UnionFind::new(n),
        };
        let mut queue: Vec<(usize, usize)> = Vec::new();
        for &(a, b) in pairs {
            if uf.union(a, b) {
                queue.push((a, b));
            }
        }
        let sig = self.signature().clone();
        let ops: Vec<(usize, &[u32])> = sig
            .op_ids()
            .map(|id| (sig.op(id).arity, self.table(id)))
            .filter(|(arity, _)| *arity > 0)
            .collect();
        let mut args = Vec::new();
        while let Some((u, v)) = queue.pop() {
            for &(arity, table) in &ops {
                match arity {
                    1 => {
                        let (fu, fv) = (table[u] as usize, table[v] as usize);
                        if uf.union(fu, fv) {
                            queue.push((fu, fv));
                        }
                    }
                    2 => {
                        for c in 0..n {
                            let (fu, fv) = (table[u * n + c] as usize, table[v * n + c] as usize);
                            if uf.union(fu, fv) {
                                queue.push((fu, fv));
                            }
                            let (fu, fv) = (table[c * n + u] as usize, table[c * n + v] as usize);
                            if uf.union(fu, fv) {
                                queue.push((fu, fv));
                            }
                        }
                    }
                    _ => {
                        for j in 0..arity {
                            for_each_tuple(n, arity - 1, |rest| {
                                args.clear();
                                args.extend_from_slice(&rest[..j]);
                                args.push(u);
                                args.extend_from_slice(&rest[j..]);
                                let fu = self.index_apply(table, &args);
                                args[j] = v;
                                let fv = self.index_apply(table, &args);
                                if uf.union(fu, fv) {
                                    queue.push((fu, fv));
                                }
                            });
                        }
                    }
                }
            }
        }
        uf.to_congruence()
    }

    fn index_apply(&self, table: &[u32], args: &[usize]) -> usize {
        let n = self.size();
        table[args.iter().fold(0, |acc, &a| acc * n + a)] as usize
    }

    /// Θ(a, b).
    pub fn principal_congruence(&self, a: usize, b: usize) -> Congruence {
        self.congruence_generated(None, &[(a, b)])
    }

    /// All congruences, as the join-closure of the principal ones.
    pub fn congruence_lattice(&self, cap: usize) -> Result<CongruenceLattice> {
        let n = self.size();
        let mut principal: Vec<Congruence> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for a in 0..n {
            for b in a + 1..n {
                let c = self.principal_congruence(a, b);
                if seen.insert(c.clone()) {
                    principal.push(c);
                    if principal.len() > cap {
                        return Err(Error::cap("congruences", cap));
                    }
                }
            }
        }
        CongruenceLattice::join_closure(n, principal, cap)
    }

    /// The quotient algebra and the natural epimorphism (element ↦ block).
    pub fn quotient(&self, theta: &Congruence) -> (FiniteAlgebra, Vec<usize>) {
        let classes = theta.classes();
        let reps: Vec<usize> = classes.iter().map(|c| c[0]).collect();
        let names = self.names().map(|names| {
            classes
                .iter()
                .map(|c| {
                    if c.len() == 1 {
                        names[c[0]].clone()
                    } else {
                        let parts: Vec<&str> = c.iter().map(|&x| names[x].as_str()).collect();
                        format!("{{{}}}", parts.join(","))
                    }
                })
                .collect()
        });
        let q = FiniteAlgebra::from_fn(self.signature().clone(), reps.len(), names, |op, args| {
            let outer: Vec<usize> = args.iter().map(|&b| reps[b]).collect();
            theta.block(self.apply(op, &outer))
        })
        .expect("quotient tables are well formed");
        let map = (0..self.size()).map(|x| theta.block(x)).collect();
        (q, map)
    }
}

/// A finite lattice of congruences sorted from finest to coarsest.
#[derive(Clone, Debug)]
pub struct CongruenceLattice {
    elems: Vec<Congruence>,
    index: HashMap<Congruence, usize>,
}

impl CongruenceLattice {
    /// Closes `gens` (together with Δ) under joins.
    pub fn join_closure(size: usize, gens: Vec<Congruence>, cap: usize) -> Result<Self> {
        let mut elems = vec![Congruence::identity(size)];
        let mut index: HashMap<Congruence, usize> = HashMap::new();
        index.insert(elems[0].clone(), 0);
        let mut gens_dedup = Vec::new();
        for g in gens {
            if !index.contains_key(&g) {
                index.insert(g.clone(), elems.len());
                elems.push(g.clone());
                gens_dedup.push(g);
            }
        }
        let mut done = 0;
        while done < elems.len() {
            let current = elems[done].clone();
            done += 1;
            for g in &gens_dedup {
                if g.refines(&current) {
                    continue;
                }
                let j = current.join(g);
                if !index.contains_key(&j) {
                    if elems.len() >= cap {
                        return Err(Error::cap("congruences", cap));
                    }
                    index.insert(j.clone(), elems.len());
                    elems.push(j);
                }
            }
        }
        elems.sort_by(|a, b| b.num_blocks().cmp(&a.num_blocks()).then_with(|| a.cmp(b)));
        let index = elems.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        Ok(CongruenceLattice { elems, index })
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn get(&self, i: usize) -> &Congruence {
        &self.elems[i]
    }

    pub fn elements(&self) -> &[Congruence] {
        &self.elems
    }

    pub fn index_of(&self, c: &Congruence) -> Option<usize> {
        self.index.get(c).copied()
    }

    pub fn bottom(&self) -> usize {
        0
    }

    pub fn top(&self) -> usize {
        self.elems.len() - 1
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.elems[i].refines(&self.elems[j])
    }

    pub fn join(&self, i: usize, j: usize) -> usize {
        self.index[&self.elems[i].join(&self.elems[j])]
    }

    pub fn meet(&self, i: usize, j: usize) -> usize {
        self.index[&self.elems[i].meet(&self.elems[j])]
    }

    /// Minimal non-bottom elements.
    pub fn atoms(&self) -> Vec<usize> {
        (1..self.len())
            .filter(|&i| !(1..self.len()).any(|j| j != i && self.leq(j, i)))
            .collect()
    }
}
