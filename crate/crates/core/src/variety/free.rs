use rustc_hash::FxHashMap;

use super::VarietyContext;
use crate::algebra::{for_each_tuple, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::term::{OpId, Term};

/// The free algebra `F_n` of `Var(K)`, with elements represented by their
/// values at every assignment of `x1..xn` into every generator.
///
/// Coordinates are grouped by generator, assignments enumerated with the
/// last variable fastest. Element 0 is `1`, followed by the remaining
/// constants and then `x1..xn` (when distinct).
#[derive(Clone, Debug)]
pub struct FreeAlgebra {
    n: usize,
    width: usize,
    vectors: Vec<u8>,
    reps: Vec<Term>,
    rep_sizes: Vec<usize>,
    defs: Vec<Definition>,
    generators: Vec<usize>,
    index: VectorIndex,
    algebra: FiniteAlgebra,
    /// generator owning each coordinate, and the assignment it encodes
    coords: Vec<(usize, Vec<usize>)>,
}

/// How an element was first reached: `x_i`, or an operation applied to
/// earlier elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Definition {
    Var(usize),
    App(OpId, Vec<u32>),
}

/// Table entry placeholder while the owning level is still open.
const PENDING: u32 = 1 << 31;
const UNSET: u32 = u32::MAX;
/// Largest table (entries per operation) the builder will allocate.
const MAX_TABLE: usize = 1 << 28;

struct Candidate {
    text: String,
    op: OpId,
    args: Vec<u32>,
}

/// Growable operation table, filled while the universe is still growing.
enum Partial {
    Const,
    Unary(Vec<u32>),
    Binary(Vec<Vec<u32>>),
    Wide(FxHashMap<Vec<u32>, u32>),
}

impl Partial {
    fn new(arity: usize) -> Self {
        match arity {
            0 => Partial::Const,
            1 => Partial::Unary(Vec::new()),
            2 => Partial::Binary(Vec::new()),
            _ => Partial::Wide(FxHashMap::default()),
        }
    }

    fn set(&mut self, args: &[u32], value: u32) {
        fn put(row: &mut Vec<u32>, i: usize, value: u32) {
            if row.len() <= i {
                row.resize(i + 1, UNSET);
            }
            row[i] = value;
        }
        match self {
            Partial::Const => {}
            Partial::Unary(row) => put(row, args[0] as usize, value),
            Partial::Binary(rows) => {
                let q = args[0] as usize;
                if rows.len() <= q {
                    rows.resize_with(q + 1, Vec::new);
                }
                put(&mut rows[q], args[1] as usize, value)
            }
            Partial::Wide(map) => {
                map.insert(args.to_vec(), value);
            }
        }
    }

    fn get_mut(&mut self, args: &[u32]) -> &mut u32 {
        match self {
            Partial::Const => unreachable!("constants are not recorded"),
            Partial::Unary(row) => &mut row[args[0] as usize],
            Partial::Binary(rows) => &mut rows[args[0] as usize][args[1] as usize],
            Partial::Wide(map) => map.get_mut(args).expect("recorded entry"),
        }
    }

    fn finish(self, size: usize, arity: usize) -> Vec<u32> {
        match self {
            Partial::Const => Vec::new(),
            Partial::Unary(mut row) => {
                row.resize(size, UNSET);
                row
            }
            Partial::Binary(rows) => {
                let mut table = Vec::with_capacity(size * size);
                for mut row in rows.into_iter().chain(std::iter::repeat_with(Vec::new)).take(size) {
                    row.resize(size, UNSET);
                    table.extend_from_slice(&row);
                }
                table
            }
            Partial::Wide(map) => {
                let mut table = vec![UNSET; size.pow(arity as u32)];
                for (args, v) in map {
                    let pos = args.iter().fold(0usize, |acc, &a| acc * size + a as usize);
                    table[pos] = v;
                }
                table
            }
        }
    }
}

impl FreeAlgebra {
    pub fn build(ctx: &VarietyContext, n: usize) -> Result<FreeAlgebra> {
        let sig = ctx.signature().clone();
        let gens = ctx.generators();
        let cap = ctx.caps().max_free_size;
        if let Some(g) = gens.iter().find(|g| g.size() > 256) {
            return Err(Error::cap("generator size for free algebras", g.size().min(256)));
        }

        let mut coords = Vec::new();
        for (g, alg) in gens.iter().enumerate() {
            for_each_tuple(alg.size(), n, |a| coords.push((g, a.to_vec())));
        }
        let width = coords.len();
        let owner: Vec<usize> = coords.iter().map(|c| c.0).collect();
        // coordinate ranges per generator
        let mut segments: Vec<(usize, usize, usize)> = Vec::new();
        for (c, &g) in owner.iter().enumerate() {
            match segments.last_mut() {
                Some(s) if s.0 == g => s.2 = c + 1,
                _ => segments.push((g, c, c + 1)),
            }
        }

        let mut b = Builder {
            width,
            vectors: Vec::new(),
            reps: Vec::new(),
            rep_text: Vec::new(),
            rep_sizes: Vec::new(),
            defs: Vec::new(),
            index: VectorIndex::default(),
            cap,
        };

        // level 1: constants (the distinguished one first), then variables
        let mut consts: Vec<OpId> = sig.constants().collect();
        consts.sort_by_key(|&c| (c != sig.one(), sig.op(c).name.clone()));
        let mut const_elems = Vec::new();
        for &c in &consts {
            let v: Vec<u8> = owner.iter().map(|&g| gens[g].constant(c) as u8).collect();
            let t = Term::constant(c);
            let text = sig.format(&t);
            const_elems.push((c, b.add_if_new(v, t, text, 1, Definition::App(c, Vec::new()))?));
        }
        let mut generators = Vec::with_capacity(n);
        for i in 0..n {
            let v: Vec<u8> = coords.iter().map(|(_, a)| a[i] as u8).collect();
            let t = Term::var(i as u32 + 1);
            let text = sig.format(&t);
            generators.push(b.add_if_new(v, t, text, 1, Definition::Var(i + 1))?);
        }

        let ops: Vec<(OpId, usize)> = sig
            .op_ids()
            .map(|id| (id, sig.op(id).arity))
            .filter(|&(_, k)| k > 0)
            .collect();
        let max_arity = ops.iter().map(|o| o.1).max().unwrap_or(0);
        let mut partial: Vec<Partial> = sig.op_ids().map(|id| Partial::new(sig.op(id).arity)).collect();

        let mut level = 2;
        loop {
            let max_size = b.rep_sizes.iter().copied().max().unwrap_or(0);
            if level > max_arity * max_size + 1 {
                break;
            }
            let groups: Vec<Vec<u32>> = {
                let mut g = vec![Vec::new(); level];
                for (e, &s) in b.rep_sizes.iter().enumerate() {
                    if s < level {
                        g[s].push(e as u32);
                    }
                }
                g
            };
            let mut pending: FxHashMap<Box<[u8]>, (u32, Candidate)> = FxHashMap::default();
            let mut pending_order: Vec<Box<[u8]>> = Vec::new();
            let mut patch: Vec<(usize, Vec<u32>)> = Vec::new();
            for &(op, arity) in &ops {
                let name = &sig.op(op).name;
                let tables: Vec<&[u32]> = gens.iter().map(|g| g.table(op)).collect();
                let sizes_of: Vec<usize> = gens.iter().map(|g| g.size()).collect();
                let table = &mut partial[op.index()];
                for_each_composition(level - 1, arity, |sizes| {
                    if sizes.iter().any(|&s| groups[s].is_empty()) {
                        return;
                    }
                    let lens: Vec<usize> = sizes.iter().map(|&s| groups[s].len()).collect();
                    let mut args = vec![0u32; arity];
                    let mut value = vec![0u8; width];
                    for_each_mixed(&lens, |idx| {
                        for k in 0..arity {
                            args[k] = groups[sizes[k]][idx[k]];
                        }
                        apply_coordinates(&segments, &sizes_of, &tables, &b.vectors, width, &args, &mut value);
                        let result = if let Some(e) = b.index.get(&b.vectors, width, &value) {
                            e
                        } else {
                            match pending.get_mut(value.as_slice()) {
                                Some((id, best)) => {
                                    if candidate_less(name, &args, &best.text, &b.rep_text) {
                                        let text = candidate_text(name, &args, &b.rep_text);
                                        *best = Candidate { text, op, args: args.clone() };
                                    }
                                    *id | PENDING
                                }
                                None => {
                                    let id = pending.len() as u32;
                                    let key: Box<[u8]> = value.clone().into_boxed_slice();
                                    pending_order.push(key.clone());
                                    let text = candidate_text(name, &args, &b.rep_text);
                                    pending.insert(key, (id, Candidate { text, op, args: args.clone() }));
                                    id | PENDING
                                }
                            }
                        };
                        if result & PENDING != 0 {
                            patch.push((op.index(), args.clone()));
                        }
                        table.set(&args, result);
                    });
                });
            }
            // admit this level's elements in order of their printed form
            let mut fresh: Vec<(u32, Box<[u8]>, Candidate)> = pending_order
                .into_iter()
                .map(|key| {
                    let (id, cand) = pending.remove(&key).expect("pending key");
                    (id, key, cand)
                })
                .collect();
            fresh.sort_by(|a, b| a.2.text.cmp(&b.2.text));
            let mut final_index = vec![0u32; fresh.len()];
            for (id, key, cand) in fresh {
                let term = Term::app(cand.op, cand.args.iter().map(|&a| b.reps[a as usize].clone()).collect());
                let def = Definition::App(cand.op, cand.args);
                final_index[id as usize] = b.add_if_new(key.into_vec(), term, cand.text, level, def)? as u32;
            }
            for (op, args) in patch {
                let v = partial[op].get_mut(&args);
                *v = final_index[(*v & !PENDING) as usize];
            }
            level += 1;
        }

        let size = b.reps.len();
        let mut tables: Vec<Vec<u32>> = Vec::with_capacity(sig.ops().len());
        for (id, part) in sig.op_ids().zip(partial) {
            let arity = sig.op(id).arity;
            size.checked_pow(arity as u32)
                .filter(|&l| l <= MAX_TABLE)
                .ok_or_else(|| Error::cap("free algebra table entries", MAX_TABLE))?;
            let table = if arity == 0 {
                let e = const_elems.iter().find(|c| c.0 == id).expect("constant element").1;
                vec![e as u32]
            } else {
                part.finish(size, arity)
            };
            debug_assert!(table.iter().all(|&v| v != UNSET));
            tables.push(table);
        }
        let names = Some(b.rep_text.clone());
        let algebra = FiniteAlgebra::new(sig, size, tables, names)?;
        Ok(FreeAlgebra {
            n,
            width,
            vectors: b.vectors,
            reps: b.reps,
            rep_sizes: b.rep_sizes,
            defs: b.defs,
            generators,
            index: b.index,
            algebra,
            coords,
        })
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.reps.len()
    }

    pub fn algebra(&self) -> &FiniteAlgebra {
        &self.algebra
    }

    pub fn one(&self) -> usize {
        self.algebra.one()
    }

    /// Index of `x_i` (1-based `i`).
    pub fn generator(&self, i: usize) -> usize {
        self.generators[i - 1]
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn rep(&self, e: usize) -> &Term {
        &self.reps[e]
    }

    pub fn reps(&self) -> &[Term] {
        &self.reps
    }

    pub fn rep_size(&self, e: usize) -> usize {
        self.rep_sizes[e]
    }

    /// Elements in construction order refer only to earlier elements.
    pub fn definition(&self, e: usize) -> &Definition {
        &self.defs[e]
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn vector(&self, e: usize) -> &[u8] {
        &self.vectors[e * self.width..(e + 1) * self.width]
    }

    /// Value of element `e` at coordinate `c`.
    pub fn value(&self, e: usize, c: usize) -> usize {
        self.vectors[e * self.width + c] as usize
    }

    /// `(generator index, assignment)` for each coordinate.
    pub fn coordinates(&self) -> &[(usize, Vec<usize>)] {
        &self.coords
    }

    pub fn lookup(&self, vector: &[u8]) -> Option<usize> {
        if vector.len() != self.width {
            return None;
        }
        self.index.get(&self.vectors, self.width, vector).map(|e| e as usize)
    }

    /// The element `t(x1..xn)`; variables beyond `n` are an error.
    pub fn element_of(&self, t: &Term) -> Result<usize> {
        if let Some(v) = t.variables().into_iter().find(|&v| v as usize > self.n) {
            return Err(Error::MissingAssignment(v));
        }
        Ok(self.algebra.eval(t, &self.generators))
    }

    /// Value of `t` with `x_i` sent to element `args[i-1]`.
    pub fn eval(&self, t: &Term, args: &[usize]) -> usize {
        self.algebra.eval(t, args)
    }

    /// Images of all elements under the homomorphism into `target` sending
    /// `x_i` to `images[i-1]`, computed along the definitions. The result is
    /// a homomorphism only if one exists; see [`extends_to_hom`](Self::extends_to_hom).
    pub fn evaluate_into(&self, target: &FiniteAlgebra, images: &[usize]) -> Vec<usize> {
        let mut h = vec![0usize; self.size()];
        let mut args = Vec::new();
        for e in 0..self.size() {
            h[e] = match &self.defs[e] {
                Definition::Var(i) => images[i - 1],
                Definition::App(op, a) => {
                    args.clear();
                    args.extend(a.iter().map(|&x| h[x as usize]));
                    target.apply(*op, &args)
                }
            };
        }
        h
    }

    /// Whether `map` (indexed by elements) is a homomorphism into `target`.
    pub fn extends_to_hom(&self, target: &FiniteAlgebra, map: &[usize]) -> bool {
        crate::algebra::Homomorphism::is_homomorphism(&self.algebra, target, map)
    }
}

/// Open-addressing index from evaluation vectors to elements; keys live in
/// the flat vector array, so probes stay cache-friendly.
#[derive(Clone, Debug, Default)]
struct VectorIndex {
    slots: Vec<u32>,
    len: usize,
}

const EMPTY: u32 = u32::MAX;

fn hash_bytes(v: &[u8]) -> u64 {
    use std::hash::Hasher;
    let mut h = rustc_hash::FxHasher::default();
    h.write(v);
    h.finish()
}

impl VectorIndex {
    fn get(&self, vectors: &[u8], width: usize, v: &[u8]) -> Option<u32> {
        if self.slots.is_empty() {
            return None;
        }
        let mask = self.slots.len() - 1;
        let mut i = hash_bytes(v) as usize & mask;
        loop {
            let e = self.slots[i];
            if e == EMPTY {
                return None;
            }
            let k = e as usize * width;
            if &vectors[k..k + width] == v {
                return Some(e);
            }
            i = (i + 1) & mask;
        }
    }

    /// Inserts element `e`, whose vector is already stored in `vectors`.
    fn insert(&mut self, vectors: &[u8], width: usize, e: u32) {
        if (self.len + 1) * 2 > self.slots.len() {
            let old = std::mem::take(&mut self.slots);
            self.slots = vec![EMPTY; (old.len() * 2).max(64)];
            self.len = 0;
            for x in old.into_iter().filter(|&x| x != EMPTY) {
                self.place(vectors, width, x);
            }
        }
        self.place(vectors, width, e);
    }

    fn place(&mut self, vectors: &[u8], width: usize, e: u32) {
        let mask = self.slots.len() - 1;
        let k = e as usize * width;
        let mut i = hash_bytes(&vectors[k..k + width]) as usize & mask;
        while self.slots[i] != EMPTY {
            i = (i + 1) & mask;
        }
        self.slots[i] = e;
        self.len += 1;
    }
}

struct Builder {
    width: usize,
    vectors: Vec<u8>,
    reps: Vec<Term>,
    rep_text: Vec<String>,
    rep_sizes: Vec<usize>,
    defs: Vec<Definition>,
    index: VectorIndex,
    cap: usize,
}

impl Builder {
    fn add_if_new(&mut self, v: Vec<u8>, t: Term, text: String, size: usize, def: Definition) -> Result<usize> {
        debug_assert_eq!(v.len(), self.width);
        if let Some(e) = self.index.get(&self.vectors, self.width, &v) {
            return Ok(e as usize);
        }
        if self.reps.len() >= self.cap {
            return Err(Error::cap("free algebra size", self.cap));
        }
        let e = self.reps.len();
        self.vectors.extend_from_slice(&v);
        self.index.insert(&self.vectors, self.width, e as u32);
        self.reps.push(t);
        self.rep_text.push(text);
        self.rep_sizes.push(size);
        self.defs.push(def);
        Ok(e)
    }
}

fn candidate_text(name: &str, args: &[u32], texts: &[String]) -> String {
    let mut s = String::with_capacity(name.len() + 2 + args.iter().map(|&a| texts[a as usize].len() + 1).sum::<usize>());
    s.push_str(name);
    s.push('(');
    for (k, &a) in args.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        s.push_str(&texts[a as usize]);
    }
    s.push(')');
    s
}

/// Coordinatewise application of one operation to the vectors of `args`.
fn apply_coordinates(
    segments: &[(usize, usize, usize)],
    sizes: &[usize],
    tables: &[&[u32]],
    vectors: &[u8],
    width: usize,
    args: &[u32],
    out: &mut [u8],
) {
    match args.len() {
        1 => {
            let va = &vectors[args[0] as usize * width..][..width];
            for &(g, lo, hi) in segments {
                let t = tables[g];
                for (o, &x) in out[lo..hi].iter_mut().zip(&va[lo..hi]) {
                    *o = t[x as usize] as u8;
                }
            }
        }
        2 => {
            let va = &vectors[args[0] as usize * width..][..width];
            let vb = &vectors[args[1] as usize * width..][..width];
            for &(g, lo, hi) in segments {
                let t = tables[g];
                let size = sizes[g];
                for ((o, &x), &y) in out[lo..hi].iter_mut().zip(&va[lo..hi]).zip(&vb[lo..hi]) {
                    *o = t[x as usize * size + y as usize] as u8;
                }
            }
        }
        _ => {
            for &(g, lo, hi) in segments {
                let t = tables[g];
                let size = sizes[g];
                for c in lo..hi {
                    let pos = args
                        .iter()
                        .fold(0usize, |pos, &a| pos * size + vectors[a as usize * width + c] as usize);
                    out[c] = t[pos] as u8;
                }
            }
        }
    }
}

/// Whether `name(args)` prints before `best`, without building the string.
fn candidate_less(name: &str, args: &[u32], best: &str, texts: &[String]) -> bool {
    let mut rhs = best.bytes();
    let mut lhs = name
        .bytes()
        .chain(std::iter::once(b'('))
        .chain(args.iter().enumerate().flat_map(|(k, &a)| {
            (if k > 0 { Some(b',') } else { None })
                .into_iter()
                .chain(texts[a as usize].bytes())
        }))
        .chain(std::iter::once(b')'));
    loop {
        match (lhs.next(), rhs.next()) {
            (Some(x), Some(y)) if x == y => continue,
            (Some(x), Some(y)) => return x < y,
            (None, Some(_)) => return true,
            _ => return false,
        }
    }
}

/// Every way of writing `total` as an ordered sum of `parts` positive parts.
fn for_each_composition(total: usize, parts: usize, mut f: impl FnMut(&[usize])) {
    fn rec(rest: usize, parts: usize, acc: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if parts == 1 {
            if rest >= 1 {
                acc.push(rest);
                f(acc);
                acc.pop();
            }
            return;
        }
        for first in 1..rest {
            acc.push(first);
            rec(rest - first, parts - 1, acc, f);
            acc.pop();
        }
    }
    if parts == 0 {
        return;
    }
    rec(total, parts, &mut Vec::with_capacity(parts), &mut f);
}

/// Mixed-radix counter over `lens`, last position fastest.
fn for_each_mixed(lens: &[usize], mut f: impl FnMut(&[usize])) {
    if lens.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; lens.len()];
    loop {
        f(&idx);
        let mut k = lens.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < lens[k] {
                break;
            }
            idx[k] = 0;
        }
    }
}

impl VarietyContext {
    /// Builds the free algebra on `n` generators, with the cap on its size
    /// taken from the context.
    pub fn build_free(&self, n: usize) -> Result<FreeAlgebra> {
        FreeAlgebra::build(self, n)
    }
}
