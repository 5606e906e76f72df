//! Completely meet-irreducible filters of free algebras.
//!
//! Each one is stored as the natural map onto its (subdirectly
//! irreducible) quotient, which makes membership, `η⁺` and `∗`-tests
//! table lookups. Three exact ways of listing them are provided:
//!
//! * `Lattice`: the full filter lattice of `F_n`.
//! * `Coordinates`: when the designated subtraction is a Hilbert algebra
//!   implication the variety is congruence distributive, so every
//!   subdirectly irreducible quotient of `F_n` factors through a single
//!   coordinate projection onto a subalgebra of a generator.
//! * `Extension`: for `↔`-with-constants signatures satisfying the
//!   `∗`-avoidance identities, a quotient with more than two elements is
//!   `B ∪ {∗}` where `B` is a quotient of a smaller free algebra and the
//!   generators sent to `∗` are exactly those outside `B`.

use std::collections::HashMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use super::{FreeAlgebra, VarietyContext};
use crate::algebra::{for_each_tuple, FiniteAlgebra, Homomorphism};
use crate::error::{Error, Result};
use crate::term::{OpId, Term};

/// Above this size the filter lattice of `F_n` is not used when another
/// exact method applies.
pub const LATTICE_LIMIT: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FmMethod {
    Lattice,
    Coordinates,
    Extension,
}

/// A subdirectly irreducible algebra together with a generating tuple.
#[derive(Clone, Debug)]
pub struct SiQuotient {
    pub algebra: Arc<FiniteAlgebra>,
    pub star: usize,
    pub generators: Vec<usize>,
}

/// One completely meet-irreducible filter `η` of `F_n`.
#[derive(Clone, Debug)]
pub struct Irreducible {
    eta: FixedBitSet,
    eta_plus: FixedBitSet,
    map: Vec<u32>,
    quotient: Arc<FiniteAlgebra>,
    star: usize,
}

impl Irreducible {
    fn new(map: Vec<u32>, quotient: Arc<FiniteAlgebra>, star: usize) -> Self {
        let one = quotient.one() as u32;
        let mut eta = FixedBitSet::with_capacity(map.len());
        let mut eta_plus = FixedBitSet::with_capacity(map.len());
        for (e, &v) in map.iter().enumerate() {
            if v == one {
                eta.insert(e);
                eta_plus.insert(e);
            } else if v as usize == star {
                eta_plus.insert(e);
            }
        }
        Irreducible {
            eta,
            eta_plus,
            map,
            quotient,
            star,
        }
    }

    pub fn eta(&self) -> &FixedBitSet {
        &self.eta
    }

    pub fn eta_plus(&self) -> &FixedBitSet {
        &self.eta_plus
    }

    pub fn contains(&self, e: usize) -> bool {
        self.eta.contains(e)
    }

    /// `e/η = ∗`, i.e. `e ∈ η⁺ \ η`.
    pub fn is_star(&self, e: usize) -> bool {
        self.map[e] as usize == self.star
    }

    /// The block of `e` as an element of the quotient.
    pub fn image(&self, e: usize) -> usize {
        self.map[e] as usize
    }

    pub fn quotient(&self) -> &Arc<FiniteAlgebra> {
        &self.quotient
    }

    pub fn star(&self) -> usize {
        self.star
    }

    pub fn quotient_size(&self) -> usize {
        self.quotient.size()
    }

    pub fn len(&self) -> usize {
        self.eta.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `Fm(F_n)`, sorted by size and then members.
#[derive(Clone, Debug)]
pub struct IrreducibleFilters {
    rank: usize,
    size: usize,
    method: FmMethod,
    items: Vec<Irreducible>,
}

impl IrreducibleFilters {
    fn new(rank: usize, size: usize, method: FmMethod, items: Vec<Irreducible>) -> Self {
        let mut seen = std::collections::HashSet::new();
        let mut items: Vec<Irreducible> = items
            .into_iter()
            .filter(|it| seen.insert(it.eta.clone()))
            .collect();
        items.sort_by(|a, b| {
            a.len()
                .cmp(&b.len())
                .then_with(|| a.eta.ones().cmp(b.eta.ones()))
        });
        IrreducibleFilters {
            rank,
            size,
            method,
            items,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn method(&self) -> FmMethod {
        self.method
    }

    pub fn items(&self) -> &[Irreducible] {
        &self.items
    }

    pub fn get(&self, i: usize) -> &Irreducible {
        &self.items[i]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Indices of the members of `Fm` containing `t`.
    pub fn containing(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.items.len()).filter(move |&i| self.items[i].contains(t))
    }

    /// The principal filter `[t)`, as the meet of the irreducibles above it.
    pub fn principal(&self, t: usize) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.size);
        out.insert_range(..);
        for i in self.containing(t) {
            out.intersect_with(&self.items[i].eta);
        }
        out
    }

    /// Number of irreducibles not containing `t`. Strictly monotone in
    /// `[t)`, and equal to its height when the filter lattice is
    /// distributive.
    pub fn depth(&self, t: usize) -> usize {
        self.items.iter().filter(|it| !it.contains(t)).count()
    }

    /// `N(p)`: indices of the irreducibles with `p/η = ∗`.
    pub fn star_set(&self, p: usize) -> Vec<usize> {
        (0..self.items.len()).filter(|&i| self.items[i].is_star(p)).collect()
    }

    /// `a ≡ b` modulo the congruence of `[t)`.
    pub fn congruent_mod(&self, t: usize, a: usize, b: usize) -> bool {
        self.containing(t)
            .all(|i| self.items[i].image(a) == self.items[i].image(b))
    }

    /// The quotients with the images of the free generators.
    pub fn quotients(&self, free: &FreeAlgebra) -> Vec<SiQuotient> {
        self.items
            .iter()
            .map(|it| SiQuotient {
                algebra: it.quotient.clone(),
                star: it.star,
                generators: free.generators().iter().map(|&g| it.image(g)).collect(),
            })
            .collect()
    }
}

/// Fm data of one subalgebra of a generator: embedding inverse and the
/// quotients by its irreducible filters.
struct LocalQuotients {
    back: Vec<usize>,
    quotients: Vec<(Arc<FiniteAlgebra>, Vec<usize>, usize)>,
}

fn local_quotients(alg: &FiniteAlgebra, universe: &FixedBitSet, cap: usize) -> Result<LocalQuotients> {
    let (sub, embed) = alg.subalgebra(universe)?;
    let mut back = vec![usize::MAX; alg.size()];
    for (i, &a) in embed.iter().enumerate() {
        back[a] = i;
    }
    Ok(LocalQuotients {
        back,
        quotients: si_quotients_of(&sub, cap)?,
    })
}

/// Quotients of `alg` by its irreducible filters, with natural maps and `∗`.
pub fn si_quotients_of(
    alg: &FiniteAlgebra,
    cap: usize,
) -> Result<Vec<(Arc<FiniteAlgebra>, Vec<usize>, usize)>> {
    let lat = alg.filter_lattice(cap)?;
    Ok(lat
        .meet_irreducibles()
        .iter()
        .map(|m| {
            let (q, proj) = alg.quotient(lat.get(m.eta).congruence());
            let eta = lat.get(m.eta).members();
            let above = lat
                .get(m.eta_plus)
                .members()
                .ones()
                .find(|&a| !eta.contains(a))
                .expect("upper cover is strictly larger");
            let star = proj[above];
            (Arc::new(q), proj, star)
        })
        .collect())
}

/// Iso-invariant key of an algebra generated by `gens`: elements are
/// relabelled in the order a deterministic closure reaches them.
pub fn canonical_key(alg: &FiniteAlgebra, gens: &[usize]) -> Vec<u32> {
    let sig = alg.signature();
    let mut pos = vec![u32::MAX; alg.size()];
    let mut order: Vec<usize> = Vec::new();
    let reach = |a: usize, pos: &mut Vec<u32>, order: &mut Vec<usize>| {
        if pos[a] == u32::MAX {
            pos[a] = order.len() as u32;
            order.push(a);
        }
    };
    reach(alg.one(), &mut pos, &mut order);
    for c in sig.constants() {
        reach(alg.constant(c), &mut pos, &mut order);
    }
    for &g in gens {
        reach(g, &mut pos, &mut order);
    }
    loop {
        let before = order.len();
        for id in sig.op_ids() {
            let arity = sig.op(id).arity;
            if arity == 0 {
                continue;
            }
            let current = order.clone();
            let mut args = vec![0; arity];
            for_each_tuple(current.len(), arity, |idx| {
                for (k, &i) in idx.iter().enumerate() {
                    args[k] = current[i];
                }
                reach(alg.apply(id, &args), &mut pos, &mut order);
            });
        }
        if order.len() == before {
            break;
        }
    }
    let n = order.len();
    let mut key = vec![n as u32];
    key.extend(gens.iter().map(|&g| pos[g]));
    for id in sig.op_ids() {
        let arity = sig.op(id).arity;
        let mut args = vec![0; arity];
        for_each_tuple(n, arity, |idx| {
            for (k, &i) in idx.iter().enumerate() {
                args[k] = order[i];
            }
            key.push(pos[alg.apply(id, &args)]);
        });
    }
    key
}

impl VarietyContext {
    /// Whether the designated subtraction satisfies the Hilbert algebra
    /// identities `xx = 1`, `1x = x`, `x(yz) = (xy)(xz)` and
    /// `(xy)((yx)x) = (yx)((xy)y)`, writing `xy` for `s(x, y)`.
    pub fn has_hilbert_subtraction(&self) -> bool {
        let Some(s) = self.subtractive.as_ref() else {
            return false;
        };
        let (x, y, z) = (Term::var(1), Term::var(2), Term::var(3));
        let i = |a: &Term, b: &Term| super::instantiate(s, a, b);
        let one = self.sig.one_term();
        let laws = [
            (i(&x, &x), one.clone()),
            (i(&one, &x), x.clone()),
            (i(&x, &i(&y, &z)), i(&i(&x, &y), &i(&x, &z))),
            (
                i(&i(&x, &y), &i(&i(&y, &x), &x)),
                i(&i(&y, &x), &i(&i(&x, &y), &y)),
            ),
        ];
        laws.iter().all(|(l, r)| self.terms_equal(l, r))
    }

    /// The binary operation `e` when the signature is `e` plus constants,
    /// `e(x1, x2)` is the equivalence term and every constant satisfies
    /// `e(e(c, y), y) = c`.
    pub fn extension_operation(&self) -> Option<OpId> {
        let e = self.equiv.as_ref()?;
        let Term::App(op, args) = e else {
            return None;
        };
        if args.as_slice() != [Term::var(1), Term::var(2)] {
            return None;
        }
        if self
            .sig
            .op_ids()
            .any(|id| id != *op && self.sig.op(id).arity != 0)
        {
            return None;
        }
        let y = Term::var(1);
        let q = |a: &Term, b: &Term| super::instantiate(e, a, b);
        self.sig
            .constants()
            .all(|c| {
                let c = Term::constant(c);
                self.terms_equal(&q(&q(&c, &y), &y), &c)
            })
            .then_some(*op)
    }

    /// The method [`irreducibles`](Self::irreducibles) uses for `F_n`.
    pub fn fm_method(&self, n: usize) -> Result<FmMethod> {
        if self.has_hilbert_subtraction() {
            return Ok(FmMethod::Coordinates);
        }
        if self.free_algebra(n)?.size() > LATTICE_LIMIT && self.extension_operation().is_some() {
            return Ok(FmMethod::Extension);
        }
        Ok(FmMethod::Lattice)
    }

    /// `Fm(F_n)` (memoized).
    pub fn irreducibles(&self, n: usize) -> Result<Arc<IrreducibleFilters>> {
        if let Some(f) = self.irreducibles.lock().unwrap().get(&n) {
            return Ok(f.clone());
        }
        let fm = Arc::new(self.irreducibles_with(n, self.fm_method(n)?)?);
        self.irreducibles.lock().unwrap().insert(n, fm.clone());
        Ok(fm)
    }

    /// `Fm(F_n)` by a chosen method; fails if the method does not apply.
    pub fn irreducibles_with(&self, n: usize, method: FmMethod) -> Result<IrreducibleFilters> {
        let free = self.free_algebra(n)?;
        let items = match method {
            FmMethod::Lattice => self.fm_by_lattice(n, &free)?,
            FmMethod::Coordinates => {
                if !self.has_hilbert_subtraction() {
                    return Err(Error::PreconditionFailed(
                        "coordinate method needs a Hilbert subtraction".into(),
                    ));
                }
                self.fm_by_coordinates(&free)?
            }
            FmMethod::Extension => self.fm_by_extension(&free)?,
        };
        Ok(IrreducibleFilters::new(n, free.size(), method, items))
    }

    fn fm_by_lattice(&self, n: usize, free: &FreeAlgebra) -> Result<Vec<Irreducible>> {
        let lat = self.free_filters(n)?;
        Ok(lat
            .meet_irreducibles()
            .iter()
            .map(|m| {
                let (q, proj) = free.algebra().quotient(lat.get(m.eta).congruence());
                let eta = lat.get(m.eta).members();
                let above = lat
                    .get(m.eta_plus)
                    .members()
                    .ones()
                    .find(|&a| !eta.contains(a))
                    .expect("upper cover is strictly larger");
                let star = proj[above];
                Irreducible::new(proj.iter().map(|&b| b as u32).collect(), Arc::new(q), star)
            })
            .collect())
    }

    fn fm_by_coordinates(&self, free: &FreeAlgebra) -> Result<Vec<Irreducible>> {
        let mut cache: HashMap<(usize, FixedBitSet), Arc<LocalQuotients>> = HashMap::new();
        let mut items = Vec::new();
        for (c, (g, assignment)) in free.coordinates().iter().enumerate() {
            let alg = &self.generators[*g];
            let universe = alg.subuniverse(assignment);
            let local = match cache.get(&(*g, universe.clone())) {
                Some(l) => l.clone(),
                None => {
                    let l = Arc::new(local_quotients(alg, &universe, self.caps.max_congruences)?);
                    cache.insert((*g, universe), l.clone());
                    l
                }
            };
            for (q, proj, star) in &local.quotients {
                let map = (0..free.size())
                    .map(|e| proj[local.back[free.value(e, c)]] as u32)
                    .collect();
                items.push(Irreducible::new(map, q.clone(), *star));
            }
        }
        Ok(items)
    }

    fn fm_by_extension(&self, free: &FreeAlgebra) -> Result<Vec<Irreducible>> {
        let op = self.extension_operation().ok_or_else(|| {
            Error::PreconditionFailed("extension method needs an equivalential signature".into())
        })?;
        let n = free.rank();
        let mut items = Vec::new();
        for t in self.two_element_members()? {
            let t = Arc::new(t);
            let star = 1 - t.one();
            for_each_tuple(2, n, |images| {
                let h = free.evaluate_into(&t, images);
                if h.contains(&star) {
                    items.push(Irreducible::new(
                        h.iter().map(|&b| b as u32).collect(),
                        t.clone(),
                        star,
                    ));
                }
            });
        }
        // membership of B ∪ {∗} in the variety depends only on B
        let mut member: HashMap<(usize, usize), bool> = HashMap::new();
        for mask in 1usize..(1 << n) {
            let rest: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
            let m = rest.len();
            let lower = self.free_algebra(m)?;
            let lat = self.free_filters(m)?;
            for f in 0..lat.len() {
                let theta = lat.get(f).congruence();
                if theta.num_blocks() < 2 {
                    continue;
                }
                let (base, proj) = lower.algebra().quotient(theta);
                let b = Arc::new(star_extension(&base, op)?);
                let star = base.size();
                let mut images = vec![star; n];
                for (j, &i) in rest.iter().enumerate() {
                    images[i] = proj[lower.generator(j + 1)];
                }
                let h = free.evaluate_into(&b, &images);
                let ok = *member.entry((m, f)).or_insert_with(|| {
                    Homomorphism::is_homomorphism(free.algebra(), &b, &h)
                        && b.subdirectly_irreducible().map(|(s, _)| s) == Some(star)
                });
                if ok {
                    items.push(Irreducible::new(
                        h.iter().map(|&x| x as u32).collect(),
                        b,
                        star,
                    ));
                }
            }
        }
        Ok(items)
    }

    /// The subdirectly irreducible quotients of `F_n` with their generator
    /// images, one per member of `Fm(F_n)`. In the coordinate case `F_n`
    /// itself is never built.
    pub fn si_quotients(&self, n: usize) -> Result<Vec<SiQuotient>> {
        if !self.has_hilbert_subtraction() {
            let free = self.free_algebra(n)?;
            return Ok(self.irreducibles(n)?.quotients(&free));
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for alg in &self.generators {
            let mut cache: HashMap<FixedBitSet, Arc<LocalQuotients>> = HashMap::new();
            let mut err = None;
            for_each_tuple(alg.size(), n, |a| {
                if err.is_some() {
                    return;
                }
                let universe = alg.subuniverse(a);
                let local = match cache.get(&universe) {
                    Some(l) => l.clone(),
                    None => match local_quotients(alg, &universe, self.caps.max_congruences) {
                        Ok(l) => {
                            let l = Arc::new(l);
                            cache.insert(universe, l.clone());
                            l
                        }
                        Err(e) => {
                            err = Some(e);
                            return;
                        }
                    },
                };
                for (q, proj, star) in &local.quotients {
                    let generators: Vec<usize> = a.iter().map(|&v| proj[local.back[v]]).collect();
                    if seen.insert(canonical_key(q, &generators)) {
                        out.push(SiQuotient {
                            algebra: q.clone(),
                            star: *star,
                            generators,
                        });
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        Ok(out)
    }
}

/// `B ∪ {∗}` with `∗` a new element: `a ↔ ∗ = ∗ ↔ a = a` for `a ∉ {1, ∗}`,
/// `1 ↔ ∗ = ∗ ↔ 1 = ∗` and `∗ ↔ ∗ = 1`; constants keep their values.
fn star_extension(base: &FiniteAlgebra, op: OpId) -> Result<FiniteAlgebra> {
    let s = base.size();
    let one = base.one();
    let names = base.names().map(|names| {
        let mut names = names.to_vec();
        names.push("*".into());
        names
    });
    FiniteAlgebra::from_fn(base.signature().clone(), s + 1, names, |id, args| {
        if id != op {
            return base.apply(id, args);
        }
        match (args[0] == s, args[1] == s) {
            (false, false) => base.apply2(op, args[0], args[1]),
            (true, true) => one,
            (true, false) | (false, true) => {
                let a = if args[0] == s { args[1] } else { args[0] };
                if a == one {
                    s
                } else {
                    a
                }
            }
        }
    })
}
