use super::{for_each_tuple, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::term::OpId;

/// An operation-preserving map, stored as the image of each source element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Homomorphism {
    pub map: Vec<usize>,
}

impl Homomorphism {
    pub fn apply(&self, a: usize) -> usize {
        self.map[a]
    }

    pub fn is_onto(&self, target_size: usize) -> bool {
        let mut hit = vec![false; target_size];
        self.map.iter().for_each(|&b| hit[b] = true);
        hit.into_iter().all(|h| h)
    }

    /// Checks that `map` preserves every operation from `source` to `target`.
    pub fn is_homomorphism(source: &FiniteAlgebra, target: &FiniteAlgebra, map: &[usize]) -> bool {
        if map.len() != source.size() || map.iter().any(|&b| b >= target.size()) {
            return false;
        }
        let sig = source.signature();
        let (n, m) = (source.size(), target.size());
        sig.op_ids().all(|id| {
            let arity = sig.op(id).arity;
            let (st, tt) = (source.table(id), target.table(id));
            match arity {
                0 => return map[st[0] as usize] == tt[0] as usize,
                1 => return (0..n).all(|a| map[st[a] as usize] == tt[map[a]] as usize),
                2 => {
                    return (0..n).all(|a| {
                        let row = &st[a * n..(a + 1) * n];
                        let trow = &tt[map[a] * m..(map[a] + 1) * m];
                        row.iter()
                            .zip(map)
                            .all(|(&v, &b)| map[v as usize] == trow[b] as usize)
                    })
                }
                _ => {}
            }
            let mut ok = true;
            let mut img = vec![0; arity];
            for_each_tuple(source.size(), arity, |args| {
                if !ok {
                    return;
                }
                for (k, &a) in args.iter().enumerate() {
                    img[k] = map[a];
                }
                ok = map[source.apply(id, args)] == target.apply(id, &img);
            });
            ok
        })
    }
}

/// How to rebuild every element of an algebra from a generating tuple:
/// element `elems[k]` equals `op(args)` over elements already placed.
struct Plan {
    gens: Vec<usize>,
    steps: Vec<(usize, OpId, Vec<usize>)>,
}

impl FiniteAlgebra {
    /// Greedy generating set: repeatedly add the element whose addition
    /// grows the generated subuniverse most (smallest index on ties).
    pub fn generating_set(&self) -> Vec<usize> {
        let mut gens = Vec::new();
        let mut current = self.subuniverse(&gens);
        while current.count_ones(..) < self.size() {
            let best = (0..self.size())
                .filter(|&a| !current.contains(a))
                .max_by_key(|&a| {
                    let mut g = gens.clone();
                    g.push(a);
                    (self.subuniverse(&g).count_ones(..), std::cmp::Reverse(a))
                })
                .expect("some element is missing");
            gens.push(best);
            current = self.subuniverse(&gens);
        }
        gens
    }

    fn plan(&self) -> Plan {
        let gens = self.generating_set();
        let sig = self.signature();
        let mut placed = vec![false; self.size()];
        let mut order: Vec<usize> = Vec::new();
        let mut steps = Vec::new();
        for &g in &gens {
            if !placed[g] {
                placed[g] = true;
                order.push(g);
            }
        }
        for id in sig.constants() {
            let c = self.constant(id);
            if !placed[c] {
                placed[c] = true;
                order.push(c);
                steps.push((c, id, Vec::new()));
            }
        }
        let mut done = 0;
        while done < order.len() {
            let frontier = order.len();
            for id in sig.op_ids() {
                let arity = sig.op(id).arity;
                if arity == 0 {
                    continue;
                }
                let known = order[..frontier].to_vec();
                for_each_tuple(known.len(), arity, |idx| {
                    if idx.iter().all(|&k| k < done) {
                        return;
                    }
                    let args: Vec<usize> = idx.iter().map(|&k| known[k]).collect();
                    let v = self.apply(id, &args);
                    if !placed[v] {
                        placed[v] = true;
                        order.push(v);
                        steps.push((v, id, args));
                    }
                });
            }
            done = frontier;
        }
        Plan { gens, steps }
    }

    /// Every homomorphism into `target`, in lexicographic order of the
    /// images of the generating set. At most `cap` candidate maps.
    pub fn all_homomorphisms(&self, target: &FiniteAlgebra, cap: usize) -> Result<Vec<Homomorphism>> {
        let mut out = Vec::new();
        self.search_homomorphisms(target, cap, |h| {
            out.push(h);
            true
        })?;
        out.sort();
        Ok(out)
    }

    pub fn endomorphisms(&self, cap: usize) -> Result<Vec<Homomorphism>> {
        self.all_homomorphisms(self, cap)
    }

    /// Is there a homomorphism from `self` onto `target`?
    pub fn exists_epi(&self, target: &FiniteAlgebra, cap: usize) -> Result<bool> {
        let mut found = false;
        self.search_homomorphisms(target, cap, |h| {
            found = h.is_onto(target.size());
            !found
        })?;
        Ok(found)
    }

    /// Calls `visit` on each homomorphism until it returns false.
    fn search_homomorphisms(
        &self,
        target: &FiniteAlgebra,
        cap: usize,
        mut visit: impl FnMut(Homomorphism) -> bool,
    ) -> Result<()> {
        let plan = self.plan();
        let r = plan.gens.len();
        let candidates = (target.size() as u128).checked_pow(r as u32).unwrap_or(u128::MAX);
        if candidates > cap as u128 {
            return Err(Error::cap("candidate homomorphisms", cap));
        }
        let mut map = vec![usize::MAX; self.size()];
        let mut stop = false;
        for_each_tuple(target.size(), r, |images| {
            if stop {
                return;
            }
            map.iter_mut().for_each(|m| *m = usize::MAX);
            for (&g, &b) in plan.gens.iter().zip(images) {
                // a repeated generator must get a consistent image
                if map[g] != usize::MAX && map[g] != b {
                    return;
                }
                map[g] = b;
            }
            for (v, op, args) in &plan.steps {
                let img: Vec<usize> = args.iter().map(|&a| map[a]).collect();
                map[*v] = target.apply(*op, &img);
            }
            if Homomorphism::is_homomorphism(self, target, &map) {
                stop = !visit(Homomorphism { map: map.clone() });
            }
        });
        Ok(())
    }
}
