use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use super::{instantiate, si_quotients_of, VarietyContext, Witness};
use crate::algebra::{FiniteAlgebra, Homomorphism, StructureWitness};
use crate::error::{Error, Result};
use crate::term::{OpId, Substitution, Term};

impl VarietyContext {
    /// Checks the four equivalential identities as identities of `Var(K)`,
    /// then that `a ≡ b (φ)` iff `a ↔ b ∈ 1/φ` for every congruence `φ` of
    /// every generator.
    pub fn validate_equivalence_term(&self, e: &Term) -> Option<Witness> {
        let sig = &self.sig;
        let x = Term::var(1);
        let y = Term::var(2);
        let z = Term::var(3);
        let q = |a: &Term, b: &Term| instantiate(e, a, b);
        let one = sig.one_term();
        let xx = q(&x, &x);
        let xzz = q(&q(&x, &z), &z);
        let laws = [
            (q(&xx, &y), y.clone()),
            (q(&q(&q(&x, &y), &z), &z), q(&q(&x, &z), &q(&y, &z))),
            (q(&q(&q(&x, &y), &xzz), &xzz), q(&x, &y)),
            (xx, one),
        ];
        for (l, r) in &laws {
            if let Some(w) = self.identity_witness(l, r) {
                return Some(w);
            }
        }
        for (g, alg) in self.generators.iter().enumerate() {
            let lat = match alg.congruence_lattice(self.caps.max_congruences) {
                Ok(l) => l,
                Err(err) => {
                    return Some(Witness {
                        algebra: self.generator_name(g),
                        values: vec![],
                        detail: err.to_string(),
                    })
                }
            };
            for phi in lat.elements() {
                for a in 0..alg.size() {
                    for b in 0..alg.size() {
                        let ab = alg.eval(e, &[a, b]);
                        if phi.related(a, b) != phi.related(ab, alg.one()) {
                            return Some(Witness {
                                algebra: self.generator_name(g),
                                values: vec![alg.element_name(a), alg.element_name(b)],
                                detail: format!(
                                    "not a principal congruence term for {:?}",
                                    phi.classes()
                                ),
                            });
                        }
                    }
                }
            }
        }
        None
    }

    /// `s(x, x) ≈ 1` and `s(1, x) ≈ x`.
    pub fn validate_subtractive_term(&self, s: &Term) -> Option<Witness> {
        let x = Term::var(1);
        let one = self.sig.one_term();
        self.identity_witness(&instantiate(s, &x, &x), &one)
            .or_else(|| self.identity_witness(&instantiate(s, &one, &x), &x))
    }
}

/// Outcome of the `χ`-commutation identity for one operation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OperationReport {
    pub operation: String,
    pub holds: bool,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MemberReport {
    pub algebra: String,
    pub satisfies_all: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub operations: Vec<OperationReport>,
    /// Per generator: whether it satisfies every operation's identity.
    pub members: Vec<MemberReport>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.operations.iter().all(|o| o.holds)
    }

    pub fn failing(&self) -> impl Iterator<Item = &OperationReport> {
        self.operations.iter().filter(|o| !o.holds)
    }
}

/// A subdirectly irreducible algebra `A` with `|A| > 2` in which
/// `A \ {∗}` is not closed under `operation`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SiOffender {
    pub algebra: String,
    pub operation: String,
    pub args: Vec<String>,
    pub result: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SiReport {
    pub examined: usize,
    pub larger_than_two: usize,
    pub offenders: Vec<SiOffender>,
}

impl SiReport {
    pub fn passed(&self) -> bool {
        self.offenders.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiagnosticEntry {
    pub algebra: String,
    pub size: usize,
    pub one_regular: Option<StructureWitness>,
    pub orderable: Option<StructureWitness>,
}

impl DiagnosticEntry {
    pub fn passed(&self) -> bool {
        self.one_regular.is_none() && self.orderable.is_none()
    }
}

/// Largest algebra whose full congruence lattice the diagnostics compute.
pub const DIAGNOSTIC_SIZE_LIMIT: usize = 512;

impl VarietyContext {
    /// Both sides of `t(x1yy, ..., xnyy) ≈ t(x1, ..., xn)yy` where `uv`
    /// is the equivalence term and `y` is a fresh variable.
    pub fn chi_identity(&self, t: &Term) -> Result<(Term, Term)> {
        let e = self.equiv.as_ref().ok_or(Error::NoDesignatedTerm)?;
        let n = t.max_var().max(1);
        let y = Term::var(n + 1);
        let chi = |a: &Term| instantiate(e, &instantiate(e, a, &y), &y);
        let images = (1..=n).map(|i| chi(&Term::var(i))).collect();
        Ok((t.substitute(&Substitution::from_images(images)), chi(t)))
    }

    /// `None` when the identity holds in every generator.
    pub fn check_chi_identity(&self, t: &Term) -> Result<Option<Witness>> {
        let (l, r) = self.chi_identity(t)?;
        Ok(self.identity_witness(&l, &r))
    }

    pub fn check_variety_identities(&self) -> Result<IdentityReport> {
        let mut operations = Vec::new();
        let mut sides = Vec::new();
        for id in self.sig.op_ids() {
            let arity = self.sig.op(id).arity;
            let t = Term::app(id, (1..=arity as u32).map(Term::var).collect());
            let (l, r) = self.chi_identity(&t)?;
            let witness = self.identity_witness(&l, &r);
            operations.push(OperationReport {
                operation: self.sig.op(id).name.clone(),
                holds: witness.is_none(),
                witness,
            });
            sides.push((l, r));
        }
        let members = (0..self.generators.len())
            .map(|g| MemberReport {
                algebra: self.generator_name(g),
                satisfies_all: sides.iter().all(|(l, r)| self.witness_in(g, l, r).is_none()),
            })
            .collect();
        Ok(IdentityReport {
            operations,
            members,
        })
    }

    /// Every two-element algebra (with `1` as element 1) that is a
    /// homomorphic image of `F_1`. Each such algebra is generated by its
    /// other element, so this is exactly the two-element members.
    pub fn two_element_members(&self) -> Result<Vec<FiniteAlgebra>> {
        if let Some(m) = self.two_element.lock().unwrap().as_ref() {
            return Ok(m.clone());
        }
        let members = self.find_two_element_members()?;
        *self.two_element.lock().unwrap() = Some(members.clone());
        Ok(members)
    }

    fn find_two_element_members(&self) -> Result<Vec<FiniteAlgebra>> {
        let free = self.free_algebra(1)?;
        let ops: Vec<OpId> = self.sig.op_ids().collect();
        let choices: Vec<usize> = ops
            .iter()
            .map(|&id| {
                if id == self.sig.one() {
                    1
                } else {
                    1usize << (1usize << self.sig.op(id).arity)
                }
            })
            .collect();
        let total = choices
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .filter(|&t| t <= self.caps.max_hom_search)
            .ok_or_else(|| Error::cap("two-element candidate tables", self.caps.max_hom_search))?;
        let mut out = Vec::new();
        for code in 0..total {
            let mut rest = code;
            let tables: Vec<Vec<u32>> = ops
                .iter()
                .zip(&choices)
                .map(|(&id, &c)| {
                    let pick = rest % c;
                    rest /= c;
                    if id == self.sig.one() {
                        return vec![1];
                    }
                    let len = 1usize << self.sig.op(id).arity;
                    (0..len).map(|k| (pick >> k & 1) as u32).collect()
                })
                .collect();
            let b = FiniteAlgebra::new(
                self.sig.clone(),
                2,
                tables,
                Some(vec!["0".into(), "1".into()]),
            )?;
            let h = free.evaluate_into(&b, &[0]);
            if h.contains(&0) && Homomorphism::is_homomorphism(free.algebra(), &b, &h) {
                out.push(b);
            }
        }
        Ok(out)
    }

    /// An element `m` of `F_3` with `m(x, y, y) = x` and `m(x, x, y) = y`.
    pub fn find_malcev_element(&self) -> Result<Option<Term>> {
        let free = self.free_algebra(3)?;
        let (x, y) = (free.generator(1), free.generator(2));
        Ok(free
            .reps()
            .iter()
            .find(|r| free.eval(r, &[x, y, y]) == x && free.eval(r, &[x, x, y]) == y)
            .cloned())
    }

    /// One-regularity and congruence orderability of every generator, every
    /// proper subalgebra of a generator and `F_k` for `k ≤ n_bound`.
    pub fn fregean_diagnostics(&self, n_bound: usize) -> Result<Vec<DiagnosticEntry>> {
        let mut algebras: Vec<(String, FiniteAlgebra)> = Vec::new();
        for (g, alg) in self.generators.iter().enumerate() {
            algebras.push((self.generator_name(g), alg.clone()));
            for sub in alg.subuniverses(self.caps.max_hom_search)? {
                if sub.count_ones(..) < alg.size() {
                    let members: Vec<String> = sub.ones().map(|a| alg.element_name(a)).collect();
                    let (s, _) = alg.subalgebra(&sub)?;
                    algebras.push((format!("{}[{}]", self.generator_name(g), members.join(",")), s));
                }
            }
        }
        for k in 0..=n_bound {
            algebras.push((format!("F_{k}"), self.free_algebra(k)?.algebra().clone()));
        }
        let mut out = Vec::new();
        for (name, alg) in algebras {
            if alg.size() > DIAGNOSTIC_SIZE_LIMIT {
                return Err(Error::cap("algebra size for congruence enumeration", DIAGNOSTIC_SIZE_LIMIT));
            }
            out.push(DiagnosticEntry {
                size: alg.size(),
                one_regular: alg.check_one_regular(self.caps.max_congruences)?,
                orderable: alg.check_congruence_orderable(),
                algebra: name,
            });
        }
        Ok(out)
    }

    /// Checks that `A \ {∗}` is a subuniverse of every subdirectly
    /// irreducible `A` with `|A| > 2` among the quotients `F_k / η`
    /// (`k ≤ n_bound`, `η ∈ Fm(F_k)`) and the irreducible quotients of
    /// subalgebras of generators.
    pub fn si_members_check(&self, n_bound: usize) -> Result<SiReport> {
        if let Some(r) = self.si_reports.lock().unwrap().get(&n_bound) {
            return Ok(r.clone());
        }
        let report = self.si_members_report(n_bound)?;
        self.si_reports.lock().unwrap().insert(n_bound, report.clone());
        Ok(report)
    }

    fn si_members_report(&self, n_bound: usize) -> Result<SiReport> {
        let mut candidates: Vec<(String, Arc<FiniteAlgebra>, usize)> = Vec::new();
        for k in 0..=n_bound {
            for (i, q) in self.si_quotients(k)?.into_iter().enumerate() {
                candidates.push((format!("F_{k}/eta{i}"), q.algebra, q.star));
            }
        }
        for (g, alg) in self.generators.iter().enumerate() {
            for sub in alg.subuniverses(self.caps.max_hom_search)? {
                let members: Vec<String> = sub.ones().map(|a| alg.element_name(a)).collect();
                let (s, _) = alg.subalgebra(&sub)?;
                for (i, (q, _, star)) in si_quotients_of(&s, self.caps.max_congruences)?
                    .into_iter()
                    .enumerate()
                {
                    let name = format!("{}[{}]/eta{i}", self.generator_name(g), members.join(","));
                    candidates.push((name, q, star));
                }
            }
        }
        let mut report = SiReport::default();
        for (name, alg, star) in candidates {
            report.examined += 1;
            if alg.size() <= 2 {
                continue;
            }
            report.larger_than_two += 1;
            let mut rest = FixedBitSet::with_capacity(alg.size());
            rest.insert_range(..);
            rest.set(star, false);
            if let Some((op, args)) = alg.closed_under_ops(&rest) {
                report.offenders.push(SiOffender {
                    algebra: name,
                    operation: self.sig.op(op).name.clone(),
                    args: args.iter().map(|&a| alg.element_name(a)).collect(),
                    result: alg.element_name(alg.apply(op, &args)),
                });
            }
        }
        Ok(report)
    }
}
