//! Varieties presented as `Var(K)` for a finite list `K` of finite algebras.
//!
//! Identities of `Var(K)` are exactly the identities of `K`, so equality of
//! terms is decided by evaluation. Structural diagnostics are bounded
//! checks on the generators, their subalgebras and small free algebras.

pub mod builtin;
mod checks;
mod file;
mod free;
mod irreducible;

pub use checks::{IdentityReport, OperationReport, SiOffender, SiReport, DiagnosticEntry};
pub use file::{load_context, load_context_file, ContextFile, DerivedEntry, OperationEntry, SignatureFile};
pub use free::{Definition, FreeAlgebra};
pub use irreducible::{canonical_key, si_quotients_of, FmMethod, Irreducible, IrreducibleFilters, SiQuotient, LATTICE_LIMIT};

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::algebra::{for_each_tuple, FiniteAlgebra, FilterLattice};
use crate::error::{Error, Result};
use crate::term::{Signature, Substitution, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    pub max_free_size: usize,
    pub max_congruences: usize,
    pub max_hom_search: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_free_size: 20_000,
            max_congruences: crate::algebra::DEFAULT_MAX_CONGRUENCES,
            max_hom_search: 10_000_000,
        }
    }
}

/// A failing instance: which algebra, which values, and what went wrong.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub algebra: String,
    pub values: Vec<String>,
    pub detail: String,
}

#[derive(Debug)]
pub struct VarietyContext {
    name: String,
    sig: Arc<Signature>,
    generators: Vec<FiniteAlgebra>,
    equiv: Option<Term>,
    subtractive: Option<Term>,
    caps: Caps,
    free: Mutex<HashMap<usize, Arc<FreeAlgebra>>>,
    filters: Mutex<HashMap<usize, Arc<FilterLattice>>>,
    irreducibles: Mutex<HashMap<usize, Arc<IrreducibleFilters>>>,
    si_reports: Mutex<HashMap<usize, SiReport>>,
    two_element: Mutex<Option<Vec<FiniteAlgebra>>>,
}

impl VarietyContext {
    /// Builds a context and validates the designated terms; a term that
    /// fails validation is a load error.
    pub fn new(
        name: &str,
        sig: Arc<Signature>,
        generators: Vec<FiniteAlgebra>,
        equiv: Option<Term>,
        subtractive: Option<Term>,
        caps: Caps,
    ) -> Result<Self> {
        let ctx = Self::new_unchecked(name, sig, generators, equiv, subtractive, caps)?;
        if let Some(t) = &ctx.equiv {
            if let Some(w) = ctx.validate_equivalence_term(t) {
                return Err(Error::InvalidContext(format!(
                    "equivalence term fails: {} at {} ({})",
                    w.detail,
                    w.values.join(", "),
                    w.algebra
                )));
            }
        }
        if let Some(t) = &ctx.subtractive {
            if let Some(w) = ctx.validate_subtractive_term(t) {
                return Err(Error::InvalidContext(format!(
                    "subtractive term fails: {} at {} ({})",
                    w.detail,
                    w.values.join(", "),
                    w.algebra
                )));
            }
        }
        Ok(ctx)
    }

    /// Like [`new`](Self::new) but keeps designated terms unvalidated.
    pub fn new_unchecked(
        name: &str,
        sig: Arc<Signature>,
        generators: Vec<FiniteAlgebra>,
        equiv: Option<Term>,
        subtractive: Option<Term>,
        caps: Caps,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidContext("no generating algebras".into()));
        }
        if let Some(g) = generators.iter().find(|g| g.signature() != &sig) {
            return Err(Error::InvalidContext(format!(
                "generator of size {} uses a different signature",
                g.size()
            )));
        }
        for t in equiv.iter().chain(&subtractive) {
            sig.check_term(t)?;
            if t.max_var() > 2 {
                return Err(Error::InvalidContext(format!(
                    "designated term `{}` is not binary",
                    sig.format(t)
                )));
            }
        }
        Ok(VarietyContext {
            name: name.to_string(),
            sig,
            generators,
            equiv,
            subtractive,
            caps,
            free: Mutex::new(HashMap::new()),
            filters: Mutex::new(HashMap::new()),
            irreducibles: Mutex::new(HashMap::new()),
            si_reports: Mutex::new(HashMap::new()),
            two_element: Mutex::new(None),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn generators(&self) -> &[FiniteAlgebra] {
        &self.generators
    }

    pub fn generator_name(&self, g: usize) -> String {
        format!("{}#{}", self.name, g)
    }

    pub fn caps(&self) -> &Caps {
        &self.caps
    }

    pub fn set_caps(&mut self, caps: Caps) {
        self.caps = caps;
        self.free.lock().unwrap().clear();
        self.filters.lock().unwrap().clear();
        self.irreducibles.lock().unwrap().clear();
        self.si_reports.lock().unwrap().clear();
        *self.two_element.lock().unwrap() = None;
    }

    pub fn equiv_term(&self) -> Option<&Term> {
        self.equiv.as_ref()
    }

    pub fn subtractive_term(&self) -> Option<&Term> {
        self.subtractive.as_ref()
    }

    pub fn parse(&self, text: &str) -> Result<Term> {
        self.sig.parse(text)
    }

    pub fn format(&self, t: &Term) -> String {
        self.sig.format(t)
    }

    /// `a ↔ b` via the designated equivalence term.
    pub fn equiv(&self, a: &Term, b: &Term) -> Result<Term> {
        let e = self.equiv.as_ref().ok_or(Error::NoDesignatedTerm)?;
        Ok(instantiate(e, a, b))
    }

    /// `s(a, b)` via the designated subtractive term, falling back to the
    /// equivalence term.
    pub fn subtract(&self, a: &Term, b: &Term) -> Result<Term> {
        let s = self
            .subtractive
            .as_ref()
            .or(self.equiv.as_ref())
            .ok_or(Error::NoDesignatedTerm)?;
        Ok(instantiate(s, a, b))
    }

    /// The term used as `s` by the subtractive algorithms.
    pub fn subtraction_term(&self) -> Option<&Term> {
        self.subtractive.as_ref().or(self.equiv.as_ref())
    }

    pub fn one(&self) -> Term {
        self.sig.one_term()
    }

    /// Decides `Var(K) ⊨ s ≈ t`.
    pub fn terms_equal(&self, s: &Term, t: &Term) -> bool {
        self.identity_witness(s, t).is_none()
    }

    /// First assignment into a generator separating `s` and `t`.
    pub fn identity_witness(&self, s: &Term, t: &Term) -> Option<Witness> {
        (0..self.generators.len()).find_map(|g| self.witness_in(g, s, t))
    }

    /// First assignment into generator `g` separating `s` and `t`.
    pub fn witness_in(&self, g: usize, s: &Term, t: &Term) -> Option<Witness> {
        let alg = &self.generators[g];
        let n = s.max_var().max(t.max_var()) as usize;
        let mut found = None;
        for_each_tuple(alg.size(), n, |a| {
            if found.is_some() {
                return;
            }
            let (l, r) = (alg.eval(s, a), alg.eval(t, a));
            if l != r {
                found = Some(Witness {
                    algebra: self.generator_name(g),
                    values: a.iter().map(|&v| alg.element_name(v)).collect(),
                    detail: format!(
                        "{} = {} but {} = {}",
                        self.sig.format(s),
                        alg.element_name(l),
                        self.sig.format(t),
                        alg.element_name(r)
                    ),
                });
            }
        });
        found
    }

    /// The free algebra on `n` generators (memoized).
    pub fn free_algebra(&self, n: usize) -> Result<Arc<FreeAlgebra>> {
        if let Some(f) = self.free.lock().unwrap().get(&n) {
            return Ok(f.clone());
        }
        let f = Arc::new(FreeAlgebra::build(self, n)?);
        self.free.lock().unwrap().insert(n, f.clone());
        Ok(f)
    }

    /// The filter lattice of `F_n` (memoized).
    pub fn free_filters(&self, n: usize) -> Result<Arc<FilterLattice>> {
        if let Some(f) = self.filters.lock().unwrap().get(&n) {
            return Ok(f.clone());
        }
        let free = self.free_algebra(n)?;
        let lat = Arc::new(free.algebra().filter_lattice(self.caps.max_congruences)?);
        self.filters.lock().unwrap().insert(n, lat.clone());
        Ok(lat)
    }
}

/// `body(a, b)` for a binary term `body` in `x1, x2`.
pub fn instantiate(body: &Term, a: &Term, b: &Term) -> Term {
    body.substitute(&Substitution::from_images(vec![a.clone(), b.clone()]))
}
