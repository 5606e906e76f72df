//! Matching problems `{p = 1}`: unifiability, brute-force unifiers and
//! certificate checks.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{for_each_tuple, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::term::{Substitution, Term};
use crate::variety::{FreeAlgebra, IrreducibleFilters, VarietyContext, Witness};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnifierKind {
    Plain,
    Projective,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    BruteForce,
    SynthesisCp,
    SynthesisSubtractive,
    HeightInduction,
}

/// A unifier `x_i ↦ tau[i-1]` of the matching problem `{p = 1 : p ∈ problem}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnifierCertificate {
    pub problem: Vec<Term>,
    pub tau: Vec<Term>,
    pub kind: UnifierKind,
    pub provenance: Provenance,
    pub verified: bool,
}

/// On-disk certificate. Several problem terms are joined with `"; "`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub term: String,
    pub tau: Vec<String>,
    pub kind: UnifierKind,
    pub provenance: Provenance,
    #[serde(default)]
    pub verified: bool,
}

impl UnifierCertificate {
    pub fn rank(&self) -> usize {
        self.tau.len()
    }

    pub fn substitution(&self) -> Substitution {
        Substitution::from_images(self.tau.clone())
    }

    pub fn to_file(&self, ctx: &VarietyContext) -> CertificateFile {
        CertificateFile {
            term: self
                .problem
                .iter()
                .map(|t| ctx.format(t))
                .collect::<Vec<_>>()
                .join("; "),
            tau: self.tau.iter().map(|t| ctx.format(t)).collect(),
            kind: self.kind,
            provenance: self.provenance,
            verified: self.verified,
        }
    }

    pub fn from_file(ctx: &VarietyContext, file: &CertificateFile) -> Result<Self> {
        let problem = file
            .term
            .split(';')
            .map(|s| ctx.parse(s.trim()))
            .collect::<Result<Vec<_>>>()?;
        let tau = file.tau.iter().map(|s| ctx.parse(s)).collect::<Result<Vec<_>>>()?;
        let n = max_var(&problem);
        if tau.len() < n {
            return Err(Error::InvalidAlgebra(format!(
                "certificate gives {} images for a problem in {} variables",
                tau.len(),
                n
            )));
        }
        Ok(UnifierCertificate {
            problem,
            tau,
            kind: file.kind,
            provenance: file.provenance,
            verified: file.verified,
        })
    }
}

pub(crate) fn max_var(terms: &[Term]) -> usize {
    terms.iter().map(|t| t.max_var() as usize).max().unwrap_or(0)
}

/// Turns each equation into matching terms: `s ↔ t` when an equivalence
/// term is designated, otherwise `s(s,t)` and `s(t,s)`.
pub fn reduce_to_matching(ctx: &VarietyContext, equations: &[(Term, Term)]) -> Result<Vec<Term>> {
    let mut out = Vec::new();
    for (s, t) in equations {
        if ctx.equiv_term().is_some() {
            out.push(ctx.equiv(s, t)?);
        } else {
            out.push(ctx.subtract(s, t)?);
            out.push(ctx.subtract(t, s)?);
        }
    }
    Ok(out)
}

/// A ground unifier: values in `F_0` for the variables of `t` (variables
/// not occurring in `t` go to `1`).
///
/// Any unifier into `F_m` followed by `x_i ↦ 1` is ground, so this decides
/// unifiability.
pub fn ground_unifiable(ctx: &VarietyContext, t: &Term) -> Result<Option<Vec<Term>>> {
    let n = t.max_var() as usize;
    let f0 = ctx.free_algebra(0)?;
    let occurring = t.variables();
    let total = (f0.size() as u128).pow(occurring.len() as u32);
    let cap = ctx.caps().max_hom_search;
    if total > cap as u128 {
        return Err(Error::cap("ground assignments", cap));
    }
    let mut args = vec![f0.one(); n];
    let mut found = None;
    for_each_tuple(f0.size(), occurring.len(), |vals| {
        if found.is_some() {
            return;
        }
        for (&v, &a) in occurring.iter().zip(vals) {
            args[v as usize - 1] = a;
        }
        if f0.eval(t, &args) == f0.one() {
            found = Some(args.iter().map(|&a| f0.rep(a).clone()).collect());
        }
    });
    Ok(found)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnifConditions {
    /// Every two-element member has a tuple sent to `1`.
    pub cond3: bool,
    /// `[t)` in `F_n` holds no constant other than `1`.
    pub cond4: bool,
    pub cond3_witness: Option<String>,
    pub cond4_witness: Option<String>,
    /// Set when the context fails the χ identities or has no equivalence
    /// term, so the conditions no longer characterize unifiability.
    pub informational: bool,
}

impl UnifConditions {
    pub fn holds(&self) -> bool {
        self.cond3 && self.cond4
    }
}

pub fn check_unif_conditions(ctx: &VarietyContext, t: &Term) -> Result<UnifConditions> {
    let n = t.max_var() as usize;
    let mut cond3_witness = None;
    for (i, b) in ctx.two_element_members()?.iter().enumerate() {
        let mut hit = false;
        for_each_tuple(2, n, |a| hit = hit || b.eval(t, a) == b.one());
        if !hit {
            let tables: Vec<String> = ctx
                .signature()
                .op_ids()
                .map(|op| {
                    let row: Vec<String> = b.table(op).iter().map(|v| v.to_string()).collect();
                    format!("{}=[{}]", ctx.signature().op(op).name, row.join(","))
                })
                .collect();
            cond3_witness = Some(format!(
                "two-element member #{i} ({}) never sends the term to 1",
                tables.join(" ")
            ));
            break;
        }
    }

    let free = ctx.free_algebra(n)?;
    let fm = ctx.irreducibles(n)?;
    let p = free.element_of(t)?;
    let filter = fm.principal(p);
    let cond4_witness = ctx
        .signature()
        .constants()
        .filter(|&c| c != ctx.signature().one())
        .find(|&c| {
            let e = free.element_of(&Term::constant(c)).expect("constants are ground");
            e != free.one() && filter.contains(e)
        })
        .map(|c| format!("[t) contains the constant {}", ctx.signature().op(c).name));

    Ok(UnifConditions {
        cond3: cond3_witness.is_none(),
        cond4: cond4_witness.is_none(),
        cond3_witness,
        cond4_witness,
        informational: match ctx.check_variety_identities() {
            Ok(r) => !r.passed(),
            Err(Error::NoDesignatedTerm) => true,
            Err(e) => return Err(e),
        },
    })
}

/// One homomorphic image used to prune the search: either a coordinate of
/// the target (a generator) or the map onto `F_0`.
struct Projection {
    table: usize,
    values: Vec<u32>,
}

/// `feasible[j][code]`: the prefix `(b_1..b_j)`, coded in mixed radix,
/// extends to a tuple sending every problem term to `1`.
struct Feasibility {
    base: usize,
    feasible: Vec<Vec<bool>>,
}

impl Feasibility {
    fn new(alg: &FiniteAlgebra, problem: &[Term], n: usize, cap: usize) -> Result<Self> {
        let base = alg.size();
        let total = (base as u128).pow(n as u32);
        if total > cap as u128 {
            return Err(Error::cap("feasibility table entries", cap));
        }
        let mut sat = Vec::with_capacity(total as usize);
        for_each_tuple(base, n, |a| sat.push(problem.iter().all(|p| alg.eval(p, a) == alg.one())));
        let mut feasible = vec![sat];
        for _ in 0..n {
            let next = feasible.last().unwrap();
            let row: Vec<bool> = next.chunks(base).map(|c| c.iter().any(|&b| b)).collect();
            feasible.push(row);
        }
        feasible.reverse();
        Ok(Feasibility { base, feasible })
    }
}

/// Enumerates homomorphisms `σ: F_n → target` with `σ(p) = 1` for every
/// problem term, as images of `x_1..x_n`, in mixed-radix order over
/// `domains` (`x_1` most significant). `visit` returns `true` to stop.
///
/// Partial assignments are cut as soon as some coordinate of the target,
/// or the image in `F_0`, admits no completion.
pub fn search_unifiers(
    ctx: &VarietyContext,
    problem: &[Term],
    n: usize,
    target: &FreeAlgebra,
    domains: Option<&[Vec<usize>]>,
    mut visit: impl FnMut(&[usize]) -> bool,
) -> Result<()> {
    let cap = ctx.caps().max_hom_search;
    let mut tables = Vec::new();
    for g in ctx.generators() {
        tables.push(Feasibility::new(g, problem, n, cap)?);
    }
    let mut projections: Vec<Projection> = (0..target.width())
        .map(|c| Projection {
            table: target.coordinates()[c].0,
            values: (0..target.size()).map(|e| target.value(e, c) as u32).collect(),
        })
        .collect();
    if target.rank() > 0 {
        let f0 = ctx.free_algebra(0)?;
        tables.push(Feasibility::new(f0.algebra(), problem, n, cap)?);
        let ones = vec![f0.one(); target.rank()];
        projections.push(Projection {
            table: tables.len() - 1,
            values: target.evaluate_into(f0.algebra(), &ones).into_iter().map(|v| v as u32).collect(),
        });
    }
    if projections.iter().any(|pr| !tables[pr.table].feasible[0][0]) {
        return Ok(());
    }

    let all: Vec<usize> = (0..target.size()).collect();
    let domain = |i: usize| -> &[usize] {
        match domains {
            Some(d) => &d[i],
            None => &all,
        }
    };
    let m = projections.len();
    let mut codes = vec![0usize; (n + 1) * m];
    let mut choice = vec![0usize; n];
    let mut images = vec![0usize; n];
    let mut nodes = 0usize;
    if n == 0 {
        visit(&images);
        return Ok(());
    }
    let mut j = 0;
    loop {
        // try the next candidate at depth j
        let dom = domain(j);
        if choice[j] >= dom.len() {
            if j == 0 {
                return Ok(());
            }
            choice[j] = 0;
            j -= 1;
            choice[j] += 1;
            continue;
        }
        nodes += 1;
        if nodes > cap {
            return Err(Error::cap("unifier search nodes", cap));
        }
        let e = dom[choice[j]];
        let (prev, next) = codes.split_at_mut((j + 1) * m);
        let prev = &prev[j * m..];
        let ok = projections.iter().enumerate().all(|(k, pr)| {
            let t = &tables[pr.table];
            let code = prev[k] * t.base + pr.values[e] as usize;
            next[k] = code;
            t.feasible[j + 1][code]
        });
        if !ok {
            choice[j] += 1;
            continue;
        }
        images[j] = e;
        if j + 1 == n {
            if visit(&images) {
                return Ok(());
            }
            choice[j] += 1;
        } else {
            j += 1;
            choice[j] = 0;
        }
    }
}

fn certificate(
    problem: Vec<Term>,
    free: &FreeAlgebra,
    images: &[usize],
    kind: UnifierKind,
    provenance: Provenance,
) -> UnifierCertificate {
    UnifierCertificate {
        problem,
        tau: images.iter().map(|&e| free.rep(e).clone()).collect(),
        kind,
        provenance,
        verified: false,
    }
}

/// First endomorphism of `F_n` (in element order) sending `t` to `1`.
pub fn brute_force_unifier(ctx: &VarietyContext, t: &Term) -> Result<Option<UnifierCertificate>> {
    let n = t.max_var() as usize;
    let free = ctx.free_algebra(n)?;
    let mut hit = None;
    search_unifiers(ctx, std::slice::from_ref(t), n, &free, None, |img| {
        hit = Some(img.to_vec());
        true
    })?;
    Ok(hit.map(|img| {
        let mut c = certificate(vec![t.clone()], &free, &img, UnifierKind::Plain, Provenance::BruteForce);
        c.verified = verify_certificate(ctx, &c).passed();
        c
    }))
}

/// Like [`brute_force_unifier`] but with each `x_i` sent into its own
/// class modulo `[t)`.
pub fn brute_force_projective_unifier(ctx: &VarietyContext, t: &Term) -> Result<Option<UnifierCertificate>> {
    let n = t.max_var() as usize;
    let free = ctx.free_algebra(n)?;
    let fm = ctx.irreducibles(n)?;
    let p = free.element_of(t)?;
    let domains: Vec<Vec<usize>> = (1..=n)
        .map(|i| {
            let x = free.generator(i);
            (0..free.size()).filter(|&e| fm.congruent_mod(p, e, x)).collect()
        })
        .collect();
    let mut hit = None;
    search_unifiers(ctx, std::slice::from_ref(t), n, &free, Some(&domains), |img| {
        hit = Some(img.to_vec());
        true
    })?;
    Ok(hit.map(|img| {
        let mut c = certificate(
            vec![t.clone()],
            &free,
            &img,
            UnifierKind::Projective,
            Provenance::BruteForce,
        );
        c.verified = verify_certificate(ctx, &c).passed();
        c
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertificateCheck {
    /// `τ(p) ≈ 1` for every problem term.
    pub unifies: bool,
    /// `p ≈ 1 ⇒ τ(x_i) ≈ x_i` on every generator.
    pub quasi_identity: bool,
    pub witness: Option<Witness>,
    pub kind: UnifierKind,
}

impl CertificateCheck {
    /// Plain certificates only need to unify.
    pub fn passed(&self) -> bool {
        self.unifies && (self.kind == UnifierKind::Plain || self.quasi_identity)
    }
}

pub fn verify_certificate(ctx: &VarietyContext, cert: &UnifierCertificate) -> CertificateCheck {
    let sub = cert.substitution();
    let one = ctx.one();
    let mut witness = None;
    let unifies = cert.problem.iter().all(|p| match ctx.identity_witness(&p.substitute(&sub), &one) {
        None => true,
        Some(w) => {
            witness.get_or_insert(w);
            false
        }
    });
    let n = cert.rank().max(max_var(&cert.problem));
    let mut quasi = None;
    'outer: for (g, alg) in ctx.generators().iter().enumerate() {
        let mut bad = None;
        for_each_tuple(alg.size(), n, |a| {
            if bad.is_some() || !cert.problem.iter().all(|p| alg.eval(p, a) == alg.one()) {
                return;
            }
            if let Some(i) = (0..cert.rank()).find(|&i| alg.eval(&cert.tau[i], a) != a[i]) {
                bad = Some(Witness {
                    algebra: ctx.generator_name(g),
                    values: a.iter().map(|&v| alg.element_name(v)).collect(),
                    detail: format!(
                        "problem holds but tau(x{}) = {} differs from x{}",
                        i + 1,
                        alg.element_name(alg.eval(&cert.tau[i], a)),
                        i + 1
                    ),
                });
            }
        });
        if bad.is_some() {
            quasi = bad;
            break 'outer;
        }
    }
    let quasi_identity = quasi.is_none();
    if witness.is_none() && cert.kind == UnifierKind::Projective {
        witness = quasi;
    }
    CertificateCheck {
        unifies,
        quasi_identity,
        witness,
        kind: cert.kind,
    }
}

/// Whether `τ(x_i) ≡ x_i` modulo the filter generated by the problem,
/// decided in `F_n`. `None` when `F_n` or its irreducibles are out of reach.
pub fn is_projective_in_free(ctx: &VarietyContext, cert: &UnifierCertificate) -> Result<Option<bool>> {
    let n = cert.rank();
    let (free, fm) = match (ctx.free_algebra(n), ctx.irreducibles(n)) {
        (Ok(f), Ok(m)) => (f, m),
        (Err(Error::CapExceeded { .. }), _) | (_, Err(Error::CapExceeded { .. })) => return Ok(None),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let ps: Vec<usize> = cert
        .problem
        .iter()
        .map(|p| free.element_of(p))
        .collect::<Result<_>>()?;
    if ps.iter().any(|&p| {
        let img = free.eval(free.rep(p), &tau_elements(&free, cert));
        img != free.one()
    }) {
        return Ok(Some(false));
    }
    let tau = tau_elements(&free, cert);
    Ok(Some((1..=n).all(|i| congruent_mod_all(&fm, &ps, tau[i - 1], free.generator(i)))))
}

fn tau_elements(free: &FreeAlgebra, cert: &UnifierCertificate) -> Vec<usize> {
    cert.tau.iter().map(|t| free.eval(t, free.generators())).collect()
}

/// `a ≡ b` modulo the join of the principal filters `[p)`, `p ∈ ps`.
pub fn congruent_mod_all(fm: &IrreducibleFilters, ps: &[usize], a: usize, b: usize) -> bool {
    fm.items()
        .iter()
        .filter(|it| ps.iter().all(|&p| it.contains(p)))
        .all(|it| it.image(a) == it.image(b))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub k: usize,
    pub sigma: Vec<String>,
    pub variable: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReproductiveMethod {
    /// Projectivity was checked in `F_n`, which gives `σ∘τ = σ` for all
    /// unifiers `σ` into any algebra.
    Projectivity,
    Enumeration,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReproductiveCheck {
    pub holds: bool,
    pub method: ReproductiveMethod,
    /// Unifiers examined by enumeration.
    pub checked: usize,
    pub counterexample: Option<Counterexample>,
}

/// `σ∘τ = σ` for every unifier `σ: F_n → F_k`, `k ≤ k_bound`.
pub fn verify_mgu_reproductive(
    ctx: &VarietyContext,
    cert: &UnifierCertificate,
    k_bound: usize,
) -> Result<ReproductiveCheck> {
    if let Some(true) = is_projective_in_free(ctx, cert)? {
        return Ok(ReproductiveCheck {
            holds: true,
            method: ReproductiveMethod::Projectivity,
            checked: 0,
            counterexample: None,
        });
    }
    verify_mgu_exhaustive(ctx, cert, k_bound)
}

/// [`verify_mgu_reproductive`] by enumeration only.
pub fn verify_mgu_exhaustive(
    ctx: &VarietyContext,
    cert: &UnifierCertificate,
    k_bound: usize,
) -> Result<ReproductiveCheck> {
    let n = cert.rank();
    let mut checked = 0usize;
    for k in 0..=k_bound {
        let fk: Arc<FreeAlgebra> = ctx.free_algebra(k)?;
        let mut bad = None;
        search_unifiers(ctx, &cert.problem, n, &fk, None, |sigma| {
            checked += 1;
            match (0..n).find(|&i| fk.eval(&cert.tau[i], sigma) != sigma[i]) {
                Some(i) => {
                    bad = Some(Counterexample {
                        k,
                        sigma: sigma.iter().map(|&e| ctx.format(fk.rep(e))).collect(),
                        variable: i + 1,
                    });
                    true
                }
                None => false,
            }
        })?;
        if bad.is_some() {
            return Ok(ReproductiveCheck {
                holds: false,
                method: ReproductiveMethod::Enumeration,
                checked,
                counterexample: bad,
            });
        }
    }
    Ok(ReproductiveCheck {
        holds: true,
        method: ReproductiveMethod::Enumeration,
        checked,
        counterexample: None,
    })
}
