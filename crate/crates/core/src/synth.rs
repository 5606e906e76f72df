//! Constructive projective unifiers: the `g_C` descent for CP contexts,
//! the subtractive descent and the height induction for plain unifiers.

use std::collections::{BTreeMap, HashMap};

use fixedbitset::FixedBitSet;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::term::{Substitution, Term};
use crate::unify::{
    congruent_mod_all, ground_unifiable, check_unif_conditions, reduce_to_matching, verify_certificate,
    Provenance, UnifierCertificate, UnifierKind,
};
use crate::variety::{FreeAlgebra, IrreducibleFilters, VarietyContext};

/// Guards the descent loops against bugs; every loop is bounded anyway.
pub const MAX_STEPS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Cp,
    Subtractive,
    Height,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    /// The current term, as a representative of its class in `F_n`.
    pub p: Term,
    /// `C` for the CP loop, `S` or the `m`-set otherwise (1-based).
    pub variables: Vec<usize>,
    /// The irreducible filter that selected the variables, if any.
    pub eta: Option<usize>,
    pub g: Vec<Term>,
    /// `k(p)` for the CP loop, the depth of `[p)` otherwise.
    pub before: usize,
    pub after: usize,
    pub star_before: Vec<usize>,
    pub star_after: Vec<usize>,
    pub filter_before: FixedBitSet,
    pub filter_after: FixedBitSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthesisTrace {
    pub kind: TraceKind,
    pub rank: usize,
    pub steps: Vec<TraceStep>,
    pub final_tau: Vec<Term>,
}

impl SynthesisTrace {
    fn new(kind: TraceKind, rank: usize) -> Self {
        SynthesisTrace {
            kind,
            rank,
            steps: Vec::new(),
            final_tau: Vec::new(),
        }
    }

    pub fn to_json(&self, ctx: &VarietyContext) -> Value {
        let measure = match self.kind {
            TraceKind::Cp => "k",
            _ => "depth",
        };
        let steps: Vec<Value> = self
            .steps
            .iter()
            .map(|s| {
                let mut v = json!({
                    "p": ctx.format(&s.p),
                    "g": s.g.iter().map(|t| ctx.format(t)).collect::<Vec<_>>(),
                    format!("{measure}_before"): s.before,
                    format!("{measure}_after"): s.after,
                });
                let key = if self.kind == TraceKind::Cp { "chosen_c" } else { "variables" };
                v[key] = json!(s.variables);
                if let Some(eta) = s.eta {
                    v["chosen_eta"] = json!(eta);
                }
                v
            })
            .collect();
        json!({
            "kind": self.kind,
            "steps": steps,
            "final_tau": self.final_tau.iter().map(|t| ctx.format(t)).collect::<Vec<_>>(),
        })
    }
}

/// `h(e)` for the endomorphism `x_i ↦ images[i-1]`.
fn apply(free: &FreeAlgebra, images: &[usize], e: usize) -> usize {
    free.eval(free.rep(e), images)
}

fn binary(free: &FreeAlgebra, body: &Term, a: usize, b: usize) -> usize {
    free.eval(body, &[a, b])
}

fn steps_exceeded() -> Error {
    Error::cap("synthesis steps", MAX_STEPS)
}

/// The classes `W_C` of `Fm(F_n)` with respect to the unifier `f`
/// (images of the generators): two-element quotients go by where `x_i` and
/// `f(x_i)` differ, larger ones by which `x_i` land on `∗`.
pub fn classify_meet_irreducibles(
    ctx: &VarietyContext,
    n: usize,
    f: &[usize],
) -> Result<BTreeMap<Vec<usize>, Vec<usize>>> {
    let free = ctx.free_algebra(n)?;
    let fm = ctx.irreducibles(n)?;
    Ok(classify(&free, &fm, f))
}

fn classify(free: &FreeAlgebra, fm: &IrreducibleFilters, f: &[usize]) -> BTreeMap<Vec<usize>, Vec<usize>> {
    let n = free.rank();
    let mut out: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (idx, it) in fm.items().iter().enumerate() {
        let c: Vec<usize> = (1..=n)
            .filter(|&i| {
                let x = free.generator(i);
                if it.quotient_size() == 2 {
                    it.image(x) != it.image(f[i - 1])
                } else {
                    it.is_star(x)
                }
            })
            .collect();
        out.entry(c).or_default().push(idx);
    }
    out
}

fn finish(
    ctx: &VarietyContext,
    t: &Term,
    free: &FreeAlgebra,
    images: &[usize],
    kind: UnifierKind,
    provenance: Provenance,
    trace: &mut SynthesisTrace,
) -> Result<UnifierCertificate> {
    let tau: Vec<Term> = images.iter().map(|&e| free.rep(e).clone()).collect();
    trace.final_tau = tau.clone();
    let mut cert = UnifierCertificate {
        problem: vec![t.clone()],
        tau,
        kind,
        provenance,
        verified: false,
    };
    let check = verify_certificate(ctx, &cert);
    if !check.passed() {
        return Err(Error::PreconditionFailed(format!(
            "synthesized unifier failed verification: {}",
            check.witness.map(|w| w.detail).unwrap_or_default()
        )));
    }
    if kind == UnifierKind::Projective {
        let fm = ctx.irreducibles(free.rank())?;
        let p = free.element_of(t)?;
        if !(1..=free.rank()).all(|i| fm.congruent_mod(p, images[i - 1], free.generator(i))) {
            return Err(Error::PreconditionFailed(
                "synthesized unifier is not projective".into(),
            ));
        }
    }
    cert.verified = true;
    Ok(cert)
}

/// Projective unifier for `t` in a CP context by descent on `k(p)`.
pub fn synthesize_cp(ctx: &VarietyContext, t: &Term) -> Result<(UnifierCertificate, SynthesisTrace)> {
    let e = ctx.equiv_term().ok_or(Error::NoDesignatedTerm)?.clone();
    if let Some(w) = ctx.check_chi_identity(t)? {
        return Err(Error::PreconditionFailed(format!(
            "chi identity: {} at {} ({})",
            w.detail,
            w.values.join(", "),
            w.algebra
        )));
    }
    let ground = ground_unifiable(ctx, t)?
        .ok_or_else(|| Error::NotUnifiable(format!("{} has no ground unifier", ctx.format(t))))?;
    let n = t.max_var() as usize;
    let free = ctx.free_algebra(n)?;
    let fm = ctx.irreducibles(n)?;
    let f: Vec<usize> = ground
        .iter()
        .map(|g| free.element_of(g))
        .collect::<Result<_>>()?;
    let classes = classify(&free, &fm, &f);
    let k_of = |star: &[usize]| {
        classes
            .values()
            .filter(|w| w.iter().any(|i| star.binary_search(i).is_ok()))
            .count()
    };

    let mut trace = SynthesisTrace::new(TraceKind::Cp, n);
    let mut acc: Vec<usize> = free.generators().to_vec();
    let mut p = free.element_of(t)?;
    let mut star = fm.star_set(p);
    let mut k = k_of(&star);
    while k > 0 {
        if trace.steps.len() >= MAX_STEPS {
            return Err(steps_exceeded());
        }
        let (c, _) = classes
            .iter()
            .find(|(_, w)| w.iter().any(|i| star.binary_search(i).is_ok()))
            .expect("k > 0");
        let g: Vec<usize> = (1..=n)
            .map(|i| {
                let xp = binary(&free, &e, free.generator(i), p);
                if c.contains(&i) {
                    xp
                } else {
                    binary(&free, &e, xp, p)
                }
            })
            .collect();
        let q = apply(&free, &g, p);
        let q_star = fm.star_set(q);
        let q_k = k_of(&q_star);

        let broken = |what: &str| {
            Err(Error::PreconditionFailed(format!(
                "descent invariant `{what}` failed at {}",
                ctx.format(free.rep(p))
            )))
        };
        if !q_star.iter().all(|i| star.binary_search(i).is_ok()) {
            return broken("N(g(p)) within N(p)");
        }
        if q_k >= k {
            return broken("k decreases");
        }
        if binary(&free, &e, binary(&free, &e, q, p), p) != q {
            return broken("g(p)pp = g(p)");
        }
        if apply(&free, &f, q) != free.one() {
            return broken("f(g(p)) = 1");
        }
        if ctx.check_chi_identity(free.rep(q))?.is_some() {
            return broken("chi identity");
        }

        let p_term = free.rep(p).clone();
        trace.steps.push(TraceStep {
            p: p_term.clone(),
            variables: c.clone(),
            eta: None,
            g: (1..=n as u32)
                .map(|i| {
                    let xp = crate::variety::instantiate(&e, &Term::var(i), &p_term);
                    if c.contains(&(i as usize)) {
                        xp
                    } else {
                        crate::variety::instantiate(&e, &xp, &p_term)
                    }
                })
                .collect(),
            before: k,
            after: q_k,
            star_before: star.clone(),
            star_after: q_star.clone(),
            filter_before: fm.principal(p),
            filter_after: fm.principal(q),
        });
        acc = acc.iter().map(|&a| apply(&free, &g, a)).collect();
        p = q;
        star = q_star;
        k = q_k;
    }
    if p != free.one() {
        return Err(Error::PreconditionFailed(format!(
            "descent stopped at k = 0 with {} different from 1",
            ctx.format(free.rep(p))
        )));
    }
    let cert = finish(ctx, t, &free, &acc, UnifierKind::Projective, Provenance::SynthesisCp, &mut trace)?;
    Ok((cert, trace))
}

/// Projective unifier for `t` via the subtractive term. Each step moves
/// `t` strictly up, so `[t)` strictly shrinks.
pub fn synthesize_subtractive(ctx: &VarietyContext, t: &Term) -> Result<(UnifierCertificate, SynthesisTrace)> {
    let s = ctx.subtraction_term().ok_or(Error::NoDesignatedTerm)?.clone();
    if let Some(w) = ctx.validate_subtractive_term(&s) {
        return Err(Error::PreconditionFailed(format!("subtractive term: {}", w.detail)));
    }
    let report = ctx.si_members_check(2)?;
    if let Some(o) = report.offenders.first() {
        return Err(Error::PreconditionFailed(format!(
            "SI condition: in {} the operation {} leaves A\\{{*}} at ({}) = {}",
            o.algebra,
            o.operation,
            o.args.join(", "),
            o.result
        )));
    }
    let n = t.max_var() as usize;
    let ones = Substitution::from_images(vec![ctx.one(); n]);
    if !ctx.terms_equal(&t.substitute(&ones), &ctx.one()) {
        return Err(Error::PreconditionFailed(format!(
            "special unifier: {} is not 1 at x_i = 1",
            ctx.format(t)
        )));
    }
    let free = ctx.free_algebra(n)?;
    let fm = ctx.irreducibles(n)?;

    let mut trace = SynthesisTrace::new(TraceKind::Subtractive, n);
    let mut acc: Vec<usize> = free.generators().to_vec();
    let mut p = free.element_of(t)?;
    while p != free.one() {
        if trace.steps.len() >= MAX_STEPS {
            return Err(steps_exceeded());
        }
        let star = fm.star_set(p);
        let &eta = star.first().ok_or_else(|| {
            Error::PreconditionFailed("no irreducible filter sends the term to *".into())
        })?;
        let it = fm.get(eta);
        let set: Vec<usize> = (1..=n).filter(|&i| it.is_star(free.generator(i))).collect();
        let g: Vec<usize> = (1..=n)
            .map(|i| {
                let x = free.generator(i);
                if set.contains(&i) {
                    binary(&free, &s, p, x)
                } else {
                    x
                }
            })
            .collect();
        let q = apply(&free, &g, p);
        let (before, after) = (fm.principal(p), fm.principal(q));
        if !(after.is_subset(&before) && before != after) {
            return Err(Error::PreconditionFailed(format!(
                "descent invariant `[g(t)) below [t)` failed at {}",
                ctx.format(free.rep(p))
            )));
        }
        let p_term = free.rep(p).clone();
        trace.steps.push(TraceStep {
            p: p_term.clone(),
            variables: set.clone(),
            eta: Some(eta),
            g: (1..=n as u32)
                .map(|i| {
                    if set.contains(&(i as usize)) {
                        crate::variety::instantiate(&s, &p_term, &Term::var(i))
                    } else {
                        Term::var(i)
                    }
                })
                .collect(),
            before: fm.depth(p),
            after: fm.depth(q),
            star_before: star,
            star_after: fm.star_set(q),
            filter_before: before,
            filter_after: after,
        });
        acc = acc.iter().map(|&a| apply(&free, &g, a)).collect();
        p = q;
    }
    let cert = finish(
        ctx,
        t,
        &free,
        &acc,
        UnifierKind::Projective,
        Provenance::SynthesisSubtractive,
        &mut trace,
    )?;
    Ok((cert, trace))
}

/// A (plain) unifier from `cond4` by induction on the depth of `[t)`.
pub fn synthesize_unifier_height(ctx: &VarietyContext, t: &Term) -> Result<(UnifierCertificate, SynthesisTrace)> {
    let e = ctx.equiv_term().ok_or(Error::NoDesignatedTerm)?.clone();
    let conds = check_unif_conditions(ctx, t)?;
    if !conds.cond4 {
        return Err(Error::PreconditionFailed(format!(
            "cond4: {}",
            conds.cond4_witness.unwrap_or_default()
        )));
    }
    if conds.informational {
        return Err(Error::PreconditionFailed(
            "identity (*): some operation does not commute with chi".into(),
        ));
    }
    let n = t.max_var() as usize;
    let free = ctx.free_algebra(n)?;
    let fm = ctx.irreducibles(n)?;
    let ones = vec![free.one(); n];

    let mut trace = SynthesisTrace::new(TraceKind::Height, n);
    let mut acc: Vec<usize> = free.generators().to_vec();
    let mut p = free.element_of(t)?;
    loop {
        let a = apply(&free, &ones, p);
        if a == free.one() {
            break;
        }
        if trace.steps.len() >= MAX_STEPS {
            return Err(steps_exceeded());
        }
        let cands: Vec<usize> = (0..fm.len())
            .filter(|&i| fm.get(i).contains(p) && !fm.get(i).contains(a))
            .collect();
        let mu = cands
            .iter()
            .copied()
            .find(|&i| {
                !cands
                    .iter()
                    .any(|&j| j != i && fm.get(i).eta().is_subset(fm.get(j).eta()))
            })
            .ok_or_else(|| Error::PreconditionFailed("no filter above [t) omits t(1,...,1)".into()))?;
        let it = fm.get(mu);
        let set: Vec<usize> = (1..=n).filter(|&i| it.is_star(free.generator(i))).collect();
        if set.is_empty() {
            return Err(Error::PreconditionFailed(format!(
                "no generator lands on * modulo filter {mu}"
            )));
        }
        let g: Vec<usize> = (1..=n)
            .map(|i| {
                let x = free.generator(i);
                if set.contains(&i) {
                    binary(&free, &e, x, p)
                } else {
                    x
                }
            })
            .collect();
        let q = apply(&free, &g, p);
        let (before, after) = (fm.principal(p), fm.principal(q));
        if !(after.is_subset(&before) && before != after) {
            return Err(Error::PreconditionFailed(format!(
                "descent invariant `[g(t)) below [t)` failed at {}",
                ctx.format(free.rep(p))
            )));
        }
        let p_term = free.rep(p).clone();
        trace.steps.push(TraceStep {
            p: p_term.clone(),
            variables: set.clone(),
            eta: Some(mu),
            g: (1..=n as u32)
                .map(|i| {
                    if set.contains(&(i as usize)) {
                        crate::variety::instantiate(&e, &Term::var(i), &p_term)
                    } else {
                        Term::var(i)
                    }
                })
                .collect(),
            before: fm.depth(p),
            after: fm.depth(q),
            star_before: fm.star_set(p),
            star_after: fm.star_set(q),
            filter_before: before,
            filter_after: after,
        });
        acc = acc.iter().map(|&x| apply(&free, &g, x)).collect();
        p = q;
    }
    let images: Vec<usize> = acc.iter().map(|&x| apply(&free, &ones, x)).collect();
    let cert = finish(
        ctx,
        t,
        &free,
        &images,
        UnifierKind::Plain,
        Provenance::HeightInduction,
        &mut trace,
    )?;
    Ok((cert, trace))
}

/// The synthesis the context supports: the CP loop when the χ identities
/// hold for every operation, otherwise the subtractive loop.
pub fn synthesize(ctx: &VarietyContext, t: &Term) -> Result<(UnifierCertificate, SynthesisTrace)> {
    if ctx.equiv_term().is_some() && ctx.check_variety_identities()?.passed() {
        synthesize_cp(ctx, t)
    } else if ctx.subtraction_term().is_some() {
        synthesize_subtractive(ctx, t)
    } else {
        Err(Error::NoDesignatedTerm)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Retraction {
    /// The smallest `k ≥ 1` with `τ^{2k} = τ^k`.
    pub power: usize,
    pub tau: Vec<Term>,
    /// Size of the filter `{a : τ(a) = 1}`.
    pub filter_size: usize,
}

/// An idempotent power `ρ` of `τ` whose kernel is the congruence of
/// `φ = {a : τ(a) = 1}`, which makes `F_n/φ` projective.
pub fn idempotent_retraction(ctx: &VarietyContext, n: usize, tau: &[Term]) -> Result<Retraction> {
    let free = ctx.free_algebra(n)?;
    let fm = ctx.irreducibles(n)?;
    let base: Vec<usize> = (0..n)
        .map(|i| free.eval(tau.get(i).unwrap_or(&Term::var(i as u32 + 1)), free.generators()))
        .collect();
    let compose = |outer: &[usize], inner: &[usize]| -> Vec<usize> {
        inner.iter().map(|&e| apply(&free, outer, e)).collect()
    };
    let mut power = 1;
    let mut rho = base.clone();
    loop {
        if compose(&rho, &rho) == rho {
            break;
        }
        if power > free.size() + 1 {
            return Err(Error::cap("retraction powers", free.size() + 1));
        }
        rho = compose(&base, &rho);
        power += 1;
    }
    let tau_all = free.evaluate_into(free.algebra(), &base);
    let rho_all = free.evaluate_into(free.algebra(), &rho);
    let phi: Vec<usize> = (0..free.size()).filter(|&a| tau_all[a] == free.one()).collect();
    let above: Vec<usize> = (0..fm.len())
        .filter(|&i| phi.iter().all(|&a| fm.get(i).contains(a)))
        .collect();
    let mut class_value: HashMap<Vec<usize>, usize> = HashMap::new();
    for a in 0..free.size() {
        if !congruent_mod_all(&fm, &phi, rho_all[a], a) {
            return Err(Error::ConditionThreeFailed(format!(
                "rho({}) is not congruent to it modulo the kernel filter",
                ctx.format(free.rep(a))
            )));
        }
        let key: Vec<usize> = above.iter().map(|&i| fm.get(i).image(a)).collect();
        if *class_value.entry(key).or_insert(rho_all[a]) != rho_all[a] {
            return Err(Error::ConditionThreeFailed(format!(
                "rho separates {} from a congruent element",
                ctx.format(free.rep(a))
            )));
        }
    }
    Ok(Retraction {
        power,
        tau: rho.iter().map(|&e| free.rep(e).clone()).collect(),
        filter_size: phi.len(),
    })
}

#[derive(Clone, Debug)]
pub struct SystemSolution {
    pub certificate: UnifierCertificate,
    /// `σ_{j-1}(p_j)` with the unifier synthesized for it.
    pub steps: Vec<(Term, UnifierCertificate, SynthesisTrace)>,
}

/// Projective unifier of a finite system, composed one matching term at a
/// time: `σ_j = τ_j ∘ σ_{j-1}` with `τ_j` a projective unifier of
/// `σ_{j-1}(p_j)`.
pub fn solve_system(ctx: &VarietyContext, equations: &[(Term, Term)]) -> Result<SystemSolution> {
    let problem = reduce_to_matching(ctx, equations)?;
    let n = crate::unify::max_var(&problem);
    let free = ctx.free_algebra(n)?;
    let mut sigma: Vec<usize> = free.generators().to_vec();
    let mut steps = Vec::new();
    for p in &problem {
        let q = free.rep(apply(&free, &sigma, free.element_of(p)?)).clone();
        if ground_unifiable(ctx, &q)?.is_none() {
            return Err(Error::NotUnifiable(format!(
                "{} has no ground unifier",
                ctx.format(&q)
            )));
        }
        let (cert, trace) = synthesize(ctx, &q)?;
        let m = cert.rank();
        let mut tau: Vec<usize> = free.generators().to_vec();
        for (i, img) in cert.tau.iter().enumerate().take(m) {
            tau[i] = free.eval(img, free.generators());
        }
        sigma = sigma.iter().map(|&e| apply(&free, &tau, e)).collect();
        steps.push((q, cert, trace));
    }
    let provenance = steps
        .first()
        .map(|s| s.1.provenance)
        .unwrap_or(Provenance::SynthesisCp);
    let mut certificate = UnifierCertificate {
        problem: problem.clone(),
        tau: sigma.iter().map(|&e| free.rep(e).clone()).collect(),
        kind: UnifierKind::Projective,
        provenance,
        verified: false,
    };
    let fm = ctx.irreducibles(n)?;
    let ps: Vec<usize> = problem.iter().map(|p| free.element_of(p)).collect::<Result<_>>()?;
    let unifies = ps.iter().all(|&p| apply(&free, &sigma, p) == free.one());
    let projective = (1..=n).all(|i| congruent_mod_all(&fm, &ps, sigma[i - 1], free.generator(i)));
    if !(unifies && projective && verify_certificate(ctx, &certificate).passed()) {
        return Err(Error::PreconditionFailed(
            "composed unifier failed verification".into(),
        ));
    }
    certificate.verified = true;
    Ok(SystemSolution { certificate, steps })
}
