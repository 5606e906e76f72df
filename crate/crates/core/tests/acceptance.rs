//! End-to-end acceptance checks. Each test prints one PASS/FAIL line with
//! its timing; failures carry the first offending instance.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use fregean_core::algebra::for_each_tuple;
use fregean_core::synth::{
    solve_system, synthesize_cp, synthesize_subtractive, synthesize_unifier_height, SynthesisTrace,
};
use fregean_core::unify::*;
use fregean_core::variety::FreeAlgebra;
use fregean_core::{builtin, Error, FiniteAlgebra, Term, VarietyContext};

const PASSING: [&str; 5] = ["boolean-group", "equiv", "equiv0", "brouwerian", "goedel3"];
const ALL: [&str; 7] = [
    "boolean-group",
    "equiv",
    "equiv0",
    "brouwerian",
    "goedel3",
    "heyting-h5",
    "hilbert0-h",
];

fn context(name: &str) -> &'static VarietyContext {
    static CONTEXTS: OnceLock<HashMap<&'static str, VarietyContext>> = OnceLock::new();
    &CONTEXTS.get_or_init(|| ALL.iter().map(|&n| (n, builtin(n).unwrap())).collect())[name]
}

/// Criteria run one at a time so the printed timings are not shared.
fn serial() -> std::sync::MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: usize, name: &str, start: Instant, outcome: Result<String, String>) {
    let secs = start.elapsed().as_secs_f64();
    match &outcome {
        Ok(info) => println!("acceptance {id} {name}: PASS ({secs:.1}s) {info}"),
        Err(why) => println!("acceptance {id} {name}: FAIL ({secs:.1}s) {why}"),
    }
    if let Err(why) = outcome {
        panic!("{name}: {why}");
    }
}

fn ensure(cond: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why())
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

#[test]
fn acceptance_1_h5_counterexample() {
    let _guard = serial();
    let start = Instant::now();
    report(1, "h5_counterexample", start, h5_counterexample());
}

fn h5_counterexample() -> Result<String, String> {
    let ctx = context("heyting-h5");
    let h = &ctx.generators()[0];
    let el = |name: &str| (0..h.size()).find(|&x| h.element_name(x) == name).unwrap();
    let (a, one, zero) = (el("a"), el("1"), el("0"));
    let t = ctx.parse("e(x2, j(x1, i(x1, 0)))").map_err(err)?;
    let value = h.eval(&t, &[a, one]);
    let not_a = h.eval(&ctx.parse("i(x1,0)").unwrap(), &[a]);
    let a_or_not_a = h.eval(&ctx.parse("j(x1,x2)").unwrap(), &[a, not_a]);
    ensure(value == a_or_not_a && value != one, || {
        format!("t(a,1) = {} but a or not a = {}", h.element_name(value), h.element_name(a_or_not_a))
    })?;
    let e = |x: usize, y: usize| h.eval(&ctx.parse("e(x1,x2)").unwrap(), &[x, y]);
    ensure(e(e(value, zero), zero) == one, || "t(a,1)00 differs from 1".into())?;
    // the argument a00 = a, so the substituted side stays t(a,1)
    ensure(e(e(a, zero), zero) == a, || "a00 differs from a".into())?;

    ensure(ctx.check_chi_identity(&t).map_err(err)?.is_some(), || {
        "chi identity unexpectedly holds".into()
    })?;

    let cert = brute_force_projective_unifier(ctx, &t)
        .map_err(err)?
        .ok_or("no projective unifier found")?;
    let want = [ctx.parse("x1").unwrap(), ctx.parse("j(x1, i(x1, 0))").unwrap()];
    ensure(
        cert.tau.iter().zip(&want).all(|(a, b)| ctx.terms_equal(a, b)),
        || format!("found {:?}", cert.to_file(ctx).tau),
    )?;
    ensure(verify_certificate(ctx, &cert).passed(), || "certificate check failed".into())?;
    let exact = verify_mgu_reproductive(ctx, &cert, 2).map_err(err)?;
    let enumerated = verify_mgu_exhaustive(ctx, &cert, 1).map_err(err)?;
    ensure(exact.holds && enumerated.holds, || {
        format!("not reproductive: {:?} {:?}", exact.counterexample, enumerated.counterexample)
    })?;
    Ok(format!(
        "tau = {:?}, {} unifiers into F_0, F_1 checked",
        cert.to_file(ctx).tau,
        enumerated.checked
    ))
}

#[test]
fn acceptance_2_identity_coherence() {
    let _guard = serial();
    let start = Instant::now();
    report(2, "identity_coherence", start, identity_coherence());
}

fn identity_coherence() -> Result<String, String> {
    for name in PASSING {
        let ctx = context(name);
        let ids = ctx.check_variety_identities().map_err(err)?;
        let failing: Vec<String> = ids.failing().map(|o| o.operation.clone()).collect();
        ensure(failing.is_empty(), || format!("{name}: identity fails for {failing:?}"))?;
        let si = ctx.si_members_check(2).map_err(err)?;
        ensure(si.passed(), || format!("{name}: SI offender {:?}", si.offenders[0]))?;
    }
    let ctx = context("heyting-h5");
    let ids = ctx.check_variety_identities().map_err(err)?;
    let failing: Vec<String> = ids.failing().map(|o| o.operation.clone()).collect();
    let si = ctx.si_members_check(2).map_err(err)?;
    ensure(!failing.is_empty() && !si.passed(), || {
        format!("heyting-h5: identities fail for {failing:?}, {} SI offenders", si.offenders.len())
    })?;
    ensure(
        si.offenders.iter().all(|o| failing.contains(&o.operation)),
        || format!("SI offender outside failing operations: {:?}", si.offenders),
    )?;
    let w = ids.failing().next().unwrap().witness.clone().unwrap();
    Ok(format!(
        "heyting-h5 fails for {failing:?} ({}: {}), offender {} via {}",
        w.values.join(","),
        w.detail,
        si.offenders[0].algebra,
        si.offenders[0].operation
    ))
}

/// Elements of `F_n` reachable by terms of depth at most `depth`.
fn depth_classes(free: &FreeAlgebra, ctx: &VarietyContext, depth: usize) -> Vec<usize> {
    let alg = free.algebra();
    let sig = ctx.signature();
    let mut seen = vec![false; free.size()];
    let mut classes = Vec::new();
    let mut add = |e: usize, classes: &mut Vec<usize>| {
        if !seen[e] {
            seen[e] = true;
            classes.push(e);
        }
    };
    for c in sig.constants() {
        add(free.element_of(&Term::constant(c)).unwrap(), &mut classes);
    }
    for &g in free.generators() {
        add(g, &mut classes);
    }
    for _ in 0..depth {
        let current = classes.clone();
        for op in sig.op_ids() {
            let k = sig.op(op).arity;
            if k == 0 {
                continue;
            }
            for_each_tuple(current.len(), k, |idx| {
                let args: Vec<usize> = idx.iter().map(|&i| current[i]).collect();
                add(alg.apply(op, &args), &mut classes);
            });
        }
    }
    classes
}

#[derive(Default)]
struct Sweep {
    terms: usize,
    unifiable: usize,
    projective: usize,
    disagreements: Vec<String>,
    certificate_failures: Vec<String>,
    descent_violations: Vec<String>,
    cp_traces: usize,
    subtractive_traces: usize,
    height_traces: usize,
}

fn cp_descent(trace: &SynthesisTrace) -> Option<String> {
    trace.steps.iter().find_map(|s| {
        let inside = s.star_after.iter().all(|i| s.star_before.contains(i));
        (!(s.after < s.before && inside)).then(|| format!("k {} -> {}, N-set inclusion {inside}", s.before, s.after))
    })
}

fn filter_descent(trace: &SynthesisTrace) -> Option<String> {
    trace.steps.iter().find_map(|s| {
        let strict = s.filter_after.is_subset(&s.filter_before) && s.filter_after != s.filter_before;
        (!(strict && s.after < s.before)).then(|| format!("principal filter did not move strictly ({} -> {})", s.before, s.after))
    })
}

fn sweep_term(ctx: &VarietyContext, t: &Term, out: &mut Sweep) -> Result<(), Error> {
    let text = ctx.format(t);
    let ground = ground_unifiable(ctx, t)?.is_some();
    let conds = check_unif_conditions(ctx, t)?;
    let brute = brute_force_unifier(ctx, t)?;
    let cp = match synthesize_cp(ctx, t) {
        Ok(r) => Some(r),
        Err(Error::NotUnifiable(_)) => None,
        Err(e) => {
            out.certificate_failures.push(format!("{text}: synthesis error {e}"));
            None
        }
    };
    let verdicts = [ground, conds.holds(), brute.is_some(), cp.is_some()];
    if verdicts.iter().any(|&v| v != ground) {
        out.disagreements.push(format!(
            "{text}: ground {} conditions {} brute {} cp {}",
            verdicts[0], verdicts[1], verdicts[2], verdicts[3]
        ));
    }
    if ground {
        out.unifiable += 1;
    }
    if let Some(b) = &brute {
        if !verify_certificate(ctx, b).passed() {
            out.certificate_failures.push(format!("{text}: brute-force certificate rejected"));
        }
    }
    if let Some((cert, trace)) = &cp {
        out.projective += 1;
        out.cp_traces += 1;
        if !(cert.kind == UnifierKind::Projective && verify_certificate(ctx, cert).passed()) {
            out.certificate_failures.push(format!("{text}: certificate rejected"));
        }
        let r = verify_mgu_reproductive(ctx, cert, 3)?;
        if !r.holds {
            out.certificate_failures.push(format!("{text}: not reproductive {:?}", r.counterexample));
        }
        if let Some(v) = cp_descent(trace) {
            out.descent_violations.push(format!("{text} (cp): {v}"));
        }
    }
    match synthesize_subtractive(ctx, t) {
        Ok((cert, trace)) => {
            out.subtractive_traces += 1;
            if !verify_certificate(ctx, &cert).passed() {
                out.certificate_failures.push(format!("{text}: subtractive certificate rejected"));
            }
            if let Some(v) = filter_descent(&trace) {
                out.descent_violations.push(format!("{text} (subtractive): {v}"));
            }
        }
        Err(Error::PreconditionFailed(m)) if m.starts_with("descent") => {
            out.descent_violations.push(format!("{text} (subtractive): {m}"))
        }
        Err(Error::PreconditionFailed(_)) | Err(Error::NoDesignatedTerm) => {}
        Err(e) => return Err(e),
    }
    if conds.cond4 {
        match synthesize_unifier_height(ctx, t) {
            Ok((cert, trace)) => {
                out.height_traces += 1;
                if !verify_certificate(ctx, &cert).passed() {
                    out.certificate_failures.push(format!("{text}: height certificate rejected"));
                }
                if let Some(v) = filter_descent(&trace) {
                    out.descent_violations.push(format!("{text} (height): {v}"));
                }
            }
            Err(Error::PreconditionFailed(m)) => {
                out.descent_violations.push(format!("{text} (height): {m}"))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

fn merge(mut a: Sweep, b: Sweep) -> Sweep {
    a.terms += b.terms;
    a.unifiable += b.unifiable;
    a.projective += b.projective;
    a.disagreements.extend(b.disagreements);
    a.certificate_failures.extend(b.certificate_failures);
    a.descent_violations.extend(b.descent_violations);
    a.cp_traces += b.cp_traces;
    a.subtractive_traces += b.subtractive_traces;
    a.height_traces += b.height_traces;
    a
}

fn run_sweep(ctx: &VarietyContext) -> Result<Sweep, String> {
    let free = ctx.free_algebra(3).map_err(|e| format!("F_3: {e}"))?;
    ctx.irreducibles(3).map_err(err)?;
    for n in 0..3 {
        ctx.free_algebra(n).map_err(err)?;
        ctx.irreducibles(n).map_err(err)?;
    }
    ctx.two_element_members().map_err(err)?;
    ctx.si_members_check(2).map_err(err)?;
    let classes = depth_classes(&free, ctx, 3);
    classes
        .par_iter()
        .map(|&e| {
            let mut s = Sweep {
                terms: 1,
                ..Sweep::default()
            };
            sweep_term(ctx, free.rep(e), &mut s).map_err(|x| format!("{}: {x}", ctx.format(free.rep(e))))?;
            Ok(s)
        })
        .try_reduce(Sweep::default, |a, b| Ok(merge(a, b)))
}

type SweepCell = OnceLock<Arc<Result<Sweep, String>>>;

fn sweep(name: &str) -> Arc<Result<Sweep, String>> {
    static SWEEPS: OnceLock<Mutex<HashMap<String, Arc<SweepCell>>>> = OnceLock::new();
    let cell = SWEEPS
        .get_or_init(Default::default)
        .lock()
        .unwrap()
        .entry(name.to_string())
        .or_default()
        .clone();
    cell.get_or_init(|| Arc::new(run_sweep(context(name)))).clone()
}

#[test]
fn acceptance_3_oracle_sweep() {
    let _guard = serial();
    let start = Instant::now();
    report(3, "oracle_sweep", start, oracle_sweep());
}

fn oracle_sweep() -> Result<String, String> {
    let mut info = Vec::new();
    let mut failures = Vec::new();
    for name in PASSING {
        let t = Instant::now();
        match sweep(name).as_ref() {
            Ok(s) => {
                if let Some(d) = s.disagreements.first() {
                    failures.push(format!("{name}: {} disagreements, first {d}", s.disagreements.len()));
                }
                if let Some(c) = s.certificate_failures.first() {
                    failures.push(format!("{name}: {} certificate failures, first {c}", s.certificate_failures.len()));
                }
                info.push(format!(
                    "{name}: {} classes, {} unifiable ({:.1}s)",
                    s.terms,
                    s.unifiable,
                    t.elapsed().as_secs_f64()
                ));
            }
            Err(e) => failures.push(format!("{name}: sweep unavailable ({e})")),
        }
    }
    if failures.is_empty() {
        Ok(info.join("; "))
    } else {
        Err(format!("{} [{}]", failures.join("; "), info.join("; ")))
    }
}

#[test]
fn acceptance_4_descent_invariants() {
    let _guard = serial();
    let start = Instant::now();
    report(4, "descent_invariants", start, descent_invariants());
}

fn descent_invariants() -> Result<String, String> {
    let mut info = Vec::new();
    let mut failures = Vec::new();
    for name in PASSING {
        match sweep(name).as_ref() {
            Ok(s) => {
                if let Some(v) = s.descent_violations.first() {
                    failures.push(format!("{name}: {} violations, first {v}", s.descent_violations.len()));
                }
                info.push(format!(
                    "{name}: {} cp / {} subtractive / {} height traces",
                    s.cp_traces, s.subtractive_traces, s.height_traces
                ));
            }
            Err(e) => failures.push(format!("{name}: sweep unavailable ({e})")),
        }
    }
    if failures.is_empty() {
        Ok(info.join("; "))
    } else {
        Err(format!("{} [{}]", failures.join("; "), info.join("; ")))
    }
}

#[test]
fn acceptance_5_free_size_bound() {
    let _guard = serial();
    let start = Instant::now();
    report(5, "free_size_bound", start, free_size_bound());
}

fn free_size_bound() -> Result<String, String> {
    let mut info = Vec::new();
    for name in PASSING {
        let ctx = context(name);
        let mut sizes = [0usize; 3];
        for (n, size) in sizes.iter_mut().enumerate() {
            *size = ctx.free_algebra(n).map_err(err)?.size();
            let bound = 1 + *size;
            let biggest = ctx
                .si_quotients(n + 1)
                .map_err(err)?
                .iter()
                .map(|q| q.algebra.size())
                .max()
                .unwrap_or(0);
            ensure(biggest <= 2 || biggest <= bound, || {
                format!("{name}: quotient of F_{} of size {biggest} exceeds {bound}", n + 1)
            })?;
        }
        let expected: Vec<usize> = (0..3).map(|n| closure_size(ctx, n)).collect();
        ensure(sizes[..] == expected[..], || format!("{name}: free sizes {sizes:?}, closure gives {expected:?}"))?;
        info.push(format!("{name} {sizes:?}"));
    }
    Ok(info.join("; "))
}

/// Size of the subalgebra of `∏_A A^(A^n)` generated by the projections.
fn closure_size(ctx: &VarietyContext, n: usize) -> usize {
    let gens = ctx.generators();
    let sig = ctx.signature();
    let mut points: Vec<(usize, Vec<usize>)> = Vec::new();
    for (g, a) in gens.iter().enumerate() {
        for_each_tuple(a.size(), n, |p| points.push((g, p.to_vec())));
    }
    let mut seen = std::collections::HashSet::new();
    let mut elems: Vec<Vec<usize>> = Vec::new();
    let mut push = |v: Vec<usize>, elems: &mut Vec<Vec<usize>>| {
        if seen.insert(v.clone()) {
            elems.push(v);
        }
    };
    for c in sig.constants() {
        push(points.iter().map(|(g, _)| gens[*g].apply(c, &[])).collect(), &mut elems);
    }
    for i in 0..n {
        push(points.iter().map(|(_, p)| p[i]).collect(), &mut elems);
    }
    let mut done = 0;
    while done < elems.len() {
        let frontier = elems.len();
        for op in sig.op_ids() {
            let k = sig.op(op).arity;
            if k == 0 {
                continue;
            }
            let mut fresh = Vec::new();
            for_each_tuple(frontier, k, |idx| {
                if idx.iter().all(|&i| i < done) {
                    return;
                }
                let v: Vec<usize> = (0..points.len())
                    .map(|j| {
                        let args: Vec<usize> = idx.iter().map(|&i| elems[i][j]).collect();
                        gens[points[j].0].apply(op, &args)
                    })
                    .collect();
                fresh.push(v);
            });
            for v in fresh {
                push(v, &mut elems);
            }
        }
        done = frontier;
    }
    elems.len()
}

/// Whether `A` has a largest non-unit, by the order `a ≤ b` iff `b ∈ [a)`.
fn largest_non_unit(alg: &FiniteAlgebra) -> Option<usize> {
    let one = alg.one();
    let filters: Vec<Vec<usize>> = (0..alg.size())
        .map(|a| alg.principal_congruence(one, a).coset(one))
        .collect();
    (0..alg.size())
        .filter(|&s| s != one)
        .find(|&s| (0..alg.size()).filter(|&a| a != one).all(|a| filters[a].contains(&s)))
}

fn structural(ctx: &VarietyContext, label: &str, alg: &FiniteAlgebra) -> Result<(), String> {
    let one = alg.one();
    let n = alg.size();
    let lat = alg.congruence_lattice(10_000).map_err(err)?;
    let atoms = lat.atoms();
    let si = atoms.len() == 1;
    let star = largest_non_unit(alg);
    ensure(si == star.is_some(), || format!("{label}: SI {si} but largest non-unit {star:?}"))?;
    if let Some(s) = star {
        let mono = lat.get(atoms[0]);
        let mut classes = mono.classes();
        classes.retain(|c| c.len() > 1);
        ensure(classes == vec![{
            let mut v = vec![s, one];
            v.sort();
            v
        }], || format!("{label}: monolith classes {classes:?}"))?;
    }
    ensure((lat.len() == 2) == (n == 2), || format!("{label}: {} congruences on {n} elements", lat.len()))?;

    // irreducible filters and their covers
    let filters = alg.filter_lattice(10_000).map_err(err)?;
    for m in filters.meet_irreducibles() {
        let eta = filters.get(m.eta).congruence();
        let plus = filters.get(m.eta_plus);
        let above: Vec<usize> = plus.members().ones().filter(|&a| !filters.get(m.eta).contains(a)).collect();
        ensure(!above.is_empty() && above.iter().all(|&a| eta.related(a, above[0])), || {
            format!("{label}: eta+ minus eta is not one class")
        })?;
        for b in (0..n).filter(|&b| !plus.contains(b)) {
            ensure(eta.coset(b) == plus.congruence().coset(b), || {
                format!("{label}: class of {} moves between eta and eta+", alg.element_name(b))
            })?;
        }
    }
    for a in (0..n).filter(|&a| a != one) {
        let hit = filters.meet_irreducibles().iter().any(|m| {
            let plus = filters.get(m.eta_plus);
            plus.contains(a) && !filters.get(m.eta).contains(a)
        });
        ensure(hit, || format!("{label}: no irreducible filter puts {} on *", alg.element_name(a)))?;
    }

    if let Some(e) = ctx.equiv_term() {
        let eq = |x: usize, y: usize| alg.eval(e, &[x, y]);
        if let Some(s) = star {
            for a in (0..n).filter(|&a| a != s && a != one) {
                ensure(eq(a, s) == a, || format!("{label}: a* differs from a at {}", alg.element_name(a)))?;
                for b in (0..n).filter(|&b| b != s) {
                    ensure(eq(a, b) != s, || format!("{label}: {} {} gives *", alg.element_name(a), alg.element_name(b)))?;
                }
            }
            if n > 2 {
                // every tuple avoiding * shares some p
                for k in 1..=3 {
                    let mut bad = None;
                    let avoid: Vec<usize> = (0..n).filter(|&x| x != s).collect();
                    for_each_tuple(avoid.len(), k, |idx| {
                        if bad.is_some() {
                            return;
                        }
                        let tuple: Vec<usize> = idx.iter().map(|&i| avoid[i]).collect();
                        let ok = (0..n)
                            .filter(|&p| p != s && p != one)
                            .any(|p| tuple.iter().all(|&x| eq(eq(x, p), p) == x));
                        if !ok {
                            bad = Some(tuple);
                        }
                    });
                    ensure(bad.is_none(), || format!("{label}: no p for {bad:?}"))?;
                }
            }
        }
        let chi = |a: usize, x: usize| eq(eq(x, a), a);
        for a in 0..n {
            for x in 0..n {
                ensure(chi(a, chi(a, x)) == chi(a, x), || format!("{label}: chi not idempotent"))?;
                for y in 0..n {
                    ensure(chi(a, eq(x, y)) == eq(chi(a, x), chi(a, y)), || {
                        format!("{label}: chi_a does not preserve the equivalence")
                    })?;
                }
                for b in 0..n {
                    let ab = chi(a, chi(b, x));
                    ensure(ab == chi(b, chi(a, x)) && ab == chi(a, chi(eq(a, b), x)), || {
                        format!("{label}: chi composition law fails")
                    })?;
                }
            }
        }
    }
    if let Some(s) = ctx.subtraction_term() {
        let sub = |x: usize, y: usize| alg.eval(s, &[x, y]);
        for a in 0..n {
            for b in 0..n {
                let lhs = alg.principal_congruence(a, b);
                let rhs = alg
                    .principal_congruence(sub(a, b), one)
                    .join(&alg.principal_congruence(sub(b, a), one));
                ensure(lhs == rhs, || format!("{label}: congruence of a pair differs from the subtractive join"))?;
            }
        }
    }
    Ok(())
}

/// Certified projective terms used for the `∗`-avoidance check.
fn projective_terms(ctx: &VarietyContext) -> Result<Vec<Term>, String> {
    if ctx.name() == "heyting-h5" {
        return Ok(vec![ctx.parse("e(x2, j(x1, i(x1, 0)))").unwrap()]);
    }
    let free = ctx.free_algebra(2).map_err(err)?;
    let mut out = Vec::new();
    for e in depth_classes(&free, ctx, 2) {
        let t = free.rep(e).clone();
        let r = if ctx.equiv_term().is_some() && ctx.check_variety_identities().map_err(err)?.passed() {
            synthesize_cp(ctx, &t)
        } else {
            synthesize_subtractive(ctx, &t)
        };
        if let Ok((cert, _)) = r {
            if cert.verified {
                out.push(t);
            }
        }
    }
    Ok(out)
}

#[test]
fn acceptance_6_structural_laws() {
    let _guard = serial();
    let start = Instant::now();
    report(6, "structural_laws", start, structural_laws());
}

fn structural_laws() -> Result<String, String> {
    let mut checked = 0;
    let mut star_checks = 0;
    for name in ALL {
        let ctx = context(name);
        let mut algebras: Vec<(String, FiniteAlgebra)> = ctx
            .generators()
            .iter()
            .enumerate()
            .map(|(g, a)| (ctx.generator_name(g), a.clone()))
            .collect();
        for (i, q) in ctx.si_quotients(2).map_err(err)?.into_iter().enumerate() {
            algebras.push((format!("{name} F_2/eta{i}"), (*q.algebra).clone()));
        }
        for (label, alg) in &algebras {
            structural(ctx, label, alg)?;
            checked += 1;
        }
        let terms = projective_terms(ctx)?;
        if name == "heyting-h5" {
            let t = &terms[0];
            ensure(brute_force_projective_unifier(ctx, t).map_err(err)?.is_some(), || {
                "heyting-h5 term is not projective".into()
            })?;
        }
        for (label, alg) in &algebras {
            let Some(s) = largest_non_unit(alg) else { continue };
            for t in &terms {
                let k = t.max_var() as usize;
                let mut bad = None;
                for_each_tuple(alg.size(), k, |a| {
                    if bad.is_none() && alg.eval(t, a) == s && a.iter().all(|&x| x != s && x != alg.one()) {
                        bad = Some(a.to_vec());
                    }
                });
                ensure(bad.is_none(), || {
                    format!("{label}: projective {} reaches * at {bad:?}", ctx.format(t))
                })?;
                star_checks += 1;
            }
        }
    }
    Ok(format!("{checked} algebras, {star_checks} term/algebra pairs for * avoidance"))
}

#[test]
fn acceptance_7_equiv0_projective() {
    let _guard = serial();
    let start = Instant::now();
    report(7, "equiv0_projective", start, equiv0_projective());
}

fn equiv0_projective() -> Result<String, String> {
    let ctx = context("equiv0");
    ensure(ctx.check_variety_identities().map_err(err)?.passed(), || "identities fail".into())?;
    ensure(ctx.si_members_check(2).map_err(err)?.passed(), || "SI check fails".into())?;
    let s = sweep("equiv0");
    let s = s.as_ref().as_ref().map_err(|e| e.clone())?;
    ensure(s.disagreements.is_empty() && s.certificate_failures.is_empty(), || {
        format!("sweep problems: {:?}", s.disagreements.first().or(s.certificate_failures.first()))
    })?;
    ensure(s.projective == s.unifiable, || {
        format!("{} unifiable but {} projective", s.unifiable, s.projective)
    })?;
    Ok(format!("{} classes, {} unifiable, all projective", s.terms, s.unifiable))
}

#[test]
fn acceptance_8_hilbert0_negative() {
    let _guard = serial();
    let start = Instant::now();
    report(8, "hilbert0_negative", start, hilbert0_negative());
}

fn hilbert0_negative() -> Result<String, String> {
    let ctx = context("hilbert0-h");
    let si = ctx.si_members_check(2).map_err(err)?;
    ensure(si.passed(), || format!("SI offender {:?}", si.offenders[0]))?;
    let t = ctx.parse("i(x1, i(x2, 0))").map_err(err)?;
    match synthesize_subtractive(ctx, &t) {
        Err(Error::PreconditionFailed(m)) if m.contains("special unifier") => {
            Ok(format!("{} SI algebras examined; {m}", si.examined))
        }
        Err(e) => Err(format!("unexpected error {e}")),
        Ok(_) => Err("a certificate was produced".into()),
    }
}

fn random_term(ctx: &VarietyContext, rng: &mut ChaCha8Rng, vars: u32, depth: usize) -> Term {
    let sig = ctx.signature();
    let ops: Vec<_> = sig.op_ids().collect();
    if depth == 0 || rng.gen_bool(0.3) {
        let consts: Vec<_> = sig.constants().collect();
        if rng.gen_bool(0.8) {
            return Term::var(rng.gen_range(1..=vars));
        }
        return Term::constant(consts[rng.gen_range(0..consts.len())]);
    }
    let op = ops[rng.gen_range(0..ops.len())];
    let args = (0..sig.op(op).arity).map(|_| random_term(ctx, rng, vars, depth - 1)).collect();
    Term::app(op, args)
}

/// Some assignment into `F_0` solves every equation.
fn system_unifiable(ctx: &VarietyContext, eqs: &[(Term, Term)], vars: usize) -> bool {
    let f0 = ctx.free_algebra(0).unwrap();
    let mut hit = false;
    for_each_tuple(f0.size(), vars, |a| {
        hit = hit || eqs.iter().all(|(s, t)| f0.eval(s, a) == f0.eval(t, a));
    });
    hit
}

#[test]
fn acceptance_9_system_solving() {
    let _guard = serial();
    let start = Instant::now();
    report(9, "system_solving", start, system_solving());
}

fn system_solving() -> Result<String, String> {
    let mut info = Vec::new();
    for (k, name) in PASSING.iter().enumerate() {
        let ctx = context(name);
        // three variables where F_3 is within the default cap
        let vars: u32 = if ctx.free_algebra(3).is_ok() { 3 } else { 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed + k as u64);
        let mut solved = 0;
        let mut checked = 0;
        let mut attempts = 0;
        while solved < 20 {
            attempts += 1;
            ensure(attempts < 10_000, || format!("{name}: too few unifiable systems"))?;
            let eqs: Vec<(Term, Term)> = (0..2)
                .map(|_| (random_term(ctx, &mut rng, vars, 2), random_term(ctx, &mut rng, vars, 2)))
                .collect();
            if !system_unifiable(ctx, &eqs, vars as usize) {
                continue;
            }
            let mut eqs = eqs;
            // pin the rank so every system lives in F_vars
            eqs.push((Term::var(vars), Term::var(vars)));
            let sol = solve_system(ctx, &eqs).map_err(|e| format!("{name}: {e}"))?;
            let cert = &sol.certificate;
            ensure(cert.verified && verify_certificate(ctx, cert).passed(), || {
                format!("{name}: certificate rejected")
            })?;
            let r = verify_mgu_exhaustive(ctx, cert, 2).map_err(err)?;
            ensure(r.holds, || format!("{name}: counterexample {:?}", r.counterexample))?;
            checked += r.checked;
            solved += 1;
        }
        info.push(format!("{name}: 20 systems in {vars} variables, {checked} unifiers checked"));
    }
    Ok(info.join("; "))
}
