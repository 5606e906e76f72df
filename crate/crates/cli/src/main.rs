use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fregean_core::synth::{solve_system, synthesize, synthesize_cp, synthesize_subtractive};
use fregean_core::unify::{
    brute_force_projective_unifier, brute_force_unifier, check_unif_conditions, verify_certificate,
    verify_mgu_reproductive, CertificateFile,
};
use fregean_core::{load_context, Caps, Error, Term, UnifierCertificate, VarietyContext};

#[derive(Parser)]
#[command(name = "fregean", version, about = "Unification workbench for finitely generated Fregean varieties")]
struct Cli {
    /// Built-in context name or context file; otherwise the first operand.
    #[arg(long, global = true, value_name = "FILE|NAME")]
    context: Option<String>,
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Largest free algebra to build.
    #[arg(long, global = true, value_name = "N")]
    cap_free: Option<usize>,
    /// Reserved; results do not depend on it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the structural checks of a context.
    Check {
        #[arg(long, default_value_t = 1, value_name = "N")]
        fregean_bound: usize,
        #[arg(long, default_value_t = 2, value_name = "N")]
        si_bound: usize,
        /// [CONTEXT]
        operands: Vec<String>,
    },
    /// Decide `t = 1` and produce a unifier.
    Unify {
        /// Require a projective unifier.
        #[arg(long)]
        projective: bool,
        /// Check reproductivity against unifiers into F_k, k <= K.
        #[arg(long, value_name = "K")]
        verify_mgu: Option<usize>,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        /// [CONTEXT] TERM
        operands: Vec<String>,
    },
    /// Solve a JSON list of equations `[["s","t"],...]`.
    Solve {
        /// [CONTEXT] FILE
        operands: Vec<String>,
    },
    /// Inspect the free algebra of rank N.
    Free {
        /// List the meet-irreducible filters.
        #[arg(long)]
        fm: bool,
        /// Print representatives and operation tables.
        #[arg(long)]
        table: bool,
        /// [CONTEXT] N
        operands: Vec<String>,
    },
    /// Check a certificate file.
    Certify {
        #[arg(long, value_name = "K")]
        verify_mgu: Option<usize>,
        /// [CONTEXT] FILE
        operands: Vec<String>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Auto,
    Cp,
    Subtractive,
    Brute,
}

/// Command failures, by exit code.
enum Failure {
    Load(String),
    Cap(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::CapExceeded { .. } | Error::PreconditionFailed(_) | Error::NoDesignatedTerm => {
                Failure::Cap(e.to_string())
            }
            _ => Failure::Load(e.to_string()),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Skip,
}

struct Verdict {
    check: String,
    status: Status,
    detail: String,
    witness: Value,
}

impl Verdict {
    fn new(check: &str, pass: bool, detail: impl Into<String>, witness: Value) -> Self {
        Verdict {
            check: check.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            detail: detail.into(),
            witness,
        }
    }

    fn skip(check: &str, detail: impl Into<String>) -> Self {
        Verdict {
            check: check.into(),
            status: Status::Skip,
            detail: detail.into(),
            witness: Value::Null,
        }
    }

    fn to_json(&self) -> Value {
        json!({
            "check": self.check,
            "pass": match self.status {
                Status::Pass => json!(true),
                Status::Fail => json!(false),
                Status::Skip => Value::Null,
            },
            "detail": self.detail,
            "witness": self.witness,
        })
    }
}

struct Report {
    command: &'static str,
    context: String,
    verdicts: Vec<Verdict>,
    certificates: Vec<Value>,
    data: Value,
    timing: Vec<(String, u128)>,
    exit: u8,
}

impl Report {
    fn new(command: &'static str, ctx: &VarietyContext) -> Self {
        Report {
            command,
            context: ctx.name().to_string(),
            verdicts: Vec::new(),
            certificates: Vec::new(),
            data: json!({}),
            timing: Vec::new(),
            exit: 0,
        }
    }

    fn phase<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timing.push((name.to_string(), start.elapsed().as_millis()));
        out
    }

    /// Timings are left out so that the JSON is reproducible.
    fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "context": self.context,
            "exit_code": self.exit,
            "verdicts": self.verdicts.iter().map(Verdict::to_json).collect::<Vec<_>>(),
            "certificates": self.certificates,
            "data": self.data,
        })
    }

    fn print_human(&self) {
        println!("{} [{}]", self.command, self.context);
        for v in &self.verdicts {
            let tag = match v.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skip => "SKIP",
            };
            if v.detail.is_empty() {
                println!("  {tag} {}", v.check);
            } else {
                println!("  {tag} {}: {}", v.check, v.detail);
            }
            if !v.witness.is_null() {
                println!("       witness: {}", v.witness);
            }
        }
        for c in &self.certificates {
            println!("  certificate: {}", serde_json::to_string(c).unwrap());
        }
        if self.data.as_object().is_some_and(|o| !o.is_empty()) {
            println!("{}", serde_json::to_string_pretty(&self.data).unwrap());
        }
        let times: Vec<String> = self.timing.iter().map(|(n, ms)| format!("{n} {ms}ms")).collect();
        if !times.is_empty() {
            eprintln!("timing: {}", times.join(", "));
        }
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

/// Splits operands into the context source and the remaining arguments.
fn resolve(global: &Option<String>, operands: &[String], wanted: usize, usage: &str) -> Result<(String, Vec<String>), Failure> {
    let (source, rest) = match global {
        Some(c) => (c.clone(), operands.to_vec()),
        None => match operands.split_first() {
            Some((c, rest)) => (c.clone(), rest.to_vec()),
            None => return Err(Failure::Load(format!("missing context; usage: {usage}"))),
        },
    };
    if rest.len() != wanted {
        return Err(Failure::Load(format!("expected {wanted} operand(s); usage: {usage}")));
    }
    Ok((source, rest))
}

fn open(source: &str, cap_free: Option<usize>) -> Result<VarietyContext, Failure> {
    let mut ctx = load_context(source).map_err(|e| Failure::Load(e.to_string()))?;
    if let Some(n) = cap_free {
        let caps = Caps {
            max_free_size: n,
            ..*ctx.caps()
        };
        ctx.set_caps(caps);
    }
    Ok(ctx)
}

fn parse(ctx: &VarietyContext, text: &str) -> Result<Term, Failure> {
    ctx.parse(text).map_err(|e| Failure::Load(format!("`{text}`: {e}")))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Load(format!("{}: {e}", path.display())))
}

/// Runs a check whose cap overrun is reported as a skipped verdict.
fn capped<T>(r: fregean_core::Result<T>, check: &str, verdicts: &mut Vec<Verdict>) -> Result<Option<T>, Failure> {
    match r {
        Ok(x) => Ok(Some(x)),
        Err(e @ Error::CapExceeded { .. }) => {
            verdicts.push(Verdict::skip(check, e.to_string()));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_check(ctx: &VarietyContext, fregean_bound: usize, si_bound: usize) -> Result<Report, Failure> {
    let mut r = Report::new("check", ctx);
    let mut v = Vec::new();
    match ctx.equiv_term() {
        Some(e) => {
            let w = ctx.validate_equivalence_term(e);
            v.push(Verdict::new("equiv_term", w.is_none(), ctx.format(e), to_value(&w)));
        }
        None => v.push(Verdict::skip("equiv_term", "none designated")),
    }
    match ctx.subtractive_term() {
        Some(s) => {
            let w = ctx.validate_subtractive_term(s);
            v.push(Verdict::new("subtractive_term", w.is_none(), ctx.format(s), to_value(&w)));
        }
        None => v.push(Verdict::skip("subtractive_term", "none designated")),
    }
    if let Some(entries) = capped(r.phase("fregean", || ctx.fregean_diagnostics(fregean_bound)), "fregean", &mut v)? {
        let bad = entries.iter().find(|e| !e.passed());
        v.push(Verdict::new(
            "fregean",
            bad.is_none(),
            format!("{} algebras up to F_{fregean_bound}", entries.len()),
            to_value(&bad),
        ));
    }
    if let Some(m) = capped(r.phase("malcev", || ctx.find_malcev_element()), "malcev", &mut v)? {
        let detail = m.as_ref().map(|t| ctx.format(t)).unwrap_or_else(|| "no Malcev term in F_3".into());
        v.push(Verdict::new("malcev", m.is_some(), detail, Value::Null));
    }
    match r.phase("identities", || ctx.check_variety_identities()) {
        Err(Error::NoDesignatedTerm) => v.push(Verdict::skip("identities", "no equivalence term")),
        res => {
            if let Some(ids) = capped(res, "identities", &mut v)? {
                let failing: Vec<&str> = ids.failing().map(|o| o.operation.as_str()).collect();
                let detail = if failing.is_empty() {
                    format!("{} operations", ids.operations.len())
                } else {
                    format!("fails for {}", failing.join(", "))
                };
                let w = ids.failing().next().map(|o| json!({"operation": o.operation, "witness": o.witness}));
                v.push(Verdict::new("identities", failing.is_empty(), detail, to_value(&w)));
            }
        }
    }
    if let Some(si) = capped(r.phase("si", || ctx.si_members_check(si_bound)), "si_members", &mut v)? {
        v.push(Verdict::new(
            "si_members",
            si.passed(),
            format!("{} examined, {} larger than two", si.examined, si.larger_than_two),
            to_value(&si.offenders.first()),
        ));
    }
    r.exit = if v.iter().any(|x| x.status == Status::Fail) {
        1
    } else if v.iter().any(|x| x.status == Status::Skip && x.detail.contains("cap")) {
        3
    } else {
        0
    };
    r.verdicts = v;
    Ok(r)
}

fn certificate_verdicts(
    ctx: &VarietyContext,
    cert: &UnifierCertificate,
    verify_mgu: Option<usize>,
    r: &mut Report,
) -> Result<bool, Failure> {
    let check = verify_certificate(ctx, cert);
    let mut ok = check.passed();
    r.verdicts.push(Verdict::new(
        "certificate",
        ok,
        format!("unifies {}, quasi-identity {}", check.unifies, check.quasi_identity),
        to_value(&check.witness),
    ));
    if let Some(k) = verify_mgu {
        let rep = r.phase("verify_mgu", || verify_mgu_reproductive(ctx, cert, k))?;
        ok &= rep.holds;
        r.verdicts.push(Verdict::new(
            "reproductive",
            rep.holds,
            format!("k <= {k}, {} unifiers enumerated", rep.checked),
            to_value(&rep.counterexample),
        ));
    }
    Ok(ok)
}

fn cmd_unify(
    ctx: &VarietyContext,
    text: &str,
    projective: bool,
    verify_mgu: Option<usize>,
    method: Method,
) -> Result<Report, Failure> {
    let t = parse(ctx, text)?;
    let mut r = Report::new("unify", ctx);
    let conds = r.phase("conditions", || check_unif_conditions(ctx, &t))?;
    r.verdicts.push(Verdict::new(
        "cond3",
        conds.cond3,
        "",
        to_value(&conds.cond3_witness),
    ));
    r.verdicts.push(Verdict::new(
        "cond4",
        conds.cond4,
        "",
        to_value(&conds.cond4_witness),
    ));
    r.data = json!({"term": ctx.format(&t), "informational": conds.informational});
    if !conds.holds() && !conds.informational {
        r.exit = 1;
        return Ok(r);
    }
    let synthesized = match method {
        Method::Auto => match r.phase("synthesis", || synthesize(ctx, &t)) {
            Ok(x) => Some(x),
            Err(Error::PreconditionFailed(m)) | Err(Error::ConditionThreeFailed(m)) => {
                r.data["synthesis_skipped"] = json!(m);
                None
            }
            Err(Error::NotUnifiable(_)) => {
                r.exit = 1;
                return Ok(r);
            }
            Err(e) => return Err(e.into()),
        },
        Method::Cp => Some(r.phase("synthesis", || synthesize_cp(ctx, &t)).map_err(unify_error)?),
        Method::Subtractive => Some(r.phase("synthesis", || synthesize_subtractive(ctx, &t)).map_err(unify_error)?),
        Method::Brute => None,
    };
    let cert = match synthesized {
        Some((cert, trace)) => {
            r.data["trace"] = trace.to_json(ctx);
            Some(cert)
        }
        None if projective || method == Method::Auto => {
            r.phase("search", || brute_force_projective_unifier(ctx, &t))?
                .or(if projective { None } else { r.phase("search", || brute_force_unifier(ctx, &t))? })
        }
        None => r.phase("search", || brute_force_unifier(ctx, &t))?,
    };
    let Some(cert) = cert else {
        let label = if projective { "projective" } else { "unifier" };
        r.verdicts.push(Verdict::new(label, false, "none found by exhaustive search", Value::Null));
        r.exit = 1;
        return Ok(r);
    };
    let ok = certificate_verdicts(ctx, &cert, verify_mgu, &mut r)?;
    r.certificates.push(to_value(&cert.to_file(ctx)));
    r.exit = if ok { 0 } else { 1 };
    Ok(r)
}

fn unify_error(e: Error) -> Failure {
    match e {
        Error::NotUnifiable(m) => Failure::Cap(format!("not unifiable: {m}")),
        e => e.into(),
    }
}

fn cmd_solve(ctx: &VarietyContext, path: &Path) -> Result<Report, Failure> {
    let pairs: Vec<(String, String)> = serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::Load(format!("{}: {e}", path.display())))?;
    let eqs = pairs
        .iter()
        .map(|(s, t)| Ok((parse(ctx, s)?, parse(ctx, t)?)))
        .collect::<Result<Vec<_>, Failure>>()?;
    let mut r = Report::new("solve", ctx);
    match r.phase("solve", || solve_system(ctx, &eqs)) {
        Ok(sol) => {
            let steps: Vec<Value> = sol
                .steps
                .iter()
                .map(|(p, c, tr)| json!({"term": ctx.format(p), "certificate": c.to_file(ctx), "trace": tr.to_json(ctx)}))
                .collect();
            r.data = json!({"steps": steps});
            let ok = certificate_verdicts(ctx, &sol.certificate, None, &mut r)?;
            r.certificates.push(to_value(&sol.certificate.to_file(ctx)));
            r.exit = if ok { 0 } else { 1 };
        }
        Err(Error::NotUnifiable(m)) => {
            r.verdicts.push(Verdict::new("unifiable", false, m, Value::Null));
            r.exit = 1;
        }
        Err(e) => return Err(e.into()),
    }
    Ok(r)
}

fn cmd_free(ctx: &VarietyContext, n: usize, fm: bool, table: bool) -> Result<Report, Failure> {
    let mut r = Report::new("free", ctx);
    let free = r.phase("build", || ctx.free_algebra(n))?;
    r.data = json!({"rank": n, "size": free.size()});
    if table {
        let sig = ctx.signature();
        let alg = free.algebra();
        let ops: serde_json::Map<String, Value> = sig
            .op_ids()
            .map(|op| (sig.op(op).name.clone(), json!(alg.table(op))))
            .collect();
        r.data["elements"] = json!(free.reps().iter().map(|t| ctx.format(t)).collect::<Vec<_>>());
        r.data["tables"] = Value::Object(ops);
    }
    if fm {
        let items = r.phase("fm", || ctx.irreducibles(n))?;
        let list: Vec<Value> = items
            .items()
            .iter()
            .map(|it| {
                json!({
                    "eta": it.eta().ones().collect::<Vec<_>>(),
                    "eta_plus": it.eta_plus().ones().collect::<Vec<_>>(),
                    "quotient_size": it.quotient_size(),
                })
            })
            .collect();
        r.data["fm"] = json!(list);
        if n > 0 {
            let bound = 1 + ctx.free_algebra(n - 1)?.size();
            let largest = items.items().iter().map(|it| it.quotient_size()).max().unwrap_or(0);
            r.verdicts.push(Verdict::new(
                "quotient_bound",
                largest <= 2 || largest <= bound,
                format!("largest irreducible quotient {largest}, bound {bound}"),
                Value::Null,
            ));
            if largest > 2 && largest > bound {
                r.exit = 1;
            }
        }
    }
    Ok(r)
}

fn cmd_certify(ctx: &VarietyContext, path: &Path, verify_mgu: Option<usize>) -> Result<Report, Failure> {
    let file: CertificateFile = serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::Load(format!("{}: {e}", path.display())))?;
    let cert = UnifierCertificate::from_file(ctx, &file).map_err(|e| Failure::Load(e.to_string()))?;
    let mut r = Report::new("certify", ctx);
    let ok = certificate_verdicts(ctx, &cert, verify_mgu, &mut r)?;
    r.certificates.push(to_value(&cert.to_file(ctx)));
    r.exit = if ok { 0 } else { 1 };
    Ok(r)
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let g = &cli.context;
    match &cli.command {
        Command::Check {
            fregean_bound,
            si_bound,
            operands,
        } => {
            let (source, _) = resolve(g, operands, 0, "check CONTEXT")?;
            cmd_check(&open(&source, cli.cap_free)?, *fregean_bound, *si_bound)
        }
        Command::Unify {
            projective,
            verify_mgu,
            method,
            operands,
        } => {
            let (source, rest) = resolve(g, operands, 1, "unify CONTEXT TERM")?;
            cmd_unify(&open(&source, cli.cap_free)?, &rest[0], *projective, *verify_mgu, *method)
        }
        Command::Solve { operands } => {
            let (source, rest) = resolve(g, operands, 1, "solve CONTEXT FILE")?;
            cmd_solve(&open(&source, cli.cap_free)?, &PathBuf::from(&rest[0]))
        }
        Command::Free { fm, table, operands } => {
            let (source, rest) = resolve(g, operands, 1, "free CONTEXT N")?;
            let n = rest[0]
                .parse()
                .map_err(|_| Failure::Load(format!("`{}` is not a rank", rest[0])))?;
            cmd_free(&open(&source, cli.cap_free)?, n, *fm, *table)
        }
        Command::Certify { verify_mgu, operands } => {
            let (source, rest) = resolve(g, operands, 1, "certify CONTEXT FILE")?;
            cmd_certify(&open(&source, cli.cap_free)?, &PathBuf::from(&rest[0]), *verify_mgu)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&report.to_json()).unwrap());
            } else {
                report.print_human();
            }
            ExitCode::from(report.exit)
        }
        Err(f) => {
            let (code, kind, msg) = match f {
                Failure::Load(m) => (2, "load", m),
                Failure::Cap(m) => (3, "precondition", m),
            };
            if cli.json {
                println!("{}", serde_json::to_string_pretty(&json!({"error": kind, "message": msg, "exit_code": code})).unwrap());
            } else {
                eprintln!("error: {msg}");
            }
            ExitCode::from(code)
        }
    }
}
