use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

use fregean_core::unify::{verify_certificate, CertificateFile};
use fregean_core::{builtin, UnifierCertificate, UnifierKind};

fn fregean(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fregean")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let (code, out, err) = fregean(&all);
    (code, serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out} {err}")))
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.json"))
}

/// Set `UPDATE_GOLDEN=1` to rewrite the files after a deliberate change.
fn golden(name: &str, value: &Value) {
    let path = golden_path(name);
    let text = serde_json::to_string_pretty(value).unwrap() + "\n";
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
    assert_eq!(text, want, "{name} differs from its golden file");
}

fn verdict<'a>(report: &'a Value, check: &str) -> &'a Value {
    report["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["check"] == check)
        .unwrap_or_else(|| panic!("no verdict {check}"))
}

fn certificate(ctx: &str, report: &Value) -> UnifierCertificate {
    let file: CertificateFile = serde_json::from_value(report["certificates"][0].clone()).unwrap();
    UnifierCertificate::from_file(&builtin(ctx).unwrap(), &file).unwrap()
}

#[test]
fn check_command() {
    let (code, r) = json(&["check", "boolean-group"]);
    assert_eq!(code, 0);
    assert_eq!(r["exit_code"], 0);
    assert!(r["verdicts"].as_array().unwrap().iter().all(|v| v["pass"] != false));
    golden("check_boolean_group", &r);

    let (code, r) = json(&["check", "heyting-h5"]);
    assert_eq!(code, 1);
    let ids = verdict(&r, "identities");
    assert_eq!(ids["pass"], false);
    assert_eq!(ids["witness"]["operation"], "j");
    assert_eq!(verdict(&r, "si_members")["witness"]["operation"], "j");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.json");
    std::fs::write(&bad, "{\"signature\":").unwrap();
    let (code, r) = json(&["check", bad.to_str().unwrap()]);
    assert_eq!((code, r["error"].as_str()), (2, Some("load")));
    assert_eq!(fregean(&["check", "no-such-context"]).0, 2);
}

#[test]
fn unify_command() {
    let (code, r) = json(&["unify", "equiv", "x1x2", "--projective", "--verify-mgu", "2"]);
    assert_eq!(code, 0);
    let cert = certificate("equiv", &r);
    let ctx = builtin("equiv").unwrap();
    assert_eq!(cert.kind, UnifierKind::Projective);
    assert!(cert.verified && verify_certificate(&ctx, &cert).passed());
    // both images agree, as with x1 -> x1, x2 -> x1
    assert!(ctx.terms_equal(&cert.tau[0], &cert.tau[1]));
    assert_eq!(verdict(&r, "reproductive")["pass"], true);
    golden("unify_equiv_x1x2", &r);

    let (code, r) = json(&["unify", "goedel3", "0"]);
    assert_eq!(code, 1);
    assert_eq!(verdict(&r, "cond4")["pass"], false);
    assert!(verdict(&r, "cond4")["witness"].as_str().unwrap().contains('0'));
    golden("unify_goedel3_zero", &r);

    let (code, r) = json(&["unify", "hilbert0-h", "i(x1,i(x2,0))", "--method", "subtractive"]);
    assert_eq!(code, 3);
    assert!(r["message"].as_str().unwrap().contains("special unifier"));

    let (code, r) = json(&["unify", "brouwerian", "m(x1,x2)", "--method", "brute", "--projective"]);
    assert_eq!(code, 0);
    assert_eq!(r["certificates"][0]["provenance"], "brute_force");

    assert_eq!(fregean(&["unify", "equiv", "q(x1"]).0, 2);
    let (code, _, _) = fregean(&["--context", "boolean-group", "unify", "x1"]);
    assert_eq!(code, 0);
}

#[test]
fn solve_command() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let chain = write("chain.json", r#"[["x1","x2"],["x2","x3"]]"#);
    let (code, r) = json(&["solve", "boolean-group", &chain]);
    assert_eq!(code, 0);
    let cert = certificate("boolean-group", &r);
    let ctx = builtin("boolean-group").unwrap();
    assert_eq!(cert.kind, UnifierKind::Projective);
    assert!(verify_certificate(&ctx, &cert).passed());
    assert!(ctx.terms_equal(&cert.tau[0], &cert.tau[2]));

    let same = write("same.json", r#"[["x1","x1"]]"#);
    let (code, r) = json(&["solve", "boolean-group", &same]);
    assert_eq!(code, 0);
    assert_eq!(r["certificates"][0]["tau"], serde_json::json!(["x1"]));

    let bottom = write("bottom.json", r#"[["0","1"]]"#);
    let (code, r) = json(&["solve", "goedel3", &bottom]);
    assert_eq!(code, 1);
    assert_eq!(verdict(&r, "unifiable")["pass"], false);

    let garbled = write("garbled.json", r#"[["x1"]]"#);
    assert_eq!(fregean(&["solve", "boolean-group", &garbled]).0, 2);
}

#[test]
fn free_command() {
    let (code, r) = json(&["free", "boolean-group", "2", "--table"]);
    assert_eq!(code, 0);
    assert_eq!(r["data"]["size"], 4);
    golden("free_boolean_group_2", &r);
    assert_eq!(json(&["free", "boolean-group", "0"]).1["data"]["size"], 1);

    let (code, r) = json(&["free", "equiv", "3", "--fm"]);
    assert_eq!(code, 0);
    let bound = 1 + json(&["free", "equiv", "2"]).1["data"]["size"].as_u64().unwrap();
    for item in r["data"]["fm"].as_array().unwrap() {
        let q = item["quotient_size"].as_u64().unwrap();
        assert!(q <= 2 || q <= bound);
    }

    let (code, r) = json(&["--cap-free", "3", "free", "boolean-group", "2"]);
    assert_eq!((code, r["error"].as_str()), (3, Some("precondition")));
}

#[test]
fn certify_command() {
    let (_, r) = json(&["unify", "boolean-group", "x1x2", "--projective"]);
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(&good, serde_json::to_string(&r["certificates"][0]).unwrap()).unwrap();
    let (code, r2) = json(&["certify", "boolean-group", good.to_str().unwrap(), "--verify-mgu", "2"]);
    assert_eq!(code, 0);
    assert_eq!(verdict(&r2, "certificate")["pass"], true);

    let mut forged = r["certificates"][0].clone();
    forged["tau"] = serde_json::json!(["x1", "x2"]);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&forged).unwrap()).unwrap();
    let (code, r3) = json(&["certify", "boolean-group", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(verdict(&r3, "certificate")["pass"], false);
}

#[test]
fn json_is_deterministic() {
    let args = ["unify", "equiv0", "e(x1,0)", "--verify-mgu", "1"];
    assert_eq!(fregean(&args).0, 0);
    let a = json(&args);
    let b = json(&args);
    assert_eq!(a, b);
}
