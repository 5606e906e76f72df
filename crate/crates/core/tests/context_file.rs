use std::path::PathBuf;

use fregean_core::algebra::AlgebraFile;
use fregean_core::variety::load_context_file;
use fregean_core::{builtin, load_context, Error};

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fregean-ctx-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(dir.join("algs")).unwrap();
    dir
}

const SIGNATURE: &str = r#"{"operations":[{"name":"i","arity":2},{"name":"m","arity":2},{"name":"1","arity":0}],
  "one":"1","derived":[{"name":"e","arity":2,"body":"m(i(x1,x2),i(x2,x1))"}],"equiv_symbol":"e","subtractive_symbol":"i"}"#;

#[test]
fn round_trip_through_files() {
    let dir = scratch("ok");
    let b = builtin("brouwerian").unwrap();
    std::fs::write(dir.join("algs/c2.json"), AlgebraFile::from(&b.generators()[0]).to_json()).unwrap();
    let ctx_text = format!(r#"{{"signature":{SIGNATURE},"generators":["algs/c2.json"],"caps":{{"max_free_size":500}}}}"#);
    std::fs::write(dir.join("brw.json"), ctx_text).unwrap();

    let ctx = load_context_file(&dir.join("brw.json")).unwrap();
    assert_eq!(ctx.name(), "brw");
    assert_eq!(ctx.caps().max_free_size, 500);
    assert!(ctx.terms_equal(ctx.equiv_term().unwrap(), b.equiv_term().unwrap()));
    assert!(ctx.terms_equal(ctx.subtractive_term().unwrap(), b.subtractive_term().unwrap()));
    for n in 0..3 {
        assert_eq!(ctx.free_algebra(n).unwrap().size(), b.free_algebra(n).unwrap().size());
    }
    let via_source = load_context(dir.join("brw.json").to_str().unwrap()).unwrap();
    assert_eq!(via_source.generators(), ctx.generators());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn load_errors() {
    let dir = scratch("bad");
    let b = builtin("brouwerian").unwrap();
    std::fs::write(dir.join("algs/c2.json"), AlgebraFile::from(&b.generators()[0]).to_json()).unwrap();

    std::fs::write(dir.join("missing.json"), format!(r#"{{"signature":{SIGNATURE},"generators":["nope.json"]}}"#)).unwrap();
    assert!(load_context_file(&dir.join("missing.json")).is_err());

    std::fs::write(dir.join("garbled.json"), "{\"signature\":").unwrap();
    assert!(matches!(load_context_file(&dir.join("garbled.json")), Err(Error::InvalidContext(_))));

    // x1 is no equivalence term
    let bad_term = format!(r#"{{"signature":{SIGNATURE},"generators":["algs/c2.json"],"equiv_term":"x1"}}"#);
    std::fs::write(dir.join("badterm.json"), bad_term).unwrap();
    assert!(matches!(load_context_file(&dir.join("badterm.json")), Err(Error::InvalidContext(m)) if m.contains("equivalence")));

    assert!(load_context("no-such-context").is_err());
    assert_eq!(load_context("equiv").unwrap().name(), "equiv");
    std::fs::remove_dir_all(dir).unwrap();
}
