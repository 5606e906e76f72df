//! Compiled-in contexts.

use std::sync::Arc;

use super::{Caps, VarietyContext};
use crate::algebra::FiniteAlgebra;
use crate::error::{Error, Result};
use crate::term::{OpDecl, Signature};

pub const BUILTIN_NAMES: [&str; 7] = [
    "boolean-group",
    "equiv",
    "equiv0",
    "brouwerian",
    "goedel3",
    "heyting-h5",
    "hilbert0-h",
];

/// A finite lattice given by its cover relation, read as a Heyting
/// algebra. Operations are looked up by name: `i` (→), `m` (∧), `j` (∨),
/// `e` (↔), `0` (bottom), `1` (top).
pub fn heyting_from_order(
    sig: Arc<Signature>,
    names: &[&str],
    covers: &[(usize, usize)],
) -> Result<FiniteAlgebra> {
    let n = names.len();
    let mut leq = vec![vec![false; n]; n];
    for (a, row) in leq.iter_mut().enumerate() {
        row[a] = true;
    }
    for &(a, b) in covers {
        leq[a][b] = true;
    }
    for k in 0..n {
        for a in 0..n {
            for b in 0..n {
                if leq[a][k] && leq[k][b] {
                    leq[a][b] = true;
                }
            }
        }
    }
    let bad = || Error::InvalidAlgebra("cover relation is not a bounded lattice".into());
    // greatest element of a set, if it exists
    let greatest = |set: &[usize]| -> Option<usize> {
        set.iter().copied().find(|&g| set.iter().all(|&x| leq[x][g]))
    };
    let meet = |a: usize, b: usize| {
        let lower: Vec<usize> = (0..n).filter(|&x| leq[x][a] && leq[x][b]).collect();
        greatest(&lower)
    };
    let mut m = vec![0; n * n];
    let mut j = vec![0; n * n];
    let mut i = vec![0; n * n];
    for a in 0..n {
        for b in 0..n {
            m[a * n + b] = meet(a, b).ok_or_else(bad)?;
            let upper: Vec<usize> = (0..n).filter(|&x| leq[a][x] && leq[b][x]).collect();
            j[a * n + b] = upper
                .iter()
                .copied()
                .find(|&l| upper.iter().all(|&x| leq[l][x]))
                .ok_or_else(bad)?;
        }
    }
    for a in 0..n {
        for b in 0..n {
            let below: Vec<usize> = (0..n).filter(|&x| leq[m[x * n + a]][b]).collect();
            i[a * n + b] = greatest(&below)
                .ok_or_else(|| Error::InvalidAlgebra("lattice is not Heyting".into()))?;
        }
    }
    let all: Vec<usize> = (0..n).collect();
    let top = greatest(&all).ok_or_else(bad)?;
    let bottom = all.iter().copied().find(|&x| all.iter().all(|&y| leq[x][y])).ok_or_else(bad)?;
    let mut unknown = None;
    let alg = FiniteAlgebra::from_fn(
        sig.clone(),
        n,
        Some(names.iter().map(|s| s.to_string()).collect()),
        |op, args| match sig.op(op).name.as_str() {
            "i" => i[args[0] * n + args[1]],
            "m" => m[args[0] * n + args[1]],
            "j" => j[args[0] * n + args[1]],
            "e" => m[i[args[0] * n + args[1]] * n + i[args[1] * n + args[0]]],
            "0" => bottom,
            "1" => top,
            other => {
                unknown = Some(other.to_string());
                0
            }
        },
    )?;
    if let Some(op) = unknown {
        return Err(Error::InvalidAlgebra(format!(
            "no Heyting reading for operation `{op}`"
        )));
    }
    Ok(alg)
}

fn decl(name: &str, arity: usize) -> OpDecl {
    OpDecl {
        name: name.into(),
        arity,
    }
}

fn chain(sig: &Arc<Signature>, len: usize) -> Result<FiniteAlgebra> {
    let names: Vec<String> = match len {
        2 => vec!["0".into(), "1".into()],
        3 => vec!["0".into(), "h".into(), "1".into()],
        _ => (0..len).map(|k| format!("c{k}")).collect(),
    };
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let covers: Vec<(usize, usize)> = (1..len).map(|k| (k - 1, k)).collect();
    heyting_from_order(sig.clone(), &names, &covers)
}

fn h5(sig: &Arc<Signature>) -> Result<FiniteAlgebra> {
    heyting_from_order(
        sig.clone(),
        &["0", "a", "b", "c", "1"],
        &[(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)],
    )
}

fn equiv_signature(with_zero: bool) -> Result<Arc<Signature>> {
    let mut ops = vec![decl("e", 2)];
    if with_zero {
        ops.push(decl("0", 0));
    }
    ops.push(decl("1", 0));
    Ok(Arc::new(Signature::new(ops, "1")?.with_equiv_symbol("e")?))
}

fn heyting_signature(ops: &[(&str, usize)], subtractive: bool) -> Result<Arc<Signature>> {
    let decls = ops.iter().map(|&(n, a)| decl(n, a)).collect();
    let mut sig = Signature::new(decls, "1")?;
    if ops.iter().any(|&(n, _)| n == "m") {
        sig = sig
            .with_derived("e", 2, "m(i(x1,x2),i(x2,x1))")?
            .with_equiv_symbol("e")?;
    }
    if subtractive {
        sig = sig.with_subtractive_symbol("i")?;
    }
    Ok(Arc::new(sig))
}

/// Loads a built-in context by name.
pub fn builtin(name: &str) -> Result<VarietyContext> {
    let caps = Caps::default();
    let heyting_ops = [("i", 2), ("m", 2), ("j", 2), ("0", 0), ("1", 0)];
    let (sig, gens) = match name {
        "boolean-group" => {
            let sig = equiv_signature(false)?;
            let gens = vec![chain(&sig, 2)?];
            (sig, gens)
        }
        "equiv" | "equiv0" => {
            let sig = equiv_signature(name == "equiv0")?;
            let gens = vec![chain(&sig, 2)?, chain(&sig, 3)?];
            (sig, gens)
        }
        "brouwerian" => {
            let sig = heyting_signature(&[("i", 2), ("m", 2), ("1", 0)], true)?;
            let gens = vec![chain(&sig, 2)?];
            (sig, gens)
        }
        "goedel3" => {
            let sig = heyting_signature(&heyting_ops, true)?;
            let gens = vec![chain(&sig, 3)?];
            (sig, gens)
        }
        "heyting-h5" => {
            let sig = heyting_signature(&heyting_ops, true)?;
            let gens = vec![h5(&sig)?];
            (sig, gens)
        }
        "hilbert0-h" => {
            let sig = heyting_signature(&[("i", 2), ("0", 0), ("1", 0)], true)?;
            let gens = vec![h5(&sig)?];
            (sig, gens)
        }
        other => {
            return Err(Error::InvalidContext(format!(
                "unknown built-in context `{other}`"
            )))
        }
    };
    let equiv = sig.equiv_symbol().and_then(|e| sig.binary_term(e));
    let subtractive = sig.subtractive_symbol().and_then(|s| sig.binary_term(s));
    VarietyContext::new(name, sig, gens, equiv, subtractive, caps)
}
