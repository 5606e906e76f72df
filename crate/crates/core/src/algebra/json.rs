use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::FiniteAlgebra;
use crate::error::{Error, Result};
use crate::term::Signature;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpTable {
    pub arity: usize,
    pub table: Vec<u32>,
}

/// On-disk form of a finite algebra. Tables are row-major:
/// `index = Σ args[j] * size^(arity-1-j)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraFile {
    pub size: usize,
    pub one: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    pub ops: BTreeMap<String, OpTable>,
}

impl AlgebraFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidAlgebra(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("algebra files serialize")
    }

    /// Binds the tables to `sig`; every declared operation needs a table
    /// of the right arity and no extra tables are allowed.
    pub fn into_algebra(self, sig: Arc<Signature>) -> Result<FiniteAlgebra> {
        let mut tables = Vec::with_capacity(sig.ops().len());
        for decl in sig.ops() {
            let t = self.ops.get(&decl.name).ok_or_else(|| {
                Error::InvalidAlgebra(format!("no table for operation `{}`", decl.name))
            })?;
            if t.arity != decl.arity {
                return Err(Error::InvalidAlgebra(format!(
                    "table for `{}` has arity {}, signature says {}",
                    decl.name, t.arity, decl.arity
                )));
            }
            tables.push(t.table.clone());
        }
        if let Some(extra) = self.ops.keys().find(|k| sig.lookup(k).is_none()) {
            return Err(Error::InvalidAlgebra(format!(
                "table for undeclared operation `{extra}`"
            )));
        }
        let alg = FiniteAlgebra::new(sig, self.size, tables, self.names)?;
        if alg.one() != self.one {
            return Err(Error::InvalidAlgebra(format!(
                "`one` is {} but the table of the constant gives {}",
                self.one,
                alg.one()
            )));
        }
        Ok(alg)
    }
}

impl From<&FiniteAlgebra> for AlgebraFile {
    fn from(alg: &FiniteAlgebra) -> Self {
        let sig = alg.signature();
        let ops = sig
            .op_ids()
            .map(|id| {
                (
                    sig.op(id).name.clone(),
                    OpTable {
                        arity: sig.op(id).arity,
                        table: alg.table(id).to_vec(),
                    },
                )
            })
            .collect();
        AlgebraFile {
            size: alg.size(),
            one: alg.one(),
            names: alg.names().map(|n| n.to_vec()),
            ops,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn roundtrip_and_errors() {
        let b = b2();
        let text = AlgebraFile::from(&b).to_json();
        let back = AlgebraFile::from_json(&text).unwrap().into_algebra(equiv_sig()).unwrap();
        assert_eq!(back, b);

        let bad = r#"{"size":2,"one":1,"ops":{"e":{"arity":2,"table":[1,0,0,2]},"1":{"arity":0,"table":[1]}}}"#;
        let err = AlgebraFile::from_json(bad).unwrap().into_algebra(equiv_sig());
        assert!(matches!(err, Err(Error::InvalidAlgebra(_))));

        let wrong_one = r#"{"size":2,"one":0,"ops":{"e":{"arity":2,"table":[1,0,0,1]},"1":{"arity":0,"table":[1]}}}"#;
        assert!(AlgebraFile::from_json(wrong_one).unwrap().into_algebra(equiv_sig()).is_err());
        assert!(AlgebraFile::from_json("{").is_err());
    }
}
