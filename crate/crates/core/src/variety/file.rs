//! Contexts read from disk.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{builtin, Caps, VarietyContext};
use crate::algebra::AlgebraFile;
use crate::error::{Error, Result};
use crate::term::{OpDecl, Signature};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperationEntry {
    pub name: String,
    pub arity: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivedEntry {
    pub name: String,
    pub arity: usize,
    pub body: String,
}

/// `derived` entries are expanded in order, so later bodies may use
/// earlier names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureFile {
    pub operations: Vec<OperationEntry>,
    #[serde(default = "default_one")]
    pub one: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub derived: Vec<DerivedEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equiv_symbol: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtractive_symbol: Option<String>,
}

fn default_one() -> String {
    "1".into()
}

impl SignatureFile {
    pub fn into_signature(self) -> Result<Signature> {
        let ops = self
            .operations
            .into_iter()
            .map(|o| OpDecl {
                name: o.name,
                arity: o.arity,
            })
            .collect();
        let mut sig = Signature::new(ops, &self.one)?;
        for d in &self.derived {
            sig = sig.with_derived(&d.name, d.arity, &d.body)?;
        }
        if let Some(e) = &self.equiv_symbol {
            sig = sig.with_equiv_symbol(e)?;
        }
        if let Some(s) = &self.subtractive_symbol {
            sig = sig.with_subtractive_symbol(s)?;
        }
        Ok(sig)
    }
}

/// Generator paths are relative to the directory of the context file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextFile {
    pub signature: SignatureFile,
    pub generators: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equiv_term: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtractive_term: Option<String>,
    #[serde(default)]
    pub caps: Caps,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

impl ContextFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidContext(e.to_string()))
    }

    /// Designated terms default to the signature's symbols applied to
    /// `x1, x2`.
    pub fn into_context(self, name: &str, base: &Path) -> Result<VarietyContext> {
        let sig = Arc::new(self.signature.into_signature()?);
        let mut gens = Vec::with_capacity(self.generators.len());
        for g in &self.generators {
            let path = base.join(g);
            let alg = AlgebraFile::from_json(&read(&path)?)
                .and_then(|f| f.into_algebra(sig.clone()))
                .map_err(|e| Error::InvalidContext(format!("{}: {e}", path.display())))?;
            gens.push(alg);
        }
        let designated = |text: &Option<String>, symbol: Option<&str>| -> Result<_> {
            match text {
                Some(t) => sig.parse(t).map(Some),
                None => Ok(symbol.and_then(|s| sig.binary_term(s))),
            }
        };
        let equiv = designated(&self.equiv_term, sig.equiv_symbol())?;
        let subtractive = designated(&self.subtractive_term, sig.subtractive_symbol())?;
        VarietyContext::new(name, sig, gens, equiv, subtractive, self.caps)
    }
}

/// Reads a context file; the context is named after the file stem.
pub fn load_context_file(path: &Path) -> Result<VarietyContext> {
    let file = ContextFile::from_json(&read(path)?)?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("context");
    file.into_context(name, path.parent().unwrap_or(Path::new(".")))
}

/// A built-in name, or else a path to a context file.
pub fn load_context(source: &str) -> Result<VarietyContext> {
    if builtin::BUILTIN_NAMES.contains(&source) {
        return builtin::builtin(source);
    }
    let path = Path::new(source);
    if !path.exists() {
        return Err(Error::InvalidContext(format!(
            "`{source}` is neither a built-in context ({}) nor a file",
            builtin::BUILTIN_NAMES.join(", ")
        )));
    }
    load_context_file(path)
}
