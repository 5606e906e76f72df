//! Terms over a finite signature with a distinguished constant `1`.
//!
//! Variables are 1-indexed (`x1`, `x2`, ...). When the signature designates
//! an equivalence symbol, juxtaposition is accepted as shorthand for it,
//! associating to the left: `xxy` reads as `e(e(x1,x1),x2)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// Index of a primitive operation in its [`Signature`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpId(pub u16);

impl OpId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpDecl {
    pub name: String,
    pub arity: usize,
}

/// A named abbreviation for a term in `x1..x_arity`, expanded when parsed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivedOp {
    pub name: String,
    pub arity: usize,
    pub body: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    ops: Vec<OpDecl>,
    derived: Vec<DerivedOp>,
    by_name: HashMap<String, Symbol>,
    one: OpId,
    equiv_symbol: Option<String>,
    subtractive_symbol: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Symbol {
    Op(OpId),
    Derived(usize),
}

fn is_variable_name(name: &str) -> bool {
    matches!(name, "x" | "y" | "z")
        || (name.len() > 1 && name.starts_with('x') && name[1..].bytes().all(|b| b.is_ascii_digit()))
}

fn valid_symbol_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| !c.is_whitespace() && !matches!(c, '(' | ')' | ','))
}

impl Signature {
    /// Builds a signature from primitive operations; `one` must name a
    /// declared constant.
    pub fn new(ops: Vec<OpDecl>, one: &str) -> Result<Self> {
        if ops.len() > u16::MAX as usize {
            return Err(Error::InvalidSignature("too many operations".into()));
        }
        let mut by_name = HashMap::new();
        for (i, op) in ops.iter().enumerate() {
            if !valid_symbol_name(&op.name) || is_variable_name(&op.name) {
                return Err(Error::InvalidSignature(format!(
                    "`{}` is not a usable operation name",
                    op.name
                )));
            }
            if by_name
                .insert(op.name.clone(), Symbol::Op(OpId(i as u16)))
                .is_some()
            {
                return Err(Error::InvalidSignature(format!(
                    "duplicate operation `{}`",
                    op.name
                )));
            }
        }
        let one = match by_name.get(one) {
            Some(Symbol::Op(id)) if ops[id.index()].arity == 0 => *id,
            Some(_) => {
                return Err(Error::InvalidSignature(format!(
                    "distinguished constant `{one}` is not 0-ary"
                )))
            }
            None => {
                return Err(Error::InvalidSignature(format!(
                    "distinguished constant `{one}` is not declared"
                )))
            }
        };
        Ok(Signature {
            ops,
            derived: Vec::new(),
            by_name,
            one,
            equiv_symbol: None,
            subtractive_symbol: None,
        })
    }

    /// Registers an abbreviation. The body is parsed against the signature
    /// as it stands, so derived symbols may build on earlier ones.
    pub fn with_derived(mut self, name: &str, arity: usize, body: &str) -> Result<Self> {
        if !valid_symbol_name(name) || is_variable_name(name) || self.by_name.contains_key(name) {
            return Err(Error::InvalidSignature(format!(
                "`{name}` cannot be used as a derived symbol"
            )));
        }
        let body = self.parse(body)?;
        if let Some(&v) = body.variables().last() {
            if v as usize > arity {
                return Err(Error::InvalidSignature(format!(
                    "body of `{name}` uses x{v} but arity is {arity}"
                )));
            }
        }
        self.by_name
            .insert(name.to_string(), Symbol::Derived(self.derived.len()));
        self.derived.push(DerivedOp {
            name: name.to_string(),
            arity,
            body,
        });
        Ok(self)
    }

    pub fn with_equiv_symbol(mut self, name: &str) -> Result<Self> {
        self.check_binary(name)?;
        self.equiv_symbol = Some(name.to_string());
        Ok(self)
    }

    pub fn with_subtractive_symbol(mut self, name: &str) -> Result<Self> {
        self.check_binary(name)?;
        self.subtractive_symbol = Some(name.to_string());
        Ok(self)
    }

    fn check_binary(&self, name: &str) -> Result<()> {
        match self.by_name.get(name) {
            Some(Symbol::Op(id)) if self.ops[id.index()].arity == 2 => Ok(()),
            Some(Symbol::Derived(i)) if self.derived[*i].arity == 2 => Ok(()),
            _ => Err(Error::InvalidSignature(format!(
                "`{name}` is not a binary symbol of the signature"
            ))),
        }
    }

    pub fn ops(&self) -> &[OpDecl] {
        &self.ops
    }

    pub fn derived(&self) -> &[DerivedOp] {
        &self.derived
    }

    pub fn op(&self, id: OpId) -> &OpDecl {
        &self.ops[id.index()]
    }

    pub fn op_ids(&self) -> impl Iterator<Item = OpId> + '_ {
        (0..self.ops.len()).map(|i| OpId(i as u16))
    }

    pub fn lookup(&self, name: &str) -> Option<OpId> {
        match self.by_name.get(name) {
            Some(Symbol::Op(id)) => Some(*id),
            _ => None,
        }
    }

    pub fn one(&self) -> OpId {
        self.one
    }

    pub fn one_term(&self) -> Term {
        Term::constant(self.one)
    }

    pub fn constants(&self) -> impl Iterator<Item = OpId> + '_ {
        self.op_ids().filter(|&id| self.op(id).arity == 0)
    }

    pub fn equiv_symbol(&self) -> Option<&str> {
        self.equiv_symbol.as_deref()
    }

    pub fn subtractive_symbol(&self) -> Option<&str> {
        self.subtractive_symbol.as_deref()
    }

    /// The term `x1 <sym> x2` for a binary primitive or derived symbol.
    pub fn binary_term(&self, name: &str) -> Option<Term> {
        self.check_binary(name).ok()?;
        Some(self.apply_symbol(name, vec![Term::var(1), Term::var(2)]))
    }

    /// Applies the designated equivalence symbol, expanding it if derived.
    pub fn equiv(&self, a: Term, b: Term) -> Option<Term> {
        let name = self.equiv_symbol.as_deref()?;
        Some(self.apply_symbol(name, vec![a, b]))
    }

    fn apply_symbol(&self, name: &str, args: Vec<Term>) -> Term {
        match self.by_name[name] {
            Symbol::Op(id) => Term::App(id, args),
            Symbol::Derived(i) => {
                let sub = Substitution::from_images(args);
                self.derived[i].body.substitute(&sub)
            }
        }
    }

    pub fn parse(&self, text: &str) -> Result<Term> {
        Parser::new(self, text).parse()
    }

    /// Explicit `f(t1,...,tk)` form.
    pub fn format(&self, t: &Term) -> String {
        let mut out = String::new();
        self.write_explicit(t, &mut out);
        out
    }

    fn write_explicit(&self, t: &Term, out: &mut String) {
        match t {
            Term::Var(i) => {
                out.push('x');
                out.push_str(&i.to_string());
            }
            Term::App(op, args) => {
                out.push_str(&self.op(*op).name);
                if !args.is_empty() {
                    out.push('(');
                    for (k, a) in args.iter().enumerate() {
                        if k > 0 {
                            out.push(',');
                        }
                        self.write_explicit(a, out);
                    }
                    out.push(')');
                }
            }
        }
    }

    /// Juxtaposition form when the equivalence symbol is primitive,
    /// otherwise the explicit form.
    pub fn format_shorthand(&self, t: &Term) -> String {
        let equiv = match self.equiv_symbol.as_deref().and_then(|n| self.lookup(n)) {
            Some(id) => id,
            None => return self.format(t),
        };
        let mut out = String::new();
        self.write_short(t, equiv, &mut out);
        out
    }

    fn write_short(&self, t: &Term, equiv: OpId, out: &mut String) {
        match t {
            Term::App(op, args) if *op == equiv => {
                self.write_short(&args[0], equiv, out);
                out.push(' ');
                let right_nested = matches!(&args[1], Term::App(o, _) if *o == equiv);
                if right_nested {
                    out.push('(');
                }
                self.write_short(&args[1], equiv, out);
                if right_nested {
                    out.push(')');
                }
            }
            Term::App(op, args) if !args.is_empty() => {
                out.push_str(&self.op(*op).name);
                out.push('(');
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    self.write_short(a, equiv, out);
                }
                out.push(')');
            }
            _ => self.write_explicit(t, out),
        }
    }

    pub(crate) fn check_term(&self, t: &Term) -> Result<()> {
        match t {
            Term::Var(0) => Err(Error::Syntax {
                offset: 0,
                message: "variables are numbered from x1".into(),
            }),
            Term::Var(_) => Ok(()),
            Term::App(op, args) => {
                let decl = self
                    .ops
                    .get(op.index())
                    .ok_or_else(|| Error::UnknownSymbol {
                        name: format!("#{}", op.0),
                        offset: 0,
                    })?;
                if decl.arity != args.len() {
                    return Err(Error::ArityMismatch {
                        op: decl.name.clone(),
                        expected: decl.arity,
                        found: args.len(),
                        offset: 0,
                    });
                }
                args.iter().try_for_each(|a| self.check_term(a))
            }
        }
    }
}

/// A first-order term. `Var(i)` stands for `x_i` with `i >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(u32),
    App(OpId, Vec<Term>),
}

impl Term {
    pub fn var(i: u32) -> Term {
        Term::Var(i)
    }

    pub fn constant(op: OpId) -> Term {
        Term::App(op, Vec::new())
    }

    pub fn app(op: OpId, args: Vec<Term>) -> Term {
        Term::App(op, args)
    }

    /// Sorted distinct variable indices.
    pub fn variables(&self) -> Vec<u32> {
        let mut set = BTreeSet::new();
        self.collect_vars(&mut set);
        set.into_iter().collect()
    }

    fn collect_vars(&self, set: &mut BTreeSet<u32>) {
        match self {
            Term::Var(i) => {
                set.insert(*i);
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(set)),
        }
    }

    /// Largest variable index occurring, 0 for ground terms.
    pub fn max_var(&self) -> u32 {
        match self {
            Term::Var(i) => *i,
            Term::App(_, args) => args.iter().map(Term::max_var).max().unwrap_or(0),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) if args.is_empty() => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    /// Simultaneous replacement of variables.
    pub fn substitute(&self, sub: &Substitution) -> Term {
        match self {
            Term::Var(i) => sub.get(*i).cloned().unwrap_or(Term::Var(*i)),
            Term::App(op, args) => Term::App(*op, args.iter().map(|a| a.substitute(sub)).collect()),
        }
    }
}

/// A finite map from variables to terms, identity elsewhere.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<u32, Term>,
}

impl Substitution {
    pub fn identity() -> Self {
        Substitution::default()
    }

    /// `x_{i+1} ↦ images[i]`.
    pub fn from_images(images: Vec<Term>) -> Self {
        let mut sub = Substitution::default();
        for (i, t) in images.into_iter().enumerate() {
            sub.insert(i as u32 + 1, t);
        }
        sub
    }

    pub fn insert(&mut self, var: u32, t: Term) {
        if t == Term::Var(var) {
            self.map.remove(&var);
        } else {
            self.map.insert(var, t);
        }
    }

    pub fn get(&self, var: u32) -> Option<&Term> {
        self.map.get(&var)
    }

    pub fn image(&self, var: u32) -> Term {
        self.get(var).cloned().unwrap_or(Term::Var(var))
    }

    /// Images of `x1..x_n`.
    pub fn images(&self, n: usize) -> Vec<Term> {
        (1..=n as u32).map(|i| self.image(i)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &Term)> {
        self.map.iter().map(|(k, v)| (*k, v))
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &Substitution) -> Substitution {
        let mut out = Substitution::default();
        for (&v, t) in &first.map {
            out.insert(v, t.substitute(self));
        }
        for (&v, t) in &self.map {
            if !first.map.contains_key(&v) {
                out.insert(v, t.clone());
            }
        }
        out
    }
}

pub struct TermDisplay<'a> {
    sig: &'a Signature,
    term: &'a Term,
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.sig.format(self.term))
    }
}

impl Term {
    pub fn display<'a>(&'a self, sig: &'a Signature) -> TermDisplay<'a> {
        TermDisplay { sig, term: self }
    }
}

struct Parser<'a> {
    sig: &'a Signature,
    src: &'a str,
    pos: usize,
    names: Vec<&'a str>,
}

impl<'a> Parser<'a> {
    fn new(sig: &'a Signature, src: &'a str) -> Self {
        let mut names: Vec<&str> = sig.by_name.keys().map(String::as_str).collect();
        // longest match first
        names.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
        Parser {
            sig,
            src,
            pos: 0,
            names,
        }
    }

    fn shorthand(&self) -> bool {
        self.sig.equiv_symbol.is_some()
    }

    fn parse(mut self) -> Result<Term> {
        let t = self.sequence()?;
        self.skip_ws();
        if self.pos < self.src.len() {
            return Err(self.syntax("unexpected trailing input"));
        }
        Ok(t)
    }

    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.rest().chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn starts_atom(&mut self) -> bool {
        !matches!(self.peek(), None | Some(')') | Some(','))
    }

    fn sequence(&mut self) -> Result<Term> {
        let start = {
            self.skip_ws();
            self.pos
        };
        let mut acc = self.atom()?;
        while self.starts_atom() {
            if !self.shorthand() {
                return Err(self.syntax(
                    "juxtaposition requires a designated equivalence symbol",
                ));
            }
            let rhs = self.atom()?;
            acc = self.sig.equiv(acc, rhs).ok_or(Error::Syntax {
                offset: start,
                message: "no equivalence symbol".into(),
            })?;
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<Term> {
        let start = {
            self.skip_ws();
            self.pos
        };
        let rest = self.rest();
        let Some(c) = rest.chars().next() else {
            return Err(self.syntax("unexpected end of input"));
        };
        if c == '(' {
            self.pos += 1;
            let t = self.sequence()?;
            if self.peek() != Some(')') {
                return Err(self.syntax("expected `)`"));
            }
            self.pos += 1;
            return Ok(t);
        }
        // x<digits> always denotes a variable
        if c == 'x' {
            let digits = rest[1..].bytes().take_while(u8::is_ascii_digit).count();
            if digits > 0 {
                let idx: u32 = rest[1..1 + digits].parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: "variable index out of range".into(),
                })?;
                if idx == 0 {
                    return Err(Error::Syntax {
                        offset: start,
                        message: "variables are numbered from x1".into(),
                    });
                }
                self.pos += 1 + digits;
                return Ok(Term::Var(idx));
            }
        }
        if let Some(name) = self.names.iter().copied().find(|n| rest.starts_with(n)) {
            self.pos += name.len();
            let args = if self.peek() == Some('(') {
                self.pos += 1;
                self.arguments()?
            } else {
                Vec::new()
            };
            return self.build(name, args, start);
        }
        match c {
            'x' => {
                self.pos += 1;
                Ok(Term::Var(1))
            }
            'y' => {
                self.pos += 1;
                Ok(Term::Var(2))
            }
            'z' => {
                self.pos += 1;
                Ok(Term::Var(3))
            }
            ')' | ',' => Err(self.syntax("expected a term")),
            _ => {
                let len: usize = rest
                    .chars()
                    .take_while(|c| c.is_alphanumeric() || *c == '_')
                    .map(char::len_utf8)
                    .sum::<usize>()
                    .max(c.len_utf8());
                Err(Error::UnknownSymbol {
                    name: rest[..len].to_string(),
                    offset: start,
                })
            }
        }
    }

    fn arguments(&mut self) -> Result<Vec<Term>> {
        let mut args = Vec::new();
        if self.peek() == Some(')') {
            self.pos += 1;
            return Ok(args);
        }
        loop {
            args.push(self.sequence()?);
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(')') => {
                    self.pos += 1;
                    return Ok(args);
                }
                _ => return Err(self.syntax("expected `,` or `)`")),
            }
        }
    }

    fn build(&self, name: &str, args: Vec<Term>, offset: usize) -> Result<Term> {
        let (expected, sym) = match self.sig.by_name[name] {
            Symbol::Op(id) => (self.sig.op(id).arity, Symbol::Op(id)),
            Symbol::Derived(i) => (self.sig.derived[i].arity, Symbol::Derived(i)),
        };
        if expected != args.len() {
            return Err(Error::ArityMismatch {
                op: name.to_string(),
                expected,
                found: args.len(),
                offset,
            });
        }
        Ok(match sym {
            Symbol::Op(id) => Term::App(id, args),
            Symbol::Derived(i) => self.sig.derived[i]
                .body
                .substitute(&Substitution::from_images(args)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equiv_sig() -> Signature {
        Signature::new(
            vec![
                OpDecl { name: "e".into(), arity: 2 },
                OpDecl { name: "1".into(), arity: 0 },
            ],
            "1",
        )
        .unwrap()
        .with_equiv_symbol("e")
        .unwrap()
    }

    fn heyting_sig() -> Signature {
        Signature::new(
            vec![
                OpDecl { name: "i".into(), arity: 2 },
                OpDecl { name: "m".into(), arity: 2 },
                OpDecl { name: "j".into(), arity: 2 },
                OpDecl { name: "0".into(), arity: 0 },
                OpDecl { name: "1".into(), arity: 0 },
            ],
            "1",
        )
        .unwrap()
    }

    #[test]
    fn shorthand_associates_left() {
        let sig = equiv_sig();
        let e = sig.lookup("e").unwrap();
        let t = sig.parse("xxy").unwrap();
        assert_eq!(
            t,
            Term::app(e, vec![Term::app(e, vec![Term::var(1), Term::var(1)]), Term::var(2)])
        );
        assert_eq!(sig.parse("x1x2").unwrap(), sig.parse("e(x1,x2)").unwrap());
        assert_eq!(sig.parse("x (y z)").unwrap(), sig.parse("e(x1,e(x2,x3))").unwrap());
    }

    #[test]
    fn constants_and_arity_errors() {
        let sig = equiv_sig();
        assert_eq!(sig.parse("1").unwrap(), Term::constant(sig.one()));
        match sig.parse("e(x1, x2, x3)") {
            Err(Error::ArityMismatch { expected: 2, found: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        match sig.parse("q(x1)") {
            Err(Error::UnknownSymbol { name, offset: 0 }) => assert_eq!(name, "q"),
            other => panic!("{other:?}"),
        }
        match sig.parse("e(x1,") {
            Err(Error::Syntax { offset: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn juxtaposition_needs_equiv_symbol() {
        let sig = heyting_sig();
        assert!(matches!(sig.parse("x1 x2"), Err(Error::Syntax { offset: 3, .. })));
        let t = sig.parse("i(x1, i(x2, 0))").unwrap();
        assert_eq!(sig.format(&t), "i(x1,i(x2,0))");
    }

    #[test]
    fn derived_symbol_expands() {
        let sig = heyting_sig()
            .with_derived("e", 2, "m(i(x1,x2),i(x2,x1))")
            .unwrap()
            .with_equiv_symbol("e")
            .unwrap();
        let t = sig.parse("x2 j(x1, i(x1,0))").unwrap();
        assert_eq!(
            sig.format(&t),
            "m(i(x2,j(x1,i(x1,0))),i(j(x1,i(x1,0)),x2))"
        );
        assert_eq!(sig.binary_term("e").unwrap(), sig.parse("e(x1,x2)").unwrap());
    }

    #[test]
    fn variables_sorted_distinct() {
        let sig = equiv_sig();
        assert_eq!(sig.parse("1").unwrap().variables(), Vec::<u32>::new());
        assert_eq!(sig.parse("x2 x1").unwrap().variables(), vec![1, 2]);
        assert_eq!(sig.parse("x1 x1").unwrap().variables(), vec![1]);
    }

    #[test]
    fn substitution_cases() {
        let sig = equiv_sig();
        let t = sig.parse("x1 x2").unwrap();
        let mut s = Substitution::identity();
        s.insert(2, Term::var(1));
        assert_eq!(t.substitute(&s), sig.parse("x1 x1").unwrap());
        assert_eq!(t.substitute(&Substitution::identity()), t);

        // x_i ↦ x_i p for i ∈ C, x_i p p otherwise
        let p = sig.parse("x1 x2").unwrap();
        let g = Substitution::from_images(vec![
            sig.equiv(Term::var(1), p.clone()).unwrap(),
            sig.equiv(sig.equiv(Term::var(2), p.clone()).unwrap(), p.clone()).unwrap(),
        ]);
        assert_eq!(
            sig.format_shorthand(&p.substitute(&g)),
            "x1 (x1 x2) (x2 (x1 x2) (x1 x2))"
        );
    }

    #[test]
    fn shorthand_printer_roundtrip() {
        let sig = equiv_sig();
        for text in ["x1 x1 x2", "x1 (x2 x3) 1", "e(x1,e(x2,x2))", "1"] {
            let t = sig.parse(text).unwrap();
            assert_eq!(sig.parse(&sig.format_shorthand(&t)).unwrap(), t);
            assert_eq!(sig.parse(&sig.format(&t)).unwrap(), t);
        }
    }
}
