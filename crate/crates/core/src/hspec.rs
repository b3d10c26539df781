//! Plain-text Hamiltonian specifications.
//!
//! ```text
//! # two qubits and a mediator
//! system A:2; system B:2; system C:2;
//! H = 1/sqrt(2)*X(A)@Y(C) + 1/sqrt(2)*Y(B)@X(C);
//! ```
//!
//! Operators: `I`, `X`, `Y`, `Z` (Paulis, qubits only), `GX(L,j)`,
//! `GY(L,j)` (the `0 ↔ j` generators, `1 ≤ j < dim`) and `P(L,j)`
//! (projector on `|j>`). Unmentioned subsystems get the identity. Without any
//! `system` statement the layout is three qubits `A, B, C`.
//!
//! Parsing canonicalizes: factors are ordered by subsystem position and terms
//! by `(subsystems, operators, arguments, coefficient)`, so [`build`] sums in
//! a fixed order and [`format`] output parses back to the same AST.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt::{self, Write};

use crate::error::{Error, Result};
use crate::hamiltonian::{ops, Hamiltonian};
use crate::linalg::{kron, ComplexMatrix};
use crate::math;
use crate::state::SystemLayout;

/// Largest accepted source, in bytes.
pub const MAX_SOURCE_BYTES: usize = 1 << 20;

/// Largest total dimension [`build`] will assemble densely.
pub const MAX_BUILD_DIM: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OpName {
    I,
    X,
    Y,
    Z,
    GX,
    GY,
    P,
}

impl OpName {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "I" => OpName::I,
            "X" => OpName::X,
            "Y" => OpName::Y,
            "Z" => OpName::Z,
            "GX" => OpName::GX,
            "GY" => OpName::GY,
            "P" => OpName::P,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OpName::I => "I",
            OpName::X => "X",
            OpName::Y => "Y",
            OpName::Z => "Z",
            OpName::GX => "GX",
            OpName::GY => "GY",
            OpName::P => "P",
        }
    }

    fn takes_arg(self) -> bool {
        matches!(self, OpName::GX | OpName::GY | OpName::P)
    }

    fn is_pauli(self) -> bool {
        matches!(self, OpName::X | OpName::Y | OpName::Z)
    }

    fn matrix(self, dim: usize, arg: Option<usize>) -> ComplexMatrix {
        match (self, arg) {
            (OpName::I, _) => ComplexMatrix::identity(dim),
            (OpName::X, _) => ops::pauli_x(),
            (OpName::Y, _) => ops::pauli_y(),
            (OpName::Z, _) => ops::pauli_z(),
            (OpName::GX, Some(j)) => ops::gen_x(dim, j),
            (OpName::GY, Some(j)) => ops::gen_y(dim, j),
            (OpName::P, Some(j)) => ops::projector(dim, j),
            _ => unreachable!("arity checked at parse time"),
        }
    }
}

/// `num` or `num / sqrt(radicand)`; the sign lives in `num`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coeff {
    pub num: f64,
    pub radicand: Option<f64>,
}

impl Coeff {
    pub const ONE: Coeff = Coeff {
        num: 1.0,
        radicand: None,
    };

    pub fn value(&self) -> f64 {
        match self.radicand {
            Some(r) => self.num / math::sqrt(r),
            None => self.num,
        }
    }

    fn negated(self) -> Coeff {
        Coeff {
            num: -self.num,
            ..self
        }
    }

    fn cmp_total(&self, other: &Coeff) -> Ordering {
        self.value()
            .total_cmp(&other.value())
            .then(self.num.total_cmp(&other.num))
            .then(
                self.radicand
                    .unwrap_or(1.0)
                    .total_cmp(&other.radicand.unwrap_or(1.0)),
            )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpRef {
    pub op: OpName,
    pub label: String,
    pub arg: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: Coeff,
    pub factors: Vec<OpRef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HSpecAst {
    pub systems: Vec<(String, usize)>,
    pub terms: Vec<Term>,
}

impl HSpecAst {
    pub fn layout(&self) -> SystemLayout {
        SystemLayout::new(self.systems.iter().map(|(l, d)| (l.as_str(), *d)))
            .expect("validated at parse time")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HSpecErrorKind {
    SyntaxError,
    UnknownLabel,
    ArgOutOfRange,
    PauliOnQudit,
}

impl HSpecErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HSpecErrorKind::SyntaxError => "syntax error",
            HSpecErrorKind::UnknownLabel => "unknown label",
            HSpecErrorKind::ArgOutOfRange => "argument out of range",
            HSpecErrorKind::PauliOnQudit => "Pauli operator on a qudit",
        }
    }
}

/// Diagnostic with a 1-based position and the offending source line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HSpecError {
    pub kind: HSpecErrorKind,
    pub message: String,
    pub line: usize,
    pub column: usize,
    /// Source line followed by a caret line under the offending column.
    pub excerpt: String,
}

impl fmt::Display for HSpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}\n{}",
            self.line,
            self.column,
            self.kind.as_str(),
            self.message,
            self.excerpt
        )
    }
}

impl core::error::Error for HSpecError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    /// Numeric literal with its source text.
    Num(String),
    Sym(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(s) => format!("number `{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Eof => "end of input".to_owned(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    offset: usize,
}

struct Source<'a> {
    text: &'a str,
}

impl<'a> Source<'a> {
    fn error(&self, kind: HSpecErrorKind, offset: usize, message: String) -> HSpecError {
        let offset = offset.min(self.text.len());
        let line_start = self.text[..offset].rfind('\n').map_or(0, |p| p + 1);
        let line_end = self.text[offset..]
            .find('\n')
            .map_or(self.text.len(), |p| offset + p);
        let line = self.text[..offset].matches('\n').count() + 1;
        let column = self.text[line_start..offset].chars().count() + 1;
        let src_line = self.text[line_start..line_end].trim_end_matches('\r');
        let mut excerpt = String::new();
        let _ = write!(excerpt, "{src_line}\n{:>width$}", "^", width = column);
        HSpecError {
            kind,
            message,
            line,
            column,
            excerpt,
        }
    }
}

fn tokenize(src: &Source<'_>) -> core::result::Result<Vec<Spanned>, HSpecError> {
    let text = src.text;
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
        } else if b == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else if b.is_ascii_alphabetic() || b == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Spanned {
                tok: Tok::Ident(text[start..i].to_owned()),
                offset: start,
            });
        } else if b.is_ascii_digit()
            || (b == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
        {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Spanned {
                tok: Tok::Num(text[start..i].to_owned()),
                offset: start,
            });
        } else if b";:=+-*@(),/".contains(&b) {
            out.push(Spanned {
                tok: Tok::Sym(b as char),
                offset: i,
            });
            i += 1;
        } else {
            let ch = text[i..].chars().next().expect("in bounds");
            return Err(src.error(
                HSpecErrorKind::SyntaxError,
                i,
                format!("unexpected character `{ch}`"),
            ));
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        offset: text.len(),
    });
    Ok(out)
}

/// Unvalidated operator reference with source offsets.
struct RawOp {
    op: OpName,
    op_offset: usize,
    label: String,
    label_offset: usize,
    arg: Option<(usize, usize)>,
}

struct RawTerm {
    coeff: Coeff,
    factors: Vec<RawOp>,
}

struct Parser<'a> {
    src: Source<'a>,
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = core::result::Result<T, HSpecError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].offset
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> HSpecError {
        self.src.error(
            HSpecErrorKind::SyntaxError,
            self.offset(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    fn expect_sym(&mut self, c: char) -> PResult<usize> {
        if *self.peek() == Tok::Sym(c) {
            Ok(self.bump().offset)
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<(String, usize)> {
        match self.peek() {
            Tok::Ident(s) => {
                let s = s.clone();
                Ok((s, self.bump().offset))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn expect_int(&mut self, what: &str) -> PResult<(usize, usize)> {
        match self.peek() {
            Tok::Num(s) => {
                let offset = self.offset();
                let value = s.parse::<usize>().map_err(|_| {
                    self.src.error(
                        HSpecErrorKind::SyntaxError,
                        offset,
                        format!("expected {what}, found number `{s}`"),
                    )
                })?;
                self.bump();
                Ok((value, offset))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn expect_num(&mut self) -> PResult<f64> {
        match self.peek() {
            Tok::Num(s) => {
                let offset = self.offset();
                let value: f64 = s.parse().map_err(|_| {
                    self.src.error(
                        HSpecErrorKind::SyntaxError,
                        offset,
                        format!("bad number `{s}`"),
                    )
                })?;
                if !value.is_finite() {
                    return Err(self.src.error(
                        HSpecErrorKind::ArgOutOfRange,
                        offset,
                        format!("number `{s}` is not finite"),
                    ));
                }
                self.bump();
                Ok(value)
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn coeff(&mut self) -> PResult<Coeff> {
        let num = self.expect_num()?;
        if *self.peek() != Tok::Sym('/') {
            return Ok(Coeff {
                num,
                radicand: None,
            });
        }
        self.bump();
        match self.peek() {
            Tok::Ident(s) if s == "sqrt" => {
                self.bump();
            }
            _ => return Err(self.unexpected("`sqrt`")),
        }
        self.expect_sym('(')?;
        let offset = self.offset();
        let radicand = self.expect_num()?;
        if !(radicand > 0.0) {
            return Err(self.src.error(
                HSpecErrorKind::ArgOutOfRange,
                offset,
                format!("sqrt argument {radicand} must be positive"),
            ));
        }
        self.expect_sym(')')?;
        Ok(Coeff {
            num,
            radicand: Some(radicand),
        })
    }

    fn opref(&mut self) -> PResult<RawOp> {
        let (name, op_offset) = self.expect_ident("an operator name")?;
        let op = OpName::parse(&name).ok_or_else(|| {
            self.src.error(
                HSpecErrorKind::SyntaxError,
                op_offset,
                format!("unknown operator `{name}`, expected one of I, X, Y, Z, GX, GY, P"),
            )
        })?;
        self.expect_sym('(')?;
        let (label, label_offset) = self.expect_ident("a subsystem label")?;
        let arg = if *self.peek() == Tok::Sym(',') {
            let comma = self.bump().offset;
            if !op.takes_arg() {
                return Err(self.src.error(
                    HSpecErrorKind::SyntaxError,
                    comma,
                    format!("operator `{}` takes no argument", op.as_str()),
                ));
            }
            Some(self.expect_int("an integer argument")?)
        } else {
            None
        };
        if op.takes_arg() && arg.is_none() {
            return Err(self.unexpected(&format!("`,` and an argument for `{}`", op.as_str())));
        }
        self.expect_sym(')')?;
        Ok(RawOp {
            op,
            op_offset,
            label,
            label_offset,
            arg,
        })
    }

    fn term(&mut self, sign: f64) -> PResult<RawTerm> {
        let coeff = if matches!(self.peek(), Tok::Num(_)) {
            let c = self.coeff()?;
            self.expect_sym('*')?;
            c
        } else {
            Coeff::ONE
        };
        let mut factors = alloc::vec![self.opref()?];
        while *self.peek() == Tok::Sym('@') {
            self.bump();
            factors.push(self.opref()?);
        }
        let coeff = if sign < 0.0 { coeff.negated() } else { coeff };
        Ok(RawTerm { coeff, factors })
    }

    fn expr(&mut self) -> PResult<Vec<RawTerm>> {
        let mut sign = 1.0;
        match self.peek() {
            Tok::Sym('-') => {
                self.bump();
                sign = -1.0;
            }
            Tok::Sym('+') => {
                self.bump();
            }
            _ => {}
        }
        let mut terms = alloc::vec![self.term(sign)?];
        loop {
            let sign = match self.peek() {
                Tok::Sym('+') => 1.0,
                Tok::Sym('-') => -1.0,
                _ => break,
            };
            self.bump();
            terms.push(self.term(sign)?);
        }
        Ok(terms)
    }
}

/// Parses and validates a specification.
pub fn parse(text: &str) -> PResult<HSpecAst> {
    let src = Source { text };
    if text.len() > MAX_SOURCE_BYTES {
        return Err(src.error(
            HSpecErrorKind::SyntaxError,
            0,
            format!(
                "input is {} bytes, the limit is {MAX_SOURCE_BYTES}",
                text.len()
            ),
        ));
    }
    let toks = tokenize(&src)?;
    let mut p = Parser { src, toks, pos: 0 };
    let mut systems: Vec<(String, usize)> = Vec::new();
    let mut hamiltonian: Option<Vec<RawTerm>> = None;
    loop {
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Ident(kw) if kw == "system" => {
                p.bump();
                let (label, offset) = p.expect_ident("a subsystem label")?;
                if systems.iter().any(|(l, _)| *l == label) {
                    return Err(p.src.error(
                        HSpecErrorKind::SyntaxError,
                        offset,
                        format!("subsystem `{label}` declared twice"),
                    ));
                }
                p.expect_sym(':')?;
                let (dim, dim_offset) = p.expect_int("an integer dimension")?;
                if dim < 2 {
                    return Err(p.src.error(
                        HSpecErrorKind::ArgOutOfRange,
                        dim_offset,
                        format!("dimension {dim} of `{label}` must be at least 2"),
                    ));
                }
                p.expect_sym(';')?;
                systems.push((label, dim));
            }
            Tok::Ident(kw) if kw == "H" => {
                let offset = p.bump().offset;
                if hamiltonian.is_some() {
                    return Err(p.src.error(
                        HSpecErrorKind::SyntaxError,
                        offset,
                        "second `H` statement".into(),
                    ));
                }
                p.expect_sym('=')?;
                hamiltonian = Some(p.expr()?);
                p.expect_sym(';')?;
            }
            _ => return Err(p.unexpected("`system` or `H`")),
        }
    }
    let raw_terms = match hamiltonian {
        Some(t) => t,
        None => {
            return Err(p.unexpected("an `H = ...;` statement"));
        }
    };
    if systems.is_empty() {
        systems = ["A", "B", "C"]
            .iter()
            .map(|l| ((*l).to_owned(), 2))
            .collect();
    }
    if SystemLayout::new(systems.iter().map(|(l, d)| (l.as_str(), *d))).is_err() {
        return Err(p.src.error(
            HSpecErrorKind::ArgOutOfRange,
            0,
            "total dimension overflows".into(),
        ));
    }

    let position = |label: &str| systems.iter().position(|(l, _)| l == label);
    let mut terms = Vec::with_capacity(raw_terms.len());
    for raw in raw_terms {
        let mut factors: Vec<(usize, OpRef)> = Vec::with_capacity(raw.factors.len());
        for f in raw.factors {
            let pos = position(&f.label).ok_or_else(|| {
                p.src.error(
                    HSpecErrorKind::UnknownLabel,
                    f.label_offset,
                    format!("subsystem `{}` is not declared", f.label),
                )
            })?;
            let dim = systems[pos].1;
            if f.op.is_pauli() && dim != 2 {
                return Err(p.src.error(
                    HSpecErrorKind::PauliOnQudit,
                    f.op_offset,
                    format!(
                        "`{}` needs a qubit but `{}` has dimension {dim}",
                        f.op.as_str(),
                        f.label
                    ),
                ));
            }
            if let Some((j, offset)) = f.arg {
                let lowest = if f.op == OpName::P { 0 } else { 1 };
                if j < lowest || j >= dim {
                    return Err(p.src.error(
                        HSpecErrorKind::ArgOutOfRange,
                        offset,
                        format!(
                            "argument {j} of `{}` must lie in {lowest}..{dim} for `{}`",
                            f.op.as_str(),
                            f.label
                        ),
                    ));
                }
            }
            factors.push((
                pos,
                OpRef {
                    op: f.op,
                    label: f.label,
                    arg: f.arg.map(|(j, _)| j),
                },
            ));
        }
        factors.sort_by_key(|(pos, _)| *pos);
        terms.push((
            factors.iter().map(|(pos, _)| *pos).collect::<Vec<_>>(),
            Term {
                coeff: raw.coeff,
                factors: factors.into_iter().map(|(_, f)| f).collect(),
            },
        ));
    }
    terms.sort_by(|(pa, a), (pb, b)| {
        pa.cmp(pb)
            .then_with(|| {
                let ka = a.factors.iter().map(|f| (f.op, f.arg));
                let kb = b.factors.iter().map(|f| (f.op, f.arg));
                ka.cmp(kb)
            })
            .then_with(|| a.coeff.cmp_total(&b.coeff))
    });
    Ok(HSpecAst {
        systems,
        terms: terms.into_iter().map(|(_, t)| t).collect(),
    })
}

/// Dense Hamiltonian, summed in canonical term order.
pub fn build(ast: &HSpecAst) -> Result<Hamiltonian> {
    let layout = ast.layout();
    let n = layout.total_dim();
    if n > MAX_BUILD_DIM {
        return Err(Error::InvalidLayout(format!(
            "total dimension {n} exceeds {MAX_BUILD_DIM}"
        )));
    }
    let mut m = ComplexMatrix::zeros(n, n);
    for term in &ast.terms {
        let mut factors: Vec<ComplexMatrix> = ast
            .systems
            .iter()
            .map(|(_, d)| ComplexMatrix::identity(*d))
            .collect();
        for f in &term.factors {
            let pos = layout.position(&f.label)?;
            let dim = ast.systems[pos].1;
            factors[pos] = factors[pos].matmul(&f.op.matrix(dim, f.arg));
        }
        let mut product = factors[0].clone();
        for f in &factors[1..] {
            product = kron(&product, f);
        }
        m = &m + &product.scale(term.coeff.value());
    }
    m.check_hermitian()?;
    Hamiltonian::new(layout, m, "hspec")
}

fn write_num(out: &mut String, x: f64) {
    let _ = write!(out, "{x}");
}

/// Canonical rendering; `parse(&format(&ast)) == Ok(ast)`.
pub fn format(ast: &HSpecAst) -> String {
    let mut out = String::new();
    for (label, dim) in &ast.systems {
        let _ = writeln!(out, "system {label}:{dim};");
    }
    out.push_str("H =");
    for (k, term) in ast.terms.iter().enumerate() {
        let negative = term.coeff.num.is_sign_negative();
        match (k, negative) {
            (0, false) => out.push(' '),
            (0, true) => out.push_str(" -"),
            (_, false) => out.push_str(" + "),
            (_, true) => out.push_str(" - "),
        }
        let magnitude = term.coeff.num.abs();
        if magnitude != 1.0 || term.coeff.radicand.is_some() {
            write_num(&mut out, magnitude);
            if let Some(r) = term.coeff.radicand {
                out.push_str("/sqrt(");
                write_num(&mut out, r);
                out.push(')');
            }
            out.push('*');
        }
        for (j, f) in term.factors.iter().enumerate() {
            if j > 0 {
                out.push('@');
            }
            let _ = match f.arg {
                Some(a) => write!(out, "{}({},{a})", f.op.as_str(), f.label),
                None => write!(out, "{}({})", f.op.as_str(), f.label),
            };
        }
    }
    out.push_str(";\n");
    out
}

/// `.hspec` source for the optimal direct entangler on two `d`-level systems.
pub fn direct_optimal_source(d: usize) -> Result<String> {
    if d < 2 {
        return Err(Error::BadDimension(d));
    }
    let mut out = format!("system A:{d};\nsystem B:{d};\nH =");
    let coeff = if d == 2 {
        "0.5".to_owned()
    } else {
        format!("0.5/sqrt({})", d - 1)
    };
    let mut first = true;
    for j in 1..d {
        for a in ["GX", "GY"] {
            for b in ["GX", "GY"] {
                out.push_str(if first { " " } else { " + " });
                first = false;
                let _ = write!(out, "{coeff}*{a}(A,{j})@{b}(B,{j})");
            }
        }
    }
    out.push_str(";\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{cmi_product_example, direct_optimal};

    #[test]
    fn product_example() {
        let src = "system A:2; system B:2; system C:2;\n\
                   H = 1/sqrt(2)*X(A)@Y(C) + 1/sqrt(2)*Y(B)@X(C);";
        let h = build(&parse(src).unwrap()).unwrap();
        let (expected, _) = cmi_product_example();
        assert!(h.matrix().max_abs_diff(expected.matrix()) < 1e-15);
    }

    #[test]
    fn default_layout_and_unknown_label() {
        let ast = parse("H = 0.5*Z(A)@Z(C) + 0.5*Z(B)@Z(C);").unwrap();
        assert_eq!(ast.systems.len(), 3);
        let err = parse("H = X(D);").unwrap_err();
        assert_eq!(err.kind, HSpecErrorKind::UnknownLabel);
        assert_eq!((err.line, err.column), (1, 7));
        assert_eq!(err.excerpt, "H = X(D);\n      ^");
    }

    #[test]
    fn error_kinds() {
        let cases = [
            ("system A:3; H = X(A);", HSpecErrorKind::PauliOnQudit),
            ("system A:3; H = GX(A,3);", HSpecErrorKind::ArgOutOfRange),
            ("system A:3; H = GX(A,0);", HSpecErrorKind::ArgOutOfRange),
            ("system A:1; H = I(A);", HSpecErrorKind::ArgOutOfRange),
            ("H = 1/sqrt(0)*X(A);", HSpecErrorKind::ArgOutOfRange),
            ("H = ;", HSpecErrorKind::SyntaxError),
            ("H = X(A)", HSpecErrorKind::SyntaxError),
            ("system A:2;", HSpecErrorKind::SyntaxError),
            ("H = Q(A);", HSpecErrorKind::SyntaxError),
            ("H = X(A,1);", HSpecErrorKind::SyntaxError),
            ("H = GX(A);", HSpecErrorKind::SyntaxError),
            ("H = X(A); H = Z(A);", HSpecErrorKind::SyntaxError),
            ("H = X(A) $ Z(B);", HSpecErrorKind::SyntaxError),
        ];
        for (src, kind) in cases {
            assert_eq!(parse(src).unwrap_err().kind, kind, "{src}");
        }
        let err = parse("system A:2;\n# note\nH = X(A) +;\n").unwrap_err();
        assert_eq!((err.line, err.column), (3, 11));
        assert!(err.message.contains("expected"));
    }

    #[test]
    fn direct_optimal_family() {
        for d in 2..=4 {
            let h = build(&parse(&direct_optimal_source(d).unwrap()).unwrap()).unwrap();
            let expected = direct_optimal(d).unwrap();
            assert!(h.matrix().max_abs_diff(expected.matrix()) < 1e-12, "d={d}");
        }
    }

    #[test]
    fn canonical_order_and_round_trip() {
        let a = parse("H = Z(C)@X(A) - 2*Y(B) + X(A);").unwrap();
        let b = parse("H = X(A) + X(A) @ Z(C) - 2 * Y(B);").unwrap();
        assert_eq!(a, b);
        let text = format(&a);
        assert_eq!(
            text,
            "system A:2;\nsystem B:2;\nsystem C:2;\nH = X(A) + X(A)@Z(C) - 2*Y(B);\n"
        );
        assert_eq!(parse(&text).unwrap(), a);
        assert_eq!(format(&parse(&text).unwrap()), text);
        let neg = parse("H = -1*X(A) + 0.25/sqrt(3)*P(B,1);").unwrap();
        assert_eq!(
            format(&neg).lines().last().unwrap(),
            "H = -X(A) + 0.25/sqrt(3)*P(B,1);"
        );
        assert_eq!(
            build(&a)
                .unwrap()
                .matrix()
                .max_abs_diff(build(&b).unwrap().matrix()),
            0.0
        );
    }

    #[test]
    fn same_subsystem_factors_multiply_in_order() {
        let h = build(&parse("system A:3; H = GX(A,1)@GX(A,1);").unwrap()).unwrap();
        // (|0><1| + |1><0|)² = |0><0| + |1><1|
        let expected = ComplexMatrix::real_diagonal(&[1.0, 1.0, 0.0]);
        assert!(h.matrix().max_abs_diff(&expected) < 1e-15);
    }
}
