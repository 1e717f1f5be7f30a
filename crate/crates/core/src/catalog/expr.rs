//! The catalog expression language.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary ('*' unary)*
//! unary   := '-' unary | postfix
//! postfix := primary ('^' int | '@' int)*
//! primary := int ['/' int] | '(' expr ')' | atom
//! atom    := eta(m:r,...) | E[w,N,s] | F[w,N,s] | E4(d) | E6(d) | Ew2(N)
//!          | wpa(a,b,N) | delta(N) | qser(v: c0,c1,...)
//! ```
//!
//! Parsing keeps parentheses and the written form of numbers, so rendering
//! a parsed expression reproduces the input with whitespace removed.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::Zero;
use thiserror::Error;

use crate::eta::EtaQuotient;
use crate::series::Rational;
use crate::weierstrass::TorsionPoint;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("syntax error at column {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown atom `{name}` at column {pos}")]
    UnknownAtom { pos: usize, name: String },
    #[error("invalid atom at column {pos}: {msg}")]
    InvalidAtom { pos: usize, msg: String },
}

impl ExprError {
    pub fn pos(&self) -> usize {
        match self {
            ExprError::Syntax { pos, .. }
            | ExprError::UnknownAtom { pos, .. }
            | ExprError::InvalidAtom { pos, .. } => *pos,
        }
    }
}

/// A number as written: `p` or `p/q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Num {
    pub num: BigInt,
    pub den: Option<BigInt>,
}

impl Num {
    pub fn value(&self) -> Rational {
        match &self.den {
            None => Rational::from_integer(self.num.clone()),
            Some(d) => Rational::new(self.num.clone(), d.clone()),
        }
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.den {
            None => write!(f, "{}", self.num),
            Some(d) => write!(f, "{}/{}", self.num, d),
        }
    }
}

/// Reference to a named catalog entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RefKind {
    /// `E[w,N,s]`, a generator of M_w(Γ0(N)).
    Generator,
    /// `F[w,N,s]`, a cusp form of S_w(Γ0(N)).
    Cusp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormRef {
    pub kind: RefKind,
    pub weight: u32,
    pub level: u32,
    pub index: u32,
}

impl fmt::Display for FormRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.kind {
            RefKind::Generator => 'E',
            RefKind::Cusp => 'F',
        };
        write!(f, "{c}[{},{},{}]", self.weight, self.level, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Eta(EtaQuotient),
    Ref(FormRef),
    E4(u32),
    E6(u32),
    Ew2(u32),
    Wpa(TorsionPoint),
    Delta(u32),
    /// Explicit expansion `Σ c_i q^(v+i)`, known below `q^(v+len)`.
    QSer { valuation: i64, coeffs: Vec<Num> },
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Eta(e) => write!(f, "eta({e})"),
            Atom::Ref(r) => write!(f, "{r}"),
            Atom::E4(d) => write!(f, "E4({d})"),
            Atom::E6(d) => write!(f, "E6({d})"),
            Atom::Ew2(n) => write!(f, "Ew2({n})"),
            Atom::Wpa(p) => write!(f, "{p}"),
            Atom::Delta(n) => write!(f, "delta({n})"),
            Atom::QSer { valuation, coeffs } => {
                write!(f, "qser({valuation}:")?;
                for (i, c) in coeffs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormExpr {
    Number(Num),
    Atom(Atom),
    Neg(Box<FormExpr>),
    Add(Box<FormExpr>, Box<FormExpr>),
    Sub(Box<FormExpr>, Box<FormExpr>),
    Mul(Box<FormExpr>, Box<FormExpr>),
    Pow(Box<FormExpr>, u32),
    /// `f@d`, the form `f(dτ)`.
    At(Box<FormExpr>, u32),
    Group(Box<FormExpr>),
}

impl fmt::Display for FormExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormExpr::Number(n) => write!(f, "{n}"),
            FormExpr::Atom(a) => write!(f, "{a}"),
            FormExpr::Neg(e) => write!(f, "-{e}"),
            FormExpr::Add(a, b) => write!(f, "{a}+{b}"),
            FormExpr::Sub(a, b) => write!(f, "{a}-{b}"),
            FormExpr::Mul(a, b) => write!(f, "{a}*{b}"),
            FormExpr::Pow(e, n) => write!(f, "{e}^{n}"),
            FormExpr::At(e, d) => write!(f, "{e}@{d}"),
            FormExpr::Group(e) => write!(f, "({e})"),
        }
    }
}

impl FromStr for FormExpr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, ExprError> {
        parse_expr(s)
    }
}

/// Weight of an expression: a known value, or free for explicit series
/// whose weight is whatever the context needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    Known(Ratio<i64>),
    Free,
}

impl FormExpr {
    /// Visit every atom, left to right.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            FormExpr::Number(_) => {}
            FormExpr::Atom(a) => out.push(a),
            FormExpr::Neg(e) | FormExpr::Pow(e, _) | FormExpr::At(e, _) | FormExpr::Group(e) => {
                e.collect_atoms(out)
            }
            FormExpr::Add(a, b) | FormExpr::Sub(a, b) | FormExpr::Mul(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Least common multiple of the levels the atoms live on, with `f@d`
    /// multiplying by `d`. A well-formed entry of level N has this dividing N.
    pub fn level_hint(&self) -> u32 {
        match self {
            FormExpr::Number(_) => 1,
            FormExpr::Atom(a) => match a {
                Atom::Eta(e) => e.scale_lcm(),
                Atom::Ref(r) => r.level,
                Atom::E4(d) | Atom::E6(d) => *d,
                Atom::Ew2(n) | Atom::Delta(n) => *n,
                Atom::Wpa(p) => p.level(),
                Atom::QSer { .. } => 1,
            },
            FormExpr::Neg(e) | FormExpr::Pow(e, _) | FormExpr::Group(e) => e.level_hint(),
            FormExpr::At(e, d) => e.level_hint() * d,
            FormExpr::Add(a, b) | FormExpr::Sub(a, b) | FormExpr::Mul(a, b) => {
                a.level_hint().lcm(&b.level_hint())
            }
        }
    }

    /// Infer the weight; `delta_weight` resolves `delta(N)`.
    pub fn weight(
        &self,
        delta_weight: &dyn Fn(u32) -> Option<u32>,
    ) -> Result<Weight, WeightError> {
        Ok(match self {
            FormExpr::Number(_) => Weight::Known(Ratio::zero()),
            FormExpr::Atom(a) => match a {
                Atom::Eta(e) => Weight::Known(e.weight()),
                Atom::Ref(r) => Weight::Known(Ratio::from(r.weight as i64)),
                Atom::E4(_) => Weight::Known(Ratio::from(4)),
                Atom::E6(_) => Weight::Known(Ratio::from(6)),
                Atom::Ew2(_) | Atom::Wpa(_) => Weight::Known(Ratio::from(2)),
                Atom::Delta(n) => match delta_weight(*n) {
                    Some(w) => Weight::Known(Ratio::from(w as i64)),
                    None => return Err(WeightError::UnknownDelta(*n)),
                },
                Atom::QSer { .. } => Weight::Free,
            },
            FormExpr::Neg(e) | FormExpr::At(e, _) | FormExpr::Group(e) => e.weight(delta_weight)?,
            FormExpr::Pow(e, n) => match e.weight(delta_weight)? {
                Weight::Known(w) => Weight::Known(w * *n as i64),
                Weight::Free => Weight::Free,
            },
            FormExpr::Mul(a, b) => match (a.weight(delta_weight)?, b.weight(delta_weight)?) {
                (Weight::Known(x), Weight::Known(y)) => Weight::Known(x + y),
                _ => Weight::Free,
            },
            FormExpr::Add(a, b) | FormExpr::Sub(a, b) => {
                match (a.weight(delta_weight)?, b.weight(delta_weight)?) {
                    (Weight::Known(x), Weight::Known(y)) if x != y => {
                        return Err(WeightError::Mismatch { left: x, right: y, expr: self.to_string() })
                    }
                    (Weight::Known(x), _) | (_, Weight::Known(x)) => Weight::Known(x),
                    (Weight::Free, Weight::Free) => Weight::Free,
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeightError {
    #[error("weights {left} and {right} added in `{expr}`")]
    Mismatch { left: Ratio<i64>, right: Ratio<i64>, expr: String },
    #[error("no Δ form for level {0}")]
    UnknownDelta(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Sym(char),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let col = text[..pos].chars().count();
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().map(|&(_, c)| c).collect();
            out.push((col, Tok::Int(digits.parse().expect("ascii digits"))));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((col, Tok::Ident(chars[start..i].iter().map(|&(_, c)| c).collect())));
        } else if "()[],:+-*/^@".contains(c) {
            out.push((col, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(ExprError::Syntax { pos: col, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn int(&mut self) -> Result<BigInt, ExprError> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = n.clone();
                self.at += 1;
                Ok(n)
            }
            _ => self.err("expected an integer"),
        }
    }

    fn signed_int(&mut self) -> Result<BigInt, ExprError> {
        if self.eat('-') {
            Ok(-self.int()?)
        } else {
            self.int()
        }
    }

    fn small<T: TryFrom<BigInt>>(&mut self) -> Result<T, ExprError> {
        let pos = self.pos();
        let n = self.signed_int()?;
        T::try_from(n.clone())
            .map_err(|_| ExprError::Syntax { pos, msg: format!("integer {n} out of range") })
    }

    fn number(&mut self) -> Result<Num, ExprError> {
        let num = self.int()?;
        let den = if self.eat('/') {
            let pos = self.pos();
            let d = self.int()?;
            if d.is_zero() {
                return Err(ExprError::Syntax { pos, msg: "zero denominator".into() });
            }
            Some(d)
        } else {
            None
        };
        Ok(Num { num, den })
    }

    fn signed_number(&mut self) -> Result<Num, ExprError> {
        let neg = self.eat('-');
        let mut n = self.number()?;
        if neg {
            n.num = -n.num;
        }
        Ok(n)
    }

    fn expr(&mut self) -> Result<FormExpr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = FormExpr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = FormExpr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<FormExpr, ExprError> {
        let mut lhs = self.unary()?;
        while self.eat('*') {
            lhs = FormExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<FormExpr, ExprError> {
        if self.eat('-') {
            Ok(FormExpr::Neg(Box::new(self.unary()?)))
        } else {
            self.postfix()
        }
    }

    fn postfix(&mut self) -> Result<FormExpr, ExprError> {
        let mut e = self.primary()?;
        loop {
            if self.eat('^') {
                let n: u32 = self.small()?;
                e = FormExpr::Pow(Box::new(e), n);
            } else if self.eat('@') {
                let pos = self.pos();
                let d: u32 = self.small()?;
                if d == 0 {
                    return Err(ExprError::Syntax { pos, msg: "substitution factor must be positive".into() });
                }
                e = FormExpr::At(Box::new(e), d);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<FormExpr, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Int(_)) => Ok(FormExpr::Number(self.number()?)),
            Some(Tok::Sym('(')) => {
                self.at += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(FormExpr::Group(Box::new(e)))
            }
            Some(Tok::Ident(name)) => {
                let pos = self.pos();
                self.at += 1;
                Ok(FormExpr::Atom(self.atom(&name, pos)?))
            }
            Some(_) => self.err("expected a number, atom or `(`"),
            None => self.err("unexpected end of input"),
        }
    }

    fn positive(&mut self) -> Result<u32, ExprError> {
        let pos = self.pos();
        let n: u32 = self.small()?;
        if n == 0 {
            return Err(ExprError::InvalidAtom { pos, msg: "expected a positive integer".into() });
        }
        Ok(n)
    }

    fn atom(&mut self, name: &str, pos: usize) -> Result<Atom, ExprError> {
        let atom = match name {
            "eta" => {
                self.expect('(')?;
                let mut terms = Vec::new();
                if !self.eat(')') {
                    loop {
                        let m: u32 = self.small()?;
                        self.expect(':')?;
                        let r: i32 = self.small()?;
                        terms.push((m, r));
                        if self.eat(')') {
                            break;
                        }
                        self.expect(',')?;
                    }
                }
                let e = EtaQuotient::new(terms)
                    .map_err(|e| ExprError::InvalidAtom { pos, msg: e.to_string() })?;
                return Ok(Atom::Eta(e));
            }
            "E" | "F" => {
                self.expect('[')?;
                let weight: u32 = self.small()?;
                self.expect(',')?;
                let level = self.positive()?;
                self.expect(',')?;
                let index: u32 = self.small()?;
                self.expect(']')?;
                let kind = if name == "E" { RefKind::Generator } else { RefKind::Cusp };
                return Ok(Atom::Ref(FormRef { kind, weight, level, index }));
            }
            "qser" => {
                self.expect('(')?;
                let valuation: i64 = self.small()?;
                self.expect(':')?;
                let mut coeffs = vec![self.signed_number()?];
                while self.eat(',') {
                    coeffs.push(self.signed_number()?);
                }
                self.expect(')')?;
                return Ok(Atom::QSer { valuation, coeffs });
            }
            "wpa" => {
                self.expect('(')?;
                let a: u32 = self.small()?;
                self.expect(',')?;
                let b: u32 = self.small()?;
                self.expect(',')?;
                let n: u32 = self.small()?;
                self.expect(')')?;
                let p = TorsionPoint::new(a, b, n)
                    .map_err(|e| ExprError::InvalidAtom { pos, msg: e.to_string() })?;
                return Ok(Atom::Wpa(p));
            }
            "E4" | "E6" | "Ew2" | "delta" => {
                self.expect('(')?;
                let n = self.positive()?;
                self.expect(')')?;
                match name {
                    "E4" => Atom::E4(n),
                    "E6" => Atom::E6(n),
                    "Ew2" if n < 2 => {
                        return Err(ExprError::InvalidAtom { pos, msg: "Ew2 needs level at least 2".into() })
                    }
                    "Ew2" => Atom::Ew2(n),
                    _ => Atom::Delta(n),
                }
            }
            _ => return Err(ExprError::UnknownAtom { pos, name: name.to_string() }),
        };
        Ok(atom)
    }
}

/// Parse an expression of the catalog grammar.
pub fn parse_expr(text: &str) -> Result<FormExpr, ExprError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, at: 0, end: text.chars().count() };
    let e = p.expr()?;
    if p.at < p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(e)
}

/// Render an expression; the inverse of [`parse_expr`] up to whitespace.
pub fn render(e: &FormExpr) -> String {
    e.to_string()
}
