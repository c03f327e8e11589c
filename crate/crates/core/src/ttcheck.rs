//! Surface syntax for dependent type expressions and its interpretation.
//!
//! The grammar covers `Unit`, `Fin n` (with a variable allowed in the
//! argument position as the one type-level dependency form), dependent sums
//! and products with a named binder, and equality types `Id A a b`. Terms
//! are numerals, variables, pairs, lambdas, and applications.
//!
//! A judgement elaborates to a mapping table: the semantic extent of the
//! context is a finite set of environments, and a type expression becomes
//! the map sending each environment to the cardinal interpreting the type.
//! The formers elaborate through the algebra's structure maps, so syntactic
//! substitution corresponds to composition of tables, strictly.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::finset::{compose, FinMap, FinSet};
use crate::label::Label;
use crate::mlalg::MLAlgebra;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Num(u64),
    Var(String),
    Pair(Box<Term>, Box<Term>),
    Lam(String, Box<Term>),
    App(Box<Term>, Box<Term>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeExpr {
    Unit,
    /// `Fin t` with `t` a numeral or variable
    Fin(Term),
    Sigma(String, Box<TypeExpr>, Box<TypeExpr>),
    Pi(String, Box<TypeExpr>, Box<TypeExpr>),
    Id(Box<TypeExpr>, Term, Term),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Num(n) => write!(f, "{n}"),
            Term::Var(x) => write!(f, "{x}"),
            Term::Pair(a, b) => write!(f, "({a}, {b})"),
            Term::Lam(x, t) => write!(f, "lam {x} . {t}"),
            Term::App(g, u) => {
                match g.as_ref() {
                    Term::App(..) | Term::Var(..) | Term::Num(..) => write!(f, "{g}")?,
                    _ => write!(f, "({g})")?,
                }
                match u.as_ref() {
                    Term::Var(..) | Term::Num(..) | Term::Pair(..) => write!(f, " {u}"),
                    _ => write!(f, " ({u})"),
                }
            }
        }
    }
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Unit => write!(f, "Unit"),
            TypeExpr::Fin(t) => write!(f, "Fin {t}"),
            TypeExpr::Sigma(x, a, b) => write!(f, "Sigma ({x} : {a}) . {b}"),
            TypeExpr::Pi(x, a, b) => write!(f, "Pi ({x} : {a}) . {b}"),
            TypeExpr::Id(a, s, t) => {
                match a.as_ref() {
                    TypeExpr::Unit | TypeExpr::Fin(_) => write!(f, "Id {a}")?,
                    _ => write!(f, "Id ({a})")?,
                }
                match s {
                    Term::Num(..) | Term::Var(..) | Term::Pair(..) => write!(f, " {s}")?,
                    _ => write!(f, " ({s})")?,
                }
                match t {
                    Term::Num(..) | Term::Var(..) | Term::Pair(..) => write!(f, " {t}"),
                    _ => write!(f, " ({t})"),
                }
            }
        }
    }
}

// --- lexer / parser ---

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(u64),
    LParen,
    RParen,
    Colon,
    Dot,
    Comma,
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

fn lex(text: &str) -> Result<Lexer> {
    let mut toks = Vec::new();
    let (mut line, mut col) = (1usize, 1usize);
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        let tok = match c {
            '(' => {
                bump(&mut chars);
                Tok::LParen
            }
            ')' => {
                bump(&mut chars);
                Tok::RParen
            }
            ':' => {
                bump(&mut chars);
                Tok::Colon
            }
            '.' => {
                bump(&mut chars);
                Tok::Dot
            }
            ',' => {
                bump(&mut chars);
                Tok::Comma
            }
            d if d.is_ascii_digit() => {
                let mut s = String::new();
                while matches!(chars.peek(), Some(d) if d.is_ascii_digit()) {
                    s.push(bump(&mut chars));
                }
                Tok::Num(s.parse().map_err(|e| Error::Parse {
                    line: tline,
                    col: tcol,
                    msg: format!("numeral out of range: {e}"),
                })?)
            }
            a if a.is_alphabetic() || a == '_' => {
                let mut s = String::new();
                while matches!(chars.peek(), Some(&x) if x.is_alphanumeric() || x == '_' || x == '\'')
                {
                    s.push(bump(&mut chars));
                }
                Tok::Ident(s)
            }
            other => {
                return Err(Error::Parse {
                    line: tline,
                    col: tcol,
                    msg: format!("unexpected character {other:?}"),
                })
            }
        };
        toks.push((tok, tline, tcol));
    }
    Ok(Lexer {
        toks,
        pos: 0,
        end: (line, col),
    })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _, _)| t)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|&(_, l, c)| (l, c))
            .unwrap_or(self.end)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let (line, col) = self.here();
        Error::Parse {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<Tok> {
        let t = self
            .toks
            .get(self.pos)
            .map(|(t, _, _)| t.clone())
            .ok_or_else(|| self.err(format!("expected {what}, found end of input")))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        let got = self.next(what)?;
        if got == tok {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.err(format!("expected {what}, found {got:?}")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.next("identifier")? {
            Tok::Ident(s) => Ok(s),
            got => {
                self.pos -= 1;
                Err(self.err(format!("expected identifier, found {got:?}")))
            }
        }
    }
}

/// Parse a type expression; errors carry line and column.
pub fn parse(text: &str) -> Result<TypeExpr> {
    let mut lx = lex(text)?;
    let ty = parse_type(&mut lx)?;
    if lx.peek().is_some() {
        return Err(lx.err("trailing input after expression"));
    }
    Ok(ty)
}

fn parse_type(lx: &mut Lexer) -> Result<TypeExpr> {
    match lx.peek() {
        Some(Tok::Ident(kw)) if kw == "Sigma" || kw == "Pi" => {
            let kw = kw.clone();
            lx.pos += 1;
            lx.expect(Tok::LParen, "'('")?;
            let x = lx.ident()?;
            lx.expect(Tok::Colon, "':'")?;
            let a = parse_type(lx)?;
            lx.expect(Tok::RParen, "')'")?;
            lx.expect(Tok::Dot, "'.'")?;
            let b = parse_type(lx)?;
            Ok(if kw == "Sigma" {
                TypeExpr::Sigma(x, Box::new(a), Box::new(b))
            } else {
                TypeExpr::Pi(x, Box::new(a), Box::new(b))
            })
        }
        Some(Tok::Ident(kw)) if kw == "Id" => {
            lx.pos += 1;
            let a = parse_type_atom(lx)?;
            let s = parse_term_atom(lx)?;
            let t = parse_term_atom(lx)?;
            Ok(TypeExpr::Id(Box::new(a), s, t))
        }
        _ => parse_type_atom(lx),
    }
}

fn parse_type_atom(lx: &mut Lexer) -> Result<TypeExpr> {
    match lx.next("type")? {
        Tok::Ident(kw) if kw == "Unit" => Ok(TypeExpr::Unit),
        Tok::Ident(kw) if kw == "Fin" => match lx.next("numeral or variable")? {
            Tok::Num(n) => Ok(TypeExpr::Fin(Term::Num(n))),
            Tok::Ident(x) => Ok(TypeExpr::Fin(Term::Var(x))),
            got => {
                lx.pos -= 1;
                Err(lx.err(format!("expected numeral or variable after Fin, found {got:?}")))
            }
        },
        Tok::LParen => {
            let t = parse_type(lx)?;
            lx.expect(Tok::RParen, "')'")?;
            Ok(t)
        }
        got => {
            lx.pos -= 1;
            Err(lx.err(format!("expected a type, found {got:?}")))
        }
    }
}

fn parse_term(lx: &mut Lexer) -> Result<Term> {
    if matches!(lx.peek(), Some(Tok::Ident(kw)) if kw == "lam") {
        lx.pos += 1;
        let x = lx.ident()?;
        lx.expect(Tok::Dot, "'.'")?;
        let t = parse_term(lx)?;
        return Ok(Term::Lam(x, Box::new(t)));
    }
    let mut t = parse_term_atom(lx)?;
    loop {
        match lx.peek() {
            Some(Tok::Num(_)) | Some(Tok::LParen) => {}
            Some(Tok::Ident(kw)) if kw != "lam" => {}
            _ => break,
        }
        let u = parse_term_atom(lx)?;
        t = Term::App(Box::new(t), Box::new(u));
    }
    Ok(t)
}

fn parse_term_atom(lx: &mut Lexer) -> Result<Term> {
    match lx.next("term")? {
        Tok::Num(n) => Ok(Term::Num(n)),
        Tok::Ident(x) if x != "lam" => Ok(Term::Var(x)),
        Tok::LParen => {
            let t = parse_term(lx)?;
            match lx.next("',' or ')'")? {
                Tok::Comma => {
                    let u = parse_term(lx)?;
                    lx.expect(Tok::RParen, "')'")?;
                    Ok(Term::Pair(Box::new(t), Box::new(u)))
                }
                Tok::RParen => Ok(t),
                got => {
                    lx.pos -= 1;
                    Err(lx.err(format!("expected ',' or ')', found {got:?}")))
                }
            }
        }
        got => {
            lx.pos -= 1;
            Err(lx.err(format!("expected a term, found {got:?}")))
        }
    }
}

// --- contexts and elaboration ---

/// An ordered telescope of typed variables with its semantic extent.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context {
    entries: Vec<(String, TypeExpr)>,
}

/// An environment: one value per context entry.
type Env = Vec<u64>;

fn env_label(env: &Env) -> Label {
    Label::tuple(env.iter().map(|&v| Label::Nat(v)))
}

impl Context {
    pub fn empty() -> Self {
        Context::default()
    }

    pub fn push(&mut self, name: impl Into<String>, ty: TypeExpr) {
        self.entries.push((name.into(), ty));
    }

    pub fn entries(&self) -> &[(String, TypeExpr)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        self.entries.iter().rposition(|(n, _)| n == name)
    }

    /// Enumerate all environments, checking each entry is well-scoped.
    fn environments(&self, alg: &MLAlgebra) -> Result<Vec<Env>> {
        let mut envs: Vec<Env> = vec![Vec::new()];
        for (i, (_, ty)) in self.entries.iter().enumerate() {
            let prefix = Context {
                entries: self.entries[..i].to_vec(),
            };
            let mut next = Vec::new();
            for env in &envs {
                let n = type_card(alg, &prefix, ty, env)?;
                for v in 0..n {
                    let mut e = env.clone();
                    e.push(v);
                    next.push(e);
                }
            }
            envs = next;
        }
        Ok(envs)
    }

    /// The semantic extent as a finite set of environment tuples.
    pub fn extent(&self, alg: &MLAlgebra) -> Result<FinSet> {
        FinSet::new(self.environments(alg)?.iter().map(env_label).collect())
    }
}

/// The cardinal of a type expression in an environment, computed through
/// the algebra's structure maps.
fn type_card(alg: &MLAlgebra, ctx: &Context, ty: &TypeExpr, env: &Env) -> Result<u64> {
    let label = type_label(alg, ctx, ty, env)?;
    label.as_nat().ok_or(Error::Malformed {
        op: "type_card",
        expected: "cardinal type label",
        got: label,
    })
}

fn type_label(alg: &MLAlgebra, ctx: &Context, ty: &TypeExpr, env: &Env) -> Result<Label> {
    match ty {
        TypeExpr::Unit => alg.one_label(),
        TypeExpr::Fin(Term::Num(n)) => {
            let l = Label::Nat(*n);
            if !alg.contains_type(&l) {
                return Err(Error::OutOfBound {
                    op: "Fin",
                    input: l.to_string(),
                });
            }
            Ok(l)
        }
        TypeExpr::Fin(Term::Var(x)) => {
            let i = ctx
                .lookup(x)
                .ok_or_else(|| Error::Unbound(x.clone()))?;
            Ok(Label::Nat(env[i]))
        }
        TypeExpr::Fin(t) => Err(Error::TypeMismatch(format!(
            "Fin argument must be a numeral or variable, found {t}"
        ))),
        TypeExpr::Sigma(x, a, b) => {
            let na = type_card(alg, ctx, a, env)?;
            let mut inner = ctx.clone();
            inner.push(x.clone(), (**a).clone());
            let mut cards = Vec::new();
            for v in 0..na {
                let mut e = env.clone();
                e.push(v);
                cards.push(type_label(alg, &inner, b, &e)?);
            }
            alg.sigma_base(&Label::pair(Label::Nat(na), Label::tuple(cards)))
        }
        TypeExpr::Pi(x, a, b) => {
            let na = type_card(alg, ctx, a, env)?;
            let mut inner = ctx.clone();
            inner.push(x.clone(), (**a).clone());
            let mut cards = Vec::new();
            for v in 0..na {
                let mut e = env.clone();
                e.push(v);
                cards.push(type_label(alg, &inner, b, &e)?);
            }
            alg.pi_base(&Label::pair(Label::Nat(na), Label::tuple(cards)))
        }
        TypeExpr::Id(a, s, t) => {
            let na = type_card(alg, ctx, a, env)?;
            let is = eval_term(alg, ctx, s, a, env)?;
            let it = eval_term(alg, ctx, t, a, env)?;
            alg.eq_base(&Label::pair(
                Label::pair(Label::Nat(na), Label::Nat(is)),
                Label::pair(Label::Nat(na), Label::Nat(it)),
            ))
        }
    }
}

/// Infer the type of a head term (variables and applications only).
fn infer_type(ctx: &Context, t: &Term) -> Result<TypeExpr> {
    match t {
        Term::Var(x) => {
            let i = ctx
                .lookup(x)
                .ok_or_else(|| Error::Unbound(x.clone()))?;
            Ok(ctx.entries[i].1.clone())
        }
        Term::App(f, u) => match infer_type(ctx, f)? {
            TypeExpr::Pi(x, _, b) => {
                let mut sigma = Substitution::identity_for(ctx);
                sigma.set(&x, (**u).clone());
                substitute_type(&b, &sigma)
            }
            other => Err(Error::TypeMismatch(format!(
                "applied a term of non-product type {other}"
            ))),
        },
        other => Err(Error::TypeMismatch(format!(
            "cannot infer the type of {other}"
        ))),
    }
}

/// Evaluate a term against an expected type, returning its index in the
/// cardinal interpretation of that type.
fn eval_term(
    alg: &MLAlgebra,
    ctx: &Context,
    t: &Term,
    expected: &TypeExpr,
    env: &Env,
) -> Result<u64> {
    match t {
        Term::Num(k) => {
            let n = type_card(alg, ctx, expected, env)?;
            if *k >= n {
                return Err(Error::TypeMismatch(format!(
                    "numeral {k} does not inhabit a type of size {n}"
                )));
            }
            Ok(*k)
        }
        Term::Var(x) => {
            let i = ctx
                .lookup(x)
                .ok_or_else(|| Error::Unbound(x.clone()))?;
            let prefix = Context {
                entries: ctx.entries[..i].to_vec(),
            };
            let declared = type_card(alg, &prefix, &ctx.entries[i].1, &env[..i].to_vec())?;
            let wanted = type_card(alg, ctx, expected, env)?;
            if declared != wanted {
                return Err(Error::TypeMismatch(format!(
                    "variable {x} has type of size {declared}, expected {wanted}"
                )));
            }
            Ok(env[i])
        }
        Term::Pair(s, u) => {
            let TypeExpr::Sigma(x, a, b) = expected else {
                return Err(Error::TypeMismatch(format!(
                    "pair against non-sum type {expected}"
                )));
            };
            let is = eval_term(alg, ctx, s, a, env)?;
            let mut inner = ctx.clone();
            inner.push(x.clone(), (**a).clone());
            // offset of the chosen summand, then the index within it
            let mut offset = 0;
            for v in 0..is {
                let mut e = env.clone();
                e.push(v);
                offset += type_card(alg, &inner, b, &e)?;
            }
            let mut e = env.clone();
            e.push(is);
            let iu = eval_term(alg, &inner, u, b, &e)?;
            Ok(offset + iu)
        }
        Term::Lam(x, body) => {
            let TypeExpr::Pi(y, a, b) = expected else {
                return Err(Error::TypeMismatch(format!(
                    "lambda against non-product type {expected}"
                )));
            };
            // align the two binders on a common name that captures nothing
            let (binder, body, b) = if x == y {
                (x.clone(), (**body).clone(), (**b).clone())
            } else {
                let mut avoid = free_term_vars(body);
                avoid.extend(free_type_vars(b));
                avoid.extend(ctx.entries.iter().map(|(n, _)| n.clone()));
                let z = fresh_name(x, |cand| avoid.contains(cand));
                let mut rename_body = Substitution::default();
                rename_body.set(x, Term::Var(z.clone()));
                let mut rename_ty = Substitution::default();
                rename_ty.set(y, Term::Var(z.clone()));
                (
                    z,
                    substitute_term(body, &rename_body)?,
                    substitute_type(b, &rename_ty)?,
                )
            };
            let na = type_card(alg, ctx, a, env)?;
            let mut inner = ctx.clone();
            inner.push(binder, (**a).clone());
            // mixed-radix value, first coordinate most significant
            let mut value = 0u64;
            for v in 0..na {
                let mut e = env.clone();
                e.push(v);
                let card = type_card(alg, &inner, &b, &e)?;
                let iv = eval_term(alg, &inner, &body, &b, &e)?;
                value = value * card + iv;
            }
            Ok(value)
        }
        Term::App(f, u) => {
            let f_ty = infer_type(ctx, f)?;
            let TypeExpr::Pi(y, a, b) = &f_ty else {
                return Err(Error::TypeMismatch(format!(
                    "applied a term of non-product type {f_ty}"
                )));
            };
            let iu = eval_term(alg, ctx, u, a, env)?;
            let fv = eval_term(alg, ctx, f, &f_ty, env)?;
            let na = type_card(alg, ctx, a, env)?;
            let mut inner = ctx.clone();
            inner.push(y.clone(), (**a).clone());
            let mut cards = Vec::with_capacity(na as usize);
            for v in 0..na {
                let mut e = env.clone();
                e.push(v);
                cards.push(type_card(alg, &inner, b, &e)?);
            }
            // extract the digit at the argument's position
            let mut rest = fv;
            let mut digit = 0;
            for (v, &card) in cards.iter().enumerate() {
                let tail: u64 = cards[v + 1..].iter().product();
                digit = if card == 0 { 0 } else { rest / tail };
                rest %= tail.max(1);
                if v as u64 == iu {
                    break;
                }
            }
            // check against the expected type
            let result_card = cards[iu as usize];
            let wanted = type_card(alg, ctx, expected, env)?;
            if result_card != wanted {
                return Err(Error::TypeMismatch(format!(
                    "application produces a type of size {result_card}, expected {wanted}"
                )));
            }
            Ok(digit)
        }
    }
}

/// Elaborate a type expression over a context into its classifying table:
/// the map from the context extent to the type carrier.
pub fn elaborate(alg: &MLAlgebra, ctx: &Context, ty: &TypeExpr) -> Result<FinMap> {
    check_scope(ctx, ty)?;
    let envs = ctx.environments(alg)?;
    let extent = FinSet::new(envs.iter().map(env_label).collect())?;
    let mut table = Vec::with_capacity(envs.len());
    let u = alg.u_set();
    for env in &envs {
        let l = type_label(alg, ctx, ty, env)?;
        table.push(u.require(&l, "type carrier")?);
    }
    FinMap::new(extent, u, table)
}

/// The unique value of a closed expression.
pub fn cardinality(alg: &MLAlgebra, ty: &TypeExpr) -> Result<u64> {
    let m = elaborate(alg, &Context::empty(), ty)?;
    let l = m.cod().label(m.apply_idx(0));
    l.as_nat().ok_or(Error::Malformed {
        op: "cardinality",
        expected: "cardinal type label",
        got: l.clone(),
    })
}

fn check_scope(ctx: &Context, ty: &TypeExpr) -> Result<()> {
    fn term_scope(bound: &mut Vec<String>, t: &Term) -> Result<()> {
        match t {
            Term::Num(_) => Ok(()),
            Term::Var(x) => {
                if bound.iter().any(|b| b == x) {
                    Ok(())
                } else {
                    Err(Error::Unbound(x.clone()))
                }
            }
            Term::Pair(a, b) => {
                term_scope(bound, a)?;
                term_scope(bound, b)
            }
            Term::Lam(x, t) => {
                bound.push(x.clone());
                let r = term_scope(bound, t);
                bound.pop();
                r
            }
            Term::App(f, u) => {
                term_scope(bound, f)?;
                term_scope(bound, u)
            }
        }
    }
    fn ty_scope(bound: &mut Vec<String>, ty: &TypeExpr) -> Result<()> {
        match ty {
            TypeExpr::Unit => Ok(()),
            TypeExpr::Fin(t) => term_scope(bound, t),
            TypeExpr::Sigma(x, a, b) | TypeExpr::Pi(x, a, b) => {
                ty_scope(bound, a)?;
                bound.push(x.clone());
                let r = ty_scope(bound, b);
                bound.pop();
                r
            }
            TypeExpr::Id(a, s, t) => {
                ty_scope(bound, a)?;
                term_scope(bound, s)?;
                term_scope(bound, t)
            }
        }
    }
    let mut bound: Vec<String> = ctx.entries.iter().map(|(n, _)| n.clone()).collect();
    ty_scope(&mut bound, ty)
}

// --- substitution ---

/// A substitution assigning terms to variables.
#[derive(Clone, Debug, Default)]
pub struct Substitution {
    map: HashMap<String, Term>,
}

impl Substitution {
    pub fn new(assignments: impl IntoIterator<Item = (String, Term)>) -> Self {
        Substitution {
            map: assignments.into_iter().collect(),
        }
    }

    /// Identity on every variable of the context.
    pub fn identity_for(ctx: &Context) -> Self {
        Substitution {
            map: ctx
                .entries
                .iter()
                .map(|(n, _)| (n.clone(), Term::Var(n.clone())))
                .collect(),
        }
    }

    pub fn set(&mut self, var: &str, term: Term) {
        self.map.insert(var.to_string(), term);
    }

    fn get(&self, var: &str) -> Option<&Term> {
        self.map.get(var)
    }

}

fn free_term_vars(t: &Term) -> std::collections::HashSet<String> {
    let mut out = std::collections::HashSet::new();
    fn go(t: &Term, bound: &mut Vec<String>, out: &mut std::collections::HashSet<String>) {
        match t {
            Term::Num(_) => {}
            Term::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
            }
            Term::Pair(a, b) => {
                go(a, bound, out);
                go(b, bound, out);
            }
            Term::Lam(x, t) => {
                bound.push(x.clone());
                go(t, bound, out);
                bound.pop();
            }
            Term::App(f, u) => {
                go(f, bound, out);
                go(u, bound, out);
            }
        }
    }
    go(t, &mut Vec::new(), &mut out);
    out
}

fn free_type_vars(ty: &TypeExpr) -> std::collections::HashSet<String> {
    match ty {
        TypeExpr::Unit => Default::default(),
        TypeExpr::Fin(t) => free_term_vars(t),
        TypeExpr::Sigma(x, a, b) | TypeExpr::Pi(x, a, b) => {
            let mut out = free_type_vars(a);
            let mut inner = free_type_vars(b);
            inner.remove(x);
            out.extend(inner);
            out
        }
        TypeExpr::Id(a, s, t) => {
            let mut out = free_type_vars(a);
            out.extend(free_term_vars(s));
            out.extend(free_term_vars(t));
            out
        }
    }
}

fn fresh_name(base: &str, avoid: impl Fn(&str) -> bool) -> String {
    if !avoid(base) {
        return base.to_string();
    }
    for i in 1.. {
        let cand = format!("{base}{i}");
        if !avoid(&cand) {
            return cand;
        }
    }
    unreachable!()
}

pub fn substitute_term(t: &Term, sigma: &Substitution) -> Result<Term> {
    Ok(match t {
        Term::Num(n) => Term::Num(*n),
        Term::Var(x) => sigma.get(x).cloned().unwrap_or_else(|| Term::Var(x.clone())),
        Term::Pair(a, b) => Term::Pair(
            Box::new(substitute_term(a, sigma)?),
            Box::new(substitute_term(b, sigma)?),
        ),
        Term::Lam(x, body) => {
            let (x, body) = rebind(x, free_term_vars(body), sigma, |s| {
                substitute_term(body, s).map(Binder::Term)
            })?;
            Term::Lam(x, Box::new(body.into_term()))
        }
        Term::App(f, u) => Term::App(
            Box::new(substitute_term(f, sigma)?),
            Box::new(substitute_term(u, sigma)?),
        ),
    })
}

enum Binder {
    Term(Term),
    Type(TypeExpr),
}

impl Binder {
    fn into_term(self) -> Term {
        match self {
            Binder::Term(t) => t,
            Binder::Type(_) => unreachable!(),
        }
    }

    fn into_type(self) -> TypeExpr {
        match self {
            Binder::Type(t) => t,
            Binder::Term(_) => unreachable!(),
        }
    }
}

/// Handle a binder under substitution: the fresh name must not collide with
/// any variable free in the image of a variable that is itself free in the
/// body (other than the binder).
fn rebind(
    x: &str,
    body_free: std::collections::HashSet<String>,
    sigma: &Substitution,
    body: impl FnOnce(&Substitution) -> Result<Binder>,
) -> Result<(String, Binder)> {
    let mut avoid = std::collections::HashSet::new();
    for y in body_free {
        if y == x {
            continue;
        }
        match sigma.get(&y) {
            Some(img) => avoid.extend(free_term_vars(img)),
            None => {
                avoid.insert(y);
            }
        }
    }
    let fresh = fresh_name(x, |cand| avoid.contains(cand));
    let mut inner = sigma.clone();
    inner.set(x, Term::Var(fresh.clone()));
    Ok((fresh, body(&inner)?))
}

/// Capture-avoiding substitution into a type expression.
pub fn substitute_type(ty: &TypeExpr, sigma: &Substitution) -> Result<TypeExpr> {
    Ok(match ty {
        TypeExpr::Unit => TypeExpr::Unit,
        TypeExpr::Fin(t) => {
            let t = substitute_term(t, sigma)?;
            match t {
                Term::Num(_) | Term::Var(_) => TypeExpr::Fin(t),
                other => {
                    return Err(Error::TypeMismatch(format!(
                        "substitution puts a compound term {other} in a Fin argument"
                    )))
                }
            }
        }
        TypeExpr::Sigma(x, a, b) => {
            let a = substitute_type(a, sigma)?;
            let (x, b) = rebind(x, free_type_vars(b), sigma, |s| {
                substitute_type(b, s).map(Binder::Type)
            })?;
            TypeExpr::Sigma(x, Box::new(a), Box::new(b.into_type()))
        }
        TypeExpr::Pi(x, a, b) => {
            let a = substitute_type(a, sigma)?;
            let (x, b) = rebind(x, free_type_vars(b), sigma, |s| {
                substitute_type(b, s).map(Binder::Type)
            })?;
            TypeExpr::Pi(x, Box::new(a), Box::new(b.into_type()))
        }
        TypeExpr::Id(a, s, t) => TypeExpr::Id(
            Box::new(substitute_type(a, sigma)?),
            substitute_term(s, sigma)?,
            substitute_term(t, sigma)?,
        ),
    })
}

/// The semantic table of a substitution `σ : Δ → Γ`: each Δ-environment is
/// sent to the Γ-environment obtained by evaluating the assigned terms.
pub fn substitution_table(
    alg: &MLAlgebra,
    delta: &Context,
    gamma: &Context,
    sigma: &Substitution,
) -> Result<FinMap> {
    let delta_envs = delta.environments(alg)?;
    let dom = FinSet::new(delta_envs.iter().map(env_label).collect())?;
    let cod = gamma.extent(alg)?;
    let mut table = Vec::with_capacity(delta_envs.len());
    for denv in &delta_envs {
        let mut genv: Env = Vec::with_capacity(gamma.len());
        for (i, (x, a)) in gamma.entries.iter().enumerate() {
            let term = sigma
                .get(x)
                .ok_or_else(|| Error::TypeMismatch(format!("substitution misses {x}")))?;
            // the expected type is the entry's type pushed along σ's prefix
            let prefix = Context {
                entries: gamma.entries[..i].to_vec(),
            };
            let mut prefix_sigma = Substitution::default();
            for (y, _) in prefix.entries() {
                prefix_sigma.set(y, sigma.get(y).cloned().unwrap_or(Term::Var(y.clone())));
            }
            let expected = substitute_type(a, &prefix_sigma)?;
            genv.push(eval_term(alg, delta, term, &expected, denv)?);
        }
        table.push(cod.require(&env_label(&genv), "context extent")?);
    }
    FinMap::new(dom, cod, table)
}

/// Check strict substitution coherence: elaborating the substituted
/// expression equals composing the original table with the substitution's
/// table, as exact maps.
pub fn substitution_coherent(
    alg: &MLAlgebra,
    delta: &Context,
    gamma: &Context,
    sigma: &Substitution,
    ty: &TypeExpr,
) -> Result<bool> {
    let substituted = substitute_type(ty, sigma)?;
    let lhs = elaborate(alg, delta, &substituted)?;
    let rhs = compose(&elaborate(alg, gamma, ty)?, &substitution_table(alg, delta, gamma, sigma)?)?;
    Ok(lhs == rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg() -> MLAlgebra {
        MLAlgebra::nat(64).unwrap()
    }

    #[test]
    fn parse_basics() {
        assert_eq!(
            parse("Pi (x : Fin 3) . Fin 2").unwrap(),
            TypeExpr::Pi(
                "x".into(),
                Box::new(TypeExpr::Fin(Term::Num(3))),
                Box::new(TypeExpr::Fin(Term::Num(2)))
            )
        );
        assert_eq!(
            parse("Sigma (x : Fin 3) . Fin x").unwrap(),
            TypeExpr::Sigma(
                "x".into(),
                Box::new(TypeExpr::Fin(Term::Num(3))),
                Box::new(TypeExpr::Fin(Term::Var("x".into())))
            )
        );
        assert!(parse("Unit").is_ok());
        assert!(parse("Id (Fin 2) 0 1").is_ok());
        // the classifier argument may be an unparenthesized atom
        assert!(parse("Id Fin 2 0 1").is_ok());
        assert!(parse("Id (Fin 2) 0").is_err());
    }

    #[test]
    fn parse_error_positions() {
        match parse("Pi (x : Fin") {
            Err(Error::Parse { line, col, .. }) => {
                assert_eq!(line, 1);
                assert!(col >= 11, "col = {col}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(parse("Fin 3 extra"), Err(Error::Parse { .. })));
    }

    #[test]
    fn print_parse_round_trip() {
        let samples = [
            "Unit",
            "Fin 3",
            "Sigma (x : Fin 3) . Fin x",
            "Pi (x : Fin 2) . Sigma (y : Fin x) . Fin y",
            "Id (Fin 2) 0 1",
            "Id (Pi (x : Fin 2) . Fin 3) (lam x . 1) (lam x . 1)",
            "Id (Sigma (x : Fin 2) . Fin 3) (0, 2) (1, 0)",
        ];
        for s in samples {
            let e = parse(s).unwrap();
            let printed = e.to_string();
            assert_eq!(parse(&printed).unwrap(), e, "round trip of {printed}");
        }
    }

    #[test]
    fn golden_cardinalities() {
        let alg = alg();
        for (src, expected) in [
            ("Pi (x : Fin 3) . Fin 2", 8),
            ("Sigma (x : Fin 3) . Fin x", 3),
            ("Id (Fin 2) 0 1", 0),
            ("Id (Fin 2) 0 0", 1),
            ("Unit", 1),
            ("Pi (x : Fin 0) . Fin 7", 1),
            ("Sigma (x : Fin 2) . Pi (y : Fin x) . Fin 3", 4),
        ] {
            let e = parse(src).unwrap();
            assert_eq!(cardinality(&alg, &e).unwrap(), expected, "{src}");
        }
    }

    #[test]
    fn lambda_and_application_terms() {
        let alg = alg();
        // identity on Fin 2 is equal to itself
        for (src, expected) in [
            ("Id (Pi (x : Fin 2) . Fin 2) (lam x . x) (lam x . x)", 1),
            ("Id (Pi (x : Fin 2) . Fin 2) (lam x . x) (lam x . 0)", 0),
            ("Id (Sigma (x : Fin 2) . Fin 3) (0, 2) (0, 2)", 1),
            ("Id (Sigma (x : Fin 2) . Fin 3) (0, 2) (1, 0)", 0),
        ] {
            let e = parse(src).unwrap();
            assert_eq!(cardinality(&alg, &e).unwrap(), expected, "{src}");
        }
        // application of a context function variable
        let mut ctx = Context::empty();
        ctx.push("f", parse("Pi (x : Fin 2) . Fin 2").unwrap());
        let e = parse("Id (Fin 2) (f 0) (f 0)").unwrap();
        let m = elaborate(&alg, &ctx, &e).unwrap();
        for env in m.dom().clone().iter() {
            assert_eq!(m.apply(env).unwrap(), &Label::Nat(1));
        }
    }

    #[test]
    fn elaborate_tables_depend_on_env() {
        let alg = alg();
        let mut ctx = Context::empty();
        ctx.push("x", parse("Fin 3").unwrap());
        let e = parse("Fin x").unwrap();
        let m = elaborate(&alg, &ctx, &e).unwrap();
        assert_eq!(m.dom().len(), 3);
        for (i, env) in m.dom().clone().iter().enumerate() {
            assert_eq!(m.apply(env).unwrap(), &Label::Nat(i as u64));
        }
    }

    #[test]
    fn unbound_variable_rejected() {
        let alg = alg();
        let e = parse("Fin y").unwrap();
        assert!(matches!(
            elaborate(&alg, &Context::empty(), &e),
            Err(Error::Unbound(_))
        ));
    }

    #[test]
    fn id_term_type_mismatch_rejected() {
        let alg = alg();
        let e = parse("Id (Fin 2) 0 5").unwrap();
        assert!(matches!(
            cardinality(&alg, &e),
            Err(Error::TypeMismatch(_))
        ));
    }

    #[test]
    fn substitution_syntactic_cases() {
        // e[id] = e
        let e = parse("Sigma (y : Fin x) . Fin y").unwrap();
        let mut ctx = Context::empty();
        ctx.push("x", parse("Fin 3").unwrap());
        let id = Substitution::identity_for(&ctx);
        assert_eq!(substitute_type(&e, &id).unwrap(), e);

        // Fin x [x ↦ 2] = Fin 2
        let mut sigma = Substitution::default();
        sigma.set("x", Term::Num(2));
        assert_eq!(
            substitute_type(&parse("Fin x").unwrap(), &sigma).unwrap(),
            parse("Fin 2").unwrap()
        );

        // binder shadowing: substituting for a bound name leaves it alone
        let e = parse("Sigma (x : Fin 2) . Fin x").unwrap();
        let s = substitute_type(&e, &sigma).unwrap();
        assert_eq!(s, e);

        // capture avoidance: image mentions the binder name
        let e = parse("Sigma (y : Fin 2) . Fin x").unwrap();
        let mut sigma = Substitution::default();
        sigma.set("x", Term::Var("y".into()));
        let s = substitute_type(&e, &sigma).unwrap();
        match s {
            TypeExpr::Sigma(b, _, body) => {
                assert_ne!(b, "y");
                assert_eq!(*body, TypeExpr::Fin(Term::Var("y".into())));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn substitution_coherence_nested() {
        let alg = alg();
        // (Sigma (y : Fin x) . Fin y)[x ↦ 3] over the empty context
        let gamma = {
            let mut c = Context::empty();
            c.push("x", parse("Fin 4").unwrap());
            c
        };
        let delta = Context::empty();
        let mut sigma = Substitution::default();
        sigma.set("x", Term::Num(3));
        let e = parse("Sigma (y : Fin x) . Fin y").unwrap();
        assert!(substitution_coherent(&alg, &delta, &gamma, &sigma, &e).unwrap());
        let substituted = substitute_type(&e, &sigma).unwrap();
        assert_eq!(cardinality(&alg, &substituted).unwrap(), 3);
    }

    #[test]
    fn substitution_coherence_between_contexts() {
        let alg = alg();
        let gamma = {
            let mut c = Context::empty();
            c.push("x", parse("Fin 3").unwrap());
            c
        };
        let delta = {
            let mut c = Context::empty();
            c.push("z", parse("Fin 3").unwrap());
            c
        };
        let mut sigma = Substitution::default();
        sigma.set("x", Term::Var("z".into()));
        for src in [
            "Fin x",
            "Sigma (y : Fin x) . Fin y",
            "Pi (y : Fin x) . Fin 2",
            "Id (Fin 3) x x",
            "Id (Fin 3) x 1",
        ] {
            let e = parse(src).unwrap();
            assert!(
                substitution_coherent(&alg, &delta, &gamma, &sigma, &e).unwrap(),
                "{src}"
            );
        }
    }
}
