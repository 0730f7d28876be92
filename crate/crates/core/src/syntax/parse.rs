//! Recursive-descent parser for the surface syntax.
//!
//! Besides terms, a source file may carry line pragmas:
//!
//! ```text
//! --type A = Bool          schematic type identifier
//! --modal u : Nat          free identifier read as a modal variable
//! --var x : Nat            free identifier read as an ordinary variable
//! --def eval = \x:[]A. let box y = x in y
//! ```
//!
//! Any other line starting with `--` is a comment. Unknown type identifiers
//! default to `Nat`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::{Constant, DualContext, Name, Ns, Term, Ty, Var};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: expected {}, found {}",
            self.line, self.col, self.expected, self.found
        )
    }
}

/// A parsed source file: the term plus whatever its pragmas declared.
#[derive(Clone, Debug)]
pub struct Source {
    pub term: Term,
    pub context: DualContext,
    pub types: Vec<(Name, Ty)>,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(u64),
    Backslash,
    Colon,
    Dot,
    Comma,
    LParen,
    RParen,
    Arrow,
    BoxTy,
    Star,
    Tilde,
    At,
    Eq,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Backslash => f.write_str("`\\`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::BoxTy => f.write_str("`[]`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Tilde => f.write_str("`~`"),
            Tok::At => f.write_str("`@`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "box", "let", "in", "fix", "if", "then", "else", "true", "false", "succ", "pred", "zero?",
    "fst", "snd", "Nat", "Bool", "File",
];

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '?')
}

#[derive(Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str, line0: usize) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (line, col) = (line0 + ln + 1, i + 1);
            let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line, col });
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '-' && chars.get(i + 1) == Some(&'-') {
                break;
            }
            if c == '-' && chars.get(i + 1) == Some(&'>') {
                push(&mut out, Tok::Arrow);
                i += 2;
                continue;
            }
            if c == '[' && chars.get(i + 1) == Some(&']') {
                push(&mut out, Tok::BoxTy);
                i += 2;
                continue;
            }
            let single = match c {
                '\\' | 'λ' => Some(Tok::Backslash),
                ':' => Some(Tok::Colon),
                '.' => Some(Tok::Dot),
                ',' => Some(Tok::Comma),
                '(' => Some(Tok::LParen),
                ')' => Some(Tok::RParen),
                '*' => Some(Tok::Star),
                '~' => Some(Tok::Tilde),
                '@' => Some(Tok::At),
                '=' => Some(Tok::Eq),
                _ => None,
            };
            if let Some(t) = single {
                push(&mut out, t);
                i += 1;
                continue;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let n = s.parse().map_err(|_| ParseError {
                    line,
                    col,
                    expected: "a numeral that fits in 64 bits".into(),
                    found: s.clone(),
                })?;
                push(&mut out, Tok::Num(n));
                continue;
            }
            if ident_start(c) {
                let start = i;
                while i < chars.len() {
                    let d = chars[i];
                    // `-` continues an identifier unless it starts `->` or `--`
                    let dash_ok = d == '-'
                        && i > start
                        && chars.get(i + 1).is_some_and(|&e| e.is_ascii_alphanumeric());
                    if ident_char(d) || dash_ok {
                        i += 1;
                    } else {
                        break;
                    }
                }
                push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
                continue;
            }
            return Err(ParseError {
                line,
                col,
                expected: "a token".into(),
                found: format!("`{c}`"),
            });
        }
    }
    let (line, col) = out.last().map_or((1, 1), |s| (s.line, s.col + 1));
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

#[derive(Default, Clone)]
struct Env {
    types: HashMap<String, Ty>,
    free: HashMap<String, Ns>,
    defs: HashMap<String, Term>,
}

struct Parser<'e> {
    toks: Vec<Spanned>,
    pos: usize,
    env: &'e Env,
    /// Binders in scope, innermost last.
    scope: Vec<(String, Ns)>,
}

type PResult<T> = Result<T, ParseError>;

impl<'e> Parser<'e> {
    fn new(toks: Vec<Spanned>, env: &'e Env) -> Self {
        Parser { toks, pos: 0, env, scope: Vec::new() }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        let s = &self.toks[self.pos];
        Err(ParseError {
            line: s.line,
            col: s.col,
            expected: expected.to_string(),
            found: s.tok.to_string(),
        })
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.error(&t.to_string())
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(&format!("`{kw}`"))
        }
    }

    fn binder(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.error("an identifier"),
        }
    }

    // Types ----------------------------------------------------------------

    fn ty(&mut self) -> PResult<Ty> {
        let a = self.ty_prod()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let b = self.ty()?;
            return Ok(Ty::arrow(a, b));
        }
        Ok(a)
    }

    fn ty_prod(&mut self) -> PResult<Ty> {
        let a = self.ty_prefix()?;
        if *self.peek() == Tok::Star {
            if !cfg!(feature = "products") {
                return self.error("a type (product types are disabled)");
            }
            self.bump();
            let b = self.ty_prod()?;
            return Ok(Ty::prod(a, b));
        }
        Ok(a)
    }

    fn ty_prefix(&mut self) -> PResult<Ty> {
        match self.peek().clone() {
            Tok::BoxTy => {
                self.bump();
                Ok(Ty::boxed(self.ty_prefix()?))
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(match s.as_str() {
                    "Nat" => Ty::Nat,
                    "Bool" => Ty::Bool,
                    "File" => Ty::File,
                    other => self.env.types.get(other).cloned().unwrap_or(Ty::Nat),
                })
            }
            _ => self.error("a type"),
        }
    }

    // Terms ----------------------------------------------------------------

    fn term(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Backslash => {
                self.bump();
                let x = self.binder()?;
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                self.expect(Tok::Dot)?;
                let body = self.scoped(&x, Ns::Ordinary, |p| p.term())?;
                Ok(Term::Lam(Name::from(x), ty, Arc::new(body)))
            }
            Tok::Ident(s) if s == "box" => {
                self.bump();
                Ok(Term::boxed(self.term()?))
            }
            Tok::Ident(s) if s == "let" => {
                self.bump();
                self.expect_kw("box")?;
                let u = self.binder()?;
                self.expect(Tok::Eq)?;
                let m = self.term()?;
                self.expect_kw("in")?;
                let n = self.scoped(&u, Ns::Modal, |p| p.term())?;
                Ok(Term::LetBox(Name::from(u), Arc::new(m), Arc::new(n)))
            }
            Tok::Ident(s) if s == "fix" => {
                self.bump();
                let z = self.binder()?;
                self.expect(Tok::Dot)?;
                let body = self.scoped(&z, Ns::Ordinary, |p| p.term())?;
                Ok(Term::Fix(Name::from(z), Arc::new(body)))
            }
            Tok::Ident(s) if s == "if" => {
                self.bump();
                let b = self.term()?;
                self.expect_kw("then")?;
                let m = self.term()?;
                self.expect_kw("else")?;
                let n = self.term()?;
                Ok(Term::cond(b, m, n))
            }
            _ => self.app_chain(),
        }
    }

    fn scoped<T>(&mut self, x: &str, ns: Ns, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        self.scope.push((x.to_string(), ns));
        let r = f(self);
        self.scope.pop();
        r
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => !matches!(
                s.as_str(),
                "in" | "then" | "else" | "let" | "box" | "fix" | "if"
            ),
            Tok::Num(_) | Tok::LParen | Tok::Tilde | Tok::At => true,
            _ => false,
        }
    }

    fn app_chain(&mut self) -> PResult<Term> {
        let mut t = self.atom()?;
        loop {
            if self.starts_atom() {
                let a = self.atom()?;
                t = Term::app(t, a);
            } else if matches!(self.peek(), Tok::Backslash)
                || self.is_kw("box")
                || self.is_kw("let")
                || self.is_kw("fix")
                || self.is_kw("if")
            {
                // a trailing binder form extends as far right as possible
                let a = self.term()?;
                return Ok(Term::app(t, a));
            } else {
                return Ok(t);
            }
        }
    }

    fn atom(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Term::Num(n))
            }
            Tok::Tilde => {
                self.bump();
                match self.bump() {
                    Tok::Ident(s) => Ok(Term::Op(Name::from(s))),
                    _ => {
                        self.pos -= 1;
                        self.error("an operation name after `~`")
                    }
                }
            }
            Tok::At => {
                self.bump();
                match self.peek().clone() {
                    Tok::Ident(s) if Constant::from_name(&s).is_some() => {
                        self.bump();
                        Ok(Term::Const(Constant::from_name(&s).unwrap()))
                    }
                    _ => self.error("`in`, `out` or `infect` after `@`"),
                }
            }
            Tok::LParen => {
                self.bump();
                let a = self.term()?;
                if *self.peek() == Tok::Comma {
                    if !cfg!(feature = "products") {
                        return self.error("`)` (pairs are disabled)");
                    }
                    self.bump();
                    let b = self.term()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Term::pair(a, b));
                }
                self.expect(Tok::RParen)?;
                Ok(a)
            }
            Tok::Ident(s) => {
                let t = match s.as_str() {
                    "true" => Term::True,
                    "false" => Term::False,
                    "succ" => Term::Succ,
                    "pred" => Term::Pred,
                    "zero?" => Term::IsZero,
                    "fst" | "snd" => return self.projection(&s),
                    kw if KEYWORDS.contains(&kw) => return self.error("a term"),
                    _ => self.resolve(&s),
                };
                self.bump();
                Ok(t)
            }
            _ => self.error("a term"),
        }
    }

    fn projection(&mut self, which: &str) -> PResult<Term> {
        if !cfg!(feature = "products") {
            return self.error("a term (projections are disabled)");
        }
        self.bump();
        if !self.starts_atom() {
            return self.error("an argument to the projection");
        }
        let a = Arc::new(self.atom()?);
        Ok(if which == "fst" { Term::Fst(a) } else { Term::Snd(a) })
    }

    fn resolve(&self, s: &str) -> Term {
        if let Some((_, ns)) = self.scope.iter().rev().find(|(n, _)| n == s) {
            return Term::Var(Var { ns: *ns, name: Name::new(s) });
        }
        if let Some(d) = self.env.defs.get(s) {
            return d.clone();
        }
        let ns = self.env.free.get(s).copied().unwrap_or(Ns::Ordinary);
        Term::Var(Var { ns, name: Name::new(s) })
    }
}

fn parse_with(src: &str, line0: usize, env: &Env, ctx: Option<&DualContext>) -> PResult<Term> {
    let toks = lex(src, line0)?;
    let mut env = env.clone();
    if let Some(ctx) = ctx {
        for n in ctx.modal_vars() {
            env.free.insert(n.to_string(), Ns::Modal);
        }
        for n in ctx.ordinary_vars() {
            env.free.insert(n.to_string(), Ns::Ordinary);
        }
    }
    let mut p = Parser::new(toks, &env);
    let t = p.term()?;
    if *p.peek() != Tok::Eof {
        return p.error("end of input");
    }
    Ok(t)
}

/// Parses a single term. Free identifiers are ordinary variables.
pub fn parse(src: &str) -> Result<Term, ParseError> {
    Ok(Source::parse(src)?.term)
}

/// Parses a term whose free identifiers are resolved against `ctx`.
pub fn parse_in(src: &str, ctx: &DualContext) -> Result<Term, ParseError> {
    parse_with(src, 0, &Env::default(), Some(ctx))
}

pub fn parse_type(src: &str) -> Result<Ty, ParseError> {
    let env = Env::default();
    let mut p = Parser::new(lex(src, 0)?, &env);
    let t = p.ty()?;
    if *p.peek() != Tok::Eof {
        return p.error("end of input");
    }
    Ok(t)
}

fn pragma_error(line: usize, expected: &str, found: &str) -> ParseError {
    ParseError { line, col: 1, expected: expected.into(), found: found.into() }
}

impl Source {
    /// Parses a whole file, pragmas included.
    pub fn parse(src: &str) -> Result<Source, ParseError> {
        Self::parse_with_types(src, &[])
    }

    /// Like [`Source::parse`], with extra `--type` bindings that take
    /// precedence over the file's own.
    pub fn parse_with_types(src: &str, overrides: &[(Name, Ty)]) -> Result<Source, ParseError> {
        let mut env = Env::default();
        for (n, t) in overrides {
            env.types.insert(n.to_string(), t.clone());
        }
        let mut context = DualContext::default();
        let mut types = Vec::new();
        let mut body = String::new();
        let mut body_start = None;
        for (ln, line) in src.lines().enumerate() {
            let trimmed = line.trim_start();
            let Some(rest) = trimmed.strip_prefix("--") else {
                if body_start.is_none() && !trimmed.is_empty() {
                    body_start = Some(ln);
                }
                if body_start.is_some() {
                    body.push_str(line);
                }
                body.push('\n');
                continue;
            };
            body.push('\n');
            let rest = rest.trim_start();
            let (kw, arg) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            let lineno = ln + 1;
            match kw {
                "type" => {
                    let (name, ty) = arg
                        .split_once('=')
                        .ok_or_else(|| pragma_error(lineno, "`--type A = T`", arg))?;
                    let name = name.trim().to_string();
                    let ty = Parser::new(lex(ty, ln)?, &env).ty()?;
                    types.push((Name::from(name.as_str()), ty.clone()));
                    if !overrides.iter().any(|(n, _)| n.as_str() == name) {
                        env.types.insert(name, ty);
                    }
                }
                "modal" | "var" => {
                    let (name, ty) = arg
                        .split_once(':')
                        .ok_or_else(|| pragma_error(lineno, "`--modal x : T`", arg))?;
                    let name = name.trim();
                    let ty = Parser::new(lex(ty, ln)?, &env).ty()?;
                    let (ns, list) = if kw == "modal" {
                        (Ns::Modal, &mut context.modal)
                    } else {
                        (Ns::Ordinary, &mut context.ordinary)
                    };
                    list.push((Name::new(name), ty));
                    env.free.insert(name.to_string(), ns);
                }
                "def" => {
                    let (name, def) = arg
                        .split_once('=')
                        .ok_or_else(|| pragma_error(lineno, "`--def name = term`", arg))?;
                    let t = parse_with(def, ln, &env, None)?;
                    env.defs.insert(name.trim().to_string(), t);
                }
                _ => {}
            }
        }
        let term = parse_with(&body, 0, &env, None)?;
        for (n, t) in overrides {
            if let Some(slot) = types.iter_mut().find(|(m, _)| m == n) {
                slot.1 = t.clone();
            } else {
                types.push((n.clone(), t.clone()));
            }
        }
        Ok(Source { term, context, types })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda() {
        assert_eq!(parse(r"\x:Bool. x").unwrap(), Term::lam("x", Ty::Bool, Term::var("x")));
    }

    #[test]
    fn let_box_binds_modal() {
        assert_eq!(
            parse("let box u = box true in u").unwrap(),
            Term::let_box("u", Term::boxed(Term::True), Term::mvar("u"))
        );
    }

    #[test]
    fn application_is_left_associative() {
        let t = parse("f a b").unwrap();
        assert_eq!(t, Term::apps(Term::var("f"), [Term::var("a"), Term::var("b")]));
    }

    #[test]
    fn types_and_precedence() {
        assert_eq!(
            parse_type("[]Nat -> Nat -> Bool").unwrap(),
            Ty::arrow(Ty::boxed(Ty::Nat), Ty::arrow(Ty::Nat, Ty::Bool))
        );
        assert_eq!(
            parse_type("[](Nat -> Nat)").unwrap(),
            Ty::boxed(Ty::arrow(Ty::Nat, Ty::Nat))
        );
    }

    #[cfg(feature = "products")]
    #[test]
    fn products() {
        assert_eq!(parse_type("Nat * Bool -> Nat").unwrap(), Ty::arrow(Ty::prod(Ty::Nat, Ty::Bool), Ty::Nat));
        assert_eq!(
            parse("fst (1, true)").unwrap(),
            Term::Fst(Arc::new(Term::pair(Term::Num(1), Term::True)))
        );
    }

    #[test]
    fn identifiers_with_punctuation() {
        assert_eq!(parse("~done? x").unwrap(), Term::app(Term::op("done?"), Term::var("x")));
        assert_eq!(parse("~is-app x").unwrap(), Term::app(Term::op("is-app"), Term::var("x")));
        assert_eq!(parse("x->y").unwrap_err().expected, "end of input");
    }

    #[test]
    fn pragmas() {
        let src = "-- a comment\n--type A = Bool\n--modal u : A\n--def id = \\x:A. x\nid u\n";
        let s = Source::parse(src).unwrap();
        assert_eq!(s.context.modal, vec![(Name::new("u"), Ty::Bool)]);
        assert_eq!(s.term, Term::app(Term::lam("x", Ty::Bool, Term::var("x")), Term::mvar("u")));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("let box u = true u").unwrap_err();
        assert_eq!((e.line, e.col), (1, 19));
        assert_eq!(e.expected, "`in`");
        let e = parse("let box u = true\n  u").unwrap_err();
        assert_eq!((e.line, e.col), (2, 4));
        let e = parse(r"\x Nat. x").unwrap_err();
        assert_eq!(e.expected, "`:`");
    }

    #[test]
    fn binders_shadow_definitions() {
        let s = Source::parse("--def f = true\n\\f:Nat. f").unwrap();
        assert_eq!(s.term, Term::lam("f", Ty::Nat, Term::var("f")));
    }
}
