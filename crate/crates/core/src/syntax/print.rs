//! Canonical surface syntax. The output always parses back to an
//! α-equivalent term, given the same free-variable declarations.

use std::fmt;

use super::{Name, Term, Ty};

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_ty(f, self, 0, &[])
    }
}

/// Prints a type with every occurrence of an alias's base type written as
/// the alias, so `[]Nat -> Nat` under `A = Nat` reads `[]A -> A`. Aliases
/// bound to compound types, or sharing a base type, are ignored.
pub struct WithAliases<'a>(pub &'a Ty, pub &'a [(Name, Ty)]);

impl fmt::Display for WithAliases<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_ty(f, self.0, 0, self.1)
    }
}

// 0: arrow, 1: product, 2: prefix/atom
fn write_ty(f: &mut fmt::Formatter<'_>, t: &Ty, prec: u8, aliases: &[(Name, Ty)]) -> fmt::Result {
    if t.is_ground() {
        let mut it = aliases.iter().filter(|(_, a)| a == t);
        if let (Some((n, _)), None) = (it.next(), it.next()) {
            return f.write_str(n.as_str());
        }
    }
    let own = match t {
        Ty::Arrow(..) => 0,
        Ty::Prod(..) => 1,
        _ => 2,
    };
    if own < prec {
        f.write_str("(")?;
    }
    match t {
        Ty::Nat => f.write_str("Nat")?,
        Ty::Bool => f.write_str("Bool")?,
        Ty::File => f.write_str("File")?,
        Ty::Arrow(a, b) => {
            write_ty(f, a, 1, aliases)?;
            f.write_str(" -> ")?;
            write_ty(f, b, 0, aliases)?;
        }
        Ty::Prod(a, b) => {
            write_ty(f, a, 2, aliases)?;
            f.write_str(" * ")?;
            write_ty(f, b, 1, aliases)?;
        }
        Ty::Boxed(a) => {
            f.write_str("[]")?;
            write_ty(f, a, 2, aliases)?;
        }
    }
    if own < prec {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, Ctx::Top)
    }
}

#[derive(Clone, Copy)]
enum Ctx {
    /// Anything goes, including binder forms that extend to the right.
    Top,
    /// Function position of an application: binder forms need parentheses.
    Head,
    /// Argument position: only atoms.
    Arg,
}

fn is_binder_form(t: &Term) -> bool {
    matches!(
        t,
        Term::Lam(..) | Term::Boxed(_) | Term::LetBox(..) | Term::Fix(..) | Term::Cond(..)
    )
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, ctx: Ctx) -> fmt::Result {
    let needs_parens = match ctx {
        Ctx::Top => false,
        Ctx::Head => is_binder_form(t),
        Ctx::Arg => is_binder_form(t) || matches!(t, Term::App(..) | Term::Fst(_) | Term::Snd(_)),
    };
    if needs_parens {
        f.write_str("(")?;
    }
    match t {
        Term::Var(v) => write!(f, "{}", v.name)?,
        Term::Lam(x, ty, body) => {
            write!(f, "\\{x}:{ty}. ")?;
            write_term(f, body, Ctx::Top)?;
        }
        Term::App(a, b) => {
            write_term(f, a, Ctx::Head)?;
            f.write_str(" ")?;
            write_term(f, b, Ctx::Arg)?;
        }
        Term::Pair(a, b) => {
            f.write_str("(")?;
            write_term(f, a, Ctx::Top)?;
            f.write_str(", ")?;
            write_term(f, b, Ctx::Top)?;
            f.write_str(")")?;
        }
        Term::Fst(a) => {
            f.write_str("fst ")?;
            write_term(f, a, Ctx::Arg)?;
        }
        Term::Snd(a) => {
            f.write_str("snd ")?;
            write_term(f, a, Ctx::Arg)?;
        }
        Term::Boxed(a) => {
            f.write_str("box ")?;
            write_term(f, a, Ctx::Top)?;
        }
        Term::LetBox(u, m, n) => {
            write!(f, "let box {u} = ")?;
            write_term(f, m, Ctx::Top)?;
            f.write_str(" in ")?;
            write_term(f, n, Ctx::Top)?;
        }
        Term::Fix(z, body) => {
            write!(f, "fix {z}. ")?;
            write_term(f, body, Ctx::Top)?;
        }
        Term::Num(n) => write!(f, "{n}")?,
        Term::True => f.write_str("true")?,
        Term::False => f.write_str("false")?,
        Term::Succ => f.write_str("succ")?,
        Term::Pred => f.write_str("pred")?,
        Term::IsZero => f.write_str("zero?")?,
        Term::Cond(b, m, n) => {
            f.write_str("if ")?;
            write_term(f, b, Ctx::Top)?;
            f.write_str(" then ")?;
            write_term(f, m, Ctx::Top)?;
            f.write_str(" else ")?;
            write_term(f, n, Ctx::Top)?;
        }
        Term::Op(name) => write!(f, "~{name}")?,
        Term::Const(c) => write!(f, "@{}", c.name())?,
    }
    if needs_parens {
        f.write_str(")")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{alpha_eq, parse, parse_type};

    #[test]
    fn types_round_trip() {
        for s in ["[]Nat -> Nat", "([]Nat -> Nat) -> []Nat", "[](Nat -> Bool)", "[][]File"] {
            assert_eq!(parse_type(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn terms_round_trip() {
        for s in [
            r"\x:[]Nat. let box y = x in y",
            r"\x:[]Nat. let box y = x in box box y",
            r"fix z. (\x:[]Nat. let box y = x in y) z",
            r"f (box x) y",
            r"f x (\y:Nat. y)",
            r"(\y:Nat. y) 3",
            "if zero? 0 then 1 else 2",
            "~tick (box true)",
            "@out (@in f)",
        ] {
            let t = parse(s).unwrap();
            assert_eq!(t.to_string(), s);
            assert!(alpha_eq(&parse(&t.to_string()).unwrap(), &t));
        }
    }

    #[test]
    fn binder_in_head_position_is_parenthesised() {
        let t = parse(r"(box x) y").unwrap();
        assert_eq!(t.to_string(), "(box x) y");
        let t = parse(r"f (if true then 1 else 2) 3").unwrap();
        assert_eq!(t.to_string(), "f (if true then 1 else 2) 3");
    }
}
