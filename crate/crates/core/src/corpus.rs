//! The example programs shipped with the crate.

use crate::reduction::{Mode, Registry};
use crate::syntax::{ParseError, Source, Term, Ty};

#[derive(Clone, Copy, Debug)]
pub struct Entry {
    pub name: &'static str,
    pub text: &'static str,
    /// The v1 type at the file's own type bindings.
    pub ty: &'static str,
    /// Needs `~is-app` in unsafe mode.
    pub unsafe_ops: bool,
}

impl Entry {
    pub fn source(&self) -> Result<Source, ParseError> {
        Source::parse(self.text)
    }

    /// Parses with the type variable `A` bound to `a`.
    pub fn source_at(&self, a: &Ty) -> Result<Source, ParseError> {
        Source::parse_with_types(self.text, &[("A".into(), a.clone())])
    }

    pub fn term(&self) -> Term {
        self.source().expect("corpus entries parse").term
    }

    pub fn registry(&self) -> Registry {
        if self.unsafe_ops {
            Registry::with_is_app(Mode::Unsafe)
        } else {
            Registry::default()
        }
    }
}

macro_rules! entry {
    ($name:literal, $ty:literal) => {
        entry!($name, $ty, false)
    };
    ($name:literal, $ty:literal, $unsafe:literal) => {
        Entry { name: $name, text: include_str!(concat!("../corpus/", $name, ".ipcf")), ty: $ty, unsafe_ops: $unsafe }
    };
}

const ENTRIES: &[Entry] = &[
    entry!("ax_k", "[](Nat -> Nat) -> []Nat -> []Nat"),
    entry!("eval", "[]Nat -> Nat"),
    entry!("quote", "[]Nat -> [][]Nat"),
    entry!("omega", "Nat"),
    entry!("ylob", "[]([]Nat -> Nat) -> []Nat"),
    entry!("ypcf", "(Nat -> Nat) -> Nat"),
    entry!("por", "[]Bool -> []Bool -> Bool"),
    entry!("virus", "File -> File"),
    entry!("isapp", "Bool", true),
];

pub fn entries() -> &'static [Entry] {
    ENTRIES
}

pub fn get(name: &str) -> Option<&'static Entry> {
    ENTRIES.iter().find(|e| e.name == name)
}

fn at(name: &str, a: &Ty) -> Term {
    get(name).expect("known entry").source_at(a).expect("corpus entries parse").term
}

/// `eval_A : []A -> A`
pub fn eval(a: &Ty) -> Term {
    at("eval", a)
}

/// `quote_A : []A -> [][]A`
pub fn quote(a: &Ty) -> Term {
    at("quote", a)
}

/// `Ω_A : A`
pub fn omega(a: &Ty) -> Term {
    at("omega", a)
}

/// The intensional fixed point `[]([]A -> A) -> []A`.
pub fn y_lob(a: &Ty) -> Term {
    at("ylob", a)
}

/// The extensional fixed point `(A -> A) -> A`.
pub fn y_pcf(a: &Ty) -> Term {
    at("ypcf", a)
}

/// `por : []Bool -> []Bool -> Bool`
pub fn por() -> Term {
    get("por").expect("known entry").term()
}

pub fn virus() -> Term {
    get("virus").expect("known entry").term()
}
