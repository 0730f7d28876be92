//! Intensional operations: host functions on closed code exposed as
//! constants `~f : []A -> []B`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{normal_step, step_all};
use crate::syntax::{Name, Term, Ty};

/// Whether an operation waits for its argument to be closed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Safe,
    /// Fires on open code too. Only useful to exhibit non-confluence.
    Unsafe,
}

/// The shape of an operation's result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResultKind {
    /// `~f (box M) -> box f(M)`, typed `[]A -> []B`.
    Boxed,
    /// `~f (box M) -> f(M)`, typed `[]A -> B`; used for observers such as
    /// `done?` whose answer is a value rather than code.
    Bare,
}

/// Which positions of a conditional admit reduction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CondCongruence {
    #[default]
    All,
    ScrutineeOnly,
}

pub type OpFn = Arc<dyn Fn(&Term, &Registry) -> Option<Term> + Send + Sync>;

#[derive(Clone)]
pub struct IntensionalOp {
    pub name: Name,
    pub dom: Ty,
    pub cod: Ty,
    pub result: ResultKind,
    pub mode: Mode,
    /// The host function. Must respect α-equivalence of its argument.
    /// `None` leaves the application stuck.
    pub func: OpFn,
}

impl IntensionalOp {
    pub fn new(
        name: &str,
        dom: Ty,
        cod: Ty,
        result: ResultKind,
        func: impl Fn(&Term, &Registry) -> Option<Term> + Send + Sync + 'static,
    ) -> Self {
        IntensionalOp { name: Name::new(name), dom, cod, result, mode: Mode::Safe, func: Arc::new(func) }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    /// The type of the constant `~name`.
    pub fn ty(&self) -> Ty {
        let cod = match self.result {
            ResultKind::Boxed => Ty::boxed(self.cod.clone()),
            ResultKind::Bare => self.cod.clone(),
        };
        Ty::arrow(Ty::boxed(self.dom.clone()), cod)
    }
}

impl fmt::Debug for IntensionalOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "~{} : {} ({:?})", self.name, self.ty(), self.mode)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("an operation named `~{0}` is already registered")]
    DuplicateName(Name),
}

/// The operations in force plus the reduction options that go with them.
/// Immutable once built; `register` returns a new registry.
#[derive(Clone, Debug)]
pub struct Registry {
    ops: BTreeMap<Name, IntensionalOp>,
    pub cond_congruence: CondCongruence,
    /// Enables the demo infection routine for `@infect`.
    pub infect: bool,
}

impl Default for Registry {
    /// Safe mode with `~tick` and `~done?`.
    fn default() -> Self {
        Registry::empty().with_op(tick()).with_op(done())
    }
}

impl Registry {
    pub fn empty() -> Self {
        Registry { ops: BTreeMap::new(), cond_congruence: CondCongruence::All, infect: false }
    }

    pub fn register(&self, op: IntensionalOp) -> Result<Registry, RegistryError> {
        if self.ops.contains_key(&op.name) {
            return Err(RegistryError::DuplicateName(op.name));
        }
        let mut r = self.clone();
        r.ops.insert(op.name.clone(), op);
        Ok(r)
    }

    /// Like [`Registry::register`], replacing any previous operation of the same name.
    pub fn with_op(mut self, op: IntensionalOp) -> Registry {
        self.ops.insert(op.name.clone(), op);
        self
    }

    pub fn with_cond_congruence(mut self, c: CondCongruence) -> Registry {
        self.cond_congruence = c;
        self
    }

    pub fn with_infect(mut self, on: bool) -> Registry {
        self.infect = on;
        self
    }

    /// The default registry plus `~is-app` in the given mode.
    pub fn with_is_app(mode: Mode) -> Registry {
        Registry::default().with_op(is_app().with_mode(mode))
    }

    pub fn get(&self, name: &Name) -> Option<&IntensionalOp> {
        self.ops.get(name)
    }

    pub fn ops(&self) -> impl Iterator<Item = &IntensionalOp> {
        self.ops.values()
    }

    pub fn signatures(&self) -> impl Iterator<Item = (Name, Ty)> + '_ {
        self.ops.values().map(|o| (o.name.clone(), o.ty()))
    }

    pub fn is_safe(&self) -> bool {
        self.ops.values().all(|o| o.mode == Mode::Safe)
    }

    pub fn from_config(cfg: &RegistryConfig) -> Registry {
        let mut r = Registry::empty();
        if cfg.tick {
            r = r.with_op(tick());
        }
        if cfg.done {
            r = r.with_op(done());
        }
        if cfg.is_app || cfg.unsafe_mode {
            let mode = if cfg.unsafe_mode { Mode::Unsafe } else { Mode::Safe };
            r = r.with_op(is_app().with_mode(mode));
        }
        r.with_cond_congruence(cfg.cond_congruence).with_infect(cfg.infect)
    }
}

/// Registry settings as read from a configuration file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistryConfig {
    /// Turns on `~is-app` in unsafe mode.
    #[serde(rename = "unsafe")]
    pub unsafe_mode: bool,
    pub tick: bool,
    #[serde(rename = "done?", alias = "done")]
    pub done: bool,
    /// Turns on `~is-app` in safe mode.
    #[serde(rename = "is-app", alias = "is_app")]
    pub is_app: bool,
    pub infect: bool,
    #[serde(rename = "cond-congruence", alias = "cond_congruence")]
    pub cond_congruence: CondCongruence,
}

impl Default for RegistryConfig {
    fn default() -> Self {
        RegistryConfig {
            unsafe_mode: false,
            tick: true,
            done: true,
            is_app: false,
            infect: false,
            cond_congruence: CondCongruence::All,
        }
    }
}

/// `~tick : []Bool -> []Bool`, one normal-order step; the identity on
/// normal forms.
pub fn tick() -> IntensionalOp {
    IntensionalOp::new("tick", Ty::Bool, Ty::Bool, ResultKind::Boxed, |m, reg| {
        Some(normal_step(m, reg).map_or_else(|| m.clone(), |s| s.term))
    })
}

/// `~done? : []Bool -> Bool`, whether the code is a normal form.
pub fn done() -> IntensionalOp {
    IntensionalOp::new("done?", Ty::Bool, Ty::Bool, ResultKind::Bare, |m, reg| {
        Some(if step_all(m, reg).is_empty() { Term::True } else { Term::False })
    })
}

/// `~is-app : []Nat -> Bool`, whether the code is an application.
pub fn is_app() -> IntensionalOp {
    IntensionalOp::new("is-app", Ty::Nat, Ty::Bool, ResultKind::Bare, |m, _| {
        Some(if matches!(m, Term::App(..)) { Term::True } else { Term::False })
    })
}

/// The demo infection routine: `@infect (box V) F`, for closed `V` and a
/// closed normal file `F`. A file that is a program `@in (box G)` comes
/// back as `@in (box \f:File. V (G f))`; any other file is left alone.
pub fn infect(v: &Term, file: &Term) -> Term {
    use crate::syntax::Constant;
    if let Term::App(head, arg) = file {
        if let (Term::Const(Constant::In), Term::Boxed(g)) = (&**head, &**arg) {
            let f = Term::var("f");
            let body = Term::app(v.clone(), Term::app((**g).clone(), f));
            return Term::app(Term::Const(Constant::In), Term::boxed(Term::lam("f", Ty::File, body)));
        }
    }
    file.clone()
}
