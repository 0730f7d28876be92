//! Dual-context typecheckers.
//!
//! [`check_v1`] implements the original system, where `box` needs an empty
//! ordinary context and `fix z. M` checks `M` under `Δ; z:[]A`.
//! [`check_v2`] implements the refined system with the `int`/`ext`
//! judgement split: code under `box` and bodies of `fix` are checked at
//! `int`, an `int` λ-abstraction may not use its ambient contexts, and
//! `fix` bodies may only use the diagonal variable.
//!
//! `fix` carries no annotation, so the type of its diagonal variable is
//! found by first-order unification. Anything left undetermined defaults
//! to `Nat`.

pub mod admissible;

pub use admissible::{admissibility_suite, AdmissibilityReport, Failure, Rule};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::reduction::Registry;
use crate::syntax::{bfv, ufv, DualContext, Name, Ns, Path, Term, Ty, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Judgement {
    Int,
    Ext,
}

impl fmt::Display for Judgement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Judgement::Int => "int",
            Judgement::Ext => "ext",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    UnboundVariable,
    NamespaceViolation,
    Mismatch,
    NonEmptyOrdinaryContextUnderBox,
    LambdaInIntWithContext,
    FixTypeNotAllowed,
    FixContextViolation,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::UnboundVariable => "unbound-variable",
            ErrorKind::NamespaceViolation => "namespace-violation",
            ErrorKind::Mismatch => "mismatch",
            ErrorKind::NonEmptyOrdinaryContextUnderBox => "non-empty-ordinary-context-under-box",
            ErrorKind::LambdaInIntWithContext => "lambda-in-int-with-context",
            ErrorKind::FixTypeNotAllowed => "fix-type-not-allowed",
            ErrorKind::FixContextViolation => "fix-context-violation",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{kind} at {path}: {detail}")]
pub struct TypeError {
    pub kind: ErrorKind,
    pub path: Path,
    pub detail: String,
}

/// `A ∈ A_fix`, where `A_fix ::= Nat | Bool | []A -> A_fix`.
pub fn is_fix_type(a: &Ty) -> bool {
    match a {
        Ty::Nat | Ty::Bool => true,
        Ty::Arrow(d, c) => matches!(**d, Ty::Boxed(_)) && is_fix_type(c),
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Types with unification variables

#[derive(Clone, Debug, PartialEq)]
enum T {
    Meta(usize),
    Nat,
    Bool,
    File,
    Arrow(Box<T>, Box<T>),
    Prod(Box<T>, Box<T>),
    Boxed(Box<T>),
}

impl From<&Ty> for T {
    fn from(t: &Ty) -> T {
        match t {
            Ty::Nat => T::Nat,
            Ty::Bool => T::Bool,
            Ty::File => T::File,
            Ty::Arrow(a, b) => T::Arrow(Box::new(a.as_ref().into()), Box::new(b.as_ref().into())),
            Ty::Prod(a, b) => T::Prod(Box::new(a.as_ref().into()), Box::new(b.as_ref().into())),
            Ty::Boxed(a) => T::Boxed(Box::new(a.as_ref().into())),
        }
    }
}

#[derive(Default)]
struct Metas(Vec<Option<T>>);

impl Metas {
    fn fresh(&mut self) -> T {
        self.0.push(None);
        T::Meta(self.0.len() - 1)
    }

    fn shallow(&self, t: &T) -> T {
        let mut t = t.clone();
        while let T::Meta(i) = t {
            match &self.0[i] {
                Some(u) => t = u.clone(),
                None => break,
            }
        }
        t
    }

    fn occurs(&self, i: usize, t: &T) -> bool {
        match self.shallow(t) {
            T::Meta(j) => i == j,
            T::Arrow(a, b) | T::Prod(a, b) => self.occurs(i, &a) || self.occurs(i, &b),
            T::Boxed(a) => self.occurs(i, &a),
            _ => false,
        }
    }

    fn unify(&mut self, a: &T, b: &T) -> bool {
        let (a, b) = (self.shallow(a), self.shallow(b));
        match (&a, &b) {
            (T::Meta(i), T::Meta(j)) if i == j => true,
            (T::Meta(i), t) | (t, T::Meta(i)) => {
                if self.occurs(*i, t) {
                    return false;
                }
                self.0[*i] = Some(t.clone());
                true
            }
            (T::Arrow(a1, b1), T::Arrow(a2, b2)) | (T::Prod(a1, b1), T::Prod(a2, b2)) => {
                self.unify(a1, a2) && self.unify(b1, b2)
            }
            (T::Boxed(a1), T::Boxed(a2)) => self.unify(a1, a2),
            _ => a == b,
        }
    }

    /// Fully resolves a type, defaulting unconstrained metavariables to `Nat`.
    fn zonk(&self, t: &T) -> Ty {
        match self.shallow(t) {
            T::Meta(_) | T::Nat => Ty::Nat,
            T::Bool => Ty::Bool,
            T::File => Ty::File,
            T::Arrow(a, b) => Ty::arrow(self.zonk(&a), self.zonk(&b)),
            T::Prod(a, b) => Ty::prod(self.zonk(&a), self.zonk(&b)),
            T::Boxed(a) => Ty::boxed(self.zonk(&a)),
        }
    }

    /// Renders a type for diagnostics, showing undetermined parts as `?n`.
    fn show(&self, t: &T) -> String {
        match self.shallow(t) {
            T::Meta(i) => format!("?{i}"),
            T::Nat => "Nat".into(),
            T::Bool => "Bool".into(),
            T::File => "File".into(),
            T::Arrow(a, b) => format!("({} -> {})", self.show(&a), self.show(&b)),
            T::Prod(a, b) => format!("({} * {})", self.show(&a), self.show(&b)),
            T::Boxed(a) => format!("[]{}", self.show(&a)),
        }
    }
}

// ---------------------------------------------------------------------------
// Contexts

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mask {
    /// Premise of `box`: the ordinary context is emptied.
    Box,
    /// Premise of an `int` λ: both contexts are emptied.
    IntLam,
    /// Premise of `fix` in v2: both contexts are emptied.
    FixV2,
    /// Premise of `fix` in v1: the ordinary context is replaced.
    FixV1,
}

impl Mask {
    fn hides(self, ns: Ns) -> bool {
        match self {
            Mask::Box | Mask::FixV1 => ns == Ns::Ordinary,
            Mask::IntLam | Mask::FixV2 => true,
        }
    }

    fn kind(self) -> ErrorKind {
        match self {
            Mask::Box => ErrorKind::NonEmptyOrdinaryContextUnderBox,
            Mask::IntLam => ErrorKind::LambdaInIntWithContext,
            Mask::FixV1 | Mask::FixV2 => ErrorKind::FixContextViolation,
        }
    }
}

enum Entry {
    Bind(Var, T),
    Mask(Mask),
}

/// Which typing system a judgement is meant in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum System {
    V1,
    V2(Judgement),
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            System::V1 => f.write_str("v1"),
            System::V2(j) => write!(f, "v2/{j}"),
        }
    }
}

enum Deferred {
    Ground,
    Fix,
}

struct Run<'c> {
    checker: &'c Checker,
    metas: Metas,
    stack: Vec<Entry>,
    path: Vec<u8>,
    deferred: Vec<(Path, T, Deferred)>,
    afix: bool,
}

/// A typechecker over a fixed signature of intensional operations.
#[derive(Clone, Debug)]
pub struct Checker {
    ops: HashMap<Name, Ty>,
    afix: bool,
}

impl Default for Checker {
    fn default() -> Self {
        Checker::for_registry(&Registry::default())
    }
}

impl Checker {
    pub fn new() -> Self {
        Self::default()
    }

    /// A checker that knows the types of every operation in `registry`.
    pub fn for_registry(registry: &Registry) -> Self {
        Checker { ops: registry.signatures().collect(), afix: true }
    }

    /// Enables or disables the `A_fix` side condition of the v2 `fix` rule.
    pub fn with_afix(mut self, on: bool) -> Self {
        self.afix = on;
        self
    }

    /// Infers the type of `m` in `ctx` under `sys`.
    pub fn check(&self, sys: System, ctx: &DualContext, m: &Term) -> Result<Ty, TypeError> {
        match sys {
            System::V1 => self.check_v1(ctx, m),
            System::V2(j) => self.check_v2(ctx, j, m),
        }
    }

    /// Checks `m` against a known type. Unlike comparing the result of
    /// [`Checker::check`], this lets the expected type fix what `fix`
    /// binders would otherwise default.
    pub fn check_against(&self, sys: System, ctx: &DualContext, m: &Term, ty: &Ty) -> Result<(), TypeError> {
        self.run(ctx, m, sys, Some(ty)).map(|_| ())
    }

    pub fn check_v1(&self, ctx: &DualContext, m: &Term) -> Result<Ty, TypeError> {
        let ty = self.run(ctx, m, System::V1, None)?;
        if cfg!(debug_assertions) {
            assert_free_variable_containment(ctx, m);
        }
        Ok(ty)
    }

    pub fn check_v2(&self, ctx: &DualContext, j: Judgement, m: &Term) -> Result<Ty, TypeError> {
        self.run(ctx, m, System::V2(j), None)
    }

    fn run(&self, ctx: &DualContext, m: &Term, sys: System, expected: Option<&Ty>) -> Result<Ty, TypeError> {
        let mut run = Run {
            checker: self,
            metas: Metas::default(),
            stack: Vec::new(),
            path: Vec::new(),
            deferred: Vec::new(),
            afix: self.afix,
        };
        if let Err(e) = ctx.validate() {
            return Err(run.error(ErrorKind::NamespaceViolation, e.to_string()));
        }
        for (n, t) in &ctx.modal {
            run.stack.push(Entry::Bind(Var::modal(n.clone()), t.into()));
        }
        for (n, t) in &ctx.ordinary {
            run.stack.push(Entry::Bind(Var::ord(n.clone()), t.into()));
        }
        let t = run.infer(m, sys)?;
        if let Some(want) = expected {
            run.unify(&want.into(), &t, "term")?;
        }
        run.finish()?;
        Ok(run.metas.zonk(&t))
    }
}

/// `Δ; Γ ⊢ M : A` in the original system, with the default signature.
pub fn check_v1(ctx: &DualContext, m: &Term) -> Result<Ty, TypeError> {
    Checker::default().check_v1(ctx, m)
}

/// `Δ; Γ ⊢_j M : A` in the refined system, with the default signature
/// and the `A_fix` restriction enabled.
pub fn check_v2(ctx: &DualContext, j: Judgement, m: &Term) -> Result<Ty, TypeError> {
    Checker::default().check_v2(ctx, j, m)
}

/// Free variables of a term typed in `Δ; Γ` outside boxes come from `Γ ∪ Δ`,
/// those under boxes from `Δ` alone.
fn assert_free_variable_containment(ctx: &DualContext, m: &Term) {
    let in_modal = |v: &Var| v.ns == Ns::Modal && ctx.modal_vars().any(|n| *n == v.name);
    let in_ord = |v: &Var| v.ns == Ns::Ordinary && ctx.ordinary_vars().any(|n| *n == v.name);
    for v in ufv(m) {
        assert!(in_modal(&v) || in_ord(&v), "unboxed free variable {v:?} not in context");
    }
    for v in bfv(m) {
        assert!(in_modal(&v), "boxed free variable {v:?} not in the modal context");
    }
}

impl Run<'_> {
    fn error(&self, kind: ErrorKind, detail: impl Into<String>) -> TypeError {
        TypeError { kind, path: Path(self.path.clone()), detail: detail.into() }
    }

    fn at<R>(&mut self, i: u8, f: impl FnOnce(&mut Self) -> R) -> R {
        self.path.push(i);
        let r = f(self);
        self.path.pop();
        r
    }

    fn with<R>(&mut self, entries: Vec<Entry>, f: impl FnOnce(&mut Self) -> R) -> R {
        let n = entries.len();
        self.stack.extend(entries);
        let r = f(self);
        self.stack.truncate(self.stack.len() - n);
        r
    }

    fn lookup(&self, v: &Var) -> Result<T, TypeError> {
        let mut hidden_by: Option<Mask> = None;
        let mut other_ns_visible = false;
        for e in self.stack.iter().rev() {
            match e {
                Entry::Mask(m) => {
                    if hidden_by.is_none() && m.hides(v.ns) {
                        hidden_by = Some(*m);
                    }
                }
                Entry::Bind(w, t) if w.name == v.name => {
                    if w.ns == v.ns {
                        return match hidden_by {
                            None => Ok(t.clone()),
                            Some(m) => Err(self.error(
                                m.kind(),
                                format!("`{}` is not available here", v.name),
                            )),
                        };
                    }
                    if !other_ns_visible && !self.is_hidden_beyond(w) {
                        other_ns_visible = true;
                    }
                }
                Entry::Bind(..) => {}
            }
        }
        if other_ns_visible {
            return Err(self.error(
                ErrorKind::NamespaceViolation,
                format!("`{}` is bound in the other namespace", v.name),
            ));
        }
        Err(self.error(ErrorKind::UnboundVariable, format!("`{}` is not bound", v.name)))
    }

    /// Whether the innermost binding equal to `w` is hidden by a mask.
    fn is_hidden_beyond(&self, w: &Var) -> bool {
        let mut hidden = false;
        for e in self.stack.iter().rev() {
            match e {
                Entry::Mask(m) if m.hides(w.ns) => hidden = true,
                Entry::Bind(x, _) if x == w => return hidden,
                _ => {}
            }
        }
        hidden
    }

    /// Refuses a binder whose name is visible in the other namespace.
    fn check_binder(&self, v: &Var) -> Result<(), TypeError> {
        let other = Var { ns: other_ns(v.ns), name: v.name.clone() };
        let mut hidden = false;
        for e in self.stack.iter().rev() {
            match e {
                Entry::Mask(m) if m.hides(other.ns) => hidden = true,
                Entry::Bind(x, _) if *x == other => {
                    if hidden {
                        return Ok(());
                    }
                    return Err(self.error(
                        ErrorKind::NamespaceViolation,
                        format!("`{}` would be both a modal and an ordinary variable", v.name),
                    ));
                }
                Entry::Bind(x, _) if *x == *v => return Ok(()),
                _ => {}
            }
        }
        Ok(())
    }

    fn unify(&mut self, expected: &T, found: &T, what: &str) -> Result<(), TypeError> {
        if self.metas.unify(expected, found) {
            Ok(())
        } else {
            let detail = format!(
                "{what}: expected {}, found {}",
                self.metas.show(expected),
                self.metas.show(found)
            );
            Err(self.error(ErrorKind::Mismatch, detail))
        }
    }

    fn infer(&mut self, m: &Term, sys: System) -> Result<T, TypeError> {
        match m {
            Term::Var(v) => self.lookup(v),
            Term::Num(_) => Ok(T::Nat),
            Term::True | Term::False => Ok(T::Bool),
            Term::Succ | Term::Pred => Ok(T::Arrow(Box::new(T::Nat), Box::new(T::Nat))),
            Term::IsZero => Ok(T::Arrow(Box::new(T::Nat), Box::new(T::Bool))),
            Term::Const(c) => Ok((&c.ty()).into()),
            Term::Op(name) => match self.checker.ops.get(name) {
                Some(t) => Ok(t.into()),
                None => Err(self.error(
                    ErrorKind::UnboundVariable,
                    format!("no intensional operation `~{name}` is registered"),
                )),
            },
            Term::Lam(x, ty, body) => {
                let v = Var::ord(x.clone());
                let a: T = ty.into();
                match sys {
                    System::V1 | System::V2(Judgement::Ext) => {
                        self.check_binder(&v)?;
                        let b = self.with(vec![Entry::Bind(v, a.clone())], |r| {
                            r.at(0, |r| r.infer(body, sys))
                        })?;
                        Ok(T::Arrow(Box::new(a), Box::new(b)))
                    }
                    System::V2(Judgement::Int) => {
                        // the premise may be at either flavour; ext is the weaker demand
                        let entries = vec![Entry::Mask(Mask::IntLam), Entry::Bind(v, a.clone())];
                        let ext = System::V2(Judgement::Ext);
                        let b = self.with(entries, |r| r.at(0, |r| r.infer(body, ext)))?;
                        Ok(T::Arrow(Box::new(a), Box::new(b)))
                    }
                }
            }
            Term::App(f, a) => {
                let tf = self.at(0, |r| r.infer(f, sys))?;
                let ta = self.at(1, |r| r.infer(a, sys))?;
                match self.metas.shallow(&tf) {
                    T::Arrow(dom, cod) => {
                        self.at(1, |r| r.unify(&dom, &ta, "argument type"))?;
                        Ok(*cod)
                    }
                    T::Meta(_) => {
                        let cod = self.metas.fresh();
                        let want = T::Arrow(Box::new(ta), Box::new(cod.clone()));
                        self.at(0, |r| r.unify(&want, &tf, "function type"))?;
                        Ok(cod)
                    }
                    other => Err(self.at(0, |r| {
                        r.error(
                            ErrorKind::Mismatch,
                            format!("applied a non-function of type {}", r.metas.show(&other)),
                        )
                    })),
                }
            }
            Term::Pair(a, b) => {
                self.require_products()?;
                let ta = self.at(0, |r| r.infer(a, sys))?;
                let tb = self.at(1, |r| r.infer(b, sys))?;
                Ok(T::Prod(Box::new(ta), Box::new(tb)))
            }
            Term::Fst(p) | Term::Snd(p) => {
                self.require_products()?;
                let tp = self.at(0, |r| r.infer(p, sys))?;
                let (l, rt) = (self.metas.fresh(), self.metas.fresh());
                let want = T::Prod(Box::new(l.clone()), Box::new(rt.clone()));
                self.at(0, |r| r.unify(&want, &tp, "projection"))?;
                Ok(if matches!(m, Term::Fst(_)) { l } else { rt })
            }
            Term::Boxed(body) => {
                let inner = match sys {
                    System::V1 => System::V1,
                    System::V2(_) => System::V2(Judgement::Int),
                };
                let a = self.with(vec![Entry::Mask(Mask::Box)], |r| r.at(0, |r| r.infer(body, inner)))?;
                Ok(T::Boxed(Box::new(a)))
            }
            Term::LetBox(u, s, body) => {
                let ts = self.at(0, |r| r.infer(s, sys))?;
                let a = self.metas.fresh();
                self.at(0, |r| r.unify(&T::Boxed(Box::new(a.clone())), &ts, "let box scrutinee"))?;
                let v = Var::modal(u.clone());
                self.check_binder(&v)?;
                self.with(vec![Entry::Bind(v, a)], |r| r.at(1, |r| r.infer(body, sys)))
            }
            Term::Fix(z, body) => {
                let a = self.metas.fresh();
                let v = Var::ord(z.clone());
                let (mask, inner) = match sys {
                    System::V1 => (Mask::FixV1, System::V1),
                    System::V2(_) => (Mask::FixV2, System::V2(Judgement::Int)),
                };
                self.check_binder(&v)?;
                let entries = vec![Entry::Mask(mask), Entry::Bind(v, T::Boxed(Box::new(a.clone())))];
                let tb = self.with(entries, |r| r.at(0, |r| r.infer(body, inner)))?;
                self.at(0, |r| r.unify(&a, &tb, "fix body"))?;
                if matches!(sys, System::V2(_)) && self.afix {
                    self.deferred.push((Path(self.path.clone()), a.clone(), Deferred::Fix));
                }
                Ok(a)
            }
            Term::Cond(b, t, e) => {
                let tb = self.at(0, |r| r.infer(b, sys))?;
                self.at(0, |r| r.unify(&T::Bool, &tb, "condition"))?;
                let tt = self.at(1, |r| r.infer(t, sys))?;
                let te = self.at(2, |r| r.infer(e, sys))?;
                self.at(2, |r| r.unify(&tt, &te, "else branch"))?;
                self.deferred.push((Path(self.path.clone()), tt.clone(), Deferred::Ground));
                Ok(tt)
            }
        }
    }

    fn require_products(&self) -> Result<(), TypeError> {
        if cfg!(feature = "products") {
            Ok(())
        } else {
            Err(self.error(ErrorKind::Mismatch, "product types are disabled"))
        }
    }

    fn finish(&mut self) -> Result<(), TypeError> {
        for (path, t, what) in std::mem::take(&mut self.deferred) {
            let ty = self.metas.zonk(&t);
            let (ok, kind, detail) = match what {
                Deferred::Ground => (
                    ty.is_ground(),
                    ErrorKind::Mismatch,
                    format!("conditional at non-ground type {ty}"),
                ),
                Deferred::Fix => (
                    is_fix_type(&ty),
                    ErrorKind::FixTypeNotAllowed,
                    format!("fixed point at type {ty}, which is not generated by Nat | Bool | []A -> A_fix"),
                ),
            };
            if !ok {
                return Err(TypeError { kind, path, detail });
            }
        }
        Ok(())
    }
}

fn other_ns(ns: Ns) -> Ns {
    match ns {
        Ns::Ordinary => Ns::Modal,
        Ns::Modal => Ns::Ordinary,
    }
}
