//! The closed S/K term algebra as a partial combinatory algebra.
//!
//! Application is weak head reduction with `K x y => x` and
//! `S x y z => x z (y z)`, run under a step budget; running out of budget
//! stands in for divergence. On top of that: bracket abstraction (`λ*`),
//! Curry's encodings of booleans, pairs and numerals, s-m-n, the Kleene and
//! Rogers fixed-point constructions, and a dovetailing least-fixed-point
//! search.

pub mod encode;
pub mod gen;
pub mod recursion;
pub mod syntax;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

pub use encode::*;
pub use recursion::*;

/// Steps granted to one evaluation unless stated otherwise.
pub const DEFAULT_FUEL: usize = 10_000;

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum PcaTerm {
    S,
    K,
    /// Only meaningful while building a term with [`lambda_star`].
    Var(Arc<str>),
    App(Arc<PcaTerm>, Arc<PcaTerm>),
    /// An inert constant; applications headed by it never reduce.
    Opaque(Arc<str>),
}

use PcaTerm::{App, Opaque, Var, K, S};

impl PcaTerm {
    pub fn var(x: &str) -> PcaTerm {
        Var(x.into())
    }

    pub fn opaque(tag: &str) -> PcaTerm {
        Opaque(tag.into())
    }

    pub fn app(self, b: PcaTerm) -> PcaTerm {
        App(Arc::new(self), Arc::new(b))
    }

    /// `self · a1 · a2 · ...`
    pub fn apps(self, args: impl IntoIterator<Item = PcaTerm>) -> PcaTerm {
        args.into_iter().fold(self, PcaTerm::app)
    }

    pub fn size(&self) -> usize {
        match self {
            App(a, b) => 1 + a.size() + b.size(),
            _ => 1,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Var(x) => {
                out.insert(x.clone());
            }
            App(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            _ => {}
        }
    }

    pub fn is_closed(&self) -> bool {
        match self {
            Var(_) => false,
            App(a, b) => a.is_closed() && b.is_closed(),
            _ => true,
        }
    }

    fn mentions(&self, x: &str) -> bool {
        match self {
            Var(y) => &**y == x,
            App(a, b) => a.mentions(x) || b.mentions(x),
            _ => false,
        }
    }

    /// `self[a/x]`. There are no binders, so this is plain replacement.
    pub fn subst(&self, x: &str, a: &PcaTerm) -> PcaTerm {
        match self {
            Var(y) if &**y == x => a.clone(),
            App(f, b) if self.mentions(x) => f.subst(x, a).app(b.subst(x, a)),
            _ => self.clone(),
        }
    }

    /// Head and arguments of the application spine.
    pub fn spine(&self) -> (&PcaTerm, Vec<&PcaTerm>) {
        let mut args = Vec::new();
        let mut t = self;
        while let App(f, a) = t {
            args.push(&**a);
            t = f;
        }
        args.reverse();
        (t, args)
    }

    /// Weak normal form: `S`, `S a`, `S a b`, `K`, `K a`, or headed by a
    /// variable or an opaque constant with weak normal arguments.
    pub fn is_weak_normal(&self) -> bool {
        let (head, args) = self.spine();
        match head {
            S => args.len() < 3,
            K => args.len() < 2,
            _ => args.iter().all(|a| a.is_weak_normal()),
        }
    }
}

impl fmt::Display for PcaTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            S => f.write_str("S"),
            K => f.write_str("K"),
            Var(x) => f.write_str(x),
            Opaque(t) => write!(f, "'{t}"),
            App(a, b) => {
                write!(f, "{a} ")?;
                if matches!(**b, App(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

impl fmt::Debug for PcaTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The result of a fueled evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalOutcome {
    /// A weak normal form, reached after `steps` reductions.
    Value { term: PcaTerm, steps: usize },
    /// The budget ran out.
    Diverged { fuel_spent: usize },
}

impl EvalOutcome {
    pub fn value(&self) -> Option<&PcaTerm> {
        match self {
            EvalOutcome::Value { term, .. } => Some(term),
            EvalOutcome::Diverged { .. } => None,
        }
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, EvalOutcome::Diverged { .. })
    }

    /// Value-equality of outcomes: both values and syntactically equal, or both diverged.
    pub fn agrees_with(&self, other: &EvalOutcome) -> bool {
        match (self, other) {
            (EvalOutcome::Value { term: a, .. }, EvalOutcome::Value { term: b, .. }) => a == b,
            (EvalOutcome::Diverged { .. }, EvalOutcome::Diverged { .. }) => true,
            _ => false,
        }
    }
}

impl fmt::Display for EvalOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalOutcome::Value { term, steps } => write!(f, "{term}   ({steps} steps)"),
            EvalOutcome::Diverged { fuel_spent } => write!(f, "diverged (fuel {fuel_spent} spent)"),
        }
    }
}

/// One leftmost-outermost step, or `None` at a weak normal form. Arguments
/// of `S` and `K` are left alone; arguments of an inert head are evaluated
/// left to right. This is the reference small-step semantics; [`eval`]
/// computes the same values with sharing.
pub fn step(t: &PcaTerm) -> Option<PcaTerm> {
    let (head, args) = t.spine();
    let (contractum, used) = match (head, args.as_slice()) {
        (K, [x, _y, ..]) => ((*x).clone(), 2),
        (S, [x, y, z, ..]) => {
            let z = (*z).clone();
            (((*x).clone().app(z.clone())).app((*y).clone().app(z)), 3)
        }
        (S | K, _) => return None,
        _ => {
            let i = args.iter().position(|a| !a.is_weak_normal())?;
            let a = step(args[i])?;
            let rebuilt = args.iter().enumerate().map(|(j, b)| if j == i { a.clone() } else { (*b).clone() });
            return Some(head.clone().apps(rebuilt));
        }
    };
    Some(contractum.apps(args[used..].iter().map(|a| (*a).clone())))
}

/// Iterates [`step`] at most `fuel` times.
pub fn eval_small_step(t: &PcaTerm, fuel: usize) -> EvalOutcome {
    let mut cur = t.clone();
    for steps in 0..=fuel {
        match step(&cur) {
            None => return EvalOutcome::Value { term: cur, steps },
            Some(next) if steps < fuel => cur = next,
            Some(_) => break,
        }
    }
    EvalOutcome::Diverged { fuel_spent: fuel }
}

#[derive(Debug)]
struct OutOfFuel;

/// Call-by-need evaluation to weak normal form. A subterm duplicated by the
/// `S` rule is one shared node, and its value is remembered, so each
/// contraction is paid for once. Fuel counts contractions.
pub struct Evaluator {
    memo: HashMap<*const PcaTerm, (Arc<PcaTerm>, PcaTerm)>,
    left: usize,
    spent: usize,
}

impl Evaluator {
    pub fn new(fuel: usize) -> Self {
        Evaluator { memo: HashMap::new(), left: fuel, spent: 0 }
    }

    /// Contractions performed so far.
    pub fn spent(&self) -> usize {
        self.spent
    }

    pub fn eval(&mut self, t: &PcaTerm) -> Option<PcaTerm> {
        self.whnf(&Arc::new(t.clone())).ok()
    }

    fn tick(&mut self) -> Result<(), OutOfFuel> {
        self.left = self.left.checked_sub(1).ok_or(OutOfFuel)?;
        self.spent += 1;
        Ok(())
    }

    fn whnf(&mut self, t: &Arc<PcaTerm>) -> Result<PcaTerm, OutOfFuel> {
        let App(f, a) = &**t else {
            return Ok((**t).clone());
        };
        let key = Arc::as_ptr(t);
        if let Some((_, v)) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let fv = grow(|| self.whnf(f))?;
        let v = self.apply(fv, a)?;
        self.memo.insert(key, (t.clone(), v.clone()));
        Ok(v)
    }

    /// `v a` for a value `v`.
    fn apply(&mut self, mut v: PcaTerm, a: &Arc<PcaTerm>) -> Result<PcaTerm, OutOfFuel> {
        let mut a = a.clone();
        loop {
            let (head, args) = arg_nodes(&v);
            match (head, args.as_slice()) {
                (K, [x]) => {
                    self.tick()?;
                    return grow(|| self.whnf(x));
                }
                (S, [x, y]) => {
                    self.tick()?;
                    let xa = Arc::new(App(x.clone(), a.clone()));
                    let ya = Arc::new(App(y.clone(), a));
                    v = grow(|| self.whnf(&xa))?;
                    a = ya;
                }
                (S | K, _) => return Ok(App(Arc::new(v), a)),
                _ => {
                    let av = grow(|| self.whnf(&a))?;
                    return Ok(v.app(av));
                }
            }
        }
    }
}

fn grow<R>(f: impl FnOnce() -> R) -> R {
    stacker::maybe_grow(64 * 1024, 1024 * 1024, f)
}

/// Head and argument nodes of a spine.
fn arg_nodes(t: &PcaTerm) -> (PcaTerm, Vec<Arc<PcaTerm>>) {
    let mut args = Vec::new();
    let mut t = t;
    while let App(f, a) = t {
        args.push(a.clone());
        t = f;
    }
    args.reverse();
    (t.clone(), args)
}

/// Equality of values as trees: evaluate both sides to weak normal form,
/// compare heads and argument counts, then compare arguments the same way,
/// down to `depth` levels. Exact on finite data such as numerals. `None`
/// when the budget runs out before a difference or the depth bound.
pub fn equiv(a: &PcaTerm, b: &PcaTerm, depth: usize, fuel: usize) -> Option<bool> {
    let mut ev = Evaluator::new(fuel);
    let mut work = vec![(Arc::new(a.clone()), Arc::new(b.clone()), depth)];
    while let Some((a, b, d)) = work.pop() {
        if Arc::ptr_eq(&a, &b) {
            continue;
        }
        let va = ev.whnf(&a).ok()?;
        let vb = ev.whnf(&b).ok()?;
        let (ha, xs) = arg_nodes(&va);
        let (hb, ys) = arg_nodes(&vb);
        if ha != hb || xs.len() != ys.len() {
            return Some(false);
        }
        if d > 0 {
            work.extend(xs.into_iter().zip(ys).rev().map(|(x, y)| (x, y, d - 1)));
        }
    }
    Some(true)
}

/// Evaluates to weak normal form within `fuel` contractions.
pub fn eval(t: &PcaTerm, fuel: usize) -> EvalOutcome {
    let mut ev = Evaluator::new(fuel);
    match ev.eval(t) {
        Some(term) => EvalOutcome::Value { term, steps: ev.spent() },
        None => EvalOutcome::Diverged { fuel_spent: fuel },
    }
}

/// `a · b`
pub fn pca_apply(a: &PcaTerm, b: &PcaTerm, fuel: usize) -> EvalOutcome {
    eval(&a.clone().app(b.clone()), fuel)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PcaError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("not a numeral")]
    NotANumeral,
    #[error("diverged: fuel {0} exhausted")]
    Diverged(usize),
}

/// `λ*x. e` by the three bracket-abstraction clauses.
pub fn lambda_star(x: &str, e: &PcaTerm) -> PcaTerm {
    if !e.mentions(x) {
        return K.app(e.clone());
    }
    match e {
        Var(_) => identity(),
        App(s, t) => S.app(lambda_star(x, s)).app(lambda_star(x, t)),
        _ => unreachable!("only variables and applications mention a variable"),
    }
}

/// `λ*x. e`, checking that `e` mentions nothing outside `x` and `scope`.
pub fn lambda_star_in(scope: &[&str], x: &str, e: &PcaTerm) -> Result<PcaTerm, PcaError> {
    for v in e.free_vars() {
        if &*v != x && !scope.contains(&&*v) {
            return Err(PcaError::UnboundVariable(v.to_string()));
        }
    }
    Ok(lambda_star(x, e))
}

/// `λ*x1. ... λ*xn. e`
pub fn lambda_stars(xs: &[&str], e: &PcaTerm) -> PcaTerm {
    xs.iter().rev().fold(e.clone(), |body, x| lambda_star(x, &body))
}

/// `I = S K K`
pub fn identity() -> PcaTerm {
    S.app(K).app(K)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(t: &str) -> PcaTerm {
        PcaTerm::opaque(t)
    }

    #[test]
    fn k_and_s() {
        let a = o("a");
        assert_eq!(pca_apply(&K.app(a.clone()), &o("b"), 10).value(), Some(&a));
        assert_eq!(pca_apply(&identity(), &a, 10).value(), Some(&a));
        let t = S.apps([o("x"), o("y"), o("z")]);
        assert_eq!(eval(&t, 10).value().unwrap().to_string(), "'x 'z ('y 'z)");
    }

    #[test]
    fn partial_applications_are_values() {
        for t in [S, K, S.app(K), S.app(K).app(K), K.app(S), o("a").app(S.app(K).app(K))] {
            assert!(t.is_weak_normal());
            assert_eq!(eval(&t, 0).value(), Some(&t));
        }
    }

    #[test]
    fn omega_runs_out_of_fuel() {
        let w = S.app(identity()).app(identity());
        let omega = w.clone().app(w);
        assert_eq!(eval(&omega, 500), EvalOutcome::Diverged { fuel_spent: 500 });
        assert_eq!(eval_small_step(&omega, 500), EvalOutcome::Diverged { fuel_spent: 500 });
    }

    #[test]
    fn bracket_abstraction_clauses() {
        assert_eq!(lambda_star("x", &PcaTerm::var("x")), identity());
        assert_eq!(lambda_star("x", &K), K.app(K));
        let xx = PcaTerm::var("x").app(PcaTerm::var("x"));
        assert_eq!(lambda_star("x", &xx), S.app(identity()).app(identity()));
        let w = o("w");
        assert_eq!(pca_apply(&lambda_star("x", &xx), &w, 20).value(), Some(&w.clone().app(w)));
    }

    #[test]
    fn stray_variables_are_reported() {
        let e = PcaTerm::var("x").app(PcaTerm::var("y"));
        assert_eq!(lambda_star_in(&[], "x", &e), Err(PcaError::UnboundVariable("y".into())));
        assert!(lambda_star_in(&["y"], "x", &e).is_ok());
    }
}
