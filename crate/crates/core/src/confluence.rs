//! Parallel reduction, complete developments, and executable versions of
//! the triangle and diamond properties.
//!
//! Parallel reduction `M => N` is generated by
//!
//! * `refl`: `M => M`;
//! * congruence for λ, application, pairs, projections, `let box` (both
//!   positions) and conditionals (per [`CondCongruence`]); none for `box`
//!   or `fix`;
//! * `beta`: `(\x:A. M) N => M'[N'/x]` for `M => M'`, `N => N'`;
//! * `box-beta`: `let box u = box R in S => S'[R/u]` for `S => S'`;
//! * `box-fix`: `fix z. M => M'[box (fix z. M)/z]` for `M => M'`;
//! * `cond-true`/`cond-false`: `if true then M else N => M'`, and dually;
//! * `out-in`, `fst`, `snd` with the contractum reduced in parallel;
//! * contractions of closed redexes (`box-int`, δ on numerals, `infect`).

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::reduction::{root_steps, step_all, CondCongruence, Registry, Rule};
use crate::syntax::{
    all_names_of, alpha_eq, bfv, canonical, fresh_name, fv, subst, AlphaSet, Constant, Name, Ns, Term, Ty, Var,
};

/// A derivation tree for one parallel step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Derivation {
    Refl(Term),
    Lam(Name, Ty, Box<Derivation>),
    App(Box<Derivation>, Box<Derivation>),
    Pair(Box<Derivation>, Box<Derivation>),
    Fst(Box<Derivation>),
    Snd(Box<Derivation>),
    LetBox(Name, Box<Derivation>, Box<Derivation>),
    Cond(Box<Derivation>, Box<Derivation>, Box<Derivation>),
    /// `(\x:A. body) arg => body'[arg'/x]`
    Beta { x: Name, ty: Ty, body: Box<Derivation>, arg: Box<Derivation> },
    /// `let box u = box code in body => body'[code/u]`
    BoxBeta { u: Name, code: Term, body: Box<Derivation> },
    /// `fix z. body => body'[box (fix z. body)/z]`
    BoxFix { z: Name, body: Box<Derivation> },
    /// `if true then M else other => M'`
    CondTrue { then: Box<Derivation>, other: Term },
    /// `if false then other else N => N'`
    CondFalse { other: Term, els: Box<Derivation> },
    /// `@out (@in M) => M'`
    OutIn(Box<Derivation>),
    /// `fst (M, other) => M'`
    FstPair(Box<Derivation>, Term),
    /// `snd (other, N) => N'`
    SndPair(Term, Box<Derivation>),
    /// A root contraction of a closed redex, checked by recomputing the step.
    Contract { source: Term, target: Term, rule: Rule },
}

use Derivation as D;

fn bx(d: Derivation) -> Box<Derivation> {
    Box::new(d)
}

impl Derivation {
    pub fn source(&self) -> Term {
        match self {
            D::Refl(m) => m.clone(),
            D::Lam(x, ty, b) => Term::Lam(x.clone(), ty.clone(), Arc::new(b.source())),
            D::App(a, b) => Term::app(a.source(), b.source()),
            D::Pair(a, b) => Term::pair(a.source(), b.source()),
            D::Fst(a) => Term::Fst(Arc::new(a.source())),
            D::Snd(a) => Term::Snd(Arc::new(a.source())),
            D::LetBox(u, s, b) => Term::LetBox(u.clone(), Arc::new(s.source()), Arc::new(b.source())),
            D::Cond(a, b, c) => Term::cond(a.source(), b.source(), c.source()),
            D::Beta { x, ty, body, arg } => {
                Term::app(Term::Lam(x.clone(), ty.clone(), Arc::new(body.source())), arg.source())
            }
            D::BoxBeta { u, code, body } => {
                Term::LetBox(u.clone(), Arc::new(Term::boxed(code.clone())), Arc::new(body.source()))
            }
            D::BoxFix { z, body } => Term::Fix(z.clone(), Arc::new(body.source())),
            D::CondTrue { then, other } => Term::cond(Term::True, then.source(), other.clone()),
            D::CondFalse { other, els } => Term::cond(Term::False, other.clone(), els.source()),
            D::OutIn(d) => Term::app(Term::Const(Constant::Out), Term::app(Term::Const(Constant::In), d.source())),
            D::FstPair(d, other) => Term::Fst(Arc::new(Term::pair(d.source(), other.clone()))),
            D::SndPair(other, d) => Term::Snd(Arc::new(Term::pair(other.clone(), d.source()))),
            D::Contract { source, .. } => source.clone(),
        }
    }

    pub fn target(&self) -> Term {
        match self {
            D::Refl(m) => m.clone(),
            D::Lam(x, ty, b) => Term::Lam(x.clone(), ty.clone(), Arc::new(b.target())),
            D::App(a, b) => Term::app(a.target(), b.target()),
            D::Pair(a, b) => Term::pair(a.target(), b.target()),
            D::Fst(a) => Term::Fst(Arc::new(a.target())),
            D::Snd(a) => Term::Snd(Arc::new(a.target())),
            D::LetBox(u, s, b) => Term::LetBox(u.clone(), Arc::new(s.target()), Arc::new(b.target())),
            D::Cond(a, b, c) => Term::cond(a.target(), b.target(), c.target()),
            D::Beta { x, body, arg, .. } => subst(&body.target(), &arg.target(), &Var::ord(x.clone())),
            D::BoxBeta { u, code, body } => subst(&body.target(), code, &Var::modal(u.clone())),
            D::BoxFix { z, body } => {
                let me = Term::boxed(Term::Fix(z.clone(), Arc::new(body.source())));
                subst(&body.target(), &me, &Var::ord(z.clone()))
            }
            D::CondTrue { then, .. } => then.target(),
            D::CondFalse { els, .. } => els.target(),
            D::OutIn(d) | D::FstPair(d, _) | D::SndPair(_, d) => d.target(),
            D::Contract { target, .. } => target.clone(),
        }
    }

    pub fn is_refl(&self) -> bool {
        matches!(self, D::Refl(_))
    }

    /// The name of the rule at the root of the tree.
    pub fn rule_name(&self) -> &'static str {
        match self {
            D::Refl(_) => "refl",
            D::Lam(..) => "cong-lam",
            D::App(..) => "cong-app",
            D::Pair(..) => "cong-pair",
            D::Fst(_) => "cong-fst",
            D::Snd(_) => "cong-snd",
            D::LetBox(..) => "cong-let-box",
            D::Cond(..) => "cong-if",
            D::Beta { .. } => "beta",
            D::BoxBeta { .. } => "box-beta",
            D::BoxFix { .. } => "box-fix",
            D::CondTrue { .. } => "cond-true",
            D::CondFalse { .. } => "cond-false",
            D::OutIn(_) => "out-in",
            D::FstPair(..) => "fst",
            D::SndPair(..) => "snd",
            D::Contract { rule, .. } => rule.name(),
        }
    }

    /// Checks that every node is an instance of a rule in force under `reg`.
    pub fn validate(&self, reg: &Registry) -> bool {
        match self {
            D::Refl(_) => true,
            D::Lam(_, _, b) | D::Fst(b) | D::Snd(b) | D::OutIn(b) | D::FstPair(b, _) | D::SndPair(_, b) => {
                b.validate(reg)
            }
            D::App(a, b) | D::Pair(a, b) | D::LetBox(_, a, b) => a.validate(reg) && b.validate(reg),
            D::Beta { body, arg, .. } => body.validate(reg) && arg.validate(reg),
            D::Cond(a, b, c) => {
                let branches_ok = reg.cond_congruence == CondCongruence::All || (b.is_refl() && c.is_refl());
                branches_ok && a.validate(reg) && b.validate(reg) && c.validate(reg)
            }
            D::BoxBeta { body, .. } | D::BoxFix { body, .. } => body.validate(reg),
            D::CondTrue { then, .. } => then.validate(reg),
            D::CondFalse { els, .. } => els.validate(reg),
            D::Contract { source, target, rule } => {
                matches!(rule, Rule::BoxInt | Rule::Succ | Rule::Pred | Rule::IsZero | Rule::Infect)
                    && (source.is_closed() || !reg.is_safe())
                    && root_steps(source, reg).iter().any(|(t, r)| r == rule && alpha_eq(t, target))
            }
        }
    }

    pub fn size(&self) -> usize {
        1 + match self {
            D::Refl(_) | D::Contract { .. } => 0,
            D::Lam(_, _, b) | D::Fst(b) | D::Snd(b) | D::OutIn(b) | D::FstPair(b, _) | D::SndPair(_, b) => b.size(),
            D::App(a, b) | D::Pair(a, b) | D::LetBox(_, a, b) => a.size() + b.size(),
            D::Beta { body, arg, .. } => body.size() + arg.size(),
            D::Cond(a, b, c) => a.size() + b.size() + c.size(),
            D::BoxBeta { body, .. } | D::BoxFix { body, .. } => body.size(),
            D::CondTrue { then, .. } => then.size(),
            D::CondFalse { els, .. } => els.size(),
        }
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}  =>  {}  [{}]", self.source(), self.target(), self.rule_name())
    }
}

/// `source => target` with a derivation that can be checked independently.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParStepWitness {
    pub source: Term,
    pub target: Term,
    pub derivation: Derivation,
}

impl ParStepWitness {
    pub fn new(derivation: Derivation) -> Self {
        ParStepWitness { source: derivation.source(), target: derivation.target(), derivation }
    }

    pub fn validate(&self, reg: &Registry) -> bool {
        alpha_eq(&self.derivation.source(), &self.source)
            && alpha_eq(&self.derivation.target(), &self.target)
            && self.derivation.validate(reg)
    }
}

// ---------------------------------------------------------------------------
// Enumeration

/// Enumerates parallel reducts with one derivation per α-class of target.
/// Memoized per subterm.
pub struct ParEnumerator<'r> {
    reg: &'r Registry,
    memo: HashMap<Term, Arc<Vec<Derivation>>>,
}

impl<'r> ParEnumerator<'r> {
    pub fn new(reg: &'r Registry) -> Self {
        ParEnumerator { reg, memo: HashMap::new() }
    }

    pub fn derivations(&mut self, m: &Term) -> Arc<Vec<Derivation>> {
        if let Some(v) = self.memo.get(m) {
            return v.clone();
        }
        let v = Arc::new(dedup(self.compute(m)));
        self.memo.insert(m.clone(), v.clone());
        v
    }

    fn compute(&mut self, m: &Term) -> Vec<Derivation> {
        let mut out = vec![D::Refl(m.clone())];
        // congruences
        match m {
            Term::Lam(x, ty, b) => {
                for d in self.derivations(b).iter().filter(|d| !d.is_refl()) {
                    out.push(D::Lam(x.clone(), ty.clone(), bx(d.clone())));
                }
            }
            Term::App(a, b) => {
                let (da, db) = (self.derivations(a), self.derivations(b));
                for x in da.iter() {
                    for y in db.iter() {
                        if !(x.is_refl() && y.is_refl()) {
                            out.push(D::App(bx(x.clone()), bx(y.clone())));
                        }
                    }
                }
            }
            Term::Pair(a, b) => {
                let (da, db) = (self.derivations(a), self.derivations(b));
                for x in da.iter() {
                    for y in db.iter() {
                        if !(x.is_refl() && y.is_refl()) {
                            out.push(D::Pair(bx(x.clone()), bx(y.clone())));
                        }
                    }
                }
            }
            Term::Fst(a) => {
                for d in self.derivations(a).iter().filter(|d| !d.is_refl()) {
                    out.push(D::Fst(bx(d.clone())));
                }
            }
            Term::Snd(a) => {
                for d in self.derivations(a).iter().filter(|d| !d.is_refl()) {
                    out.push(D::Snd(bx(d.clone())));
                }
            }
            Term::LetBox(u, s, b) => {
                let (ds, db) = (self.derivations(s), self.derivations(b));
                for x in ds.iter() {
                    for y in db.iter() {
                        if !(x.is_refl() && y.is_refl()) {
                            out.push(D::LetBox(u.clone(), bx(x.clone()), bx(y.clone())));
                        }
                    }
                }
            }
            Term::Cond(a, b, c) => {
                let da = self.derivations(a);
                let (db, dc) = match self.reg.cond_congruence {
                    CondCongruence::All => (self.derivations(b), self.derivations(c)),
                    CondCongruence::ScrutineeOnly => {
                        (Arc::new(vec![D::Refl((**b).clone())]), Arc::new(vec![D::Refl((**c).clone())]))
                    }
                };
                for x in da.iter() {
                    for y in db.iter() {
                        for z in dc.iter() {
                            if !(x.is_refl() && y.is_refl() && z.is_refl()) {
                                out.push(D::Cond(bx(x.clone()), bx(y.clone()), bx(z.clone())));
                            }
                        }
                    }
                }
            }
            _ => {}
        }
        // root rules
        match m {
            Term::App(f, a) => {
                if let Term::Lam(x, ty, body) = &**f {
                    let (db, da) = (self.derivations(body), self.derivations(a));
                    for p in db.iter() {
                        for q in da.iter() {
                            out.push(D::Beta { x: x.clone(), ty: ty.clone(), body: bx(p.clone()), arg: bx(q.clone()) });
                        }
                    }
                }
                if let (Term::Const(Constant::Out), Term::App(g, inner)) = (&**f, &**a) {
                    if **g == Term::Const(Constant::In) {
                        for d in self.derivations(inner).iter() {
                            out.push(D::OutIn(bx(d.clone())));
                        }
                    }
                }
            }
            Term::LetBox(u, s, body) => {
                if let Term::Boxed(code) = &**s {
                    for d in self.derivations(body).iter() {
                        out.push(D::BoxBeta { u: u.clone(), code: (**code).clone(), body: bx(d.clone()) });
                    }
                }
            }
            Term::Fix(z, body) => {
                for d in self.derivations(body).iter() {
                    out.push(D::BoxFix { z: z.clone(), body: bx(d.clone()) });
                }
            }
            Term::Cond(b, t, e) => match &**b {
                Term::True => {
                    for d in self.derivations(t).iter() {
                        out.push(D::CondTrue { then: bx(d.clone()), other: (**e).clone() });
                    }
                }
                Term::False => {
                    for d in self.derivations(e).iter() {
                        out.push(D::CondFalse { other: (**t).clone(), els: bx(d.clone()) });
                    }
                }
                _ => {}
            },
            Term::Fst(p) => {
                if let Term::Pair(a, b) = &**p {
                    for d in self.derivations(a).iter() {
                        out.push(D::FstPair(bx(d.clone()), (**b).clone()));
                    }
                }
            }
            Term::Snd(p) => {
                if let Term::Pair(a, b) = &**p {
                    for d in self.derivations(b).iter() {
                        out.push(D::SndPair((**a).clone(), bx(d.clone())));
                    }
                }
            }
            _ => {}
        }
        out.extend(contractions(m, self.reg));
        out
    }
}

/// Root contractions of closed redexes (δ, □int, infect).
fn contractions(m: &Term, reg: &Registry) -> Vec<Derivation> {
    root_steps(m, reg)
        .into_iter()
        .filter(|(_, r)| matches!(r, Rule::BoxInt | Rule::Succ | Rule::Pred | Rule::IsZero | Rule::Infect))
        .map(|(target, rule)| D::Contract { source: m.clone(), target, rule })
        .collect()
}

fn dedup(ds: Vec<Derivation>) -> Vec<Derivation> {
    let mut seen = std::collections::HashSet::new();
    ds.into_iter().filter(|d| seen.insert(canonical(&d.target()))).collect()
}

/// One derivation for each parallel reduct of `m`, reflexivity first.
pub fn par_derivations(m: &Term, reg: &Registry) -> Vec<Derivation> {
    let mut e = ParEnumerator::new(reg);
    e.derivations(m).as_ref().clone()
}

/// All `N` with `m => N`, one representative per α-class.
pub fn par_reducts(m: &Term, reg: &Registry) -> Vec<Term> {
    par_derivations(m, reg).into_iter().map(|d| d.target()).collect()
}

// ---------------------------------------------------------------------------
// Complete development

/// `M*`: contracts every redex of `m` that is visible at once.
pub fn complete_development(m: &Term, reg: &Registry) -> Term {
    let star = |t: &Term| complete_development(t, reg);
    match m {
        Term::Var(_) | Term::Num(_) | Term::True | Term::False | Term::Succ | Term::Pred | Term::IsZero => m.clone(),
        Term::Op(_) | Term::Const(_) => m.clone(),
        Term::Lam(x, ty, b) => Term::Lam(x.clone(), ty.clone(), Arc::new(star(b))),
        Term::App(f, a) => {
            if let (Term::Op(name), Term::Boxed(code)) = (&**f, &**a) {
                if code.is_closed() {
                    if let Some(t) = crate::reduction::fire_op(name, code, reg) {
                        return t;
                    }
                }
            }
            if let Term::Lam(x, _, body) = &**f {
                return subst(&star(body), &star(a), &Var::ord(x.clone()));
            }
            for (t, rule) in root_steps(m, reg) {
                match rule {
                    Rule::Succ | Rule::Pred | Rule::IsZero | Rule::Infect => return t,
                    _ => {}
                }
            }
            if let (Term::Const(Constant::Out), Term::App(g, inner)) = (&**f, &**a) {
                if **g == Term::Const(Constant::In) {
                    return star(inner);
                }
            }
            Term::app(star(f), star(a))
        }
        Term::Cond(b, t, e) => match &**b {
            Term::True => star(t),
            Term::False => star(e),
            _ => match reg.cond_congruence {
                CondCongruence::All => Term::cond(star(b), star(t), star(e)),
                CondCongruence::ScrutineeOnly => Term::Cond(Arc::new(star(b)), t.clone(), e.clone()),
            },
        },
        Term::Pair(a, b) => Term::pair(star(a), star(b)),
        Term::Fst(p) => match &**p {
            Term::Pair(a, _) => star(a),
            _ => Term::Fst(Arc::new(star(p))),
        },
        Term::Snd(p) => match &**p {
            Term::Pair(_, b) => star(b),
            _ => Term::Snd(Arc::new(star(p))),
        },
        Term::Boxed(_) => m.clone(),
        Term::LetBox(u, s, body) => match &**s {
            Term::Boxed(code) => subst(&star(body), code, &Var::modal(u.clone())),
            _ => Term::LetBox(u.clone(), Arc::new(star(s)), Arc::new(star(body))),
        },
        Term::Fix(z, body) => subst(&star(body), &Term::boxed(m.clone()), &Var::ord(z.clone())),
    }
}

// ---------------------------------------------------------------------------
// Deciding `P => T`

/// Searches for a derivation of `p => t`: congruences are followed
/// structurally, root rules by enumerating the reducts of their premises.
pub fn par_to(p: &Term, t: &Term, reg: &Registry) -> Option<Derivation> {
    let (p, t) = (canonical(p), canonical(t));
    let mut e = ParEnumerator::new(reg);
    search(&p, &t, reg, &mut e)
}

fn search(p: &Term, t: &Term, reg: &Registry, e: &mut ParEnumerator) -> Option<Derivation> {
    if alpha_eq(p, t) {
        return Some(D::Refl(p.clone()));
    }
    // congruences; binder names agree because both sides are canonical
    let cong = match (p, t) {
        (Term::Lam(x, a, b), Term::Lam(y, a2, b2)) if x == y && a == a2 => {
            search(b, b2, reg, e).map(|d| D::Lam(x.clone(), a.clone(), bx(d)))
        }
        (Term::App(a, b), Term::App(a2, b2)) => {
            two(search(a, a2, reg, e), || search(b, b2, reg, e)).map(|(x, y)| D::App(bx(x), bx(y)))
        }
        (Term::Pair(a, b), Term::Pair(a2, b2)) => {
            two(search(a, a2, reg, e), || search(b, b2, reg, e)).map(|(x, y)| D::Pair(bx(x), bx(y)))
        }
        (Term::Fst(a), Term::Fst(a2)) => search(a, a2, reg, e).map(|d| D::Fst(bx(d))),
        (Term::Snd(a), Term::Snd(a2)) => search(a, a2, reg, e).map(|d| D::Snd(bx(d))),
        (Term::LetBox(u, s, b), Term::LetBox(u2, s2, b2)) if u == u2 => {
            two(search(s, s2, reg, e), || search(b, b2, reg, e)).map(|(x, y)| D::LetBox(u.clone(), bx(x), bx(y)))
        }
        (Term::Cond(a, b, c), Term::Cond(a2, b2, c2)) => {
            let branch = |x: &Term, y: &Term, e: &mut ParEnumerator| match reg.cond_congruence {
                CondCongruence::All => search(x, y, reg, e),
                CondCongruence::ScrutineeOnly => alpha_eq(x, y).then(|| D::Refl(x.clone())),
            };
            match (search(a, a2, reg, e), branch(b, b2, e), branch(c, c2, e)) {
                (Some(x), Some(y), Some(z)) => Some(D::Cond(bx(x), bx(y), bx(z))),
                _ => None,
            }
        }
        _ => None,
    };
    if cong.is_some() {
        return cong;
    }
    let hit = |d: &Derivation| alpha_eq(&d.target(), t);
    match p {
        Term::Cond(b, th, el) => match &**b {
            Term::True => search(th, t, reg, e).map(|d| D::CondTrue { then: bx(d), other: (**el).clone() }),
            Term::False => search(el, t, reg, e).map(|d| D::CondFalse { other: (**th).clone(), els: bx(d) }),
            _ => None,
        },
        Term::Fst(q) => match &**q {
            Term::Pair(a, b) => search(a, t, reg, e).map(|d| D::FstPair(bx(d), (**b).clone())),
            _ => None,
        },
        Term::Snd(q) => match &**q {
            Term::Pair(a, b) => search(b, t, reg, e).map(|d| D::SndPair((**a).clone(), bx(d))),
            _ => None,
        },
        Term::App(f, a) => {
            if let (Term::Const(Constant::Out), Term::App(g, inner)) = (&**f, &**a) {
                if **g == Term::Const(Constant::In) {
                    if let Some(d) = search(inner, t, reg, e) {
                        return Some(D::OutIn(bx(d)));
                    }
                }
            }
            if let Term::Lam(x, ty, body) = &**f {
                let (db, da) = (e.derivations(body), e.derivations(a));
                for p1 in db.iter() {
                    for q1 in da.iter() {
                        let d = D::Beta { x: x.clone(), ty: ty.clone(), body: bx(p1.clone()), arg: bx(q1.clone()) };
                        if hit(&d) {
                            return Some(d);
                        }
                    }
                }
            }
            contractions(p, reg).into_iter().find(hit)
        }
        Term::LetBox(u, s, body) => {
            let Term::Boxed(code) = &**s else { return None };
            e.derivations(body)
                .iter()
                .map(|d| D::BoxBeta { u: u.clone(), code: (**code).clone(), body: bx(d.clone()) })
                .find(hit)
        }
        Term::Fix(z, body) => {
            e.derivations(body).iter().map(|d| D::BoxFix { z: z.clone(), body: bx(d.clone()) }).find(hit)
        }
        _ => None,
    }
}

fn two<A, B>(a: Option<A>, b: impl FnOnce() -> Option<B>) -> Option<(A, B)> {
    let a = a?;
    Some((a, b()?))
}

// ---------------------------------------------------------------------------
// Triangle and diamond

#[derive(Clone, Debug)]
pub struct TriangleReport {
    pub term: Term,
    pub star: Term,
    /// Whether `M => M*` was found.
    pub reaches_star: bool,
    /// Number of parallel reducts examined.
    pub reducts: usize,
    /// Parallel reducts `P` for which `P => M*` fails.
    pub violations: Vec<Term>,
}

impl TriangleReport {
    pub fn passed(&self) -> bool {
        self.reaches_star && self.violations.is_empty()
    }
}

impl fmt::Display for TriangleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "term:     {}", self.term)?;
        writeln!(f, "M*:       {}", self.star)?;
        writeln!(f, "M => M*:  {}", if self.reaches_star { "yes" } else { "NO" })?;
        write!(f, "reducts:  {}, violations: {}", self.reducts, self.violations.len())?;
        for v in &self.violations {
            write!(f, "\n  {v}  =/=>  {}", self.star)?;
        }
        Ok(())
    }
}

pub fn triangle_check(m: &Term, reg: &Registry) -> TriangleReport {
    let star = complete_development(m, reg);
    let reaches_star = par_to(m, &star, reg).is_some();
    let reducts = par_reducts(m, reg);
    let violations: Vec<Term> = reducts.iter().filter(|p| par_to(p, &star, reg).is_none()).cloned().collect();
    TriangleReport { term: m.clone(), star, reaches_star, reducts: reducts.len(), violations }
}

/// The relation used by [`joinable_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// One-step reduction.
    Step,
    /// Parallel reduction.
    Parallel,
}

fn reach(m: &Term, depth: usize, rel: Relation, reg: &Registry) -> AlphaSet {
    match rel {
        Relation::Step => crate::reduction::reachable(m, depth, reg),
        Relation::Parallel => {
            let mut set = AlphaSet::new();
            set.insert(m.clone());
            let mut frontier = vec![m.clone()];
            for _ in 0..depth {
                let mut next = Vec::new();
                for t in &frontier {
                    for r in par_reducts(t, reg) {
                        if set.insert(r.clone()) {
                            next.push(r);
                        }
                    }
                }
                frontier = next;
            }
            set
        }
    }
}

/// A common reduct of `p` and `q` within `depth` one-step reductions from
/// each side.
pub fn joinable(p: &Term, q: &Term, depth: usize, reg: &Registry) -> Option<Term> {
    joinable_with(p, q, depth, Relation::Step, reg)
}

pub fn joinable_with(p: &Term, q: &Term, depth: usize, rel: Relation, reg: &Registry) -> Option<Term> {
    let rp = reach(p, depth, rel, reg);
    let rq = reach(q, depth, rel, reg);
    let found = rp.iter().find(|t| rq.contains(t)).cloned();
    found
}

/// A pair of one-step reducts of `m` with no common reduct within `depth`.
#[derive(Clone, Debug)]
pub struct Peak {
    pub source: Term,
    pub left: Term,
    pub right: Term,
}

/// Checks every pair of one-step reducts of `m` for joinability.
pub fn local_confluence(m: &Term, depth: usize, reg: &Registry) -> Result<usize, Peak> {
    let mut reducts = AlphaSet::new();
    for s in step_all(m, reg) {
        reducts.insert(s.term);
    }
    let rs = reducts.into_vec();
    let mut pairs = 0;
    for i in 0..rs.len() {
        for j in i + 1..rs.len() {
            pairs += 1;
            if joinable(&rs[i], &rs[j], depth, reg).is_none() {
                return Err(Peak { source: m.clone(), left: rs[i].clone(), right: rs[j].clone() });
            }
        }
    }
    Ok(pairs)
}

// ---------------------------------------------------------------------------
// Substitution lemmas by witness replay

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LiftError {
    #[error("`{0}` occurs inside a box or fix body, where only reflexivity can be substituted")]
    FrozenOccurrence(Var),
    #[error("no congruence for conditional branches under the scrutinee-only reading")]
    CondBranch,
    #[error("the contraction `{0}` does not survive substitution")]
    Contraction(Term),
}

/// Given `d : M => N` and `e : P => Q`, builds `M[P/x] => N[Q/x]`.
///
/// With `e` reflexive this is the substitution lemma for any variable,
/// modal ones included. Otherwise `x` must not occur free under a box or
/// `fix` in `M`, i.e. `x` not in `bfv(M)` for ordinary `x`.
pub fn lift(d: &Derivation, x: &Var, e: &Derivation, reg: &Registry) -> Result<Derivation, LiftError> {
    let mut avoid = all_names_of(&e.source());
    all_names_into(&e.target(), &mut avoid);
    Lift { x, e, p: e.source(), q: e.target(), avoid, reg }.go(d)
}

fn all_names_into(t: &Term, into: &mut std::collections::BTreeSet<Name>) {
    into.extend(all_names_of(t));
}

struct Lift<'a> {
    x: &'a Var,
    e: &'a Derivation,
    p: Term,
    q: Term,
    avoid: std::collections::BTreeSet<Name>,
    reg: &'a Registry,
}

impl Lift<'_> {
    /// Substitution into a position that is copied verbatim to both sides.
    fn frozen(&self, t: &Term) -> Result<Term, LiftError> {
        if !fv(t).contains(self.x) {
            return Ok(t.clone());
        }
        if !self.e.is_refl() && !alpha_eq(&self.p, &self.q) {
            return Err(LiftError::FrozenOccurrence(self.x.clone()));
        }
        Ok(subst(t, &self.p, self.x))
    }

    /// Handles a binder `y` over derivation `body`: returns the (possibly
    /// renamed) binder and the lifted body, or `None` if `y` shadows `x`.
    fn binder(&self, y: &Name, ns: Ns, body: &Derivation) -> Result<(Name, Derivation), LiftError> {
        let yv = Var { ns, name: y.clone() };
        if &yv == self.x {
            return Ok((y.clone(), body.clone()));
        }
        if self.avoid.contains(y) {
            let mut avoid = self.avoid.clone();
            all_names_into(&body.source(), &mut avoid);
            all_names_into(&body.target(), &mut avoid);
            avoid.insert(self.x.name.clone());
            let fresh = fresh_name(y, &avoid);
            let renamed = lift(body, &yv, &D::Refl(Term::Var(Var { ns, name: fresh.clone() })), self.reg)?;
            return Ok((fresh, self.go(&renamed)?));
        }
        Ok((y.clone(), self.go(body)?))
    }

    fn go(&self, d: &Derivation) -> Result<Derivation, LiftError> {
        let src = d.source();
        if !fv(&src).contains(self.x) && !fv(&d.target()).contains(self.x) {
            return Ok(d.clone());
        }
        Ok(match d {
            D::Refl(m) => match m {
                _ if self.e.is_refl() => D::Refl(subst(m, &self.p, self.x)),
                Term::Var(v) if v == self.x => self.e.clone(),
                Term::Boxed(_) | Term::Fix(..) | Term::Var(_) => D::Refl(self.frozen(m)?),
                _ => self.go(&expand_refl(m))?,
            },
            D::Lam(y, ty, b) => {
                let (y, b) = self.binder(y, Ns::Ordinary, b)?;
                D::Lam(y, ty.clone(), bx(b))
            }
            D::App(a, b) => D::App(bx(self.go(a)?), bx(self.go(b)?)),
            D::Pair(a, b) => D::Pair(bx(self.go(a)?), bx(self.go(b)?)),
            D::Fst(a) => D::Fst(bx(self.go(a)?)),
            D::Snd(a) => D::Snd(bx(self.go(a)?)),
            D::LetBox(u, s, b) => {
                let s = self.go(s)?;
                let (u, b) = self.binder(u, Ns::Modal, b)?;
                D::LetBox(u, bx(s), bx(b))
            }
            D::Cond(a, b, c) => {
                let (b2, c2) = (self.go(b)?, self.go(c)?);
                if self.reg.cond_congruence == CondCongruence::ScrutineeOnly && !(b2.is_refl() && c2.is_refl()) {
                    return Err(LiftError::CondBranch);
                }
                D::Cond(bx(self.go(a)?), bx(b2), bx(c2))
            }
            D::Beta { x: y, ty, body, arg } => {
                let arg = self.go(arg)?;
                let (y, body) = self.binder(y, Ns::Ordinary, body)?;
                D::Beta { x: y, ty: ty.clone(), body: bx(body), arg: bx(arg) }
            }
            D::BoxBeta { u, code, body } => {
                let code = self.frozen(code)?;
                let (u, body) = self.binder(u, Ns::Modal, body)?;
                D::BoxBeta { u, code, body: bx(body) }
            }
            D::BoxFix { z, body } => {
                if fv(&body.source()).contains(self.x) && !self.e.is_refl() {
                    return Err(LiftError::FrozenOccurrence(self.x.clone()));
                }
                let (z, body) = self.binder(z, Ns::Ordinary, body)?;
                D::BoxFix { z, body: bx(body) }
            }
            D::CondTrue { then, other } => D::CondTrue { then: bx(self.go(then)?), other: subst(other, &self.p, self.x) },
            D::CondFalse { other, els } => D::CondFalse { other: subst(other, &self.p, self.x), els: bx(self.go(els)?) },
            D::OutIn(a) => D::OutIn(bx(self.go(a)?)),
            D::FstPair(a, other) => D::FstPair(bx(self.go(a)?), subst(other, &self.p, self.x)),
            D::SndPair(other, a) => D::SndPair(subst(other, &self.p, self.x), bx(self.go(a)?)),
            D::Contract { source, rule, .. } => {
                let source = self.frozen(source)?;
                let target = root_steps(&source, self.reg)
                    .into_iter()
                    .find(|(_, r)| r == rule)
                    .map(|(t, _)| t)
                    .ok_or_else(|| LiftError::Contraction(source.clone()))?;
                D::Contract { source, target, rule: *rule }
            }
        })
    }
}

/// Rewrites `refl` at a compound term into congruences over `refl`, so a
/// non-trivial substitution can be threaded through it.
fn expand_refl(m: &Term) -> Derivation {
    let r = |t: &Arc<Term>| bx(D::Refl((**t).clone()));
    match m {
        Term::Lam(x, ty, b) => D::Lam(x.clone(), ty.clone(), r(b)),
        Term::App(a, b) => D::App(r(a), r(b)),
        Term::Pair(a, b) => D::Pair(r(a), r(b)),
        Term::Fst(a) => D::Fst(r(a)),
        Term::Snd(a) => D::Snd(r(a)),
        Term::LetBox(u, s, b) => D::LetBox(u.clone(), r(s), r(b)),
        Term::Cond(a, b, c) => D::Cond(r(a), r(b), r(c)),
        _ => D::Refl(m.clone()),
    }
}

/// Outcome of replaying a substitution lemma on one instance.
#[derive(Clone, Debug)]
pub enum LemmaOutcome {
    /// The precondition does not hold for this instance.
    Vacuous,
    Holds,
    Fails(String),
}

/// `M => N` implies `M[P/x] => N[P/x]`.
pub fn check_substint(d: &Derivation, x: &Var, p: &Term, reg: &Registry) -> LemmaOutcome {
    replay(d, x, &D::Refl(p.clone()), reg)
}

/// `x` not in `bfv(M)`, `M => N` and `P => Q` imply `M[P/x] => N[Q/x]`.
pub fn check_redp(d: &Derivation, x: &Var, e: &Derivation, reg: &Registry) -> LemmaOutcome {
    if bfv(&d.source()).contains(x) {
        return LemmaOutcome::Vacuous;
    }
    replay(d, x, e, reg)
}

fn replay(d: &Derivation, x: &Var, e: &Derivation, reg: &Registry) -> LemmaOutcome {
    if !d.validate(reg) || !e.validate(reg) {
        return LemmaOutcome::Vacuous;
    }
    let lifted = match lift(d, x, e, reg) {
        Ok(l) => l,
        Err(err) => return LemmaOutcome::Fails(err.to_string()),
    };
    let want_src = subst(&d.source(), &e.source(), x);
    let want_tgt = subst(&d.target(), &e.target(), x);
    let w = ParStepWitness { source: want_src, target: want_tgt, derivation: lifted };
    if w.validate(reg) {
        LemmaOutcome::Holds
    } else {
        LemmaOutcome::Fails(format!(
            "replayed derivation proves {} => {}, expected {} => {}",
            w.derivation.source(),
            w.derivation.target(),
            w.source,
            w.target
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::Mode;
    use crate::syntax::{parse, parse_in, DualContext};

    fn reg() -> Registry {
        Registry::default()
    }

    fn strs(v: &[Term]) -> Vec<String> {
        v.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn par_reducts_of_a_redex() {
        let m = parse(r"(\x:Nat. x) y").unwrap();
        let rs = par_reducts(&m, &reg());
        assert_eq!(rs.len(), 2);
        assert!(rs.iter().any(|t| alpha_eq(t, &m)));
        assert!(rs.iter().any(|t| *t == Term::var("y")));
    }

    #[test]
    fn nothing_under_box() {
        let m = parse(r"box ((\x:Nat. x) y)").unwrap();
        assert_eq!(strs(&par_reducts(&m, &reg())), vec![m.to_string()]);
    }

    #[test]
    fn box_beta_substitutes_code() {
        let m = parse(r"let box u = box (succ 1) in (\x:Nat. x) u").unwrap();
        let rs = par_reducts(&m, &reg());
        let want = [parse(r"(\x:Nat. x) (succ 1)").unwrap(), parse("succ 1").unwrap()];
        for w in &want {
            assert!(rs.iter().any(|t| alpha_eq(t, w)), "missing {w}");
        }
        assert_eq!(rs.len(), 4);
    }

    #[test]
    fn complete_developments() {
        let cd = |s: &str| complete_development(&parse(s).unwrap(), &reg()).to_string();
        assert_eq!(cd(r"(\x:Nat. x) y"), "y");
        assert_eq!(
            cd(r"fix z. (\x:[]Nat. let box y = x in y) z"),
            r"let box y = box fix z. (\x:[]Nat. let box y = x in y) z in y"
        );
        assert_eq!(cd(r"box ((\x:Nat. x) 1)"), r"box (\x:Nat. x) 1");
        let ctx = DualContext::empty().with_ordinary("p", Ty::arrow(Ty::Nat, Ty::Nat)).with_ordinary("q", Ty::Nat);
        let m = parse_in(r"let box u = box (p q) in ~is-app (box u)", &ctx).unwrap();
        let r = Registry::with_is_app(Mode::Unsafe);
        assert_eq!(complete_development(&m, &r).to_string(), "~is-app (box p q)");
    }

    #[test]
    fn triangles() {
        for s in [r"(\x:Nat. x) ((\y:Nat. y) z)", r"let box u = box true in if u then 1 else 2"] {
            let rep = triangle_check(&parse(s).unwrap(), &reg());
            assert!(rep.passed(), "{rep}");
        }
    }

    #[test]
    fn unsafe_counterexample_breaks_the_triangle() {
        let src = r"let box u = box ((\w:Nat. w) 1) in ~is-app (box u)";
        let m = parse(src).unwrap();
        let r = Registry::with_is_app(Mode::Unsafe);
        assert!(!triangle_check(&m, &r).passed());
        assert!(joinable(&Term::True, &Term::False, 5, &r).is_none());
        assert!(triangle_check(&m, &Registry::with_is_app(Mode::Safe)).passed());
    }

    #[test]
    fn joinability() {
        let m = parse(r"(\x:Bool. x) ((\y:Nat. y) z)").unwrap();
        assert_eq!(joinable(&m, &m, 0, &reg()), Some(m.clone()));
        let s = step_all(&m, &reg());
        assert_eq!(s.len(), 2);
        assert_eq!(joinable(&s[0].term, &s[1].term, 2, &reg()), Some(Term::var("z")));
    }

    #[test]
    fn par_to_finds_developments() {
        let m = parse(r"(\x:Nat. succ x) ((\y:Nat. y) 3)").unwrap();
        let d = par_to(&m, &parse("succ 3").unwrap(), &reg()).unwrap();
        assert!(ParStepWitness::new(d).validate(&reg()));
        assert!(par_to(&m, &Term::Num(4), &reg()).is_none());
    }

    #[test]
    fn substint_replay() {
        let ctx = DualContext::empty().with_modal("u", Ty::Nat);
        let m = parse_in(r"(\x:Nat. x) (box u)", &ctx).unwrap();
        let d = D::Beta { x: Name::new("x"), ty: Ty::Nat, body: bx(D::Refl(Term::var("x"))), arg: bx(D::Refl(
            match &m { Term::App(_, a) => (**a).clone(), _ => unreachable!() },
        )) };
        assert!(d.validate(&reg()));
        let out = check_substint(&d, &Var::modal("u"), &Term::Num(7), &reg());
        assert!(matches!(out, LemmaOutcome::Holds), "{out:?}");
    }

    #[test]
    fn redp_replay_and_capture() {
        // M = \y:Nat. x y ;  x := (\w:Nat. w) y  =>  \y:Nat. w... capture must be avoided
        let ctx = DualContext::empty().with_ordinary("x", Ty::arrow(Ty::Nat, Ty::Nat)).with_ordinary("y", Ty::Nat);
        let m = parse_in(r"\y:Nat. x y", &ctx).unwrap();
        let d = D::Refl(m);
        let p = parse_in(r"(\w:Nat. \k:Nat. w) y", &ctx).unwrap();
        let e = par_derivations(&p, &reg()).into_iter().find(|d| !d.is_refl()).unwrap();
        let out = check_redp(&d, &Var::ord("x"), &e, &reg());
        assert!(matches!(out, LemmaOutcome::Holds), "{out:?}");
    }

    #[test]
    fn scrutinee_only_breaks_redp() {
        let ctx = DualContext::empty().with_ordinary("x", Ty::Nat).with_ordinary("b", Ty::Bool);
        let m = parse_in("if b then x else 0", &ctx).unwrap();
        let p = parse("succ 1").unwrap();
        let r = reg().with_cond_congruence(CondCongruence::ScrutineeOnly);
        let e = par_derivations(&p, &r).into_iter().find(|d| !d.is_refl()).unwrap();
        let out = check_redp(&D::Refl(m.clone()), &Var::ord("x"), &e, &r);
        assert!(matches!(out, LemmaOutcome::Fails(_)), "{out:?}");
        assert!(matches!(check_redp(&D::Refl(m), &Var::ord("x"), &e, &reg()), LemmaOutcome::Holds));
    }
}
