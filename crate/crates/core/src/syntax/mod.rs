//! Terms, types and dual contexts, together with the variable-level
//! machinery every other module builds on: free-variable sets,
//! capture-avoiding substitution and α-equivalence.

mod parse;
mod print;

pub use parse::{parse, parse_in, parse_type, ParseError, Source};
pub use print::WithAliases;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// An interned-ish identifier. Cheap to clone and safe to share.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(Arc::from(s))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// The two variable namespaces of a dual context.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ns {
    /// Value variables, bound by λ and by the diagonal variable of `fix`.
    Ordinary,
    /// Code variables, bound by `let box`.
    Modal,
}

/// A variable occurrence: its spelling plus the namespace fixed by its binder.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Var {
    pub ns: Ns,
    pub name: Name,
}

impl Var {
    pub fn ord(name: impl Into<Name>) -> Self {
        Var { ns: Ns::Ordinary, name: name.into() }
    }

    pub fn modal(name: impl Into<Name>) -> Self {
        Var { ns: Ns::Modal, name: name.into() }
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ns {
            Ns::Ordinary => write!(f, "{}", self.name),
            Ns::Modal => write!(f, "{}ᵐ", self.name),
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

pub type VarSet = BTreeSet<Var>;

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ty {
    Nat,
    Bool,
    /// Uninterpreted ground type of files.
    File,
    Arrow(Box<Ty>, Box<Ty>),
    Prod(Box<Ty>, Box<Ty>),
    Boxed(Box<Ty>),
}

impl Ty {
    pub fn arrow(a: Ty, b: Ty) -> Ty {
        Ty::Arrow(Box::new(a), Box::new(b))
    }

    pub fn boxed(a: Ty) -> Ty {
        Ty::Boxed(Box::new(a))
    }

    pub fn prod(a: Ty, b: Ty) -> Ty {
        Ty::Prod(Box::new(a), Box::new(b))
    }

    /// Ground types are the ones `if-then-else` may return.
    pub fn is_ground(&self) -> bool {
        matches!(self, Ty::Nat | Ty::Bool | Ty::File)
    }
}

impl fmt::Debug for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Built-in constants outside the PCF core.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Constant {
    /// `in : [](File -> File) -> File`
    In,
    /// `out : File -> [](File -> File)`
    Out,
    /// `infect : [](File -> File) -> File -> File`
    Infect,
}

impl Constant {
    pub fn name(self) -> &'static str {
        match self {
            Constant::In => "in",
            Constant::Out => "out",
            Constant::Infect => "infect",
        }
    }

    pub fn from_name(s: &str) -> Option<Constant> {
        match s {
            "in" => Some(Constant::In),
            "out" => Some(Constant::Out),
            "infect" => Some(Constant::Infect),
            _ => None,
        }
    }

    pub fn ty(self) -> Ty {
        let ff = Ty::arrow(Ty::File, Ty::File);
        match self {
            Constant::In => Ty::arrow(Ty::boxed(ff), Ty::File),
            Constant::Out => Ty::arrow(Ty::File, Ty::boxed(ff)),
            Constant::Infect => Ty::arrow(Ty::boxed(ff.clone()), ff),
        }
    }
}

/// iPCF terms.
///
/// `Lam` binds an ordinary variable, `LetBox` a modal one. `Fix` binds its
/// diagonal variable in the ordinary namespace, where it is typed at `[]A`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    Lam(Name, Ty, Arc<Term>),
    App(Arc<Term>, Arc<Term>),
    Pair(Arc<Term>, Arc<Term>),
    Fst(Arc<Term>),
    Snd(Arc<Term>),
    Boxed(Arc<Term>),
    LetBox(Name, Arc<Term>, Arc<Term>),
    Fix(Name, Arc<Term>),
    Num(u64),
    True,
    False,
    Succ,
    Pred,
    IsZero,
    /// `if b then m else n`, the fully applied conditional at a ground type.
    Cond(Arc<Term>, Arc<Term>, Arc<Term>),
    /// `~f`, a registered intensional operation.
    Op(Name),
    Const(Constant),
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::ord(name))
    }

    pub fn mvar(name: &str) -> Term {
        Term::Var(Var::modal(name))
    }

    pub fn lam(x: &str, ty: Ty, body: Term) -> Term {
        Term::Lam(Name::new(x), ty, Arc::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Arc::new(f), Arc::new(a))
    }

    /// Left-nested application `f a1 a2 ...`.
    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn boxed(m: Term) -> Term {
        Term::Boxed(Arc::new(m))
    }

    pub fn let_box(u: &str, m: Term, n: Term) -> Term {
        Term::LetBox(Name::new(u), Arc::new(m), Arc::new(n))
    }

    pub fn fix(z: &str, m: Term) -> Term {
        Term::Fix(Name::new(z), Arc::new(m))
    }

    pub fn cond(b: Term, m: Term, n: Term) -> Term {
        Term::Cond(Arc::new(b), Arc::new(m), Arc::new(n))
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Arc::new(a), Arc::new(b))
    }

    pub fn op(name: &str) -> Term {
        Term::Op(Name::new(name))
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        1 + self.children().map(|c| c.size()).sum::<usize>()
    }

    /// Immediate subterms, in left-to-right order. Child `i` of this
    /// iterator is the one addressed by path component `i`.
    pub fn children(&self) -> impl Iterator<Item = &Term> {
        let v: Vec<&Term> = match self {
            Term::Lam(_, _, b) | Term::Fix(_, b) | Term::Boxed(b) | Term::Fst(b) | Term::Snd(b) => {
                vec![b]
            }
            Term::App(a, b) | Term::Pair(a, b) | Term::LetBox(_, a, b) => vec![a, b],
            Term::Cond(a, b, c) => vec![a, b, c],
            _ => vec![],
        };
        v.into_iter()
    }

    pub fn subterm(&self, path: &Path) -> Option<&Term> {
        let mut t = self;
        for &i in &path.0 {
            t = t.children().nth(i as usize)?;
        }
        Some(t)
    }

    pub fn is_closed(&self) -> bool {
        fv(self).is_empty()
    }

    /// True if the term uses pairs or projections anywhere.
    pub fn uses_products(&self) -> bool {
        matches!(self, Term::Pair(..) | Term::Fst(_) | Term::Snd(_))
            || self.children().any(Term::uses_products)
            || matches!(self, Term::Lam(_, ty, _) if ty_uses_products(ty))
    }
}

fn ty_uses_products(ty: &Ty) -> bool {
    match ty {
        Ty::Prod(..) => true,
        Ty::Arrow(a, b) => ty_uses_products(a) || ty_uses_products(b),
        Ty::Boxed(a) => ty_uses_products(a),
        _ => false,
    }
}

/// Address of a subterm: the sequence of child indices from the root.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(pub Vec<u8>);

impl Path {
    pub fn root() -> Self {
        Path(Vec::new())
    }

    pub fn child(&self, i: u8) -> Path {
        let mut v = self.0.clone();
        v.push(i);
        Path(v)
    }

    pub fn prepend(mut self, i: u8) -> Path {
        self.0.insert(0, i);
        self
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(".")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A dual context `Δ; Γ`: modal hypotheses and ordinary hypotheses.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DualContext {
    pub modal: Vec<(Name, Ty)>,
    pub ordinary: Vec<(Name, Ty)>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ContextError {
    #[error("variable `{0}` occurs in both the modal and the ordinary context")]
    NotDisjoint(Name),
    #[error("variable `{0}` is declared twice")]
    Duplicate(Name),
}

impl DualContext {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(modal: Vec<(Name, Ty)>, ordinary: Vec<(Name, Ty)>) -> Self {
        DualContext { modal, ordinary }
    }

    pub fn with_modal(mut self, name: &str, ty: Ty) -> Self {
        self.modal.push((Name::new(name), ty));
        self
    }

    pub fn with_ordinary(mut self, name: &str, ty: Ty) -> Self {
        self.ordinary.push((Name::new(name), ty));
        self
    }

    pub fn modal_vars(&self) -> impl Iterator<Item = &Name> {
        self.modal.iter().map(|(n, _)| n)
    }

    pub fn ordinary_vars(&self) -> impl Iterator<Item = &Name> {
        self.ordinary.iter().map(|(n, _)| n)
    }

    /// Checks disjointness of the two contexts and absence of duplicates.
    pub fn validate(&self) -> Result<(), ContextError> {
        let mut seen = BTreeSet::new();
        for n in self.modal_vars() {
            if !seen.insert(n) {
                return Err(ContextError::Duplicate(n.clone()));
            }
        }
        let mut seen_ord = BTreeSet::new();
        for n in self.ordinary_vars() {
            if seen.contains(n) {
                return Err(ContextError::NotDisjoint(n.clone()));
            }
            if !seen_ord.insert(n) {
                return Err(ContextError::Duplicate(n.clone()));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Free variables

/// All free variables.
pub fn fv(m: &Term) -> VarSet {
    let mut out = VarSet::new();
    collect_fv(m, &mut out);
    out
}

fn collect_fv(m: &Term, out: &mut VarSet) {
    match m {
        Term::Var(v) => {
            out.insert(v.clone());
        }
        Term::Lam(x, _, b) => remove_bound(b, &Var::ord(x.clone()), out, collect_fv),
        Term::Fix(z, b) => remove_bound(b, &Var::ord(z.clone()), out, collect_fv),
        Term::LetBox(u, s, b) => {
            collect_fv(s, out);
            remove_bound(b, &Var::modal(u.clone()), out, collect_fv);
        }
        _ => m.children().for_each(|c| collect_fv(c, out)),
    }
}

fn remove_bound(body: &Term, x: &Var, out: &mut VarSet, f: fn(&Term, &mut VarSet)) {
    let mut inner = VarSet::new();
    f(body, &mut inner);
    inner.remove(x);
    out.extend(inner);
}

/// Free variables that do not occur under `box` or `fix`.
pub fn ufv(m: &Term) -> VarSet {
    let mut out = VarSet::new();
    collect_ufv(m, &mut out);
    out
}

fn collect_ufv(m: &Term, out: &mut VarSet) {
    match m {
        Term::Boxed(_) | Term::Fix(..) => {}
        Term::Var(v) => {
            out.insert(v.clone());
        }
        Term::Lam(x, _, b) => remove_bound(b, &Var::ord(x.clone()), out, collect_ufv),
        Term::LetBox(u, s, b) => {
            collect_ufv(s, out);
            remove_bound(b, &Var::modal(u.clone()), out, collect_ufv);
        }
        _ => m.children().for_each(|c| collect_ufv(c, out)),
    }
}

/// Free variables occurring under the scope of a `box` or a `fix`.
pub fn bfv(m: &Term) -> VarSet {
    let mut out = VarSet::new();
    collect_bfv(m, &mut out);
    out
}

fn collect_bfv(m: &Term, out: &mut VarSet) {
    match m {
        Term::Var(_) => {}
        Term::Boxed(b) => collect_fv(b, out),
        Term::Fix(z, b) => remove_bound(b, &Var::ord(z.clone()), out, collect_fv),
        Term::Lam(x, _, b) => remove_bound(b, &Var::ord(x.clone()), out, collect_bfv),
        Term::LetBox(u, s, b) => {
            collect_bfv(s, out);
            remove_bound(b, &Var::modal(u.clone()), out, collect_bfv);
        }
        _ => m.children().for_each(|c| collect_bfv(c, out)),
    }
}

fn names_of(vs: &VarSet) -> BTreeSet<Name> {
    vs.iter().map(|v| v.name.clone()).collect()
}

/// Every name spelled anywhere in the term, bound or free.
pub fn all_names_of(m: &Term) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    all_names(m, &mut out);
    out
}

fn all_names(m: &Term, out: &mut BTreeSet<Name>) {
    match m {
        Term::Var(v) => {
            out.insert(v.name.clone());
        }
        Term::Lam(x, _, _) | Term::Fix(x, _) | Term::LetBox(x, _, _) => {
            out.insert(x.clone());
        }
        _ => {}
    }
    m.children().for_each(|c| all_names(c, out));
}

/// Picks a spelling based on `base` that is not in `avoid`, by priming.
pub fn fresh_name(base: &Name, avoid: &BTreeSet<Name>) -> Name {
    let mut candidate = format!("{}'", base);
    while avoid.contains(candidate.as_str()) {
        candidate.push('\'');
    }
    Name::from(candidate)
}

impl std::borrow::Borrow<str> for Name {
    fn borrow(&self) -> &str {
        &self.0
    }
}

// ---------------------------------------------------------------------------
// Substitution

/// `m[n/x]`: capture-avoiding substitution of `n` for the free occurrences
/// of `x` (in `x`'s namespace).
///
/// A binder is renamed whenever its spelling clashes with a free variable
/// of `n` in either namespace, so printed results never rely on namespace
/// information to be read back correctly.
pub fn subst(m: &Term, n: &Term, x: &Var) -> Term {
    let fv_n = fv(n);
    if !fv(m).contains(x) {
        return m.clone();
    }
    Subst { n, x, fv_names: names_of(&fv_n) }.go(m)
}

struct Subst<'a> {
    n: &'a Term,
    x: &'a Var,
    fv_names: BTreeSet<Name>,
}

impl Subst<'_> {
    fn go(&self, m: &Term) -> Term {
        match m {
            Term::Var(v) if v == self.x => self.n.clone(),
            Term::Var(_) => m.clone(),
            Term::Lam(y, ty, body) => {
                let (y, body) = self.under_binder(Var::ord(y.clone()), body);
                Term::Lam(y, ty.clone(), body)
            }
            Term::Fix(z, body) => {
                let (z, body) = self.under_binder(Var::ord(z.clone()), body);
                Term::Fix(z, body)
            }
            Term::LetBox(u, s, body) => {
                let s = Arc::new(self.go(s));
                let (u, body) = self.under_binder(Var::modal(u.clone()), body);
                Term::LetBox(u, s, body)
            }
            _ => map_children(m, |c| self.go(c)),
        }
    }

    fn under_binder(&self, y: Var, body: &Arc<Term>) -> (Name, Arc<Term>) {
        if &y == self.x || !fv(body).contains(self.x) {
            return (y.name, body.clone());
        }
        if self.fv_names.contains(&y.name) {
            let mut avoid = self.fv_names.clone();
            all_names(body, &mut avoid);
            avoid.insert(self.x.name.clone());
            let fresh = fresh_name(&y.name, &avoid);
            let renamed = subst(body, &Term::Var(Var { ns: y.ns, name: fresh.clone() }), &y);
            (fresh, Arc::new(self.go(&renamed)))
        } else {
            (y.name, Arc::new(self.go(body)))
        }
    }
}

/// Rebuilds a node with each child replaced by `f(child)`. Binders are
/// kept as they are.
pub fn map_children(m: &Term, mut f: impl FnMut(&Term) -> Term) -> Term {
    let mut g = |t: &Arc<Term>| Arc::new(f(t));
    match m {
        Term::Lam(x, ty, b) => Term::Lam(x.clone(), ty.clone(), g(b)),
        Term::App(a, b) => {
            let a = g(a);
            Term::App(a, g(b))
        }
        Term::Pair(a, b) => {
            let a = g(a);
            Term::Pair(a, g(b))
        }
        Term::Fst(a) => Term::Fst(g(a)),
        Term::Snd(a) => Term::Snd(g(a)),
        Term::Boxed(a) => Term::Boxed(g(a)),
        Term::LetBox(u, a, b) => {
            let a = g(a);
            Term::LetBox(u.clone(), a, g(b))
        }
        Term::Fix(z, b) => Term::Fix(z.clone(), g(b)),
        Term::Cond(a, b, c) => {
            let a = g(a);
            let b = g(b);
            Term::Cond(a, b, g(c))
        }
        _ => m.clone(),
    }
}

/// Replaces the child at index `i` of `m`.
pub fn replace_child(m: &Term, i: u8, new: Term) -> Term {
    let mut k = 0u8;
    map_children(m, |c| {
        let out = if k == i { new.clone() } else { c.clone() };
        k += 1;
        out
    })
}

/// Replaces the subterm at `path`.
pub fn replace_at(m: &Term, path: &[u8], new: Term) -> Term {
    match path.split_first() {
        None => new,
        Some((&i, rest)) => {
            let child = m.children().nth(i as usize).expect("path out of range");
            let replaced = replace_at(child, rest, new);
            replace_child(m, i, replaced)
        }
    }
}

// ---------------------------------------------------------------------------
// α-equivalence

/// Renames every bound variable to a canonical spelling determined by its
/// binding depth, so that two terms are α-equivalent exactly when their
/// canonical forms are equal.
pub fn canonical(m: &Term) -> Term {
    fn go(m: &Term, env: &mut Vec<(Var, Name)>) -> Term {
        let depth = env.len();
        let bind = |env: &mut Vec<(Var, Name)>, v: Var, body: &Term| {
            let canon = Name::from(format!("#{depth}"));
            env.push((v, canon.clone()));
            let b = go(body, env);
            env.pop();
            (canon, Arc::new(b))
        };
        match m {
            Term::Var(v) => match env.iter().rev().find(|(w, _)| w == v) {
                Some((_, c)) => Term::Var(Var { ns: v.ns, name: c.clone() }),
                None => m.clone(),
            },
            Term::Lam(x, ty, b) => {
                let (c, b) = bind(env, Var::ord(x.clone()), b);
                Term::Lam(c, ty.clone(), b)
            }
            Term::Fix(z, b) => {
                let (c, b) = bind(env, Var::ord(z.clone()), b);
                Term::Fix(c, b)
            }
            Term::LetBox(u, s, b) => {
                let s = Arc::new(go(s, env));
                let (c, b) = bind(env, Var::modal(u.clone()), b);
                Term::LetBox(c, s, b)
            }
            _ => map_children(m, |c| go(c, env)),
        }
    }
    go(m, &mut Vec::new())
}

/// α-equivalence in both namespaces.
pub fn alpha_eq(m: &Term, n: &Term) -> bool {
    m == n || canonical(m) == canonical(n)
}

/// Groups terms by α-class; the first representative of each class wins.
#[derive(Default)]
pub struct AlphaSet {
    seen: HashMap<Term, usize>,
    items: Vec<Term>,
}

impl AlphaSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns true if the α-class of `t` was not present yet.
    pub fn insert(&mut self, t: Term) -> bool {
        let key = canonical(&t);
        if self.seen.contains_key(&key) {
            return false;
        }
        self.seen.insert(key, self.items.len());
        self.items.push(t);
        true
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.seen.contains_key(&canonical(t))
    }

    pub fn get(&self, t: &Term) -> Option<&Term> {
        self.seen.get(&canonical(t)).map(|&i| &self.items[i])
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Term> {
        self.items.iter()
    }

    pub fn into_vec(self) -> Vec<Term> {
        self.items
    }
}
