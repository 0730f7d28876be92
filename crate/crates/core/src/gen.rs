//! Seeded, type-directed generator of well-typed terms.
//!
//! Terms are grown top-down from a target type. The generator tracks the
//! visible part of the dual context exactly as the checker does, so every
//! output is derivable by construction; the tests re-check that anyway.
//! Redex shapes (β, box-β, `fix`, δ, intensional operations) are favoured
//! so that reduction-related properties get exercised.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::syntax::{DualContext, Name, Term, Ty, Var};
pub use crate::typing::System;
use crate::typing::{is_fix_type, Judgement};

#[derive(Clone, Debug)]
pub struct Profile {
    pub system: System,
    /// Upper bound on the node count of generated terms.
    pub max_size: usize,
    /// Allow pairs and projections (ignored when products are compiled out).
    pub products: bool,
    /// Allow `~tick` and `~done?`.
    pub ops: bool,
    pub fix: bool,
    /// How many free variables of each namespace a generated context may hold.
    pub max_context: usize,
    /// Only check `v2` fixed points at `A_fix` types.
    pub afix: bool,
}

impl Default for Profile {
    fn default() -> Self {
        Profile {
            system: System::V1,
            max_size: 25,
            products: true,
            ops: true,
            fix: true,
            max_context: 2,
            afix: true,
        }
    }
}

impl Profile {
    pub fn v2(j: Judgement) -> Self {
        Profile { system: System::V2(j), ..Profile::default() }
    }

    /// Closed terms only.
    pub fn closed(mut self) -> Self {
        self.max_context = 0;
        self
    }

    pub fn max_size(mut self, n: usize) -> Self {
        self.max_size = n;
        self
    }

    pub fn without_ops(mut self) -> Self {
        self.ops = false;
        self
    }
}

/// A derivable typing judgement `Δ; Γ ⊢ M : A`.
#[derive(Clone, Debug)]
pub struct Generated {
    pub ctx: DualContext,
    pub term: Term,
    pub ty: Ty,
}

#[derive(Clone)]
struct Env {
    ord: Vec<(Name, Ty)>,
    modal: Vec<(Name, Ty)>,
    j: Option<Judgement>,
}

impl Env {
    fn bind_ord(&self, x: &Name, ty: &Ty) -> Env {
        let mut e = self.clone();
        e.ord.retain(|(n, _)| n != x);
        e.ord.push((x.clone(), ty.clone()));
        e
    }

    fn bind_modal(&self, u: &Name, ty: &Ty) -> Env {
        let mut e = self.clone();
        e.modal.retain(|(n, _)| n != u);
        e.modal.push((u.clone(), ty.clone()));
        e
    }

    fn under_box(&self) -> Env {
        Env { ord: Vec::new(), modal: self.modal.clone(), j: self.j.map(|_| Judgement::Int) }
    }

    fn is_int(&self) -> bool {
        self.j == Some(Judgement::Int)
    }
}

const ORD_NAMES: &[&str] = &["x", "y", "z"];
const MODAL_NAMES: &[&str] = &["u", "v"];
const CTX_ORD: &[&str] = &["a", "b"];
const CTX_MODAL: &[&str] = &["p", "q"];

pub struct Gen {
    rng: ChaCha8Rng,
    profile: Profile,
}

impl Gen {
    pub fn new(seed: u64, profile: Profile) -> Self {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed), profile }
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// Switches the system subsequent terms are generated for.
    pub fn set_system(&mut self, system: System) {
        self.profile.system = system;
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn products(&self) -> bool {
        cfg!(feature = "products") && self.profile.products
    }

    /// A random type of bounded depth.
    pub fn ty(&mut self, depth: u32) -> Ty {
        let leaf = self.rng.gen_bool(0.5) || depth == 0;
        if leaf {
            return if self.rng.gen_bool(0.55) { Ty::Nat } else { Ty::Bool };
        }
        match self.rng.gen_range(0..10) {
            0..=3 => Ty::boxed(self.ty(depth - 1)),
            4..=8 => Ty::arrow(self.ty(depth - 1), self.ty(depth - 1)),
            _ if self.products() => Ty::prod(self.ty(depth - 1), self.ty(depth - 1)),
            _ => Ty::Nat,
        }
    }

    /// A random derivable judgement no larger than the profile allows.
    pub fn judgement(&mut self) -> Generated {
        loop {
            let mut ctx = DualContext::empty();
            let k = self.profile.max_context;
            for name in CTX_ORD.iter().take(self.rng.gen_range(0..=k)) {
                let t = self.ty(1);
                ctx.ordinary.push((Name::new(name), t));
            }
            for name in CTX_MODAL.iter().take(self.rng.gen_range(0..=k)) {
                let t = self.ty(1);
                ctx.modal.push((Name::new(name), t));
            }
            let ty = self.ty(2);
            if let Some(term) = self.term_in(&ctx, &ty) {
                return Generated { ctx, term, ty };
            }
        }
    }

    /// A closed term of a random type.
    pub fn closed(&mut self) -> Generated {
        loop {
            let ty = self.ty(2);
            if let Some(term) = self.term_in(&DualContext::empty(), &ty) {
                return Generated { ctx: DualContext::empty(), term, ty };
            }
        }
    }

    /// A term of type `ty` in `ctx`, or `None` if a few attempts all exceeded
    /// the size bound.
    pub fn term_in(&mut self, ctx: &DualContext, ty: &Ty) -> Option<Term> {
        let env = Env {
            ord: ctx.ordinary.clone(),
            modal: ctx.modal.clone(),
            j: match self.profile.system {
                System::V1 => None,
                System::V2(j) => Some(j),
            },
        };
        for _ in 0..8 {
            let max = self.profile.max_size;
            let budget = self.rng.gen_range((max / 2).max(1)..=max);
            let t = self.term(&env, ty, budget);
            if t.size() <= self.profile.max_size {
                return Some(t);
            }
        }
        None
    }

    fn pick<'a>(&mut self, names: &[&'a str]) -> &'a str {
        names.choose(&mut self.rng).unwrap()
    }

    fn leaf(&mut self, env: &Env, ty: &Ty) -> Term {
        let mut vars: Vec<Term> = env
            .ord
            .iter()
            .filter(|(_, t)| t == ty)
            .map(|(n, _)| Term::Var(Var::ord(n.clone())))
            .collect();
        vars.extend(
            env.modal
                .iter()
                .filter(|(_, t)| t == ty)
                .map(|(n, _)| Term::Var(Var::modal(n.clone()))),
        );
        if !vars.is_empty() && self.rng.gen_bool(0.7) {
            return vars.choose(&mut self.rng).unwrap().clone();
        }
        self.intro(env, ty, 1)
    }

    /// The introduction form of `ty`, which always exists.
    fn intro(&mut self, env: &Env, ty: &Ty, budget: usize) -> Term {
        let sub = budget.saturating_sub(1).max(1);
        match ty {
            Ty::Nat => Term::Num(self.rng.gen_range(0..4)),
            Ty::Bool => {
                if self.rng.gen_bool(0.5) {
                    Term::True
                } else {
                    Term::False
                }
            }
            Ty::File => Term::app(
                Term::Const(crate::syntax::Constant::In),
                Term::boxed(Term::lam("f", Ty::File, Term::var("f"))),
            ),
            Ty::Arrow(a, b) => {
                let x = Name::new(self.pick(ORD_NAMES));
                let inner = if env.is_int() {
                    let j = Some(Judgement::Ext);
                    Env { ord: vec![(x.clone(), (**a).clone())], modal: Vec::new(), j }
                } else {
                    env.bind_ord(&x, a)
                };
                let body = self.term(&inner, b, sub);
                Term::Lam(x, (**a).clone(), body.into())
            }
            Ty::Boxed(a) => Term::boxed(self.term(&env.under_box(), a, sub)),
            Ty::Prod(a, b) => {
                let l = self.term(env, a, sub / 2);
                let r = self.term(env, b, sub - sub / 2);
                Term::pair(l, r)
            }
        }
    }

    fn term(&mut self, env: &Env, ty: &Ty, budget: usize) -> Term {
        if budget <= 1 {
            return self.leaf(env, ty);
        }
        let sub = budget - 1;
        // with budget to spare, prefer eliminations over leaves
        let low = match budget {
            0..=3 => 0,
            _ if ty.is_ground() => 35,
            _ => 15,
        };
        let choice = self.rng.gen_range(low..100);
        match choice {
            0..=14 => self.leaf(env, ty),
            15..=34 => self.intro(env, ty, budget),
            35..=49 => {
                // β-redex or plain application
                let a = self.ty(1);
                let fun_ty = Ty::arrow(a.clone(), ty.clone());
                let f = if self.rng.gen_bool(0.6) {
                    self.intro(env, &fun_ty, sub / 2 + 1)
                } else {
                    self.term(env, &fun_ty, sub / 2)
                };
                let arg = self.term(env, &a, sub - sub / 2);
                Term::app(f, arg)
            }
            50..=62 => {
                let a = self.ty(1);
                let u = Name::new(self.pick(MODAL_NAMES));
                let scrut_ty = Ty::boxed(a.clone());
                let s = if self.rng.gen_bool(0.6) {
                    self.intro(env, &scrut_ty, sub / 2)
                } else {
                    self.term(env, &scrut_ty, sub / 2)
                };
                let body = self.term(&env.bind_modal(&u, &a), ty, sub - sub / 2);
                Term::LetBox(u, s.into(), body.into())
            }
            63..=72 if ty.is_ground() && *ty != Ty::File => {
                let third = (sub / 3).max(1);
                let b = self.term(env, &Ty::Bool, third);
                let m = self.term(env, ty, third);
                let n = self.term(env, ty, third);
                Term::cond(b, m, n)
            }
            73..=80 if self.profile.fix => self.fix(env, ty, sub),
            81..=88 => match ty {
                Ty::Nat => {
                    let f = if self.rng.gen_bool(0.5) { Term::Succ } else { Term::Pred };
                    Term::app(f, self.term(env, &Ty::Nat, sub))
                }
                Ty::Bool => Term::app(Term::IsZero, self.term(env, &Ty::Nat, sub)),
                _ => self.intro(env, ty, budget),
            },
            89..=94 if self.profile.ops => {
                let bb = Ty::boxed(Ty::Bool);
                if *ty == bb {
                    Term::app(Term::op("tick"), self.term(env, &bb, sub))
                } else if *ty == Ty::Bool {
                    Term::app(Term::op("done?"), self.term(env, &bb, sub))
                } else {
                    self.intro(env, ty, budget)
                }
            }
            95..=99 if self.products() => {
                let other = self.ty(0);
                let (pt, first) = if self.rng.gen_bool(0.5) {
                    (Ty::prod(ty.clone(), other), true)
                } else {
                    (Ty::prod(other, ty.clone()), false)
                };
                let p = self.term(env, &pt, sub);
                if first {
                    Term::Fst(p.into())
                } else {
                    Term::Snd(p.into())
                }
            }
            _ => self.intro(env, ty, budget),
        }
    }

    fn fix(&mut self, env: &Env, ty: &Ty, sub: usize) -> Term {
        let z = Name::new(self.pick(ORD_NAMES));
        let boxed = Ty::boxed(ty.clone());
        let inner = match env.j {
            None => Env { ord: vec![(z.clone(), boxed)], modal: env.modal.clone(), j: None },
            Some(_) => {
                if self.profile.afix && !is_fix_type(ty) {
                    return self.intro(env, ty, sub + 1);
                }
                Env { ord: vec![(z.clone(), boxed)], modal: Vec::new(), j: Some(Judgement::Int) }
            }
        };
        // Use the diagonal variable through `let box` most of the time so the
        // result is a recursive program rather than dead code.
        let body = if self.rng.gen_bool(0.5) && sub >= 3 {
            let u = Name::new(self.pick(MODAL_NAMES));
            let inner2 = inner.bind_modal(&u, ty);
            let b = self.term(&inner2, ty, sub - 2);
            Term::LetBox(u, Term::Var(Var::ord(z.clone())).into(), b.into())
        } else {
            self.term(&inner, ty, sub)
        };
        Term::Fix(z, body.into())
    }
}

/// `n` generated judgements from `seed`.
pub fn judgements(seed: u64, n: usize, profile: Profile) -> Vec<Generated> {
    let mut g = Gen::new(seed, profile);
    (0..n).map(|_| g.judgement()).collect()
}

/// `n` closed generated terms from `seed`.
pub fn closed_terms(seed: u64, n: usize, profile: Profile) -> Vec<Generated> {
    let mut g = Gen::new(seed, profile.closed());
    (0..n).map(|_| g.closed()).collect()
}
