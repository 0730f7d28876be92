//! Randomised test-bench for the admissible structural and cut rules.
//!
//! Each rule instance starts from a generated derivable judgement, applies
//! the rule's transformation, and asks the checker whether the conclusion
//! is derivable too. Failing instances are shrunk by retrying the same
//! transformation on smaller derivable subterms.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{Checker, Judgement, System};
use crate::corpus;
use crate::gen::{Gen, Generated, Profile};
use crate::syntax::{map_children, subst, DualContext, Name, Ns, Term, Ty, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Weakening,
    Exchange,
    Contraction,
    Cut,
    ModalWeakening,
    ModalExchange,
    ModalContraction,
    ModalCut,
    /// `int` derivations are also `ext` derivations.
    IntToExt,
    CutExt,
    CutInt,
    ModalCutV2,
}

impl Rule {
    pub const ALL: [Rule; 12] = [
        Rule::Weakening,
        Rule::Exchange,
        Rule::Contraction,
        Rule::Cut,
        Rule::ModalWeakening,
        Rule::ModalExchange,
        Rule::ModalContraction,
        Rule::ModalCut,
        Rule::IntToExt,
        Rule::CutExt,
        Rule::CutInt,
        Rule::ModalCutV2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Weakening => "weakening",
            Rule::Exchange => "exchange",
            Rule::Contraction => "contraction",
            Rule::Cut => "cut",
            Rule::ModalWeakening => "modal-weakening",
            Rule::ModalExchange => "modal-exchange",
            Rule::ModalContraction => "modal-contraction",
            Rule::ModalCut => "modal-cut",
            Rule::IntToExt => "v2-int-to-ext",
            Rule::CutExt => "v2-cut-ext",
            Rule::CutInt => "v2-cut-int",
            Rule::ModalCutV2 => "v2-modal-cut",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A rule instance whose conclusion was not derivable, after shrinking.
#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub rule: Rule,
    pub premise_context: String,
    pub premise: String,
    pub premise_type: String,
    pub conclusion_context: String,
    pub conclusion: String,
    pub error: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AdmissibilityReport {
    /// Instances actually checked, per rule.
    pub instances: BTreeMap<Rule, usize>,
    pub failures: Vec<Failure>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// The transformation applied to the premise `Δ; Γ ⊢_sys M : A`.
#[derive(Clone, Debug)]
enum Transform {
    Weaken { ns: Ns, name: Name, ty: Ty, pos: usize },
    Exchange { ns: Ns, pos: usize },
    /// Rename some free occurrences of `var` to `fresh`, check the
    /// two-variable premise, then contract back.
    Contract { ns: Ns, var: Name, fresh: Name, seed: u64 },
    /// Substitute `n` (derivable at `n_sys`) for `var`, removing it from the context.
    Cut { ns: Ns, var: Name, n: Term, n_sys: System, out_sys: System },
    /// The same term at another judgement.
    Reflavour { to: System },
}

#[derive(Clone, Debug)]
struct Instance {
    sys: System,
    ctx: DualContext,
    term: Term,
    ty: Ty,
    transform: Transform,
}

enum Outcome {
    /// The premise itself is not derivable; the instance says nothing.
    Vacuous,
    Holds,
    Fails { ctx: DualContext, term: Term, error: String },
}

fn list(ctx: &DualContext, ns: Ns) -> &Vec<(Name, Ty)> {
    match ns {
        Ns::Modal => &ctx.modal,
        Ns::Ordinary => &ctx.ordinary,
    }
}

fn list_mut(ctx: &mut DualContext, ns: Ns) -> &mut Vec<(Name, Ty)> {
    match ns {
        Ns::Modal => &mut ctx.modal,
        Ns::Ordinary => &mut ctx.ordinary,
    }
}

/// Renames the free occurrences of `x` selected by `pick` to `y`.
fn rename_some(m: &Term, x: &Var, y: &Var, pick: &mut impl FnMut() -> bool) -> Term {
    match m {
        Term::Var(v) if v == x => {
            if pick() {
                Term::Var(y.clone())
            } else {
                m.clone()
            }
        }
        Term::Lam(b, _, _) | Term::Fix(b, _) if Var::ord(b.clone()) == *x => m.clone(),
        Term::LetBox(u, s, body) => {
            let s = rename_some(s, x, y, pick);
            let body = if Var::modal(u.clone()) == *x {
                (**body).clone()
            } else {
                rename_some(body, x, y, pick)
            };
            Term::LetBox(u.clone(), s.into(), body.into())
        }
        _ => map_children(m, |c| rename_some(c, x, y, pick)),
    }
}

impl Instance {
    fn run(&self, checker: &Checker) -> Outcome {
        if checker.check_against(self.sys, &self.ctx, &self.term, &self.ty).is_err() {
            return Outcome::Vacuous;
        }
        let (ctx, term, sys) = match &self.transform {
            Transform::Weaken { ns, name, ty, pos } => {
                let mut ctx = self.ctx.clone();
                let l = list_mut(&mut ctx, *ns);
                let pos = (*pos).min(l.len());
                l.insert(pos, (name.clone(), ty.clone()));
                (ctx, self.term.clone(), self.sys)
            }
            Transform::Exchange { ns, pos } => {
                let mut ctx = self.ctx.clone();
                let l = list_mut(&mut ctx, *ns);
                if l.len() >= 2 {
                    let p = (*pos).min(l.len() - 2);
                    l.swap(p, p + 1);
                }
                (ctx, self.term.clone(), self.sys)
            }
            Transform::Contract { ns, var, fresh, seed } => {
                let Some(ty) = list(&self.ctx, *ns).iter().find(|(n, _)| n == var).map(|(_, t)| t.clone())
                else {
                    return Outcome::Vacuous;
                };
                let x = Var { ns: *ns, name: var.clone() };
                let y = Var { ns: *ns, name: fresh.clone() };
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let split = rename_some(&self.term, &x, &y, &mut || rng.gen_bool(0.5));
                let mut two = self.ctx.clone();
                list_mut(&mut two, *ns).push((fresh.clone(), ty));
                // the two-variable judgement is itself an instance of weakening
                // plus renaming, so it must check
                if let Err(e) = checker.check_against(self.sys, &two, &split, &self.ty) {
                    return Outcome::Fails { ctx: two, term: split, error: e.to_string() };
                }
                (self.ctx.clone(), subst(&split, &Term::Var(x), &y), self.sys)
            }
            Transform::Cut { ns, var, n, n_sys, out_sys } => {
                let mut rest = self.ctx.clone();
                list_mut(&mut rest, *ns).retain(|(m, _)| m != var);
                let Some(a) = list(&self.ctx, *ns).iter().find(|(m, _)| m == var).map(|(_, t)| t.clone())
                else {
                    return Outcome::Vacuous;
                };
                let n_ctx = match ns {
                    Ns::Ordinary => rest.clone(),
                    Ns::Modal => DualContext::new(rest.modal.clone(), Vec::new()),
                };
                if checker.check_against(*n_sys, &n_ctx, n, &a).is_err() {
                    return Outcome::Vacuous;
                }
                let x = Var { ns: *ns, name: var.clone() };
                (rest, subst(&self.term, n, &x), *out_sys)
            }
            Transform::Reflavour { to } => (self.ctx.clone(), self.term.clone(), *to),
        };
        match checker.check_against(sys, &ctx, &term, &self.ty) {
            Ok(()) => Outcome::Holds,
            Err(e) => Outcome::Fails { ctx, term, error: e.to_string() },
        }
    }

    fn with_term(&self, term: Term, ty: Ty) -> Instance {
        Instance { term, ty, ..self.clone() }
    }
}

fn all_subterms(m: &Term, out: &mut Vec<Term>) {
    out.push(m.clone());
    for c in m.children() {
        all_subterms(c, out);
    }
}

/// Replaces the premise by ever smaller derivable subterms while the
/// conclusion keeps failing.
fn shrink(inst: Instance, checker: &Checker) -> Instance {
    let mut cur = inst;
    loop {
        let mut subs = Vec::new();
        for c in cur.term.children() {
            all_subterms(c, &mut subs);
        }
        subs.sort_by_key(Term::size);
        let next = subs.into_iter().find_map(|s| {
            let ty = checker.check(cur.sys, &cur.ctx, &s).ok()?;
            let cand = cur.with_term(s, ty);
            matches!(cand.run(checker), Outcome::Fails { .. }).then_some(cand)
        });
        match next {
            Some(n) => cur = n,
            None => return cur,
        }
    }
}

fn ctx_string(ctx: &DualContext) -> String {
    let side = |l: &Vec<(Name, Ty)>| {
        if l.is_empty() {
            "·".to_string()
        } else {
            l.iter().map(|(n, t)| format!("{n}:{t}")).collect::<Vec<_>>().join(", ")
        }
    };
    format!("{}; {}", side(&ctx.modal), side(&ctx.ordinary))
}

fn random_flavour(rng: &mut ChaCha8Rng) -> Judgement {
    if rng.gen_bool(0.5) {
        Judgement::Int
    } else {
        Judgement::Ext
    }
}

/// A generated premise whose context has at least one variable in `ns`.
fn premise_with(g: &mut Gen, ns: Ns) -> Generated {
    loop {
        let j = g.judgement();
        if !list(&j.ctx, ns).is_empty() {
            return j;
        }
    }
}

/// Builds the `i`-th instance of `rule`. The corpus is mixed into the
/// structural rules of the original system.
fn instance(rule: Rule, seed: u64, i: usize, corpus: &[Generated]) -> Instance {
    let s = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((rule as u64) << 32)
        .wrapping_add(i as u64);
    let v1 = Profile::default();
    let mut g = Gen::new(s, v1);
    let ns_of = |r: Rule| match r {
        Rule::ModalWeakening | Rule::ModalExchange | Rule::ModalContraction | Rule::ModalCut | Rule::ModalCutV2 => {
            Ns::Modal
        }
        _ => Ns::Ordinary,
    };
    let ns = ns_of(rule);
    match rule {
        Rule::Weakening | Rule::ModalWeakening => {
            let p = if i % 10 == 0 && !corpus.is_empty() {
                corpus[(i / 10) % corpus.len()].clone()
            } else {
                g.judgement()
            };
            let name = Name::new(if ns == Ns::Modal { "m" } else { "w" });
            let ty = g.ty(2);
            let pos = g.rng().gen_range(0..=list(&p.ctx, ns).len());
            Instance {

                sys: System::V1,
                ctx: p.ctx,
                term: p.term,
                ty: p.ty,
                transform: Transform::Weaken { ns, name, ty, pos },
            }
        }
        Rule::Exchange | Rule::ModalExchange => {
            let p = loop {
                let j = g.judgement();
                if list(&j.ctx, ns).len() >= 2 {
                    break j;
                }
            };
            let pos = g.rng().gen_range(0..list(&p.ctx, ns).len() - 1);
            Instance {

                sys: System::V1,
                ctx: p.ctx,
                term: p.term,
                ty: p.ty,
                transform: Transform::Exchange { ns, pos },
            }
        }
        Rule::Contraction | Rule::ModalContraction => {
            let p = premise_with(&mut g, ns);
            let var = list(&p.ctx, ns).choose(g.rng()).unwrap().0.clone();
            let fresh = Name::new(if ns == Ns::Modal { "m" } else { "w" });
            let seed = g.rng().gen();
            Instance {

                sys: System::V1,
                ctx: p.ctx,
                term: p.term,
                ty: p.ty,
                transform: Transform::Contract { ns, var, fresh, seed },
            }
        }
        Rule::Cut | Rule::ModalCut => {
            let p = premise_with(&mut g, ns);
            let (var, a) = list(&p.ctx, ns).choose(g.rng()).unwrap().clone();
            let mut rest = p.ctx.clone();
            list_mut(&mut rest, ns).retain(|(m, _)| *m != var);
            if ns == Ns::Modal {
                rest.ordinary.clear();
            }
            let n = g.term_in(&rest, &a).unwrap_or_else(|| fallback(&a));
            Instance {

                sys: System::V1,
                ctx: p.ctx,
                term: p.term,
                ty: p.ty,
                transform: Transform::Cut { ns, var, n, n_sys: System::V1, out_sys: System::V1 },
            }
        }
        Rule::IntToExt => {
            g.set_system(System::V2(Judgement::Int));
            let p = g.judgement();
            Instance {

                sys: System::V2(Judgement::Int),
                ctx: p.ctx,
                term: p.term,
                ty: p.ty,
                transform: Transform::Reflavour { to: System::V2(Judgement::Ext) },
            }
        }
        Rule::CutExt | Rule::CutInt | Rule::ModalCutV2 => {
            let j = random_flavour(g.rng());
            g.set_system(System::V2(j));
            let p = premise_with(&mut g, ns);
            let (var, a) = list(&p.ctx, ns).choose(g.rng()).unwrap().clone();
            let mut rest = p.ctx.clone();
            list_mut(&mut rest, ns).retain(|(m, _)| *m != var);
            if ns == Ns::Modal {
                rest.ordinary.clear();
            }
            let (n_j, out) = match rule {
                Rule::CutExt => (Judgement::Ext, System::V2(Judgement::Ext)),
                _ => (Judgement::Int, System::V2(j)),
            };
            g.set_system(System::V2(n_j));
            let n = g.term_in(&rest, &a).unwrap_or_else(|| fallback(&a));
            Instance {

                sys: System::V2(j),
                ctx: p.ctx,
                term: p.term,
                ty: p.ty,
                transform: Transform::Cut { ns, var, n, n_sys: System::V2(n_j), out_sys: out },
            }
        }
    }
}

/// A closed inhabitant, used when the generator cannot fit the size bound.
fn fallback(a: &Ty) -> Term {
    match a {
        Ty::Nat => Term::Num(0),
        Ty::Bool => Term::True,
        Ty::File => Term::app(
            Term::Const(crate::syntax::Constant::In),
            Term::boxed(Term::lam("f", Ty::File, Term::var("f"))),
        ),
        Ty::Arrow(d, c) => Term::Lam(Name::new("x"), (**d).clone(), fallback(c).into()),
        Ty::Prod(l, r) => Term::pair(fallback(l), fallback(r)),
        Ty::Boxed(b) => Term::boxed(fallback(b)),
    }
}

fn corpus_judgements(checker: &Checker) -> Vec<Generated> {
    corpus::entries()
        .iter()
        .filter_map(|e| {
            let src = e.source().ok()?;
            let ty = checker.check_v1(&src.context, &src.term).ok()?;
            Some(Generated { ctx: src.context, term: src.term, ty })
        })
        .collect()
}

/// Runs `n` instances of every admissible rule, generated from `seed`.
pub fn admissibility_suite(seed: u64, n: usize) -> AdmissibilityReport {
    let checker = Checker::default();
    let corpus = corpus_judgements(&checker);
    let jobs: Vec<(Rule, usize)> = Rule::ALL.iter().flat_map(|&r| (0..n).map(move |i| (r, i))).collect();
    let results: Vec<(Rule, bool, Option<Failure>)> = jobs
        .par_iter()
        .map(|&(rule, i)| {
            let inst = instance(rule, seed, i, &corpus);
            match inst.run(&checker) {
                Outcome::Vacuous => (rule, false, None),
                Outcome::Holds => (rule, true, None),
                Outcome::Fails { .. } => {
                    let small = shrink(inst, &checker);
                    let Outcome::Fails { ctx, term, error } = small.run(&checker) else {
                        unreachable!("shrinking keeps a failing instance")
                    };
                    let failure = Failure {
                        rule,
                        premise_context: ctx_string(&small.ctx),
                        premise: small.term.to_string(),
                        premise_type: small.ty.to_string(),
                        conclusion_context: ctx_string(&ctx),
                        conclusion: term.to_string(),
                        error,
                    };
                    (rule, true, Some(failure))
                }
            }
        })
        .collect();
    let mut report = AdmissibilityReport::default();
    for r in Rule::ALL {
        report.instances.insert(r, 0);
    }
    for (rule, counted, failure) in results {
        if counted {
            *report.instances.entry(rule).or_default() += 1;
        }
        report.failures.extend(failure);
    }
    report
}
