//! One-step reduction, its compatible closure, strategies and traces.
//!
//! No rule ever fires inside a `box` body or a `fix` body.

pub mod registry;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use registry::{CondCongruence, IntensionalOp, Mode, Registry, RegistryConfig, RegistryError, ResultKind};

use crate::syntax::{canonical, replace_child, subst, Constant, Path, Term, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "box-beta")]
    BoxBeta,
    #[serde(rename = "box-fix")]
    BoxFix,
    #[serde(rename = "box-int")]
    BoxInt,
    #[serde(rename = "cond-true")]
    CondTrue,
    #[serde(rename = "cond-false")]
    CondFalse,
    #[serde(rename = "delta-succ")]
    Succ,
    #[serde(rename = "delta-pred")]
    Pred,
    #[serde(rename = "delta-zero?")]
    IsZero,
    #[serde(rename = "out-in")]
    OutIn,
    #[serde(rename = "fst")]
    Fst,
    #[serde(rename = "snd")]
    Snd,
    #[serde(rename = "infect")]
    Infect,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Beta => "beta",
            Rule::BoxBeta => "box-beta",
            Rule::BoxFix => "box-fix",
            Rule::BoxInt => "box-int",
            Rule::CondTrue => "cond-true",
            Rule::CondFalse => "cond-false",
            Rule::Succ => "delta-succ",
            Rule::Pred => "delta-pred",
            Rule::IsZero => "delta-zero?",
            Rule::OutIn => "out-in",
            Rule::Fst => "fst",
            Rule::Snd => "snd",
            Rule::Infect => "infect",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One reduct together with the rule that produced it and where it fired.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub term: Term,
    pub rule: Rule,
    pub path: Path,
}

/// Contractions at the root of `m`.
pub fn root_steps(m: &Term, reg: &Registry) -> Vec<(Term, Rule)> {
    let mut out = Vec::new();
    match m {
        Term::App(f, a) => {
            match (&**f, &**a) {
                (Term::Lam(x, _, body), _) => out.push((subst(body, a, &Var::ord(x.clone())), Rule::Beta)),
                (Term::Op(name), Term::Boxed(code)) => {
                    if let Some(t) = fire_op(name, code, reg) {
                        out.push((t, Rule::BoxInt));
                    }
                }
                (Term::Succ, Term::Num(n)) => out.push((Term::Num(n + 1), Rule::Succ)),
                (Term::Pred, Term::Num(n)) => out.push((Term::Num(n.saturating_sub(1)), Rule::Pred)),
                (Term::IsZero, Term::Num(n)) => {
                    out.push((if *n == 0 { Term::True } else { Term::False }, Rule::IsZero))
                }
                (Term::Const(Constant::Out), Term::App(g, inner)) if **g == Term::Const(Constant::In) => {
                    out.push(((**inner).clone(), Rule::OutIn))
                }
                _ => {}
            }
            if reg.infect {
                if let Term::App(g, code) = &**f {
                    if let (Term::Const(Constant::Infect), Term::Boxed(v)) = (&**g, &**code) {
                        if v.is_closed() && a.is_closed() && step_all(a, reg).is_empty() {
                            out.push((registry::infect(v, a), Rule::Infect));
                        }
                    }
                }
            }
        }
        Term::LetBox(u, s, body) => {
            if let Term::Boxed(code) = &**s {
                out.push((subst(body, code, &Var::modal(u.clone())), Rule::BoxBeta));
            }
        }
        Term::Fix(z, body) => {
            out.push((subst(body, &Term::boxed(m.clone()), &Var::ord(z.clone())), Rule::BoxFix));
        }
        Term::Cond(b, t, e) => match &**b {
            Term::True => out.push(((**t).clone(), Rule::CondTrue)),
            Term::False => out.push(((**e).clone(), Rule::CondFalse)),
            _ => {}
        },
        Term::Fst(p) => {
            if let Term::Pair(a, _) = &**p {
                out.push(((**a).clone(), Rule::Fst));
            }
        }
        Term::Snd(p) => {
            if let Term::Pair(_, b) = &**p {
                out.push(((**b).clone(), Rule::Snd));
            }
        }
        _ => {}
    }
    out
}

/// The □int contraction `~f (box code)`, if the operation fires.
pub fn fire_op(name: &crate::Name, code: &Term, reg: &Registry) -> Option<Term> {
    let op = reg.get(name)?;
    let closed = code.is_closed();
    if op.mode == Mode::Safe && !closed {
        return None;
    }
    debug_assert!(op.mode == Mode::Unsafe || closed);
    let r = (op.func)(code, reg)?;
    Some(match op.result {
        ResultKind::Boxed => Term::boxed(r),
        ResultKind::Bare => r,
    })
}

/// Indices of the children of `m` that admit congruence steps.
pub fn congruence_positions(m: &Term, reg: &Registry) -> &'static [u8] {
    match m {
        Term::Lam(..) | Term::Fst(_) | Term::Snd(_) => &[0],
        Term::App(..) | Term::Pair(..) | Term::LetBox(..) => &[0, 1],
        Term::Cond(..) => match reg.cond_congruence {
            CondCongruence::All => &[0, 1, 2],
            CondCongruence::ScrutineeOnly => &[0],
        },
        _ => &[],
    }
}

/// Every one-step reduct, in leftmost-outermost order: the root first,
/// then each reducible child from left to right.
pub fn step_all(m: &Term, reg: &Registry) -> Vec<Step> {
    let mut out: Vec<Step> = root_steps(m, reg)
        .into_iter()
        .map(|(term, rule)| Step { term, rule, path: Path::root() })
        .collect();
    for &i in congruence_positions(m, reg) {
        let child = m.children().nth(i as usize).expect("congruence position");
        for s in step_all(child, reg) {
            out.push(Step { term: replace_child(m, i, s.term), rule: s.rule, path: s.path.prepend(i) });
        }
    }
    out
}

/// The leftmost-outermost step, i.e. the first element of [`step_all`].
pub fn normal_step(m: &Term, reg: &Registry) -> Option<Step> {
    if let Some((term, rule)) = root_steps(m, reg).into_iter().next() {
        return Some(Step { term, rule, path: Path::root() });
    }
    for &i in congruence_positions(m, reg) {
        let child = m.children().nth(i as usize).expect("congruence position");
        if let Some(s) = normal_step(child, reg) {
            return Some(Step { term: replace_child(m, i, s.term), rule: s.rule, path: s.path.prepend(i) });
        }
    }
    None
}

/// Weak-head step: the root, else the head of an application, the
/// scrutinee of a `let box` or conditional, or the argument of a strict
/// constant (`succ`, `pred`, `zero?`, `~f`, `@out`, projections).
pub fn weak_head_step(m: &Term, reg: &Registry) -> Option<Step> {
    if let Some((term, rule)) = root_steps(m, reg).into_iter().next() {
        return Some(Step { term, rule, path: Path::root() });
    }
    let pos = match m {
        Term::App(f, _) if is_strict(f) => 1,
        Term::App(..) | Term::LetBox(..) | Term::Cond(..) | Term::Fst(_) | Term::Snd(_) => 0,
        _ => return None,
    };
    let child = m.children().nth(pos as usize)?;
    let s = weak_head_step(child, reg)?;
    Some(Step { term: replace_child(m, pos, s.term), rule: s.rule, path: s.path.prepend(pos) })
}

fn is_strict(f: &Term) -> bool {
    matches!(f, Term::Succ | Term::Pred | Term::IsZero | Term::Op(_) | Term::Const(Constant::Out))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    NormalOrder,
    WeakHead,
}

impl Strategy {
    pub fn step(self, m: &Term, reg: &Registry) -> Option<Step> {
        match self {
            Strategy::NormalOrder => normal_step(m, reg),
            Strategy::WeakHead => weak_head_step(m, reg),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::NormalOrder => "normal-order",
            Strategy::WeakHead => "weak-head",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "normal-order" | "normal" => Ok(Strategy::NormalOrder),
            "weak-head" | "whnf" => Ok(Strategy::WeakHead),
            _ => Err(format!("unknown strategy `{s}` (expected normal-order or weak-head)")),
        }
    }
}

/// Step budget used when none is given.
pub const DEFAULT_FUEL: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Verdict {
    NormalForm,
    FuelExhausted,
    /// The last term is α-equivalent to the one `period` steps earlier.
    CycleDetected { period: usize },
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::NormalForm => f.write_str("normal-form"),
            Verdict::FuelExhausted => f.write_str("fuel-exhausted"),
            Verdict::CycleDetected { period } => write!(f, "cycle-detected({period})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub rule: Rule,
    pub path: Path,
    /// The term after the step.
    pub term: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub start: Term,
    pub steps: Vec<TraceStep>,
    pub verdict: Verdict,
}

impl Trace {
    pub fn last(&self) -> &Term {
        self.steps.last().map_or(&self.start, |s| &s.term)
    }

    /// All terms along the trace, starting term included.
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        std::iter::once(&self.start).chain(self.steps.iter().map(|s| &s.term))
    }

    /// True if some term of the trace is α-equivalent to `t`.
    pub fn reaches(&self, t: &Term) -> bool {
        let c = canonical(t);
        self.terms().any(|s| canonical(s) == c)
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.start)?;
        for s in &self.steps {
            writeln!(f, "{} @ {}  ⊢  {}", s.rule, s.path, s.term)?;
        }
        write!(f, "{}", self.verdict)
    }
}

#[derive(Serialize)]
struct TraceJson<'a> {
    start: String,
    steps: Vec<StepJson<'a>>,
    verdict: &'a Verdict,
}

#[derive(Serialize)]
struct StepJson<'a> {
    rule: &'a Rule,
    path: &'a [u8],
    term: String,
}

impl Serialize for Trace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TraceJson {
            start: self.start.to_string(),
            steps: self
                .steps
                .iter()
                .map(|st| StepJson { rule: &st.rule, path: &st.path.0, term: st.term.to_string() })
                .collect(),
            verdict: &self.verdict,
        }
        .serialize(s)
    }
}

/// Runs `strategy` from `m` for at most `fuel` steps, stopping early at a
/// normal form or when a term α-equivalent to an earlier one recurs.
pub fn reduce(m: &Term, strategy: Strategy, fuel: usize, reg: &Registry) -> Trace {
    let mut seen: HashMap<Term, usize> = HashMap::new();
    seen.insert(canonical(m), 0);
    let mut steps = Vec::new();
    let mut cur = m.clone();
    for i in 1..=fuel {
        let Some(s) = strategy.step(&cur, reg) else {
            return Trace { start: m.clone(), steps, verdict: Verdict::NormalForm };
        };
        cur = s.term.clone();
        steps.push(TraceStep { rule: s.rule, path: s.path, term: s.term });
        if let Some(&j) = seen.get(&canonical(&cur)) {
            return Trace { start: m.clone(), steps, verdict: Verdict::CycleDetected { period: i - j } };
        }
        seen.insert(canonical(&cur), i);
    }
    let verdict = if strategy.step(&cur, reg).is_none() { Verdict::NormalForm } else { Verdict::FuelExhausted };
    Trace { start: m.clone(), steps, verdict }
}

/// Closes a term under [`step_all`] up to `depth` steps.
pub fn reachable(m: &Term, depth: usize, reg: &Registry) -> crate::syntax::AlphaSet {
    let mut set = crate::syntax::AlphaSet::new();
    set.insert(m.clone());
    let mut frontier = vec![m.clone()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for t in &frontier {
            for s in step_all(t, reg) {
                if set.insert(s.term.clone()) {
                    next.push(s.term);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    set
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PorError {
    #[error("fuel exhausted after {0} steps")]
    FuelExhausted(usize),
    #[error("por stopped at `{0}`, which is not a boolean")]
    Stuck(Term),
}

/// Runs the corpus `por` on two closed `[]Bool` codes.
pub fn por_demo(x: &Term, y: &Term, fuel: usize, reg: &Registry) -> Result<bool, PorError> {
    let m = Term::apps(crate::corpus::por(), [x.clone(), y.clone()]);
    let t = reduce(&m, Strategy::NormalOrder, fuel, reg);
    match (t.verdict, t.last()) {
        (Verdict::NormalForm, Term::True) => Ok(true),
        (Verdict::NormalForm, Term::False) => Ok(false),
        (Verdict::NormalForm, other) => Err(PorError::Stuck(other.clone())),
        _ => Err(PorError::FuelExhausted(t.steps.len())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse, parse_in, DualContext, Ty};

    fn reg() -> Registry {
        Registry::default()
    }

    fn steps(src: &str) -> Vec<(String, Rule)> {
        step_all(&parse(src).unwrap(), &reg()).into_iter().map(|s| (s.term.to_string(), s.rule)).collect()
    }

    #[test]
    fn root_rules() {
        assert_eq!(steps("let box u = box true in u"), vec![("true".into(), Rule::BoxBeta)]);
        assert_eq!(steps("pred 0"), vec![("0".into(), Rule::Pred)]);
        assert_eq!(steps("pred 3"), vec![("2".into(), Rule::Pred)]);
        assert_eq!(steps("zero? 0"), vec![("true".into(), Rule::IsZero)]);
        assert_eq!(steps("succ 4"), vec![("5".into(), Rule::Succ)]);
        assert_eq!(steps("if false then 1 else 2"), vec![("2".into(), Rule::CondFalse)]);
        assert_eq!(steps("@out (@in f)"), vec![("f".into(), Rule::OutIn)]);
        if cfg!(feature = "products") {
            assert_eq!(steps("fst (1, 2)"), vec![("1".into(), Rule::Fst)]);
        }
    }

    #[test]
    fn omega_unfolds_once() {
        let s = steps(r"fix z. (\x:[]Nat. let box y = x in y) z");
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].1, Rule::BoxFix);
        assert_eq!(s[0].0, r"(\x:[]Nat. let box y = x in y) (box fix z. (\x:[]Nat. let box y = x in y) z)");
    }

    #[test]
    fn nothing_under_box_or_fix() {
        assert!(steps(r"box ((\x:Nat. x) y)").is_empty());
        let inner = steps(r"fix z. \w:Nat. (\x:Nat. x) w");
        assert_eq!(inner.len(), 1);
        assert_eq!(inner[0].1, Rule::BoxFix);
    }

    #[test]
    fn congruence_paths() {
        let m = parse(r"(\x:Nat. x) ((\y:Nat. y) 1)").unwrap();
        let s = step_all(&m, &reg());
        let paths: Vec<String> = s.iter().map(|s| s.path.to_string()).collect();
        assert_eq!(paths, vec!["ε", "1"]);
        assert_eq!(normal_step(&m, &reg()).unwrap(), s[0]);
    }

    #[test]
    fn cond_congruence_modes() {
        let m = parse(r"if b then (\x:Nat. x) 1 else 2").unwrap();
        assert_eq!(step_all(&m, &reg()).len(), 1);
        let r = reg().with_cond_congruence(CondCongruence::ScrutineeOnly);
        assert!(step_all(&m, &r).is_empty());
    }

    #[test]
    fn safe_ops_wait_for_closed_code() {
        let ctx = DualContext::empty().with_modal("u", Ty::Nat);
        let m = parse_in("~is-app (box u)", &ctx).unwrap();
        assert!(step_all(&m, &Registry::with_is_app(Mode::Safe)).is_empty());
        let s = step_all(&m, &Registry::with_is_app(Mode::Unsafe));
        assert_eq!(s[0].term, Term::False);
        assert_eq!(steps("~done? (box true)"), vec![("true".into(), Rule::BoxInt)]);
    }

    #[test]
    fn tick_takes_one_normal_order_step() {
        let omega = r"fix z. (\x:[]Bool. let box y = x in y) z";
        let m = parse(&format!("~tick (box {omega})")).unwrap();
        let s = step_all(&m, &reg());
        assert_eq!(s.len(), 1);
        let inner = normal_step(&parse(omega).unwrap(), &reg()).unwrap().term;
        assert_eq!(s[0].term, Term::boxed(inner));
        assert_eq!(steps("~tick (box true)"), vec![("box true".into(), Rule::BoxInt)]);
    }

    #[test]
    fn omega_cycles() {
        let m = parse(r"fix z. (\x:[]Bool. let box y = x in y) z").unwrap();
        let t = reduce(&m, Strategy::NormalOrder, 100, &reg());
        assert_eq!(t.verdict, Verdict::CycleDetected { period: 3 });
        let rules: Vec<Rule> = t.steps.iter().map(|s| s.rule).collect();
        assert_eq!(rules, vec![Rule::BoxFix, Rule::Beta, Rule::BoxBeta]);
    }

    #[test]
    fn weak_head_stops_at_lambda() {
        let m = parse(r"(\x:Nat. \y:Nat. (\w:Nat. w) x) 1").unwrap();
        let t = reduce(&m, Strategy::WeakHead, 10, &reg());
        assert_eq!(t.verdict, Verdict::NormalForm);
        assert_eq!(t.steps.len(), 1);
        let t = reduce(&parse("succ ((\\x:Nat. x) 1)").unwrap(), Strategy::WeakHead, 10, &reg());
        assert_eq!(t.last(), &Term::Num(2));
    }

    #[test]
    fn fuel_zero() {
        let m = parse("succ 1").unwrap();
        assert_eq!(reduce(&m, Strategy::NormalOrder, 0, &reg()).verdict, Verdict::FuelExhausted);
        assert_eq!(reduce(&Term::True, Strategy::NormalOrder, 0, &reg()).verdict, Verdict::NormalForm);
    }

    #[test]
    fn trace_lines() {
        let t = reduce(&parse("let box u = box 1 in succ u").unwrap(), Strategy::NormalOrder, 10, &reg());
        let text = t.to_string();
        assert_eq!(
            text,
            "let box u = box 1 in succ u\nbox-beta @ ε  ⊢  succ 1\ndelta-succ @ ε  ⊢  2\nnormal-form"
        );
    }

    #[test]
    fn infection_fires_only_when_enabled() {
        let m = parse(r"@infect (box \g:File. g) (@in (box \h:File. h))").unwrap();
        assert!(step_all(&m, &reg()).is_empty());
        let s = step_all(&m, &reg().with_infect(true));
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].rule, Rule::Infect);
    }
}
