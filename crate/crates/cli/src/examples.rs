//! The shipped corpus and the behaviour expected of each entry. Every
//! expectation is recomputed when it is checked.

use ipcf::confluence::{joinable, triangle_check};
use ipcf::corpus::{self, Entry};
use ipcf::reduction::{por_demo, reachable, reduce, step_all, Mode, Registry, Strategy, Verdict};
use ipcf::syntax::{alpha_eq, parse, parse_in, Constant, Term, Ty};
use ipcf::typing::{Checker, ErrorKind, Judgement, System};

pub struct Check {
    pub what: String,
    pub ok: bool,
}

fn check(what: impl Into<String>, ok: bool) -> Check {
    Check { what: what.into(), ok }
}

fn nf(m: &Term, fuel: usize, reg: &Registry) -> Option<Term> {
    let t = reduce(m, Strategy::NormalOrder, fuel, reg);
    (t.verdict == Verdict::NormalForm).then(|| t.last().clone())
}

fn p(s: &str) -> Term {
    parse(s).expect("fixture parses")
}

fn v2_rejects(m: &Term, kind: ErrorKind) -> Vec<Check> {
    [Judgement::Int, Judgement::Ext]
        .into_iter()
        .map(|j| {
            let got = Checker::default().check_v2(&Default::default(), j, m).err().map(|e| e.kind);
            check(format!("v2/{j} rejects it with {kind}"), got == Some(kind))
        })
        .collect()
}

/// Runs every expectation attached to `entry`.
pub fn run(entry: &Entry) -> Vec<Check> {
    let mut out = Vec::new();
    let src = match entry.source() {
        Ok(s) => s,
        Err(e) => return vec![check(format!("parses ({e})"), false)],
    };
    let m = &src.term;
    let reg = entry.registry();
    let ty = Checker::for_registry(&reg).check_v1(&src.context, m);
    let shown = ty.as_ref().map(|t| t.to_string()).unwrap_or_else(|e| e.to_string());
    out.push(check(format!("v1 type {} (got {shown})", entry.ty), shown == entry.ty));
    let reparsed = parse_in(&m.to_string(), &src.context).map(|r| alpha_eq(&r, m)).unwrap_or(false);
    out.push(check("printing parses back to the same term", reparsed));

    let safe = Registry::default();
    match entry.name {
        "ax_k" => {
            let applied = Term::apps(m.clone(), [p(r"box (\x:Nat. succ x)"), p("box 1")]);
            let want = p(r"box ((\x:Nat. succ x) 1)");
            out.push(check("ax_k (box f) (box a) reaches box (f a)", nf(&applied, 100, &safe).is_some_and(|t| alpha_eq(&t, &want))));
        }
        "eval" => {
            let applied = Term::app(m.clone(), p("box (succ 2)"));
            out.push(check("eval (box (succ 2)) reaches 3", nf(&applied, 100, &safe) == Some(Term::Num(3))));
            let ok = Checker::default().check_v2(&Default::default(), Judgement::Ext, m).is_ok();
            out.push(check("v2/ext accepts it", ok));
        }
        "quote" => {
            let applied = Term::app(m.clone(), p("box 1"));
            out.push(check("quote (box 1) reaches box (box 1)", nf(&applied, 100, &safe).is_some_and(|t| alpha_eq(&t, &p("box (box 1)")))));
        }
        "omega" => {
            let t = reduce(m, Strategy::NormalOrder, 100, &safe);
            let ok = matches!(t.verdict, Verdict::CycleDetected { period } if period <= 4);
            out.push(check(format!("normal order cycles with period at most 4 ({})", t.verdict), ok));
        }
        "ylob" => {
            let code = p(r"box (\c:[]Nat. 0)");
            let want = p(r"box (fix z. (\c:[]Nat. 0) z)");
            let got = nf(&Term::app(m.clone(), code), 100, &safe);
            out.push(check("ylob (box M) reaches box (fix z. M z)", got.is_some_and(|t| alpha_eq(&t, &want))));
            out.extend(v2_rejects(m, ErrorKind::FixContextViolation));
        }
        "ypcf" => {
            let t = reduce(m, Strategy::NormalOrder, 50, &safe);
            let f = Term::var("f");
            let want = Term::lam("f", Ty::arrow(Ty::Nat, Ty::Nat), Term::app(f.clone(), Term::app(m.clone(), f)));
            out.push(check("Y reaches \\f. f (Y f)", t.reaches(&want)));
            out.extend(v2_rejects(m, ErrorKind::LambdaInIntWithContext));
        }
        "por" => {
            let omega = Term::boxed(corpus::omega(&Ty::Bool));
            let cases = [
                (Term::boxed(Term::True), omega.clone(), true),
                (omega, Term::boxed(Term::True), true),
                (Term::boxed(Term::False), Term::boxed(Term::False), false),
            ];
            for (x, y, want) in cases {
                let got = por_demo(&x, &y, 10_000, &safe);
                out.push(check(format!("por ({x}) ({y}) = {want}"), got == Ok(want)));
            }
        }
        "virus" => {
            let t = reduce(m, Strategy::NormalOrder, 10, &safe);
            let want = Term::app(Term::Const(Constant::Infect), Term::boxed(m.clone()));
            out.push(check("virus reaches infect (box virus)", t.reaches(&want)));
        }
        "isapp" => {
            let unsafe_reg = Registry::with_is_app(Mode::Unsafe);
            let reach = reachable(m, 10, &unsafe_reg);
            out.push(check("unsafe: reaches true", reach.contains(&Term::True)));
            out.push(check("unsafe: reaches false", reach.contains(&Term::False)));
            out.push(check("unsafe: true and false do not join", joinable(&Term::True, &Term::False, 4, &unsafe_reg).is_none()));
            let safe_reg = Registry::with_is_app(Mode::Safe);
            let reach = reachable(m, 10, &safe_reg);
            let normal: Vec<&Term> = reach.iter().filter(|t| step_all(t, &safe_reg).is_empty()).collect();
            out.push(check("safe: the only normal form is true", normal == [&Term::True]));
            out.push(check("safe: triangle holds", triangle_check(m, &safe_reg).passed()));
        }
        _ => {}
    }
    out
}

/// Type-checks under `sys`, with the entry's own registry.
pub fn type_in(entry: &Entry, sys: System) -> Result<Ty, String> {
    let src = entry.source().map_err(|e| e.to_string())?;
    Checker::for_registry(&entry.registry()).check(sys, &src.context, &src.term).map_err(|e| e.to_string())
}
