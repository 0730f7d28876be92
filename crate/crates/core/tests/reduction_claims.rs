use ipcf::corpus;
use ipcf::reduction::{por_demo, reduce, step_all, Mode, Registry, Rule, Strategy, Verdict};
use ipcf::syntax::{alpha_eq, parse, parse_in, DualContext, Term, Ty};

fn reg() -> Registry {
    Registry::default()
}

#[test]
fn omega_returns_to_itself() {
    let omega = corpus::omega(&Ty::Bool);
    let t = reduce(&omega, Strategy::NormalOrder, 100, &reg());
    match t.verdict {
        Verdict::CycleDetected { period } => assert!(period <= 4),
        v => panic!("expected a cycle, got {v}"),
    }
    // the first step is the unfolding to eval (box omega)
    let eval = corpus::eval(&Ty::Bool);
    assert!(alpha_eq(&t.steps[0].term, &Term::app(eval, Term::boxed(omega.clone()))));
    assert!(alpha_eq(t.last(), &omega));
}

#[test]
fn y_lob_on_code() {
    let ctx = DualContext::empty().with_modal("m", Ty::arrow(Ty::boxed(Ty::Nat), Ty::Nat));
    let m = parse_in("m", &ctx).unwrap();
    let t = reduce(&Term::app(corpus::y_lob(&Ty::Nat), Term::boxed(m.clone())), Strategy::NormalOrder, 50, &reg());
    assert_eq!(t.verdict, Verdict::NormalForm);
    let want = Term::boxed(Term::fix("z", Term::app(m, Term::var("z"))));
    assert!(alpha_eq(t.last(), &want), "{}", t.last());
}

#[test]
fn y_pcf_unfolds() {
    let y = corpus::y_pcf(&Ty::Nat);
    let t = reduce(&y, Strategy::NormalOrder, 50, &reg());
    let ev = parse(r"\x:[]((Nat -> Nat) -> Nat). let box y = x in y").unwrap();
    let f = Term::var("f");
    let want = Term::lam(
        "f",
        Ty::arrow(Ty::Nat, Ty::Nat),
        Term::app(f.clone(), Term::apps(ev, [Term::boxed(y.clone()), f.clone()])),
    );
    assert!(t.reaches(&want));
    // and further on, the extensional unfolding f (Y f)
    let want2 = Term::lam("f", Ty::arrow(Ty::Nat, Ty::Nat), Term::app(f.clone(), Term::app(y, f)));
    assert!(t.reaches(&want2));
}

#[test]
fn virus_passes_its_own_code() {
    let v = corpus::virus();
    let t = reduce(&v, Strategy::NormalOrder, 10, &reg());
    let want = Term::app(Term::Const(ipcf::syntax::Constant::Infect), Term::boxed(v));
    assert!(t.reaches(&want));
    assert_eq!(t.verdict, Verdict::NormalForm);
}

#[test]
fn por_cases() {
    let omega = corpus::omega(&Ty::Bool);
    let b = |t: Term| Term::boxed(t);
    let r = reg();
    assert_eq!(por_demo(&b(Term::True), &b(omega.clone()), 10_000, &r), Ok(true));
    assert_eq!(por_demo(&b(omega.clone()), &b(Term::True), 10_000, &r), Ok(true));
    assert_eq!(por_demo(&b(Term::False), &b(Term::False), 10_000, &r), Ok(false));
    // needs a few ticks before the left argument settles
    let slow = parse(r"(\a:Bool. \c:Bool. c) false ((\w:Bool. w) true)").unwrap();
    assert_eq!(por_demo(&b(slow), &b(omega.clone()), 10_000, &r), Ok(true));
    assert!(por_demo(&b(Term::False), &b(omega), 2_000, &r).is_err());
}

#[test]
fn done_and_is_app() {
    let m = parse("~done? (box true)").unwrap();
    assert_eq!(reduce(&m, Strategy::NormalOrder, 5, &reg()).last(), &Term::True);
    let ctx = DualContext::empty().with_modal("u", Ty::Nat);
    let open = parse_in("~is-app (box u)", &ctx).unwrap();
    assert!(step_all(&open, &Registry::with_is_app(Mode::Safe)).is_empty());
}

#[test]
fn unsafe_counterexample_has_two_normal_forms() {
    let e = corpus::get("isapp").unwrap();
    let m = e.term();
    let unsafe_reg = e.registry();
    let reach = ipcf::reduction::reachable(&m, 10, &unsafe_reg);
    assert!(reach.contains(&Term::True));
    assert!(reach.contains(&Term::False));
    let safe = Registry::with_is_app(Mode::Safe);
    let reach = ipcf::reduction::reachable(&m, 10, &safe);
    let normal: Vec<&Term> = reach.iter().filter(|t| step_all(t, &safe).is_empty()).collect();
    assert_eq!(normal, vec![&Term::True]);
}

#[test]
fn equational_instances_are_joinable() {
    // beta, box-beta and box-fix unfoldings: both sides meet under normal order
    let pairs = [
        (r"(\x:Nat. succ x) 2", "succ 2"),
        ("let box u = box (succ 1) in succ u", "succ (succ 1)"),
        (r"fix z. \n:Nat. 0", r"(\n:Nat. 0)"),
    ];
    for (l, r) in pairs {
        let (l, r) = (parse(l).unwrap(), parse(r).unwrap());
        let tl = reduce(&l, Strategy::NormalOrder, 100, &reg());
        let tr = reduce(&r, Strategy::NormalOrder, 100, &reg());
        assert!(alpha_eq(tl.last(), tr.last()), "{} vs {}", tl.last(), tr.last());
    }
    let omega = corpus::omega(&Ty::Nat);
    let unfolded = step_all(&omega, &reg()).remove(0);
    assert_eq!(unfolded.rule, Rule::BoxFix);
    let t = reduce(&unfolded.term, Strategy::NormalOrder, 10, &reg());
    assert!(t.reaches(&omega));
}
