use pca::gen::TermGen;
use pca::syntax::parse;
use pca::*;
use pca::PcaTerm::{K, S};

const FUEL: usize = DEFAULT_FUEL;

fn o(t: &str) -> PcaTerm {
    PcaTerm::opaque(t)
}

/// Full tree equality of two finite values.
fn same(a: &PcaTerm, b: &PcaTerm) -> bool {
    equiv(a, b, usize::MAX, FUEL) == Some(true)
}

fn value(t: &PcaTerm) -> PcaTerm {
    eval(t, FUEL).value().cloned().unwrap_or_else(|| panic!("{t} diverged"))
}

#[test]
fn printed_encoding_equalities() {
    let (x, y, z) = (o("x"), o("y"), o("z"));
    assert_eq!(value(&fst().app(pair().apps([x.clone(), y.clone()]))), x);
    assert_eq!(value(&snd().app(pair().apps([x.clone(), y.clone()]))), y);
    assert_eq!(value(&ite().apps([tru(), y.clone(), z.clone()])), y);
    assert_eq!(value(&ite().apps([fls(), y.clone(), z.clone()])), z);
    assert_eq!(value(&iszero().app(encode_num(0))), tru());
    for n in 0..8 {
        assert_eq!(value(&iszero().app(encode_num(n + 1))), fls());
        assert!(same(&succ().app(encode_num(n)), &encode_num(n + 1)));
        assert!(!same(&succ().app(encode_num(n)), &encode_num(n)));
        assert_eq!(value(&pred().app(encode_num(n + 1))), encode_num(n));
    }
    assert_eq!(value(&pred().app(encode_num(0))), encode_num(0));
    assert_eq!(value(&K.app(x.clone()).app(y.clone())), x);
    assert_eq!(value(&identity().app(x.clone())), x);
}

#[test]
fn pred_of_succ_by_small_steps() {
    // the reference small-step evaluator agrees with the shared one
    let t = pred().app(succ().app(encode_num(3)));
    let small = eval_small_step(&t, FUEL).value().cloned().unwrap();
    assert_eq!(small, encode_num(3));
    assert_eq!(value(&t), small);
    assert_eq!(decode_num(&small, FUEL), Ok(3));
}

#[test]
fn lambda_star_examples() {
    assert_eq!(lambda_star("x", &PcaTerm::var("x")).to_string(), "S K K");
    assert_eq!(lambda_star("x", &K).to_string(), "K K");
    let xx = PcaTerm::var("x").app(PcaTerm::var("x"));
    for w in [o("w"), o("w").app(o("v")), o("w").app(K)] {
        let lhs = pca_apply(&lambda_star("x", &xx), &w, 100);
        assert_eq!(lhs.value(), Some(&w.clone().app(w.clone())));
    }
}

#[test]
fn combinatory_completeness() {
    let mut gen = TermGen::new(0xC0DE);
    let (mut agree_value, mut agree_div, mut undecided) = (0, 0, 0);
    for _ in 0..400 {
        let (e, a) = gen.completeness_pair("x", 14);
        let abs = lambda_star("x", &e);
        assert!(abs.is_weak_normal() && abs.is_closed(), "{abs}");
        let direct = eval_small_step(&e.subst("x", &a), 2_000);
        // bracket abstraction costs at most a few steps per node
        let via = pca_apply(&abs, &a, 2_000 * 4 * (e.size() + 1));
        match (&direct, &via) {
            (EvalOutcome::Value { term: d, .. }, EvalOutcome::Value { term: v, .. }) => {
                match equiv(d, v, usize::MAX, 20_000) {
                    Some(true) => agree_value += 1,
                    Some(false) => panic!("{e} with x := {a}: {d} vs {v}"),
                    None => undecided += 1,
                }
            }
            (EvalOutcome::Diverged { .. }, _) => {
                assert!(pca_apply(&abs, &a, 2_000).is_diverged(), "{e} with x := {a}");
                agree_div += 1;
            }
            _ => panic!("{e} with x := {a}: {direct} vs {via}"),
        }
    }
    assert!(agree_value >= 300, "{agree_value} converging pairs, {agree_div} diverging, {undecided} undecided");
}

#[test]
fn smn_equation() {
    let a = o("a");
    for b in [o("b"), K, encode_num(2)] {
        assert_eq!(pca_apply(&smn(&K, &a), &b, 100).value(), Some(&a));
    }
    // smn(pair, x) y and pair x y select the same components
    let (x, y, p) = (o("x"), o("y"), o("p"));
    let lhs = eval(&smn(&pair(), &x).apps([y.clone(), p.clone()]), FUEL);
    let rhs = eval(&pair().apps([x.clone(), y.clone(), p.clone()]), FUEL);
    assert_eq!(lhs.value(), Some(&p.clone().apps([x.clone(), y.clone()])));
    assert!(lhs.agrees_with(&rhs));
    let pair_x = smn(&pair(), &x);
    for y in probes() {
        assert!(same(&pair_x.clone().app(y.clone()), &pair().apps([x.clone(), y])));
    }
    for q in [K, S, pair(), bottom(), o("q").app(bottom())] {
        assert!(smn(&q, &a).is_weak_normal());
    }
}

/// Fixed points of self-returning blueprints are infinite trees.
const SRT_DEPTH: usize = 12;

fn srt_agrees(f: &PcaTerm, args: &[PcaTerm]) {
    let e = kleene_fixed_point(f);
    for a in args {
        let lhs = pca_apply(&e, a, FUEL);
        let rhs = eval(&f.clone().apps([e.clone(), a.clone()]), FUEL);
        assert!(lhs.value().is_some() && rhs.value().is_some(), "{f} at {a}");
        let (l, r) = (lhs.value().unwrap(), rhs.value().unwrap());
        assert_eq!(equiv(l, r, SRT_DEPTH, FUEL), Some(true), "{f} at {a}: {l} vs {r}");
    }
}

fn probes() -> Vec<PcaTerm> {
    vec![o("a"), o("b").app(o("c")), encode_num(0), encode_num(3), K]
}

#[test]
fn kleene_code_ignoring() {
    let f = parse(r"\*e. \*x. x").unwrap();
    srt_agrees(&f, &probes());
    let e = kleene_fixed_point(&f);
    for a in probes() {
        assert_eq!(pca_apply(&e, &a, FUEL).value(), eval(&a, FUEL).value());
    }
}

#[test]
fn kleene_self_returning() {
    let f = parse(r"\*e. \*x. e").unwrap();
    srt_agrees(&f, &probes());
    let e = kleene_fixed_point(&f);
    let ea = e.clone().app(o("a"));
    for b in probes() {
        let eab = e.clone().apps([o("a"), b]);
        assert_eq!(equiv(&eab, &ea, SRT_DEPTH, FUEL), Some(true));
        assert_eq!(equiv(&eab, &e, SRT_DEPTH, FUEL), Some(true));
    }
    assert_eq!(equiv(&ea, &o("a"), SRT_DEPTH, FUEL), Some(false));
}

#[test]
fn kleene_countdown() {
    let f = parse(r"\*e. \*x. if (iszero x) #0 (e (pred x))").unwrap();
    srt_agrees(&f, &[encode_num(0), encode_num(1), encode_num(3), encode_num(6)]);
    let e = kleene_fixed_point(&f);
    assert_eq!(pca_apply(&e, &encode_num(3), FUEL).value(), Some(&encode_num(0)));
}

#[test]
fn rogers_demos() {
    let zero_fn = K.app(K.app(encode_num(0)));
    let e = rogers_fixed_point(&zero_fn);
    for a in probes() {
        assert_eq!(pca_apply(&e, &a, FUEL).value(), Some(&encode_num(0)));
        let ge = eval(&zero_fn.clone().app(e.clone()).app(a.clone()), FUEL);
        assert!(ge.agrees_with(&pca_apply(&e, &a, FUEL)));
    }

    let e = rogers_fixed_point(&identity());
    for a in probes() {
        assert!(pca_apply(&e, &a, FUEL).is_diverged());
    }

    // e a unfolds to succ (e a): the head is a pair, but the numeral never ends
    let g = parse(r"\*c. \*x. succ (c x)").unwrap();
    let e = rogers_fixed_point(&g);
    for a in [encode_num(0), o("a")] {
        let v = pca_apply(&e, &a, FUEL);
        assert!(v.value().is_some());
        assert_eq!(decode_num(v.value().unwrap(), FUEL), Err(PcaError::Diverged(FUEL)));
    }
}

#[test]
fn arithmetic_against_the_host() {
    for a in 0..6u64 {
        for b in 0..6u64 {
            let s = value(&add().apps([encode_num(a), encode_num(b)]));
            assert_eq!(decode_num(&s, FUEL), Ok(a + b));
            let p = value(&mult().apps([encode_num(a), encode_num(b)]));
            assert_eq!(decode_num(&p, FUEL), Ok(a * b));
        }
    }
}

#[test]
fn factorial_by_dovetailing() {
    let (out, log) = frt_lfp_with(&factorial_step, &bottom(), &encode_num(4), &FrtConfig::new(64));
    let v = out.value().expect("a value within 64 rounds");
    assert_eq!(decode_num(v, FUEL), Ok(24));
    let last = log.last().unwrap();
    assert!(last.round <= 64);
    // p_j n is defined exactly when j > n
    assert_eq!(last.produced, Some(5));
    assert!(log.iter().rev().skip(1).all(|r| r.produced.is_none()));

    // doubling the budget changes nothing
    let again = frt_lfp(&factorial_step, &bottom(), &encode_num(4), 128);
    assert_eq!(again, out);
    let (wide, _) = frt_lfp_with(&factorial_step, &bottom(), &encode_num(4), &FrtConfig { slice: 8, ..FrtConfig::new(128) });
    assert_eq!(decode_num(wide.value().unwrap(), FUEL), Ok(24));
}

#[test]
fn small_factorials() {
    let fact = [1, 1, 2, 6];
    for (n, want) in fact.iter().enumerate() {
        let out = frt_lfp(&factorial_step, &bottom(), &encode_num(n as u64), 64);
        assert_eq!(decode_num(out.value().unwrap(), FUEL), Ok(*want), "{n}!");
    }
}

#[test]
fn identity_and_constant_transformers() {
    let out = frt_lfp(&|p: &PcaTerm| p.clone(), &bottom(), &encode_num(2), 64);
    assert!(out.is_diverged());
    let five = encode_num(5);
    let k5 = K.app(five.clone());
    for n in [encode_num(0), encode_num(7), o("a")] {
        assert_eq!(frt_lfp(&|_| k5.clone(), &bottom(), &n, 8).value(), Some(&five));
    }
}

#[test]
fn chain_values_never_change() {
    // once p_j n is defined, every later approximant agrees with it
    for n in 0..4u64 {
        let mut p = bottom();
        let mut seen = None;
        for j in 0..(n as usize + 4) {
            let out = pca_apply(&p, &encode_num(n), FUEL);
            let got = out.value().map(|v| decode_num(v, FUEL).unwrap());
            match (seen, got) {
                (Some(s), g) => assert_eq!(g, Some(s), "p_{j} at {n}"),
                (None, g) => seen = g,
            }
            assert_eq!(got.is_some(), j > n as usize, "p_{j} at {n}");
            p = factorial_step(&p);
        }
    }
}

#[test]
fn surface_syntax_examples() {
    assert_eq!(value(&parse("fst (pair 'x 'y)").unwrap()), o("x"));
    assert_eq!(decode_num(&value(&parse("mult #3 #4").unwrap()), FUEL), Ok(12));
    assert!(eval(&parse("omega").unwrap(), 1000).is_diverged());
}
