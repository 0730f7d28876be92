use pca::gen::TermGen;
use pca::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lambda_star_always_denotes(seed in any::<u64>(), size in 1usize..24) {
        let mut gen = TermGen::new(seed);
        let e = gen.term(size, Some("x"));
        let abs = lambda_star("x", &e);
        prop_assert!(abs.is_weak_normal());
        prop_assert!(abs.is_closed());
        let again = eval(&abs, 0);
        prop_assert_eq!(again.value(), Some(&abs));
    }

    #[test]
    fn sharing_does_not_change_values(seed in any::<u64>(), size in 1usize..20) {
        let t = TermGen::new(seed).term(size, None);
        if let EvalOutcome::Value { term, steps } = eval_small_step(&t, 3_000) {
            match eval(&t, 3_000) {
                EvalOutcome::Value { term: shared, steps: fewer } => {
                    prop_assert_eq!(shared, term);
                    prop_assert!(fewer <= steps);
                }
                EvalOutcome::Diverged { .. } => prop_assert!(false, "{} diverged with sharing", t),
            }
        }
    }

    #[test]
    fn values_are_stable(seed in any::<u64>(), size in 1usize..20) {
        let t = TermGen::new(seed).term(size, None);
        if let Some(v) = eval(&t, 2_000).value() {
            prop_assert!(v.is_weak_normal());
            let again = eval(v, 2_000);
            prop_assert_eq!(again.value(), Some(v));
        }
    }

    #[test]
    fn numerals_round_trip(n in 0u64..60) {
        prop_assert_eq!(decode_num(&encode_num(n), DEFAULT_FUEL), Ok(n));
    }

    #[test]
    fn smn_defining_equation(seed in any::<u64>()) {
        let mut gen = TermGen::new(seed);
        let p = gen.term(8, None);
        let a = gen.term(4, None);
        let y = gen.term(4, None);
        let s = smn(&p, &a);
        prop_assert!(s.is_weak_normal());
        let lhs = s.app(y.clone());
        let rhs = p.apps([a, y]);
        match (eval(&lhs, 4_000), eval(&rhs, 1_000)) {
            (_, EvalOutcome::Value { .. }) => {
                prop_assert_ne!(equiv(&lhs, &rhs, 6, 20_000), Some(false));
            }
            (l, EvalOutcome::Diverged { .. }) => {
                // specializing never makes a program faster
                prop_assert!(eval(&lhs, 1_000).is_diverged(), "{}", l);
            }
        }
    }
}
