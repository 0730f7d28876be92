use ipcf::confluence::{check_redp, check_substint, par_derivations, LemmaOutcome};
use ipcf::gen::{Gen, Generated, Profile};
use ipcf::reduction::{step_all, Registry};
use ipcf::syntax::{bfv, fv, ufv, DualContext, Ns, Var};
use ipcf::typing::check_v1;
use proptest::prelude::*;
use rand::Rng;

fn judgement(seed: u64) -> Generated {
    Gen::new(seed, Profile::default()).judgement()
}

/// The first `n` seeds whose judgement has a context variable of the wanted namespace.
fn with_var(ns: Ns, n: usize) -> Vec<(u64, Generated, Var, ipcf::Ty)> {
    let mut out = Vec::new();
    let mut seed = 0;
    while out.len() < n {
        seed += 1;
        let g = judgement(seed);
        let list = match ns {
            Ns::Ordinary => &g.ctx.ordinary,
            Ns::Modal => &g.ctx.modal,
        };
        if let Some((name, ty)) = list.first().cloned() {
            out.push((seed, g.clone(), Var { ns, name }, ty));
        }
    }
    out
}

#[test]
fn substint_by_replay() {
    let reg = Registry::default();
    let mut held = 0;
    for ns in [Ns::Modal, Ns::Ordinary] {
        for (seed, g, x, ty) in with_var(ns, 300) {
            let mut gen = Gen::new(seed ^ 0xABCD, Profile::default().max_size(8));
            let p = gen.term_in(&DualContext::empty(), &ty).expect("small closed term");
            let ds = par_derivations(&g.term, &reg);
            let d = &ds[gen.rng().gen_range(0..ds.len())];
            match check_substint(d, &x, &p, &reg) {
                LemmaOutcome::Holds => held += 1,
                LemmaOutcome::Vacuous => {}
                LemmaOutcome::Fails(why) => panic!("{} with {x} := {p}: {why}", d),
            }
        }
    }
    assert!(held >= 500, "only {held} instances");
}

#[test]
fn redp_by_replay() {
    let reg = Registry::default();
    let mut held = 0;
    for (seed, g, x, ty) in with_var(Ns::Ordinary, 600) {
        let mut gen = Gen::new(seed ^ 0x5EED, Profile::default().max_size(10));
        let p = gen.term_in(&g.ctx, &ty).expect("small term");
        let ds = par_derivations(&g.term, &reg);
        let es = par_derivations(&p, &reg);
        let d = &ds[gen.rng().gen_range(0..ds.len())];
        let e = &es[gen.rng().gen_range(0..es.len())];
        match check_redp(d, &x, e, &reg) {
            LemmaOutcome::Holds => held += 1,
            LemmaOutcome::Vacuous => {}
            LemmaOutcome::Fails(why) => panic!("{d} with {x} := {e}: {why}"),
        }
    }
    assert!(held >= 500, "only {held} instances");
}

#[test]
fn free_variable_identities() {
    for seed in 0..600 {
        let g = judgement(seed);
        let m = &g.term;
        let union: std::collections::BTreeSet<Var> = ufv(m).union(&bfv(m)).cloned().collect();
        assert_eq!(fv(m), union, "{m}");
        // only modal variables may occur under a box in a typed term
        let delta: Vec<_> = g.ctx.modal.iter().map(|(n, _)| Var::modal(n.clone())).collect();
        for v in bfv(m) {
            assert!(delta.contains(&v), "{v} in bfv of {m}");
        }
        assert!(check_v1(&g.ctx, m).is_ok());
    }
}

#[test]
fn bfv_shrinks_along_steps() {
    let reg = Registry::default();
    let mut n = 0;
    for seed in 0..600 {
        let m = judgement(seed).term;
        for s in step_all(&m, &reg) {
            n += 1;
            assert!(bfv(&s.term).is_subset(&bfv(&m)), "{m} -> {}", s.term);
        }
        for d in par_derivations(&m, &reg) {
            n += 1;
            assert!(bfv(&d.target()).is_subset(&bfv(&m)), "{m} => {}", d.target());
        }
    }
    assert!(n >= 500);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fv_splits(seed in any::<u64>()) {
        let m = judgement(seed).term;
        let union: std::collections::BTreeSet<Var> = ufv(&m).union(&bfv(&m)).cloned().collect();
        prop_assert_eq!(fv(&m), union);
    }

    #[test]
    fn steps_never_touch_box_bodies(seed in any::<u64>()) {
        let m = judgement(seed).term;
        for s in step_all(&m, &Registry::default()) {
            // the redex position never passes through a box or fix node
            let mut t = &m;
            for &i in &s.path.0 {
                prop_assert!(!matches!(t, ipcf::Term::Boxed(_) | ipcf::Term::Fix(..)));
                t = t.children().nth(i as usize).unwrap();
            }
        }
    }

    #[test]
    fn strategies_pick_from_step_all(seed in any::<u64>()) {
        let reg = Registry::default();
        let m = judgement(seed).term;
        let all = step_all(&m, &reg);
        for strat in [ipcf::reduction::Strategy::NormalOrder, ipcf::reduction::Strategy::WeakHead] {
            if let Some(s) = strat.step(&m, &reg) {
                prop_assert!(all.contains(&s));
                prop_assert_eq!(Some(s), strat.step(&m, &reg));
            }
        }
        prop_assert_eq!(ipcf::reduction::normal_step(&m, &reg), all.first().cloned());
    }

    #[test]
    fn safe_ops_fire_on_closed_code_only(seed in any::<u64>()) {
        let m = judgement(seed).term;
        for s in step_all(&m, &Registry::default()) {
            if s.rule == ipcf::reduction::Rule::BoxInt {
                let redex = m.subterm(&s.path).unwrap();
                prop_assert!(redex.is_closed());
            }
        }
    }
}

#[test]
fn one_step_reducts_keep_their_type() {
    let reg = Registry::default();
    let mut n = 0;
    for seed in 0..600 {
        let g = judgement(seed);
        let ty = check_v1(&g.ctx, &g.term).unwrap();
        for s in step_all(&g.term, &reg) {
            n += 1;
            assert_eq!(check_v1(&g.ctx, &s.term).as_ref(), Ok(&ty), "{} -> {} ({})", g.term, s.term, s.rule);
        }
    }
    assert!(n >= 500, "only {n} steps");
    for e in ipcf::corpus::entries() {
        let src = e.source().unwrap();
        let reg = e.registry();
        let checker = ipcf::typing::Checker::for_registry(&reg);
        let ty = checker.check_v1(&src.context, &src.term).unwrap();
        for s in ipcf::reduction::reachable(&src.term, 4, &reg).iter() {
            assert_eq!(checker.check_v1(&src.context, s).as_ref(), Ok(&ty), "{}: {s}", e.name);
        }
    }
}
