//! s-m-n, the two recursion theorems, and arithmetic built on them.

use crate::encode::{encode_num, iszero, ite, pred, succ};
use crate::{eval, identity, lambda_star, lambda_stars, EvalOutcome, PcaTerm, DEFAULT_FUEL};
use crate::PcaTerm::S;

fn v(x: &str) -> PcaTerm {
    PcaTerm::var(x)
}

/// A variable name not occurring in `t`.
fn fresh(base: &str, ts: &[&PcaTerm]) -> String {
    let mut x = base.to_string();
    while ts.iter().any(|t| t.free_vars().iter().any(|y| **y == *x)) {
        x.push('\'');
    }
    x
}

/// `λ*y. p a y`: specializes the first argument of `p`.
pub fn smn(p: &PcaTerm, a: &PcaTerm) -> PcaTerm {
    let y = fresh("y", &[p, a]);
    lambda_star(&y, &p.clone().apps([a.clone(), v(&y)]))
}

/// `e = w w` with `w = λ*y. λ*x. f (y y) x`, so that `e a ≃ f e a`.
pub fn kleene_fixed_point(f: &PcaTerm) -> PcaTerm {
    let body = f.clone().apps([v("y").app(v("y")), v("x")]);
    let w = lambda_stars(&["y", "x"], &body);
    w.clone().app(w)
}

/// `e = w w` with `w = λ*y. λ*x. (g (y y)) x`, so that `e a ≃ (g e) a`.
pub fn rogers_fixed_point(g: &PcaTerm) -> PcaTerm {
    let body = g.clone().app(v("y").app(v("y"))).app(v("x"));
    let w = lambda_stars(&["y", "x"], &body);
    w.clone().app(w)
}

/// `(S I I) (S I I)`: diverges, and so does anything it is applied to.
pub fn bottom() -> PcaTerm {
    let w = S.app(identity()).app(identity());
    w.clone().app(w)
}

/// Addition on numerals: `add x y = if (iszero x) y (succ (add (pred x) y))`.
pub fn add() -> PcaTerm {
    let rec = v("e").apps([pred().app(v("x")), v("y")]);
    let body = ite().apps([iszero().app(v("x")), v("y"), succ().app(rec)]);
    kleene_fixed_point(&lambda_stars(&["e", "x", "y"], &body))
}

/// Multiplication on numerals: `mult x y = if (iszero x) 0 (add y (mult (pred x) y))`.
pub fn mult() -> PcaTerm {
    let rec = v("e").apps([pred().app(v("x")), v("y")]);
    let body = ite().apps([iszero().app(v("x")), encode_num(0), add().apps([v("y"), rec])]);
    kleene_fixed_point(&lambda_stars(&["e", "x", "y"], &body))
}

/// The factorial blueprint `F(p) = λ*x. if (iszero x) 1 (mult x (p (pred x)))`.
pub fn factorial_step(p: &PcaTerm) -> PcaTerm {
    let rec = p.clone().app(pred().app(v("x")));
    let body = ite().apps([iszero().app(v("x")), encode_num(1), mult().apps([v("x"), rec])]);
    lambda_star("x", &body)
}

/// One line of the dovetailing schedule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrtRound {
    pub round: usize,
    /// Steps granted to each running simulation this round.
    pub grant: usize,
    /// Total budget of `p_0 n .. p_round n` after this round.
    pub budgets: Vec<usize>,
    /// The index of the simulation that produced a value this round, if any.
    pub produced: Option<usize>,
}

/// Dovetailing schedule for [`frt_lfp_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrtConfig {
    pub rounds: usize,
    /// Round `i` grants `i * slice` steps to each simulation.
    pub slice: usize,
    /// Cap on the total budget of any one simulation.
    pub fuel: usize,
}

impl FrtConfig {
    pub fn new(rounds: usize) -> Self {
        FrtConfig { rounds, slice: 1, fuel: DEFAULT_FUEL }
    }
}

/// Least fixed point of `t` at input `n` by dovetailing the chain
/// `p_0 = diverge0`, `p_{i+1} = t(p_i)`: at round `i` the chain is extended
/// to `p_i` and each `p_j n` with `j <= i` gets `i` more steps. The first
/// value wins.
pub fn frt_lfp(t: &dyn Fn(&PcaTerm) -> PcaTerm, diverge0: &PcaTerm, n: &PcaTerm, rounds: usize) -> EvalOutcome {
    frt_lfp_with(t, diverge0, n, &FrtConfig::new(rounds)).0
}

/// [`frt_lfp`] with an explicit schedule, returning the per-round log.
/// Within a round the lowest index that produces a value wins. Evaluation
/// is deterministic, so a simulation is rerun from the start with its
/// accumulated budget rather than suspended.
pub fn frt_lfp_with(
    t: &dyn Fn(&PcaTerm) -> PcaTerm,
    diverge0: &PcaTerm,
    n: &PcaTerm,
    cfg: &FrtConfig,
) -> (EvalOutcome, Vec<FrtRound>) {
    let mut chain = vec![diverge0.clone()];
    let mut budgets = vec![0];
    let mut log = Vec::new();
    for i in 1..=cfg.rounds {
        let next = t(chain.last().expect("chain starts non-empty"));
        chain.push(next);
        budgets.push(0);
        let grant = i.saturating_mul(cfg.slice);
        let mut produced = None;
        for (j, p) in chain.iter().enumerate() {
            let before = budgets[j];
            budgets[j] = (before + grant).min(cfg.fuel);
            if budgets[j] == before {
                continue;
            }
            if let EvalOutcome::Value { term, steps } = eval(&p.clone().app(n.clone()), budgets[j]) {
                produced = Some((j, EvalOutcome::Value { term, steps }));
                break;
            }
        }
        log.push(FrtRound { round: i, grant, budgets: budgets.clone(), produced: produced.as_ref().map(|p| p.0) });
        if let Some((_, out)) = produced {
            return (out, log);
        }
    }
    let spent = budgets.iter().sum();
    (EvalOutcome::Diverged { fuel_spent: spent }, log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{decode_num, pca_apply};

    fn num(t: &PcaTerm) -> u64 {
        decode_num(t, DEFAULT_FUEL * 10).unwrap()
    }

    #[test]
    fn arithmetic() {
        let (a, b) = (encode_num(3), encode_num(4));
        let s = eval(&add().apps([a.clone(), b.clone()]), DEFAULT_FUEL).value().cloned().unwrap();
        assert_eq!(num(&s), 7);
        let p = eval(&mult().apps([a, b]), DEFAULT_FUEL).value().cloned().unwrap();
        assert_eq!(num(&p), 12);
    }

    #[test]
    fn smn_specializes() {
        let a = PcaTerm::opaque("a");
        let b = PcaTerm::opaque("b");
        assert_eq!(pca_apply(&smn(&PcaTerm::K, &a), &b, 100).value(), Some(&a));
        assert!(smn(&v("y"), &a).is_weak_normal());
        assert!(!smn(&v("y"), &a).is_closed());
    }

    #[test]
    fn bottom_diverges_applied() {
        assert!(pca_apply(&bottom(), &encode_num(0), 1000).is_diverged());
    }

    #[test]
    fn constant_transformer_wins_at_round_one() {
        let five = encode_num(5);
        let k5 = PcaTerm::K.app(five.clone());
        let (out, log) = frt_lfp_with(&|_| k5.clone(), &bottom(), &encode_num(9), &FrtConfig::new(8));
        assert_eq!(out.value(), Some(&five));
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].produced, Some(1));
    }
}
