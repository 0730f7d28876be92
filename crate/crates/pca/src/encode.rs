//! Curry's encodings: booleans as projections, pairs as `λz. z x y`,
//! numerals as `0 = I` and `n+1 = pair false n`.

use crate::{eval, identity, lambda_stars, Evaluator, PcaError, PcaTerm};

fn v(x: &str) -> PcaTerm {
    PcaTerm::var(x)
}

/// `true = λa b. a`
pub fn tru() -> PcaTerm {
    lambda_stars(&["a", "b"], &v("a"))
}

/// `false = λa b. b`
pub fn fls() -> PcaTerm {
    lambda_stars(&["a", "b"], &v("b"))
}

/// `if = λb y z. b y z`
pub fn ite() -> PcaTerm {
    lambda_stars(&["b", "y", "z"], &v("b").apps([v("y"), v("z")]))
}

/// `pair = λx y z. z x y`
pub fn pair() -> PcaTerm {
    lambda_stars(&["x", "y", "z"], &v("z").apps([v("x"), v("y")]))
}

/// `fst = λp. p true`
pub fn fst() -> PcaTerm {
    lambda_stars(&["p"], &v("p").app(tru()))
}

/// `snd = λp. p false`
pub fn snd() -> PcaTerm {
    lambda_stars(&["p"], &v("p").app(fls()))
}

/// `succ = λx. pair false x`
pub fn succ() -> PcaTerm {
    lambda_stars(&["x"], &pair().apps([fls(), v("x")]))
}

/// `iszero = fst`, since `0 true = true` and `fst (pair false n) = false`.
pub fn iszero() -> PcaTerm {
    fst()
}

/// `pred = λx. if (iszero x) 0 (snd x)`
pub fn pred() -> PcaTerm {
    let body = ite().apps([iszero().app(v("x")), encode_num(0), snd().app(v("x"))]);
    lambda_stars(&["x"], &body)
}

/// The numeral for `n`, in weak normal form.
pub fn encode_num(n: u64) -> PcaTerm {
    let mut t = identity();
    for _ in 0..n {
        let next = pair().apps([fls(), t]);
        t = eval(&next, 16).value().cloned().expect("pairing is total");
    }
    t
}

/// Reads a numeral back. Applied to an opaque probe `'p`, `0` gives `'p`
/// and `n+1` gives `'p false n`; anything else is not a numeral.
pub fn decode_num(t: &PcaTerm, fuel: usize) -> Result<u64, PcaError> {
    let probe = PcaTerm::opaque("numeral");
    let no = fls();
    let mut ev = Evaluator::new(fuel);
    let mut cur = t.clone();
    let mut n = 0;
    loop {
        let shape = ev.eval(&cur.app(probe.clone())).ok_or(PcaError::Diverged(fuel))?;
        if shape == probe {
            return Ok(n);
        }
        match shape.spine() {
            (head, args) if *head == probe && args.len() == 2 && *args[0] == no => cur = args[1].clone(),
            _ => return Err(PcaError::NotANumeral),
        }
        n += 1;
    }
}

/// The named terms available to the surface syntax.
pub fn named(name: &str) -> Option<PcaTerm> {
    Some(match name {
        "I" => identity(),
        "true" => tru(),
        "false" => fls(),
        "if" => ite(),
        "pair" => pair(),
        "fst" => fst(),
        "snd" => snd(),
        "succ" => succ(),
        "pred" => pred(),
        "iszero" => iszero(),
        "add" => crate::add(),
        "mult" => crate::mult(),
        "omega" => crate::bottom(),
        _ => return None,
    })
}

pub const NAMES: &[&str] =
    &["I", "true", "false", "if", "pair", "fst", "snd", "succ", "pred", "iszero", "add", "mult", "omega"];
