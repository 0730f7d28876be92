//! Seeded random combinatory terms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::PcaTerm;

const TAGS: [&str; 3] = ["a", "b", "c"];

pub struct TermGen {
    rng: ChaCha8Rng,
}

impl TermGen {
    pub fn new(seed: u64) -> Self {
        TermGen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// A term of at most `size` nodes over `S`, `K`, opaque tags and,
    /// if given, the variable `x`.
    pub fn term(&mut self, size: usize, x: Option<&str>) -> PcaTerm {
        if size <= 1 || self.rng.gen_bool(0.2) {
            return self.atom(x);
        }
        let left = self.rng.gen_range(1..size.max(2));
        let right = (size - left).max(1);
        self.term(left, x).app(self.term(right, x))
    }

    fn atom(&mut self, x: Option<&str>) -> PcaTerm {
        match (self.rng.gen_range(0..10), x) {
            (0..=2, _) => PcaTerm::S,
            (3..=5, _) => PcaTerm::K,
            (6..=7, Some(x)) => PcaTerm::var(x),
            _ => PcaTerm::opaque(TAGS[self.rng.gen_range(0..TAGS.len())]),
        }
    }

    /// A pair `(e, a)`: `e` mentions `x`, `a` is closed.
    pub fn completeness_pair(&mut self, x: &str, size: usize) -> (PcaTerm, PcaTerm) {
        let e = loop {
            let e = self.term(size, Some(x));
            if !e.is_closed() {
                break e;
            }
        };
        let a_size = self.rng.gen_range(1..=size.div_ceil(2));
        (e, self.term(a_size, None))
    }
}
