//! Seeded random terms and interactions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::interaction::{self, empty, Action, ValuePassing};
use crate::term::{Symbol, Term};

#[derive(Debug, Clone)]
pub struct InteractionParams {
    pub max_size: usize,
    pub lifelines: Vec<String>,
    pub messages: Vec<String>,
    pub loop_prob: f64,
    /// Probability that a leaf is a value passing rather than an action or `0`.
    pub vp_prob: f64,
    pub seed: u64,
}

impl InteractionParams {
    /// Lifelines `l0…` and messages `m0…`.
    pub fn new(max_size: usize, lifelines: usize, messages: usize, seed: u64) -> InteractionParams {
        InteractionParams {
            max_size,
            lifelines: (0..lifelines).map(|k| format!("l{k}")).collect(),
            messages: (0..messages).map(|k| format!("m{k}")).collect(),
            loop_prob: 0.05,
            vp_prob: 0.65,
            seed,
        }
    }
}

fn random_atom(rng: &mut impl Rng, p: &InteractionParams) -> Term {
    let m = p.messages.choose(rng).expect("at least one message");
    let roll: f64 = rng.gen();
    if p.lifelines.len() >= 2 && roll < p.vp_prob {
        let mut two = p.lifelines.choose_multiple(rng, 2);
        let (a, b) = (two.next().expect("two"), two.next().expect("two"));
        return ValuePassing::new(a, m, b)
            .expect("distinct lifelines")
            .term();
    }
    if p.lifelines.is_empty() || roll > 1.0 - (1.0 - p.vp_prob) / 5.0 {
        return empty();
    }
    let l = p.lifelines.choose(rng).expect("at least one lifeline");
    if rng.gen_bool(0.5) {
        Action::emit(l, m).term()
    } else {
        Action::receive(l, m).term()
    }
}

fn random_interaction_sized(rng: &mut impl Rng, size: usize, p: &InteractionParams) -> Term {
    if size < 3 {
        if size == 2 && rng.gen_bool(p.loop_prob.clamp(0.0, 1.0)) {
            return interaction::loop_(random_atom(rng, p));
        }
        return random_atom(rng, p);
    }
    if rng.gen_bool(p.loop_prob.clamp(0.0, 1.0)) {
        return interaction::loop_(random_interaction_sized(rng, size - 1, p));
    }
    let left = rng.gen_range(1..size - 1);
    let op = [
        interaction::SEQ,
        interaction::SEQ,
        interaction::ALT,
        interaction::PAR,
    ]
    .choose(rng)
    .expect("non-empty");
    interaction::op(
        op,
        random_interaction_sized(rng, left, p),
        random_interaction_sized(rng, size - 1 - left, p),
    )
}

/// A well-formed interaction of size at most `max_size` over the given
/// lifelines and messages, deterministic for a seed.
pub fn random_interaction(p: &InteractionParams) -> Term {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let max = p.max_size.max(1);
    let size = rng.gen_range((max / 2).max(1)..=max);
    random_interaction_sized(&mut rng, size, p)
}

/// Alphabet for random first-order terms.
#[derive(Debug, Clone)]
pub struct TermParams {
    pub functions: Vec<Symbol>,
    pub constants: Vec<Symbol>,
    pub gates: Vec<Symbol>,
    pub max_size: usize,
}

impl TermParams {
    /// `f/2, g/2, h/1, k/3` (first `functions` of them), constants `u v w`
    /// and gates `#a #b #c` (first `gates` of them).
    pub fn small(functions: usize, gates: usize, max_size: usize) -> TermParams {
        let pool = [("f", 2), ("g", 2), ("h", 1), ("k", 3)];
        TermParams {
            functions: pool
                .iter()
                .take(functions.min(pool.len()))
                .map(|(n, a)| Symbol::function(n, *a))
                .collect(),
            constants: ["u", "v", "w"]
                .iter()
                .map(|n| Symbol::constant(n))
                .collect(),
            gates: ["a", "b", "c"]
                .iter()
                .take(gates.min(3))
                .map(|n| Symbol::special(n))
                .collect(),
            max_size,
        }
    }
}

fn random_leaf(rng: &mut impl Rng, p: &TermParams) -> Term {
    if !p.gates.is_empty() && rng.gen_bool(0.3) {
        Term::constant(p.gates.choose(rng).expect("non-empty").clone())
    } else {
        Term::constant(p.constants.choose(rng).expect("non-empty").clone())
    }
}

/// A ground term of size at most `budget`.
pub fn random_ground_term(rng: &mut impl Rng, budget: usize, p: &TermParams) -> Term {
    let fits: Vec<&Symbol> = p.functions.iter().filter(|f| f.arity() < budget).collect();
    if fits.is_empty() || rng.gen_bool(0.25) {
        return random_leaf(rng, p);
    }
    let f = fits.choose(rng).expect("non-empty");
    let mut left = budget - 1;
    let mut args = Vec::with_capacity(f.arity());
    for k in 0..f.arity() {
        let reserve = f.arity() - k - 1;
        let share = rng.gen_range(1..=left - reserve);
        let arg = random_ground_term(rng, share, p);
        left -= arg.size();
        args.push(arg);
    }
    Term::app((*f).clone(), args)
}

/// A related pair: the second term is the first with a few random subterms
/// replaced, so that both shared structure and conflicts occur. Half of the
/// pairs only replace gate-free subterms by gate-free terms.
pub fn random_ground_pair(rng: &mut impl Rng, p: &TermParams) -> (Term, Term) {
    let s = random_ground_term(rng, p.max_size, p);
    let gate_free = TermParams {
        gates: Vec::new(),
        ..p.clone()
    };
    let balanced = rng.gen_bool(0.5);
    let mut t = s.clone();
    for _ in 0..rng.gen_range(1..=3) {
        let all = t.positions();
        let free: Vec<_> = all
            .iter()
            .filter(|q| !t.subterm_at(q).expect("valid").has_special_constants())
            .cloned()
            .collect();
        let (positions, params) = if balanced && !free.is_empty() {
            (free, &gate_free)
        } else {
            (all, p)
        };
        let pos = positions.choose(rng).expect("root exists");
        let old = t.subterm_at(pos).expect("valid").size();
        let room = p.max_size - (t.size() - old);
        let replacement = random_ground_term(rng, room.max(1), params);
        t = t.replace_at(pos, replacement).expect("valid");
    }
    (s, t)
}
