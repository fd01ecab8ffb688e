use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scpau_core::antiunify::{canonical_form, generalize, GenOptions, GenResult, Mode};
use scpau_core::equational::{match_modulo, mutate_commutative, subsumes, Attributes};
use scpau_core::generate::{
    random_ground_pair, random_ground_term, random_interaction, InteractionParams, TermParams,
};
use scpau_core::interaction::{atom_of, lifelines_of, project};
use scpau_core::textio::{parse_interaction, parse_term, render_interaction, render_term};
use scpau_core::{eq_modulo, normalize, Substitution, Symbol, Term, Theory, VarId};

/// `f` associative-commutative with unit `u`, `g` associative.
fn acu_theory() -> Theory {
    let mut th = Theory::empty();
    th.set(
        "f",
        Attributes {
            assoc: true,
            comm: true,
            unit: Some(Symbol::constant("u")),
        },
    );
    th.set(
        "g",
        Attributes {
            assoc: true,
            comm: false,
            unit: None,
        },
    );
    th
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn interaction(seed: u64) -> Term {
    random_interaction(&InteractionParams::new(30, 5, 3, seed))
}

/// Replaces a few subterms of `t` by variables drawn from a small pool.
fn with_holes(rng: &mut impl Rng, t: &Term) -> Term {
    let mut out = t.clone();
    for _ in 0..rng.gen_range(1..=3) {
        let positions = out.positions();
        let pos = positions.choose(rng).unwrap();
        out = out.replace_at(pos, Term::var(rng.gen_range(0..3))).unwrap();
    }
    out
}

fn open_term(rng: &mut impl Rng, size: usize, p: &TermParams) -> Term {
    let ground = random_ground_term(rng, size, p);
    with_holes(rng, &ground)
}

fn solution_set(out: &GenResult, theory: &Theory) -> BTreeSet<Term> {
    out.solutions()
        .iter()
        .map(|g| canonical_form(&g.term, theory))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn term_text_round_trip(seed in any::<u64>()) {
        let t = with_holes(&mut rng(seed), &random_ground_term(&mut rng(seed ^ 1), 15, &TermParams::small(4, 3, 15)));
        let back = parse_term(&render_term(&t)).unwrap();
        prop_assert_eq!(back.canonical_renaming(), t.canonical_renaming());
    }

    #[test]
    fn interaction_text_round_trip(seed in any::<u64>()) {
        let i = interaction(seed);
        prop_assert_eq!(parse_interaction(&render_interaction(&i), false).unwrap(), i);
    }

    #[test]
    fn normalize_is_idempotent_and_stable_under_swaps(seed in any::<u64>()) {
        let th = Theory::interactions();
        let i = interaction(seed);
        let n = normalize(&i, &th).into_term();
        prop_assert_eq!(normalize(&n, &th).into_term(), n.clone());
        let swapped = mutate_commutative(&i, &th, 5, seed);
        prop_assert_eq!(normalize(&swapped, &th).into_term(), n);
    }

    #[test]
    fn substitution_composition(seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = TermParams::small(4, 2, 8);
        let t = open_term(&mut r, 12, &p);
        let mut sigma = Substitution::new();
        let mut tau = Substitution::new();
        for x in 0..3 {
            sigma.insert(VarId(x), open_term(&mut r, 6, &p));
            if r.gen_bool(0.5) {
                tau.insert(VarId(x), random_ground_term(&mut r, 6, &p));
            }
        }
        prop_assert_eq!(t.apply(&sigma.then(&tau)), t.apply(&sigma).apply(&tau));
    }

    #[test]
    fn matching_is_sound_and_complete_for_instances(seed in any::<u64>()) {
        let th = acu_theory();
        let mut r = rng(seed);
        let p = TermParams::small(4, 2, 10);
        let pattern = open_term(&mut r, 10, &p);
        let sigma: Substitution = (0..3)
            .map(|x| (VarId(x), random_ground_term(&mut r, 5, &p)))
            .collect();
        let target = pattern.apply(&sigma);
        let matches = match_modulo(&pattern, &target, &th).unwrap();
        prop_assert!(!matches.is_empty());
        for m in &matches {
            prop_assert!(eq_modulo(&pattern.apply(m), &target, &th));
        }
        prop_assert!(subsumes(&pattern, &target, &th).unwrap());
    }

    #[test]
    fn subsumption_agrees_with_matching(seed in any::<u64>()) {
        let th = acu_theory();
        let mut r = rng(seed);
        let p = TermParams::small(4, 2, 10);
        let general = open_term(&mut r, 8, &p);
        let specific = open_term(&mut r, 10, &p);
        let frozen_general = subsumes(&general, &specific, &th).unwrap();
        let ground = specific.apply(
            &(0..3).map(|x| (VarId(x), Term::constant(Symbol::constant(&format!("c{x}"))))).collect(),
        );
        let by_matching = !match_modulo(&general, &ground, &th).unwrap().is_empty();
        prop_assert_eq!(frozen_general, by_matching);
    }

    #[test]
    fn projection_keeps_positions(seed in any::<u64>()) {
        let k = interaction(seed);
        let all: Vec<String> = lifelines_of(&k).into_iter().collect();
        let mut r = rng(seed);
        let keep: BTreeSet<String> = all.iter().filter(|_| r.gen_bool(0.5)).cloned().collect();
        let projected = project(&k, &keep);
        for pos in k.positions() {
            let sub = k.subterm_at(&pos).unwrap();
            let image = projected.subterm_at(&pos);
            prop_assert!(image.is_ok(), "position {:?} lost", pos);
            if sub.head().is_some_and(|h| atom_of(h).is_some()) {
                prop_assert_eq!(image.unwrap(), &project(sub, &keep));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn fail_rule_keeps_solution_set(seed in any::<u64>()) {
        let (s, t) = random_ground_pair(&mut rng(seed), &TermParams::small(4, 2, 10));
        for th in [Theory::empty(), acu_theory()] {
            let opts = GenOptions::default().with_mode(Mode::All);
            let with = generalize(&s, &t, &th, &opts.clone().with_fail_rule(true)).unwrap();
            let without = generalize(&s, &t, &th, &opts.with_fail_rule(false)).unwrap();
            prop_assert_eq!(with.result.is_failure(), without.result.is_failure());
            prop_assert_eq!(solution_set(&with.result, &th), solution_set(&without.result, &th));
            prop_assert!(with.stats.explored <= without.stats.explored);
        }
    }

    #[test]
    fn generalizations_are_sc_preserving_instances(seed in any::<u64>()) {
        let th = acu_theory();
        let (s, t) = random_ground_pair(&mut rng(seed), &TermParams::small(4, 2, 12));
        let out = generalize(&s, &t, &th, &GenOptions::default().with_mode(Mode::All)).unwrap();
        let mut seen = HashSet::new();
        for g in out.result.solutions() {
            prop_assert!(eq_modulo(&g.term.apply(&g.left), &s, &th));
            prop_assert!(eq_modulo(&g.term.apply(&g.right), &t, &th));
            prop_assert_eq!(g.term.special_constants(), s.special_constants());
            prop_assert!(g.left.range_special_constants().is_empty());
            prop_assert!(g.right.range_special_constants().is_empty());
            prop_assert!(seen.insert(canonical_form(&g.term, &th)));
        }
    }
}
