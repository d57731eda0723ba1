mod common;

use common::{all_letters, all_words, oracle_accepts, random_formula};
use ltlnav::ltl::{Formula, Letter};
use ltlnav::TaskAutomaton;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

const PROPS: [&str; 3] = ["a", "b", "c"];

fn formula_strategy() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        1 => Just(Formula::True),
        1 => Just(Formula::False),
        8 => prop::sample::select(PROPS.to_vec()).prop_map(Formula::prop),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::next),
            inner.clone().prop_map(Formula::weak_next),
            inner.clone().prop_map(Formula::eventually),
            inner.clone().prop_map(Formula::always),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::imply(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::until(a, b)),
        ]
    })
}

fn word_strategy() -> impl Strategy<Value = Vec<Letter>> {
    let letters = all_letters(&PROPS);
    prop::collection::vec(prop::sample::select(letters), 0..8)
}

proptest! {
    #[test]
    fn prefix_round_trip(f in formula_strategy()) {
        prop_assert_eq!(Formula::parse_prefix(&f.to_prefix()).unwrap(), f);
    }

    #[test]
    fn infix_round_trip(f in formula_strategy()) {
        prop_assert_eq!(Formula::parse_infix(&f.to_infix()).unwrap(), f);
    }

    #[test]
    fn eval_matches_recursive_oracle(f in formula_strategy(), w in word_strategy()) {
        prop_assert_eq!(f.eval_finite(&w), oracle_accepts(&f, &w));
    }

    #[test]
    fn nnf_preserves_meaning(f in formula_strategy(), w in word_strategy()) {
        let n = f.nnf();
        prop_assert_eq!(n.eval_finite(&w), f.eval_finite(&w));
        prop_assert_eq!(n.nnf(), n.clone());
    }

    #[test]
    fn empty_word_law(f in formula_strategy()) {
        // the empty word satisfies exactly what the oracle says it does,
        // and eventualities never hold on it
        prop_assert_eq!(f.eval_finite(&[]), oracle_accepts(&f, &[]));
        prop_assert!(!Formula::eventually(f.clone()).eval_finite(&[]));
        prop_assert!(Formula::always(f).eval_finite(&[]));
    }

    #[test]
    fn automaton_agrees_with_semantics(f in formula_strategy(), w in word_strategy()) {
        let a = TaskAutomaton::compile_full(&f).unwrap();
        prop_assert_eq!(a.accepts(&w), f.eval_finite(&w));
    }

    #[test]
    fn foreign_propositions_are_ignored(f in formula_strategy(), w in word_strategy()) {
        let a = TaskAutomaton::compile_full(&f).unwrap();
        let noisy: Vec<Letter> = w.iter().map(|l| {
            let mut l = l.clone();
            l.insert("zz".to_string());
            l
        }).collect();
        prop_assert_eq!(a.accepts(&noisy), a.accepts(&w));
    }
}

#[test]
fn seeded_formulas_exhaustive_words() {
    let mut rng = StdRng::seed_from_u64(7);
    let words = all_words(&all_letters(&PROPS), 4);
    for _ in 0..60 {
        let f = random_formula(&mut rng, &PROPS, 4);
        let a = TaskAutomaton::compile_full(&f).unwrap();
        for w in &words {
            assert_eq!(a.accepts(w), oracle_accepts(&f, w), "{} on {w:?}", f.to_prefix());
        }
    }
}

#[test]
fn word_enumerator_counts() {
    let letters = all_letters(&["a", "b"]);
    assert_eq!(letters.len(), 4);
    // 1 + 4 + 16 + 64
    assert_eq!(all_words(&letters, 3).len(), 85);
}
