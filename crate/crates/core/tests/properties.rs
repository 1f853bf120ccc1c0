use proptest::prelude::*;

use pelcr::algebra::{
    bang, mul, normalize_word, reduce_with, reduce_word, star_mul, Atom, Letter, MixedWord,
    Monomial, StableResult, Strategy as Rewrite,
};
use pelcr::net::Net;
use pelcr::translate::{parse, translate, Term};

fn atom() -> impl Strategy<Value = Atom> {
    (0u32..4, 0u32..3, 0u32..4, 0u32..4).prop_map(|(g, name, lift, depth)| match g {
        0 => Atom::p(depth),
        1 => Atom::q(depth),
        _ => Atom::w(name, lift, depth),
    })
}

fn monomial() -> impl Strategy<Value = Monomial> {
    prop::collection::vec(atom(), 0..6).prop_map(Monomial::from_atoms)
}

fn word() -> impl Strategy<Value = MixedWord> {
    prop::collection::vec((atom(), any::<bool>()), 0..12).prop_map(|ls| {
        MixedWord(
            ls.into_iter()
                .map(|(atom, starred)| Letter { atom, starred })
                .collect(),
        )
    })
}

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![Just(Term::var("x")), Just(Term::var("y")), (0u64..3).prop_map(Term::church)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (prop_oneof![Just("x"), Just("y")], inner.clone()).prop_map(|(v, b)| Term::abs(v, b)),
            (inner.clone(), inner).prop_map(|(f, a)| Term::app(f, a)),
        ]
    })
}

proptest! {
    #[test]
    fn product_is_associative(a in monomial(), b in monomial(), c in monomial()) {
        prop_assert_eq!(mul(&mul(&a, &b), &c), mul(&a, &mul(&b, &c)));
    }

    #[test]
    fn one_is_neutral(a in monomial()) {
        prop_assert_eq!(mul(&Monomial::one(), &a), a.clone());
        prop_assert_eq!(mul(&a, &Monomial::one()), a);
    }

    #[test]
    fn bang_is_a_morphism(a in monomial(), b in monomial(), k in 0u32..4) {
        prop_assert_eq!(bang(&mul(&a, &b), k), mul(&bang(&a, k), &bang(&b, k)));
    }

    #[test]
    fn positive_monomials_are_isometries(a in monomial()) {
        let one = Monomial::one();
        prop_assert_eq!(star_mul(&a, &a).unwrap(), StableResult::Stable(one.clone(), one));
    }

    #[test]
    fn strategies_agree(w in word()) {
        let r = reduce_word(&w);
        prop_assert_eq!(&reduce_with(&w, Rewrite::Leftmost), &r);
        prop_assert_eq!(&reduce_with(&w, Rewrite::Rightmost), &r);
    }

    #[test]
    fn term_display_reparses(t in term()) {
        prop_assert_eq!(parse(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn translated_nets_round_trip_through_dumps(t in term()) {
        let free = t.free_vars();
        let net = translate(&t, &free).unwrap().net;
        let text = net.dump();
        let back = Net::parse_dump(&text).unwrap();
        prop_assert_eq!(back.dump(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn star_mul_matches_word_normalization(a in monomial(), b in monomial()) {
        let word = b.starred().concat(&a.to_word());
        prop_assert_eq!(star_mul(&b, &a), normalize_word(&word));
    }
}
