//! Property tests for the two value-semantics foundations: run-length tapes
//! and Cantor-normal-form ordinals.

use proptest::prelude::*;

use tittm::ordinal::{
    decode_ordinal, decode_prefixes, encode_ordinal, naive, ord_add, ord_cmp, Ordinal,
};
use tittm::tape::{tape_shift_equal, TapeRep};

fn arb_tape() -> impl Strategy<Value = TapeRep> {
    (
        proptest::collection::vec((any::<bool>(), 1u64..5), 0..6),
        any::<bool>(),
    )
        .prop_map(|(runs, tail)| TapeRep::new(runs, tail))
}

/// Ordinals below ω^ω: descending finite exponents with small coefficients.
fn arb_small_ordinal() -> impl Strategy<Value = Ordinal> {
    proptest::collection::btree_map(0u64..6, 1u64..5, 0..4).prop_map(|m| {
        let mut terms: Vec<(Ordinal, u64)> = m
            .into_iter()
            .map(|(e, c)| (Ordinal::from_nat(e).unwrap(), c))
            .collect();
        terms.sort_by(|a, b| b.0.cmp(&a.0));
        Ordinal::from_terms(terms).unwrap()
    })
}

proptest! {
    #[test]
    fn tape_read_write_laws(t in arb_tape(), i in 0u64..24, b in any::<bool>(), j in 0u64..24) {
        let written = t.write(i, b);
        prop_assert_eq!(written.read(i), b);
        if j != i {
            prop_assert_eq!(written.read(j), t.read(j));
        }
        // idempotent write is the identity on the normal form
        prop_assert_eq!(&t.write(i, t.read(i)), &t);
        prop_assert_eq!(&written.write(i, b), &written);
    }

    #[test]
    fn tape_normal_form_is_unique(
        writes in proptest::collection::vec((0u64..16, any::<bool>()), 0..12),
        seed in any::<u64>(),
    ) {
        // apply the same final-value map in two different orders
        let mut order = writes.clone();
        let n = order.len();
        if n > 1 {
            let k = (seed as usize) % n;
            order.rotate_left(k);
        }
        // later writes win, so replay only each cell's final value
        let mut finals = std::collections::HashMap::new();
        for (i, b) in &writes {
            finals.insert(*i, *b);
        }
        let mut a = TapeRep::empty();
        for (i, b) in finals.iter() {
            a = a.write(*i, *b);
        }
        let mut c = TapeRep::empty();
        let mut rev: Vec<_> = finals.into_iter().collect();
        rev.reverse();
        for (i, b) in rev {
            c = c.write(i, b);
        }
        prop_assert_eq!(&a, &c);
        // and extensional equality on a window implies structural equality
        for i in 0..20 {
            prop_assert_eq!(a.read(i), c.read(i));
        }
    }

    #[test]
    fn shift_equal_is_reflexive_and_sign_antisymmetric(t in arb_tape(), h in 0u64..10, k in 0u64..6) {
        prop_assert_eq!(tape_shift_equal(&t, h, &t, h), Some(0));
        let (u, h2) = (t.clone(), h + k);
        if let Some(s) = tape_shift_equal(&t, h, &u, h2) {
            prop_assert_eq!(tape_shift_equal(&u, h2, &t, h), Some(-s));
        }
    }

    #[test]
    fn ordinal_addition_is_associative(
        a in arb_small_ordinal(),
        b in arb_small_ordinal(),
        c in arb_small_ordinal(),
    ) {
        let left = ord_add(&ord_add(&a, &b).unwrap(), &c).unwrap();
        let right = ord_add(&a, &ord_add(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn ordinal_addition_monotonicity(
        a in arb_small_ordinal(),
        a2 in arb_small_ordinal(),
        b in arb_small_ordinal(),
        b2 in arb_small_ordinal(),
    ) {
        // strict right monotonicity
        if ord_cmp(&b, &b2) == std::cmp::Ordering::Less {
            let l = ord_add(&a, &b).unwrap();
            let r = ord_add(&a, &b2).unwrap();
            prop_assert_eq!(ord_cmp(&l, &r), std::cmp::Ordering::Less);
        }
        // non-strict left monotonicity
        if ord_cmp(&a, &a2) != std::cmp::Ordering::Greater {
            let l = ord_add(&a, &b).unwrap();
            let r = ord_add(&a2, &b).unwrap();
            prop_assert!(ord_cmp(&l, &r) != std::cmp::Ordering::Greater);
        }
    }

    #[test]
    fn finite_plus_omega_absorbs(n in 1u64..10_000) {
        let n_ord = Ordinal::from_nat(n).unwrap();
        prop_assert_eq!(ord_add(&n_ord, &Ordinal::omega()).unwrap(), Ordinal::omega());
    }

    #[test]
    fn ordinal_sum_matches_the_naive_oracle(a in arb_small_ordinal(), b in arb_small_ordinal()) {
        // expand both ordinals into their ω-power block sequences and sum
        // with the independent absorption-rule oracle
        let mut exps = Vec::new();
        for (e, c) in a.terms().iter().chain(b.terms()) {
            for _ in 0..*c {
                exps.push(e.clone());
            }
        }
        prop_assert_eq!(naive::sum_of_powers(&exps), ord_add(&a, &b).unwrap());
    }

    #[test]
    fn code_round_trip_below_omega_omega(a in arb_small_ordinal()) {
        let code = encode_ordinal(&a, 64).unwrap();
        prop_assert_eq!(decode_ordinal(&code).unwrap(), a);
    }

    #[test]
    fn decode_is_monotone_on_prefixes(a in arb_small_ordinal()) {
        let code = encode_ordinal(&a, 64).unwrap();
        let prefixes = decode_prefixes(&code).unwrap();
        for w in prefixes.windows(2) {
            prop_assert!(ord_cmp(&w[0], &w[1]) != std::cmp::Ordering::Greater);
        }
        prop_assert_eq!(prefixes.last().unwrap(), &a);
    }
}
