//! Cross-module invariants: algebraic laws under random inputs, the
//! product-splitting fact behind the arity collapse, and format round trips.

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use monoid_logic::eval::eval;
use monoid_logic::logic::{
    parse_formula_with_free, render_formula, Formula, LoopDir, MultQ, OrderSpec,
};
use monoid_logic::monoids::{
    cyclic, gamma_extend, one_hot_delta, symmetric, u1, FiniteMonoid, LetterMap, MonoidEnv,
};
use monoid_logic::words::{words_up_to, VarAssignment, WordStructure};

fn pick_monoid(which: u8) -> FiniteMonoid {
    match which % 3 {
        0 => u1(),
        1 => cyclic(3),
        _ => symmetric(3),
    }
}

proptest! {
    /// The product of a concatenation is the product of the products.
    #[test]
    fn word_product_splits(which in 0u8..3, word in proptest::collection::vec(0usize..6, 0..12), split in 0usize..12) {
        let m = pick_monoid(which);
        let word: Vec<usize> = word.into_iter().map(|e| e % m.size()).collect();
        let split = split.min(word.len());
        let (u, v) = word.split_at(split);
        prop_assert_eq!(
            m.word_product(&word),
            m.op(m.word_product(u), m.word_product(v))
        );
    }

    /// Reading a word backwards through the reversed monoid gives the same
    /// product.
    #[test]
    fn reversed_monoid_reverses_words(which in 0u8..3, word in proptest::collection::vec(0usize..6, 0..10)) {
        let m = pick_monoid(which);
        let word: Vec<usize> = word.into_iter().map(|e| e % m.size()).collect();
        let mut back = word.clone();
        back.reverse();
        prop_assert_eq!(m.reversed().word_product(&word), m.word_product(&back));
    }

    /// The homomorphic extension of a letter map splits over concatenation.
    #[test]
    fn gamma_extend_splits(bits in proptest::collection::vec(proptest::bool::ANY, 0..12), split in 0usize..12) {
        let m = cyclic(4);
        let mut images = BTreeMap::new();
        images.insert(vec![false], 1usize);
        images.insert(vec![true], 3usize);
        let gamma = LetterMap::explicit(1, images).unwrap();
        let split = split.min(bits.len());
        let to_word = |slice: &[bool]| {
            WordStructure::new(1, slice.iter().map(|&b| vec![b]).collect()).unwrap()
        };
        let whole = to_word(&bits);
        let left = to_word(&bits[..split]);
        let right = to_word(&bits[split..]);
        prop_assert_eq!(
            gamma_extend(&m, &gamma, &whole),
            m.op(gamma_extend(&m, &gamma, &left), gamma_extend(&m, &gamma, &right))
        );
    }

    /// Word text format round trip. The empty word is written `-`, which
    /// carries no width, so only emptiness survives for it.
    #[test]
    fn word_format_round_trip(width in 1usize..4, letters in proptest::collection::vec(0usize..8, 0..6)) {
        let letters: Vec<Vec<bool>> = letters
            .iter()
            .map(|&i| monoid_logic::words::index_to_letter(i % (1 << width), width))
            .collect();
        let w = WordStructure::new(width, letters).unwrap();
        let back = WordStructure::parse(&w.to_string()).unwrap();
        if w.is_empty() {
            prop_assert!(back.is_empty());
        } else {
            prop_assert_eq!(back, w);
        }
    }
}

/// Formula strategy over a fixed free-variable pool, including
/// multiplication quantifiers with every order kind.
fn formula_strategy() -> impl Strategy<Value = Formula> {
    let var = prop_oneof![Just("x"), Just("y"), Just("z")].prop_map(String::from);
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        (1usize..3, var.clone()).prop_map(|(rel, var)| Formula::Letter { rel, var }),
        (var.clone(), var.clone()).prop_map(|(a, b)| Formula::Less(a, b)),
        (var.clone(), var.clone()).prop_map(|(a, b)| Formula::Eq(a, b)),
        (var.clone(), var.clone(), var.clone()).prop_map(|(a, b, c)| Formula::Plus(a, b, c)),
    ];
    leaf.prop_recursive(3, 24, 3, move |inner| {
        let quant_var = prop_oneof![Just("q1"), Just("q2")].prop_map(String::from);
        let mq = (
            0u8..3,
            proptest::collection::vec(0usize..6, 2),
            1usize..3,
            inner.clone(),
            proptest::bool::ANY,
        )
            .prop_map(|(which, images, dim, body, descending)| {
                let m = pick_monoid(which);
                let c = m.size();
                let mut table = BTreeMap::new();
                table.insert(vec![false], images[0] % c);
                table.insert(vec![true], images[1] % c);
                let vars: Vec<String> = (0..dim).map(|i| format!("q{}", i + 1)).collect();
                let order = if descending {
                    OrderSpec::GenLex(
                        (0..dim)
                            .map(|i| if i == 0 { LoopDir::Desc } else { LoopDir::Asc })
                            .collect(),
                    )
                } else {
                    OrderSpec::Lex
                };
                Formula::MultQ(Box::new(MultQ {
                    monoid: Arc::new(m),
                    accept: [0].into(),
                    letter_map: LetterMap::explicit(1, table).unwrap(),
                    order,
                    vars,
                    bodies: vec![body],
                }))
            });
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (quant_var.clone(), inner.clone())
                .prop_map(|(v, f)| Formula::Exists(v, Box::new(f))),
            (quant_var.clone(), inner.clone())
                .prop_map(|(v, f)| Formula::Forall(v, Box::new(f))),
            (quant_var.clone(), inner.clone()).prop_map(|(v, f)| Formula::Maj(v, Box::new(f))),
            (quant_var, inner.clone()).prop_map(|(v, f)| Formula::Sq(v, Box::new(f))),
            mq,
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    /// Parsing a rendered formula returns a structurally equal AST, and the
    /// rendering is stable.
    #[test]
    fn parse_render_round_trip(f in formula_strategy()) {
        let env = MonoidEnv::new();
        let free: std::collections::BTreeSet<String> =
            ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let text = render_formula(&f);
        let parsed = parse_formula_with_free(&text, &env, &free).unwrap();
        prop_assert_eq!(&parsed, &f);
        prop_assert_eq!(render_formula(&parsed), text);
    }
}

/// The fact behind the arity collapse: over the lexicographic order on
/// pairs, the product of letter images factors into per-first-coordinate
/// block products.
#[test]
fn lex_product_splits_into_blocks() {
    let m = symmetric(3);
    let delta = one_hot_delta(&m);
    // Bodies of a one-hot dimension-2 quantifier over variables (x, y):
    // the letter at a tuple is one bit per monoid element.
    let bodies: Vec<Formula> = (0..m.size())
        .map(|j| match j % 4 {
            0 => Formula::letter(1, "x"),
            1 => Formula::less("x", "y"),
            2 => Formula::not(Formula::letter(1, "y")),
            _ => Formula::Eq("x".into(), "y".into()),
        })
        .collect();
    let tuple_image = |w: &WordStructure, x: usize, y: usize| -> usize {
        let ctx = VarAssignment::new().bind("x", x).bind("y", y);
        let letter: Vec<bool> = bodies.iter().map(|b| eval(b, w, &ctx).unwrap()).collect();
        delta.image(&letter)
    };
    for w in words_up_to(1, 5) {
        let n = w.len();
        // Full product in lexicographic tuple order.
        let mut full = m.identity();
        for x in 1..=n {
            for y in 1..=n {
                full = m.op(full, tuple_image(&w, x, y));
            }
        }
        // Blocks by first coordinate.
        let mut blocked = m.identity();
        for x in 1..=n {
            let mut block = m.identity();
            for y in 1..=n {
                block = m.op(block, tuple_image(&w, x, y));
            }
            blocked = m.op(blocked, block);
        }
        assert_eq!(full, blocked, "word {w}");
    }
}

/// The one-hot letter map inverts the one-hot encoding.
#[test]
fn one_hot_delta_inverts_encoding() {
    let m = symmetric(3);
    let delta = one_hot_delta(&m);
    for i in 0..m.size() {
        let letter: Vec<bool> = (0..m.size()).map(|j| j == i).collect();
        assert_eq!(delta.image(&letter), i);
    }
}

/// The blocked one-hot map takes a word with a single one-hot block (zeros
/// elsewhere) to the encoded element and everything else to the identity.
#[test]
fn block_one_hot_law() {
    for (blocks, block_size, identity) in [(2usize, 2usize, 0usize), (3, 2, 1), (2, 3, 2)] {
        let map = LetterMap::BlockOneHot {
            blocks,
            block_size,
            identity,
        };
        let width = blocks * block_size;
        for bits in 0..1usize << width {
            let letter: Vec<bool> = (0..width).map(|p| bits >> p & 1 == 1).collect();
            let ones: Vec<usize> = (0..width).filter(|&p| letter[p]).collect();
            let expected = match ones.as_slice() {
                [single] => single % block_size,
                _ => identity,
            };
            assert_eq!(map.image(&letter), expected, "bits {bits:b}");
        }
    }
}

/// The universal quantifier as a multiplication quantifier: products stay at
/// the identity exactly when every position satisfies the body.
#[test]
fn forall_as_multiplication_quantifier() {
    let m = u1();
    let mut images = BTreeMap::new();
    images.insert(vec![false], 1usize); // body false -> absorbing zero
    images.insert(vec![true], 0usize); // body true -> identity
    let as_mq = Formula::MultQ(Box::new(MultQ {
        monoid: Arc::new(m),
        accept: [0].into(),
        letter_map: LetterMap::explicit(1, images).unwrap(),
        order: OrderSpec::Lex,
        vars: vec!["x".into()],
        bodies: vec![Formula::letter(1, "x")],
    }));
    let plain = Formula::forall("x", Formula::letter(1, "x"));
    let ctx = VarAssignment::new();
    for w in words_up_to(1, 8) {
        assert_eq!(
            eval(&as_mq, &w, &ctx).unwrap(),
            eval(&plain, &w, &ctx).unwrap(),
            "word {w}"
        );
    }
}
