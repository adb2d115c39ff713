use std::cmp::Ordering;
use std::sync::OnceLock;

use num_bigint::BigUint;
use proptest::prelude::*;
use proptest::sample::select;

use betashift::admissibility::{self, check_condition4, check_condition4_exhaustive, is_admissible, member_omega};
use betashift::density::{periodize_lower, periodize_upper};
use betashift::dynamics::{self, ExactParams, ParamSource, Point, Side};
use betashift::real::Real;
use betashift::subshift::{build_automaton, count_words_bruteforce};
use betashift::words::{lex_compare, parse_word, EventuallyPeriodicWord, FiniteWord};

type Pair = (EventuallyPeriodicWord, EventuallyPeriodicWord);

fn letters(min: usize, max: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, min..=max)
}

fn word() -> impl Strategy<Value = EventuallyPeriodicWord> {
    (letters(0, 4), letters(1, 5))
        .prop_map(|(pre, per)| EventuallyPeriodicWord::new(FiniteWord::new(pre), FiniteWord::new(per)).unwrap())
}

fn periodic_words(first: u8, len: usize) -> Vec<EventuallyPeriodicWord> {
    (0..1u32 << (len - 1))
        .map(|m| {
            let mut v = vec![first];
            v.extend((0..len - 1).map(|t| ((m >> t) & 1) as u8));
            EventuallyPeriodicWord::periodic(FiniteWord::new(v)).unwrap()
        })
        .filter(|w| w.period_len() == len)
        .collect()
}

/// Pairs of periodic words (periods 2 to 6) that satisfy conditions 1 and 2.
fn member_pairs() -> Vec<Pair> {
    static PAIRS: OnceLock<Vec<Pair>> = OnceLock::new();
    PAIRS
        .get_or_init(|| {
            let mut out = Vec::new();
            for p in 2..=6 {
                for q in 2..=6 {
                    for l in periodic_words(0, p) {
                        for u in periodic_words(1, q) {
                            if admissibility::check_condition2(&l, &u) {
                                out.push((l.clone(), u));
                            }
                        }
                    }
                }
            }
            out
        })
        .clone()
}

fn small_pairs() -> Vec<Pair> {
    member_pairs().into_iter().filter(|(l, u)| l.period_len() <= 4 && u.period_len() <= 4).collect()
}

fn interior() -> impl Strategy<Value = ExactParams> {
    (1_050u32..1_980, 20u32..980).prop_map(|(b, t)| {
        let beta = format!("{b}/1000");
        ExactParams::parse(&beta, &format!("{t}/1000 * (2 - {beta})")).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonical_form_is_unique(pre in letters(0, 4), per in letters(1, 4), rot in 0usize..4, rep in 1usize..3) {
        let base = EventuallyPeriodicWord::new(FiniteWord::new(pre.clone()), FiniteWord::new(per.clone())).unwrap();
        // push `rot` letters of the cycle into the preperiod and repeat the period
        let mut pre2 = pre.clone();
        let mut per2 = per.clone();
        for _ in 0..rot {
            let head = per2.remove(0);
            pre2.push(head);
            per2.push(head);
        }
        let per2: Vec<u8> = per2.iter().cycle().take(per2.len() * rep).copied().collect();
        let other = EventuallyPeriodicWord::new(FiniteWord::new(pre2), FiniteWord::new(per2)).unwrap();
        prop_assert_eq!(&base, &other);
        prop_assert_eq!(parse_word(&base.to_string()).unwrap(), base.clone());
        for i in 0..24 {
            let j = if i < pre.len() { pre[i] } else { per[(i - pre.len()) % per.len()] };
            prop_assert_eq!(base.letter(i), j);
        }
    }

    #[test]
    fn shift_drops_letters(w in word(), n in 0usize..12) {
        let s = w.shift(n);
        for i in 0..20 {
            prop_assert_eq!(s.letter(i), w.letter(n + i));
        }
        prop_assert_eq!(w.shift(n).shift(1), w.shift(n + 1));
    }

    #[test]
    fn complement_reverses_order(x in word(), y in word()) {
        prop_assert_eq!(lex_compare(&x, &y), lex_compare(&y.complement(), &x.complement()));
        prop_assert_eq!(x.complement().complement(), x);
    }

    #[test]
    fn membership_is_shift_stable((l, u) in select(member_pairs()), xi in word(), n in 0usize..6) {
        for side in [Side::Plus, Side::Minus] {
            if member_omega(&l, &u, &xi, side) {
                prop_assert!(member_omega(&l, &u, &xi.shift(n), side));
            }
        }
    }

    #[test]
    fn complement_duality((l, u) in select(member_pairs()), xi in word()) {
        let (dl, du) = (u.complement(), l.complement());
        prop_assert_eq!(member_omega(&l, &u, &xi, Side::Minus), member_omega(&dl, &du, &xi.complement(), Side::Plus));
        prop_assert_eq!(member_omega(&l, &u, &xi, Side::Plus), member_omega(&dl, &du, &xi.complement(), Side::Minus));
        let (a, b) = (is_admissible(&l, &u), is_admissible(&dl, &du));
        prop_assert_eq!((a.cond2, a.cond3, a.cond4), (b.cond2, b.cond3, b.cond4));
        let (ta, tb) = (build_automaton(&l, &u).unwrap(), build_automaton(&dl, &du).unwrap());
        for n in 0..10 {
            prop_assert_eq!(ta.count_words(n), tb.count_words(n));
        }
    }

    #[test]
    fn counts_match_bruteforce((l, u) in select(member_pairs()), n in 1usize..9) {
        let aut = build_automaton(&l, &u).unwrap();
        prop_assert_eq!(aut.count_words(n), BigUint::from(count_words_bruteforce(&l, &u, n)));
    }

    #[test]
    fn counts_are_submultiplicative((l, u) in select(member_pairs()), m in 1usize..8, n in 1usize..8) {
        let aut = build_automaton(&l, &u).unwrap();
        prop_assert!(aut.count_words(m + n) <= aut.count_words(m) * aut.count_words(n));
    }

    #[test]
    fn entropy_sandwich((l, u) in select(member_pairs()), n in 1usize..16) {
        let aut = build_automaton(&l, &u).unwrap();
        prop_assume!(!aut.is_empty());
        let rho = aut.spectral_radius(128);
        let count: f64 = aut.count_words(n).to_string().parse().unwrap();
        prop_assert!(count.ln() / n as f64 >= rho.lower().to_f64().ln() - 1e-9);
        if aut.has_positive_entropy() {
            let cw = aut.spectral_radius_power(128);
            prop_assert!(cw.overlaps(&rho) || (cw.to_f64() - rho.to_f64()).abs() < 1e-9);
        }
    }

    #[test]
    fn expansion_conjugates_shift(src in interior(), k in 0u32..64, side in prop_oneof![Just(Side::Plus), Just(Side::Minus)]) {
        let p = src.params(256).unwrap();
        let x = Point::Value(Real::from_ratio(&(2 * k + 1).into(), &128.into(), 256));
        let word = dynamics::expand(&p, &x, 33, side).unwrap();
        let image = dynamics::apply_map(&p, &x, side).unwrap();
        let shifted = dynamics::expand(&p, &image, 32, side).unwrap();
        prop_assert_eq!(&word.letters()[1..], shifted.letters());
    }

    #[test]
    fn projection_inverts_expansion(src in interior(), k in 0u32..64, side in prop_oneof![Just(Side::Plus), Just(Side::Minus)]) {
        let bits = 256;
        let p = src.params(bits).unwrap();
        let beta = p.beta().to_f64();
        let n = ((22.0 * 10f64.ln() - (beta - 1.0).ln()) / beta.ln()).ceil() as usize;
        let x = Real::from_ratio(&(2 * k + 1).into(), &128.into(), bits);
        let digits = dynamics::expand(&p, &Point::Value(x.clone()), n, side).unwrap();
        let approx = EventuallyPeriodicWord::new(digits, FiniteWord::new(vec![0])).unwrap();
        let err = dynamics::project(&p, &approx).sub(&x).abs_upper();
        prop_assert!(err.lt(&Real::from_f64(1e-20, bits)));
    }

    #[test]
    fn periodization_traces_verify(src in interior(), upper in any::<bool>(), pick in 0usize..1000) {
        let p = src.params(512).unwrap();
        let pair = dynamics::kneading(&p, 200).unwrap();
        let (mut w, cut) = if upper { (pair.upper, 1) } else { (pair.lower, 0) };
        let cuts: Vec<usize> = (3..=48).filter(|&n| w.get(n - 1) == cut).collect();
        prop_assume!(!cuts.is_empty());
        let n = cuts[pick % cuts.len()];
        let t = if upper { periodize_upper(&mut w, n) } else { periodize_lower(&mut w, n) };
        let t = match t {
            Ok(t) => t,
            Err(betashift::Error::CallbackExhausted { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert!(t.verify());
        prop_assert_eq!(t.n, n);
        prop_assert!(t.j >= 1 && t.j <= n && t.k >= n);
        prop_assert_eq!(t.result.period_len() <= t.k, true);
        let input = EventuallyPeriodicWord::new(t.prefix.clone(), FiniteWord::new(vec![cut])).unwrap();
        let expected = if upper { Ordering::Less } else { Ordering::Greater };
        prop_assert_eq!(lex_compare(&t.result, &input), expected);
    }

    #[test]
    fn condition4_prefix_search_is_exact((l, u) in select(small_pairs())) {
        prop_assert_eq!(check_condition4(&l, &u).0, check_condition4_exhaustive(&l, &u).0);
    }
}
