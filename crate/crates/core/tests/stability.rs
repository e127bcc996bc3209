mod common;

use common::*;
use githeight_core::{check_stability, Configuration, Rational, RationalVector};
use proptest::prelude::*;

fn permuted(c: &Configuration, order: &[usize]) -> Configuration {
    Configuration::new(c.ambient(), order.iter().map(|&i| (c.points()[i].vector.clone(), c.points()[i].multiplicity.clone()))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn agrees_with_subset_span_oracle(c in config_strategy(1..=3, 6, HALVES)) {
        let v = check_stability(&c).unwrap();
        prop_assert_eq!(v.status, oracle_status(&c));
        prop_assert!(v.is_consistent_with(&c));
    }

    #[test]
    fn invariant_under_permutation(c in config_strategy(1..=3, 6, HALVES), seed in any::<u64>()) {
        let mut order: Vec<usize> = (0..c.len()).collect();
        let mut r = rng(seed);
        for i in (1..order.len()).rev() {
            let j = (rand_chacha::rand_core::RngCore::next_u32(&mut r) as usize) % (i + 1);
            order.swap(i, j);
        }
        prop_assert_eq!(check_stability(&permuted(&c, &order)).unwrap().status, check_stability(&c).unwrap().status);
    }

    #[test]
    fn invariant_under_rescaling(c in config_strategy(1..=3, 6, HALVES),
                                 scales in proptest::collection::vec((1i64..=7, 1i64..=5, any::<bool>()), 6)) {
        let scaled = c.map_vectors(|i, v| {
            let (a, b, neg) = scales[i];
            v.scale(&q(if neg { -a } else { a }, b))
        }).unwrap();
        prop_assert_eq!(check_stability(&scaled).unwrap().status, check_stability(&c).unwrap().status);
    }

    #[test]
    fn invariant_under_sl(c in config_strategy(1..=3, 6, HALVES), seed in any::<u64>()) {
        let g = random_sl(&mut rng(seed), c.dim());
        prop_assert_eq!(check_stability(&c.transform(&g).unwrap()).unwrap().status, check_stability(&c).unwrap().status);
    }

    #[test]
    fn merging_equal_points_keeps_verdict(c in config_strategy(1..=3, 5, HALVES), k in 1i64..=4) {
        // the first point split into two projectively equal copies
        let p = &c.points()[0];
        let half = &p.multiplicity / Rational::from_integer(2.into());
        let mut pts: Vec<(RationalVector, Rational)> = vec![(p.vector.clone(), half.clone()), (p.vector.scale(&q(-k, 3)), half)];
        pts.extend(c.points()[1..].iter().map(|p| (p.vector.clone(), p.multiplicity.clone())));
        let split = Configuration::new(c.ambient(), pts).unwrap();
        prop_assert_eq!(split.len(), c.len());
        prop_assert_eq!(check_stability(&split).unwrap().status, check_stability(&c).unwrap().status);
    }
}
