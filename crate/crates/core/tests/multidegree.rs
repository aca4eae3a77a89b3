use lls_core::multidegree::default_three_positions;
use lls_core::{
    candidate_multidegrees, default_multidegree, twist_vanishing_components, ChainCurve, Enumerator, Params,
    SwapFilter, TwistVector, VanishingTable,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

const EXAMPLE: &str = include_str!("fixtures/g22_example.json");

fn example() -> VanishingTable {
    VanishingTable::from_json(EXAMPLE).unwrap()
}

fn from_deltas(r: usize, d: i32, deltas: &[usize]) -> VanishingTable {
    let mut cols = vec![(0..=r as i32).collect::<Vec<_>>()];
    for &dj in deltas {
        let prev = cols.last().unwrap();
        cols.push((0..=r).map(|j| prev[j] + i32::from(j != dj)).collect());
    }
    VanishingTable::from_a_sequence(ChainCurve::elliptic(deltas.len()).unwrap(), r, d, &cols).unwrap()
}

/// Threshold scan straight from the a-sequences: counts of sorted λ values
/// at least ℓ, then the six placement rules.
fn default_threes_oracle(t: &VanishingTable) -> Option<BTreeSet<usize>> {
    let n = t.n();
    let count = |i: usize, l: i32| -> usize {
        let mut next: Vec<i32> = (0..7).map(|j| t.a_at(i + 1, j)).collect();
        next.sort_unstable();
        (0..7).filter(|&j| i as i32 + j as i32 - next[j] >= l).count()
    };
    let pair = |i: usize, p: i32, q: i32| count(i, p) + count(i, q);
    let hits = |p, q, v| (1..=n).filter(move |&i| pair(i, p, q) == v);
    let second = hits(1, 2, 5).next()?;
    let third = hits(1, 3, 7).next()?;
    let fourth = hits(1, 3, 7).next_back()? + 1;
    let fifth = hits(2, 3, 9).next_back()? + 1;
    let set: BTreeSet<usize> = [1, second, third, fourth, fifth, n].into_iter().collect();
    (set.len() == 6 && set.iter().all(|&i| i <= n)).then_some(set)
}

fn threes(w: &TwistVector) -> BTreeSet<usize> {
    w.three_columns().into_iter().collect()
}

#[test]
fn example_default_has_threes_at_the_printed_columns() {
    let w = default_multidegree(&example()).unwrap();
    let chain = ChainCurve::elliptic(22).unwrap();
    assert!(w.is_unimaginative(&chain, 25));
    assert_eq!(w.three_columns(), vec![1, 5, 7, 16, 18, 22]);
    let gamma = w.gamma_profile(&chain).unwrap();
    let jumps: Vec<usize> = (1..=22).filter(|&i| gamma[i - 1] > if i == 1 { 0 } else { gamma[i - 2] }).collect();
    assert_eq!(jumps, vec![1, 5, 7, 16, 18, 22]);
    assert_eq!(gamma[21], 6);
    assert_eq!(threes_oracle_or_panic(&example()), threes(&w));
}

fn threes_oracle_or_panic(t: &VanishingTable) -> BTreeSet<usize> {
    default_threes_oracle(t).expect("thresholds attained")
}

#[test]
fn row_major_rho_zero_default() {
    let t = from_deltas(6, 24, &(0..21).map(|i| i % 7).collect::<Vec<_>>());
    t.validate().unwrap();
    let w = default_multidegree(&t).unwrap();
    assert_eq!(w.three_columns(), vec![1, 5, 7, 15, 17, 21]);
    assert_eq!(threes_oracle_or_panic(&t), threes(&w));
}

#[test]
fn second_three_cannot_precede_column_five() {
    // λ̄^1 + λ̄^2 counts boxes in the first two shape columns, and each
    // column adds at most one box, so the value 5 needs five columns
    let t = from_deltas(6, 24, &[0, 1, 0, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6, 0, 1, 2, 3, 4, 5, 6]);
    t.validate().unwrap();
    let ls = t.lambda_sequence();
    assert_eq!(ls.bar_pair(5, 1, 2), 5);
    assert_eq!(ls.bar_pair(4, 1, 2), 4);
    assert_eq!(default_three_positions(&t, &ls).unwrap()[1], 5);
    let e = Enumerator::new(Params::new(21, 6, 24, None).unwrap()).unwrap();
    for k in 0..500 {
        let t = e.sample(&SwapFilter::all(0), 11, k).unwrap();
        let ls = t.lambda_sequence();
        assert!(default_three_positions(&t, &ls).unwrap()[1] >= 5);
    }
}

#[test]
fn default_agrees_with_threshold_scan() {
    for (g, strata) in [(21usize, vec![0usize]), (22, vec![0, 1]), (23, vec![0, 1, 2])] {
        let e = Enumerator::new(Params::new(g, 6, g as i32 + 3, None).unwrap()).unwrap();
        for s in strata {
            for k in 0..300 {
                let t = e.sample(&SwapFilter::only(s), 5, k).unwrap();
                let got = default_multidegree(&t).ok().map(|w| threes(&w));
                assert_eq!(got, default_threes_oracle(&t), "g={} swaps={} draw {}", g, s, k);
            }
        }
    }
}

#[test]
fn candidates_are_unimaginative_and_distinct() {
    let e = Enumerator::new(Params::new(23, 6, 26, None).unwrap()).unwrap();
    let chain = ChainCurve::elliptic(23).unwrap();
    let mut tables = vec![];
    for s in 0..=2 {
        tables.extend((0..100).map(|k| e.sample(&SwapFilter::only(s), 17, k).unwrap()));
    }
    for t in tables {
        let cands = candidate_multidegrees(&t);
        let default = default_multidegree(&t).unwrap();
        assert_eq!(cands[0], default);
        assert_eq!(cands.iter().filter(|w| **w == default).count(), 1);
        let distinct: BTreeSet<Vec<i64>> = cands.iter().map(|w| w.c().to_vec()).collect();
        assert_eq!(distinct.len(), cands.len());
        for w in &cands {
            assert!(w.is_unimaginative(&chain, 26));
            let gamma = w.gamma_profile(&chain).unwrap();
            assert_eq!(gamma[22], 6);
            assert!(gamma.windows(2).all(|p| p[1] - p[0] <= 1));
        }
    }
    let ex = candidate_multidegrees(&example());
    assert_eq!(ex.iter().filter(|w| w.c() == default_multidegree(&example()).unwrap().c()).count(), 1);
}

#[test]
fn zero_twist_concentrates_on_the_last_component() {
    let w = TwistVector::new(25, vec![0; 21]).unwrap();
    let mut want = vec![0; 22];
    want[21] = 25;
    assert_eq!(w.component_degrees(), want);
}

#[test]
fn single_elliptic_component() {
    let chain = ChainCurve::elliptic(1).unwrap();
    let two = TwistVector::new(2, vec![]).unwrap();
    let three = TwistVector::new(3, vec![]).unwrap();
    assert_eq!(two.gamma_profile(&chain).unwrap(), vec![0]);
    assert_eq!(three.gamma_profile(&chain).unwrap(), vec![1]);
    assert!(TwistVector::new(4, vec![]).unwrap().gamma_profile(&chain).is_err());
}

#[test]
fn the_two_sets_overlap_in_general() {
    // m = (3, 2, 0) going one way and its negative going back: component 2
    // is above the minimum of both
    let w = TwistVector::new(4, vec![0, 0]).unwrap();
    let w2 = TwistVector::new(4, vec![1, 2]).unwrap();
    assert_eq!(twist_vanishing_components(&w, &w2).unwrap(), BTreeSet::from([1, 2]));
    assert_eq!(twist_vanishing_components(&w2, &w).unwrap(), BTreeSet::from([2, 3]));
}

/// Independent form of the vanishing locus: prefix sums of c − c′ differ
/// from the suffix sums of c′ − c by a constant.
fn vanishing_oracle(w: &TwistVector, w2: &TwistVector) -> BTreeSet<usize> {
    let n = w.n();
    let m: Vec<i64> = (1..=n).map(|i| (2..=i).map(|j| w.c_at(j) - w2.c_at(j)).sum()).collect();
    let min = *m.iter().min().unwrap();
    (1..=n).filter(|&i| m[i - 1] > min).collect()
}

fn random_twist(rng: &mut ChaCha8Rng, n: usize, total: i64) -> TwistVector {
    let mut c: Vec<i64> = (1..n).map(|_| rng.gen_range(0..=total)).collect();
    c.sort_unstable();
    TwistVector::new(total, c).unwrap()
}

#[test]
fn vanishing_components_match_the_oracle_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=8);
        let total = rng.gen_range(0..=12);
        let w = random_twist(&mut rng, n, total);
        let w2 = random_twist(&mut rng, n, total);
        let v = twist_vanishing_components(&w, &w2).unwrap();
        assert_eq!(v, vanishing_oracle(&w, &w2));
        let back = twist_vanishing_components(&w2, &w).unwrap();
        if w != w2 {
            // above the minimum one way or below the maximum the other
            assert!((1..=n).all(|i| v.contains(&i) || back.contains(&i)));
        } else {
            assert!(v.is_empty());
        }
        for i in 1..=n {
            if (i > 1 && w2.c_at(i) < w.c_at(i)) || (i < n && w2.c_at(i + 1) > w.c_at(i + 1)) {
                assert!(v.contains(&i));
            }
            if i > 1 && w2.c_at(i) == w.c_at(i) {
                assert_eq!(v.contains(&i), v.contains(&(i - 1)));
            }
        }
    }
}

proptest! {
    #[test]
    fn degrees_round_trip(degrees in proptest::collection::vec(0i64..6, 1..24)) {
        let w = TwistVector::from_degrees(&degrees).unwrap();
        prop_assert_eq!(w.component_degrees(), degrees.clone());
        prop_assert_eq!(w.total(), degrees.iter().sum::<i64>());
        let again = TwistVector::new(w.total(), w.c().to_vec()).unwrap();
        prop_assert_eq!(again, w);
    }

    #[test]
    fn bounded_vectors_are_determined_by_degrees(total in 0i64..20, raw in proptest::collection::vec(0i64..20, 0..10)) {
        let mut c: Vec<i64> = raw.into_iter().map(|x| x % (total + 1)).collect();
        c.sort_unstable();
        let w = TwistVector::new(total, c).unwrap();
        prop_assert_eq!(TwistVector::from_degrees(&w.component_degrees()).unwrap(), w);
    }
}
