mod common;

use polystream_core::codegen::codegen_set;
use polystream_core::iset::{bindings, enumerate, enumerate_map, Bindings};
use polystream_core::script::{parse_map, parse_set};
use polystream_core::Set;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{bounded_case, random_exists_case, Case};

fn binds(case: &Case) -> Bindings<i64> {
    bindings(&case.bindings())
}

fn executed(set: &Set, b: &Bindings<i64>) -> Vec<Vec<i64>> {
    codegen_set(set)
        .unwrap()
        .trace(b)
        .unwrap()
        .into_iter()
        .map(|(_, args)| args)
        .collect()
}

#[test]
fn codegen_matches_box_oracle_on_seeded_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut nonempty = 0;
    for _ in 0..300 {
        let case = bounded_case(&mut rng, 20_000);
        let set: Set = parse_set(&case.text()).unwrap();
        let expected = case.oracle();
        nonempty += usize::from(!expected.is_empty());
        assert_eq!(executed(&set, &binds(&case)), expected, "{}", case.text());
    }
    assert!(nonempty > 100, "generator mostly produced empty sets ({nonempty})");
}

#[test]
fn enumeration_matches_box_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let case = bounded_case(&mut rng, 20_000);
        let set: Set = parse_set(&case.text()).unwrap();
        assert_eq!(enumerate(&set, &binds(&case)).unwrap(), case.oracle(), "{}", case.text());
    }
}

#[test]
fn existential_elimination_preserves_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let case = random_exists_case(&mut rng);
        let set: Set = parse_set(&case.text).unwrap();
        let normalized = set.normalize().unwrap();
        assert!(normalized.pieces().iter().all(|p| p.exists.is_empty()));
        let got = enumerate(&normalized, &bindings(&[])).unwrap();
        assert_eq!(got, case.oracle(), "{}", case.text);
    }
}

#[test]
fn tiling_existential_becomes_two_inequalities() {
    let s: Set = parse_set("{ S[k, tk] : exists rk : 0 <= rk < 32 and k = tk * 32 + rk }").unwrap();
    let n = s.normalize().unwrap();
    assert_eq!(n.to_string(), "{ S[k, tk] : 32 * tk + 31 >= k and k >= 32 * tk }");
}

#[test]
fn intersection_agrees_with_point_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let a = bounded_case(&mut rng, 5_000);
        let mut b = bounded_case(&mut rng, 5_000);
        if b.dims != a.dims {
            continue;
        }
        // share parameters so both sets see the same binding
        for row in b.rows.iter_mut() {
            row.params.resize(a.param_values.len(), 0);
        }
        b.param_values.clone_from(&a.param_values);
        let sa: Set = parse_set(&a.text()).unwrap();
        let sb: Set = parse_set(&b.text()).unwrap();
        let both = sa.intersect(&sb).unwrap();
        let pb: std::collections::BTreeSet<Vec<i64>> = enumerate(&sb, &binds(&a)).unwrap().into_iter().collect();
        let expected: Vec<Vec<i64>> = a.oracle().into_iter().filter(|p| pb.contains(p)).collect();
        assert_eq!(enumerate(&both, &binds(&a)).unwrap(), expected);
    }
}

#[test]
fn restriction_keeps_pairs_with_domain_inputs() {
    let m = parse_map::<i64>("[n] -> { S[i, j] -> [j, i + j] : i <= n }").unwrap();
    let d: Set = parse_set("[n] -> { S[i, j] : 0 <= i < 4 and 0 <= j <= i }").unwrap();
    let r = m.restrict_domain(&d).unwrap();
    let b = bindings(&[("n", 2)]);
    let pairs = enumerate_map(&r, &b).unwrap();
    let mut expected = Vec::new();
    for i in 0..=2i64 {
        for j in 0..=i {
            expected.push((vec![i, j], vec![j, i + j]));
        }
    }
    expected.sort();
    assert_eq!(pairs, expected);
}

#[test]
fn small_examples() {
    let s: Set = parse_set("{ S[i, j] : 1 <= i <= 2 and 1 <= j <= 2 }").unwrap();
    assert_eq!(
        enumerate(&s, &bindings(&[])).unwrap(),
        vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]
    );
    let a: Set = parse_set("{ S[i] : 0 <= i < 10 }").unwrap();
    let b: Set = parse_set("{ S[i] : 5 <= i < 20 }").unwrap();
    let pts = enumerate(&a.intersect(&b).unwrap(), &bindings(&[])).unwrap();
    assert_eq!(pts, (5..10).map(|i| vec![i]).collect::<Vec<_>>());
    let neg: Set = parse_set("{ S[i] : i < 0 }").unwrap();
    let pos: Set = parse_set("{ S[i] : i >= 0 }").unwrap();
    assert!(neg.intersect(&pos).unwrap().normalize().unwrap().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn codegen_equals_enumeration(seed in any::<u64>()) {
        let case = bounded_case(&mut ChaCha8Rng::seed_from_u64(seed), 20_000);
        let set: Set = parse_set(&case.text()).unwrap();
        let b = binds(&case);
        prop_assert_eq!(executed(&set, &b), enumerate(&set, &b).unwrap());
    }

    #[test]
    fn enumeration_is_strictly_increasing(seed in any::<u64>()) {
        let case = bounded_case(&mut ChaCha8Rng::seed_from_u64(seed), 20_000);
        let set: Set = parse_set(&case.text()).unwrap();
        let pts = enumerate(&set, &binds(&case)).unwrap();
        prop_assert!(pts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let case = bounded_case(&mut ChaCha8Rng::seed_from_u64(seed), 1_000_000);
        let set = parse_set::<i64>(&case.text()).unwrap().normalize().unwrap();
        let printed = set.to_string();
        let again = parse_set::<i64>(&printed).unwrap().normalize().unwrap();
        prop_assert_eq!(&again, &set);
        prop_assert_eq!(again.to_string(), printed);
    }

    #[test]
    fn normalization_preserves_points(seed in any::<u64>()) {
        let case = random_exists_case(&mut ChaCha8Rng::seed_from_u64(seed));
        let set: Set = parse_set(&case.text).unwrap();
        let got = enumerate(&set.normalize().unwrap(), &bindings(&[])).unwrap();
        prop_assert_eq!(got, case.oracle());
    }
}

#[test]
fn overflow_is_reported_not_wrapped() {
    let err = parse_set::<i32>("{ S[i] : 2000000000 * i + 2000000000 * i >= 0 }").unwrap_err();
    assert_eq!(err, polystream_core::Error::Overflow);
    let wide = parse_set::<i128>("{ S[i] : 2000000000 * i + 2000000000 * i >= 0 and i <= 1 and i >= 0 }").unwrap();
    assert_eq!(enumerate(&wide, &bindings(&[])).unwrap(), vec![vec![0], vec![1]]);
}
