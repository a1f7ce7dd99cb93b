use polystream_core::codegen::{codegen_map, codegen_set};
use polystream_core::iset::{bindings, enumerate, enumerate_map, Bindings};
use polystream_core::script::parse_set;
use polystream_core::transforms::{interchange, interleave, tile};
use polystream_core::{Map, Set};

fn cube(n_name: &str) -> Set {
    parse_set(&format!(
        "[{n_name}] -> {{ S[k, j, i] : 1 <= k <= {n_name} and 1 <= j <= {n_name} and 1 <= i <= {n_name} }}"
    ))
    .unwrap()
}

fn executed(m: &Map, b: &Bindings<i64>) -> Vec<Vec<i64>> {
    codegen_map(m).unwrap().trace(b).unwrap().into_iter().map(|(_, a)| a).collect()
}

/// Domain points ordered by their image under `m`, computed by enumeration.
fn by_image(m: &Map, b: &Bindings<i64>) -> Vec<Vec<i64>> {
    let mut pairs = enumerate_map(m, b).unwrap();
    pairs.sort_by(|x, y| x.1.cmp(&y.1));
    pairs.into_iter().map(|(i, _)| i).collect()
}

fn sorted(mut v: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    v.sort();
    v
}

#[test]
fn swap_visits_heat_interior_column_major() {
    let dom: Set = parse_set("[n] -> { S[i, j] : 1 <= i < n - 1 and 1 <= j < n - 1 }").unwrap();
    let m: Map = Map::from(interchange("S", &[1, 0]).unwrap()).restrict_domain(&dom).unwrap();
    let got = executed(&m, &bindings(&[("n", 7)]));
    let mut expected: Vec<Vec<i64>> = (1..=5).flat_map(|i| (1..=5).map(move |j| vec![i, j])).collect();
    expected.sort_by_key(|p| (p[1], p[0]));
    assert_eq!(got.len(), 25);
    assert_eq!(got, expected);
}

#[test]
fn rotation_follows_rotated_lexicographic_order() {
    let dom: Set = parse_set("{ S[a, b, c] : 0 <= a < 4 and 0 <= b < 4 and 0 <= c < 4 }").unwrap();
    let m: Map = Map::from(interchange("S", &[2, 0, 1]).unwrap()).restrict_domain(&dom).unwrap();
    let got = executed(&m, &bindings(&[]));
    let mut expected = enumerate(&dom, &bindings(&[])).unwrap();
    expected.sort_by_key(|p| (p[2], p[0], p[1]));
    assert_eq!(got, expected);
}

#[test]
fn identity_permutation_matches_plain_scan() {
    let dom = cube("n");
    let b = bindings(&[("n", 5)]);
    let m: Map = Map::from(interchange("S", &[0, 1, 2]).unwrap()).restrict_domain(&dom).unwrap();
    let plain: Vec<Vec<i64>> = codegen_set(&dom).unwrap().trace(&b).unwrap().into_iter().map(|(_, a)| a).collect();
    assert_eq!(executed(&m, &b), plain);
}

#[test]
fn tilings_preserve_points_and_follow_tile_order() {
    let dom = cube("n");
    let cases: [(&[usize], &[i64]); 5] = [
        (&[0, 1, 2], &[32, 64, 16]),
        (&[0, 1, 2], &[16, 16, 16]),
        (&[1, 2], &[32, 32]),
        (&[1, 2], &[64, 16]),
        (&[2], &[16]),
    ];
    for n in [1, 17, 40] {
        let b = bindings(&[("n", n)]);
        let all = enumerate(&dom, &b).unwrap();
        for (dims, sizes) in cases {
            let m: Map = Map::from(tile("S", 3, dims, sizes).unwrap()).restrict_domain(&dom).unwrap();
            let got = executed(&m, &b);
            assert_eq!(sorted(got.clone()), all, "tile {dims:?} {sizes:?} at n={n}");
            if n <= 17 {
                assert_eq!(got, by_image(&m, &b), "tile {dims:?} {sizes:?} at n={n}");
            }
        }
    }
}

#[test]
fn unit_tiles_keep_the_original_order() {
    let dom = cube("n");
    let b = bindings(&[("n", 4)]);
    let m: Map = Map::from(tile("S", 3, &[0, 1, 2], &[1, 1, 1]).unwrap()).restrict_domain(&dom).unwrap();
    assert_eq!(executed(&m, &b), enumerate(&dom, &b).unwrap());
}

#[test]
fn interleavings_preserve_points() {
    let dom: Set = parse_set("[n] -> { S[i] : 0 <= i < n }").unwrap();
    for f in [1usize, 2, 4] {
        let m = interleave::<i64>("S", 1, f, "n", "h").unwrap().restrict_domain(&dom).unwrap();
        for n in [8i64, 24, 64] {
            let b = bindings(&[("n", n), ("h", n / f as i64)]);
            let got = executed(&m, &b);
            assert_eq!(sorted(got.clone()), enumerate(&dom, &b).unwrap(), "f={f} n={n}");
            assert_eq!(got, by_image(&m, &b), "f={f} n={n}");
        }
    }
}

#[test]
fn interleave_by_one_is_the_identity_order() {
    let dom: Set = parse_set("[n] -> { S[i] : 0 <= i < n }").unwrap();
    let m = interleave::<i64>("S", 1, 1, "n", "h").unwrap().restrict_domain(&dom).unwrap();
    let b = bindings(&[("n", 6), ("h", 6)]);
    assert_eq!(executed(&m, &b), enumerate(&dom, &b).unwrap());
}

#[test]
fn interleave_without_divisibility_runs_nothing() {
    let dom: Set = parse_set("[n] -> { S[i] : 0 <= i < n }").unwrap();
    let m = interleave::<i64>("S", 1, 2, "n", "h").unwrap().restrict_domain(&dom).unwrap();
    assert!(executed(&m, &bindings(&[("n", 7), ("h", 3)])).is_empty());
}
