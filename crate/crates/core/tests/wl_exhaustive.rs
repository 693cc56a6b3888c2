mod common;

use common::{connected_classes, random_permutation};
use spin_core::graph::{generators, Graph};
use spin_core::nn::rng_from_seed;
use spin_core::wl::{brute_force_isomorphic, wl_distinguish, WlVerdict};

#[test]
fn class_counts_match_known_enumeration() {
    // connected unlabeled graphs on 1..=6 nodes
    let counts: Vec<usize> = connected_classes(6).iter().map(|l| l.classes.len()).collect();
    assert_eq!(counts, vec![1, 1, 2, 6, 21, 112]);
}

#[test]
fn isomorphic_labelings_are_never_distinguished() {
    for level in connected_classes(6) {
        for members in level.classes.values() {
            let rep = &members[0];
            for other in members.iter().skip(1).take(12) {
                assert!(brute_force_isomorphic(rep, other).unwrap());
                assert_eq!(wl_distinguish(rep, other, None, false), WlVerdict::PossiblyIsomorphic);
            }
        }
    }
}

#[test]
fn distinguished_pairs_are_truly_non_isomorphic() {
    let levels = connected_classes(6);
    let reps: Vec<&Graph> = levels.iter().flat_map(|l| l.representatives()).collect();
    let mut blind = Vec::new();
    for (i, a) in reps.iter().enumerate() {
        for b in &reps[i + 1..] {
            assert!(!brute_force_isomorphic(a, b).unwrap());
            if !wl_distinguish(a, b, None, false).is_distinguished() {
                blind.push((a.edges().to_vec(), b.edges().to_vec()));
            }
        }
    }
    for (a, b) in &blind {
        assert_eq!(a.len(), b.len());
    }
    // all on six nodes: K3,3 vs the prism, and two non-regular pairs such as
    // two triangles joined by an edge vs a hexagon with a long chord
    assert_eq!(blind.len(), 3, "{blind:?}");
}

#[test]
fn regular_disjoint_union_is_possibly_isomorphic() {
    let c6 = generators::cycle(6);
    let two_c3 = generators::cycle(3).disjoint_union(&generators::cycle(3)).unwrap();
    assert_eq!(wl_distinguish(&c6, &two_c3, None, false), WlVerdict::PossiblyIsomorphic);
    assert!(!brute_force_isomorphic(&c6, &two_c3).unwrap());
}

#[test]
fn random_pairs_agree_with_brute_force_when_distinguished() {
    let mut rng = rng_from_seed(42);
    let mut distinguished = 0;
    for t in 0..500u64 {
        let n = 2 + (t as usize % 7);
        let g1 = generators::erdos_renyi(n, 0.5, &mut rng);
        let g2 = generators::erdos_renyi(n, 0.5, &mut rng);
        if wl_distinguish(&g1, &g2, None, false).is_distinguished() {
            distinguished += 1;
            assert!(!brute_force_isomorphic(&g1, &g2).unwrap());
        }
        let p = g1.permuted(&random_permutation(n, &mut rng)).unwrap();
        assert_eq!(wl_distinguish(&g1, &p, None, false), WlVerdict::PossiblyIsomorphic);
    }
    assert!(distinguished > 250);
}
