//! One-dimensional Weisfeiler-Lehman color refinement.
//!
//! Colors are canonical integers produced from a sorted table of exact
//! signatures `(old color, sorted neighbor colors)`; no hashing is involved,
//! so two nodes share a color iff their signatures are equal. When two graphs
//! are compared the table is built jointly over both graphs at every round.

use std::cmp::Ordering;

use thiserror::Error;

use crate::graph::Graph;

/// Largest graph accepted by [`brute_force_isomorphic`].
pub const BRUTE_FORCE_MAX_NODES: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WlError {
    #[error("brute-force isomorphism is limited to {limit} nodes, got {nodes}")]
    TooLarge { nodes: usize, limit: usize },
}

/// Per-node colors after `iteration` refinement rounds, dense in `0..num_distinct`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorAssignment {
    colors: Vec<usize>,
    iteration: usize,
}

impl ColorAssignment {
    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn num_distinct(&self) -> usize {
        let mut seen = self.colors.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// Color counts indexed by color id.
    pub fn histogram(&self, num_colors: usize) -> Vec<usize> {
        let mut h = vec![0; num_colors];
        for &c in &self.colors {
            h[c] += 1;
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlVerdict {
    /// Color histograms first differ after this many refinement rounds.
    Distinguished(usize),
    PossiblyIsomorphic,
}

impl WlVerdict {
    pub fn is_distinguished(self) -> bool {
        matches!(self, WlVerdict::Distinguished(_))
    }
}

/// Feature row as a totally ordered key; `-0.0` and `0.0` compare equal.
fn feature_key(row: &[f64]) -> Vec<u64> {
    row.iter().map(|&x| if x == 0.0 { 0 } else { x.to_bits() }).collect()
}

/// Assigns dense ids to `keys` by position in their sorted, deduplicated list.
fn canonicalize<K: Ord + Clone>(keys: &[K]) -> (Vec<usize>, usize) {
    let mut table: Vec<K> = keys.to_vec();
    table.sort_unstable();
    table.dedup();
    let ids = keys
        .iter()
        .map(|k| table.binary_search(k).expect("key present in its own table"))
        .collect();
    (ids, table.len())
}

fn init_keys(g: &Graph, use_features: bool) -> Vec<Vec<u64>> {
    (0..g.node_count())
        .map(|v| {
            if use_features {
                feature_key(g.features().row(v))
            } else {
                Vec::new()
            }
        })
        .collect()
}

fn signatures(neighbors: &[Vec<usize>], colors: &[usize]) -> Vec<(usize, Vec<usize>)> {
    neighbors
        .iter()
        .enumerate()
        .map(|(v, nbrs)| {
            let mut multiset: Vec<usize> = nbrs.iter().map(|&u| colors[u]).collect();
            multiset.sort_unstable();
            (colors[v], multiset)
        })
        .collect()
}

/// Initial coloring: equal feature rows get equal colors, or a single color
/// for every node when `use_features` is off.
pub fn wl_init(g: &Graph, use_features: bool) -> ColorAssignment {
    let (colors, _) = canonicalize(&init_keys(g, use_features));
    ColorAssignment { colors, iteration: 0 }
}

/// One refinement round on a single graph.
pub fn wl_step(g: &Graph, c: &ColorAssignment) -> ColorAssignment {
    assert_eq!(c.colors.len(), g.node_count(), "coloring does not match the graph");
    let sigs = signatures(&g.neighbors(), &c.colors);
    let (colors, _) = canonicalize(&sigs);
    ColorAssignment {
        colors,
        iteration: c.iteration + 1,
    }
}

/// Refines until the partition stops changing; returns every round including round 0.
pub fn wl_refine(g: &Graph, use_features: bool) -> Vec<ColorAssignment> {
    let mut rounds = vec![wl_init(g, use_features)];
    loop {
        let last = rounds.last().unwrap();
        let next = wl_step(g, last);
        if next.num_distinct() == last.num_distinct() {
            return rounds;
        }
        rounds.push(next);
    }
}

/// Joint coloring of two graphs sharing one signature table.
struct JointColoring {
    first: Vec<usize>,
    second: Vec<usize>,
    num_colors: usize,
}

impl JointColoring {
    fn from_keys<K: Ord + Clone>(a: Vec<K>, b: Vec<K>) -> Self {
        let split = a.len();
        let mut keys = a;
        keys.extend(b);
        let (mut ids, num_colors) = canonicalize(&keys);
        let second = ids.split_off(split);
        Self {
            first: ids,
            second,
            num_colors,
        }
    }

    fn histograms_differ(&self) -> bool {
        let hist = |colors: &[usize]| {
            let mut h = vec![0usize; self.num_colors];
            for &c in colors {
                h[c] += 1;
            }
            h
        };
        hist(&self.first) != hist(&self.second)
    }
}

/// Runs refinement on both graphs simultaneously and reports the first round
/// at which their color histograms differ.
///
/// `max_iters` defaults to the larger node count, by which point refinement
/// has stabilized.
pub fn wl_distinguish(g1: &Graph, g2: &Graph, max_iters: Option<usize>, use_features: bool) -> WlVerdict {
    let max_iters = max_iters.unwrap_or_else(|| g1.node_count().max(g2.node_count()));
    let (n1, n2) = (g1.neighbors(), g2.neighbors());
    let mut joint = JointColoring::from_keys(init_keys(g1, use_features), init_keys(g2, use_features));
    for t in 0..=max_iters {
        if joint.histograms_differ() {
            return WlVerdict::Distinguished(t);
        }
        if t == max_iters {
            break;
        }
        let next = JointColoring::from_keys(signatures(&n1, &joint.first), signatures(&n2, &joint.second));
        // signatures contain the old color, so equal counts mean an unchanged partition
        if next.num_colors == joint.num_colors {
            break;
        }
        joint = next;
    }
    WlVerdict::PossiblyIsomorphic
}

fn adjacency_bits(g: &Graph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut adj = vec![vec![false; n]; n];
    for &(u, v) in g.edges() {
        adj[u][v] = true;
        adj[v][u] = true;
    }
    adj
}

/// Exhaustive isomorphism test (edges and feature rows) by backtracking over
/// node bijections. Limited to [`BRUTE_FORCE_MAX_NODES`] nodes.
pub fn brute_force_isomorphic(g1: &Graph, g2: &Graph) -> Result<bool, WlError> {
    for g in [g1, g2] {
        if g.node_count() > BRUTE_FORCE_MAX_NODES {
            return Err(WlError::TooLarge {
                nodes: g.node_count(),
                limit: BRUTE_FORCE_MAX_NODES,
            });
        }
    }
    if g1.node_count() != g2.node_count() || g1.edge_count() != g2.edge_count() || g1.feature_dim() != g2.feature_dim()
    {
        return Ok(false);
    }
    let (d1, d2) = (g1.degrees(), g2.degrees());
    let mut s1 = d1.clone();
    let mut s2 = d2.clone();
    s1.sort_unstable();
    s2.sort_unstable();
    if s1 != s2 {
        return Ok(false);
    }
    let n = g1.node_count();
    let (a1, a2) = (adjacency_bits(g1), adjacency_bits(g2));
    let k1: Vec<Vec<u64>> = (0..n).map(|v| feature_key(g1.features().row(v))).collect();
    let k2: Vec<Vec<u64>> = (0..n).map(|v| feature_key(g2.features().row(v))).collect();

    struct Search<'a> {
        a1: &'a [Vec<bool>],
        a2: &'a [Vec<bool>],
        compatible: Vec<Vec<bool>>,
        mapping: Vec<usize>,
        used: Vec<bool>,
    }

    impl Search<'_> {
        fn extend(&mut self, v: usize) -> bool {
            let n = self.mapping.len();
            if v == n {
                return true;
            }
            for w in 0..n {
                if self.used[w] || !self.compatible[v][w] {
                    continue;
                }
                let consistent = (0..v).all(|u| self.a1[v][u] == self.a2[w][self.mapping[u]]);
                if !consistent {
                    continue;
                }
                self.mapping[v] = w;
                self.used[w] = true;
                if self.extend(v + 1) {
                    return true;
                }
                self.used[w] = false;
            }
            false
        }
    }

    let compatible = (0..n)
        .map(|v| {
            (0..n)
                .map(|w| d1[v] == d2[w] && k1[v].cmp(&k2[w]) == Ordering::Equal)
                .collect()
        })
        .collect();
    let mut search = Search {
        a1: &a1,
        a2: &a2,
        compatible,
        mapping: vec![usize::MAX; n],
        used: vec![false; n],
    };
    Ok(search.extend(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generators::{complete, cycle, path, star};
    use crate::nn::DenseMatrix;

    fn two_triangles() -> Graph {
        complete(3).disjoint_union(&complete(3)).unwrap()
    }

    #[test]
    fn uniform_init_is_single_color() {
        let c = wl_init(&star(4), false);
        assert!(c.colors().iter().all(|&x| x == 0));
        assert_eq!(c.iteration(), 0);
    }

    #[test]
    fn feature_init_partitions_equal_rows() {
        let g = Graph::new(3, [], DenseMatrix::from_rows(&[[1.0], [1.0], [2.0]])).unwrap();
        let c = wl_init(&g, true).colors().to_vec();
        assert_eq!(c[0], c[1]);
        assert_ne!(c[0], c[2]);

        let g = Graph::new(3, [], DenseMatrix::from_rows(&[[1.0, 0.0], [1.0, -0.0], [1.0, 0.0]])).unwrap();
        assert_eq!(wl_init(&g, true).num_distinct(), 1);
    }

    #[test]
    fn path_endpoints_share_a_color() {
        let c = wl_step(&path(3), &wl_init(&path(3), false));
        let c = c.colors();
        assert_eq!(c[0], c[2]);
        assert_ne!(c[0], c[1]);
    }

    #[test]
    fn triangle_is_stable_and_star_splits() {
        let k3 = complete(3);
        assert_eq!(wl_step(&k3, &wl_init(&k3, false)).num_distinct(), 1);
        let s3 = star(3);
        assert_eq!(wl_step(&s3, &wl_init(&s3, false)).num_distinct(), 2);
    }

    #[test]
    fn verdicts_on_classic_pairs() {
        assert_eq!(
            wl_distinguish(&complete(3), &complete(3), None, false),
            WlVerdict::PossiblyIsomorphic
        );
        assert_eq!(
            wl_distinguish(&cycle(6), &two_triangles(), None, false),
            WlVerdict::PossiblyIsomorphic
        );
        assert_eq!(
            wl_distinguish(&star(3), &path(4), None, false),
            WlVerdict::Distinguished(1)
        );
        assert_eq!(
            wl_distinguish(&path(3), &path(4), None, false),
            WlVerdict::Distinguished(0)
        );
    }

    #[test]
    fn brute_force_classic_pairs() {
        assert_eq!(brute_force_isomorphic(&complete(3), &complete(3)), Ok(true));
        assert_eq!(brute_force_isomorphic(&cycle(6), &two_triangles()), Ok(false));
        assert_eq!(brute_force_isomorphic(&path(3), &complete(3)), Ok(false));
        assert_eq!(
            brute_force_isomorphic(&path(11), &path(11)),
            Err(WlError::TooLarge { nodes: 11, limit: 10 })
        );
    }

    #[test]
    fn brute_force_respects_features() {
        let a = Graph::new(2, [(0, 1)], DenseMatrix::from_rows(&[[1.0], [2.0]])).unwrap();
        let b = Graph::new(2, [(0, 1)], DenseMatrix::from_rows(&[[2.0], [1.0]])).unwrap();
        let c = Graph::new(2, [(0, 1)], DenseMatrix::from_rows(&[[2.0], [2.0]])).unwrap();
        assert_eq!(brute_force_isomorphic(&a, &b), Ok(true));
        assert_eq!(brute_force_isomorphic(&a, &c), Ok(false));
    }

    #[test]
    fn refinement_stabilizes_and_never_merges() {
        let g = path(7);
        let rounds = wl_refine(&g, false);
        assert!(rounds.len() <= g.node_count());
        for w in rounds.windows(2) {
            assert!(w[1].num_distinct() >= w[0].num_distinct());
        }
        // P7 splits into 4 orbits
        assert_eq!(rounds.last().unwrap().num_distinct(), 4);
    }
}
