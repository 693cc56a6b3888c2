//! Shared oracles for the integration suites.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use spin_core::graph::Graph;

/// Upper-triangle adjacency bitmask of `edges` under the relabeling `perm`.
fn mask_under(n: usize, edges: &[(usize, usize)], perm: &[usize]) -> u32 {
    let mut m = 0;
    for &(u, v) in edges {
        let (a, b) = (perm[u].min(perm[v]), perm[u].max(perm[v]));
        m |= 1 << (a * n + b);
    }
    m
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Canonical form: the smallest adjacency mask over all relabelings.
pub fn canonical_mask(g: &Graph, perms: &[Vec<usize>]) -> u32 {
    perms
        .iter()
        .map(|p| mask_under(g.node_count(), g.edges(), p))
        .min()
        .unwrap_or(0)
}

/// Connected graphs on `n` nodes, grouped by isomorphism class.
pub struct ConnectedClasses {
    pub n: usize,
    /// Every generated labeled graph, keyed by canonical mask.
    pub classes: BTreeMap<u32, Vec<Graph>>,
}

impl ConnectedClasses {
    pub fn representatives(&self) -> Vec<&Graph> {
        self.classes.values().map(|v| &v[0]).collect()
    }
}

/// All connected graphs with at most `max_n` nodes. Every connected graph on
/// `n` nodes arises from one on `n - 1` nodes by attaching a new node to a
/// non-empty subset, since some node is never a cut vertex.
pub fn connected_classes(max_n: usize) -> Vec<ConnectedClasses> {
    let mut levels: Vec<ConnectedClasses> = Vec::new();
    let mut single = BTreeMap::new();
    single.insert(0, vec![Graph::with_unit_features(1, []).unwrap()]);
    levels.push(ConnectedClasses { n: 1, classes: single });
    for n in 2..=max_n {
        let perms = permutations(n);
        let mut classes: BTreeMap<u32, Vec<Graph>> = BTreeMap::new();
        for base in levels.last().unwrap().representatives() {
            for subset in 1u32..(1 << (n - 1)) {
                let mut edges = base.edges().to_vec();
                edges.extend((0..n - 1).filter(|&u| subset >> u & 1 == 1).map(|u| (u, n - 1)));
                let g = Graph::with_unit_features(n, edges).unwrap();
                classes.entry(canonical_mask(&g, &perms)).or_default().push(g);
            }
        }
        levels.push(ConnectedClasses { n, classes });
    }
    levels
}

pub fn random_permutation<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}
