//! Small deterministic and random graph families. All generated graphs carry a
//! single constant feature equal to 1.

use rand::Rng;
use thiserror::Error;

use super::Graph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegularGraphError {
    #[error("no {k}-regular graph on {n} nodes (n*k is odd)")]
    OddDegreeSum { n: usize, k: usize },
    #[error("degree {k} is not below the node count {n}")]
    DegreeTooLarge { n: usize, k: usize },
}

fn unit(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Graph {
    Graph::with_unit_features(n, edges).expect("generator produced an invalid edge")
}

pub fn path(n: usize) -> Graph {
    unit(n, (1..n).map(|v| (v - 1, v)))
}

pub fn cycle(n: usize) -> Graph {
    assert!(n >= 3, "a cycle needs at least 3 nodes");
    unit(n, (0..n).map(|v| (v, (v + 1) % n)))
}

pub fn complete(n: usize) -> Graph {
    unit(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
}

/// Star with node 0 as the center and `leaves` leaves.
pub fn star(leaves: usize) -> Graph {
    unit(leaves + 1, (1..=leaves).map(|v| (0, v)))
}

/// `k`-regular circulant graph: node `i` links to `i ± 1..=k/2`, plus the
/// antipode `i + n/2` when `k` is odd.
pub fn circulant(n: usize, k: usize) -> Result<Graph, RegularGraphError> {
    if (n * k) % 2 == 1 {
        return Err(RegularGraphError::OddDegreeSum { n, k });
    }
    if k >= n.max(1) {
        return Err(RegularGraphError::DegreeTooLarge { n, k });
    }
    let mut edges = Vec::with_capacity(n * k / 2);
    for i in 0..n {
        for s in 1..=k / 2 {
            edges.push((i, (i + s) % n));
        }
        if k % 2 == 1 {
            edges.push((i, (i + n / 2) % n));
        }
    }
    Ok(unit(n, edges))
}

/// G(n, p): each of the `n(n-1)/2` pairs is an edge independently with probability `p`.
pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    unit(n, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn circulants_are_regular() {
        for n in 3..12 {
            for k in 1..n {
                match circulant(n, k) {
                    Ok(g) => {
                        assert!(g.degrees().iter().all(|&d| d == k), "n={n} k={k}");
                        assert_eq!(g.edge_count(), n * k / 2);
                    }
                    Err(e) => assert_eq!(e, RegularGraphError::OddDegreeSum { n, k }),
                }
            }
        }
        assert_eq!(circulant(4, 4), Err(RegularGraphError::DegreeTooLarge { n: 4, k: 4 }));
    }

    #[test]
    fn small_families() {
        assert_eq!(path(4).edge_count(), 3);
        assert_eq!(cycle(6).degrees(), vec![2; 6]);
        assert_eq!(complete(5).edge_count(), 10);
        assert_eq!(star(3).degrees(), vec![3, 1, 1, 1]);
    }

    #[test]
    fn erdos_renyi_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(erdos_renyi(6, 0.0, &mut rng).edge_count(), 0);
        assert_eq!(erdos_renyi(6, 1.0, &mut rng).edge_count(), 15);
    }
}
