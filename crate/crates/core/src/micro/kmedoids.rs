//! Partitioning Around Medoids over a precomputed distance matrix.
//!
//! Medoids are seeded k-medoids++ style (distance-squared sampling) and then
//! refined with the PAM swap phase. Each swap sweep evaluates every
//! `(medoid, candidate)` pair in O(n) per candidate using the cached
//! nearest / second-nearest medoid distances, so a sweep costs O(n^2).

use rand::Rng;
use rayon::prelude::*;

/// Dense symmetric distance matrix.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn<F>(n: usize, dist: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let data = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| if i == j { 0.0 } else { dist(i, j) })
            .collect();
        DistanceMatrix { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Point index of each medoid.
    pub medoids: Vec<usize>,
    /// For every point, the position of its medoid in `medoids`.
    pub assignment: Vec<usize>,
    /// Sum of point-to-medoid distances.
    pub cost: f64,
    pub swaps: usize,
}

const IMPROVEMENT_EPS: f64 = 1e-10;
const MAX_SWAPS: usize = 10_000;

struct Nearest {
    index: Vec<usize>,
    first: Vec<f64>,
    second: Vec<f64>,
}

fn nearest(dist: &DistanceMatrix, medoids: &[usize]) -> Nearest {
    let n = dist.len();
    let mut index = vec![0; n];
    let mut first = vec![f64::INFINITY; n];
    let mut second = vec![f64::INFINITY; n];
    for o in 0..n {
        for (i, &m) in medoids.iter().enumerate() {
            let d = dist.get(o, m);
            if d < first[o] {
                second[o] = first[o];
                first[o] = d;
                index[o] = i;
            } else if d < second[o] {
                second[o] = d;
            }
        }
    }
    Nearest {
        index,
        first,
        second,
    }
}

fn seed_medoids<R: Rng>(dist: &DistanceMatrix, k: usize, rng: &mut R) -> Vec<usize> {
    let n = dist.len();
    let mut medoids = Vec::with_capacity(k);
    let mut is_medoid = vec![false; n];
    let first = rng.random_range(0..n);
    medoids.push(first);
    is_medoid[first] = true;
    let mut closest: Vec<f64> = dist.row(first).to_vec();
    while medoids.len() < k {
        let total: f64 = closest
            .iter()
            .zip(&is_medoid)
            .filter(|(_, &m)| !m)
            .map(|(d, _)| d * d)
            .sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = None;
            for (o, d) in closest.iter().enumerate() {
                if is_medoid[o] || *d == 0.0 {
                    continue;
                }
                target -= d * d;
                chosen = Some(o);
                if target <= 0.0 {
                    break;
                }
            }
            chosen.expect("positive total weight has a candidate")
        } else {
            // every remaining point coincides with a medoid
            let free: Vec<usize> = (0..n).filter(|&o| !is_medoid[o]).collect();
            free[rng.random_range(0..free.len())]
        };
        medoids.push(pick);
        is_medoid[pick] = true;
        for (c, d) in closest.iter_mut().zip(dist.row(pick)) {
            *c = c.min(*d);
        }
    }
    medoids
}

/// Clusters the `dist.len()` points into `k` groups. Requires `1 <= k <= n`.
pub fn k_medoids<R: Rng>(dist: &DistanceMatrix, k: usize, rng: &mut R) -> Clustering {
    let n = dist.len();
    assert!(
        k >= 1 && k <= n,
        "k-medoids needs 1 <= k <= n (k={k}, n={n})"
    );
    let mut medoids = seed_medoids(dist, k, rng);
    let mut near = nearest(dist, &medoids);
    let mut swaps = 0;

    while swaps < MAX_SWAPS && k < n {
        let is_medoid = {
            let mut v = vec![false; n];
            for &m in &medoids {
                v[m] = true;
            }
            v
        };
        let best = (0..n)
            .into_par_iter()
            .filter(|&c| !is_medoid[c])
            .map(|c| {
                let row = dist.row(c);
                let mut shared = 0.0;
                let mut removal = vec![0.0; k];
                for o in 0..n {
                    let (doc, dn, ds) = (row[o], near.first[o], near.second[o]);
                    let gain = (doc - dn).min(0.0);
                    shared += gain;
                    removal[near.index[o]] += doc.min(ds) - dn - gain;
                }
                let (i, delta) = removal
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (i, shared + r))
                    .fold(
                        (0, f64::INFINITY),
                        |acc, x| if x.1 < acc.1 { x } else { acc },
                    );
                (delta, c, i)
            })
            .reduce(
                || (f64::INFINITY, usize::MAX, usize::MAX),
                |a, b| {
                    // deterministic tie-break on the candidate index
                    if a.0 < b.0 || (a.0 == b.0 && a.1 < b.1) {
                        a
                    } else {
                        b
                    }
                },
            );
        let (delta, c, i) = best;
        if delta.is_nan() || delta >= -IMPROVEMENT_EPS {
            break;
        }
        medoids[i] = c;
        near = nearest(dist, &medoids);
        swaps += 1;
    }

    let cost = near.first.iter().sum();
    Clustering {
        medoids,
        assignment: near.index,
        cost,
        swaps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line(points: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_fn(points.len(), |i, j| (points[i] - points[j]).abs())
    }

    #[test]
    fn two_groups_on_a_line() {
        let pts = [0.0, 0.1, 0.2, 10.0, 10.1, 10.3];
        let d = line(&pts);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = k_medoids(&d, 2, &mut rng);
        assert_eq!(c.assignment[0], c.assignment[1]);
        assert_eq!(c.assignment[1], c.assignment[2]);
        assert_eq!(c.assignment[3], c.assignment[5]);
        assert_ne!(c.assignment[0], c.assignment[3]);
        // medoids 0.1 and 10.1: 0.2 + 0.3
        assert!((c.cost - 0.5).abs() < 1e-9);
    }

    #[test]
    fn k_equals_n_is_singletons() {
        let d = line(&[1.0, 2.0, 4.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = k_medoids(&d, 3, &mut rng);
        let mut m = c.medoids.clone();
        m.sort();
        assert_eq!(m, vec![0, 1, 2]);
        assert_eq!(c.cost, 0.0);
    }

    #[test]
    fn duplicates_fill_extra_medoids() {
        let d = line(&[5.0; 6]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = k_medoids(&d, 3, &mut rng);
        let mut m = c.medoids.clone();
        m.sort();
        m.dedup();
        assert_eq!(m.len(), 3);
        assert_eq!(c.cost, 0.0);
    }

    #[test]
    fn swap_matches_exhaustive_optimum() {
        // 9 points, k = 3: PAM must reach the brute-force optimum here
        let pts = [0.0, 1.0, 1.5, 7.0, 7.2, 8.0, 20.0, 21.0, 25.0];
        let d = line(&pts);
        let mut best = f64::INFINITY;
        for a in 0..9 {
            for b in a + 1..9 {
                for c in b + 1..9 {
                    let cost: f64 = (0..9)
                        .map(|o| d.get(o, a).min(d.get(o, b)).min(d.get(o, c)))
                        .sum();
                    best = best.min(cost);
                }
            }
        }
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = k_medoids(&d, 3, &mut rng);
            assert!(
                (c.cost - best).abs() < 1e-9,
                "seed {seed}: {} vs {best}",
                c.cost
            );
        }
    }
}
