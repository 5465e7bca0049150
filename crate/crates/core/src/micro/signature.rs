use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::events::{EventKind, EventSequence};
use super::kmedoids::{k_medoids, DistanceMatrix};
use super::MicroError;

/// Conditional next-event probabilities, `psi[i][j]` = P(next is `j` |
/// current is `i`), indexed by [`EventKind::index`].
///
/// A row with no observed successor stays all-zero rather than uniform, so
/// "never seen" and "uniformly random" remain distinct and inactive users
/// sit at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Signature {
    pub psi: [[f64; 4]; 4],
}

impl Signature {
    pub fn zero() -> Self {
        Signature::default()
    }

    pub fn get(&self, from: EventKind, to: EventKind) -> f64 {
        self.psi[from.index()][to.index()]
    }

    /// Row-major flattening into the 16-dimensional signature space.
    pub fn to_vector(&self) -> [f64; 16] {
        let mut v = [0.0; 16];
        for (i, row) in self.psi.iter().enumerate() {
            v[i * 4..i * 4 + 4].copy_from_slice(row);
        }
        v
    }

    pub fn row_sum(&self, from: EventKind) -> f64 {
        self.psi[from.index()].iter().sum()
    }
}

pub fn signature(seq: &EventSequence) -> Signature {
    let mut counts = [[0u32; 4]; 4];
    for pair in seq.events.windows(2) {
        counts[pair[0].kind.index()][pair[1].kind.index()] += 1;
    }
    let mut sig = Signature::zero();
    for (row, out) in counts.iter().zip(sig.psi.iter_mut()) {
        let total: u32 = row.iter().sum();
        if total > 0 {
            for (c, p) in row.iter().zip(out.iter_mut()) {
                *p = *c as f64 / total as f64;
            }
        }
    }
    sig
}

pub fn signature_distance(a: &Signature, b: &Signature) -> f64 {
    a.to_vector()
        .iter()
        .zip(b.to_vector().iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroCluster {
    /// 1-based, clusters ordered by decreasing size.
    pub id: usize,
    pub medoid: String,
    /// Sorted user ids.
    pub members: Vec<String>,
    pub mean_signature: Signature,
}

impl MicroCluster {
    pub fn label(&self) -> String {
        format!("mu{}", self.id)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn mean_signature<'a>(sigs: impl Iterator<Item = &'a Signature>) -> Signature {
    let mut acc = Signature::zero();
    let mut n = 0usize;
    for s in sigs {
        for (a, b) in acc.psi.iter_mut().flatten().zip(s.psi.iter().flatten()) {
            *a += b;
        }
        n += 1;
    }
    if n > 0 {
        for a in acc.psi.iter_mut().flatten() {
            *a /= n as f64;
        }
    }
    acc
}

/// Partitions users into `k` clusters by signature distance (k-medoids,
/// seeded initialization). Deterministic for a fixed seed.
///
/// Identical signatures cannot be split, so when there are fewer distinct
/// signatures than `k` only that many clusters are returned.
pub fn cluster_micro(
    signatures: &BTreeMap<String, Signature>,
    k: usize,
    seed: u64,
) -> Result<Vec<MicroCluster>, MicroError> {
    let n = signatures.len();
    if k == 0 || k > n {
        return Err(MicroError::TooFewPoints { k, n });
    }
    let ids: Vec<&String> = signatures.keys().collect();
    let vectors: Vec<[f64; 16]> = signatures.values().map(Signature::to_vector).collect();
    let dist = DistanceMatrix::from_fn(n, |i, j| {
        vectors[i]
            .iter()
            .zip(&vectors[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    });
    let mut distinct: Vec<[f64; 16]> = vectors.clone();
    distinct.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    distinct.dedup();
    let k = k.min(distinct.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let result = k_medoids(&dist, k, &mut rng);

    let mut groups: Vec<(usize, Vec<usize>)> =
        result.medoids.iter().map(|&m| (m, Vec::new())).collect();
    for (point, &g) in result.assignment.iter().enumerate() {
        groups[g].1.push(point);
    }
    groups.retain(|g| !g.1.is_empty());
    // BTreeMap order makes member lists sorted; break size ties on the first member
    groups.sort_by(|a, b| {
        b.1.len()
            .cmp(&a.1.len())
            .then(a.1.first().cmp(&b.1.first()))
    });

    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(rank, (medoid, points))| MicroCluster {
            id: rank + 1,
            medoid: ids[medoid].clone(),
            mean_signature: mean_signature(points.iter().map(|&p| &signatures[ids[p]])),
            members: points.iter().map(|&p| ids[p].clone()).collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::micro::events::Event;
    use proptest::prelude::*;
    use rand::Rng;

    fn seq(kinds: &[EventKind]) -> EventSequence {
        EventSequence {
            user_id: "s".into(),
            events: kinds
                .iter()
                .enumerate()
                .map(|(i, &kind)| Event {
                    t: i as f64,
                    kind,
                    posts_delta: 0,
                    friends_delta: 0,
                })
                .collect(),
            start: 0.0,
            end: kinds.len() as f64,
        }
    }

    use EventKind::*;

    #[test]
    fn single_transition_type() {
        let s = signature(&seq(&[PostAdded, PostAdded, PostAdded]));
        assert_eq!(s.get(PostAdded, PostAdded), 1.0);
        assert_eq!(s.to_vector().iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn alternating() {
        let s = signature(&seq(&[PostAdded, FriendAdded, PostAdded, FriendAdded]));
        assert_eq!(s.get(PostAdded, FriendAdded), 1.0);
        assert_eq!(s.get(FriendAdded, PostAdded), 1.0);
        assert_eq!(s.get(PostAdded, PostAdded), 0.0);
    }

    #[test]
    fn short_sequences_are_zero() {
        assert_eq!(signature(&seq(&[])), Signature::zero());
        assert_eq!(signature(&seq(&[Compound])), Signature::zero());
    }

    #[test]
    fn distance_cases() {
        let s = signature(&seq(&[PostAdded, FriendAdded, FriendRemoved]));
        assert_eq!(signature_distance(&s, &s), 0.0);
        let mut unit = Signature::zero();
        unit.psi[2][3] = 1.0;
        assert_eq!(signature_distance(&Signature::zero(), &unit), 1.0);
    }

    fn arb_sig() -> impl Strategy<Value = Signature> {
        prop::collection::vec(0usize..4, 0..20).prop_map(|ks| {
            signature(&seq(&ks
                .into_iter()
                .map(EventKind::from_index)
                .collect::<Vec<_>>()))
        })
    }

    proptest! {
        #[test]
        fn rows_sum_to_one_or_zero(s in arb_sig()) {
            for k in EventKind::ALL {
                let r = s.row_sum(k);
                prop_assert!(r.abs() < 1e-9 || (r - 1.0).abs() < 1e-9);
                for j in EventKind::ALL {
                    prop_assert!((0.0..=1.0).contains(&s.get(k, j)));
                }
            }
        }

        #[test]
        fn metric_axioms(a in arb_sig(), b in arb_sig(), c in arb_sig()) {
            let ab = signature_distance(&a, &b);
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - signature_distance(&b, &a)).abs() < 1e-12);
            prop_assert!(ab <= signature_distance(&a, &c) + signature_distance(&c, &b) + 1e-9);
        }
    }

    #[test]
    fn singleton_clusters_when_k_equals_n() {
        let sigs: BTreeMap<String, Signature> = (0..5)
            .map(|i| {
                let mut s = Signature::zero();
                s.psi[0][0] = i as f64 / 4.0;
                (format!("u{i}"), s)
            })
            .collect();
        let clusters = cluster_micro(&sigs, 5, 11).unwrap();
        assert_eq!(clusters.len(), 5);
        for c in &clusters {
            assert_eq!(c.len(), 1);
            assert_eq!(c.mean_signature, sigs[&c.members[0]]);
        }
        assert_eq!(
            cluster_micro(&sigs, 6, 11),
            Err(MicroError::TooFewPoints { k: 6, n: 5 })
        );
    }

    #[test]
    fn identical_signatures_form_one_cluster() {
        let sigs: BTreeMap<String, Signature> = (0..6)
            .map(|i| (format!("u{i}"), Signature::zero()))
            .collect();
        let clusters = cluster_micro(&sigs, 4, 1).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].len(), 6);
    }

    fn rand_index(a: &[usize], b: &[usize]) -> f64 {
        let n = a.len();
        let mut agree = 0usize;
        let mut total = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                total += 1;
                if (a[i] == a[j]) == (b[i] == b[j]) {
                    agree += 1;
                }
            }
        }
        agree as f64 / total as f64
    }

    #[test]
    fn recovers_separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let centers = [(0usize, 0usize), (1, 2), (2, 1), (3, 3)];
        let mut sigs = BTreeMap::new();
        for (b, &(i, j)) in centers.iter().enumerate() {
            for m in 0..40 {
                let mut s = Signature::zero();
                s.psi[i][j] = 1.0;
                for v in s.psi.iter_mut().flatten() {
                    *v += rng.random_range(0.0..0.02);
                }
                sigs.insert(format!("b{b}m{m:02}"), s);
            }
        }
        let clusters = cluster_micro(&sigs, 4, 5).unwrap();
        let mut found = vec![0; sigs.len()];
        let index: BTreeMap<&String, usize> =
            sigs.keys().enumerate().map(|(i, k)| (k, i)).collect();
        let ordered_truth: Vec<usize> = sigs
            .keys()
            .map(|k| k[1..2].parse::<usize>().unwrap())
            .collect();
        for c in &clusters {
            for m in &c.members {
                found[index[m]] = c.id;
            }
        }
        assert_eq!(rand_index(&found, &ordered_truth), 1.0);
    }

    #[test]
    fn clustering_is_deterministic_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sigs: BTreeMap<String, Signature> = (0..120)
            .map(|u| {
                let ks: Vec<EventKind> = (0..rng.random_range(0..15))
                    .map(|_| EventKind::from_index(rng.random_range(0..4)))
                    .collect();
                (format!("u{u:03}"), signature(&seq(&ks)))
            })
            .collect();
        let a = cluster_micro(&sigs, 7, 99).unwrap();
        let b = cluster_micro(&sigs, 7, 99).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<&String> = a.iter().flat_map(|c| &c.members).collect();
        all.sort();
        assert_eq!(all, sigs.keys().collect::<Vec<_>>());
        assert!(a.windows(2).all(|w| w[0].len() >= w[1].len()));
    }
}
