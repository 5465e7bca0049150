use std::collections::BTreeMap;

use super::taxonomy::{fit_quality, MacroKey, ShapeParams, TrajectoryShape};
use super::MacroError;
use crate::model::{interpolate, Trajectory};

/// Cluster mean resampled on a day grid. Values are real-valued averages,
/// so this is kept apart from the integer-count [`Trajectory`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeanTrajectory {
    pub days: Vec<f64>,
    pub posts: Vec<f64>,
    pub friends: Vec<f64>,
    /// Number of trajectories averaged.
    pub members: usize,
}

impl MeanTrajectory {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroCluster {
    pub key: MacroKey,
    /// Sorted user ids.
    pub members: Vec<String>,
    pub mean: MeanTrajectory,
    /// Mean over members of `√(R²_P · R²_F)`.
    pub mean_fit_quality: f64,
}

impl MacroCluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Whole days covered by every trajectory.
pub fn common_grid<'a>(trajs: impl IntoIterator<Item = &'a Trajectory>) -> Vec<f64> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut any = false;
    for t in trajs {
        if let (Some(a), Some(b)) = (t.first_day(), t.last_day()) {
            lo = lo.max(a);
            hi = hi.min(b);
            any = true;
        }
    }
    if !any || lo > hi {
        return Vec::new();
    }
    let (first, last) = (lo.ceil() as i64, hi.floor() as i64);
    (first..=last).map(|d| d as f64).collect()
}

/// Pointwise mean of the members' interpolated counters.
pub fn mean_trajectory(
    members: &[&Trajectory],
    grid: &[f64],
) -> Result<MeanTrajectory, MacroError> {
    if members.is_empty() {
        return Err(MacroError::EmptyCluster);
    }
    let n = members.len() as f64;
    let mut posts = vec![0.0; grid.len()];
    let mut friends = vec![0.0; grid.len()];
    for traj in members {
        for (k, &t) in grid.iter().enumerate() {
            let (p, f) = interpolate(traj, t)?;
            posts[k] += p;
            friends[k] += f;
        }
    }
    for v in posts.iter_mut().chain(friends.iter_mut()) {
        *v /= n;
    }
    Ok(MeanTrajectory {
        days: grid.to_vec(),
        posts,
        friends,
        members: members.len(),
    })
}

/// Groups trajectories by macro key. Clusters come out largest first, ties
/// broken by key order; each mean is taken over the members' common days.
pub fn build_macro_clusters(
    trajs: &[Trajectory],
    shapes: &BTreeMap<String, TrajectoryShape>,
    params: &ShapeParams,
) -> Result<Vec<MacroCluster>, MacroError> {
    let mut groups: BTreeMap<MacroKey, Vec<&Trajectory>> = BTreeMap::new();
    for traj in trajs {
        let shape = shapes
            .get(&traj.user_id)
            .ok_or_else(|| MacroError::MissingShape(traj.user_id.clone()))?;
        groups.entry(shape.key).or_default().push(traj);
    }
    let mut clusters = groups
        .into_iter()
        .map(|(key, mut members)| {
            members.sort_by(|a, b| a.user_id.cmp(&b.user_id));
            let grid = common_grid(members.iter().copied());
            let mean = mean_trajectory(&members, &grid)?;
            let quality = members
                .iter()
                .map(|t| fit_quality(&shapes[&t.user_id], params))
                .sum::<f64>()
                / members.len() as f64;
            Ok(MacroCluster {
                key,
                members: members.iter().map(|t| t.user_id.clone()).collect(),
                mean,
                mean_fit_quality: quality,
            })
        })
        .collect::<Result<Vec<_>, MacroError>>()?;
    clusters.sort_by(|a, b| b.len().cmp(&a.len()).then(a.key.cmp(&b.key)));
    Ok(clusters)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SqrtLawWeighting {
    /// Every pooled point counts once.
    #[default]
    Unweighted,
    /// Points are weighted by the size of the cluster they come from.
    ClusterSize,
}

/// Least-squares fit of `F = c·√P` through the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtLawFit {
    pub c: f64,
    pub r2: f64,
    /// Pooled points with `P > 0`.
    pub points: usize,
}

impl SqrtLawFit {
    pub fn predict(&self, posts: f64) -> f64 {
        self.c * posts.max(0.0).sqrt()
    }
}

pub fn sqrt_law_fit(
    means: &[MeanTrajectory],
    weighting: SqrtLawWeighting,
) -> Result<SqrtLawFit, MacroError> {
    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    for m in means {
        let w = match weighting {
            SqrtLawWeighting::Unweighted => 1.0,
            SqrtLawWeighting::ClusterSize => m.members as f64,
        };
        for (&p, &f) in m.posts.iter().zip(&m.friends) {
            if p > 0.0 {
                pts.push((p, f, w));
            }
        }
    }
    let w_sum: f64 = pts.iter().map(|x| x.2).sum();
    if pts.is_empty() || w_sum <= 0.0 {
        return Err(MacroError::NoPositiveP);
    }
    // regressor x = √P: c = Σw·x·F / Σw·x²
    let sxy: f64 = pts.iter().map(|&(p, f, w)| w * p.sqrt() * f).sum();
    let sxx: f64 = pts.iter().map(|&(p, _, w)| w * p).sum();
    let c = sxy / sxx;

    let mean_f = pts.iter().map(|&(_, f, w)| w * f).sum::<f64>() / w_sum;
    let ss_tot: f64 = pts.iter().map(|&(_, f, w)| w * (f - mean_f).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|&(p, f, w)| w * (f - c * p.sqrt()).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(SqrtLawFit {
        c,
        r2,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::macroscopic::{classify_trajectory, DynamicsClass};
    use crate::model::Snapshot;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn line(user: &str, days: i64, slope: i64) -> Trajectory {
        let rows: Vec<(f64, i64, i64)> = (0..=days).map(|d| (d as f64, slope * d, 0)).collect();
        Trajectory::from_tuples(user, &rows)
    }

    #[test]
    fn grid_is_common_span() {
        let a = Trajectory::from_tuples("a", &[(0.0, 0, 0), (10.5, 1, 1)]);
        let b = Trajectory::from_tuples("b", &[(1.2, 0, 0), (20.0, 1, 1)]);
        assert_eq!(
            common_grid([&a, &b]),
            (2..=10).map(|d| d as f64).collect::<Vec<_>>()
        );
        let c = Trajectory::from_tuples("c", &[(30.0, 0, 0), (40.0, 1, 1)]);
        assert!(common_grid([&a, &c]).is_empty());
    }

    #[test]
    fn singleton_mean_is_member() {
        let t = line("a", 10, 3);
        let grid = common_grid([&t]);
        let m = mean_trajectory(&[&t], &grid).unwrap();
        assert_eq!(m.posts, t.series(crate::model::Component::Posts));
        assert_eq!(m.members, 1);
    }

    #[test]
    fn mirror_images_cancel() {
        let up = line("a", 10, 1);
        let down = line("b", 10, -1);
        let m = mean_trajectory(&[&up, &down], &common_grid([&up, &down])).unwrap();
        assert!(m.posts.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn empty_cluster() {
        assert_eq!(mean_trajectory(&[], &[0.0]), Err(MacroError::EmptyCluster));
    }

    #[test]
    fn noise_averages_out() {
        let sigma = 4.0;
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let members: Vec<Trajectory> = (0..100)
            .map(|u| {
                let snaps = (0..=50)
                    .map(|d| {
                        let v = 2.0 * d as f64 + noise.sample(&mut rng);
                        Snapshot::new(d as f64, v.round() as i64, 0)
                    })
                    .collect();
                Trajectory::new(format!("u{u}"), snaps)
            })
            .collect();
        let refs: Vec<&Trajectory> = members.iter().collect();
        let m = mean_trajectory(&refs, &common_grid(refs.iter().copied())).unwrap();
        // rounding adds at most 0.5 of bias-free error per sample
        let tol = 3.0 * (sigma * sigma + 1.0 / 12.0).sqrt() / 10.0;
        for (d, p) in m.days.iter().zip(&m.posts) {
            assert!((p - 2.0 * d).abs() <= tol, "day {d}: {p}");
        }
    }

    #[test]
    fn clusters_group_by_key() {
        let params = ShapeParams::default();
        let trajs = vec![
            line("a", 30, 2),
            line("b", 30, 0),
            line("c", 30, 5),
            line("d", 20, 1),
        ];
        let shapes: BTreeMap<String, TrajectoryShape> = trajs
            .iter()
            .map(|t| (t.user_id.clone(), classify_trajectory(t, &params).unwrap()))
            .collect();
        let clusters = build_macro_clusters(&trajs, &shapes, &params).unwrap();
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0].key.posts, DynamicsClass::Ascending);
        assert_eq!(clusters[0].members, vec!["a", "c", "d"]);
        // the mean covers days 0..=20 shared by all three
        assert_eq!(clusters[0].mean.len(), 21);
        assert!((clusters[0].mean_fit_quality - 1.0).abs() < 1e-12);
        assert_eq!(clusters[1].members, vec!["b"]);

        let missing = build_macro_clusters(&trajs, &BTreeMap::new(), &params);
        assert_eq!(missing, Err(MacroError::MissingShape("a".into())));
    }

    fn law(c: f64) -> MeanTrajectory {
        let posts: Vec<f64> = (0..50).map(|d| (d * d) as f64).collect();
        MeanTrajectory {
            days: (0..50).map(|d| d as f64).collect(),
            friends: posts.iter().map(|p| c * p.sqrt()).collect(),
            posts,
            members: 3,
        }
    }

    #[test]
    fn sqrt_law_exact() {
        let fit = sqrt_law_fit(&[law(9.0)], SqrtLawWeighting::Unweighted).unwrap();
        assert!((fit.c - 9.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!((fit.predict(100.0) - 90.0).abs() < 1e-9);
        // P = 0 is excluded
        assert_eq!(fit.points, 49);
    }

    #[test]
    fn sqrt_law_needs_positive_posts() {
        let flat = MeanTrajectory {
            days: vec![0.0, 1.0],
            posts: vec![0.0, 0.0],
            friends: vec![1.0, 2.0],
            members: 1,
        };
        assert_eq!(
            sqrt_law_fit(&[flat], SqrtLawWeighting::Unweighted),
            Err(MacroError::NoPositiveP)
        );
        assert_eq!(
            sqrt_law_fit(&[], SqrtLawWeighting::Unweighted),
            Err(MacroError::NoPositiveP)
        );
    }

    #[test]
    fn size_weighting_favors_large_clusters() {
        let mut big = law(10.0);
        big.members = 1000;
        let mut small = law(5.0);
        small.members = 1;
        let plain =
            sqrt_law_fit(&[big.clone(), small.clone()], SqrtLawWeighting::Unweighted).unwrap();
        let weighted = sqrt_law_fit(&[big, small], SqrtLawWeighting::ClusterSize).unwrap();
        assert!((plain.c - 7.5).abs() < 1e-9);
        assert!((weighted.c - 10.0).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn sqrt_law_scale(c in 0.01f64..100.0) {
            let fit = sqrt_law_fit(&[law(c)], SqrtLawWeighting::Unweighted).unwrap();
            prop_assert!((fit.c - c).abs() <= 1e-9 * c);
        }

        #[test]
        fn mean_is_permutation_invariant(slopes in prop::collection::vec(-5i64..5, 1..8), rot in 0usize..8) {
            let trajs: Vec<Trajectory> = slopes.iter().enumerate().map(|(i, &s)| line(&format!("u{i}"), 12, s)).collect();
            let refs: Vec<&Trajectory> = trajs.iter().collect();
            let mut rotated = refs.clone();
            rotated.rotate_left(rot % refs.len());
            let grid = common_grid(refs.iter().copied());
            let a = mean_trajectory(&refs, &grid).unwrap();
            let b = mean_trajectory(&rotated, &grid).unwrap();
            for (x, y) in a.posts.iter().zip(&b.posts) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
