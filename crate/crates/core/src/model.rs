//! Trajectories and the preprocessing steps applied before either analysis:
//! validation, percentile filtering of rough trajectories, translation to
//! the origin, interpolation, activity rates and the posts/friends
//! correlation.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("trajectory `{user}` has {len} usable snapshot(s); at least 2 are required")]
    TooShort { user: String, len: usize },
    #[error("trajectory `{user}` contains a non-finite observation day")]
    NonFinite { user: String },
    #[error("empty input")]
    EmptyInput,
    #[error("day {t} is outside the observed range [{first}, {last}]")]
    OutOfRange { t: f64, first: f64, last: f64 },
    #[error("percentile {0} is outside (0, 1]")]
    InvalidPercentile(f64),
}

/// One observation of a user's cumulative counters.
///
/// Counts are signed so that origin-translated trajectories (where a friend
/// loss yields a negative value) share the type with raw ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot {
    /// Observation day, in days since the study start.
    pub t: f64,
    pub posts: i64,
    pub friends: i64,
}

impl Snapshot {
    pub fn new(t: f64, posts: i64, friends: i64) -> Self {
        Snapshot { t, posts, friends }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub user_id: String,
    pub snapshots: Vec<Snapshot>,
}

/// Which counter of a trajectory a computation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Posts,
    Friends,
}

impl Component {
    pub fn of(self, s: &Snapshot) -> i64 {
        match self {
            Component::Posts => s.posts,
            Component::Friends => s.friends,
        }
    }
}

impl Trajectory {
    pub fn new(user_id: impl Into<String>, snapshots: Vec<Snapshot>) -> Self {
        Trajectory {
            user_id: user_id.into(),
            snapshots,
        }
    }

    /// Builds a trajectory from `(t, posts, friends)` tuples.
    pub fn from_tuples(user_id: impl Into<String>, rows: &[(f64, i64, i64)]) -> Self {
        Trajectory::new(
            user_id,
            rows.iter()
                .map(|&(t, p, f)| Snapshot::new(t, p, f))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn first_day(&self) -> Option<f64> {
        self.snapshots.first().map(|s| s.t)
    }

    pub fn last_day(&self) -> Option<f64> {
        self.snapshots.last().map(|s| s.t)
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn series(&self, c: Component) -> Vec<f64> {
        self.snapshots.iter().map(|s| c.of(s) as f64).collect()
    }

    /// Number of intervals in which the post count went down. Deletions are
    /// legal but rare, so callers may want to flag them.
    pub fn deletions(&self) -> usize {
        self.snapshots
            .windows(2)
            .filter(|w| w[1].posts < w[0].posts)
            .count()
    }

    fn max_step(&self, c: Component) -> i64 {
        self.snapshots
            .windows(2)
            .map(|w| (c.of(&w[1]) - c.of(&w[0])).abs())
            .max()
            .unwrap_or(0)
    }

    fn range(&self, c: Component) -> i64 {
        let values = self.snapshots.iter().map(|s| c.of(s));
        match (values.clone().min(), values.max()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0,
        }
    }
}

/// Sorts snapshots by day, collapses duplicated days (the last one in input
/// order wins) and checks that at least two snapshots remain.
pub fn validate(traj: Trajectory) -> Result<Trajectory, ModelError> {
    let Trajectory {
        user_id,
        mut snapshots,
    } = traj;
    if snapshots.iter().any(|s| !s.t.is_finite()) {
        return Err(ModelError::NonFinite { user: user_id });
    }
    // stable: equal days keep input order, so the last duplicate is the newest read
    snapshots.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut deduped: Vec<Snapshot> = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        match deduped.last_mut() {
            Some(prev) if prev.t == s.t => *prev = s,
            _ => deduped.push(s),
        }
    }
    if deduped.len() < 2 {
        return Err(ModelError::TooShort {
            user: user_id,
            len: deduped.len(),
        });
    }
    Ok(Trajectory {
        user_id,
        snapshots: deduped,
    })
}

/// Population thresholds used by [`percentile_filter`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterThresholds {
    pub posts_step: i64,
    pub posts_range: i64,
    pub friends_step: i64,
    pub friends_range: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
    pub pct: f64,
    pub thresholds: FilterThresholds,
}

impl FilterReport {
    pub fn retained_fraction(&self) -> f64 {
        let total = self.kept.len() + self.dropped.len();
        if total == 0 {
            0.0
        } else {
            self.kept.len() as f64 / total as f64
        }
    }
}

/// Nearest-rank quantile of an unsorted sample.
pub fn nearest_rank(values: &[i64], pct: f64) -> i64 {
    assert!(!values.is_empty(), "nearest_rank of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    // guard against 0.98 * 50 = 49.000000000000001
    let rank = ((pct * n as f64) - 1e-9).ceil().clamp(1.0, n as f64) as usize;
    sorted[rank - 1]
}

/// Keeps the trajectories whose largest single-interval change and whose
/// overall range are, in both dimensions, within the population's
/// `pct`-quantile of the respective statistic.
pub fn percentile_filter(trajs: &[Trajectory], pct: f64) -> Result<FilterReport, ModelError> {
    if trajs.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    if !(pct > 0.0 && pct <= 1.0) {
        return Err(ModelError::InvalidPercentile(pct));
    }
    let stats: Vec<[i64; 4]> = trajs
        .iter()
        .map(|t| {
            [
                t.max_step(Component::Posts),
                t.range(Component::Posts),
                t.max_step(Component::Friends),
                t.range(Component::Friends),
            ]
        })
        .collect();
    let mut limits = [0i64; 4];
    for (k, limit) in limits.iter_mut().enumerate() {
        let column: Vec<i64> = stats.iter().map(|s| s[k]).collect();
        *limit = nearest_rank(&column, pct);
    }

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (t, s) in trajs.iter().zip(&stats) {
        if s.iter().zip(&limits).all(|(v, lim)| v <= lim) {
            kept.push(t.user_id.clone());
        } else {
            dropped.push(t.user_id.clone());
        }
    }
    Ok(FilterReport {
        kept,
        dropped,
        pct,
        thresholds: FilterThresholds {
            posts_step: limits[0],
            posts_range: limits[1],
            friends_step: limits[2],
            friends_range: limits[3],
        },
    })
}

/// Subtracts the first snapshot from every snapshot.
pub fn translate_to_origin(traj: &Trajectory) -> Trajectory {
    let Some(origin) = traj.snapshots.first().copied() else {
        return traj.clone();
    };
    Trajectory {
        user_id: traj.user_id.clone(),
        snapshots: traj
            .snapshots
            .iter()
            .map(|s| {
                Snapshot::new(
                    s.t - origin.t,
                    s.posts - origin.posts,
                    s.friends - origin.friends,
                )
            })
            .collect(),
    }
}

/// Piecewise-linear `(posts, friends)` at day `t`.
pub fn interpolate(traj: &Trajectory, t: f64) -> Result<(f64, f64), ModelError> {
    let snaps = &traj.snapshots;
    let (first, last) = match (snaps.first(), snaps.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => {
            return Err(ModelError::TooShort {
                user: traj.user_id.clone(),
                len: 0,
            })
        }
    };
    if !(t >= first && t <= last) {
        return Err(ModelError::OutOfRange { t, first, last });
    }
    // index of the first snapshot with day > t
    let hi = snaps.partition_point(|s| s.t <= t);
    if hi == 0 {
        unreachable!("t >= first day");
    }
    let a = &snaps[hi - 1];
    if a.t == t || hi == snaps.len() {
        return Ok((a.posts as f64, a.friends as f64));
    }
    let b = &snaps[hi];
    let w = (t - a.t) / (b.t - a.t);
    let lerp = |x: i64, y: i64| x as f64 + w * (y - x) as f64;
    Ok((lerp(a.posts, b.posts), lerp(a.friends, b.friends)))
}

/// Publishing and social activity rates at one observation day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub t: f64,
    /// Posts per day; negative only if posts were deleted in the interval.
    pub p: f64,
    /// Friends per day.
    pub f: f64,
}

/// Forward-difference rates, one per consecutive pair of snapshots, stamped
/// at the start of the interval.
pub fn activity_rates(traj: &Trajectory) -> Vec<RateSample> {
    traj.snapshots
        .windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            RateSample {
                t: w[0].t,
                p: (w[1].posts - w[0].posts) as f64 / dt,
                f: (w[1].friends - w[0].friends) as f64 / dt,
            }
        })
        .collect()
}

/// Pearson correlation of two equally long series; `None` when either has
/// zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "pearson on series of different length");
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation between the post and friend series of one trajectory.
pub fn pf_correlation(traj: &Trajectory) -> Option<f64> {
    pearson(
        &traj.series(Component::Posts),
        &traj.series(Component::Friends),
    )
}
