//! Rate-limited collection of daily snapshots from an abstract source.
//!
//! Time comes from a [`Clock`], so the limiter can be exercised with a
//! [`SimulatedClock`] instead of wall-clock sleeps. Every request, retries
//! included, passes through a sliding-window [`RateLimiter`]: no half-open
//! one-second window ever admits more than the configured number of
//! requests.

use std::collections::{BTreeMap, VecDeque};
use std::time::Duration;

use crate::model::{Snapshot, Trajectory};

pub trait Clock {
    /// Time elapsed since the clock's origin.
    fn now(&self) -> Duration;
    /// Blocks until `t`; returns immediately if `t` has passed.
    fn sleep_until(&mut self, t: Duration);
}

/// A clock that only moves when asked to sleep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimulatedClock {
    now: Duration,
}

impl SimulatedClock {
    pub fn new() -> Self {
        SimulatedClock::default()
    }

    pub fn advance(&mut self, by: Duration) {
        self.now += by;
    }
}

impl Clock for SimulatedClock {
    fn now(&self) -> Duration {
        self.now
    }

    fn sleep_until(&mut self, t: Duration) {
        self.now = self.now.max(t);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("transient fetch failure: {0}")]
pub struct FetchError(pub String);

/// A source of `(posts_total, friends_total)` readings.
pub trait Fetcher {
    fn fetch(&mut self, user: &str, day: u32) -> Result<(u64, u64), FetchError>;
}

impl<F> Fetcher for F
where
    F: FnMut(&str, u32) -> Result<(u64, u64), FetchError>,
{
    fn fetch(&mut self, user: &str, day: u32) -> Result<(u64, u64), FetchError> {
        self(user, day)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectorPolicy {
    pub max_requests_per_second: usize,
    /// Retries after the first failed attempt.
    pub max_retries: u32,
    /// Wait before the first retry; doubles with every further retry.
    pub initial_backoff: Duration,
    /// Days between two readings of the same user.
    pub cadence_days: u32,
}

impl Default for CollectorPolicy {
    fn default() -> Self {
        CollectorPolicy {
            max_requests_per_second: 5,
            max_retries: 3,
            initial_backoff: Duration::from_millis(500),
            cadence_days: 1,
        }
    }
}

/// Sliding-window admission: request `i` is admitted no earlier than one
/// second after request `i - cap`.
#[derive(Debug, Clone)]
pub struct RateLimiter {
    cap: usize,
    window: Duration,
    recent: VecDeque<Duration>,
}

impl RateLimiter {
    pub fn new(cap: usize) -> Self {
        assert!(cap > 0, "rate limit must allow at least one request");
        RateLimiter {
            cap,
            window: Duration::from_secs(1),
            recent: VecDeque::with_capacity(cap),
        }
    }

    /// Waits on `clock` until a request may be issued, records it and
    /// returns its admission time.
    pub fn admit<C: Clock>(&mut self, clock: &mut C) -> Duration {
        if self.recent.len() == self.cap {
            let oldest = self.recent[0];
            clock.sleep_until(oldest + self.window);
            self.recent.pop_front();
        }
        let now = clock.now();
        self.recent.push_back(now);
        now
    }
}

/// One successful reading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub user: String,
    pub day: u32,
    pub posts: u64,
    pub friends: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("source unavailable for `{user}` on day {day} after {attempts} attempt(s)")]
pub struct SourceUnavailable {
    pub user: String,
    pub day: u32,
    pub attempts: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CollectionReport {
    pub rows: Vec<Row>,
    pub failures: Vec<SourceUnavailable>,
    /// Admission time of every request, in order.
    pub request_log: Vec<Duration>,
}

impl CollectionReport {
    /// Largest number of requests inside any half-open one-second window.
    pub fn max_requests_per_window(&self) -> usize {
        let log = &self.request_log;
        let window = Duration::from_secs(1);
        let mut best = 0;
        let mut lo = 0;
        for hi in 0..log.len() {
            while log[hi] >= log[lo] + window {
                lo += 1;
            }
            best = best.max(hi - lo + 1);
        }
        best
    }
}

const DAY: Duration = Duration::from_secs(86_400);

/// Reads every user on days `0, cadence, 2·cadence, …` below `days`.
/// Failed readings leave no row; they are listed in the report instead.
pub fn collect<F: Fetcher, C: Clock>(
    fetcher: &mut F,
    clock: &mut C,
    users: &[String],
    days: u32,
    policy: &CollectorPolicy,
) -> CollectionReport {
    let mut limiter = RateLimiter::new(policy.max_requests_per_second);
    let mut report = CollectionReport::default();
    let start = clock.now();
    let cadence = policy.cadence_days.max(1);
    for day in (0..days).step_by(cadence as usize) {
        clock.sleep_until(start + DAY * day);
        for user in users {
            let mut attempts = 0;
            let mut backoff = policy.initial_backoff;
            loop {
                attempts += 1;
                report.request_log.push(limiter.admit(clock));
                match fetcher.fetch(user, day) {
                    Ok((posts, friends)) => {
                        report.rows.push(Row {
                            user: user.clone(),
                            day,
                            posts,
                            friends,
                        });
                        break;
                    }
                    Err(_) if attempts <= policy.max_retries => {
                        let wake = clock.now() + backoff;
                        clock.sleep_until(wake);
                        backoff *= 2;
                    }
                    Err(_) => {
                        report.failures.push(SourceUnavailable {
                            user: user.clone(),
                            day,
                            attempts,
                        });
                        break;
                    }
                }
            }
        }
    }
    report
}

/// Groups collected rows into per-user trajectories (users sorted by id).
pub fn rows_to_trajectories(rows: &[Row]) -> Vec<Trajectory> {
    let mut users: BTreeMap<&str, Vec<Snapshot>> = BTreeMap::new();
    for r in rows {
        users.entry(&r.user).or_default().push(Snapshot::new(
            r.day as f64,
            r.posts as i64,
            r.friends as i64,
        ));
    }
    users
        .into_iter()
        .map(|(u, mut snaps)| {
            snaps.sort_by(|a, b| a.t.total_cmp(&b.t));
            Trajectory::new(u, snaps)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn users(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("u{i}")).collect()
    }

    fn ok_fetcher(_: &str, day: u32) -> Result<(u64, u64), FetchError> {
        Ok((day as u64, 2 * day as u64))
    }

    #[test]
    fn ten_users_span_two_windows() {
        let mut clock = SimulatedClock::new();
        let mut f = ok_fetcher;
        let r = collect(
            &mut f,
            &mut clock,
            &users(10),
            1,
            &CollectorPolicy::default(),
        );
        assert_eq!(r.rows.len(), 10);
        assert_eq!(r.max_requests_per_window(), 5);
        // five requests at t=0, the next five once the first window closes
        assert_eq!(r.request_log[4], Duration::ZERO);
        assert_eq!(r.request_log[5], Duration::from_secs(1));
        assert!(clock.now() >= Duration::from_secs(1));
    }

    #[test]
    fn always_failing_source() {
        let mut clock = SimulatedClock::new();
        let mut f =
            |_: &str, _: u32| -> Result<(u64, u64), FetchError> { Err(FetchError("down".into())) };
        let policy = CollectorPolicy::default();
        let r = collect(&mut f, &mut clock, &users(3), 2, &policy);
        assert!(r.rows.is_empty());
        assert_eq!(r.failures.len(), 6);
        assert!(r
            .failures
            .iter()
            .all(|e| e.attempts == policy.max_retries + 1));
        assert!(r.max_requests_per_window() <= 5);
    }

    #[test]
    fn transient_failures_are_retried() {
        let mut clock = SimulatedClock::new();
        let mut calls = 0;
        let mut f = |_: &str, _: u32| {
            calls += 1;
            if calls % 2 == 1 {
                Err(FetchError("flaky".into()))
            } else {
                Ok((1, 1))
            }
        };
        let r = collect(
            &mut f,
            &mut clock,
            &users(4),
            1,
            &CollectorPolicy::default(),
        );
        assert_eq!(r.rows.len(), 4);
        assert!(r.failures.is_empty());
        assert_eq!(r.request_log.len(), 8);
    }

    #[test]
    fn blackout_leaves_gap() {
        let mut clock = SimulatedClock::new();
        let mut f = |_: &str, day: u32| {
            if (46..49).contains(&day) {
                Err(FetchError("network".into()))
            } else {
                Ok((day as u64, day as u64))
            }
        };
        let r = collect(
            &mut f,
            &mut clock,
            &users(2),
            60,
            &CollectorPolicy::default(),
        );
        let trajs = rows_to_trajectories(&r.rows);
        assert_eq!(trajs.len(), 2);
        assert_eq!(trajs[0].len(), 57);
        assert_eq!(r.failures.len(), 6);
        assert!(trajs[0]
            .snapshots
            .iter()
            .all(|s| !(46.0..49.0).contains(&s.t)));
    }

    #[test]
    fn limiter_respects_cap() {
        let mut clock = SimulatedClock::new();
        let mut limiter = RateLimiter::new(3);
        let times: Vec<Duration> = (0..9).map(|_| limiter.admit(&mut clock)).collect();
        let secs: Vec<u64> = times.iter().map(|d| d.as_secs()).collect();
        assert_eq!(secs, [0, 0, 0, 1, 1, 1, 2, 2, 2]);
    }
}
