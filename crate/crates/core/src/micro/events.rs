use std::fmt;

use super::MicroError;
use crate::model::Trajectory;

/// Event alphabet. Post removals fold into [`EventKind::PostAdded`] (the
/// sign survives in [`Event::posts_delta`]); a simultaneous change of both
/// counters is a single non-directional [`EventKind::Compound`] event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    PostAdded,
    FriendAdded,
    FriendRemoved,
    Compound,
}

impl EventKind {
    pub const ALL: [EventKind; 4] = [
        EventKind::PostAdded,
        EventKind::FriendAdded,
        EventKind::FriendRemoved,
        EventKind::Compound,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> EventKind {
        EventKind::ALL[i]
    }

    /// Short ASCII symbol used in reports and CSV files.
    pub fn symbol(self) -> &'static str {
        match self {
            EventKind::PostAdded => "P+",
            EventKind::FriendAdded => "F+",
            EventKind::FriendRemoved => "F-",
            EventKind::Compound => "PF",
        }
    }

    pub fn is_publishing(self) -> bool {
        matches!(self, EventKind::PostAdded | EventKind::Compound)
    }

    pub fn is_social(self) -> bool {
        !matches!(self, EventKind::PostAdded)
    }

    pub fn in_family(self, family: EventFamily) -> bool {
        match family {
            EventFamily::Publishing => self.is_publishing(),
            EventFamily::Social => self.is_social(),
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Event groups whose inter-event delays are estimated separately.
/// Compound events belong to both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFamily {
    Publishing,
    Social,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Start of the interval in which the change was observed.
    pub t: f64,
    pub kind: EventKind,
    /// Diagnostics only; the alphabet ignores magnitudes.
    pub posts_delta: i64,
    pub friends_delta: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    pub user_id: String,
    pub events: Vec<Event>,
    /// First and last observation day of the source trajectory.
    pub start: f64,
    pub end: f64,
}

impl EventSequence {
    pub fn observed_days(&self) -> f64 {
        (self.end - self.start).max(0.0)
    }

    pub fn kinds(&self) -> impl Iterator<Item = EventKind> + '_ {
        self.events.iter().map(|e| e.kind)
    }
}

fn classify(dp: i64, df: i64) -> Option<EventKind> {
    match (dp != 0, df) {
        (false, 0) => None,
        (true, 0) => Some(EventKind::PostAdded),
        (false, d) if d > 0 => Some(EventKind::FriendAdded),
        (false, _) => Some(EventKind::FriendRemoved),
        (true, _) => Some(EventKind::Compound),
    }
}

/// One event per interval in which either counter changed.
pub fn extract_events(traj: &Trajectory) -> EventSequence {
    let events = traj
        .snapshots
        .windows(2)
        .filter_map(|w| {
            let dp = w[1].posts - w[0].posts;
            let df = w[1].friends - w[0].friends;
            classify(dp, df).map(|kind| Event {
                t: w[0].t,
                kind,
                posts_delta: dp,
                friends_delta: df,
            })
        })
        .collect();
    EventSequence {
        user_id: traj.user_id.clone(),
        events,
        start: traj.first_day().unwrap_or(0.0),
        end: traj.last_day().unwrap_or(0.0),
    }
}

/// Maximum-likelihood rate (per day) of an exponential model for the delays
/// between consecutive same-family events within each sequence.
pub fn delay_rate<'a, I>(seqs: I, family: EventFamily) -> Result<f64, MicroError>
where
    I: IntoIterator<Item = &'a EventSequence>,
{
    let mut n = 0usize;
    let mut total = 0.0;
    for seq in seqs {
        let mut prev: Option<f64> = None;
        for e in seq.events.iter().filter(|e| e.kind.in_family(family)) {
            if let Some(p) = prev {
                n += 1;
                total += e.t - p;
            }
            prev = Some(e.t);
        }
    }
    if n == 0 || total <= 0.0 {
        return Err(MicroError::InsufficientEvents(family));
    }
    Ok(n as f64 / total)
}
