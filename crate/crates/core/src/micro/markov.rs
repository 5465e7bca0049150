use std::collections::BTreeMap;

use super::events::{EventKind, EventSequence};
use super::signature::MicroCluster;
use super::MicroError;
use crate::archetype::Archetype;

/// A cluster summarized as a Markov chain over the event alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    /// Observed `i -> j` transitions.
    pub counts: [[u64; 4]; 4],
    /// Transitions per observed member-day.
    pub freq: [[f64; 4]; 4],
    /// Mean delay between the paired events, in days; `None` if never seen.
    pub duration: [[Option<f64>; 4]; 4],
    /// Sum of the observation windows of all members.
    pub observed_days: f64,
    pub members: usize,
}

impl MarkovModel {
    pub fn freq(&self, from: EventKind, to: EventKind) -> f64 {
        self.freq[from.index()][to.index()]
    }

    pub fn duration(&self, from: EventKind, to: EventKind) -> Option<f64> {
        self.duration[from.index()][to.index()]
    }

    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        (0..16).filter_map(move |k| {
            let (i, j) = (k / 4, k % 4);
            self.duration[i][j].map(|d| Transition {
                from: EventKind::from_index(i),
                to: EventKind::from_index(j),
                count: self.counts[i][j],
                freq: self.freq[i][j],
                duration: d,
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub from: EventKind,
    pub to: EventKind,
    pub count: u64,
    pub freq: f64,
    pub duration: f64,
}

/// Pools the transitions of all cluster members.
pub fn markov_model(
    cluster: &MicroCluster,
    seqs: &BTreeMap<String, EventSequence>,
) -> Result<MarkovModel, MicroError> {
    if cluster.members.is_empty() {
        return Err(MicroError::EmptyCluster);
    }
    let mut counts = [[0u64; 4]; 4];
    let mut gap_sums = [[0.0f64; 4]; 4];
    let mut observed_days = 0.0;
    for user in &cluster.members {
        let seq = seqs
            .get(user)
            .ok_or_else(|| MicroError::MissingSequence(user.clone()))?;
        observed_days += seq.observed_days();
        for pair in seq.events.windows(2) {
            let (i, j) = (pair[0].kind.index(), pair[1].kind.index());
            counts[i][j] += 1;
            gap_sums[i][j] += pair[1].t - pair[0].t;
        }
    }
    let mut freq = [[0.0; 4]; 4];
    let mut duration = [[None; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            if counts[i][j] > 0 {
                duration[i][j] = Some(gap_sums[i][j] / counts[i][j] as f64);
                if observed_days > 0.0 {
                    freq[i][j] = counts[i][j] as f64 / observed_days;
                }
            }
        }
    }
    Ok(MarkovModel {
        counts,
        freq,
        duration,
        observed_days,
        members: cluster.members.len(),
    })
}

fn publishing_only(k: EventKind) -> bool {
    k == EventKind::PostAdded
}

fn social_only(k: EventKind) -> bool {
    matches!(k, EventKind::FriendAdded | EventKind::FriendRemoved)
}

/// Labels a cluster from its dominant transitions: those observed with a
/// frequency of at least `freq_threshold` per day.
pub fn micro_archetype(model: &MarkovModel, freq_threshold: f64) -> (Archetype, Vec<Transition>) {
    let mut dominant: Vec<Transition> = model
        .transitions()
        .filter(|t| t.freq > 0.0 && t.freq >= freq_threshold)
        .collect();
    dominant.sort_by(|a, b| b.freq.total_cmp(&a.freq));

    let label = if dominant.is_empty() {
        Archetype::Reader
    } else if dominant
        .iter()
        .all(|t| publishing_only(t.from) && publishing_only(t.to))
    {
        Archetype::Blogger
    } else if dominant
        .iter()
        .all(|t| social_only(t.from) && social_only(t.to))
    {
        Archetype::Socializer
    } else {
        Archetype::BloggerSocializer
    };
    (label, dominant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::micro::events::Event;
    use crate::micro::signature::Signature;
    use EventKind::*;

    fn periodic(user: &str, kinds: &[EventKind], every: f64, days: f64) -> EventSequence {
        let mut events = Vec::new();
        let mut t = 0.0;
        let mut k = 0;
        while t < days {
            events.push(Event {
                t,
                kind: kinds[k % kinds.len()],
                posts_delta: 1,
                friends_delta: 0,
            });
            t += every;
            k += 1;
        }
        EventSequence {
            user_id: user.into(),
            events,
            start: 0.0,
            end: days,
        }
    }

    fn cluster_of(users: &[&str]) -> MicroCluster {
        MicroCluster {
            id: 1,
            medoid: users[0].into(),
            members: users.iter().map(|u| u.to_string()).collect(),
            mean_signature: Signature::zero(),
        }
    }

    fn seqs(list: Vec<EventSequence>) -> BTreeMap<String, EventSequence> {
        list.into_iter().map(|s| (s.user_id.clone(), s)).collect()
    }

    #[test]
    fn nine_day_blogger() {
        let s = seqs(vec![
            periodic("a", &[PostAdded], 9.0, 140.0),
            periodic("b", &[PostAdded], 9.0, 140.0),
        ]);
        let m = markov_model(&cluster_of(&["a", "b"]), &s).unwrap();
        assert_eq!(m.duration(PostAdded, PostAdded), Some(9.0));
        // 16 events -> 15 transitions per member over 140 days
        assert!((m.freq(PostAdded, PostAdded) - 30.0 / 280.0).abs() < 1e-12);
        assert_eq!(m.duration(PostAdded, FriendAdded), None);
        let (label, dominant) = micro_archetype(&m, 0.1);
        assert_eq!(label, Archetype::Blogger);
        assert_eq!(dominant.len(), 1);
    }

    #[test]
    fn reader_cluster() {
        let empty = EventSequence {
            user_id: "r".into(),
            events: vec![],
            start: 0.0,
            end: 140.0,
        };
        let m = markov_model(&cluster_of(&["r"]), &seqs(vec![empty])).unwrap();
        assert!(m.freq.iter().flatten().all(|&f| f == 0.0));
        assert!(m.duration.iter().flatten().all(Option::is_none));
        for threshold in [0.0, 0.01, 0.1, 5.0] {
            assert_eq!(micro_archetype(&m, threshold), (Archetype::Reader, vec![]));
        }
    }

    #[test]
    fn errors() {
        let c = MicroCluster {
            members: vec![],
            ..cluster_of(&["x"])
        };
        assert_eq!(
            markov_model(&c, &BTreeMap::new()),
            Err(MicroError::EmptyCluster)
        );
        assert_eq!(
            markov_model(&cluster_of(&["ghost"]), &BTreeMap::new()),
            Err(MicroError::MissingSequence("ghost".into()))
        );
    }

    fn model_with(entries: &[(EventKind, EventKind, f64)]) -> MarkovModel {
        let mut m = MarkovModel {
            counts: [[0; 4]; 4],
            freq: [[0.0; 4]; 4],
            duration: [[None; 4]; 4],
            observed_days: 100.0,
            members: 1,
        };
        for &(a, b, f) in entries {
            m.counts[a.index()][b.index()] = (f * 100.0) as u64;
            m.freq[a.index()][b.index()] = f;
            m.duration[a.index()][b.index()] = Some(1.0 / f);
        }
        m
    }

    #[test]
    fn archetype_rules() {
        let soc = model_with(&[
            (FriendAdded, FriendAdded, 0.2),
            (PostAdded, PostAdded, 0.02),
        ]);
        assert_eq!(micro_archetype(&soc, 0.1).0, Archetype::Socializer);

        let churn = model_with(&[
            (FriendAdded, FriendRemoved, 0.25),
            (FriendRemoved, FriendRemoved, 0.12),
            (FriendRemoved, FriendAdded, 0.14),
        ]);
        assert_eq!(micro_archetype(&churn, 0.1).0, Archetype::Socializer);

        let bsoc = model_with(&[
            (PostAdded, PostAdded, 0.3),
            (PostAdded, Compound, 0.3),
            (Compound, PostAdded, 0.5),
        ]);
        let (label, dominant) = micro_archetype(&bsoc, 0.1);
        assert_eq!(label, Archetype::BloggerSocializer);
        assert_eq!(dominant.len(), 3);

        let mixed = model_with(&[(PostAdded, FriendAdded, 0.3), (FriendAdded, PostAdded, 0.3)]);
        assert_eq!(micro_archetype(&mixed, 0.1).0, Archetype::BloggerSocializer);

        // a compound self-loop alone still touches both families
        let compound = model_with(&[(Compound, Compound, 0.3)]);
        assert_eq!(
            micro_archetype(&compound, 0.1).0,
            Archetype::BloggerSocializer
        );
    }

    #[test]
    fn frequency_is_per_day() {
        let short = seqs(vec![periodic("a", &[PostAdded, FriendAdded], 2.0, 50.0)]);
        let long = seqs(vec![periodic("a", &[PostAdded, FriendAdded], 2.0, 100.0)]);
        let c = cluster_of(&["a"]);
        let ms = markov_model(&c, &short).unwrap();
        let ml = markov_model(&c, &long).unwrap();
        // same pattern over twice the window: counts double, frequency is unchanged
        for i in 0..4 {
            for j in 0..4 {
                let (a, b) = (ms.freq[i][j], ml.freq[i][j]);
                assert!((a - b).abs() <= 0.05 * a.max(b) + 1e-12, "{a} vs {b}");
            }
        }
        // same events spread over twice the window: frequency halves
        let mut stretched = short.clone();
        stretched.get_mut("a").unwrap().end = 100.0;
        let mh = markov_model(&c, &stretched).unwrap();
        assert!(
            (mh.freq(PostAdded, FriendAdded) * 2.0 - ms.freq(PostAdded, FriendAdded)).abs() < 1e-12
        );
    }
}
