//! Synthetic trajectories with known generating archetypes.
//!
//! Publishing and social activity are Poisson processes observed through
//! daily cumulative snapshots. A generator rate `r` is the probability that a
//! day carries at least one event of its family, which makes the
//! inter-event delays between active days geometric with mean `1/r` and
//! lets [`crate::micro::delay_rate`] recover `r`. The underlying Poisson
//! intensity is `-ln(1 - r)`; an active day holds a zero-truncated Poisson
//! number of events at that intensity.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Pareto, Poisson};
use rayon::prelude::*;

use crate::archetype::Archetype;
use crate::model::{Snapshot, Trajectory};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("mix weights sum to {0}, expected 1")]
    InvalidMix(f64),
    #[error("invalid generator parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("duration must be at least 2 days")]
    InvalidDuration,
}

/// Generator parameters for one kind of user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchetypeSpec {
    /// Label assigned to generated users.
    pub archetype: Archetype,
    /// Publishing event days per day, in `[0, 1)`.
    pub pub_rate: f64,
    /// Social event days per day, in `[0, 1)`.
    pub soc_rate: f64,
    /// Probability that a social event removes friends.
    pub churn: f64,
    /// Probability that a day with both kinds of activity is recorded as
    /// one compound event; otherwise the social change lands a day later.
    pub compound_prob: f64,
    /// Correlation in `[0, 1]` between the daily publishing and social
    /// activity indicators.
    pub coupling: f64,
    /// Probability that friends gained on a day are dropped again later.
    pub transient: f64,
    /// Mean delay, in days, before a transient friend is dropped.
    pub transient_days: f64,
    /// Pareto shape of a per-day burst multiplier; `None` disables bursts.
    pub burst_tail: Option<f64>,
}

impl ArchetypeSpec {
    fn base(archetype: Archetype, pub_rate: f64, soc_rate: f64) -> Self {
        ArchetypeSpec {
            archetype,
            pub_rate,
            soc_rate,
            churn: 0.0,
            compound_prob: 1.0,
            coupling: 0.0,
            transient: 0.0,
            transient_days: 2.0,
            burst_tail: None,
        }
    }

    pub fn reader() -> Self {
        ArchetypeSpec::base(Archetype::Reader, 0.0, 0.0)
    }

    pub fn blogger() -> Self {
        ArchetypeSpec::base(Archetype::Blogger, 0.45, 0.0)
    }

    pub fn socializer() -> Self {
        ArchetypeSpec::base(Archetype::Socializer, 0.0, 0.2)
    }

    pub fn blogger_socializer() -> Self {
        ArchetypeSpec::base(Archetype::BloggerSocializer, 0.45, 0.2)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let rate = |name, value: f64| {
            if (0.0..1.0).contains(&value) {
                Ok(())
            } else {
                Err(SynthError::InvalidParameter { name, value })
            }
        };
        let prob = |name, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(SynthError::InvalidParameter { name, value })
            }
        };
        rate("pub_rate", self.pub_rate)?;
        rate("soc_rate", self.soc_rate)?;
        prob("churn", self.churn)?;
        prob("compound_prob", self.compound_prob)?;
        prob("coupling", self.coupling)?;
        prob("transient", self.transient)?;
        if !(self.transient_days > 0.0 && self.transient_days.is_finite()) {
            return Err(SynthError::InvalidParameter {
                name: "transient_days",
                value: self.transient_days,
            });
        }
        if let Some(alpha) = self.burst_tail {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(SynthError::InvalidParameter {
                    name: "burst_tail",
                    value: alpha,
                });
            }
        }
        Ok(())
    }
}

/// Which days of the window are recorded.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Observation {
    /// Snapshot days `[start, end)` that are missing from the output.
    pub blackout: Option<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub users: usize,
    /// Weighted generators; weights must sum to 1.
    pub mix: Vec<(ArchetypeSpec, f64)>,
    /// Number of daily snapshots per user.
    pub duration: u32,
    pub seed: u64,
    pub observation: Observation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub trajectories: Vec<Trajectory>,
    /// Generating archetype per user id.
    pub labels: BTreeMap<String, Archetype>,
}

/// Deterministic per-user RNG derived from the master seed.
pub fn user_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn user_id(index: usize) -> String {
    format!("u{index:05}")
}

/// P(both active) for Bernoulli marginals `p`, `q` at correlation `c`,
/// clamped to the feasible range.
fn joint_activity(p: f64, q: f64, c: f64) -> f64 {
    let b = p * q + c * (p * (1.0 - p) * q * (1.0 - q)).sqrt();
    b.clamp((p + q - 1.0).max(0.0), p.min(q))
}

fn active_day_count<R: Rng>(rate: f64, rng: &mut R) -> i64 {
    let lambda = -(1.0 - rate).ln();
    let poisson = Poisson::new(lambda).expect("positive intensity");
    loop {
        let k = poisson.sample(rng) as i64;
        if k > 0 {
            return k;
        }
    }
}

fn burst<R: Rng>(count: i64, tail: Option<f64>, rng: &mut R) -> i64 {
    match tail {
        None => count,
        Some(alpha) => {
            let m = Pareto::new(1.0, alpha).expect("valid Pareto").sample(rng);
            // guard against absurd draws from very heavy tails
            (count as f64 * m.min(1e6)).floor() as i64
        }
    }
}

/// One user's trajectory over days `0..duration`.
pub fn generate_user<R: Rng>(
    user_id: &str,
    spec: &ArchetypeSpec,
    duration: u32,
    observation: &Observation,
    rng: &mut R,
) -> Trajectory {
    let mut posts: i64 = rng.random_range(0..=400);
    let mut friends: i64 = rng.random_range(5..=150);
    let both = joint_activity(spec.pub_rate, spec.soc_rate, spec.coupling);
    let transient_delay = Exp::new(1.0 / spec.transient_days).expect("positive mean");

    let mut pending_social: i64 = 0;
    // day index -> friends to drop on that day
    let mut scheduled_drops: BTreeMap<u32, i64> = BTreeMap::new();
    let mut snapshots = Vec::with_capacity(duration as usize);

    for day in 0..duration {
        let skipped = observation
            .blackout
            .is_some_and(|(a, b)| day >= a && day < b);
        if !skipped {
            snapshots.push(Snapshot::new(day as f64, posts, friends));
        }
        if day + 1 == duration {
            break;
        }

        let u: f64 = rng.random();
        let (p, s) = if u < both {
            (true, true)
        } else if u < spec.pub_rate {
            (true, false)
        } else if u < spec.pub_rate + spec.soc_rate - both {
            (false, true)
        } else {
            (false, false)
        };

        if p {
            posts += burst(active_day_count(spec.pub_rate, rng), spec.burst_tail, rng);
        }

        let mut social = std::mem::take(&mut pending_social);
        if s {
            let size = burst(active_day_count(spec.soc_rate, rng), spec.burst_tail, rng);
            let remove = friends > 0 && rng.random_bool(spec.churn);
            let change = if remove { -size } else { size };
            if p && !rng.random_bool(spec.compound_prob) {
                pending_social += change;
            } else {
                social += change;
            }
            if change > 0 && spec.transient > 0.0 && rng.random_bool(spec.transient) {
                let delay = transient_delay.sample(rng).ceil().max(1.0) as u32;
                *scheduled_drops.entry(day + delay).or_default() += change;
            }
        }
        if let Some(drop) = scheduled_drops.remove(&day) {
            social -= drop;
        }
        friends = (friends + social).max(0);
    }
    Trajectory::new(user_id, snapshots)
}

fn check_mix(mix: &[(ArchetypeSpec, f64)]) -> Result<(), SynthError> {
    let total: f64 = mix.iter().map(|(_, w)| w).sum();
    if mix.is_empty()
        || mix.iter().any(|(_, w)| w.is_nan() || *w < 0.0)
        || (total - 1.0).abs() > 1e-9
    {
        return Err(SynthError::InvalidMix(total));
    }
    for (spec, _) in mix {
        spec.validate()?;
    }
    Ok(())
}

/// Draws every user's archetype from the mix, then its trajectory. The
/// output depends only on the spec, not on thread scheduling.
pub fn generate_population(spec: &PopulationSpec) -> Result<Population, SynthError> {
    check_mix(&spec.mix)?;
    if spec.duration < 2 {
        return Err(SynthError::InvalidDuration);
    }
    let generated: Vec<(Trajectory, Archetype)> = (0..spec.users)
        .into_par_iter()
        .map(|i| {
            let mut rng = user_rng(spec.seed, i as u64);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = &spec.mix[spec.mix.len() - 1].0;
            for (s, w) in &spec.mix {
                acc += w;
                if u < acc {
                    chosen = s;
                    break;
                }
            }
            let id = user_id(i);
            let traj = generate_user(&id, chosen, spec.duration, &spec.observation, &mut rng);
            (traj, chosen.archetype)
        })
        .collect();
    let labels = generated
        .iter()
        .map(|(t, a)| (t.user_id.clone(), *a))
        .collect();
    Ok(Population {
        trajectories: generated.into_iter().map(|(t, _)| t).collect(),
        labels,
    })
}

/// Bloggers whose friend count follows `c·√P` up to multiplicative noise.
/// Posts start at zero and grow at a per-user rate around 0.45 a day.
pub fn generate_sqrt_coupled(
    users: usize,
    c: f64,
    noise: f64,
    duration: u32,
    seed: u64,
) -> Result<Vec<Trajectory>, SynthError> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(SynthError::InvalidParameter {
            name: "c",
            value: c,
        });
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(SynthError::InvalidParameter {
            name: "noise",
            value: noise,
        });
    }
    if duration < 2 {
        return Err(SynthError::InvalidDuration);
    }
    let gauss = Normal::new(0.0, 1.0).expect("unit normal");
    Ok((0..users)
        .into_par_iter()
        .map(|i| {
            let mut rng = user_rng(seed, i as u64);
            let rate = 0.45 * rng.random_range(0.5..1.5);
            let daily = Poisson::new(rate).expect("positive rate");
            let mut posts: i64 = 0;
            let snapshots = (0..duration)
                .map(|day| {
                    if day > 0 {
                        posts += daily.sample(&mut rng) as i64;
                    }
                    let z: f64 = gauss.sample(&mut rng);
                    let f = c * (posts as f64).sqrt() * (1.0 + noise * z);
                    Snapshot::new(day as f64, posts, f.round().max(0.0) as i64)
                })
                .collect();
            Trajectory::new(user_id(i), snapshots)
        })
        .collect())
}

/// Named populations used by the command line and the test suites.
pub mod presets {
    use super::ArchetypeSpec;
    use crate::archetype::Archetype;

    pub const NAMES: [&str; 7] = [
        "paper",
        "reader-only",
        "churn",
        "coupled",
        "noisy-reader",
        "independent",
        "heavy",
    ];

    pub fn by_name(name: &str) -> Option<Vec<(ArchetypeSpec, f64)>> {
        Some(match name {
            "paper" => reference_mix(),
            "reader-only" => vec![(ArchetypeSpec::reader(), 1.0)],
            "churn" => churn_mix(),
            "coupled" => vec![(coupled_blogger_socializer(), 1.0)],
            "noisy-reader" => vec![(noisy_reader(), 1.0)],
            "independent" => vec![(independent_blogger_socializer(), 1.0)],
            "heavy" => heavy_mix(),
            _ => return None,
        })
    }

    /// Blogger-socializer whose social change usually trails the post by a
    /// day, so the publishing/social alternation is frequent.
    pub fn blogger_socializer() -> ArchetypeSpec {
        ArchetypeSpec {
            compound_prob: 0.0,
            ..ArchetypeSpec::blogger_socializer()
        }
    }

    pub fn socializer() -> ArchetypeSpec {
        ArchetypeSpec {
            churn: 0.1,
            ..ArchetypeSpec::socializer()
        }
    }

    /// Reader .45, Blogger-socializer .20, Socializer .20, Blogger .15.
    pub fn reference_mix() -> Vec<(ArchetypeSpec, f64)> {
        vec![
            (ArchetypeSpec::reader(), 0.45),
            (blogger_socializer(), 0.20),
            (socializer(), 0.20),
            (ArchetypeSpec::blogger(), 0.15),
        ]
    }

    /// Reference mix where social users add and drop friends in equal
    /// measure at a high rate, leaving the friend count nearly flat.
    pub fn churn_mix() -> Vec<(ArchetypeSpec, f64)> {
        vec![
            (ArchetypeSpec::reader(), 0.45),
            (
                ArchetypeSpec {
                    soc_rate: 0.8,
                    churn: 0.5,
                    ..ArchetypeSpec::blogger_socializer()
                },
                0.20,
            ),
            (
                ArchetypeSpec {
                    soc_rate: 0.8,
                    churn: 0.5,
                    ..ArchetypeSpec::socializer()
                },
                0.20,
            ),
            (ArchetypeSpec::blogger(), 0.15),
        ]
    }

    pub fn coupled_blogger_socializer() -> ArchetypeSpec {
        ArchetypeSpec {
            coupling: 1.0,
            ..ArchetypeSpec::blogger_socializer()
        }
    }

    /// Both families at the reference rates, independent, every co-occurring
    /// day recorded as a compound event, no friend removals.
    pub fn independent_blogger_socializer() -> ArchetypeSpec {
        ArchetypeSpec::blogger_socializer()
    }

    /// Occasional posts and short-lived friendships: no trend in either
    /// counter and no link between them.
    pub fn noisy_reader() -> ArchetypeSpec {
        ArchetypeSpec {
            archetype: Archetype::Reader,
            pub_rate: 0.03,
            soc_rate: 0.05,
            transient: 1.0,
            ..ArchetypeSpec::reader()
        }
    }

    /// Reference mix with heavy-tailed event sizes.
    pub fn heavy_mix() -> Vec<(ArchetypeSpec, f64)> {
        reference_mix()
            .into_iter()
            .map(|(s, w)| {
                (
                    ArchetypeSpec {
                        burst_tail: Some(1.5),
                        ..s
                    },
                    w,
                )
            })
            .collect()
    }
}
