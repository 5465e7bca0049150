//! Microscopic analysis: trajectories as timed event sequences.
//!
//! Each interval between two snapshots yields at most one event from the
//! four-letter alphabet [`EventKind`]. Sequences are summarized by their
//! [`Signature`], clustered with k-medoids under the Euclidean signature
//! distance, and every cluster is turned into a [`MarkovModel`] whose
//! dominant transitions determine the cluster's [`Archetype`].

mod events;
pub mod kmedoids;
mod markov;
mod signature;

pub use events::{delay_rate, extract_events, Event, EventFamily, EventKind, EventSequence};
pub use markov::{markov_model, micro_archetype, MarkovModel, Transition};
pub use signature::{cluster_micro, signature, signature_distance, MicroCluster, Signature};

use crate::archetype::{Archetype, ArchetypeShares};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MicroError {
    #[error("fewer than two {0:?} events with a successor in the same sequence")]
    InsufficientEvents(EventFamily),
    #[error("cannot form {k} clusters from {n} signatures")]
    TooFewPoints { k: usize, n: usize },
    #[error("cluster has no members")]
    EmptyCluster,
    #[error("no event sequence for cluster member `{0}`")]
    MissingSequence(String),
    #[error("no labels to summarize")]
    EmptyLabels,
}

/// Share of users per micro archetype.
pub fn micro_archetype_distribution(
    labels: &BTreeMap<String, Archetype>,
) -> Result<ArchetypeShares, MicroError> {
    ArchetypeShares::from_labels(labels.values().copied()).ok_or(MicroError::EmptyLabels)
}
