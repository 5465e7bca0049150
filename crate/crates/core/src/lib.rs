//! Co-evolution of publishing and friendship in blogging social networks.
//!
//! A user's blog is observed as a *trajectory*: a timed sequence of
//! cumulative `(posts, friends)` snapshots. Two complementary pipelines
//! classify users into behavioral archetypes:
//!
//! * [`micro`] turns each trajectory into a sequence of discrete events,
//!   summarizes it as a 16-entry next-event probability signature, clusters
//!   signatures with k-medoids and models every cluster as a Markov chain.
//! * [`macroscopic`] fits quadratic/linear models to each component of the
//!   trajectory, maps the fits onto a 7-class shape taxonomy and groups users
//!   into the 49 resulting `(posts, friends)` shape clusters.
//!
//! [`compare`] measures how the two clusterings correspond, [`synth`]
//! generates synthetic populations with known ground truth, and [`ingest`]
//! defines the on-disk snapshot format together with a rate-limited
//! collector contract. [`pipeline`] and [`report`] compose everything into
//! reproducible runs.

pub mod archetype;
pub mod compare;
pub mod ingest;
pub mod macroscopic;
pub mod micro;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use archetype::{Archetype, ArchetypeShares};
pub use model::{Snapshot, Trajectory};
