//! Snapshot persistence and the rate-limited collection contract.
//!
//! [`format`] reads and writes the canonical snapshot file, [`collector`]
//! drives an abstract data source under a requests-per-second cap.

pub mod collector;
pub mod format;

pub use collector::{
    collect, rows_to_trajectories, Clock, CollectionReport, CollectorPolicy, FetchError, Fetcher,
    RateLimiter, Row, SimulatedClock, SourceUnavailable,
};
pub use format::{
    read_snapshots, read_snapshots_from, write_snapshots, write_snapshots_to, IngestError,
    SnapshotHeader, SnapshotSet, FORMAT_VERSION,
};
