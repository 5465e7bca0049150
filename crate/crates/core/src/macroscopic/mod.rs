//! Macroscopic analysis: trajectories as smooth curves in
//! time-posts-friends space.
//!
//! Each component is fitted with a quadratic and a linear model
//! ([`fit_component`]), reduced to one of seven shape classes
//! ([`classify_dynamics`]), and the `(posts, friends)` class pair places the
//! user in one of 49 macro clusters. Cluster mean trajectories feed the
//! square-root law fit `F ≈ c·√P`.

mod cluster;
mod fit;
mod taxonomy;

pub use cluster::{
    build_macro_clusters, common_grid, mean_trajectory, sqrt_law_fit, MacroCluster, MeanTrajectory,
    SqrtLawFit, SqrtLawWeighting,
};
pub use fit::{fit_component, QuadFit};
pub use taxonomy::{
    anticorrelated_share, classify_dynamics, classify_trajectory, fit_quality, macro_archetype,
    DynamicsClass, MacroKey, ShapeParams, TrajectoryShape,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MacroError {
    #[error("{0} point(s) are not enough for a fit")]
    TooFewPoints(usize),
    #[error("all observation days coincide; the fit is rank deficient")]
    RankDeficient,
    #[error("series lengths differ ({0} days vs {1} values)")]
    LengthMismatch(usize, usize),
    #[error("cluster has no members")]
    EmptyCluster,
    #[error("no points with positive post count")]
    NoPositiveP,
    #[error("empty input")]
    EmptyInput,
    #[error("no shape for trajectory `{0}`")]
    MissingShape(String),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}
