//! End-to-end analysis of a trajectory population: preprocessing, the
//! micro and macro pipelines, and their comparison.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::archetype::Archetype;
use crate::compare::{
    archetype_table, cross_archetype_edges, edges, overlap, ArchetypeComparison, ClusterRef,
    CompareError, Edge, OverlapMatrix,
};
use crate::macroscopic::{
    anticorrelated_share, build_macro_clusters, classify_trajectory, macro_archetype, sqrt_law_fit,
    MacroCluster, MacroError, MacroKey, ShapeParams, SqrtLawFit, SqrtLawWeighting, TrajectoryShape,
};
use crate::micro::{
    cluster_micro, delay_rate, extract_events, markov_model, micro_archetype, signature,
    EventFamily, EventSequence, MarkovModel, MicroCluster, MicroError, Signature, Transition,
};
use crate::model::{
    percentile_filter, pf_correlation, translate_to_origin, validate, FilterReport, ModelError,
    Trajectory,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("no usable trajectories")]
    NoUsableTrajectories,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Micro(#[from] MicroError),
    #[error(transparent)]
    Macro(#[from] MacroError),
    #[error(transparent)]
    Compare(#[from] CompareError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisParams {
    /// Number of micro clusters; capped at the number of users.
    pub k: usize,
    pub shape: ShapeParams,
    /// Day⁻¹ frequency above which a Markov transition is dominant.
    pub dominant_freq: f64,
    /// Quantile used by the rough-trajectory filter.
    pub percentile: f64,
    pub seed: u64,
    pub sqrt_weighting: SqrtLawWeighting,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            k: 12,
            shape: ShapeParams::default(),
            dominant_freq: 0.1,
            percentile: 0.98,
            seed: 1,
            sqrt_weighting: SqrtLawWeighting::Unweighted,
        }
    }
}

/// A micro cluster with its Markov chain and label.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroSummary {
    pub cluster: MicroCluster,
    pub model: MarkovModel,
    pub archetype: Archetype,
    pub dominant: Vec<Transition>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub params: AnalysisParams,
    /// Input trajectories rejected by validation.
    pub invalid: Vec<(String, ModelError)>,
    pub filter: FilterReport,
    /// Kept trajectories, translated to the origin, sorted by user id.
    pub trajectories: Vec<Trajectory>,
    /// `None` where either counter is constant.
    pub correlations: BTreeMap<String, Option<f64>>,
    pub events: BTreeMap<String, EventSequence>,
    pub signatures: BTreeMap<String, Signature>,
    /// Requested `k` capped at the number of users; fewer clusters come
    /// out when signatures coincide.
    pub k: usize,
    pub micro: Vec<MicroSummary>,
    pub micro_labels: BTreeMap<String, Archetype>,
    pub publishing_rate: Option<f64>,
    pub social_rate: Option<f64>,
    pub shapes: BTreeMap<String, TrajectoryShape>,
    pub macro_clusters: Vec<MacroCluster>,
    pub macro_labels: BTreeMap<String, Archetype>,
    pub sqrt_law: Option<SqrtLawFit>,
    pub anticorrelated: f64,
}

impl Analysis {
    /// Micro cluster label and archetype per user.
    pub fn micro_assignment(&self) -> BTreeMap<String, (String, Archetype)> {
        self.micro
            .iter()
            .flat_map(|m| {
                m.cluster
                    .members
                    .iter()
                    .map(move |u| (u.clone(), (m.cluster.label(), m.archetype)))
            })
            .collect()
    }

    /// Macro key code and archetype per user.
    pub fn macro_assignment(&self) -> BTreeMap<String, (String, Archetype)> {
        self.shapes
            .iter()
            .map(|(u, s)| (u.clone(), (s.key.code(), macro_archetype(s.key))))
            .collect()
    }

    pub fn macro_keys(&self) -> Vec<MacroKey> {
        self.shapes.values().map(|s| s.key).collect()
    }
}

pub fn analyze(input: &[Trajectory], params: &AnalysisParams) -> Result<Analysis, PipelineError> {
    let mut valid = Vec::with_capacity(input.len());
    let mut invalid = Vec::new();
    for t in input {
        match validate(t.clone()) {
            Ok(v) => valid.push(v),
            Err(e) => invalid.push((t.user_id.clone(), e)),
        }
    }
    if valid.is_empty() {
        return Err(PipelineError::NoUsableTrajectories);
    }
    let filter = percentile_filter(&valid, params.percentile)?;
    let kept: std::collections::BTreeSet<&str> = filter.kept.iter().map(String::as_str).collect();
    let mut trajectories: Vec<Trajectory> = valid
        .iter()
        .filter(|t| kept.contains(t.user_id.as_str()))
        .map(translate_to_origin)
        .collect();
    trajectories.sort_by(|a, b| a.user_id.cmp(&b.user_id));

    let correlations = trajectories
        .iter()
        .map(|t| (t.user_id.clone(), pf_correlation(t)))
        .collect();

    // microscopic side
    let events: BTreeMap<String, EventSequence> = trajectories
        .par_iter()
        .map(|t| (t.user_id.clone(), extract_events(t)))
        .collect();
    let signatures: BTreeMap<String, Signature> = events
        .iter()
        .map(|(u, s)| (u.clone(), signature(s)))
        .collect();
    let k = params.k.min(signatures.len()).max(1);
    let clusters = cluster_micro(&signatures, k, params.seed)?;
    let mut micro = Vec::with_capacity(clusters.len());
    let mut micro_labels = BTreeMap::new();
    for cluster in clusters {
        let model = markov_model(&cluster, &events)?;
        let (archetype, dominant) = micro_archetype(&model, params.dominant_freq);
        for u in &cluster.members {
            micro_labels.insert(u.clone(), archetype);
        }
        micro.push(MicroSummary {
            cluster,
            model,
            archetype,
            dominant,
        });
    }
    let publishing_rate = delay_rate(events.values(), EventFamily::Publishing).ok();
    let social_rate = delay_rate(events.values(), EventFamily::Social).ok();

    // macroscopic side
    let shapes: BTreeMap<String, TrajectoryShape> = trajectories
        .par_iter()
        .map(|t| classify_trajectory(t, &params.shape).map(|s| (t.user_id.clone(), s)))
        .collect::<Result<_, _>>()?;
    let macro_clusters = build_macro_clusters(&trajectories, &shapes, &params.shape)?;
    let macro_labels = shapes
        .iter()
        .map(|(u, s)| (u.clone(), macro_archetype(s.key)))
        .collect();
    let means: Vec<_> = macro_clusters.iter().map(|c| c.mean.clone()).collect();
    let sqrt_law = match sqrt_law_fit(&means, params.sqrt_weighting) {
        Ok(f) => Some(f),
        Err(MacroError::NoPositiveP) => None,
        Err(e) => return Err(e.into()),
    };
    let keys: Vec<MacroKey> = shapes.values().map(|s| s.key).collect();
    let anticorrelated = anticorrelated_share(&keys)?;

    Ok(Analysis {
        params: params.clone(),
        invalid,
        filter,
        trajectories,
        correlations,
        events,
        signatures,
        k,
        micro,
        micro_labels,
        publishing_rate,
        social_rate,
        shapes,
        macro_clusters,
        macro_labels,
        sqrt_law,
        anticorrelated,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareParams {
    /// Share of the smaller cluster an overlap must reach to be significant.
    pub min_fraction: f64,
    /// Macro clusters kept (largest first) before extracting edges.
    pub top_macro: usize,
}

impl Default for CompareParams {
    fn default() -> Self {
        CompareParams {
            min_fraction: 0.25,
            top_macro: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub params: CompareParams,
    /// Overlap restricted to the largest macro clusters.
    pub overlap: OverlapMatrix,
    /// All non-zero cells of the restricted overlap.
    pub edges: Vec<Edge>,
    /// Significant edges joining clusters of different archetypes.
    pub anomalies: Vec<Edge>,
    pub archetypes: ArchetypeComparison,
    pub micro_archetypes: BTreeMap<String, Archetype>,
    pub macro_archetypes: BTreeMap<String, Archetype>,
}

impl Comparison {
    pub fn significant(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.significant)
    }
}

fn group(
    assign: &BTreeMap<String, (String, Archetype)>,
) -> (Vec<ClusterRef>, BTreeMap<String, Archetype>) {
    let mut members: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    let mut labels = BTreeMap::new();
    for (user, (cluster, archetype)) in assign {
        members.entry(cluster).or_default().push(user.clone());
        labels.insert(cluster.clone(), *archetype);
    }
    let mut clusters: Vec<ClusterRef> = members
        .into_iter()
        .map(|(l, m)| ClusterRef::new(l, m))
        .collect();
    clusters.sort_by(|a, b| {
        b.members
            .len()
            .cmp(&a.members.len())
            .then(a.label.cmp(&b.label))
    });
    (clusters, labels)
}

/// Compares per-user assignments `user -> (cluster label, archetype)`.
pub fn compare_assignments(
    micro: &BTreeMap<String, (String, Archetype)>,
    macro_: &BTreeMap<String, (String, Archetype)>,
    params: &CompareParams,
) -> Result<Comparison, CompareError> {
    let (micro_clusters, micro_archetypes) = group(micro);
    let (macro_clusters, macro_archetypes) = group(macro_);
    let full = overlap(&micro_clusters, &macro_clusters)?;
    let restricted = full.top_columns(params.top_macro);
    let all_edges = edges(&restricted, params.min_fraction);
    let significant: Vec<Edge> = all_edges
        .iter()
        .filter(|e| e.significant)
        .copied()
        .collect();
    let anomalies = cross_archetype_edges(
        &restricted,
        &significant,
        &micro_archetypes,
        &macro_archetypes,
    );
    let user_micro: BTreeMap<String, Archetype> =
        micro.iter().map(|(u, (_, a))| (u.clone(), *a)).collect();
    let user_macro: BTreeMap<String, Archetype> =
        macro_.iter().map(|(u, (_, a))| (u.clone(), *a)).collect();
    let archetypes = archetype_table(&user_micro, &user_macro)?;
    Ok(Comparison {
        params: params.clone(),
        overlap: restricted,
        edges: all_edges,
        anomalies,
        archetypes,
        micro_archetypes,
        macro_archetypes,
    })
}

pub fn compare(analysis: &Analysis, params: &CompareParams) -> Result<Comparison, CompareError> {
    compare_assignments(
        &analysis.micro_assignment(),
        &analysis.macro_assignment(),
        params,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_population, presets, ArchetypeSpec, Observation, PopulationSpec};

    fn population(mix: Vec<(ArchetypeSpec, f64)>, users: usize, seed: u64) -> Vec<Trajectory> {
        generate_population(&PopulationSpec {
            users,
            mix,
            duration: 140,
            seed,
            observation: Observation::default(),
        })
        .unwrap()
        .trajectories
    }

    #[test]
    fn flat_population() {
        let trajs = population(vec![(ArchetypeSpec::reader(), 1.0)], 20, 1);
        let a = analyze(&trajs, &AnalysisParams::default()).unwrap();
        assert_eq!(a.trajectories.len(), 20);
        assert!(a.micro_labels.values().all(|&l| l == Archetype::Reader));
        assert!(a.macro_labels.values().all(|&l| l == Archetype::Reader));
        assert_eq!(a.macro_clusters.len(), 1);
        assert_eq!(a.micro.len(), 1);
        assert!(a.sqrt_law.is_none());
        assert!(a.correlations.values().all(Option::is_none));
        let c = compare(&a, &CompareParams::default()).unwrap();
        assert!(c.archetypes.rows.iter().all(|r| r.difference == 0.0));
    }

    #[test]
    fn invalid_trajectories_are_set_aside() {
        let mut trajs = population(vec![(ArchetypeSpec::blogger(), 1.0)], 5, 2);
        trajs.push(Trajectory::from_tuples("short", &[(0.0, 1, 1)]));
        let a = analyze(&trajs, &AnalysisParams::default()).unwrap();
        assert_eq!(a.invalid.len(), 1);
        assert_eq!(a.filter.kept.len() + a.filter.dropped.len(), 5);
        assert!(analyze(&trajs[5..], &AnalysisParams::default()).is_err());
    }

    #[test]
    fn analysis_is_deterministic() {
        let trajs = population(presets::reference_mix(), 150, 3);
        let a = analyze(&trajs, &AnalysisParams::default()).unwrap();
        let b = analyze(&trajs, &AnalysisParams::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.micro.len(), 12);
        let sizes: usize = a.micro.iter().map(|m| m.cluster.len()).sum();
        assert_eq!(sizes, a.trajectories.len());
    }
}
