//! Correspondence between the micro and macro clusterings: the overlap
//! (contingency) matrix, its significant edges and the archetype share
//! comparison.

use std::collections::{BTreeMap, BTreeSet};

use crate::archetype::{Archetype, ArchetypeShares};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompareError {
    #[error(
        "the clusterings cover different users ({only_left} only on the micro side, \
         {only_right} only on the macro side)"
    )]
    MismatchedUniverse { only_left: usize, only_right: usize },
    #[error("user `{0}` appears in more than one cluster")]
    NotAPartition(String),
    #[error("no users to compare")]
    EmptyInput,
}

/// A cluster as seen by the comparison: a label and its member ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterRef {
    pub label: String,
    pub members: Vec<String>,
}

impl ClusterRef {
    pub fn new(label: impl Into<String>, members: Vec<String>) -> Self {
        ClusterRef {
            label: label.into(),
            members,
        }
    }
}

/// Shared-member counts between micro clusters (rows) and macro clusters
/// (columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// Full cluster sizes; unaffected by [`OverlapMatrix::top_columns`].
    pub row_sizes: Vec<usize>,
    pub col_sizes: Vec<usize>,
    pub counts: Vec<Vec<usize>>,
}

impl OverlapMatrix {
    pub fn get(&self, row: usize, col: usize) -> usize {
        self.counts[row][col]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Keeps the `n` largest columns (ties keep the earlier column).
    pub fn top_columns(&self, n: usize) -> OverlapMatrix {
        let mut order: Vec<usize> = (0..self.cols.len()).collect();
        order.sort_by(|&a, &b| self.col_sizes[b].cmp(&self.col_sizes[a]).then(a.cmp(&b)));
        order.truncate(n);
        order.sort_unstable();
        OverlapMatrix {
            rows: self.rows.clone(),
            cols: order.iter().map(|&j| self.cols[j].clone()).collect(),
            row_sizes: self.row_sizes.clone(),
            col_sizes: order.iter().map(|&j| self.col_sizes[j]).collect(),
            counts: self
                .counts
                .iter()
                .map(|r| order.iter().map(|&j| r[j]).collect())
                .collect(),
        }
    }
}

fn membership(clusters: &[ClusterRef]) -> Result<BTreeMap<&str, usize>, CompareError> {
    let mut map = BTreeMap::new();
    for (i, c) in clusters.iter().enumerate() {
        for m in &c.members {
            if map.insert(m.as_str(), i).is_some() {
                return Err(CompareError::NotAPartition(m.clone()));
            }
        }
    }
    Ok(map)
}

fn check_universe<'a, A, B>(left: A, right: B) -> Result<(), CompareError>
where
    A: IntoIterator<Item = &'a str>,
    B: IntoIterator<Item = &'a str>,
{
    let l: BTreeSet<&str> = left.into_iter().collect();
    let r: BTreeSet<&str> = right.into_iter().collect();
    let only_left = l.difference(&r).count();
    let only_right = r.difference(&l).count();
    if only_left > 0 || only_right > 0 {
        return Err(CompareError::MismatchedUniverse {
            only_left,
            only_right,
        });
    }
    if l.is_empty() {
        return Err(CompareError::EmptyInput);
    }
    Ok(())
}

pub fn overlap(micro: &[ClusterRef], macro_: &[ClusterRef]) -> Result<OverlapMatrix, CompareError> {
    let rows = membership(micro)?;
    let cols = membership(macro_)?;
    check_universe(rows.keys().copied(), cols.keys().copied())?;
    let mut counts = vec![vec![0usize; macro_.len()]; micro.len()];
    for (user, &i) in &rows {
        counts[i][cols[user]] += 1;
    }
    Ok(OverlapMatrix {
        rows: micro.iter().map(|c| c.label.clone()).collect(),
        cols: macro_.iter().map(|c| c.label.clone()).collect(),
        row_sizes: micro.iter().map(|c| c.members.len()).collect(),
        col_sizes: macro_.iter().map(|c| c.members.len()).collect(),
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgePattern {
    OneToOne,
    /// One micro cluster linked to several macro clusters.
    OneToMany,
    /// Several micro clusters linked to one macro cluster.
    ManyToOne,
    ManyToMany,
}

impl EdgePattern {
    pub fn code(self) -> &'static str {
        match self {
            EdgePattern::OneToOne => "one-to-one",
            EdgePattern::OneToMany => "one-to-many",
            EdgePattern::ManyToOne => "many-to-one",
            EdgePattern::ManyToMany => "many-to-many",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub row: usize,
    pub col: usize,
    pub count: usize,
    pub significant: bool,
    /// Degree pattern among significant edges; `None` for weak edges.
    pub pattern: Option<EdgePattern>,
}

/// Every non-zero cell, with significance: a cell is significant when it
/// holds at least `min_fraction` of the smaller of its two clusters.
pub fn edges(m: &OverlapMatrix, min_fraction: f64) -> Vec<Edge> {
    let mut out = Vec::new();
    for (i, row) in m.counts.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let smaller = m.row_sizes[i].min(m.col_sizes[j]) as f64;
            out.push(Edge {
                row: i,
                col: j,
                count,
                significant: count as f64 >= min_fraction * smaller,
                pattern: None,
            });
        }
    }
    let mut row_deg = vec![0usize; m.rows.len()];
    let mut col_deg = vec![0usize; m.cols.len()];
    for e in out.iter().filter(|e| e.significant) {
        row_deg[e.row] += 1;
        col_deg[e.col] += 1;
    }
    for e in out.iter_mut().filter(|e| e.significant) {
        e.pattern = Some(match (row_deg[e.row] > 1, col_deg[e.col] > 1) {
            (false, false) => EdgePattern::OneToOne,
            (true, false) => EdgePattern::OneToMany,
            (false, true) => EdgePattern::ManyToOne,
            (true, true) => EdgePattern::ManyToMany,
        });
    }
    out
}

pub fn significant_edges(m: &OverlapMatrix, min_fraction: f64) -> Vec<Edge> {
    edges(m, min_fraction)
        .into_iter()
        .filter(|e| e.significant)
        .collect()
}

/// Significant edges whose two clusters carry different archetypes.
pub fn cross_archetype_edges(
    m: &OverlapMatrix,
    significant: &[Edge],
    micro: &BTreeMap<String, Archetype>,
    macro_: &BTreeMap<String, Archetype>,
) -> Vec<Edge> {
    significant
        .iter()
        .filter(
            |e| match (micro.get(&m.rows[e.row]), macro_.get(&m.cols[e.col])) {
                (Some(a), Some(b)) => a != b,
                _ => false,
            },
        )
        .copied()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchetypeRow {
    pub archetype: Archetype,
    pub micro: f64,
    pub macro_: f64,
    /// `macro_ - micro`.
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchetypeComparison {
    pub rows: Vec<ArchetypeRow>,
    pub micro: ArchetypeShares,
    pub macro_: ArchetypeShares,
}

impl ArchetypeComparison {
    pub fn row(&self, a: Archetype) -> &ArchetypeRow {
        &self.rows[a.index()]
    }
}

pub fn compare_shares(micro: ArchetypeShares, macro_: ArchetypeShares) -> ArchetypeComparison {
    let rows = Archetype::ALL
        .into_iter()
        .map(|a| ArchetypeRow {
            archetype: a,
            micro: micro.get(a),
            macro_: macro_.get(a),
            difference: macro_.get(a) - micro.get(a),
        })
        .collect();
    ArchetypeComparison {
        rows,
        micro,
        macro_,
    }
}

/// Per-user labelings of the same users, compared as archetype shares.
pub fn archetype_table(
    micro: &BTreeMap<String, Archetype>,
    macro_: &BTreeMap<String, Archetype>,
) -> Result<ArchetypeComparison, CompareError> {
    check_universe(
        micro.keys().map(String::as_str),
        macro_.keys().map(String::as_str),
    )?;
    let m =
        ArchetypeShares::from_labels(micro.values().copied()).ok_or(CompareError::EmptyInput)?;
    let a =
        ArchetypeShares::from_labels(macro_.values().copied()).ok_or(CompareError::EmptyInput)?;
    Ok(compare_shares(m, a))
}
