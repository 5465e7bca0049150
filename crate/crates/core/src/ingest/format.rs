//! Canonical snapshot file.
//!
//! ```text
//! 1,2000-01-01
//! # seed=7
//! user_id,day,posts_total,friends_total
//! u00000,0,12,40
//! u00000,1,13,40
//! ```
//!
//! The first line holds the format version and the study start date. Lines
//! starting with `#` carry free-form provenance and are ignored by the
//! reader. Rows are sorted by user id, then day; days are written in
//! shortest round-trip form and counts are non-negative integers.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::model::{Snapshot, Trajectory};

pub const FORMAT_VERSION: u32 = 1;
const COLUMNS: &str = "user_id,day,posts_total,friends_total";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate row for user `{user}` on day {day}")]
    DuplicateRow { user: String, day: f64 },
}

impl IngestError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        IngestError::Parse {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapshotHeader {
    pub start_date: String,
    /// Provenance lines, without the leading `# `.
    pub comments: Vec<String>,
}

impl Default for SnapshotHeader {
    fn default() -> Self {
        SnapshotHeader {
            start_date: "2000-01-01".into(),
            comments: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub header: SnapshotHeader,
    /// Users with at least two rows, sorted by id.
    pub trajectories: Vec<Trajectory>,
    /// Users with a single row: accounts that could not be followed.
    pub abandoned: Vec<Trajectory>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_snapshots(path: impl AsRef<Path>) -> Result<SnapshotSet, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    read_snapshots_from(BufReader::new(file)).map_err(|e| match e {
        IngestError::Io { source, .. } => io_err(path)(source),
        other => other,
    })
}

fn parse_count(field: &str, name: &str, line: usize) -> Result<i64, IngestError> {
    let v: i64 = field
        .trim()
        .parse()
        .map_err(|_| IngestError::parse(line, format!("{name} `{field}` is not an integer")))?;
    if v < 0 {
        return Err(IngestError::parse(
            line,
            format!("{name} is negative ({v})"),
        ));
    }
    Ok(v)
}

pub fn read_snapshots_from<R: BufRead>(reader: R) -> Result<SnapshotSet, IngestError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let wrap = |source| IngestError::Io {
        path: "<input>".into(),
        source,
    };

    let (_, first) = lines
        .next()
        .ok_or_else(|| IngestError::parse(1, "missing version line"))?;
    let first = first.map_err(wrap)?;
    let (version, start_date) = first
        .split_once(',')
        .ok_or_else(|| IngestError::parse(1, "expected `version,start_date`"))?;
    match version.trim().parse::<u32>() {
        Ok(FORMAT_VERSION) => {}
        _ => {
            return Err(IngestError::parse(
                1,
                format!("unsupported version `{version}`"),
            ))
        }
    }
    let mut header = SnapshotHeader {
        start_date: start_date.trim().to_string(),
        comments: Vec::new(),
    };

    let mut seen_columns = false;
    let mut users: BTreeMap<String, Vec<Snapshot>> = BTreeMap::new();
    for (no, line) in lines {
        let line = line.map_err(wrap)?;
        let line = line.trim_end_matches('\r');
        if let Some(c) = line.strip_prefix('#') {
            header
                .comments
                .push(c.strip_prefix(' ').unwrap_or(c).to_string());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !seen_columns {
            if line.trim() != COLUMNS {
                return Err(IngestError::parse(
                    no,
                    format!("expected column header `{COLUMNS}`"),
                ));
            }
            seen_columns = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(IngestError::parse(
                no,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let user = fields[0].trim();
        if user.is_empty() {
            return Err(IngestError::parse(no, "empty user id"));
        }
        let day: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| IngestError::parse(no, format!("day `{}` is not a number", fields[1])))?;
        if !(day.is_finite() && day >= 0.0) {
            return Err(IngestError::parse(
                no,
                format!("day {day} is not a finite non-negative number"),
            ));
        }
        let posts = parse_count(fields[2], "posts_total", no)?;
        let friends = parse_count(fields[3], "friends_total", no)?;
        users
            .entry(user.to_string())
            .or_default()
            .push(Snapshot::new(day, posts, friends));
    }

    let mut trajectories = Vec::new();
    let mut abandoned = Vec::new();
    for (user, mut snaps) in users {
        snaps.sort_by(|a, b| a.t.total_cmp(&b.t));
        if let Some(w) = snaps.windows(2).find(|w| w[0].t == w[1].t) {
            return Err(IngestError::DuplicateRow { user, day: w[0].t });
        }
        let traj = Trajectory::new(user, snaps);
        if traj.len() >= 2 {
            trajectories.push(traj);
        } else {
            abandoned.push(traj);
        }
    }
    Ok(SnapshotSet {
        header,
        trajectories,
        abandoned,
    })
}

pub fn write_snapshots(
    path: impl AsRef<Path>,
    header: &SnapshotHeader,
    trajs: &[Trajectory],
) -> Result<(), IngestError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    write_snapshots_to(&mut out, header, trajs)
        .and_then(|_| out.flush())
        .map_err(io_err(path))
}

/// Writes the canonical form: rows sorted by user id and day, `\n` line
/// endings.
pub fn write_snapshots_to<W: Write>(
    out: &mut W,
    header: &SnapshotHeader,
    trajs: &[Trajectory],
) -> io::Result<()> {
    writeln!(out, "{FORMAT_VERSION},{}", header.start_date)?;
    for c in &header.comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{COLUMNS}")?;
    let mut order: Vec<&Trajectory> = trajs.iter().collect();
    order.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    for traj in order {
        let mut snaps = traj.snapshots.clone();
        snaps.sort_by(|a, b| a.t.total_cmp(&b.t));
        for s in snaps {
            writeln!(out, "{},{},{},{}", traj.user_id, s.t, s.posts, s.friends)?;
        }
    }
    Ok(())
}
