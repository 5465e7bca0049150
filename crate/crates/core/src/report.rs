//! Text and CSV renderings of an [`Analysis`] and a [`Comparison`].
//!
//! Every file starts with `# key=value` provenance lines so a result can
//! be traced back to the configuration that produced it. Output is a pure
//! function of its inputs: no timestamps, fixed ordering, fixed number
//! formats.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::archetype::Archetype;
use crate::macroscopic::{macro_archetype, MacroKey};
use crate::micro::EventKind;
use crate::pipeline::{Analysis, Comparison};

/// Ordered `key=value` pairs echoed at the top of every file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Provenance(pub Vec<(String, String)>);

impl Provenance {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.0.push((key.into(), value.to_string()));
    }

    fn header(&self) -> String {
        self.0.iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
    }
}

pub type Bundle = BTreeMap<&'static str, String>;

pub const ANALYSIS_FILES: [&str; 9] = [
    "correlations.csv",
    "trajectories.csv",
    "micro_clusters.csv",
    "markov_models.txt",
    "macro_grid.csv",
    "mean_trajectories.csv",
    "sqrt_law.txt",
    "archetypes_micro.csv",
    "archetypes_macro.csv",
];

pub const COMPARISON_FILES: [&str; 2] = ["overlap_edges.csv", "archetype_diff.csv"];

fn num(x: f64) -> String {
    format!("{x:.6}")
}

pub fn analysis_bundle(a: &Analysis, prov: &Provenance) -> Bundle {
    let head = prov.header();
    let mut b = Bundle::new();

    let mut s = head.clone();
    s.push_str("user_id,rho\n");
    for (u, r) in &a.correlations {
        match r {
            Some(r) => writeln!(s, "{u},{}", num(*r)).unwrap(),
            None => writeln!(s, "{u},undefined").unwrap(),
        }
    }
    b.insert("correlations.csv", s);

    let mut s = head.clone();
    s.push_str("user_id,day,posts,friends\n");
    for t in &a.trajectories {
        for p in &t.snapshots {
            writeln!(s, "{},{},{},{}", t.user_id, p.t, p.posts, p.friends).unwrap();
        }
    }
    b.insert("trajectories.csv", s);

    let mut s = head.clone();
    s.push_str("cluster,size,medoid,archetype,dominant\n");
    for m in &a.micro {
        let dominant: Vec<String> = m
            .dominant
            .iter()
            .map(|t| {
                format!(
                    "{}{}:{:.3}/{:.2}",
                    t.from.symbol(),
                    t.to.symbol(),
                    t.freq,
                    t.duration
                )
            })
            .collect();
        writeln!(
            s,
            "{},{},{},{},{}",
            m.cluster.label(),
            m.cluster.len(),
            m.cluster.medoid,
            m.archetype.name(),
            dominant.join(" ")
        )
        .unwrap();
    }
    b.insert("micro_clusters.csv", s);

    let mut s = head.clone();
    if let Some(r) = a.publishing_rate {
        writeln!(s, "publishing_delay_rate={}", num(r)).unwrap();
    }
    if let Some(r) = a.social_rate {
        writeln!(s, "social_delay_rate={}", num(r)).unwrap();
    }
    for m in &a.micro {
        writeln!(
            s,
            "\n[{}] size={} archetype={} observed_days={}",
            m.cluster.label(),
            m.cluster.len(),
            m.archetype.name(),
            m.model.observed_days
        )
        .unwrap();
        let symbols: Vec<&str> = EventKind::ALL.iter().map(|k| k.symbol()).collect();
        writeln!(s, "frequency_per_day\tto:{}", symbols.join("\t")).unwrap();
        for from in EventKind::ALL {
            let row: Vec<String> = EventKind::ALL
                .iter()
                .map(|&to| format!("{:.4}", m.model.freq(from, to)))
                .collect();
            writeln!(s, "{}\t{}", from.symbol(), row.join("\t")).unwrap();
        }
        writeln!(s, "duration_days\tto:{}", symbols.join("\t")).unwrap();
        for from in EventKind::ALL {
            let row: Vec<String> = EventKind::ALL
                .iter()
                .map(|&to| match m.model.duration(from, to) {
                    Some(d) => format!("{d:.2}"),
                    None => "-".into(),
                })
                .collect();
            writeln!(s, "{}\t{}", from.symbol(), row.join("\t")).unwrap();
        }
    }
    b.insert("markov_models.txt", s);

    let sizes: BTreeMap<MacroKey, (usize, f64)> = a
        .macro_clusters
        .iter()
        .map(|c| (c.key, (c.len(), c.mean_fit_quality)))
        .collect();
    let total = a.shapes.len().max(1) as f64;
    let mut s = head.clone();
    s.push_str("posts_class,friends_class,label,count,share,archetype,mean_fit_quality\n");
    for key in MacroKey::all() {
        let (n, q) = sizes.get(&key).copied().unwrap_or((0, f64::NAN));
        let quality = if n > 0 { num(q) } else { String::new() };
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            key.posts.code(),
            key.friends.code(),
            key,
            n,
            num(n as f64 / total),
            macro_archetype(key).name(),
            quality
        )
        .unwrap();
    }
    b.insert("macro_grid.csv", s);

    let mut s = head.clone();
    s.push_str("macro_key,members,day,posts,friends\n");
    for c in &a.macro_clusters {
        for i in 0..c.mean.len() {
            writeln!(
                s,
                "{},{},{},{},{}",
                c.key.code(),
                c.len(),
                c.mean.days[i],
                num(c.mean.posts[i]),
                num(c.mean.friends[i])
            )
            .unwrap();
        }
    }
    b.insert("mean_trajectories.csv", s);

    let mut s = head.clone();
    match &a.sqrt_law {
        Some(f) => {
            writeln!(s, "c={}", num(f.c)).unwrap();
            writeln!(s, "r2={}", num(f.r2)).unwrap();
            writeln!(s, "points={}", f.points).unwrap();
        }
        None => s.push_str("c=undefined\nr2=undefined\npoints=0\n"),
    }
    writeln!(s, "weighting={:?}", a.params.sqrt_weighting).unwrap();
    writeln!(s, "anticorrelated_share={}", num(a.anticorrelated)).unwrap();
    b.insert("sqrt_law.txt", s);

    let mut s = head.clone();
    s.push_str("user_id,cluster,archetype\n");
    for (u, (c, arch)) in a.micro_assignment() {
        writeln!(s, "{u},{c},{}", arch.name()).unwrap();
    }
    b.insert("archetypes_micro.csv", s);

    let mut s = head;
    s.push_str("user_id,cluster,archetype\n");
    for (u, (c, arch)) in a.macro_assignment() {
        writeln!(s, "{u},{c},{}", arch.name()).unwrap();
    }
    b.insert("archetypes_macro.csv", s);
    b
}

pub fn comparison_bundle(c: &Comparison, prov: &Provenance) -> Bundle {
    let head = prov.header();
    let mut b = Bundle::new();

    let mut s = head.clone();
    s.push_str("micro_id,macro_key,count,significant,pattern\n");
    for e in &c.edges {
        writeln!(
            s,
            "{},{},{},{},{}",
            c.overlap.rows[e.row],
            c.overlap.cols[e.col],
            e.count,
            e.significant,
            e.pattern.map(|p| p.code()).unwrap_or("")
        )
        .unwrap();
    }
    b.insert("overlap_edges.csv", s);

    let mut s = head;
    s.push_str("Archetype,Micro,Macro,Difference\n");
    for r in &c.archetypes.rows {
        writeln!(
            s,
            "{},{},{},{}",
            r.archetype.name(),
            num(r.micro),
            num(r.macro_),
            num(r.difference)
        )
        .unwrap();
    }
    b.insert("archetype_diff.csv", s);
    b
}

/// Human-readable digest of a full run.
pub fn summary(a: &Analysis, c: &Comparison, prov: &Provenance) -> String {
    let mut s = prov.header();
    writeln!(
        s,
        "trajectories: {} kept, {} dropped by the filter, {} invalid",
        a.filter.kept.len(),
        a.filter.dropped.len(),
        a.invalid.len()
    )
    .unwrap();
    let rate = |r: Option<f64>| r.map(num).unwrap_or_else(|| "undefined".into());
    writeln!(
        s,
        "delay rates (per day): publishing {}, social {}",
        rate(a.publishing_rate),
        rate(a.social_rate)
    )
    .unwrap();
    writeln!(s, "\nmicro clusters:").unwrap();
    for m in &a.micro {
        let dom: Vec<String> = m
            .dominant
            .iter()
            .map(|t| format!("{}{}/{:.1}", t.from.symbol(), t.to.symbol(), t.duration))
            .collect();
        writeln!(
            s,
            "  {:<5} {:>5}  {:<18} {}",
            m.cluster.label(),
            m.cluster.len(),
            m.archetype.name(),
            dom.join(" ")
        )
        .unwrap();
    }
    writeln!(s, "\nlargest macro clusters:").unwrap();
    for m in a.macro_clusters.iter().take(12) {
        writeln!(
            s,
            "  {:<5} {:>5}  {:<18} fit {:.3}",
            m.key.to_string(),
            m.len(),
            macro_archetype(m.key).name(),
            m.mean_fit_quality
        )
        .unwrap();
    }
    match &a.sqrt_law {
        Some(f) => writeln!(s, "\nF = {:.3}·√P (R² = {:.3})", f.c, f.r2).unwrap(),
        None => writeln!(s, "\nF = c·√P: no points with positive posts").unwrap(),
    }
    writeln!(s, "anticorrelated share: {:.3}", a.anticorrelated).unwrap();
    writeln!(
        s,
        "\n{:<21}{:>7}{:>8}{:>8}",
        "archetypes", "micro", "macro", "diff"
    )
    .unwrap();
    for r in &c.archetypes.rows {
        writeln!(
            s,
            "  {:<19}{:>7.3}{:>8.3}{:>+8.3}",
            r.archetype.name(),
            r.micro,
            r.macro_,
            r.difference
        )
        .unwrap();
    }
    let sig: Vec<_> = c.significant().collect();
    writeln!(
        s,
        "\nsignificant micro/macro edges: {} of {} cells",
        sig.len(),
        c.overlap.rows.len() * c.overlap.cols.len()
    )
    .unwrap();
    if !c.anomalies.is_empty() {
        writeln!(s, "edges joining different archetypes:").unwrap();
        for e in &c.anomalies {
            let micro = &c.overlap.rows[e.row];
            let macro_ = &c.overlap.cols[e.col];
            writeln!(
                s,
                "  {micro} ({}) - {macro_} ({}): {} users",
                c.micro_archetypes[micro].name(),
                c.macro_archetypes[macro_].name(),
                e.count
            )
            .unwrap();
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct AssignmentParseError {
    pub line: usize,
    pub message: String,
}

/// Parses an `archetypes_*.csv` file back into `user -> (cluster, archetype)`.
pub fn parse_assignments(
    text: &str,
) -> Result<BTreeMap<String, (String, Archetype)>, AssignmentParseError> {
    let mut out = BTreeMap::new();
    let mut header = false;
    for (i, line) in text.lines().enumerate() {
        let err = |message: String| AssignmentParseError {
            line: i + 1,
            message,
        };
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header {
            if line != "user_id,cluster,archetype" {
                return Err(err(format!("unexpected header `{line}`")));
            }
            header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let archetype: Archetype = fields[2].parse().map_err(|e| err(format!("{e}")))?;
        if out
            .insert(fields[0].to_string(), (fields[1].to_string(), archetype))
            .is_some()
        {
            return Err(err(format!("user `{}` listed twice", fields[0])));
        }
    }
    if !header {
        return Err(AssignmentParseError {
            line: 1,
            message: "missing header".into(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{analyze, compare, AnalysisParams, CompareParams};
    use crate::synth::{generate_population, presets, Observation, PopulationSpec};

    fn run() -> (Analysis, Comparison) {
        let pop = generate_population(&PopulationSpec {
            users: 120,
            mix: presets::reference_mix(),
            duration: 60,
            seed: 5,
            observation: Observation::default(),
        })
        .unwrap();
        let a = analyze(&pop.trajectories, &AnalysisParams::default()).unwrap();
        let c = compare(&a, &CompareParams::default()).unwrap();
        (a, c)
    }

    #[test]
    fn bundle_has_all_files_with_provenance() {
        let (a, c) = run();
        let mut prov = Provenance::default();
        prov.push("seed", 5);
        let b = analysis_bundle(&a, &prov);
        assert_eq!(b.len(), ANALYSIS_FILES.len());
        for name in ANALYSIS_FILES {
            assert!(b[name].starts_with("# seed=5\n"), "{name}");
        }
        let cb = comparison_bundle(&c, &prov);
        assert_eq!(cb.keys().copied().collect::<Vec<_>>(), {
            let mut v = COMPARISON_FILES.to_vec();
            v.sort();
            v
        });
        assert_eq!(b["macro_grid.csv"].lines().count(), 1 + 1 + 49);
        assert!(summary(&a, &c, &prov).contains("archetypes"));
    }

    #[test]
    fn assignments_round_trip() {
        let (a, _) = run();
        let b = analysis_bundle(&a, &Provenance::default());
        assert_eq!(
            parse_assignments(&b["archetypes_micro.csv"]).unwrap(),
            a.micro_assignment()
        );
        assert_eq!(
            parse_assignments(&b["archetypes_macro.csv"]).unwrap(),
            a.macro_assignment()
        );
        assert!(parse_assignments("nope\n").is_err());
        assert!(parse_assignments("user_id,cluster,archetype\nu,c,Wizard\n").is_err());
    }

    #[test]
    fn rendering_is_deterministic() {
        let (a, c) = run();
        let (a2, c2) = run();
        let p = Provenance::default();
        assert_eq!(analysis_bundle(&a, &p), analysis_bundle(&a2, &p));
        assert_eq!(comparison_bundle(&c, &p), comparison_bundle(&c2, &p));
    }
}
