//! `blogdyn`: generate synthetic populations, run the micro and macro
//! analyses and compare them.
//!
//! Exit status: 0 on success, 1 for usage or configuration errors, 2 when
//! the input data cannot be read or analyzed.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use blogdyn::ingest::{read_snapshots, write_snapshots, SnapshotHeader};
use blogdyn::micro::{extract_events, EventKind};
use blogdyn::pipeline::{analyze, compare, compare_assignments};
use blogdyn::report::{analysis_bundle, comparison_bundle, parse_assignments, summary, Bundle};
use blogdyn::synth::{generate_population, presets, Observation, PopulationSpec};
use blogdyn::Archetype;

use config::{parse_blackout, parse_weighting, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "blogdyn",
    version,
    about = "Publishing and friendship dynamics of blog users"
)]
struct Cli {
    /// Key-value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed (generation and micro clustering).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic population to <out>/snapshots.csv.
    Generate(GenerateArgs),
    /// Run both analyses on a snapshot file.
    Analyze(AnalyzeArgs),
    /// Compare the micro and macro results of a previous analysis.
    Compare(CompareArgs),
    /// Analyze, compare and write a text digest.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Population preset: paper, reader-only, churn, coupled, noisy-reader,
    /// independent, heavy or sqrt.
    #[arg(long)]
    mix: Option<String>,
    /// Number of users.
    #[arg(long)]
    n: Option<usize>,
    /// Number of daily snapshots.
    #[arg(long)]
    days: Option<u32>,
    /// Days START:END left out of the snapshots.
    #[arg(long, value_parser = parse_blackout)]
    blackout: Option<(u32, u32)>,
}

#[derive(Args, Debug, Default)]
struct AnalyzeArgs {
    /// Snapshot file [default: <out>/snapshots.csv].
    #[arg(long)]
    input: Option<PathBuf>,
    /// Number of micro clusters.
    #[arg(long)]
    k: Option<usize>,
    /// Quadratic-to-linear threshold on |a2/a1|.
    #[arg(long)]
    linearity_eps: Option<f64>,
    /// Minimum R² for a trend.
    #[arg(long)]
    r2_min: Option<f64>,
    /// Dominant transition frequency, per day.
    #[arg(long)]
    dominant_freq: Option<f64>,
    /// Quantile of the rough-trajectory filter.
    #[arg(long)]
    percentile: Option<f64>,
    /// Weighting of the F = c·√P fit: none or size.
    #[arg(long, value_parser = parse_weighting)]
    sqrt_weighting: Option<blogdyn::macroscopic::SqrtLawWeighting>,
}

#[derive(Args, Debug, Default)]
struct CompareArgs {
    /// Minimum overlap, as a share of the smaller cluster, for an edge.
    #[arg(long)]
    min_fraction: Option<f64>,
    /// Number of largest macro clusters kept.
    #[arg(long)]
    top_macro: Option<usize>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[command(flatten)]
    analyze: AnalyzeArgs,
    #[command(flatten)]
    compare: CompareArgs,
}

enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

fn usage<T>(r: Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Usage)
}

fn data<T>(r: Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Data)
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    let apply_analyze = |cfg: &mut RunConfig, a: &AnalyzeArgs| {
        if let Some(v) = &a.input {
            cfg.input = Some(v.clone());
        }
        if let Some(v) = a.k {
            cfg.k = v;
        }
        if let Some(v) = a.linearity_eps {
            cfg.linearity_eps = v;
        }
        if let Some(v) = a.r2_min {
            cfg.r2_min = v;
        }
        if let Some(v) = a.dominant_freq {
            cfg.dominant_freq = v;
        }
        if let Some(v) = a.percentile {
            cfg.percentile = v;
        }
        if let Some(v) = a.sqrt_weighting {
            cfg.sqrt_weighting = v;
        }
    };
    let apply_compare = |cfg: &mut RunConfig, c: &CompareArgs| {
        if let Some(v) = c.min_fraction {
            cfg.min_fraction = v;
        }
        if let Some(v) = c.top_macro {
            cfg.top_macro = v;
        }
    };
    match &cli.command {
        Command::Generate(g) => {
            if let Some(v) = &g.mix {
                cfg.mix = v.clone();
            }
            if let Some(v) = g.n {
                cfg.n = v;
            }
            if let Some(v) = g.days {
                cfg.days = v;
            }
            if g.blackout.is_some() {
                cfg.blackout = g.blackout;
            }
        }
        Command::Analyze(a) => apply_analyze(&mut cfg, a),
        Command::Compare(c) => apply_compare(&mut cfg, c),
        Command::Report(r) => {
            apply_analyze(&mut cfg, &r.analyze);
            apply_compare(&mut cfg, &r.compare);
        }
    }
    cfg.check()?;
    Ok(cfg)
}

fn write_bundle(dir: &Path, bundle: &Bundle) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for (name, content) in bundle {
        let path = dir.join(name);
        fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn cmd_generate(cfg: &RunConfig) -> Result<(), Failure> {
    let trajectories = if cfg.mix == "sqrt" {
        data(
            blogdyn::synth::generate_sqrt_coupled(cfg.n, 9.0, 0.1, cfg.days, cfg.seed)
                .map_err(anyhow::Error::from),
        )?
    } else {
        let mix = presets::by_name(&cfg.mix).ok_or_else(|| {
            Failure::Usage(anyhow!(
                "unknown mix `{}` (expected one of: {}, sqrt)",
                cfg.mix,
                presets::NAMES.join(", ")
            ))
        })?;
        let spec = PopulationSpec {
            users: cfg.n,
            mix,
            duration: cfg.days,
            seed: cfg.seed,
            observation: Observation {
                blackout: cfg.blackout,
            },
        };
        let pop = data(generate_population(&spec).map_err(anyhow::Error::from))?;
        let mut counts: BTreeMap<Archetype, usize> = BTreeMap::new();
        for a in pop.labels.values() {
            *counts.entry(*a).or_default() += 1;
        }
        let parts: Vec<String> = Archetype::ALL
            .iter()
            .map(|a| format!("{} {}", a.name(), counts.get(a).copied().unwrap_or(0)))
            .collect();
        println!("generating archetypes: {}", parts.join(", "));
        pop.trajectories
    };

    let mut per_kind = [0usize; 4];
    for t in &trajectories {
        for e in extract_events(t).events {
            per_kind[e.kind.index()] += 1;
        }
    }
    let header = SnapshotHeader {
        comments: cfg
            .provenance("generate")
            .0
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect(),
        ..SnapshotHeader::default()
    };
    data(
        fs::create_dir_all(&cfg.out)
            .with_context(|| format!("cannot create {}", cfg.out.display())),
    )?;
    let path = cfg.out.join("snapshots.csv");
    data(write_snapshots(&path, &header, &trajectories).map_err(anyhow::Error::from))?;
    let events: Vec<String> = EventKind::ALL
        .iter()
        .map(|k| format!("{} {}", k.symbol(), per_kind[k.index()]))
        .collect();
    println!(
        "wrote {}: {} users, {} days, events {}",
        path.display(),
        trajectories.len(),
        cfg.days,
        events.join(", ")
    );
    Ok(())
}

fn load_and_analyze(cfg: &RunConfig) -> Result<blogdyn::pipeline::Analysis, Failure> {
    let input = cfg.input_path();
    let set = data(read_snapshots(&input).with_context(|| format!("reading {}", input.display())))?;
    if !set.abandoned.is_empty() {
        println!(
            "{} single-observation account(s) left out",
            set.abandoned.len()
        );
    }
    data(
        analyze(&set.trajectories, &cfg.analysis_params())
            .with_context(|| format!("analyzing {}", input.display())),
    )
}

fn cmd_analyze(cfg: &RunConfig) -> Result<(), Failure> {
    let analysis = load_and_analyze(cfg)?;
    let bundle = analysis_bundle(&analysis, &cfg.provenance("analyze"));
    data(write_bundle(&cfg.out, &bundle))?;
    println!(
        "analyzed {} trajectories ({} dropped by the filter): {} micro clusters, {} macro clusters; wrote {} files to {}",
        analysis.trajectories.len(),
        analysis.filter.dropped.len(),
        analysis.micro.len(),
        analysis.macro_clusters.len(),
        bundle.len(),
        cfg.out.display()
    );
    Ok(())
}

fn read_analysis_file(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(anyhow!(
            "missing analysis output {}; run `blogdyn analyze` first",
            path.display()
        ));
    }
    fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))
}

fn cmd_compare(cfg: &RunConfig) -> Result<(), Failure> {
    let micro_text = data(read_analysis_file(&cfg.out, "archetypes_micro.csv"))?;
    let macro_text = data(read_analysis_file(&cfg.out, "archetypes_macro.csv"))?;
    let micro = data(parse_assignments(&micro_text).context("archetypes_micro.csv"))?;
    let macro_ = data(parse_assignments(&macro_text).context("archetypes_macro.csv"))?;
    let cmp = data(
        compare_assignments(&micro, &macro_, &cfg.compare_params()).map_err(anyhow::Error::from),
    )?;
    let bundle = comparison_bundle(&cmp, &cfg.provenance("compare"));
    data(write_bundle(&cfg.out, &bundle))?;
    print_table(&cmp);
    Ok(())
}

fn print_table(cmp: &blogdyn::pipeline::Comparison) {
    println!(
        "{:<20}{:>8}{:>8}{:>8}",
        "Archetype", "Micro", "Macro", "Diff"
    );
    for r in &cmp.archetypes.rows {
        println!(
            "{:<20}{:>8.3}{:>8.3}{:>+8.3}",
            r.archetype.name(),
            r.micro,
            r.macro_,
            r.difference
        );
    }
    println!("significant edges: {}", cmp.significant().count());
}

fn cmd_report(cfg: &RunConfig) -> Result<(), Failure> {
    let analysis = load_and_analyze(cfg)?;
    let cmp = data(compare(&analysis, &cfg.compare_params()).map_err(anyhow::Error::from))?;
    let prov = cfg.provenance("report");
    let mut bundle = analysis_bundle(&analysis, &prov);
    bundle.extend(comparison_bundle(&cmp, &prov));
    let text = summary(&analysis, &cmp, &prov);
    bundle.insert("report.txt", text.clone());
    data(write_bundle(&cfg.out, &bundle))?;
    print!(
        "{}",
        text.lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect::<String>()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = usage(build_config(&cli))?;
    match cli.command {
        Command::Generate(_) => cmd_generate(&cfg),
        Command::Analyze(_) => cmd_analyze(&cfg),
        Command::Compare(_) => cmd_compare(&cfg),
        Command::Report(_) => cmd_report(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
