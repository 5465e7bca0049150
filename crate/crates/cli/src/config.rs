//! Run configuration: defaults, `key=value` config files and flag overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use blogdyn::macroscopic::{ShapeParams, SqrtLawWeighting};
use blogdyn::pipeline::{AnalysisParams, CompareParams};
use blogdyn::report::Provenance;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mix: String,
    pub n: usize,
    pub days: u32,
    pub seed: u64,
    pub blackout: Option<(u32, u32)>,
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    pub k: usize,
    pub linearity_eps: f64,
    pub r2_min: f64,
    pub dominant_freq: f64,
    pub percentile: f64,
    pub min_fraction: f64,
    pub top_macro: usize,
    pub sqrt_weighting: SqrtLawWeighting,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mix: "paper".into(),
            n: 1836,
            days: 140,
            seed: 7,
            blackout: None,
            input: None,
            out: PathBuf::from("out"),
            k: 12,
            linearity_eps: 0.0085,
            r2_min: 0.7,
            dominant_freq: 0.1,
            percentile: 0.98,
            min_fraction: 0.25,
            top_macro: 12,
            sqrt_weighting: SqrtLawWeighting::Unweighted,
        }
    }
}

pub const KEYS: [&str; 15] = [
    "mix",
    "n",
    "days",
    "seed",
    "blackout",
    "input",
    "out",
    "k",
    "linearity_eps",
    "r2_min",
    "dominant_freq",
    "percentile",
    "min_fraction",
    "top_macro",
    "sqrt_weighting",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| anyhow::anyhow!("invalid value `{value}` for `{key}`"))
}

pub fn parse_blackout(value: &str) -> Result<(u32, u32)> {
    let (a, b) = value
        .split_once(':')
        .with_context(|| format!("blackout `{value}` must look like START:END"))?;
    let (a, b) = (parse_value("blackout", a)?, parse_value("blackout", b)?);
    if a >= b {
        bail!("blackout `{value}` is empty");
    }
    Ok((a, b))
}

pub fn parse_weighting(value: &str) -> Result<SqrtLawWeighting> {
    match value {
        "none" | "unweighted" => Ok(SqrtLawWeighting::Unweighted),
        "size" | "cluster-size" => Ok(SqrtLawWeighting::ClusterSize),
        _ => bail!("invalid sqrt weighting `{value}` (expected `none` or `size`)"),
    }
}

fn weighting_name(w: SqrtLawWeighting) -> &'static str {
    match w {
        SqrtLawWeighting::Unweighted => "none",
        SqrtLawWeighting::ClusterSize => "size",
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "mix" => self.mix = value.to_string(),
            "n" => self.n = parse_value(key, value)?,
            "days" => self.days = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "blackout" => {
                self.blackout = if value.is_empty() || value == "none" {
                    None
                } else {
                    Some(parse_blackout(value)?)
                }
            }
            "input" => self.input = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "k" => self.k = parse_value(key, value)?,
            "linearity_eps" => self.linearity_eps = parse_value(key, value)?,
            "r2_min" => self.r2_min = parse_value(key, value)?,
            "dominant_freq" => self.dominant_freq = parse_value(key, value)?,
            "percentile" => self.percentile = parse_value(key, value)?,
            "min_fraction" => self.min_fraction = parse_value(key, value)?,
            "top_macro" => self.top_macro = parse_value(key, value)?,
            "sqrt_weighting" => self.sqrt_weighting = parse_weighting(value)?,
            _ => bail!("unknown config key `{key}`"),
        }
        Ok(())
    }

    /// Applies a `key=value` file; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("{origin}:{}: expected key=value", i + 1))?;
            let key = key.trim().replace('-', "_");
            self.set(&key, value.trim())
                .with_context(|| format!("{origin}:{}", i + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn check(&self) -> Result<()> {
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.n == 0 {
            bail!("n must be at least 1");
        }
        if self.days < 2 {
            bail!("days must be at least 2");
        }
        if self.k == 0 {
            bail!("k must be at least 1");
        }
        if !(self.linearity_eps > 0.0 && self.linearity_eps.is_finite()) {
            bail!("linearity_eps must be positive");
        }
        if !in_unit(self.r2_min) {
            bail!("r2_min must lie in [0, 1]");
        }
        if !(self.dominant_freq >= 0.0 && self.dominant_freq.is_finite()) {
            bail!("dominant_freq must be non-negative");
        }
        if !(self.percentile > 0.0 && self.percentile <= 1.0) {
            bail!("percentile must lie in (0, 1]");
        }
        if !in_unit(self.min_fraction) {
            bail!("min_fraction must lie in [0, 1]");
        }
        if self.top_macro == 0 {
            bail!("top_macro must be at least 1");
        }
        Ok(())
    }

    pub fn input_path(&self) -> PathBuf {
        self.input
            .clone()
            .unwrap_or_else(|| self.out.join("snapshots.csv"))
    }

    pub fn analysis_params(&self) -> AnalysisParams {
        AnalysisParams {
            k: self.k,
            shape: ShapeParams {
                linearity_eps: self.linearity_eps,
                r2_min: self.r2_min,
            },
            dominant_freq: self.dominant_freq,
            percentile: self.percentile,
            seed: self.seed,
            sqrt_weighting: self.sqrt_weighting,
        }
    }

    pub fn compare_params(&self) -> CompareParams {
        CompareParams {
            min_fraction: self.min_fraction,
            top_macro: self.top_macro,
        }
    }

    pub fn values(&self) -> BTreeMap<&'static str, String> {
        let blackout = match self.blackout {
            Some((a, b)) => format!("{a}:{b}"),
            None => "none".into(),
        };
        let input = self.input_path().display().to_string();
        let pairs = [
            ("mix", self.mix.clone()),
            ("n", self.n.to_string()),
            ("days", self.days.to_string()),
            ("seed", self.seed.to_string()),
            ("blackout", blackout),
            ("input", input),
            ("out", self.out.display().to_string()),
            ("k", self.k.to_string()),
            ("linearity_eps", self.linearity_eps.to_string()),
            ("r2_min", self.r2_min.to_string()),
            ("dominant_freq", self.dominant_freq.to_string()),
            ("percentile", self.percentile.to_string()),
            ("min_fraction", self.min_fraction.to_string()),
            ("top_macro", self.top_macro.to_string()),
            (
                "sqrt_weighting",
                weighting_name(self.sqrt_weighting).to_string(),
            ),
        ];
        pairs.into_iter().collect()
    }

    /// The whole configuration in [`KEYS`] order, preceded by the command.
    pub fn provenance(&self, command: &str) -> Provenance {
        let values = self.values();
        let mut p = Provenance::default();
        p.push("command", command);
        for key in KEYS {
            p.push(key, &values[key]);
        }
        p
    }
}
