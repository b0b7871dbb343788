//! Run configurations: what a single CLI invocation computes, independent of
//! how it was parsed. Every emitted artifact embeds its configuration.

use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::rules::Algorithm;
use crate::wlimit::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Rule,
    Spectrum,
    Table,
    Simulate,
    Embed,
    Project,
    Fit,
    Cascade,
    Moments,
    Fixpoint,
    LaplaceCheck,
    Figure,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Tree,
    Urn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Sigma2,
    Tau2,
    Sigma3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FigureName {
    DriftSmall,
    DriftLarge,
    ScaledSmall,
    ScaledLarge,
}

impl FigureName {
    pub fn ms(self) -> [usize; 3] {
        match self {
            FigureName::DriftSmall | FigureName::ScaledSmall => [10, 30, 55],
            FigureName::DriftLarge | FigureName::ScaledLarge => [65, 100, 237],
        }
    }
}

impl fmt::Display for FigureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// n = 10^5
    Desk,
    /// n = 10^7
    Full,
}

impl Scale {
    pub fn n_steps(self) -> u64 {
        match self {
            Scale::Desk => 100_000,
            Scale::Full => 10_000_000,
        }
    }
}

pub const FIGURE_PER_DECADE: u32 = 100;

/// Effective parameters of one run. Unused fields stay `None` and are left
/// out of the metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub engine: Option<Engine>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_decade: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pmax: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quantity: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<FigureName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
    pub format: Format,
    /// Where the artifact goes; not part of the metadata so that the same
    /// run written to two places gives identical bytes.
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(subcommand: Command, format: Format) -> Self {
        Self {
            subcommand,
            m: None,
            algorithm: None,
            engine: None,
            n_steps: None,
            seed: None,
            stride: None,
            per_decade: None,
            depth: None,
            samples: None,
            iters: None,
            pmax: None,
            variant: None,
            quantity: None,
            from: None,
            to: None,
            name: None,
            scale: None,
            format,
            output: None,
        }
    }

    /// Checks required fields and ranges. The message is shown as a usage
    /// error.
    pub fn validate(&self) -> Result<(), String> {
        use Command::*;
        let need = |present: bool, flag: &str| {
            if present {
                Ok(())
            } else {
                Err(format!("`{}` requires --{flag}", self.subcommand))
            }
        };
        let positive = |v: Option<u64>, flag: &str| match v {
            Some(0) => Err(format!("--{flag} must be positive")),
            _ => Ok(()),
        };
        if let Some(m) = self.m {
            if m < 2 {
                return Err(format!("--m must be at least 2, got {m}"));
            }
        }
        positive(self.n_steps, "n")?;
        positive(self.stride, "stride")?;
        positive(self.per_decade.map(u64::from), "per-decade")?;
        positive(self.depth.map(u64::from), "depth")?;
        positive(self.iters.map(|v| v as u64), "iters")?;
        positive(self.pmax.map(|v| v as u64), "pmax")?;
        if let Some(s) = self.samples {
            if s < 2 {
                return Err(format!("--samples must be at least 2, got {s}"));
            }
        }
        match self.subcommand {
            Rule | Spectrum => need(self.m.is_some(), "m"),
            Table => {
                let (Some(from), Some(to)) = (self.from, self.to) else {
                    return Err("`table` requires --from and --to".into());
                };
                if from < 2 || to < from {
                    return Err(format!("table range must satisfy 2 <= from <= to, got {from}..{to}"));
                }
                if self.quantity == Some(Quantity::Sigma3) && from < 4 {
                    return Err(format!("sigma3 is defined for m >= 4, got --from {from}"));
                }
                Ok(())
            }
            Simulate | Embed | Project | Fit => {
                need(self.m.is_some(), "m")?;
                need(self.n_steps.is_some(), "n")
            }
            Cascade | Moments | Fixpoint | LaplaceCheck => need(self.m.is_some(), "m"),
            Figure => need(self.name.is_some(), "name"),
        }
    }

    /// Short file stem used when only an output directory is known.
    pub fn file_stem(&self) -> String {
        let mut s = self.subcommand.to_string();
        if let Some(name) = self.name {
            s = name.to_string();
        }
        if let Some(m) = self.m {
            s.push_str(&format!("-m{m}"));
        }
        if let Some(scale) = self.scale {
            s.push_str(match scale {
                Scale::Desk => "-desk",
                Scale::Full => "-full",
            });
        }
        if let Some(seed) = self.seed {
            s.push_str(&format!("-seed{seed}"));
        }
        s
    }
}

/// The batch of runs behind one figure family, one per `m`.
pub fn figure_recipe(name: FigureName, scale: Scale, seed: u64) -> Vec<RunConfig> {
    name.ms()
        .iter()
        .map(|&m| {
            let mut c = RunConfig::new(Command::Figure, Format::Csv);
            c.name = Some(name);
            c.scale = Some(scale);
            c.m = Some(m);
            c.algorithm = Some(Algorithm::Optimistic);
            c.engine = Some(Engine::Urn);
            c.n_steps = Some(scale.n_steps());
            c.per_decade = Some(FIGURE_PER_DECADE);
            c.seed = Some(seed);
            c
        })
        .collect()
}

/// Types shown in the figures: `1`, `floor(m/2)` and `m` (1-based).
pub fn figure_coordinates(m: usize) -> Vec<usize> {
    let mut ks = vec![1, m / 2, m];
    ks.dedup();
    ks
}
