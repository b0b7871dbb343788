//! Command-line front end. Parsing produces a [`RunConfig`]; [`dispatch`]
//! turns a validated config into an [`Artifact`].
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 numeric failure.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fmt;
use std::io;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, CommandFactory, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::analysis::{self, expected_w_at, oscillation_fit, project_w};
use crate::error::Error;
use crate::rules::{make_rule, Algorithm};
use crate::spectral::{compute_spectrum, lambda2};
use crate::urnsim::{embed_continuous, estimate_xi, run_trajectory, run_tree_trajectory, RecordSchedule, Trajectory};
use crate::wlimit::{self, Variant, DEFAULT_DEPTH};
use crate::VERSION;

pub use config::{figure_coordinates, figure_recipe, Command, Engine, FigureName, Format, Quantity, RunConfig, Scale};
pub use output::{Artifact, OUT_DIR_ENV};

use output::{cjson, fstr};

const FIT_PER_DECADE: u32 = 50;

#[derive(Debug, Parser)]
#[command(name = "burns", version, about = "B-tree fringe urns: spectra, simulation and the limit law W")]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output file (stdout if omitted and no default directory is set)
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, default_value = "optimistic")]
    algorithm: Algorithm,
    #[arg(long, value_enum, default_value = "urn")]
    engine: Engine,
    /// Number of insertions
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record every `stride` steps
    #[arg(long, conflicts_with = "per_decade")]
    stride: Option<u64>,
    /// Record about this many log-spaced steps per decade instead
    #[arg(long)]
    per_decade: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Replacement matrix of the gap urn
    Rule {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "optimistic")]
        algorithm: Algorithm,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Roots, lambda_2 and eigen data
    Spectrum {
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// A spectral quantity over a range of m
    Table {
        #[arg(long, value_enum, default_value = "sigma2")]
        quantity: Quantity,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Composition trajectory from the B-tree start
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Trajectory with continuous-time jump instants
    Embed {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Martingale projection W_n along a trajectory
    Project {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Oscillation fit of the projection (m >= 60)
    Fit {
        #[command(flatten)]
        sim: SimArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Samples of W from the truncated cascade
    Cascade {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "ct")]
        variant: Variant,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: u32,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact moments E W^p
    Moments {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "ct")]
        variant: Variant,
        #[arg(long, default_value_t = 8)]
        pmax: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Population iteration of the smoothing transform
    Fixpoint {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value = "ct")]
        variant: Variant,
        #[arg(long, default_value_t = 4096)]
        samples: usize,
        #[arg(long, default_value_t = 60)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Residuals of the Laplace-transform system
    LaplaceCheck {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 12)]
        pmax: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Data behind a figure family; without --m runs the whole batch
    Figure {
        #[arg(long, value_enum)]
        name: FigureName,
        #[arg(long, value_enum, default_value = "desk")]
        scale: Scale,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Only this member of the family
        #[arg(long)]
        m: Option<usize>,
        /// Override the number of insertions
        #[arg(long)]
        n: Option<u64>,
        /// Print the batch configs as JSON lines instead of running them
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn default_format(cmd: Command) -> Format {
    match cmd {
        Command::Rule
        | Command::Spectrum
        | Command::Fit
        | Command::Moments
        | Command::LaplaceCheck => Format::Json,
        _ => Format::Csv,
    }
}

impl Cli {
    /// The effective config, and whether only a listing was requested.
    pub fn into_config(self) -> (RunConfig, bool) {
        let base = |cmd: Command, out: OutArgs| {
            let mut c = RunConfig::new(cmd, out.format.unwrap_or(default_format(cmd)));
            c.output = out.output;
            c
        };
        let sim = |cmd: Command, s: SimArgs, out: OutArgs| {
            let mut c = base(cmd, out);
            c.m = Some(s.m);
            c.algorithm = Some(s.algorithm);
            c.engine = Some(s.engine);
            c.n_steps = Some(s.n);
            c.seed = Some(s.seed);
            match (s.stride, s.per_decade, cmd) {
                (_, Some(d), _) => c.per_decade = Some(d),
                (None, None, Command::Fit) => c.per_decade = Some(FIT_PER_DECADE),
                (st, None, _) => c.stride = Some(st.unwrap_or(1)),
            }
            c
        };
        let mut list = false;
        let c = match self.cmd {
            Cmd::Rule { m, algorithm, out } => {
                let mut c = base(Command::Rule, out);
                c.m = Some(m);
                c.algorithm = Some(algorithm);
                c
            }
            Cmd::Spectrum { m, out } => {
                let mut c = base(Command::Spectrum, out);
                c.m = Some(m);
                c
            }
            Cmd::Table { quantity, from, to, out } => {
                let mut c = base(Command::Table, out);
                c.quantity = Some(quantity);
                c.from = Some(from);
                c.to = Some(to);
                c
            }
            Cmd::Simulate { sim: s, out } => sim(Command::Simulate, s, out),
            Cmd::Embed { sim: s, out } => sim(Command::Embed, s, out),
            Cmd::Project { sim: s, out } => sim(Command::Project, s, out),
            Cmd::Fit { sim: s, out } => sim(Command::Fit, s, out),
            Cmd::Cascade { m, variant, depth, samples, seed, out } => {
                let mut c = base(Command::Cascade, out);
                c.m = Some(m);
                c.variant = Some(variant);
                c.depth = Some(depth);
                c.samples = Some(samples);
                c.seed = Some(seed);
                c
            }
            Cmd::Moments { m, variant, pmax, out } => {
                let mut c = base(Command::Moments, out);
                c.m = Some(m);
                c.variant = Some(variant);
                c.pmax = Some(pmax);
                c
            }
            Cmd::Fixpoint { m, variant, samples, iters, seed, out } => {
                let mut c = base(Command::Fixpoint, out);
                c.m = Some(m);
                c.variant = Some(variant);
                c.samples = Some(samples);
                c.iters = Some(iters);
                c.seed = Some(seed);
                c
            }
            Cmd::LaplaceCheck { m, pmax, out } => {
                let mut c = base(Command::LaplaceCheck, out);
                c.m = Some(m);
                c.pmax = Some(pmax);
                c
            }
            Cmd::Figure { name, scale, seed, m, n, list: l, out } => {
                list = l;
                let mut c = base(Command::Figure, out);
                c.name = Some(name);
                c.scale = Some(scale);
                c.seed = Some(seed);
                c.n_steps = n;
                if let Some(m) = m {
                    c.m = Some(m);
                    c.algorithm = Some(Algorithm::Optimistic);
                    c.engine = Some(Engine::Urn);
                    c.n_steps = Some(n.unwrap_or(scale.n_steps()));
                    c.per_decade = Some(config::FIGURE_PER_DECADE);
                }
                c
            }
        };
        (c, list)
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run(e) if e.is_numeric() => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(s) => f.write_str(s),
            CliError::Run(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (config, list) = cli.into_config();
    if let Err(msg) = config.validate() {
        let mut cmd = Cli::command();
        cmd.build();
        let usage = cmd
            .find_subcommand_mut(config.subcommand.to_string())
            .map(|c| c.render_usage().to_string())
            .unwrap_or_default();
        eprintln!("error: {msg}\n\n{usage}");
        return 1;
    }
    match execute(&config, list) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn summary_line(config: &RunConfig, dest: &str, extra: &Map<String, Value>) -> String {
    let mut s = Map::new();
    s.insert("status".into(), json!("ok"));
    s.insert("subcommand".into(), json!(config.subcommand.to_string()));
    s.insert("seed".into(), json!(config.seed));
    s.insert("versions".into(), json!({ "burns": VERSION }));
    s.insert("output".into(), json!(dest));
    for (k, v) in extra {
        s.insert(k.clone(), v.clone());
    }
    Value::Object(s).to_string()
}

fn execute(config: &RunConfig, list: bool) -> Result<(), CliError> {
    let out_dir = output::env_out_dir();
    if config.subcommand == Command::Figure && config.m.is_none() {
        return run_figure_batch(config, list, out_dir);
    }
    let artifact = dispatch(config)?;
    let text = artifact.render(config);
    match output::resolve_output(config, out_dir.as_deref()) {
        Some(path) => {
            output::write_file(&path, &text)?;
            println!("{}", summary_line(config, &path.display().to_string(), &artifact.summary));
        }
        None => {
            output::write_stdout(&text)?;
            eprintln!("{}", summary_line(config, "-", &artifact.summary));
        }
    }
    Ok(())
}

fn run_figure_batch(config: &RunConfig, list: bool, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    let name = config.name.expect("validated");
    let scale = config.scale.unwrap_or(Scale::Desk);
    let mut batch = figure_recipe(name, scale, config.seed.unwrap_or(1));
    for c in &mut batch {
        if let Some(n) = config.n_steps {
            c.n_steps = Some(n);
        }
        c.format = config.format;
    }
    if list {
        let lines: String = batch
            .iter()
            .map(|c| serde_json::to_string(c).expect("config serializes") + "\n")
            .collect();
        output::write_stdout(&lines)?;
        return Ok(());
    }
    let dir = match (&config.output, out_dir) {
        (Some(p), Some(d)) if p.is_relative() => d.join(p),
        (Some(p), _) => p.clone(),
        (None, Some(d)) => d,
        (None, None) => {
            return Err(CliError::Usage(format!(
                "a figure batch writes one file per run; give --output DIR or set {OUT_DIR_ENV}"
            )))
        }
    };
    let rendered: Vec<(PathBuf, String)> = batch
        .par_iter()
        .map(|c| {
            let a = dispatch(c)?;
            let path = dir.join(format!("{}.{}", c.file_stem(), c.format.extension()));
            Ok((path, a.render(c)))
        })
        .collect::<Result<_, CliError>>()?;
    let mut files = Vec::new();
    for (path, text) in &rendered {
        output::write_file(path, text)?;
        files.push(json!(path.display().to_string()));
    }
    let mut extra = Map::new();
    extra.insert("files".into(), Value::Array(files));
    println!("{}", summary_line(config, &dir.display().to_string(), &extra));
    Ok(())
}

/// Computes the artifact of one validated config.
pub fn dispatch(config: &RunConfig) -> Result<Artifact, CliError> {
    config.validate().map_err(CliError::Usage)?;
    match config.subcommand {
        Command::Rule => rule_artifact(config),
        Command::Spectrum => spectrum_artifact(config),
        Command::Table => table_artifact(config),
        Command::Simulate => Ok(trajectory_artifact(&trajectory(config)?, false)),
        Command::Embed => {
            let traj = embed_continuous(&trajectory(config)?, config.seed.unwrap_or(0));
            let mut a = trajectory_artifact(&traj, true);
            a.summary.insert("xi".into(), json!(estimate_xi(&traj).ok()));
            Ok(a)
        }
        Command::Project => project_artifact(config),
        Command::Fit => fit_artifact(config),
        Command::Cascade => cascade_artifact(config),
        Command::Moments => moments_artifact(config),
        Command::Fixpoint => fixpoint_artifact(config),
        Command::LaplaceCheck => laplace_artifact(config),
        Command::Figure => figure_artifact(config),
    }
}

fn req<T: Copy>(v: Option<T>) -> T {
    v.expect("validated config")
}

fn rule_artifact(c: &RunConfig) -> Result<Artifact, CliError> {
    let rule = make_rule(req(c.m), c.algorithm.unwrap_or(Algorithm::Optimistic))?;
    let mut a = Artifact::new(std::iter::once("k".to_string()).chain((1..=rule.dim).map(|j| format!("c{j}"))));
    for (k, row) in rule.rows.iter().enumerate() {
        a.push_row(std::iter::once((k + 1).to_string()).chain(row.iter().map(i64::to_string)).collect());
    }
    a.doc.insert("m".into(), json!(rule.m));
    a.doc.insert("algorithm".into(), json!(rule.algorithm));
    a.doc.insert("dim".into(), json!(rule.dim));
    a.doc.insert("balance".into(), json!(rule.balance));
    a.doc.insert("rows".into(), json!(rule.rows));
    a.doc.insert("increments".into(), json!(rule.increments));
    a.doc.insert("gap_diag".into(), json!(rule.gap_diag));
    a.summary.insert("dim".into(), json!(rule.dim));
    Ok(a)
}

fn spectrum_artifact(c: &RunConfig) -> Result<Artifact, CliError> {
    let s = compute_spectrum(req(c.m))?;
    let mut a = Artifact::new(["j", "re", "im"]);
    for (j, r) in s.roots.iter().enumerate() {
        a.push_row(vec![(j + 1).to_string(), fstr(r.re), fstr(r.im)]);
    }
    a.doc.insert("m".into(), json!(s.m));
    a.doc.insert("lambda2".into(), cjson(s.lambda2));
    a.doc.insert("sigma2".into(), json!(s.sigma2));
    a.doc.insert("tau2".into(), json!(s.tau2));
    a.doc.insert("sigma3".into(), json!(s.sigma3));
    a.doc.insert("residuals".into(), json!(s.residuals));
    a.doc.insert("pairing_scale".into(), json!(s.pairing_scale));
    a.doc.insert("eigen_residual".into(), json!(s.eigen_residual));
    a.doc.insert("v1".into(), json!(s.v1));
    a.doc.insert("roots".into(), Value::Array(s.roots.iter().map(|&r| cjson(r)).collect()));
    a.summary.insert("sigma2".into(), json!(s.sigma2));
    a.summary.insert("tau2".into(), json!(s.tau2));
    a.summary.insert("sigma3".into(), json!(s.sigma3));
    Ok(a)
}

fn table_artifact(c: &RunConfig) -> Result<Artifact, CliError> {
    let q = c.quantity.unwrap_or(Quantity::Sigma2);
    let ms: Vec<usize> = (req(c.from)..=req(c.to)).collect();
    let values: Vec<f64> = ms
        .par_iter()
        .map(|&m| -> Result<f64, Error> {
            Ok(match q {
                Quantity::Sigma2 => lambda2(m)?.re,
                Quantity::Tau2 => lambda2(m)?.im,
                Quantity::Sigma3 => compute_spectrum(m)?
                    .sigma3
                    .ok_or_else(|| Error::InvalidParameter(format!("sigma3 undefined at m={m}")))?,
            })
        })
        .collect::<Result<_, _>>()?;
    let mut a = Artifact::new(["m", "value"]);
    let mut rows = Vec::new();
    for (&m, &v) in ms.iter().zip(&values) {
        a.push_row(vec![m.to_string(), fstr(v)]);
        rows.push(json!({ "m": m, "value": v }));
    }
    a.doc.insert("quantity".into(), json!(q));
    a.doc.insert("rows".into(), Value::Array(rows));
    a.summary.insert("rows".into(), json!(ms.len()));
    Ok(a)
}

fn schedule(c: &RunConfig) -> RecordSchedule {
    match (c.per_decade, c.stride) {
        (Some(d), _) => RecordSchedule::Geometric(d),
        (None, s) => RecordSchedule::Every(s.unwrap_or(1)),
    }
}

fn trajectory(c: &RunConfig) -> Result<Trajectory, CliError> {
    let rule = Arc::new(make_rule(req(c.m), c.algorithm.unwrap_or(Algorithm::Optimistic))?);
    let (n, seed) = (req(c.n_steps), c.seed.unwrap_or(0));
    Ok(match c.engine.unwrap_or(Engine::Urn) {
        Engine::Urn => run_trajectory(&rule, &rule.btree_start(), n, seed, 0, schedule(c))?,
        Engine::Tree => run_tree_trajectory(&rule, n, seed, 0, schedule(c))?,
    })
}

fn trajectory_artifact(t: &Trajectory, with_times: bool) -> Artifact {
    let prefix = t.coords().column_prefix();
    let dim = t.initial.dim();
    let mut cols = vec!["n".to_string()];
    if with_times {
        cols.push("tau".into());
    }
    cols.extend((1..=dim).map(|k| format!("{prefix}{k}")));
    let mut a = Artifact::new(cols);
    let times = t.jump_times.as_deref();
    let mut recs = Vec::with_capacity(t.records.len());
    for (i, r) in t.records.iter().enumerate() {
        let mut row = vec![r.n.to_string()];
        if let Some(ts) = times.filter(|_| with_times) {
            row.push(fstr(ts[i]));
        }
        row.extend(r.counts.iter().map(u64::to_string));
        a.push_row(row);
        let mut rec = json!({ "n": r.n, "counts": r.counts });
        if let Some(ts) = times.filter(|_| with_times) {
            rec["tau"] = json!(ts[i]);
        }
        recs.push(rec);
    }
    a.doc.insert("initial".into(), json!(t.initial));
    a.doc.insert("records".into(), Value::Array(recs));
    a.summary.insert("final".into(), json!({ "n": t.final_n(), "counts": t.last().counts }));
    a
}

fn project_artifact(c: &RunConfig) -> Result<Artifact, CliError> {
    let traj = trajectory(c)?;
    let spec = compute_spectrum(req(c.m))?;
    let series = project_w(&traj, &spec)?;
    let mut a = Artifact::new(["n", "re_w", "im_w", "drift_err"]);
    let mut entries = Vec::new();
    for e in &series.entries {
        a.push_row(vec![e.n.to_string(), fstr(e.w.re), fstr(e.w.im), fstr(e.drift_error)]);
        entries.push(json!({ "n": e.n, "re": e.w.re, "im": e.w.im, "drift_err": e.drift_error }));
    }
    a.doc.insert("lambda2".into(), cjson(series.lambda2));
    a.doc.insert("entries".into(), Value::Array(entries));
    if let Some(last) = series.last() {
        a.summary.insert("w".into(), cjson(last.w));
        a.summary.insert("expected_w".into(), cjson(expected_w_at(&spec, &traj.initial, last.n)));
        a.summary.insert("drift_err".into(), json!(last.drift_error));
    }
    Ok(a)
}

fn fit_artifact(c: &RunConfig) -> Result<Artifact, CliError> {
    let traj = trajectory(c)?;
    let spec = compute_spectrum(req(c.m))?;
    let fit = oscillation_fit(&project_w(&traj, &spec)?)?;
    let mut a = Artifact::new(["rho", "phi", "residual", "points"]);
    a.push_row(vec![fstr(fit.rho), fstr(fit.phi), fstr(fit.residual), fit.points.to_string()]);
    for (k, v) in [("rho", fit.rho), ("phi", fit.phi), ("residual", fit.residual)] {
        a.doc.insert(k.into(), json!(v));
        a.summary.insert(k.into(), json!(v));
    }
    a.doc.insert("points".into(), json!(fit.points));
    a.doc.insert("sigma2".into(), json!(spec.sigma2));
    a.doc.insert("tau2".into(), json!(spec.tau2));
    Ok(a)
}

fn w_params(c: &RunConfig) -> Result<(usize, Variant, num_complex::Complex64, num_complex::Complex64), CliError> {
    let m = req(c.m);
    let variant = c.variant.unwrap_or(Variant::Ct);
    let lambda = lambda2(m)?;
    Ok((m, variant, lambda, wlimit::btree_anchor(variant, m, lambda)))
}

fn cascade_artifact(c: &RunConfig) -> Result<Artifact, CliError> {
    let (m, variant, lambda, anchor) = w_params(c)?;
    let set = wlimit::cascade_sample(
        variant,
        m,
        lambda,
        anchor,
        c.depth.unwrap_or(DEFAULT_DEPTH),
        req(c.samples),
        c.seed.unwrap_or(0),
    )?;
    let mut a = Artifact::new(["re", "im"]);
    for w in &set.samples {
        a.push_row(vec![fstr(w.re), fstr(w.im)]);
    }
    a.doc.insert("lambda".into(), cjson(lambda));
    a.doc.insert("anchor".into(), cjson(anchor));
    a.doc.insert("truncation_bound".into(), json!(set.truncation_bound));
    a.doc.insert("samples".into(), Value::Array(set.samples.iter().map(|&w| cjson(w)).collect()));
    a.summary.insert("mean".into(), cjson(set.summary.mean));
    a.summary.insert("variance".into(), json!(set.summary.variance));
    a.summary.insert("second_abs_moment".into(), json!(set.summary.second_abs_moment));
    Ok(a)
}

fn moments_artifact(c: &RunConfig) -> Result<Artifact, CliError> {
    let (m, variant, lambda, anchor) = w_params(c)?;
    let table = wlimit::moments_w(variant, m, lambda, anchor, req(c.pmax))?;
    let mut a = Artifact::new(["p", "re", "im"]);
    let mut rows = Vec::new();
    for (p, mu) in table.moments.iter().enumerate() {
        a.push_row(vec![p.to_string(), fstr(mu.re), fstr(mu.im)]);
        rows.push(json!({ "p": p, "re": mu.re, "im": mu.im }));
    }
    a.doc.insert("variant".into(), json!(variant));
    a.doc.insert("m".into(), json!(m));
    a.doc.insert("lambda".into(), cjson(lambda));
    a.doc.insert("anchor".into(), cjson(anchor));
    a.doc.insert("moments".into(), Value::Array(rows));
    a.summary.insert("pmax".into(), json!(req(c.pmax)));
    Ok(a)
}

fn fixpoint_artifact(c: &RunConfig) -> Result<Artifact, CliError> {
    let (m, variant, lambda, anchor) = w_params(c)?;
    let cfg = wlimit::FixpointConfig {
        n_samples: req(c.samples),
        n_iters: req(c.iters),
        ..Default::default()
    };
    let res = wlimit::fixpoint_iterate(variant, m, lambda, anchor, &cfg, c.seed.unwrap_or(0))?;
    let target = wlimit::second_abs_moment(variant, m, lambda, anchor)?;
    let mut a = Artifact::new(["iter", "w2"]);
    let mut trace = Vec::new();
    for &(i, d) in &res.distance_trace {
        a.push_row(vec![i.to_string(), fstr(d)]);
        trace.push(json!({ "iter": i, "w2": d }));
    }
    a.doc.insert("trace".into(), Value::Array(trace));
    for (k, v) in [
        ("ratio", res.ratio),
        ("contraction_bound", res.contraction_bound),
        ("second_abs_moment", res.samples.summary.second_abs_moment),
        ("exact_second_abs_moment", target),
    ] {
        a.doc.insert(k.into(), json!(v));
        a.summary.insert(k.into(), json!(v));
    }
    a.doc.insert("mean".into(), cjson(res.samples.summary.mean));
    Ok(a)
}

fn laplace_artifact(c: &RunConfig) -> Result<Artifact, CliError> {
    let m = req(c.m);
    let lambda = lambda2(m)?;
    let anchor = wlimit::btree_anchor(Variant::Ct, m, lambda);
    let res = wlimit::laplace_residual(m, lambda, anchor, req(c.pmax))?;
    let max = res.iter().copied().fold(0.0, f64::max);
    let mut a = Artifact::new(["k", "residual"]);
    for (k, r) in res.iter().enumerate() {
        a.push_row(vec![(k + 1).to_string(), fstr(*r)]);
    }
    a.doc.insert("residuals".into(), json!(res));
    a.doc.insert("max".into(), json!(max));
    a.summary.insert("max".into(), json!(max));
    Ok(a)
}

fn figure_artifact(c: &RunConfig) -> Result<Artifact, CliError> {
    let m = req(c.m);
    let name = req(c.name);
    let traj = trajectory(c)?;
    let spec = compute_spectrum(m)?;
    let ks = figure_coordinates(m);
    let alpha = match name {
        FigureName::DriftSmall | FigureName::DriftLarge => 1.0,
        FigureName::ScaledSmall => 0.5,
        FigureName::ScaledLarge => spec.sigma2,
    };
    let mut a = Artifact::new(std::iter::once("n".to_string()).chain(ks.iter().map(|k| format!("g{k}"))));
    for r in traj.records.iter().filter(|r| r.n > 0) {
        let mut row = vec![r.n.to_string()];
        row.extend(
            ks.iter()
                .map(|&k| fstr(analysis::scaled_fluctuation(&r.counts, r.n, &spec.v1, k - 1, alpha))),
        );
        a.push_row(row);
    }
    a.doc.insert("alpha".into(), json!(alpha));
    a.doc.insert("coordinates".into(), json!(ks));
    a.summary.insert("alpha".into(), json!(alpha));
    a.summary.insert("final_drift_err".into(), json!(analysis::drift_error(&traj.last().counts, traj.final_n(), &spec.v1)));
    Ok(a)
}
