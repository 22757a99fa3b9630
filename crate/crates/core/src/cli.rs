//! The `lms3` command-line front end.
//!
//! Exit codes: 0 success, 2 usage, 3 bundle or output i/o, 4 unknown test id,
//! 5 a verification invariant was violated.
//!
//! Every JSON document carries a [`RunManifest`]. CSV outputs get a
//! `<out>.manifest.json` sidecar instead. Wall-clock duration is only
//! recorded with `--record-timing`, so by default identical invocations
//! produce identical bytes. `LMS3_THREADS` caps the worker pool.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::baselines::{select_bm25, select_random_stream, select_tfidf, BaselineError, Bm25Params};
use crate::bundle::{load_bundle, write_bundle, Bundle, BundleError, TestItem};
use crate::scoring::{score_pool, zscore_normalize, ScoreConfig, ScoreError, ScoreVariant, ScoredDemonstration};
use crate::selection::{select_lms3, sweep_lambda, Polarity, SelectionConfig, SelectionError};
use crate::synth::{synthetic_bundle, SynthSpec};
use crate::theory::conditions::RhsForm;
use crate::theory::generate::LabDims;
use crate::theory::verify::{run_verify, VerifyConfig, VerifyMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUNDLE: i32 = 3;
pub const EXIT_LOOKUP: i32 = 4;
pub const EXIT_INVARIANT: i32 = 5;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown test id {0:?}")]
    UnknownTest(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Bundle(_) | CliError::Output { .. } => EXIT_BUNDLE,
            CliError::UnknownTest(_) => EXIT_LOOKUP,
        }
    }
}

impl From<SelectionError> for CliError {
    fn from(e: SelectionError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "lms3", version, about = "Demonstration selection and influence-analysis lab")]
pub struct Cli {
    /// Record wall-clock duration in the run manifest (breaks byte-identity).
    #[arg(long, global = true)]
    pub record_timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every demonstration against one test item.
    Score(ScoreArgs),
    /// Select demonstrations with rank-based rejection.
    Select(SelectArgs),
    /// Reference selectors: random, TF-IDF, BM25.
    Baseline(BaselineArgs),
    /// Monte-Carlo checks of the sufficient condition, bounds and influence.
    Verify(VerifyArgs),
    /// Score-distribution reports over every test item.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Parameter sweeps over every test item.
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Write a seeded synthetic bundle.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantArg {
    Product,
    Sum,
}

impl From<VariantArg> for ScoreVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Product => ScoreVariant::Product,
            VariantArg::Sum => ScoreVariant::Sum,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarityArg {
    Min,
    Max,
}

impl From<PolarityArg> for Polarity {
    fn from(p: PolarityArg) -> Self {
        match p {
            PolarityArg::Min => Polarity::Min,
            PolarityArg::Max => Polarity::Max,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Random,
    Tfidf,
    Bm25,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Theorem1,
    Theorem2,
    Bounds,
    Influence,
}

impl From<ModeArg> for VerifyMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Theorem1 => VerifyMode::Theorem1,
            ModeArg::Theorem2 => VerifyMode::Theorem2,
            ModeArg::Bounds => VerifyMode::Bounds,
            ModeArg::Influence => VerifyMode::Influence,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RhsArg {
    Derived,
    Extended,
}

impl From<RhsArg> for RhsForm {
    fn from(r: RhsArg) -> Self {
        match r {
            RhsArg::Derived => RhsForm::Derived,
            RhsArg::Extended => RhsForm::Extended,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoringArgs {
    #[arg(long, value_enum, default_value = "product")]
    pub variant: VariantArg,
    /// Weight on stab for the sum variant [default: 1.0].
    #[arg(long)]
    pub lambda1: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub test_id: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TargetArgs {
    #[arg(long, required_unless_present = "all", conflicts_with = "all")]
    pub test_id: Option<String>,
    /// Process every test item, one JSON line each.
    #[arg(long)]
    pub all: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelectArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value = "min")]
    pub polarity: PolarityArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BaselineArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// BM25 term-frequency saturation [default: 1.5].
    #[arg(long)]
    pub k1: Option<f64>,
    /// BM25 length normalization [default: 0.75].
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub d: u64,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub dprime: u64,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    pub dpre: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Demonstrations per trial for theorem2.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub ridge: f64,
    #[arg(long, value_enum, default_value = "derived")]
    pub rhs_form: RhsArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Per-(test, demo) scores with per-test z-scores, as CSV.
    ScoreDist(ScoreDistArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScoreDistArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SweepCommand {
    /// Selection statistics over a list of rejection thresholds, as CSV.
    Lambda(SweepArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Comma-separated thresholds in (0, 1].
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub values: Vec<f64>,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    #[arg(long, value_enum, default_value = "min")]
    pub polarity: PolarityArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub scoring: ScoringArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub d: u64,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub dprime: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Provenance embedded in every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub flags: BTreeMap<String, Value>,
    /// Flags that were not given and took their documented default.
    pub defaulted: Vec<String>,
    pub seed: Option<u64>,
    pub bundle: Option<String>,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_seconds: Option<f64>,
}

struct Context {
    started: Instant,
    record_timing: bool,
}

impl Context {
    fn manifest<A: Serialize>(
        &self,
        command: &str,
        args: &A,
        seed: Option<u64>,
        bundle: Option<&Path>,
        defaulted: Vec<String>,
    ) -> RunManifest {
        let flags = match serde_json::to_value(args) {
            Ok(Value::Object(map)) => map.into_iter().collect(),
            _ => BTreeMap::new(),
        };
        RunManifest {
            command: command.to_string(),
            flags,
            defaulted,
            seed,
            bundle: bundle.map(|p| p.display().to_string()),
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_seconds: None,
        }
    }

    fn stamp(&self, mut m: RunManifest) -> RunManifest {
        if self.record_timing {
            m.duration_seconds = Some(self.started.elapsed().as_secs_f64());
        }
        m
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|source| CliError::Output {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Output {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s.into_bytes()
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn score_config(args: &ScoringArgs, defaulted: &mut Vec<String>) -> Result<ScoreConfig, CliError> {
    let lambda1 = args.lambda1.unwrap_or_else(|| {
        defaulted.push("lambda1".into());
        1.0
    });
    Ok(ScoreConfig::new(args.variant.into(), lambda1)?)
}

fn with_lambda1(mut m: RunManifest, cfg: &ScoreConfig) -> RunManifest {
    m.flags.insert("lambda1".into(), cfg.lambda1.into());
    m
}

fn resolve_tests<'a>(bundle: &'a Bundle, target: &TargetArgs) -> Result<Vec<(usize, &'a TestItem)>, CliError> {
    if target.all {
        return Ok(bundle.tests.iter().enumerate().collect());
    }
    let id = target.test_id.as_deref().unwrap_or_default();
    bundle
        .tests
        .iter()
        .position(|t| t.id == id)
        .map(|i| vec![(i, &bundle.tests[i])])
        .ok_or_else(|| CliError::UnknownTest(id.to_string()))
}

fn scored_or_empty(bundle: &Bundle, test: &TestItem, cfg: &ScoreConfig) -> Result<Vec<ScoredDemonstration>, CliError> {
    if bundle.pool.is_empty() {
        return Ok(Vec::new());
    }
    Ok(score_pool(&bundle.projection, &bundle.pool, test, cfg)?)
}

#[derive(Debug, Serialize)]
struct ScoreOutput<'a> {
    manifest: RunManifest,
    test_id: &'a str,
    scores: Vec<ScoredDemonstration>,
}

fn cmd_score(ctx: &Context, args: &ScoreArgs) -> Result<i32, CliError> {
    let mut defaulted = Vec::new();
    let cfg = score_config(&args.scoring, &mut defaulted)?;
    let bundle = load_bundle(&args.bundle)?;
    let test = bundle
        .test(&args.test_id)
        .ok_or_else(|| CliError::UnknownTest(args.test_id.clone()))?;
    let scores = scored_or_empty(&bundle, test, &cfg)?;
    let manifest = with_lambda1(ctx.manifest("score", args, None, Some(&args.bundle), defaulted), &cfg);
    let out = ScoreOutput {
        manifest: ctx.stamp(manifest),
        test_id: &test.id,
        scores,
    };
    write_output(args.out.as_deref(), &pretty(&out))?;
    Ok(EXIT_OK)
}

/// One chosen demonstration. Baselines leave the attention-derived fields null.
#[derive(Debug, Clone, Serialize)]
pub struct ChosenOutput {
    pub id: String,
    pub score: Option<f64>,
    pub sim: Option<f64>,
    pub stab: Option<f64>,
    pub sim_rank_fraction: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RejectedOutput {
    pub id: String,
    pub sim_rank_fraction: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionOutput {
    pub manifest: RunManifest,
    pub test_id: String,
    pub method: String,
    pub chosen: Vec<ChosenOutput>,
    pub rejected: Vec<RejectedOutput>,
    pub zero_shot: bool,
    pub pool_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback: Option<bool>,
}

fn emit_selections(out: Option<&Path>, all: bool, results: &[SelectionOutput]) -> Result<(), CliError> {
    let bytes = if all {
        let mut buf = String::new();
        for r in results {
            buf.push_str(&serde_json::to_string(r).expect("output types serialize"));
            buf.push('\n');
        }
        buf.into_bytes()
    } else {
        pretty(&results[0])
    };
    write_output(out, &bytes)
}

fn cmd_select(ctx: &Context, args: &SelectArgs) -> Result<i32, CliError> {
    let mut defaulted = Vec::new();
    let cfg = score_config(&args.scoring, &mut defaulted)?;
    let sel = SelectionConfig::new(args.k as usize, args.lambda, args.polarity.into())?;
    let bundle = load_bundle(&args.bundle)?;
    let tests = resolve_tests(&bundle, &args.target)?;
    let manifest = with_lambda1(ctx.manifest("select", args, None, Some(&args.bundle), defaulted), &cfg);

    let scored: Vec<Vec<ScoredDemonstration>> = tests
        .par_iter()
        .map(|(_, t)| scored_or_empty(&bundle, t, &cfg))
        .collect::<Result<_, _>>()?;
    let manifest = ctx.stamp(manifest);
    let results: Vec<SelectionOutput> = tests
        .iter()
        .zip(&scored)
        .map(|((_, t), s)| {
            let r = select_lms3(s, &sel);
            SelectionOutput {
                manifest: manifest.clone(),
                test_id: t.id.clone(),
                method: "lms3".into(),
                chosen: r
                    .chosen
                    .into_iter()
                    .map(|c| ChosenOutput {
                        id: c.id,
                        score: Some(c.score),
                        sim: Some(c.sim),
                        stab: Some(c.stab),
                        sim_rank_fraction: Some(c.sim_rank_fraction),
                    })
                    .collect(),
                rejected: r
                    .rejected
                    .into_iter()
                    .map(|x| RejectedOutput {
                        id: x.id,
                        sim_rank_fraction: x.sim_rank_fraction,
                    })
                    .collect(),
                zero_shot: r.zero_shot,
                pool_size: r.pool_size,
                fallback: None,
            }
        })
        .collect();
    emit_selections(args.out.as_deref(), args.target.all, &results)?;
    Ok(EXIT_OK)
}

fn cmd_baseline(ctx: &Context, args: &BaselineArgs) -> Result<i32, CliError> {
    let mut defaulted = Vec::new();
    let params = match args.method {
        MethodArg::Bm25 => {
            let k1 = args.k1.unwrap_or_else(|| {
                defaulted.push("k1".into());
                Bm25Params::default().k1
            });
            let b = args.b.unwrap_or_else(|| {
                defaulted.push("b".into());
                Bm25Params::default().b
            });
            Some(Bm25Params::new(k1, b)?)
        }
        _ => None,
    };
    let bundle = load_bundle(&args.bundle)?;
    let tests = resolve_tests(&bundle, &args.target)?;
    let k = args.k as usize;
    if k > bundle.pool.len() {
        return Err(BaselineError::KExceedsPool { k, m: bundle.pool.len() }.into());
    }

    let mut manifest = ctx.manifest("baseline", args, Some(args.seed), Some(&args.bundle), defaulted);
    if let Some(p) = &params {
        manifest.flags.insert("k1".into(), p.k1.into());
        manifest.flags.insert("b".into(), p.b.into());
    }
    let method = serde_json::to_value(args.method)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();

    let picks: Vec<(Vec<ChosenOutput>, Option<bool>)> = tests
        .par_iter()
        .map(|&(index, t)| -> Result<_, CliError> {
            let ids_scores = |picks: Vec<crate::baselines::Ranked>| {
                picks
                    .into_iter()
                    .map(|r| ChosenOutput {
                        id: bundle.pool.items[r.index].id.clone(),
                        score: Some(r.score),
                        sim: None,
                        stab: None,
                        sim_rank_fraction: None,
                    })
                    .collect::<Vec<_>>()
            };
            Ok(match args.method {
                MethodArg::Random => (
                    select_random_stream(&bundle.pool, k, args.seed, index as u64)?
                        .into_iter()
                        .map(|id| ChosenOutput {
                            id,
                            score: None,
                            sim: None,
                            stab: None,
                            sim_rank_fraction: None,
                        })
                        .collect(),
                    None,
                ),
                MethodArg::Tfidf => {
                    let s = select_tfidf(&bundle.pool, &t.problem, k)?;
                    (ids_scores(s.picks), Some(s.fallback))
                }
                MethodArg::Bm25 => {
                    let p = params.expect("bm25 params resolved above");
                    (ids_scores(select_bm25(&bundle.pool, &t.problem, k, &p)?), None)
                }
            })
        })
        .collect::<Result<_, _>>()?;

    let manifest = ctx.stamp(manifest);
    let results: Vec<SelectionOutput> = tests
        .iter()
        .zip(picks)
        .map(|((_, t), (chosen, fallback))| SelectionOutput {
            manifest: manifest.clone(),
            test_id: t.id.clone(),
            method: method.clone(),
            zero_shot: chosen.is_empty(),
            chosen,
            rejected: Vec::new(),
            pool_size: bundle.pool.len(),
            fallback,
        })
        .collect();
    emit_selections(args.out.as_deref(), args.target.all, &results)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct VerifyOutput {
    manifest: RunManifest,
    sound: bool,
    #[serde(flatten)]
    report: crate::theory::verify::VerifyReport,
}

fn cmd_verify(ctx: &Context, args: &VerifyArgs) -> Result<i32, CliError> {
    let dims = LabDims {
        d: args.d as usize,
        d_prime: args.dprime as usize,
        n_pretrain: args.dpre as usize,
        ridge: args.ridge,
    };
    dims.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if !(args.ridge.is_finite() && args.ridge >= 0.0) {
        return Err(CliError::Usage(format!("ridge must be finite and non-negative, got {}", args.ridge)));
    }
    let cfg = VerifyConfig {
        mode: args.mode.into(),
        trials: args.trials as usize,
        d: dims.d,
        d_prime: dims.d_prime,
        n_pretrain: dims.n_pretrain,
        ridge: dims.ridge,
        seed: args.seed,
        k: args.k as usize,
        rhs_form: args.rhs_form.into(),
    };
    let manifest = ctx.manifest("verify", args, Some(args.seed), None, Vec::new());
    let report = run_verify(&cfg);
    let sound = report.sound();
    let out = VerifyOutput {
        manifest: ctx.stamp(manifest),
        sound,
        report,
    };
    write_output(args.out.as_deref(), &pretty(&out))?;
    if sound {
        Ok(EXIT_OK)
    } else {
        eprintln!("verification invariant violated: {:?}", out.report.aggregate);
        Ok(EXIT_INVARIANT)
    }
}

#[derive(Debug, Serialize)]
struct DistRow<'a> {
    test_id: &'a str,
    demo_id: &'a str,
    score: f64,
    zscore: f64,
}

#[derive(Debug, Serialize)]
struct DistSummary<'a> {
    test_id: &'a str,
    m: usize,
    mean: Option<f64>,
    variance: Option<f64>,
}

fn csv_bytes<T: Serialize>(rows: &[T], header: &[&str]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Usage(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Usage(format!("csv encoding failed: {e}")))
}

fn cmd_score_dist(ctx: &Context, args: &ScoreDistArgs) -> Result<i32, CliError> {
    let mut defaulted = Vec::new();
    let cfg = score_config(&args.scoring, &mut defaulted)?;
    let bundle = load_bundle(&args.bundle)?;
    if bundle.tests.is_empty() {
        return Err(BundleError::Invalid("score-dist needs at least one test item".into()).into());
    }
    let manifest = with_lambda1(
        ctx.manifest("report score-dist", args, None, Some(&args.bundle), defaulted),
        &cfg,
    );

    let scored: Vec<Vec<ScoredDemonstration>> = bundle
        .tests
        .par_iter()
        .map(|t| scored_or_empty(&bundle, t, &cfg))
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (t, s) in bundle.tests.iter().zip(&scored) {
        let values: Vec<f64> = s.iter().map(|x| x.score).collect();
        let m = values.len();
        let z = if m >= 2 { zscore_normalize(&values)? } else { vec![0.0; m] };
        let mean = (m >= 1).then(|| values.iter().sum::<f64>() / m as f64);
        let variance = mean
            .filter(|_| m >= 2)
            .map(|mu| values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (m - 1) as f64);
        for (x, zs) in s.iter().zip(z) {
            rows.push(DistRow {
                test_id: &t.id,
                demo_id: &x.id,
                score: x.score,
                zscore: zs,
            });
        }
        summary.push(DistSummary {
            test_id: &t.id,
            m,
            mean,
            variance,
        });
    }

    let data = csv_bytes(&rows, &["test_id", "demo_id", "score", "zscore"])?;
    let summ = csv_bytes(&summary, &["test_id", "m", "mean", "variance"])?;
    write_output(Some(&args.out), &data)?;
    write_output(Some(&sidecar(&args.out, ".summary.csv")), &summ)?;
    write_output(Some(&sidecar(&args.out, ".manifest.json")), &pretty(&ctx.stamp(manifest)))?;
    Ok(EXIT_OK)
}

fn cmd_sweep(ctx: &Context, args: &SweepArgs) -> Result<i32, CliError> {
    let mut defaulted = Vec::new();
    let cfg = score_config(&args.scoring, &mut defaulted)?;
    if let Some(bad) = args.values.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
        return Err(CliError::Usage(format!("lambda values must lie in (0, 1], got {bad}")));
    }
    let bundle = load_bundle(&args.bundle)?;
    let manifest = with_lambda1(ctx.manifest("sweep lambda", args, None, Some(&args.bundle), defaulted), &cfg);
    let scored: Vec<Vec<ScoredDemonstration>> = bundle
        .tests
        .par_iter()
        .map(|t| scored_or_empty(&bundle, t, &cfg))
        .collect::<Result<_, _>>()?;
    let rows = sweep_lambda(&scored, &args.values, args.k as usize, args.polarity.into())?;
    let data = csv_bytes(&rows, &["lambda", "mean_chosen", "zero_shot_rate"])?;
    write_output(args.out.as_deref(), &data)?;
    if let Some(out) = &args.out {
        write_output(Some(&sidecar(out, ".manifest.json")), &pretty(&ctx.stamp(manifest)))?;
    }
    Ok(EXIT_OK)
}

fn cmd_synth(ctx: &Context, args: &SynthArgs) -> Result<i32, CliError> {
    let spec = SynthSpec {
        m: args.m,
        n: args.n,
        d: args.d as usize,
        d_prime: args.dprime as usize,
        seed: args.seed,
    };
    let bundle = synthetic_bundle(&spec)?;
    write_bundle(&bundle, &args.out)?;
    let manifest = ctx.manifest("synth", args, Some(args.seed), Some(&args.out), Vec::new());
    write_output(Some(&args.out.join("run_manifest.json")), &pretty(&ctx.stamp(manifest)))?;
    Ok(EXIT_OK)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("LMS3_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Usage(format!("LMS3_THREADS must be a positive integer, got {raw:?}")))?;
    // A pool that is already initialized keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let ctx = Context {
        started: Instant::now(),
        record_timing: cli.record_timing,
    };
    match &cli.command {
        Command::Score(a) => cmd_score(&ctx, a),
        Command::Select(a) => cmd_select(&ctx, a),
        Command::Baseline(a) => cmd_baseline(&ctx, a),
        Command::Verify(a) => cmd_verify(&ctx, a),
        Command::Report(ReportCommand::ScoreDist(a)) => cmd_score_dist(&ctx, a),
        Command::Sweep(SweepCommand::Lambda(a)) => cmd_sweep(&ctx, a),
        Command::Synth(a) => cmd_synth(&ctx, a),
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
