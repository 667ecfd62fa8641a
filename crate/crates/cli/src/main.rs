//! `ccol`: preprocess clips, run the colorization pipeline, rank candidate
//! exemplars, evaluate outputs and tally surveys.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags, invalid config,
//! mismatched inputs), 2 for runtime failures (I/O, decode, backend, stage).
//! Machine-readable output goes to stdout; logs go to stderr.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use ccol_core::frame_io::{load_clip_file, load_ground_truth, manifest_path, read_png, save_clip_named};
use ccol_core::metrics::{read_votes, tally_table, tally_votes};
use ccol_core::pipeline::{bn_models, evaluate_run, EvalFeatures, RUN_FILE};
use ccol_core::quality::FaceQualityProxy;
use ccol_core::{
    desaturate, resize, select_exemplar, select_exemplar_bn, Ablation, CandidateSet, Clip, ClipManifest, Error,
    ExemplarChoice, FeatureSet, MetricReport, PipelineConfig,
};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "ccol", version, about = "Controllable speaker-video colorization workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resize a clip and write a grayscale clip plus its colour ground truth.
    Preprocess {
        /// Input clip manifest (or a directory holding `clip.json`).
        #[arg(long = "in")]
        input: PathBuf,
        /// Output directory; receives `gray/` and, for colour input, `color/`.
        #[arg(long)]
        out: PathBuf,
        /// Target size as WxH, e.g. 128x128.
        #[arg(long, value_parser = parse_size)]
        size: (u32, u32),
    },
    /// Run the pipeline described by a config file; prints the run record path.
    Colorize {
        /// Pipeline config JSON. Relative paths inside resolve against its directory.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's ablation mode.
        #[arg(long, value_parser = parse_ablation)]
        ablation: Option<Ablation>,
        /// Override the candidate seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a directory of candidate PNGs and mark the selected exemplar.
    Rank {
        /// Directory of same-sized candidate PNGs, ranked in file name order.
        #[arg(long)]
        candidates: PathBuf,
        #[arg(long, value_enum, default_value_t = RankMethod::Fiq)]
        method: RankMethod,
        /// NIQE model JSON for `--method bn`; fitted on the candidates' luma when absent.
        #[arg(long)]
        niqe_model: Option<PathBuf>,
        /// BRISQUE model JSON for `--method bn`; fitted on the candidates' luma when absent.
        #[arg(long)]
        brisque_model: Option<PathBuf>,
        /// Print the selection record as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Compare an output clip against ground truth: PSNR, SSIM, FID, FVD.
    Evaluate {
        /// Output clip manifest.
        #[arg(long)]
        output: PathBuf,
        /// Ground-truth clip manifest.
        #[arg(long)]
        truth: PathBuf,
        /// Extracted feature files, given in (output, truth) pairs. Frame-unit
        /// pairs replace the toy FID features, clip-unit pairs the toy FVD ones.
        #[arg(long)]
        features: Vec<PathBuf>,
        /// Print the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Tally a survey votes CSV (`question_id,participant_id,option`).
    SurveyTally {
        #[arg(long)]
        votes: PathBuf,
        /// Print the tallies as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Serve the interactive session API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory holding session state; created if missing.
        #[arg(long, default_value = "sessions")]
        data_root: PathBuf,
    },
    /// Execute a backend job file with the built-in backends.
    #[command(hide = true)]
    Backend { job: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum RankMethod {
    Fiq,
    Bn,
}

/// A failure tagged with its exit code.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

/// Input-shape errors are the caller's fault; file and compute errors are not.
fn classify(e: Error) -> Failure {
    match e {
        Error::Config(_)
        | Error::MismatchedFeatures(_)
        | Error::FeatureDimension { .. }
        | Error::FrameSizeMismatch(..)
        | Error::InvalidInput(_)
        | Error::InsufficientSamples { .. } => usage(e),
        other => other.into(),
    }
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w: u32 = w.parse().map_err(|_| format!("bad width `{w}`"))?;
    let h: u32 = h.parse().map_err(|_| format!("bad height `{h}`"))?;
    if w == 0 || h == 0 {
        return Err("width and height must be positive".into());
    }
    Ok((w, h))
}

fn parse_ablation(s: &str) -> Result<Ablation, String> {
    s.parse::<Ablation>().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .init();

    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Preprocess { input, out, size } => preprocess(&input, &out, size),
        Command::Colorize { config, ablation, seed } => colorize(&config, ablation, seed),
        Command::Rank {
            candidates,
            method,
            niqe_model,
            brisque_model,
            json,
        } => rank(
            &candidates,
            method,
            niqe_model.as_deref(),
            brisque_model.as_deref(),
            json,
        ),
        Command::Evaluate {
            output,
            truth,
            features,
            json,
        } => evaluate(&output, &truth, &features, json),
        Command::SurveyTally { votes, json } => survey_tally(&votes, json),
        Command::Serve { addr, data_root } => ccol_service::serve_blocking(addr, &data_root).map_err(Failure::Runtime),
        Command::Backend { job } => {
            ccol_core::backends::run_builtin_job(&job).with_context(|| format!("backend job {}", job.display()))?;
            Ok(())
        }
    }
}

fn resized(clip: &Clip, (w, h): (u32, u32)) -> Result<Clip, Error> {
    clip.with_frames(clip.frames().iter().map(|f| resize(f, w, h)).collect())
}

fn preprocess(input: &Path, out: &Path, size: (u32, u32)) -> Result<(), Failure> {
    let (manifest, clip) = load_clip_file(input)?;
    let base = manifest_path(input);
    let base = base.parent().unwrap_or(Path::new("."));
    // Colour reference: listed ground truth first, else the input itself when it has colour.
    let colour = match load_ground_truth(&manifest, base)? {
        Some(gt) => Some(gt),
        None if !clip.is_grayscale() => Some(clip.clone()),
        None => None,
    };

    let gray = resized(&clip, size)?;
    let gray = gray.with_frames(gray.frames().iter().map(desaturate).collect())?;
    let gray_dir = out.join("gray");
    let mut gray_manifest = save_clip_named(&gray, &gray_dir, Some(&manifest.name))?;
    if let Some(colour) = colour {
        let colour_manifest = save_clip_named(&resized(&colour, size)?, &out.join("color"), Some(&manifest.name))?;
        gray_manifest.ground_truth_paths = Some(
            colour_manifest
                .frame_paths
                .iter()
                .map(|p| Path::new("..").join("color").join(p))
                .collect(),
        );
        gray_manifest.write(&gray_dir.join(ccol_core::frame_io::MANIFEST_FILE))?;
        println!(
            "{}",
            out.join("color").join(ccol_core::frame_io::MANIFEST_FILE).display()
        );
    }
    println!("{}", gray_dir.join(ccol_core::frame_io::MANIFEST_FILE).display());
    Ok(())
}

fn colorize(config: &Path, ablation: Option<Ablation>, seed: Option<u64>) -> Result<(), Failure> {
    let (mut cfg, base) = PipelineConfig::load(config).map_err(|e| match e {
        Error::Json(_) | Error::Parse(_) => usage(anyhow!("{}: {e}", config.display())),
        other => classify(other),
    })?;
    if let Some(a) = ablation {
        cfg.ablation = a;
    }
    if let Some(s) = seed {
        cfg.candidates.seed = s;
    }
    cfg.validate().map_err(classify)?;
    let record = ccol_core::run_pipeline(&cfg, &base).map_err(|e| match e {
        Error::Config(_) => classify(e),
        other => Failure::Runtime(other.into()),
    })?;
    tracing::info!(status = ?record.status, "pipeline finished");
    println!(
        "{}",
        ccol_core::frame_io::resolve(&base, &cfg.output_dir)
            .join(RUN_FILE)
            .display()
    );
    Ok(())
}

fn load_candidates(dir: &Path) -> Result<CandidateSet, Failure> {
    let entries = fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(usage(anyhow!("no PNG candidates in {}", dir.display())));
    }
    let frames = paths.iter().map(|p| read_png(p)).collect::<Result<Vec<_>, _>>()?;
    let n = frames.len();
    CandidateSet::new(frames, dir.display().to_string(), vec![0; n]).map_err(classify)
}

fn rank(
    dir: &Path,
    method: RankMethod,
    niqe: Option<&Path>,
    brisque: Option<&Path>,
    json: bool,
) -> Result<(), Failure> {
    let cands = load_candidates(dir)?;
    let choice = match method {
        RankMethod::Fiq => select_exemplar(&cands, &FaceQualityProxy { region: None })?,
        RankMethod::Bn => {
            let corpus: Vec<_> = cands.candidates().iter().map(desaturate).collect();
            let (n, b) = bn_models(niqe, brisque, &corpus).map_err(|e| match e {
                Error::InsufficientSamples { .. } | Error::DegenerateCorpus(_) => usage(anyhow!(
                    "cannot fit quality models on these candidates ({e}); pass --niqe-model and --brisque-model"
                )),
                other => other.into(),
            })?;
            select_exemplar_bn(&cands, &n, &b)?
        }
    };
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&choice).map_err(anyhow::Error::from)?
        );
    } else {
        print!("{}", rank_table(&choice));
    }
    Ok(())
}

fn rank_table(c: &ExemplarChoice) -> String {
    let mut out = format!("scorer: {} ({:?})\n", c.scorer_id, c.polarity);
    out.push_str(&format!(
        "{:>5}  {:>14}  {:>10}  {}\n",
        "index", "raw", "normalized", "selected"
    ));
    for (i, (raw, norm)) in c.raw_scores.iter().zip(&c.normalized_scores).enumerate() {
        let mark = if i == c.index { "*" } else { "" };
        out.push_str(&format!("{i:>5}  {raw:>14.6}  {norm:>10.6}  {mark}\n"));
    }
    out
}

fn evaluate(output: &Path, truth: &Path, features: &[PathBuf], json: bool) -> Result<(), Failure> {
    if !features.len().is_multiple_of(2) {
        return Err(usage(anyhow!(
            "--features takes (output, truth) pairs; got {} files",
            features.len()
        )));
    }
    let mut feats = EvalFeatures::default();
    for pair in features.chunks(2) {
        let o = FeatureSet::read(&pair[0]).map_err(classify)?;
        let t = FeatureSet::read(&pair[1]).map_err(classify)?;
        if o.unit != t.unit {
            return Err(usage(anyhow!(
                "{} has {} features but {} has {}",
                pair[0].display(),
                o.unit.as_str(),
                pair[1].display(),
                t.unit.as_str()
            )));
        }
        let slot = match o.unit {
            ccol_core::metrics::FeatureUnit::Frame => &mut feats.frame,
            ccol_core::metrics::FeatureUnit::Clip => &mut feats.clip,
        };
        if slot.replace((o, t)).is_some() {
            return Err(usage(anyhow!("more than one {} feature pair given", pair[0].display())));
        }
    }
    let (_, row) = evaluate_run(output, truth, &feats).map_err(classify)?;
    let truth_manifest = ClipManifest::read(&manifest_path(truth))?;
    let report = MetricReport {
        dataset: truth_manifest.name,
        rows: vec![row],
    };
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?
        );
    } else {
        print!("{}", report.to_table());
    }
    Ok(())
}

fn survey_tally(votes: &Path, json: bool) -> Result<(), Failure> {
    let votes = read_votes(votes).map_err(|e| match e {
        Error::MissingFile(_) | Error::Io(_) => e.into(),
        other => usage(other),
    })?;
    let tallies = tally_votes(&votes).map_err(usage)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&tallies).map_err(anyhow::Error::from)?
        );
    } else {
        print!("{}", tally_table(&tallies));
    }
    Ok(())
}
