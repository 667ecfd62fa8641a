//! End-to-end orchestration: desaturate, generate candidates, select an
//! exemplar, propagate, save, and evaluate against ground truth.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::external::{external_candidates, external_propagate, BackendCommand, EXEMPLAR_FILE};
use crate::backends::palette::palette_colorize;
use crate::backends::propagate::{exemplar_propagate, DEFAULT_ALPHA};
use crate::color::{desaturate, with_luma, Frame, Pixel};
use crate::error::{Error, Result};
use crate::frame_io::{
    load_clip_file, load_ground_truth, manifest_path, resolve, save_clip_named, write_png, Clip, ClipManifest,
};
use crate::metrics::{
    fid, fvd, fvd_window_len, psnr, ssim, toy_clip_feature_set, toy_frame_feature_set, FeatureSet, MetricReport,
    MetricRow, Psnr,
};
use crate::quality::{
    fit_brisque_model, fit_quality_model, ExternalScorer, ExternalScorerConfig, FaceQualityProxy, FaceRegion,
    QualityModel, QualityScorer,
};
use crate::selection::{apply_override, select_exemplar, select_exemplar_bn, CandidateSet, ExemplarChoice};

pub const BUILTIN_GENERATOR: &str = "palette";
pub const BUILTIN_PROPAGATOR: &str = "lut";
pub const RUN_FILE: &str = "run.json";
pub const OUTPUT_SUBDIR: &str = "output";
pub const CANDIDATES_SUBDIR: &str = "candidates";

fn default_generator() -> String {
    BUILTIN_GENERATOR.into()
}
fn default_propagator() -> String {
    BUILTIN_PROPAGATOR.into()
}
fn default_count() -> usize {
    8
}
fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateStage {
    #[serde(default = "default_generator")]
    pub backend: String,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    /// Input frame the candidates colourize.
    #[serde(default)]
    pub frame_index: usize,
}

impl Default for CandidateStage {
    fn default() -> Self {
        Self {
            backend: default_generator(),
            count: default_count(),
            seed: 0,
            frame_index: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionConfig {
    /// Face-quality selection with the built-in proxy or an external scorer.
    Fiq {
        #[serde(default)]
        scorer: Option<ExternalScorerConfig>,
        #[serde(default)]
        region: Option<FaceRegion>,
    },
    /// Combined NIQE + BRISQUE; models default to a fit on the input clip.
    Bn {
        #[serde(default)]
        niqe_model: Option<PathBuf>,
        #[serde(default)]
        brisque_model: Option<PathBuf>,
    },
    /// Human pick recorded as an override of the automatic face-quality choice.
    FixedIndex { index: usize },
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig::Fiq {
            scorer: None,
            region: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationStage {
    #[serde(default = "default_propagator")]
    pub backend: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl Default for PropagationStage {
    fn default() -> Self {
        Self {
            backend: default_propagator(),
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    Full,
    /// Propagate from a neutral gray exemplar, skipping candidates and selection.
    NoExemplar,
    /// Colourize every frame independently with the candidate backend.
    PerFrameOnly,
}

impl Ablation {
    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoExemplar => "no_exemplar",
            Ablation::PerFrameOnly => "per_frame_only",
        }
    }
}

impl std::str::FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Ablation::Full),
            "no_exemplar" => Ok(Ablation::NoExemplar),
            "per_frame_only" => Ok(Ablation::PerFrameOnly),
            other => Err(Error::Config(format!("unknown ablation mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Clip manifest file or directory holding `clip.json`.
    pub clip: PathBuf,
    #[serde(default)]
    pub caption: Option<String>,
    #[serde(default)]
    pub candidates: CandidateStage,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub propagation: PropagationStage,
    #[serde(default)]
    pub ablation: Ablation,
    pub output_dir: PathBuf,
    /// External backends by id, usable in `candidates.backend` and `propagation.backend`.
    #[serde(default)]
    pub backends: BTreeMap<String, BackendCommand>,
}

impl PipelineConfig {
    pub fn new(clip: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            clip: clip.into(),
            caption: None,
            candidates: CandidateStage::default(),
            selection: SelectionConfig::default(),
            propagation: PropagationStage::default(),
            ablation: Ablation::Full,
            output_dir: output_dir.into(),
            backends: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let known = |id: &str, builtin: &str| id == builtin || self.backends.contains_key(id);
        if !known(&self.candidates.backend, BUILTIN_GENERATOR) {
            return Err(Error::Config(format!(
                "unknown candidate backend `{}`",
                self.candidates.backend
            )));
        }
        if !known(&self.propagation.backend, BUILTIN_PROPAGATOR) {
            return Err(Error::Config(format!(
                "unknown propagation backend `{}`",
                self.propagation.backend
            )));
        }
        for (id, cmd) in &self.backends {
            if id == BUILTIN_GENERATOR || id == BUILTIN_PROPAGATOR {
                return Err(Error::Config(format!("backend id `{id}` is reserved")));
            }
            if cmd.command.is_empty() {
                return Err(Error::Config(format!("backend `{id}` has an empty command")));
            }
        }
        if self.candidates.count == 0 {
            return Err(Error::Config("candidate count must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.propagation.alpha) {
            return Err(Error::Config(format!(
                "alpha must lie in [0, 1], got {}",
                self.propagation.alpha
            )));
        }
        if let SelectionConfig::FixedIndex { index } = self.selection {
            if index >= self.candidates.count {
                return Err(Error::Config(format!(
                    "fixed index {index} out of range for {} candidates",
                    self.candidates.count
                )));
            }
        }
        Ok(())
    }

    /// Reads and validates a config. Relative paths inside it resolve against
    /// the config file's directory, which is returned alongside.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = fs::read_to_string(path).map_err(|e| Error::with_path(e, path))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        let base = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf();
        Ok((cfg, base))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: StageStatus,
    pub millis: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: PipelineConfig,
    pub caption: String,
    pub status: StageStatus,
    pub stages: Vec<StageRecord>,
    #[serde(default)]
    pub exemplar: Option<ExemplarChoice>,
    /// Selected candidate per frame in `per_frame_only` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_frame_choices: Option<Vec<usize>>,
    #[serde(default)]
    pub output_manifest: Option<PathBuf>,
    #[serde(default)]
    pub metrics: Option<MetricReport>,
}

impl RunRecord {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::with_path(e, path))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(RUN_FILE);
        fs::write(&path, serde_json::to_string_pretty(self)?).map_err(|e| Error::with_path(e, &path))
    }

    /// Copy with timings zeroed, for comparing runs.
    pub fn without_timings(&self) -> Self {
        let mut r = self.clone();
        r.stages.iter_mut().for_each(|s| s.millis = 0.0);
        r
    }
}

/// Appends stage records and writes `run.json` after each one.
struct Recorder<'a> {
    record: RunRecord,
    dir: &'a Path,
}

impl Recorder<'_> {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f();
        let millis = start.elapsed().as_secs_f64() * 1e3;
        tracing::debug!(stage = name, millis, ok = out.is_ok(), "stage finished");
        let (status, error) = match &out {
            Ok(_) => (StageStatus::Completed, None),
            Err(e) => (StageStatus::Failed, Some(e.to_string())),
        };
        self.record.stages.push(StageRecord {
            stage: name.to_owned(),
            status,
            millis,
            error,
        });
        if status == StageStatus::Failed {
            self.record.status = StageStatus::Failed;
        }
        self.record.write(self.dir)?;
        out.map_err(|e| Error::Stage {
            stage: name.to_owned(),
            source: Box::new(e),
        })
    }
}

/// Models for combined selection, fitted on the grayscale input unless files are given.
pub fn bn_models(
    niqe: Option<&Path>,
    brisque: Option<&Path>,
    corpus: &[Frame],
) -> Result<(QualityModel, QualityModel)> {
    let n = match niqe {
        Some(p) => QualityModel::load(p)?,
        None => fit_quality_model(corpus)?,
    };
    let b = match brisque {
        Some(p) => QualityModel::load(p)?,
        None => fit_brisque_model(corpus)?,
    };
    Ok((n, b))
}

/// Selection strategy resolved from the config, ready to apply to candidate sets.
pub enum Selector {
    Scorer(Box<dyn QualityScorer>),
    Bn(QualityModel, QualityModel),
    Fixed(usize, FaceQualityProxy),
}

impl Selector {
    pub fn from_config(sel: &SelectionConfig, base: &Path, corpus: &[Frame], scratch: &Path) -> Result<Self> {
        Ok(match sel {
            SelectionConfig::Fiq { scorer: None, region } => {
                Selector::Scorer(Box::new(FaceQualityProxy { region: *region }))
            }
            SelectionConfig::Fiq { scorer: Some(cfg), .. } => {
                fs::create_dir_all(scratch).map_err(|e| Error::with_path(e, scratch))?;
                Selector::Scorer(Box::new(
                    ExternalScorer::new(cfg.clone()).with_scratch_dir(scratch.to_path_buf()),
                ))
            }
            SelectionConfig::Bn {
                niqe_model,
                brisque_model,
            } => {
                let (n, b) = bn_models(
                    niqe_model.as_ref().map(|p| resolve(base, p)).as_deref(),
                    brisque_model.as_ref().map(|p| resolve(base, p)).as_deref(),
                    corpus,
                )?;
                Selector::Bn(n, b)
            }
            SelectionConfig::FixedIndex { index } => Selector::Fixed(*index, FaceQualityProxy { region: None }),
        })
    }

    pub fn select(&self, cands: &CandidateSet) -> Result<ExemplarChoice> {
        match self {
            Selector::Scorer(s) => select_exemplar(cands, s.as_ref()),
            Selector::Bn(n, b) => select_exemplar_bn(cands, n, b),
            Selector::Fixed(k, proxy) => apply_override(&select_exemplar(cands, proxy)?, cands, *k),
        }
    }
}

fn generate(cfg: &PipelineConfig, gray: &Frame, caption: &str, seed: u64, work_dir: &Path) -> Result<CandidateSet> {
    match cfg.backends.get(&cfg.candidates.backend) {
        None => Ok(palette_colorize(gray, caption, cfg.candidates.count, seed)),
        Some(cmd) => external_candidates(work_dir, cmd, gray, caption, cfg.candidates.count, seed),
    }
}

/// Seed for frame `t` in per-frame mode, so frames draw independent candidates.
pub fn per_frame_seed(seed: u64, count: usize, t: usize) -> u64 {
    seed.wrapping_add((t * count) as u64)
}

/// Replaces each pixel's luma with the grayscale input's, keeping its chroma.
fn restore_luma(gray: &Frame, colour: &Frame) -> Result<Frame> {
    gray.same_dims(colour)?;
    let pixels = gray
        .pixels()
        .iter()
        .zip(colour.pixels())
        .map(|(g, c)| with_luma(g.luma(), [c.r as f64, c.g as f64, c.b as f64]))
        .collect();
    Frame::new(gray.width(), gray.height(), pixels)
}

fn write_candidates(set: &CandidateSet, dir: &Path) -> Result<()> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| Error::with_path(e, dir))?;
    }
    fs::create_dir_all(dir).map_err(|e| Error::with_path(e, dir))?;
    for (i, c) in set.candidates().iter().enumerate() {
        write_png(c, &dir.join(crate::backends::external::candidate_file_name(i)))?;
    }
    Ok(())
}

/// Runs the configured pipeline. Relative paths in `cfg` resolve against `base`.
///
/// `run.json` is rewritten after every stage, so a failed run leaves a record
/// naming the failing stage next to whatever outputs were already written.
pub fn run_pipeline(cfg: &PipelineConfig, base: &Path) -> Result<RunRecord> {
    cfg.validate()?;
    let out_dir = resolve(base, &cfg.output_dir);
    fs::create_dir_all(&out_dir).map_err(|e| Error::with_path(e, &out_dir))?;
    let mut rec = Recorder {
        record: RunRecord {
            config: cfg.clone(),
            caption: String::new(),
            status: StageStatus::Completed,
            stages: Vec::new(),
            exemplar: None,
            per_frame_choices: None,
            output_manifest: None,
            metrics: None,
        },
        dir: &out_dir,
    };

    let clip_path = resolve(base, &cfg.clip);
    let (manifest, input) = rec.stage("load", || load_clip_file(&clip_path))?;
    let (gray, truth) = rec.stage("desaturate", || {
        let truth = load_ground_truth(&manifest, manifest_path(&clip_path).parent().unwrap_or(Path::new(".")))?;
        if input.is_grayscale() {
            Ok((input.clone(), truth))
        } else {
            let gray = input.with_frames(input.frames().par_iter().map(desaturate).collect())?;
            Ok((gray, truth.or_else(|| Some(input.clone()))))
        }
    })?;
    let caption = cfg.caption.clone().or_else(|| gray.caption.clone()).unwrap_or_default();
    rec.record.caption = caption.clone();
    let work = out_dir.join("work");
    let scratch = work.join("scorer");

    let output = match cfg.ablation {
        Ablation::Full => {
            let idx = cfg.candidates.frame_index;
            let source = gray
                .frames()
                .get(idx)
                .ok_or(Error::IndexOutOfRange {
                    index: idx,
                    len: gray.len(),
                })
                .map_err(|e| Error::Config(e.to_string()))?;
            let cands = rec.stage("candidates", || {
                let set = generate(cfg, source, &caption, cfg.candidates.seed, &work.join("candidates"))?;
                write_candidates(&set, &out_dir.join(CANDIDATES_SUBDIR))?;
                Ok(set)
            })?;
            let choice = rec.stage("selection", || {
                let selector = Selector::from_config(&cfg.selection, base, gray.frames(), &scratch)?;
                let choice = selector.select(&cands)?;
                write_png(&choice.exemplar, &out_dir.join(EXEMPLAR_FILE))?;
                Ok(choice)
            })?;
            rec.record.exemplar = Some(choice.clone());
            rec.stage("propagation", || propagate(cfg, &gray, &choice.exemplar, &work))?
        }
        Ablation::NoExemplar => {
            let (w, h) = gray.dims();
            let neutral = Frame::filled(w, h, Pixel::gray(128));
            rec.stage("propagation", || propagate(cfg, &gray, &neutral, &work))?
        }
        Ablation::PerFrameOnly => {
            let (frames, choices) = rec.stage("per_frame", || {
                let selector = Selector::from_config(&cfg.selection, base, gray.frames(), &scratch)?;
                let mut frames = Vec::with_capacity(gray.len());
                let mut choices = Vec::with_capacity(gray.len());
                for (t, g) in gray.frames().iter().enumerate() {
                    let seed = per_frame_seed(cfg.candidates.seed, cfg.candidates.count, t);
                    let set = generate(cfg, g, &caption, seed, &work.join(format!("candidates_{t:06}")))?;
                    let choice = selector.select(&set)?;
                    frames.push(restore_luma(g, &choice.exemplar)?);
                    choices.push(choice.index);
                }
                Ok((frames, choices))
            })?;
            rec.record.per_frame_choices = Some(choices);
            gray.with_frames(frames)?
        }
    };

    let out_manifest = rec.stage("save", || {
        let dir = out_dir.join(OUTPUT_SUBDIR);
        save_clip_named(
            &output,
            &dir,
            Some(&format!("{}-{}", manifest.name, cfg.ablation.as_str())),
        )?;
        Ok(dir.join(crate::frame_io::MANIFEST_FILE))
    })?;
    rec.record.output_manifest = Some(out_manifest);

    if let Some(truth) = truth {
        let row = rec.stage("evaluate", || {
            evaluate_clips(cfg.ablation.as_str(), &output, &truth, &EvalFeatures::default())
        })?;
        rec.record.metrics = Some(MetricReport {
            dataset: manifest.name.clone(),
            rows: vec![row],
        });
        rec.record.write(&out_dir)?;
    }
    Ok(rec.record)
}

fn propagate(cfg: &PipelineConfig, gray: &Clip, exemplar: &Frame, work: &Path) -> Result<Clip> {
    match cfg.backends.get(&cfg.propagation.backend) {
        None => exemplar_propagate(gray, exemplar, cfg.propagation.alpha),
        Some(cmd) => external_propagate(&work.join("propagate"), cmd, gray, exemplar, cfg.propagation.alpha),
    }
}

/// Externally extracted features, as `(output, truth)` pairs. Missing pairs
/// fall back to the toy extractors.
#[derive(Debug, Clone, Default)]
pub struct EvalFeatures {
    pub frame: Option<(FeatureSet, FeatureSet)>,
    pub clip: Option<(FeatureSet, FeatureSet)>,
}

/// Mean PSNR and SSIM over frame pairs, FID over frame features, FVD over
/// windowed clip features.
pub fn evaluate_clips(method: &str, output: &Clip, truth: &Clip, feats: &EvalFeatures) -> Result<MetricRow> {
    if output.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "frame count mismatch: output has {}, truth has {}",
            output.len(),
            truth.len()
        )));
    }
    output.frames()[0].same_dims(&truth.frames()[0])?;
    let pairs: Vec<(Psnr, f64)> = output
        .frames()
        .par_iter()
        .zip(truth.frames().par_iter())
        .map(|(o, t)| Ok((psnr(o, t)?, ssim(o, t)?)))
        .collect::<Result<_>>()?;
    let psnrs: Vec<Psnr> = pairs.iter().map(|p| p.0).collect();
    let mean_ssim = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;

    let fid_value = match &feats.frame {
        Some((o, t)) => fid(t, o)?,
        None => fid(
            &toy_frame_feature_set(truth.frames())?,
            &toy_frame_feature_set(output.frames())?,
        )?,
    };
    let fvd_value = match &feats.clip {
        Some((o, t)) => fvd(t, o)?,
        None => {
            let window = fvd_window_len(output.len());
            fvd(
                &toy_clip_feature_set(&[truth], window)?,
                &toy_clip_feature_set(&[output], window)?,
            )?
        }
    };
    Ok(MetricRow {
        method: method.to_owned(),
        psnr: Psnr::mean(&psnrs),
        ssim: mean_ssim,
        fid: fid_value,
        fvd: fvd_value,
    })
}

/// Loads two clip manifests and evaluates one against the other.
pub fn evaluate_run(output: &Path, truth: &Path, feats: &EvalFeatures) -> Result<(ClipManifest, MetricRow)> {
    let (om, oc) = load_clip_file(output)?;
    let (_, tc) = load_clip_file(truth)?;
    let row = evaluate_clips(&om.name, &oc, &tc, feats)?;
    Ok((om, row))
}
