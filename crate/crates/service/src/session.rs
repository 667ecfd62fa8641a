//! Session records and the on-disk store. Every mutation rewrites
//! `session.json` atomically and appends to the session history.

use std::fs;
use std::path::{Path, PathBuf};

use ccol_core::backends::external::candidate_file_name;
use ccol_core::backends::palette::palette_colorize;
use ccol_core::backends::propagate::{exemplar_propagate, DEFAULT_ALPHA};
use ccol_core::color::desaturate;
use ccol_core::frame_io::{load_clip_file, load_ground_truth, manifest_path, read_png, save_clip, write_png, Clip};
use ccol_core::pipeline::{evaluate_clips, EvalFeatures};
use ccol_core::quality::{FaceQualityProxy, Polarity};
use ccol_core::selection::{apply_override, select_exemplar, CandidateSet, ExemplarChoice, SelectionMethod};
use ccol_core::{Frame, MetricReport};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

pub const SESSION_FILE: &str = "session.json";
const INPUT_DIR: &str = "input";
const TRUTH_DIR: &str = "truth";
const CANDIDATES_DIR: &str = "candidates";
const RESULTS_DIR: &str = "results";
const EXEMPLAR_FILE: &str = "exemplar.png";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Created,
    CandidatesReady,
    Propagated,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub caption: String,
    pub seed: u64,
    pub source: String,
    pub raw_scores: Vec<f64>,
    pub normalized_scores: Vec<f64>,
    pub scorer_id: String,
    pub polarity: Polarity,
    /// Index chosen automatically before any override.
    pub auto_index: usize,
}

impl CandidateSummary {
    pub fn len(&self) -> usize {
        self.raw_scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_scores.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultVersion {
    pub version: u32,
    pub alpha: f64,
    pub exemplar_index: usize,
    pub method: SelectionMethod,
    pub caption: String,
    pub frame_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Created {
        clip: PathBuf,
    },
    Caption {
        caption: String,
        candidate_count: usize,
        seed: u64,
    },
    Override {
        index: usize,
    },
    Propagate {
        alpha: f64,
        version: u32,
    },
    Failed {
        stage: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub seq: u64,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub clip: PathBuf,
    pub state: SessionState,
    pub frame_count: usize,
    pub width: u32,
    pub height: u32,
    pub has_truth: bool,
    pub captions: Vec<String>,
    pub candidates: Option<CandidateSummary>,
    pub exemplar: Option<ExemplarChoice>,
    pub results: Vec<ResultVersion>,
    pub failure: Option<Failure>,
    pub history: Vec<HistoryEntry>,
}

impl Session {
    fn push(&mut self, action: Action) {
        let seq = self.history.len() as u64;
        self.history.push(HistoryEntry { seq, action });
    }

    pub fn result(&self, version: u32) -> Option<&ResultVersion> {
        self.results.iter().find(|r| r.version == version)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptionRequest {
    pub caption: String,
    #[serde(default = "default_count")]
    pub candidate_count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_count() -> usize {
    8
}

/// Sessions stored as directories under `<root>/sessions`.
#[derive(Debug, Clone)]
pub struct SessionStore {
    root: PathBuf,
}

fn io_err(e: impl std::fmt::Display) -> ApiError {
    ApiError::internal(e.to_string())
}

impl SessionStore {
    pub fn open(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root.join("sessions"))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn dir(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(id)
    }

    /// Ids currently on disk, sorted.
    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = fs::read_dir(self.root.join("sessions"))
            .into_iter()
            .flatten()
            .flatten()
            .filter(|e| e.path().join(SESSION_FILE).is_file())
            .filter_map(|e| e.file_name().to_str().map(str::to_owned))
            .collect();
        ids.sort();
        ids
    }

    fn next_id(&self) -> String {
        let max = fs::read_dir(self.root.join("sessions"))
            .into_iter()
            .flatten()
            .flatten()
            .filter_map(|e| {
                e.file_name()
                    .to_str()
                    .and_then(|s| s.strip_prefix('s')?.parse::<u64>().ok())
            })
            .max()
            .unwrap_or(0);
        format!("s{:06}", max + 1)
    }

    fn valid_id(id: &str) -> bool {
        !id.is_empty() && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
    }

    pub fn load(&self, id: &str) -> Result<Session, ApiError> {
        if !Self::valid_id(id) {
            return Err(ApiError::not_found(format!("no session `{id}`")));
        }
        let path = self.dir(id).join(SESSION_FILE);
        let text = fs::read_to_string(&path).map_err(|_| ApiError::not_found(format!("no session `{id}`")))?;
        serde_json::from_str(&text).map_err(io_err)
    }

    pub fn save(&self, s: &Session) -> Result<(), ApiError> {
        let dir = self.dir(&s.id);
        let tmp = dir.join(format!("{SESSION_FILE}.tmp"));
        fs::write(&tmp, serde_json::to_string_pretty(s).map_err(io_err)?).map_err(io_err)?;
        fs::rename(&tmp, dir.join(SESSION_FILE)).map_err(io_err)
    }

    /// Loads the referenced clip, stores its grayscale version (and the colour
    /// original as ground truth), and writes a fresh session. Id allocation
    /// must be serialized by the caller.
    pub fn create(&self, clip_ref: &Path) -> Result<Session, ApiError> {
        let (manifest, clip) = load_clip_file(clip_ref).map_err(|e| ApiError::unprocessable(e.to_string()))?;
        let base = manifest_path(clip_ref);
        let truth = load_ground_truth(&manifest, base.parent().unwrap_or(Path::new(".")))
            .map_err(|e| ApiError::unprocessable(e.to_string()))?;
        let (gray, truth) = if clip.is_grayscale() {
            (clip, truth)
        } else {
            let gray = clip
                .with_frames(clip.frames().iter().map(desaturate).collect())
                .map_err(io_err)?;
            (gray, truth.or(Some(clip)))
        };
        let id = self.next_id();
        let dir = self.dir(&id);
        save_clip(&gray, &dir.join(INPUT_DIR)).map_err(io_err)?;
        if let Some(t) = &truth {
            save_clip(t, &dir.join(TRUTH_DIR)).map_err(io_err)?;
        }
        let (width, height) = gray.dims();
        let mut s = Session {
            id,
            clip: clip_ref.to_path_buf(),
            state: SessionState::Created,
            frame_count: gray.len(),
            width,
            height,
            has_truth: truth.is_some(),
            captions: Vec::new(),
            candidates: None,
            exemplar: None,
            results: Vec::new(),
            failure: None,
            history: Vec::new(),
        };
        s.push(Action::Created {
            clip: clip_ref.to_path_buf(),
        });
        self.save(&s)?;
        Ok(s)
    }

    pub fn input(&self, id: &str) -> Result<Clip, ApiError> {
        Ok(load_clip_file(&self.dir(id).join(INPUT_DIR)).map_err(io_err)?.1)
    }

    fn truth(&self, id: &str) -> Result<Option<Clip>, ApiError> {
        let dir = self.dir(id).join(TRUTH_DIR);
        if !dir.exists() {
            return Ok(None);
        }
        Ok(Some(load_clip_file(&dir).map_err(io_err)?.1))
    }

    pub fn candidate_path(&self, id: &str, i: usize) -> PathBuf {
        self.dir(id).join(CANDIDATES_DIR).join(candidate_file_name(i))
    }

    pub fn exemplar_path(&self, id: &str) -> PathBuf {
        self.dir(id).join(EXEMPLAR_FILE)
    }

    pub fn input_frame_path(&self, id: &str, i: usize) -> PathBuf {
        self.dir(id)
            .join(INPUT_DIR)
            .join(ccol_core::frame_io::frame_file_name(i))
    }

    pub fn result_dir(&self, id: &str, version: u32) -> PathBuf {
        self.dir(id).join(RESULTS_DIR).join(format!("v{version:04}"))
    }

    pub fn result_frame_path(&self, id: &str, version: u32, i: usize) -> PathBuf {
        self.result_dir(id, version)
            .join(ccol_core::frame_io::frame_file_name(i))
    }

    fn candidates(&self, s: &Session) -> Result<CandidateSet, ApiError> {
        let summary = s
            .candidates
            .as_ref()
            .ok_or_else(|| ApiError::conflict("no candidates yet; post a caption first"))?;
        let frames = (0..summary.len())
            .map(|i| read_png(&self.candidate_path(&s.id, i)))
            .collect::<ccol_core::Result<Vec<Frame>>>()
            .map_err(io_err)?;
        let seeds = (0..summary.len() as u64)
            .map(|k| summary.seed.wrapping_add(k))
            .collect();
        CandidateSet::new(frames, summary.source.clone(), seeds).map_err(io_err)
    }

    fn fail(&self, s: &mut Session, stage: &str, message: String) -> ApiError {
        s.state = SessionState::Failed;
        s.failure = Some(Failure {
            stage: stage.to_owned(),
            message: message.clone(),
        });
        s.push(Action::Failed {
            stage: stage.to_owned(),
            message: message.clone(),
        });
        if let Err(e) = self.save(s) {
            return e;
        }
        ApiError::failed(stage, message)
    }

    /// Generates and scores candidates for the first input frame.
    pub fn caption(&self, s: &mut Session, req: &CaptionRequest) -> Result<(), ApiError> {
        if req.candidate_count == 0 || req.candidate_count > 99 {
            return Err(ApiError::unprocessable("candidate_count must lie in 1..=99"));
        }
        let input = self.input(&s.id)?;
        let (set, choice) = match generate(&input, &req.caption, req.candidate_count, req.seed) {
            Ok(v) => v,
            Err(e) => return Err(self.fail(s, "candidates", e.to_string())),
        };
        let dir = self.dir(&s.id).join(CANDIDATES_DIR);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(io_err)?;
        }
        fs::create_dir_all(&dir).map_err(io_err)?;
        for (i, c) in set.candidates().iter().enumerate() {
            write_png(c, &dir.join(candidate_file_name(i))).map_err(io_err)?;
        }
        write_png(&choice.exemplar, &self.exemplar_path(&s.id)).map_err(io_err)?;
        s.candidates = Some(CandidateSummary {
            caption: req.caption.clone(),
            seed: req.seed,
            source: set.source.clone(),
            raw_scores: choice.raw_scores.clone(),
            normalized_scores: choice.normalized_scores.clone(),
            scorer_id: choice.scorer_id.clone(),
            polarity: choice.polarity,
            auto_index: choice.index,
        });
        s.captions.push(req.caption.clone());
        s.exemplar = Some(choice);
        s.state = SessionState::CandidatesReady;
        s.failure = None;
        s.push(Action::Caption {
            caption: req.caption.clone(),
            candidate_count: req.candidate_count,
            seed: req.seed,
        });
        self.save(s)
    }

    /// Replaces the exemplar with a human pick.
    pub fn override_exemplar(&self, s: &mut Session, index: usize) -> Result<(), ApiError> {
        let current = s
            .exemplar
            .clone()
            .ok_or_else(|| ApiError::conflict("no candidates yet; post a caption first"))?;
        let set = self.candidates(s)?;
        if index >= set.len() {
            return Err(ApiError::unprocessable(format!(
                "index {index} out of range for {} candidates",
                set.len()
            )));
        }
        let auto = ExemplarChoice {
            index: s.candidates.as_ref().map_or(current.index, |c| c.auto_index),
            ..current
        };
        let choice = apply_override(&auto, &set, index).map_err(io_err)?;
        write_png(&choice.exemplar, &self.exemplar_path(&s.id)).map_err(io_err)?;
        s.exemplar = Some(choice);
        s.state = SessionState::CandidatesReady;
        s.failure = None;
        s.push(Action::Override { index });
        self.save(s)
    }

    /// Propagates the current exemplar into a new result version.
    pub fn propagate(&self, s: &mut Session, alpha: f64) -> Result<u32, ApiError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(ApiError::unprocessable(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        let choice = s
            .exemplar
            .clone()
            .ok_or_else(|| ApiError::conflict("no exemplar yet; post a caption first"))?;
        let exemplar = read_png(&self.exemplar_path(&s.id)).map_err(io_err)?;
        let input = self.input(&s.id)?;
        let out = match exemplar_propagate(&input, &exemplar, alpha) {
            Ok(c) => c,
            Err(e) => return Err(self.fail(s, "propagation", e.to_string())),
        };
        let version = s.results.iter().map(|r| r.version).max().unwrap_or(0) + 1;
        save_clip(&out, &self.result_dir(&s.id, version)).map_err(io_err)?;
        s.results.push(ResultVersion {
            version,
            alpha,
            exemplar_index: choice.index,
            method: choice.method,
            caption: s.captions.last().cloned().unwrap_or_default(),
            frame_count: out.len(),
        });
        s.state = SessionState::Propagated;
        s.failure = None;
        s.push(Action::Propagate { alpha, version });
        self.save(s)?;
        Ok(version)
    }

    pub fn result_clip(&self, s: &Session, version: u32) -> Result<Clip, ApiError> {
        s.result(version)
            .ok_or_else(|| ApiError::not_found(format!("no result version {version}")))?;
        Ok(load_clip_file(&self.result_dir(&s.id, version)).map_err(io_err)?.1)
    }

    /// One row per result version against the stored ground truth.
    pub fn metrics(&self, s: &Session) -> Result<MetricReport, ApiError> {
        let truth = self
            .truth(&s.id)?
            .ok_or_else(|| ApiError::conflict("session has no ground truth"))?;
        let rows = s
            .results
            .iter()
            .map(|r| {
                let out = self.result_clip(s, r.version)?;
                evaluate_clips(&format!("v{}", r.version), &out, &truth, &EvalFeatures::default())
                    .map_err(|e| ApiError::unprocessable(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MetricReport {
            dataset: s.id.clone(),
            rows,
        })
    }
}

fn generate(input: &Clip, caption: &str, n: usize, seed: u64) -> ccol_core::Result<(CandidateSet, ExemplarChoice)> {
    let set = palette_colorize(&input.frames()[0], caption, n, seed);
    let choice = select_exemplar(&set, &FaceQualityProxy { region: None })?;
    Ok((set, choice))
}

/// Rebuilds every result version from the session history alone.
pub fn replay(input: &Clip, history: &[HistoryEntry]) -> ccol_core::Result<Vec<(u32, Clip)>> {
    let mut set: Option<CandidateSet> = None;
    let mut auto: Option<ExemplarChoice> = None;
    let mut current: Option<ExemplarChoice> = None;
    let mut out = Vec::new();
    for h in history {
        match &h.action {
            Action::Caption {
                caption,
                candidate_count,
                seed,
            } => {
                let (s, c) = generate(input, caption, *candidate_count, *seed)?;
                set = Some(s);
                auto = Some(c.clone());
                current = Some(c);
            }
            Action::Override { index } => {
                let (s, a) = (set.as_ref(), auto.as_ref());
                if let (Some(s), Some(a)) = (s, a) {
                    current = Some(apply_override(a, s, *index)?);
                }
            }
            Action::Propagate { alpha, version } => {
                if let Some(c) = &current {
                    out.push((*version, exemplar_propagate(input, &c.exemplar, *alpha)?));
                }
            }
            Action::Created { .. } | Action::Failed { .. } => {}
        }
    }
    Ok(out)
}

pub fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}
