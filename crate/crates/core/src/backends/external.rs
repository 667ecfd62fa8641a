//! File protocol for out-of-process colorizers.
//!
//! The engine writes `job.json` and `input/frame_%06d.png` (plus `exemplar.png`
//! for propagator jobs) into a work directory, runs `<command...> job.json`
//! there, and reads back `output/candidate_%02d.png` or
//! `output/frame_%06d.png`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::palette::palette_colorize;
use super::propagate::{exemplar_propagate, DEFAULT_ALPHA};
use crate::color::Frame;
use crate::error::{Error, Result};
use crate::frame_io::{frame_file_name, read_png, write_png, Clip};
use crate::process::run_with_timeout;
use crate::selection::CandidateSet;

pub const JOB_FILE: &str = "job.json";
pub const EXEMPLAR_FILE: &str = "exemplar.png";
pub const DEFAULT_TIMEOUT_SECS: u64 = 600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendRole {
    CandidateGenerator,
    Propagator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendJob {
    pub role: BackendRole,
    pub work_dir: PathBuf,
    /// Relative to `work_dir`.
    pub input_frames: Vec<PathBuf>,
    #[serde(default)]
    pub caption: Option<String>,
    #[serde(default)]
    pub exemplar_path: Option<PathBuf>,
    pub candidate_count: usize,
    pub seed: u64,
    /// Temporal smoothing for propagator jobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl BackendJob {
    pub fn validate(&self) -> Result<()> {
        if self.input_frames.is_empty() {
            return Err(Error::InvalidInput("backend job has no input frames".into()));
        }
        match self.role {
            BackendRole::CandidateGenerator => {
                if self.caption.is_none() {
                    return Err(Error::InvalidInput("candidate_generator job requires a caption".into()));
                }
                if self.candidate_count == 0 {
                    return Err(Error::InvalidInput("candidate_count must be positive".into()));
                }
            }
            BackendRole::Propagator => {
                if self.exemplar_path.is_none() {
                    return Err(Error::InvalidInput("propagator job requires exemplar_path".into()));
                }
            }
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::with_path(e, path))?;
        let job: BackendJob = serde_json::from_str(&text)?;
        job.validate()?;
        Ok(job)
    }

    pub fn expected_outputs(&self) -> Vec<PathBuf> {
        match self.role {
            BackendRole::CandidateGenerator => (0..self.candidate_count)
                .map(|i| Path::new("output").join(candidate_file_name(i)))
                .collect(),
            BackendRole::Propagator => (0..self.input_frames.len())
                .map(|i| Path::new("output").join(frame_file_name(i)))
                .collect(),
        }
    }
}

pub fn candidate_file_name(i: usize) -> String {
    format!("candidate_{i:02}.png")
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_SECS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendCommand {
    /// Program and leading arguments; `job.json` is appended.
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BackendOutput {
    Candidates(CandidateSet),
    Frames(Vec<Frame>),
}

/// Lays out a work directory and writes `job.json`.
#[allow(clippy::too_many_arguments)]
pub fn prepare_job(
    work_dir: &Path,
    role: BackendRole,
    inputs: &[Frame],
    exemplar: Option<&Frame>,
    caption: Option<&str>,
    candidate_count: usize,
    seed: u64,
    alpha: Option<f64>,
) -> Result<BackendJob> {
    let input_dir = work_dir.join("input");
    let output_dir = work_dir.join("output");
    fs::create_dir_all(&input_dir).map_err(|e| Error::with_path(e, &input_dir))?;
    if output_dir.exists() {
        fs::remove_dir_all(&output_dir).map_err(|e| Error::with_path(e, &output_dir))?;
    }
    fs::create_dir_all(&output_dir).map_err(|e| Error::with_path(e, &output_dir))?;
    let mut input_frames = Vec::with_capacity(inputs.len());
    for (i, f) in inputs.iter().enumerate() {
        let rel = Path::new("input").join(frame_file_name(i));
        write_png(f, &work_dir.join(&rel))?;
        input_frames.push(rel);
    }
    let exemplar_path = match exemplar {
        Some(e) => {
            write_png(e, &work_dir.join(EXEMPLAR_FILE))?;
            Some(PathBuf::from(EXEMPLAR_FILE))
        }
        None => None,
    };
    let job = BackendJob {
        role,
        work_dir: work_dir.to_path_buf(),
        input_frames,
        caption: caption.map(str::to_owned),
        exemplar_path,
        candidate_count,
        seed,
        alpha,
    };
    job.validate()?;
    let path = work_dir.join(JOB_FILE);
    fs::write(&path, serde_json::to_string_pretty(&job)?).map_err(|e| Error::with_path(e, &path))?;
    Ok(job)
}

/// Runs an external backend on a prepared job and validates its outputs.
pub fn run_external_backend(job: &BackendJob, cmd: &BackendCommand) -> Result<BackendOutput> {
    job.validate()?;
    let mut argv = cmd.command.clone();
    argv.push(JOB_FILE.into());
    let out = run_with_timeout(&argv, Some(&job.work_dir), Duration::from_secs(cmd.timeout_secs))?;
    if !out.status.success() {
        return Err(Error::Backend(format!(
            "`{}` exited with {}: {}",
            cmd.command.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }

    let expected = job.expected_outputs();
    let missing: Vec<String> = expected
        .iter()
        .filter(|p| !job.work_dir.join(p).is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingOutput(format!(
            "{} of {} declared outputs missing: {}",
            missing.len(),
            expected.len(),
            missing.join(", ")
        )));
    }
    let dims = read_png(&job.work_dir.join(&job.input_frames[0]))?.dims();
    let frames = expected
        .iter()
        .map(|p| {
            let f = read_png(&job.work_dir.join(p))?;
            if f.dims() != dims {
                return Err(Error::DimensionMismatch {
                    path: p.clone(),
                    expected_w: dims.0,
                    expected_h: dims.1,
                    found_w: f.width(),
                    found_h: f.height(),
                });
            }
            Ok(f)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(match job.role {
        BackendRole::CandidateGenerator => {
            let seeds = (0..frames.len())
                .map(|k| super::palette::candidate_seed(job.seed, k))
                .collect();
            let source = format!("external:{}", cmd.command.first().map_or("", String::as_str));
            BackendOutput::Candidates(CandidateSet::new(frames, source, seeds)?)
        }
        BackendRole::Propagator => BackendOutput::Frames(frames),
    })
}

/// Generates candidates for `gray` through an external backend.
pub fn external_candidates(
    work_dir: &Path,
    cmd: &BackendCommand,
    gray: &Frame,
    caption: &str,
    n: usize,
    seed: u64,
) -> Result<CandidateSet> {
    let job = prepare_job(
        work_dir,
        BackendRole::CandidateGenerator,
        std::slice::from_ref(gray),
        None,
        Some(caption),
        n,
        seed,
        None,
    )?;
    match run_external_backend(&job, cmd)? {
        BackendOutput::Candidates(c) => Ok(c),
        BackendOutput::Frames(_) => unreachable!("generator job yields candidates"),
    }
}

/// Propagates an exemplar over `gray` through an external backend.
pub fn external_propagate(
    work_dir: &Path,
    cmd: &BackendCommand,
    gray: &Clip,
    exemplar: &Frame,
    alpha: f64,
) -> Result<Clip> {
    let job = prepare_job(
        work_dir,
        BackendRole::Propagator,
        gray.frames(),
        Some(exemplar),
        None,
        0,
        0,
        Some(alpha),
    )?;
    match run_external_backend(&job, cmd)? {
        BackendOutput::Frames(f) => gray.with_frames(f),
        BackendOutput::Candidates(_) => unreachable!("propagator job yields frames"),
    }
}

/// Executes a job with the built-in backends, as an external process would.
///
/// `job_path` is resolved against the current directory; inputs and outputs
/// are resolved against the job file's directory.
pub fn run_builtin_job(job_path: &Path) -> Result<()> {
    let job = BackendJob::read(job_path)?;
    let base = job_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let out_dir = base.join("output");
    fs::create_dir_all(&out_dir).map_err(|e| Error::with_path(e, &out_dir))?;
    let inputs = job
        .input_frames
        .iter()
        .map(|p| read_png(&base.join(p)))
        .collect::<Result<Vec<_>>>()?;
    match job.role {
        BackendRole::CandidateGenerator => {
            let set = palette_colorize(
                &inputs[0],
                job.caption.as_deref().unwrap_or_default(),
                job.candidate_count,
                job.seed,
            );
            for (i, c) in set.candidates().iter().enumerate() {
                write_png(c, &out_dir.join(candidate_file_name(i)))?;
            }
        }
        BackendRole::Propagator => {
            let exemplar = read_png(&base.join(job.exemplar_path.as_ref().expect("validated")))?;
            let clip = Clip::new(inputs, 25.0, None)?;
            let out = exemplar_propagate(&clip, &exemplar, job.alpha.unwrap_or(DEFAULT_ALPHA))?;
            for (i, f) in out.frames().iter().enumerate() {
                write_png(f, &out_dir.join(frame_file_name(i)))?;
            }
        }
    }
    Ok(())
}
