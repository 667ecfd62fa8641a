//! Controllable exemplar-based colorization of speaker videos.
//!
//! A grayscale clip and a caption produce a set of candidate exemplars; the
//! best one by normalized quality score is propagated over the clip. The
//! crate also carries the evaluation metrics (PSNR, SSIM, Fréchet distances,
//! survey tallies) used to compare colorizers.

pub mod backends;
pub mod color;
pub mod error;
pub mod filter;
pub mod frame_io;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod process;
pub mod quality;
pub mod selection;
pub mod synthetic;

pub use color::{desaturate, lab_to_rgb, rgb_to_lab, srgb_to_linear, Frame, LabPixel, Pixel};
pub use error::{Error, Result};
pub use frame_io::{load_clip, resize, save_clip, Clip, ClipManifest};
pub use metrics::{FeatureSet, MetricReport, MetricRow, Psnr, SurveyTally};
pub use pipeline::{run_pipeline, Ablation, PipelineConfig, RunRecord};
pub use selection::{
    apply_override, normalize_scores, select_exemplar, select_exemplar_bn, CandidateSet, ExemplarChoice,
    SelectionMethod,
};
