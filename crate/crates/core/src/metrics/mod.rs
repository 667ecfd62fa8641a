//! Evaluation metrics: PSNR, SSIM, Fréchet distances over feature sets, and
//! survey tallies.

pub mod features;
pub mod frechet;
pub mod mos;
pub mod psnr;
pub mod report;
pub mod ssim;

pub use features::{
    clip_windows, fid, fvd, fvd_window_len, toy_clip_feature_set, toy_clip_features, toy_frame_feature_set,
    toy_frame_features, FeatureSet, FeatureUnit,
};
pub use frechet::{frechet_distance, GaussianSummary, FRECHET_EPS};
pub use mos::{mos_tally, parse_votes, read_votes, tally_table, tally_votes, SurveyTally, Vote};
pub use psnr::{psnr, Psnr};
pub use report::{MetricReport, MetricRow};
pub use ssim::ssim;
