use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Polarity, QualityScore, QualityScorer};
use crate::color::Frame;
use crate::error::Result;
use crate::frame_io::write_png;
use crate::process::run_with_timeout;

fn default_timeout() -> u64 {
    60
}

/// An executable invoked as `<command...> score <frame.png>` that prints one
/// decimal number and exits 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalScorerConfig {
    pub id: String,
    pub command: Vec<String>,
    pub polarity: Polarity,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

pub struct ExternalScorer {
    pub config: ExternalScorerConfig,
    scratch: PathBuf,
}

impl ExternalScorer {
    pub fn new(config: ExternalScorerConfig) -> Self {
        Self {
            config,
            scratch: std::env::temp_dir(),
        }
    }

    pub fn with_scratch_dir(mut self, dir: PathBuf) -> Self {
        self.scratch = dir;
        self
    }

    /// Runs the scorer on an existing PNG file.
    pub fn score_file(&self, png: &std::path::Path) -> std::result::Result<f64, String> {
        let mut argv = self.config.command.clone();
        argv.push("score".into());
        argv.push(png.display().to_string());
        let out =
            run_with_timeout(&argv, None, Duration::from_secs(self.config.timeout_secs)).map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "exit status {}: {}",
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            ));
        }
        let text = String::from_utf8_lossy(&out.stdout);
        let v: f64 = text
            .trim()
            .parse()
            .map_err(|_| format!("unparseable score output `{}`", text.trim()))?;
        if !v.is_finite() {
            return Err(format!("non-finite score `{}`", text.trim()));
        }
        Ok(v)
    }
}

static COUNTER: AtomicU64 = AtomicU64::new(0);

impl QualityScorer for ExternalScorer {
    fn id(&self) -> &str {
        &self.config.id
    }

    fn polarity(&self) -> Polarity {
        self.config.polarity
    }

    fn score(&self, frame: &Frame) -> Result<QualityScore> {
        let n = COUNTER.fetch_add(1, Ordering::Relaxed);
        let path = self.scratch.join(format!("ccol-score-{}-{n}.png", std::process::id()));
        write_png(frame, &path)?;
        let result = self.score_file(&path);
        let _ = std::fs::remove_file(&path);
        let value = result.map_err(crate::error::Error::Backend)?;
        QualityScore::new(value, self.config.polarity, self.config.id.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::Pixel;

    fn scorer(script: &str) -> ExternalScorer {
        ExternalScorer::new(ExternalScorerConfig {
            id: "serfiq".into(),
            command: vec!["sh".into(), "-c".into(), script.into(), "scorer".into()],
            polarity: Polarity::HigherIsBetter,
            timeout_secs: 10,
        })
    }

    #[test]
    fn passthrough() {
        // $1 is "score", $2 the frame path.
        let s = scorer(r#"test "$1" = score && test -f "$2" && echo 0.73"#);
        let q = s.score(&Frame::filled(4, 4, Pixel::gray(3))).unwrap();
        assert_eq!(q, QualityScore::new(0.73, Polarity::HigherIsBetter, "serfiq").unwrap());
    }

    #[test]
    fn nonzero_exit_is_error() {
        let s = scorer("echo broken >&2; exit 3");
        assert!(s.score(&Frame::filled(4, 4, Pixel::gray(3))).is_err());
    }

    #[test]
    fn garbage_output_is_error() {
        let s = scorer("echo nope");
        assert!(s.score(&Frame::filled(4, 4, Pixel::gray(3))).is_err());
    }
}
