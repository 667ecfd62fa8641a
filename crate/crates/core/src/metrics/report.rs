use std::path::Path;

use serde::{Deserialize, Serialize};

use super::psnr::Psnr;
use crate::error::{Error, Result};

/// One method's averages over a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub method: String,
    pub psnr: Psnr,
    pub ssim: f64,
    pub fid: f64,
    pub fvd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub dataset: String,
    pub rows: Vec<MetricRow>,
}

impl MetricReport {
    pub fn validate(&self) -> Result<()> {
        for r in &self.rows {
            let finite = [r.ssim, r.fid, r.fvd].iter().all(|v| v.is_finite());
            if !finite || r.psnr.0.is_nan() || r.psnr.0 == f64::NEG_INFINITY {
                return Err(Error::InvalidInput(format!("non-finite metric in row `{}`", r.method)));
            }
        }
        Ok(())
    }

    /// Column-aligned table: method, PSNR, SSIM, FID, FVD.
    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.method.len()).max().unwrap_or(0).max(6);
        let mut out = format!("dataset: {}\n", self.dataset);
        out.push_str(&format!(
            "{:<width$}  {:>10}  {:>8}  {:>12}  {:>12}\n",
            "method", "PSNR", "SSIM", "FID", "FVD"
        ));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<width$}  {:>10}  {:>8.4}  {:>12.4}  {:>12.4}\n",
                r.method,
                r.psnr.to_string(),
                r.ssim,
                r.fid,
                r.fvd
            ));
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::with_path(e, path))?;
        let r: Self = serde_json::from_str(&text)?;
        r.validate()?;
        Ok(r)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::with_path(e, path))
    }
}
