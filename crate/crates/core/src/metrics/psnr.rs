use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::color::Frame;
use crate::error::Result;

/// Peak signal-to-noise ratio in decibels. Identical inputs give
/// `f64::INFINITY`, which serializes as the string `"inf"` and orders above
/// every finite value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Psnr(pub f64);

impl Psnr {
    pub const INFINITE: Psnr = Psnr(f64::INFINITY);

    pub fn is_infinite(&self) -> bool {
        self.0 == f64::INFINITY
    }

    /// Mean over frames. Exact frames carry no finite value, so the mean is
    /// taken over the finite members; it is infinite only if every frame is exact.
    pub fn mean(values: &[Psnr]) -> Psnr {
        let finite: Vec<f64> = values.iter().filter(|v| !v.is_infinite()).map(|v| v.0).collect();
        if finite.is_empty() {
            return Psnr::INFINITE;
        }
        Psnr(finite.iter().sum::<f64>() / finite.len() as f64)
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{:.4}", self.0)
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Psnr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Psnr(v)),
            Raw::Text(t) if t == "inf" => Ok(Psnr::INFINITE),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("invalid PSNR `{t}`"))),
        }
    }
}

/// `10 log10(255² / MSE)` over all three channels.
pub fn psnr(a: &Frame, b: &Frame) -> Result<Psnr> {
    a.same_dims(b)?;
    let sse: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(p, q)| {
            p.channels()
                .iter()
                .zip(q.channels())
                .map(|(&x, y)| {
                    let d = x as i64 - y as i64;
                    (d * d) as u64
                })
                .sum::<u64>()
        })
        .sum();
    if sse == 0 {
        return Ok(Psnr::INFINITE);
    }
    let mse = sse as f64 / (a.pixels().len() * 3) as f64;
    Ok(Psnr(10.0 * (255.0f64 * 255.0 / mse).log10()))
}
