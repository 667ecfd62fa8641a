//! Caption-driven candidate generation.
//!
//! Colour words in the caption are paired with the object word that follows
//! them; objects map to luminance bands (clothing to mid tones, backgrounds to
//! both extremes, hair to shadows, skin to highlights). Each band receives the
//! hue of its most specific rule. Candidates after the first jitter hue and
//! saturation with a seeded generator, so a `(caption, n, seed)` triple always
//! reproduces the same set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::color::{lab_to_rgb, rgb_to_lab, Frame, Pixel};
use crate::selection::CandidateSet;

pub const PALETTE_SOURCE: &str = "palette";

/// Lab chroma of a saturation-1.0 rule.
pub const BASE_CHROMA: f64 = 45.0;
const HUE_JITTER_DEG: f64 = 25.0;
const SAT_JITTER: (f64, f64) = (0.6, 1.4);
const SEPIA: (f64, f64) = (35.0, 0.35);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    All,
    /// Dark and bright tones together.
    Extreme,
    Dark,
    Mid,
    Bright,
}

impl Band {
    /// Band of an 8-bit gray level: dark below 85, bright from 170.
    pub fn of_level(v: u8) -> Band {
        match v {
            0..=84 => Band::Dark,
            85..=169 => Band::Mid,
            _ => Band::Bright,
        }
    }

    fn covers(self, level_band: Band) -> bool {
        match self {
            Band::All => true,
            Band::Extreme => matches!(level_band, Band::Dark | Band::Bright),
            b => b == level_band,
        }
    }

    fn specificity(self) -> u8 {
        match self {
            Band::All => 0,
            Band::Extreme => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaletteRule {
    /// HSV-style hue in degrees: red 0, green 120, blue 240.
    pub hue_deg: f64,
    /// Multiplier on [`BASE_CHROMA`].
    pub saturation: f64,
    pub band: Band,
}

const COLORS: &[(&str, f64, f64)] = &[
    ("red", 0.0, 1.0),
    ("orange", 30.0, 1.0),
    ("yellow", 60.0, 1.0),
    ("gold", 50.0, 0.8),
    ("lime", 90.0, 1.0),
    ("green", 120.0, 1.0),
    ("teal", 165.0, 0.8),
    ("cyan", 180.0, 1.0),
    ("turquoise", 175.0, 0.9),
    ("blue", 240.0, 1.0),
    ("navy", 235.0, 0.7),
    ("purple", 275.0, 1.0),
    ("violet", 275.0, 1.0),
    ("magenta", 300.0, 1.0),
    ("pink", 330.0, 0.7),
    ("brown", 25.0, 0.5),
    ("beige", 38.0, 0.3),
    ("tan", 32.0, 0.4),
    ("white", 0.0, 0.0),
    ("black", 0.0, 0.0),
    ("gray", 0.0, 0.0),
    ("grey", 0.0, 0.0),
];

const OBJECTS: &[(&str, Band)] = &[
    ("background", Band::Extreme),
    ("backdrop", Band::Extreme),
    ("wall", Band::Extreme),
    ("top", Band::Mid),
    ("shirt", Band::Mid),
    ("t-shirt", Band::Mid),
    ("jacket", Band::Mid),
    ("sweater", Band::Mid),
    ("jumper", Band::Mid),
    ("dress", Band::Mid),
    ("suit", Band::Mid),
    ("blouse", Band::Mid),
    ("clothes", Band::Mid),
    ("clothing", Band::Mid),
    ("hair", Band::Dark),
    ("beard", Band::Dark),
    ("face", Band::Bright),
    ("skin", Band::Bright),
];

/// How many words may separate a colour word from its object.
const OBJECT_LOOKAHEAD: usize = 2;

fn tokens(caption: &str) -> Vec<String> {
    caption
        .split(|c: char| !(c.is_ascii_alphabetic() || c == '-'))
        .filter(|t| !t.is_empty())
        .map(str::to_ascii_lowercase)
        .collect()
}

/// Parses a caption into colour rules, in caption order.
pub fn caption_rules(caption: &str) -> Vec<PaletteRule> {
    let toks = tokens(caption);
    let mut rules = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        let Some(&(_, hue, sat)) = COLORS.iter().find(|c| c.0 == t) else {
            continue;
        };
        let band = toks[i + 1..]
            .iter()
            .take(OBJECT_LOOKAHEAD)
            .take_while(|n| !COLORS.iter().any(|c| &c.0 == n))
            .find_map(|n| OBJECTS.iter().find(|o| o.0 == *n).map(|o| o.1))
            .unwrap_or(Band::All);
        rules.push(PaletteRule {
            hue_deg: hue,
            saturation: sat,
            band,
        });
    }
    if rules.is_empty() && !toks.is_empty() {
        rules.push(PaletteRule {
            hue_deg: SEPIA.0,
            saturation: SEPIA.1,
            band: Band::All,
        });
    }
    rules
}

/// The rule that colours a given level band: most specific wins, then earliest.
pub fn rule_for(rules: &[PaletteRule], level_band: Band) -> Option<&PaletteRule> {
    rules
        .iter()
        .filter(|r| r.band.covers(level_band))
        .fold(None, |best: Option<&PaletteRule>, r| match best {
            Some(b) if b.band.specificity() >= r.band.specificity() => Some(b),
            _ => Some(r),
        })
}

fn hsv_hue_rgb(hue_deg: f64) -> Pixel {
    let h = hue_deg.rem_euclid(360.0) / 60.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let q = |v: f64| crate::color::quantize(v * 255.0);
    Pixel::new(q(r), q(g), q(b))
}

/// Lab `(a, b)` for a hue and saturation.
pub fn rule_chroma(hue_deg: f64, saturation: f64) -> (f64, f64) {
    if saturation <= 0.0 {
        return (0.0, 0.0);
    }
    let lab = rgb_to_lab(hsv_hue_rgb(hue_deg));
    let c = lab.chroma();
    let m = BASE_CHROMA * saturation / c;
    (lab.a * m, lab.b * m)
}

/// Colours a gray frame with per-level chroma. Zero chroma leaves the pixel untouched.
pub(crate) fn apply_level_chroma(gray: &Frame, chroma: &[(f64, f64); 256]) -> Frame {
    let mut lut = [Pixel::default(); 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        let g = Pixel::gray(v as u8);
        let (a, b) = chroma[v];
        *slot = if a == 0.0 && b == 0.0 {
            g
        } else {
            let l = rgb_to_lab(g).l;
            lab_to_rgb(crate::color::LabPixel::new(l, a, b)).pixel
        };
    }
    let pixels = gray.pixels().iter().map(|p| lut[p.luma() as usize]).collect();
    Frame::new(gray.width(), gray.height(), pixels).expect("same dimensions")
}

fn candidate_chroma(rules: &[PaletteRule], rng: Option<&mut ChaCha8Rng>) -> [(f64, f64); 256] {
    let mut jittered: Vec<PaletteRule> = rules.to_vec();
    if let Some(rng) = rng {
        for r in &mut jittered {
            r.hue_deg += rng.gen_range(-HUE_JITTER_DEG..=HUE_JITTER_DEG);
            r.saturation *= rng.gen_range(SAT_JITTER.0..=SAT_JITTER.1);
        }
    }
    let per_band: Vec<(Band, (f64, f64))> = [Band::Dark, Band::Mid, Band::Bright]
        .into_iter()
        .map(|b| {
            let c = rule_for(&jittered, b)
                .map(|r| rule_chroma(r.hue_deg, r.saturation))
                .unwrap_or((0.0, 0.0));
            (b, c)
        })
        .collect();
    let mut out = [(0.0, 0.0); 256];
    for (v, slot) in out.iter_mut().enumerate() {
        let band = Band::of_level(v as u8);
        *slot = per_band.iter().find(|(b, _)| *b == band).map(|p| p.1).unwrap();
    }
    out
}

/// Per-candidate seeds recorded in the candidate set.
pub fn candidate_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add(k as u64)
}

/// Generates `n` candidate colourizations of `gray` guided by `caption`.
///
/// Candidate 0 is the literal reading of the caption; the others are jittered.
pub fn palette_colorize(gray: &Frame, caption: &str, n: usize, seed: u64) -> CandidateSet {
    assert!(n >= 1, "candidate count must be positive");
    let rules = caption_rules(caption);
    let frames = (0..n)
        .map(|k| {
            let chroma = if k == 0 {
                candidate_chroma(&rules, None)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(candidate_seed(seed, k));
                candidate_chroma(&rules, Some(&mut rng))
            };
            apply_level_chroma(gray, &chroma)
        })
        .collect();
    let seeds = (0..n).map(|k| candidate_seed(seed, k)).collect();
    CandidateSet::new(frames, PALETTE_SOURCE, seeds).expect("uniform non-empty set")
}
