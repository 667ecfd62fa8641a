//! Exemplar selection: score every candidate, orient scores so that lower is
//! better, min-max normalize over the candidate set and take the minimum.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::Frame;
use crate::error::{Error, Result};
use crate::quality::{
    brisque_features, brisque_score, niqe_score, Polarity, QualityModel, QualityScore, QualityScorer,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    candidates: Vec<Frame>,
    pub source: String,
    pub seed_info: Vec<u64>,
}

impl CandidateSet {
    pub fn new(candidates: Vec<Frame>, source: impl Into<String>, seed_info: Vec<u64>) -> Result<Self> {
        let first = candidates
            .first()
            .ok_or_else(|| Error::InvalidInput("candidate set is empty".into()))?;
        for c in &candidates[1..] {
            first.same_dims(c)?;
        }
        if seed_info.len() != candidates.len() {
            return Err(Error::InvalidInput(format!(
                "{} seeds for {} candidates",
                seed_info.len(),
                candidates.len()
            )));
        }
        Ok(Self {
            candidates,
            source: source.into(),
            seed_info,
        })
    }

    pub fn candidates(&self) -> &[Frame] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn get(&self, i: usize) -> Result<&Frame> {
        self.candidates.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.candidates.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMethod {
    Fiq,
    Bn,
    HumanOverride,
}

/// Per-candidate NIQE and BRISQUE scores behind a combined selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedComponents {
    pub niqe_raw: Vec<f64>,
    pub niqe_normalized: Vec<f64>,
    pub brisque_raw: Vec<f64>,
    pub brisque_normalized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarChoice {
    pub index: usize,
    /// The chosen frame. Not serialized; run records store it as a PNG.
    #[serde(skip)]
    pub exemplar: Frame,
    pub raw_scores: Vec<f64>,
    pub normalized_scores: Vec<f64>,
    pub method: SelectionMethod,
    #[serde(default)]
    pub overridden_from: Option<usize>,
    pub scorer_id: String,
    pub polarity: Polarity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<CombinedComponents>,
}

/// Min-max normalization into `[0, 1]`; an all-equal input maps to 0.5 everywhere.
pub fn normalize_scores(scores: &[f64]) -> Vec<f64> {
    let (min, max) = scores.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
        (lo.min(s), hi.max(s))
    });
    if max == min {
        return vec![0.5; scores.len()];
    }
    let range = max - min;
    scores.iter().map(|s| ((s - min) / range).clamp(0.0, 1.0)).collect()
}

/// Index of the smallest value; ties go to the lowest index.
pub fn argmin_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

fn score_all(cands: &CandidateSet, scorer: &dyn QualityScorer) -> Result<Vec<QualityScore>> {
    cands
        .candidates()
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            scorer.score(f).map_err(|e| Error::Scorer {
                scorer: scorer.id().to_owned(),
                candidate: i,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Selection over precomputed scores. Returns `(index, normalized oriented scores)`.
pub fn select_from_scores(scores: &[QualityScore]) -> (usize, Vec<f64>) {
    let oriented: Vec<f64> = scores.iter().map(QualityScore::oriented).collect();
    let normalized = normalize_scores(&oriented);
    (argmin_lowest(&normalized), normalized)
}

pub fn select_exemplar(cands: &CandidateSet, scorer: &dyn QualityScorer) -> Result<ExemplarChoice> {
    let scores = score_all(cands, scorer)?;
    let (index, normalized) = select_from_scores(&scores);
    Ok(ExemplarChoice {
        index,
        exemplar: cands.candidates()[index].clone(),
        raw_scores: scores.iter().map(|s| s.value).collect(),
        normalized_scores: normalized,
        method: SelectionMethod::Fiq,
        overridden_from: None,
        scorer_id: scorer.id().to_owned(),
        polarity: scorer.polarity(),
        components: None,
    })
}

/// Combined selection: `normalize(niqe) + normalize(brisque)`, minimized.
///
/// `raw_scores` holds the combined sums in `[0, 2]`; `normalized_scores` holds
/// them halved, which keeps ordering and ties bit-exact.
pub fn select_exemplar_bn(
    cands: &CandidateSet,
    niqe_model: &QualityModel,
    brisque_model: &QualityModel,
) -> Result<ExemplarChoice> {
    let per: Vec<(f64, f64)> = cands
        .candidates()
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let wrap = |scorer: &'static str| {
                move |e: Error| Error::Scorer {
                    scorer: scorer.to_owned(),
                    candidate: i,
                    reason: e.to_string(),
                }
            };
            let n = niqe_score(f, niqe_model).map_err(wrap("niqe"))?.value;
            let b = brisque_features(f)
                .and_then(|v| brisque_score(&v, brisque_model))
                .map_err(wrap("brisque"))?
                .value;
            Ok((n, b))
        })
        .collect::<Result<_>>()?;
    let niqe_raw: Vec<f64> = per.iter().map(|p| p.0).collect();
    let brisque_raw: Vec<f64> = per.iter().map(|p| p.1).collect();
    Ok(combine_bn(cands, niqe_raw, brisque_raw))
}

/// Combined selection over precomputed lower-is-better NIQE and BRISQUE scores.
pub fn combine_bn(cands: &CandidateSet, niqe_raw: Vec<f64>, brisque_raw: Vec<f64>) -> ExemplarChoice {
    let niqe_normalized = normalize_scores(&niqe_raw);
    let brisque_normalized = normalize_scores(&brisque_raw);
    let combined: Vec<f64> = niqe_normalized
        .iter()
        .zip(&brisque_normalized)
        .map(|(a, b)| a + b)
        .collect();
    let index = argmin_lowest(&combined);
    ExemplarChoice {
        index,
        exemplar: cands.candidates()[index].clone(),
        normalized_scores: combined.iter().map(|c| c / 2.0).collect(),
        raw_scores: combined,
        method: SelectionMethod::Bn,
        overridden_from: None,
        scorer_id: "niqe+brisque".into(),
        polarity: Polarity::LowerIsBetter,
        components: Some(CombinedComponents {
            niqe_raw,
            niqe_normalized,
            brisque_raw,
            brisque_normalized,
        }),
    }
}

/// Replaces the automatic choice by a human pick, keeping the scores for audit.
pub fn apply_override(choice: &ExemplarChoice, cands: &CandidateSet, human_index: usize) -> Result<ExemplarChoice> {
    let exemplar = cands.get(human_index)?.clone();
    Ok(ExemplarChoice {
        index: human_index,
        exemplar,
        method: SelectionMethod::HumanOverride,
        overridden_from: Some(choice.index),
        ..choice.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::Pixel;

    struct Fixed(Vec<f64>, Polarity);

    impl QualityScorer for Fixed {
        fn id(&self) -> &str {
            "fixed"
        }
        fn polarity(&self) -> Polarity {
            self.1
        }
        fn score(&self, f: &Frame) -> Result<QualityScore> {
            // Candidates are tagged by their first pixel's red channel.
            QualityScore::new(self.0[f.pixels()[0].r as usize], self.1, "fixed")
        }
    }

    fn tagged(n: usize) -> CandidateSet {
        let frames = (0..n).map(|i| Frame::filled(2, 2, Pixel::new(i as u8, 0, 0))).collect();
        CandidateSet::new(frames, "test", (0..n as u64).collect()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_scores(&[2.0, 4.0, 6.0]), vec![0.0, 0.5, 1.0]);
        assert_eq!(normalize_scores(&[7.0, 7.0, 7.0]), vec![0.5; 3]);
        assert_eq!(normalize_scores(&[1.5]), vec![0.5]);
    }

    #[test]
    fn oriented_minimum_selected() {
        let c = select_exemplar(&tagged(3), &Fixed(vec![0.9, 0.4, 0.7], Polarity::LowerIsBetter)).unwrap();
        assert_eq!(c.index, 1);
        assert_eq!(c.method, SelectionMethod::Fiq);
        let c = select_exemplar(&tagged(3), &Fixed(vec![0.9, 0.4, 0.7], Polarity::HigherIsBetter)).unwrap();
        assert_eq!(c.index, 0);
        assert_eq!(&c.normalized_scores[..2], &[0.0, 1.0]);
        assert!((c.normalized_scores[2] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn single_candidate() {
        let c = select_exemplar(&tagged(1), &Fixed(vec![3.0], Polarity::LowerIsBetter)).unwrap();
        assert_eq!(c.index, 0);
        assert_eq!(c.normalized_scores, vec![0.5]);
    }

    #[test]
    fn ties_lowest_index() {
        let c = select_exemplar(&tagged(4), &Fixed(vec![5.0, 1.0, 1.0, 1.0], Polarity::LowerIsBetter)).unwrap();
        assert_eq!(c.index, 1);
    }

    #[test]
    fn bn_tie_contract() {
        let cands = tagged(2);
        let c = combine_bn(&cands, vec![0.0, 1.0], vec![1.0, 0.0]);
        assert_eq!(c.raw_scores, vec![1.0, 1.0]);
        assert_eq!(c.index, 0);
        let c = combine_bn(&cands, vec![3.0, 1.0], vec![9.0, 2.0]);
        assert_eq!(c.index, 1);
    }

    #[test]
    fn scorer_failure_names_candidate() {
        struct Failing;
        impl QualityScorer for Failing {
            fn id(&self) -> &str {
                "failing"
            }
            fn polarity(&self) -> Polarity {
                Polarity::LowerIsBetter
            }
            fn score(&self, f: &Frame) -> Result<QualityScore> {
                if f.pixels()[0].r == 2 {
                    Err(Error::Backend("boom".into()))
                } else {
                    QualityScore::new(1.0, Polarity::LowerIsBetter, "failing")
                }
            }
        }
        match select_exemplar(&tagged(4), &Failing) {
            Err(Error::Scorer { candidate, .. }) => assert_eq!(candidate, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn override_records_provenance() {
        let cands = tagged(6);
        let auto = select_exemplar(
            &cands,
            &Fixed(vec![3.0, 2.0, 0.0, 5.0, 4.0, 1.0], Polarity::LowerIsBetter),
        )
        .unwrap();
        assert_eq!(auto.index, 2);
        let o = apply_override(&auto, &cands, 5).unwrap();
        assert_eq!(
            (o.index, o.overridden_from, o.method),
            (5, Some(2), SelectionMethod::HumanOverride)
        );
        assert_eq!(o.raw_scores, auto.raw_scores);
        assert_eq!(o.exemplar, cands.candidates()[5]);
        let same = apply_override(&auto, &cands, 2).unwrap();
        assert_eq!(same.method, SelectionMethod::HumanOverride);
        assert!(matches!(
            apply_override(&auto, &cands, 6),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn choice_json_has_typed_fields() {
        let c = select_exemplar(&tagged(2), &Fixed(vec![1.0, 2.0], Polarity::LowerIsBetter)).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["method"], "fiq");
        assert_eq!(v["index"], 0);
        assert!(v["overridden_from"].is_null());
        assert!(v.get("exemplar").is_none());
    }
}
