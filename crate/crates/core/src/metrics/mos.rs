//! Survey vote tallies. Each question reports raw counts, the count divided by
//! the number of options, and each option's share of all votes.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of the votes CSV (`question_id,participant_id,option`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub question_id: String,
    pub participant_id: String,
    pub option: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyTally {
    pub question_id: String,
    pub options: Vec<String>,
    pub counts: Vec<u64>,
    pub participant_count: u64,
    pub total_votes: u64,
    /// `count / number of options`.
    pub mos: Vec<f64>,
    /// `count / total votes`; all zero when there are no votes.
    pub share: Vec<f64>,
}

impl SurveyTally {
    pub fn count_of(&self, option: &str) -> Option<u64> {
        self.options.iter().position(|o| o == option).map(|i| self.counts[i])
    }

    pub fn share_of(&self, option: &str) -> Option<f64> {
        self.options.iter().position(|o| o == option).map(|i| self.share[i])
    }
}

/// Tallies `(participant, option)` votes for one question over known options.
///
/// A participant may vote for several options (ranking questions) but not
/// twice for the same option.
pub fn mos_tally(question_id: &str, options: &[String], votes: &[(String, String)]) -> Result<SurveyTally> {
    let mut counts = vec![0u64; options.len()];
    let mut seen = HashSet::new();
    let mut participants = HashSet::new();
    for (participant, option) in votes {
        let i = options
            .iter()
            .position(|o| o == option)
            .ok_or_else(|| Error::UnknownOption {
                question: question_id.to_owned(),
                option: option.clone(),
            })?;
        if !seen.insert((participant.as_str(), i)) {
            return Err(Error::DuplicateVote {
                question: question_id.to_owned(),
                participant: participant.clone(),
                option: option.clone(),
            });
        }
        participants.insert(participant.as_str());
        counts[i] += 1;
    }
    let total: u64 = counts.iter().sum();
    let n_opt = options.len().max(1) as f64;
    Ok(SurveyTally {
        question_id: question_id.to_owned(),
        options: options.to_vec(),
        mos: counts.iter().map(|&c| c as f64 / n_opt).collect(),
        share: counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect(),
        counts,
        participant_count: participants.len() as u64,
        total_votes: total,
    })
}

/// Tallies every question in a vote list. Questions and options keep their
/// order of first appearance.
pub fn tally_votes(votes: &[Vote]) -> Result<Vec<SurveyTally>> {
    // (question, options, (participant, option) votes)
    type Pending = (String, Vec<String>, Vec<(String, String)>);
    let mut questions: Vec<Pending> = Vec::new();
    for v in votes {
        let q = match questions.iter().position(|q| q.0 == v.question_id) {
            Some(i) => &mut questions[i],
            None => {
                questions.push((v.question_id.clone(), Vec::new(), Vec::new()));
                questions.last_mut().expect("just pushed")
            }
        };
        if !q.1.contains(&v.option) {
            q.1.push(v.option.clone());
        }
        q.2.push((v.participant_id.clone(), v.option.clone()));
    }
    questions
        .iter()
        .map(|(id, options, pairs)| mos_tally(id, options, pairs))
        .collect()
}

pub fn parse_votes(reader: impl Read) -> Result<Vec<Vote>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["question_id", "participant_id", "option"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse(format!(
            "votes header must be `{}`, found `{}`",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn read_votes(path: &Path) -> Result<Vec<Vote>> {
    let file = std::fs::File::open(path).map_err(|e| Error::with_path(e, path))?;
    parse_votes(file)
}

/// Aligned text table: one block per question.
pub fn tally_table(tallies: &[SurveyTally]) -> String {
    let mut out = String::new();
    for t in tallies {
        let width = t.options.iter().map(String::len).max().unwrap_or(6).max(6);
        out.push_str(&format!(
            "{} ({} participants, {} votes)\n{:<width$}  {:>6}  {:>8}  {:>7}\n",
            t.question_id, t.participant_count, t.total_votes, "option", "count", "mos", "share"
        ));
        for i in 0..t.options.len() {
            out.push_str(&format!(
                "{:<width$}  {:>6}  {:>8.3}  {:>6.1}%\n",
                t.options[i],
                t.counts[i],
                t.mos[i],
                100.0 * t.share[i]
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(q: &str, p: &str, o: &str) -> Vote {
        Vote {
            question_id: q.into(),
            participant_id: p.into(),
            option: o.into(),
        }
    }

    #[test]
    fn empty_is_all_zero() {
        let opts = vec!["a".to_owned(), "b".to_owned()];
        let t = mos_tally("q", &opts, &[]).unwrap();
        assert_eq!(t.counts, vec![0, 0]);
        assert_eq!(t.mos, vec![0.0, 0.0]);
        assert_eq!(t.share, vec![0.0, 0.0]);
        assert_eq!(t.participant_count, 0);
    }

    #[test]
    fn counts_mos_and_share() {
        let t = tally_votes(&[v("q1", "p1", "x"), v("q1", "p2", "y"), v("q1", "p3", "y")]).unwrap();
        assert_eq!(t[0].options, vec!["x", "y"]);
        assert_eq!(t[0].counts, vec![1, 2]);
        assert_eq!(t[0].mos, vec![0.5, 1.0]);
        assert!((t[0].share[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn duplicate_and_unknown() {
        let err = tally_votes(&[v("q", "p", "x"), v("q", "p", "x")]).unwrap_err();
        assert!(matches!(err, Error::DuplicateVote { .. }));
        // Ranking questions allow one participant several distinct options.
        assert_eq!(
            tally_votes(&[v("q", "p", "x"), v("q", "p", "y")]).unwrap()[0].participant_count,
            1
        );
        let err = mos_tally("q", &["x".into()], &[("p".into(), "z".into())]).unwrap_err();
        assert!(matches!(err, Error::UnknownOption { .. }));
    }

    #[test]
    fn csv_header_checked() {
        let ok = "question_id,participant_id,option\nq,p,x\n";
        assert_eq!(parse_votes(ok.as_bytes()).unwrap(), vec![v("q", "p", "x")]);
        assert!(parse_votes("q,p,o\nq,p,x\n".as_bytes()).is_err());
    }
}
