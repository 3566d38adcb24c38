//! Thresholding of posterior scores into speech/non-speech labels, plus the
//! optional run-length post-processing applied to final reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FrameScores, Label, LabelSeq};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Run-length smoothing. Both lengths are in seconds; zero disables a pass.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PostProcessParams {
    pub min_speech: f64,
    pub min_gap: f64,
}

impl PostProcessParams {
    pub fn new(min_speech: f64, min_gap: f64) -> Result<Self> {
        let p = PostProcessParams {
            min_speech,
            min_gap,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("min_speech", self.min_speech), ("min_gap", self.min_gap)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.min_speech == 0.0 && self.min_gap == 0.0
    }
}

pub fn check_threshold(threshold: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Domain(format!(
            "threshold {threshold} is outside [0, 1]"
        )));
    }
    Ok(())
}

/// A frame is Speech iff its score is strictly greater than `threshold`.
pub fn binarize(scores: &FrameScores, threshold: f64) -> Result<LabelSeq> {
    check_threshold(threshold)?;
    Ok(LabelSeq {
        hop: scores.hop(),
        labels: scores
            .scores()
            .iter()
            .map(|&s| Label::from(s > threshold))
            .collect(),
        role_labels: None,
    })
}

/// Fills NonSpeech gaps shorter than `min_gap`, then removes Speech runs
/// shorter than `min_speech`. Gaps touching either end of the sequence are
/// not filled, since their true length is unknown.
pub fn post_process(labels: &LabelSeq, params: &PostProcessParams) -> LabelSeq {
    let mut out = labels.clone();
    if params.is_identity() {
        return out;
    }
    let hop = labels.hop;
    // A run of `n` frames is "shorter" than `limit` seconds when n*hop < limit.
    let shorter = |n: usize, limit: f64| limit > 0.0 && (n as f64) * hop < limit - 1e-9;

    let gaps: Vec<_> = runs(&out.labels).collect();
    let last = gaps.len().saturating_sub(1);
    for (i, &(label, start, len)) in gaps.iter().enumerate() {
        let interior = i != 0 && i != last;
        if label == Label::NonSpeech && interior && shorter(len, params.min_gap) {
            out.labels[start..start + len].fill(Label::Speech);
        }
    }
    let speech: Vec<_> = runs(&out.labels).collect();
    for (label, start, len) in speech {
        if label == Label::Speech && shorter(len, params.min_speech) {
            out.labels[start..start + len].fill(Label::NonSpeech);
        }
    }
    out
}

/// `(label, start, length)` for each maximal constant run.
fn runs(labels: &[Label]) -> impl Iterator<Item = (Label, usize, usize)> + '_ {
    let mut pos = 0;
    std::iter::from_fn(move || {
        let label = *labels.get(pos)?;
        let start = pos;
        while pos < labels.len() && labels[pos] == label {
            pos += 1;
        }
        Some((label, start, pos - start))
    })
}
