//! Duration-based error rates.
//!
//! Counts are kept in frames; seconds are `frames * hop`. For a role filter
//! `P`, true speech is every frame where `P` speaks (including overlap with
//! the other role) and true non-speech is every frame where nobody speaks.
//! Frames where only the other role speaks are left out of both.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::binarize::{binarize, post_process, PostProcessParams};
use crate::error::{Error, Result};
use crate::ingest::SessionBundle;
use crate::model::{frame_labels, window_bounds, LabelSeq, Role, RoleCover, TimeSpan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    /// True speech predicted as non-speech.
    pub fn_frames: u64,
    /// True non-speech predicted as speech.
    pub fp_frames: u64,
    pub true_speech_frames: u64,
    pub true_nonspeech_frames: u64,
    pub hop: f64,
}

impl ConfusionCounts {
    pub fn zero(hop: f64) -> Self {
        ConfusionCounts {
            fn_frames: 0,
            fp_frames: 0,
            true_speech_frames: 0,
            true_nonspeech_frames: 0,
            hop,
        }
    }

    pub fn evaluated_frames(&self) -> u64 {
        self.true_speech_frames + self.true_nonspeech_frames
    }

    pub fn speech_seconds(&self) -> f64 {
        self.true_speech_frames as f64 * self.hop
    }

    pub fn nonspeech_seconds(&self) -> f64 {
        self.true_nonspeech_frames as f64 * self.hop
    }

    pub fn fnr(&self) -> Option<f64> {
        ratio(self.fn_frames, self.true_speech_frames)
    }

    pub fn fpr(&self) -> Option<f64> {
        ratio(self.fp_frames, self.true_nonspeech_frames)
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, rhs: Self) -> Self {
        ConfusionCounts {
            fn_frames: self.fn_frames + rhs.fn_frames,
            fp_frames: self.fp_frames + rhs.fp_frames,
            true_speech_frames: self.true_speech_frames + rhs.true_speech_frames,
            true_nonspeech_frames: self.true_nonspeech_frames + rhs.true_nonspeech_frames,
            hop: self.hop,
        }
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(mut iter: I) -> Self {
        let Some(first) = iter.next() else {
            return ConfusionCounts::zero(crate::model::DEFAULT_HOP);
        };
        iter.fold(first, |acc, c| acc + c)
    }
}

pub(crate) fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub session_id: String,
    /// `None` when there is no true speech in scope.
    pub fnr: Option<f64>,
    /// `None` when there is no true non-speech in scope.
    pub fpr: Option<f64>,
    pub counts: ConfusionCounts,
    pub window_index: Option<usize>,
    pub window: Option<TimeSpan>,
    pub role_filter: Option<Role>,
    pub threshold: f64,
}

impl RateReport {
    /// True when either rate is undefined for this scope.
    pub fn is_flagged(&self) -> bool {
        self.fnr.is_none() || self.fpr.is_none()
    }
}

/// Frame confusion over the whole sequence.
pub fn confusion(
    reference: &LabelSeq,
    predicted: &LabelSeq,
    role_filter: Option<Role>,
) -> Result<ConfusionCounts> {
    confusion_in(reference, predicted, role_filter, 0..reference.len())
}

/// Frame confusion restricted to `frames`.
pub fn confusion_in(
    reference: &LabelSeq,
    predicted: &LabelSeq,
    role_filter: Option<Role>,
    frames: Range<usize>,
) -> Result<ConfusionCounts> {
    if reference.len() != predicted.len() {
        return Err(Error::Alignment(format!(
            "reference has {} frames, prediction has {}",
            reference.len(),
            predicted.len()
        )));
    }
    if (reference.hop - predicted.hop).abs() > 1e-9 {
        return Err(Error::Alignment(format!(
            "reference hop {} differs from prediction hop {}",
            reference.hop, predicted.hop
        )));
    }
    if frames.end > reference.len() {
        return Err(Error::Alignment(format!(
            "frame range {frames:?} exceeds sequence length {}",
            reference.len()
        )));
    }
    let covers = match (role_filter, &reference.role_labels) {
        (Some(_), None) => {
            return Err(Error::Validation(
                "role-filtered confusion needs reference role labels".into(),
            ))
        }
        (_, covers) => covers.as_deref(),
    };

    let mut c = ConfusionCounts::zero(reference.hop);
    for k in frames {
        let pred_speech = predicted.labels[k].is_speech();
        let (is_speech, is_nonspeech) = match (role_filter, covers) {
            (Some(role), Some(cv)) => (cv[k].includes(role), cv[k] == RoleCover::None),
            _ => {
                let s = reference.labels[k].is_speech();
                (s, !s)
            }
        };
        if is_speech {
            c.true_speech_frames += 1;
            c.fn_frames += u64::from(!pred_speech);
        } else if is_nonspeech {
            c.true_nonspeech_frames += 1;
            c.fp_frames += u64::from(pred_speech);
        }
    }
    Ok(c)
}

pub fn rates(
    session_id: impl Into<String>,
    counts: ConfusionCounts,
    threshold: f64,
    role_filter: Option<Role>,
) -> RateReport {
    RateReport {
        session_id: session_id.into(),
        fnr: counts.fnr(),
        fpr: counts.fpr(),
        counts,
        window_index: None,
        window: None,
        role_filter,
        threshold,
    }
}

/// Reference labels and window layout for one session, computed once and
/// reused across thresholds and role filters.
#[derive(Debug, Clone)]
pub struct SessionGrid {
    pub reference: LabelSeq,
    pub windows: Vec<TimeSpan>,
    pub window_frames: Vec<Range<usize>>,
}

impl SessionGrid {
    pub fn new(bundle: &SessionBundle, window_len: f64) -> Result<Self> {
        let hop = bundle.scores.hop();
        let n = bundle.scores.len();
        let reference = frame_labels(&bundle.annotation, hop, n, None)?;
        // Windows cover the shorter of the annotation and the score grid.
        let extent = bundle
            .annotation
            .total_duration()
            .min(bundle.scores.duration());
        let windows = window_bounds(extent, window_len)?;
        let window_frames = windows.iter().map(|w| w.frame_range(hop, n)).collect();
        Ok(SessionGrid {
            reference,
            windows,
            window_frames,
        })
    }

    pub fn n_windows(&self) -> usize {
        self.windows.len()
    }
}

/// Per-window rates at `threshold`, one report per window; windows with an
/// undefined rate are kept and flagged.
pub fn windowed_rates(
    bundle: &SessionBundle,
    threshold: f64,
    window_len: f64,
    role_filter: Option<Role>,
) -> Result<Vec<RateReport>> {
    windowed_rates_with(
        bundle,
        threshold,
        window_len,
        role_filter,
        &PostProcessParams::default(),
    )
}

pub fn windowed_rates_with(
    bundle: &SessionBundle,
    threshold: f64,
    window_len: f64,
    role_filter: Option<Role>,
    post: &PostProcessParams,
) -> Result<Vec<RateReport>> {
    let grid = SessionGrid::new(bundle, window_len)?;
    let predicted = predict(bundle, threshold, post)?;
    grid_rates(
        bundle.session_id(),
        &grid,
        &predicted,
        threshold,
        role_filter,
    )
}

pub(crate) fn predict(
    bundle: &SessionBundle,
    threshold: f64,
    post: &PostProcessParams,
) -> Result<LabelSeq> {
    post.validate()?;
    Ok(post_process(&binarize(&bundle.scores, threshold)?, post))
}

/// Rates for each window of `grid` given an already computed prediction.
pub fn grid_rates(
    session_id: &str,
    grid: &SessionGrid,
    predicted: &LabelSeq,
    threshold: f64,
    role_filter: Option<Role>,
) -> Result<Vec<RateReport>> {
    grid.windows
        .iter()
        .zip(&grid.window_frames)
        .enumerate()
        .map(|(i, (span, frames))| {
            let counts = confusion_in(&grid.reference, predicted, role_filter, frames.clone())?;
            let mut report = rates(session_id, counts, threshold, role_filter);
            report.window_index = Some(i);
            report.window = Some(*span);
            Ok(report)
        })
        .collect()
}

/// Whole-session rates over the full frame grid.
pub fn session_rates(
    bundle: &SessionBundle,
    threshold: f64,
    role_filter: Option<Role>,
    post: &PostProcessParams,
) -> Result<RateReport> {
    let hop = bundle.scores.hop();
    let reference = frame_labels(&bundle.annotation, hop, bundle.scores.len(), None)?;
    let predicted = predict(bundle, threshold, post)?;
    let counts = confusion(&reference, &predicted, role_filter)?;
    Ok(rates(bundle.session_id(), counts, threshold, role_filter))
}

/// The three evaluation scopes: all speech, then each role.
pub fn role_scopes() -> [Option<Role>; 3] {
    [None, Some(Role::Clinician), Some(Role::Child)]
}

/// Reports for the selected windows at `threshold`, one per (scope, window),
/// ordered by scope and then by window index.
pub fn scoped_window_rates(
    bundle: &SessionBundle,
    window_len: f64,
    windows: &[usize],
    threshold: f64,
    post: &PostProcessParams,
) -> Result<Vec<RateReport>> {
    let grid = SessionGrid::new(bundle, window_len)?;
    if let Some(&bad) = windows.iter().find(|&&w| w >= grid.n_windows()) {
        return Err(Error::Size(format!(
            "window index {bad} out of range; session `{}` has {} windows",
            bundle.session_id(),
            grid.n_windows()
        )));
    }
    let predicted = predict(bundle, threshold, post)?;
    let mut out = Vec::with_capacity(3 * windows.len());
    for scope in role_scopes() {
        let all = grid_rates(bundle.session_id(), &grid, &predicted, threshold, scope)?;
        out.extend(windows.iter().map(|&w| all[w].clone()));
    }
    Ok(out)
}

/// Pooled rates over a set of reports: summed counts, then re-rated.
pub fn pooled(reports: &[RateReport]) -> Option<ConfusionCounts> {
    let first = reports.first()?;
    Some(
        reports
            .iter()
            .skip(1)
            .fold(first.counts, |acc, r| acc + r.counts),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Label::{NonSpeech as N, Speech as S};
    use crate::model::{Label, SessionAnnotation, SpeechSegment};

    fn plain(labels: Vec<Label>) -> LabelSeq {
        LabelSeq {
            hop: 0.01,
            labels,
            role_labels: None,
        }
    }

    #[test]
    fn all_speech_perfect() {
        let r = plain(vec![S; 100]);
        let c = confusion(&r, &r.clone(), None).unwrap();
        assert_eq!(
            (
                c.fn_frames,
                c.fp_frames,
                c.true_speech_frames,
                c.true_nonspeech_frames
            ),
            (0, 0, 100, 0)
        );
        let rep = rates("s", c, 0.5, None);
        assert_eq!(rep.fnr, Some(0.0));
        assert_eq!(rep.fpr, None);
    }

    #[test]
    fn direct_count() {
        let c = confusion(&plain(vec![S, S, N, N]), &plain(vec![N, S, S, N]), None).unwrap();
        assert_eq!(
            (
                c.fn_frames,
                c.fp_frames,
                c.true_speech_frames,
                c.true_nonspeech_frames
            ),
            (1, 1, 2, 2)
        );
    }

    #[test]
    fn rate_values() {
        let c = ConfusionCounts {
            fn_frames: 10,
            fp_frames: 5,
            true_speech_frames: 100,
            true_nonspeech_frames: 50,
            hop: 0.01,
        };
        let r = rates("s", c, 0.5, None);
        assert_eq!(r.fnr, Some(0.10));
        assert_eq!(r.fpr, Some(0.10));
        let none = ConfusionCounts {
            true_speech_frames: 0,
            fn_frames: 0,
            ..c
        };
        assert_eq!(none.fnr(), None);
    }

    #[test]
    fn role_filter_excludes_other_role_frames() {
        let seg = |a, b, role| SpeechSegment {
            span: TimeSpan::new(a, b).unwrap(),
            role,
        };
        // Clinician [0,2), Child [1,3), silence [3,4) with hop 1.
        let ann = SessionAnnotation::new(
            "s",
            vec![seg(0.0, 2.0, Role::Clinician), seg(1.0, 3.0, Role::Child)],
            4.0,
        )
        .unwrap();
        let reference = frame_labels(&ann, 1.0, 4, None).unwrap();
        let pred = LabelSeq {
            hop: 1.0,
            labels: vec![N, N, N, S],
            role_labels: None,
        };
        let child = confusion(&reference, &pred, Some(Role::Child)).unwrap();
        // Both + Child frames are speech; frame 0 (clinician only) excluded.
        assert_eq!(child.true_speech_frames, 2);
        assert_eq!(child.true_nonspeech_frames, 1);
        assert_eq!(child.fn_frames, 2);
        assert_eq!(child.fp_frames, 1);
        let clin = confusion(&reference, &pred, Some(Role::Clinician)).unwrap();
        assert_eq!(clin.true_speech_frames, 2);
        assert_eq!(clin.true_nonspeech_frames, 1);
        assert!(confusion(&plain(vec![S; 4]), &pred, Some(Role::Child)).is_err());
    }

    #[test]
    fn length_mismatch_is_alignment_error() {
        assert!(matches!(
            confusion(&plain(vec![S; 3]), &plain(vec![S; 4]), None),
            Err(Error::Alignment(_))
        ));
    }
}
