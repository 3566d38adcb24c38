//! Domain types shared across the toolkit: time spans, reference annotations,
//! score series, session metadata and the frame grid they are aligned on.
//!
//! Frame `k` of a grid with step `hop` covers `[k*hop, (k+1)*hop)`. A frame
//! belongs to a time span when its center `(k + 0.5) * hop` lies inside the
//! half-open span.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_HOP: f64 = 0.01;

/// Slack used when comparing times that went through decimal formatting.
pub(crate) const TIME_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpan {
    start: f64,
    end: f64,
}

impl TimeSpan {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::Validation(format!(
                "time span [{start}, {end}) is not finite"
            )));
        }
        if start < 0.0 {
            return Err(Error::Validation(format!(
                "time span starts before zero ({start})"
            )));
        }
        if end <= start {
            return Err(Error::Validation(format!(
                "time span [{start}, {end}) has non-positive duration"
            )));
        }
        Ok(TimeSpan { start, end })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }

    pub fn overlaps(&self, other: &TimeSpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Indices of the frames (on a grid of `n_frames` frames) whose center
    /// falls inside this span.
    pub fn frame_range(&self, hop: f64, n_frames: usize) -> Range<usize> {
        let lo = first_center_at_or_after(self.start, hop).min(n_frames);
        let hi = first_center_at_or_after(self.end, hop).min(n_frames);
        lo..hi.max(lo)
    }
}

impl fmt::Display for TimeSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.3}, {:.3})", self.start, self.end)
    }
}

#[inline]
pub fn frame_center(k: usize, hop: f64) -> f64 {
    (k as f64 + 0.5) * hop
}

/// Smallest frame index whose center is `>= t`.
fn first_center_at_or_after(t: f64, hop: f64) -> usize {
    let approx = (t / hop - 0.5).ceil();
    let mut k = if approx <= 0.0 { 0 } else { approx as usize };
    // The closed form can be off by one after rounding; settle on the exact
    // center comparison so every caller agrees with `TimeSpan::contains`.
    while k > 0 && frame_center(k - 1, hop) >= t {
        k -= 1;
    }
    while frame_center(k, hop) < t {
        k += 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Clinician,
    Child,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::Clinician, Role::Child];

    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Clinician => "clinician",
            Role::Child => "child",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "clinician" => Ok(Role::Clinician),
            "child" => Ok(Role::Child),
            other => Err(Error::Validation(format!("unknown role `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Patient,
    Control,
}

impl Group {
    pub const ALL: [Group; 2] = [Group::Patient, Group::Control];

    pub fn as_str(&self) -> &'static str {
        match self {
            Group::Patient => "patient",
            Group::Control => "control",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeechSegment {
    pub span: TimeSpan,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionAnnotation {
    session_id: String,
    segments: Vec<SpeechSegment>,
    total_duration: f64,
}

impl SessionAnnotation {
    /// Sorts `segments` by start time and validates them against
    /// `total_duration`. Segments of the same role must not overlap.
    pub fn new(
        session_id: impl Into<String>,
        mut segments: Vec<SpeechSegment>,
        total_duration: f64,
    ) -> Result<Self> {
        let session_id = session_id.into();
        if !(total_duration.is_finite() && total_duration >= 0.0) {
            return Err(Error::Validation(format!(
                "session `{session_id}`: invalid total duration {total_duration}"
            )));
        }
        segments.sort_by(|a, b| {
            a.span
                .start
                .total_cmp(&b.span.start)
                .then(a.span.end.total_cmp(&b.span.end))
                .then(a.role.cmp(&b.role))
        });
        for seg in &segments {
            if seg.span.end > total_duration + TIME_EPS {
                return Err(Error::Validation(format!(
                    "session `{session_id}`: segment {} ends after total duration {total_duration}",
                    seg.span
                )));
            }
        }
        for role in Role::ALL {
            let mut last_end: Option<f64> = None;
            for seg in segments.iter().filter(|s| s.role == role) {
                if let Some(end) = last_end {
                    if seg.span.start < end - TIME_EPS {
                        return Err(Error::Validation(format!(
                            "session `{session_id}`: overlapping {role} segments near {:.3}s",
                            seg.span.start
                        )));
                    }
                }
                last_end = Some(last_end.map_or(seg.span.end, |e: f64| e.max(seg.span.end)));
            }
        }
        Ok(SessionAnnotation {
            session_id,
            segments,
            total_duration,
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn segments(&self) -> &[SpeechSegment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.total_duration
    }

    /// End time of the last segment, or 0 for an empty annotation.
    pub fn speech_extent(&self) -> f64 {
        self.segments.iter().map(|s| s.span.end).fold(0.0, f64::max)
    }

    /// Same segments with a different total duration, revalidated.
    pub fn with_total_duration(self, total_duration: f64) -> Result<Self> {
        SessionAnnotation::new(self.session_id, self.segments, total_duration)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameScores {
    session_id: String,
    hop: f64,
    scores: Vec<f64>,
}

impl FrameScores {
    pub fn new(session_id: impl Into<String>, hop: f64, scores: Vec<f64>) -> Result<Self> {
        if !(hop.is_finite() && hop > 0.0) {
            return Err(Error::Validation(format!(
                "hop must be positive, got {hop}"
            )));
        }
        if let Some((k, s)) = scores
            .iter()
            .enumerate()
            .find(|(_, s)| !(0.0..=1.0).contains(*s))
        {
            return Err(Error::Range(format!(
                "score {s} at frame {k} is outside [0, 1]"
            )));
        }
        Ok(FrameScores {
            session_id: session_id.into(),
            hop,
            scores,
        })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn hop(&self) -> f64 {
        self.hop
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Seconds covered by the grid.
    pub fn duration(&self) -> f64 {
        self.scores.len() as f64 * self.hop
    }

    pub(crate) fn with_session_id(mut self, session_id: impl Into<String>) -> Self {
        self.session_id = session_id.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Severity {
    pub obsession: u32,
    pub compulsion: u32,
    pub total: u32,
}

/// Clinical band of a total severity score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeverityBand {
    /// Below the moderate band (< 16).
    Subclinical,
    /// 16 to 23.
    Moderate,
    /// 24 to 40.
    SevereToExtreme,
}

/// Lowest total that places a patient in the moderate band.
pub const MODERATE_SEVERITY_MIN: u32 = 16;
const SEVERE_SEVERITY_MIN: u32 = 24;

impl Severity {
    pub fn new(obsession: u32, compulsion: u32, total: u32) -> Result<Self> {
        let sev = Severity {
            obsession,
            compulsion,
            total,
        };
        sev.validate()?;
        Ok(sev)
    }

    pub fn validate(&self) -> Result<()> {
        if self.obsession > 20 {
            return Err(Error::Validation(format!(
                "obsession severity {} outside 0-20",
                self.obsession
            )));
        }
        if self.compulsion > 20 {
            return Err(Error::Validation(format!(
                "compulsion severity {} outside 0-20",
                self.compulsion
            )));
        }
        if self.total > 40 {
            return Err(Error::Validation(format!(
                "total severity {} outside 0-40",
                self.total
            )));
        }
        if self.obsession + self.compulsion != self.total {
            return Err(Error::Validation(format!(
                "total severity {} != obsession {} + compulsion {}",
                self.total, self.obsession, self.compulsion
            )));
        }
        Ok(())
    }

    pub fn band(&self) -> SeverityBand {
        match self.total {
            t if t < MODERATE_SEVERITY_MIN => SeverityBand::Subclinical,
            t if t < SEVERE_SEVERITY_MIN => SeverityBand::Moderate,
            _ => SeverityBand::SevereToExtreme,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionMeta {
    pub session_id: String,
    pub group: Group,
    pub severity: Option<Severity>,
}

impl SessionMeta {
    pub fn new(
        session_id: impl Into<String>,
        group: Group,
        severity: Option<Severity>,
    ) -> Result<Self> {
        let session_id = session_id.into();
        if let Some(sev) = &severity {
            if group == Group::Control {
                return Err(Error::Validation(format!(
                    "session `{session_id}`: control sessions carry no severity score"
                )));
            }
            sev.validate()
                .map_err(|e| Error::Validation(format!("session `{session_id}`: {e}")))?;
        }
        Ok(SessionMeta {
            session_id,
            group,
            severity,
        })
    }
}

/// Which roles speak at a frame center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RoleCover {
    #[default]
    None,
    Clinician,
    Child,
    Both,
}

impl RoleCover {
    pub fn includes(self, role: Role) -> bool {
        matches!(
            (self, role),
            (RoleCover::Both, _)
                | (RoleCover::Clinician, Role::Clinician)
                | (RoleCover::Child, Role::Child)
        )
    }

    pub fn is_speech(self) -> bool {
        self != RoleCover::None
    }

    fn add(self, role: Role) -> Self {
        match (self, role) {
            (RoleCover::None, Role::Clinician) => RoleCover::Clinician,
            (RoleCover::None, Role::Child) => RoleCover::Child,
            (RoleCover::Clinician, Role::Clinician) => RoleCover::Clinician,
            (RoleCover::Child, Role::Child) => RoleCover::Child,
            _ => RoleCover::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Speech,
    NonSpeech,
}

impl Label {
    pub fn is_speech(self) -> bool {
        self == Label::Speech
    }
}

impl From<bool> for Label {
    fn from(speech: bool) -> Self {
        if speech {
            Label::Speech
        } else {
            Label::NonSpeech
        }
    }
}

/// Frame-aligned speech/non-speech labels, optionally with the roles that
/// cover each frame (reference labels only).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSeq {
    pub hop: f64,
    pub labels: Vec<Label>,
    pub role_labels: Option<Vec<RoleCover>>,
}

impl LabelSeq {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn speech_frames(&self) -> usize {
        self.labels.iter().filter(|l| l.is_speech()).count()
    }
}

/// Labels the frame grid from a reference annotation using the frame-center
/// rule. With `role_filter` set, only that role's segments produce Speech;
/// `role_labels` always records every role present at each center.
pub fn frame_labels(
    annotation: &SessionAnnotation,
    hop: f64,
    n_frames: usize,
    role_filter: Option<Role>,
) -> Result<LabelSeq> {
    if !(hop.is_finite() && hop > 0.0) {
        return Err(Error::Validation(format!(
            "hop must be positive, got {hop}"
        )));
    }
    let grid_len = n_frames as f64 * hop;
    if grid_len > annotation.total_duration() + hop + TIME_EPS {
        return Err(Error::Alignment(format!(
            "session `{}`: grid of {n_frames} frames x {hop}s = {grid_len:.6}s exceeds annotation duration {:.6}s by more than one frame",
            annotation.session_id(),
            annotation.total_duration()
        )));
    }

    let mut covers = vec![RoleCover::None; n_frames];
    for seg in annotation.segments() {
        for c in &mut covers[seg.span.frame_range(hop, n_frames)] {
            *c = c.add(seg.role);
        }
    }
    let labels = covers
        .iter()
        .map(|c| match role_filter {
            Some(role) => Label::from(c.includes(role)),
            None => Label::from(c.is_speech()),
        })
        .collect();
    Ok(LabelSeq {
        hop,
        labels,
        role_labels: Some(covers),
    })
}

/// Splits `[0, total_duration)` into consecutive windows of `window_len`.
/// A trailing partial window is kept only if it is at least half a window.
pub fn window_bounds(total_duration: f64, window_len: f64) -> Result<Vec<TimeSpan>> {
    if !(window_len.is_finite() && window_len > 0.0) {
        return Err(Error::Domain(format!(
            "window length must be positive, got {window_len}"
        )));
    }
    let mut windows = Vec::new();
    let mut i = 0usize;
    loop {
        let start = i as f64 * window_len;
        let full_end = (i + 1) as f64 * window_len;
        if full_end <= total_duration + TIME_EPS {
            windows.push(TimeSpan::new(start, full_end)?);
        } else {
            let remainder = total_duration - start;
            if remainder > TIME_EPS && remainder >= 0.5 * window_len - TIME_EPS {
                windows.push(TimeSpan::new(start, total_duration)?);
            }
            break;
        }
        i += 1;
    }
    Ok(windows)
}
