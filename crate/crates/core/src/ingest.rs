//! On-disk formats.
//!
//! * RTTM annotations: `SPEAKER <session> <chan> <tbeg> <tdur> <NA> <NA> <name> <NA>`,
//!   `;` starts a comment line. Speaker names map to roles through the manifest.
//! * Frame scores: CSV with header `time_s,score`, one row per frame, times
//!   printed with six decimals and starting at zero.
//! * Manifest: JSON array of session records (see [`ManifestEntry`]).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    FrameScores, Group, Role, SessionAnnotation, SessionMeta, Severity, SpeechSegment, TimeSpan,
    MODERATE_SEVERITY_MIN, TIME_EPS,
};

/// Maximum deviation between consecutive time steps in a score file.
pub const SPACING_TOLERANCE: f64 = 1e-6;

pub const SCORES_HEADER: &str = "time_s,score";

/// Annotation, scores and metadata for one recording, cross-checked.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionBundle {
    pub annotation: SessionAnnotation,
    pub scores: FrameScores,
    pub meta: SessionMeta,
}

impl SessionBundle {
    pub fn new(
        annotation: SessionAnnotation,
        scores: FrameScores,
        meta: SessionMeta,
    ) -> Result<Self> {
        let id = meta.session_id.as_str();
        if annotation.session_id() != id || scores.session_id() != id {
            return Err(Error::Validation(format!(
                "session id mismatch: annotation `{}`, scores `{}`, meta `{id}`",
                annotation.session_id(),
                scores.session_id()
            )));
        }
        let grid = scores.duration();
        let total = annotation.total_duration();
        if (grid - total).abs() > scores.hop() + TIME_EPS {
            return Err(Error::Alignment(format!(
                "session `{id}`: annotation covers {total:.6}s but scores cover {grid:.6}s ({} frames at {}s)",
                scores.len(),
                scores.hop()
            )));
        }
        Ok(SessionBundle {
            annotation,
            scores,
            meta,
        })
    }

    pub fn session_id(&self) -> &str {
        &self.meta.session_id
    }
}

pub fn parse_rttm(
    text: &str,
    speaker_map: &BTreeMap<String, Role>,
) -> Result<Vec<SessionAnnotation>> {
    let mut order: Vec<String> = Vec::new();
    let mut by_session: HashMap<String, Vec<SpeechSegment>> = HashMap::new();
    let mut unknown: BTreeSet<String> = BTreeSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 9 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected at least 9 fields, found {}", fields.len()),
            });
        }
        if fields[0] != "SPEAKER" {
            return Err(Error::Parse {
                line: line_no,
                message: format!("unsupported record type `{}`", fields[0]),
            });
        }
        let number = |idx: usize, what: &str| -> Result<f64> {
            fields[idx]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("invalid {what} `{}`", fields[idx]),
                })
        };
        let start = number(3, "onset")?;
        let duration = number(4, "duration")?;
        if duration <= 0.0 || start < 0.0 {
            return Err(Error::Validation(format!(
                "line {line_no}: onset {start} / duration {duration} must be non-negative / positive"
            )));
        }
        let name = fields[7];
        let Some(&role) = speaker_map.get(name) else {
            unknown.insert(name.to_string());
            continue;
        };
        let session = fields[1].to_string();
        let span = TimeSpan::new(start, start + duration).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        by_session
            .entry(session.clone())
            .or_insert_with(|| {
                order.push(session);
                Vec::new()
            })
            .push(SpeechSegment { span, role });
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownSpeaker {
            names: unknown.into_iter().collect(),
        });
    }

    order
        .into_iter()
        .map(|id| {
            let segments = by_session.remove(&id).unwrap_or_default();
            let extent = segments.iter().map(|s| s.span.end()).fold(0.0, f64::max);
            SessionAnnotation::new(id, segments, extent)
        })
        .collect()
}

/// Writes annotations as RTTM. Each role is written under the
/// lexicographically first speaker name that maps to it.
pub fn serialize_rttm(
    annotations: &[SessionAnnotation],
    speaker_map: &BTreeMap<String, Role>,
) -> Result<String> {
    let mut names: HashMap<Role, &str> = HashMap::new();
    for (name, role) in speaker_map {
        names.entry(*role).or_insert(name.as_str());
    }
    let mut out = String::new();
    for ann in annotations {
        for seg in ann.segments() {
            let name = names.get(&seg.role).ok_or_else(|| {
                Error::Validation(format!("no speaker name maps to role {}", seg.role))
            })?;
            writeln!(
                out,
                "SPEAKER {} 1 {:.3} {:.3} <NA> <NA> {} <NA>",
                ann.session_id(),
                seg.span.start(),
                seg.span.duration(),
                name
            )
            .expect("writing to a String cannot fail");
        }
    }
    Ok(out)
}

pub fn parse_scores(session_id: &str, text: &str) -> Result<FrameScores> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == SCORES_HEADER => {}
        Some((i, h)) => {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected header `{SCORES_HEADER}`, found `{}`", h.trim()),
            })
        }
        None => return Err(Error::Format("score file is empty".into())),
    }

    let mut times = Vec::new();
    let mut scores = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let (t, s) = line.trim().split_once(',').ok_or_else(|| Error::Parse {
            line: line_no,
            message: "expected `time_s,score`".into(),
        })?;
        let parse = |v: &str, what: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("invalid {what} `{}`", v.trim()),
                })
        };
        let t = parse(t, "time")?;
        let s = parse(s, "score")?;
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Range(format!(
                "line {line_no}: score {s} is outside [0, 1]"
            )));
        }
        times.push((line_no, t));
        scores.push(s);
    }
    if times.len() < 2 {
        return Err(Error::Format(format!(
            "need at least 2 score rows to infer the frame step, found {}",
            times.len()
        )));
    }
    if times[0].1.abs() > SPACING_TOLERANCE {
        return Err(Error::Format(format!(
            "line {}: first frame must start at 0, found {}",
            times[0].0, times[0].1
        )));
    }
    let hop = times[1].1 - times[0].1;
    if hop <= 0.0 {
        return Err(Error::Format(format!(
            "line {}: times must be strictly increasing",
            times[1].0
        )));
    }
    for pair in times.windows(2) {
        let step = pair[1].1 - pair[0].1;
        if (step - hop).abs() > SPACING_TOLERANCE + 1e-9 {
            return Err(Error::Format(format!(
                "line {}: non-uniform spacing (step {step:.6}s, expected {hop:.6}s)",
                pair[1].0
            )));
        }
    }
    FrameScores::new(session_id, hop, scores)
}

pub fn serialize_scores(scores: &FrameScores) -> String {
    let mut out = String::with_capacity(16 * (scores.len() + 1));
    out.push_str(SCORES_HEADER);
    out.push('\n');
    for (k, s) in scores.scores().iter().enumerate() {
        writeln!(out, "{:.6},{}", k as f64 * scores.hop(), s)
            .expect("writing to a String cannot fail");
    }
    out
}

/// One session record of a manifest. Paths are relative to the manifest's
/// directory unless absolute. Unknown keys are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub session_id: String,
    pub group: Group,
    pub rttm_path: PathBuf,
    pub scores_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<Severity>,
    pub speaker_map: BTreeMap<String, Role>,
    /// Recording length in seconds. When absent, the score grid defines it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

impl ManifestEntry {
    pub fn meta(&self) -> Result<SessionMeta> {
        SessionMeta::new(self.session_id.clone(), self.group, self.severity)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Non-fatal findings, e.g. a patient below the moderate severity band.
    pub warnings: Vec<String>,
}

pub fn load_manifest(text: &str) -> Result<Manifest> {
    let entries: Vec<ManifestEntry> = serde_json::from_str(text)?;
    let mut seen = HashSet::new();
    let mut warnings = Vec::new();
    for e in &entries {
        if !seen.insert(e.session_id.as_str()) {
            return Err(Error::DuplicateSession(e.session_id.clone()));
        }
        e.meta()?;
        if let (Group::Patient, Some(sev)) = (e.group, e.severity) {
            if sev.total < MODERATE_SEVERITY_MIN {
                let msg = format!(
                    "session `{}`: patient severity {} is below {MODERATE_SEVERITY_MIN}",
                    e.session_id, sev.total
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
        if let Some(d) = e.duration_s {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Validation(format!(
                    "session `{}`: duration_s must be positive",
                    e.session_id
                )));
            }
        }
    }
    Ok(Manifest { entries, warnings })
}

pub fn serialize_manifest(entries: &[ManifestEntry]) -> Result<String> {
    let mut s = serde_json::to_string_pretty(entries)?;
    s.push('\n');
    Ok(s)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_manifest(&text)
}

fn resolve(base_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

/// Reads and cross-checks the files of one manifest entry.
pub fn load_bundle(entry: &ManifestEntry, base_dir: &Path) -> Result<SessionBundle> {
    let meta = entry.meta()?;
    let rttm_path = resolve(base_dir, &entry.rttm_path);
    let scores_path = resolve(base_dir, &entry.scores_path);
    let rttm = std::fs::read_to_string(&rttm_path).map_err(|e| Error::io(&rttm_path, e))?;
    let csv = std::fs::read_to_string(&scores_path).map_err(|e| Error::io(&scores_path, e))?;

    let scores = parse_scores(&entry.session_id, &csv).map_err(|e| in_file(&scores_path, e))?;
    let annotation = parse_rttm(&rttm, &entry.speaker_map)
        .map_err(|e| in_file(&rttm_path, e))?
        .into_iter()
        .find(|a| a.session_id() == entry.session_id)
        .unwrap_or(SessionAnnotation::new(
            entry.session_id.clone(),
            Vec::new(),
            0.0,
        )?);

    let total = entry.duration_s.unwrap_or_else(|| scores.duration());
    if annotation.speech_extent() > total + scores.hop() + TIME_EPS {
        return Err(Error::Alignment(format!(
            "session `{}`: annotation extends to {:.6}s but the recording is {total:.6}s",
            entry.session_id,
            annotation.speech_extent()
        )));
    }
    let extent = annotation.speech_extent();
    let annotation = annotation.with_total_duration(total.max(extent))?;
    SessionBundle::new(
        annotation,
        scores.with_session_id(entry.session_id.clone()),
        meta,
    )
}

fn in_file(path: &Path, err: Error) -> Error {
    match err {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

/// Loads every session of a manifest file, in manifest order.
pub fn load_all(manifest_path: &Path) -> Result<(Manifest, Vec<SessionBundle>)> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let bundles = manifest
        .entries
        .iter()
        .map(|e| load_bundle(e, base))
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, bundles))
}
