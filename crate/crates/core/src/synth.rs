//! Deterministic synthetic sessions.
//!
//! A session alternates Clinician and Child turns separated by gaps. Frames
//! inside a role's turn draw their score from that role's Beta distribution,
//! frames where nobody speaks from the non-speech Beta, and frames where
//! both roles speak take the larger of one draw from each.
//!
//! Randomness comes from xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`), so a seed fixes the whole bundle.
//! Segment boundaries are rounded to milliseconds and scores to 1e-6 so
//! that the written files reload to the same labels and scores.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_distr::{Beta, Distribution, Exp};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    serialize_manifest, serialize_rttm, serialize_scores, ManifestEntry, SessionBundle,
};
use crate::model::{
    frame_labels, FrameScores, Group, Role, RoleCover, SessionAnnotation, SessionMeta, Severity,
    SpeechSegment, TimeSpan, DEFAULT_HOP,
};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Speaker names written to generated RTTM files.
pub const CLINICIAN_NAME: &str = "clinician";
pub const CHILD_NAME: &str = "child";

/// Length distribution in seconds: `min` plus an exponential with mean
/// `mean - min`, truncated at `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthDist {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl LengthDist {
    fn validate(&self, what: &str) -> Result<()> {
        let finite = self.mean.is_finite() && self.min.is_finite() && self.max.is_finite();
        if !finite || self.min < 0.0 || self.min > self.max {
            return Err(Error::Config(format!(
                "{what}: need 0 <= min <= max, got min {} max {}",
                self.min, self.max
            )));
        }
        if self.mean < self.min || self.mean > self.max {
            return Err(Error::Config(format!(
                "{what}: mean {} outside [{}, {}]",
                self.mean, self.min, self.max
            )));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        let excess = self.mean - self.min;
        if excess <= 0.0 {
            return self.min;
        }
        let exp = Exp::new(1.0 / excess).expect("positive rate");
        (self.min + exp.sample(rng)).min(self.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    /// Parameters with the given mean and concentration `alpha + beta`.
    pub fn with_mean(mean: f64, concentration: f64) -> Self {
        BetaParams {
            alpha: mean * concentration,
            beta: (1.0 - mean) * concentration,
        }
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    fn distribution(&self, what: &str) -> Result<Beta<f64>> {
        if !(self.alpha > 0.0 && self.beta > 0.0 && self.alpha.is_finite() && self.beta.is_finite())
        {
            return Err(Error::Config(format!(
                "{what}: Beta parameters must be positive, got ({}, {})",
                self.alpha, self.beta
            )));
        }
        Beta::new(self.alpha, self.beta).map_err(|e| Error::Config(format!("{what}: {e}")))
    }
}

fn default_hop() -> f64 {
    DEFAULT_HOP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub session_id: String,
    pub seed: u64,
    /// Seconds.
    pub duration: f64,
    #[serde(default = "default_hop")]
    pub hop: f64,
    pub clinician_turn: LengthDist,
    pub child_turn: LengthDist,
    pub gap: LengthDist,
    pub clinician_speech: BetaParams,
    pub child_speech: BetaParams,
    pub nonspeech: BetaParams,
    /// Probability that a turn starts before the previous one has ended.
    #[serde(default)]
    pub overlap_prob: f64,
    pub group: Group,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub severity: Option<Severity>,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.session_id.is_empty()
            || !self
                .session_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        {
            return Err(Error::Config(format!(
                "session id `{}` must be non-empty and use only [A-Za-z0-9._-]",
                self.session_id
            )));
        }
        if !(self.hop.is_finite() && self.hop > 0.0) {
            return Err(Error::Config(format!(
                "hop must be positive, got {}",
                self.hop
            )));
        }
        if !(self.duration.is_finite() && self.duration >= self.hop) {
            return Err(Error::Config(format!(
                "duration {} must be at least one hop",
                self.duration
            )));
        }
        if !(0.0..=1.0).contains(&self.overlap_prob) {
            return Err(Error::Config(format!(
                "overlap_prob {} outside [0, 1]",
                self.overlap_prob
            )));
        }
        self.clinician_turn.validate("clinician_turn")?;
        self.child_turn.validate("child_turn")?;
        self.gap.validate("gap")?;
        if self.clinician_turn.max <= 0.0 || self.child_turn.max <= 0.0 {
            return Err(Error::Config(
                "turn lengths must allow positive values".into(),
            ));
        }
        self.clinician_speech.distribution("clinician_speech")?;
        self.child_speech.distribution("child_speech")?;
        self.nonspeech.distribution("nonspeech")?;
        SessionMeta::new(self.session_id.clone(), self.group, self.severity)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn n_frames(&self) -> usize {
        (self.duration / self.hop).round() as usize
    }

    fn turn(&self, role: Role) -> &LengthDist {
        match role {
            Role::Clinician => &self.clinician_turn,
            Role::Child => &self.child_turn,
        }
    }
}

fn to_ms(t: f64) -> i64 {
    (t * 1000.0).round() as i64
}

/// A span built the way an RTTM reader rebuilds it, as start plus duration,
/// so that written and in-memory annotations agree bit for bit.
fn ms_span(start_ms: i64, end_ms: i64) -> Result<TimeSpan> {
    let start = start_ms as f64 / 1000.0;
    TimeSpan::new(start, start + (end_ms - start_ms) as f64 / 1000.0)
}

fn other(role: Role) -> Role {
    match role {
        Role::Clinician => Role::Child,
        Role::Child => Role::Clinician,
    }
}

fn turns(config: &SynthConfig, rng: &mut impl Rng) -> Result<Vec<SpeechSegment>> {
    let duration = to_ms(config.duration);
    let mut segments = Vec::new();
    let mut last_end = BTreeMap::from([(Role::Clinician, 0i64), (Role::Child, 0i64)]);
    let mut role = Role::Clinician;
    let mut start = to_ms(config.gap.sample(rng));
    while start < duration {
        let start_t = start.max(last_end[&role]);
        let len = config.turn(role).sample(rng);
        let end = to_ms(start_t as f64 / 1000.0 + len).min(duration);
        if end > start_t {
            segments.push(SpeechSegment {
                span: ms_span(start_t, end)?,
                role,
            });
            last_end.insert(role, end);
        }
        let overlap = rng.random::<f64>() < config.overlap_prob;
        let (s_sec, e_sec) = (start_t as f64 / 1000.0, end as f64 / 1000.0);
        start = if overlap {
            // The next speaker cuts in during the last half of this turn.
            to_ms(e_sec - rng.random::<f64>() * 0.5 * (e_sec - s_sec))
        } else {
            to_ms(e_sec + config.gap.sample(rng))
        };
        role = other(role);
    }
    Ok(segments)
}

/// Generates one session. The same config always yields the same bundle.
pub fn generate(config: &SynthConfig) -> Result<SessionBundle> {
    config.validate()?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
    let segments = turns(config, &mut rng)?;
    let n = config.n_frames();
    let total = n as f64 * config.hop;
    let annotation = SessionAnnotation::new(config.session_id.clone(), segments, total)?;
    let reference = frame_labels(&annotation, config.hop, n, None)?;

    let clin = config.clinician_speech.distribution("clinician_speech")?;
    let child = config.child_speech.distribution("child_speech")?;
    let silence = config.nonspeech.distribution("nonspeech")?;
    let quantize = |x: f64| ((x * 1e6).round() / 1e6).clamp(0.0, 1.0);
    let scores = reference
        .role_labels
        .as_deref()
        .expect("reference labels carry role coverage")
        .iter()
        .map(|cover| {
            let raw = match cover {
                RoleCover::None => silence.sample(&mut rng),
                RoleCover::Clinician => clin.sample(&mut rng),
                RoleCover::Child => child.sample(&mut rng),
                RoleCover::Both => clin.sample(&mut rng).max(child.sample(&mut rng)),
            };
            quantize(raw)
        })
        .collect();

    let scores = FrameScores::new(config.session_id.clone(), config.hop, scores)?;
    let meta = SessionMeta::new(config.session_id.clone(), config.group, config.severity)?;
    SessionBundle::new(annotation, scores, meta)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CohortSpec {
    pub sessions: Vec<SynthConfig>,
}

impl CohortSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn speaker_map() -> BTreeMap<String, Role> {
    BTreeMap::from([
        (CHILD_NAME.to_string(), Role::Child),
        (CLINICIAN_NAME.to_string(), Role::Clinician),
    ])
}

/// Writes `<id>.rttm`, `<id>.scores.csv` for every session and a
/// `manifest.json` listing them. Returns the manifest entries.
pub fn generate_cohort(spec: &CohortSpec, out_dir: &Path) -> Result<Vec<ManifestEntry>> {
    let mut ids = HashSet::new();
    for c in &spec.sessions {
        if !ids.insert(c.session_id.as_str()) {
            return Err(Error::DuplicateSession(c.session_id.clone()));
        }
        c.validate()?;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let map = speaker_map();
    let mut entries = Vec::with_capacity(spec.sessions.len());
    for config in &spec.sessions {
        let bundle = generate(config)?;
        let id = &config.session_id;
        let rttm_name = format!("{id}.rttm");
        let scores_name = format!("{id}.scores.csv");
        write(
            &out_dir.join(&rttm_name),
            &serialize_rttm(std::slice::from_ref(&bundle.annotation), &map)?,
        )?;
        write(
            &out_dir.join(&scores_name),
            &serialize_scores(&bundle.scores),
        )?;
        entries.push(ManifestEntry {
            session_id: id.clone(),
            group: config.group,
            rttm_path: rttm_name.into(),
            scores_path: scores_name.into(),
            severity: config.severity,
            speaker_map: map.clone(),
            duration_s: Some(bundle.annotation.total_duration()),
        });
    }
    write(&out_dir.join(MANIFEST_FILE), &serialize_manifest(&entries)?)?;
    Ok(entries)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Severity totals of the five demo patients.
pub const DEMO_SEVERITIES: [u32; 5] = [16, 20, 24, 30, 38];

/// Mean child speech score for a patient of the given total severity:
/// 0.62 at 16, falling by 0.01 per point.
pub fn patient_child_mean(total: u32) -> f64 {
    0.62 - 0.01 * (total as f64 - 16.0)
}

fn base_config(session_id: String, seed: u64, group: Group) -> SynthConfig {
    SynthConfig {
        session_id,
        seed,
        duration: 600.0,
        hop: DEFAULT_HOP,
        clinician_turn: LengthDist {
            mean: 4.0,
            min: 0.5,
            max: 15.0,
        },
        child_turn: LengthDist {
            mean: 3.0,
            min: 0.4,
            max: 12.0,
        },
        gap: LengthDist {
            mean: 1.2,
            min: 0.1,
            max: 6.0,
        },
        clinician_speech: BetaParams::with_mean(0.85, 6.0),
        child_speech: BetaParams::with_mean(0.78, 6.0),
        nonspeech: BetaParams::with_mean(0.2, 6.0),
        overlap_prob: 0.1,
        group,
        severity: None,
    }
}

/// Five patients (severity 16 to 38, child scores shifted down with
/// severity) and five controls, ten minutes each.
pub fn demo_cohort(seed: u64) -> CohortSpec {
    let mut sessions = Vec::new();
    for (i, total) in DEMO_SEVERITIES.into_iter().enumerate() {
        let obsession = total / 2;
        let mut c = base_config(
            format!("patient{:02}", i + 1),
            seed.wrapping_add(i as u64),
            Group::Patient,
        );
        c.child_speech = BetaParams::with_mean(patient_child_mean(total), 6.0);
        c.severity = Some(Severity {
            obsession,
            compulsion: total - obsession,
            total,
        });
        sessions.push(c);
    }
    for i in 0..5 {
        sessions.push(base_config(
            format!("control{:02}", i + 1),
            seed.wrapping_add(100 + i as u64),
            Group::Control,
        ));
    }
    CohortSpec { sessions }
}

/// `n` sessions sharing one configuration and differing only in seed.
pub fn stationary_cohort(seed: u64, n: usize) -> CohortSpec {
    CohortSpec {
        sessions: (0..n)
            .map(|i| {
                let mut c = base_config(
                    format!("stationary{:02}", i + 1),
                    seed.wrapping_add(i as u64),
                    Group::Control,
                );
                c.child_speech = BetaParams::with_mean(0.6, 6.0);
                c
            })
            .collect(),
    }
}
