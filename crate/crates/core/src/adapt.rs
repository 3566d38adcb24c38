//! Threshold selection from labelled windows.
//!
//! The objective for a set of windows is pooled FNR plus pooled FPR:
//! `sum(fn) / sum(true speech) + sum(fp) / sum(true non-speech)`. It is
//! piecewise constant in the threshold, so it is minimised exhaustively on
//! a fixed grid with ties going to the lowest threshold.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::binarize::check_threshold;
use crate::error::{Error, Result};
use crate::ingest::SessionBundle;
use crate::metrics::{ratio, ConfusionCounts, SessionGrid};
use crate::model::{Group, RoleCover, TimeSpan};

pub const DEFAULT_T_MAX: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        ThresholdGrid {
            lo: 0.0,
            hi: 1.0,
            step: 0.01,
        }
    }
}

impl ThresholdGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::Domain(format!(
                "grid bounds must satisfy 0 <= lo < hi <= 1, got {lo}..{hi}"
            )));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Domain(format!(
                "grid step must be positive, got {step}"
            )));
        }
        Ok(ThresholdGrid { lo, hi, step })
    }

    /// Ascending grid points `lo, lo + step, ...`, always ending at `hi`.
    /// Points are rounded to 12 decimals so that e.g. the tenth point of
    /// the default grid is exactly `0.1`.
    pub fn points(&self) -> Vec<f64> {
        let round = |x: f64| (x * 1e12).round() / 1e12;
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        let mut pts: Vec<f64> = (0..=n)
            .map(|i| round(self.lo + i as f64 * self.step))
            .filter(|p| *p < self.hi)
            .collect();
        pts.push(self.hi);
        pts
    }
}

impl FromStr for ThresholdGrid {
    type Err = Error;

    /// Parses `lo:hi:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, step] = parts.as_slice() else {
            return Err(Error::Domain(format!(
                "grid must be `lo:hi:step`, got `{s}`"
            )));
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("invalid grid value `{v}`")))
        };
        ThresholdGrid::new(num(lo)?, num(hi)?, num(step)?)
    }
}

impl fmt::Display for ThresholdGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lo, self.hi, self.step)
    }
}

/// Objective value at one threshold. An undefined pooled term contributes
/// zero to `value` and sets `flagged`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub threshold: f64,
    pub value: f64,
    pub fnr: Option<f64>,
    pub fpr: Option<f64>,
    pub flagged: bool,
}

impl ObjectiveValue {
    pub fn from_counts(threshold: f64, c: &ConfusionCounts) -> Self {
        let fnr = c.fnr();
        let fpr = c.fpr();
        ObjectiveValue {
            threshold,
            value: fnr.unwrap_or(0.0) + fpr.unwrap_or(0.0),
            fnr,
            fpr,
            flagged: fnr.is_none() || fpr.is_none(),
        }
    }
}

/// Scores of one window split by reference class, each sorted ascending.
#[derive(Debug, Clone)]
struct WindowScores {
    speech: Vec<f64>,
    nonspeech: Vec<f64>,
}

impl WindowScores {
    /// Speech frames whose score does not exceed `th`.
    fn false_negatives(&self, th: f64) -> usize {
        self.speech.partition_point(|&s| s <= th)
    }

    /// Non-speech frames whose score exceeds `th`.
    fn false_positives(&self, th: f64) -> usize {
        self.nonspeech.len() - self.nonspeech.partition_point(|&s| s <= th)
    }
}

/// A session prepared for repeated objective evaluation.
#[derive(Debug, Clone)]
pub struct AdaptSession {
    pub session_id: String,
    pub group: Group,
    pub hop: f64,
    pub windows: Vec<TimeSpan>,
    scores: Vec<WindowScores>,
}

impl AdaptSession {
    pub fn new(bundle: &SessionBundle, window_len: f64) -> Result<Self> {
        let grid = SessionGrid::new(bundle, window_len)?;
        let covers = grid
            .reference
            .role_labels
            .as_deref()
            .expect("reference labels carry role coverage");
        let raw = bundle.scores.scores();
        let scores = grid
            .window_frames
            .iter()
            .map(|frames| {
                let mut w = WindowScores {
                    speech: Vec::new(),
                    nonspeech: Vec::new(),
                };
                for k in frames.clone() {
                    if covers[k] == RoleCover::None {
                        w.nonspeech.push(raw[k]);
                    } else {
                        w.speech.push(raw[k]);
                    }
                }
                w.speech.sort_by(f64::total_cmp);
                w.nonspeech.sort_by(f64::total_cmp);
                w
            })
            .collect();
        Ok(AdaptSession {
            session_id: bundle.session_id().to_string(),
            group: bundle.meta.group,
            hop: bundle.scores.hop(),
            windows: grid.windows,
            scores,
        })
    }

    pub fn n_windows(&self) -> usize {
        self.windows.len()
    }

    fn check_windows(&self, windows: &[usize]) -> Result<()> {
        if windows.is_empty() {
            return Err(Error::Size("window set is empty".into()));
        }
        if let Some(&bad) = windows.iter().find(|&&w| w >= self.n_windows()) {
            return Err(Error::Size(format!(
                "window index {bad} out of range; session `{}` has {} windows",
                self.session_id,
                self.n_windows()
            )));
        }
        Ok(())
    }

    /// Unfiltered confusion counts pooled over `windows` at `threshold`.
    pub fn counts(&self, windows: &[usize], threshold: f64) -> Result<ConfusionCounts> {
        check_threshold(threshold)?;
        self.check_windows(windows)?;
        let mut c = ConfusionCounts::zero(self.hop);
        for &w in windows {
            let ws = &self.scores[w];
            c.fn_frames += ws.false_negatives(threshold) as u64;
            c.fp_frames += ws.false_positives(threshold) as u64;
            c.true_speech_frames += ws.speech.len() as u64;
            c.true_nonspeech_frames += ws.nonspeech.len() as u64;
        }
        Ok(c)
    }

    pub fn objective(&self, windows: &[usize], threshold: f64) -> Result<ObjectiveValue> {
        Ok(ObjectiveValue::from_counts(
            threshold,
            &self.counts(windows, threshold)?,
        ))
    }

    /// Exhaustive grid search; the lowest threshold wins ties.
    pub fn optimal_threshold(
        &self,
        windows: &[usize],
        grid: &ThresholdGrid,
    ) -> Result<ObjectiveValue> {
        let mut best: Option<ObjectiveValue> = None;
        for th in grid.points() {
            let v = self.objective(windows, th)?;
            if best.is_none_or(|b| v.value < b.value) {
                best = Some(v);
            }
        }
        Ok(best.expect("grid has at least two points"))
    }

    pub fn fnr(&self, windows: &[usize], threshold: f64) -> Result<Option<f64>> {
        let c = self.counts(windows, threshold)?;
        Ok(ratio(c.fn_frames, c.true_speech_frames))
    }
}

pub fn objective(
    bundle: &SessionBundle,
    window_len: f64,
    windows: &[usize],
    threshold: f64,
) -> Result<ObjectiveValue> {
    AdaptSession::new(bundle, window_len)?.objective(windows, threshold)
}

pub fn optimal_threshold(
    bundle: &SessionBundle,
    window_len: f64,
    windows: &[usize],
    grid: &ThresholdGrid,
) -> Result<ObjectiveValue> {
    AdaptSession::new(bundle, window_len)?.optimal_threshold(windows, grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowOracle {
    pub window_index: usize,
    pub window: TimeSpan,
    pub threshold: f64,
    pub objective: f64,
    pub default_threshold: f64,
    pub fnr_default: Option<f64>,
    pub fnr_adapted: Option<f64>,
    /// `fnr_default - fnr_adapted`; positive means the adapted threshold
    /// misses less speech.
    pub delta: Option<f64>,
}

/// Optimises every window on its own.
pub fn per_window_oracle(
    bundle: &SessionBundle,
    window_len: f64,
    grid: &ThresholdGrid,
    default_threshold: f64,
) -> Result<Vec<WindowOracle>> {
    AdaptSession::new(bundle, window_len)?.per_window_oracle(grid, default_threshold)
}

impl AdaptSession {
    pub fn per_window_oracle(
        &self,
        grid: &ThresholdGrid,
        default_threshold: f64,
    ) -> Result<Vec<WindowOracle>> {
        check_threshold(default_threshold)?;
        (0..self.n_windows())
            .map(|w| {
                let best = self.optimal_threshold(&[w], grid)?;
                let fnr_default = self.fnr(&[w], default_threshold)?;
                let fnr_adapted = best.fnr;
                Ok(WindowOracle {
                    window_index: w,
                    window: self.windows[w],
                    threshold: best.threshold,
                    objective: best.value,
                    default_threshold,
                    fnr_default,
                    fnr_adapted,
                    delta: fnr_default.zip(fnr_adapted).map(|(d, a)| d - a),
                })
            })
            .collect()
    }

    /// Trains on the first `T` windows for `T = 1..=t_max` and validates
    /// on the last `t_max` windows.
    pub fn few_instance_adapt(
        &self,
        t_max: usize,
        grid: &ThresholdGrid,
    ) -> Result<AdaptationCurve> {
        if t_max == 0 {
            return Err(Error::Size("t_max must be at least 1".into()));
        }
        let n = self.n_windows();
        if n < 2 * t_max {
            return Err(Error::Size(format!(
                "session `{}` has {n} windows; adaptation with t_max = {t_max} needs at least {}",
                self.session_id,
                2 * t_max
            )));
        }
        let valid: Vec<usize> = (n - t_max..n).collect();
        let points = (1..=t_max)
            .map(|t| {
                let train: Vec<usize> = (0..t).collect();
                let best = self.optimal_threshold(&train, grid)?;
                let vc = self.counts(&valid, best.threshold)?;
                Ok(CurvePoint {
                    train_windows: t,
                    threshold: best.threshold,
                    objective: best.value,
                    train_fnr: best.fnr,
                    train_fpr: best.fpr,
                    valid_fnr: vc.fnr(),
                    valid_fpr: vc.fpr(),
                    flagged: best.flagged,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AdaptationCurve {
            session_id: self.session_id.clone(),
            group: self.group,
            validation_windows: valid,
            points,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Number of leading windows used for training.
    pub train_windows: usize,
    pub threshold: f64,
    pub objective: f64,
    pub train_fnr: Option<f64>,
    pub train_fpr: Option<f64>,
    pub valid_fnr: Option<f64>,
    pub valid_fpr: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationCurve {
    pub session_id: String,
    pub group: Group,
    pub validation_windows: Vec<usize>,
    pub points: Vec<CurvePoint>,
}

impl AdaptationCurve {
    pub fn at(&self, train_windows: usize) -> Option<&CurvePoint> {
        self.points
            .iter()
            .find(|p| p.train_windows == train_windows)
    }
}

pub fn few_instance_adapt(
    bundle: &SessionBundle,
    window_len: f64,
    t_max: usize,
    grid: &ThresholdGrid,
) -> Result<AdaptationCurve> {
    AdaptSession::new(bundle, window_len)?.few_instance_adapt(t_max, grid)
}

/// Mean with a two-sided 95% Student-t interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub n: usize,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub ci95_lo: Option<f64>,
    pub ci95_hi: Option<f64>,
}

impl MeanCi {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanCi {
                n,
                mean: None,
                sd: None,
                ci95_lo: None,
                ci95_hi: None,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return MeanCi {
                n,
                mean: Some(mean),
                sd: None,
                ci95_lo: None,
                ci95_hi: None,
            };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        let half = t_quantile_975(n - 1) * sd / (n as f64).sqrt();
        MeanCi {
            n,
            mean: Some(mean),
            sd: Some(sd),
            ci95_lo: Some(mean - half),
            ci95_hi: Some(mean + half),
        }
    }
}

/// 0.975 quantile of Student's t with `df` degrees of freedom.
pub fn t_quantile_975(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub train_windows: usize,
    pub threshold: MeanCi,
    pub train_fnr: MeanCi,
    pub valid_fnr: MeanCi,
}

/// Per training length, mean and 95% CI across the sessions of `group`.
/// Undefined rates are left out of their statistic.
pub fn curve_aggregate(curves: &[AdaptationCurve], group: Group) -> Result<Vec<AggregatePoint>> {
    let members: Vec<&AdaptationCurve> = curves.iter().filter(|c| c.group == group).collect();
    if members.is_empty() {
        return Err(Error::Size(format!("no {group} curves to aggregate")));
    }
    if members.len() < 2 {
        log::warn!("only one {group} curve; confidence intervals are undefined");
    }
    let lengths: std::collections::BTreeSet<usize> = members
        .iter()
        .flat_map(|c| c.points.iter().map(|p| p.train_windows))
        .collect();
    Ok(lengths
        .into_iter()
        .map(|t| {
            let pts: Vec<&CurvePoint> = members.iter().filter_map(|c| c.at(t)).collect();
            let collect = |f: &dyn Fn(&CurvePoint) -> Option<f64>| -> Vec<f64> {
                pts.iter().filter_map(|p| f(p)).collect()
            };
            AggregatePoint {
                train_windows: t,
                threshold: MeanCi::from_values(&collect(&|p| Some(p.threshold))),
                train_fnr: MeanCi::from_values(&collect(&|p| p.train_fnr)),
                valid_fnr: MeanCi::from_values(&collect(&|p| p.valid_fnr)),
            }
        })
        .collect())
}
