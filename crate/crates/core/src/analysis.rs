//! Group-level statistics over rate reports.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{pooled, RateReport};
use crate::model::{Group, Role};

/// Box-plot statistics. Quartiles use linear interpolation between closest
/// ranks: the `p` quantile of sorted `x[0..n]` is read at position `p * (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistSummary {
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(values: &[f64]) -> Result<DistSummary> {
    if values.is_empty() {
        return Err(Error::Size("cannot summarize an empty sample".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("non-finite value {v} in sample")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    Ok(DistSummary {
        n: sorted.len(),
        median: quantile_sorted(&sorted, 0.5),
        q1,
        q3,
        iqr: q3 - q1,
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    })
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub spearman_rho: f64,
    pub pearson_r: f64,
    pub n: usize,
    /// Severities min-max mapped onto `[min FNR, max FNR]`, in input order.
    pub normalized_severity: Vec<f64>,
}

/// Rank and linear correlation between per-child severity and FNR.
/// Every pair must carry a severity; controls are filtered out by callers.
pub fn severity_correlation(per_child: &[(Option<f64>, f64)]) -> Result<CorrelationResult> {
    let n = per_child.len();
    if n < 2 {
        return Err(Error::Size(format!(
            "correlation needs at least 2 pairs, got {n}"
        )));
    }
    let mut severity = Vec::with_capacity(n);
    let mut fnr = Vec::with_capacity(n);
    for (i, (s, f)) in per_child.iter().enumerate() {
        let s = s.ok_or_else(|| Error::Validation(format!("pair {i} has no severity score")))?;
        severity.push(s);
        fnr.push(*f);
    }
    let pearson_r = pearson(&severity, &fnr)?;
    let spearman_rho = spearman(&severity, &fnr)?;

    let (smin, smax) = min_max(&severity);
    let (fmin, fmax) = min_max(&fnr);
    let normalized_severity = severity
        .iter()
        .map(|s| {
            if smax > smin {
                fmin + (s - smin) / (smax - smin) * (fmax - fmin)
            } else {
                0.5 * (fmin + fmax)
            }
        })
        .collect();
    Ok(CorrelationResult {
        spearman_rho,
        pearson_r,
        n,
        normalized_severity,
    })
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
            (lo.min(*x), hi.max(*x))
        })
}

/// Spearman's rank correlation. Without ties this is the exact
/// `1 - 6 sum(d^2) / (n (n^2 - 1))` on integer ranks; with ties it is the
/// Pearson correlation of mid-ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let distinct = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s.windows(2).all(|w| w[0] != w[1])
    };
    if x.len() == y.len() && x.len() >= 2 && distinct(x) && distinct(y) {
        let n = x.len() as u128;
        let d2: u128 = rx
            .iter()
            .zip(&ry)
            .map(|(a, b)| {
                let d = (*a as i128 - *b as i128).unsigned_abs();
                d * d
            })
            .sum();
        let num = 6 * d2;
        let den = n * (n * n - 1);
        // 1 - num/den, computed so that the extremes come out exactly.
        return Ok((den as f64 - num as f64) / den as f64);
    }
    pearson(&rx, &ry)
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Size(format!(
            "pearson needs two equal-length samples of at least 2 (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Validation(
            "correlation undefined for a constant sample".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// How a per-session FNR is formed from its window reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FnrAggregation {
    /// Summed counts over all windows, then re-rated.
    #[default]
    Pooled,
    /// Mean of the defined per-window FNRs.
    MeanOfWindows,
}

pub fn session_fnr(reports: &[RateReport], mode: FnrAggregation) -> Option<f64> {
    match mode {
        FnrAggregation::Pooled => pooled(reports)?.fnr(),
        FnrAggregation::MeanOfWindows => {
            let defined: Vec<f64> = reports.iter().filter_map(|r| r.fnr).collect();
            (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
        }
    }
}

/// One (speaker role, participant group) cell. `role = None` means all speech.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub role: Option<Role>,
    pub group: Group,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementDelta {
    pub session_id: String,
    pub group: Group,
    pub role: Option<Role>,
    pub window_index: Option<usize>,
    pub fnr_default: f64,
    pub fnr_adapted: f64,
    /// `fnr_default - fnr_adapted`; positive is an improvement.
    pub delta: f64,
}

type PairKey = (String, Option<usize>, Option<Role>);

fn pair_key(r: &RateReport) -> PairKey {
    (r.session_id.clone(), r.window_index, r.role_filter)
}

fn describe(k: &PairKey) -> String {
    format!(
        "session `{}`, window {}, role {}",
        k.0,
        k.1.map_or("-".to_string(), |w| w.to_string()),
        k.2.map_or("all", |r| r.as_str())
    )
}

/// Pairs default and adapted reports by (session, window, role) and returns
/// the FNR change for every pair where both rates are defined, in the order
/// of `default_reports`.
pub fn improvement_deltas(
    default_reports: &[RateReport],
    adapted_reports: &[RateReport],
    groups: &HashMap<String, Group>,
) -> Result<Vec<ImprovementDelta>> {
    let mut adapted: HashMap<PairKey, &RateReport> = HashMap::new();
    for r in adapted_reports {
        adapted.insert(pair_key(r), r);
    }
    let mut out = Vec::with_capacity(default_reports.len());
    for d in default_reports {
        let key = pair_key(d);
        let a = adapted
            .remove(&key)
            .ok_or_else(|| Error::Pairing(describe(&key)))?;
        let group = *groups.get(&d.session_id).ok_or_else(|| {
            Error::Validation(format!(
                "no participant group for session `{}`",
                d.session_id
            ))
        })?;
        if let (Some(fd), Some(fa)) = (d.fnr, a.fnr) {
            out.push(ImprovementDelta {
                session_id: d.session_id.clone(),
                group,
                role: d.role_filter,
                window_index: d.window_index,
                fnr_default: fd,
                fnr_adapted: fa,
                delta: fd - fa,
            });
        }
    }
    if let Some(key) = adapted.keys().min() {
        return Err(Error::Pairing(describe(key)));
    }
    Ok(out)
}

/// Summary of FNR improvement per (role, group) cell.
pub fn improvement(
    default_reports: &[RateReport],
    adapted_reports: &[RateReport],
    groups: &HashMap<String, Group>,
) -> Result<BTreeMap<CellKey, DistSummary>> {
    summarize_deltas(&improvement_deltas(
        default_reports,
        adapted_reports,
        groups,
    )?)
}

pub fn summarize_deltas(deltas: &[ImprovementDelta]) -> Result<BTreeMap<CellKey, DistSummary>> {
    let mut cells: BTreeMap<CellKey, Vec<f64>> = BTreeMap::new();
    for d in deltas {
        cells
            .entry(CellKey {
                role: d.role,
                group: d.group,
            })
            .or_default()
            .push(d.delta);
    }
    cells
        .into_iter()
        .map(|(k, v)| Ok((k, summarize(&v)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{rates, ConfusionCounts};

    #[test]
    fn textbook_quartiles() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((s.median, s.q1, s.q3, s.iqr), (3.0, 2.0, 4.0, 2.0));
        assert_eq!((s.min, s.max, s.mean, s.n), (1.0, 5.0, 3.0, 5));
    }

    #[test]
    fn interpolated_quartiles() {
        let s = summarize(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (1.75, 2.5, 3.25));
    }

    #[test]
    fn single_value_summary() {
        let s = summarize(&[0.3]).unwrap();
        assert_eq!(
            (s.median, s.q1, s.q3, s.iqr, s.min, s.max),
            (0.3, 0.3, 0.3, 0.0, 0.3, 0.3)
        );
        assert!(matches!(summarize(&[]), Err(Error::Size(_))));
    }

    #[test]
    fn monotone_and_antitone() {
        let sev = [16.0, 20.0, 24.0, 30.0, 38.0];
        let fnr = [0.1, 0.15, 0.3, 0.31, 0.6];
        let pairs: Vec<_> = sev.iter().zip(&fnr).map(|(s, f)| (Some(*s), *f)).collect();
        let r = severity_correlation(&pairs).unwrap();
        assert_eq!(r.spearman_rho, 1.0);
        assert!(r.pearson_r > 0.9);
        assert_eq!(r.normalized_severity[0], 0.1);
        assert_eq!(r.normalized_severity[4], 0.6);

        let rev: Vec<_> = sev
            .iter()
            .zip(fnr.iter().rev())
            .map(|(s, f)| (Some(*s), *f))
            .collect();
        assert_eq!(severity_correlation(&rev).unwrap().spearman_rho, -1.0);
    }

    #[test]
    fn correlation_input_errors() {
        assert!(severity_correlation(&[(Some(16.0), 0.1), (None, 0.2)]).is_err());
        assert!(severity_correlation(&[(Some(16.0), 0.1)]).is_err());
        assert!(severity_correlation(&[(Some(16.0), 0.1), (Some(16.0), 0.2)]).is_err());
    }

    /// Spearman as the Pearson correlation of mid-ranks, where each value's
    /// rank is computed by counting: rank = #less + (#equal + 1) / 2.
    fn brute_spearman(x: &[f64], y: &[f64]) -> f64 {
        let rank = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .map(|a| {
                    let less = v.iter().filter(|b| *b < a).count() as f64;
                    let eq = v.iter().filter(|b| *b == a).count() as f64;
                    less + (eq + 1.0) / 2.0
                })
                .collect()
        };
        let (rx, ry) = (rank(x), rank(y));
        let n = x.len() as f64;
        let mx = rx.iter().sum::<f64>() / n;
        let my = ry.iter().sum::<f64>() / n;
        let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
        cov / (vx * vy).sqrt()
    }

    #[test]
    fn tied_severities_use_mid_ranks() {
        let sev = [16.0, 20.0, 20.0, 30.0, 30.0, 30.0];
        let fnr = [0.2, 0.1, 0.4, 0.3, 0.5, 0.45];
        assert_eq!(average_ranks(&sev), vec![1.0, 2.5, 2.5, 5.0, 5.0, 5.0]);
        let pairs: Vec<_> = sev.iter().zip(&fnr).map(|(s, f)| (Some(*s), *f)).collect();
        let r = severity_correlation(&pairs).unwrap();
        assert!((r.spearman_rho - brute_spearman(&sev, &fnr)).abs() < 1e-12);
    }

    fn report(session: &str, window: usize, role: Option<Role>, fn_frames: u64) -> RateReport {
        let mut r = rates(
            session,
            ConfusionCounts {
                fn_frames,
                fp_frames: 0,
                true_speech_frames: 100,
                true_nonspeech_frames: 100,
                hop: 0.01,
            },
            0.5,
            role,
        );
        r.window_index = Some(window);
        r
    }

    fn groups() -> HashMap<String, Group> {
        HashMap::from([
            ("p".to_string(), Group::Patient),
            ("c".to_string(), Group::Control),
        ])
    }

    #[test]
    fn identical_reports_zero_deltas() {
        let reps = vec![
            report("p", 0, Some(Role::Child), 30),
            report("c", 0, None, 10),
        ];
        let deltas = improvement_deltas(&reps, &reps, &groups()).unwrap();
        assert!(deltas.iter().all(|d| d.delta == 0.0));
        let cells = improvement(&reps, &reps, &groups()).unwrap();
        assert_eq!(cells.len(), 2);
    }

    #[test]
    fn deltas_antisymmetric_and_paired() {
        let a = vec![
            report("p", 0, Some(Role::Child), 30),
            report("p", 1, Some(Role::Child), 20),
        ];
        let b = vec![
            report("p", 1, Some(Role::Child), 5),
            report("p", 0, Some(Role::Child), 10),
        ];
        let ab = improvement_deltas(&a, &b, &groups()).unwrap();
        let ba = improvement_deltas(&b, &a, &groups()).unwrap();
        assert!((ab[0].delta - 0.2).abs() < 1e-12);
        for d in &ab {
            let back = ba
                .iter()
                .find(|x| x.window_index == d.window_index)
                .unwrap();
            assert_eq!(d.delta, -back.delta);
        }
        let unpaired = improvement_deltas(&a, &b[..1], &groups());
        assert!(matches!(unpaired, Err(Error::Pairing(msg)) if msg.contains("window 0")));
        let extra = vec![b[0].clone(), b[1].clone(), report("c", 3, None, 1)];
        assert!(matches!(
            improvement_deltas(&a, &extra, &groups()),
            Err(Error::Pairing(_))
        ));
    }

    #[test]
    fn session_fnr_modes() {
        let reps = vec![report("p", 0, None, 10), report("p", 1, None, 30)];
        assert_eq!(session_fnr(&reps, FnrAggregation::Pooled), Some(0.2));
        assert_eq!(session_fnr(&reps, FnrAggregation::MeanOfWindows), Some(0.2));
        assert_eq!(session_fnr(&[], FnrAggregation::Pooled), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn summarize_permutation_invariant(mut v in proptest::collection::vec(-1e3f64..1e3, 1..60), seed in any::<u64>()) {
                let a = summarize(&v).unwrap();
                let n = v.len();
                // deterministic shuffle
                let mut s = seed;
                for i in (1..n).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    v.swap(i, (s >> 33) as usize % (i + 1));
                }
                let b = summarize(&v).unwrap();
                prop_assert_eq!(a.median, b.median);
                prop_assert_eq!(a.q1, b.q1);
                prop_assert_eq!(a.q3, b.q3);
                prop_assert!(a.q1 <= a.median && a.median <= a.q3);
            }

            #[test]
            fn spearman_invariant_under_monotone_maps(
                pts in proptest::collection::vec((0.0f64..40.0, 0.0f64..1.0), 3..30)
            ) {
                let pairs: Vec<_> = pts.iter().map(|(s, f)| (Some(*s), *f)).collect();
                let Ok(base) = severity_correlation(&pairs) else { return Ok(()); };
                let mapped: Vec<_> = pts.iter().map(|(s, f)| (Some(s.powi(3) + 7.0), f.exp())).collect();
                let m = severity_correlation(&mapped).unwrap();
                prop_assert!((base.spearman_rho - m.spearman_rho).abs() < 1e-12);
                let affine: Vec<_> = pts.iter().map(|(s, f)| (Some(2.5 * s + 1.0), 0.5 * f - 3.0)).collect();
                let a = severity_correlation(&affine).unwrap();
                prop_assert!((base.pearson_r - a.pearson_r).abs() < 1e-9);
                prop_assert!((-1.0..=1.0).contains(&base.spearman_rho));
            }
        }
    }
}
