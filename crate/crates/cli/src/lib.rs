//! Commands behind the `vadcal` binary.
//!
//! Every command loads and checks all of its inputs before it creates the
//! output directory, so a failed run leaves nothing behind. Sessions are
//! processed in parallel; results are collected in manifest order and
//! written by a single thread.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use vadcal::adapt::{
    curve_aggregate, AdaptSession, AdaptationCurve, AggregatePoint, ThresholdGrid, DEFAULT_T_MAX,
};
use vadcal::analysis::{
    improvement_deltas, session_fnr, severity_correlation, summarize, summarize_deltas,
    CorrelationResult, DistSummary, FnrAggregation,
};
use vadcal::binarize::{check_threshold, PostProcessParams, DEFAULT_THRESHOLD};
use vadcal::ingest::{load_all, Manifest, SessionBundle};
use vadcal::metrics::{pooled, role_scopes, scoped_window_rates, windowed_rates_with, RateReport};
use vadcal::model::{Group, Role};
use vadcal::synth::{demo_cohort, generate_cohort, stationary_cohort, CohortSpec, MANIFEST_FILE};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

pub const DEFAULT_WINDOW_LEN: f64 = 60.0;

pub const RATES_STEM: &str = "rates";
pub const GROUPS_FILE: &str = "groups.json";
pub const CURVES_STEM: &str = "curves";
pub const CURVE_AGG_FILE: &str = "curve_agg.json";
pub const IMPROVEMENT_STEM: &str = "improvement";
pub const IMPROVEMENT_SUMMARY_FILE: &str = "improvement_summary.json";
pub const ORACLE_STEM: &str = "oracle";

/// A failed command and the process exit code it maps to.
#[derive(Debug)]
pub struct CommandError {
    pub code: i32,
    pub error: anyhow::Error,
}

impl CommandError {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        CommandError {
            code: EXIT_INPUT,
            error: error.into(),
        }
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Self {
        CommandError {
            code: EXIT_INTERNAL,
            error: error.into(),
        }
    }
}

impl From<vadcal::Error> for CommandError {
    fn from(e: vadcal::Error) -> Self {
        if e.is_input_error() {
            CommandError::input(e)
        } else {
            CommandError::internal(e)
        }
    }
}

impl fmt::Display for CommandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.error)
    }
}

pub type CmdResult<T> = std::result::Result<T, CommandError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Settings shared by `evaluate`, `adapt` and `sweep`.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub out: PathBuf,
    /// Fixed threshold for `evaluate`; the baseline for `adapt` and `sweep`.
    pub threshold: f64,
    pub window_len: f64,
    pub grid: ThresholdGrid,
    pub t_max: usize,
    pub post: PostProcessParams,
    pub format: Format,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub fnr_aggregation: FnrAggregation,
}

impl RunConfig {
    pub fn new(manifest: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            manifest: manifest.into(),
            out: out.into(),
            threshold: DEFAULT_THRESHOLD,
            window_len: DEFAULT_WINDOW_LEN,
            grid: ThresholdGrid::default(),
            t_max: DEFAULT_T_MAX,
            post: PostProcessParams::default(),
            format: Format::Csv,
            jobs: 0,
            fnr_aggregation: FnrAggregation::Pooled,
        }
    }

    pub fn validate(&self) -> vadcal::Result<()> {
        check_threshold(self.threshold)?;
        self.post.validate()?;
        if !(self.window_len.is_finite() && self.window_len > 0.0) {
            return Err(vadcal::Error::Domain(format!(
                "window length must be positive, got {}",
                self.window_len
            )));
        }
        ThresholdGrid::new(self.grid.lo, self.grid.hi, self.grid.step)?;
        if self.t_max == 0 {
            return Err(vadcal::Error::Domain("t-max must be at least 1".into()));
        }
        Ok(())
    }

    fn load(&self) -> CmdResult<(Manifest, Vec<SessionBundle>)> {
        self.validate()?;
        Ok(load_all(&self.manifest)?)
    }
}

pub fn scope_name(scope: Option<Role>) -> &'static str {
    scope.map_or("all", |r| r.as_str())
}

/// Applies `f` to every bundle on a pool of `jobs` threads, keeping order.
fn par_map<T, F>(jobs: usize, bundles: &[SessionBundle], f: F) -> CmdResult<Vec<T>>
where
    T: Send,
    F: Fn(&SessionBundle) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(CommandError::internal)?;
    Ok(pool.install(|| bundles.par_iter().map(f).collect()))
}

fn create_out_dir(dir: &Path) -> CmdResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CommandError::input(anyhow::anyhow!("creating {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> CmdResult<PathBuf> {
    std::fs::write(path, text)
        .map_err(|e| CommandError::input(anyhow::anyhow!("writing {}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).map_err(CommandError::internal)?;
    text.push('\n');
    write_text(path, &text)
}

#[derive(Serialize)]
struct Table<'a, T> {
    schema_version: u32,
    rows: &'a [T],
}

/// Writes `rows` to `<dir>/<stem>.csv` or, as `{schema_version, rows}`, to
/// `<dir>/<stem>.json`.
fn write_table<T: Serialize>(
    dir: &Path,
    stem: &str,
    rows: &[T],
    format: Format,
) -> CmdResult<PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.serialize(row).map_err(CommandError::internal)?;
            }
            let bytes = w
                .into_inner()
                .map_err(|e| CommandError::internal(anyhow::anyhow!("{e}")))?;
            let text = String::from_utf8(bytes).map_err(CommandError::internal)?;
            write_text(&path, &text)
        }
        Format::Json => write_json(
            &path,
            &Table {
                schema_version: SCHEMA_VERSION,
                rows,
            },
        ),
    }
}

// ---------------------------------------------------------------- evaluate

/// One line of `rates.csv`. Undefined rates are empty fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub session_id: String,
    pub group: Group,
    pub role: String,
    pub window_index: usize,
    pub window_start: f64,
    pub window_end: f64,
    pub threshold: f64,
    pub fnr: Option<f64>,
    pub fpr: Option<f64>,
    pub fn_frames: u64,
    pub fp_frames: u64,
    pub true_speech_frames: u64,
    pub true_nonspeech_frames: u64,
    pub hop: f64,
    pub flagged: bool,
}

impl RateRow {
    fn new(group: Group, r: &RateReport) -> Self {
        let window = r.window.expect("windowed reports carry their span");
        RateRow {
            session_id: r.session_id.clone(),
            group,
            role: scope_name(r.role_filter).to_string(),
            window_index: r.window_index.expect("windowed reports carry their index"),
            window_start: window.start(),
            window_end: window.end(),
            threshold: r.threshold,
            fnr: r.fnr,
            fpr: r.fpr,
            fn_frames: r.counts.fn_frames,
            fp_frames: r.counts.fp_frames,
            true_speech_frames: r.counts.true_speech_frames,
            true_nonspeech_frames: r.counts.true_nonspeech_frames,
            hop: r.counts.hop,
            flagged: r.is_flagged(),
        }
    }
}

/// Window reports of one session, window-major with scopes
/// all/clinician/child inside each window.
pub fn session_reports(
    bundle: &SessionBundle,
    threshold: f64,
    window_len: f64,
    post: &PostProcessParams,
) -> vadcal::Result<Vec<RateReport>> {
    let per_scope = role_scopes()
        .into_iter()
        .map(|scope| windowed_rates_with(bundle, threshold, window_len, scope, post))
        .collect::<vadcal::Result<Vec<_>>>()?;
    let n = per_scope[0].len();
    Ok((0..n)
        .flat_map(|w| per_scope.iter().map(move |reports| reports[w].clone()))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCell {
    pub group: Group,
    pub role: String,
    pub n_sessions: usize,
    pub pooled_fnr: Option<f64>,
    pub pooled_fpr: Option<f64>,
    /// Distribution of per-session FNR.
    pub session_fnr: Option<DistSummary>,
    /// Distribution of defined per-window FNR.
    pub window_fnr: Option<DistSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFnr {
    pub session_id: String,
    pub group: Group,
    pub severity_total: Option<u32>,
    pub role: String,
    pub fnr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupsReport {
    pub schema_version: u32,
    pub threshold: f64,
    pub window_len: f64,
    pub post_process: PostProcessParams,
    pub fnr_aggregation: FnrAggregation,
    pub cells: Vec<GroupCell>,
    pub sessions: Vec<SessionFnr>,
    /// Patient child FNR against total severity; absent when it cannot be
    /// computed (see `notes`).
    pub severity_correlation: Option<CorrelationResult>,
    pub notes: Vec<String>,
}

pub fn group_report(
    bundles: &[SessionBundle],
    reports: &[Vec<RateReport>],
    cfg: &RunConfig,
    manifest_warnings: &[String],
) -> vadcal::Result<GroupsReport> {
    let mut notes = manifest_warnings.to_vec();
    let mut cells = Vec::new();
    let mut sessions = Vec::new();
    for scope in role_scopes() {
        for (b, rs) in bundles.iter().zip(reports) {
            let scoped: Vec<RateReport> = rs
                .iter()
                .filter(|r| r.role_filter == scope)
                .cloned()
                .collect();
            sessions.push(SessionFnr {
                session_id: b.session_id().to_string(),
                group: b.meta.group,
                severity_total: b.meta.severity.map(|s| s.total),
                role: scope_name(scope).to_string(),
                fnr: session_fnr(&scoped, cfg.fnr_aggregation),
            });
        }
    }
    for group in Group::ALL {
        for scope in role_scopes() {
            let members: Vec<usize> = (0..bundles.len())
                .filter(|&i| bundles[i].meta.group == group)
                .collect();
            if members.is_empty() {
                continue;
            }
            let scoped: Vec<RateReport> = members
                .iter()
                .flat_map(|&i| {
                    reports[i]
                        .iter()
                        .filter(|r| r.role_filter == scope)
                        .cloned()
                })
                .collect();
            let per_session: Vec<f64> = sessions
                .iter()
                .filter(|s| s.group == group && s.role == scope_name(scope))
                .filter_map(|s| s.fnr)
                .collect();
            let per_window: Vec<f64> = scoped.iter().filter_map(|r| r.fnr).collect();
            let total = pooled(&scoped);
            cells.push(GroupCell {
                group,
                role: scope_name(scope).to_string(),
                n_sessions: members.len(),
                pooled_fnr: total.and_then(|c| c.fnr()),
                pooled_fpr: total.and_then(|c| c.fpr()),
                session_fnr: summarize(&per_session).ok(),
                window_fnr: summarize(&per_window).ok(),
            });
        }
    }

    let pairs: Vec<(Option<f64>, f64)> = sessions
        .iter()
        .filter(|s| s.group == Group::Patient && s.role == scope_name(Some(Role::Child)))
        .filter_map(|s| s.fnr.map(|f| (s.severity_total.map(f64::from), f)))
        .collect();
    let severity_correlation = if pairs.iter().any(|p| p.0.is_none()) {
        notes.push("severity correlation skipped: a patient session has no severity".into());
        None
    } else {
        match severity_correlation(&pairs) {
            Ok(c) => Some(c),
            Err(e) => {
                notes.push(format!("severity correlation skipped: {e}"));
                None
            }
        }
    };
    Ok(GroupsReport {
        schema_version: SCHEMA_VERSION,
        threshold: cfg.threshold,
        window_len: cfg.window_len,
        post_process: cfg.post,
        fnr_aggregation: cfg.fnr_aggregation,
        cells,
        sessions,
        severity_correlation,
        notes,
    })
}

/// Fixed-threshold evaluation: `rates.{csv,json}` and `groups.json`.
pub fn cmd_evaluate(cfg: &RunConfig) -> CmdResult<Vec<PathBuf>> {
    let (manifest, bundles) = cfg.load()?;
    let reports = par_map(cfg.jobs, &bundles, |b| {
        session_reports(b, cfg.threshold, cfg.window_len, &cfg.post)
    })?
    .into_iter()
    .collect::<vadcal::Result<Vec<_>>>()?;
    let rows: Vec<RateRow> = bundles
        .iter()
        .zip(&reports)
        .flat_map(|(b, rs)| rs.iter().map(move |r| RateRow::new(b.meta.group, r)))
        .collect();
    let groups = group_report(&bundles, &reports, cfg, &manifest.warnings)?;

    create_out_dir(&cfg.out)?;
    Ok(vec![
        write_table(&cfg.out, RATES_STEM, &rows, cfg.format)?,
        write_json(&cfg.out.join(GROUPS_FILE), &groups)?,
    ])
}

// ------------------------------------------------------------------- adapt

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub session_id: String,
    pub group: Group,
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
pub struct ImprovementRow {
    pub session_id: String,
    pub group: Group,
    pub role: String,
    pub window_index: usize,
    pub threshold_default: f64,
    pub threshold_adapted: f64,
    pub fnr_default: f64,
    pub fnr_adapted: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCurve {
    pub group: Group,
    pub n_sessions: usize,
    pub points: Vec<AggregatePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveAggReport {
    pub schema_version: u32,
    pub window_len: f64,
    pub t_max: usize,
    pub grid: String,
    pub groups: Vec<GroupCurve>,
    /// Sessions with fewer than `2 * t_max` windows.
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementCell {
    pub group: Group,
    pub role: String,
    pub delta: DistSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementSummary {
    pub schema_version: u32,
    pub threshold_default: f64,
    pub t_max: usize,
    pub cells: Vec<ImprovementCell>,
}

/// Adaptation result for one session: the curve plus validation-window
/// reports at the default and at the adapted threshold.
#[derive(Debug, Clone)]
pub struct SessionAdaptation {
    pub curve: AdaptationCurve,
    pub default_reports: Vec<RateReport>,
    pub adapted_reports: Vec<RateReport>,
}

impl SessionAdaptation {
    pub fn adapted_threshold(&self) -> f64 {
        self.curve
            .points
            .last()
            .expect("curves have t_max points")
            .threshold
    }
}

/// Runs adaptation on one session; `Ok(None)` when it is too short.
pub fn adapt_session(
    bundle: &SessionBundle,
    cfg: &RunConfig,
) -> vadcal::Result<Option<SessionAdaptation>> {
    let session = AdaptSession::new(bundle, cfg.window_len)?;
    let curve = match session.few_instance_adapt(cfg.t_max, &cfg.grid) {
        Ok(c) => c,
        Err(vadcal::Error::Size(msg)) => {
            log::warn!("skipping: {msg}");
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    let adapted_th = curve
        .points
        .last()
        .expect("curves have t_max points")
        .threshold;
    let valid = &curve.validation_windows;
    let default_reports =
        scoped_window_rates(bundle, cfg.window_len, valid, cfg.threshold, &cfg.post)?;
    let adapted_reports =
        scoped_window_rates(bundle, cfg.window_len, valid, adapted_th, &cfg.post)?;
    Ok(Some(SessionAdaptation {
        curve,
        default_reports,
        adapted_reports,
    }))
}

#[derive(Debug, Clone)]
pub struct AdaptOutcome {
    pub files: Vec<PathBuf>,
    pub skipped: Vec<String>,
}

/// Few-instance adaptation: `curves`, `curve_agg.json`, `improvement` and
/// `improvement_summary.json`.
pub fn cmd_adapt(cfg: &RunConfig) -> CmdResult<AdaptOutcome> {
    let (_, bundles) = cfg.load()?;
    let results = par_map(cfg.jobs, &bundles, |b| adapt_session(b, cfg))?
        .into_iter()
        .collect::<vadcal::Result<Vec<_>>>()?;

    let mut skipped = Vec::new();
    let mut done = Vec::new();
    let mut groups = HashMap::new();
    for (b, r) in bundles.iter().zip(results) {
        match r {
            Some(a) => {
                groups.insert(b.session_id().to_string(), b.meta.group);
                done.push(a);
            }
            None => skipped.push(b.session_id().to_string()),
        }
    }
    if done.is_empty() {
        return Err(CommandError::input(anyhow::anyhow!(
            "no session has the {} windows adaptation needs",
            2 * cfg.t_max
        )));
    }

    let curve_rows: Vec<CurveRow> = done
        .iter()
        .flat_map(|a| {
            a.curve.points.iter().map(|p| CurveRow {
                session_id: a.curve.session_id.clone(),
                group: a.curve.group,
                train_windows: p.train_windows,
                threshold: p.threshold,
                objective: p.objective,
                train_fnr: p.train_fnr,
                train_fpr: p.train_fpr,
                valid_fnr: p.valid_fnr,
                valid_fpr: p.valid_fpr,
                flagged: p.flagged,
            })
        })
        .collect();

    let curves: Vec<AdaptationCurve> = done.iter().map(|a| a.curve.clone()).collect();
    let mut group_curves = Vec::new();
    for group in Group::ALL {
        let n = curves.iter().filter(|c| c.group == group).count();
        if n > 0 {
            group_curves.push(GroupCurve {
                group,
                n_sessions: n,
                points: curve_aggregate(&curves, group)?,
            });
        }
    }
    let agg = CurveAggReport {
        schema_version: SCHEMA_VERSION,
        window_len: cfg.window_len,
        t_max: cfg.t_max,
        grid: cfg.grid.to_string(),
        groups: group_curves,
        skipped: skipped.clone(),
    };

    let default: Vec<RateReport> = done
        .iter()
        .flat_map(|a| a.default_reports.iter().cloned())
        .collect();
    let adapted: Vec<RateReport> = done
        .iter()
        .flat_map(|a| a.adapted_reports.iter().cloned())
        .collect();
    let deltas = improvement_deltas(&default, &adapted, &groups)?;
    let adapted_th: HashMap<&str, f64> = done
        .iter()
        .map(|a| (a.curve.session_id.as_str(), a.adapted_threshold()))
        .collect();
    let improvement_rows: Vec<ImprovementRow> = deltas
        .iter()
        .map(|d| ImprovementRow {
            session_id: d.session_id.clone(),
            group: d.group,
            role: scope_name(d.role).to_string(),
            window_index: d.window_index.expect("validation reports are windowed"),
            threshold_default: cfg.threshold,
            threshold_adapted: adapted_th[d.session_id.as_str()],
            fnr_default: d.fnr_default,
            fnr_adapted: d.fnr_adapted,
            delta: d.delta,
        })
        .collect();
    let summary = ImprovementSummary {
        schema_version: SCHEMA_VERSION,
        threshold_default: cfg.threshold,
        t_max: cfg.t_max,
        cells: summarize_deltas(&deltas)?
            .into_iter()
            .map(|(k, delta)| ImprovementCell {
                group: k.group,
                role: scope_name(k.role).to_string(),
                delta,
            })
            .collect(),
    };

    create_out_dir(&cfg.out)?;
    let files = vec![
        write_table(&cfg.out, CURVES_STEM, &curve_rows, cfg.format)?,
        write_json(&cfg.out.join(CURVE_AGG_FILE), &agg)?,
        write_table(&cfg.out, IMPROVEMENT_STEM, &improvement_rows, cfg.format)?,
        write_json(&cfg.out.join(IMPROVEMENT_SUMMARY_FILE), &summary)?,
    ];
    Ok(AdaptOutcome { files, skipped })
}

// ------------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub session_id: String,
    pub group: Group,
    pub window_index: usize,
    pub window_start: f64,
    pub window_end: f64,
    pub threshold: f64,
    pub objective: f64,
    pub default_threshold: f64,
    pub fnr_default: Option<f64>,
    pub fnr_adapted: Option<f64>,
    pub delta: Option<f64>,
}

/// Best threshold for each window on its own: `oracle.{csv,json}`.
pub fn cmd_sweep(cfg: &RunConfig) -> CmdResult<Vec<PathBuf>> {
    let (_, bundles) = cfg.load()?;
    let per_session = par_map(cfg.jobs, &bundles, |b| {
        AdaptSession::new(b, cfg.window_len)?.per_window_oracle(&cfg.grid, cfg.threshold)
    })?
    .into_iter()
    .collect::<vadcal::Result<Vec<_>>>()?;
    let rows: Vec<OracleRow> = bundles
        .iter()
        .zip(&per_session)
        .flat_map(|(b, ws)| {
            ws.iter().map(move |o| OracleRow {
                session_id: b.session_id().to_string(),
                group: b.meta.group,
                window_index: o.window_index,
                window_start: o.window.start(),
                window_end: o.window.end(),
                threshold: o.threshold,
                objective: o.objective,
                default_threshold: o.default_threshold,
                fnr_default: o.fnr_default,
                fnr_adapted: o.fnr_adapted,
                delta: o.delta,
            })
        })
        .collect();
    create_out_dir(&cfg.out)?;
    Ok(vec![write_table(&cfg.out, ORACLE_STEM, &rows, cfg.format)?])
}

// ------------------------------------------------------------------- synth

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preset {
    /// Five patients of rising severity and five controls.
    #[default]
    Demo,
    /// Identically configured sessions that differ only in seed.
    Stationary,
}

#[derive(Debug, Clone)]
pub enum SynthSource {
    Spec(PathBuf),
    Preset {
        preset: Preset,
        seed: u64,
        sessions: usize,
    },
}

pub fn cohort_spec(source: &SynthSource) -> CmdResult<CohortSpec> {
    match source {
        SynthSource::Spec(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CommandError::input(anyhow::anyhow!("reading {}: {e}", path.display()))
            })?;
            Ok(CohortSpec::from_json(&text)?)
        }
        SynthSource::Preset {
            preset,
            seed,
            sessions,
        } => Ok(match preset {
            Preset::Demo => demo_cohort(*seed),
            Preset::Stationary => stationary_cohort(*seed, *sessions),
        }),
    }
}

/// Writes a synthetic cohort and its manifest; returns the manifest path.
pub fn cmd_synth(source: &SynthSource, out: &Path) -> CmdResult<PathBuf> {
    generate_cohort(&cohort_spec(source)?, out)?;
    Ok(out.join(MANIFEST_FILE))
}
