use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use vadcal::adapt::{ThresholdGrid, DEFAULT_T_MAX};
use vadcal::analysis::FnrAggregation;
use vadcal::binarize::PostProcessParams;
use vadcal_cli::{
    cmd_adapt, cmd_evaluate, cmd_sweep, cmd_synth, CommandError, Format, Preset, RunConfig,
    SynthSource,
};

/// Frame-level VAD evaluation and few-instance threshold adaptation.
#[derive(Parser)]
#[command(name = "vadcal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-window error rates at a fixed threshold.
    Evaluate(RunArgs),
    /// Adapt the threshold on the first windows of each session.
    Adapt(RunArgs),
    /// Best threshold for every window on its own.
    Sweep(RunArgs),
    /// Write a synthetic cohort with annotations, scores and a manifest.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Manifest JSON listing the sessions.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Decision threshold; the baseline for `adapt` and `sweep`.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Window length in seconds.
    #[arg(long, default_value_t = vadcal_cli::DEFAULT_WINDOW_LEN)]
    window_len: f64,
    /// Threshold search grid as lo:hi:step.
    #[arg(long, default_value = "0:1:0.01")]
    grid: ThresholdGrid,
    /// Largest number of training windows.
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    t_max: usize,
    /// Remove predicted speech runs shorter than this many seconds.
    #[arg(long, default_value_t = 0.0)]
    post_min_speech: f64,
    /// Fill predicted gaps shorter than this many seconds.
    #[arg(long, default_value_t = 0.0)]
    post_min_gap: f64,
    /// Format of tabular reports.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// How per-session FNR is formed from windows in groups.json.
    #[arg(long, value_enum, default_value_t = AggregationArg::Pooled)]
    fnr_aggregation: AggregationArg,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Cohort specification JSON. Without it a preset is used.
    #[arg(long, conflicts_with = "preset")]
    spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PresetArg::Demo)]
    preset: PresetArg,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of sessions for the stationary preset.
    #[arg(long, default_value_t = 20)]
    sessions: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregationArg {
    Pooled,
    MeanOfWindows,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Demo,
    Stationary,
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            threshold: self.threshold,
            window_len: self.window_len,
            grid: self.grid,
            t_max: self.t_max,
            post: PostProcessParams {
                min_speech: self.post_min_speech,
                min_gap: self.post_min_gap,
            },
            format: match self.format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            },
            jobs: self.jobs,
            fnr_aggregation: match self.fnr_aggregation {
                AggregationArg::Pooled => FnrAggregation::Pooled,
                AggregationArg::MeanOfWindows => FnrAggregation::MeanOfWindows,
            },
            ..RunConfig::new(&self.manifest, &self.out)
        }
    }
}

fn run(cli: Cli) -> Result<(), CommandError> {
    match cli.command {
        Command::Evaluate(a) => {
            cmd_evaluate(&a.config())?;
        }
        Command::Adapt(a) => {
            let outcome = cmd_adapt(&a.config())?;
            if !outcome.skipped.is_empty() {
                eprintln!("skipped short sessions: {}", outcome.skipped.join(", "));
            }
        }
        Command::Sweep(a) => {
            cmd_sweep(&a.config())?;
        }
        Command::Synth(a) => {
            let source = match a.spec {
                Some(path) => SynthSource::Spec(path),
                None => SynthSource::Preset {
                    preset: match a.preset {
                        PresetArg::Demo => Preset::Demo,
                        PresetArg::Stationary => Preset::Stationary,
                    },
                    seed: a.seed,
                    sessions: a.sessions,
                },
            };
            cmd_synth(&source, &a.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
