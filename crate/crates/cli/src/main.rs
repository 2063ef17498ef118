//! `mft`: dense long-term point tracking over multi-delta optical flow.
//!
//! Subcommands: `synth` builds a synthetic precomputed-flow dataset, `track`
//! runs the tracker over a dataset, `eval` scores tracklets against ground
//! truth, `ablate` compares delta sets, `visualize` renders checkerboard
//! overlays. Exit codes: 0 success, 1 usage error, 2 data error.

mod commands;
mod config;
mod ppm;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use mft_core::metrics::EvalMode;
use mft_core::tracker::{DeltaSet, Direction};
use mft_core::DEFAULT_THETA_O;

use config::Config;

#[derive(Parser)]
#[command(name = "mft", version, about = "Dense long-term point tracker")]
struct Cli {
    /// TOML config file with defaults; explicit flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed behind every randomized choice; runs are bit-deterministic given
    /// identical inputs and seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset: flow/occlusion/uncertainty files for
    /// every pair the configured deltas need, a manifest, query points, and
    /// ground-truth tracks.
    Synth {
        /// Scene description file.
        #[arg(long)]
        scene: PathBuf,
        /// Output dataset directory.
        #[arg(long)]
        out_dir: PathBuf,
        /// Optional noise model file; omitted means exact flows.
        #[arg(long)]
        noise: Option<PathBuf>,
        /// Integer deltas to precompute, e.g. "1,2,4,8,16,32".
        #[arg(long)]
        deltas: Option<String>,
        /// Number of query points to sample.
        #[arg(long)]
        queries: Option<usize>,
    },
    /// Track a dataset's query points and write tracklets.
    Track {
        /// Dataset manifest file.
        #[arg(long)]
        manifest: PathBuf,
        /// Delta set, e.g. "1,2,4,8,16,32" (no "inf" with file-backed data).
        #[arg(long)]
        deltas: Option<String>,
        /// Occlusion threshold in (0, 1).
        #[arg(long)]
        occl_thresh: Option<f32>,
        /// Query points file.
        #[arg(long)]
        queries: PathBuf,
        /// fwd tracks init..last, bwd tracks init..0.
        #[arg(long)]
        direction: Option<String>,
        /// Initialization (reference) frame; defaults to 0 for fwd and the
        /// last frame for bwd.
        #[arg(long)]
        init_frame: Option<usize>,
        /// Output tracklet file.
        #[arg(long)]
        out: PathBuf,
        /// Also write per-frame dense results (flow + maps) here.
        #[arg(long)]
        save_fou: Option<PathBuf>,
    },
    /// Score tracklet files against ground-truth tracks.
    Eval {
        /// Tracklet file; repeat for multiple runs (strided mode needs one
        /// per initialization frame and direction).
        #[arg(long = "tracklets", required = true)]
        tracklets: Vec<PathBuf>,
        /// Ground-truth tracks file.
        #[arg(long)]
        gt: PathBuf,
        /// Evaluation mode: first | strided.
        #[arg(long)]
        mode: Option<String>,
        /// Coordinate rescale "WxH:WxH" (tracking res : ground-truth res).
        #[arg(long)]
        rescale: Option<String>,
        /// Optional structured report output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the tracker with several delta sets and tabulate AJ, delta_avg
    /// and OA per set.
    Ablate {
        /// Dataset directory produced by synth.
        #[arg(long)]
        dataset: PathBuf,
        /// Semicolon-separated delta sets, e.g. "1; inf,1; inf,1,2,4,8,16,32".
        #[arg(long)]
        delta_sets: Option<String>,
        /// Evaluation mode: first | strided.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        occl_thresh: Option<f32>,
        /// Optional table output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overlay the checkerboard-masked reference frame, warped by the
    /// tracked flow, onto each frame; uncovered pixels are darkened.
    Visualize {
        /// Directory of input frames (binary PPM, numeric names).
        #[arg(long)]
        frames: PathBuf,
        /// Directory of dense results from track --save-fou.
        #[arg(long)]
        fou: PathBuf,
        /// Output directory for overlay frames.
        #[arg(long)]
        out_dir: PathBuf,
        /// Checkerboard cell size in pixels.
        #[arg(long)]
        cell_size: Option<usize>,
        #[arg(long)]
        occl_thresh: Option<f32>,
        /// Brightness factor for uncovered pixels.
        #[arg(long)]
        darken: Option<f32>,
    },
}

enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<mft_core::Error> for CliError {
    fn from(e: mft_core::Error) -> Self {
        CliError::Data(e.into())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_deltas(s: &str) -> Result<DeltaSet, CliError> {
    DeltaSet::parse(s).map_err(|e| usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = Config::load(cli.config.as_deref()).map_err(CliError::Data)?;
    let seed = cli.seed.or(config.defaults.seed).unwrap_or(0);
    let default_theta = config.defaults.occl_thresh.unwrap_or(DEFAULT_THETA_O);

    match cli.command {
        Command::Synth {
            scene,
            out_dir,
            noise,
            deltas,
            queries,
        } => {
            let deltas = deltas
                .or(config.synth.deltas.clone())
                .or(config.defaults.deltas.clone())
                .unwrap_or_else(|| "1,2,4,8,16,32".to_string());
            let delta_set = parse_deltas(&deltas)?;
            if delta_set.contains_inf() {
                return Err(usage(
                    "synth precomputes flow files, so the delta set cannot contain 'inf'",
                ));
            }
            commands::synth::run(&commands::synth::SynthArgs {
                scene_path: &scene,
                out_dir: &out_dir,
                noise_path: noise.as_deref(),
                delta_set,
                num_queries: queries.or(config.synth.queries).unwrap_or(20),
                seed,
            })?;
            Ok(())
        }
        Command::Track {
            manifest,
            deltas,
            occl_thresh,
            queries,
            direction,
            init_frame,
            out,
            save_fou,
        } => {
            let deltas = deltas
                .or(config.track.deltas.clone())
                .or(config.defaults.deltas.clone())
                .unwrap_or_else(|| "1,2,4,8,16,32".to_string());
            let delta_set = parse_deltas(&deltas)?;
            commands::track::reject_inf_for_files(&delta_set).map_err(usage)?;
            let direction: Direction = direction
                .or(config.track.direction.clone())
                .unwrap_or_else(|| "fwd".into())
                .parse()
                .map_err(|e: mft_core::Error| usage(e.to_string()))?;
            commands::track::run(&commands::track::TrackArgs {
                manifest_path: &manifest,
                delta_set,
                theta_o: occl_thresh
                    .or(config.track.occl_thresh)
                    .unwrap_or(default_theta),
                queries_path: &queries,
                direction,
                init_frame,
                out_path: &out,
                save_fou: save_fou.as_deref(),
            })?;
            Ok(())
        }
        Command::Eval {
            tracklets,
            gt,
            mode,
            rescale,
            out,
        } => {
            let mode: EvalMode = mode
                .or(config.eval.mode.clone())
                .unwrap_or_else(|| "first".into())
                .parse()
                .map_err(|e: mft_core::Error| usage(e.to_string()))?;
            let rescale = match rescale.or(config.eval.rescale.clone()) {
                None => None,
                Some(s) => Some(commands::parse_rescale(&s).map_err(|e| usage(e.to_string()))?),
            };
            commands::eval::run(&commands::eval::EvalArgs {
                tracklet_paths: &tracklets,
                gt_path: &gt,
                mode,
                rescale,
                out_path: out.as_deref(),
            })?;
            Ok(())
        }
        Command::Ablate {
            dataset,
            delta_sets,
            mode,
            occl_thresh,
            out,
        } => {
            let spec = delta_sets
                .or(config.ablate.delta_sets.clone())
                .ok_or_else(|| usage("--delta-sets is required (e.g. \"1; inf,1\")"))?;
            let sets = spec
                .split(';')
                .filter(|s| !s.trim().is_empty())
                .map(parse_deltas)
                .collect::<Result<Vec<_>, _>>()?;
            if sets.is_empty() {
                return Err(usage("--delta-sets lists no delta sets"));
            }
            let mode: EvalMode = mode
                .or(config.ablate.mode.clone())
                .unwrap_or_else(|| "first".into())
                .parse()
                .map_err(|e: mft_core::Error| usage(e.to_string()))?;
            commands::ablate::run(&commands::ablate::AblateArgs {
                dataset_dir: &dataset,
                delta_sets: sets,
                theta_o: occl_thresh
                    .or(config.ablate.occl_thresh)
                    .unwrap_or(default_theta),
                mode,
                out_path: out.as_deref(),
            })?;
            Ok(())
        }
        Command::Visualize {
            frames,
            fou,
            out_dir,
            cell_size,
            occl_thresh,
            darken,
        } => {
            commands::visualize::run(&commands::visualize::VisualizeArgs {
                frames_dir: &frames,
                fou_dir: &fou,
                out_dir: &out_dir,
                cell_size: cell_size.or(config.visualize.cell_size).unwrap_or(8),
                theta_o: occl_thresh
                    .or(config.visualize.occl_thresh)
                    .unwrap_or(default_theta),
                darken: darken.or(config.visualize.darken).unwrap_or(0.3),
            })?;
            Ok(())
        }
    }
}
