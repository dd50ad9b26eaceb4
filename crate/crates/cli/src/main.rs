use std::path::PathBuf;
use std::process::ExitCode;

use camfuse_cli::{
    cmd_evaluate, cmd_fuse, cmd_pipeline, cmd_simulate, cmd_track, parse_stages, CliError, CliResult, ScenarioSource,
};
use camfuse_core::config::load_run;
use clap::{ArgGroup, Parser, Subcommand};

/// Person tracking and multi-camera fusion toolkit.
#[derive(Debug, Parser)]
#[command(name = "camfuse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic scene: ground truth, detections and a run config.
    #[command(group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
    Simulate {
        /// Scenario file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Bundled scenario (paper-shaped, equal-pair).
        #[arg(long)]
        preset: Option<String>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run per-camera tracking and write every track.
    Track {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the run file's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Track, project to the base plane and fuse.
    Fuse {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the error of an estimated trajectory against ground truth.
    Evaluate {
        /// CSV with frame,x,y columns.
        estimate: PathBuf,
        /// Ground truth (frame,x,y or frame,camera,cx,cy).
        ground_truth: PathBuf,
    },
    /// Track, fuse and write the staged error report.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated report stages to keep (raw,filtered,weighted,wta).
        #[arg(long)]
        stages: Option<String>,
    },
}

fn print_manifest(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn config_error(error: camfuse_core::Error) -> CliError {
    CliError { stage: "config", error }
}

fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Simulate { config, preset, seed, out } => {
            let source = match (&config, &preset) {
                (Some(path), _) => ScenarioSource::File(path),
                (None, Some(name)) => ScenarioSource::Preset(name),
                (None, None) => unreachable!("clap enforces one source"),
            };
            print_manifest(&cmd_simulate(source, seed, &out)?);
        }
        Command::Track { config, out } => {
            let cfg = load_run(&config).map_err(config_error)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            print_manifest(&cmd_track(&cfg, &dir)?);
        }
        Command::Fuse { config, out } => {
            let cfg = load_run(&config).map_err(config_error)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            print_manifest(&cmd_fuse(&cfg, &dir)?);
        }
        Command::Evaluate { estimate, ground_truth } => {
            print!("{}", cmd_evaluate(&estimate, &ground_truth)?);
        }
        Command::Pipeline { config, out, stages } => {
            let cfg = load_run(&config).map_err(config_error)?;
            let stages = stages.as_deref().map(parse_stages).transpose()?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            print_manifest(&cmd_pipeline(&cfg, &dir, stages.as_deref())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("camfuse: error {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
