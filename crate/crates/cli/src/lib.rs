//! Subcommands behind the `camfuse` binary.
//!
//! Each command builds its full output set in memory and only then writes
//! it; if a write fails, files already written by that command are removed.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use camfuse_core::config::{self, RunConfig};
use camfuse_core::evaluation::{mse, StageKind};
use camfuse_core::io::{self, GroundTruth};
use camfuse_core::pipeline::{self, PipelineInput, PipelineOptions, PipelineOutput};
use camfuse_core::{fuse_ground_truth, CameraId, Error, ErrorKind, Point2, ScenarioConfig, Trajectory};

/// A core error tagged with the pipeline stage that raised it.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub error: Error,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self.error.kind() {
            ErrorKind::Config => 1,
            ErrorKind::Data => 2,
            ErrorKind::Internal => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.stage, self.error)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

trait Stage<T> {
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T> Stage<T> for camfuse_core::Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|error| CliError { stage, error })
    }
}

/// Files to be written together into one directory.
#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    /// Writes every file under `dir`, removing the ones already written if a
    /// later write fails. Returns the written paths.
    pub fn commit(self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })
            .stage("write")?;
        let mut written = Vec::new();
        for (name, contents) in self.files {
            let path = dir.join(&name);
            if let Err(e) = std::fs::write(&path, contents) {
                for p in &written {
                    let _ = std::fs::remove_file(p);
                }
                return Err(Error::Io { path, source: e }).stage("write");
            }
            written.push(path);
        }
        Ok(written)
    }
}

pub enum ScenarioSource<'a> {
    File(&'a Path),
    Preset(&'a str),
}

pub fn load_scenario(source: ScenarioSource<'_>, seed: Option<u64>) -> CliResult<ScenarioConfig> {
    let mut cfg = match source {
        ScenarioSource::File(path) => config::load_scenario(path).stage("config")?,
        ScenarioSource::Preset(name) => {
            let text = config::preset_text(name)
                .ok_or_else(|| Error::Config {
                    key: "--preset".into(),
                    message: format!("unknown preset {name:?}; available: {}", config::PRESETS.join(", ")),
                })
                .stage("config")?;
            config::parse_scenario(text).stage("config")?
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Simulated scene as files: `gt.csv`, `gt_cameras.csv`,
/// `detections_<camera>.csv` and a ready-to-run `run.toml`.
pub fn simulate_outputs(cfg: &ScenarioConfig) -> CliResult<OutputSet> {
    let sim = camfuse_core::simulate(cfg).stage("simulate")?;
    let mut out = OutputSet::default();
    out.add("gt.csv", io::trajectory_csv(&sim.gt_base));
    out.add("gt_cameras.csv", io::gt_per_camera_csv(&sim.gt_per_camera));
    for (cam, dets) in &sim.detections {
        out.add(format!("detections_{cam}.csv"), io::detections_csv(dets));
    }
    out.add("run.toml", config::run_config_for_scenario(cfg).stage("simulate")?);
    Ok(out)
}

pub fn cmd_simulate(source: ScenarioSource<'_>, seed: Option<u64>, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let cfg = load_scenario(source, seed)?;
    simulate_outputs(&cfg)?.commit(out_dir)
}

/// Reads every input named by a run config.
pub fn ingest(cfg: &RunConfig) -> CliResult<PipelineInput> {
    let mut input = PipelineInput::default();
    for (cam, cam_cfg) in &cfg.cameras {
        let path = &cam_cfg.detections;
        let dets = io::read_detections(path).stage("ingest")?;
        if let Some((i, d)) = dets.iter().enumerate().find(|(_, d)| &d.camera != cam) {
            return Err(Error::Input {
                path: path.clone(),
                line: i as u64 + 2,
                message: format!("row belongs to camera '{}', expected '{cam}'", d.camera),
            })
            .stage("ingest");
        }
        input.detections.insert(cam.clone(), dets);
        input.homographies.insert(cam.clone(), cam_cfg.homography);
    }
    if let Some(gt) = &cfg.ground_truth {
        input.ground_truth = Some(io::read_ground_truth(gt).stage("ingest")?);
    }
    Ok(input)
}

fn options(cfg: &RunConfig, with_series: bool) -> PipelineOptions {
    PipelineOptions {
        tracker: cfg.tracker,
        fusion: cfg.fusion.clone(),
        with_series,
    }
}

fn track_files(out: &mut OutputSet, result: &PipelineOutput) {
    for (cam, tracks) in &result.tracks {
        out.add(format!("tracks_{cam}.csv"), io::tracks_csv(tracks));
    }
}

fn fusion_files(out: &mut OutputSet, result: &PipelineOutput) {
    for (cam, traj) in &result.filtered {
        out.add(format!("filtered_{cam}.csv"), io::trajectory_csv(traj));
    }
    out.add("fused_weighted.csv", io::fused_csv(&result.weighted));
    out.add("fused_wta.csv", io::fused_csv(&result.wta));
}

pub fn cmd_track(cfg: &RunConfig, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let input = ingest(cfg)?;
    let tracks = pipeline::track_cameras(&input.detections, &cfg.tracker).stage("track")?;
    let result = PipelineOutput {
        tracks,
        ..PipelineOutput::default()
    };
    let mut out = OutputSet::default();
    track_files(&mut out, &result);
    out.commit(out_dir)
}

pub fn cmd_fuse(cfg: &RunConfig, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut input = ingest(cfg)?;
    input.ground_truth = None;
    let result = pipeline::run_pipeline(&input, &options(cfg, false)).stage("fuse")?;
    let mut out = OutputSet::default();
    track_files(&mut out, &result);
    fusion_files(&mut out, &result);
    out.commit(out_dir)
}

/// Full chain. `stages` limits which report rows are kept.
pub fn pipeline_outputs(cfg: &RunConfig, stages: Option<&[StageKind]>) -> CliResult<OutputSet> {
    let input = ingest(cfg)?;
    let result = pipeline::run_pipeline(&input, &options(cfg, true)).stage("pipeline")?;
    let mut out = OutputSet::default();
    track_files(&mut out, &result);
    fusion_files(&mut out, &result);
    match result.report {
        Some(mut report) => {
            if let Some(kinds) = stages {
                report.retain_kinds(kinds);
            }
            out.add("report.csv", io::report_csv(&report));
            out.add("report.txt", io::report_table(&report));
            out.add("errors.csv", io::errors_csv(report.per_frame.as_deref().unwrap_or_default()));
        }
        None => out.add(
            "report.txt",
            "note: no ground truth configured ([input] ground_truth); error stages were not computed\n".into(),
        ),
    }
    Ok(out)
}

pub fn cmd_pipeline(cfg: &RunConfig, out_dir: &Path, stages: Option<&[StageKind]>) -> CliResult<Vec<PathBuf>> {
    pipeline_outputs(cfg, stages)?.commit(out_dir)
}

/// `mse,rmse,mean_dist,frames` for an estimate against ground truth.
///
/// Per-camera ground truth is averaged across cameras per frame without any
/// projection.
pub fn cmd_evaluate(estimate: &Path, gt: &Path) -> CliResult<String> {
    let est = io::read_trajectory(estimate).stage("ingest")?;
    let gt = match io::read_ground_truth(gt).stage("ingest")? {
        GroundTruth::Base(t) => t,
        GroundTruth::PerCamera(per) => average_cameras(&per).stage("evaluate")?,
    };
    let s = mse(&est, &gt).stage("evaluate")?;
    Ok(format!(
        "mse,rmse,mean_dist,frames\n{},{},{},{}\n",
        io::fmt_f64(s.mse),
        io::fmt_f64(s.rmse),
        io::fmt_f64(s.mean_dist),
        s.frames
    ))
}

fn average_cameras(per: &BTreeMap<CameraId, Trajectory>) -> camfuse_core::Result<Trajectory> {
    let mut by_frame: BTreeMap<u64, Vec<Point2>> = BTreeMap::new();
    for t in per.values() {
        for (f, p) in t.iter() {
            by_frame.entry(f).or_default().push(p);
        }
    }
    by_frame
        .into_iter()
        .map(|(f, pts)| fuse_ground_truth(&pts).map(|p| (f, p)))
        .collect()
}

pub fn parse_stages(s: &str) -> CliResult<Vec<StageKind>> {
    s.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| {
            StageKind::parse(name).ok_or_else(|| CliError {
                stage: "config",
                error: Error::Config {
                    key: "--stages".into(),
                    message: format!("unknown stage {name:?}; expected raw, filtered, weighted or wta"),
                },
            })
        })
        .collect()
}
