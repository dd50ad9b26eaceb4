//! Scenario and run configuration files.
//!
//! Both are TOML documents made of `key = value` pairs grouped under dotted
//! sections. Unknown keys are rejected so a typo never silently falls back
//! to a default.
//!
//! Scenario file:
//!
//! ```toml
//! [scenario]
//! frames = 200
//! seed = 42
//!
//! [truth]
//! model = "cv"                 # "cv" | "ca"
//! position = [100.0, 120.0]
//! velocity = [1.5, 0.4]
//! acceleration = [0.0, 0.0]    # optional, used by "ca"
//!
//! [camera.corridor]
//! homography = [1, 0, 0, 0, 1, 0, 0, 0, 1]   # base plane -> image, row-major
//! noise_sigma = 3.0
//! miss_prob = 0.05
//! occlusions = [[120, 199]]    # inclusive frame windows
//! bbox = [40.0, 100.0]         # optional constant w, h
//! ```
//!
//! Cameras are ordered by id; that order fixes their random streams.
//!
//! Run file (paths are relative to the file's directory):
//!
//! ```toml
//! [tracker]
//! model = "cv"
//! gate_radius = 50.0
//! max_misses = 30
//! q_scale = 1.0
//! r_scale = 1.0
//! p0_scale = 1.0
//!
//! [fusion]
//! miss_threshold = 3
//! score_window = 10
//! weights = { corridor = 0.8, front = 0.2 }
//!
//! [camera.corridor]
//! detections = "detections_corridor.csv"
//! homography = [1, 0, 0, 0, 1, 0, 0, 0, 1]   # image -> base plane
//!
//! [input]
//! ground_truth = "gt.csv"      # optional
//!
//! [output]
//! dir = "out"
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::estimation::{MotionKind, MotionModel, NoiseConfig};
use crate::fusion::FusionConfig;
use crate::geometry::{CameraId, Homography, Point2};
use crate::io::fmt_f64;
use crate::scenario::{CameraSpec, ScenarioConfig, TruthConfig};
use crate::tracking::TrackerConfig;

const PAPER_SHAPED: &str = include_str!("../presets/paper-shaped.toml");
const EQUAL_PAIR: &str = include_str!("../presets/equal-pair.toml");

/// Names of the bundled scenario presets.
pub const PRESETS: [&str; 2] = ["paper-shaped", "equal-pair"];

pub fn preset_text(name: &str) -> Option<&'static str> {
    match name {
        "paper-shaped" => Some(PAPER_SHAPED),
        "equal-pair" => Some(EQUAL_PAIR),
        _ => None,
    }
}

/// Key-tracking view of one TOML table.
struct Section<'a> {
    prefix: String,
    table: &'a Table,
    used: BTreeSet<&'a str>,
}

impl<'a> Section<'a> {
    fn new(prefix: impl Into<String>, table: &'a Table) -> Self {
        Self {
            prefix: prefix.into(),
            table,
            used: BTreeSet::new(),
        }
    }

    fn key(&self, k: &str) -> String {
        if self.prefix.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.prefix)
        }
    }

    fn err(&self, k: &str, msg: impl Into<String>) -> Error {
        Error::config(self.key(k), msg)
    }

    fn get(&mut self, k: &'a str) -> Option<&'a Value> {
        let v = self.table.get(k)?;
        self.used.insert(k);
        Some(v)
    }

    fn table(&mut self, k: &'a str) -> Result<Option<Section<'a>>> {
        let prefix = self.key(k);
        match self.get(k) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Section::new(prefix, t))),
            Some(_) => Err(self.err(k, "expected a table")),
        }
    }

    fn f64(&mut self, k: &'a str) -> Result<Option<f64>> {
        match self.get(k) {
            None => Ok(None),
            Some(v) => as_f64(v).map(Some).ok_or_else(|| self.err(k, "expected a number")),
        }
    }

    fn u64(&mut self, k: &'a str) -> Result<Option<u64>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(self.err(k, "expected a non-negative integer")),
        }
    }

    fn str(&mut self, k: &'a str) -> Result<Option<&'a str>> {
        match self.get(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(self.err(k, "expected a string")),
        }
    }

    fn numbers(&mut self, k: &'a str, len: usize) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get(k) else { return Ok(None) };
        let nums: Option<Vec<f64>> = v.as_array().and_then(|a| a.iter().map(as_f64).collect());
        match nums {
            Some(n) if n.len() == len => Ok(Some(n)),
            _ => Err(self.err(k, format!("expected an array of {len} numbers"))),
        }
    }

    fn point(&mut self, k: &'a str) -> Result<Option<Point2>> {
        Ok(self.numbers(k, 2)?.map(|v| Point2::new(v[0], v[1])))
    }

    fn homography(&mut self, k: &'a str) -> Result<Option<Homography>> {
        match self.numbers(k, 9)? {
            None => Ok(None),
            Some(v) => Homography::from_row_major(&v)
                .map(Some)
                .map_err(|e| self.err(k, e.to_string())),
        }
    }

    fn motion(&mut self, k: &'a str) -> Result<Option<MotionKind>> {
        match self.str(k)? {
            None => Ok(None),
            Some("cv") => Ok(Some(MotionKind::ConstantVelocity)),
            Some("ca") => Ok(Some(MotionKind::ConstantAcceleration)),
            Some(other) => Err(self.err(k, format!("expected \"cv\" or \"ca\", got {other:?}"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.table.keys().find(|k| !self.used.contains(k.as_str())) {
            Some(k) => Err(self.err(k, "unknown key")),
            None => Ok(()),
        }
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn parse_toml(text: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| Error::config("<syntax>", e.to_string().trim_end().to_string()))
}

fn remap(e: Error, key: &str) -> Error {
    match e {
        Error::Config { key: k, message } => Error::config(format!("{key}.{k}"), message),
        other => other,
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let doc = parse_toml(text)?;
    let mut root = Section::new("", &doc);

    let mut sc = root.table("scenario")?.ok_or_else(|| Error::config("scenario", "missing section"))?;
    let frames = sc.u64("frames")?.ok_or_else(|| sc.err("frames", "required"))?;
    let seed = sc.u64("seed")?.unwrap_or(0);
    sc.finish()?;

    let mut tr = root.table("truth")?.ok_or_else(|| Error::config("truth", "missing section"))?;
    let truth = TruthConfig {
        kind: tr.motion("model")?.unwrap_or(MotionKind::ConstantVelocity),
        position: tr.point("position")?.unwrap_or_default(),
        velocity: tr.point("velocity")?.unwrap_or_default(),
        acceleration: tr.point("acceleration")?.unwrap_or_default(),
    };
    tr.finish()?;

    let mut cams = root.table("camera")?.ok_or_else(|| Error::config("camera", "missing section"))?;
    let mut cameras = Vec::new();
    let tbl = cams.table;
    for id in tbl.keys() {
        let mut c = cams.table(id)?.expect("key exists");
        let mut spec = CameraSpec::new(id.as_str());
        if let Some(h) = c.homography("homography")? {
            spec.homography = h;
        }
        spec.noise_sigma = c.f64("noise_sigma")?.unwrap_or(0.0);
        spec.miss_prob = c.f64("miss_prob")?.unwrap_or(0.0);
        if let Some(v) = c.get("occlusions") {
            let windows: Option<Vec<(u64, u64)>> = v.as_array().and_then(|a| {
                a.iter()
                    .map(|w| match w.as_array().map(|x| x.as_slice()) {
                        Some([Value::Integer(s), Value::Integer(e)]) if *s >= 0 && *e >= 0 => {
                            Some((*s as u64, *e as u64))
                        }
                        _ => None,
                    })
                    .collect()
            });
            spec.occlusions = windows.ok_or_else(|| c.err("occlusions", "expected [[start, end], ...]"))?;
        }
        if let Some(b) = c.numbers("bbox", 2)? {
            spec.bbox_size = (b[0], b[1]);
        }
        c.finish()?;
        cameras.push(spec);
    }
    cams.finish()?;
    root.finish()?;

    let cfg = ScenarioConfig {
        frames,
        truth,
        cameras,
        seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraInput {
    /// Image plane → base plane.
    pub homography: Homography,
    pub detections: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tracker: TrackerConfig,
    pub fusion: FusionConfig,
    pub cameras: BTreeMap<CameraId, CameraInput>,
    pub ground_truth: Option<PathBuf>,
    pub output_dir: PathBuf,
}

/// Parses a run file; relative paths are resolved against `base_dir`.
pub fn parse_run(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let doc = parse_toml(text)?;
    let mut root = Section::new("", &doc);

    let mut tracker = TrackerConfig::default();
    if let Some(mut t) = root.table("tracker")? {
        let kind = t.motion("model")?.unwrap_or(MotionKind::ConstantVelocity);
        let dt = t.f64("dt")?.unwrap_or(1.0);
        tracker.model = MotionModel::new(kind, dt).map_err(|e| remap(e, "tracker"))?;
        let d = NoiseConfig::default();
        tracker.noise = NoiseConfig::new(
            t.f64("q_scale")?.unwrap_or(d.q_scale),
            t.f64("r_scale")?.unwrap_or(d.r_scale),
            t.f64("p0_scale")?.unwrap_or(d.p0_scale),
        )
        .map_err(|e| remap(e, "tracker"))?;
        if let Some(g) = t.f64("gate_radius")? {
            tracker.gate_radius = g;
        }
        if let Some(m) = t.u64("max_misses")? {
            tracker.max_misses = u32::try_from(m).map_err(|_| t.err("max_misses", "too large"))?;
        }
        t.finish()?;
    }
    tracker.validate()?;

    let mut cameras = BTreeMap::new();
    let mut cams = root.table("camera")?.ok_or_else(|| Error::config("camera", "missing section"))?;
    let tbl = cams.table;
    for id in tbl.keys() {
        let mut c = cams.table(id)?.expect("key exists");
        let detections = c.str("detections")?.ok_or_else(|| c.err("detections", "required"))?;
        let homography = c.homography("homography")?.unwrap_or_default();
        c.finish()?;
        cameras.insert(
            CameraId::from(id.as_str()),
            CameraInput {
                homography,
                detections: base_dir.join(detections),
            },
        );
    }
    cams.finish()?;
    if cameras.is_empty() {
        return Err(Error::config("camera", "at least one camera is required"));
    }

    let mut miss_threshold = 3;
    let mut score_window = 10;
    let mut weights: Option<Vec<(CameraId, f64)>> = None;
    if let Some(mut f) = root.table("fusion")? {
        if let Some(m) = f.u64("miss_threshold")? {
            miss_threshold = u32::try_from(m).map_err(|_| f.err("miss_threshold", "too large"))?;
        }
        if let Some(w) = f.u64("score_window")? {
            score_window = w as usize;
        }
        if let Some(mut w) = f.table("weights")? {
            let mut list = Vec::new();
            let tbl = w.table;
            for cam in tbl.keys() {
                let v = w.f64(cam)?.expect("key exists");
                if !cameras.contains_key(&CameraId::from(cam.as_str())) {
                    return Err(w.err(cam, "no [camera] section for this weight"));
                }
                list.push((CameraId::from(cam.as_str()), v));
            }
            w.finish()?;
            weights = Some(list);
        }
        f.finish()?;
    }
    let weights = weights.unwrap_or_else(|| default_weights(cameras.keys()));
    for cam in cameras.keys() {
        if !weights.iter().any(|(c, _)| c == cam) {
            return Err(Error::config(format!("fusion.weights.{cam}"), "missing weight for camera"));
        }
    }
    let fusion = FusionConfig::new(weights, miss_threshold, score_window)?;

    let mut ground_truth = None;
    if let Some(mut i) = root.table("input")? {
        ground_truth = i.str("ground_truth")?.map(|p| base_dir.join(p));
        i.finish()?;
    }
    let mut output_dir = base_dir.join("out");
    if let Some(mut o) = root.table("output")? {
        if let Some(d) = o.str("dir")? {
            output_dir = base_dir.join(d);
        }
        o.finish()?;
    }
    root.finish()?;

    Ok(RunConfig {
        tracker,
        fusion,
        cameras,
        ground_truth,
        output_dir,
    })
}

/// 0.8 / 0.2 for a corridor/front pair, equal weights otherwise.
fn default_weights<'a>(cameras: impl Iterator<Item = &'a CameraId>) -> Vec<(CameraId, f64)> {
    let cams: Vec<&CameraId> = cameras.collect();
    let ids: Vec<&str> = cams.iter().map(|c| c.as_str()).collect();
    if ids == ["corridor", "front"] {
        return FusionConfig::corridor_front().weights().clone().into_iter().collect();
    }
    let w = 1.0 / cams.len() as f64;
    cams.into_iter().map(|c| (c.clone(), w)).collect()
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    parse_scenario(&crate::io::read_text(path)?)
}

pub fn load_run(path: &Path) -> Result<RunConfig> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_run(&crate::io::read_text(path)?, base)
}

/// A run file that feeds a simulated scene straight into the pipeline.
///
/// Homographies are inverted (the scenario maps base → image, the run file
/// wants image → base) and detection paths point at the sibling CSVs.
pub fn run_config_for_scenario(cfg: &ScenarioConfig) -> Result<String> {
    let mut out = String::from(
        "# Generated alongside simulated detections.\n\n\
         [tracker]\nmodel = \"cv\"\ngate_radius = 50.0\nmax_misses = 30\n\
         q_scale = 1.0\nr_scale = 1.0\np0_scale = 1.0\n\n\
         [fusion]\nmiss_threshold = 3\nscore_window = 10\n\n\
         [input]\nground_truth = \"gt.csv\"\n\n\
         [output]\ndir = \"out\"\n",
    );
    let mut cams: Vec<&CameraSpec> = cfg.cameras.iter().collect();
    cams.sort_by(|a, b| a.id.cmp(&b.id));
    for cam in cams {
        let inv = cam.homography.inverse()?;
        let nums: Vec<String> = inv.row_major().iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&format!(
            "\n[camera.{id}]\ndetections = \"detections_{id}.csv\"\nhomography = [{}]\n",
            nums.join(", "),
            id = toml_key(cam.id.as_str()),
        ));
    }
    Ok(out)
}

fn toml_key(s: &str) -> String {
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        s.to_string()
    } else {
        format!("{s:?}")
    }
}
