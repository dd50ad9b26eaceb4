//! Synthetic multi-camera scenes with known ground truth.
//!
//! The truth follows constant-velocity or constant-acceleration dynamics on
//! the base plane. Each camera sees it through its own homography (base
//! plane → image plane) with isotropic Gaussian centroid noise, random
//! per-frame misses and explicit occlusion windows.
//!
//! # Random stream
//!
//! Camera `i` (0-based, in configuration order) draws from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `i`. For every frame,
//! in order, it draws one uniform `f64` for the miss test followed by two
//! standard normals for the x and y noise. All three are drawn whether or not
//! the frame ends up missed or occluded, so changing a miss probability or
//! occlusion window never shifts the noise seen on other frames.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimation::MotionKind;
use crate::geometry::{BBox, CameraId, Detection, Homography, Point2, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthConfig {
    pub kind: MotionKind,
    pub position: Point2,
    pub velocity: Point2,
    /// Ignored for constant-velocity truth.
    pub acceleration: Point2,
}

impl TruthConfig {
    /// Truth positions for frames `0..frames`, by iterating one-frame steps.
    pub fn positions(&self, frames: u64) -> Vec<Point2> {
        let acc = match self.kind {
            MotionKind::ConstantVelocity => Point2::default(),
            MotionKind::ConstantAcceleration => self.acceleration,
        };
        let (mut p, mut v) = (self.position, self.velocity);
        let mut out = Vec::with_capacity(frames as usize);
        for _ in 0..frames {
            out.push(p);
            p = Point2::new(p.x + v.x + 0.5 * acc.x, p.y + v.y + 0.5 * acc.y);
            v = Point2::new(v.x + acc.x, v.y + acc.y);
        }
        out
    }

    /// Velocity at `frame`.
    pub fn velocity_at(&self, frame: u64) -> Point2 {
        match self.kind {
            MotionKind::ConstantVelocity => self.velocity,
            MotionKind::ConstantAcceleration => {
                let mut v = self.velocity;
                for _ in 0..frame {
                    v = Point2::new(v.x + self.acceleration.x, v.y + self.acceleration.y);
                }
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraSpec {
    pub id: CameraId,
    /// Base plane → image plane.
    pub homography: Homography,
    pub noise_sigma: f64,
    pub miss_prob: f64,
    /// Inclusive `[start, end]` frame windows with no detections.
    pub occlusions: Vec<(u64, u64)>,
    /// Constant box extents written with every detection.
    pub bbox_size: (f64, f64),
}

impl CameraSpec {
    pub fn new(id: impl Into<CameraId>) -> Self {
        Self {
            id: id.into(),
            homography: Homography::identity(),
            noise_sigma: 0.0,
            miss_prob: 0.0,
            occlusions: Vec::new(),
            bbox_size: (40.0, 100.0),
        }
    }

    pub fn occluded(&self, frame: u64) -> bool {
        self.occlusions.iter().any(|(a, b)| (*a..=*b).contains(&frame))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub frames: u64,
    pub truth: TruthConfig,
    pub cameras: Vec<CameraSpec>,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(Error::config("scenario.frames", "must be >= 2"));
        }
        if self.cameras.is_empty() {
            return Err(Error::config("camera", "at least one camera is required"));
        }
        for (i, cam) in self.cameras.iter().enumerate() {
            let key = |k: &str| format!("camera.{}.{k}", cam.id);
            if self.cameras[..i].iter().any(|c| c.id == cam.id) {
                return Err(Error::config(format!("camera.{}", cam.id), "duplicate camera id"));
            }
            if !(cam.noise_sigma.is_finite() && cam.noise_sigma >= 0.0) {
                return Err(Error::config(key("noise_sigma"), "must be >= 0"));
            }
            if !(0.0..1.0).contains(&cam.miss_prob) {
                return Err(Error::config(key("miss_prob"), "must lie in [0, 1)"));
            }
            for &(a, b) in &cam.occlusions {
                if a > b || b >= self.frames {
                    return Err(Error::config(
                        key("occlusions"),
                        format!("window [{a}, {b}] must satisfy start <= end < {}", self.frames),
                    ));
                }
            }
            let (w, h) = cam.bbox_size;
            if !(w > 0.0 && h > 0.0) {
                return Err(Error::config(key("bbox"), "extents must be > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    /// Base-plane truth, one point per frame starting at 0.
    pub gt_base: Trajectory,
    /// Truth projected into each camera's image plane.
    pub gt_per_camera: BTreeMap<CameraId, Trajectory>,
    /// Noisy, holey detection streams, frame-sorted.
    pub detections: BTreeMap<CameraId, Vec<Detection>>,
}

pub fn simulate(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let truth = cfg.truth.positions(cfg.frames);
    let gt_base: Trajectory = truth.iter().enumerate().map(|(f, p)| (f as u64, *p)).collect();

    let mut gt_per_camera = BTreeMap::new();
    let mut detections = BTreeMap::new();
    for (stream, cam) in cfg.cameras.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream as u64);

        let projected = gt_base.project(&cam.homography)?;
        let mut dets = Vec::new();
        for (frame, p) in projected.iter() {
            let u: f64 = rng.random();
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            if u < cam.miss_prob || cam.occluded(frame) {
                continue;
            }
            let (w, h) = cam.bbox_size;
            let bbox = BBox::new(p.x + cam.noise_sigma * nx, p.y + cam.noise_sigma * ny, w, h)?;
            dets.push(Detection::new(frame, cam.id.clone(), bbox));
        }
        gt_per_camera.insert(cam.id.clone(), projected);
        detections.insert(cam.id.clone(), dets);
    }
    Ok(ScenarioOutput {
        gt_base,
        gt_per_camera,
        detections,
    })
}
