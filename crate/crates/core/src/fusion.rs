//! Frame-synchronous fusion of per-camera base-plane points.
//!
//! Two rules are provided. Weighted sum takes a convex combination of the
//! healthy cameras with their configured weights renormalized over the
//! cameras that survive the miss threshold. Winner-take-all returns the
//! point of the best-scoring healthy camera unchanged.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{CameraId, Point2};

#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    weights: BTreeMap<CameraId, f64>,
    /// Cameras with at least this many consecutive misses are excluded.
    pub miss_threshold: u32,
    /// Trailing window, in frames, over which winner-take-all scores are taken.
    pub score_window: usize,
}

impl FusionConfig {
    pub fn new(
        weights: impl IntoIterator<Item = (CameraId, f64)>,
        miss_threshold: u32,
        score_window: usize,
    ) -> Result<Self> {
        let weights: BTreeMap<CameraId, f64> = weights.into_iter().collect();
        if weights.is_empty() {
            return Err(Error::config("fusion.weights", "at least one camera weight is required"));
        }
        for (cam, w) in &weights {
            if !(w.is_finite() && (0.0..=1.0).contains(w)) {
                return Err(Error::config(
                    format!("fusion.weights.{cam}"),
                    format!("must lie in [0, 1], got {w}"),
                ));
            }
        }
        let sum: f64 = weights.values().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "fusion.weights",
                format!("weights must sum to 1, got {sum}"),
            ));
        }
        if miss_threshold < 1 {
            return Err(Error::config("fusion.miss_threshold", "must be >= 1"));
        }
        if score_window < 1 {
            return Err(Error::config("fusion.score_window", "must be >= 1"));
        }
        Ok(Self {
            weights,
            miss_threshold,
            score_window,
        })
    }

    /// Corridor 0.8 / front 0.2, miss threshold 3, score window 10.
    pub fn corridor_front() -> Self {
        Self::new(
            [(CameraId::from("corridor"), 0.8), (CameraId::from("front"), 0.2)],
            3,
            10,
        )
        .expect("static config is valid")
    }

    /// Equal weights over `cameras`.
    pub fn equal<'a>(cameras: impl IntoIterator<Item = &'a CameraId>) -> Result<Self> {
        let cams: Vec<CameraId> = cameras.into_iter().cloned().collect();
        let w = 1.0 / cams.len().max(1) as f64;
        Self::new(cams.into_iter().map(|c| (c, w)), 3, 10)
    }

    pub fn weights(&self) -> &BTreeMap<CameraId, f64> {
        &self.weights
    }

    pub fn weight(&self, camera: &CameraId) -> Option<f64> {
        self.weights.get(camera).copied()
    }

    fn healthy(&self, s: &CameraSample) -> bool {
        s.misses < self.miss_threshold
    }
}

/// One camera's base-plane estimate at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraSample {
    pub camera: CameraId,
    pub point: Point2,
    pub updated: bool,
    pub misses: u32,
    pub spread: f64,
}

/// Weighted sum over the healthy cameras of one frame.
///
/// Weights of the surviving cameras are renormalized to one; a lone survivor
/// gets its point back unweighted. `frame` only labels the error.
pub fn fuse_weighted(samples: &[CameraSample], cfg: &FusionConfig, frame: u64) -> Result<Point2> {
    if samples.is_empty() {
        return Err(Error::NoSource);
    }
    let mut included = Vec::with_capacity(samples.len());
    for s in samples {
        let w = cfg
            .weight(&s.camera)
            .ok_or_else(|| Error::UnknownCamera(s.camera.to_string()))?;
        if cfg.healthy(s) {
            included.push((s, w));
        }
    }
    // canonical order so the floating-point sum does not depend on input order
    included.sort_by(|a, b| a.0.camera.cmp(&b.0.camera));
    match included.as_slice() {
        [] => Err(Error::NoHealthySource { frame }),
        [(only, _)] => Ok(only.point),
        _ => {
            let total: f64 = included.iter().map(|(_, w)| w).sum();
            let n = included.len() as f64;
            let (mut x, mut y) = (0.0, 0.0);
            for (s, w) in &included {
                let w = if total > 0.0 { w / total } else { 1.0 / n };
                x += w * s.point.x;
                y += w * s.point.y;
            }
            Ok(Point2::new(x, y))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraScore {
    pub camera: CameraId,
    /// Fraction of measurement-corrected samples in the window.
    pub score: f64,
    pub mean_spread: f64,
}

/// Scores one camera from its trailing window of samples.
pub fn camera_score(recent: &[CameraSample]) -> Option<CameraScore> {
    let first = recent.first()?;
    let n = recent.len() as f64;
    let updated = recent.iter().filter(|s| s.updated).count() as f64;
    Some(CameraScore {
        camera: first.camera.clone(),
        score: updated / n,
        mean_spread: recent.iter().map(|s| s.spread).sum::<f64>() / n,
    })
}

/// Higher score first, then smaller mean spread, then camera id.
fn rank(a: &CameraScore, b: &CameraScore) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.mean_spread.total_cmp(&b.mean_spread))
        .then(a.camera.cmp(&b.camera))
}

/// Winner-take-all: the point of the best-ranked healthy camera, verbatim.
///
/// Cameras without a score are ranked last.
pub fn fuse_wta(
    samples: &[CameraSample],
    scores: &[CameraScore],
    miss_threshold: u32,
    frame: u64,
) -> Result<(Point2, CameraId)> {
    if samples.is_empty() {
        return Err(Error::NoSource);
    }
    let unscored = |cam: &CameraId| CameraScore {
        camera: cam.clone(),
        score: f64::NEG_INFINITY,
        mean_spread: f64::INFINITY,
    };
    samples
        .iter()
        .filter(|s| s.misses < miss_threshold)
        .map(|s| {
            let sc = scores
                .iter()
                .find(|c| c.camera == s.camera)
                .cloned()
                .unwrap_or_else(|| unscored(&s.camera));
            (s, sc)
        })
        .min_by(|a, b| rank(&a.1, &b.1))
        .map(|(s, _)| (s.point, s.camera.clone()))
        .ok_or(Error::NoHealthySource { frame })
}

/// Ground truth on the base plane: mean of the cameras that saw the person,
/// or the single camera's point when only one did.
pub fn fuse_ground_truth(points: &[Point2]) -> Result<Point2> {
    match points {
        [] => Err(Error::NoSource),
        [only] => Ok(*only),
        _ => {
            let n = points.len() as f64;
            let (sx, sy) = points.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
            Ok(Point2::new(sx / n, sy / n))
        }
    }
}
