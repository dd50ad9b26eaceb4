//! End-to-end chain: per-camera tracking, base-plane projection, both
//! fusion rules and the staged error report.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::evaluation::{staged_report, MseReport, StageInputs};
use crate::fusion::{camera_score, fuse_ground_truth, fuse_weighted, fuse_wta, CameraSample, FusionConfig};
use crate::geometry::{CameraId, Detection, Homography, Point2, Track, Trajectory};
use crate::io::{FusedPoint, GroundTruth};
use crate::tracking::{run_tracker_until, TrackerConfig};

#[derive(Debug, Clone, Default)]
pub struct PipelineInput {
    /// Frame-sorted detections per camera.
    pub detections: BTreeMap<CameraId, Vec<Detection>>,
    /// Image plane → base plane, per camera. Missing entries mean identity.
    pub homographies: BTreeMap<CameraId, Homography>,
    pub ground_truth: Option<GroundTruth>,
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub tracker: TrackerConfig,
    pub fusion: FusionConfig,
    /// Attach per-frame squared errors to the report.
    pub with_series: bool,
}

#[derive(Debug, Clone, Default)]
pub struct PipelineOutput {
    /// Every track per camera, in the camera's image plane.
    pub tracks: BTreeMap<CameraId, Vec<Track>>,
    /// Id of the track chosen to represent the person in each camera.
    pub primary: BTreeMap<CameraId, u64>,
    /// Measurements consumed by the primary track, on the base plane.
    pub raw: BTreeMap<CameraId, Trajectory>,
    /// Primary track estimates on the base plane, up to its last update.
    pub filtered: BTreeMap<CameraId, Trajectory>,
    pub samples: BTreeMap<CameraId, BTreeMap<u64, CameraSample>>,
    pub weighted: Vec<FusedPoint>,
    pub wta: Vec<FusedPoint>,
    pub gt_base: Option<Trajectory>,
    pub report: Option<MseReport>,
}

/// Runs each camera's tracker on its own thread, stepping every camera up to
/// the last frame seen by any camera.
pub fn track_cameras(
    detections: &BTreeMap<CameraId, Vec<Detection>>,
    cfg: &TrackerConfig,
) -> Result<BTreeMap<CameraId, Vec<Track>>> {
    let end = detections.values().filter_map(|d| d.iter().map(|d| d.frame).max()).max();
    std::thread::scope(|scope| {
        let handles: Vec<_> = detections
            .iter()
            .map(|(cam, dets)| (cam.clone(), scope.spawn(move || run_tracker_until(cam.clone(), dets, cfg, end))))
            .collect();
        handles
            .into_iter()
            .map(|(cam, h)| Ok((cam, h.join().expect("tracker thread panicked")?)))
            .collect()
    })
}

/// The track with the most measurement updates; ties go to the lower id.
pub fn primary_track(tracks: &[Track]) -> Option<&Track> {
    tracks
        .iter()
        .max_by(|a, b| a.updated_count().cmp(&b.updated_count()).then(b.id().cmp(&a.id())))
}

/// Projects a track to the base plane as per-frame fusion samples, with the
/// running consecutive-miss count.
pub fn camera_samples(track: &Track, h: &Homography) -> Result<BTreeMap<u64, CameraSample>> {
    let mut misses = 0u32;
    let mut out = BTreeMap::new();
    for p in track.points() {
        misses = if p.updated { 0 } else { misses + 1 };
        out.insert(
            p.frame,
            CameraSample {
                camera: track.camera().clone(),
                point: h.project(p.point)?,
                updated: p.updated,
                misses,
                spread: p.spread,
            },
        );
    }
    Ok(out)
}

/// Fuses per-camera samples frame by frame with both rules.
///
/// When no camera is healthy the previous fused point is repeated with
/// `carried = true`; frames before the first fused point are skipped.
pub fn fuse_samples(
    samples: &BTreeMap<CameraId, BTreeMap<u64, CameraSample>>,
    cfg: &FusionConfig,
) -> Result<(Vec<FusedPoint>, Vec<FusedPoint>)> {
    let first = samples.values().filter_map(|s| s.keys().next()).min().copied();
    let last = samples.values().filter_map(|s| s.keys().next_back()).max().copied();
    let (Some(first), Some(last)) = (first, last) else {
        return Ok((Vec::new(), Vec::new()));
    };

    let mut weighted: Vec<FusedPoint> = Vec::new();
    let mut wta: Vec<FusedPoint> = Vec::new();
    let carry = |out: &mut Vec<FusedPoint>, frame: u64| {
        if let Some(prev) = out.last() {
            let point = prev.point;
            out.push(FusedPoint {
                frame,
                point,
                source: None,
                carried: true,
            });
        }
    };

    for frame in first..=last {
        let now: Vec<CameraSample> = samples.values().filter_map(|s| s.get(&frame).cloned()).collect();
        if now.is_empty() {
            carry(&mut weighted, frame);
            carry(&mut wta, frame);
            continue;
        }

        match fuse_weighted(&now, cfg, frame) {
            Ok(point) => weighted.push(FusedPoint {
                frame,
                point,
                source: None,
                carried: false,
            }),
            Err(Error::NoHealthySource { .. }) => carry(&mut weighted, frame),
            Err(e) => return Err(e),
        }

        let start = frame.saturating_sub(cfg.score_window as u64 - 1);
        let scores: Vec<_> = now
            .iter()
            .filter_map(|s| {
                let window: Vec<CameraSample> = samples[&s.camera].range(start..=frame).map(|(_, v)| v.clone()).collect();
                camera_score(&window)
            })
            .collect();
        match fuse_wta(&now, &scores, cfg.miss_threshold, frame) {
            Ok((point, cam)) => wta.push(FusedPoint {
                frame,
                point,
                source: Some(cam),
                carried: false,
            }),
            Err(Error::NoHealthySource { .. }) => carry(&mut wta, frame),
            Err(e) => return Err(e),
        }
    }
    Ok((weighted, wta))
}

pub fn fused_trajectory(points: &[FusedPoint]) -> Trajectory {
    points.iter().map(|p| (p.frame, p.point)).collect()
}

/// Base-plane ground truth. Per-camera truth is projected and combined with
/// [`fuse_ground_truth`] frame by frame.
pub fn base_ground_truth(gt: &GroundTruth, homographies: &BTreeMap<CameraId, Homography>) -> Result<Trajectory> {
    match gt {
        GroundTruth::Base(t) => Ok(t.clone()),
        GroundTruth::PerCamera(per_camera) => {
            let mut by_frame: BTreeMap<u64, Vec<Point2>> = BTreeMap::new();
            for (cam, traj) in per_camera {
                let h = homographies
                    .get(cam)
                    .ok_or_else(|| Error::config(format!("camera.{cam}"), "ground truth names an unknown camera"))?;
                for (frame, p) in traj.iter() {
                    by_frame.entry(frame).or_default().push(h.project(p)?);
                }
            }
            by_frame
                .into_iter()
                .map(|(f, pts)| fuse_ground_truth(&pts).map(|p| (f, p)))
                .collect()
        }
    }
}

pub fn run_pipeline(input: &PipelineInput, opts: &PipelineOptions) -> Result<PipelineOutput> {
    for cam in input.detections.keys() {
        if opts.fusion.weight(cam).is_none() {
            return Err(Error::UnknownCamera(cam.to_string()));
        }
    }
    let homography = |cam: &CameraId| input.homographies.get(cam).copied().unwrap_or_default();

    let tracks = track_cameras(&input.detections, &opts.tracker)?;
    let mut out = PipelineOutput::default();
    for (cam, cam_tracks) in &tracks {
        let Some(track) = primary_track(cam_tracks) else { continue };
        let h = homography(cam);
        out.primary.insert(cam.clone(), track.id());
        let raw: Trajectory = track
            .points()
            .iter()
            .filter_map(|p| p.measurement.map(|m| h.project(m).map(|q| (p.frame, q))))
            .collect::<Result<_>>()?;
        out.raw.insert(cam.clone(), raw);
        let live = track.points().iter().rposition(|p| p.updated).map_or(0, |i| i + 1);
        let filtered: Trajectory = track.points()[..live].iter().map(|p| (p.frame, p.point)).collect();
        out.filtered.insert(cam.clone(), filtered.project(&h)?);
        out.samples.insert(cam.clone(), camera_samples(track, &h)?);
    }
    out.tracks = tracks;

    let (weighted, wta) = fuse_samples(&out.samples, &opts.fusion)?;
    out.weighted = weighted;
    out.wta = wta;

    if let Some(gt) = &input.ground_truth {
        let mut homographies = input.homographies.clone();
        if let GroundTruth::PerCamera(per_camera) = gt {
            for cam in per_camera.keys() {
                if input.detections.contains_key(cam) {
                    homographies.entry(cam.clone()).or_default();
                }
            }
        }
        let gt_base = base_ground_truth(gt, &homographies)?;
        let weighted = fused_trajectory(&out.weighted);
        let wta = fused_trajectory(&out.wta);
        let inputs = StageInputs {
            raw: out.raw.iter().map(|(c, t)| (c.clone(), t)).collect(),
            filtered: out.filtered.iter().map(|(c, t)| (c.clone(), t)).collect(),
            weighted: Some(&weighted),
            wta: Some(&wta),
        };
        out.report = Some(staged_report(&inputs, &gt_base, opts.with_series)?);
        out.gt_base = Some(gt_base);
    }
    Ok(out)
}
