//! Per-camera track management: greedy nearest-neighbour association,
//! predict-only carry-through during gaps, and termination of stale tracks.

use crate::error::{Error, Result};
use crate::estimation::{FilterState, MotionModel, NoiseConfig};
use crate::geometry::{CameraId, Detection, Point2, Track, TrackPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub model: MotionModel,
    pub noise: NoiseConfig,
    /// Association cutoff in pixels; pairs further apart are never matched.
    pub gate_radius: f64,
    /// A track dies once its consecutive misses exceed this.
    pub max_misses: u32,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            model: MotionModel::default(),
            noise: NoiseConfig::default(),
            gate_radius: 50.0,
            max_misses: 30,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gate_radius.is_finite() && self.gate_radius > 0.0) {
            return Err(Error::config(
                "tracker.gate_radius",
                format!("must be > 0, got {}", self.gate_radius),
            ));
        }
        if self.max_misses < 1 {
            return Err(Error::config("tracker.max_misses", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LiveTrack {
    pub track: Track,
    pub filter: FilterState,
}

impl LiveTrack {
    pub fn id(&self) -> u64 {
        self.track.id()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    /// `(track index, detection index)` pairs in the order they were chosen.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    /// Detections that will seed new tracks, in input order.
    pub unmatched_detections: Vec<usize>,
}

/// Greedy nearest-neighbour assignment of detections to tracks.
///
/// `positions[i]` is the predicted position of the track with id `ids[i]`.
/// Candidate pairs within `gate` are taken in ascending distance; equal
/// distances go to the lower track id, then the earlier detection.
pub fn associate_positions(
    ids: &[u64],
    positions: &[Point2],
    detections: &[Detection],
    gate: f64,
) -> Assignment {
    debug_assert_eq!(ids.len(), positions.len());
    let mut candidates = Vec::new();
    for (ti, p) in positions.iter().enumerate() {
        for (di, d) in detections.iter().enumerate() {
            let dist = p.dist(&d.centroid());
            if dist <= gate {
                candidates.push((dist, ids[ti], di, ti));
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut track_used = vec![false; positions.len()];
    let mut det_used = vec![false; detections.len()];
    let mut pairs = Vec::new();
    for (_, _, di, ti) in candidates {
        if !track_used[ti] && !det_used[di] {
            track_used[ti] = true;
            det_used[di] = true;
            pairs.push((ti, di));
        }
    }
    Assignment {
        pairs,
        unmatched_tracks: (0..positions.len()).filter(|i| !track_used[*i]).collect(),
        unmatched_detections: (0..detections.len()).filter(|i| !det_used[*i]).collect(),
    }
}

/// Associates against each live track's current filter position.
pub fn associate(tracks: &[LiveTrack], detections: &[Detection], gate: f64) -> Assignment {
    let ids: Vec<u64> = tracks.iter().map(LiveTrack::id).collect();
    let positions: Vec<Point2> = tracks.iter().map(|t| t.filter.position()).collect();
    associate_positions(&ids, &positions, detections, gate)
}

/// Sequential tracker for a single camera.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    camera: CameraId,
    live: Vec<LiveTrack>,
    finished: Vec<Track>,
    next_id: u64,
    last_frame: Option<u64>,
}

impl Tracker {
    pub fn new(camera: impl Into<CameraId>, cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            camera: camera.into(),
            live: Vec::new(),
            finished: Vec::new(),
            next_id: 0,
            last_frame: None,
        })
    }

    pub fn live_tracks(&self) -> &[LiveTrack] {
        &self.live
    }

    /// Advances every live track to `frame` and consumes `detections`, all of
    /// which must belong to `frame`. Frames must be processed in increasing
    /// order without skipping.
    pub fn process_frame(&mut self, frame: u64, detections: &[Detection]) -> Result<()> {
        if let Some(last) = self.last_frame {
            if frame != last + 1 {
                return Err(Error::UnsortedInput {
                    previous: last,
                    frame,
                });
            }
        }
        self.last_frame = Some(frame);

        let predicted: Vec<FilterState> = self.live.iter().map(|t| t.filter.predict()).collect();
        let ids: Vec<u64> = self.live.iter().map(LiveTrack::id).collect();
        let positions: Vec<Point2> = predicted.iter().map(FilterState::position).collect();
        let assignment = associate_positions(&ids, &positions, detections, self.cfg.gate_radius);

        let mut measurement: Vec<Option<Point2>> = vec![None; self.live.len()];
        for &(ti, di) in &assignment.pairs {
            measurement[ti] = Some(detections[di].centroid());
        }

        let live = std::mem::take(&mut self.live);
        for (mut lt, z) in live.into_iter().zip(measurement) {
            let next = lt.filter.step(z)?;
            if next.misses() > self.cfg.max_misses {
                self.finished.push(lt.track);
                continue;
            }
            lt.track.push(TrackPoint {
                frame,
                point: next.position(),
                updated: z.is_some(),
                spread: next.spread(),
                measurement: z,
            })?;
            lt.filter = next;
            self.live.push(lt);
        }

        for di in assignment.unmatched_detections {
            let d = &detections[di];
            let filter = FilterState::at_position(d.centroid(), frame, self.cfg.model, self.cfg.noise);
            let mut track = Track::new(self.next_id, self.camera.clone());
            self.next_id += 1;
            track.push(TrackPoint {
                frame,
                point: filter.position(),
                updated: true,
                spread: filter.spread(),
                measurement: Some(d.centroid()),
            })?;
            self.live.push(LiveTrack { track, filter });
        }
        Ok(())
    }

    /// All tracks, live and dead, ordered by id.
    pub fn finish(mut self) -> Vec<Track> {
        self.finished.extend(self.live.into_iter().map(|lt| lt.track));
        self.finished.sort_by_key(Track::id);
        self.finished
    }
}

/// Runs the tracker over one camera's frame-sorted detection stream.
///
/// Every frame between the first and last detection is processed, so frames
/// with no detections produce predict-only points.
pub fn run_tracker(
    camera: impl Into<CameraId>,
    detections: &[Detection],
    cfg: &TrackerConfig,
) -> Result<Vec<Track>> {
    run_tracker_until(camera, detections, cfg, None)
}

/// Like [`run_tracker`], but keeps stepping live tracks through `until` when
/// it lies past the last detection.
pub fn run_tracker_until(
    camera: impl Into<CameraId>,
    detections: &[Detection],
    cfg: &TrackerConfig,
    until: Option<u64>,
) -> Result<Vec<Track>> {
    for w in detections.windows(2) {
        if w[1].frame < w[0].frame {
            return Err(Error::UnsortedInput {
                previous: w[0].frame,
                frame: w[1].frame,
            });
        }
    }
    let mut tracker = Tracker::new(camera, *cfg)?;
    let (Some(first), Some(last)) = (detections.first(), detections.last()) else {
        return Ok(Vec::new());
    };
    let mut rest = detections;
    let end = until.map_or(last.frame, |u| u.max(last.frame));
    for frame in first.frame..=end {
        let n = rest.iter().take_while(|d| d.frame == frame).count();
        let (now, later) = rest.split_at(n);
        tracker.process_frame(frame, now)?;
        rest = later;
    }
    Ok(tracker.finish())
}
