//! Trajectory error against ground truth and the staged raw → filtered →
//! fused report.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{CameraId, Trajectory};

/// Error summary for one estimate against ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseStats {
    /// Mean squared Euclidean distance.
    pub mse: f64,
    pub rmse: f64,
    /// Mean (unsquared) Euclidean distance.
    pub mean_dist: f64,
    pub frames: usize,
    /// Frames present in exactly one of the two trajectories.
    pub skipped: usize,
}

/// Mean squared Euclidean distance over the frames both trajectories share.
pub fn mse(estimate: &Trajectory, gt: &Trajectory) -> Result<MseStats> {
    let (stats, _) = mse_with_series(estimate, gt)?;
    Ok(stats)
}

/// [`mse`] plus the per-frame squared errors it averaged.
pub fn mse_with_series(estimate: &Trajectory, gt: &Trajectory) -> Result<(MseStats, Vec<(u64, f64)>)> {
    let mut series = Vec::new();
    let mut sum_sq = 0.0;
    let mut sum_dist = 0.0;
    for (frame, p) in estimate.iter() {
        if let Some(q) = gt.get(frame) {
            let sq = p.dist_sq(q);
            sum_sq += sq;
            sum_dist += sq.sqrt();
            series.push((frame, sq));
        }
    }
    if series.is_empty() {
        return Err(Error::NoOverlap);
    }
    let n = series.len();
    let mse = sum_sq / n as f64;
    Ok((
        MseStats {
            mse,
            rmse: mse.sqrt(),
            mean_dist: sum_dist / n as f64,
            frames: n,
            skipped: estimate.len() + gt.len() - 2 * n,
        },
        series,
    ))
}

/// Stage families, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StageKind {
    Raw,
    Filtered,
    Weighted,
    Wta,
}

impl StageKind {
    pub const ALL: [StageKind; 4] = [StageKind::Raw, StageKind::Filtered, StageKind::Weighted, StageKind::Wta];

    pub fn name(self) -> &'static str {
        match self {
            StageKind::Raw => "raw",
            StageKind::Filtered => "filtered",
            StageKind::Weighted => "weighted",
            StageKind::Wta => "wta",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRow {
    /// `raw`, `raw:<camera>`, `filtered`, `filtered:<camera>`, `weighted` or `wta`.
    pub stage: String,
    pub kind: StageKind,
    pub stats: MseStats,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MseReport {
    pub rows: Vec<StageRow>,
    /// `(frame, stage, squared error)`, grouped by stage in row order.
    pub per_frame: Option<Vec<(u64, String, f64)>>,
    pub notes: Vec<String>,
}

impl MseReport {
    pub fn get(&self, stage: &str) -> Option<&MseStats> {
        self.rows.iter().find(|r| r.stage == stage).map(|r| &r.stats)
    }

    /// Keeps only rows whose kind is in `kinds`.
    pub fn retain_kinds(&mut self, kinds: &[StageKind]) {
        self.rows.retain(|r| kinds.contains(&r.kind));
        if let Some(series) = &mut self.per_frame {
            let keep: Vec<String> = self.rows.iter().map(|r| r.stage.clone()).collect();
            series.retain(|(_, s, _)| keep.contains(s));
        }
    }
}

/// Everything the staged report compares, all on the base plane.
#[derive(Debug, Clone, Default)]
pub struct StageInputs<'a> {
    pub raw: BTreeMap<CameraId, &'a Trajectory>,
    pub filtered: BTreeMap<CameraId, &'a Trajectory>,
    pub weighted: Option<&'a Trajectory>,
    pub wta: Option<&'a Trajectory>,
}

/// Builds the staged report. Per-camera stages get a pooled row
/// (`raw`, `filtered`) averaging every camera-frame pair, followed by one
/// row per camera. Empty stages are left out.
pub fn staged_report(inputs: &StageInputs<'_>, gt: &Trajectory, with_series: bool) -> Result<MseReport> {
    let mut report = MseReport {
        per_frame: with_series.then(Vec::new),
        ..MseReport::default()
    };

    let push = |report: &mut MseReport, stage: String, kind: StageKind, stats: MseStats, series: Vec<(u64, f64)>| {
        if let Some(out) = &mut report.per_frame {
            out.extend(series.into_iter().map(|(f, e)| (f, stage.clone(), e)));
        }
        report.rows.push(StageRow { stage, kind, stats });
    };

    for (kind, per_camera) in [(StageKind::Raw, &inputs.raw), (StageKind::Filtered, &inputs.filtered)] {
        let mut rows = Vec::new();
        for (cam, traj) in per_camera {
            if traj.is_empty() {
                continue;
            }
            let (stats, series) = mse_with_series(traj, gt)?;
            rows.push((format!("{}:{cam}", kind.name()), stats, series));
        }
        if rows.is_empty() {
            continue;
        }
        let frames: usize = rows.iter().map(|r| r.1.frames).sum();
        let sum_sq: f64 = rows.iter().map(|r| r.1.mse * r.1.frames as f64).sum();
        let sum_dist: f64 = rows.iter().map(|r| r.1.mean_dist * r.1.frames as f64).sum();
        let pooled = sum_sq / frames as f64;
        let pooled = MseStats {
            mse: pooled,
            rmse: pooled.sqrt(),
            mean_dist: sum_dist / frames as f64,
            frames,
            skipped: rows.iter().map(|r| r.1.skipped).sum(),
        };
        push(&mut report, kind.name().to_string(), kind, pooled, Vec::new());
        for (stage, stats, series) in rows {
            push(&mut report, stage, kind, stats, series);
        }
    }

    for (kind, traj) in [(StageKind::Weighted, inputs.weighted), (StageKind::Wta, inputs.wta)] {
        match traj {
            Some(t) if !t.is_empty() => {
                let (stats, series) = mse_with_series(t, gt)?;
                push(&mut report, kind.name().to_string(), kind, stats, series);
            }
            _ => report.notes.push(format!("stage '{}' has no data", kind.name())),
        }
    }
    Ok(report)
}
