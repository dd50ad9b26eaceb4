//! Person tracking and multi-camera fusion.
//!
//! Noisy per-camera detections are filtered with constant-velocity or
//! constant-acceleration Kalman filters, projected onto a common base plane,
//! fused with weighted-sum and winner-take-all rules, and scored against
//! ground truth by mean squared error.
//!
//! The building blocks live in their own modules; the most used types are
//! re-exported at the crate root.

pub mod config;
pub mod error;
pub mod estimation;
pub mod evaluation;
pub mod fusion;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod scenario;
pub mod tracking;

pub use error::{Error, ErrorKind, Result};
pub use estimation::{FilterState, MotionKind, MotionModel, NoiseConfig};
pub use evaluation::{mse, staged_report, MseReport, MseStats, StageKind};
pub use fusion::{camera_score, fuse_ground_truth, fuse_weighted, fuse_wta, CameraSample, CameraScore, FusionConfig};
pub use geometry::{centroid, project, validate_homography, BBox, CameraId, Detection, Homography, Point2, Track, TrackPoint, Trajectory};
pub use io::{FusedPoint, GroundTruth};
pub use pipeline::{run_pipeline, PipelineInput, PipelineOptions, PipelineOutput};
pub use scenario::{simulate, CameraSpec, ScenarioConfig, ScenarioOutput, TruthConfig};
pub use tracking::{associate, run_tracker, run_tracker_until, TrackerConfig};
