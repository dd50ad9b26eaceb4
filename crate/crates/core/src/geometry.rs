//! Geometry and measurement types shared across the toolkit.
//!
//! Everything here is a plain value: points, boxes, detections, tracks and
//! the planar homographies used to move camera-plane tracks onto the common
//! base plane.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Tolerance below which a homography determinant or a homogeneous
/// w-component is treated as zero.
pub const PROJECTIVE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Builds a point, rejecting NaN and infinite coordinates.
    pub fn finite(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(Error::NonFinite("point"))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist_sq(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        self.dist_sq(other).sqrt()
    }
}

/// Axis-aligned box given by its centroid and extents, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
}

impl BBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        if ![cx, cy, w, h].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("bounding box"));
        }
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::InvalidBBox(format!(
                "extents must be positive, got w={w} h={h}"
            )));
        }
        Ok(Self { cx, cy, w, h })
    }

    pub fn centroid(&self) -> Point2 {
        Point2::new(self.cx, self.cy)
    }

    pub fn width(&self) -> f64 {
        self.w
    }

    pub fn height(&self) -> f64 {
        self.h
    }
}

/// Free-function form of [`BBox::centroid`].
pub fn centroid(b: &BBox) -> Point2 {
    b.centroid()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CameraId(String);

impl CameraId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CameraId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CameraId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for CameraId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// One per-frame measurement of a person from one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame: u64,
    pub camera: CameraId,
    /// Optional upstream track label; carried through but not used for association.
    pub track: Option<u64>,
    pub bbox: BBox,
    pub confidence: Option<f64>,
}

impl Detection {
    pub fn new(frame: u64, camera: impl Into<CameraId>, bbox: BBox) -> Self {
        Self {
            frame,
            camera: camera.into(),
            track: None,
            bbox,
            confidence: None,
        }
    }

    pub fn centroid(&self) -> Point2 {
        self.bbox.centroid()
    }
}

/// One sample of a filtered trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub frame: u64,
    pub point: Point2,
    /// `true` when the filter was corrected with a measurement at this frame.
    pub updated: bool,
    /// Trace of the position block of the covariance.
    pub spread: f64,
    /// Measurement consumed at this frame; `Some` exactly when `updated`.
    pub measurement: Option<Point2>,
}

/// Frame-contiguous sequence of estimates for one target in one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    id: u64,
    camera: CameraId,
    points: Vec<TrackPoint>,
}

impl Track {
    pub fn new(id: u64, camera: impl Into<CameraId>) -> Self {
        Self {
            id,
            camera: camera.into(),
            points: Vec::new(),
        }
    }

    pub fn from_points(
        id: u64,
        camera: impl Into<CameraId>,
        points: impl IntoIterator<Item = TrackPoint>,
    ) -> Result<Self> {
        let mut track = Self::new(id, camera);
        for p in points {
            track.push(p)?;
        }
        Ok(track)
    }

    /// Appends a point; its frame must be exactly one past the last point's.
    pub fn push(&mut self, p: TrackPoint) -> Result<()> {
        if let Some(last) = self.points.last() {
            if p.frame != last.frame + 1 {
                return Err(Error::NonContiguousTrack {
                    track: self.id,
                    previous: last.frame,
                    frame: p.frame,
                });
            }
        }
        if p.spread < 0.0 || !p.spread.is_finite() {
            return Err(Error::NonFinite("track point spread"));
        }
        self.points.push(p);
        Ok(())
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn camera(&self) -> &CameraId {
        &self.camera
    }

    pub fn points(&self) -> &[TrackPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn updated_count(&self) -> usize {
        self.points.iter().filter(|p| p.updated).count()
    }

    pub fn first_frame(&self) -> Option<u64> {
        self.points.first().map(|p| p.frame)
    }

    pub fn last_frame(&self) -> Option<u64> {
        self.points.last().map(|p| p.frame)
    }
}

/// Frame-indexed positions, used as the common currency for evaluation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory(BTreeMap<u64, Point2>);

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, frame: u64, p: Point2) -> Option<Point2> {
        self.0.insert(frame, p)
    }

    pub fn get(&self, frame: u64) -> Option<&Point2> {
        self.0.get(&frame)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, Point2)> + '_ {
        self.0.iter().map(|(f, p)| (*f, *p))
    }

    pub fn frames(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.keys().copied()
    }

    /// Applies `h` to every point.
    pub fn project(&self, h: &Homography) -> Result<Trajectory> {
        self.iter()
            .map(|(f, p)| h.project(p).map(|q| (f, q)))
            .collect()
    }
}

impl FromIterator<(u64, Point2)> for Trajectory {
    fn from_iter<I: IntoIterator<Item = (u64, Point2)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl From<&Track> for Trajectory {
    fn from(t: &Track) -> Self {
        t.points().iter().map(|p| (p.frame, p.point)).collect()
    }
}

/// Invertible 3×3 projective map, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: [[f64; 3]; 3],
}

impl Default for Homography {
    fn default() -> Self {
        Self::identity()
    }
}

impl Homography {
    pub const fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Accepts `m` only if every entry is finite and `|det(m)| > 1e-12`.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        if !m.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("homography"));
        }
        let det = det3(&m);
        if det.abs() <= PROJECTIVE_EPS {
            return Err(Error::SingularHomography { det });
        }
        Ok(Self { m })
    }

    pub fn from_row_major(v: &[f64]) -> Result<Self> {
        if v.len() != 9 {
            return Err(Error::config(
                "homography",
                format!("expected 9 numbers, got {}", v.len()),
            ));
        }
        Self::new([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self {
            m: [[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]],
        }
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn row_major(&self) -> [f64; 9] {
        let m = &self.m;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        ]
    }

    pub fn determinant(&self) -> f64 {
        det3(&self.m)
    }

    pub fn project(&self, p: Point2) -> Result<Point2> {
        let m = &self.m;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        if w.abs() < PROJECTIVE_EPS {
            return Err(Error::DegenerateProjection { x: p.x, y: p.y });
        }
        let x = (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w;
        let y = (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w;
        Ok(Point2::new(x, y))
    }

    /// Inverse map via the adjugate.
    pub fn inverse(&self) -> Result<Homography> {
        let m = &self.m;
        let det = det3(m);
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| {
            m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
        };
        // adj[i][j] = cofactor(j, i)
        let adj = [
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ];
        let mut inv = [[0.0; 3]; 3];
        for (row, adj_row) in inv.iter_mut().zip(adj.iter()) {
            for (v, a) in row.iter_mut().zip(adj_row.iter()) {
                *v = a / det;
            }
        }
        Homography::new(inv)
    }
}

/// Free-function form of [`Homography::project`].
pub fn project(p: Point2, h: &Homography) -> Result<Point2> {
    h.project(p)
}

/// Free-function form of [`Homography::new`].
pub fn validate_homography(m: [[f64; 3]; 3]) -> Result<Homography> {
    Homography::new(m)
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
