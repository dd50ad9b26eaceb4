//! CSV schemas read and written by the toolkit.
//!
//! | file | header |
//! |------|--------|
//! | detections | `frame,camera,track,cx,cy,w,h,confidence` (`track`, `confidence` may be empty) |
//! | base-plane ground truth | `frame,x,y` |
//! | per-camera ground truth | `frame,camera,cx,cy` |
//! | tracks | `frame,camera,track,x,y,updated,spread,mx,my` |
//! | fused trajectory | `frame,x,y,source,carried` |
//! | report | `stage,mse,rmse,mean_dist,frames` |
//! | per-frame errors | `frame,stage,sq_error` |
//!
//! Numbers are ASCII decimal with `.` as radix point. Floats are written
//! with 17 significant digits so every value reads back bit-identical.

use std::collections::BTreeMap;
use std::path::Path;

use csv::StringRecord;

use crate::error::{Error, Result};
use crate::evaluation::{MseReport, MseStats, StageKind, StageRow};
use crate::geometry::{BBox, CameraId, Detection, Point2, Track, TrackPoint, Trajectory};

pub const DETECTIONS_HEADER: [&str; 8] = ["frame", "camera", "track", "cx", "cy", "w", "h", "confidence"];
pub const GT_BASE_HEADER: [&str; 3] = ["frame", "x", "y"];
pub const GT_CAMERA_HEADER: [&str; 4] = ["frame", "camera", "cx", "cy"];
pub const TRACKS_HEADER: [&str; 9] = ["frame", "camera", "track", "x", "y", "updated", "spread", "mx", "my"];
pub const FUSED_HEADER: [&str; 5] = ["frame", "x", "y", "source", "carried"];
pub const REPORT_HEADER: [&str; 5] = ["stage", "mse", "rmse", "mean_dist", "frames"];
pub const ERRORS_HEADER: [&str; 3] = ["frame", "stage", "sq_error"];

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros dropped,
/// exponent form outside `1e-5 ..= 1e17`.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if !(-5..17).contains(&exp) {
        let m = trim_fraction(&format!("{}.{}", &digits[..1], &digits[1..]));
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{m}e{esign}{:02}", exp.abs());
    }
    let body = if exp >= 0 {
        let point = exp as usize + 1;
        format!("{}.{}", &digits[..point], &digits[point..])
    } else {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    };
    format!("{sign}{}", trim_fraction(&body))
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// A fused-trajectory sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedPoint {
    pub frame: u64,
    pub point: Point2,
    /// Camera whose point was taken (winner-take-all) or empty for a blend.
    pub source: Option<CameraId>,
    /// `true` when no healthy camera existed and the last point was carried forward.
    pub carried: bool,
}

/// Ground truth as read from disk, in either accepted form.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    Base(Trajectory),
    PerCamera(BTreeMap<CameraId, Trajectory>),
}

struct Table<'a> {
    path: &'a Path,
    columns: BTreeMap<String, usize>,
}

impl<'a> Table<'a> {
    fn new(path: &'a Path, header: &StringRecord, required: &[&str]) -> Result<Self> {
        let columns: BTreeMap<String, usize> =
            header.iter().enumerate().map(|(i, h)| (h.trim().to_string(), i)).collect();
        for col in required {
            if !columns.contains_key(*col) {
                return Err(Error::Input {
                    path: path.to_path_buf(),
                    line: 1,
                    message: format!("missing column '{col}' in header"),
                });
            }
        }
        Ok(Self { path, columns })
    }

    fn err(&self, line: u64, message: impl Into<String>) -> Error {
        Error::Input {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn field<'r>(&self, rec: &'r StringRecord, col: &str) -> Option<&'r str> {
        self.columns
            .get(col)
            .and_then(|i| rec.get(*i))
            .map(str::trim)
            .filter(|s| !s.is_empty())
    }

    fn req<'r>(&self, rec: &'r StringRecord, line: u64, col: &str) -> Result<&'r str> {
        self.field(rec, col)
            .ok_or_else(|| self.err(line, format!("empty '{col}'")))
    }

    fn f64(&self, rec: &StringRecord, line: u64, col: &str) -> Result<f64> {
        let s = self.req(rec, line, col)?;
        parse_f64(s).ok_or_else(|| self.err(line, format!("'{col}' is not a finite number: {s:?}")))
    }

    fn opt_f64(&self, rec: &StringRecord, line: u64, col: &str) -> Result<Option<f64>> {
        match self.field(rec, col) {
            None => Ok(None),
            Some(s) => parse_f64(s)
                .map(Some)
                .ok_or_else(|| self.err(line, format!("'{col}' is not a finite number: {s:?}"))),
        }
    }

    fn u64(&self, rec: &StringRecord, line: u64, col: &str) -> Result<u64> {
        let s = self.req(rec, line, col)?;
        s.parse()
            .map_err(|_| self.err(line, format!("'{col}' is not a non-negative integer: {s:?}")))
    }

    fn opt_u64(&self, rec: &StringRecord, line: u64, col: &str) -> Result<Option<u64>> {
        match self.field(rec, col) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| self.err(line, format!("'{col}' is not a non-negative integer: {s:?}"))),
        }
    }

    fn bool(&self, rec: &StringRecord, line: u64, col: &str) -> Result<bool> {
        match self.req(rec, line, col)? {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            s => Err(self.err(line, format!("'{col}' is not a boolean: {s:?}"))),
        }
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn read_rows<T>(
    path: &Path,
    text: &str,
    required: &[&str],
    mut row: impl FnMut(&Table<'_>, &StringRecord, u64) -> Result<T>,
) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| csv_err(path, &e))?.clone();
    let table = Table::new(path, &header, required)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, &e))?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push(row(&table, &rec, line)?);
    }
    Ok(out)
}

fn csv_err(path: &Path, e: &csv::Error) -> Error {
    Error::Input {
        path: path.to_path_buf(),
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses a detection file, rejecting any row whose frame is lower than the
/// row before it.
pub fn parse_detections(path: &Path, text: &str) -> Result<Vec<Detection>> {
    let mut previous: Option<u64> = None;
    read_rows(path, text, &["frame", "camera", "cx", "cy", "w", "h"], |t, rec, line| {
        let frame = t.u64(rec, line, "frame")?;
        if let Some(prev) = previous {
            if frame < prev {
                return Err(t.err(line, format!("frame {frame} follows frame {prev}; detections must be frame-sorted")));
            }
        }
        previous = Some(frame);
        let bbox = BBox::new(
            t.f64(rec, line, "cx")?,
            t.f64(rec, line, "cy")?,
            t.f64(rec, line, "w")?,
            t.f64(rec, line, "h")?,
        )
        .map_err(|e| t.err(line, e.to_string()))?;
        let confidence = t.opt_f64(rec, line, "confidence")?;
        if let Some(c) = confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(t.err(line, format!("confidence {c} outside [0, 1]")));
            }
        }
        Ok(Detection {
            frame,
            camera: t.req(rec, line, "camera")?.into(),
            track: t.opt_u64(rec, line, "track")?,
            bbox,
            confidence,
        })
    })
}

pub fn read_detections(path: &Path) -> Result<Vec<Detection>> {
    parse_detections(path, &read_text(path)?)
}

/// Parses either ground-truth form, chosen by the header.
pub fn parse_ground_truth(path: &Path, text: &str) -> Result<GroundTruth> {
    let first = text.lines().next().unwrap_or_default();
    let cols: Vec<&str> = first.split(',').map(str::trim).collect();
    if cols.contains(&"camera") {
        let rows = read_rows(path, text, &GT_CAMERA_HEADER, |t, rec, line| {
            Ok((
                line,
                CameraId::from(t.req(rec, line, "camera")?),
                t.u64(rec, line, "frame")?,
                Point2::new(t.f64(rec, line, "cx")?, t.f64(rec, line, "cy")?),
            ))
        })?;
        let mut per_camera: BTreeMap<CameraId, Trajectory> = BTreeMap::new();
        for (line, cam, frame, p) in rows {
            if per_camera.entry(cam.clone()).or_default().insert(frame, p).is_some() {
                return Err(Error::Input {
                    path: path.to_path_buf(),
                    line,
                    message: format!("duplicate frame {frame} for camera '{cam}'"),
                });
            }
        }
        Ok(GroundTruth::PerCamera(per_camera))
    } else {
        parse_trajectory(path, text).map(GroundTruth::Base)
    }
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    parse_ground_truth(path, &read_text(path)?)
}

/// Reads any CSV carrying `frame,x,y` columns (trajectory, fused or
/// base-plane ground-truth files) as a trajectory.
pub fn parse_trajectory(path: &Path, text: &str) -> Result<Trajectory> {
    let rows = read_rows(path, text, &GT_BASE_HEADER, |t, rec, line| {
        Ok((line, t.u64(rec, line, "frame")?, Point2::new(t.f64(rec, line, "x")?, t.f64(rec, line, "y")?)))
    })?;
    let mut traj = Trajectory::new();
    for (line, frame, p) in rows {
        if traj.insert(frame, p).is_some() {
            return Err(Error::Input {
                path: path.to_path_buf(),
                line,
                message: format!("duplicate frame {frame}"),
            });
        }
    }
    Ok(traj)
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    parse_trajectory(path, &read_text(path)?)
}

pub fn parse_tracks(path: &Path, text: &str) -> Result<Vec<Track>> {
    let rows = read_rows(path, text, &TRACKS_HEADER[..7], |t, rec, line| {
        let updated = t.bool(rec, line, "updated")?;
        let mx = t.opt_f64(rec, line, "mx")?;
        let my = t.opt_f64(rec, line, "my")?;
        let measurement = match (mx, my) {
            (Some(x), Some(y)) => Some(Point2::new(x, y)),
            (None, None) => None,
            _ => return Err(t.err(line, "'mx' and 'my' must both be set or both empty")),
        };
        if measurement.is_some() != updated {
            return Err(t.err(line, "measurement must be present exactly on updated rows"));
        }
        let spread = t.f64(rec, line, "spread")?;
        if spread < 0.0 {
            return Err(t.err(line, "spread must be >= 0"));
        }
        Ok((
            line,
            CameraId::from(t.req(rec, line, "camera")?),
            t.u64(rec, line, "track")?,
            TrackPoint {
                frame: t.u64(rec, line, "frame")?,
                point: Point2::new(t.f64(rec, line, "x")?, t.f64(rec, line, "y")?),
                updated,
                spread,
                measurement,
            },
        ))
    })?;
    let mut tracks: BTreeMap<(CameraId, u64), Track> = BTreeMap::new();
    for (line, cam, id, tp) in rows {
        tracks
            .entry((cam.clone(), id))
            .or_insert_with(|| Track::new(id, cam))
            .push(tp)
            .map_err(|e| Error::Input {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
    }
    Ok(tracks.into_values().collect())
}

pub fn parse_fused(path: &Path, text: &str) -> Result<Vec<FusedPoint>> {
    let rows = read_rows(path, text, &FUSED_HEADER, |t, rec, line| {
        Ok(FusedPoint {
            frame: t.u64(rec, line, "frame")?,
            point: Point2::new(t.f64(rec, line, "x")?, t.f64(rec, line, "y")?),
            source: t.field(rec, "source").map(CameraId::from),
            carried: t.bool(rec, line, "carried")?,
        })
    })?;
    for w in rows.windows(2) {
        if w[1].frame <= w[0].frame {
            return Err(Error::Input {
                path: path.to_path_buf(),
                line: 0,
                message: format!("frame {} follows frame {}", w[1].frame, w[0].frame),
            });
        }
    }
    Ok(rows)
}

/// Reads a report CSV back. Row kinds are recovered from the stage prefix.
pub fn parse_report(path: &Path, text: &str) -> Result<MseReport> {
    let rows = read_rows(path, text, &REPORT_HEADER, |t, rec, line| {
        let stage = t.req(rec, line, "stage")?.to_string();
        let prefix = stage.split(':').next().unwrap_or_default();
        let kind = StageKind::parse(prefix).ok_or_else(|| t.err(line, format!("unknown stage {stage:?}")))?;
        Ok(StageRow {
            stage,
            kind,
            stats: MseStats {
                mse: t.f64(rec, line, "mse")?,
                rmse: t.f64(rec, line, "rmse")?,
                mean_dist: t.f64(rec, line, "mean_dist")?,
                frames: t.u64(rec, line, "frames")? as usize,
                skipped: 0,
            },
        })
    })?;
    Ok(MseReport {
        rows,
        ..MseReport::default()
    })
}

pub fn parse_errors(path: &Path, text: &str) -> Result<Vec<(u64, String, f64)>> {
    read_rows(path, text, &ERRORS_HEADER, |t, rec, line| {
        Ok((
            t.u64(rec, line, "frame")?,
            t.req(rec, line, "stage")?.to_string(),
            t.f64(rec, line, "sq_error")?,
        ))
    })
}

fn write_csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        let fields: Vec<String> = r.into_iter().collect();
        w.write_record(&fields).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn detections_csv(dets: &[Detection]) -> String {
    write_csv(
        &DETECTIONS_HEADER,
        dets.iter().map(|d| {
            let c = d.centroid();
            [
                d.frame.to_string(),
                d.camera.to_string(),
                opt(d.track),
                fmt_f64(c.x),
                fmt_f64(c.y),
                fmt_f64(d.bbox.width()),
                fmt_f64(d.bbox.height()),
                d.confidence.map(fmt_f64).unwrap_or_default(),
            ]
        }),
    )
}

pub fn trajectory_csv(t: &Trajectory) -> String {
    write_csv(
        &GT_BASE_HEADER,
        t.iter().map(|(f, p)| [f.to_string(), fmt_f64(p.x), fmt_f64(p.y)]),
    )
}

pub fn gt_per_camera_csv(per_camera: &BTreeMap<CameraId, Trajectory>) -> String {
    write_csv(
        &GT_CAMERA_HEADER,
        per_camera.iter().flat_map(|(cam, t)| {
            t.iter()
                .map(move |(f, p)| [f.to_string(), cam.to_string(), fmt_f64(p.x), fmt_f64(p.y)])
        }),
    )
}

pub fn tracks_csv(tracks: &[Track]) -> String {
    write_csv(
        &TRACKS_HEADER,
        tracks.iter().flat_map(|t| {
            t.points().iter().map(move |p| {
                [
                    p.frame.to_string(),
                    t.camera().to_string(),
                    t.id().to_string(),
                    fmt_f64(p.point.x),
                    fmt_f64(p.point.y),
                    u8::from(p.updated).to_string(),
                    fmt_f64(p.spread),
                    p.measurement.map(|m| fmt_f64(m.x)).unwrap_or_default(),
                    p.measurement.map(|m| fmt_f64(m.y)).unwrap_or_default(),
                ]
            })
        }),
    )
}

pub fn fused_csv(points: &[FusedPoint]) -> String {
    write_csv(
        &FUSED_HEADER,
        points.iter().map(|p| {
            [
                p.frame.to_string(),
                fmt_f64(p.point.x),
                fmt_f64(p.point.y),
                opt(p.source.as_ref()),
                u8::from(p.carried).to_string(),
            ]
        }),
    )
}

pub fn report_csv(report: &MseReport) -> String {
    write_csv(
        &REPORT_HEADER,
        report.rows.iter().map(|r| {
            [
                r.stage.clone(),
                fmt_f64(r.stats.mse),
                fmt_f64(r.stats.rmse),
                fmt_f64(r.stats.mean_dist),
                r.stats.frames.to_string(),
            ]
        }),
    )
}

pub fn errors_csv(series: &[(u64, String, f64)]) -> String {
    write_csv(
        &ERRORS_HEADER,
        series.iter().map(|(f, s, e)| [f.to_string(), s.clone(), fmt_f64(*e)]),
    )
}

/// Aligned plain-text table with two decimals.
pub fn report_table(report: &MseReport) -> String {
    let width = report.rows.iter().map(|r| r.stage.len()).max().unwrap_or(0).max(5);
    let mut out = format!(
        "{:<width$}  {:>10}  {:>10}  {:>10}  {:>6}\n",
        "stage", "mse", "rmse", "mean_dist", "frames"
    );
    for r in &report.rows {
        out.push_str(&format!(
            "{:<width$}  {:>10.2}  {:>10.2}  {:>10.2}  {:>6}\n",
            r.stage, r.stats.mse, r.stats.rmse, r.stats.mean_dist, r.stats.frames
        ));
    }
    for note in &report.notes {
        out.push_str(&format!("note: {note}\n"));
    }
    out
}
