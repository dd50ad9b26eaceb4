//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use camfuse_core::config::{parse_scenario, preset_text};
use camfuse_core::io::{self, GroundTruth};
use camfuse_core::pipeline::{run_pipeline, PipelineInput, PipelineOptions, PipelineOutput};
use camfuse_core::{
    fuse_weighted, fuse_wta, mse, simulate, CameraId, CameraSample, CameraScore, CameraSpec, FilterState,
    FusionConfig, MotionKind, MotionModel, NoiseConfig, Point2, ScenarioConfig, TrackerConfig, Trajectory,
    TruthConfig,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, start: Instant, detail: String) -> Outcome {
    let took = start.elapsed();
    check(took < limit, format!("{detail}; {:.2}s (limit {}s)", took.as_secs_f64(), limit.as_secs()))
}

// ---------------------------------------------------------------------------
// Dense oracle written against plain row-major vectors.

type Mat = Vec<Vec<f64>>;

fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![0.0; c]; r]
}

fn eye(n: usize) -> Mat {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    let mut out = zeros(a.len(), b[0].len());
    for i in 0..a.len() {
        for j in 0..b[0].len() {
            out[i][j] = (0..b.len()).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn tr(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

fn add(a: &Mat, b: &Mat, s: f64) -> Mat {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + s * y).collect())
        .collect()
}

fn scale(a: &Mat, s: f64) -> Mat {
    a.iter().map(|r| r.iter().map(|x| x * s).collect()).collect()
}

fn sym(a: &Mat) -> Mat {
    scale(&add(a, &tr(a), 1.0), 0.5)
}

fn col(v: &[f64]) -> Mat {
    v.iter().map(|x| vec![*x]).collect()
}

/// Position row `x + v·dt + a·dt²/2`, velocity row `v + a·dt`.
fn oracle_f(ca: bool) -> Mat {
    let n = if ca { 6 } else { 4 };
    let mut f = eye(n);
    for axis in 0..2 {
        f[axis][2 + axis] = 1.0;
        if ca {
            f[axis][4 + axis] = 0.5;
            f[2 + axis][4 + axis] = 1.0;
        }
    }
    f
}

fn oracle_h(n: usize) -> Mat {
    let mut h = zeros(2, n);
    h[0][0] = 1.0;
    h[1][1] = 1.0;
    h
}

struct Oracle {
    ca: bool,
    x: Vec<f64>,
    p: Mat,
    q: f64,
    r: f64,
}

impl Oracle {
    fn n(&self) -> usize {
        self.x.len()
    }

    fn predict(&mut self) {
        let f = oracle_f(self.ca);
        self.x = mul(&f, &col(&self.x)).into_iter().map(|r| r[0]).collect();
        let fp = mul(&mul(&f, &self.p), &tr(&f));
        self.p = sym(&add(&fp, &eye(self.n()), self.q));
    }

    fn update(&mut self, z: [f64; 2]) {
        let n = self.n();
        let h = oracle_h(n);
        let s = add(&mul(&mul(&h, &self.p), &tr(&h)), &eye(2), self.r);
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let s_inv = vec![vec![s[1][1] / det, -s[0][1] / det], vec![-s[1][0] / det, s[0][0] / det]];
        let k = mul(&mul(&self.p, &tr(&h)), &s_inv);
        let innov = [z[0] - self.x[0], z[1] - self.x[1]];
        for (xi, ki) in self.x.iter_mut().zip(&k) {
            *xi += ki[0] * innov[0] + ki[1] * innov[1];
        }
        let ikh = add(&eye(n), &mul(&k, &h), -1.0);
        self.p = sym(&mul(&ikh, &self.p));
    }
}

fn max_gap(f: &FilterState, o: &Oracle) -> f64 {
    let mut gap = 0.0f64;
    for i in 0..o.n() {
        gap = gap.max((f.state()[i] - o.x[i]).abs());
        for j in 0..o.n() {
            gap = gap.max((f.covariance()[(i, j)] - o.p[i][j]).abs());
        }
    }
    gap
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    let a: Mat = (0..n).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    add(&mul(&a, &tr(&a)), &eye(n), 0.05)
}

fn to_dmatrix(m: &Mat) -> DMatrix<f64> {
    DMatrix::from_fn(m.len(), m.len(), |i, j| m[i][j])
}

fn model_for(ca: bool) -> MotionModel {
    if ca {
        MotionModel::constant_acceleration()
    } else {
        MotionModel::constant_velocity()
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut steps = 0;
    for ca in [false, true] {
        let n = if ca { 6 } else { 4 };
        // Independent random draws per step.
        for _ in 0..200 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
            let p = random_psd(&mut rng, n);
            let q = rng.random_range(0.1..10.0);
            let r = rng.random_range(0.1..10.0);
            let z = [rng.random_range(-150.0..150.0), rng.random_range(-150.0..150.0)];
            let noise = NoiseConfig::new(q, r, 1.0).unwrap();
            let f = FilterState::from_parts(DVector::from_vec(x.clone()), to_dmatrix(&p), model_for(ca), noise, 0)
                .unwrap();
            let f = f.predict().update(Point2::new(z[0], z[1])).unwrap();
            let mut o = Oracle { ca, x, p, q, r };
            o.predict();
            o.update(z);
            worst = worst.max(max_gap(&f, &o));
            steps += 1;
        }
        // One chained run with random measurements and occasional misses.
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let p = random_psd(&mut rng, n);
        let noise = NoiseConfig::new(0.5, 4.0, 1.0).unwrap();
        let mut f = FilterState::from_parts(DVector::from_vec(x.clone()), to_dmatrix(&p), model_for(ca), noise, 0)
            .unwrap();
        let mut o = Oracle { ca, x, p, q: 0.5, r: 4.0 };
        for _ in 0..200 {
            let z = rng
                .random_bool(0.8)
                .then(|| [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)]);
            f = f.step(z.map(|z| Point2::new(z[0], z[1]))).unwrap();
            o.predict();
            if let Some(z) = z {
                o.update(z);
            }
            worst = worst.max(max_gap(&f, &o));
            steps += 1;
        }
    }
    let ok = worst <= 1e-9;
    within(
        Duration::from_secs(5),
        start,
        format!("{steps} steps, max elementwise gap {worst:.3e} (tol 1e-9)"),
    )
    .and_then(|d| check(ok, d.clone()).map_err(|_| d))
}

// ---------------------------------------------------------------------------
// Scenario helpers.

fn preset(name: &str, seed: u64) -> ScenarioConfig {
    let mut cfg = parse_scenario(preset_text(name).unwrap()).unwrap();
    cfg.seed = seed;
    cfg
}

fn run_scenario(cfg: &ScenarioConfig, fusion: FusionConfig) -> PipelineOutput {
    let sim = simulate(cfg).unwrap();
    let homographies = cfg
        .cameras
        .iter()
        .map(|c| (c.id.clone(), c.homography.inverse().unwrap()))
        .collect();
    let input = PipelineInput {
        detections: sim.detections,
        homographies,
        ground_truth: Some(GroundTruth::Base(sim.gt_base)),
    };
    let opts = PipelineOptions {
        tracker: TrackerConfig::default(),
        fusion,
        with_series: false,
    };
    run_pipeline(&input, &opts).unwrap()
}

fn stage_mse(out: &PipelineOutput, stage: &str) -> f64 {
    out.report.as_ref().unwrap().get(stage).unwrap_or_else(|| panic!("missing stage {stage}")).mse
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    let (mut raw_sum, mut filt_sum) = (0.0, 0.0);
    for seed in 0..100 {
        let out = run_scenario(&preset("paper-shaped", seed), FusionConfig::corridor_front());
        let raw = stage_mse(&out, "raw");
        let filtered = stage_mse(&out, "filtered");
        raw_sum += raw;
        filt_sum += filtered;
        if filtered < raw {
            wins += 1;
        }
    }
    let d = format!(
        "filtered < raw in {wins}/100 seeds (need >= 95); mean raw {:.2}, filtered {:.2}",
        raw_sum / 100.0,
        filt_sum / 100.0
    );
    within(Duration::from_secs(30), start, d).and_then(|d| check(wins >= 95, d.clone()).map_err(|_| d))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let (mut raw, mut filtered, mut weighted) = (0.0, 0.0, 0.0);
    let mut wins = 0;
    for seed in 0..100 {
        let cfg = preset("equal-pair", seed);
        let ids: Vec<CameraId> = cfg.cameras.iter().map(|c| c.id.clone()).collect();
        let out = run_scenario(&cfg, FusionConfig::equal(&ids).unwrap());
        raw += stage_mse(&out, "raw") / 100.0;
        filtered += stage_mse(&out, "filtered") / 100.0;
        let w = stage_mse(&out, "weighted");
        weighted += w / 100.0;
        if ids.iter().all(|c| w < stage_mse(&out, &format!("filtered:{c}"))) {
            wins += 1;
        }
    }
    let ordered = raw > filtered && filtered > weighted;
    let d = format!(
        "mean raw {raw:.2} > filtered {filtered:.2} > weighted {weighted:.2}: {ordered}; \
         weighted beats every camera in {wins}/100 seeds (need >= 90)"
    );
    within(Duration::from_secs(60), start, d).and_then(|d| check(ordered && wins >= 90, d.clone()).map_err(|_| d))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let truth = TruthConfig {
        kind: MotionKind::ConstantAcceleration,
        position: Point2::new(10.0, 20.0),
        velocity: Point2::new(1.0, 0.5),
        acceleration: Point2::new(0.05, -0.02),
    };
    let mut cam = CameraSpec::new("cam");
    cam.noise_sigma = 0.0;
    cam.miss_prob = 0.0;
    cam.occlusions = vec![(40, 44)];
    let cfg = ScenarioConfig {
        frames: 100,
        truth,
        cameras: vec![cam],
        seed: 3,
    };
    let sim = simulate(&cfg).unwrap();
    let dets: BTreeMap<u64, Point2> = sim.detections[&CameraId::from("cam")]
        .iter()
        .map(|d| (d.frame, d.centroid()))
        .collect();
    let x0 = DVector::from_vec(vec![10.0, 20.0, 1.0, 0.5, 0.05, -0.02]);
    let mut f = FilterState::from_parts(
        x0,
        DMatrix::identity(6, 6),
        MotionModel::constant_acceleration(),
        NoiseConfig::default(),
        0,
    )
    .unwrap();
    let mut worst = f.position().dist(sim.gt_base.get(0).unwrap());
    let mut occluded = 0;
    for frame in 1..cfg.frames {
        let z = dets.get(&frame).copied();
        occluded += usize::from(z.is_none());
        f = f.step(z).unwrap();
        worst = worst.max(f.position().dist(sim.gt_base.get(frame).unwrap()));
    }
    let d = format!("{} frames ({occluded} occluded), max error {worst:.3e} (tol 1e-9)", cfg.frames);
    within(Duration::from_secs(1), start, d).and_then(|d| check(worst <= 1e-9 && occluded == 5, d.clone()).map_err(|_| d))
}

fn criterion_5() -> Outcome {
    let mut cv_wins = 0;
    let seeds = 200;
    for seed in 0..seeds {
        let mut cam = CameraSpec::new("cam");
        cam.noise_sigma = 3.0;
        cam.miss_prob = 0.0;
        cam.occlusions = vec![(31, 50)];
        let cfg = ScenarioConfig {
            frames: 51,
            truth: TruthConfig {
                kind: MotionKind::ConstantVelocity,
                position: Point2::new(100.0, 120.0),
                velocity: Point2::new(1.5, 0.4),
                acceleration: Point2::new(0.0, 0.0),
            },
            cameras: vec![cam],
            seed,
        };
        let sim = simulate(&cfg).unwrap();
        let dets = &sim.detections[&CameraId::from("cam")];
        let gap_end = |model: MotionModel| {
            let mut f = FilterState::init(&dets[0], model, NoiseConfig::default());
            let mut next = 1;
            for frame in 1..cfg.frames {
                let z = match dets.get(next) {
                    Some(d) if d.frame == frame => {
                        next += 1;
                        Some(d.centroid())
                    }
                    _ => None,
                };
                f = f.step(z).unwrap();
            }
            f.position().dist(sim.gt_base.get(50).unwrap())
        };
        if gap_end(MotionModel::constant_velocity()) <= gap_end(MotionModel::constant_acceleration()) {
            cv_wins += 1;
        }
    }
    let pct = 100.0 * cv_wins as f64 / seeds as f64;
    check(
        pct >= 80.0,
        format!("CV gap-end error <= CA in {cv_wins}/{seeds} seeds ({pct:.1}%, need >= 80%)"),
    )
}

fn criterion_6() -> Outcome {
    let mut checked = 0;
    let mut carried = 0;
    let mut bad = 0;
    for (name, seed) in [("paper-shaped", 42), ("equal-pair", 7), ("paper-shaped", 5)] {
        let cfg = preset(name, seed);
        let fusion = if name == "paper-shaped" {
            FusionConfig::corridor_front()
        } else {
            let ids: Vec<CameraId> = cfg.cameras.iter().map(|c| c.id.clone()).collect();
            FusionConfig::equal(&ids).unwrap()
        };
        let out = run_scenario(&cfg, fusion);
        let mut prev: Option<Point2> = None;
        for p in &out.wta {
            let expected = match &p.source {
                Some(cam) => out.samples[cam].get(&p.frame).map(|s| s.point),
                None => {
                    carried += 1;
                    prev
                }
            };
            let same = expected
                .map(|e| e.x.to_bits() == p.point.x.to_bits() && e.y.to_bits() == p.point.y.to_bits())
                .unwrap_or(false);
            bad += usize::from(!same);
            checked += 1;
            prev = Some(p.point);
        }
    }
    check(
        bad == 0 && checked > 0,
        format!("{checked} WTA points ({carried} carried), {bad} not bit-identical to a camera input"),
    )
}

fn weighted_mse(cfg: &ScenarioConfig, miss_threshold: u32) -> (PipelineOutput, f64) {
    let mut fusion = FusionConfig::corridor_front();
    fusion.miss_threshold = miss_threshold;
    let out = run_scenario(cfg, fusion);
    let m = stage_mse(&out, "weighted");
    (out, m)
}

fn criterion_7() -> Outcome {
    let cfg = preset("paper-shaped", 42);
    let (switching, on) = weighted_mse(&cfg, 3);
    let (_, off) = weighted_mse(&cfg, u32::MAX);

    let corridor = &switching.samples[&CameraId::from("corridor")];
    let mut mismatched = 0;
    let mut compared = 0;
    for p in switching.weighted.iter().filter(|p| p.frame >= 123) {
        compared += 1;
        if !corridor.get(&p.frame).is_some_and(|s| s.point == p.point) {
            mismatched += 1;
        }
    }
    let full = compared == (123..cfg.frames).count();

    // Context only: the same comparison over other seeds.
    let (mut wins, mut sum_on, mut sum_off) = (0, 0.0, 0.0);
    for seed in 0..100 {
        let c = preset("paper-shaped", seed);
        let (a, b) = (weighted_mse(&c, 3).1, weighted_mse(&c, u32::MAX).1);
        wins += usize::from(a < b);
        sum_on += a / 100.0;
        sum_off += b / 100.0;
    }
    check(
        mismatched == 0 && full && on < off,
        format!(
            "seed {}: frames 123..{}: {compared} compared, {mismatched} differ from corridor; \
             MSE switching {on:.4} vs disabled {off:.4}; seeds 0..100: switching lower in {wins}/100, \
             mean {sum_on:.2} vs {sum_off:.2}",
            cfg.seed,
            cfg.frames - 1,
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();

    // Covariance symmetry and PSD along random step sequences.
    let mut cov_steps = 0;
    for ca in [false, true] {
        let noise = NoiseConfig::new(rng.random_range(0.1..5.0), rng.random_range(0.1..5.0), 1.0).unwrap();
        let mut f = FilterState::at_position(Point2::new(0.0, 0.0), 0, model_for(ca), noise);
        for _ in 0..1000 {
            let z = rng
                .random_bool(0.7)
                .then(|| Point2::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0)));
            f = f.step(z).unwrap();
            let p = f.covariance();
            let asym = (p - p.transpose()).abs().max();
            let min_eig = SymmetricEigen::new(p.clone()).eigenvalues.min();
            if asym != 0.0 || min_eig < -1e-9 * p.trace() {
                failures.push(format!("covariance asym {asym:e}, min eigenvalue {min_eig:e}"));
                break;
            }
            cov_steps += 1;
        }
    }

    // Weighted fusion stays a convex combination of the healthy points.
    for _ in 0..1000 {
        let n = rng.random_range(2..=4);
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let ids: Vec<CameraId> = (0..n).map(|i| CameraId::from(format!("c{i}"))).collect();
        let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let head: f64 = weights[..n - 1].iter().sum();
        weights[n - 1] = (1.0 - head).max(0.0);
        let cfg = FusionConfig::new(ids.iter().cloned().zip(weights.iter().copied()), 3, 10).unwrap();
        let samples: Vec<CameraSample> = ids
            .iter()
            .map(|id| CameraSample {
                camera: id.clone(),
                point: Point2::new(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0)),
                updated: true,
                misses: rng.random_range(0..5),
                spread: 1.0,
            })
            .collect();
        let healthy: Vec<(&CameraSample, f64)> = samples
            .iter()
            .zip(&weights)
            .filter(|(s, _)| s.misses < 3)
            .map(|(s, w)| (s, *w))
            .collect();
        match fuse_weighted(&samples, &cfg, 0) {
            Ok(p) if !healthy.is_empty() => {
                let wsum: f64 = healthy.iter().map(|(_, w)| w).sum();
                let (ex, ey) = if wsum > 0.0 {
                    healthy.iter().fold((0.0, 0.0), |(x, y), (s, w)| (x + w * s.point.x / wsum, y + w * s.point.y / wsum))
                } else {
                    let k = healthy.len() as f64;
                    healthy.iter().fold((0.0, 0.0), |(x, y), (s, _)| (x + s.point.x / k, y + s.point.y / k))
                };
                let lo_x = healthy.iter().map(|(s, _)| s.point.x).fold(f64::INFINITY, f64::min);
                let hi_x = healthy.iter().map(|(s, _)| s.point.x).fold(f64::NEG_INFINITY, f64::max);
                let lo_y = healthy.iter().map(|(s, _)| s.point.y).fold(f64::INFINITY, f64::min);
                let hi_y = healthy.iter().map(|(s, _)| s.point.y).fold(f64::NEG_INFINITY, f64::max);
                let tol = 1e-9;
                let inside = p.x >= lo_x - tol && p.x <= hi_x + tol && p.y >= lo_y - tol && p.y <= hi_y + tol;
                if !inside || (p.x - ex).abs() > tol || (p.y - ey).abs() > tol {
                    failures.push(format!("fusion {p:?} vs expected ({ex}, {ey})"));
                    break;
                }
            }
            Err(_) if healthy.is_empty() => {}
            other => {
                failures.push(format!("fusion result {other:?} with {} healthy cameras", healthy.len()));
                break;
            }
        }
    }

    // WTA choice is unchanged when all scores and spreads are scaled.
    for _ in 0..1000 {
        let n = rng.random_range(2..=4);
        let samples: Vec<CameraSample> = (0..n)
            .map(|i| CameraSample {
                camera: CameraId::from(format!("c{i}")),
                point: Point2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)),
                updated: true,
                misses: rng.random_range(0..4),
                spread: 1.0,
            })
            .collect();
        let scores: Vec<CameraScore> = samples
            .iter()
            .map(|s| CameraScore {
                camera: s.camera.clone(),
                score: f64::from(rng.random_range(0..=10u32)) / 10.0,
                mean_spread: rng.random_range(0.5..5.0),
            })
            .collect();
        let k = rng.random_range(0.01..100.0);
        let scaled: Vec<CameraScore> = scores
            .iter()
            .map(|c| CameraScore {
                camera: c.camera.clone(),
                score: c.score * k,
                mean_spread: c.mean_spread * k,
            })
            .collect();
        let a = fuse_wta(&samples, &scores, 3, 0).ok();
        let b = fuse_wta(&samples, &scaled, 3, 0).ok();
        if a.as_ref().map(|r| &r.1) != b.as_ref().map(|r| &r.1) {
            failures.push(format!("WTA choice changed under scaling by {k}"));
            break;
        }
    }

    // Error metric: zero iff identical, translation invariance, k² scaling.
    for _ in 0..1000 {
        let len = rng.random_range(1..30u64);
        let a: Trajectory = (0..len)
            .map(|f| (f, Point2::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0))))
            .collect();
        let b: Trajectory = (0..len)
            .map(|f| (f, Point2::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0))))
            .collect();
        let base = mse(&a, &b).unwrap().mse;
        let (dx, dy) = (rng.random_range(-1e3..1e3), rng.random_range(-1e3..1e3));
        let shift = |t: &Trajectory| -> Trajectory { t.iter().map(|(f, p)| (f, Point2::new(p.x + dx, p.y + dy))).collect() };
        let k = rng.random_range(0.1..10.0);
        let mul_k = |t: &Trajectory| -> Trajectory { t.iter().map(|(f, p)| (f, Point2::new(p.x * k, p.y * k))).collect() };
        let shifted = mse(&shift(&a), &shift(&b)).unwrap().mse;
        let scaled = mse(&mul_k(&a), &mul_k(&b)).unwrap().mse;
        let self_err = mse(&a, &a).unwrap().mse;
        if self_err != 0.0 || base <= 0.0 {
            failures.push(format!("zero-iff-identical: self {self_err}, distinct {base}"));
            break;
        }
        if (shifted - base).abs() > 1e-9 * base.max(1.0) {
            failures.push(format!("translation: {shifted} vs {base}"));
            break;
        }
        if (scaled - k * k * base).abs() > 1e-9 * (k * k * base).max(1.0) {
            failures.push(format!("scaling: {scaled} vs {}", k * k * base));
            break;
        }
    }

    check(
        failures.is_empty() && cov_steps >= 1000,
        if failures.is_empty() {
            format!("{cov_steps} covariance steps, 1000 fusion draws, 1000 WTA draws, 1000 metric draws")
        } else {
            failures.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------
// Binary round trip.

fn camfuse(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_camfuse"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    if !out.status.success() || !stderr.is_empty() {
        return Err(format!("camfuse {args:?}: {} {stderr}", out.status));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn dir_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                files.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn reingest(path: &Path) -> Result<(), String> {
    let name = path.file_name().unwrap().to_string_lossy();
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let res = if name.starts_with("detections_") {
        io::parse_detections(path, &text).map(drop)
    } else if name.starts_with("gt") {
        io::parse_ground_truth(path, &text).map(drop)
    } else if name.starts_with("tracks_") {
        io::parse_tracks(path, &text).map(drop)
    } else if name.starts_with("fused_") {
        io::parse_fused(path, &text).map(drop)
    } else if name.starts_with("filtered_") {
        io::parse_trajectory(path, &text).map(drop)
    } else if name == "report.csv" {
        io::parse_report(path, &text).map(drop)
    } else if name == "errors.csv" {
        io::parse_errors(path, &text).map(drop)
    } else {
        return Err(format!("no reader for {name}"));
    };
    res.map_err(|e| e.to_string())
}

fn criterion_9() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        camfuse(&["simulate", "--preset", "paper-shaped", "--seed", "42", "--out", dir.to_str().unwrap()])?;
        camfuse(&["pipeline", "--config", dir.join("run.toml").to_str().unwrap()])?;
    }
    let fa = dir_files(&a);
    let fb = dir_files(&b);
    let identical = fa == fb;
    let mut csvs = 0;
    let mut problems = Vec::new();
    for rel in fa.keys().filter(|r| r.ends_with(".csv")) {
        csvs += 1;
        if let Err(e) = reingest(&a.join(rel)) {
            problems.push(format!("{rel}: {e}"));
        }
    }
    let has_report = fa.contains_key("out/report.csv");
    check(
        identical && problems.is_empty() && has_report,
        format!(
            "{} files byte-identical across runs: {identical}; {csvs} CSVs re-ingested, {} with diagnostics{}",
            fa.len(),
            problems.len(),
            if problems.is_empty() { String::new() } else { format!(" ({})", problems.join("; ")) }
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 filter matches dense oracle", criterion_1),
        ("2 filtering lowers error", criterion_2),
        ("3 fusion lowers error", criterion_3),
        ("4 exact on matched dynamics", criterion_4),
        ("5 velocity model wins across gaps", criterion_5),
        ("6 winner-take-all purity", criterion_6),
        ("7 switching on occlusion", criterion_7),
        ("8 invariants", criterion_8),
        ("9 determinism and round trip", criterion_9),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
