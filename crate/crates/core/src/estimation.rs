//! Constant-velocity / constant-acceleration motion models and the linear
//! Kalman predict/correct cycle.
//!
//! State ordering is `[x, y, vx, vy]` for constant velocity and
//! `[x, y, vx, vy, ax, ay]` for constant acceleration. Process and
//! measurement noise are scaled identities.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{Error, Result};
use crate::geometry::{Detection, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotionKind {
    ConstantVelocity,
    ConstantAcceleration,
}

impl MotionKind {
    pub fn state_dim(self) -> usize {
        match self {
            MotionKind::ConstantVelocity => 4,
            MotionKind::ConstantAcceleration => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionModel {
    kind: MotionKind,
    dt: f64,
}

impl MotionModel {
    pub fn new(kind: MotionKind, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config("dt", format!("must be > 0, got {dt}")));
        }
        Ok(Self { kind, dt })
    }

    pub fn constant_velocity() -> Self {
        Self {
            kind: MotionKind::ConstantVelocity,
            dt: 1.0,
        }
    }

    pub fn constant_acceleration() -> Self {
        Self {
            kind: MotionKind::ConstantAcceleration,
            dt: 1.0,
        }
    }

    pub fn kind(&self) -> MotionKind {
        self.kind
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn state_dim(&self) -> usize {
        self.kind.state_dim()
    }

    /// State transition `F`: one step of `r = r0 + v·dt (+ a·dt²/2)`.
    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let n = self.state_dim();
        let dt = self.dt;
        let mut f = DMatrix::identity(n, n);
        for axis in 0..2 {
            f[(axis, 2 + axis)] = dt;
            if self.kind == MotionKind::ConstantAcceleration {
                f[(axis, 4 + axis)] = 0.5 * dt * dt;
                f[(2 + axis, 4 + axis)] = dt;
            }
        }
        f
    }

    /// Observation `H`: picks `(x, y)` out of the state.
    pub fn observation_matrix(&self) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(2, self.state_dim());
        h[(0, 0)] = 1.0;
        h[(1, 1)] = 1.0;
        h
    }
}

impl Default for MotionModel {
    fn default() -> Self {
        Self::constant_velocity()
    }
}

pub fn transition_matrix(model: &MotionModel) -> DMatrix<f64> {
    model.transition_matrix()
}

pub fn observation_matrix(model: &MotionModel) -> DMatrix<f64> {
    model.observation_matrix()
}

/// Multipliers on the identity process, measurement and initial covariances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub q_scale: f64,
    pub r_scale: f64,
    pub p0_scale: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            q_scale: 1.0,
            r_scale: 1.0,
            p0_scale: 1.0,
        }
    }
}

impl NoiseConfig {
    pub fn new(q_scale: f64, r_scale: f64, p0_scale: f64) -> Result<Self> {
        for (key, v) in [("q_scale", q_scale), ("r_scale", r_scale), ("p0_scale", p0_scale)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, format!("must be > 0, got {v}")));
            }
        }
        Ok(Self {
            q_scale,
            r_scale,
            p0_scale,
        })
    }
}

/// Kalman state for one track under one motion model.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    x: DVector<f64>,
    p: DMatrix<f64>,
    model: MotionModel,
    noise: NoiseConfig,
    misses: u32,
    frame: u64,
}

impl FilterState {
    /// Starts a filter at the detection centroid with zero derivatives and
    /// `P = p0_scale·I`.
    pub fn init(d: &Detection, model: MotionModel, noise: NoiseConfig) -> Self {
        Self::at_position(d.centroid(), d.frame, model, noise)
    }

    pub fn at_position(pos: Point2, frame: u64, model: MotionModel, noise: NoiseConfig) -> Self {
        let n = model.state_dim();
        let mut x = DVector::zeros(n);
        x[0] = pos.x;
        x[1] = pos.y;
        Self {
            x,
            p: DMatrix::identity(n, n) * noise.p0_scale,
            model,
            noise,
            misses: 0,
            frame,
        }
    }

    /// Builds a state from explicit parts. `p` is symmetrized.
    pub fn from_parts(
        x: DVector<f64>,
        p: DMatrix<f64>,
        model: MotionModel,
        noise: NoiseConfig,
        frame: u64,
    ) -> Result<Self> {
        let n = model.state_dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        if p.nrows() != n || p.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.nrows().max(p.ncols()),
            });
        }
        Ok(Self {
            x,
            p: symmetrize(p),
            model,
            noise,
            misses: 0,
            frame,
        })
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn model(&self) -> &MotionModel {
        &self.model
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    pub fn misses(&self) -> u32 {
        self.misses
    }

    pub fn frame(&self) -> u64 {
        self.frame
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x[0], self.x[1])
    }

    /// Trace of the position block of `P`.
    pub fn spread(&self) -> f64 {
        (self.p[(0, 0)] + self.p[(1, 1)]).max(0.0)
    }

    /// `x' = F·x`, `P' = F·P·Fᵀ + q·I`, advancing one frame.
    pub fn predict(&self) -> FilterState {
        let f = self.model.transition_matrix();
        let n = self.model.state_dim();
        let x = &f * &self.x;
        let p = &f * &self.p * f.transpose() + DMatrix::identity(n, n) * self.noise.q_scale;
        FilterState {
            x,
            p: symmetrize(p),
            model: self.model,
            noise: self.noise,
            misses: self.misses,
            frame: self.frame + 1,
        }
    }

    /// Standard Kalman correction with measurement `z` and `R = r·I`.
    pub fn update(&self, z: Point2) -> Result<FilterState> {
        let h = self.model.observation_matrix();
        let n = self.model.state_dim();
        let innovation = DVector::from_column_slice(&[z.x - self.x[0], z.y - self.x[1]]);
        let k = self.gain()?;
        let x = &self.x + &k * innovation;
        let p = (DMatrix::identity(n, n) - &k * h) * &self.p;
        Ok(FilterState {
            x,
            p: symmetrize(p),
            model: self.model,
            noise: self.noise,
            misses: 0,
            frame: self.frame,
        })
    }

    /// Predict, then correct when a measurement is present. Without one the
    /// consecutive-miss counter grows by one.
    pub fn step(&self, z: Option<Point2>) -> Result<FilterState> {
        let predicted = self.predict();
        match z {
            Some(z) => predicted.update(z),
            None => Ok(FilterState {
                misses: self.misses.saturating_add(1),
                ..predicted
            }),
        }
    }

    /// Gain `K = P·Hᵀ·S⁻¹` the next [`update`](Self::update) would apply.
    pub fn gain(&self) -> Result<DMatrix<f64>> {
        let h = self.model.observation_matrix();
        let pht = &self.p * h.transpose();
        let s = &h * &pht + DMatrix::identity(2, 2) * self.noise.r_scale;
        let s = Matrix2::new(s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)]);
        if s.determinant().abs() <= 1e-12 {
            return Err(Error::SingularInnovation);
        }
        let s_inv = s.try_inverse().ok_or(Error::SingularInnovation)?;
        let s_inv = DMatrix::from_iterator(2, 2, s_inv.iter().copied());
        Ok(pht * s_inv)
    }
}

fn symmetrize(p: DMatrix<f64>) -> DMatrix<f64> {
    (&p + p.transpose()) * 0.5
}
