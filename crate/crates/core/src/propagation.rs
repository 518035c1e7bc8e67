//! Strapdown mechanization, error-state transition matrices and covariance
//! propagation.
//!
//! The transition matrices are the exact first-order linearization of the
//! discrete mechanization below, so they agree with finite differences of
//! the nonlinear error map to second order in the perturbation.

use nalgebra::{Matrix3, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, NavError, Result};
use crate::frame::gravity;
use crate::lie::{right_jacobian, skew, Rot3};
use crate::state::{layout::*, symmetrize, Covariance21, FilterVariant, FullState, Matrix21};

/// Largest step accepted by [`strapdown_step`].
pub const MAX_STEP: f64 = 0.1;

/// Dimension of the driving noise vector `(n_g, n_a, n_bg, n_ba, n_θa, n_vw)`.
pub const NOISE_DIM: usize = 18;

pub type NoiseMatrix = SMatrix<f64, 21, NOISE_DIM>;

/// One IMU sample: body rate and specific force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub t: f64,
    pub gyro: Vector3<f64>,
    pub accel: Vector3<f64>,
}

impl ImuSample {
    pub fn new(t: f64, gyro: Vector3<f64>, accel: Vector3<f64>) -> Self {
        Self { t, gyro, accel }
    }
}

/// Continuous-time noise power spectral densities, per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessNoise {
    pub sigma_g2: f64,
    pub sigma_a2: f64,
    pub sigma_bg2: f64,
    pub sigma_ba2: f64,
    pub sigma_theta_a2: f64,
    pub sigma_vw2: f64,
}

impl Default for ProcessNoise {
    fn default() -> Self {
        Self {
            sigma_g2: 1e-4f64.powi(2),
            sigma_a2: 1e-3f64.powi(2),
            sigma_bg2: 2e-5f64.powi(2),
            sigma_ba2: 1e-4f64.powi(2),
            sigma_theta_a2: 0.0175f64.powi(2),
            sigma_vw2: 0.01f64.powi(2),
        }
    }
}

impl ProcessNoise {
    pub fn zero() -> Self {
        Self {
            sigma_g2: 0.0,
            sigma_a2: 0.0,
            sigma_bg2: 0.0,
            sigma_ba2: 0.0,
            sigma_theta_a2: 0.0,
            sigma_vw2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.sigma_g2,
            self.sigma_a2,
            self.sigma_bg2,
            self.sigma_ba2,
            self.sigma_theta_a2,
            self.sigma_vw2,
        ];
        if all.iter().all(|v| v.is_finite() && *v >= 0.0) {
            Ok(())
        } else {
            Err(NavError::InvalidArgument("process noise variances must be finite and non-negative".into()))
        }
    }

    fn diagonal(&self) -> [f64; NOISE_DIM] {
        let per_block = [
            self.sigma_g2,
            self.sigma_a2,
            self.sigma_bg2,
            self.sigma_ba2,
            self.sigma_theta_a2,
            self.sigma_vw2,
        ];
        std::array::from_fn(|i| per_block[i / 3])
    }
}

/// Discrete transition matrix and process noise for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionPair {
    pub phi: Matrix21,
    pub qd: Matrix21,
}

/// One step of the strapdown mechanization with bias-corrected inputs.
pub fn strapdown_step(x: &FullState, u: &ImuSample, dt: f64) -> Result<FullState> {
    if !(dt > 0.0 && dt <= MAX_STEP + 1e-12) {
        return Err(NavError::InvalidArgument(format!("step {dt} s outside (0, {MAX_STEP}]")));
    }
    ensure_finite(u.gyro.as_slice(), "gyro sample")?;
    ensure_finite(u.accel.as_slice(), "accel sample")?;
    Ok(mechanize(x, u, dt))
}

pub(crate) fn mechanize(x: &FullState, u: &ImuSample, dt: f64) -> FullState {
    let w = u.gyro - x.gyro_bias;
    let acc = x.r_bn * (u.accel - x.accel_bias) + gravity();
    let mut out = *x;
    out.r_bn = x.r_bn * Rot3::exp(&(w * dt));
    out.vel = x.vel + acc * dt;
    out.pos = x.pos + x.vel * dt + 0.5 * acc * dt * dt;
    out
}

fn put(m: &mut Matrix21, row: usize, col: usize, block: &Matrix3<f64>) {
    m.fixed_view_mut::<3, 3>(row, col).copy_from(block);
}

fn put_noise(m: &mut NoiseMatrix, row: usize, col: usize, block: &Matrix3<f64>) {
    m.fixed_view_mut::<3, 3>(row, col).copy_from(block);
}

/// Continuous-time error dynamics `F` of the chosen variant.
pub fn continuous_jacobian(variant: FilterVariant, x: &FullState, u: &ImuSample) -> Matrix21 {
    let r = *x.r_bn.matrix();
    let w = u.gyro - x.gyro_bias;
    let a = u.accel - x.accel_bias;
    let eye = Matrix3::identity();
    let mut f = Matrix21::zeros();
    match variant {
        FilterVariant::Riekf => {
            put(&mut f, VEL, THETA, &skew(&gravity()));
            put(&mut f, POS, VEL, &eye);
            put(&mut f, THETA, BG, &-r);
            put(&mut f, VEL, BG, &(-skew(&x.vel) * r));
            put(&mut f, VEL, BA, &-r);
            put(&mut f, POS, BG, &(-skew(&x.pos) * r));
        }
        FilterVariant::Liekf => {
            let wx = skew(&w);
            put(&mut f, THETA, THETA, &-wx);
            put(&mut f, VEL, VEL, &-wx);
            put(&mut f, POS, POS, &-wx);
            put(&mut f, VEL, THETA, &-skew(&a));
            put(&mut f, POS, VEL, &eye);
            put(&mut f, THETA, BG, &-eye);
            put(&mut f, VEL, BA, &-eye);
        }
        FilterVariant::Esekf => {
            put(&mut f, THETA, BG, &-r);
            put(&mut f, VEL, THETA, &-skew(&(r * a)));
            put(&mut f, VEL, BA, &-r);
            put(&mut f, POS, VEL, &eye);
        }
    }
    f
}

/// Noise input matrix mapping `(n_g, n_a, n_bg, n_ba, n_θa, n_vw)` into the error.
pub fn noise_jacobian(variant: FilterVariant, x: &FullState) -> NoiseMatrix {
    let r = *x.r_bn.matrix();
    let eye = Matrix3::identity();
    let mut g = NoiseMatrix::zeros();
    match variant {
        FilterVariant::Riekf => {
            put_noise(&mut g, THETA, 0, &-r);
            put_noise(&mut g, VEL, 0, &(-skew(&x.vel) * r));
            put_noise(&mut g, VEL, 3, &-r);
            put_noise(&mut g, POS, 0, &(-skew(&x.pos) * r));
        }
        FilterVariant::Liekf => {
            put_noise(&mut g, THETA, 0, &-eye);
            put_noise(&mut g, VEL, 3, &-eye);
        }
        FilterVariant::Esekf => {
            put_noise(&mut g, THETA, 0, &-r);
            put_noise(&mut g, VEL, 3, &-r);
        }
    }
    put_noise(&mut g, BG, 6, &eye);
    put_noise(&mut g, BA, 9, &eye);
    put_noise(&mut g, THETA_A, 12, &eye);
    put_noise(&mut g, WIND, 15, &eye);
    g
}

fn discrete_noise(phi: &Matrix21, g: &NoiseMatrix, q: &ProcessNoise, dt: f64) -> Matrix21 {
    let mut gq = *g;
    for (j, s) in q.diagonal().iter().enumerate() {
        gq.column_mut(j).scale_mut(*s);
    }
    let qc = gq * g.transpose();
    let mut qd = phi * qc * phi.transpose() * dt;
    symmetrize(&mut qd);
    qd
}

/// Right-invariant transition over one mechanization step.
pub fn error_jacobians_right(x: &FullState, u: &ImuSample, dt: f64, q: &ProcessNoise) -> TransitionPair {
    let next = mechanize(x, u, dt);
    let w = u.gyro - x.gyro_bias;
    let r = *x.r_bn.matrix();
    let r_next = *next.r_bn.matrix();
    let jr = right_jacobian(&(w * dt));
    let gx = skew(&gravity());
    let rot_bg = -r_next * jr * dt;

    let mut phi = Matrix21::identity();
    put(&mut phi, THETA, BG, &rot_bg);
    put(&mut phi, VEL, THETA, &(gx * dt));
    put(&mut phi, VEL, BG, &(skew(&next.vel) * rot_bg));
    put(&mut phi, VEL, BA, &(-r * dt));
    put(&mut phi, POS, THETA, &(0.5 * gx * dt * dt));
    put(&mut phi, POS, VEL, &(Matrix3::identity() * dt));
    put(&mut phi, POS, BG, &(skew(&next.pos) * rot_bg));
    put(&mut phi, POS, BA, &(-0.5 * r * dt * dt));

    let qd = discrete_noise(&phi, &noise_jacobian(FilterVariant::Riekf, x), q, dt);
    TransitionPair { phi, qd }
}

/// Left-invariant transition over one mechanization step.
pub fn error_jacobians_left(x: &FullState, u: &ImuSample, dt: f64, q: &ProcessNoise) -> TransitionPair {
    let w = u.gyro - x.gyro_bias;
    let a = u.accel - x.accel_bias;
    let et = Rot3::exp(&(w * dt)).matrix().transpose();
    let jr = right_jacobian(&(w * dt));
    let ax = skew(&a);

    let mut phi = Matrix21::identity();
    put(&mut phi, THETA, THETA, &et);
    put(&mut phi, THETA, BG, &(-jr * dt));
    put(&mut phi, VEL, THETA, &(-et * ax * dt));
    put(&mut phi, VEL, VEL, &et);
    put(&mut phi, VEL, BA, &(-et * dt));
    put(&mut phi, POS, THETA, &(-0.5 * et * ax * dt * dt));
    put(&mut phi, POS, VEL, &(et * dt));
    put(&mut phi, POS, POS, &et);
    put(&mut phi, POS, BA, &(-0.5 * et * dt * dt));

    let qd = discrete_noise(&phi, &noise_jacobian(FilterVariant::Liekf, x), q, dt);
    TransitionPair { phi, qd }
}

/// Conventional error-state transition over one mechanization step.
pub fn es_ekf_jacobians(x: &FullState, u: &ImuSample, dt: f64, q: &ProcessNoise) -> TransitionPair {
    let next = mechanize(x, u, dt);
    let w = u.gyro - x.gyro_bias;
    let a = u.accel - x.accel_bias;
    let r = *x.r_bn.matrix();
    let jr = right_jacobian(&(w * dt));
    let fx = skew(&(r * a));

    let mut phi = Matrix21::identity();
    put(&mut phi, THETA, BG, &(-next.r_bn.matrix() * jr * dt));
    put(&mut phi, VEL, THETA, &(-fx * dt));
    put(&mut phi, VEL, BA, &(-r * dt));
    put(&mut phi, POS, THETA, &(-0.5 * fx * dt * dt));
    put(&mut phi, POS, VEL, &(Matrix3::identity() * dt));
    put(&mut phi, POS, BA, &(-0.5 * r * dt * dt));

    let qd = discrete_noise(&phi, &noise_jacobian(FilterVariant::Esekf, x), q, dt);
    TransitionPair { phi, qd }
}

pub fn error_jacobians(variant: FilterVariant, x: &FullState, u: &ImuSample, dt: f64, q: &ProcessNoise) -> TransitionPair {
    match variant {
        FilterVariant::Riekf => error_jacobians_right(x, u, dt, q),
        FilterVariant::Liekf => error_jacobians_left(x, u, dt, q),
        FilterVariant::Esekf => es_ekf_jacobians(x, u, dt, q),
    }
}

/// `P⁺ = Φ P Φᵀ + Qd`, symmetrized.
pub fn propagate_covariance(p: &Covariance21, tp: &TransitionPair) -> Covariance21 {
    let mut out = tp.phi * p * tp.phi.transpose() + tp.qd;
    symmetrize(&mut out);
    out
}
