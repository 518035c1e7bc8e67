//! Full navigation state, the 21-dimensional error vector and the error
//! injection/extraction maps of the three filter variants.

use std::fmt;
use std::str::FromStr;

use nalgebra::{SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{NavError, Result};
use crate::lie::{Rot3, TangentSE23, SE23};

pub type ErrorState21 = SVector<f64, 21>;
pub type Matrix21 = SMatrix<f64, 21, 21>;
pub type Covariance21 = Matrix21;

/// Offsets of the 3-vector blocks inside [`ErrorState21`].
pub mod layout {
    pub const THETA: usize = 0;
    pub const VEL: usize = 3;
    pub const POS: usize = 6;
    pub const BG: usize = 9;
    pub const BA: usize = 12;
    pub const THETA_A: usize = 15;
    pub const WIND: usize = 18;
    pub const DIM: usize = 21;
}

/// Reads the 3-vector block starting at `offset`.
#[inline]
pub fn block3(x: &ErrorState21, offset: usize) -> Vector3<f64> {
    x.fixed_rows::<3>(offset).into_owned()
}

#[inline]
pub fn set_block3(x: &mut ErrorState21, offset: usize, v: &Vector3<f64>) {
    x.fixed_rows_mut::<3>(offset).copy_from(v);
}

/// Estimated (or true) vehicle state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    /// Body to navigation frame attitude.
    pub r_bn: Rot3,
    pub vel: Vector3<f64>,
    pub pos: Vector3<f64>,
    pub gyro_bias: Vector3<f64>,
    pub accel_bias: Vector3<f64>,
    /// Airflow to body frame rotation, built from angle of attack and sideslip.
    pub r_ab: Rot3,
    pub wind: Vector3<f64>,
}

impl Default for FullState {
    fn default() -> Self {
        Self::identity()
    }
}

impl FullState {
    pub fn identity() -> Self {
        Self {
            r_bn: Rot3::identity(),
            vel: Vector3::zeros(),
            pos: Vector3::zeros(),
            gyro_bias: Vector3::zeros(),
            accel_bias: Vector3::zeros(),
            r_ab: Rot3::identity(),
            wind: Vector3::zeros(),
        }
    }

    /// The SE₂(3) part `(R, v, p)`.
    pub fn pose(&self) -> SE23 {
        SE23::new(self.r_bn, self.vel, self.pos)
    }

    pub fn with_pose(mut self, pose: SE23) -> Self {
        self.r_bn = pose.rot;
        self.vel = pose.vel;
        self.pos = pose.pos;
        self
    }

    pub fn is_finite(&self) -> bool {
        [
            self.r_bn.matrix().as_slice(),
            self.vel.as_slice(),
            self.pos.as_slice(),
            self.gyro_bias.as_slice(),
            self.accel_bias.as_slice(),
            self.r_ab.matrix().as_slice(),
            self.wind.as_slice(),
        ]
        .iter()
        .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Which error definition a filter uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FilterVariant {
    /// Right-invariant error `η = χ χ̂⁻¹`.
    #[serde(rename = "RIEKF")]
    Riekf,
    /// Left-invariant error `η = χ̂⁻¹ χ`.
    #[serde(rename = "LIEKF")]
    Liekf,
    /// Conventional error state: navigation-frame attitude error, additive elsewhere.
    #[serde(rename = "ESEKF")]
    Esekf,
}

impl FilterVariant {
    pub const ALL: [FilterVariant; 3] = [FilterVariant::Riekf, FilterVariant::Liekf, FilterVariant::Esekf];

    pub fn name(&self) -> &'static str {
        match self {
            FilterVariant::Riekf => "RIEKF",
            FilterVariant::Liekf => "LIEKF",
            FilterVariant::Esekf => "ESEKF",
        }
    }
}

impl fmt::Display for FilterVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterVariant {
    type Err = NavError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RIEKF" | "RIGHT" => Ok(FilterVariant::Riekf),
            "LIEKF" | "LEFT" => Ok(FilterVariant::Liekf),
            "ESEKF" | "ES-EKF" | "EKF" => Ok(FilterVariant::Esekf),
            _ => Err(NavError::InvalidArgument(format!("unknown filter variant '{s}'"))),
        }
    }
}

fn group_part(dx: &ErrorState21) -> TangentSE23 {
    TangentSE23::new(
        block3(dx, layout::THETA),
        block3(dx, layout::VEL),
        block3(dx, layout::POS),
    )
}

fn set_group_part(dx: &mut ErrorState21, xi: &TangentSE23) {
    set_block3(dx, layout::THETA, &xi.theta);
    set_block3(dx, layout::VEL, &xi.dv);
    set_block3(dx, layout::POS, &xi.dp);
}

fn add_euclidean(state: &mut FullState, dx: &ErrorState21) {
    state.gyro_bias += block3(dx, layout::BG);
    state.accel_bias += block3(dx, layout::BA);
    state.wind += block3(dx, layout::WIND);
}

fn euclidean_diff(dx: &mut ErrorState21, x: &FullState, x_hat: &FullState) {
    set_block3(dx, layout::BG, &(x.gyro_bias - x_hat.gyro_bias));
    set_block3(dx, layout::BA, &(x.accel_bias - x_hat.accel_bias));
    set_block3(dx, layout::WIND, &(x.wind - x_hat.wind));
}

/// `χ = Exp(ξ) χ̂` on the group part, `Exp(δθ_a) R̂_ab` on the airflow rotation.
pub fn inject_error_right(x_hat: &FullState, dx: &ErrorState21) -> FullState {
    let pose = SE23::exp(&group_part(dx)) * x_hat.pose();
    let mut out = x_hat.with_pose(pose);
    out.r_ab = Rot3::exp(&block3(dx, layout::THETA_A)) * x_hat.r_ab;
    add_euclidean(&mut out, dx);
    out
}

/// `χ = χ̂ Exp(ξ)` on the group part, `R̂_ab Exp(δθ_a)` on the airflow rotation.
pub fn inject_error_left(x_hat: &FullState, dx: &ErrorState21) -> FullState {
    let pose = x_hat.pose() * SE23::exp(&group_part(dx));
    let mut out = x_hat.with_pose(pose);
    out.r_ab = x_hat.r_ab * Rot3::exp(&block3(dx, layout::THETA_A));
    add_euclidean(&mut out, dx);
    out
}

/// Navigation-frame attitude error with additive velocity and position errors.
pub fn inject_error_es(x_hat: &FullState, dx: &ErrorState21) -> FullState {
    let mut out = *x_hat;
    out.r_bn = Rot3::exp(&block3(dx, layout::THETA)) * x_hat.r_bn;
    out.vel += block3(dx, layout::VEL);
    out.pos += block3(dx, layout::POS);
    out.r_ab = x_hat.r_ab * Rot3::exp(&block3(dx, layout::THETA_A));
    add_euclidean(&mut out, dx);
    out
}

/// Exact inverse of [`inject_error_right`].
pub fn extract_error_right(x: &FullState, x_hat: &FullState) -> Result<ErrorState21> {
    let mut dx = ErrorState21::zeros();
    let eta = x.pose() * x_hat.pose().inverse();
    set_group_part(&mut dx, &eta.log()?);
    set_block3(&mut dx, layout::THETA_A, &(x.r_ab * x_hat.r_ab.transpose()).log()?);
    euclidean_diff(&mut dx, x, x_hat);
    Ok(dx)
}

/// Exact inverse of [`inject_error_left`].
pub fn extract_error_left(x: &FullState, x_hat: &FullState) -> Result<ErrorState21> {
    let mut dx = ErrorState21::zeros();
    let eta = x_hat.pose().inverse() * x.pose();
    set_group_part(&mut dx, &eta.log()?);
    set_block3(&mut dx, layout::THETA_A, &(x_hat.r_ab.transpose() * x.r_ab).log()?);
    euclidean_diff(&mut dx, x, x_hat);
    Ok(dx)
}

/// Exact inverse of [`inject_error_es`].
pub fn extract_error_es(x: &FullState, x_hat: &FullState) -> Result<ErrorState21> {
    let mut dx = ErrorState21::zeros();
    set_block3(&mut dx, layout::THETA, &(x.r_bn * x_hat.r_bn.transpose()).log()?);
    set_block3(&mut dx, layout::VEL, &(x.vel - x_hat.vel));
    set_block3(&mut dx, layout::POS, &(x.pos - x_hat.pos));
    set_block3(&mut dx, layout::THETA_A, &(x_hat.r_ab.transpose() * x.r_ab).log()?);
    euclidean_diff(&mut dx, x, x_hat);
    Ok(dx)
}

pub fn inject_error(variant: FilterVariant, x_hat: &FullState, dx: &ErrorState21) -> FullState {
    match variant {
        FilterVariant::Riekf => inject_error_right(x_hat, dx),
        FilterVariant::Liekf => inject_error_left(x_hat, dx),
        FilterVariant::Esekf => inject_error_es(x_hat, dx),
    }
}

pub fn extract_error(variant: FilterVariant, x: &FullState, x_hat: &FullState) -> Result<ErrorState21> {
    match variant {
        FilterVariant::Riekf => extract_error_right(x, x_hat),
        FilterVariant::Liekf => extract_error_left(x, x_hat),
        FilterVariant::Esekf => extract_error_es(x, x_hat),
    }
}

/// Symmetrizes a covariance in place.
pub fn symmetrize(p: &mut Covariance21) {
    let t = p.transpose();
    *p = 0.5 * (*p + t);
}

/// Block-diagonal covariance from per-block diagonal variances.
pub fn block_diagonal(variances: &[Vector3<f64>; 7]) -> Covariance21 {
    let mut p = Covariance21::zeros();
    for (b, var) in variances.iter().enumerate() {
        for i in 0..3 {
            p[(3 * b + i, 3 * b + i)] = var[i];
        }
    }
    p
}
