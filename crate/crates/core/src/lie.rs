//! Matrix Lie group core: SO(3) and the extended pose group SE₂(3).
//!
//! Tangent vectors of SE₂(3) are ordered `(θ, dv, dp)`. Group elements embed
//! as 5×5 matrices
//!
//! ```text
//! | R  v  p |
//! | 0  1  0 |
//! | 0  0  1 |
//! ```
//!
//! All functions are pure and operate on small stack-allocated values.

use std::ops::Mul;

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, NavError, Result};
use crate::state::{layout, FullState, Matrix21};

/// Below this rotation angle the closed forms are replaced by truncated series.
pub const SMALL_ANGLE: f64 = 1e-6;

/// Logarithms are refused within this margin of a half turn.
pub const HALF_TURN_MARGIN: f64 = 1e-6;

/// Tolerance used when validating rotation matrices.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

pub type Matrix5 = SMatrix<f64, 5, 5>;
pub type Matrix9 = SMatrix<f64, 9, 9>;
pub type Vector9 = SVector<f64, 9>;

/// Skew-symmetric matrix `[v]×` such that `[v]× w = v × w`.
#[inline]
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`]; reads the off-diagonal entries of a (nearly) skew matrix.
#[inline]
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// A rotation matrix in SO(3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix3<f64>", into = "Matrix3<f64>")]
pub struct Rot3(Matrix3<f64>);

impl TryFrom<Matrix3<f64>> for Rot3 {
    type Error = NavError;

    fn try_from(m: Matrix3<f64>) -> Result<Self> {
        Rot3::from_matrix(m)
    }
}

impl From<Rot3> for Matrix3<f64> {
    fn from(r: Rot3) -> Self {
        r.0
    }
}

impl Rot3 {
    pub fn identity() -> Self {
        Rot3(Matrix3::identity())
    }

    /// Validates orthonormality and a positive determinant.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        ensure_finite(m.as_slice(), "rotation matrix")?;
        let ortho = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if ortho > ORTHONORMAL_TOL || (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(NavError::InvalidArgument(format!(
                "matrix is not a rotation (orthonormality error {ortho:.2e}, det {det})"
            )));
        }
        Ok(Rot3(m))
    }

    /// Wraps a matrix the caller guarantees to be a rotation.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rot3(m)
    }

    /// Projects an approximately orthonormal matrix onto SO(3).
    pub fn from_matrix_projected(m: Matrix3<f64>) -> Self {
        let svd = m.svd(true, true);
        let u = svd.u.expect("svd u");
        let v_t = svd.v_t.expect("svd v_t");
        let mut r = u * v_t;
        if r.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            r = u * v_t;
        }
        Rot3(r)
    }

    /// Rotation about the body axes by roll, pitch and yaw (z-y-x convention).
    pub fn from_euler(roll: f64, pitch: f64, yaw: f64) -> Self {
        Rot3(*nalgebra::Rotation3::from_euler_angles(roll, pitch, yaw).matrix())
    }

    /// Roll, pitch and yaw of this rotation (z-y-x convention).
    pub fn euler(&self) -> (f64, f64, f64) {
        nalgebra::Rotation3::from_matrix_unchecked(self.0).euler_angles()
    }

    pub fn rot_x(angle: f64) -> Self {
        Rot3::exp(&Vector3::new(angle, 0.0, 0.0))
    }

    pub fn rot_y(angle: f64) -> Self {
        Rot3::exp(&Vector3::new(0.0, angle, 0.0))
    }

    pub fn rot_z(angle: f64) -> Self {
        Rot3::exp(&Vector3::new(0.0, 0.0, angle))
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    #[inline]
    pub fn transpose(&self) -> Rot3 {
        Rot3(self.0.transpose())
    }

    #[inline]
    pub fn inverse(&self) -> Rot3 {
        self.transpose()
    }

    #[inline]
    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Rodrigues exponential. Non-finite input yields a non-finite matrix; use
    /// [`so3_exp`] for the checked variant.
    pub fn exp(theta: &Vector3<f64>) -> Rot3 {
        let angle = theta.norm();
        let k = skew(theta);
        if angle < SMALL_ANGLE {
            return Rot3(Matrix3::identity() + k + 0.5 * k * k);
        }
        let half = 0.5 * angle;
        let a = angle.sin() / angle;
        // 1 - cos φ written as 2 sin²(φ/2) to keep precision at small angles
        let b = 2.0 * (half.sin() / angle).powi(2);
        Rot3(Matrix3::identity() + a * k + b * k * k)
    }

    /// Rotation vector of this rotation.
    pub fn log(&self) -> Result<Vector3<f64>> {
        let r = &self.0;
        let w = vee(&(r - r.transpose()));
        let sin_angle = 0.5 * w.norm();
        let cos_angle = 0.5 * (r.trace() - 1.0);
        let angle = sin_angle.atan2(cos_angle);
        if angle > std::f64::consts::PI - HALF_TURN_MARGIN {
            return Err(NavError::NearSingularity { angle });
        }
        if angle < SMALL_ANGLE {
            return Ok(0.5 * w * (1.0 + angle * angle / 6.0));
        }
        if angle < 0.5 * std::f64::consts::PI {
            return Ok(w * (angle / (2.0 * sin_angle)));
        }
        // Close to a half turn the antisymmetric part vanishes; take the axis
        // from the symmetric part and its sign from w.
        let b = 0.5 * (r + r.transpose()) - cos_angle * Matrix3::identity();
        let diag = Vector3::new(b[(0, 0)], b[(1, 1)], b[(2, 2)]);
        let i = diag.imax();
        let mut axis: Vector3<f64> = b.column(i).normalize();
        if axis.dot(&w) < 0.0 {
            axis = -axis;
        }
        Ok(axis * angle)
    }

    /// Total rotation angle in radians.
    pub fn angle(&self) -> f64 {
        let w = vee(&(self.0 - self.0.transpose()));
        (0.5 * w.norm()).atan2(0.5 * (self.0.trace() - 1.0))
    }
}

impl Mul for Rot3 {
    type Output = Rot3;

    fn mul(self, rhs: Rot3) -> Rot3 {
        Rot3(self.0 * rhs.0)
    }
}

impl Mul<&Rot3> for &Rot3 {
    type Output = Rot3;

    fn mul(self, rhs: &Rot3) -> Rot3 {
        Rot3(self.0 * rhs.0)
    }
}

impl Mul<Vector3<f64>> for &Rot3 {
    type Output = Vector3<f64>;

    fn mul(self, rhs: Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

impl Mul<Vector3<f64>> for Rot3 {
    type Output = Vector3<f64>;

    fn mul(self, rhs: Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

/// Checked SO(3) exponential.
pub fn so3_exp(theta: &Vector3<f64>) -> Result<Rot3> {
    ensure_finite(theta.as_slice(), "rotation vector")?;
    Ok(Rot3::exp(theta))
}

/// SO(3) logarithm; refuses rotations within [`HALF_TURN_MARGIN`] of π.
pub fn so3_log(r: &Rot3) -> Result<Vector3<f64>> {
    r.log()
}

/// Left Jacobian of SO(3):
/// `J_l = (sin φ/φ) I + (1 − sin φ/φ) a aᵀ + ((1 − cos φ)/φ) [a]×`.
pub fn left_jacobian(theta: &Vector3<f64>) -> Matrix3<f64> {
    let angle = theta.norm();
    let k = skew(theta);
    if angle < SMALL_ANGLE {
        return Matrix3::identity() + 0.5 * k + k * k / 6.0;
    }
    let axis = theta / angle;
    let s = angle.sin() / angle;
    let one_minus_cos = 2.0 * (0.5 * angle).sin().powi(2);
    Matrix3::identity() * s + (1.0 - s) * axis * axis.transpose() + (one_minus_cos / angle) * skew(&axis)
}

/// Checked variant of [`left_jacobian`].
pub fn try_left_jacobian(theta: &Vector3<f64>) -> Result<Matrix3<f64>> {
    ensure_finite(theta.as_slice(), "rotation vector")?;
    Ok(left_jacobian(theta))
}

/// Closed-form inverse of [`left_jacobian`].
pub fn left_jacobian_inverse(theta: &Vector3<f64>) -> Matrix3<f64> {
    let angle = theta.norm();
    let k = skew(theta);
    if angle < SMALL_ANGLE {
        return Matrix3::identity() - 0.5 * k + k * k / 12.0;
    }
    let axis = theta / angle;
    let half = 0.5 * angle;
    let c = half / half.tan();
    Matrix3::identity() * c + (1.0 - c) * axis * axis.transpose() - half * skew(&axis)
}

/// Right Jacobian, `J_r(θ) = J_l(−θ)`.
pub fn right_jacobian(theta: &Vector3<f64>) -> Matrix3<f64> {
    left_jacobian(&-theta)
}

/// Tangent vector of SE₂(3), ordered `(θ, dv, dp)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TangentSE23 {
    pub theta: Vector3<f64>,
    pub dv: Vector3<f64>,
    pub dp: Vector3<f64>,
}

impl TangentSE23 {
    pub fn new(theta: Vector3<f64>, dv: Vector3<f64>, dp: Vector3<f64>) -> Self {
        Self { theta, dv, dp }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn to_vector(&self) -> Vector9 {
        let mut out = Vector9::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&self.theta);
        out.fixed_rows_mut::<3>(3).copy_from(&self.dv);
        out.fixed_rows_mut::<3>(6).copy_from(&self.dp);
        out
    }

    pub fn from_vector(v: &Vector9) -> Self {
        Self {
            theta: v.fixed_rows::<3>(0).into_owned(),
            dv: v.fixed_rows::<3>(3).into_owned(),
            dp: v.fixed_rows::<3>(6).into_owned(),
        }
    }

    /// Lie algebra element `ξ^∧` as a 5×5 matrix.
    pub fn hat(&self) -> Matrix5 {
        let mut m = Matrix5::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&self.theta));
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.dv);
        m.fixed_view_mut::<3, 1>(0, 4).copy_from(&self.dp);
        m
    }

    /// Inverse of [`TangentSE23::hat`].
    pub fn vee(m: &Matrix5) -> Self {
        let rot: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
        Self {
            theta: vee(&rot),
            dv: m.fixed_view::<3, 1>(0, 3).into_owned(),
            dp: m.fixed_view::<3, 1>(0, 4).into_owned(),
        }
    }
}

/// Extended pose: attitude, velocity and position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SE23 {
    pub rot: Rot3,
    pub vel: Vector3<f64>,
    pub pos: Vector3<f64>,
}

impl SE23 {
    pub fn new(rot: Rot3, vel: Vector3<f64>, pos: Vector3<f64>) -> Self {
        Self { rot, vel, pos }
    }

    pub fn identity() -> Self {
        Self::new(Rot3::identity(), Vector3::zeros(), Vector3::zeros())
    }

    pub fn compose(&self, other: &SE23) -> SE23 {
        SE23 {
            rot: self.rot * other.rot,
            vel: self.rot.rotate(&other.vel) + self.vel,
            pos: self.rot.rotate(&other.pos) + self.pos,
        }
    }

    pub fn inverse(&self) -> SE23 {
        let rt = self.rot.transpose();
        SE23 {
            rot: rt,
            vel: -rt.rotate(&self.vel),
            pos: -rt.rotate(&self.pos),
        }
    }

    pub fn exp(xi: &TangentSE23) -> SE23 {
        let jl = left_jacobian(&xi.theta);
        SE23 {
            rot: Rot3::exp(&xi.theta),
            vel: jl * xi.dv,
            pos: jl * xi.dp,
        }
    }

    pub fn log(&self) -> Result<TangentSE23> {
        let theta = self.rot.log()?;
        let jl_inv = left_jacobian_inverse(&theta);
        Ok(TangentSE23 {
            theta,
            dv: jl_inv * self.vel,
            dp: jl_inv * self.pos,
        })
    }

    pub fn to_matrix(&self) -> Matrix5 {
        let mut m = Matrix5::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(self.rot.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.vel);
        m.fixed_view_mut::<3, 1>(0, 4).copy_from(&self.pos);
        m
    }

    /// Reads a 5×5 embedding; the rotation block must be a valid rotation.
    pub fn from_matrix(m: &Matrix5) -> Result<SE23> {
        Ok(SE23 {
            rot: Rot3::from_matrix(m.fixed_view::<3, 3>(0, 0).into_owned())?,
            vel: m.fixed_view::<3, 1>(0, 3).into_owned(),
            pos: m.fixed_view::<3, 1>(0, 4).into_owned(),
        })
    }

    /// `Ad_χ`, satisfying `χ ξ^∧ χ⁻¹ = (Ad_χ ξ)^∧`.
    pub fn adjoint(&self) -> Matrix9 {
        let r = self.rot.matrix();
        let mut ad = Matrix9::zeros();
        for i in 0..3 {
            ad.fixed_view_mut::<3, 3>(3 * i, 3 * i).copy_from(r);
        }
        ad.fixed_view_mut::<3, 3>(3, 0).copy_from(&(skew(&self.vel) * r));
        ad.fixed_view_mut::<3, 3>(6, 0).copy_from(&(skew(&self.pos) * r));
        ad
    }

    /// `Ad_χ⁻¹ = Ad_{χ⁻¹}`.
    pub fn adjoint_inverse(&self) -> Matrix9 {
        let rt = self.rot.matrix().transpose();
        let mut ad = Matrix9::zeros();
        for i in 0..3 {
            ad.fixed_view_mut::<3, 3>(3 * i, 3 * i).copy_from(&rt);
        }
        ad.fixed_view_mut::<3, 3>(3, 0).copy_from(&(-rt * skew(&self.vel)));
        ad.fixed_view_mut::<3, 3>(6, 0).copy_from(&(-rt * skew(&self.pos)));
        ad
    }
}

impl Mul for SE23 {
    type Output = SE23;

    fn mul(self, rhs: SE23) -> SE23 {
        self.compose(&rhs)
    }
}

/// Full-state adjoint `Ad_χ` over the 21-dimensional error layout.
///
/// The SE₂(3) block is the group adjoint. The airflow-rotation block is
/// `R_ab`, relating the left-placed and right-placed airflow errors. Bias
/// and wind rows are identity.
pub fn state_adjoint(state: &FullState) -> Matrix21 {
    let mut ad = Matrix21::identity();
    ad.fixed_view_mut::<9, 9>(0, 0).copy_from(&state.pose().adjoint());
    ad.fixed_view_mut::<3, 3>(layout::THETA_A, layout::THETA_A)
        .copy_from(state.r_ab.matrix());
    ad
}

/// Full-state `Ad_χ⁻¹`, used to carry left-invariant observation matrices
/// into right-invariant form: `H^R = H^L · Ad_χ⁻¹`.
pub fn state_adjoint_inverse(state: &FullState) -> Matrix21 {
    let mut ad = Matrix21::identity();
    ad.fixed_view_mut::<9, 9>(0, 0)
        .copy_from(&state.pose().adjoint_inverse());
    ad.fixed_view_mut::<3, 3>(layout::THETA_A, layout::THETA_A)
        .copy_from(&state.r_ab.matrix().transpose());
    ad
}
