//! Measurement models and the Kalman update.
//!
//! Innovations are `measured − predicted` and `H` is the derivative of the
//! prediction with respect to the error state. Every model is first built
//! for the right-invariant error and then carried to the other variants by
//! the first-order map `ξ_R ≈ T ξ`.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::airdata::rab_from_angles;
use crate::error::{ensure_finite, NavError, Result};
use crate::lie::{left_jacobian_inverse, skew, state_adjoint, Rot3};
use crate::state::{inject_error, layout::*, symmetrize, Covariance21, ErrorState21, FilterVariant, FullState, Matrix21};

/// Largest condition number accepted for the innovation covariance.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

/// Sea-level reference pressure, bar.
pub const P0_BAR: f64 = 1.01325;

/// Reference direction of the normalized magnetic field in the navigation frame.
pub const MAG_REFERENCE: [f64; 3] = [1.0, 0.0, 0.0];

/// Largest airflow angle accepted as a pseudo-measurement, rad.
pub const MAX_AIRFLOW_ANGLE: f64 = 0.5;

/// Linearized measurement: `z ≈ H δx + noise`, `noise ~ N(0, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel<const K: usize> {
    pub h: SMatrix<f64, K, 21>,
    pub z: SVector<f64, K>,
    pub r: SMatrix<f64, K, K>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanStep {
    pub dx: ErrorState21,
    pub cov: Covariance21,
    /// Normalized innovation squared `zᵀ S⁻¹ z`.
    pub nis: f64,
}

/// Innovation covariance `S = H P Hᵀ + R` and its inverse.
fn innovation_covariance<const K: usize>(
    p: &Covariance21,
    mm: &MeasurementModel<K>,
) -> Result<(SMatrix<f64, 21, K>, SMatrix<f64, K, K>)> {
    let pht = p * mm.h.transpose();
    let s = mm.h * pht + mm.r;
    let sv = nalgebra::DMatrix::from_column_slice(K, K, s.as_slice()).singular_values();
    let condition = if sv.min() > 0.0 { sv.max() / sv.min() } else { f64::INFINITY };
    if condition.is_nan() || condition > MAX_INNOVATION_CONDITION {
        return Err(NavError::SingularInnovation { condition });
    }
    let s_inv = s.try_inverse().ok_or(NavError::SingularInnovation { condition })?;
    Ok((pht, s_inv))
}

/// Kalman gain, correction and Joseph-form covariance update.
pub fn kf_update<const K: usize>(p: &Covariance21, mm: &MeasurementModel<K>) -> Result<KalmanStep> {
    ensure_finite(mm.z.as_slice(), "innovation")?;
    let (pht, s_inv) = innovation_covariance(p, mm)?;
    let k = pht * s_inv;
    let dx = k * mm.z;
    // (I − KH) P (I − KH)ᵀ + K R Kᵀ, expanded to avoid 21×21 products
    let m = p - k * pht.transpose();
    let mut cov = m - (m * mm.h.transpose()) * k.transpose() + k * mm.r * k.transpose();
    symmetrize(&mut cov);
    let nis = (mm.z.transpose() * s_inv * mm.z)[(0, 0)];
    Ok(KalmanStep { dx, cov, nis })
}

/// `zᵀ S⁻¹ z` without performing the update.
pub fn normalized_innovation<const K: usize>(p: &Covariance21, mm: &MeasurementModel<K>) -> Result<f64> {
    let (_, s_inv) = innovation_covariance(p, mm)?;
    Ok((mm.z.transpose() * s_inv * mm.z)[(0, 0)])
}

/// Gate threshold: the `probability` quantile of χ² with `dof` degrees of freedom.
pub fn chi2_threshold(dof: usize, probability: f64) -> Result<f64> {
    let dist = ChiSquared::new(dof as f64).map_err(|e| NavError::InvalidArgument(e.to_string()))?;
    Ok(dist.inverse_cdf(probability))
}

/// Map `T` with `ξ_R ≈ T ξ_variant` around the estimate.
pub fn error_transform(variant: FilterVariant, x: &FullState) -> Matrix21 {
    match variant {
        FilterVariant::Riekf => Matrix21::identity(),
        FilterVariant::Liekf => state_adjoint(x),
        FilterVariant::Esekf => {
            let mut t = Matrix21::identity();
            t.fixed_view_mut::<3, 3>(VEL, THETA).copy_from(&skew(&x.vel));
            t.fixed_view_mut::<3, 3>(POS, THETA).copy_from(&skew(&x.pos));
            t.fixed_view_mut::<3, 3>(THETA_A, THETA_A).copy_from(x.r_ab.matrix());
            t
        }
    }
}

impl<const K: usize> MeasurementModel<K> {
    /// Re-expresses a right-invariant model in the error of `variant`.
    pub fn for_variant(mut self, variant: FilterVariant, x: &FullState) -> Self {
        if variant != FilterVariant::Riekf {
            self.h *= error_transform(variant, x);
        }
        self
    }
}

fn put<const K: usize>(h: &mut SMatrix<f64, K, 21>, row: usize, col: usize, block: &Matrix3<f64>) {
    h.fixed_view_mut::<3, 3>(row, col).copy_from(block);
}

/// GNSS velocity and position fix.
pub fn gnss_model(x: &FullState, pos: &Vector3<f64>, vel: &Vector3<f64>, sigma_v2: f64, sigma_p2: f64) -> MeasurementModel<6> {
    let mut h = SMatrix::<f64, 6, 21>::zeros();
    put(&mut h, 0, THETA, &-skew(&x.vel));
    put(&mut h, 0, VEL, &Matrix3::identity());
    put(&mut h, 3, THETA, &-skew(&x.pos));
    put(&mut h, 3, POS, &Matrix3::identity());
    let mut z = SVector::<f64, 6>::zeros();
    z.fixed_rows_mut::<3>(0).copy_from(&(vel - x.vel));
    z.fixed_rows_mut::<3>(3).copy_from(&(pos - x.pos));
    let r = SMatrix::<f64, 6, 6>::from_diagonal(&SVector::<f64, 6>::from_fn(|i, _| if i < 3 { sigma_v2 } else { sigma_p2 }));
    MeasurementModel { h, z, r }
}

/// Pressure altitude from static pressure in bar.
pub fn pressure_to_height(pressure: f64) -> Result<f64> {
    if !(pressure > 0.0 && pressure <= P0_BAR) {
        return Err(NavError::InvalidArgument(format!("static pressure {pressure} bar outside (0, {P0_BAR}]")));
    }
    Ok(44300.0 * (1.0 - (pressure / P0_BAR).powf(1.0 / 5.255)))
}

/// Inverse of [`pressure_to_height`].
pub fn height_to_pressure(height: f64) -> f64 {
    P0_BAR * (1.0 - height / 44300.0).powf(5.255)
}

/// Barometric altitude. The navigation frame points down, so the measured
/// quantity is `p_z = origin − h`.
pub fn baro_model(x: &FullState, pressure: f64, origin_altitude: f64, sigma_h2: f64) -> Result<MeasurementModel<1>> {
    let height = pressure_to_height(pressure)?;
    let mut h = SMatrix::<f64, 1, 21>::zeros();
    let row = -skew(&x.pos);
    h.fixed_view_mut::<1, 3>(0, THETA).copy_from(&row.row(2));
    h[(0, POS + 2)] = 1.0;
    let measured_pz = origin_altitude - height;
    Ok(MeasurementModel {
        h,
        z: SVector::<f64, 1>::new(measured_pz - x.pos.z),
        r: SMatrix::<f64, 1, 1>::new(sigma_h2),
    })
}

/// Magnetometer direction mapped to the navigation frame and compared with
/// the reference direction.
pub fn mag_model(x: &FullState, field_body: &Vector3<f64>, sigma_m2: f64) -> Result<MeasurementModel<3>> {
    ensure_finite(field_body.as_slice(), "magnetic field")?;
    let norm = field_body.norm();
    if norm <= 1e-12 {
        return Err(NavError::InvalidArgument("magnetic field vector has zero length".into()));
    }
    let m_nav = x.r_bn.rotate(&(field_body / norm));
    let mut h = SMatrix::<f64, 3, 21>::zeros();
    put(&mut h, 0, THETA, &-skew(&m_nav));
    Ok(MeasurementModel {
        h,
        z: Vector3::from(MAG_REFERENCE) - m_nav,
        r: Matrix3::identity() * sigma_m2,
    })
}

/// Wind-triangle residual `v − R R_ab [V, 0, 0] − v_w`, observed as zero.
/// Returns `None` below `min_airspeed`.
pub fn airspeed_model(x: &FullState, tas: f64, min_airspeed: f64, sigma_tas2: f64) -> Result<Option<MeasurementModel<3>>> {
    if !tas.is_finite() {
        return Err(NavError::InvalidArgument("airspeed is not finite".into()));
    }
    if tas < min_airspeed {
        return Ok(None);
    }
    let air_body = x.r_ab.rotate(&Vector3::new(tas, 0.0, 0.0));
    let air_nav = x.r_bn.rotate(&air_body);
    let residual = x.vel - air_nav - x.wind;
    let mut h = SMatrix::<f64, 3, 21>::zeros();
    put(&mut h, 0, THETA, &-skew(&(x.vel - air_nav)));
    put(&mut h, 0, VEL, &Matrix3::identity());
    put(&mut h, 0, THETA_A, &(x.r_bn.matrix() * skew(&air_body)));
    put(&mut h, 0, WIND, &-Matrix3::identity());
    Ok(Some(MeasurementModel { h, z: -residual, r: Matrix3::identity() * sigma_tas2 }))
}

/// Airflow-angle pseudo-measurement on the airflow rotation.
pub fn airflow_model(x: &FullState, alpha: f64, beta: f64, sigma_alpha2: f64, sigma_beta2: f64) -> Result<MeasurementModel<3>> {
    if !(alpha.abs() < MAX_AIRFLOW_ANGLE && beta.abs() < MAX_AIRFLOW_ANGLE) {
        return Err(NavError::InvalidArgument(format!(
            "airflow angles ({alpha}, {beta}) rad outside ±{MAX_AIRFLOW_ANGLE}"
        )));
    }
    let measured = rab_from_angles(alpha, beta);
    let z = (measured * x.r_ab.transpose()).log()?;
    let mut h = SMatrix::<f64, 3, 21>::zeros();
    put(&mut h, 0, THETA_A, &left_jacobian_inverse(&-z));
    // α rotates about the body y axis, β about the airflow-tilted z axis.
    let tilt = *Rot3::rot_y(-alpha).matrix();
    let r = tilt * Matrix3::from_diagonal(&Vector3::new(sigma_alpha2, sigma_alpha2, sigma_beta2)) * tilt.transpose();
    Ok(MeasurementModel { h, z, r })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateStatus {
    Applied,
    /// Rejected by the innovation gate.
    Gated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub state: FullState,
    pub cov: Covariance21,
    pub status: UpdateStatus,
    pub nis: f64,
    /// Innovation components divided by their predicted standard deviation.
    pub normalized: Vec<f64>,
}

/// Gates, updates and feeds the correction back into the state.
pub fn apply_update<const K: usize>(
    variant: FilterVariant,
    x: &FullState,
    p: &Covariance21,
    mm: &MeasurementModel<K>,
    gate: Option<f64>,
) -> Result<UpdateOutcome> {
    let (pht, _) = innovation_covariance(p, mm)?;
    let s = mm.h * pht + mm.r;
    let normalized = (0..K).map(|i| mm.z[i] / s[(i, i)].sqrt()).collect();
    let step = kf_update(p, mm)?;
    if let Some(threshold) = gate {
        if step.nis > threshold {
            return Ok(UpdateOutcome { state: *x, cov: *p, status: UpdateStatus::Gated, nis: step.nis, normalized });
        }
    }
    let g = reset_jacobian(variant, &step.dx);
    let mut cov = g * step.cov * g.transpose();
    symmetrize(&mut cov);
    Ok(UpdateOutcome {
        state: reset_and_feedback(variant, x, &step.dx),
        cov,
        status: UpdateStatus::Applied,
        nis: step.nis,
        normalized,
    })
}

pub fn reset_jacobian(variant: FilterVariant, dx: &ErrorState21) -> Matrix21 {
    let th = skew(&crate::state::block3(dx, THETA));
    let tha = skew(&crate::state::block3(dx, THETA_A));
    let mut g = Matrix21::identity();
    let mut add = |r: usize, c: usize, m: &Matrix3<f64>| {
        let mut v = g.fixed_view_mut::<3, 3>(r, c);
        v += m;
    };
    match variant {
        FilterVariant::Riekf => {
            for b in [THETA, VEL, POS] {
                add(b, b, &(0.5 * th));
            }
            add(VEL, THETA, &(0.5 * skew(&crate::state::block3(dx, VEL))));
            add(POS, THETA, &(0.5 * skew(&crate::state::block3(dx, POS))));
            add(THETA_A, THETA_A, &(0.5 * tha));
        }
        FilterVariant::Liekf => {
            for b in [THETA, VEL, POS] {
                add(b, b, &(-0.5 * th));
            }
            add(VEL, THETA, &(-0.5 * skew(&crate::state::block3(dx, VEL))));
            add(POS, THETA, &(-0.5 * skew(&crate::state::block3(dx, POS))));
            add(THETA_A, THETA_A, &(-0.5 * tha));
        }
        FilterVariant::Esekf => {
            add(THETA, THETA, &(0.5 * th));
            add(THETA_A, THETA_A, &(-0.5 * tha));
        }
    }
    g
}

/// Injects the correction; bias corrections accumulate into the bias estimates.
pub fn reset_and_feedback(variant: FilterVariant, x: &FullState, dx: &ErrorState21) -> FullState {
    inject_error(variant, x, dx)
}

pub fn gnss_update(
    variant: FilterVariant,
    x: &FullState,
    p: &Covariance21,
    pos: &Vector3<f64>,
    vel: &Vector3<f64>,
    sigma_v2: f64,
    sigma_p2: f64,
) -> Result<(FullState, Covariance21)> {
    let mm = gnss_model(x, pos, vel, sigma_v2, sigma_p2).for_variant(variant, x);
    let out = apply_update(variant, x, p, &mm, None)?;
    Ok((out.state, out.cov))
}

pub fn baro_update(
    variant: FilterVariant,
    x: &FullState,
    p: &Covariance21,
    pressure: f64,
    origin_altitude: f64,
    sigma_h2: f64,
) -> Result<(FullState, Covariance21)> {
    let mm = baro_model(x, pressure, origin_altitude, sigma_h2)?.for_variant(variant, x);
    let out = apply_update(variant, x, p, &mm, None)?;
    Ok((out.state, out.cov))
}

pub fn mag_update(
    variant: FilterVariant,
    x: &FullState,
    p: &Covariance21,
    field_body: &Vector3<f64>,
    sigma_m2: f64,
) -> Result<(FullState, Covariance21)> {
    let mm = mag_model(x, field_body, sigma_m2)?.for_variant(variant, x);
    let out = apply_update(variant, x, p, &mm, None)?;
    Ok((out.state, out.cov))
}

/// Skips the update (returning the inputs) below `min_airspeed`.
pub fn airspeed_update(
    variant: FilterVariant,
    x: &FullState,
    p: &Covariance21,
    tas: f64,
    min_airspeed: f64,
    sigma_tas2: f64,
) -> Result<(FullState, Covariance21)> {
    match airspeed_model(x, tas, min_airspeed, sigma_tas2)? {
        Some(mm) => {
            let out = apply_update(variant, x, p, &mm.for_variant(variant, x), None)?;
            Ok((out.state, out.cov))
        }
        None => {
            log::debug!("airspeed {tas} m/s below {min_airspeed} m/s, update skipped");
            Ok((*x, *p))
        }
    }
}

pub fn airflow_update(
    variant: FilterVariant,
    x: &FullState,
    p: &Covariance21,
    alpha: f64,
    beta: f64,
    sigma_alpha2: f64,
    sigma_beta2: f64,
) -> Result<(FullState, Covariance21)> {
    let mm = airflow_model(x, alpha, beta, sigma_alpha2, sigma_beta2)?.for_variant(variant, x);
    let out = apply_update(variant, x, p, &mm, None)?;
    Ok((out.state, out.cov))
}
