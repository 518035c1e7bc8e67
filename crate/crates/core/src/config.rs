//! Filter configuration. Field names follow the symbols of the noise
//! tables (`sigma_g2` is σ_g², and so on).

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::airdata::{AeroCoefficients, AirframeParams, SequenceModel};
use crate::error::{NavError, Result};
use crate::propagation::ProcessNoise;
use crate::state::{block_diagonal, Covariance21, FilterVariant};

const DEG: f64 = std::f64::consts::PI / 180.0;

/// Initial error covariance, per block and per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCovariance {
    pub sigma_dtheta_i2: [f64; 3],
    pub sigma_dv2: f64,
    pub sigma_dp2: f64,
    pub sigma_dbg2: f64,
    pub sigma_dba2: f64,
    pub sigma_dtheta_a2: f64,
    pub sigma_dvw2: f64,
}

impl Default for InitialCovariance {
    fn default() -> Self {
        Self {
            sigma_dtheta_i2: [(1.0 / 57.3f64).powi(2), (1.0 / 57.3f64).powi(2), (5.0 / 57.3f64).powi(2)],
            sigma_dv2: 0.1f64.powi(2),
            sigma_dp2: 0.2f64.powi(2),
            sigma_dbg2: 4.8478e-5f64.powi(2),
            sigma_dba2: 0.05f64.powi(2),
            sigma_dtheta_a2: 0.035f64.powi(2),
            sigma_dvw2: 0.1f64.powi(2),
        }
    }
}

impl InitialCovariance {
    pub fn matrix(&self) -> Covariance21 {
        let s = |v: f64| Vector3::repeat(v);
        block_diagonal(&[
            Vector3::from(self.sigma_dtheta_i2),
            s(self.sigma_dv2),
            s(self.sigma_dp2),
            s(self.sigma_dbg2),
            s(self.sigma_dba2),
            s(self.sigma_dtheta_a2),
            s(self.sigma_dvw2),
        ])
    }

    fn values(&self) -> Vec<f64> {
        let mut v = self.sigma_dtheta_i2.to_vec();
        v.extend([
            self.sigma_dv2,
            self.sigma_dp2,
            self.sigma_dbg2,
            self.sigma_dba2,
            self.sigma_dtheta_a2,
            self.sigma_dvw2,
        ]);
        v
    }
}

/// Measurement noise variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementNoise {
    #[serde(rename = "sigma_vG2")]
    pub sigma_vg2: f64,
    #[serde(rename = "sigma_pG2")]
    pub sigma_pg2: f64,
    #[serde(rename = "sigma_vTAS2")]
    pub sigma_vtas2: f64,
    #[serde(rename = "sigma_Hbaro2")]
    pub sigma_hbaro2: f64,
    /// Variance of the normalized magnetic field direction.
    pub sigma_m2: f64,
}

impl Default for MeasurementNoise {
    fn default() -> Self {
        Self {
            sigma_vg2: 0.01f64.powi(2),
            sigma_pg2: 0.1f64.powi(2),
            sigma_vtas2: 0.1f64.powi(2),
            sigma_hbaro2: 0.1f64.powi(2),
            sigma_m2: 0.1f64.powi(2),
        }
    }
}

/// Where the airflow-angle pseudo-measurement comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    /// No airflow-angle updates.
    #[default]
    None,
    /// Angles carried in the aero channel itself.
    Log,
    /// Inverted linear aerodynamic model.
    Ls,
    /// LSTM sequence model.
    Lstm,
}

impl std::str::FromStr for PredictorKind {
    type Err = NavError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(PredictorKind::None),
            "log" => Ok(PredictorKind::Log),
            "ls" => Ok(PredictorKind::Ls),
            "lstm" => Ok(PredictorKind::Lstm),
            _ => Err(NavError::InvalidArgument(format!("unknown predictor '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterOptions {
    pub variant: FilterVariant,
    /// Probability for the χ² innovation gate; `None` disables gating.
    pub gate_probability: Option<f64>,
    pub predictor: PredictorKind,
    /// One-sigma airflow-angle pseudo-measurement noise, degrees.
    pub airflow_sigma_alpha_deg: f64,
    pub airflow_sigma_beta_deg: f64,
    /// Altitude of the navigation origin above the pressure reference, m.
    pub baro_origin_altitude: f64,
    /// Airspeed updates are skipped below this speed, m/s.
    pub min_airspeed: f64,
    /// Time constant of the airspeed low-pass feeding the airflow predictor, s.
    pub tas_smoothing: f64,
    /// IMU gaps longer than this are integrated in several steps, s.
    pub max_imu_step: f64,
    /// Ignore all aiding measurements from this time on.
    pub freeze_updates_after: Option<f64>,
    /// Paths to predictor models, resolved by the caller.
    pub aero_model: Option<String>,
    pub lstm_model: Option<String>,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            variant: FilterVariant::Riekf,
            gate_probability: Some(0.999),
            predictor: PredictorKind::None,
            airflow_sigma_alpha_deg: 1.0,
            airflow_sigma_beta_deg: 2.7,
            baro_origin_altitude: 0.0,
            min_airspeed: 5.0,
            tas_smoothing: 1.0,
            max_imu_step: 0.1,
            freeze_updates_after: None,
            aero_model: None,
            lstm_model: None,
        }
    }
}

/// Loaded predictor models.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictorModels {
    pub aero: Option<AeroCoefficients>,
    pub lstm: Option<SequenceModel>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    #[serde(rename = "Q0", default)]
    pub q0: ProcessNoise,
    #[serde(rename = "P0", default)]
    pub p0: InitialCovariance,
    #[serde(rename = "R0", default)]
    pub r0: MeasurementNoise,
    #[serde(default)]
    pub filter: FilterOptions,
    #[serde(default)]
    pub airframe: AirframeParams,
    #[serde(skip)]
    pub models: PredictorModels,
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        self.q0.validate()?;
        let r = &self.r0;
        let mut variances = self.p0.values();
        variances.extend([r.sigma_vg2, r.sigma_pg2, r.sigma_vtas2, r.sigma_hbaro2, r.sigma_m2]);
        if variances.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(NavError::InvalidArgument("variances must be finite and non-negative".into()));
        }
        let measurement = [r.sigma_vg2, r.sigma_pg2, r.sigma_vtas2, r.sigma_hbaro2, r.sigma_m2];
        if measurement.iter().any(|v| *v <= 0.0) {
            return Err(NavError::InvalidArgument("measurement variances must be positive".into()));
        }
        let f = &self.filter;
        if let Some(p) = f.gate_probability {
            if !(p > 0.0 && p < 1.0) {
                return Err(NavError::InvalidArgument(format!("gate probability {p} must lie in (0, 1)")));
            }
        }
        if !(f.airflow_sigma_alpha_deg > 0.0 && f.airflow_sigma_beta_deg > 0.0) {
            return Err(NavError::InvalidArgument("airflow sigmas must be positive".into()));
        }
        if !(f.tas_smoothing >= 0.0 && f.tas_smoothing.is_finite()) {
            return Err(NavError::InvalidArgument("tas_smoothing must be non-negative".into()));
        }
        if !(f.max_imu_step > 0.0 && f.max_imu_step <= crate::propagation::MAX_STEP) {
            return Err(NavError::InvalidArgument("max_imu_step must lie in (0, 0.1]".into()));
        }
        self.airframe.validate()
    }

    /// Airflow pseudo-measurement variances `(σ_α², σ_β²)` in rad².
    pub fn airflow_variances(&self) -> (f64, f64) {
        (
            (self.filter.airflow_sigma_alpha_deg * DEG).powi(2),
            (self.filter.airflow_sigma_beta_deg * DEG).powi(2),
        )
    }
}
