//! Event-driven filter over a multi-rate sensor stream.
//!
//! An IMU event at time `t` carries the sample for the interval that ends at
//! `t`. Aiding events are applied at the current filter time; events older
//! than the filter time are rejected and counted.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::airdata::{aoa_sa_from_body, equivalent_coefficients, ls_predict, rab_from_angles, sequence_predict, FEATURES};
use crate::config::{FilterConfig, PredictorKind};
use crate::error::{NavError, Result};
use crate::propagation::{error_jacobians, mechanize, propagate_covariance, ImuSample};
use crate::state::layout::{DIM, THETA_A};
use crate::state::{Covariance21, FilterVariant, FullState};
use crate::updates::{
    airflow_model, airspeed_model, apply_update, baro_model, chi2_threshold, gnss_model, mag_model,
    MeasurementModel, UpdateOutcome, UpdateStatus, MAX_AIRFLOW_ANGLE,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SensorPayload {
    Imu(ImuSample),
    Gnss { pos: Vector3<f64>, vel: Vector3<f64> },
    /// Static pressure in bar.
    Baro { pressure: f64 },
    /// Magnetic field in body axes, any scale.
    Mag { field: Vector3<f64> },
    Airspeed { tas: f64 },
    /// Control deflections and reference airflow angles, all in rad.
    Aero { elevator: f64, rudder: f64, alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorEvent {
    pub t: f64,
    pub payload: SensorPayload,
}

impl SensorEvent {
    pub fn new(t: f64, payload: SensorPayload) -> Self {
        Self { t, payload }
    }

    pub fn imu(t: f64, gyro: Vector3<f64>, accel: Vector3<f64>) -> Self {
        Self::new(t, SensorPayload::Imu(ImuSample::new(t, gyro, accel)))
    }

    pub fn kind(&self) -> SensorKind {
        match self.payload {
            SensorPayload::Imu(_) => SensorKind::Imu,
            SensorPayload::Gnss { .. } => SensorKind::Gnss,
            SensorPayload::Baro { .. } => SensorKind::Baro,
            SensorPayload::Mag { .. } => SensorKind::Mag,
            SensorPayload::Aero { .. } => SensorKind::Aero,
            SensorPayload::Airspeed { .. } => SensorKind::Airspeed,
        }
    }
}

/// Sensor channels, in the order events sharing a timestamp are processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SensorKind {
    Imu,
    Gnss,
    Baro,
    Mag,
    Aero,
    Airspeed,
}

impl SensorKind {
    pub const ALL: [SensorKind; 6] = [
        SensorKind::Imu,
        SensorKind::Gnss,
        SensorKind::Baro,
        SensorKind::Mag,
        SensorKind::Aero,
        SensorKind::Airspeed,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            SensorKind::Imu => "IMU",
            SensorKind::Gnss => "GNSS",
            SensorKind::Baro => "BARO",
            SensorKind::Mag => "MAG",
            SensorKind::Aero => "AERO",
            SensorKind::Airspeed => "TAS",
        }
    }
}

/// Sorts events by time, breaking ties by sensor order.
pub fn sort_events(events: &mut [SensorEvent]) {
    events.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.kind().cmp(&b.kind())));
}

/// Per-sensor bookkeeping of the innovation sequence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InnovationStats {
    pub applied: usize,
    pub gated: usize,
    /// Skipped by a validity gate (low airspeed, missing predictor input).
    pub skipped: usize,
    /// Older than the filter time.
    pub stale: usize,
    pub nis_sum: f64,
    /// Sums of innovation components normalized by their predicted sigma.
    pub normalized_sum: Vec<f64>,
    pub normalized_sq_sum: Vec<f64>,
}

impl InnovationStats {
    fn record(&mut self, outcome: &UpdateOutcome) {
        match outcome.status {
            UpdateStatus::Gated => self.gated += 1,
            UpdateStatus::Applied => {
                self.applied += 1;
                self.nis_sum += outcome.nis;
                if self.normalized_sum.len() != outcome.normalized.len() {
                    self.normalized_sum = vec![0.0; outcome.normalized.len()];
                    self.normalized_sq_sum = vec![0.0; outcome.normalized.len()];
                }
                for (i, v) in outcome.normalized.iter().enumerate() {
                    self.normalized_sum[i] += v;
                    self.normalized_sq_sum[i] += v * v;
                }
            }
        }
    }

    /// Mean of each normalized innovation component.
    pub fn normalized_mean(&self) -> Vec<f64> {
        let n = self.applied.max(1) as f64;
        self.normalized_sum.iter().map(|s| s / n).collect()
    }

    pub fn mean_nis(&self) -> f64 {
        self.nis_sum / self.applied.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub t: f64,
    pub state: FullState,
    pub cov_diag: [f64; 21],
}

/// Filter output: one record per distinct timestamp plus innovation statistics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StateHistory {
    pub records: Vec<HistoryRecord>,
    pub innovations: BTreeMap<SensorKind, InnovationStats>,
}

impl StateHistory {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub t0: f64,
    pub state: FullState,
    pub cov: Covariance21,
}

impl InitialCondition {
    /// Uses the configured initial covariance.
    pub fn new(t0: f64, state: FullState, cfg: &FilterConfig) -> Self {
        Self { t0, state, cov: cfg.p0.matrix() }
    }
}

/// A running filter instance.
#[derive(Debug, Clone)]
pub struct Filter {
    variant: FilterVariant,
    cfg: FilterConfig,
    state: FullState,
    cov: Covariance21,
    time: f64,
    last_imu: Option<ImuSample>,
    /// Low-passed airspeed and the time of its last sample.
    last_tas: Option<(f64, f64)>,
    airflow_aligned: bool,
    window: VecDeque<[f64; FEATURES]>,
    gates: [Option<f64>; 7],
    history: StateHistory,
}

impl Filter {
    pub fn new(cfg: &FilterConfig, variant: FilterVariant, init: &InitialCondition) -> Result<Self> {
        cfg.validate()?;
        if !init.state.is_finite() || init.cov.iter().any(|v| !v.is_finite()) {
            return Err(NavError::InvalidArgument("initial condition is not finite".into()));
        }
        match cfg.filter.predictor {
            PredictorKind::Ls if cfg.models.aero.is_none() => {
                return Err(NavError::InvalidModel("least-squares predictor selected without coefficients".into()));
            }
            PredictorKind::Lstm if cfg.models.lstm.is_none() => {
                return Err(NavError::InvalidModel("LSTM predictor selected without weights".into()));
            }
            _ => {}
        }
        if let Some(model) = &cfg.models.lstm {
            model.validate()?;
        }
        let mut gates = [None; 7];
        if let Some(prob) = cfg.filter.gate_probability {
            for (dof, g) in gates.iter_mut().enumerate().skip(1) {
                *g = Some(chi2_threshold(dof, prob)?);
            }
        }
        Ok(Self {
            variant,
            cfg: cfg.clone(),
            state: init.state,
            cov: init.cov,
            time: init.t0,
            last_imu: None,
            last_tas: None,
            airflow_aligned: false,
            window: VecDeque::new(),
            gates,
            history: StateHistory::default(),
        })
    }

    pub fn state(&self) -> &FullState {
        &self.state
    }

    pub fn covariance(&self) -> &Covariance21 {
        &self.cov
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn variant(&self) -> FilterVariant {
        self.variant
    }

    pub fn history(&self) -> &StateHistory {
        &self.history
    }

    pub fn into_history(self) -> StateHistory {
        self.history
    }

    fn stats(&mut self, kind: SensorKind) -> &mut InnovationStats {
        self.history.innovations.entry(kind).or_default()
    }

    /// Processes one event and records the resulting state.
    pub fn process(&mut self, event: &SensorEvent) -> Result<()> {
        if !event.t.is_finite() {
            return Err(NavError::InvalidArgument("event time is not finite".into()));
        }
        if event.t < self.time {
            log::debug!("{} event at t = {} older than filter time {}", event.kind().tag(), event.t, self.time);
            self.stats(event.kind()).stale += 1;
            return Ok(());
        }
        match event.payload {
            SensorPayload::Imu(sample) => self.propagate(event.t, &sample),
            _ if self.frozen(event.t) => {}
            SensorPayload::Gnss { pos, vel } => {
                let mm = gnss_model(&self.state, &pos, &vel, self.cfg.r0.sigma_vg2, self.cfg.r0.sigma_pg2);
                self.update(SensorKind::Gnss, mm)?;
            }
            SensorPayload::Baro { pressure } => {
                match baro_model(&self.state, pressure, self.cfg.filter.baro_origin_altitude, self.cfg.r0.sigma_hbaro2) {
                    Ok(mm) => self.update(SensorKind::Baro, mm)?,
                    Err(NavError::InvalidArgument(msg)) => {
                        log::debug!("baro sample at t = {} skipped: {msg}", event.t);
                        self.stats(SensorKind::Baro).skipped += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
            SensorPayload::Mag { field } => {
                match mag_model(&self.state, &field, self.cfg.r0.sigma_m2) {
                    Ok(mm) => self.update(SensorKind::Mag, mm)?,
                    Err(NavError::InvalidArgument(msg)) => {
                        log::debug!("magnetometer sample at t = {} skipped: {msg}", event.t);
                        self.stats(SensorKind::Mag).skipped += 1;
                    }
                    Err(e) => return Err(e),
                }
            }
            SensorPayload::Airspeed { tas } => {
                self.smooth_tas(event.t, tas);
                self.align_airflow(tas);
                match airspeed_model(&self.state, tas, self.cfg.filter.min_airspeed, self.cfg.r0.sigma_vtas2)? {
                    Some(mm) => self.update(SensorKind::Airspeed, mm)?,
                    None => self.stats(SensorKind::Airspeed).skipped += 1,
                }
            }
            SensorPayload::Aero { elevator, rudder, alpha, beta } => {
                if self.cfg.filter.predictor != PredictorKind::None && !self.airflow_aligned {
                    self.stats(SensorKind::Aero).skipped += 1;
                } else if self.cfg.filter.predictor != PredictorKind::None {
                    match self.predict_airflow(elevator, rudder, alpha, beta)? {
                        Some((a, b)) if a.abs() < MAX_AIRFLOW_ANGLE && b.abs() < MAX_AIRFLOW_ANGLE => {
                            let (sa, sb) = self.cfg.airflow_variances();
                            let mm = airflow_model(&self.state, a, b, sa, sb)?;
                            self.update(SensorKind::Aero, mm)?;
                        }
                        _ => self.stats(SensorKind::Aero).skipped += 1,
                    }
                }
            }
        }
        self.time = event.t;
        self.record();
        Ok(())
    }

    fn smooth_tas(&mut self, t: f64, tas: f64) {
        let tau = self.cfg.filter.tas_smoothing;
        self.last_tas = Some(match self.last_tas {
            Some((v, t0)) if tau > 0.0 => (v + (tas - v) * (1.0 - (-(t - t0) / tau).exp()), t),
            _ => (tas, t),
        });
    }

    /// Re-seeds the airflow rotation from the estimated air-relative velocity
    /// whenever the airspeed rises through the validity threshold.
    fn align_airflow(&mut self, tas: f64) {
        if tas <= self.cfg.filter.min_airspeed {
            self.airflow_aligned = false;
            return;
        }
        if self.airflow_aligned {
            return;
        }
        let air_body = self.state.r_bn.transpose().rotate(&(self.state.vel - self.state.wind));
        if air_body.norm() <= self.cfg.filter.min_airspeed {
            return;
        }
        if let Ok(a) = aoa_sa_from_body(&air_body) {
            self.state.r_ab = rab_from_angles(a.alpha, a.beta);
            for i in 0..DIM {
                for j in THETA_A..THETA_A + 3 {
                    self.cov[(i, j)] = 0.0;
                    self.cov[(j, i)] = 0.0;
                }
            }
            for j in THETA_A..THETA_A + 3 {
                self.cov[(j, j)] = self.cfg.p0.sigma_dtheta_a2;
            }
            self.airflow_aligned = true;
        }
    }

    fn frozen(&self, t: f64) -> bool {
        self.cfg.filter.freeze_updates_after.is_some_and(|tf| t >= tf)
    }

    fn propagate(&mut self, t: f64, sample: &ImuSample) {
        let span = t - self.time;
        if span > 0.0 {
            let steps = (span / self.cfg.filter.max_imu_step).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            for _ in 0..steps {
                let tp = error_jacobians(self.variant, &self.state, sample, dt, &self.cfg.q0);
                self.cov = propagate_covariance(&self.cov, &tp);
                self.state = mechanize(&self.state, sample, dt);
            }
        }
        self.last_imu = Some(*sample);
    }

    fn update<const K: usize>(&mut self, kind: SensorKind, mm: MeasurementModel<K>) -> Result<()> {
        let mm = mm.for_variant(self.variant, &self.state);
        let outcome = apply_update(self.variant, &self.state, &self.cov, &mm, self.gates[K])?;
        if outcome.status == UpdateStatus::Gated {
            log::debug!("{} innovation gated at t = {} (nis {:.2})", kind.tag(), self.time, outcome.nis);
        }
        self.stats(kind).record(&outcome);
        self.state = outcome.state;
        self.cov = outcome.cov;
        Ok(())
    }

    fn predict_airflow(&mut self, elevator: f64, rudder: f64, alpha: f64, beta: f64) -> Result<Option<(f64, f64)>> {
        match self.cfg.filter.predictor {
            PredictorKind::None => Ok(None),
            PredictorKind::Log => Ok(Some((alpha, beta))),
            PredictorKind::Ls | PredictorKind::Lstm => {
                let Some(frame) = self.feature_frame(elevator, rudder) else {
                    return Ok(None);
                };
                if self.cfg.filter.predictor == PredictorKind::Ls {
                    let coef = self.cfg.models.aero.as_ref().expect("checked at construction");
                    let (p, q, r) = (frame[2], frame[3], frame[4]);
                    return ls_predict(coef, frame[0], frame[1], q, elevator, rudder, p, r).map(Some);
                }
                let model = self.cfg.models.lstm.as_ref().expect("checked at construction");
                self.window.push_back(frame);
                while self.window.len() > model.sequence_length {
                    self.window.pop_front();
                }
                if self.window.len() < model.sequence_length {
                    return Ok(None);
                }
                let window: Vec<[f64; FEATURES]> = self.window.iter().copied().collect();
                sequence_predict(model, &window).map(Some)
            }
        }
    }

    /// `C̄_L, C̄_Y, p, q, r, δe, δr, V_TAS` from the latest IMU and pitot data.
    fn feature_frame(&self, elevator: f64, rudder: f64) -> Option<[f64; FEATURES]> {
        let imu = self.last_imu?;
        let (tas, _) = self.last_tas?;
        let accel = imu.accel - self.state.accel_bias;
        let rates = imu.gyro - self.state.gyro_bias;
        let eq = equivalent_coefficients(&accel, tas, &self.cfg.airframe, &self.state.r_ab).ok()?;
        Some([eq.c_l, eq.c_y, rates.x, rates.y, rates.z, elevator, rudder, tas])
    }

    fn record(&mut self) {
        let rec = HistoryRecord {
            t: self.time,
            state: self.state,
            cov_diag: std::array::from_fn(|i| self.cov[(i, i)]),
        };
        match self.history.records.last_mut() {
            Some(last) if last.t == rec.t => *last = rec,
            _ => self.history.records.push(rec),
        }
    }
}

/// Replays a time-ordered stream through a fresh filter.
pub fn run_filter(
    stream: &[SensorEvent],
    cfg: &FilterConfig,
    variant: FilterVariant,
    init: &InitialCondition,
) -> Result<StateHistory> {
    for (index, pair) in stream.windows(2).enumerate() {
        if pair[1].t < pair[0].t {
            return Err(NavError::UnorderedStream { index: index + 1, t: pair[1].t, previous: pair[0].t });
        }
    }
    let mut filter = Filter::new(cfg, variant, init)?;
    for event in stream {
        filter.process(event)?;
    }
    Ok(filter.into_history())
}
