use std::collections::{BTreeMap, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use aeronav::airdata::{
    equivalent_coefficients, ls_fit, ls_predict, rab_from_angles, sequence_predict, AeroCoefficients, AeroSample,
    AirframeParams, LsFit, SequenceModel, FEATURES,
};
use aeronav::updates::{height_to_pressure, pressure_to_height};
use aeronav::{run_filter, FilterConfig, FilterVariant, FullState, InitialCondition, Rot3, SensorEvent, SensorPayload};
use aeronav_sim::sensors::MIN_AERO_SPEED;
use aeronav_sim::{simulate, Scenario, Simulation, TruthRecord};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::metrics::{compute_metrics, MetricsOptions, MetricsReport};

/// Name used for the pure-inertial control in denial reports.
pub const CONTROL: &str = "INS";

/// Largest initial roll/pitch offset accepted by the sweep, degrees.
pub const MAX_SWEEP_BIAS_DEG: f64 = 45.0;

/// Default tuning adapted to a scenario. The barometric origin and airframe
/// follow the simulated aircraft, and no variance is left below the error the
/// simulated sensors actually produce.
pub fn experiment_config(sc: &Scenario) -> FilterConfig {
    let mut cfg = FilterConfig::default();
    let n = &sc.noise;
    cfg.filter.baro_origin_altitude = sc.origin_altitude;
    cfg.airframe = sc.airframe;
    let floor = |v: &mut f64, sigma: f64| *v = v.max(sigma * sigma);
    floor(&mut cfg.r0.sigma_vtas2, n.pitot_sigma);
    floor(&mut cfg.r0.sigma_vg2, n.gnss_vel_sigma);
    floor(&mut cfg.r0.sigma_pg2, n.gnss_pos_sigma);
    floor(&mut cfg.r0.sigma_hbaro2, n.baro_sigma * height_per_bar(sc.origin_altitude));
    floor(&mut cfg.p0.sigma_dba2, n.accel_bias_stability);
    floor(&mut cfg.p0.sigma_dbg2, n.gyro_bias_stability);
    floor(&mut cfg.q0.sigma_ba2, n.accel_bias_stability / 3600f64.sqrt());
    floor(&mut cfg.q0.sigma_bg2, n.gyro_bias_stability / 3600f64.sqrt());
    floor(&mut cfg.q0.sigma_vw2, sc.wind.sigma);
    cfg
}

/// Slope of the barometric height at `altitude`, m/bar.
fn height_per_bar(altitude: f64) -> f64 {
    let p = height_to_pressure(altitude);
    let dp = 1e-6;
    ((pressure_to_height(p - dp).unwrap_or(altitude) - pressure_to_height(p + dp).unwrap_or(altitude)) / (2.0 * dp)).abs()
}

/// Truth pose, velocity and wind with zero biases and the airflow frame on the
/// body axes. `bias_deg` is added to both roll and pitch.
pub fn initial_condition(truth: &TruthRecord, cfg: &FilterConfig, bias_deg: f64) -> InitialCondition {
    let (roll, pitch, yaw) = truth.state.r_bn.euler();
    let b = bias_deg.to_radians();
    let state = FullState {
        r_bn: Rot3::from_euler(roll + b, pitch + b, yaw),
        gyro_bias: Vector3::zeros(),
        accel_bias: Vector3::zeros(),
        r_ab: Rot3::identity(),
        ..truth.state
    };
    InitialCondition::new(truth.t, state, cfg)
}

/// Levelling from the mean specific force over the first second, heading from
/// the first magnetometer sample and position/velocity from the first GNSS fix.
pub fn coarse_alignment(events: &[SensorEvent], cfg: &FilterConfig) -> Result<InitialCondition> {
    let t0 = events.first().ok_or_else(|| HarnessError::Data("empty sensor log".into()))?.t;
    let accels: Vec<Vector3<f64>> = events
        .iter()
        .take_while(|e| e.t <= t0 + 1.0)
        .filter_map(|e| match e.payload {
            SensorPayload::Imu(u) => Some(u.accel),
            _ => None,
        })
        .collect();
    if accels.is_empty() {
        return Err(HarnessError::Data("no IMU data in the first second for alignment".into()));
    }
    let f = accels.iter().sum::<Vector3<f64>>() / accels.len() as f64;
    let roll = (-f.y).atan2(-f.z);
    let pitch = f.x.atan2((f.y * f.y + f.z * f.z).sqrt());
    let level = Rot3::rot_y(pitch) * Rot3::rot_x(roll);
    let yaw = events
        .iter()
        .find_map(|e| match e.payload {
            SensorPayload::Mag { field } => Some(field),
            _ => None,
        })
        .map_or(0.0, |m| {
            let m = level.rotate(&m);
            (-m.y).atan2(m.x)
        });
    let (pos, vel) = events
        .iter()
        .find_map(|e| match e.payload {
            SensorPayload::Gnss { pos, vel } => Some((pos, vel)),
            _ => None,
        })
        .unwrap_or((Vector3::zeros(), Vector3::zeros()));
    let state = FullState { r_bn: Rot3::from_euler(roll, pitch, yaw), vel, pos, ..FullState::identity() };
    Ok(InitialCondition::new(t0, state, cfg))
}

/// Runs `jobs` on a small worker pool and returns the results in job order.
fn parallel_map<J: Sync, R: Send>(jobs: &[J], f: impl Fn(&J) -> Result<R> + Sync) -> Result<Vec<R>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len()).max(1);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<R>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let r = f(&jobs[i]);
                results.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    results.into_inner().expect("worker panicked").into_iter().map(|r| r.expect("job not run")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub seed: u64,
    pub bias_deg: f64,
    pub variant: String,
    /// Empty when the run never settled.
    pub time_to_converge: Option<f64>,
    pub post_convergence_rmse_deg: Option<f64>,
    pub attitude_rmse_deg: f64,
}

/// Runs every (seed, bias, variant) combination of the initial-attitude study.
/// Rows are sorted by seed, bias and variant.
pub fn convergence_sweep(
    sc: &Scenario,
    cfg: &FilterConfig,
    biases_deg: &[f64],
    variants: &[FilterVariant],
    seeds: &[u64],
    opts: &MetricsOptions,
) -> Result<Vec<SweepRow>> {
    if let Some(b) = biases_deg.iter().find(|b| b.is_nan() || b.abs() > MAX_SWEEP_BIAS_DEG) {
        return Err(HarnessError::Usage(format!("bias {b}° outside ±{MAX_SWEEP_BIAS_DEG}°")));
    }
    let sims: Vec<(u64, Simulation)> = parallel_map(seeds, |&seed| {
        let mut s = sc.clone();
        s.seed = seed;
        Ok((seed, simulate(&s)?))
    })?;
    let jobs: Vec<(usize, f64, FilterVariant)> = (0..sims.len())
        .flat_map(|i| biases_deg.iter().flat_map(move |&b| variants.iter().map(move |&v| (i, b, v))))
        .collect();
    let mut rows = parallel_map(&jobs, |&(i, bias, variant)| {
        let (seed, sim) = &sims[i];
        let init = initial_condition(&sim.truth[0], cfg, bias);
        let history = run_filter(&sim.events, cfg, variant, &init)?;
        let m = compute_metrics(&history, &sim.truth, opts)?;
        Ok(SweepRow {
            seed: *seed,
            bias_deg: bias,
            variant: variant.name().to_string(),
            time_to_converge: m.time_to_converge,
            post_convergence_rmse_deg: m.post_convergence_attitude_rmse_deg,
            attitude_rmse_deg: m.channels["attitude_deg"].rmse,
        })
    })?;
    rows.sort_by(|a, b| {
        a.seed.cmp(&b.seed).then(a.bias_deg.total_cmp(&b.bias_deg)).then_with(|| a.variant.cmp(&b.variant))
    });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenialRow {
    pub variant: String,
    pub max_horizontal: f64,
    pub max_vertical: f64,
    pub final_horizontal: f64,
    pub attitude_rmse_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenialOutcome {
    pub rows: Vec<DenialRow>,
    pub reports: BTreeMap<String, MetricsReport>,
}

/// Runs each variant through the scenario's GNSS outages, plus a pure-inertial
/// control (the first variant with all aiding stopped at the first outage).
pub fn denial_experiment(sc: &Scenario, cfg: &FilterConfig, variants: &[FilterVariant]) -> Result<DenialOutcome> {
    let sim = simulate(sc)?;
    denial_on(&sim, sc, cfg, variants)
}

pub fn denial_on(sim: &Simulation, sc: &Scenario, cfg: &FilterConfig, variants: &[FilterVariant]) -> Result<DenialOutcome> {
    let opts = MetricsOptions { denial: sc.denial.clone(), ..MetricsOptions::default() };
    let mut runs: Vec<(String, FilterVariant, FilterConfig)> =
        variants.iter().map(|v| (v.name().to_string(), *v, cfg.clone())).collect();
    if let (Some(w), Some(v)) = (sc.denial.first(), variants.first()) {
        let mut frozen = cfg.clone();
        frozen.filter.freeze_updates_after = Some(w[0]);
        runs.push((CONTROL.to_string(), *v, frozen));
    }
    let reports = parallel_map(&runs, |(name, variant, cfg)| {
        let init = initial_condition(&sim.truth[0], cfg, 0.0);
        let history = run_filter(&sim.events, cfg, *variant, &init)?;
        Ok((name.clone(), compute_metrics(&history, &sim.truth, &opts)?))
    })?;
    let rows = reports
        .iter()
        .map(|(name, m)| {
            let worst = m.denial.iter().fold((0.0f64, 0.0f64, 0.0f64), |acc, d| {
                (acc.0.max(d.max_horizontal), acc.1.max(d.max_vertical), d.final_horizontal)
            });
            DenialRow {
                variant: name.clone(),
                max_horizontal: worst.0,
                max_vertical: worst.1,
                final_horizontal: worst.2,
                attitude_rmse_deg: m.channels["attitude_deg"].rmse,
            }
        })
        .collect();
    Ok(DenialOutcome { rows, reports: reports.into_iter().collect() })
}

/// Tracks the latest IMU sample and a low-passed airspeed along a log.
struct AeroInputs {
    gyro: Vector3<f64>,
    accel: Vector3<f64>,
    tas: Option<(f64, f64)>,
    tau: f64,
    seen_imu: bool,
}

impl AeroInputs {
    fn new(tau: f64) -> Self {
        Self { gyro: Vector3::zeros(), accel: Vector3::zeros(), tas: None, tau, seen_imu: false }
    }

    fn observe(&mut self, e: &SensorEvent) {
        match e.payload {
            SensorPayload::Imu(u) => {
                self.gyro = u.gyro;
                self.accel = u.accel;
                self.seen_imu = true;
            }
            SensorPayload::Airspeed { tas } => {
                self.tas = Some(match self.tas {
                    Some((v, t0)) if self.tau > 0.0 => (v + (tas - v) * (1.0 - (-(e.t - t0) / self.tau).exp()), e.t),
                    _ => (tas, e.t),
                });
            }
            _ => {}
        }
    }

    fn airspeed(&self) -> Option<f64> {
        self.tas.map(|(v, _)| v).filter(|v| *v > MIN_AERO_SPEED && self.seen_imu)
    }
}

/// Identification rows from the aero channel of a log. The airflow angles
/// carried in the channel serve as the regressors.
pub fn aero_samples(events: &[SensorEvent], airframe: &AirframeParams, tas_smoothing: f64) -> Vec<AeroSample> {
    let mut inputs = AeroInputs::new(tas_smoothing);
    let mut out = Vec::new();
    for e in events {
        inputs.observe(e);
        let SensorPayload::Aero { elevator, rudder, alpha, beta } = e.payload else { continue };
        let Some(tas) = inputs.airspeed() else { continue };
        let Ok(eq) = equivalent_coefficients(&inputs.accel, tas, airframe, &rab_from_angles(alpha, beta)) else {
            continue;
        };
        out.push(AeroSample { c_l: eq.c_l, c_y: eq.c_y, alpha, beta, rates: inputs.gyro, elevator, rudder });
    }
    out
}

pub fn fit_aero(events: &[SensorEvent], cfg: &FilterConfig) -> Result<LsFit> {
    let samples = aero_samples(events, &cfg.airframe, cfg.filter.tas_smoothing);
    Ok(ls_fit(&samples)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirflowPrediction {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Angles carried in the log, for comparison.
    pub alpha_log: f64,
    pub beta_log: f64,
}

pub enum Predictor<'a> {
    Ls(&'a AeroCoefficients),
    Lstm(&'a SequenceModel),
}

/// Batch airflow-angle prediction along a log from IMU, pitot and deflection
/// data only. The equivalent coefficients depend on the angles being predicted,
/// so each prediction is refined by a few fixed-point passes.
pub fn predict_airflow(events: &[SensorEvent], cfg: &FilterConfig, predictor: Predictor) -> Result<Vec<AirflowPrediction>> {
    const PASSES: usize = 3;
    let mut inputs = AeroInputs::new(cfg.filter.tas_smoothing);
    let mut window: VecDeque<[f64; FEATURES]> = VecDeque::new();
    let mut out = Vec::new();
    let mut last = (0.0, 0.0);
    for e in events {
        inputs.observe(e);
        let SensorPayload::Aero { elevator, rudder, alpha, beta } = e.payload else { continue };
        let Some(tas) = inputs.airspeed() else { continue };
        let (w, a) = (inputs.gyro, inputs.accel);
        let frame = |ab: (f64, f64)| -> Result<[f64; FEATURES]> {
            let eq = equivalent_coefficients(&a, tas, &cfg.airframe, &rab_from_angles(ab.0, ab.1))?;
            Ok([eq.c_l, eq.c_y, w.x, w.y, w.z, elevator, rudder, tas])
        };
        let mut guess = last;
        let predicted = match predictor {
            Predictor::Ls(coef) => {
                for _ in 0..PASSES {
                    let f = frame(guess)?;
                    guess = ls_predict(coef, f[0], f[1], w.y, elevator, rudder, w.x, w.z)?;
                }
                Some(guess)
            }
            Predictor::Lstm(model) => {
                window.push_back(frame(guess)?);
                while window.len() > model.sequence_length {
                    window.pop_front();
                }
                if window.len() == model.sequence_length {
                    for _ in 0..PASSES {
                        *window.back_mut().expect("non-empty") = frame(guess)?;
                        let buf: Vec<_> = window.iter().copied().collect();
                        guess = sequence_predict(model, &buf)?;
                    }
                    Some(guess)
                } else {
                    None
                }
            }
        };
        if let Some((pa, pb)) = predicted {
            last = (pa, pb);
            out.push(AirflowPrediction { t: e.t, alpha: pa, beta: pb, alpha_log: alpha, beta_log: beta });
        }
    }
    Ok(out)
}
