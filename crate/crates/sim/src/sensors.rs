use aeronav::airdata::{equivalent_coefficients, AirframeParams};
use aeronav::updates::height_to_pressure;
use aeronav::{NavError, Result, SensorEvent, SensorKind, SensorPayload};
use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scenario::{Scenario, SensorSpec};
use crate::trajectory::TruthRecord;
use crate::{channel_rng, Channel};

/// Control deflections are reported as zero below this air speed.
pub const MIN_AERO_SPEED: f64 = 5.0;

fn gauss3(rng: &mut ChaCha8Rng, sigma: f64) -> Vector3<f64> {
    let mut n = || -> f64 { rng.sample(StandardNormal) };
    Vector3::new(n(), n(), n()) * sigma
}

fn gauss(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    sigma * rng.sample::<f64, _>(StandardNormal)
}

/// Number of IMU ticks between samples of a sensor running at `rate`.
fn period(imu_rate: f64, rate: f64) -> usize {
    (imu_rate / rate).round().max(1.0) as usize
}

/// Deflections that make the configured aerodynamic model reproduce the
/// true equivalent coefficients.
fn deflections(sc: &Scenario, rec: &TruthRecord, airframe: &AirframeParams) -> Option<(f64, f64)> {
    if rec.tas < MIN_AERO_SPEED {
        return None;
    }
    let eq = equivalent_coefficients(&rec.accel, rec.tas, airframe, &rec.state.r_ab).ok()?;
    let c = &sc.aero;
    let w = rec.gyro;
    let elevator = (eq.c_l - c.c_l0 - c.c_l_alpha * rec.alpha - c.c_l_q * w.y) / c.c_l_de;
    let rudder = (eq.c_y - c.c_y0 - c.c_y_beta * rec.beta - c.c_y_p * w.x - c.c_y_r * w.z) / c.c_y_dr;
    Some((elevator, rudder))
}

/// Samples every sensor from the truth. IMU events carry the rates over the
/// interval ending at their timestamp. The bias realizations are written back
/// into `truth`.
pub fn synthesize_sensors(truth: &mut [TruthRecord], spec: &SensorSpec, sc: &Scenario) -> Result<Vec<SensorEvent>> {
    if truth.is_empty() {
        return Err(NavError::InvalidArgument("empty truth sequence".into()));
    }
    if sc.aero.c_l_de.abs() < 1e-9 || sc.aero.c_y_dr.abs() < 1e-9 {
        return Err(NavError::InvalidModel("control derivatives must be non-zero".into()));
    }
    let imu_rate = sc.rates.imu;
    let dt = 1.0 / imu_rate;
    let rng = |c| channel_rng(sc.seed, c);
    let (mut r_gyro, mut r_accel, mut r_bg, mut r_ba) =
        (rng(Channel::Gyro), rng(Channel::Accel), rng(Channel::GyroBias), rng(Channel::AccelBias));
    let (mut r_gnss, mut r_baro, mut r_mag, mut r_pitot, mut r_aero) =
        (rng(Channel::Gnss), rng(Channel::Baro), rng(Channel::Mag), rng(Channel::Pitot), rng(Channel::Aero));

    let mut bg = gauss3(&mut r_bg, spec.gyro_bias_stability);
    let mut ba = gauss3(&mut r_ba, spec.accel_bias_stability);
    let bg_walk = spec.gyro_bias_stability / 3600f64.sqrt() * dt.sqrt();
    let ba_walk = spec.accel_bias_stability / 3600f64.sqrt() * dt.sqrt();
    let gyro_white = spec.gyro_arw * imu_rate.sqrt();
    let accel_white = spec.accel_vrw * imu_rate.sqrt();

    let r = &sc.rates;
    let periods = [
        (SensorKind::Gnss, period(imu_rate, r.gnss)),
        (SensorKind::Baro, period(imu_rate, r.baro)),
        (SensorKind::Mag, period(imu_rate, r.mag)),
        (SensorKind::Aero, period(imu_rate, r.aero)),
        (SensorKind::Airspeed, period(imu_rate, r.pitot)),
    ];
    let mut events = Vec::with_capacity(truth.len() * 2);
    for (k, slot) in truth.iter_mut().enumerate() {
        if k > 0 {
            bg += gauss3(&mut r_bg, bg_walk);
            ba += gauss3(&mut r_ba, ba_walk);
        }
        slot.state.gyro_bias = bg;
        slot.state.accel_bias = ba;
        let rec = *slot;
        if k > 0 {
            let gyro = rec.gyro + bg + gauss3(&mut r_gyro, gyro_white);
            let accel = rec.accel + ba + gauss3(&mut r_accel, accel_white);
            events.push(SensorEvent::imu(rec.t, gyro, accel));
        }
        let st = &rec.state;
        for &(kind, p) in &periods {
            if k % p != 0 {
                continue;
            }
            let payload = match kind {
                SensorKind::Gnss => SensorPayload::Gnss {
                    pos: st.pos + gauss3(&mut r_gnss, spec.gnss_pos_sigma),
                    vel: st.vel + gauss3(&mut r_gnss, spec.gnss_vel_sigma),
                },
                SensorKind::Baro => {
                    let height = sc.origin_altitude - st.pos.z;
                    SensorPayload::Baro { pressure: height_to_pressure(height) + gauss(&mut r_baro, spec.baro_sigma) }
                }
                SensorKind::Mag => {
                    let field = st.r_bn.transpose().rotate(&Vector3::x()) * spec.mag_field;
                    SensorPayload::Mag { field: field + gauss3(&mut r_mag, spec.mag_sigma) }
                }
                SensorKind::Airspeed => {
                    SensorPayload::Airspeed { tas: (rec.tas + gauss(&mut r_pitot, spec.pitot_sigma)).max(0.0) }
                }
                SensorKind::Aero => {
                    let (elevator, rudder) = match deflections(sc, &rec, &sc.airframe) {
                        Some((e, r)) => {
                            (e + gauss(&mut r_aero, spec.deflection_sigma), r + gauss(&mut r_aero, spec.deflection_sigma))
                        }
                        None => (0.0, 0.0),
                    };
                    SensorPayload::Aero { elevator, rudder, alpha: rec.alpha, beta: rec.beta }
                }
                SensorKind::Imu => unreachable!(),
            };
            events.push(SensorEvent::new(rec.t, payload));
        }
    }
    Ok(events)
}

/// Drops GNSS events whose time lies inside any closed window.
pub fn apply_denial(stream: &[SensorEvent], windows: &[[f64; 2]]) -> Vec<SensorEvent> {
    stream
        .iter()
        .filter(|e| e.kind() != SensorKind::Gnss || !windows.iter().any(|w| e.t >= w[0] && e.t <= w[1]))
        .cloned()
        .collect()
}
