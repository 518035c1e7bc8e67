//! Reference path from lagged commands, tracked by an exactly integrated
//! strapdown truth.

use aeronav::airdata::{aoa_sa_from_body, rab_from_angles};
use aeronav::frame::{gravity, GRAVITY_MAGNITUDE};
use aeronav::propagation::strapdown_step;
use aeronav::{FullState, ImuSample, Result, Rot3};
use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::scenario::Scenario;
use crate::{channel_rng, Channel};

/// Below this air speed the airflow angles are reported as zero.
const MIN_AIR_SPEED: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub t: f64,
    /// Biases are filled in by sensor synthesis.
    pub state: FullState,
    pub alpha: f64,
    pub beta: f64,
    /// Air speed magnitude, m/s.
    pub tas: f64,
    /// Body rate and specific force over the interval ending at `t`
    /// (the first record carries the first interval's values).
    pub gyro: Vector3<f64>,
    pub accel: Vector3<f64>,
}

/// `w⁺ = w + N(0, σ² dt)` per axis.
pub fn wind_step(w: &Vector3<f64>, sigma: f64, dt: f64, rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let s = sigma * dt.sqrt();
    let mut n = || -> f64 { rng.sample(StandardNormal) };
    w + Vector3::new(n(), n(), n()) * s
}

fn lag(value: f64, target: f64, tau: f64, dt: f64) -> f64 {
    if tau <= 0.0 {
        target
    } else {
        value + (target - value) * (1.0 - (-dt / tau).exp())
    }
}

struct Commands {
    speed: f64,
    turn_rate: f64,
    climb_rate: f64,
    pitch_offset: f64,
    heading: f64,
}

impl Commands {
    fn velocity(&self) -> Vector3<f64> {
        let horizontal = (self.speed * self.speed - self.climb_rate * self.climb_rate).max(0.0).sqrt();
        Vector3::new(horizontal * self.heading.cos(), horizontal * self.heading.sin(), -self.climb_rate)
    }

    fn flight_path_angle(&self) -> f64 {
        if self.speed < 1.0 {
            0.0
        } else {
            (self.climb_rate / self.speed).clamp(-1.0, 1.0).asin()
        }
    }

    fn attitude(&self, airborne: bool) -> Rot3 {
        let bank = if airborne { (self.speed * self.turn_rate / GRAVITY_MAGNITUDE).atan() } else { 0.0 };
        Rot3::rot_z(self.heading) * Rot3::rot_y(self.flight_path_angle()) * Rot3::rot_x(bank) * Rot3::rot_y(self.pitch_offset)
    }
}

fn target_pitch(sc: &Scenario, airborne: bool, speed: f64, turn_rate: f64) -> f64 {
    if airborne {
        let bank = (speed * turn_rate / GRAVITY_MAGNITUDE).atan();
        sc.trim_alpha / bank.cos()
    } else {
        0.0
    }
}

/// Truth trajectory sampled at the IMU rate.
pub fn generate_trajectory(sc: &Scenario) -> Result<Vec<TruthRecord>> {
    sc.validate()?;
    let dt = 1.0 / sc.rates.imu;
    let steps = (sc.duration() * sc.rates.imu).round() as usize;
    let mut wind_rng = channel_rng(sc.seed, Channel::Wind);

    // segment index for each tick
    let mut bounds = Vec::with_capacity(sc.segments.len());
    let mut acc = 0.0;
    for s in &sc.segments {
        acc += s.duration;
        bounds.push(acc);
    }
    let segment_at = |t: f64| bounds.iter().position(|b| t < *b - 1e-9).unwrap_or(sc.segments.len() - 1);

    let first = sc.segments[0];
    let mut cmd = Commands {
        speed: first.speed,
        turn_rate: first.turn_rate,
        climb_rate: if first.kind.on_ground() { 0.0 } else { first.climb_rate },
        pitch_offset: target_pitch(sc, !first.kind.on_ground(), first.speed, first.turn_rate),
        heading: sc.initial_heading,
    };

    let mut refs = Vec::with_capacity(steps + 1);
    refs.push((cmd.attitude(!first.kind.on_ground()), cmd.velocity()));
    for k in 0..steps {
        let t = k as f64 * dt;
        let seg = sc.segments[segment_at(t)];
        let airborne = !seg.kind.on_ground();
        cmd.heading += cmd.turn_rate * dt;
        cmd.speed = lag(cmd.speed, seg.speed, sc.lags.speed, dt);
        cmd.turn_rate = lag(cmd.turn_rate, seg.turn_rate, sc.lags.turn, dt);
        let climb = if airborne { seg.climb_rate } else { 0.0 };
        cmd.climb_rate = lag(cmd.climb_rate, climb, sc.lags.climb, dt).clamp(-cmd.speed, cmd.speed);
        let pitch = target_pitch(sc, airborne, cmd.speed, cmd.turn_rate);
        cmd.pitch_offset = lag(cmd.pitch_offset, pitch, sc.lags.pitch, dt);
        refs.push((cmd.attitude(airborne), cmd.velocity()));
    }

    let mut state = FullState {
        r_bn: refs[0].0,
        vel: refs[0].1,
        pos: Vector3::new(0.0, 0.0, -sc.initial_height),
        ..FullState::identity()
    };
    let mut wind = Vector3::from(sc.wind.mean);
    let mut out = Vec::with_capacity(steps + 1);
    let mut samples = Vec::with_capacity(steps);
    let mut states = Vec::with_capacity(steps + 1);
    let mut winds = Vec::with_capacity(steps + 1);
    states.push(state);
    winds.push(wind);
    for k in 0..steps {
        let (r_next, v_next) = refs[k + 1];
        let gyro = (state.r_bn.transpose() * r_next).log()? / dt;
        let accel = state.r_bn.transpose().rotate(&((v_next - state.vel) / dt - gravity()));
        let u = ImuSample::new((k + 1) as f64 * dt, gyro, accel);
        state = strapdown_step(&state, &u, dt)?;
        wind = wind_step(&wind, sc.wind.sigma, dt, &mut wind_rng);
        samples.push(u);
        states.push(state);
        winds.push(wind);
    }
    for (k, (st, w)) in states.iter().zip(&winds).enumerate() {
        let u = samples[k.saturating_sub(1).min(samples.len().saturating_sub(1))];
        let air_body = st.r_bn.transpose().rotate(&(st.vel - w));
        let (alpha, beta, tas) = match aoa_sa_from_body(&air_body) {
            Ok(a) if a.tas > MIN_AIR_SPEED => (a.alpha, a.beta, a.tas),
            _ => (0.0, 0.0, air_body.norm()),
        };
        let mut truth = *st;
        truth.wind = *w;
        truth.r_ab = rab_from_angles(alpha, beta);
        out.push(TruthRecord {
            t: k as f64 * dt,
            state: truth,
            alpha,
            beta,
            tas,
            gyro: u.gyro,
            accel: u.accel,
        });
    }
    Ok(out)
}
