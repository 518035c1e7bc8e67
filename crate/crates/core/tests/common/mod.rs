#![allow(dead_code)]

use aeronav::{FullState, ImuSample, Rot3};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v3(rng: &mut ChaCha8Rng, s: f64) -> Vector3<f64> {
    Vector3::new(rng.random_range(-s..s), rng.random_range(-s..s), rng.random_range(-s..s))
}

/// Flight-like state: moderate attitude, airflow angles and wind, position
/// a few hundred metres from the origin.
pub fn random_state(rng: &mut ChaCha8Rng) -> FullState {
    FullState {
        r_bn: Rot3::exp(&v3(rng, 1.5)),
        vel: v3(rng, 25.0),
        pos: v3(rng, 500.0),
        gyro_bias: v3(rng, 1e-3),
        accel_bias: v3(rng, 0.1),
        r_ab: Rot3::exp(&v3(rng, 0.2)),
        wind: v3(rng, 5.0),
    }
}

pub fn random_imu(rng: &mut ChaCha8Rng) -> ImuSample {
    ImuSample::new(0.0, v3(rng, 0.5), v3(rng, 12.0))
}

pub fn random_error(rng: &mut ChaCha8Rng, s: f64) -> aeronav::ErrorState21 {
    aeronav::ErrorState21::from_fn(|_, _| rng.random_range(-s..s))
}
