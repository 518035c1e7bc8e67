//! Deterministic flight and sensor simulation for exercising the navigation
//! filters: a segment-based truth trajectory, a random-walk wind, multi-rate
//! sensor synthesis and GNSS outage windows.

pub mod scenario;
pub mod sensors;
pub mod trajectory;

use aeronav::{Result, SensorEvent};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use scenario::{CommandLags, Scenario, Segment, SegmentKind, SensorRates, SensorSpec, WindSpec};
pub use sensors::{apply_denial, synthesize_sensors};
pub use trajectory::{generate_trajectory, wind_step, TruthRecord};

/// Random sub-stream indices. Each channel draws from its own stream so that
/// changing one sensor leaves the others' realizations untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Wind = 0,
    Gyro = 1,
    Accel = 2,
    GyroBias = 3,
    AccelBias = 4,
    Gnss = 5,
    Baro = 6,
    Mag = 7,
    Pitot = 8,
    Aero = 9,
}

pub fn channel_rng(seed: u64, channel: Channel) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(channel as u64);
    rng
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub truth: Vec<TruthRecord>,
    /// Time-ordered events with the scenario's denial windows applied.
    pub events: Vec<SensorEvent>,
}

/// Truth, sensors and denial in one call.
pub fn simulate(sc: &Scenario) -> Result<Simulation> {
    let mut truth = generate_trajectory(sc)?;
    let events = synthesize_sensors(&mut truth, &sc.noise, sc)?;
    let events = apply_denial(&events, &sc.denial);
    Ok(Simulation { truth, events })
}
