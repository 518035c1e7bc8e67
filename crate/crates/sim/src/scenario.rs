use aeronav::airdata::{AeroCoefficients, AirframeParams};
use aeronav::{NavError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Stationary,
    Taxi,
    Climb,
    Turn,
    Cruise,
    Descend,
}

impl SegmentKind {
    pub fn on_ground(&self) -> bool {
        matches!(self, SegmentKind::Stationary | SegmentKind::Taxi)
    }
}

/// One flight phase with constant commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Seconds.
    pub duration: f64,
    /// Commanded ground speed, m/s.
    pub speed: f64,
    /// Commanded heading rate, rad/s (positive turns right).
    #[serde(default)]
    pub turn_rate: f64,
    /// Commanded climb rate, m/s (positive up).
    #[serde(default)]
    pub climb_rate: f64,
}

impl Segment {
    pub fn new(kind: SegmentKind, duration: f64, speed: f64, turn_rate: f64, climb_rate: f64) -> Self {
        Self { kind, duration, speed, turn_rate, climb_rate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindSpec {
    /// Initial wind in the navigation frame, m/s.
    pub mean: [f64; 3],
    /// Random-walk intensity, m/s/√s.
    pub sigma: f64,
}

impl Default for WindSpec {
    fn default() -> Self {
        Self { mean: [2.0, -1.0, 0.0], sigma: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorRates {
    pub imu: f64,
    pub gnss: f64,
    pub baro: f64,
    pub mag: f64,
    pub pitot: f64,
    pub aero: f64,
}

impl Default for SensorRates {
    fn default() -> Self {
        Self { imu: 100.0, gnss: 5.0, baro: 100.0, mag: 100.0, pitot: 100.0, aero: 100.0 }
    }
}

impl SensorRates {
    /// IMU at 100 Hz, GNSS at 5 Hz and the remaining aiding sensors at 10 Hz.
    pub fn reduced() -> Self {
        Self { imu: 100.0, gnss: 5.0, baro: 10.0, mag: 10.0, pitot: 10.0, aero: 10.0 }
    }
}

/// Sensor error characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    /// Gyro in-run bias stability, rad/s.
    pub gyro_bias_stability: f64,
    /// Angular random walk, rad/√s.
    pub gyro_arw: f64,
    /// Accelerometer in-run bias stability, m/s².
    pub accel_bias_stability: f64,
    /// Velocity random walk, m/s/√s.
    pub accel_vrw: f64,
    pub gnss_pos_sigma: f64,
    pub gnss_vel_sigma: f64,
    /// Magnetometer white noise, mgauss.
    pub mag_sigma: f64,
    /// Magnetic field strength, mgauss.
    pub mag_field: f64,
    /// Static pressure noise, bar.
    pub baro_sigma: f64,
    pub pitot_sigma: f64,
    /// Control deflection noise, rad.
    pub deflection_sigma: f64,
}

impl Default for SensorSpec {
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        Self {
            gyro_bias_stability: 6.25 * deg / 3600.0,
            gyro_arw: 0.3 * deg / 60.0,
            accel_bias_stability: 0.1,
            accel_vrw: 0.029 / 60.0,
            gnss_pos_sigma: 0.1,
            gnss_vel_sigma: 0.1,
            mag_sigma: 0.45,
            mag_field: 500.0,
            baro_sigma: 0.025e-3,
            pitot_sigma: 1.0,
            deflection_sigma: 0.1 * deg,
        }
    }
}

impl SensorSpec {
    pub fn noiseless() -> Self {
        Self {
            gyro_bias_stability: 0.0,
            gyro_arw: 0.0,
            accel_bias_stability: 0.0,
            accel_vrw: 0.0,
            gnss_pos_sigma: 0.0,
            gnss_vel_sigma: 0.0,
            mag_sigma: 0.0,
            baro_sigma: 0.0,
            pitot_sigma: 0.0,
            deflection_sigma: 0.0,
            ..Self::default()
        }
    }
}

/// First-order lags applied to the segment commands, seconds. Zero disables a lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandLags {
    pub speed: f64,
    pub turn: f64,
    pub climb: f64,
    pub pitch: f64,
}

impl Default for CommandLags {
    fn default() -> Self {
        Self { speed: 3.0, turn: 1.5, climb: 2.0, pitch: 2.0 }
    }
}

impl CommandLags {
    pub fn none() -> Self {
        Self { speed: 0.0, turn: 0.0, climb: 0.0, pitch: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub wind: WindSpec,
    #[serde(default)]
    pub rates: SensorRates,
    #[serde(default)]
    pub noise: SensorSpec,
    #[serde(default)]
    pub lags: CommandLags,
    /// GNSS outage windows `[start, end]`, seconds.
    #[serde(default)]
    pub denial: Vec<[f64; 2]>,
    /// Initial heading, rad.
    #[serde(default)]
    pub initial_heading: f64,
    /// Initial height above the navigation origin, m.
    #[serde(default)]
    pub initial_height: f64,
    /// Altitude of the navigation origin above the pressure reference, m.
    #[serde(default = "default_origin_altitude")]
    pub origin_altitude: f64,
    /// Angle of attack held in flight, rad.
    #[serde(default = "default_trim_alpha")]
    pub trim_alpha: f64,
    #[serde(default)]
    pub aero: AeroCoefficients,
    #[serde(default)]
    pub airframe: AirframeParams,
}

fn default_trim_alpha() -> f64 {
    0.06
}

fn default_origin_altitude() -> f64 {
    200.0
}

impl Scenario {
    pub fn new(seed: u64, segments: Vec<Segment>) -> Self {
        Self {
            seed,
            segments,
            wind: WindSpec::default(),
            rates: SensorRates::default(),
            noise: SensorSpec::default(),
            lags: CommandLags::default(),
            denial: Vec::new(),
            initial_heading: 0.0,
            initial_height: 0.0,
            origin_altitude: default_origin_altitude(),
            trim_alpha: default_trim_alpha(),
            aero: AeroCoefficients::default(),
            airframe: AirframeParams::default(),
        }
    }

    /// Same flight with exact sensors and steady wind.
    pub fn noiseless(mut self) -> Self {
        self.noise = SensorSpec::noiseless();
        self.wind.sigma = 0.0;
        self
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(NavError::InvalidArgument("scenario has no segments".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            let finite = [s.duration, s.speed, s.turn_rate, s.climb_rate].iter().all(|v| v.is_finite());
            if !finite || s.duration <= 0.0 || s.speed < 0.0 {
                return Err(NavError::InvalidArgument(format!("segment {i} has invalid duration or speed")));
            }
            if s.climb_rate.abs() > s.speed.max(0.0) {
                return Err(NavError::InvalidArgument(format!("segment {i} climbs faster than it moves")));
            }
        }
        let r = &self.rates;
        let rates = [r.imu, r.gnss, r.baro, r.mag, r.pitot, r.aero];
        if rates.iter().any(|v| !(v.is_finite() && *v > 0.0 && *v <= r.imu)) {
            return Err(NavError::InvalidArgument("sensor rates must be positive and not exceed the IMU rate".into()));
        }
        if 1.0 / r.imu > aeronav::propagation::MAX_STEP {
            return Err(NavError::InvalidArgument("IMU rate must be at least 10 Hz".into()));
        }
        let duration = self.duration();
        for w in &self.denial {
            if !(w[0] <= w[1] && w[0] >= 0.0 && w[1] <= duration) {
                return Err(NavError::InvalidArgument(format!("denial window {w:?} outside [0, {duration}]")));
            }
        }
        let lags = [self.lags.speed, self.lags.turn, self.lags.climb, self.lags.pitch];
        if lags.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || self.wind.sigma < 0.0 {
            return Err(NavError::InvalidArgument("lags and wind intensity must be non-negative".into()));
        }
        self.airframe.validate()
    }

    /// 20 s stationary, a short taxi, climb-out, then turns and cruise; 120 s.
    pub fn convergence(seed: u64) -> Self {
        use SegmentKind::*;
        let mut sc = Self::new(
            seed,
            vec![
                Segment::new(Stationary, 20.0, 0.0, 0.0, 0.0),
                Segment::new(Taxi, 5.0, 8.0, 0.0, 0.0),
                Segment::new(Climb, 20.0, 16.0, 0.0, 2.0),
                Segment::new(Turn, 25.0, 16.0, 0.12, 0.0),
                Segment::new(Cruise, 20.0, 16.0, 0.0, 0.0),
                Segment::new(Turn, 20.0, 16.0, -0.12, 0.0),
                Segment::new(Cruise, 10.0, 16.0, 0.0, 0.0),
            ],
        );
        sc.rates = SensorRates::reduced();
        sc
    }

    /// Mixed-phase flight of 300 s.
    pub fn mixed(seed: u64) -> Self {
        use SegmentKind::*;
        let mut sc = Self::new(
            seed,
            vec![
                Segment::new(Stationary, 10.0, 0.0, 0.0, 0.0),
                Segment::new(Taxi, 20.0, 6.0, 0.05, 0.0),
                Segment::new(Climb, 40.0, 18.0, 0.0, 2.5),
                Segment::new(Turn, 50.0, 18.0, 0.12, 0.0),
                Segment::new(Cruise, 60.0, 20.0, 0.0, 0.0),
                Segment::new(Turn, 40.0, 18.0, -0.1, 0.5),
                Segment::new(Descend, 40.0, 16.0, 0.0, -1.5),
                Segment::new(Cruise, 40.0, 16.0, 0.0, 0.0),
            ],
        );
        sc.rates = SensorRates::reduced();
        sc
    }

    /// 230 s route with a 130 s GNSS outage from t = 90 s; about 2.5 km are
    /// flown without GNSS.
    pub fn denial(seed: u64) -> Self {
        use SegmentKind::*;
        let mut sc = Self::new(
            seed,
            vec![
                Segment::new(Cruise, 30.0, 19.0, 0.0, 0.0),
                Segment::new(Turn, 30.0, 19.0, 0.1, 0.5),
                Segment::new(Cruise, 40.0, 19.0, 0.0, 0.0),
                Segment::new(Turn, 40.0, 19.0, -0.08, 0.0),
                Segment::new(Cruise, 50.0, 19.0, 0.0, -0.3),
                Segment::new(Turn, 40.0, 19.0, 0.06, 0.0),
            ],
        );
        sc.initial_height = 100.0;
        sc.rates = SensorRates::reduced();
        sc.denial = vec![[90.0, 220.0]];
        sc
    }

    /// Varied manoeuvres that excite the aerodynamic regressors.
    pub fn training(seed: u64) -> Self {
        use SegmentKind::*;
        let mut segments = Vec::new();
        for k in 0..6 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            segments.push(Segment::new(Turn, 15.0, 15.0 + k as f64, sign * 0.15, 1.0 * sign));
            segments.push(Segment::new(Cruise, 10.0, 20.0 - k as f64, 0.0, -0.8 * sign));
        }
        let mut sc = Self::new(seed, segments);
        sc.initial_height = 100.0;
        sc.rates = SensorRates::reduced();
        sc
    }
}
