//! Invariant error-state Kalman filtering for fixed-wing UAV full-state
//! estimation.
//!
//! The state couples an extended pose on SE₂(3) with IMU biases, the
//! airflow-to-body rotation and the wind vector. Right-invariant,
//! left-invariant and conventional error-state filters share the same
//! measurement models and update machinery.

pub mod airdata;
pub mod config;
pub mod error;
pub mod filter;
pub mod frame;
pub mod lie;
pub mod propagation;
pub mod state;
pub mod updates;

pub use error::{NavError, Result};
pub use lie::{Rot3, TangentSE23, SE23};
pub use filter::{run_filter, Filter, InitialCondition, SensorEvent, SensorKind, SensorPayload, StateHistory};
pub use config::FilterConfig;
pub use propagation::{ImuSample, ProcessNoise, TransitionPair};
pub use state::{Covariance21, ErrorState21, FilterVariant, FullState};
