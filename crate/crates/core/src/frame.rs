//! Navigation frame conventions.
//!
//! The navigation frame is local-level North-East-Down and the body frame is
//! Forward-Right-Down. Earth rotation and transport rate are neglected.

use nalgebra::Vector3;

/// Local gravity magnitude in m/s².
pub const GRAVITY_MAGNITUDE: f64 = 9.79;

/// Gravity in the navigation frame. Flip the sign here to move to a z-up frame.
pub const GRAVITY_N: [f64; 3] = [0.0, 0.0, GRAVITY_MAGNITUDE];

#[inline]
pub fn gravity() -> Vector3<f64> {
    Vector3::from(GRAVITY_N)
}
