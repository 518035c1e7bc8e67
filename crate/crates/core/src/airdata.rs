//! Airflow angles, wind triangle, a linear aerodynamic model with
//! least-squares identification, and an LSTM sequence predictor for the
//! angle of attack and sideslip.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, NavError, Result};
use crate::lie::Rot3;

/// Below this speed the equivalent coefficients are not computed.
pub const MIN_AIRSPEED: f64 = 2.0;

/// Largest condition number accepted for a regressor matrix.
pub const MAX_REGRESSOR_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirflowAngles {
    pub tas: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Airspeed magnitude, angle of attack and sideslip of a body-frame air velocity.
pub fn aoa_sa_from_body(v_body: &Vector3<f64>) -> Result<AirflowAngles> {
    ensure_finite(v_body.as_slice(), "air velocity")?;
    let tas = v_body.norm();
    if tas <= 1e-6 {
        return Err(NavError::InvalidArgument(format!("air speed {tas} m/s is too small for airflow angles")));
    }
    Ok(AirflowAngles {
        tas,
        alpha: v_body.z.atan2(v_body.x),
        beta: (v_body.y / tas).clamp(-1.0, 1.0).asin(),
    })
}

/// Airflow to body rotation. Its first column is the airflow direction
/// `[cos α cos β, sin β, sin α cos β]` in body axes.
pub fn rab_from_angles(alpha: f64, beta: f64) -> Rot3 {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    Rot3::from_matrix_unchecked(nalgebra::Matrix3::new(
        ca * cb, -ca * sb, -sa,
        sb, cb, 0.0,
        sa * cb, -sa * sb, ca,
    ))
}

/// Angles carried by an airflow rotation (of its first column).
pub fn angles_from_rab(r_ab: &Rot3) -> (f64, f64) {
    let d = r_ab.matrix().column(0);
    (d.z.atan2(d.x), d.y.clamp(-1.0, 1.0).asin())
}

/// `v_wind = v_G − R_bn R_ab v_tas`.
pub fn wind_triangle(v_ground: &Vector3<f64>, r_bn: &Rot3, r_ab: &Rot3, v_tas_air: &Vector3<f64>) -> Vector3<f64> {
    v_ground - r_bn.rotate(&r_ab.rotate(v_tas_air))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirframeParams {
    /// Mass in kg.
    pub mass: f64,
    /// Wing area in m².
    pub wing_area: f64,
    /// Air density in kg/m³.
    pub rho: f64,
    pub span: f64,
    pub chord: f64,
}

impl Default for AirframeParams {
    fn default() -> Self {
        Self { mass: 10.0, wing_area: 0.5, rho: 1.225, span: 2.5, chord: 0.2 }
    }
}

impl AirframeParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.mass, self.wing_area, self.rho, self.span, self.chord];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(NavError::InvalidArgument("airframe parameters must be positive".into()))
        }
    }
}

/// Linear lift and side-force models:
///
/// ```text
/// C_L = C_L0 + C_Lα α + C_Lq q + C_Lδe δe
/// C_Y = C_Y0 + C_Yβ β + C_Yδr δr + C_Yp p + C_Yr r
/// ```
///
/// Rates enter unnormalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AeroCoefficients {
    pub c_l0: f64,
    pub c_l_alpha: f64,
    pub c_l_q: f64,
    pub c_l_de: f64,
    pub c_y0: f64,
    pub c_y_beta: f64,
    pub c_y_dr: f64,
    pub c_y_p: f64,
    pub c_y_r: f64,
}

impl Default for AeroCoefficients {
    fn default() -> Self {
        Self {
            c_l0: 0.25,
            c_l_alpha: 4.8,
            c_l_q: 0.4,
            c_l_de: 0.35,
            c_y0: 0.0,
            c_y_beta: -0.9,
            c_y_dr: 0.15,
            c_y_p: 0.02,
            c_y_r: 0.1,
        }
    }
}

impl AeroCoefficients {
    pub fn lift(&self, alpha: f64, q: f64, elevator: f64) -> f64 {
        self.c_l0 + self.c_l_alpha * alpha + self.c_l_q * q + self.c_l_de * elevator
    }

    pub fn side(&self, beta: f64, rudder: f64, p: f64, r: f64) -> f64 {
        self.c_y0 + self.c_y_beta * beta + self.c_y_dr * rudder + self.c_y_p * p + self.c_y_r * r
    }

    pub fn lift_terms(&self) -> [f64; 4] {
        [self.c_l0, self.c_l_alpha, self.c_l_q, self.c_l_de]
    }

    pub fn side_terms(&self) -> [f64; 5] {
        [self.c_y0, self.c_y_beta, self.c_y_dr, self.c_y_p, self.c_y_r]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalentCoefficients {
    pub c_l: f64,
    pub c_y: f64,
    /// Dynamic pressure in Pa.
    pub qbar: f64,
}

/// Lift and side-force coefficients implied by the measured specific force.
pub fn equivalent_coefficients(
    accel_body: &Vector3<f64>,
    tas: f64,
    airframe: &AirframeParams,
    r_ab: &Rot3,
) -> Result<EquivalentCoefficients> {
    if tas.is_nan() || tas <= MIN_AIRSPEED {
        return Err(NavError::InvalidArgument(format!("airspeed {tas} m/s below {MIN_AIRSPEED} m/s")));
    }
    let a_air = r_ab.transpose().rotate(accel_body);
    let qbar = 0.5 * airframe.rho * tas * tas;
    let qs = qbar * airframe.wing_area;
    Ok(EquivalentCoefficients {
        c_l: -airframe.mass * a_air.z / qs,
        c_y: airframe.mass * a_air.y / qs,
        qbar,
    })
}

/// One row of identification data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeroSample {
    pub c_l: f64,
    pub c_y: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Body rates `p, q, r` in rad/s.
    pub rates: Vector3<f64>,
    pub elevator: f64,
    pub rudder: f64,
}

impl AeroSample {
    fn lift_row(&self) -> [f64; 4] {
        [1.0, self.alpha, self.rates.y, self.elevator]
    }

    fn side_row(&self) -> [f64; 5] {
        [1.0, self.beta, self.rudder, self.rates.x, self.rates.z]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsFit {
    pub coefficients: AeroCoefficients,
    /// Standard errors in the same field order as the coefficients.
    pub std_errors: AeroCoefficients,
    pub lift_rms: f64,
    pub side_rms: f64,
    pub samples: usize,
}

struct AxisFit {
    beta: DVector<f64>,
    std_err: DVector<f64>,
    rms: f64,
}

fn fit_axis(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<AxisFit> {
    let (n, k) = x.shape();
    if n < 2 * k {
        return Err(NavError::InvalidArgument(format!("{n} samples for {k} regressors; need at least {}", 2 * k)));
    }
    // Column scaling keeps the conditioning test about rank, not units.
    let scales = DVector::from_iterator(k, x.column_iter().map(|c| c.norm().max(f64::MIN_POSITIVE)));
    let mut xs = x.clone();
    for (j, mut c) in xs.column_iter_mut().enumerate() {
        c /= scales[j];
    }
    let svd = xs.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition.is_nan() || condition > MAX_REGRESSOR_CONDITION {
        return Err(NavError::DegenerateRegressor { condition });
    }
    let beta_scaled = svd
        .solve(y, 0.0)
        .map_err(|e| NavError::InvalidModel(e.to_string()))?;
    let beta = beta_scaled.component_div(&scales);
    let resid = y - x * &beta;
    let rss = resid.norm_squared();
    let sigma2 = rss / (n - k) as f64;
    let xtx_inv = (xs.transpose() * &xs)
        .try_inverse()
        .ok_or(NavError::DegenerateRegressor { condition })?;
    let std_err = DVector::from_iterator(k, (0..k).map(|j| (sigma2 * xtx_inv[(j, j)]).sqrt() / scales[j]));
    Ok(AxisFit { beta, std_err, rms: (rss / n as f64).sqrt() })
}

/// Ordinary least squares for the lift and side-force models.
pub fn ls_fit(samples: &[AeroSample]) -> Result<LsFit> {
    let n = samples.len();
    let lift_x = DMatrix::from_fn(n, 4, |i, j| samples[i].lift_row()[j]);
    let lift_y = DVector::from_iterator(n, samples.iter().map(|s| s.c_l));
    let side_x = DMatrix::from_fn(n, 5, |i, j| samples[i].side_row()[j]);
    let side_y = DVector::from_iterator(n, samples.iter().map(|s| s.c_y));
    ensure_finite(lift_x.as_slice(), "lift regressors")?;
    ensure_finite(side_x.as_slice(), "side regressors")?;
    let lift = fit_axis(&lift_x, &lift_y)?;
    let side = fit_axis(&side_x, &side_y)?;
    let pack = |l: &DVector<f64>, s: &DVector<f64>| AeroCoefficients {
        c_l0: l[0],
        c_l_alpha: l[1],
        c_l_q: l[2],
        c_l_de: l[3],
        c_y0: s[0],
        c_y_beta: s[1],
        c_y_dr: s[2],
        c_y_p: s[3],
        c_y_r: s[4],
    };
    Ok(LsFit {
        coefficients: pack(&lift.beta, &side.beta),
        std_errors: pack(&lift.std_err, &side.std_err),
        lift_rms: lift.rms,
        side_rms: side.rms,
        samples: n,
    })
}

/// Inverts the linear models for `(α, β)`.
#[allow(clippy::too_many_arguments)]
pub fn ls_predict(
    coef: &AeroCoefficients,
    c_l: f64,
    c_y: f64,
    q: f64,
    elevator: f64,
    rudder: f64,
    p: f64,
    r: f64,
) -> Result<(f64, f64)> {
    if coef.c_l_alpha.abs() <= 1e-6 || coef.c_y_beta.abs() <= 1e-6 {
        return Err(NavError::InvalidModel("lift or side-force slope is too small to invert".into()));
    }
    let alpha = (c_l - coef.c_l0 - coef.c_l_q * q - coef.c_l_de * elevator) / coef.c_l_alpha;
    let beta = (c_y - coef.c_y0 - coef.c_y_dr * rudder - coef.c_y_p * p - coef.c_y_r * r) / coef.c_y_beta;
    Ok((alpha, beta))
}

/// Number of predictor input features: `C̄_L, C̄_Y, p, q, r, δe, δr, V_TAS`.
pub const FEATURES: usize = 8;

/// Weights of a single LSTM layer. Matrices are stored row-major as nested
/// vectors, `[hidden][input]` and `[hidden][hidden]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LstmWeights {
    pub input_size: usize,
    pub hidden_size: usize,
    pub w_i: Vec<Vec<f64>>,
    pub w_f: Vec<Vec<f64>>,
    pub w_o: Vec<Vec<f64>>,
    pub w_g: Vec<Vec<f64>>,
    pub u_i: Vec<Vec<f64>>,
    pub u_f: Vec<Vec<f64>>,
    pub u_o: Vec<Vec<f64>>,
    pub u_g: Vec<Vec<f64>>,
    pub b_i: Vec<f64>,
    pub b_f: Vec<f64>,
    pub b_o: Vec<f64>,
    pub b_g: Vec<f64>,
}

fn check_matrix(m: &[Vec<f64>], rows: usize, cols: usize, name: &str) -> Result<()> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(NavError::DimensionMismatch(format!("{name} must be {rows}x{cols}")));
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(NavError::InvalidModel(format!("{name} has non-finite entries")));
    }
    Ok(())
}

fn check_vector(v: &[f64], len: usize, name: &str) -> Result<()> {
    if v.len() != len {
        return Err(NavError::DimensionMismatch(format!("{name} must have length {len}")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(NavError::InvalidModel(format!("{name} has non-finite entries")));
    }
    Ok(())
}

impl LstmWeights {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        let w = vec![vec![0.0; input_size]; hidden_size];
        let u = vec![vec![0.0; hidden_size]; hidden_size];
        let b = vec![0.0; hidden_size];
        Self {
            input_size,
            hidden_size,
            w_i: w.clone(),
            w_f: w.clone(),
            w_o: w.clone(),
            w_g: w,
            u_i: u.clone(),
            u_f: u.clone(),
            u_o: u.clone(),
            u_g: u,
            b_i: b.clone(),
            b_f: b.clone(),
            b_o: b.clone(),
            b_g: b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, h) = (self.input_size, self.hidden_size);
        for (m, name) in [(&self.w_i, "w_i"), (&self.w_f, "w_f"), (&self.w_o, "w_o"), (&self.w_g, "w_g")] {
            check_matrix(m, h, n, name)?;
        }
        for (m, name) in [(&self.u_i, "u_i"), (&self.u_f, "u_f"), (&self.u_o, "u_o"), (&self.u_g, "u_g")] {
            check_matrix(m, h, h, name)?;
        }
        for (b, name) in [(&self.b_i, "b_i"), (&self.b_f, "b_f"), (&self.b_o, "b_o"), (&self.b_g, "b_g")] {
            check_vector(b, h, name)?;
        }
        Ok(())
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn gate(w: &[Vec<f64>], u: &[Vec<f64>], b: &[f64], x: &[f64], h: &[f64], row: usize) -> f64 {
    let wx: f64 = w[row].iter().zip(x).map(|(a, b)| a * b).sum();
    let uh: f64 = u[row].iter().zip(h).map(|(a, b)| a * b).sum();
    wx + uh + b[row]
}

/// One LSTM step: returns `(h', c')`.
pub fn lstm_cell(w: &LstmWeights, x: &[f64], h: &[f64], c: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != w.input_size || h.len() != w.hidden_size || c.len() != w.hidden_size {
        return Err(NavError::DimensionMismatch(format!(
            "cell expects input {} and hidden {}, got {}, {}, {}",
            w.input_size,
            w.hidden_size,
            x.len(),
            h.len(),
            c.len()
        )));
    }
    let mut h_next = vec![0.0; w.hidden_size];
    let mut c_next = vec![0.0; w.hidden_size];
    for k in 0..w.hidden_size {
        let i = sigmoid(gate(&w.w_i, &w.u_i, &w.b_i, x, h, k));
        let f = sigmoid(gate(&w.w_f, &w.u_f, &w.b_f, x, h, k));
        let o = sigmoid(gate(&w.w_o, &w.u_o, &w.b_o, x, h, k));
        let g = gate(&w.w_g, &w.u_g, &w.b_g, x, h, k).tanh();
        c_next[k] = f * c[k] + i * g;
        h_next[k] = o * c_next[k].tanh();
    }
    Ok((h_next, c_next))
}

/// LSTM layer plus linear readout to `(α, β)` and input scalers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceModel {
    pub version: u32,
    pub sequence_length: usize,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub lstm: LstmWeights,
    /// `[2][hidden]` readout matrix.
    pub readout: Vec<Vec<f64>>,
    pub readout_bias: [f64; 2],
}

impl SequenceModel {
    pub const VERSION: u32 = 1;

    pub fn validate(&self) -> Result<()> {
        self.lstm.validate()?;
        if self.lstm.input_size != FEATURES {
            return Err(NavError::DimensionMismatch(format!("model expects {FEATURES} input features")));
        }
        check_vector(&self.feature_mean, FEATURES, "feature_mean")?;
        check_vector(&self.feature_scale, FEATURES, "feature_scale")?;
        if self.feature_scale.contains(&0.0) {
            return Err(NavError::InvalidModel("feature scales must be non-zero".into()));
        }
        check_matrix(&self.readout, 2, self.lstm.hidden_size, "readout")?;
        if self.sequence_length == 0 {
            return Err(NavError::InvalidModel("sequence length must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SequenceModel =
            serde_json::from_str(text).map_err(|e| NavError::InvalidModel(e.to_string()))?;
        if model.version != Self::VERSION {
            return Err(NavError::InvalidModel(format!("unsupported model version {}", model.version)));
        }
        model.validate()?;
        Ok(model)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    /// Builds a network whose response reproduces the inverted linear models.
    ///
    /// Input and forget gates are saturated so the cell holds the latest
    /// frame only; the candidate path runs in the linear range of `tanh` and
    /// the readout undoes its small gain.
    pub fn from_linear_model(coef: &AeroCoefficients, sequence_length: usize) -> Result<Self> {
        if coef.c_l_alpha.abs() <= 1e-6 || coef.c_y_beta.abs() <= 1e-6 {
            return Err(NavError::InvalidModel("lift or side-force slope is too small to invert".into()));
        }
        const GAIN: f64 = 1e-3;
        const SATURATE: f64 = 30.0;
        let mut lstm = LstmWeights::zeros(FEATURES, 2);
        // features: C̄_L, C̄_Y, p, q, r, δe, δr, V
        let la = coef.c_l_alpha;
        lstm.w_g[0] = vec![1.0 / la, 0.0, 0.0, -coef.c_l_q / la, 0.0, -coef.c_l_de / la, 0.0, 0.0]
            .into_iter()
            .map(|v| v * GAIN)
            .collect();
        lstm.b_g[0] = -coef.c_l0 / la * GAIN;
        let yb = coef.c_y_beta;
        lstm.w_g[1] = vec![0.0, 1.0 / yb, -coef.c_y_p / yb, 0.0, -coef.c_y_r / yb, 0.0, -coef.c_y_dr / yb, 0.0]
            .into_iter()
            .map(|v| v * GAIN)
            .collect();
        lstm.b_g[1] = -coef.c_y0 / yb * GAIN;
        lstm.b_i = vec![SATURATE; 2];
        lstm.b_f = vec![-SATURATE; 2];
        lstm.b_o = vec![SATURATE; 2];
        let model = Self {
            version: Self::VERSION,
            sequence_length,
            feature_mean: vec![0.0; FEATURES],
            feature_scale: vec![1.0; FEATURES],
            lstm,
            readout: vec![vec![1.0 / GAIN, 0.0], vec![0.0, 1.0 / GAIN]],
            readout_bias: [0.0, 0.0],
        };
        model.validate()?;
        Ok(model)
    }
}

/// Runs the LSTM over a window from zero state and applies the readout.
pub fn sequence_predict(model: &SequenceModel, window: &[[f64; FEATURES]]) -> Result<(f64, f64)> {
    if window.len() != model.sequence_length {
        return Err(NavError::DimensionMismatch(format!(
            "window has {} frames, model expects {}",
            window.len(),
            model.sequence_length
        )));
    }
    if model.feature_mean.len() != FEATURES || model.feature_scale.len() != FEATURES {
        return Err(NavError::InvalidModel("feature scalers are missing".into()));
    }
    let n = model.lstm.hidden_size;
    let mut h = vec![0.0; n];
    let mut c = vec![0.0; n];
    for frame in window {
        let x: Vec<f64> = (0..FEATURES)
            .map(|k| (frame[k] - model.feature_mean[k]) / model.feature_scale[k])
            .collect();
        (h, c) = lstm_cell(&model.lstm, &x, &h, &c)?;
    }
    let out = |row: usize| -> f64 {
        model.readout[row].iter().zip(&h).map(|(a, b)| a * b).sum::<f64>() + model.readout_bias[row]
    };
    Ok((out(0), out(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn airflow_angles() {
        let a = aoa_sa_from_body(&Vector3::new(30.0, 0.0, 0.0)).unwrap();
        assert_eq!((a.tas, a.alpha, a.beta), (30.0, 0.0, 0.0));
        let a = aoa_sa_from_body(&Vector3::new(10.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(a.tas, 101f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(a.alpha, 0.1f64.atan(), epsilon = 1e-12);
        let a = aoa_sa_from_body(&Vector3::new(10.0, 1.0, 0.0)).unwrap();
        assert_relative_eq!(a.beta, (1.0 / 101f64.sqrt()).asin(), epsilon = 1e-12);
        assert!(aoa_sa_from_body(&Vector3::zeros()).is_err());
    }

    #[test]
    fn airflow_rotation_round_trip() {
        assert_eq!(rab_from_angles(0.0, 0.0).matrix(), &nalgebra::Matrix3::identity());
        let mut alpha = -1.2;
        while alpha < 1.2 {
            let mut beta = -1.2;
            while beta < 1.2 {
                let r = rab_from_angles(alpha, beta);
                assert!(Rot3::from_matrix(*r.matrix()).is_ok());
                let a = aoa_sa_from_body(&r.rotate(&Vector3::new(25.0, 0.0, 0.0))).unwrap();
                assert_relative_eq!(a.tas, 25.0, epsilon = 1e-10);
                assert_relative_eq!(a.alpha, alpha, epsilon = 1e-10);
                assert_relative_eq!(a.beta, beta, epsilon = 1e-10);
                beta += 0.1;
            }
            alpha += 0.1;
        }
    }

    #[test]
    fn wind_triangle_headwind() {
        let w = wind_triangle(&Vector3::new(25.0, 0.0, 0.0), &Rot3::identity(), &Rot3::identity(), &Vector3::new(30.0, 0.0, 0.0));
        assert_eq!(w, Vector3::new(-5.0, 0.0, 0.0));
    }

    #[test]
    fn level_flight_coefficients() {
        let af = AirframeParams { mass: 10.0, wing_area: 0.5, ..Default::default() };
        let eq = equivalent_coefficients(&Vector3::new(0.0, 0.0, -9.79), 30.0, &af, &Rot3::identity()).unwrap();
        assert_relative_eq!(eq.qbar, 551.25, epsilon = 1e-9);
        assert_relative_eq!(eq.c_l, 97.9 / 275.625, epsilon = 1e-12);
        assert_eq!(eq.c_y, 0.0);
        assert!(equivalent_coefficients(&Vector3::zeros(), 1.0, &af, &Rot3::identity()).is_err());
    }

    fn synthetic(coef: &AeroCoefficients, n: usize, seed: u64) -> Vec<AeroSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let alpha = rng.random_range(-0.1..0.2);
                let beta = rng.random_range(-0.1..0.1);
                let rates = Vector3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
                let elevator = rng.random_range(-0.2..0.2);
                let rudder = rng.random_range(-0.2..0.2);
                AeroSample {
                    c_l: coef.lift(alpha, rates.y, elevator),
                    c_y: coef.side(beta, rudder, rates.x, rates.z),
                    alpha,
                    beta,
                    rates,
                    elevator,
                    rudder,
                }
            })
            .collect()
    }

    #[test]
    fn least_squares_recovers_noise_free_coefficients() {
        let coef = AeroCoefficients::default();
        let fit = ls_fit(&synthetic(&coef, 200, 1)).unwrap();
        for (a, b) in fit.coefficients.lift_terms().iter().zip(coef.lift_terms()) {
            assert!((a - b).abs() < 1e-9);
        }
        for (a, b) in fit.coefficients.side_terms().iter().zip(coef.side_terms()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_regressors_are_degenerate() {
        let mut samples = synthetic(&AeroCoefficients::default(), 100, 2);
        for s in &mut samples {
            s.elevator = 0.1;
        }
        assert!(matches!(ls_fit(&samples), Err(NavError::DegenerateRegressor { .. })));
        assert!(ls_fit(&samples[..3]).is_err());
    }

    #[test]
    fn linear_inversion() {
        let coef = AeroCoefficients { c_l0: 0.2, c_l_alpha: 4.0, ..Default::default() };
        let (alpha, _) = ls_predict(&coef, 0.6, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(alpha, 0.1, epsilon = 1e-15);
        let (alpha, _) = ls_predict(&coef, 0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(alpha, 0.0);
        let flat = AeroCoefficients { c_l_alpha: 0.0, ..coef };
        assert!(matches!(ls_predict(&flat, 0.6, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0), Err(NavError::InvalidModel(_))));
    }

    #[test]
    fn zero_weight_cell() {
        let w = LstmWeights::zeros(1, 1);
        let (h, c) = lstm_cell(&w, &[0.3], &[0.0], &[0.0]).unwrap();
        assert_eq!((h[0], c[0]), (0.0, 0.0));
        let (h, c) = lstm_cell(&w, &[0.3], &[0.0], &[1.0]).unwrap();
        assert_eq!(c[0], 0.5);
        assert!((h[0] - 0.5 * 0.5f64.tanh()).abs() < 1e-12);
        assert!(lstm_cell(&w, &[0.3, 1.0], &[0.0], &[0.0]).is_err());
    }

    #[test]
    fn saturated_cell_passes_candidate() {
        let mut w = LstmWeights::zeros(1, 1);
        w.b_i = vec![10.0];
        w.b_f = vec![-30.0];
        w.w_g = vec![vec![1.0]];
        let (_, c) = lstm_cell(&w, &[0.4], &[0.0], &[0.7]).unwrap();
        assert!((c[0] - 0.4f64.tanh()).abs() < 1e-4);
    }

    #[test]
    fn linear_sequence_model_matches_inversion() {
        let coef = AeroCoefficients::default();
        let model = SequenceModel::from_linear_model(&coef, 5).unwrap();
        let frame = [0.7, -0.05, 0.1, 0.05, -0.02, 0.03, 0.01, 20.0];
        let (alpha, beta) = sequence_predict(&model, &[frame; 5]).unwrap();
        let (a_ref, b_ref) = ls_predict(&coef, frame[0], frame[1], frame[3], frame[5], frame[6], frame[2], frame[4]).unwrap();
        assert!((alpha - a_ref).abs() < 1e-5);
        assert!((beta - b_ref).abs() < 1e-5);
        assert!(sequence_predict(&model, &[frame; 4]).is_err());
        let back = SequenceModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
    }
}
