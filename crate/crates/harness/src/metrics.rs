use std::collections::BTreeMap;

use aeronav::airdata::angles_from_rab;
use aeronav::{FullState, Rot3, StateHistory};
use aeronav_sim::sensors::MIN_AERO_SPEED;
use aeronav_sim::TruthRecord;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsOptions {
    /// Attitude error below which the filter counts as converged, degrees.
    pub converge_threshold_deg: f64,
    /// How long the error must stay below the threshold, s.
    pub converge_hold: f64,
    /// GNSS outage windows to report separately.
    pub denial: Vec<[f64; 2]>,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        Self { converge_threshold_deg: 2.0, converge_hold: 5.0, denial: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mae: f64,
    pub rmse: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenialStats {
    pub start: f64,
    pub end: f64,
    pub max_horizontal: f64,
    pub max_vertical: f64,
    pub final_horizontal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnovationSummary {
    pub applied: usize,
    pub gated: usize,
    pub skipped: usize,
    pub stale: usize,
    pub mean_nis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub channels: BTreeMap<String, ChannelStats>,
    /// Seconds from the first sample until the attitude error settles.
    pub time_to_converge: Option<f64>,
    pub post_convergence_attitude_rmse_deg: Option<f64>,
    pub denial: Vec<DenialStats>,
    pub innovations: BTreeMap<String, InnovationSummary>,
}

impl MetricsReport {
    pub fn channel(&self, name: &str) -> Option<&ChannelStats> {
        self.channels.get(name)
    }
}

pub fn mae(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    errors.iter().map(|e| e.abs()).sum::<f64>() / errors.len() as f64
}

pub fn rmse(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

fn stats(errors: &[f64]) -> ChannelStats {
    ChannelStats { mae: mae(errors), rmse: rmse(errors), max: errors.iter().fold(0.0, |m, e| m.max(e.abs())) }
}

/// Truth at `t`: linear in the vector states, geodesic in the rotations.
pub fn interpolate_truth(truth: &[TruthRecord], t: f64) -> Option<TruthRecord> {
    const SLACK: f64 = 1e-9;
    let first = truth.first()?;
    let last = truth.last()?;
    if t < first.t - SLACK || t > last.t + SLACK {
        return None;
    }
    let i = truth.partition_point(|r| r.t <= t);
    if i == 0 {
        return Some(*first);
    }
    if i == truth.len() {
        return Some(*last);
    }
    let (a, b) = (&truth[i - 1], &truth[i]);
    let s = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
    if s < 1e-12 {
        return Some(*a);
    }
    let lerp = |x: f64, y: f64| x + (y - x) * s;
    let lerp3 = |x: &nalgebra::Vector3<f64>, y: &nalgebra::Vector3<f64>| x + (y - x) * s;
    let slerp = |x: &Rot3, y: &Rot3| -> Option<Rot3> { Some(*x * Rot3::exp(&((x.transpose() * *y).log().ok()? * s))) };
    let (sa, sb) = (&a.state, &b.state);
    let state = FullState {
        r_bn: slerp(&sa.r_bn, &sb.r_bn)?,
        vel: lerp3(&sa.vel, &sb.vel),
        pos: lerp3(&sa.pos, &sb.pos),
        gyro_bias: lerp3(&sa.gyro_bias, &sb.gyro_bias),
        accel_bias: lerp3(&sa.accel_bias, &sb.accel_bias),
        r_ab: slerp(&sa.r_ab, &sb.r_ab).unwrap_or(sa.r_ab),
        wind: lerp3(&sa.wind, &sb.wind),
    };
    Some(TruthRecord {
        t,
        state,
        alpha: lerp(a.alpha, b.alpha),
        beta: lerp(a.beta, b.beta),
        tas: lerp(a.tas, b.tas),
        gyro: b.gyro,
        accel: b.accel,
    })
}

/// |Log(R̂ Rᵀ)| in degrees.
pub fn attitude_error_deg(estimate: &Rot3, truth: &Rot3) -> f64 {
    (*estimate * truth.transpose()).angle().to_degrees()
}

fn wrap_deg(a: f64) -> f64 {
    (a + 180.0).rem_euclid(360.0) - 180.0
}

/// First time after which the error stays below `threshold` for `hold` seconds,
/// measured from the first sample.
pub fn time_to_converge(series: &[(f64, f64)], threshold: f64, hold: f64) -> Option<f64> {
    let t0 = series.first()?.0;
    let mut start: Option<f64> = None;
    for &(t, e) in series {
        if e < threshold {
            let s = *start.get_or_insert(t);
            if t - s >= hold - 1e-9 {
                return Some(s - t0);
            }
        } else {
            start = None;
        }
    }
    None
}

const CHANNELS: [&str; 18] = [
    "attitude_deg",
    "roll_deg",
    "pitch_deg",
    "yaw_deg",
    "vel_n",
    "vel_e",
    "vel_d",
    "pos_n",
    "pos_e",
    "pos_d",
    "pos_horizontal",
    "alpha_deg",
    "beta_deg",
    "wind_n",
    "wind_e",
    "wind_d",
    "gyro_bias",
    "accel_bias",
];

pub fn compute_metrics(est: &StateHistory, truth: &[TruthRecord], opts: &MetricsOptions) -> Result<MetricsReport> {
    let mut errors: BTreeMap<&str, Vec<f64>> = CHANNELS.iter().map(|c| (*c, Vec::new())).collect();
    let mut attitude = Vec::new();
    let mut horizontal = Vec::new();
    for rec in &est.records {
        let Some(tr) = interpolate_truth(truth, rec.t) else { continue };
        let (s, x) = (&rec.state, &tr.state);
        let att = attitude_error_deg(&s.r_bn, &x.r_bn);
        let (er, ep, ey) = s.r_bn.euler();
        let (tr_, tp, ty) = x.r_bn.euler();
        let dv = s.vel - x.vel;
        let dp = s.pos - x.pos;
        let dw = s.wind - x.wind;
        let h = dp.xy().norm();
        let mut push = |c: &str, v: f64| errors.get_mut(c).expect("known channel").push(v);
        push("attitude_deg", att);
        push("roll_deg", wrap_deg((er - tr_).to_degrees()));
        push("pitch_deg", wrap_deg((ep - tp).to_degrees()));
        push("yaw_deg", wrap_deg((ey - ty).to_degrees()));
        for (i, c) in ["vel_n", "vel_e", "vel_d"].iter().enumerate() {
            push(c, dv[i]);
        }
        for (i, c) in ["pos_n", "pos_e", "pos_d"].iter().enumerate() {
            push(c, dp[i]);
        }
        push("pos_horizontal", h);
        for (i, c) in ["wind_n", "wind_e", "wind_d"].iter().enumerate() {
            push(c, dw[i]);
        }
        push("gyro_bias", (s.gyro_bias - x.gyro_bias).norm());
        push("accel_bias", (s.accel_bias - x.accel_bias).norm());
        if tr.tas >= MIN_AERO_SPEED {
            let (a, b) = angles_from_rab(&s.r_ab);
            push("alpha_deg", (a - tr.alpha).to_degrees());
            push("beta_deg", (b - tr.beta).to_degrees());
        }
        attitude.push((rec.t, att));
        horizontal.push((rec.t, h, dp.z.abs()));
    }
    if attitude.is_empty() {
        return Err(HarnessError::Data("estimate and truth do not overlap in time".into()));
    }
    let time_to_converge = time_to_converge(&attitude, opts.converge_threshold_deg, opts.converge_hold);
    let post_convergence_attitude_rmse_deg = time_to_converge.map(|tc| {
        let t0 = attitude[0].0;
        let tail: Vec<f64> = attitude.iter().filter(|(t, _)| *t >= t0 + tc).map(|(_, e)| *e).collect();
        rmse(&tail)
    });
    let denial = opts
        .denial
        .iter()
        .map(|w| {
            let inside: Vec<_> = horizontal.iter().filter(|(t, _, _)| *t >= w[0] && *t <= w[1]).collect();
            DenialStats {
                start: w[0],
                end: w[1],
                max_horizontal: inside.iter().fold(0.0, |m, r| m.max(r.1)),
                max_vertical: inside.iter().fold(0.0, |m, r| m.max(r.2)),
                final_horizontal: inside.last().map_or(0.0, |r| r.1),
            }
        })
        .collect();
    let innovations = est
        .innovations
        .iter()
        .map(|(k, s)| {
            let summary = InnovationSummary {
                applied: s.applied,
                gated: s.gated,
                skipped: s.skipped,
                stale: s.stale,
                mean_nis: s.mean_nis(),
            };
            (k.tag().to_string(), summary)
        })
        .collect();
    Ok(MetricsReport {
        samples: attitude.len(),
        t_start: attitude[0].0,
        t_end: attitude[attitude.len() - 1].0,
        channels: errors.into_iter().filter(|(_, v)| !v.is_empty()).map(|(k, v)| (k.to_string(), stats(&v))).collect(),
        time_to_converge,
        post_convergence_attitude_rmse_deg,
        denial,
        innovations,
    })
}
