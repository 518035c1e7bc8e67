//! CSV formats.
//!
//! Sensor log: header `t,type,f1,...,f7`, one event per row. Field use by type:
//!
//! | type | f1..f3        | f4..f6          | f7 |
//! |------|---------------|-----------------|----|
//! | IMU  | gyro rad/s    | accel m/s²      |    |
//! | GNSS | position m    | velocity m/s    |    |
//! | BARO | pressure bar  |                 |    |
//! | MAG  | field         |                 |    |
//! | TAS  | airspeed m/s  |                 |    |
//! | AERO | δe, δr, α rad | β rad           |    |
//!
//! Unused fields are empty. Numbers are written in shortest round-trip form,
//! so a log read back reproduces the events bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use aeronav::airdata::angles_from_rab;
use aeronav::{FullState, ImuSample, Rot3, SensorEvent, SensorPayload, StateHistory};
use aeronav_sim::TruthRecord;
use nalgebra::{Matrix3, Vector3};

use crate::error::{HarnessError, Result};

pub const LOG_HEADER: [&str; 9] = ["t", "type", "f1", "f2", "f3", "f4", "f5", "f6", "f7"];

pub const TRUTH_HEADER: [&str; 34] = [
    "t", "r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33", "vx", "vy", "vz", "px", "py", "pz", "alpha",
    "beta", "wx", "wy", "wz", "bgx", "bgy", "bgz", "bax", "bay", "baz", "tas", "gx", "gy", "gz", "fx", "fy", "fz",
];

fn num(v: f64) -> String {
    format!("{v}")
}

fn push3(row: &mut Vec<String>, v: &Vector3<f64>) {
    row.extend(v.iter().map(|x| num(*x)));
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| HarnessError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| HarnessError::io(path, e))
}

fn log_row(e: &SensorEvent) -> Vec<String> {
    let mut row = vec![num(e.t), e.kind().tag().to_string()];
    match &e.payload {
        SensorPayload::Imu(u) => {
            push3(&mut row, &u.gyro);
            push3(&mut row, &u.accel);
        }
        SensorPayload::Gnss { pos, vel } => {
            push3(&mut row, pos);
            push3(&mut row, vel);
        }
        SensorPayload::Baro { pressure } => row.push(num(*pressure)),
        SensorPayload::Mag { field } => push3(&mut row, field),
        SensorPayload::Airspeed { tas } => row.push(num(*tas)),
        SensorPayload::Aero { elevator, rudder, alpha, beta } => {
            row.extend([*elevator, *rudder, *alpha, *beta].map(num));
        }
    }
    row.resize(LOG_HEADER.len(), String::new());
    row
}

pub fn write_sensor_log<W: Write>(events: &[SensorEvent], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(LOG_HEADER)?;
    for e in events {
        w.write_record(log_row(e))?;
    }
    w.flush().map_err(|e| HarnessError::io("sensor log", e))?;
    Ok(())
}

struct Row<'a> {
    record: &'a csv::StringRecord,
    line: u64,
}

impl Row<'_> {
    fn field(&self, i: usize) -> Result<f64> {
        let text = self.record.get(i).unwrap_or("").trim();
        let column = LOG_HEADER.get(i).copied().unwrap_or("?");
        if text.is_empty() {
            return Err(HarnessError::Data(format!("line {}: missing field {column}", self.line)));
        }
        let v: f64 = text
            .parse()
            .map_err(|_| HarnessError::Data(format!("line {}: field {column} is not a number: '{text}'", self.line)))?;
        if !v.is_finite() {
            return Err(HarnessError::Data(format!("line {}: field {column} is not finite", self.line)));
        }
        Ok(v)
    }

    fn vec3(&self, first: usize) -> Result<Vector3<f64>> {
        Ok(Vector3::new(self.field(first)?, self.field(first + 1)?, self.field(first + 2)?))
    }
}

pub fn read_sensor_log<R: Read>(input: R) -> Result<Vec<SensorEvent>> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header = r.headers()?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != LOG_HEADER {
        return Err(HarnessError::Data(format!("sensor log header must be '{}'", LOG_HEADER.join(","))));
    }
    let mut events = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let row = Row { record: &record, line: i as u64 + 2 };
        let t = row.field(0)?;
        let tag = record.get(1).unwrap_or("").trim();
        let payload = match tag {
            "IMU" => SensorPayload::Imu(ImuSample::new(t, row.vec3(2)?, row.vec3(5)?)),
            "GNSS" => SensorPayload::Gnss { pos: row.vec3(2)?, vel: row.vec3(5)? },
            "BARO" => SensorPayload::Baro { pressure: row.field(2)? },
            "MAG" => SensorPayload::Mag { field: row.vec3(2)? },
            "TAS" => SensorPayload::Airspeed { tas: row.field(2)? },
            "AERO" => SensorPayload::Aero {
                elevator: row.field(2)?,
                rudder: row.field(3)?,
                alpha: row.field(4)?,
                beta: row.field(5)?,
            },
            other => return Err(HarnessError::Data(format!("line {}: unknown sensor type '{other}'", row.line))),
        };
        events.push(SensorEvent::new(t, payload));
    }
    Ok(events)
}

pub fn write_sensor_log_file(events: &[SensorEvent], path: &Path) -> Result<()> {
    write_sensor_log(events, create(path)?)
}

pub fn read_sensor_log_file(path: &Path) -> Result<Vec<SensorEvent>> {
    read_sensor_log(open(path)?)
}

fn rotation_cells(r: &Rot3) -> impl Iterator<Item = f64> + '_ {
    let m = r.matrix();
    (0..3).flat_map(move |i| (0..3).map(move |j| m[(i, j)]))
}

pub fn write_truth<W: Write>(truth: &[TruthRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(TRUTH_HEADER)?;
    for rec in truth {
        let s = &rec.state;
        let mut row = vec![num(rec.t)];
        row.extend(rotation_cells(&s.r_bn).map(num));
        for v in [&s.vel, &s.pos] {
            push3(&mut row, v);
        }
        row.push(num(rec.alpha));
        row.push(num(rec.beta));
        for v in [&s.wind, &s.gyro_bias, &s.accel_bias] {
            push3(&mut row, v);
        }
        row.push(num(rec.tas));
        push3(&mut row, &rec.gyro);
        push3(&mut row, &rec.accel);
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| HarnessError::io("truth", e))?;
    Ok(())
}

pub fn read_truth<R: Read>(input: R) -> Result<Vec<TruthRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().map(str::trim).ne(TRUTH_HEADER) {
        return Err(HarnessError::Data(format!("truth header must be '{}'", TRUTH_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let vals: Vec<f64> = record
            .iter()
            .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| HarnessError::Data(format!("truth line {line}: non-numeric or non-finite field")))?;
        if vals.len() != TRUTH_HEADER.len() {
            return Err(HarnessError::Data(format!("truth line {line}: expected {} fields", TRUTH_HEADER.len())));
        }
        let v3 = |k: usize| Vector3::new(vals[k], vals[k + 1], vals[k + 2]);
        let m = Matrix3::from_row_slice(&vals[1..10]);
        if (m.transpose() * m - Matrix3::identity()).norm() > 1e-6 || m.determinant() <= 0.0 {
            return Err(HarnessError::Data(format!("truth line {line}: attitude is not a rotation")));
        }
        let r_bn = Rot3::from_matrix(m).unwrap_or_else(|_| Rot3::from_matrix_projected(m));
        let (alpha, beta) = (vals[16], vals[17]);
        let state = FullState {
            r_bn,
            vel: v3(10),
            pos: v3(13),
            gyro_bias: v3(21),
            accel_bias: v3(24),
            r_ab: aeronav::airdata::rab_from_angles(alpha, beta),
            wind: v3(18),
        };
        out.push(TruthRecord { t: vals[0], state, alpha, beta, tas: vals[27], gyro: v3(28), accel: v3(31) });
    }
    Ok(out)
}

pub fn write_truth_file(truth: &[TruthRecord], path: &Path) -> Result<()> {
    write_truth(truth, create(path)?)
}

pub fn read_truth_file(path: &Path) -> Result<Vec<TruthRecord>> {
    read_truth(open(path)?)
}

/// One row per filter timestamp: attitude (DCM and Euler angles in degrees),
/// velocity, position, biases, airflow angles, wind and the covariance diagonal.
pub fn write_states<W: Write>(history: &StateHistory, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header: Vec<String> = ["t", "r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33"]
        .iter()
        .chain(&["roll_deg", "pitch_deg", "yaw_deg", "vx", "vy", "vz", "px", "py", "pz"])
        .chain(&["bgx", "bgy", "bgz", "bax", "bay", "baz", "alpha", "beta", "wx", "wy", "wz"])
        .map(|s| s.to_string())
        .collect();
    header.extend((0..21).map(|i| format!("p{i}")));
    w.write_record(&header)?;
    for rec in &history.records {
        let s = &rec.state;
        let mut row = vec![num(rec.t)];
        row.extend(rotation_cells(&s.r_bn).map(num));
        let (roll, pitch, yaw) = s.r_bn.euler();
        row.extend([roll, pitch, yaw].map(|a| num(a.to_degrees())));
        for v in [&s.vel, &s.pos, &s.gyro_bias, &s.accel_bias] {
            push3(&mut row, v);
        }
        let (alpha, beta) = angles_from_rab(&s.r_ab);
        row.push(num(alpha));
        row.push(num(beta));
        push3(&mut row, &s.wind);
        row.extend(rec.cov_diag.iter().map(|v| num(*v)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| HarnessError::io("states", e))?;
    Ok(())
}

pub fn write_states_file(history: &StateHistory, path: &Path) -> Result<()> {
    write_states(history, create(path)?)
}

pub fn write_json_file<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| HarnessError::io(path, e))
}

/// Writes rows of a serializable record type with a header.
pub fn write_rows_file<T: serde::Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}
