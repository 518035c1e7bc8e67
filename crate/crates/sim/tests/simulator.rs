use aeronav::propagation::strapdown_step;
use aeronav::updates::pressure_to_height;
use aeronav::{ImuSample, SensorKind, SensorPayload};
use aeronav_sim::{
    apply_denial, channel_rng, generate_trajectory, simulate, synthesize_sensors, wind_step, Channel, CommandLags,
    Scenario, Segment, SegmentKind, SensorSpec, WindSpec,
};
use nalgebra::Vector3;

fn calm(mut sc: Scenario) -> Scenario {
    sc.wind = WindSpec { mean: [0.0; 3], sigma: 0.0 };
    sc.lags = CommandLags::none();
    sc
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[test]
fn cruise_in_still_air_is_steady() {
    let mut sc = calm(Scenario::new(4, vec![Segment::new(SegmentKind::Cruise, 20.0, 20.0, 0.0, 0.0)]));
    sc.initial_heading = 0.7;
    sc.trim_alpha = 0.05;
    let truth = generate_trajectory(&sc).unwrap();
    let v0 = truth[0].state.vel;
    for rec in &truth {
        assert!((rec.state.vel - v0).norm() < 1e-9);
        assert!((rec.state.vel.y.atan2(rec.state.vel.x) - 0.7).abs() < 1e-12);
        assert!((rec.alpha - 0.05).abs() < 1e-9);
        assert!(rec.beta.abs() < 1e-9);
    }
    assert!((v0.norm() - 20.0).abs() < 1e-12);
}

#[test]
fn coordinated_turn_follows_closed_form_heading() {
    let rate = 0.1;
    let duration = 62.83;
    let sc = calm(Scenario::new(9, vec![Segment::new(SegmentKind::Turn, duration, 18.0, rate, 0.0)]));
    let truth = generate_trajectory(&sc).unwrap();
    let wrap = |a: f64| (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    for rec in truth.iter().step_by(97) {
        let heading = rec.state.vel.y.atan2(rec.state.vel.x);
        assert!(wrap(heading - rate * rec.t).abs() < 1e-9, "t = {}", rec.t);
    }
    let last = truth.last().unwrap();
    let heading = last.state.vel.y.atan2(last.state.vel.x);
    // 0.1 · 62.83 falls 1.85e-4 rad short of a full turn
    assert!((wrap(heading) - wrap(rate * duration)).abs() < 1e-9);
    assert!(wrap(heading).abs() < 2e-4);
    // level turn: bank from the coordinated-turn relation
    let (roll, _, _) = truth[100].state.r_bn.euler();
    assert!((roll - (18.0 * rate / 9.79f64).atan()).abs() < 1e-2);
}

#[test]
fn truth_is_kinematically_consistent() {
    let sc = Scenario::mixed(5);
    let truth = generate_trajectory(&sc).unwrap();
    let dt = 1.0 / sc.rates.imu;
    for pair in truth.windows(2).step_by(7) {
        let mut start = pair[0].state;
        start.gyro_bias = Vector3::zeros();
        start.accel_bias = Vector3::zeros();
        let next = strapdown_step(&start, &ImuSample::new(pair[1].t, pair[1].gyro, pair[1].accel), dt).unwrap();
        assert!((next.r_bn.matrix() - pair[1].state.r_bn.matrix()).norm() < 1e-9);
        assert!((next.vel - pair[1].state.vel).norm() < 1e-9);
        assert!((next.pos - pair[1].state.pos).norm() < 1e-9);
    }
}

#[test]
fn same_seed_same_stream() {
    let sc = Scenario::convergence(21);
    let a = simulate(&sc).unwrap();
    let b = simulate(&sc).unwrap();
    assert_eq!(a.events, b.events);
    assert_eq!(a.truth, b.truth);
    let c = simulate(&Scenario::convergence(22)).unwrap();
    assert_ne!(a.events, c.events);
}

#[test]
fn wind_increments_match_intensity() {
    let mut rng = channel_rng(3, Channel::Wind);
    let (sigma, dt, n) = (0.2, 0.01, 100_000);
    let mut w = Vector3::zeros();
    let mut inc = Vec::with_capacity(n);
    for _ in 0..n {
        let next = wind_step(&w, sigma, dt, &mut rng);
        inc.push((next - w).x);
        w = next;
    }
    let var = std_dev(&inc).powi(2);
    assert!((var / (sigma * sigma * dt) - 1.0).abs() < 0.05, "variance ratio {}", var / (sigma * sigma * dt));

    // ensemble of independent walks: Var[w(t)] = σ² t
    let mut finals = Vec::new();
    for _ in 0..4000 {
        let mut w = Vector3::zeros();
        for _ in 0..25 {
            w = wind_step(&w, sigma, dt, &mut rng);
        }
        finals.push(w.y);
    }
    let ratio = std_dev(&finals).powi(2) / (sigma * sigma * 0.25);
    assert!((ratio - 1.0).abs() < 0.1, "ensemble ratio {ratio}");
}

#[test]
fn gnss_rate_and_denial_counts() {
    let sc = Scenario::denial(8);
    let mut truth = generate_trajectory(&sc).unwrap();
    let events = synthesize_sensors(&mut truth, &sc.noise, &sc).unwrap();
    let gnss = |ev: &[aeronav::SensorEvent]| ev.iter().filter(|e| e.kind() == SensorKind::Gnss).count();
    let expected = sc.duration() * sc.rates.gnss;
    assert!((gnss(&events) as f64 - expected).abs() <= 1.0);

    assert_eq!(apply_denial(&events, &[]), events);
    assert_eq!(gnss(&apply_denial(&events, &[[0.0, sc.duration()]])), 0);

    let kept = apply_denial(&events, &[[90.0, 220.0]]);
    let inside = events.iter().filter(|e| e.kind() == SensorKind::Gnss && e.t >= 90.0 && e.t <= 220.0).count();
    // samples every 0.2 s from 90.0 to 220.0 inclusive
    assert_eq!(inside, 651);
    assert_eq!(gnss(&kept), gnss(&events) - inside);
    assert_eq!(kept.len(), events.len() - inside);
}

#[test]
fn sensor_noise_matches_spec() {
    let mut sc = calm(Scenario::new(
        17,
        vec![Segment::new(SegmentKind::Cruise, 200.0, 20.0, 0.0, 0.0)],
    ));
    sc.rates.baro = 100.0;
    sc.rates.mag = 100.0;
    sc.rates.pitot = 100.0;
    sc.rates.gnss = 100.0;
    sc.initial_height = 100.0;
    let mut spec = SensorSpec::default();
    spec.gyro_bias_stability = 0.0;
    spec.accel_bias_stability = 0.0;
    let mut truth = generate_trajectory(&sc).unwrap();
    let events = synthesize_sensors(&mut truth, &spec, &sc).unwrap();
    let by_time = |t: f64| &truth[(t * sc.rates.imu).round() as usize];

    let mut channels: [Vec<f64>; 8] = Default::default();
    for e in &events {
        let rec = by_time(e.t);
        match e.payload {
            SensorPayload::Imu(u) => {
                channels[0].push(u.gyro.x - rec.gyro.x);
                channels[1].push(u.accel.z - rec.accel.z);
            }
            SensorPayload::Gnss { pos, vel } => {
                channels[2].push(pos.y - rec.state.pos.y);
                channels[3].push(vel.x - rec.state.vel.x);
            }
            SensorPayload::Baro { pressure } => {
                channels[4].push(pressure - aeronav::updates::height_to_pressure(sc.origin_altitude - rec.state.pos.z));
            }
            SensorPayload::Mag { field } => {
                channels[5].push(field.z - (rec.state.r_bn.transpose().rotate(&Vector3::x()) * spec.mag_field).z);
            }
            SensorPayload::Airspeed { tas } => channels[6].push(tas - rec.tas),
            SensorPayload::Aero { elevator, .. } => channels[7].push(elevator),
        }
    }
    let rate = sc.rates.imu.sqrt();
    let expected =
        [spec.gyro_arw * rate, spec.accel_vrw * rate, spec.gnss_pos_sigma, spec.gnss_vel_sigma, spec.baro_sigma, spec.mag_sigma, spec.pitot_sigma, spec.deflection_sigma];
    for (i, (xs, sigma)) in channels.iter().zip(expected).enumerate() {
        assert!(xs.len() >= 10_000, "channel {i} has {} samples", xs.len());
        let ratio = std_dev(xs) / sigma;
        assert!((ratio - 1.0).abs() < 0.1, "channel {i}: ratio {ratio}");
    }
}

#[test]
fn noiseless_sensors_reproduce_truth() {
    let mut sc = Scenario::mixed(2);
    sc.noise = SensorSpec::noiseless();
    let sim = simulate(&sc).unwrap();
    for e in sim.events.iter().step_by(13) {
        let rec = &sim.truth[(e.t * sc.rates.imu).round() as usize];
        match e.payload {
            SensorPayload::Imu(u) => assert_eq!((u.gyro, u.accel), (rec.gyro, rec.accel)),
            SensorPayload::Gnss { pos, vel } => assert_eq!((pos, vel), (rec.state.pos, rec.state.vel)),
            SensorPayload::Baro { pressure } => {
                let h = pressure_to_height(pressure).unwrap();
                assert!((h - (sc.origin_altitude - rec.state.pos.z)).abs() < 1e-6);
            }
            SensorPayload::Mag { field } => assert!((field.normalize() - rec.state.r_bn.transpose().rotate(&Vector3::x())).norm() < 1e-12),
            SensorPayload::Airspeed { tas } => assert_eq!(tas, rec.tas),
            SensorPayload::Aero { elevator, alpha, .. } => {
                assert_eq!(alpha, rec.alpha);
                if rec.tas < 5.0 {
                    assert_eq!(elevator, 0.0);
                }
            }
        }
    }
}

#[test]
fn deflections_reproduce_equivalent_lift() {
    let mut sc = Scenario::training(6);
    sc.noise = SensorSpec::noiseless();
    let sim = simulate(&sc).unwrap();
    let mut checked = 0;
    for e in &sim.events {
        if let SensorPayload::Aero { elevator, rudder, alpha, beta } = e.payload {
            let rec = &sim.truth[(e.t * sc.rates.imu).round() as usize];
            let eq = aeronav::airdata::equivalent_coefficients(&rec.accel, rec.tas, &sc.airframe, &rec.state.r_ab).unwrap();
            assert!((sc.aero.lift(alpha, rec.gyro.y, elevator) - eq.c_l).abs() < 1e-9);
            assert!((sc.aero.side(beta, rudder, rec.gyro.x, rec.gyro.z) - eq.c_y).abs() < 1e-9);
            checked += 1;
        }
    }
    assert!(checked > 1000);
}

#[test]
fn channels_are_independent() {
    let mut a = Scenario::convergence(30);
    let mut b = a.clone();
    a.noise.pitot_sigma = 0.5;
    b.noise.pitot_sigma = 2.0;
    let (ea, eb) = (simulate(&a).unwrap().events, simulate(&b).unwrap().events);
    let imu = |ev: &[aeronav::SensorEvent]| ev.iter().filter(|e| e.kind() == SensorKind::Imu).cloned().collect::<Vec<_>>();
    assert_eq!(imu(&ea), imu(&eb));
    let tas = |ev: &[aeronav::SensorEvent]| ev.iter().filter(|e| e.kind() == SensorKind::Airspeed).cloned().collect::<Vec<_>>();
    assert_ne!(tas(&ea), tas(&eb));
}

#[test]
fn scenario_round_trips_through_json() {
    let sc = Scenario::denial(12);
    let text = serde_json::to_string(&sc).unwrap();
    let back: Scenario = serde_json::from_str(&text).unwrap();
    assert_eq!(sc, back);
}
