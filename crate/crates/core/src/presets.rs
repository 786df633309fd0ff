//! Ready-made scenarios used by the tests, the CLI and the sample files.
//!
//! Channel defaults everywhere: β0 = −30 dB, σ² = −60 dBm, α = 2.8,
//! altitude 50 m, maximum speed 40 m/s.

use crate::model::{ChannelEntry, ScenarioFile, SensorEntry, UavEntry};

fn channel() -> ChannelEntry {
    ChannelEntry { beta0_db: -30.0, sigma2_dbm: -60.0, alpha: 2.8 }
}

/// Two sensors at `(±d/2, 0)` with equal budgets, UAV parked at the origin,
/// flight region `[−60, 60] × [−30, 30]` m and a 10 s horizon.
pub fn two_sensor(d: f64, p_avg_dbm: f64, gamma_min_db: Option<f64>) -> ScenarioFile {
    ScenarioFile {
        sensors: vec![
            SensorEntry { x_m: -d / 2.0, y_m: 0.0, p_avg_dbm },
            SensorEntry { x_m: d / 2.0, y_m: 0.0, p_avg_dbm },
        ],
        uav: UavEntry { altitude_m: 50.0, v_max_mps: 40.0, horizon_s: 10.0, q_init_m: [0.0, 0.0], q_final_m: [0.0, 0.0] },
        channel: channel(),
        gamma_min_db,
        region_m: Some([-60.0, 60.0, -30.0, 30.0]),
    }
}

/// Sensor positions of the ten-sensor field.
pub const FIELD_SENSORS: [(f64, f64); 10] = [
    (20.0, 10.0),
    (30.0, 28.0),
    (46.0, 0.0),
    (56.0, 24.0),
    (94.0, 168.0),
    (100.0, 200.0),
    (112.0, 176.0),
    (162.0, 0.0),
    (178.0, 40.0),
    (200.0, 6.0),
];

/// Ten sensors on a 200 m × 200 m field, flight from `(0, 0)` to
/// `(200, 200)`, outage threshold 27.4 dB.
pub fn field(horizon_s: f64, p_avg_dbm: f64) -> ScenarioFile {
    ScenarioFile {
        sensors: FIELD_SENSORS.iter().map(|&(x_m, y_m)| SensorEntry { x_m, y_m, p_avg_dbm }).collect(),
        uav: UavEntry {
            altitude_m: 50.0,
            v_max_mps: 40.0,
            horizon_s,
            q_init_m: [0.0, 0.0],
            q_final_m: [200.0, 200.0],
        },
        channel: channel(),
        gamma_min_db: Some(27.4),
        region_m: Some([0.0, 200.0, 0.0, 200.0]),
    }
}

/// One sensor at the origin; handy for closed-form checks.
pub fn single_sensor(p_avg_dbm: f64, horizon_s: f64, gamma_min_db: Option<f64>) -> ScenarioFile {
    ScenarioFile {
        sensors: vec![SensorEntry { x_m: 0.0, y_m: 0.0, p_avg_dbm }],
        uav: UavEntry { altitude_m: 50.0, v_max_mps: 40.0, horizon_s, q_init_m: [-20.0, 0.0], q_final_m: [20.0, 0.0] },
        channel: channel(),
        gamma_min_db,
        region_m: Some([-30.0, 30.0, -30.0, 30.0]),
    }
}
