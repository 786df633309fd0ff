//! Scenario description and physical-layer formulas.
//!
//! All arithmetic here is in linear units (watts, linear gains). Decibel
//! quantities only appear in [`ScenarioFile`], the on-disk representation,
//! and are converted once by [`ScenarioFile::to_raw`].
//!
//! The received signal is the coherent sum of the sensors' contributions,
//! so with powers `P_k` and channel amplitudes `h_k(q)` the SNR at the UAV
//! horizontal position `q` is `(Σ sqrt(P_k) h_k(q))² / σ²`.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute slack (watts) allowed on average-power checks.
pub const POWER_SLACK_W: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("infeasible horizon: need at least {min_s:.6} s to fly from start to end, got {horizon_s:.6} s")]
    InfeasibleHorizon { min_s: f64, horizon_s: f64 },
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositiveParameter { name: String, value: f64 },
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: String, value: f64 },
    #[error("scenario has no outage threshold (gamma_min)")]
    MissingThreshold,
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("plan violates {0}")]
    PlanViolation(String),
}

/// Which objective a planner pursues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Maximize the time-averaged achievable rate.
    Rate,
    /// Minimize the fraction of time the SNR is below the threshold.
    Outage,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Rate => "rate",
            Mode::Outage => "outage",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rate" => Ok(Mode::Rate),
            "outage" => Ok(Mode::Outage),
            other => Err(format!("unknown mode `{other}` (expected rate or outage)")),
        }
    }
}

/// Horizontal position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Linear interpolation; `frac` = 0 gives `self`, 1 gives `other`.
    pub fn lerp(self, other: Point, frac: f64) -> Point {
        self + (other - self) * frac
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

/// Axis-aligned rectangle `[x_lo, x_hi] × [y_lo, y_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Region {
    pub fn bounding_box<I: IntoIterator<Item = Point>>(points: I) -> Option<Region> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut r = Region { x_lo: first.x, x_hi: first.x, y_lo: first.y, y_hi: first.y };
        for p in it {
            r.x_lo = r.x_lo.min(p.x);
            r.x_hi = r.x_hi.max(p.x);
            r.y_lo = r.y_lo.min(p.y);
            r.y_hi = r.y_hi.max(p.y);
        }
        Some(r)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_lo && p.x <= self.x_hi && p.y >= self.y_lo && p.y <= self.y_hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub position: Point,
    /// Average transmit-power budget in watts.
    pub p_avg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Linear channel power gain at the 1 m reference distance.
    pub beta0: f64,
    /// Receiver noise power in watts.
    pub sigma2: f64,
    /// Path-loss exponent, at least 2.
    pub alpha: f64,
}

/// Unvalidated scenario in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct RawScenario {
    pub sensors: Vec<SensorSpec>,
    pub altitude: f64,
    pub v_max: f64,
    pub horizon: f64,
    pub q_init: Point,
    pub q_final: Point,
    pub channel: ChannelParams,
    pub gamma_min: Option<f64>,
    pub region: Option<Region>,
}

/// Validated, immutable problem description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    sensors: Vec<SensorSpec>,
    altitude: f64,
    v_max: f64,
    horizon: f64,
    q_init: Point,
    q_final: Point,
    channel: ChannelParams,
    gamma_min: Option<f64>,
    region: Region,
}

fn check_positive(name: &str, value: f64) -> Result<(), ModelError> {
    if !value.is_finite() {
        return Err(ModelError::NonFinite { name: name.to_string(), value });
    }
    if value <= 0.0 {
        return Err(ModelError::NonPositiveParameter { name: name.to_string(), value });
    }
    Ok(())
}

fn check_finite_point(name: &str, p: Point) -> Result<(), ModelError> {
    for v in [p.x, p.y] {
        if !v.is_finite() {
            return Err(ModelError::NonFinite { name: name.to_string(), value: v });
        }
    }
    Ok(())
}

/// Checks every scenario invariant and fills in the default flight region.
pub fn validate_scenario(raw: RawScenario) -> Result<Scenario, ModelError> {
    if raw.sensors.is_empty() {
        return Err(ModelError::Invalid("at least one sensor is required".into()));
    }
    for (k, s) in raw.sensors.iter().enumerate() {
        check_finite_point(&format!("sensors[{k}].position"), s.position)?;
        check_positive(&format!("sensors[{k}].p_avg"), s.p_avg)?;
    }
    check_positive("altitude", raw.altitude)?;
    check_positive("v_max", raw.v_max)?;
    check_positive("beta0", raw.channel.beta0)?;
    check_positive("sigma2", raw.channel.sigma2)?;
    if !raw.channel.alpha.is_finite() || raw.channel.alpha < 2.0 {
        return Err(ModelError::Invalid(format!(
            "path-loss exponent must be at least 2, got {}",
            raw.channel.alpha
        )));
    }
    if !raw.horizon.is_finite() || raw.horizon < 0.0 {
        return Err(ModelError::Invalid(format!("horizon must be nonnegative, got {}", raw.horizon)));
    }
    check_finite_point("q_init", raw.q_init)?;
    check_finite_point("q_final", raw.q_final)?;
    if let Some(g) = raw.gamma_min {
        check_positive("gamma_min", g)?;
    }

    let min_s = raw.q_final.dist(raw.q_init) / raw.v_max;
    if raw.horizon < min_s * (1.0 - 1e-12) {
        return Err(ModelError::InfeasibleHorizon { min_s, horizon_s: raw.horizon });
    }

    let bbox = Region::bounding_box(
        raw.sensors.iter().map(|s| s.position).chain([raw.q_init, raw.q_final]),
    )
    .expect("nonempty");
    let region = match raw.region {
        None => bbox,
        Some(r) => {
            for v in [r.x_lo, r.x_hi, r.y_lo, r.y_hi] {
                if !v.is_finite() {
                    return Err(ModelError::NonFinite { name: "region".into(), value: v });
                }
            }
            if r.x_lo > bbox.x_lo || r.x_hi < bbox.x_hi || r.y_lo > bbox.y_lo || r.y_hi < bbox.y_hi {
                return Err(ModelError::Invalid(
                    "region must contain every sensor and both trajectory endpoints".into(),
                ));
            }
            r
        }
    };

    Ok(Scenario {
        sensors: raw.sensors,
        altitude: raw.altitude,
        v_max: raw.v_max,
        horizon: raw.horizon,
        q_init: raw.q_init,
        q_final: raw.q_final,
        channel: raw.channel,
        gamma_min: raw.gamma_min,
        region,
    })
}

impl Scenario {
    pub fn sensors(&self) -> &[SensorSpec] {
        &self.sensors
    }

    pub fn num_sensors(&self) -> usize {
        self.sensors.len()
    }

    pub fn altitude(&self) -> f64 {
        self.altitude
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn q_init(&self) -> Point {
        self.q_init
    }

    pub fn q_final(&self) -> Point {
        self.q_final
    }

    pub fn channel(&self) -> &ChannelParams {
        &self.channel
    }

    pub fn gamma_min(&self) -> Option<f64> {
        self.gamma_min
    }

    pub fn require_gamma_min(&self) -> Result<f64, ModelError> {
        self.gamma_min.ok_or(ModelError::MissingThreshold)
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn budgets(&self) -> Vec<f64> {
        self.sensors.iter().map(|s| s.p_avg).collect()
    }

    /// Copy with every average-power budget multiplied by `factor` (> 0).
    pub fn with_scaled_budgets(&self, factor: f64) -> Scenario {
        let mut s = self.clone();
        for sensor in &mut s.sensors {
            sensor.p_avg *= factor;
        }
        s
    }

    /// Copy with one sensor's budget replaced. Zero is allowed here so that
    /// silent sensors can be modelled; negative values are clamped to zero.
    pub fn with_budget(&self, k: usize, p_avg: f64) -> Scenario {
        let mut s = self.clone();
        s.sensors[k].p_avg = p_avg.max(0.0);
        s
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Scenario, ModelError> {
        let raw = RawScenario { horizon, region: Some(self.region), ..self.to_raw() };
        validate_scenario(raw)
    }

    pub fn with_gamma_min(&self, gamma_min: Option<f64>) -> Scenario {
        let mut s = self.clone();
        s.gamma_min = gamma_min;
        s
    }

    pub fn to_raw(&self) -> RawScenario {
        RawScenario {
            sensors: self.sensors.clone(),
            altitude: self.altitude,
            v_max: self.v_max,
            horizon: self.horizon,
            q_init: self.q_init,
            q_final: self.q_final,
            channel: self.channel,
            gamma_min: self.gamma_min,
            region: Some(self.region),
        }
    }

    /// Shortest possible flight time from `q_init` to `q_final`.
    pub fn min_flight_time(&self) -> f64 {
        self.q_final.dist(self.q_init) / self.v_max
    }

    /// Squared channel amplitude `β0 d_k(q)^(−α)`.
    pub fn channel_gain(&self, q: Point, k: usize) -> f64 {
        let d2 = (q - self.sensors[k].position).norm_sq() + self.altitude * self.altitude;
        self.channel.beta0 * d2.powf(-0.5 * self.channel.alpha)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// UAV-to-sensor distance including the flight altitude.
pub fn distance(q: Point, k: usize, scn: &Scenario) -> f64 {
    ((q - scn.sensors[k].position).norm_sq() + scn.altitude * scn.altitude).sqrt()
}

/// `sqrt(β0 d_k(q)^(−α))`.
pub fn channel_amplitude(q: Point, k: usize, scn: &Scenario) -> f64 {
    scn.channel_gain(q, k).sqrt()
}

/// Nonnegative per-sensor transmit powers in watts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerVector(Vec<f64>);

impl PowerVector {
    /// Panics on a negative or non-finite entry.
    pub fn new(values: Vec<f64>) -> Self {
        assert!(
            values.iter().all(|p| p.is_finite() && *p >= 0.0),
            "powers must be finite and nonnegative: {values:?}"
        );
        Self(values)
    }

    /// Clamps tiny negative round-off to zero.
    pub fn from_clamped(values: Vec<f64>) -> Self {
        Self::new(values.into_iter().map(|p| p.max(0.0)).collect())
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0.0; k])
    }

    pub fn uniform_budget(scn: &Scenario) -> Self {
        Self(scn.budgets())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.0.iter().map(|p| p * c).collect())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

pub(crate) fn snr_from_slice(q: Point, p: &[f64], scn: &Scenario) -> f64 {
    let amp: f64 = p
        .iter()
        .enumerate()
        .filter(|(_, &pk)| pk > 0.0)
        .map(|(k, &pk)| pk.sqrt() * channel_amplitude(q, k, scn))
        .sum();
    amp * amp / scn.channel.sigma2
}

/// Coherent-combining SNR at `q`.
pub fn snr(q: Point, p: &PowerVector, scn: &Scenario) -> f64 {
    snr_from_slice(q, p.as_slice(), scn)
}

/// Achievable rate in bps/Hz.
pub fn rate(q: Point, p: &PowerVector, scn: &Scenario) -> f64 {
    snr(q, p, scn).ln_1p() / std::f64::consts::LN_2
}

pub fn rate_from_snr(snr: f64) -> f64 {
    snr.ln_1p() / std::f64::consts::LN_2
}

/// 1 when the SNR is strictly below the threshold, 0 otherwise.
pub fn outage_indicator(q: Point, p: &PowerVector, scn: &Scenario) -> Result<u8, ModelError> {
    let gamma = scn.require_gamma_min()?;
    Ok(u8::from(snr(q, p, scn) < gamma))
}

/// Finite-horizon plan: one waypoint and one power vector per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePlan {
    pub slot_len: f64,
    pub waypoints: Vec<Point>,
    /// `powers[n][k]` is sensor `k`'s power in slot `n`.
    pub powers: Vec<Vec<f64>>,
}

impl DiscretePlan {
    pub fn n_slots(&self) -> usize {
        self.waypoints.len()
    }

    pub fn power_vector(&self, n: usize) -> PowerVector {
        PowerVector::from_clamped(self.powers[n].clone())
    }

    /// Time-averaged power of sensor `k`.
    pub fn average_power(&self, k: usize) -> f64 {
        let n = self.n_slots();
        if n == 0 {
            return 0.0;
        }
        self.powers.iter().map(|p| p[k]).sum::<f64>() / n as f64
    }

    /// Checks the speed, endpoint and average-power constraints.
    pub fn check(&self, scn: &Scenario) -> Result<(), ModelError> {
        let n = self.n_slots();
        if n == 0 {
            return Err(ModelError::PlanViolation("empty plan".into()));
        }
        if self.powers.len() != n || self.powers.iter().any(|p| p.len() != scn.num_sensors()) {
            return Err(ModelError::PlanViolation("power matrix shape".into()));
        }
        let step = scn.v_max * self.slot_len;
        let tol = 1e-9 * (1.0 + step);
        let mut prev = scn.q_init;
        for (i, &q) in self.waypoints.iter().enumerate() {
            let d = q.dist(prev);
            if d > step + tol {
                return Err(ModelError::PlanViolation(format!(
                    "speed limit at slot {}: moved {d:.9} m, limit {step:.9} m",
                    i + 1
                )));
            }
            prev = q;
        }
        if self.waypoints[n - 1].dist(scn.q_final) > 1e-9 {
            return Err(ModelError::PlanViolation("final waypoint is not q_final".into()));
        }
        for (k, s) in scn.sensors.iter().enumerate() {
            if self.powers.iter().any(|p| !(p[k] >= 0.0) || !p[k].is_finite()) {
                return Err(ModelError::PlanViolation(format!("negative power for sensor {k}")));
            }
            let avg = self.average_power(k);
            if avg > s.p_avg + POWER_SLACK_W {
                return Err(ModelError::PlanViolation(format!(
                    "average power of sensor {k}: {avg} W > budget {} W",
                    s.p_avg
                )));
            }
        }
        Ok(())
    }

    /// Plan repeated back to back; used to check time-average invariance.
    pub fn concatenated(&self, other: &DiscretePlan) -> DiscretePlan {
        let mut waypoints = self.waypoints.clone();
        waypoints.extend_from_slice(&other.waypoints);
        let mut powers = self.powers.clone();
        powers.extend(other.powers.iter().cloned());
        DiscretePlan { slot_len: self.slot_len, waypoints, powers }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryMetrics {
    pub avg_rate: f64,
    /// Present when the scenario has an outage threshold.
    pub outage_prob: Option<f64>,
    pub per_slot_snr: Vec<f64>,
}

impl TrajectoryMetrics {
    pub fn require_outage(&self) -> Result<f64, ModelError> {
        self.outage_prob.ok_or(ModelError::MissingThreshold)
    }
}

/// Time-averaged rate and outage probability of a discrete plan.
pub fn evaluate_plan(plan: &DiscretePlan, scn: &Scenario) -> TrajectoryMetrics {
    let per_slot_snr: Vec<f64> = plan
        .waypoints
        .iter()
        .zip(&plan.powers)
        .map(|(&q, p)| snr_from_slice(q, p, scn))
        .collect();
    let n = per_slot_snr.len().max(1) as f64;
    let avg_rate = per_slot_snr.iter().map(|&s| rate_from_snr(s)).sum::<f64>() / n;
    let outage_prob = scn
        .gamma_min
        .map(|g| per_slot_snr.iter().filter(|&&s| s < g).count() as f64 / n);
    TrajectoryMetrics { avg_rate, outage_prob, per_slot_snr }
}

/// Scenario file schema; every dB/dBm value is converted on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub sensors: Vec<SensorEntry>,
    pub uav: UavEntry,
    pub channel: ChannelEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_min_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region_m: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorEntry {
    pub x_m: f64,
    pub y_m: f64,
    pub p_avg_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UavEntry {
    pub altitude_m: f64,
    pub v_max_mps: f64,
    pub horizon_s: f64,
    pub q_init_m: [f64; 2],
    pub q_final_m: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    pub beta0_db: f64,
    pub sigma2_dbm: f64,
    pub alpha: f64,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Invalid(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario file serializes")
    }

    pub fn to_raw(&self) -> RawScenario {
        RawScenario {
            sensors: self
                .sensors
                .iter()
                .map(|s| SensorSpec { position: Point::new(s.x_m, s.y_m), p_avg: dbm_to_watts(s.p_avg_dbm) })
                .collect(),
            altitude: self.uav.altitude_m,
            v_max: self.uav.v_max_mps,
            horizon: self.uav.horizon_s,
            q_init: Point::new(self.uav.q_init_m[0], self.uav.q_init_m[1]),
            q_final: Point::new(self.uav.q_final_m[0], self.uav.q_final_m[1]),
            channel: ChannelParams {
                beta0: db_to_linear(self.channel.beta0_db),
                sigma2: dbm_to_watts(self.channel.sigma2_dbm),
                alpha: self.channel.alpha,
            },
            gamma_min: self.gamma_min_db.map(db_to_linear),
            region: self.region_m.map(|r| Region { x_lo: r[0], x_hi: r[1], y_lo: r[2], y_hi: r[3] }),
        }
    }

    pub fn load(&self) -> Result<Scenario, ModelError> {
        validate_scenario(self.to_raw())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one_sensor(h: f64) -> Scenario {
        validate_scenario(RawScenario {
            sensors: vec![SensorSpec { position: Point::new(0.0, 0.0), p_avg: 1.0 }],
            altitude: h,
            v_max: 40.0,
            horizon: 10.0,
            q_init: Point::new(0.0, 0.0),
            q_final: Point::new(0.0, 0.0),
            channel: ChannelParams { beta0: 1e-3, sigma2: 1e-9, alpha: 2.8 },
            gamma_min: Some(10.0),
            region: None,
        })
        .unwrap()
    }

    #[test]
    fn unit_conversions() {
        assert_relative_eq!(dbm_to_watts(30.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(db_to_linear(-30.0), 1e-3, max_relative = 1e-12);
        assert_relative_eq!(db_to_linear(27.4), 549.5408738576248, max_relative = 1e-12);
        assert_relative_eq!(watts_to_dbm(dbm_to_watts(17.3)), 17.3, max_relative = 1e-12);
    }

    #[test]
    fn distances() {
        let scn = one_sensor(50.0);
        assert_relative_eq!(distance(Point::new(0.0, 0.0), 0, &scn), 50.0);
        assert_relative_eq!(distance(Point::new(30.0, 40.0), 0, &scn), 5000f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(distance(Point::new(80.0, 0.0), 0, &scn), 94.33981132056603, max_relative = 1e-12);
    }

    #[test]
    fn amplitude_and_single_sensor_snr() {
        let scn = one_sensor(50.0);
        let a = channel_amplitude(Point::new(0.0, 0.0), 0, &scn);
        assert_relative_eq!(a, (1e-3 * 50f64.powf(-2.8)).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(a, 1.3226e-4, max_relative = 1e-4);
        assert!(channel_amplitude(Point::new(100.0, 0.0), 0, &scn) < a);
        let s = snr(Point::new(0.0, 0.0), &PowerVector::new(vec![1.0]), &scn);
        assert_relative_eq!(s, 17.49, max_relative = 1e-3);
        assert_relative_eq!(rate_from_snr(s), 4.209, max_relative = 1e-3);
        assert_eq!(rate_from_snr(1.0), 1.0);
    }

    #[test]
    fn outage_boundary_is_non_outage() {
        let scn = one_sensor(50.0);
        let q = Point::new(0.0, 0.0);
        let p = PowerVector::new(vec![1.0]);
        let s = snr(q, &p, &scn);
        assert_eq!(outage_indicator(q, &p, &scn.with_gamma_min(Some(s))).unwrap(), 0);
        assert_eq!(outage_indicator(q, &p, &scn.with_gamma_min(Some(s + 1e-12))).unwrap(), 1);
        assert_eq!(outage_indicator(q, &PowerVector::zeros(1), &scn).unwrap(), 1);
        assert_eq!(
            outage_indicator(q, &p, &scn.with_gamma_min(None)),
            Err(ModelError::MissingThreshold)
        );
    }

    #[test]
    fn validation_errors() {
        let base = one_sensor(50.0).to_raw();
        let far = RawScenario {
            horizon: 5.0,
            q_init: Point::new(0.0, 0.0),
            q_final: Point::new(200.0, 200.0),
            region: None,
            ..base.clone()
        };
        assert!(matches!(validate_scenario(far), Err(ModelError::InfeasibleHorizon { .. })));
        let pinned = RawScenario { horizon: 0.0, ..base.clone() };
        assert!(validate_scenario(pinned).is_ok());
        let bad_alt = RawScenario { altitude: 0.0, ..base.clone() };
        assert!(matches!(validate_scenario(bad_alt), Err(ModelError::NonPositiveParameter { .. })));
        let mut bad_budget = base.clone();
        bad_budget.sensors[0].p_avg = -1.0;
        assert!(matches!(validate_scenario(bad_budget), Err(ModelError::NonPositiveParameter { .. })));
        let small_region = RawScenario {
            region: Some(Region { x_lo: 1.0, x_hi: 2.0, y_lo: 0.0, y_hi: 1.0 }),
            ..base
        };
        assert!(matches!(validate_scenario(small_region), Err(ModelError::Invalid(_))));
    }

    #[test]
    fn zero_power_plan_metrics() {
        let scn = one_sensor(50.0);
        let plan = DiscretePlan {
            slot_len: 1.0,
            waypoints: vec![Point::new(0.0, 0.0); 4],
            powers: vec![vec![0.0]; 4],
        };
        let m = evaluate_plan(&plan, &scn);
        assert_eq!(m.avg_rate, 0.0);
        assert_eq!(m.outage_prob, Some(1.0));
        plan.check(&scn).unwrap();
    }
}
