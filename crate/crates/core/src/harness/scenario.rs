//! Simulation scenario and its flat `key = value` text format.
//!
//! ```text
//! # desk-scale default
//! transmit_antennas = 4
//! users = 3
//! rate_target_bps_hz = 3
//! ```
//!
//! Blank lines and `#` comments are ignored. Every key is optional and falls
//! back to [`Scenario::default`]; unknown keys are rejected.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::beamforming::LinkBudget;
use crate::channel::{CarrierConfig, NlosGainModel};
use crate::error::{Error, Result};
use crate::geometry::{Plane, RegionBox, Vec3};
use crate::optimizer::{Bounds, SwarmConfig};
use crate::units::db_to_linear;

/// Orientation of the user devices relative to the global frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationMode {
    Identity,
    /// One seeded random orthogonal matrix per user.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub carrier_frequency_hz: f64,
    pub transmit_antennas: usize,
    pub users: usize,
    /// Scatterers per user.
    pub scatterers: usize,
    /// Side of the square transmit region, in wavelengths.
    pub transmit_region_wavelengths: f64,
    /// Side of each square receive region, in wavelengths.
    pub receive_region_wavelengths: f64,
    pub distance_min_m: f64,
    pub distance_max_m: f64,
    pub rician_factor_db: f64,
    pub noise_power_dbm: f64,
    pub rate_target_bps_hz: f64,
    pub min_spacing_wavelengths: f64,
    pub rotations: RotationMode,
    pub nlos_gain: NlosGainModel,
    pub seed: u64,
    pub swarm: SwarmConfig,
}

impl Default for Scenario {
    /// Desk-scale version of the reference setup: 28 GHz, 3 dB Rician factor,
    /// users 50 to 200 m away, with fewer antennas, users and particles.
    fn default() -> Self {
        Scenario {
            carrier_frequency_hz: 28e9,
            transmit_antennas: 4,
            users: 3,
            scatterers: 5,
            transmit_region_wavelengths: 100.0,
            receive_region_wavelengths: 1.0,
            distance_min_m: 50.0,
            distance_max_m: 200.0,
            rician_factor_db: 3.0,
            noise_power_dbm: -80.0,
            rate_target_bps_hz: 3.0,
            min_spacing_wavelengths: 0.5,
            rotations: RotationMode::Identity,
            nlos_gain: NlosGainModel::MatchedLos,
            seed: 0,
            swarm: SwarmConfig {
                particles: 20,
                iterations: 30,
                ..SwarmConfig::default()
            },
        }
    }
}

/// Keys accepted by [`Scenario::set`], in output order.
pub const SCENARIO_KEYS: &[&str] = &[
    "carrier_frequency_hz",
    "transmit_antennas",
    "users",
    "scatterers",
    "transmit_region_wavelengths",
    "receive_region_wavelengths",
    "distance_min_m",
    "distance_max_m",
    "rician_factor_db",
    "noise_power_dbm",
    "rate_target_bps_hz",
    "min_spacing_wavelengths",
    "rotations",
    "nlos_gain",
    "seed",
    "particles",
    "iterations",
    "pruning_ratio",
    "cognitive",
    "social",
    "inertia_min",
    "inertia_max",
    "penalty_factor",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| Error::InvalidValue {
        key: key.to_string(),
        message: format!("{value:?}: {e}"),
    })
}

impl Scenario {
    /// Assigns one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "carrier_frequency_hz" => self.carrier_frequency_hz = parse_value(key, value)?,
            "transmit_antennas" => self.transmit_antennas = parse_value(key, value)?,
            "users" => self.users = parse_value(key, value)?,
            "scatterers" => self.scatterers = parse_value(key, value)?,
            "transmit_region_wavelengths" => {
                self.transmit_region_wavelengths = parse_value(key, value)?
            }
            "receive_region_wavelengths" => {
                self.receive_region_wavelengths = parse_value(key, value)?
            }
            "distance_min_m" => self.distance_min_m = parse_value(key, value)?,
            "distance_max_m" => self.distance_max_m = parse_value(key, value)?,
            "rician_factor_db" => self.rician_factor_db = parse_value(key, value)?,
            "noise_power_dbm" => self.noise_power_dbm = parse_value(key, value)?,
            "rate_target_bps_hz" => self.rate_target_bps_hz = parse_value(key, value)?,
            "min_spacing_wavelengths" => self.min_spacing_wavelengths = parse_value(key, value)?,
            "rotations" => {
                self.rotations = match value {
                    "identity" => RotationMode::Identity,
                    "random" => RotationMode::Random,
                    _ => {
                        return Err(Error::InvalidValue {
                            key: key.into(),
                            message: format!("{value:?}: expected identity or random"),
                        })
                    }
                }
            }
            "nlos_gain" => {
                self.nlos_gain = [
                    NlosGainModel::MatchedLos,
                    NlosGainModel::UnfoldedPath,
                    NlosGainModel::PerSegment,
                ]
                .into_iter()
                .find(|m| m.name() == value)
                .ok_or_else(|| Error::InvalidValue {
                    key: key.into(),
                    message: format!(
                        "{value:?}: expected matched_los, unfolded_path or per_segment"
                    ),
                })?
            }
            "seed" => self.seed = parse_value(key, value)?,
            "particles" => self.swarm.particles = parse_value(key, value)?,
            "iterations" => self.swarm.iterations = parse_value(key, value)?,
            "pruning_ratio" => self.swarm.pruning_ratio = parse_value(key, value)?,
            "cognitive" => self.swarm.cognitive = parse_value(key, value)?,
            "social" => self.swarm.social = parse_value(key, value)?,
            "inertia_min" => self.swarm.inertia_min = parse_value(key, value)?,
            "inertia_max" => self.swarm.inertia_max = parse_value(key, value)?,
            "penalty_factor" => self.swarm.penalty_factor = parse_value(key, value)?,
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Parses the text format on top of the defaults and validates the
    /// result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Scenario::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ScenarioParse {
                line: i + 1,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            s.set(key.trim(), value.trim())?;
        }
        s.validate()?;
        Ok(s)
    }

    /// Text form accepted by [`Scenario::parse`].
    pub fn to_text(&self) -> String {
        let sw = &self.swarm;
        let rotations = match self.rotations {
            RotationMode::Identity => "identity",
            RotationMode::Random => "random",
        };
        let values: Vec<String> = vec![
            self.carrier_frequency_hz.to_string(),
            self.transmit_antennas.to_string(),
            self.users.to_string(),
            self.scatterers.to_string(),
            self.transmit_region_wavelengths.to_string(),
            self.receive_region_wavelengths.to_string(),
            self.distance_min_m.to_string(),
            self.distance_max_m.to_string(),
            self.rician_factor_db.to_string(),
            self.noise_power_dbm.to_string(),
            self.rate_target_bps_hz.to_string(),
            self.min_spacing_wavelengths.to_string(),
            rotations.to_string(),
            self.nlos_gain.name().to_string(),
            self.seed.to_string(),
            sw.particles.to_string(),
            sw.iterations.to_string(),
            sw.pruning_ratio.to_string(),
            sw.cognitive.to_string(),
            sw.social.to_string(),
            sw.inertia_min.to_string(),
            sw.inertia_max.to_string(),
            sw.penalty_factor.to_string(),
        ];
        let mut out = String::new();
        for (k, v) in SCENARIO_KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: &str| {
            Err(Error::InvalidValue {
                key: key.into(),
                message: message.into(),
            })
        };
        if !(self.carrier_frequency_hz > 0.0) || !self.carrier_frequency_hz.is_finite() {
            return bad("carrier_frequency_hz", "must be positive");
        }
        if self.transmit_antennas == 0 {
            return bad("transmit_antennas", "must be at least 1");
        }
        if self.users == 0 {
            return bad("users", "must be at least 1");
        }
        if !(self.transmit_region_wavelengths >= 0.0)
            || !self.transmit_region_wavelengths.is_finite()
        {
            return bad("transmit_region_wavelengths", "must be non-negative");
        }
        if !(self.receive_region_wavelengths >= 0.0) || !self.receive_region_wavelengths.is_finite()
        {
            return bad("receive_region_wavelengths", "must be non-negative");
        }
        if !(self.distance_min_m > 0.0) || !self.distance_min_m.is_finite() {
            return bad("distance_min_m", "must be positive");
        }
        if !(self.distance_max_m >= self.distance_min_m) || !self.distance_max_m.is_finite() {
            return bad("distance_max_m", "must be at least distance_min_m");
        }
        if !self.rician_factor_db.is_finite() {
            return bad("rician_factor_db", "must be finite");
        }
        if !self.noise_power_dbm.is_finite() {
            return bad("noise_power_dbm", "must be finite");
        }
        if !(self.rate_target_bps_hz > 0.0) || !self.rate_target_bps_hz.is_finite() {
            return bad("rate_target_bps_hz", "must be positive");
        }
        if !(self.min_spacing_wavelengths >= 0.0) || !self.min_spacing_wavelengths.is_finite() {
            return bad("min_spacing_wavelengths", "must be non-negative");
        }
        self.swarm.validate().map_err(|e| Error::InvalidValue {
            key: "swarm".into(),
            message: e.to_string(),
        })
    }

    pub fn carrier(&self) -> Result<CarrierConfig> {
        CarrierConfig::from_frequency(self.carrier_frequency_hz)
    }

    pub fn wavelength(&self) -> f64 {
        crate::units::SPEED_OF_LIGHT / self.carrier_frequency_hz
    }

    pub fn rician_factor(&self) -> f64 {
        db_to_linear(self.rician_factor_db)
    }

    pub fn min_spacing_m(&self) -> f64 {
        self.min_spacing_wavelengths * self.wavelength()
    }

    pub fn link_budget(&self) -> Result<LinkBudget> {
        LinkBudget::uniform(self.users, self.noise_power_dbm, self.rate_target_bps_hz)
    }

    /// Transmit region: global x–z plane centred at the origin.
    pub fn transmit_region(&self) -> Result<RegionBox> {
        RegionBox::square(
            Vec3::zeros(),
            self.transmit_region_wavelengths * self.wavelength(),
            Plane::Xz,
        )
    }

    /// Receive region of every user: local x–z plane centred at the local
    /// origin.
    pub fn receive_region(&self) -> Result<RegionBox> {
        RegionBox::square(
            Vec3::zeros(),
            self.receive_region_wavelengths * self.wavelength(),
            Plane::Xz,
        )
    }

    /// Particle bounds `[t_1, …, t_N, r̃_1, …, r̃_K]`; receive coordinates are
    /// pinned at zero when `receive_movable` is false.
    pub fn placement_bounds(&self, receive_movable: bool) -> Result<Bounds> {
        let t = self.transmit_region()?;
        let r = if receive_movable {
            self.receive_region()?
        } else {
            RegionBox::square(Vec3::zeros(), 0.0, Plane::Xz)?
        };
        let mut lower = Vec::with_capacity(3 * (self.transmit_antennas + self.users));
        let mut upper = Vec::with_capacity(lower.capacity());
        for _ in 0..self.transmit_antennas {
            lower.extend(t.lower());
            upper.extend(t.upper());
        }
        for _ in 0..self.users {
            lower.extend(r.lower());
            upper.extend(r.upper());
        }
        Bounds::new(lower, upper)
    }
}
