//! Spherical-wave Rician channels between the transmit array and each user.
//!
//! A user's channel is the weighted sum of a line-of-sight term and a
//! single-bounce scattered term,
//!
//! ```text
//! h_k = sqrt(κ/(κ+1)) · ρ_k a(t, r_k)
//!     + sqrt(1/(κ+1)) · (1/√L) Σ_l ς_l ρ̄ᴵ_l a(t, r̄_l) ρ̄ᴵᴵ_l exp(-j 2π/λ ‖r̄_l - r_k‖)
//! ```
//!
//! where `a(t, x)` is the exact-distance steering vector. Gains and reflection
//! coefficients are frozen in a [`ChannelDrop`] so the channel can be
//! re-evaluated at arbitrary antenna positions during the search.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{local_to_global, Rotation, Vec3};
use crate::units::SPEED_OF_LIGHT;

pub type ChannelVector = DVector<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarrierConfig {
    pub frequency_hz: f64,
    pub wavelength: f64,
}

impl CarrierConfig {
    pub fn from_frequency(frequency_hz: f64) -> Result<Self> {
        if !(frequency_hz > 0.0) || !frequency_hz.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "carrier frequency must be positive, got {frequency_hz}"
            )));
        }
        Ok(CarrierConfig {
            frequency_hz,
            wavelength: SPEED_OF_LIGHT / frequency_hz,
        })
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }
}

/// `exp(-j 2π/λ ‖t_n - x‖)` for every transmit antenna.
pub fn steering_vector(transmit: &[Vec3], x: &Vec3, wavelength: f64) -> ChannelVector {
    let k = 2.0 * PI / wavelength;
    DVector::from_iterator(
        transmit.len(),
        transmit
            .iter()
            .map(|t| Complex64::from_polar(1.0, -k * (t - x).norm())),
    )
}

pub fn los_component(
    transmit: &[Vec3],
    receiver: &Vec3,
    gain: f64,
    wavelength: f64,
) -> ChannelVector {
    steering_vector(transmit, receiver, wavelength) * Complex64::new(gain, 0.0)
}

/// One point scatterer of a user's drop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub position: Vec3,
    /// Complex reflection coefficient, drawn once per drop.
    pub reflection: Complex64,
    /// Amplitude gain of the base-station-to-scatterer segment.
    pub gain_bs: f64,
    /// Amplitude gain of the scatterer-to-user segment.
    pub gain_user: f64,
}

/// Unnormalized single-bounce sum over `scatterers`.
pub fn nlos_component(
    transmit: &[Vec3],
    scatterers: &[Scatterer],
    receiver: &Vec3,
    wavelength: f64,
) -> ChannelVector {
    let k = 2.0 * PI / wavelength;
    let mut acc = ChannelVector::zeros(transmit.len());
    for s in scatterers {
        let second_hop = Complex64::from_polar(s.gain_user, -k * (s.position - receiver).norm());
        let coeff = s.reflection * second_hop * s.gain_bs;
        for (h, t) in acc.iter_mut().zip(transmit) {
            *h += coeff * Complex64::from_polar(1.0, -k * (t - s.position).norm());
        }
    }
    acc
}

/// Rician combination `sqrt(κ/(κ+1)) los + sqrt(1/(κ+1)) nlos`, κ linear.
pub fn assemble_channel(
    los: &ChannelVector,
    nlos: &ChannelVector,
    rician_factor: f64,
) -> Result<ChannelVector> {
    if los.len() != nlos.len() {
        return Err(Error::Dimension(format!(
            "LoS length {} vs NLoS length {}",
            los.len(),
            nlos.len()
        )));
    }
    if !(rician_factor > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Rician factor must be positive, got {rician_factor}"
        )));
    }
    let (los_w, nlos_w) = rician_weights(rician_factor);
    Ok(los * Complex64::new(los_w, 0.0) + nlos * Complex64::new(nlos_w, 0.0))
}

/// `(sqrt(κ/(κ+1)), sqrt(1/(κ+1)))`.
pub fn rician_weights(rician_factor: f64) -> (f64, f64) {
    let denom = rician_factor + 1.0;
    ((rician_factor / denom).sqrt(), (1.0 / denom).sqrt())
}

/// Free-space amplitude gain `λ / (4π d)`.
pub fn free_space_amplitude(distance: f64, wavelength: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "free-space gain needs a positive distance, got {distance}"
        )));
    }
    Ok(wavelength / (4.0 * PI * distance))
}

/// How the two segment gains of a one-bounce path are set. All gains are
/// evaluated at the region centres and stay fixed while antennas move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NlosGainModel {
    /// Product equals the user's LoS amplitude `λ / (4π ‖r_o‖)`, so the
    /// Rician factor is exactly the LoS-to-scattered power ratio.
    MatchedLos,
    /// Product is the free-space amplitude over the unfolded path
    /// `‖r̄‖ + ‖r̄ - r_o‖`.
    UnfoldedPath,
    /// Each segment gets its own free-space amplitude, `λ / (4π ‖r̄‖)` and
    /// `λ / (4π ‖r̄ - r_o‖)`.
    PerSegment,
}

impl NlosGainModel {
    pub fn name(self) -> &'static str {
        match self {
            NlosGainModel::MatchedLos => "matched_los",
            NlosGainModel::UnfoldedPath => "unfolded_path",
            NlosGainModel::PerSegment => "per_segment",
        }
    }
}

/// `(ρ̄ᴵ, ρ̄ᴵᴵ)` for a scatterer seen by the user whose region is centred at
/// `user_origin`. The first two models split their product evenly.
pub fn bounce_gains(
    model: NlosGainModel,
    scatterer: &Vec3,
    user_origin: &Vec3,
    wavelength: f64,
) -> Result<(f64, f64)> {
    match model {
        NlosGainModel::MatchedLos => {
            let g = free_space_amplitude(user_origin.norm(), wavelength)?.sqrt();
            Ok((g, g))
        }
        NlosGainModel::UnfoldedPath => {
            let path = scatterer.norm() + (scatterer - user_origin).norm();
            let g = free_space_amplitude(path, wavelength)?.sqrt();
            Ok((g, g))
        }
        NlosGainModel::PerSegment => Ok((
            free_space_amplitude(scatterer.norm(), wavelength)?,
            free_space_amplitude((scatterer - user_origin).norm(), wavelength)?,
        )),
    }
}

/// Frozen per-user randomness of a drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDrop {
    /// Centre of the user's receive region, global frame.
    pub origin: Vec3,
    pub rotation: Rotation,
    /// LoS amplitude gain `ρ_k`.
    pub los_gain: f64,
    pub scatterers: Vec<Scatterer>,
}

/// Everything needed to evaluate all user channels at any antenna placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDrop {
    pub seed: u64,
    pub carrier: CarrierConfig,
    /// Linear Rician factor κ.
    pub rician_factor: f64,
    pub users: Vec<UserDrop>,
}

impl ChannelDrop {
    pub fn users(&self) -> usize {
        self.users.len()
    }

    /// Channel of user `k` with its receive antenna at `receive_local`
    /// (user frame). The scattered sum is divided by `√L` so its mean power
    /// does not grow with the scatterer count.
    pub fn user_channel(
        &self,
        k: usize,
        transmit: &[Vec3],
        receive_local: &Vec3,
    ) -> Result<ChannelVector> {
        let user = self
            .users
            .get(k)
            .ok_or_else(|| Error::Dimension(format!("user {k} out of range")))?;
        let lambda = self.carrier.wavelength;
        let receiver = local_to_global(&user.origin, &user.rotation, receive_local);
        let los = los_component(transmit, &receiver, user.los_gain, lambda);
        let mut nlos = nlos_component(transmit, &user.scatterers, &receiver, lambda);
        if !user.scatterers.is_empty() {
            nlos /= Complex64::new((user.scatterers.len() as f64).sqrt(), 0.0);
        }
        assemble_channel(&los, &nlos, self.rician_factor)
    }

    pub fn channels(
        &self,
        transmit: &[Vec3],
        receive_local: &[Vec3],
    ) -> Result<Vec<ChannelVector>> {
        if receive_local.len() != self.users.len() {
            return Err(Error::Dimension(format!(
                "{} receive positions for {} users",
                receive_local.len(),
                self.users.len()
            )));
        }
        receive_local
            .iter()
            .enumerate()
            .map(|(k, r)| self.user_channel(k, transmit, r))
            .collect()
    }

    /// Expected `‖h_k‖²` over the reflection coefficients, assuming unit
    /// variance: `N (κ ρ_k² + mean_l (ρ̄ᴵ_l ρ̄ᴵᴵ_l)²) / (κ + 1)`.
    pub fn expected_power(&self, k: usize, antennas: usize) -> f64 {
        let u = &self.users[k];
        let (los_w, nlos_w) = rician_weights(self.rician_factor);
        let los = u.los_gain.powi(2);
        let nlos = if u.scatterers.is_empty() {
            0.0
        } else {
            u.scatterers
                .iter()
                .map(|s| (s.gain_bs * s.gain_user).powi(2))
                .sum::<f64>()
                / u.scatterers.len() as f64
        };
        antennas as f64 * (los_w.powi(2) * los + nlos_w.powi(2) * nlos)
    }
}
