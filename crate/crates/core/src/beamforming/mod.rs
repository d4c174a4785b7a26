//! SINR bookkeeping and transmit power minimization under per-user SINR
//! targets.
//!
//! For fixed channels the beamforming subproblem
//!
//! ```text
//! minimize Σ_k ‖w_k‖²   s.t.   SINR_k(w) ≥ γ_k  for all k
//! ```
//!
//! is convex after the usual second-order cone reformulation. The production
//! path ([`minimize_power`]) solves it with the uplink-downlink duality fixed
//! point in [`duality`]; [`conic`] solves the cone program directly with an
//! interior-point method and is used to cross-check.

pub mod conic;
pub mod duality;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelVector;
use crate::error::{Error, Result};
use crate::units::dbm_to_watts;

/// Relative slack allowed on an SINR constraint of an `Optimal` solution.
pub const SINR_TOLERANCE: f64 = 1e-6;

/// Noise powers and rate requirements of all users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Noise power per user, watts.
    pub noise_w: Vec<f64>,
    /// Minimum achievable rate per user, bps/Hz.
    pub rate_targets: Vec<f64>,
}

impl LinkBudget {
    pub fn new(noise_w: Vec<f64>, rate_targets: Vec<f64>) -> Result<Self> {
        if noise_w.len() != rate_targets.len() {
            return Err(Error::Dimension(format!(
                "{} noise powers vs {} rate targets",
                noise_w.len(),
                rate_targets.len()
            )));
        }
        if let Some(s) = noise_w.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise power must be positive, got {s}"
            )));
        }
        if let Some(r) = rate_targets
            .iter()
            .find(|r| !(**r >= 0.0) || !r.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "rate target must be non-negative, got {r}"
            )));
        }
        Ok(LinkBudget {
            noise_w,
            rate_targets,
        })
    }

    /// Same noise (dBm) and rate target for `users` users.
    pub fn uniform(users: usize, noise_dbm: f64, rate_target: f64) -> Result<Self> {
        LinkBudget::new(
            vec![dbm_to_watts(noise_dbm); users],
            vec![rate_target; users],
        )
    }

    pub fn users(&self) -> usize {
        self.noise_w.len()
    }

    /// `γ_k = 2^{R_k} - 1`.
    pub fn sinr_targets(&self) -> Vec<f64> {
        self.rate_targets.iter().map(|&r| sinr_target(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamformingSolution {
    pub beamformers: Vec<ChannelVector>,
    /// `Σ ‖w_k‖²` in watts; `+inf` unless `status` is `Optimal`.
    pub total_power: f64,
    pub achieved_sinr: Vec<f64>,
    pub status: SolveStatus,
    /// Fixed-point or interior-point iterations spent.
    pub iterations: usize,
}

impl BeamformingSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub(crate) fn failed(
        status: SolveStatus,
        users: usize,
        antennas: usize,
        iterations: usize,
    ) -> Self {
        BeamformingSolution {
            beamformers: vec![ChannelVector::zeros(antennas); users],
            total_power: f64::INFINITY,
            achieved_sinr: vec![0.0; users],
            status,
            iterations,
        }
    }

    /// Builds a solution from beamformers: rotates each `w_k` so `h_kᴴ w_k`
    /// is real and non-negative, then checks the SINR targets. Falls back to
    /// `fallback` when a target is missed by more than [`SINR_TOLERANCE`].
    pub(crate) fn from_beamformers(
        channels: &[ChannelVector],
        mut beamformers: Vec<ChannelVector>,
        noise: &[f64],
        targets: &[f64],
        iterations: usize,
        fallback: SolveStatus,
    ) -> Self {
        for (w, h) in beamformers.iter_mut().zip(channels) {
            let g = h.dotc(w);
            if g.norm() > 0.0 {
                *w *= g.conj() / g.norm();
            }
        }
        let achieved: Vec<f64> = (0..channels.len())
            .map(|k| sinr(channels, &beamformers, noise, k))
            .collect();
        let meets = achieved
            .iter()
            .zip(targets)
            .all(|(s, g)| *s >= g * (1.0 - SINR_TOLERANCE));
        if !meets {
            return BeamformingSolution::failed(
                fallback,
                channels.len(),
                channels[0].len(),
                iterations,
            );
        }
        let total_power = beamformers.iter().map(|w| w.norm_squared()).sum();
        BeamformingSolution {
            beamformers,
            total_power,
            achieved_sinr: achieved,
            status: SolveStatus::Optimal,
            iterations,
        }
    }
}

/// `|h_kᴴ w_k|² / (Σ_{i≠k} |h_kᴴ w_i|² + σ_k²)`.
pub fn sinr(
    channels: &[ChannelVector],
    beamformers: &[ChannelVector],
    noise: &[f64],
    k: usize,
) -> f64 {
    let h = &channels[k];
    let mut interference = noise[k];
    let mut signal = 0.0;
    for (i, w) in beamformers.iter().enumerate() {
        let g = h.dotc(w).norm_sqr();
        if i == k {
            signal = g;
        } else {
            interference += g;
        }
    }
    signal / interference
}

/// `log2(1 + sinr)` in bps/Hz.
pub fn achievable_rate(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}

/// SINR needed for `rate` bps/Hz.
pub fn sinr_target(rate: f64) -> f64 {
    2f64.powf(rate) - 1.0
}

/// Per-user flag `R_k ≥ R_k^th - 1e-9`.
pub fn check_rate_constraints(
    channels: &[ChannelVector],
    beamformers: &[ChannelVector],
    noise: &[f64],
    rate_targets: &[f64],
) -> Vec<bool> {
    (0..channels.len())
        .map(|k| achievable_rate(sinr(channels, beamformers, noise, k)) >= rate_targets[k] - 1e-9)
        .collect()
}

/// Solves the power minimization with the duality fixed point and default
/// options.
pub fn minimize_power(
    channels: &[ChannelVector],
    targets: &[f64],
    noise: &[f64],
) -> Result<BeamformingSolution> {
    duality::minimize_power_with(
        channels,
        targets,
        noise,
        &duality::DualityOptions::default(),
    )
}

/// Shared input validation; returns `(users, antennas)`.
pub(crate) fn validate_problem(
    channels: &[ChannelVector],
    targets: &[f64],
    noise: &[f64],
) -> Result<(usize, usize)> {
    let users = channels.len();
    if users == 0 {
        return Err(Error::InvalidArgument(
            "at least one user is required".into(),
        ));
    }
    if targets.len() != users || noise.len() != users {
        return Err(Error::Dimension(format!(
            "{users} channels, {} targets, {} noise powers",
            targets.len(),
            noise.len()
        )));
    }
    let antennas = channels[0].len();
    if antennas == 0 {
        return Err(Error::InvalidArgument(
            "at least one antenna is required".into(),
        ));
    }
    if let Some(h) = channels.iter().find(|h| h.len() != antennas) {
        return Err(Error::Dimension(format!(
            "channel length {} vs {antennas}",
            h.len()
        )));
    }
    if channels
        .iter()
        .any(|h| h.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()))
    {
        return Err(Error::InvalidArgument(
            "channel entries must be finite".into(),
        ));
    }
    if channels.iter().any(|h| h.norm_squared() == 0.0) {
        return Err(Error::InvalidArgument("channels must be nonzero".into()));
    }
    if let Some(g) = targets.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "SINR targets must be positive, got {g}"
        )));
    }
    if let Some(s) = noise.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise power must be positive, got {s}"
        )));
    }
    Ok((users, antennas))
}

/// Channels divided by the noise standard deviation, which turns every noise
/// power into one without changing the SINRs.
/// Powers that make every SINR constraint tight for unit directions `u`:
/// `p_k |g_kᴴu_k|² / γ_k - Σ_{i≠k} p_i |g_kᴴu_i|² = 1`.
pub(crate) fn downlink_powers(
    g: &[ChannelVector],
    u: &[ChannelVector],
    targets: &[f64],
) -> Option<Vec<f64>> {
    let k = g.len();
    let m = DMatrix::from_fn(k, k, |row, col| {
        let c = g[row].dotc(&u[col]).norm_sqr();
        if row == col {
            c / targets[row]
        } else {
            -c
        }
    });
    let p = m.lu().solve(&DVector::from_element(k, 1.0))?;
    if p.iter().all(|x| x.is_finite() && *x > 0.0) {
        Some(p.iter().copied().collect())
    } else {
        None
    }
}

pub(crate) fn noise_normalized(channels: &[ChannelVector], noise: &[f64]) -> Vec<ChannelVector> {
    channels
        .iter()
        .zip(noise)
        .map(|(h, s)| h / Complex64::new(s.sqrt(), 0.0))
        .collect()
}
