//! Uplink-downlink duality fixed point for power minimization.
//!
//! With noise-normalized channels `g_k = h_k / σ_k`, the optimal dual
//! (virtual uplink) powers are the least fixed point of
//!
//! ```text
//! λ_k = 1 / ((1 + 1/γ_k) g_kᴴ (I + Σ_i λ_i g_i g_iᴴ)⁻¹ g_k)
//! ```
//!
//! The map is a standard interference function, so iterating from `λ = 0`
//! increases monotonically to the fixed point when the targets are
//! achievable and diverges otherwise. The MMSE receivers at the fixed point
//! are the optimal downlink directions; the downlink powers then follow from a
//! `K × K` linear system that makes every SINR constraint tight.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{
    downlink_powers, noise_normalized, validate_problem, BeamformingSolution, SolveStatus,
};
use crate::channel::ChannelVector;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityOptions {
    pub max_iterations: usize,
    /// Stop when every dual power changes by less than this, relatively.
    pub tolerance: f64,
    /// Declare infeasibility once the dual powers exceed their first iterate
    /// by this factor.
    pub divergence_ratio: f64,
}

impl Default for DualityOptions {
    fn default() -> Self {
        DualityOptions {
            max_iterations: 20_000,
            tolerance: 1e-12,
            divergence_ratio: 1e10,
        }
    }
}

pub fn minimize_power_with(
    channels: &[ChannelVector],
    targets: &[f64],
    noise: &[f64],
    options: &DualityOptions,
) -> Result<BeamformingSolution> {
    let (users, antennas) = validate_problem(channels, targets, noise)?;
    let g = noise_normalized(channels, noise);

    let mut dual = vec![0.0; users];
    let mut first_sum = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let Some(receivers) = mmse_receivers(&g, &dual) else {
            return Ok(BeamformingSolution::failed(
                SolveStatus::Infeasible,
                users,
                antennas,
                iterations,
            ));
        };
        let mut change: f64 = 0.0;
        for k in 0..users {
            let q = g[k].dotc(&receivers[k]).re;
            let next = 1.0 / ((1.0 + 1.0 / targets[k]) * q);
            change = change.max((next - dual[k]).abs() / next);
            dual[k] = next;
        }
        let sum: f64 = dual.iter().sum();
        let first = *first_sum.get_or_insert(sum);
        if !sum.is_finite() || sum > options.divergence_ratio * first {
            return Ok(BeamformingSolution::failed(
                SolveStatus::Infeasible,
                users,
                antennas,
                iterations,
            ));
        }
        if change < options.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Ok(BeamformingSolution::failed(
            SolveStatus::MaxIterations,
            users,
            antennas,
            iterations,
        ));
    }
    let Some(mut directions) = mmse_receivers(&g, &dual) else {
        return Ok(BeamformingSolution::failed(
            SolveStatus::Infeasible,
            users,
            antennas,
            iterations,
        ));
    };
    for u in directions.iter_mut() {
        let norm = u.norm();
        *u /= Complex64::new(norm, 0.0);
    }

    let Some(powers) = downlink_powers(&g, &directions, targets) else {
        return Ok(BeamformingSolution::failed(
            SolveStatus::Infeasible,
            users,
            antennas,
            iterations,
        ));
    };
    let beamformers = directions
        .into_iter()
        .zip(&powers)
        .map(|(u, p)| u * Complex64::new(p.sqrt(), 0.0))
        .collect();
    Ok(BeamformingSolution::from_beamformers(
        channels,
        beamformers,
        noise,
        targets,
        iterations,
        SolveStatus::MaxIterations,
    ))
}

/// `(I + Σ_i λ_i g_i g_iᴴ)⁻¹ g_k` for every user.
fn mmse_receivers(g: &[ChannelVector], dual: &[f64]) -> Option<Vec<ChannelVector>> {
    let n = g[0].len();
    let mut cov = DMatrix::<Complex64>::identity(n, n);
    for (gi, &l) in g.iter().zip(dual) {
        if l != 0.0 {
            cov += gi * gi.adjoint() * Complex64::new(l, 0.0);
        }
    }
    let chol = cov.cholesky()?;
    Some(g.iter().map(|gk| chol.solve(gk)).collect())
}
