//! Fitness of an antenna placement: minimum transmit power for the induced
//! channels plus a spacing penalty on the transmit array.

use crate::beamforming::{minimize_power, LinkBudget};
use crate::channel::ChannelDrop;
use crate::error::{Error, Result};
use crate::geometry::{count_violating_antennas, unflatten_positions, Vec3};

use super::{Evaluation, Objective, INFEASIBLE_POWER};

/// Scores particles `[t_1, …, t_N, r̃_1, …, r̃_K]` against one channel drop.
#[derive(Debug, Clone)]
pub struct PlacementObjective<'a> {
    drop: &'a ChannelDrop,
    budget: &'a LinkBudget,
    targets: Vec<f64>,
    antennas: usize,
    min_spacing: f64,
    penalty_factor: f64,
}

impl<'a> PlacementObjective<'a> {
    pub fn new(
        drop: &'a ChannelDrop,
        budget: &'a LinkBudget,
        antennas: usize,
        min_spacing: f64,
        penalty_factor: f64,
    ) -> Result<Self> {
        if budget.users() != drop.users() {
            return Err(Error::Dimension(format!(
                "link budget for {} users, drop has {}",
                budget.users(),
                drop.users()
            )));
        }
        if antennas == 0 {
            return Err(Error::InvalidArgument(
                "need at least one transmit antenna".into(),
            ));
        }
        if !(min_spacing >= 0.0) || !(penalty_factor >= 0.0) {
            return Err(Error::InvalidArgument(
                "spacing and penalty factor must be non-negative".into(),
            ));
        }
        Ok(PlacementObjective {
            drop,
            budget,
            targets: budget.sinr_targets(),
            antennas,
            min_spacing,
            penalty_factor,
        })
    }

    /// Length of a particle position vector, `3 (N + K)`.
    pub fn dimension(&self) -> usize {
        3 * (self.antennas + self.drop.users())
    }

    pub fn split(&self, u: &[f64]) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
        unflatten_positions(u, self.antennas, self.drop.users())
    }
}

impl Objective for PlacementObjective<'_> {
    fn evaluate(&self, u: &[f64]) -> Result<Evaluation> {
        let (transmit, receive) = self.split(u)?;
        let channels = self.drop.channels(&transmit, &receive)?;
        let penalty =
            self.penalty_factor * count_violating_antennas(&transmit, self.min_spacing) as f64;
        let solution = match minimize_power(&channels, &self.targets, &self.budget.noise_w) {
            Ok(s) => s,
            // channels that vanish entirely leave nothing to solve for
            Err(Error::InvalidArgument(_)) => {
                return Ok(Evaluation {
                    fitness: INFEASIBLE_POWER + penalty,
                    penalty,
                    solution: None,
                })
            }
            Err(e) => return Err(e),
        };
        let power = if solution.is_optimal() {
            solution.total_power
        } else {
            INFEASIBLE_POWER
        };
        Ok(Evaluation {
            fitness: power + penalty,
            penalty,
            solution: solution.is_optimal().then_some(solution),
        })
    }
}
