//! The proposed optimizer and its three baselines on a shared drop.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::drop::ScenarioDrop;
use super::scenario::Scenario;
use crate::beamforming::{check_rate_constraints, BeamformingSolution};
use crate::error::{Error, Result};
use crate::geometry::{count_violating_antennas, flatten_positions, Vec3};
use crate::optimizer::fitness::PlacementObjective;
use crate::optimizer::{self, Objective, SwarmConfig, TraceRecord};
use crate::units::watts_to_dbm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Pruned swarm over transmit and receive positions.
    Proposed,
    /// Same search without pruning.
    MaPso,
    /// Pruned swarm over transmit positions only; receivers stay centred.
    MaBs,
    /// Fixed half-wavelength ULA and centred receivers.
    Fpa,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Proposed,
        SchemeKind::MaPso,
        SchemeKind::MaBs,
        SchemeKind::Fpa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Proposed => "proposed",
            SchemeKind::MaPso => "ma-pso",
            SchemeKind::MaBs => "ma-bs",
            SchemeKind::Fpa => "fpa",
        }
    }

    /// Whether the scheme moves any antenna.
    pub fn is_movable(self) -> bool {
        self != SchemeKind::Fpa
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown scheme {s:?}; expected proposed, ma-pso, ma-bs or fpa"
                ))
            })
    }
}

/// Outcome of one scheme on one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub scheme: SchemeKind,
    pub seed: u64,
    /// Transmit power of the returned beamformers, W; `+inf` when none.
    pub power_w: f64,
    pub evaluations: usize,
    pub evaluations_after_init: usize,
    /// Optimal beamformers, no spacing violation and every rate met.
    pub feasible: bool,
    pub penalty: f64,
    pub transmit: Vec<Vec3>,
    pub receive_local: Vec<Vec3>,
    pub solution: Option<BeamformingSolution>,
    pub trace: Vec<TraceRecord>,
}

impl ExperimentResult {
    pub fn power_dbm(&self) -> f64 {
        watts_to_dbm(self.power_w)
    }
}

/// Half-wavelength ULA along the global x axis, centred at the origin.
pub fn fixed_ula(antennas: usize, wavelength: f64) -> Vec<Vec3> {
    let mid = (antennas as f64 - 1.0) / 2.0;
    (0..antennas)
        .map(|n| Vec3::new((n as f64 - mid) * wavelength / 2.0, 0.0, 0.0))
        .collect()
}

/// Swarm settings a scheme uses given the scenario's.
pub fn scheme_swarm(kind: SchemeKind, base: &SwarmConfig, seed: u64) -> SwarmConfig {
    let cfg = SwarmConfig {
        seed,
        ..base.clone()
    };
    match kind {
        SchemeKind::MaPso => cfg.without_pruning(),
        _ => cfg,
    }
}

/// Runs `kind` on `drop`. The swarm is seeded with `seed`, normally the same
/// seed that produced the drop.
pub fn run_scheme(
    kind: SchemeKind,
    scenario: &Scenario,
    drop: &ScenarioDrop,
    seed: u64,
) -> Result<ExperimentResult> {
    scenario.validate()?;
    let budget = scenario.link_budget()?;
    let objective = PlacementObjective::new(
        &drop.channel,
        &budget,
        scenario.transmit_antennas,
        scenario.min_spacing_m(),
        scenario.swarm.penalty_factor,
    )?;

    let (position, evaluations, evaluations_after_init, trace, solution, penalty) = match kind {
        SchemeKind::Fpa => {
            let t = fixed_ula(scenario.transmit_antennas, scenario.wavelength());
            let r = vec![Vec3::zeros(); scenario.users];
            let u = flatten_positions(&t, &r);
            let e = objective.evaluate(&u)?;
            let trace = vec![TraceRecord {
                iteration: 0,
                residual_particles: 1,
                best_fitness: e.fitness,
                penalty: e.penalty,
                cumulative_evaluations: 1,
            }];
            (u, 1, 1, trace, e.solution, e.penalty)
        }
        _ => {
            let bounds = scenario.placement_bounds(kind != SchemeKind::MaBs)?;
            let cfg = scheme_swarm(kind, &scenario.swarm, seed);
            match optimizer::run(&objective, bounds, cfg.clone()) {
                Ok(out) => {
                    let after = out.evaluations_after_init();
                    (
                        out.best_position,
                        out.evaluations,
                        after,
                        out.trace,
                        out.solution,
                        out.best_penalty,
                    )
                }
                Err(Error::NoFeasibleParticle { evaluations, .. }) => {
                    log::warn!("{kind} seed {seed}: no feasible particle");
                    let u = vec![0.0; objective.dimension()];
                    (
                        u,
                        evaluations,
                        evaluations - cfg.particles,
                        Vec::new(),
                        None,
                        0.0,
                    )
                }
                Err(e) => return Err(e),
            }
        }
    };

    let (transmit, receive_local) = objective.split(&position)?;
    let feasible = match &solution {
        Some(s) if s.is_optimal() => {
            let channels = drop.channel.channels(&transmit, &receive_local)?;
            count_violating_antennas(&transmit, scenario.min_spacing_m()) == 0
                && check_rate_constraints(
                    &channels,
                    &s.beamformers,
                    &budget.noise_w,
                    &budget.rate_targets,
                )
                .into_iter()
                .all(|ok| ok)
        }
        _ => false,
    };
    Ok(ExperimentResult {
        scheme: kind,
        seed,
        power_w: solution.as_ref().map_or(f64::INFINITY, |s| s.total_power),
        evaluations,
        evaluations_after_init,
        feasible,
        penalty,
        transmit,
        receive_local,
        solution,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::super::drop::drop_scenario;
    use super::*;

    fn small() -> Scenario {
        let mut s = Scenario::default();
        s.swarm.particles = 6;
        s.swarm.iterations = 5;
        s
    }

    #[test]
    fn names_round_trip() {
        for k in SchemeKind::ALL {
            assert_eq!(k.name().parse::<SchemeKind>().unwrap(), k);
        }
        assert!("pso".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn ula_is_centred_with_half_wavelength_spacing() {
        let t = fixed_ula(4, 0.01);
        assert!((t[0].x + 0.0075).abs() < 1e-15);
        assert_eq!(t[3].x, -t[0].x);
        assert!(t
            .windows(2)
            .all(|w| ((w[1] - w[0]).norm() - 0.005).abs() < 1e-15));
    }

    #[test]
    fn ulas_never_violate_half_wavelength_spacing() {
        let lambda = 299_792_458.0 / 28e9;
        for n in 2..=16 {
            assert_eq!(
                count_violating_antennas(&fixed_ula(n, lambda), lambda / 2.0),
                0,
                "N = {n}"
            );
        }
    }

    #[test]
    fn fpa_uses_one_evaluation() {
        let s = small();
        let d = drop_scenario(&s, 1).unwrap();
        let r = run_scheme(SchemeKind::Fpa, &s, &d, 1).unwrap();
        assert_eq!(r.evaluations, 1);
        assert!(r.feasible);
        assert!(r.receive_local.iter().all(|x| *x == Vec3::zeros()));
    }

    #[test]
    fn evaluation_counts_follow_the_schedules() {
        let s = small();
        let d = drop_scenario(&s, 2).unwrap();
        let pso = run_scheme(SchemeKind::MaPso, &s, &d, 2).unwrap();
        assert_eq!(pso.evaluations, 6 + 6 * 5);
        let prop = run_scheme(SchemeKind::Proposed, &s, &d, 2).unwrap();
        assert_eq!(prop.evaluations, s.swarm.evaluation_budget());
    }

    #[test]
    fn ma_bs_keeps_receivers_centred() {
        let s = small();
        let d = drop_scenario(&s, 3).unwrap();
        let r = run_scheme(SchemeKind::MaBs, &s, &d, 3).unwrap();
        assert!(r.receive_local.iter().all(|x| *x == Vec3::zeros()));
        assert!(r.feasible);
    }

    #[test]
    fn proposed_moves_receivers_inside_their_regions() {
        let s = small();
        let d = drop_scenario(&s, 4).unwrap();
        let r = run_scheme(SchemeKind::Proposed, &s, &d, 4).unwrap();
        let region = s.receive_region().unwrap();
        assert!(r.receive_local.iter().all(|x| region.contains(x)));
        assert!(r.receive_local.iter().any(|x| *x != Vec3::zeros()));
        assert!(r
            .trace
            .windows(2)
            .all(|w| w[1].best_fitness <= w[0].best_fitness));
    }
}
