//! Self-checks against closed forms and independent oracles, grouped into
//! suites for the command-line `validate` command.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::beamforming::conic::minimize_power_socp;
use crate::beamforming::{minimize_power, sinr, sinr_target, BeamformingSolution, SolveStatus};
use crate::channel::{
    assemble_channel, los_component, nlos_component, rician_weights, ChannelVector, Scatterer,
};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::harness::{drop_scenario, run_scheme, Scenario, SchemeKind};
use crate::optimizer::{self, prune_neighborhood, Bounds, Particle, SwarmConfig};
use crate::units::{db_to_linear, linear_to_db};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Channel,
    Beamforming,
    Optimizer,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "channel" => Ok(Suite::Channel),
            "beamforming" => Ok(Suite::Beamforming),
            "optimizer" => Ok(Suite::Optimizer),
            "all" => Ok(Suite::All),
            _ => Err(Error::InvalidArgument(format!(
                "unknown suite {s:?}; expected channel, beamforming, optimizer or all"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

pub fn run_suite(suite: Suite) -> Result<Vec<Check>> {
    Ok(match suite {
        Suite::Channel => channel_checks()?,
        Suite::Beamforming => beamforming_checks()?,
        Suite::Optimizer => optimizer_checks()?,
        Suite::All => {
            let mut all = channel_checks()?;
            all.extend(beamforming_checks()?);
            all.extend(optimizer_checks()?);
            all
        }
    })
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.random_range(-scale..scale),
                rng.random_range(-scale..scale),
                rng.random_range(-scale..scale),
            )
        })
        .collect()
}

/// Largest `| |a_n| - 1 |` over random geometries.
pub fn steering_modulus_error(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda = 299_792_458.0 / 28e9;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let t = random_points(&mut rng, 8, 1.0);
        let x = random_points(&mut rng, 1, 200.0)[0];
        for a in crate::channel::steering_vector(&t, &x, lambda).iter() {
            worst = worst.max((a.norm() - 1.0).abs());
        }
    }
    worst
}

/// Empirical LoS and scattered power fractions of `E‖h‖²` over random
/// reflection coefficients, next to `κ/(κ+1)` and `1/(κ+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    pub los_fraction: f64,
    pub nlos_fraction: f64,
    pub expected_los: f64,
    pub expected_nlos: f64,
}

impl PowerSplit {
    pub fn max_relative_error(&self) -> f64 {
        ((self.los_fraction - self.expected_los) / self.expected_los)
            .abs()
            .max(((self.nlos_fraction - self.expected_nlos) / self.expected_nlos).abs())
    }
}

/// Monte Carlo over `ς ~ CN(0, 1)` with fixed geometry and equal LoS and
/// per-path gains, so the scattered component has the LoS power on average.
pub fn rician_power_split(kappa_db: f64, samples: usize, seed: u64) -> Result<PowerSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda = 299_792_458.0 / 28e9;
    let kappa = db_to_linear(kappa_db);
    let t = random_points(&mut rng, 4, 0.5);
    let user = Vec3::new(10.0, 80.0, 0.0);
    let rho = 1.0;
    let positions: Vec<Vec3> = (0..6)
        .map(|_| {
            Vec3::new(
                rng.random_range(-60.0..60.0),
                rng.random_range(40.0..150.0),
                0.0,
            )
        })
        .collect();
    let los = los_component(&t, &user, rho, lambda);
    let (los_w, _) = rician_weights(kappa);
    let los_power = los.norm_squared() * los_w * los_w;
    let zero = ChannelVector::zeros(t.len());
    let h_los = assemble_channel(&los, &zero, kappa)?;
    let mut scattered = 0.0;
    for _ in 0..samples {
        let scatterers: Vec<Scatterer> = positions
            .iter()
            .map(|&position| Scatterer {
                position,
                reflection: Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                    * std::f64::consts::FRAC_1_SQRT_2,
                gain_bs: rho.sqrt(),
                gain_user: rho.sqrt(),
            })
            .collect();
        let nlos = nlos_component(&t, &scatterers, &user, lambda)
            / Complex64::from((positions.len() as f64).sqrt());
        scattered += (assemble_channel(&los, &nlos, kappa)? - &h_los).norm_squared();
    }
    // The scattered power is measured about the mean channel, so the
    // zero-mean LoS cross terms do not add variance.
    let scattered = scattered / samples as f64;
    let total = los_power + scattered;
    Ok(PowerSplit {
        los_fraction: los_power / total,
        nlos_fraction: scattered / total,
        expected_los: kappa / (kappa + 1.0),
        expected_nlos: 1.0 / (kappa + 1.0),
    })
}

fn channel_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let err = steering_modulus_error(200, 1);
    out.push(check(
        "steering unit modulus",
        err <= 1e-12,
        format!("max deviation {err:.2e}"),
    ));

    let lambda = 0.0107;
    let q = crate::channel::steering_vector(
        &[Vec3::zeros()],
        &Vec3::new(lambda / 4.0, 0.0, 0.0),
        lambda,
    )[0];
    let qerr = (q - Complex64::new(0.0, -1.0)).norm();
    out.push(check(
        "quarter-wave phase",
        qerr < 1e-12,
        format!("|a - (-j)| = {qerr:.2e}"),
    ));

    for kappa_db in [3.0, 15.0] {
        let split = rician_power_split(kappa_db, 20_000, 7)?;
        out.push(check(
            "Rician power split",
            split.max_relative_error() < 0.02,
            format!(
                "κ = {kappa_db} dB: LoS {:.4} (expect {:.4}), scattered {:.4} (expect {:.4})",
                split.los_fraction, split.expected_los, split.nlos_fraction, split.expected_nlos
            ),
        ));
    }

    let s = Scenario::default();
    let a = drop_scenario(&s, 99)?;
    let b = drop_scenario(&s, 99)?;
    let t = crate::harness::scheme::fixed_ula(s.transmit_antennas, s.wavelength());
    let r = vec![Vec3::zeros(); s.users];
    let same = a == b && a.channel.channels(&t, &r)? == b.channel.channels(&t, &r)?;
    out.push(check(
        "drop determinism",
        same,
        "same seed, same drop and channels bit for bit".into(),
    ));
    Ok(out)
}

/// Worst disagreements between the duality solver and the conic oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverComparison {
    pub instances: usize,
    /// Largest relative power gap over instances both solve.
    pub max_power_gap: f64,
    /// Largest relative slack of an SINR constraint at a duality optimum.
    pub max_sinr_slack: f64,
    /// Instances whose statuses disagree.
    pub status_mismatches: usize,
}

/// Random instances with `K ≤ 4`, `K ≤ N ≤ 8`, complex Gaussian channels.
pub fn duality_vs_conic(instances: usize, seed: u64) -> Result<SolverComparison> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cmp = SolverComparison {
        instances,
        max_power_gap: 0.0,
        max_sinr_slack: 0.0,
        status_mismatches: 0,
    };
    for _ in 0..instances {
        let k = rng.random_range(1..=4);
        let n = rng.random_range(k..=8);
        let h: Vec<ChannelVector> = (0..k)
            .map(|_| {
                ChannelVector::from_fn(n, |_, _| {
                    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * 1e-5
                })
            })
            .collect();
        let targets: Vec<f64> = (0..k)
            .map(|_| sinr_target(rng.random_range(0.5..4.0)))
            .collect();
        let noise = vec![1e-11; k];
        let d = minimize_power(&h, &targets, &noise)?;
        let c = minimize_power_socp(&h, &targets, &noise)?;
        if d.is_optimal() != c.is_optimal() {
            cmp.status_mismatches += 1;
            continue;
        }
        if d.status == SolveStatus::Optimal {
            let slack = |sol: &BeamformingSolution| {
                targets
                    .iter()
                    .enumerate()
                    .map(|(j, &g)| ((sinr(&h, &sol.beamformers, &noise, j) - g) / g).abs())
                    .fold(0.0, f64::max)
            };
            cmp.max_sinr_slack = cmp.max_sinr_slack.max(slack(&d));
            let gap = ((d.total_power - c.total_power) / c.total_power).abs();
            cmp.max_power_gap = cmp.max_power_gap.max(gap);
        }
    }
    Ok(cmp)
}

/// Relative error of the single-user solve against `γσ²/‖h‖²`.
pub fn mrt_error(trials: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(1..=8);
        let h = ChannelVector::from_fn(n, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let gamma = sinr_target(rng.random_range(0.5..6.0));
        let sigma = rng.random_range(0.1..3.0);
        let sol = minimize_power(std::slice::from_ref(&h), &[gamma], &[sigma])?;
        let expected = gamma * sigma / h.norm_squared();
        worst = worst.max(((sol.total_power - expected) / expected).abs());
    }
    Ok(worst)
}

fn beamforming_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let e = mrt_error(50, 2)?;
    out.push(check(
        "single-user MRT closed form",
        e <= 1e-9,
        format!("max relative error {e:.2e}"),
    ));
    let c = duality_vs_conic(100, 3)?;
    out.push(check(
        "duality vs conic power",
        c.status_mismatches == 0 && c.max_power_gap <= 1e-4,
        format!(
            "{} instances, max relative gap {:.2e}, status mismatches {}",
            c.instances, c.max_power_gap, c.status_mismatches
        ),
    ));
    out.push(check(
        "active SINR constraints",
        c.max_sinr_slack <= 1e-5,
        format!("max relative slack {:.2e}", c.max_sinr_slack),
    ));
    Ok(out)
}

/// Whether pruning removes exactly the particles a full distance sort
/// would, on a random swarm.
pub fn pruning_matches_sort(seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 6;
    let particles: Vec<Particle> = (0..40)
        .map(|id| {
            let position: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            Particle {
                id,
                best_position: position.clone(),
                velocity: vec![0.0; dim],
                position,
                best_fitness: 0.0,
                fitness: 0.0,
            }
        })
        .collect();
    let gbest: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let target = 23;
    let survivors: Vec<usize> = prune_neighborhood(particles.clone(), &gbest, target, None)
        .iter()
        .map(|p| p.id)
        .collect();
    let mut by_distance: Vec<(f64, usize)> = particles
        .iter()
        .map(|p| {
            let d2: f64 = p
                .position
                .iter()
                .zip(&gbest)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (d2, p.id)
        })
        .collect();
    by_distance.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut expected: Vec<usize> = by_distance[particles.len() - target..]
        .iter()
        .map(|x| x.1)
        .collect();
    expected.sort_unstable();
    survivors == expected
}

/// Evaluation ratio of the pruned swarm against the unpruned one with a
/// constant fitness, `(P + Σ P̃) / (P + P Q)`, and the same ratio without
/// the initial evaluations.
pub fn evaluation_ratio(config: &SwarmConfig) -> Result<(f64, f64)> {
    let stub = |_: &[f64]| 1.0;
    let bounds = Bounds::new(vec![0.0; 3], vec![1.0; 3])?;
    let pruned = optimizer::run(&stub, bounds.clone(), config.clone())?;
    let full = optimizer::run(&stub, bounds, config.without_pruning())?;
    Ok((
        pruned.evaluations as f64 / full.evaluations as f64,
        pruned.evaluations_after_init() as f64 / full.evaluations_after_init() as f64,
    ))
}

/// Tiny-instance comparison of the swarm against exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TinyOutcome {
    pub seed: u64,
    pub swarm_dbm: f64,
    pub grid_dbm: f64,
    pub grid_points: usize,
}

impl TinyOutcome {
    pub fn gap_db(&self) -> f64 {
        self.swarm_dbm - self.grid_dbm
    }
}

/// Two transmit antennas, one LoS-only user with a fixed receiver, and a
/// `10λ × 10λ` transmit region.
pub fn tiny_scenario() -> Scenario {
    let mut s = Scenario {
        transmit_antennas: 2,
        users: 1,
        scatterers: 0,
        transmit_region_wavelengths: 10.0,
        receive_region_wavelengths: 0.0,
        ..Scenario::default()
    };
    s.swarm.particles = 20;
    s.swarm.iterations = 30;
    s
}

/// Exhaustive optimum over a `λ/50` grid of the transmit region: the
/// single-user optimum is `γσ² / (g_i + g_j)` with per-position gains
/// `g = |h_n|²`, maximized over grid pairs at least `d_M` apart.
pub fn tiny_instance(seed: u64) -> Result<TinyOutcome> {
    let s = tiny_scenario();
    let drop = drop_scenario(&s, seed)?;
    let swarm = run_scheme(SchemeKind::Proposed, &s, &drop, seed)?;

    let lambda = s.wavelength();
    let user = &drop.channel.users[0];
    let (los_w, _) = rician_weights(drop.channel.rician_factor);
    let half = s.transmit_region_wavelengths * lambda / 2.0;
    let steps = (s.transmit_region_wavelengths * 50.0).round() as usize;
    let coord = |i: usize| -half + 2.0 * half * i as f64 / steps as f64;
    let mut grid: Vec<(f64, Vec3)> = Vec::with_capacity((steps + 1) * (steps + 1));
    for i in 0..=steps {
        for j in 0..=steps {
            let p = Vec3::new(coord(i), 0.0, coord(j));
            let phase = -2.0 * std::f64::consts::PI / lambda * (p - user.origin).norm();
            let h = Complex64::from_polar(los_w * user.los_gain, phase);
            grid.push((h.norm_sqr(), p));
        }
    }
    grid.sort_by(|a, b| b.0.total_cmp(&a.0));
    let d_m = s.min_spacing_m();
    let mut best = 0.0;
    'outer: for (i, &(gi, pi)) in grid.iter().enumerate() {
        if gi + grid[0].0 <= best {
            break;
        }
        for &(gj, pj) in &grid[i + 1..] {
            if gi + gj <= best {
                continue 'outer;
            }
            if (pi - pj).norm() >= d_m {
                best = gi + gj;
                continue 'outer;
            }
        }
    }
    let budget = s.link_budget()?;
    let grid_power = budget.sinr_targets()[0] * budget.noise_w[0] / best;
    Ok(TinyOutcome {
        seed,
        swarm_dbm: swarm.power_dbm(),
        grid_dbm: linear_to_db(grid_power) + 30.0,
        grid_points: grid.len(),
    })
}

fn optimizer_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    out.push(check(
        "pruning matches distance sort",
        (0..5).all(pruning_matches_sort),
        "5 random swarms".into(),
    ));
    let cfg = SwarmConfig::default();
    let (with_init, after_init) = evaluation_ratio(&cfg)?;
    let expected = (1.0 + cfg.pruning_ratio) / 2.0;
    out.push(check(
        "evaluation ratio",
        ((after_init - expected) / expected).abs() <= 0.02,
        format!("{after_init:.4} after init, {with_init:.4} with init, expect {expected:.4}"),
    ));
    let tiny: Vec<TinyOutcome> = (0..10).map(tiny_instance).collect::<Result<_>>()?;
    let close = tiny.iter().filter(|t| t.gap_db() <= 0.2).count();
    let worst = tiny
        .iter()
        .map(TinyOutcome::gap_db)
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(check(
        "tiny instance vs grid",
        close >= 9,
        format!("{close}/10 seeds within 0.2 dB, worst gap {worst:.3} dB"),
    ));
    Ok(out)
}
