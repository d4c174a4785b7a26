//! Two-loop particle swarm search over antenna positions with dynamic
//! neighborhood pruning.
//!
//! The outer loop moves particles through the box-constrained position space;
//! the inner loop ([`fitness`]) solves the beamforming subproblem at each
//! particle to score it. After every iteration the particles nearest the
//! global best are pruned so the residual swarm follows a linear schedule from
//! `P` down to `βP`.
//!
//! Within an iteration all particles move against the global best known at the
//! start of the iteration, then their fitness values are computed in parallel.
//! Every random draw comes from a stream keyed by `(seed, iteration, particle
//! id)`, so results do not depend on thread count.

pub mod fitness;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::BeamformingSolution;
use crate::error::{Error, Result};
use crate::geometry::project_in_place;

/// Power assigned when the beamforming subproblem has no valid solution, W.
pub const INFEASIBLE_POWER: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmConfig {
    /// Initial particle count `P`.
    pub particles: usize,
    /// Outer iterations `Q`.
    pub iterations: usize,
    /// Final residual fraction `β` of the linear pruning schedule.
    pub pruning_ratio: f64,
    pub cognitive: f64,
    pub social: f64,
    pub inertia_min: f64,
    pub inertia_max: f64,
    /// Penalty per antenna violating the minimum spacing, in fitness units.
    pub penalty_factor: f64,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            particles: 50,
            iterations: 50,
            pruning_ratio: 0.02,
            cognitive: 1.4,
            social: 1.4,
            inertia_min: 0.4,
            inertia_max: 0.9,
            penalty_factor: 100.0,
            seed: 0,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.particles == 0 {
            return bad("particle count must be at least 1");
        }
        if self.iterations == 0 {
            return bad("iteration count must be at least 1");
        }
        if !(self.pruning_ratio > 0.0 && self.pruning_ratio <= 1.0) {
            return bad("pruning ratio must lie in (0, 1]");
        }
        if !(self.inertia_min <= self.inertia_max) {
            return bad("inertia_min must not exceed inertia_max");
        }
        if !(self.penalty_factor >= 0.0) {
            return bad("penalty factor must be non-negative");
        }
        Ok(())
    }

    /// Same settings without pruning.
    pub fn without_pruning(&self) -> Self {
        SwarmConfig {
            pruning_ratio: 1.0,
            ..self.clone()
        }
    }

    /// `P + Σ_q P̃(q)`, the number of fitness evaluations of a full run.
    pub fn evaluation_budget(&self) -> usize {
        self.particles
            + (1..=self.iterations)
                .map(|q| residual_count(q, self.particles, self.pruning_ratio, self.iterations))
                .sum::<usize>()
    }
}

/// Per-component position bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension(format!(
                "{} lower vs {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite())
        {
            return Err(Error::InvalidArgument(
                "bounds must be finite with lower ≤ upper".into(),
            ));
        }
        Ok(Bounds { lower, upper })
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.lower.len()
            && u.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, h))| *x >= *l && *x <= *h)
    }
}

/// Result of scoring one particle position.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Power (or the infeasibility sentinel) plus penalty.
    pub fitness: f64,
    /// Penalty part of `fitness`.
    pub penalty: f64,
    pub solution: Option<BeamformingSolution>,
}

impl Evaluation {
    pub fn plain(fitness: f64) -> Self {
        Evaluation {
            fitness,
            penalty: 0.0,
            solution: None,
        }
    }
}

/// Fitness function minimized by the swarm.
pub trait Objective: Sync {
    fn evaluate(&self, position: &[f64]) -> Result<Evaluation>;
}

impl<F> Objective for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn evaluate(&self, position: &[f64]) -> Result<Evaluation> {
        Ok(Evaluation::plain(self(position)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    /// Index at initialization; stable across pruning.
    pub id: usize,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Fitness at the current position.
    pub fitness: f64,
}

/// `ω(q) = ω_max - (ω_max - ω_min) q / Q`.
pub fn inertia_weight(q: usize, total: usize, inertia_min: f64, inertia_max: f64) -> f64 {
    inertia_max - (inertia_max - inertia_min) * q as f64 / total as f64
}

/// Residual particles in iteration `q` (1-based) of the linear schedule from
/// `P` at `q = 1` to `βP` at `q = Q`, rounded half away from zero and never
/// below `max(1, ⌈βP⌉)`.
pub fn residual_count(q: usize, particles: usize, pruning_ratio: f64, total: usize) -> usize {
    let p = particles as f64;
    // ⌈βP⌉ with a guard against products like 0.02 · 50 = 1.0000000000000002
    let floor = ((pruning_ratio * p - 1e-9).ceil() as usize).max(1);
    if total <= 1 {
        return particles;
    }
    let frac = (q.saturating_sub(1)) as f64 / (total - 1) as f64;
    let value = (p - (p - pruning_ratio * p) * frac).round() as usize;
    value.max(floor).min(particles)
}

/// `ω v + c₁ e₁ ⊙ (pbest - u) + c₂ e₂ ⊙ (gbest - u)` with explicit
/// coefficient vectors.
#[allow(clippy::too_many_arguments)]
pub fn velocity_with_coefficients(
    velocity: &[f64],
    position: &[f64],
    personal_best: &[f64],
    global_best: &[f64],
    inertia: f64,
    cognitive: f64,
    social: f64,
    e1: &[f64],
    e2: &[f64],
) -> Vec<f64> {
    (0..velocity.len())
        .map(|i| {
            inertia * velocity[i]
                + cognitive * e1[i] * (personal_best[i] - position[i])
                + social * e2[i] * (global_best[i] - position[i])
        })
        .collect()
}

/// Velocity update with fresh uniform `[0, 1]` coefficients drawn from `rng`.
pub fn update_velocity<R: Rng + ?Sized>(
    particle: &Particle,
    global_best: &[f64],
    inertia: f64,
    cognitive: f64,
    social: f64,
    rng: &mut R,
) -> Vec<f64> {
    let dim = particle.position.len();
    let e1: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let e2: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    velocity_with_coefficients(
        &particle.velocity,
        &particle.position,
        &particle.best_position,
        global_best,
        inertia,
        cognitive,
        social,
        &e1,
        &e2,
    )
}

/// Moves by `velocity` and projects back into the box.
pub fn update_position(position: &[f64], velocity: &[f64], bounds: &Bounds) -> Vec<f64> {
    let mut next: Vec<f64> = position.iter().zip(velocity).map(|(u, v)| u + v).collect();
    project_in_place(&mut next, &bounds.lower, &bounds.upper);
    next
}

/// Removes the `particles.len() - target` particles nearest `global_best`
/// (Euclidean distance of current positions), lower index first on ties. The
/// particle with id `protected` is never removed. Survivors keep their order.
pub fn prune_neighborhood(
    particles: Vec<Particle>,
    global_best: &[f64],
    target: usize,
    protected: Option<usize>,
) -> Vec<Particle> {
    if target >= particles.len() {
        return particles;
    }
    let mut candidates: Vec<(f64, usize)> = particles
        .iter()
        .enumerate()
        .filter(|(_, p)| Some(p.id) != protected)
        .map(|(i, p)| (distance(&p.position, global_best), i))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut remove = vec![false; particles.len()];
    for &(_, i) in candidates.iter().take(particles.len() - target) {
        remove[i] = true;
    }
    particles
        .into_iter()
        .zip(remove)
        .filter_map(|(p, r)| (!r).then_some(p))
        .collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// One row of the convergence trace. Iteration 0 is the initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Particles evaluated in this iteration.
    pub residual_particles: usize,
    pub best_fitness: f64,
    pub penalty: f64,
    pub cumulative_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmOutcome {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    pub best_penalty: f64,
    /// Beamformers computed when the global best was found.
    pub solution: Option<BeamformingSolution>,
    pub trace: Vec<TraceRecord>,
    pub evaluations: usize,
    /// Evaluations spent on the initial swarm.
    pub initial_evaluations: usize,
}

impl SwarmOutcome {
    pub fn evaluations_after_init(&self) -> usize {
        self.evaluations - self.initial_evaluations
    }
}

const STREAM_INIT: u64 = 0;
const STREAM_MOVE: u64 = 1;

/// Independent ChaCha stream for `(seed, phase, iteration, particle)`.
fn stream(seed: u64, phase: u64, iteration: u64, particle: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&phase.to_le_bytes());
    key[16..24].copy_from_slice(&iteration.to_le_bytes());
    key[24..].copy_from_slice(&particle.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Swarm state between outer iterations.
pub struct Swarm<'a, O: Objective> {
    objective: &'a O,
    bounds: Bounds,
    config: SwarmConfig,
    particles: Vec<Particle>,
    best_position: Vec<f64>,
    best_fitness: f64,
    best_penalty: f64,
    best_carrier: usize,
    solution: Option<BeamformingSolution>,
    iteration: usize,
    evaluations: usize,
    trace: Vec<TraceRecord>,
}

impl<'a, O: Objective> Swarm<'a, O> {
    /// Random initialization, initial evaluation and best selection.
    pub fn new(objective: &'a O, bounds: Bounds, config: SwarmConfig) -> Result<Self> {
        config.validate()?;
        let dim = bounds.dimension();
        let mut particles: Vec<Particle> = (0..config.particles)
            .map(|id| {
                let mut rng = stream(config.seed, STREAM_INIT, 0, id as u64);
                let position: Vec<f64> = (0..dim)
                    .map(|i| {
                        bounds.lower[i] + (bounds.upper[i] - bounds.lower[i]) * rng.random::<f64>()
                    })
                    .collect();
                let velocity: Vec<f64> = (0..dim)
                    .map(|i| (bounds.upper[i] - bounds.lower[i]) * (rng.random::<f64>() - 0.5))
                    .collect();
                Particle {
                    id,
                    best_position: position.clone(),
                    position,
                    velocity,
                    best_fitness: f64::INFINITY,
                    fitness: f64::INFINITY,
                }
            })
            .collect();

        let evals = evaluate_all(objective, &particles)?;
        let mut swarm = Swarm {
            objective,
            bounds,
            config,
            particles: Vec::new(),
            best_position: Vec::new(),
            best_fitness: f64::INFINITY,
            best_penalty: 0.0,
            best_carrier: 0,
            solution: None,
            iteration: 0,
            evaluations: evals.len(),
            trace: Vec::new(),
        };
        for (p, e) in particles.iter_mut().zip(evals) {
            p.fitness = e.fitness;
            p.best_fitness = e.fitness;
            swarm.offer_global(p, e);
        }
        swarm.record(particles.len());
        swarm.particles = particles;
        Ok(swarm)
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn best_fitness(&self) -> f64 {
        self.best_fitness
    }

    pub fn best_position(&self) -> &[f64] {
        &self.best_position
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn is_finished(&self) -> bool {
        self.iteration >= self.config.iterations
    }

    /// Runs outer iteration `q = iteration + 1`: move, evaluate, update bests,
    /// then prune down to the next iteration's residual count.
    pub fn step(&mut self) -> Result<TraceRecord> {
        let q = self.iteration + 1;
        let cfg = &self.config;
        let inertia = inertia_weight(q, cfg.iterations, cfg.inertia_min, cfg.inertia_max);
        for p in self.particles.iter_mut() {
            let mut rng = stream(cfg.seed, STREAM_MOVE, q as u64, p.id as u64);
            p.velocity = update_velocity(
                p,
                &self.best_position,
                inertia,
                cfg.cognitive,
                cfg.social,
                &mut rng,
            );
            p.position = update_position(&p.position, &p.velocity, &self.bounds);
        }
        let evals = evaluate_all(self.objective, &self.particles)?;
        self.evaluations += evals.len();
        let mut particles = std::mem::take(&mut self.particles);
        for (p, e) in particles.iter_mut().zip(evals) {
            p.fitness = e.fitness;
            if e.fitness < p.best_fitness {
                p.best_fitness = e.fitness;
                p.best_position = p.position.clone();
            }
            self.offer_global(p, e);
        }
        self.iteration = q;
        let record = self.record(particles.len());
        if q < self.config.iterations {
            let target = residual_count(
                q + 1,
                self.config.particles,
                self.config.pruning_ratio,
                self.config.iterations,
            );
            particles = prune_neighborhood(
                particles,
                &self.best_position,
                target,
                Some(self.best_carrier),
            );
        }
        self.particles = particles;
        Ok(record)
    }

    /// Runs the remaining iterations and returns the result, or an error if
    /// no particle ever reached a finite subproblem solution.
    pub fn finish(mut self) -> Result<SwarmOutcome> {
        while !self.is_finished() {
            self.step()?;
        }
        if self.best_fitness - self.best_penalty >= INFEASIBLE_POWER {
            return Err(Error::NoFeasibleParticle {
                best_fitness: self.best_fitness,
                evaluations: self.evaluations,
            });
        }
        Ok(SwarmOutcome {
            best_position: self.best_position,
            best_fitness: self.best_fitness,
            best_penalty: self.best_penalty,
            solution: self.solution,
            trace: self.trace,
            evaluations: self.evaluations,
            initial_evaluations: self.config.particles,
        })
    }

    fn offer_global(&mut self, p: &Particle, e: Evaluation) {
        if e.fitness < self.best_fitness {
            self.best_fitness = e.fitness;
            self.best_penalty = e.penalty;
            self.best_position = p.position.clone();
            self.best_carrier = p.id;
            self.solution = e.solution;
        }
    }

    fn record(&mut self, evaluated: usize) -> TraceRecord {
        let r = TraceRecord {
            iteration: self.iteration,
            residual_particles: evaluated,
            best_fitness: self.best_fitness,
            penalty: self.best_penalty,
            cumulative_evaluations: self.evaluations,
        };
        self.trace.push(r);
        r
    }
}

fn evaluate_all<O: Objective>(objective: &O, particles: &[Particle]) -> Result<Vec<Evaluation>> {
    particles
        .par_iter()
        .map(|p| objective.evaluate(&p.position))
        .collect()
}

/// Full two-loop search.
pub fn run<O: Objective>(
    objective: &O,
    bounds: Bounds,
    config: SwarmConfig,
) -> Result<SwarmOutcome> {
    Swarm::new(objective, bounds, config)?.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn particle(id: usize, position: Vec<f64>) -> Particle {
        Particle {
            id,
            best_position: position.clone(),
            velocity: vec![0.0; position.len()],
            position,
            best_fitness: 0.0,
            fitness: 0.0,
        }
    }

    #[test]
    fn inertia_schedule_endpoints() {
        assert_eq!(inertia_weight(0, 50, 0.4, 0.9), 0.9);
        assert!((inertia_weight(50, 50, 0.4, 0.9) - 0.4).abs() < 1e-15);
        assert!((inertia_weight(25, 50, 0.4, 0.9) - 0.65).abs() < 1e-15);
    }

    #[test]
    fn residual_schedule_endpoints() {
        assert_eq!(residual_count(1, 50, 0.02, 50), 50);
        assert_eq!(residual_count(50, 50, 0.02, 50), 1);
        assert_eq!(residual_count(1, 20, 0.02, 1), 20);
        assert_eq!(residual_count(30, 20, 0.02, 30), 1);
        for q in 1..=30 {
            assert_eq!(residual_count(q, 20, 1.0, 30), 20);
        }
        // monotone non-increasing
        for q in 1..50 {
            assert!(residual_count(q + 1, 50, 0.02, 50) <= residual_count(q, 50, 0.02, 50));
        }
    }

    #[test]
    fn schedule_halves_the_evaluations() {
        let cfg = SwarmConfig::default();
        let after_init = cfg.evaluation_budget() - cfg.particles;
        let ratio = after_init as f64 / (cfg.particles * cfg.iterations) as f64;
        assert!((ratio - 0.51).abs() < 1e-12, "ratio {ratio}");
        assert_eq!(cfg.without_pruning().evaluation_budget(), 50 + 50 * 50);
    }

    #[test]
    fn pure_inertia_when_bests_coincide() {
        let u = vec![0.3, -0.2];
        let v = vec![1.0, 2.0];
        let next =
            velocity_with_coefficients(&v, &u, &u, &u, 0.7, 1.4, 1.4, &[0.5, 0.5], &[0.9, 0.1]);
        assert_eq!(next, vec![0.7, 1.4]);
    }

    #[test]
    fn unit_coefficients_pull_toward_bests() {
        let u = [0.0, 1.0];
        let pb = [1.0, 1.0];
        let gb = [2.0, -1.0];
        let next = velocity_with_coefficients(
            &[0.0, 0.0],
            &u,
            &pb,
            &gb,
            0.9,
            1.4,
            2.0,
            &[1.0; 2],
            &[1.0; 2],
        );
        assert_eq!(next, vec![1.4 * 1.0 + 2.0 * 2.0, 0.0 + 2.0 * -2.0]);
    }

    #[test]
    fn seeded_velocity_is_reproducible() {
        let mut p = particle(3, vec![0.1, 0.2, 0.3]);
        p.velocity = vec![0.5, -0.5, 0.0];
        p.best_position = vec![0.0, 0.0, 0.0];
        let gb = [1.0, 1.0, 1.0];
        let a = update_velocity(&p, &gb, 0.8, 1.4, 1.4, &mut stream(9, STREAM_MOVE, 4, 3));
        let b = update_velocity(&p, &gb, 0.8, 1.4, 1.4, &mut stream(9, STREAM_MOVE, 4, 3));
        assert_eq!(a, b);
        let c = update_velocity(&p, &gb, 0.8, 1.4, 1.4, &mut stream(9, STREAM_MOVE, 5, 3));
        assert_ne!(a, c);
    }

    #[test]
    fn position_update_clamps() {
        let b = Bounds::new(vec![-1.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(
            update_position(&[0.1, 0.0], &[0.2, 0.0], &b),
            vec![0.30000000000000004, 0.0]
        );
        assert_eq!(
            update_position(&[0.9, 0.0], &[0.5, 0.3], &b),
            vec![1.0, 0.0]
        );
        assert!(b.contains(&update_position(&[0.9, 0.0], &[-7.0, -2.0], &b)));
    }

    #[test]
    fn prune_keeps_all_when_target_equals_count() {
        let ps = vec![particle(0, vec![0.0]), particle(1, vec![1.0])];
        assert_eq!(prune_neighborhood(ps.clone(), &[0.0], 2, None), ps);
    }

    #[test]
    fn prune_removes_nearest_first() {
        let ps = vec![
            particle(0, vec![3.0]),
            particle(1, vec![1.0]),
            particle(2, vec![-2.0]),
        ];
        let survivors = prune_neighborhood(ps, &[0.0], 2, None);
        assert_eq!(
            survivors.iter().map(|p| p.id).collect::<Vec<_>>(),
            vec![0, 2]
        );
    }

    #[test]
    fn prune_breaks_ties_by_index_and_spares_the_carrier() {
        let ps = vec![
            particle(0, vec![0.0]),
            particle(1, vec![1.0]),
            particle(2, vec![-1.0]),
            particle(3, vec![5.0]),
        ];
        let survivors = prune_neighborhood(ps.clone(), &[0.0], 2, Some(0));
        assert_eq!(
            survivors.iter().map(|p| p.id).collect::<Vec<_>>(),
            vec![0, 3]
        );
        let survivors = prune_neighborhood(ps, &[0.0], 3, Some(0));
        assert_eq!(
            survivors.iter().map(|p| p.id).collect::<Vec<_>>(),
            vec![0, 2, 3]
        );
    }

    #[test]
    fn config_validation() {
        assert!(SwarmConfig::default().validate().is_ok());
        for bad in [
            SwarmConfig {
                particles: 0,
                ..Default::default()
            },
            SwarmConfig {
                iterations: 0,
                ..Default::default()
            },
            SwarmConfig {
                pruning_ratio: 0.0,
                ..Default::default()
            },
            SwarmConfig {
                pruning_ratio: 1.5,
                ..Default::default()
            },
            SwarmConfig {
                inertia_min: 1.0,
                inertia_max: 0.5,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn sphere_converges_and_trace_is_monotone() {
        let sphere = |u: &[f64]| u.iter().map(|x| (x - 0.3).powi(2)).sum::<f64>();
        let bounds = Bounds::new(vec![-1.0; 4], vec![1.0; 4]).unwrap();
        let cfg = SwarmConfig {
            particles: 30,
            iterations: 60,
            pruning_ratio: 0.1,
            seed: 4,
            ..Default::default()
        };
        let out = run(&sphere, bounds, cfg.clone()).unwrap();
        assert!(out.best_fitness < 1e-3, "{}", out.best_fitness);
        assert!(out
            .trace
            .windows(2)
            .all(|w| w[1].best_fitness <= w[0].best_fitness));
        assert_eq!(out.evaluations, cfg.evaluation_budget());
        assert_eq!(out.trace.len(), cfg.iterations + 1);
        assert_eq!(
            out.trace.last().unwrap().cumulative_evaluations,
            out.evaluations
        );
    }

    #[test]
    fn sentinel_everywhere_is_an_error() {
        let f = |_: &[f64]| INFEASIBLE_POWER;
        let bounds = Bounds::new(vec![0.0], vec![1.0]).unwrap();
        let cfg = SwarmConfig {
            particles: 3,
            iterations: 2,
            ..Default::default()
        };
        assert!(matches!(
            run(&f, bounds, cfg),
            Err(Error::NoFeasibleParticle { .. })
        ));
    }
}
