use std::collections::HashMap;

use nearfield_ma::beamforming::check_rate_constraints;
use nearfield_ma::geometry::count_violating_antennas;
use nearfield_ma::harness::{drop_scenario, run_scheme, Scenario, SchemeKind};
use nearfield_ma::optimizer::{
    residual_count, run, Bounds, Evaluation, Objective, Swarm, SwarmConfig,
};
use nearfield_ma::Result;
use proptest::prelude::*;

fn cube(dim: usize, half: f64) -> Bounds {
    Bounds::new(vec![-half; dim], vec![half; dim]).unwrap()
}

/// Rastrigin plus a penalty for leaving the ball of radius 3, so the
/// landscape is multimodal and penalties show up in the trace.
struct Bumpy;

impl Objective for Bumpy {
    fn evaluate(&self, u: &[f64]) -> Result<Evaluation> {
        let r: f64 = u
            .iter()
            .map(|x| x * x - 10.0 * (2.0 * std::f64::consts::PI * x).cos() + 10.0)
            .sum();
        let outside = u.iter().map(|x| x * x).sum::<f64>() > 9.0;
        let penalty = if outside { 50.0 } else { 0.0 };
        Ok(Evaluation {
            fitness: r + penalty,
            penalty,
            solution: None,
        })
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evaluation_count_follows_the_schedule(
        particles in 1usize..40,
        iterations in 1usize..40,
        beta in 0.01..1.0f64,
        seed in any::<u64>(),
    ) {
        let cfg = SwarmConfig { particles, iterations, pruning_ratio: beta, seed, ..SwarmConfig::default() };
        let out = run(&|_: &[f64]| 1.0, cube(2, 1.0), cfg.clone()).unwrap();
        let schedule: Vec<usize> = (1..=iterations)
            .map(|q| residual_count(q, particles, beta, iterations))
            .collect();
        prop_assert_eq!(out.evaluations, particles + schedule.iter().sum::<usize>());
        prop_assert_eq!(out.evaluations, cfg.evaluation_budget());
        for (rec, &expected) in out.trace[1..].iter().zip(&schedule) {
            prop_assert_eq!(rec.residual_particles, expected);
        }
        prop_assert!(schedule.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bests_only_improve_and_particles_stay_in_the_box(seed in any::<u64>(), beta in 0.02..1.0f64) {
        let cfg = SwarmConfig {
            particles: 16,
            iterations: 12,
            pruning_ratio: beta,
            seed,
            ..SwarmConfig::default()
        };
        let bounds = cube(4, 5.12);
        let mut swarm = Swarm::new(&Bumpy, bounds.clone(), cfg).unwrap();
        let mut personal: HashMap<usize, f64> =
            swarm.particles().iter().map(|p| (p.id, p.best_fitness)).collect();
        let mut global = swarm.best_fitness();
        while !swarm.is_finished() {
            let rec = swarm.step().unwrap();
            prop_assert!(rec.best_fitness <= global);
            global = rec.best_fitness;
            for p in swarm.particles() {
                prop_assert!(bounds.contains(&p.position));
                let before = personal[&p.id];
                prop_assert!(p.best_fitness <= before);
                prop_assert!(global <= p.best_fitness);
                personal.insert(p.id, p.best_fitness);
            }
        }
    }
}

#[test]
fn same_seed_gives_identical_runs() {
    let cfg = SwarmConfig {
        particles: 12,
        iterations: 15,
        seed: 31,
        ..SwarmConfig::default()
    };
    let a = run(&Bumpy, cube(3, 5.12), cfg.clone()).unwrap();
    let b = run(&Bumpy, cube(3, 5.12), cfg.clone()).unwrap();
    assert_eq!(a.trace, b.trace);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.best_position), bits(&b.best_position));
    let c = run(&Bumpy, cube(3, 5.12), SwarmConfig { seed: 32, ..cfg }).unwrap();
    assert_ne!(bits(&a.best_position), bits(&c.best_position));
}

#[test]
fn default_schedule_halves_the_evaluations() {
    let cfg = SwarmConfig {
        particles: 50,
        iterations: 50,
        pruning_ratio: 0.02,
        ..SwarmConfig::default()
    };
    let pruned = run(&|_: &[f64]| 0.0, cube(3, 1.0), cfg.clone()).unwrap();
    let full = run(&|_: &[f64]| 0.0, cube(3, 1.0), cfg.without_pruning()).unwrap();
    assert_eq!(full.evaluations, 50 + 50 * 50);
    let ratio = pruned.evaluations_after_init() as f64 / full.evaluations_after_init() as f64;
    assert!((ratio - 0.51).abs() <= 0.02 * 0.51, "{ratio}");
}

#[test]
fn successful_placements_satisfy_every_constraint() {
    let mut s = Scenario::default();
    s.swarm.particles = 10;
    s.swarm.iterations = 10;
    for seed in 0..4 {
        let drop = drop_scenario(&s, seed).unwrap();
        for kind in [SchemeKind::Proposed, SchemeKind::MaBs] {
            let r = run_scheme(kind, &s, &drop, seed).unwrap();
            assert!(r.feasible, "{kind} seed {seed}");
            assert_eq!(r.penalty, 0.0);
            assert_eq!(count_violating_antennas(&r.transmit, s.min_spacing_m()), 0);
            let sol = r.solution.as_ref().unwrap();
            let channels = drop
                .channel
                .channels(&r.transmit, &r.receive_local)
                .unwrap();
            let budget = s.link_budget().unwrap();
            assert!(check_rate_constraints(
                &channels,
                &sol.beamformers,
                &budget.noise_w,
                &budget.rate_targets
            )
            .into_iter()
            .all(|ok| ok));
            let region = s.transmit_region().unwrap();
            assert!(r.transmit.iter().all(|t| region.contains(t)));
        }
    }
}
