//! Random user and scatterer placement for one scenario realization.
//!
//! Users and scatterers lie on the horizontal plane `z = 0`, uniformly in
//! area over the annulus sector `d ∈ [d_min, d_max]`, azimuth within ±60° of
//! the array broadside (`+y`). Each user draws from its own ChaCha stream, so
//! user `k` is the same across drops that differ only in the user count or in
//! parameters that do not enter the geometry.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::scenario::{RotationMode, Scenario};
use crate::channel::{bounce_gains, free_space_amplitude, ChannelDrop, Scatterer, UserDrop};
use crate::error::Result;
use crate::geometry::{Rotation, Vec3};

/// Half-width of the azimuth sector, radians.
pub const AZIMUTH_HALF_WIDTH: f64 = PI / 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDrop {
    pub channel: ChannelDrop,
    /// Distance of every user origin from the array centre, meters.
    pub user_distances: Vec<f64>,
    /// `2 D² / λ` for the transmit region diagonal `D`.
    pub rayleigh_distance: f64,
}

impl ScenarioDrop {
    /// Users farther away than the Rayleigh distance.
    pub fn far_field_users(&self) -> usize {
        self.user_distances
            .iter()
            .filter(|&&d| d > self.rayleigh_distance)
            .count()
    }
}

/// Point in the sector at distance drawn uniformly in area from `[d_min, d_max]`.
fn sector_point<R: Rng + ?Sized>(rng: &mut R, d_min: f64, d_max: f64) -> Vec3 {
    let phi = AZIMUTH_HALF_WIDTH * (2.0 * rng.random::<f64>() - 1.0);
    let u: f64 = rng.random();
    let d = (d_min * d_min + u * (d_max * d_max - d_min * d_min)).sqrt();
    Vec3::new(d * phi.sin(), d * phi.cos(), 0.0)
}

/// Circularly symmetric `CN(0, 1)` sample.
fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn drop_scenario(scenario: &Scenario, seed: u64) -> Result<ScenarioDrop> {
    scenario.validate()?;
    let carrier = scenario.carrier()?;
    let lambda = carrier.wavelength;
    let (d_min, d_max) = (scenario.distance_min_m, scenario.distance_max_m);

    let mut users = Vec::with_capacity(scenario.users);
    let mut user_distances = Vec::with_capacity(scenario.users);
    for k in 0..scenario.users {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64 + 1);
        let origin = sector_point(&mut rng, d_min, d_max);
        let random_rotation = Rotation::random(&mut rng);
        let rotation = match scenario.rotations {
            RotationMode::Identity => Rotation::identity(),
            RotationMode::Random => random_rotation,
        };
        let scatterers = (0..scenario.scatterers)
            .map(|_| {
                let position = sector_point(&mut rng, d_min, d_max);
                let reflection = complex_normal(&mut rng);
                let (gain_bs, gain_user) =
                    bounce_gains(scenario.nlos_gain, &position, &origin, lambda)?;
                Ok(Scatterer {
                    position,
                    reflection,
                    gain_bs,
                    gain_user,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        user_distances.push(origin.norm());
        users.push(UserDrop {
            los_gain: free_space_amplitude(origin.norm(), lambda)?,
            origin,
            rotation,
            scatterers,
        });
    }

    let aperture = scenario.transmit_region()?.diagonal();
    let drop = ScenarioDrop {
        channel: ChannelDrop {
            seed,
            carrier,
            rician_factor: scenario.rician_factor(),
            users,
        },
        user_distances,
        rayleigh_distance: 2.0 * aperture * aperture / lambda,
    };
    let outside = drop.far_field_users();
    if outside > 0 {
        log::warn!(
            "seed {seed}: {outside} of {} users beyond the Rayleigh distance {:.1} m",
            scenario.users,
            drop.rayleigh_distance
        );
    } else {
        log::debug!(
            "seed {seed}: all users within the Rayleigh distance {:.1} m",
            drop.rayleigh_distance
        );
    }
    Ok(drop)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_annulus_fixes_the_distance() {
        let s = Scenario {
            distance_min_m: 100.0,
            distance_max_m: 100.0,
            users: 6,
            ..Scenario::default()
        };
        let d = drop_scenario(&s, 3).unwrap();
        for (u, dist) in d.channel.users.iter().zip(&d.user_distances) {
            assert!((dist - 100.0).abs() < 1e-12);
            assert_eq!(u.origin.z, 0.0);
            assert!(u.origin.y > 0.0);
            for sc in &u.scatterers {
                assert!((sc.position.norm() - 100.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn same_seed_same_drop() {
        let s = Scenario::default();
        assert_eq!(
            drop_scenario(&s, 42).unwrap(),
            drop_scenario(&s, 42).unwrap()
        );
        assert_ne!(
            drop_scenario(&s, 42).unwrap(),
            drop_scenario(&s, 43).unwrap()
        );
    }

    #[test]
    fn users_persist_across_user_counts() {
        let small = drop_scenario(
            &Scenario {
                users: 2,
                ..Scenario::default()
            },
            8,
        )
        .unwrap();
        let large = drop_scenario(
            &Scenario {
                users: 4,
                ..Scenario::default()
            },
            8,
        )
        .unwrap();
        assert_eq!(small.channel.users[..], large.channel.users[..2]);
    }

    #[test]
    fn users_stay_in_the_sector() {
        let s = Scenario {
            users: 50,
            ..Scenario::default()
        };
        let d = drop_scenario(&s, 1).unwrap();
        for u in &d.channel.users {
            let r = u.origin.norm();
            assert!((50.0..=200.0).contains(&r));
            assert!(u.origin.x.atan2(u.origin.y).abs() <= AZIMUTH_HALF_WIDTH + 1e-12);
            assert!(u.rotation.orthogonality_residual() < 1e-12);
        }
    }

    #[test]
    fn random_rotations_do_not_move_scatterers() {
        let id = drop_scenario(&Scenario::default(), 5).unwrap();
        let rnd = drop_scenario(
            &Scenario {
                rotations: RotationMode::Random,
                ..Scenario::default()
            },
            5,
        )
        .unwrap();
        for (a, b) in id.channel.users.iter().zip(&rnd.channel.users) {
            assert_eq!(a.scatterers, b.scatterers);
            assert_ne!(a.rotation, b.rotation);
        }
    }

    #[test]
    fn default_users_are_in_the_near_field() {
        let d = drop_scenario(&Scenario::default(), 0).unwrap();
        // 100λ square: D = 141.4λ, 2D²/λ = 40 000 λ ≈ 428 m
        assert!((d.rayleigh_distance - 40_000.0 * 299_792_458.0 / 28e9).abs() < 1e-6);
        assert_eq!(d.far_field_users(), 0);
    }
}
