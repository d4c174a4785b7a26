use nearfield_ma::channel::{
    steering_vector, CarrierConfig, ChannelDrop, ChannelVector, Scatterer, UserDrop,
};
use nearfield_ma::geometry::{Rotation, Vec3};
use nearfield_ma::harness::{drop_scenario, Scenario};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const FREQ: f64 = 28e9;

/// Coordinate on a 1/1024 m grid, so sums with whole-meter shifts are exact.
fn dyadic(range: std::ops::Range<i64>) -> impl Strategy<Value = f64> {
    range.prop_map(|i| i as f64 / 1024.0)
}

fn dyadic_point(scale: i64) -> impl Strategy<Value = Vec3> {
    (
        dyadic(-scale..scale),
        dyadic(-scale..scale),
        dyadic(-scale..scale),
    )
        .prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn cn(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        * std::f64::consts::FRAC_1_SQRT_2
}

fn one_user_drop(origin: Vec3, scatterers: Vec<Scatterer>, kappa: f64) -> ChannelDrop {
    ChannelDrop {
        seed: 0,
        carrier: CarrierConfig::from_frequency(FREQ).unwrap(),
        rician_factor: kappa,
        users: vec![UserDrop {
            origin,
            rotation: Rotation::identity(),
            los_gain: 3e-6,
            scatterers,
        }],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn steering_entries_have_unit_modulus(
        t in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), 1..10),
        x in (-300.0..300.0f64, -300.0..300.0f64, -300.0..300.0f64),
    ) {
        let t: Vec<Vec3> = t.into_iter().map(|(a, b, c)| Vec3::new(a, b, c)).collect();
        let x = Vec3::new(x.0, x.1, x.2);
        for a in steering_vector(&t, &x, 0.0107).iter() {
            prop_assert!((a.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn rigid_translation_leaves_the_channel_unchanged(
        transmit in prop::collection::vec(dyadic_point(1024), 1..6),
        origin in dyadic_point(100 * 1024),
        local in dyadic_point(64),
        scatterers in prop::collection::vec(dyadic_point(100 * 1024), 0..4),
        shift in (-50i32..50, -50i32..50, -50i32..50),
        seed in any::<u64>(),
    ) {
        let shift = Vec3::new(shift.0 as f64, shift.1 as f64, shift.2 as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scatterers: Vec<Scatterer> = scatterers
            .into_iter()
            .map(|position| Scatterer {
                position,
                reflection: cn(&mut rng),
                gain_bs: rng.random_range(1e-4..1e-2),
                gain_user: rng.random_range(1e-4..1e-2),
            })
            .collect();
        let moved: Vec<Scatterer> = scatterers
            .iter()
            .map(|s| Scatterer { position: s.position + shift, ..*s })
            .collect();
        let moved_t: Vec<Vec3> = transmit.iter().map(|t| t + shift).collect();

        let a = one_user_drop(origin, scatterers, 2.0).user_channel(0, &transmit, &local).unwrap();
        let b = one_user_drop(origin + shift, moved, 2.0).user_channel(0, &moved_t, &local).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x.norm() - y.norm()).abs() <= 1e-12 * x.norm().max(f64::MIN_POSITIVE));
        }
    }
}

/// Share of `E‖h‖²` carried by the deterministic LoS part, by Monte Carlo over
/// the reflection coefficients, with LoS and per-path gains equal.
#[test]
fn rician_power_split_matches_kappa() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let transmit: Vec<Vec3> = (0..4)
        .map(|n| Vec3::new(0.3 * n as f64, 0.0, 0.1))
        .collect();
    let user = Vec3::new(-20.0, 90.0, 0.0);
    let positions: Vec<Vec3> = (0..5)
        .map(|_| {
            Vec3::new(
                rng.random_range(-80.0..80.0),
                rng.random_range(50.0..150.0),
                0.0,
            )
        })
        .collect();
    let rho: f64 = 2e-5;
    for kappa_db in [0.0, 3.0, 15.0] {
        let kappa: f64 = 10f64.powf(kappa_db / 10.0);
        let drop_scatterers = |rng: &mut ChaCha8Rng| -> Vec<Scatterer> {
            positions
                .iter()
                .map(|&position| Scatterer {
                    position,
                    reflection: cn(rng),
                    gain_bs: rho.sqrt(),
                    gain_user: rho.sqrt(),
                })
                .collect()
        };
        let mut d = one_user_drop(user, Vec::new(), kappa);
        d.users[0].los_gain = rho;
        // With no scatterers the channel is the LoS term alone.
        let h_los = d.user_channel(0, &transmit, &Vec3::zeros()).unwrap();
        let samples = 20_000;
        let mut scattered = 0.0;
        for _ in 0..samples {
            d.users[0].scatterers = drop_scatterers(&mut rng);
            let h: ChannelVector = d.user_channel(0, &transmit, &Vec3::zeros()).unwrap();
            scattered += (h - &h_los).norm_squared();
        }
        let scattered = scattered / samples as f64;
        // Unit-modulus steering entries make the LoS power N ρ² κ/(κ+1).
        let los = transmit.len() as f64 * rho * rho * kappa / (kappa + 1.0);
        assert!((h_los.norm_squared() - los).abs() <= 1e-12 * los);
        let los_fraction = los / (los + scattered);
        let expected = kappa / (kappa + 1.0);
        assert!(
            ((los_fraction - expected) / expected).abs() < 0.02,
            "κ = {kappa_db} dB: LoS fraction {los_fraction} vs {expected}"
        );
        let nlos_fraction = 1.0 - los_fraction;
        let expected = 1.0 / (kappa + 1.0);
        assert!(
            ((nlos_fraction - expected) / expected).abs() < 0.02,
            "κ = {kappa_db} dB: scattered fraction {nlos_fraction} vs {expected}"
        );
    }
}

#[test]
fn same_drop_seed_gives_bit_identical_channels() {
    let s = Scenario::default();
    let transmit: Vec<Vec3> = (0..s.transmit_antennas)
        .map(|n| Vec3::new(0.01 * n as f64, 0.0, -0.02 * n as f64))
        .collect();
    let receive = vec![Vec3::new(0.001, 0.0, -0.002); s.users];
    let a = drop_scenario(&s, 1234)
        .unwrap()
        .channel
        .channels(&transmit, &receive)
        .unwrap();
    let b = drop_scenario(&s, 1234)
        .unwrap()
        .channel
        .channels(&transmit, &receive)
        .unwrap();
    for (x, y) in a.iter().zip(&b) {
        for (p, q) in x.iter().zip(y.iter()) {
            assert_eq!(p.re.to_bits(), q.re.to_bits());
            assert_eq!(p.im.to_bits(), q.im.to_bits());
        }
    }
}
