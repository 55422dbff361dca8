use hetrecip_core::equilibrium::{solve_equilibrium, SolverOptions};
use hetrecip_core::model::{group_rates, spectral};
use hetrecip_core::presets;
use hetrecip_core::rng::stream_rng;
use hetrecip_core::sim::{run, SimConfig};
use hetrecip_core::tail::{
    angle, angular_transform, hill_estimator, hrv_peel, hrv_peel_rays, ray_distance, tail_report, DegreeDataset,
    HrvOptions, RayTarget, TailError, TailOptions,
};
use proptest::prelude::*;
use rand::Rng;

/// 90% of points on the ray `y = 2x` with Pareto(2) radii, 10% on `y = x/2`
/// with Pareto(4) radii, scaled by 10 and rounded.
fn two_ray_sample(n: usize, seed: u64) -> DegreeDataset {
    let mut rng = stream_rng(seed, 0);
    let pairs = (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            let (a, c) = if rng.random::<f64>() < 0.9 { (2.0, 2.0) } else { (0.5, 4.0) };
            let r = 10.0 * u.powf(-1.0 / c);
            let x = r / (1.0 + a);
            (x.round() as u64, (a * x).round() as u64)
        })
        .collect();
    DegreeDataset::new(pairs, None).unwrap()
}

#[test]
fn synthetic_two_ray_recovery() {
    let data = two_ray_sample(1_000_000, 21);
    let rays = [
        RayTarget { slope: 2.0, predicted_index: 2.0, conditions_met: true },
        RayTarget { slope: 0.5, predicted_index: 4.0, conditions_met: true },
    ];
    let r = hrv_peel_rays(&data, &rays, &HrvOptions::default()).unwrap();
    assert!((r.first_ray_theta - 2.0 / 3.0).abs() <= 0.05, "{r:?}");
    assert!((r.second_ray_estimate - 1.0 / 3.0).abs() <= 0.05, "{r:?}");
    assert!((r.first_index - 2.0).abs() / 2.0 <= 0.15, "{r:?}");
    assert!((r.second_index - 4.0).abs() / 4.0 <= 0.15, "{r:?}");
    for s in &r.stages {
        assert_eq!(s.selected + s.removed, r.total);
    }
}

#[test]
fn single_group_peel_is_refused() {
    let p = presets::single_group();
    let sol = solve_equilibrium(&p, &SolverOptions::default()).unwrap();
    let s = spectral(&p, &group_rates(&p), 0).unwrap();
    let out = run(&p, &SimConfig::new(20_000, 3)).unwrap();
    let data = DegreeDataset::from_state(&out.state);
    assert!(matches!(
        hrv_peel(&data, std::slice::from_ref(&s), &sol, &HrvOptions::default()),
        Err(TailError::ConditionsUnmet(_))
    ));
    let rep = tail_report(&data, &[s], &sol, &TailOptions::default()).unwrap();
    assert!(rep.hrv.is_none() && rep.hrv_error.is_some());
    assert_eq!(rep.angular_histogram.iter().sum::<u64>() as usize, rep.selected);
    // symmetric model: the extremes sit around theta = 1/2
    assert!((rep.theta_median - 0.5).abs() < 0.1, "{}", rep.theta_median);
    let again =
        tail_report(&data, &[spectral(&p, &group_rates(&p), 0).unwrap()], &sol, &TailOptions::default()).unwrap();
    assert_eq!(rep, again);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn hill_scale_invariance(vals in prop::collection::vec(0.01f64..1e4, 20..300), j in -20i32..20, c in 0.001f64..1000.0, k in 1usize..19) {
        let base = hill_estimator(&vals, k);
        let pow2: Vec<f64> = vals.iter().map(|v| v * 2f64.powi(j)).collect();
        let other: Vec<f64> = vals.iter().map(|v| v * c).collect();
        match base {
            Ok(b) => {
                // power-of-two scaling is exact in floating point
                prop_assert_eq!(hill_estimator(&pow2, k).unwrap().index_estimate, b.index_estimate);
                let o = hill_estimator(&other, k).unwrap().index_estimate;
                prop_assert!((o - b.index_estimate).abs() <= 1e-9 * b.index_estimate);
            }
            Err(e) => prop_assert_eq!(hill_estimator(&pow2, k).unwrap_err(), e),
        }
    }

    #[test]
    fn angles_in_unit_interval_and_scale_free(pairs in prop::collection::vec((0u64..10_000, 0u64..10_000), 1..100), c in 1u64..50) {
        let pairs: Vec<(u64, u64)> = pairs.into_iter().filter(|p| p.0 + p.1 > 0).collect();
        if pairs.is_empty() {
            return Ok(());
        }
        let th = angular_transform(&pairs, 0.0).unwrap();
        prop_assert!(th.iter().all(|t| (0.0..=1.0).contains(t)));
        for &(x, y) in &pairs {
            prop_assert!((angle(c * x, c * y) - angle(x, y)).abs() <= 1e-15);
        }
    }

    #[test]
    fn ray_distance_homogeneous(x in 0.0f64..1e6, y in 0.0f64..1e6, a in 0.001f64..100.0, c in 0.0f64..1e3) {
        let d = ray_distance((x, y), a);
        prop_assert!(d >= 0.0);
        prop_assert!((ray_distance((c * x, c * y), a) - c * d).abs() <= 1e-9 * (1.0 + c * d));
        prop_assert!(ray_distance((x, a * x), a) <= 1e-9 * (1.0 + a * x));
    }
}
