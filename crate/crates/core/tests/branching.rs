use hetrecip_core::embedding::{embedding_chain, exact_observable_law, verify_equivalence, EmbeddingChainState};
use hetrecip_core::equilibrium::{solve_equilibrium, SolverOptions};
use hetrecip_core::mbi::{simulate_mbi, LimitPairSampler, MbiDynamics, DEFAULT_EVENT_BUDGET};
use hetrecip_core::model::{group_rates, spectral, ModelParams};
use hetrecip_core::presets;
use hetrecip_core::rng::stream_rng;
use proptest::prelude::*;

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

#[test]
fn yule_mean_without_immigration_or_reciprocity() {
    let (alpha, t) = (0.5, 2.0);
    let d = MbiDynamics::new(alpha, 0.0, 0.0, 0.0);
    let xs: Vec<f64> = (0..100_000)
        .map(|i| simulate_mbi(&d, (1, 0), t, DEFAULT_EVENT_BUDGET, &mut stream_rng(11, i)).unwrap().n1 as f64)
        .collect();
    let (m, v) = mean_var(&xs);
    let expect = (alpha * t).exp();
    let se = (v / xs.len() as f64).sqrt();
    assert!((m - expect).abs() <= 3.0 * se, "mean {m}, expected {expect}, se {se}");
}

#[test]
fn immigration_count_is_poisson() {
    let (delta, t) = (1.3, 3.0);
    let d = MbiDynamics::new(0.4, delta, 0.3, 0.6);
    let n = 20_000;
    let xs: Vec<f64> = (0..n)
        .map(|i| simulate_mbi(&d, (0, 0), t, DEFAULT_EVENT_BUDGET, &mut stream_rng(12, i)).unwrap().immigrations as f64)
        .collect();
    let (m, v) = mean_var(&xs);
    let lam = delta * t;
    let nf = n as f64;
    assert!((m - lam).abs() <= 3.0 * (lam / nf).sqrt(), "mean {m} vs {lam}");
    // variance of the sample variance for a Poisson law: (lam + 2 lam^2) / n
    assert!((v - lam).abs() <= 3.0 * ((lam + 2.0 * lam * lam) / nf).sqrt(), "variance {v} vs {lam}");
}

#[test]
fn type_ratio_settles_on_the_ray() {
    let p = presets::two_groups();
    let rates = group_rates(&p);
    let s = spectral(&p, &rates, 1).unwrap();
    assert!(s.lambda > std::f64::consts::LN_2);
    let d = MbiDynamics::for_group(&p, &rates, 1);
    let mut devs: Vec<f64> = (0..1_000)
        .map(|i| {
            let st = simulate_mbi(&d, (1, 1), 15.0, DEFAULT_EVENT_BUDGET, &mut stream_rng(13, i)).unwrap();
            (st.n2 as f64 / st.n1 as f64 - s.slope).abs()
        })
        .collect();
    devs.sort_by(f64::total_cmp);
    let median = 0.5 * (devs[499] + devs[500]);
    assert!(median <= 0.05, "median deviation {median}");
}

#[test]
fn first_reciprocation_rate_is_rho0() {
    let p = presets::single_group();
    let rates = group_rates(&p);
    let n = 100_000u64;
    let hits = (0..n)
        .filter(|&i| {
            let mut rng = stream_rng(14, i);
            let mut c = EmbeddingChainState::start(&p, &mut rng);
            c.jump(&p, &rates, &mut rng).reciprocated()
        })
        .count() as f64;
    let rho0 = 0.5;
    let sigma = (rho0 * (1.0 - rho0) / n as f64).sqrt();
    assert!((hits / n as f64 - rho0).abs() <= 3.0 * sigma);
}

#[test]
fn one_step_edge_law() {
    let p = presets::single_group();
    let law = exact_observable_law(&p, 1).unwrap();
    let three: f64 = law.iter().filter(|(k, _)| k.edges == 3).map(|(_, v)| v).sum();
    assert!((three - 0.5).abs() < 1e-15);
    let rep = verify_equivalence(&p, 1, 100_000, 15).unwrap();
    assert!(rep.chi_square.p_value > 1e-3, "{rep:?}");

    let none = ModelParams::single_group(0.5, 1.0, 0.0).unwrap();
    let rep = verify_equivalence(&none, 1, 10_000, 16).unwrap();
    assert_eq!(rep.support, 2);
    assert!(rep.chi_square.p_value > 1e-3, "{rep:?}");
    assert!(exact_observable_law(&none, 1).unwrap().keys().all(|k| k.edges == 2));
    for i in 0..1_000 {
        let c = embedding_chain(&none, 1, &mut stream_rng(17, i)).unwrap();
        assert_eq!(c.edges(), 2);
    }
}

#[test]
fn two_step_law_matches_for_generic_groups() {
    let p = ModelParams::new(0.55, 1.7, vec![0.6, 0.4], vec![vec![0.1, 0.8], vec![0.65, 0.3]]).unwrap();
    let good =
        (0..5u64).filter(|&r| verify_equivalence(&p, 2, 100_000, 500 + r).unwrap().chi_square.p_value > 1e-3).count();
    assert!(good >= 4);
    let rep = verify_equivalence(&p, 3, 100_000, 600).unwrap();
    assert!(rep.chi_square.p_value > 1e-4, "{rep:?}");
}

#[test]
fn limit_pairs_dominate_their_start() {
    let p = presets::two_groups();
    let sol = solve_equilibrium(&p, &SolverOptions::default()).unwrap();
    let s = LimitPairSampler::new(&p, &sol);
    for i in 0..2_000 {
        let mut a = stream_rng(18, i);
        let mut b = stream_rng(18, i);
        let m = (i % 2) as usize;
        // same stream: the initial state is the first uniform drawn in both
        let start = s.sample_at(m, 0.0, &mut a).unwrap();
        let later = s.sample_at(m, 2.0, &mut b).unwrap();
        assert!(later.0 >= start.0 && later.1 >= start.1);
        assert!(start.0 + start.1 >= 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn counts_move_by_unit_increments(
        alpha in 0.05f64..0.95, delta in 0.0f64..3.0, s in 0.0f64..=1.0, c in 0.0f64..=1.0,
        seed in any::<u64>(), t in 0.0f64..3.0,
    ) {
        let d = MbiDynamics::new(alpha, delta, s, c);
        let mut prev = (1u64, 1u64);
        let mut rng = stream_rng(seed, 0);
        let mut clock = 0.0;
        // chain short horizons from the previous end state
        for _ in 0..10 {
            let st = simulate_mbi(&d, prev, t / 10.0, DEFAULT_EVENT_BUDGET, &mut rng).unwrap();
            prop_assert!(st.n1 >= prev.0 && st.n2 >= prev.1);
            prop_assert!(st.n1 - prev.0 <= st.events && st.n2 - prev.1 <= st.events);
            let grown = (st.n1 - prev.0) + (st.n2 - prev.1);
            prop_assert!(grown >= st.events && grown <= 2 * st.events);
            prev = (st.n1, st.n2);
            clock += st.t;
        }
        prop_assert!((clock - t).abs() < 1e-9);
    }

    #[test]
    fn chain_identity_for_random_params(
        alpha in 0.05f64..0.95, delta in 0.05f64..3.0,
        r in prop::collection::vec(0.0f64..=1.0, 4), w in 0.05f64..0.95, seed in any::<u64>(),
    ) {
        let p = ModelParams::new(alpha, delta, vec![w, 1.0 - w], vec![r[..2].to_vec(), r[2..].to_vec()]).unwrap();
        let c = embedding_chain(&p, 200, &mut stream_rng(seed, 0)).unwrap();
        prop_assert!(c.check_identity());
        prop_assert_eq!(c.processes.len(), 201);
    }
}
