//! Heavier statistical checks that exercise whole subsystems end to end:
//! sampler fidelity, Monte Carlo agreement with the analytic reward curves,
//! binary-search price tracking, estimator consistency, and the equivalence
//! of the two regret accounting modes.

use rand::{Rng, SeedableRng};
use tradevol_core::brokers::{EpochDecision, FePsiBroker, MbsBroker, PsiVariant};
use tradevol_core::dist::{sample_representation_lb, DistributionSpec};
use tradevol_core::eval::{self, RegretMode, RunConfig};
use tradevol_core::protocol::{
    make_feedback, reconstruct_bandit_reward, FeedbackKind, ValuationPair,
};
use tradevol_core::stats::{ks_statistic, ks_two_sample};
use tradevol_core::{Algo, Broker, BrokerSpec, SimRng};

fn all_families() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::uniform(),
        DistributionSpec::piecewise_linear_lb(0.25).unwrap(),
        DistributionSpec::piecewise_linear_lb(0.5).unwrap(),
        DistributionSpec::four_atom(0.1).unwrap(),
        DistributionSpec::interval_uniform(3, 2).unwrap(),
        DistributionSpec::mixture(
            vec![(0.0, 0.2), (0.5, 0.3)],
            vec![(0.0, 0.0), (0.25, 0.4), (1.0, 1.0)],
            0.5,
        )
        .unwrap(),
    ]
}

fn draw_sorted(d: &DistributionSpec, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = SimRng::seed_from_u64(seed);
    let mut xs: Vec<f64> = (0..count).map(|_| d.sample(&mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    xs
}

#[test]
fn every_family_samples_its_own_cdf() {
    for d in all_families() {
        let xs = draw_sorted(&d, 100_000, 0xD15);
        let ks = ks_statistic(&xs, |x| d.cdf(x), |x| d.cdf_left(x));
        assert!(ks <= 0.01, "{}: KS distance {ks}", d.label());
    }
}

#[test]
fn the_two_piecewise_linear_samplers_agree() {
    for &eps in &[0.0, 0.3, 1.0] {
        let d = DistributionSpec::piecewise_linear_lb(eps).unwrap();
        let a = draw_sorted(&d, 100_000, 1);
        let mut rng = SimRng::seed_from_u64(2);
        let mut b: Vec<f64> = (0..100_000)
            .map(|_| sample_representation_lb(eps, &mut rng))
            .collect();
        b.sort_by(f64::total_cmp);
        let ks = ks_two_sample(&a, &b);
        assert!(ks <= 0.015, "eps {eps}: two-sample KS {ks}");
    }
}

#[test]
fn monte_carlo_trade_rates_match_the_analytic_curve() {
    let cases = [
        (DistributionSpec::uniform(), 0.3),
        (DistributionSpec::piecewise_linear_lb(0.5).unwrap(), 0.5625),
        (DistributionSpec::four_atom(0.1).unwrap(), 1.0 / 3.0),
        (DistributionSpec::interval_uniform(3, 2).unwrap(), 0.625),
    ];
    let n = 100_000u64;
    let tol = 4.0 * (0.25 / n as f64).sqrt();
    for (d, p) in cases {
        let mut rng = SimRng::seed_from_u64(7);
        let mut hits = 0u64;
        for _ in 0..n {
            let pair = ValuationPair::new(d.sample(&mut rng), d.sample(&mut rng)).unwrap();
            hits += u64::from(pair.trades_at(tradevol_core::Price::new(p).unwrap()));
        }
        let rate = hits as f64 / n as f64;
        let psi = d.psi_true(p);
        assert!(
            (rate - psi).abs() <= tol,
            "{} at {p}: rate {rate} vs analytic {psi}",
            d.label()
        );
    }
}

/// Drives a binary-search broker for `horizon` rounds and hands back its
/// completed-epoch log.
fn drive_mbs(d: &DistributionSpec, horizon: u64, seed: u64) -> MbsBroker {
    let delta = 2.0 / (horizon as f64).powi(3);
    let mut broker = MbsBroker::new(delta, horizon).unwrap();
    let mut rng = SimRng::seed_from_u64(seed);
    for t in 1..=horizon {
        let price = broker.propose(t).unwrap();
        let pair = ValuationPair::new(d.sample(&mut rng), d.sample(&mut rng)).unwrap();
        let feedback = make_feedback(FeedbackKind::TwoBit, price, pair);
        broker.observe(t, price, &feedback).unwrap();
    }
    broker
}

/// Whether the completed epochs follow the noise-free halving recursion on
/// the true cdf: same prices, same move directions, and no epoch completing
/// at an exact-median price.
fn follows_noiseless_recursion(d: &DistributionSpec, broker: &MbsBroker) -> bool {
    let mut q = 0.5f64;
    for (i, record) in broker.completed_epochs().iter().enumerate() {
        let tau = i as i32 + 1;
        if record.price != q {
            return false;
        }
        let f = d.cdf(q);
        if f == 0.5 {
            // The noise-free search never leaves an exact median.
            return false;
        }
        let expected = if f < 0.5 {
            EpochDecision::MovedRight
        } else {
            EpochDecision::MovedLeft
        };
        if record.decision != expected {
            return false;
        }
        let step = 2.0f64.powi(-(tau + 1));
        q = if f < 0.5 { q + step } else { q - step };
    }
    true
}

#[test]
fn binary_search_tracks_the_noiseless_recursion() {
    let horizon = 10_000;
    let runs = 1000;

    // Uniform01 starts exactly on the median, so no epoch should ever
    // complete; with the default confidence level a spurious completion is a
    // < 1% event across all runs together.
    let uniform = DistributionSpec::uniform();
    let mut good = 0;
    for seed in 0..runs {
        if follows_noiseless_recursion(&uniform, &drive_mbs(&uniform, horizon, seed)) {
            good += 1;
        }
    }
    assert!(good * 100 >= runs * 99, "uniform: {good}/{runs} runs tracked");

    // interval_uniform:k=3,n=2 sits on (1/2, 3/4): the search must go
    // 1/2 -> 3/4 -> 5/8 and then freeze on the median.
    let iu = DistributionSpec::interval_uniform(3, 2).unwrap();
    let mut good = 0;
    let mut saw_full_descent = false;
    for seed in 0..runs {
        let broker = drive_mbs(&iu, horizon, seed);
        let prices: Vec<f64> = broker.completed_epochs().iter().map(|e| e.price).collect();
        if follows_noiseless_recursion(&iu, &broker) {
            good += 1;
            if prices == [0.5, 0.75] {
                saw_full_descent = true;
                assert_eq!(broker.price(), 0.625);
            }
        }
    }
    assert!(good * 100 >= runs * 99, "interval: {good}/{runs} runs tracked");
    assert!(saw_full_descent, "no run completed both epochs");
}

#[test]
fn empirical_maximizers_concentrate_on_the_median() {
    let d = DistributionSpec::uniform();
    let t = 10_000usize;
    for variant in [PsiVariant::Surrogate, PsiVariant::Exact] {
        let mut close = 0;
        for seed in 0..100 {
            let mut rng = SimRng::seed_from_u64(seed);
            let sample: Vec<f64> = (0..2 * (t - 1)).map(|_| d.sample(&mut rng)).collect();
            let broker = FePsiBroker::from_sample(variant, &sample);
            let (price, _) = broker.argmax();
            if (price - 0.5).abs() <= 0.05 {
                close += 1;
            }
        }
        assert!(close >= 95, "{}: only {close}/100 proposals near 1/2", variant.name());
    }
}

#[test]
fn threshold_bits_reconstruct_the_trade_indicator() {
    let mut rng = SimRng::seed_from_u64(99);
    for _ in 0..100_000 {
        let p: f64 = rng.gen();
        let v1: f64 = rng.gen();
        let v2: f64 = rng.gen();
        let direct = tradevol_core::trade_indicator(p, v1, v2).unwrap();
        let rebuilt = reconstruct_bandit_reward(v1 <= p, v2 <= p);
        assert_eq!(direct, rebuilt, "p={p} v1={v1} v2={v2}");
    }
}

#[test]
fn realized_regret_agrees_with_pseudo_regret_in_expectation() {
    let mut cfg = RunConfig::new(
        DistributionSpec::uniform(),
        BrokerSpec::fixed(0.25),
        1000,
    );
    cfg.replications = 200;
    let pseudo = eval::run_replicated(&cfg).unwrap();
    cfg.regret_mode = RegretMode::Realized;
    let realized = eval::run_replicated(&cfg).unwrap();
    let tol = 4.0 * (0.25 * 1000.0f64).sqrt() / (200.0f64).sqrt();
    assert_eq!(pseudo.mean, 125.0);
    assert!(
        (realized.mean - pseudo.mean).abs() <= tol,
        "realized {} vs pseudo {} (tol {tol})",
        realized.mean,
        pseudo.mean
    );
}

#[test]
fn replicated_csv_output_is_byte_stable() {
    let mut cfg = RunConfig::new(
        DistributionSpec::piecewise_linear_lb(0.25).unwrap(),
        BrokerSpec::new(Algo::Fem),
        100,
    );
    cfg.replications = 8;
    cfg.base_seed = 31;
    let mut first = Vec::new();
    eval::write_run_csv(&mut first, &eval::run_replicated(&cfg).unwrap().records).unwrap();
    let mut second = Vec::new();
    eval::write_run_csv(&mut second, &eval::run_replicated(&cfg).unwrap().records).unwrap();
    assert!(!first.is_empty());
    assert_eq!(first, second);
}

#[test]
fn pseudo_regret_increments_are_nonnegative_for_every_broker() {
    let families = [
        DistributionSpec::uniform(),
        DistributionSpec::piecewise_linear_lb(0.25).unwrap(),
        DistributionSpec::four_atom(0.1).unwrap(),
    ];
    for d in families {
        for algo in [Algo::Fem, Algo::Fepsi, Algo::Mbs, Algo::GridUcb] {
            let cfg = RunConfig::new(d.clone(), BrokerSpec::new(algo), 300);
            let record = eval::run_once(&cfg, 5).unwrap();
            let mut prev = 0.0;
            for row in &record.rounds {
                assert!(
                    row.cum_regret >= prev - 1e-12,
                    "{} on {}: decrease at round {}",
                    algo.name(),
                    d.label(),
                    row.t
                );
                prev = row.cum_regret;
            }
        }
    }
}
