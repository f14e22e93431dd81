//! The acceptance gate: one test per release criterion, each printing a
//! single PASS/FAIL line (visible with `--nocapture`, and always printed on
//! failure). Every criterion states its tolerance inline.

use tradevol_core::brokers::{MbsBroker, PsiVariant};
use tradevol_core::dist::{sample_representation_lb, DistributionSpec};
use tradevol_core::eval::{
    self, fit_growth, regret_bound, BoundKind, CurvePoint, GrowthModel, RegretCurve, RunConfig,
};
use tradevol_core::game::{
    play_game, replay_consistent, BisectStrategy, BrokerStrategy, RandomStrategy, SegmentStrategy,
    SurrogateGame,
};
use tradevol_core::protocol::{make_feedback, FeedbackKind, ValuationPair};
use tradevol_core::stats::{ks_statistic, ks_two_sample};
use tradevol_core::{Algo, Broker, BrokerSpec, SimRng};

use rand::SeedableRng;

// NaN comparisons land in the `false` arm, so a poisoned statistic fails
// its criterion rather than slipping through.
macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        match $cond {
            true => {}
            false => return Err(format!($($arg)+)),
        }
    };
}

fn criterion(label: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("{label}: PASS"),
        Err(msg) => {
            println!("{label}: FAIL ({msg})");
            panic!("{label}: FAIL ({msg})");
        }
    }
}

#[test]
fn criterion_1_median_identities_on_atomless_families() {
    criterion(
        "[criterion 1] expected reward equals 2F(1-F) and peaks at the median",
        || {
            let families = [
                DistributionSpec::uniform(),
                DistributionSpec::piecewise_linear_lb(0.0).unwrap(),
                DistributionSpec::piecewise_linear_lb(0.25).unwrap(),
                DistributionSpec::piecewise_linear_lb(0.5).unwrap(),
                DistributionSpec::piecewise_linear_lb(1.0).unwrap(),
                DistributionSpec::interval_uniform(3, 2).unwrap(),
            ];
            for d in &families {
                for i in 0..1000 {
                    let p = i as f64 / 999.0;
                    let f = d.cdf(p);
                    let psi = d.psi_true(p);
                    let product = (psi - 2.0 * f * (1.0 - f)).abs();
                    ensure!(
                        product <= 1e-12,
                        "{} at p={p}: |psi - 2F(1-F)| = {product}",
                        d.label()
                    );
                    let gap = (0.5 - psi - 2.0 * (0.5 - f) * (0.5 - f)).abs();
                    ensure!(
                        gap <= 1e-12,
                        "{} at p={p}: |1/2 - psi - 2(1/2-F)^2| = {gap}",
                        d.label()
                    );
                }
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_2_four_atom_closed_forms() {
    criterion(
        "[criterion 2] four-atom expected rewards at 1/3 and 2/3 match closed forms",
        || {
            for &eps in &[-0.25, -0.1, 0.0, 0.1, 0.25] {
                let d = DistributionSpec::four_atom(eps).unwrap();
                let lo = d.psi_true(1.0 / 3.0);
                let hi = d.psi_true(2.0 / 3.0);
                let lo_form = 11.0 / 16.0 - eps / 8.0 - eps * eps / 8.0;
                let hi_form = 11.0 / 16.0 + eps / 8.0 - eps * eps / 8.0;
                ensure!(
                    (lo - lo_form).abs() <= 1e-12,
                    "eps {eps}: psi(1/3) = {lo}, expected {lo_form}"
                );
                ensure!(
                    (hi - hi_form).abs() <= 1e-12,
                    "eps {eps}: psi(2/3) = {hi}, expected {hi_form}"
                );
                ensure!(
                    (hi - lo - eps / 4.0).abs() <= 1e-12,
                    "eps {eps}: gap {} != eps/4",
                    hi - lo
                );
            }
            Ok(())
        },
    );
}

/// Sweeps one config over horizons, with bound checks at `stated` horizons
/// and growth fits over the full (denser) grid.
fn sweep_curve(
    d: &DistributionSpec,
    broker: BrokerSpec,
    horizons: &[u64],
    replications: u64,
    base_seed: u64,
) -> Result<RegretCurve, String> {
    let mut cfg = RunConfig::new(d.clone(), broker, 1);
    cfg.replications = replications;
    cfg.base_seed = base_seed;
    let result = eval::run_sweep(&cfg, horizons).map_err(|e| e.to_string())?;
    Ok(result.curve)
}

#[test]
fn criterion_3_empirical_median_regret_is_logarithmic_and_bounded() {
    criterion(
        "[criterion 3] follow-the-median stays under 1/2 + (pi/2)(1 + ln(T-1)) and grows like ln T",
        || {
            // Bound checks at {100, 1000, 10000}; two intermediate horizons
            // give the growth fit the four points it needs.
            let horizons = [100, 316, 1000, 3162, 10000];
            let stated = [100u64, 1000, 10000];
            let families = [
                DistributionSpec::uniform(),
                DistributionSpec::piecewise_linear_lb(0.25).unwrap(),
            ];
            for d in &families {
                let curve = sweep_curve(d, BrokerSpec::new(Algo::Fem), &horizons, 200, 1000)?;
                for check in eval::check_bound(&curve, BoundKind::Fem).map_err(|e| e.to_string())? {
                    if stated.contains(&check.horizon) {
                        ensure!(
                            check.pass,
                            "{} T={}: mean {} + 3se {} > bound {}",
                            d.label(),
                            check.horizon,
                            check.mean,
                            3.0 * check.stderr,
                            check.bound
                        );
                    }
                }
                let log_fit = fit_growth(&curve, GrowthModel::Log).map_err(|e| e.to_string())?;
                let sqrt_fit = fit_growth(&curve, GrowthModel::Sqrt).map_err(|e| e.to_string())?;
                ensure!(
                    log_fit.r_squared >= 0.9,
                    "{}: log-model R^2 {}",
                    d.label(),
                    log_fit.r_squared
                );
                ensure!(
                    log_fit.r_squared > sqrt_fit.r_squared,
                    "{}: log R^2 {} not above sqrt R^2 {}",
                    d.label(),
                    log_fit.r_squared,
                    sqrt_fit.r_squared
                );
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_4_binary_search_regret_and_epoch_lengths() {
    criterion(
        "[criterion 4] binary search stays under 2 + 6 log2(MT) ln T with short epochs",
        || {
            let families = [
                DistributionSpec::uniform(),
                DistributionSpec::piecewise_linear_lb(0.25).unwrap(),
                DistributionSpec::interval_uniform(3, 3).unwrap(),
            ];
            for d in &families {
                let lipschitz = d.lipschitz_bound().expect("all three families are Lipschitz");
                for &horizon in &[1024u64, 8192] {
                    let mut cfg = RunConfig::new(d.clone(), BrokerSpec::new(Algo::Mbs), horizon);
                    cfg.replications = 200;
                    cfg.base_seed = 2000;
                    let summary = eval::run_replicated(&cfg).map_err(|e| e.to_string())?;
                    let bound = regret_bound(BoundKind::Mbs { lipschitz }, horizon)
                        .map_err(|e| e.to_string())?;
                    ensure!(
                        summary.mean + 3.0 * summary.stderr <= bound,
                        "{} T={horizon}: mean {} + 3se {} > bound {bound}",
                        d.label(),
                        summary.mean,
                        3.0 * summary.stderr
                    );
                }
                // Epoch-length check: a completed epoch at price q with
                // F(q) != 1/2 collects at most 2 ln(2/delta) / (1/2 - F)^2 + 2
                // bits before the confidence test fires.
                let horizon = 8192u64;
                let delta = 2.0 / (horizon as f64).powi(3);
                for seed in 0..20u64 {
                    let mut broker = MbsBroker::new(delta, horizon).unwrap();
                    let mut rng = SimRng::seed_from_u64(4000 + seed);
                    for t in 1..=horizon {
                        let price = broker.propose(t).unwrap();
                        let pair =
                            ValuationPair::new(d.sample(&mut rng), d.sample(&mut rng)).unwrap();
                        let feedback = make_feedback(FeedbackKind::TwoBit, price, pair);
                        broker.observe(t, price, &feedback).unwrap();
                    }
                    for record in broker.completed_epochs() {
                        let f = d.cdf(record.price);
                        if f == 0.5 {
                            continue;
                        }
                        let cap = 2.0 * (2.0 / delta).ln() / ((0.5 - f) * (0.5 - f)) + 2.0;
                        ensure!(
                            record.bits as f64 <= cap,
                            "{} seed {seed}: epoch at {} used {} bits, cap {cap}",
                            d.label(),
                            record.price,
                            record.bits
                        );
                    }
                }
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_5_empirical_maximizer_regret_is_bounded() {
    criterion(
        "[criterion 5] empirical-maximizer regret stays under 1 + 8 sqrt(pi) sqrt(T-1) for both objectives",
        || {
            let families = [
                DistributionSpec::four_atom(0.1).unwrap(),
                DistributionSpec::uniform(),
            ];
            for d in &families {
                for variant in [PsiVariant::Surrogate, PsiVariant::Exact] {
                    for &horizon in &[100u64, 1000] {
                        let mut broker = BrokerSpec::new(Algo::Fepsi);
                        broker.params.variant = Some(variant);
                        let mut cfg = RunConfig::new(d.clone(), broker, horizon);
                        cfg.replications = 200;
                        cfg.base_seed = 3000;
                        let summary = eval::run_replicated(&cfg).map_err(|e| e.to_string())?;
                        let bound =
                            regret_bound(BoundKind::Fepsi, horizon).map_err(|e| e.to_string())?;
                        ensure!(
                            summary.mean + 3.0 * summary.stderr <= bound,
                            "{} {} T={horizon}: mean {} + 3se {} > bound {bound}",
                            d.label(),
                            variant.name(),
                            summary.mean,
                            3.0 * summary.stderr
                        );
                    }
                }
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_6_sqrt_regime_on_shrinking_atom_gaps() {
    criterion(
        "[criterion 6] regret on four-atom instances with gap 1/sqrt(T) grows like sqrt(T)",
        || {
            // The stated horizons are {400, 1600, 6400}; two intermediates
            // give the growth fit four-plus points. Each horizon gets its
            // own instance with eps = 1/sqrt(T).
            let horizons = [400u64, 800, 1600, 3200, 6400];
            let mut points = Vec::new();
            for &horizon in &horizons {
                let eps = 1.0 / (horizon as f64).sqrt();
                let d = DistributionSpec::four_atom(eps).map_err(|e| e.to_string())?;
                let mut cfg = RunConfig::new(d, BrokerSpec::new(Algo::Fepsi), horizon);
                cfg.replications = 300;
                cfg.base_seed = 6000;
                let summary = eval::run_replicated(&cfg).map_err(|e| e.to_string())?;
                points.push(CurvePoint {
                    horizon,
                    mean: summary.mean,
                    stderr: summary.stderr,
                    replications: cfg.replications,
                });
            }
            for w in points.windows(2) {
                ensure!(
                    w[1].mean > w[0].mean,
                    "mean regret fell from {} (T={}) to {} (T={})",
                    w[0].mean,
                    w[0].horizon,
                    w[1].mean,
                    w[1].horizon
                );
            }
            let curve = RegretCurve::new(points).map_err(|e| e.to_string())?;
            let sqrt_fit = fit_growth(&curve, GrowthModel::Sqrt).map_err(|e| e.to_string())?;
            let log_fit = fit_growth(&curve, GrowthModel::Log).map_err(|e| e.to_string())?;
            ensure!(
                sqrt_fit.r_squared > log_fit.r_squared,
                "sqrt R^2 {} not above log R^2 {}",
                sqrt_fit.r_squared,
                log_fit.r_squared
            );
            Ok(())
        },
    );
}

#[test]
fn criterion_7_search_game_loss_floor() {
    criterion(
        "[criterion 7] every search-game strategy pays at least (n-1)/2 with the segment floor intact",
        || {
            let horizon = 100u64;
            for &n in &[4u32, 8, 12] {
                let mut strategies: Vec<Box<dyn SegmentStrategy>> = vec![
                    Box::new(BisectStrategy::new(n).unwrap()),
                    Box::new(
                        BrokerStrategy::new(
                            BrokerSpec::new(Algo::Mbs).build(horizon).unwrap(),
                            n,
                        )
                        .unwrap(),
                    ),
                ];
                for seed in 0..50 {
                    strategies.push(Box::new(RandomStrategy::new(n, seed).unwrap()));
                }
                for strategy in &mut strategies {
                    let outcome =
                        play_game(strategy.as_mut(), n, horizon).map_err(|e| e.to_string())?;
                    let floor = u64::from(n) - 1;
                    ensure!(
                        outcome.rounds_survived >= floor,
                        "n={n} {}: survived only {} rounds",
                        outcome.strategy,
                        outcome.rounds_survived
                    );
                    ensure!(
                        outcome.total_loss >= floor as f64 / 2.0,
                        "n={n} {}: loss {}",
                        outcome.strategy,
                        outcome.total_loss
                    );
                    for round in &outcome.history {
                        let len = round.segment.1 - round.segment.0 + 1;
                        ensure!(
                            len >= SurrogateGame::min_segment_len(n, round.t),
                            "n={n} {} round {}: segment size {len}",
                            outcome.strategy,
                            round.t
                        );
                    }
                    ensure!(
                        replay_consistent(&outcome),
                        "n={n} {}: transcript inconsistent",
                        outcome.strategy
                    );
                }
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_8_sampler_fidelity() {
    criterion(
        "[criterion 8] samplers match their cdfs (KS <= 0.01) and each other (KS <= 0.015)",
        || {
            let families = [
                DistributionSpec::uniform(),
                DistributionSpec::piecewise_linear_lb(0.25).unwrap(),
                DistributionSpec::piecewise_linear_lb(1.0).unwrap(),
                DistributionSpec::four_atom(0.1).unwrap(),
                DistributionSpec::interval_uniform(3, 2).unwrap(),
                DistributionSpec::mixture(
                    vec![(0.0, 0.2), (0.5, 0.3)],
                    vec![(0.0, 0.0), (0.25, 0.4), (1.0, 1.0)],
                    0.5,
                )
                .unwrap(),
            ];
            for d in &families {
                let mut rng = SimRng::seed_from_u64(800);
                let mut xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
                xs.sort_by(f64::total_cmp);
                let ks = ks_statistic(&xs, |x| d.cdf(x), |x| d.cdf_left(x));
                ensure!(ks <= 0.01, "{}: KS {ks}", d.label());
            }
            for &eps in &[0.0, 0.3, 1.0] {
                let d = DistributionSpec::piecewise_linear_lb(eps).unwrap();
                let mut rng = SimRng::seed_from_u64(801);
                let mut a: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
                a.sort_by(f64::total_cmp);
                let mut rng = SimRng::seed_from_u64(802);
                let mut b: Vec<f64> = (0..100_000)
                    .map(|_| sample_representation_lb(eps, &mut rng))
                    .collect();
                b.sort_by(f64::total_cmp);
                let ks = ks_two_sample(&a, &b);
                ensure!(ks <= 0.015, "eps {eps}: two-sample KS {ks}");
            }
            Ok(())
        },
    );
}

#[test]
fn criterion_9_objective_concentration_envelope() {
    criterion(
        "[criterion 9] empirical objectives stay inside 2 KS + 1/(2t) at t = 5000 over 100 trials",
        || {
            for d in [
                DistributionSpec::uniform(),
                DistributionSpec::piecewise_linear_lb(0.5).unwrap(),
            ] {
                let max_dev =
                    eval::dkw_psi_closeness(&d, 5000, 100, 77).map_err(|e| e.to_string())?;
                ensure!(
                    max_dev <= 0.05,
                    "{}: max deviation {max_dev} above 0.05",
                    d.label()
                );
            }
            Ok(())
        },
    );
}
