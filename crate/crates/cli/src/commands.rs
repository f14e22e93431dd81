//! Subcommand implementations. Stdout carries the machine-readable result
//! (JSON for `run`/`sweep`/`game`, labeled deviation lines for `validate`);
//! diagnostics go to stderr via the exit-code mapping in `main`.

use std::fs::File;
use std::path::{Path, PathBuf};

use rand::SeedableRng as _;
use serde::Serialize;

use tradevol_core::dist::{sample_representation_lb, DistributionSpec};
use tradevol_core::eval::{self, fit_growth, EvalError, GrowthFit, GrowthModel, RunConfig};
use tradevol_core::game::{
    play_game, BisectStrategy, BrokerStrategy, RandomStrategy, SegmentStrategy,
};
use tradevol_core::stats::{ks_statistic, ks_two_sample};
use tradevol_core::{Algo, BrokerSpec, SimRng};

use crate::parse::{self, ExperimentFile};
use crate::{CheckArg, CliError, GameArgs, RunArgs, StrategyArg};

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let distribution = parse::parse_dist(&args.dist)?;
    let mut broker = BrokerSpec::new(args.algo.into());
    broker.params.delta = args.delta;
    broker.params.k = args.k;
    broker.params.p = args.price;
    broker.params.variant = args.variant.map(Into::into);
    let mut cfg = RunConfig::new(distribution, broker, args.horizon);
    cfg.replications = args.reps;
    cfg.base_seed = args.seed;
    if let Some(feedback) = args.feedback {
        cfg.feedback = feedback.into();
    }
    cfg.regret_mode = args.regret_mode.into();
    cfg.validate()?;
    let summary = eval::run_replicated(&cfg)?;
    let row = eval::sweep_row(&cfg, &summary);
    if let Some(out) = &args.out {
        eval::write_sweep_csv(File::create(out)?, std::slice::from_ref(&row))?;
    }
    if let Some(trace) = &args.trace {
        eval::write_run_csv(File::create(trace)?, &summary.records)?;
    }
    println!("{}", serde_json::to_string_pretty(&row)?);
    Ok(())
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    rows: &'a [eval::SweepRow],
    fits: &'a [GrowthFit],
}

pub fn cmd_sweep(path: &Path) -> Result<(), CliError> {
    let exp = ExperimentFile::load(path)?;
    let base = exp.to_run_config();
    base.validate()?;
    let result = eval::run_sweep(&base, &exp.horizons)?;
    // Growth fits need four points; shorter sweeps just omit them.
    let mut fits = Vec::new();
    if result.curve.points.len() >= 4 {
        fits.push(fit_growth(&result.curve, GrowthModel::Log)?);
        fits.push(fit_growth(&result.curve, GrowthModel::Sqrt)?);
    }
    eval::write_sweep_csv(File::create(&exp.output)?, &result.rows)?;
    let summary = SweepSummary { rows: &result.rows, fits: &fits };
    let json = serde_json::to_string_pretty(&summary)?;
    std::fs::write(mirror_path(&exp.output), format!("{json}\n"))?;
    println!("{json}");
    Ok(())
}

/// `out.csv` gets a JSON twin at `out.json`; an output already named
/// `*.json` gets `*.summary.json` so the table is not clobbered.
fn mirror_path(output: &Path) -> PathBuf {
    let mirror = output.with_extension("json");
    if mirror == output {
        output.with_extension("summary.json")
    } else {
        mirror
    }
}

fn report(check: &str, label: &str, metric: &str, value: f64, tol: f64, all_ok: &mut bool) {
    let ok = value <= tol;
    *all_ok &= ok;
    let status = if ok { "ok" } else { "FAIL" };
    println!("{check} {label}: {metric} = {value:.3e} (tolerance {tol:.1e}) {status}");
}

pub fn cmd_validate(check: CheckArg) -> Result<(), CliError> {
    let ok = match check {
        CheckArg::Lemma1 => check_lemma1(),
        CheckArg::Psi => check_psi(),
        CheckArg::Dkw => check_dkw()?,
        CheckArg::Sampler => check_sampler(),
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::Runtime("validation failed; see the lines above".into()))
    }
}

/// Expected trade reward written two ways on a 1000-point price grid:
/// as `2F(1-F)` and as `1/2 - 2(1/2 - F)^2`, both exact on atomless
/// families to 1e-12.
fn check_lemma1() -> bool {
    let families = [
        DistributionSpec::uniform(),
        DistributionSpec::piecewise_linear_lb(0.0).unwrap(),
        DistributionSpec::piecewise_linear_lb(0.25).unwrap(),
        DistributionSpec::piecewise_linear_lb(0.5).unwrap(),
        DistributionSpec::piecewise_linear_lb(1.0).unwrap(),
        DistributionSpec::interval_uniform(3, 2).unwrap(),
    ];
    let mut all_ok = true;
    for d in &families {
        let mut max_product = 0.0f64;
        let mut max_median = 0.0f64;
        for i in 0..1000 {
            let p = i as f64 / 999.0;
            let f = d.cdf(p);
            let psi = d.psi_true(p);
            max_product = max_product.max((psi - 2.0 * f * (1.0 - f)).abs());
            max_median = max_median.max((0.5 - psi - 2.0 * (0.5 - f) * (0.5 - f)).abs());
        }
        report("lemma1", &d.label(), "product-form deviation", max_product, 1e-12, &mut all_ok);
        report("lemma1", &d.label(), "median-form deviation", max_median, 1e-12, &mut all_ok);
    }
    all_ok
}

/// Four-atom expected rewards at prices 1/3 and 2/3 against their closed
/// forms `11/16 -+ eps/8 - eps^2/8`, and the gap `eps/4`.
fn check_psi() -> bool {
    let mut all_ok = true;
    for &eps in &[-0.25, -0.1, 0.0, 0.1, 0.25] {
        let d = DistributionSpec::four_atom(eps).unwrap();
        let lo = d.psi_true(1.0 / 3.0);
        let hi = d.psi_true(2.0 / 3.0);
        let dev = (lo - (11.0 / 16.0 - eps / 8.0 - eps * eps / 8.0))
            .abs()
            .max((hi - (11.0 / 16.0 + eps / 8.0 - eps * eps / 8.0)).abs())
            .max((hi - lo - eps / 4.0).abs());
        report("psi", &format!("eps={eps}"), "closed-form deviation", dev, 1e-12, &mut all_ok);
    }
    all_ok
}

/// Empirical-objective concentration: 100 trials of 2*5000 draws each must
/// stay inside the `2*KS + 1/(2t)` envelope, with max deviation <= 0.05.
fn check_dkw() -> Result<bool, CliError> {
    let mut all_ok = true;
    for d in [
        DistributionSpec::uniform(),
        DistributionSpec::piecewise_linear_lb(0.5).unwrap(),
    ] {
        match eval::dkw_psi_closeness(&d, 5000, 100, 77) {
            Ok(max_dev) => {
                report("dkw", &d.label(), "max objective deviation", max_dev, 0.05, &mut all_ok);
            }
            Err(e @ EvalError::EnvelopeExceeded { .. }) => {
                println!("dkw {}: {e} FAIL", d.label());
                all_ok = false;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(all_ok)
}

/// Samplers against their own cdfs (KS <= 0.01 on 10^5 draws) and the
/// inverse-cdf sampler against the three-branch representation sampler
/// (two-sample KS <= 0.015).
fn check_sampler() -> bool {
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
    let mut all_ok = true;
    for d in &families {
        let mut rng = SimRng::seed_from_u64(800);
        let mut xs: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let ks = ks_statistic(&xs, |x| d.cdf(x), |x| d.cdf_left(x));
        report("sampler", &d.label(), "KS vs cdf", ks, 0.01, &mut all_ok);
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
        report("sampler", &format!("eps={eps} representation"), "two-sample KS", ks, 0.015, &mut all_ok);
    }
    all_ok
}

#[derive(Serialize)]
struct GameLine<'a> {
    n: u32,
    strategy: &'a str,
    seed: u64,
    rounds_survived: u64,
    total_loss: f64,
    won: bool,
    instance: Option<u64>,
}

pub fn cmd_game(args: &GameArgs) -> Result<(), CliError> {
    let n = args.levels;
    if n < 2 {
        return Err(CliError::Config(format!(
            "the game needs at least 2 levels (got {n}); depth n fixes 2^n candidate instances"
        )));
    }
    let horizon = args.horizon.unwrap_or(u64::from(n) - 1);
    let matches = args.seeds.max(1);
    let loss_floor = (f64::from(n) - 1.0) / 2.0;
    let mut below_floor = 0u64;
    for seed in 0..matches {
        let mut strategy: Box<dyn SegmentStrategy> = match args.strategy {
            StrategyArg::Bisect => Box::new(BisectStrategy::new(n)?),
            StrategyArg::Random => Box::new(RandomStrategy::new(n, seed)?),
            StrategyArg::MbsWrapper => Box::new(BrokerStrategy::new(
                BrokerSpec::new(Algo::Mbs).build(horizon.max(1))?,
                n,
            )?),
        };
        let outcome = play_game(strategy.as_mut(), n, horizon)?;
        if outcome.total_loss < loss_floor {
            below_floor += 1;
        }
        let line = GameLine {
            n,
            strategy: &outcome.strategy,
            seed,
            rounds_survived: outcome.rounds_survived,
            total_loss: outcome.total_loss,
            won: outcome.won,
            instance: outcome.instance,
        };
        println!("{}", serde_json::to_string(&line)?);
    }
    if below_floor == 0 {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{below_floor} match(es) finished below the guaranteed loss floor (n-1)/2 = {loss_floor}"
        )))
    }
}
