//! Seeded simulation harness: replicated runs, regret statistics, analytic
//! bound checks, growth-model fits, and CSV/JSON emission.
//!
//! The harness calls `propose` before drawing the round's valuations, so a
//! broker's price can only depend on feedback from earlier rounds. That call
//! order is what makes the per-round pseudo-regret increment
//! `psi*(p*) - psi_true(P_t)` an unbiased estimate of the expected regret
//! increment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io;

use crate::brokers::fepsi::{visit_candidates, PsiVariant};
use crate::brokers::{Algo, BrokerError, BrokerSpec};
use crate::dist::{DistError, DistributionSpec};
use crate::protocol::{make_feedback, FeedbackKind, ValuationPair};
use crate::stats;
use crate::SimRng;
use rand::SeedableRng;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Broker(#[from] BrokerError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("growth fit: {0}")]
    Fit(String),
    #[error("empirical objective deviated by {deviation}, above the envelope {envelope}")]
    EnvelopeExceeded { deviation: f64, envelope: f64 },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

/// How cumulative regret is accumulated per round.
///
/// `Pseudo` charges the exact expected-reward gap `psi*(p*) - psi_true(P_t)`,
/// which has zero benchmark variance; `Realized` charges the difference of
/// the actual trade indicators at `p*` and at the posted price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretMode {
    Pseudo,
    Realized,
}

impl std::fmt::Display for RegretMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegretMode::Pseudo => write!(f, "pseudo"),
            RegretMode::Realized => write!(f, "realized"),
        }
    }
}

/// Everything a single simulation needs. Replication `i` uses seed
/// `base_seed + i`, so a sweep's runs are independent and auditable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub distribution: DistributionSpec,
    pub broker: BrokerSpec,
    pub horizon: u64,
    pub replications: u64,
    pub base_seed: u64,
    pub feedback: FeedbackKind,
    pub regret_mode: RegretMode,
}

impl RunConfig {
    /// Single replication, seed 0, pseudo-regret, and the broker's natural
    /// feedback kind; adjust fields afterwards as needed.
    pub fn new(distribution: DistributionSpec, broker: BrokerSpec, horizon: u64) -> Self {
        let feedback = broker.required_feedback().default_kind();
        RunConfig {
            distribution,
            broker,
            horizon,
            replications: 1,
            base_seed: 0,
            feedback,
            regret_mode: RegretMode::Pseudo,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        self.distribution.validate()?;
        if self.horizon < 1 {
            return Err(EvalError::Config("horizon must be at least 1".into()));
        }
        if self.replications < 1 {
            return Err(EvalError::Config("replications must be at least 1".into()));
        }
        let req = self.broker.required_feedback();
        if !req.accepts(self.feedback) {
            return Err(EvalError::Config(format!(
                "{} cannot run under {} feedback",
                self.broker.algo.name(),
                self.feedback
            )));
        }
        Ok(())
    }
}

/// One round of one run. `cum_regret` is cumulative in the configured mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundRow {
    pub t: u64,
    pub price: f64,
    pub reward: u8,
    pub cum_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub final_regret: f64,
    pub rounds: Vec<RoundRow>,
}

/// Simulates one `horizon`-round match between the configured broker and the
/// configured valuation distribution.
pub fn run_once(cfg: &RunConfig, seed: u64) -> Result<RunRecord, EvalError> {
    cfg.validate()?;
    let mut broker = cfg.broker.build(cfg.horizon)?;
    let mut rng = SimRng::seed_from_u64(seed);
    let (p_star, psi_star) = cfg.distribution.best_price();
    let mut rounds = Vec::with_capacity(cfg.horizon as usize);
    let mut cum = 0.0f64;
    // Realized increments are in {-1, 0, 1}; integer accumulation keeps the
    // running total exact before it lands in the f64 column.
    let mut net_wins: i64 = 0;
    for t in 1..=cfg.horizon {
        let price = broker.propose(t)?;
        let v1 = cfg.distribution.sample(&mut rng);
        let v2 = cfg.distribution.sample(&mut rng);
        let pair = ValuationPair::new(v1, v2).expect("samples lie in [0, 1]");
        let reward = pair.trades_at(price);
        match cfg.regret_mode {
            RegretMode::Pseudo => {
                cum += psi_star - cfg.distribution.psi_true(price.get());
            }
            RegretMode::Realized => {
                net_wins += i64::from(pair.trades_at(p_star)) - i64::from(reward);
                cum = net_wins as f64;
            }
        }
        let feedback = make_feedback(cfg.feedback, price, pair);
        broker.observe(t, price, &feedback)?;
        rounds.push(RoundRow { t, price: price.get(), reward, cum_regret: cum });
    }
    Ok(RunRecord { seed, final_regret: cum, rounds })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSummary {
    /// Sample mean of the final cumulative regrets.
    pub mean: f64,
    /// Standard error of that mean; 0 for a single replication.
    pub stderr: f64,
    pub records: Vec<RunRecord>,
}

/// Runs `cfg.replications` independent simulations (seeds `base_seed + i`)
/// on however many workers the rayon pool provides. Aggregation is
/// order-independent: records come back indexed by replication and the mean
/// uses pairwise summation.
pub fn run_replicated(cfg: &RunConfig) -> Result<ReplicationSummary, EvalError> {
    cfg.validate()?;
    let records: Vec<RunRecord> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| run_once(cfg, cfg.base_seed.wrapping_add(i)))
        .collect::<Result<_, _>>()?;
    let finals: Vec<f64> = records.iter().map(|r| r.final_regret).collect();
    let (mean, stderr) = stats::mean_stderr(&finals);
    Ok(ReplicationSummary { mean, stderr, records })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub horizon: u64,
    pub mean: f64,
    pub stderr: f64,
    pub replications: u64,
}

/// Mean cumulative regret as a function of the horizon, with any fits the
/// caller has attached.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretCurve {
    pub points: Vec<CurvePoint>,
    pub fits: Vec<GrowthFit>,
}

impl RegretCurve {
    /// Requires at least one point and strictly increasing horizons.
    pub fn new(points: Vec<CurvePoint>) -> Result<Self, EvalError> {
        if points.is_empty() {
            return Err(EvalError::Config("a regret curve needs at least one point".into()));
        }
        if points.windows(2).any(|w| w[0].horizon >= w[1].horizon) {
            return Err(EvalError::Config("horizons must be strictly increasing".into()));
        }
        Ok(RegretCurve { points, fits: Vec::new() })
    }

    /// Every mean must sit above `-3 * stderr` (minus float slack). Holds by
    /// construction for pseudo-regret, whose increments are nonnegative.
    pub fn check_nonnegative(&self) -> Result<(), EvalError> {
        for pt in &self.points {
            let slack = 1e-9 * pt.horizon as f64;
            if pt.mean + 3.0 * pt.stderr < -slack {
                return Err(EvalError::Config(format!(
                    "mean regret {} at horizon {} is negative beyond noise",
                    pt.mean, pt.horizon
                )));
            }
        }
        Ok(())
    }
}

/// Worst-case expected-regret guarantees for the three learners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundKind {
    /// `1/2 + (pi/2) * (1 + ln(T-1))`; needs `T >= 2`.
    Fem,
    /// `2 + 6 * log2(M*T) * ln(T)` for an `M`-Lipschitz cdf, `M >= 1`.
    Mbs { lipschitz: f64 },
    /// `1 + 8 * sqrt(pi) * sqrt(T-1)`.
    Fepsi,
}

pub fn regret_bound(kind: BoundKind, horizon: u64) -> Result<f64, EvalError> {
    let t = horizon as f64;
    match kind {
        BoundKind::Fem => {
            if horizon < 2 {
                return Err(EvalError::Config("the fem bound needs a horizon of at least 2".into()));
            }
            Ok(0.5 + std::f64::consts::FRAC_PI_2 * (1.0 + (t - 1.0).ln()))
        }
        BoundKind::Mbs { lipschitz } => {
            if !(lipschitz.is_finite() && lipschitz >= 1.0) {
                return Err(EvalError::Config(format!(
                    "the mbs bound needs a Lipschitz constant >= 1, got {lipschitz}"
                )));
            }
            if horizon < 1 {
                return Err(EvalError::Config("horizon must be at least 1".into()));
            }
            Ok(2.0 + 6.0 * (lipschitz * t).log2() * t.ln())
        }
        BoundKind::Fepsi => {
            if horizon < 1 {
                return Err(EvalError::Config("horizon must be at least 1".into()));
            }
            Ok(1.0 + 8.0 * std::f64::consts::PI.sqrt() * (t - 1.0).sqrt())
        }
    }
}

/// The bound applicable to `algo` on `distribution`, if any. The mbs bound
/// needs a Lipschitz certificate, so atomic families yield `None`; the
/// baselines carry no guarantee at all.
pub fn bound_for(algo: Algo, distribution: &DistributionSpec) -> Option<BoundKind> {
    match algo {
        Algo::Fem => Some(BoundKind::Fem),
        Algo::Fepsi => Some(BoundKind::Fepsi),
        Algo::Mbs => distribution.lipschitz_bound().map(|m| BoundKind::Mbs { lipschitz: m }),
        Algo::GridUcb | Algo::Fixed => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub horizon: u64,
    pub mean: f64,
    pub stderr: f64,
    pub bound: f64,
    pub pass: bool,
}

/// One check per curve point: passes iff `mean + 3 * stderr <= bound(T)`.
/// The bounds hold in expectation; the 3-stderr margin absorbs Monte Carlo
/// noise without masking a real violation.
pub fn check_bound(curve: &RegretCurve, kind: BoundKind) -> Result<Vec<BoundCheck>, EvalError> {
    curve
        .points
        .iter()
        .map(|pt| {
            let bound = regret_bound(kind, pt.horizon)?;
            Ok(BoundCheck {
                horizon: pt.horizon,
                mean: pt.mean,
                stderr: pt.stderr,
                bound,
                pass: pt.mean + 3.0 * pt.stderr <= bound,
            })
        })
        .collect()
}

/// Regression target for a regret curve: `a + b * ln T`, or `b * sqrt(T)`
/// through the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    Log,
    Sqrt,
}

impl GrowthModel {
    pub fn name(self) -> &'static str {
        match self {
            GrowthModel::Log => "log",
            GrowthModel::Sqrt => "sqrt",
        }
    }

    fn regressor(self, horizon: u64) -> f64 {
        let t = horizon as f64;
        match self {
            GrowthModel::Log => t.ln(),
            GrowthModel::Sqrt => t.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub model: GrowthModel,
    /// Always 0 for the through-origin sqrt model.
    pub intercept: f64,
    pub slope: f64,
    /// Coefficient of determination against the centered total sum of
    /// squares; a zero-variance target fits perfectly by convention.
    pub r_squared: f64,
}

/// Least-squares fit of mean regret against the model's regressor. Requires
/// at least four horizons so the fit has residual degrees of freedom.
pub fn fit_growth(curve: &RegretCurve, model: GrowthModel) -> Result<GrowthFit, EvalError> {
    let pts = &curve.points;
    if pts.len() < 4 {
        return Err(EvalError::Fit(format!(
            "needs at least 4 horizons, got {}",
            pts.len()
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|p| model.regressor(p.horizon)).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.mean).collect();
    let n = xs.len() as f64;
    let x_mean = stats::mean(&xs);
    let y_mean = stats::mean(&ys);
    let (intercept, slope) = match model {
        GrowthModel::Log => {
            let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
            if sxx / n < 1e-18 {
                return Err(EvalError::Fit("degenerate design: all regressors equal".into()));
            }
            let sxy: f64 = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| (x - x_mean) * (y - y_mean))
                .sum();
            let slope = sxy / sxx;
            (y_mean - slope * x_mean, slope)
        }
        GrowthModel::Sqrt => {
            let sxx: f64 = xs.iter().map(|x| x * x).sum();
            if sxx / n < 1e-18 {
                return Err(EvalError::Fit("degenerate design: all regressors zero".into()));
            }
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
            (0.0, sxy / sxx)
        }
    };
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - y_mean) * (y - y_mean)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(GrowthFit { model, intercept, slope, r_squared })
}

/// Sup-distance between the empirical maximization objective built from
/// `sample` and the distribution's exact expected reward, together with the
/// concentration envelope `2 * sup|F_hat - F| + 1/(2t)` it must respect
/// (`t` = number of rounds = half the sample size).
///
/// The deviation is evaluated over the candidate grid the maximizer actually
/// searches: endpoints, sample points, and midpoints between consecutive
/// distinct samples. Needs an atomless distribution and an even-size sample.
pub fn psi_deviation(
    d: &DistributionSpec,
    sample: &[f64],
) -> Result<(f64, f64), EvalError> {
    d.validate()?;
    if d.has_atoms() {
        return Err(EvalError::Config(
            "the objective-closeness envelope needs an atomless distribution".into(),
        ));
    }
    if sample.is_empty() || !sample.len().is_multiple_of(2) {
        return Err(EvalError::Config(format!(
            "sample size must be a positive even number, got {}",
            sample.len()
        )));
    }
    if sample.iter().any(|v| !(v.is_finite() && (0.0..=1.0).contains(v))) {
        return Err(EvalError::Config("sample values must lie in [0, 1]".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let ks = stats::ks_statistic(&sorted, |x| d.cdf(x), |x| d.cdf_left(x));
    let mut values: Vec<(f64, u64)> = Vec::new();
    for &v in &sorted {
        match values.last_mut() {
            Some((last, c)) if *last == v => *c += 1,
            _ => values.push((v, 1)),
        }
    }
    let total = sorted.len() as u64;
    let mut deviation = 0.0f64;
    visit_candidates(&values, total, |p, below, at| {
        let emp = PsiVariant::Surrogate.objective(total, below, at);
        deviation = deviation.max((emp - d.psi_true(p)).abs());
    });
    let rounds = (sorted.len() / 2) as f64;
    let envelope = 2.0 * ks + 1.0 / (2.0 * rounds);
    Ok((deviation, envelope))
}

/// Draws `2t` valuations per trial, asserts the deviation/envelope relation
/// from [`psi_deviation`], and returns the largest observed deviation.
/// Trial `i` uses seed `base_seed + i`.
pub fn dkw_psi_closeness(
    d: &DistributionSpec,
    t: u64,
    trials: u64,
    base_seed: u64,
) -> Result<f64, EvalError> {
    if t < 1 || trials < 1 {
        return Err(EvalError::Config("need t >= 1 and trials >= 1".into()));
    }
    let mut max_dev = 0.0f64;
    let mut sample = Vec::with_capacity(2 * t as usize);
    for i in 0..trials {
        let mut rng = SimRng::seed_from_u64(base_seed.wrapping_add(i));
        sample.clear();
        sample.extend((0..2 * t).map(|_| d.sample(&mut rng)));
        let (deviation, envelope) = psi_deviation(d, &sample)?;
        if deviation > envelope {
            return Err(EvalError::EnvelopeExceeded { deviation, envelope });
        }
        max_dev = max_dev.max(deviation);
    }
    Ok(max_dev)
}

/// One line of a sweep: a (algorithm, distribution, horizon) cell with its
/// replication statistics and, when a guarantee applies, the bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub algo: String,
    pub dist: String,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub reps: u64,
    pub mean_regret: f64,
    pub stderr: f64,
    pub bound: Option<f64>,
    pub pass: Option<bool>,
}

/// Builds the sweep line for a finished replication batch.
pub fn sweep_row(cfg: &RunConfig, summary: &ReplicationSummary) -> SweepRow {
    let bound = bound_for(cfg.broker.algo, &cfg.distribution)
        .and_then(|kind| regret_bound(kind, cfg.horizon).ok());
    SweepRow {
        algo: cfg.broker.algo.name().to_owned(),
        dist: cfg.distribution.label(),
        horizon: cfg.horizon,
        reps: cfg.replications,
        mean_regret: summary.mean,
        stderr: summary.stderr,
        bound,
        pass: bound.map(|b| summary.mean + 3.0 * summary.stderr <= b),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub curve: RegretCurve,
}

/// Runs `base` at each horizon (strictly increasing) and assembles the sweep
/// table plus the regret curve. Per-round records are dropped horizon by
/// horizon; only the summaries survive.
pub fn run_sweep(base: &RunConfig, horizons: &[u64]) -> Result<SweepResult, EvalError> {
    if horizons.is_empty() {
        return Err(EvalError::Config("horizons list must not be empty".into()));
    }
    if horizons.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::Config("horizons must be strictly increasing".into()));
    }
    let mut rows = Vec::with_capacity(horizons.len());
    let mut points = Vec::with_capacity(horizons.len());
    for &horizon in horizons {
        let mut cfg = base.clone();
        cfg.horizon = horizon;
        let summary = run_replicated(&cfg)?;
        points.push(CurvePoint {
            horizon,
            mean: summary.mean,
            stderr: summary.stderr,
            replications: cfg.replications,
        });
        rows.push(sweep_row(&cfg, &summary));
    }
    let curve = RegretCurve::new(points)?;
    if base.regret_mode == RegretMode::Pseudo {
        curve.check_nonnegative()?;
    }
    Ok(SweepResult { rows, curve })
}

/// Fixed-width scientific float formatting for CSV cells: 17 significant
/// digits, enough to reproduce any f64 exactly on read-back.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Per-round trace of every replication, one file per run batch.
/// The regret column keeps its name in both modes so downstream tooling
/// sees a stable header.
pub fn write_run_csv<W: io::Write>(w: W, records: &[RunRecord]) -> Result<(), EvalError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["rep", "t", "price", "reward", "cum_pseudo_regret"])?;
    for (rep, record) in records.iter().enumerate() {
        for row in &record.rounds {
            wtr.write_record([
                rep.to_string(),
                row.t.to_string(),
                fmt_float(row.price),
                row.reward.to_string(),
                fmt_float(row.cum_regret),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Sweep table; `bound` and `pass` cells are empty when no guarantee applies.
pub fn write_sweep_csv<W: io::Write>(w: W, rows: &[SweepRow]) -> Result<(), EvalError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["algo", "dist", "T", "reps", "mean_regret", "stderr", "bound", "pass"])?;
    for row in rows {
        wtr.write_record([
            row.algo.clone(),
            row.dist.clone(),
            row.horizon.to_string(),
            row.reps.to_string(),
            fmt_float(row.mean_regret),
            fmt_float(row.stderr),
            row.bound.map(fmt_float).unwrap_or_default(),
            row.pass.map(|p| p.to_string()).unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
