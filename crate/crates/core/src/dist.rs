//! Valuation distributions on `[0, 1]`.
//!
//! Every family exposes the right-continuous cdf `F`, its left limit, point
//! masses, inverse-cdf sampling, the generalized median `inf{x : F(x) >= 1/2}`,
//! and the trade-probability curves a broker is scored against:
//!
//! ```text
//! psi_true(p)      = 1 - F(p-)^2 - (1 - F(p))^2     exact trade probability
//! psi_surrogate(p) = 2 F(p) (1 - F(p)) + F(p) nu{p} product-form objective
//! ```
//!
//! The two agree wherever `nu{p} = 0`; at an atom the surrogate drops the
//! below-mass cross term. `psi_true` is computed as
//! `2 F (1 - F) + nu{p} (F + F(p-))`, the same polynomial with the square
//! expanded, so that atomless evaluations reduce to `2 F (1 - F)` bitwise.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::Price;
use crate::SimRng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

fn assert_unit(x: f64) {
    assert!(
        x.is_finite() && (0.0..=1.0).contains(&x),
        "argument {x} outside [0, 1]"
    );
}

/// A valuation distribution, serializable as `{"family": ..., params...}`.
///
/// - `uniform`: Lebesgue measure on `[0, 1]`.
/// - `piecewise_linear_lb`: density `2e` on `[0, 1/8]`, `1` on `(1/8, 7/8)`,
///   `2(1-e)` on `[7/8, 1]`, `e` in `[0, 1]`. Median `(5 - 2e)/8`, cdf
///   2-Lipschitz.
/// - `four_atom`: atoms at `{0, 1/3, 2/3, 1}` with masses
///   `(1-e)/4, 1/4, 1/4, (1+e)/4`, `|e| <= 1/4`.
/// - `interval_uniform`: uniform on the dyadic cell `((k-1)/2^n, k/2^n)`,
///   cdf `2^n`-Lipschitz.
/// - `mixture`: atoms plus a piecewise-linear continuous cdf given by knots
///   from `(0, 0)` to `(1, 1)`, scaled by `weight`; atom masses and `weight`
///   sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    #[serde(rename = "uniform")]
    Uniform01,
    PiecewiseLinearLb {
        eps: f64,
    },
    FourAtom {
        eps: f64,
    },
    IntervalUniform {
        k: u64,
        n: u32,
    },
    Mixture {
        atoms: Vec<(f64, f64)>,
        knots: Vec<(f64, f64)>,
        weight: f64,
    },
}

pub const FOUR_ATOM_LOCS: [f64; 4] = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];

impl DistributionSpec {
    pub fn uniform() -> Self {
        DistributionSpec::Uniform01
    }

    pub fn piecewise_linear_lb(eps: f64) -> Result<Self, DistError> {
        let d = DistributionSpec::PiecewiseLinearLb { eps };
        d.validate()?;
        Ok(d)
    }

    pub fn four_atom(eps: f64) -> Result<Self, DistError> {
        let d = DistributionSpec::FourAtom { eps };
        d.validate()?;
        Ok(d)
    }

    pub fn interval_uniform(k: u64, n: u32) -> Result<Self, DistError> {
        let d = DistributionSpec::IntervalUniform { k, n };
        d.validate()?;
        Ok(d)
    }

    pub fn mixture(
        atoms: Vec<(f64, f64)>,
        knots: Vec<(f64, f64)>,
        weight: f64,
    ) -> Result<Self, DistError> {
        let d = DistributionSpec::Mixture { atoms, knots, weight };
        d.validate()?;
        Ok(d)
    }

    /// Parameter checks; call after deserializing an untrusted spec.
    pub fn validate(&self) -> Result<(), DistError> {
        let bad = |msg: String| Err(DistError::Parameter(msg));
        match self {
            DistributionSpec::Uniform01 => Ok(()),
            DistributionSpec::PiecewiseLinearLb { eps } => {
                if !(eps.is_finite() && (0.0..=1.0).contains(eps)) {
                    return bad(format!("piecewise_linear_lb eps {eps} outside [0, 1]"));
                }
                Ok(())
            }
            DistributionSpec::FourAtom { eps } => {
                if !(eps.is_finite() && (-0.25..=0.25).contains(eps)) {
                    return bad(format!("four_atom eps {eps} outside [-1/4, 1/4]"));
                }
                Ok(())
            }
            DistributionSpec::IntervalUniform { k, n } => {
                if *n < 1 || *n > 60 {
                    return bad(format!("interval_uniform n {n} outside [1, 60]"));
                }
                if *k < 1 || *k > (1u64 << n) {
                    return bad(format!("interval_uniform k {k} outside [1, 2^{n}]"));
                }
                Ok(())
            }
            DistributionSpec::Mixture { atoms, knots, weight } => {
                if !(weight.is_finite() && (0.0..=1.0).contains(weight)) {
                    return bad(format!("mixture weight {weight} outside [0, 1]"));
                }
                let mut mass = 0.0;
                let mut prev = f64::NEG_INFINITY;
                for &(loc, m) in atoms {
                    if !(loc.is_finite() && (0.0..=1.0).contains(&loc)) {
                        return bad(format!("atom location {loc} outside [0, 1]"));
                    }
                    if loc <= prev {
                        return bad("atom locations must be strictly increasing".into());
                    }
                    if !(m.is_finite() && m > 0.0) {
                        return bad(format!("atom mass {m} must be positive"));
                    }
                    prev = loc;
                    mass += m;
                }
                if (mass + weight - 1.0).abs() > 1e-9 {
                    return bad(format!(
                        "atom masses ({mass}) plus continuous weight ({weight}) must sum to 1"
                    ));
                }
                if *weight == 0.0 && knots.is_empty() {
                    return Ok(());
                }
                if knots.len() < 2 {
                    return bad("mixture needs at least two cdf knots".into());
                }
                let (x0, y0) = knots[0];
                let (x1, y1) = knots[knots.len() - 1];
                if (x0, y0) != (0.0, 0.0) || (x1, y1) != (1.0, 1.0) {
                    return bad("cdf knots must run from (0, 0) to (1, 1)".into());
                }
                for w in knots.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return bad("knot x-coordinates must be strictly increasing".into());
                    }
                    if w[1].1 < w[0].1 || !w[1].1.is_finite() {
                        return bad("knot cdf values must be nondecreasing".into());
                    }
                }
                Ok(())
            }
        }
    }

    /// Right-continuous cdf `F(x) = nu[0, x]`. Panics if `x` is outside `[0, 1]`.
    pub fn cdf(&self, x: f64) -> f64 {
        // Keep F = F(-) + atom exact: point-mass families add the atom to the
        // left limit rather than recomputing.
        self.cdf_left(x) + self.atom(x)
    }

    /// Left limit `F(x-) = nu[0, x)`. Panics if `x` is outside `[0, 1]`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        assert_unit(x);
        match self {
            DistributionSpec::Uniform01 => x,
            DistributionSpec::PiecewiseLinearLb { eps } => {
                let e = *eps;
                if x <= 0.125 {
                    2.0 * e * x
                } else if x < 0.875 {
                    (2.0 * e - 1.0) / 8.0 + x
                } else {
                    2.0 * e - 1.0 - 2.0 * (e - 1.0) * x
                }
            }
            DistributionSpec::FourAtom { eps } => {
                let masses = four_atom_masses(*eps);
                FOUR_ATOM_LOCS
                    .iter()
                    .zip(masses)
                    .filter(|(loc, _)| **loc < x)
                    .map(|(_, m)| m)
                    .sum()
            }
            DistributionSpec::IntervalUniform { k, n } => {
                let w = 0.5f64.powi(*n as i32);
                let lo = (*k - 1) as f64 * w;
                ((x - lo) / w).clamp(0.0, 1.0)
            }
            DistributionSpec::Mixture { atoms, knots, weight } => {
                let atom_part: f64 = atoms
                    .iter()
                    .take_while(|(loc, _)| *loc < x)
                    .map(|(_, m)| m)
                    .sum();
                atom_part + weight * continuous_cdf(knots, x)
            }
        }
    }

    /// Point mass `nu{{x}}`; zero except at exact atom locations.
    pub fn atom(&self, x: f64) -> f64 {
        assert_unit(x);
        match self {
            DistributionSpec::FourAtom { eps } => {
                let masses = four_atom_masses(*eps);
                FOUR_ATOM_LOCS
                    .iter()
                    .position(|loc| *loc == x)
                    .map_or(0.0, |i| masses[i])
            }
            DistributionSpec::Mixture { atoms, .. } => atoms
                .iter()
                .find(|(loc, _)| *loc == x)
                .map_or(0.0, |(_, m)| *m),
            _ => 0.0,
        }
    }

    pub fn has_atoms(&self) -> bool {
        match self {
            DistributionSpec::FourAtom { .. } => true,
            DistributionSpec::Mixture { atoms, .. } => !atoms.is_empty(),
            _ => false,
        }
    }

    /// Generalized quantile `inf{x : F(x) >= u}` for `u` in `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        assert_unit(u);
        match self {
            DistributionSpec::Uniform01 => u,
            DistributionSpec::PiecewiseLinearLb { eps } => {
                let e = *eps;
                if u <= e / 4.0 {
                    if e > 0.0 {
                        u / (2.0 * e)
                    } else {
                        0.0
                    }
                } else if u <= (e + 3.0) / 4.0 {
                    u + (1.0 - 2.0 * e) / 8.0
                } else {
                    (u + 1.0 - 2.0 * e) / (2.0 * (1.0 - e))
                }
            }
            DistributionSpec::FourAtom { eps } => {
                let masses = four_atom_masses(*eps);
                let mut acc = 0.0;
                for (loc, m) in FOUR_ATOM_LOCS.iter().zip(masses) {
                    acc += m;
                    if u <= acc {
                        return *loc;
                    }
                }
                1.0
            }
            DistributionSpec::IntervalUniform { k, n } => {
                let w = 0.5f64.powi(*n as i32);
                (*k - 1) as f64 * w + u * w
            }
            DistributionSpec::Mixture { atoms, knots, weight } => {
                mixture_quantile(atoms, knots, *weight, u)
            }
        }
    }

    /// One inverse-cdf draw; successive calls are i.i.d.
    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        self.quantile(rng.gen::<f64>())
    }

    /// Generalized median `inf{x : F(x) >= 1/2}`; for continuous families
    /// `F(median) = 1/2` exactly.
    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// Exact probability that a trade executes at price `p`.
    pub fn psi_true(&self, p: f64) -> f64 {
        let fl = self.cdf_left(p);
        let a = self.atom(p);
        let f = fl + a;
        2.0 * f * (1.0 - f) + a * (f + fl)
    }

    /// Product-form objective `2 F (1 - F) + F nu{p}`; equals `psi_true`
    /// wherever `nu{p} = 0` and undercounts by `F(p-) nu{p}` at atoms.
    pub fn psi_surrogate(&self, p: f64) -> f64 {
        let fl = self.cdf_left(p);
        let a = self.atom(p);
        let f = fl + a;
        2.0 * f * (1.0 - f) + f * a
    }

    /// Maximizer of `psi_true` with its value, tie-broken toward the smallest
    /// price.
    ///
    /// Between atoms and cdf knots `F` is affine, so `psi_true` restricted
    /// there is concave with interior maximum only where `F = 1/2`; the
    /// candidate set {atom locations, knot abscissas, generalized median} is
    /// exhaustive.
    pub fn best_price(&self) -> (Price, f64) {
        let mut cands: Vec<f64> = match self {
            DistributionSpec::Uniform01
            | DistributionSpec::PiecewiseLinearLb { .. }
            | DistributionSpec::IntervalUniform { .. } => vec![self.median()],
            DistributionSpec::FourAtom { .. } => FOUR_ATOM_LOCS.to_vec(),
            DistributionSpec::Mixture { atoms, knots, .. } => {
                let mut c: Vec<f64> = atoms.iter().map(|(loc, _)| *loc).collect();
                c.extend(knots.iter().map(|(x, _)| *x));
                c.push(self.median());
                c.sort_by(f64::total_cmp);
                c.dedup();
                c
            }
        };
        cands.sort_by(f64::total_cmp);
        let mut best = (cands[0], self.psi_true(cands[0]));
        for &p in &cands[1..] {
            let v = self.psi_true(p);
            if v > best.1 {
                best = (p, v);
            }
        }
        (Price::from_valid(best.0), best.1)
    }

    /// Lipschitz certificate for the cdf, when the family provides one.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        match self {
            DistributionSpec::Uniform01 => Some(1.0),
            DistributionSpec::PiecewiseLinearLb { .. } => Some(2.0),
            DistributionSpec::IntervalUniform { n, .. } => Some(2.0f64.powi(*n as i32)),
            DistributionSpec::FourAtom { .. } => None,
            DistributionSpec::Mixture { atoms, knots, weight } => {
                if !atoms.is_empty() {
                    return None;
                }
                let slope = knots
                    .windows(2)
                    .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
                    .fold(0.0f64, f64::max);
                Some(weight * slope)
            }
        }
    }

    /// Compact label for result tables, in the CLI's `family:key=val` syntax.
    pub fn label(&self) -> String {
        match self {
            DistributionSpec::Uniform01 => "uniform".into(),
            DistributionSpec::PiecewiseLinearLb { eps } => {
                format!("piecewise_linear_lb:eps={eps}")
            }
            DistributionSpec::FourAtom { eps } => format!("four_atom:eps={eps}"),
            DistributionSpec::IntervalUniform { k, n } => {
                format!("interval_uniform:k={k},n={n}")
            }
            DistributionSpec::Mixture { .. } => "mixture".into(),
        }
    }
}

fn four_atom_masses(eps: f64) -> [f64; 4] {
    [(1.0 - eps) / 4.0, 0.25, 0.25, (1.0 + eps) / 4.0]
}

fn continuous_cdf(knots: &[(f64, f64)], x: f64) -> f64 {
    if knots.is_empty() {
        return 0.0;
    }
    let idx = knots.partition_point(|(kx, _)| *kx <= x);
    if idx == 0 {
        return knots[0].1;
    }
    if idx == knots.len() {
        return knots[knots.len() - 1].1;
    }
    let (x0, y0) = knots[idx - 1];
    let (x1, y1) = knots[idx];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn mixture_quantile(atoms: &[(f64, f64)], knots: &[(f64, f64)], weight: f64, u: f64) -> f64 {
    let full_cdf = |x: f64| -> f64 {
        let atom_part: f64 = atoms
            .iter()
            .take_while(|(loc, _)| *loc <= x)
            .map(|(_, m)| m)
            .sum();
        atom_part + weight * continuous_cdf(knots, x)
    };
    let left_cdf = |x: f64| -> f64 {
        let atom_part: f64 = atoms
            .iter()
            .take_while(|(loc, _)| *loc < x)
            .map(|(_, m)| m)
            .sum();
        atom_part + weight * continuous_cdf(knots, x)
    };

    // Breakpoints where F can change slope or jump; F is affine between them.
    let mut points: Vec<f64> = atoms.iter().map(|(loc, _)| *loc).collect();
    points.extend(knots.iter().map(|(x, _)| *x));
    points.push(0.0);
    points.push(1.0);
    points.sort_by(f64::total_cmp);
    points.dedup();

    if u <= full_cdf(points[0]) {
        return points[0];
    }
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let fa = full_cdf(a);
        let fb_minus = left_cdf(b);
        if u <= fb_minus {
            // Interior of (a, b): F affine from fa to fb_minus, slope > 0 here
            // because u > fa.
            return a + (u - fa) / (fb_minus - fa) * (b - a);
        }
        if u <= full_cdf(b) {
            return b;
        }
    }
    1.0
}

/// Compositional draw for the piecewise-linear family: `D ~ Bern(1/4)` routes
/// to the boundary layers, `B ~ Bern(eps)` picks the low layer, `U` is uniform.
pub fn sample_representation_lb(eps: f64, rng: &mut SimRng) -> f64 {
    assert!(
        eps.is_finite() && (0.0..=1.0).contains(&eps),
        "eps {eps} outside [0, 1]"
    );
    let d = rng.gen::<f64>() < 0.25;
    let b = rng.gen::<f64>() < eps;
    let u = rng.gen::<f64>();
    representation_value(d, b, u)
}

/// Deterministic composition underlying [`sample_representation_lb`]:
/// `D (B U/8 + (1-B)(7+U)/8) + (1-D)(1/8 + 3U/4)`.
pub fn representation_value(d: bool, b: bool, u: f64) -> f64 {
    if d {
        if b {
            u / 8.0
        } else {
            (7.0 + u) / 8.0
        }
    } else {
        0.125 + 0.75 * u
    }
}
