//! Shared setup for the benchmark suites.

use rand::SeedableRng as _;
use tradevol_core::{DistributionSpec, SimRng};

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// One representative of every valuation family.
pub fn families() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::uniform(),
        DistributionSpec::piecewise_linear_lb(0.25).unwrap(),
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
