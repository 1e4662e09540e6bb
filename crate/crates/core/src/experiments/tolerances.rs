use serde::{Deserialize, Serialize};

/// Numerical thresholds shared by the drivers and the acceptance suite.
/// Loaded from `tolerances.toml`; missing keys take the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative slack on exact inequalities.
    pub float_slack: f64,
    /// Relative agreement with brute-force oracles.
    pub oracle_rel: f64,
    /// Partition mass against μ(X).
    pub partition_rel: f64,
    /// est(J = j_max) / est(J = 4) for the A∞ stability scan.
    pub stability_ratio: f64,
    /// max/min of the RH ratios over j ≥ 2 for a bounded verdict.
    pub bounded_ratio: f64,
    /// ratio(j_max) / ratio(⌈j_max/3⌉) for a diverging verdict.
    pub divergence_factor: f64,
    /// sup/inf of f over U-centred balls.
    pub u_ball_ratio: f64,
    /// Discretization allowance on the grid example bound 2/(σ−1).
    pub example_bound_slack: f64,
    /// Fraction of e^k the strong A∞ surrogate must reach.
    pub strong_surrogate_factor: f64,
    /// Relative change allowed between the two finest convergence levels.
    pub convergence_rel: f64,
    /// Constants above this count as infinite for membership verdicts.
    pub membership_ceiling: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            float_slack: 1e-9,
            oracle_rel: 1e-12,
            partition_rel: 1e-12,
            stability_ratio: 1.1,
            bounded_ratio: 1.2,
            divergence_factor: 2.0,
            u_ball_ratio: 3.0,
            example_bound_slack: 0.1,
            strong_surrogate_factor: 0.9,
            convergence_rel: 0.05,
            membership_ceiling: 1e8,
        }
    }
}

impl Tolerances {
    /// a ≤ b up to the relative float slack.
    pub fn le(&self, a: f64, b: f64) -> bool {
        a <= b * (1.0 + self.float_slack)
    }
}
