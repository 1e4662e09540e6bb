//! Weights and weight-class constants.

mod constants;
mod engine;
mod script;

pub use constants::{
    a_infty_dyadic, a_infty_dyadic_terms, a_infty_sigma, a_infty_sigma_multi, a_infty_sigma_ratios, rh_dyadic, rh_dyadic_terms, rh_sigma,
    rh_sigma_ratios, ConstantReport, DyadicTerm, Stat, Witness,
};
pub use engine::RestrictedMaximal;
pub use script::{script_a_infty, ScriptMode, ScriptReport, EXACT_SUBSET_CAP};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::space::{FiniteSpace, Region};

/// Values below this are lifted to it so every w(E) is positive.
pub const WEIGHT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HKind {
    /// h(t) = t⁻¹ (1 − ln t)⁻³
    H1,
    /// h(t) = t^(−α) (1 − ln t)⁻¹
    H2 { alpha: f64 },
}

impl HKind {
    pub fn eval(self, t: f64) -> f64 {
        let l = 1.0 - t.ln();
        match self {
            HKind::H1 => 1.0 / (t * l * l * l),
            HKind::H2 { alpha } => t.powf(-alpha) / l,
        }
    }

    pub fn label(self) -> String {
        match self {
            HKind::H1 => "h1".into(),
            HKind::H2 { alpha } => format!("h2:{alpha}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum RandomDist {
    LogNormal { sigma: f64 },
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WeightSpec {
    Constant { c: f64 },
    /// e^x on a one-dimensional grid.
    Exponential,
    /// The comb weight: 1 on A, ε_j on V_j, min{1, ε_j max{h(u), 1}} on U_j,
    /// with ε_j = ratio^j.
    Fh { h: HKind, ratio: f64 },
    Random { seed: u64, dist: RandomDist },
}

impl WeightSpec {
    /// `constant:c`, `exp`, `h1[:ratio]`, `h2:alpha[:ratio]`,
    /// `lognormal:seed[:sigma]`, `uniform:seed[:lo:hi]`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize, default: Option<f64>| -> Result<f64> {
            match parts.get(i) {
                Some(v) => v.parse().map_err(|_| Error::InvalidParameter(format!("bad number '{v}' in weight '{s}'"))),
                None => default.ok_or_else(|| Error::InvalidParameter(format!("weight '{s}' is missing a parameter"))),
            }
        };
        let spec = match parts[0] {
            "constant" | "const" => WeightSpec::Constant { c: num(1, Some(1.0))? },
            "exp" | "exponential" => WeightSpec::Exponential,
            "h1" => WeightSpec::Fh { h: HKind::H1, ratio: num(1, Some(0.5))? },
            "h2" => WeightSpec::Fh { h: HKind::H2 { alpha: num(1, None)? }, ratio: num(2, Some(0.5))? },
            "lognormal" => WeightSpec::Random { seed: num(1, None)? as u64, dist: RandomDist::LogNormal { sigma: num(2, Some(1.0))? } },
            "uniform" => WeightSpec::Random {
                seed: num(1, None)? as u64,
                dist: RandomDist::Uniform { lo: num(2, Some(0.1))?, hi: num(3, Some(10.0))? },
            },
            other => return Err(Error::InvalidParameter(format!("unknown weight '{other}'"))),
        };
        Ok(spec)
    }

    pub fn label(&self) -> String {
        match self {
            WeightSpec::Constant { c } => format!("constant:{c}"),
            WeightSpec::Exponential => "exp".into(),
            WeightSpec::Fh { h, ratio } if *ratio == 0.5 => h.label(),
            WeightSpec::Fh { h, ratio } => format!("{}:{ratio}", h.label()),
            WeightSpec::Random { seed, dist: RandomDist::LogNormal { sigma } } => format!("lognormal:{seed}:{sigma}"),
            WeightSpec::Random { seed, dist: RandomDist::Uniform { lo, hi } } => format!("uniform:{seed}:{lo}:{hi}"),
        }
    }
}

/// A strictly positive weight with its provenance label.
#[derive(Debug, Clone)]
pub struct Weight {
    pub field: Field,
    pub name: String,
}

pub fn make_weight(space: &FiniteSpace, spec: &WeightSpec) -> Result<Weight> {
    let n = space.len();
    let values = match *spec {
        WeightSpec::Constant { c } => {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::InvalidParameter(format!("constant weight needs c > 0, got {c}")));
            }
            vec![c; n]
        }
        WeightSpec::Exponential => {
            if space.grid().is_none() {
                return Err(Error::Unsupported("the exponential weight needs a one-dimensional grid".into()));
            }
            (0..n).map(|i| space.coords(i)[0].exp()).collect()
        }
        WeightSpec::Fh { h, ratio } => {
            let comb = space
                .comb()
                .ok_or_else(|| Error::Unsupported("f_h weights need a comb space".into()))?;
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(Error::InvalidParameter(format!("ε_j = ratio^j needs ratio in (0, 1], got {ratio}")));
            }
            if let HKind::H2 { alpha } = h {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
                }
            }
            (0..n)
                .map(|i| match comb.region(i) {
                    Region::A => 1.0,
                    Region::V(j) => ratio.powi(j as i32),
                    Region::U(j) => {
                        let eps = ratio.powi(j as i32);
                        (eps * h.eval(comb.param(i)).max(1.0)).min(1.0)
                    }
                })
                .collect()
        }
        WeightSpec::Random { seed, dist } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match dist {
                RandomDist::LogNormal { sigma } => {
                    let d = LogNormal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                    (0..n).map(|_| d.sample(&mut rng)).collect()
                }
                RandomDist::Uniform { lo, hi } => {
                    if !(0.0 < lo && lo < hi) {
                        return Err(Error::InvalidParameter(format!("uniform weight needs 0 < lo < hi, got {lo}, {hi}")));
                    }
                    let d = Uniform::new(lo, hi);
                    (0..n).map(|_| d.sample(&mut rng)).collect()
                }
            }
        }
    };
    let values = values.into_iter().map(|v: f64| v.max(WEIGHT_FLOOR)).collect();
    Ok(Weight { field: Field::new(values), name: spec.label() })
}
