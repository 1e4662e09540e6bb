use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::RestrictedMaximal;
use crate::dyadic::{AdjacentSystems, CubeRef};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::maximal::{localized_maximal, CubeAverages};
use crate::space::{BallFamily, FiniteSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stat {
    Ainf,
    Rh,
    AinfDyadic,
    RhDyadic,
    ScriptAinf,
}

impl Stat {
    pub fn name(self) -> &'static str {
        match self {
            Stat::Ainf => "ainf",
            Stat::Rh => "rh",
            Stat::AinfDyadic => "ainf-dyadic",
            Stat::RhDyadic => "rh-dyadic",
            Stat::ScriptAinf => "script-ainf",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    None,
    Ball { index: usize, center: usize, radius: f64 },
    Cube(CubeRef),
}

impl std::fmt::Display for Witness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Witness::None => write!(f, "-"),
            Witness::Ball { center, radius, .. } => write!(f, "ball:{center}:{radius:.17e}"),
            Witness::Cube(c) => write!(f, "cube:{}:{}:{}", c.system + 1, c.level, c.index),
        }
    }
}

/// A computed constant, the family it was maximized over, and the maximizer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantReport {
    pub stat: Stat,
    pub value: f64,
    pub sigma: Option<f64>,
    pub q: Option<f64>,
    pub family: String,
    pub witness: Witness,
    pub gdp_candidates_searched: usize,
    /// Balls or cubes evaluated.
    pub items: usize,
    /// Cubes skipped for lack of a gdp.
    pub excluded: usize,
    /// The family was not exhaustive, so the value is a lower bound.
    pub lower_bound: bool,
}

/// Index of the largest value; the lowest index wins ties.
pub(crate) fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        match best {
            Some(b) if !(*v > values[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 1.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("sigma must be >= 1, got {sigma}")));
    }
    Ok(())
}

fn check_weight(space: &FiniteSpace, w: &Field) -> Result<()> {
    if w.len() != space.len() {
        return Err(Error::InvalidParameter(format!("weight has {} values for {} points", w.len(), space.len())));
    }
    if let Some(i) = w.values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("weight is not positive at point {i}")));
    }
    Ok(())
}

fn ball_report(stat: Stat, family: &BallFamily, ratios: &[f64], sigma: f64, q: Option<f64>) -> ConstantReport {
    let (value, witness) = match argmax(ratios) {
        Some(i) => {
            let b = &family.balls[i];
            (ratios[i], Witness::Ball { index: i, center: b.center, radius: b.radius })
        }
        None => (0.0, Witness::None),
    };
    ConstantReport {
        stat,
        value,
        sigma: Some(sigma),
        q,
        family: family.label(),
        witness,
        gdp_candidates_searched: 0,
        items: ratios.len(),
        excluded: 0,
        lower_bound: !family.exhaustive(),
    }
}

/// (1/w(σB)) ∫_B M(1_B w) dμ for each ball of the family.
pub fn a_infty_sigma_ratios(space: &FiniteSpace, family: &BallFamily, w: &Field, sigma: f64) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    check_weight(space, w)?;
    let engine = RestrictedMaximal::new(space, w);
    Ok(family
        .balls
        .par_iter()
        .map(|b| {
            let big = space.members_within(b.center, sigma * b.radius, false);
            engine.integral(b) / w.integral(space, &big)
        })
        .collect())
}

/// [w]_∞^σ for several σ; ∫_B M(1_B w) is computed once per ball.
pub fn a_infty_sigma_multi(space: &FiniteSpace, family: &BallFamily, w: &Field, sigmas: &[f64]) -> Result<Vec<ConstantReport>> {
    for &s in sigmas {
        check_sigma(s)?;
    }
    check_weight(space, w)?;
    let engine = RestrictedMaximal::new(space, w);
    let integrals: Vec<f64> = family.balls.par_iter().map(|b| engine.integral(b)).collect();
    Ok(sigmas
        .iter()
        .map(|&sigma| {
            let ratios: Vec<f64> = family
                .balls
                .par_iter()
                .zip(&integrals)
                .map(|(b, m)| m / w.integral(space, &space.members_within(b.center, sigma * b.radius, false)))
                .collect();
            ball_report(Stat::Ainf, family, &ratios, sigma, None)
        })
        .collect())
}

/// [w]_∞^σ = sup_B (1/w(σB)) ∫_B M(1_B w) dμ over the family.
pub fn a_infty_sigma(space: &FiniteSpace, family: &BallFamily, w: &Field, sigma: f64) -> Result<ConstantReport> {
    let ratios = a_infty_sigma_ratios(space, family, w, sigma)?;
    Ok(ball_report(Stat::Ainf, family, &ratios, sigma, None))
}

/// (⨍_B w^q)^{1/q} / ⨍_{σB} w for each ball of the family.
pub fn rh_sigma_ratios(space: &FiniteSpace, family: &BallFamily, w: &Field, q: f64, sigma: f64) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    check_weight(space, w)?;
    if !(q > 1.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("q must be > 1, got {q}")));
    }
    Ok(family
        .balls
        .par_iter()
        .map(|b| {
            let big = space.ball(b.center, sigma * b.radius);
            let lq = (w.power_integral(space, &b.members, q) / b.measure).powf(1.0 / q);
            lq / (w.integral(space, &big.members) / big.measure)
        })
        .collect())
}

/// [w]_{RH_q}^σ over the family.
pub fn rh_sigma(space: &FiniteSpace, family: &BallFamily, w: &Field, q: f64, sigma: f64) -> Result<ConstantReport> {
    let ratios = rh_sigma_ratios(space, family, w, q, sigma)?;
    Ok(ball_report(Stat::Rh, family, &ratios, sigma, Some(q)))
}

/// One cube's contribution to a dyadic constant.
#[derive(Debug, Clone, Copy)]
pub struct DyadicTerm {
    pub cube: CubeRef,
    /// ∫ M_Q w dμ for the A∞ functional, (⨍_Q w^q)^{1/q} for the RH one.
    pub numerator: f64,
    /// The gdp attaining the inf, and its w(Q*) (A∞) or w_{Q*} (RH).
    pub gdp: CubeRef,
    pub denominator: f64,
    pub candidates: usize,
}

impl DyadicTerm {
    pub fn value(&self) -> f64 {
        self.numerator / self.denominator
    }
}

/// The largest value of `score` among the gdp candidates of `c`; lowest ref wins ties.
fn best_gdp(systems: &AdjacentSystems, c: CubeRef, score: impl Fn(CubeRef) -> f64) -> Option<(CubeRef, f64, usize)> {
    let cands = systems.gdp_candidates(c).ok()?;
    let n = cands.len();
    let mut best = (cands[0], score(cands[0]));
    for &p in &cands[1..] {
        let v = score(p);
        if v > best.1 {
            best = (p, v);
        }
    }
    Some((best.0, best.1, n))
}

/// Per-cube terms of [w]_∞^𝒟; cubes without a gdp are dropped.
pub fn a_infty_dyadic_terms(systems: &AdjacentSystems, space: &FiniteSpace, w: &Field) -> Vec<DyadicTerm> {
    let avg = CubeAverages::new(systems, space, w);
    systems
        .working_cubes()
        .par_iter()
        .filter_map(|&c| {
            let (gdp, wp, candidates) = best_gdp(systems, c, |p| avg.weight(p))?;
            let m = localized_maximal(systems, &avg, c);
            Some(DyadicTerm { cube: c, numerator: m.power_integral(space, 1.0), gdp, denominator: wp, candidates })
        })
        .collect()
}

/// Per-cube terms of [w]_{RH_q}^𝒟.
pub fn rh_dyadic_terms(systems: &AdjacentSystems, space: &FiniteSpace, w: &Field, q: f64) -> Vec<DyadicTerm> {
    let avg = CubeAverages::new(systems, space, w);
    systems
        .working_cubes()
        .par_iter()
        .filter_map(|&c| {
            let (gdp, ap, candidates) = best_gdp(systems, c, |p| avg.avg(p))?;
            let lq: f64 = systems.members(c).iter().map(|&x| w.values[x as usize].powf(q) * space.mass(x as usize)).sum();
            let lq = (lq / systems.measure(c)).powf(1.0 / q);
            Some(DyadicTerm { cube: c, numerator: lq, gdp, denominator: ap, candidates })
        })
        .collect()
}

fn dyadic_report(stat: Stat, systems: &AdjacentSystems, terms: &[DyadicTerm], q: Option<f64>) -> ConstantReport {
    let values: Vec<f64> = terms.iter().map(DyadicTerm::value).collect();
    let (value, witness) = match argmax(&values) {
        Some(i) => (values[i], Witness::Cube(terms[i].cube)),
        None => (0.0, Witness::None),
    };
    ConstantReport {
        stat,
        value,
        sigma: None,
        q,
        family: format!("dyadic:K={}", systems.k()),
        witness,
        gdp_candidates_searched: terms.iter().map(|t| t.candidates).sum(),
        items: terms.len(),
        excluded: systems.working_cubes().len() - terms.len(),
        lower_bound: false,
    }
}

/// [w]_∞^𝒟 = sup_Q inf_{Q*} (1/w(Q*)) ∫ M_Q w dμ over the working cubes.
pub fn a_infty_dyadic(systems: &AdjacentSystems, space: &FiniteSpace, w: &Field) -> Result<ConstantReport> {
    check_weight(space, w)?;
    let terms = a_infty_dyadic_terms(systems, space, w);
    Ok(dyadic_report(Stat::AinfDyadic, systems, &terms, None))
}

/// [w]_{RH_q}^𝒟 = sup_Q inf_{Q*} (⨍_Q w^q)^{1/q} / w_{Q*}.
pub fn rh_dyadic(systems: &AdjacentSystems, space: &FiniteSpace, w: &Field, q: f64) -> Result<ConstantReport> {
    check_weight(space, w)?;
    if !(q > 1.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("q must be > 1, got {q}")));
    }
    let terms = rh_dyadic_terms(systems, space, w, q);
    Ok(dyadic_report(Stat::RhDyadic, systems, &terms, Some(q)))
}
