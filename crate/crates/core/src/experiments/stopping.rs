use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;

use super::{Cell, ExperimentReport, Tolerances};
use crate::dyadic::{AdjacentSystems, CubeRef};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::maximal::{hit_ids, localized_maximal, CubeAverages, LocalizedMaximal};
use crate::space::FiniteSpace;

/// Maximal cubes of the super-level set {M_{Q₀}w > λ}.
#[derive(Debug, Clone)]
pub struct StoppingFamily {
    pub base: CubeRef,
    pub lambda: f64,
    /// The gdp Q₀* the threshold was checked against.
    pub gdp: CubeRef,
    pub cubes: Vec<CubeRef>,
    /// Sorted points of {M_{Q₀}w > λ}.
    pub level_set: Vec<u32>,
    pub check: StoppingCheck,
}

/// Outcome of the property checks on a stopping family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingCheck {
    pub cover_exact: bool,
    /// w_{Q_j} > λ for every j.
    pub above_lambda: bool,
    /// w_Q ≤ λ for strict same-system ancestors with ℓ(Q) ≤ ℓ(Q₀).
    pub ancestors_below: bool,
    pub inside_gdp: bool,
    /// ∫_{Q_j} M_{Q₀}w ≤ S ∫_{Q_j} M_{Q_j}w for every j.
    pub property3: bool,
    /// Largest ∫_{Q_j} M_{Q₀}w / (S ∫_{Q_j} M_{Q_j}w); 0 for an empty family.
    pub property3_worst: f64,
    pub disjoint_per_system: bool,
}

impl StoppingCheck {
    pub fn all_pass(&self) -> bool {
        self.cover_exact && self.above_lambda && self.ancestors_below && self.inside_gdp && self.property3 && self.disjoint_per_system
    }
}

/// Stopping cubes for (Q₀, λ) with Q₀* = `gdp` (the measure-minimal gdp when `None`).
/// Requires λ ≥ S·w_{Q₀*}; the property checks are run before returning.
pub fn stopping_cubes(
    systems: &AdjacentSystems,
    space: &FiniteSpace,
    averages: &CubeAverages,
    q0: CubeRef,
    lambda: f64,
    gdp: Option<CubeRef>,
) -> Result<StoppingFamily> {
    let m0 = localized_maximal(systems, averages, q0);
    let mut cache = HashMap::new();
    stopping_with(systems, space, averages, q0, &m0, lambda, gdp, &Tolerances::default(), &mut cache)
}

#[allow(clippy::too_many_arguments)]
fn stopping_with(
    systems: &AdjacentSystems,
    space: &FiniteSpace,
    averages: &CubeAverages,
    q0: CubeRef,
    m0: &LocalizedMaximal,
    lambda: f64,
    gdp: Option<CubeRef>,
    tol: &Tolerances,
    cache: &mut HashMap<CubeRef, f64>,
) -> Result<StoppingFamily> {
    let gdp = match gdp {
        Some(g) => {
            if !systems.gdp_candidates(q0)?.contains(&g) {
                return Err(Error::InvalidParameter(format!("{g:?} is not a gdp of {q0:?}")));
            }
            g
        }
        None => systems.gdp(q0)?,
    };
    let required = systems.s_const() * averages.avg(gdp);
    if !(lambda >= required) {
        return Err(Error::LambdaTooSmall { lambda, required });
    }

    let mut cands = Vec::new();
    for t in 0..systems.k() {
        for k in q0.level..=systems.k_max() {
            for id in hit_ids(systems, q0, t, k) {
                let c = CubeRef { system: t, level: k, index: id as usize };
                if averages.avg(c) > lambda {
                    cands.push(c);
                }
            }
        }
    }
    let mut cubes: Vec<CubeRef> = cands.iter().copied().filter(|&c| is_maximal(systems, averages, q0, c, lambda)).collect();
    cubes.sort_by_key(|c| (c.system, c.level, c.index));

    let level_set: Vec<u32> = m0.points.iter().zip(&m0.values).filter(|(_, v)| **v > lambda).map(|(p, _)| *p).collect();
    let mut fam = StoppingFamily { base: q0, lambda, gdp, cubes, level_set, check: empty_check() };
    fam.check = check_with(systems, space, averages, &fam, m0, tol, cache);
    Ok(fam)
}

/// Sort key among candidates: larger sets first, then coarser level, system, index.
fn precedes(systems: &AdjacentSystems, a: CubeRef, b: CubeRef) -> bool {
    let (la, lb) = (systems.members(a).len(), systems.members(b).len());
    la > lb || (la == lb && (a.level, a.system, a.index) < (b.level, b.system, b.index))
}

/// No other candidate contains `c` (identical sets: only the first in sort order survives).
fn is_maximal(systems: &AdjacentSystems, averages: &CubeAverages, q0: CubeRef, c: CubeRef, lambda: f64) -> bool {
    let mem = systems.members(c);
    let p = mem[0] as usize;
    for t in 0..systems.k() {
        for k in q0.level..=systems.k_max() {
            let other = systems.cube_at(t, k, p);
            if other == c || !precedes(systems, other, c) || !(averages.avg(other) > lambda) {
                continue;
            }
            let cube_of = systems.cube_of_slice(t, k);
            if mem.iter().all(|&x| cube_of[x as usize] as usize == other.index) {
                return false;
            }
        }
    }
    true
}

fn empty_check() -> StoppingCheck {
    StoppingCheck {
        cover_exact: true,
        above_lambda: true,
        ancestors_below: true,
        inside_gdp: true,
        property3: true,
        property3_worst: 0.0,
        disjoint_per_system: true,
    }
}

/// Re-runs every property check on a family.
pub fn check_stopping_family(systems: &AdjacentSystems, space: &FiniteSpace, w: &Field, fam: &StoppingFamily) -> StoppingCheck {
    let averages = CubeAverages::new(systems, space, w);
    let m0 = localized_maximal(systems, &averages, fam.base);
    check_with(systems, space, &averages, fam, &m0, &Tolerances::default(), &mut HashMap::new())
}

fn check_with(
    systems: &AdjacentSystems,
    space: &FiniteSpace,
    averages: &CubeAverages,
    fam: &StoppingFamily,
    m0: &LocalizedMaximal,
    tol: &Tolerances,
    cache: &mut HashMap<CubeRef, f64>,
) -> StoppingCheck {
    let mut out = empty_check();
    let mut union: Vec<u32> = fam.cubes.iter().flat_map(|&c| systems.members(c).iter().copied()).collect();
    union.sort_unstable();
    union.dedup();
    out.cover_exact = union == fam.level_set;

    let gdp_members = systems.members(fam.gdp);
    let s = systems.s_const();
    for &c in &fam.cubes {
        let mem = systems.members(c);
        out.above_lambda &= averages.avg(c) > fam.lambda;

        let mut a = c;
        while let Some(p) = systems.parent(a) {
            if p.level < fam.base.level {
                break;
            }
            if systems.members(p).len() > mem.len() && averages.avg(p) > fam.lambda {
                out.ancestors_below = false;
            }
            a = p;
        }

        out.inside_gdp &= mem.iter().all(|x| gdp_members.binary_search(x).is_ok());

        let lhs: f64 = mem.iter().map(|&x| m0.value_at(x as usize) * space.mass(x as usize)).sum();
        let own = *cache.entry(c).or_insert_with(|| {
            let mj = localized_maximal(systems, averages, c);
            mem.iter().map(|&x| mj.value_at(x as usize) * space.mass(x as usize)).sum()
        });
        out.property3 &= tol.le(lhs, s * own);
        out.property3_worst = out.property3_worst.max(lhs / (s * own));

    }

    // A mark holds the last system that claimed the point, so earlier systems never collide.
    let mut mark = vec![usize::MAX; space.len()];
    for t in 0..systems.k() {
        for &c in fam.cubes.iter().filter(|c| c.system == t) {
            for &x in systems.members(c) {
                if mark[x as usize] == t {
                    out.disjoint_per_system = false;
                }
                mark[x as usize] = t;
            }
        }
    }
    out
}

/// Every working cube Q₀ against a geometric λ-grid from S·w_{Q₀*} up to max w.
pub fn stopping_scan(systems: &AdjacentSystems, space: &FiniteSpace, w: &Field, lambdas: usize, tol: &Tolerances) -> Result<ExperimentReport> {
    let start = Instant::now();
    let averages = CubeAverages::new(systems, space, w);
    let wmax = w.values.iter().copied().fold(0.0, f64::max);
    let cubes = systems.working_cubes();
    let rows: Vec<Vec<Vec<Cell>>> = cubes
        .par_iter()
        .map(|&q0| -> Result<Vec<Vec<Cell>>> {
            let gdp = systems.gdp(q0)?;
            let base = systems.s_const() * averages.avg(gdp);
            let m0 = localized_maximal(systems, &averages, q0);
            let mut cache = HashMap::new();
            let top = (wmax / base).max(1.0);
            let mut out = Vec::with_capacity(lambdas);
            for i in 0..lambdas {
                let g = if lambdas > 1 { i as f64 / (lambdas - 1) as f64 } else { 0.0 };
                let lambda = if i == 0 { base } else { base * top.powf(g).max(1.0 + g) };
                let fam = stopping_with(systems, space, &averages, q0, &m0, lambda, Some(gdp), tol, &mut cache)?;
                let c = fam.check;
                out.push(vec![
                    cube_label(q0).into(),
                    lambda.into(),
                    fam.cubes.len().into(),
                    fam.level_set.len().into(),
                    c.cover_exact.into(),
                    (c.above_lambda && c.ancestors_below).into(),
                    c.inside_gdp.into(),
                    c.property3_worst.into(),
                    c.disjoint_per_system.into(),
                    c.all_pass().into(),
                ]);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut rep = ExperimentReport::new(
        "stopping",
        &["cube", "lambda", "cubes", "level_set", "cover_exact", "maximal", "inside_gdp", "property3_ratio", "disjoint", "ok"],
    );
    rep.param("lambdas", lambdas);
    rows.into_iter().flatten().for_each(|r| rep.push(r));
    rep.stat("S", systems.s_const());
    rep.stat("K", systems.k() as f64);
    rep.stat("cubes_checked", cubes.len() as f64);
    rep.verdict = rep.verdict_from_ok();
    if let Some(i) = rep.numbers("ok").iter().position(|&v| v != 1.0) {
        rep.witness = Some(format!("{} lambda={}", rep.rows[i][0], rep.rows[i][1]));
    }
    rep.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}

pub(crate) fn cube_label(c: CubeRef) -> String {
    format!("{}:{}:{}", c.system + 1, c.level, c.index)
}
