use std::time::Instant;

use super::{ExperimentReport, Tolerances, Verdict};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::space::{
    enumerate_balls, make_comb_space_with, measure_doubling_over, CombParams, CriticalCase, FamilySpec, FiniteSpace, Region,
};
use crate::weights::{a_infty_sigma_ratios, make_weight, HKind, WeightSpec};

fn comb_checked(space: &FiniteSpace, j_max: usize) -> Result<()> {
    let g = space.comb().ok_or_else(|| Error::Unsupported("this driver needs a comb space".into()))?;
    if g.teeth() < j_max + 1 {
        return Err(Error::InvalidParameter(format!("j_max = {j_max} needs at least {} teeth, comb has {}", j_max + 1, g.teeth())));
    }
    Ok(())
}

/// (⨍_{Q_j} f^p)^{1/p} / ⨍_{Q_j} f over the squares Q_j = B((10j+1, 1), 1), j = 0..=j_max.
pub fn square_ratios(space: &FiniteSpace, w: &Field, p: f64, j_max: usize) -> Result<Vec<f64>> {
    comb_checked(space, j_max)?;
    let g = space.comb().unwrap();
    Ok((0..=j_max)
        .map(|j| {
            let b = space.ball(g.nearest_v(j, 1.0), 1.0);
            let mu = space.measure(&b.members);
            let lp = (w.power_integral(space, &b.members, p) / mu).powf(1.0 / p);
            lp / (w.integral(space, &b.members) / mu)
        })
        .collect())
}

/// Classifies a ratio sequence indexed by j = 0..=j_max.
///
/// Diverging: strictly increasing on 1..=j_max and ratio(j_max) ≥ factor·ratio(⌈j_max/3⌉).
/// Bounded: max/min over j ≥ 2 at most the bounded threshold.
pub fn classify_ratios(ratios: &[f64], expect_diverging: bool, tol: &Tolerances) -> Verdict {
    let jm = ratios.len().saturating_sub(1);
    if jm < 2 {
        return Verdict::Inconclusive;
    }
    if expect_diverging {
        let increasing = (1..jm).all(|j| ratios[j + 1] > ratios[j]);
        let grown = ratios[jm] >= tol.divergence_factor * ratios[jm.div_ceil(3)];
        if increasing && grown {
            Verdict::Diverging
        } else {
            Verdict::Inconclusive
        }
    } else {
        let tail = &ratios[2..];
        let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        if hi / lo <= tol.bounded_ratio {
            Verdict::Bounded
        } else {
            Verdict::Inconclusive
        }
    }
}

/// Whether f_h is expected to leave RH_p: h1 for every p > 1, h2 for p > 1/α.
pub fn expect_diverging(h: HKind, p: f64) -> bool {
    match h {
        HKind::H1 => p > 1.0,
        HKind::H2 { alpha } => p > 1.0 / alpha,
    }
}

/// RH_p ratios of f_h over the squares Q_j for each p, with a per-p classification.
pub fn counterexample_scan(space: &FiniteSpace, h: HKind, ratio: f64, p_list: &[f64], j_max: usize, tol: &Tolerances) -> Result<ExperimentReport> {
    let start = Instant::now();
    comb_checked(space, j_max)?;
    if p_list.is_empty() || p_list.iter().any(|&p| !(p >= 1.0) || !p.is_finite()) {
        return Err(Error::InvalidParameter("p_list needs values p >= 1".into()));
    }
    let w = make_weight(space, &WeightSpec::Fh { h, ratio })?;
    let mut rep = ExperimentReport::new("counterexample", &["j", "p", "ratio", "expected", "verdict_p"]);
    rep.param("variant", h.label());
    rep.param("ratio", ratio);
    rep.param("j_max", j_max);
    let mut verdicts = Vec::new();
    for &p in p_list {
        let r = square_ratios(space, &w.field, p, j_max)?;
        let div = expect_diverging(h, p);
        let v = classify_ratios(&r, div, tol);
        verdicts.push(v);
        let expected = if div { "diverging" } else { "bounded" };
        for (j, &x) in r.iter().enumerate() {
            rep.push(vec![j.into(), p.into(), x.into(), expected.into(), v.name().into()]);
        }
        rep.stat(&format!("growth(p={p})"), r[j_max] / r[j_max.div_ceil(3)]);
    }
    rep.verdict = combine(&verdicts);
    if rep.verdict == Verdict::Inconclusive {
        let i = verdicts.iter().position(|v| !v.is_success()).unwrap();
        rep.witness = Some(format!("p={}", p_list[i]));
    }
    rep.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}

fn combine(vs: &[Verdict]) -> Verdict {
    if vs.iter().any(|v| !v.is_success()) {
        Verdict::Inconclusive
    } else if vs.iter().all(|v| *v == vs[0]) {
        vs[0]
    } else {
        Verdict::Pass
    }
}

/// σ-weak A∞ of f_{h1} over the critical family, truncated at teeth ≤ 4 and ≤ j_max, with the
/// per-case bounds: sup/inf f ≤ 3 on U-centred balls and ratio ≤ 1/c on balls meeting A.
pub fn a_infty_stability_scan(space: &FiniteSpace, ratio: f64, sigma: f64, j_max: usize, tol: &Tolerances) -> Result<ExperimentReport> {
    let start = Instant::now();
    comb_checked(space, j_max)?;
    let j_lo = 4.min(j_max);
    let g = space.comb().unwrap();
    let w = make_weight(space, &WeightSpec::Fh { h: HKind::H1, ratio })?.field;
    let family = enumerate_balls(space, &FamilySpec::Critical)?;
    let family = family.select(&format!("teeth<={j_max}"), |i| family.tags[i].tooth <= j_max);
    let ratios = a_infty_sigma_ratios(space, &family, &w, sigma)?;

    let a_share = |i: usize| {
        let b = &family.balls[i];
        let on_a: f64 = b.members.iter().filter(|&x| g.region(x) == Region::A).map(|x| space.mass(x)).sum();
        on_a / b.measure
    };
    let a_balls: Vec<usize> = (0..family.len()).filter(|&i| family.tags[i].case == CriticalCase::AMeeting).collect();
    let c = a_balls.iter().map(|&i| a_share(i)).fold(f64::INFINITY, f64::min);

    let mut rep = ExperimentReport::new("ainf-stability", &["item", "tooth", "case", "value", "bound", "ok"]);
    rep.param("sigma", sigma);
    rep.param("j_max", j_max);
    rep.param("family", family.label());
    let est = |jj: usize| (0..family.len()).filter(|&i| family.tags[i].tooth <= jj).map(|i| ratios[i]).fold(0.0, f64::max);
    let (e_lo, e_hi) = (est(j_lo), est(j_max));
    rep.push(vec!["estimate".into(), j_lo.into(), "-".into(), e_lo.into(), f64::INFINITY.into(), true.into()]);
    let bound = tol.stability_ratio * e_lo;
    rep.push(vec!["estimate".into(), j_max.into(), "-".into(), e_hi.into(), bound.into(), (e_hi <= bound).into()]);

    for (i, b) in family.balls.iter().enumerate() {
        let tag = family.tags[i];
        let item = format!("ball:{}:{:e}", b.center, b.radius);
        match tag.case {
            CriticalCase::UCentered => {
                let hi = b.members.iter().map(|x| w.values[x]).fold(f64::NEG_INFINITY, f64::max);
                let lo = b.members.iter().map(|x| w.values[x]).fold(f64::INFINITY, f64::min);
                let v = hi / lo;
                rep.push(vec![item.into(), tag.tooth.into(), "u_sup_inf".into(), v.into(), tol.u_ball_ratio.into(), (v <= tol.u_ball_ratio).into()]);
            }
            CriticalCase::AMeeting => {
                let v = ratios[i];
                rep.push(vec![item.into(), tag.tooth.into(), "a_meeting".into(), v.into(), (1.0 / c).into(), tol.le(v, 1.0 / c).into()]);
            }
            _ => {}
        }
    }
    rep.stat("estimate_j4", e_lo);
    rep.stat("estimate_jmax", e_hi);
    rep.stat("stability_ratio", e_hi / e_lo);
    rep.stat("c_a_share", c);
    rep.verdict = rep.verdict_from_ok();
    if let Some(i) = rep.numbers("ok").iter().position(|&v| v != 1.0) {
        rep.witness = Some(format!("{} {}", rep.rows[i][0], rep.rows[i][2]));
    }
    rep.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}

/// Constants of one comb resolution in the convergence study.
#[derive(Debug, Clone)]
pub struct ConvergencePoint {
    pub pts_per_unit: usize,
    pub values: Vec<(String, f64)>,
}

/// Recomputes a fixed set of comb constants on comb(teeth, n, 2) for each n and compares the
/// two finest resolutions.
pub fn convergence_study(teeth: usize, pts: &[usize], octaves: usize, tol: &Tolerances) -> Result<ExperimentReport> {
    let start = Instant::now();
    if pts.len() < 2 || teeth < 2 {
        return Err(Error::InvalidParameter("the convergence study needs two resolutions and two teeth".into()));
    }
    let jm = teeth - 1;
    let mut points = Vec::new();
    for &n in pts {
        let mut params = CombParams::new(teeth, n, 2.0);
        params.junction_octaves = octaves;
        let space = make_comb_space_with(&params)?;
        let crit = enumerate_balls(&space, &FamilySpec::Critical)?;
        let h1 = make_weight(&space, &WeightSpec::Fh { h: HKind::H1, ratio: 0.5 })?.field;
        let h2 = make_weight(&space, &WeightSpec::Fh { h: HKind::H2 { alpha: 0.5 }, ratio: 0.5 })?.field;
        let mut values = vec![("d_hat".to_string(), measure_doubling_over(&space, &crit, 0.125)?.d_hat)];
        values.push((format!("rh2_h1_Q{jm}"), square_ratios(&space, &h1, 2.0, jm)?[jm]));
        values.push((format!("rh2_h2_Q{jm}"), square_ratios(&space, &h2, 2.0, jm)?[jm]));
        let ainf = a_infty_sigma_ratios(&space, &crit, &h1, 1.0)?.into_iter().fold(0.0, f64::max);
        values.push(("ainf_h1_critical".to_string(), ainf));
        points.push(ConvergencePoint { pts_per_unit: n, values });
    }
    let mut rep = ExperimentReport::new("convergence", &["pts_per_unit", "constant", "value", "rel_change", "ok"]);
    rep.param("teeth", teeth);
    rep.param("octaves", octaves);
    let last = points.len() - 1;
    for (k, pt) in points.iter().enumerate() {
        for (i, (name, v)) in pt.values.iter().enumerate() {
            let rel = if k == 0 { f64::NAN } else { (v - points[k - 1].values[i].1).abs() / points[k - 1].values[i].1.abs() };
            let ok = k < last || rel <= tol.convergence_rel;
            rep.push(vec![pt.pts_per_unit.into(), name.as_str().into(), (*v).into(), rel.into(), ok.into()]);
        }
    }
    rep.verdict = rep.verdict_from_ok();
    rep.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}
