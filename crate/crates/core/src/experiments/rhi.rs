use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;

use super::stopping::cube_label;
use super::{Cell, ExperimentReport, Tolerances, Verdict};
use crate::dyadic::{AdjacentSystems, CubeRef};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::maximal::{localized_maximal, CubeAverages};
use crate::space::{Ball, BallFamily, FiniteSpace};
use crate::weights::{a_infty_dyadic_terms, rh_dyadic_terms, rh_sigma, DyadicTerm};

fn sup(terms: &[DyadicTerm]) -> f64 {
    terms.iter().map(DyadicTerm::value).fold(0.0, f64::max)
}

/// 1/(2 S² K c).
fn eps_star(systems: &AdjacentSystems, c: f64) -> f64 {
    let s = systems.s_const();
    1.0 / (2.0 * s * s * systems.k() as f64 * c)
}

fn finite_constant(name: &str, value: f64, tol: &Tolerances) -> Result<()> {
    if value.is_finite() && value > 0.0 && value <= tol.membership_ceiling {
        Ok(())
    } else {
        Err(Error::InfiniteConstant(format!("{name} = {value}")))
    }
}

fn avg_pow(space: &FiniteSpace, w: &Field, pts: &[u32], p: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for &x in pts {
        let m = space.mass(x as usize);
        num += w.values[x as usize].powf(p) * m;
        den += m;
    }
    num / den
}

fn ball_avg_pow(space: &FiniteSpace, w: &Field, ball: &Ball, p: f64) -> f64 {
    w.power_integral(space, &ball.members, p) / space.measure(&ball.members)
}

/// Smallest dilation σ ≥ 1 with every point of `cube` strictly inside σB.
fn dilation_needed(space: &FiniteSpace, ball: &Ball, cube: &[u32]) -> f64 {
    let far = cube.iter().map(|&p| space.dist(ball.center, p as usize)).fold(0.0, f64::max);
    (far / ball.radius).max(1.0)
}

/// Pads a measured dilation so the open σ-ball contains the farthest point.
fn pad(sigma: f64) -> f64 {
    sigma * (1.0 + 1e-9)
}

/// (1/μ(Q₀)) ∫ (M_{Q₀}w)^{1+ε} ≤ 2 S^{1+ε} [w]∞^𝒟 (w_{Q₀*})^{1+ε} for every working cube
/// and every ε in the grid that lies in (0, ε*]. The default grid is ε*·{1, ½, ¼, 1/10}.
pub fn verify_sharp_lemma(
    systems: &AdjacentSystems,
    space: &FiniteSpace,
    w: &Field,
    eps_grid: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let terms = a_infty_dyadic_terms(systems, space, w);
    let a = sup(&terms);
    finite_constant("[w]_inf^D", a, tol)?;
    let e_star = eps_star(systems, a);
    let mut rep = ExperimentReport::new("sharp", &["cube", "eps", "lhs", "rhs", "margin", "ok"]);
    let grid: Vec<f64> = match eps_grid {
        Some(g) => {
            let kept: Vec<f64> = g.iter().copied().filter(|&e| e > 0.0 && e <= e_star).collect();
            if kept.len() < g.len() {
                rep.notes.push(format!("{} grid values outside (0, eps*] dropped", g.len() - kept.len()));
            }
            kept
        }
        None => [1.0, 0.5, 0.25, 0.1].iter().map(|f| f * e_star).collect(),
    };
    rep.param("eps_grid", grid.iter().map(|e| format!("{e:e}")).collect::<Vec<_>>().join(";"));

    let avg = CubeAverages::new(systems, space, w);
    let s = systems.s_const();
    let rows: Vec<Vec<Cell>> = terms
        .par_iter()
        .flat_map_iter(|t| {
            let m = localized_maximal(systems, &avg, t.cube);
            let mu = systems.measure(t.cube);
            let star = avg.avg(t.gdp);
            grid.iter()
                .map(|&e| {
                    let lhs = m.power_integral(space, 1.0 + e) / mu;
                    let rhs = 2.0 * s.powf(1.0 + e) * a * star.powf(1.0 + e);
                    vec![cube_label(t.cube).into(), e.into(), lhs.into(), rhs.into(), (rhs / lhs).into(), tol.le(lhs, rhs).into()]
                })
                .collect::<Vec<_>>()
        })
        .collect();
    rows.into_iter().for_each(|r| rep.push(r));
    summarize(&mut rep, systems);
    rep.stat("ainf_dyadic", a);
    rep.stat("eps_star", e_star);
    finish(&mut rep, start);
    Ok(rep)
}

fn summarize(rep: &mut ExperimentReport, systems: &AdjacentSystems) {
    rep.stat("S", systems.s_const());
    rep.stat("K", systems.k() as f64);
}

/// Verdict from the `ok` column, worst margin and its witness.
fn finish(rep: &mut ExperimentReport, start: Instant) {
    rep.verdict = rep.verdict_from_ok();
    let margins = rep.numbers("margin");
    if let Some((i, m)) = margins.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)) {
        rep.stat("worst_margin", m);
        rep.witness = Some(rep.rows[i].iter().take(2).map(|c| c.to_string()).collect::<Vec<_>>().join(" "));
    }
    rep.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
}

/// ⨍_{Q₀} w^{1+ε} ≤ 2S^{1+ε}(w_{Q₀*})^{1+ε} at ε* and ε*/2 on every working cube, plus the
/// chained ball form on `family` at ε* with the measured dilation σ.
pub fn verify_weak_rhi(
    systems: &AdjacentSystems,
    space: &FiniteSpace,
    family: Option<&BallFamily>,
    w: &Field,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let terms = a_infty_dyadic_terms(systems, space, w);
    let a = sup(&terms);
    finite_constant("[w]_inf^D", a, tol)?;
    let e_star = eps_star(systems, a);
    let s = systems.s_const();
    let avg = CubeAverages::new(systems, space, w);

    let mut rep = ExperimentReport::new("weak-rhi", &["item", "eps", "lhs", "rhs", "margin", "ok"]);
    let rows: Vec<Vec<Cell>> = terms
        .par_iter()
        .flat_map_iter(|t| {
            let star = avg.avg(t.gdp);
            let pts = systems.members(t.cube);
            [e_star, 0.5 * e_star]
                .into_iter()
                .map(|e| {
                    let lhs = avg_pow(space, w, pts, 1.0 + e);
                    let rhs = 2.0 * s.powf(1.0 + e) * star.powf(1.0 + e);
                    vec![format!("cube:{}", cube_label(t.cube)).into(), e.into(), lhs.into(), rhs.into(), (rhs / lhs).into(), tol.le(lhs, rhs).into()]
                })
                .collect::<Vec<_>>()
        })
        .collect();
    rows.into_iter().for_each(|r| rep.push(r));

    if let Some(family) = family {
        let by_cube: HashMap<CubeRef, CubeRef> = terms.iter().map(|t| (t.cube, t.gdp)).collect();
        // (ball, Q_B, Q_B*) for balls whose containing cube has a gdp.
        let chained: Vec<(usize, CubeRef, CubeRef)> = family
            .balls
            .iter()
            .enumerate()
            .filter_map(|(i, b)| {
                let qb = systems.containing_cube(b).ok()?;
                Some((i, qb, *by_cube.get(&qb)?))
            })
            .collect();
        let sigma = pad(chained
            .iter()
            .map(|&(i, _, star)| dilation_needed(space, &family.balls[i], systems.members(star)))
            .fold(1.0, f64::max));
        let r = 1.0 + e_star;
        let ball_rows: Vec<Vec<Cell>> = chained
            .par_iter()
            .map(|&(i, qb, star)| {
                let b = &family.balls[i];
                let big = space.members_within(b.center, sigma * b.radius, false);
                let mu_b = space.measure(&b.members);
                let lhs = ball_avg_pow(space, w, b, r).powf(1.0 / r);
                let rhs = (systems.measure(qb) / mu_b).powf(1.0 / r)
                    * (2.0 * s.powf(r)).powf(1.0 / r)
                    * (space.measure(&big) / systems.measure(star))
                    * (w.integral(space, &big) / space.measure(&big));
                vec![format!("ball:{}:{:e}", b.center, b.radius).into(), e_star.into(), lhs.into(), rhs.into(), (rhs / lhs).into(), tol.le(lhs, rhs).into()]
            })
            .collect();
        rep.stat("balls_checked", ball_rows.len() as f64);
        rep.stat("balls_skipped", (family.len() - ball_rows.len()) as f64);
        rep.stat("sigma_corollary", sigma);
        rep.param("family", family.label());
        ball_rows.into_iter().for_each(|r| rep.push(r));
    }
    summarize(&mut rep, systems);
    rep.stat("ainf_dyadic", a);
    rep.stat("eps_star", e_star);
    finish(&mut rep, start);
    Ok(rep)
}

/// Self-improvement of a dyadic reverse Hölder weight: w^q ∈ A∞^𝒟, the weak RHI for w^q at
/// ε̃* = 1/(2S²K[w^q]∞^𝒟), and the chained ball bound at exponent q(1+ε̃*).
pub fn gehring_probe(
    systems: &AdjacentSystems,
    space: &FiniteSpace,
    family: &BallFamily,
    w: &Field,
    q: f64,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    if !(q > 1.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("q must be > 1, got {q}")));
    }
    let rh_terms = rh_dyadic_terms(systems, space, w, q);
    let rh = sup(&rh_terms);
    finite_constant("[w]_RH_q^D", rh, tol)?;
    let wq = w.powf(q);
    let a_terms = a_infty_dyadic_terms(systems, space, &wq);
    let aq = sup(&a_terms);
    finite_constant("[w^q]_inf^D", aq, tol)?;
    let eps = eps_star(systems, aq);
    let r = 1.0 + eps;
    let exponent = q * r;
    let s = systems.s_const();

    let mut rep = ExperimentReport::new("gehring", &["item", "exponent", "lhs", "rhs", "margin", "ok"]);
    let avg_q = CubeAverages::new(systems, space, &wq);
    let cube_rows: Vec<Vec<Cell>> = a_terms
        .par_iter()
        .map(|t| {
            let lhs = avg_pow(space, &wq, systems.members(t.cube), r);
            let rhs = 2.0 * s.powf(r) * avg_q.avg(t.gdp).powf(r);
            vec![format!("cube:{}", cube_label(t.cube)).into(), exponent.into(), lhs.into(), rhs.into(), (rhs / lhs).into(), tol.le(lhs, rhs).into()]
        })
        .collect();
    cube_rows.into_iter().for_each(|row| rep.push(row));

    let star_of: HashMap<CubeRef, CubeRef> = a_terms.iter().map(|t| (t.cube, t.gdp)).collect();
    let rh_gdp: HashMap<CubeRef, CubeRef> = rh_terms.iter().map(|t| (t.cube, t.gdp)).collect();
    // (ball, Q_B, P) with Q_B* the w^q-optimal gdp of Q_B and P the RH-optimal gdp of Q_B*.
    let chained: Vec<(usize, CubeRef, CubeRef)> = family
        .balls
        .iter()
        .enumerate()
        .filter_map(|(i, b)| {
            let qb = systems.containing_cube(b).ok()?;
            let star = *star_of.get(&qb)?;
            Some((i, qb, *rh_gdp.get(&star)?))
        })
        .collect();
    let sigma = pad(chained.iter().map(|&(i, _, p)| dilation_needed(space, &family.balls[i], systems.members(p))).fold(1.0, f64::max));
    let ball_rows: Vec<Vec<Cell>> = chained
        .par_iter()
        .map(|&(i, qb, p)| {
            let b = &family.balls[i];
            let big = space.members_within(b.center, sigma * b.radius, false);
            let lhs = ball_avg_pow(space, w, b, exponent).powf(1.0 / exponent);
            let rhs = (systems.measure(qb) / space.measure(&b.members)).powf(1.0 / exponent)
                * (2.0 * s.powf(r)).powf(1.0 / exponent)
                * rh
                * (space.measure(&big) / systems.measure(p))
                * (w.integral(space, &big) / space.measure(&big));
            vec![format!("ball:{}:{:e}", b.center, b.radius).into(), exponent.into(), lhs.into(), rhs.into(), (rhs / lhs).into(), tol.le(lhs, rhs).into()]
        })
        .collect();
    let checked = ball_rows.len();
    ball_rows.into_iter().for_each(|row| rep.push(row));

    let chained_family = family.select("chained", |i| chained.binary_search_by_key(&i, |c| c.0).is_ok());
    let improved = if chained_family.is_empty() { 0.0 } else { rh_sigma(space, &chained_family, w, exponent, sigma)?.value };

    rep.param("q", q);
    rep.param("family", family.label());
    summarize(&mut rep, systems);
    rep.stat("rh_dyadic", rh);
    rep.stat("ainf_dyadic_wq", aq);
    rep.stat("eps_tilde", eps);
    rep.stat("exponent", exponent);
    rep.stat("sigma", sigma);
    rep.stat("rh_sigma_improved", improved);
    rep.stat("balls_checked", checked as f64);
    rep.stat("balls_skipped", (family.len() - checked) as f64);
    finish(&mut rep, start);
    if rep.verdict == Verdict::Pass && !(improved.is_finite() && improved <= tol.membership_ceiling) {
        rep.verdict = Verdict::Fail;
    }
    Ok(rep)
}
