use std::time::Instant;

use super::{ExperimentReport, Tolerances, Verdict};
use crate::dyadic::AdjacentSystems;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::space::{BallFamily, FiniteSpace};
use crate::weights::{a_infty_dyadic, a_infty_sigma_multi, rh_sigma, script_a_infty, ScriptMode, EXACT_SUBSET_CAP};

/// max over the family balls B and radii r·2^i ≤ σr of μ(B(c, 2ρ)) / μ(B(c, ρ)).
fn dilate_doubling(space: &FiniteSpace, family: &BallFamily, sigma: f64) -> f64 {
    let steps = sigma.log2().ceil().max(0.0) as i32;
    family
        .balls
        .iter()
        .flat_map(|b| (0..=steps).map(move |i| (b, b.radius * f64::powi(2.0, i))))
        .map(|(b, rho)| {
            let small = space.measure(&space.members_within(b.center, rho, false));
            space.measure(&space.members_within(b.center, 2.0 * rho, false)) / small
        })
        .fold(1.0, f64::max)
}

/// The three σ-weak memberships, A∞^σ, RH_q^σ with q = 1 + ε* and the set-function form
/// with (C, p) = ([w]_{RH_q}^σ · max_B μ(B)/μ(σB), q′), must agree at each σ. The reverse
/// step checks rh_sigma(r, σ) ≤ p² C D̂^{log₂σ+1} for r = 1 + 1/(2p).
pub fn equivalence_scan(
    systems: &AdjacentSystems,
    space: &FiniteSpace,
    family: &BallFamily,
    w: &Field,
    sigmas: &[f64],
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    let start = Instant::now();
    if sigmas.is_empty() {
        return Err(Error::InvalidParameter("empty sigma grid".into()));
    }
    let finite = |v: f64| v.is_finite() && v <= tol.membership_ceiling;
    let dyadic = a_infty_dyadic(systems, space, w)?.value;
    let s = systems.s_const();
    let mut rep = ExperimentReport::new(
        "equivalence",
        &["sigma", "ainf", "rh", "script_worst", "a", "b", "c", "agree", "r", "reverse_bound", "rh_r", "reverse_ok", "ok"],
    );
    let q = if finite(dyadic) {
        1.0 + 1.0 / (2.0 * s * s * systems.k() as f64 * dyadic)
    } else {
        rep.notes.push("dyadic A-infinity constant not finite; q = 2 used".into());
        2.0
    };
    let p = q / (q - 1.0);
    let mode = if family.balls.iter().all(|b| b.members.len() <= EXACT_SUBSET_CAP) { ScriptMode::Exact } else { ScriptMode::Prefix };
    rep.param("family", family.label());
    rep.param("q", q);
    rep.param("script_mode", format!("{mode:?}").to_lowercase());

    let mut grid = sigmas.to_vec();
    grid.push(1.0);
    let ainf: Vec<f64> = a_infty_sigma_multi(space, family, w, &grid)?.iter().map(|r| r.value).collect();
    for (&sigma, &a) in sigmas.iter().zip(&ainf) {
        let rh = rh_sigma(space, family, w, q, sigma)?.value;
        let fac = family
            .balls
            .iter()
            .map(|b| b.measure / space.measure(&space.members_within(b.center, sigma * b.radius, false)))
            .fold(0.0, f64::max);
        let c = rh * fac;
        let (script_worst, c_ok) = if finite(c) && c > 0.0 {
            let sr = script_a_infty(space, family, w, sigma, c, p, mode)?;
            (sr.worst, sr.pass)
        } else {
            (f64::INFINITY, false)
        };
        let (a_ok, b_ok) = (finite(a), finite(rh));
        let agree = a_ok == b_ok && b_ok == c_ok;

        let r = 1.0 + 1.0 / (2.0 * p);
        let d_hat = dilate_doubling(space, family, sigma);
        let bound = p * p * c * d_hat.powf(sigma.log2() + 1.0);
        let rh_r = rh_sigma(space, family, w, r, sigma)?.value;
        let reverse_ok = !c_ok || tol.le(rh_r, bound);
        rep.push(vec![
            sigma.into(),
            a.into(),
            rh.into(),
            script_worst.into(),
            a_ok.into(),
            b_ok.into(),
            c_ok.into(),
            agree.into(),
            r.into(),
            bound.into(),
            rh_r.into(),
            reverse_ok.into(),
            (agree && reverse_ok).into(),
        ]);
        rep.stat(&format!("d_hat(sigma={sigma})"), d_hat);
    }
    rep.stat("ainf_strong", ainf[sigmas.len()]);
    rep.stat("rh_strong", rh_sigma(space, family, w, q, 1.0)?.value);
    rep.stat("ainf_dyadic", dyadic);
    rep.stat("eps_star", q - 1.0);
    rep.stat("S", s);
    rep.stat("K", systems.k() as f64);
    rep.verdict = rep.verdict_from_ok();
    if rep.verdict == Verdict::Fail {
        let i = rep.numbers("ok").iter().position(|&v| v != 1.0).unwrap();
        rep.witness = Some(format!("sigma={}", rep.rows[i][0]));
    }
    rep.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}
