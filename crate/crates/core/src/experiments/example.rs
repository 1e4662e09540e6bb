use std::time::Instant;

use super::{ExperimentReport, Tolerances};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::space::{enumerate_balls, make_grid_interval, BallFamily, FamilySpec, FiniteSpace};
use crate::weights::{a_infty_sigma, make_weight, WeightSpec};

fn nearest(space: &FiniteSpace, x: f64) -> usize {
    let (a, h) = space.grid().expect("grid space");
    (((x - a) / h).round().max(0.0) as usize).min(space.len() - 1)
}

/// The exponential weight on the line: σ-weak A∞ over every interior ball of [−8, 8], and the
/// failure of doubling over I_k = (k, 3k), where w(2I_k)/w(I_k) ≥ e^k.
///
/// The I_k run on [−1, 21] with the same spacing, since 2I_5 = (0, 20) leaves [−8, 8].
pub fn exponential_example(n: usize, sigma: f64, k_max: usize, tol: &Tolerances) -> Result<ExperimentReport> {
    let start = Instant::now();
    if !(sigma > 1.0) || k_max < 1 {
        return Err(Error::InvalidParameter(format!("need sigma > 1 and k_max >= 1, got {sigma}, {k_max}")));
    }
    let mut rep = ExperimentReport::new("exp-example", &["item", "value", "threshold", "ok"]);
    rep.param("n", n);
    rep.param("sigma", sigma);
    rep.param("k_max", k_max);

    let line = make_grid_interval(-8.0, 8.0, n)?;
    let w = make_weight(&line, &WeightSpec::Exponential)?.field;
    let all = enumerate_balls(&line, &FamilySpec::All)?;
    let inner = all.interior(&line, sigma);
    let weak = a_infty_sigma(&line, &inner, &w, sigma)?;
    let bound = 2.0 / (sigma - 1.0) * (1.0 + tol.example_bound_slack);
    rep.push(vec![format!("weak_ainf(sigma={sigma})").into(), weak.value.into(), bound.into(), (weak.value <= bound).into()]);
    rep.stat("weak_ainf", weak.value);
    rep.stat("balls", inner.len() as f64);
    rep.stat("balls_excluded", (all.len() - inner.len()) as f64);
    rep.witness = Some(weak.witness.to_string());

    let h = 16.0 / n as f64;
    let wide = make_grid_interval(-1.0, 21.0, (22.0 / h).round() as usize)?;
    let ww = make_weight(&wide, &WeightSpec::Exponential)?.field;
    let mut best = 0.0f64;
    let mut intervals = Vec::new();
    for k in 1..=k_max {
        let c = nearest(&wide, 2.0 * k as f64);
        let i_k = wide.ball(c, k as f64);
        let doubled = wide.members_within(c, 2.0 * k as f64, false);
        let ratio = ww.integral(&wide, &doubled) / ww.integral(&wide, &i_k.members);
        best = best.max(ratio);
        rep.push(vec![format!("doubling(I_{k})").into(), ratio.into(), (k as f64).exp().into(), true.into()]);
        intervals.push(i_k);
    }
    let target = tol.strong_surrogate_factor * (k_max as f64).exp();
    rep.push(vec!["strong_surrogate".into(), best.into(), target.into(), (best >= target).into()]);
    let strong = strong_over(&wide, intervals, &ww)?;
    rep.push(vec!["strong_ainf(I_k)".into(), strong.into(), f64::INFINITY.into(), true.into()]);
    rep.stat("strong_surrogate", best);
    rep.stat("strong_ainf_intervals", strong);
    rep.verdict = rep.verdict_from_ok();
    rep.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(rep)
}

fn strong_over(space: &FiniteSpace, balls: Vec<crate::space::Ball>, w: &Field) -> Result<f64> {
    let fam = BallFamily::custom("I_k", balls);
    Ok(a_infty_sigma(space, &fam, w, 1.0)?.value)
}
