use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constants::argmax;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::space::{BallFamily, FiniteSpace};

/// Largest ball size accepted by the exact subset search.
pub const EXACT_SUBSET_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptMode {
    /// Every nonempty subset E of every ball.
    Exact,
    /// Prefixes of the members sorted by w_i/μ_i descending. A failure is
    /// a true failure; a pass only covers those sets.
    Prefix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptReport {
    pub pass: bool,
    /// max over tested (B, E) of [w(E)/w(σB)] / [C (μ(E)/μ(B))^{1/p}].
    pub worst: f64,
    pub witness_ball: Option<usize>,
    /// Members of the worst E.
    pub witness_set: Vec<usize>,
    pub sets_checked: u64,
    pub mode: ScriptMode,
}

/// Checks w(E)/w(σB) ≤ C (μ(E)/μ(B))^{1/p} for E ⊆ B over the family.
pub fn script_a_infty(
    space: &FiniteSpace,
    family: &BallFamily,
    w: &Field,
    sigma: f64,
    c: f64,
    p: f64,
    mode: ScriptMode,
) -> Result<ScriptReport> {
    if !(sigma >= 1.0) || !(c > 0.0) || !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("need sigma >= 1, C > 0, p >= 1; got {sigma}, {c}, {p}")));
    }
    if mode == ScriptMode::Exact {
        if let Some(b) = family.balls.iter().find(|b| b.members.len() > EXACT_SUBSET_CAP) {
            return Err(Error::InvalidParameter(format!(
                "exact mode needs balls with at most {EXACT_SUBSET_CAP} members; ball at {} has {}",
                b.center,
                b.members.len()
            )));
        }
    }
    let per_ball: Vec<(f64, Vec<usize>, u64)> = family
        .balls
        .par_iter()
        .map(|b| {
            let wsig = w.integral(space, &space.members_within(b.center, sigma * b.radius, false));
            let pts = b.members.to_vec();
            let score = |we: f64, me: f64| (we / wsig) / (c * (me / b.measure).powf(1.0 / p));
            match mode {
                ScriptMode::Exact => {
                    let m = pts.len();
                    let full = 1usize << m;
                    let mut we = vec![0.0; full];
                    let mut me = vec![0.0; full];
                    let mut best = (f64::NEG_INFINITY, 0usize);
                    for mask in 1..full {
                        let low = mask.trailing_zeros() as usize;
                        let rest = mask & (mask - 1);
                        we[mask] = we[rest] + w.values[pts[low]] * space.mass(pts[low]);
                        me[mask] = me[rest] + space.mass(pts[low]);
                        let s = score(we[mask], me[mask]);
                        if s > best.0 {
                            best = (s, mask);
                        }
                    }
                    let set = (0..m).filter(|i| best.1 >> i & 1 == 1).map(|i| pts[i]).collect();
                    (best.0, set, (full - 1) as u64)
                }
                ScriptMode::Prefix => {
                    let mut order = pts.clone();
                    order.sort_by(|&a, &b| w.values[b].total_cmp(&w.values[a]).then(a.cmp(&b)));
                    let (mut we, mut me) = (0.0, 0.0);
                    let mut best = (f64::NEG_INFINITY, 0usize);
                    for (k, &x) in order.iter().enumerate() {
                        we += w.values[x] * space.mass(x);
                        me += space.mass(x);
                        let s = score(we, me);
                        if s > best.0 {
                            best = (s, k + 1);
                        }
                    }
                    let mut set = order[..best.1].to_vec();
                    set.sort_unstable();
                    (best.0, set, order.len() as u64)
                }
            }
        })
        .collect();
    let scores: Vec<f64> = per_ball.iter().map(|r| r.0).collect();
    let worst_i = argmax(&scores);
    let worst = worst_i.map_or(0.0, |i| scores[i]);
    Ok(ScriptReport {
        pass: worst <= 1.0 + 1e-12,
        worst,
        witness_ball: worst_i,
        witness_set: worst_i.map(|i| per_ball[i].1.clone()).unwrap_or_default(),
        sets_checked: per_ball.iter().map(|r| r.2).sum(),
        mode,
    })
}
