//! ∫_B M(1_B w) dμ over the full ball family of the space.
//!
//! Every ball B′ of the space counts, not only those inside B. Grids with
//! uniform mass use a hull-based sweep over intervals; other spaces walk
//! outward from each centre that can still beat the average of w over B.

use std::collections::BTreeMap;
use std::sync::Mutex;

use crate::field::Field;
use crate::space::{Ball, FiniteSpace, Metric};

pub struct RestrictedMaximal<'a> {
    space: &'a FiniteSpace,
    w: &'a Field,
    /// min over centres of the closed-ball measure at radius diam·2^(−i/4).
    min_ball: Mutex<BTreeMap<i32, f64>>,
}

impl<'a> RestrictedMaximal<'a> {
    pub fn new(space: &'a FiniteSpace, w: &'a Field) -> Self {
        RestrictedMaximal { space, w, min_ball: Mutex::new(BTreeMap::new()) }
    }

    /// ∫_B M(1_B w) dμ.
    pub fn integral(&self, ball: &Ball) -> f64 {
        let grid_uniform = matches!(self.space.metric(), Metric::Grid { .. })
            && self.space.masses().iter().all(|&m| m == self.space.mass(0));
        if grid_uniform {
            let (s, e) = ball.members.runs()[0];
            self.grid_integral(s as usize, e as usize - 1)
        } else {
            let vals = self.walk_values(ball);
            ball.members.iter().zip(&vals).map(|(x, v)| v * self.space.mass(x)).sum()
        }
    }

    /// M(1_B w)(x) for the members of B in increasing order.
    pub fn values(&self, ball: &Ball) -> Vec<f64> {
        self.walk_values(ball)
    }

    fn radius_at(&self, i: i32) -> f64 {
        self.space.diameter() * 2f64.powf(-(i as f64) / 4.0)
    }

    fn min_ball_measure(&self, i: i32) -> f64 {
        if let Some(v) = self.min_ball.lock().unwrap().get(&i) {
            return *v;
        }
        use rayon::prelude::*;
        let r = self.radius_at(i);
        let v = (0..self.space.len())
            .into_par_iter()
            .map(|c| self.space.closed_ball_measure(c, r))
            .reduce(|| f64::INFINITY, f64::min);
        self.min_ball.lock().unwrap().insert(i, v);
        v
    }

    /// A radius ρ such that every closed ball of radius ρ has measure ≥ `mass`.
    fn covering_radius(&self, mass: f64) -> f64 {
        let last = {
            let res = self.space.resolution().max(f64::MIN_POSITIVE);
            let ratio = (self.space.diameter() / res).max(1.0);
            (4.0 * ratio.log2()).ceil() as i32 + 1
        };
        // min_ball_measure is nonincreasing in i; find the largest i with value ≥ mass.
        let (mut lo, mut hi) = (0, last);
        if self.min_ball_measure(0) < mass {
            return f64::INFINITY;
        }
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if self.min_ball_measure(mid) >= mass {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        self.radius_at(lo)
    }

    fn walk_values(&self, ball: &Ball) -> Vec<f64> {
        let space = self.space;
        let w = &self.w.values;
        let members = ball.members.to_vec();
        let wb: f64 = members.iter().map(|&x| w[x] * space.mass(x)).sum();
        let base = wb / ball.measure;
        let mut vals = vec![base; members.len()];
        if members.len() == 1 {
            return vals;
        }
        // A centre c matters only if some ball around it meets B with measure below μ(B).
        let rho = self.covering_radius(ball.measure);
        let kappa = space.kappa();
        let candidates: Vec<usize> = if rho.is_finite() {
            space.members_within(ball.center, kappa * (rho + ball.radius), false).to_vec()
        } else {
            (0..space.len()).collect()
        };
        let mut order: Vec<(f64, usize)> = Vec::new();
        for c in candidates {
            let mut dc = f64::INFINITY;
            for &x in &members {
                dc = dc.min(space.dist(c, x));
                if dc == 0.0 {
                    break;
                }
            }
            if space.closed_ball_measure(c, dc) >= ball.measure {
                continue;
            }
            let mut reach = (2.0 * dc).max(space.resolution());
            loop {
                let within = space.members_within(c, reach, true);
                order.clear();
                order.extend(within.iter().map(|j| (space.dist(c, j), j)));
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                if self.walk_from(&order, ball, &members, &mut vals, within.len() == space.len()) {
                    break;
                }
                reach *= 2.0;
            }
        }
        vals
    }

    /// Paints B's members with the best average of 1_B w over balls B(c, ·).
    /// Returns false if the walk ran out of points before reaching μ(B).
    fn walk_from(&self, order: &[(f64, usize)], ball: &Ball, members: &[usize], vals: &mut [f64], whole: bool) -> bool {
        let space = self.space;
        let w = &self.w.values;
        let (mut mu, mut wb) = (0.0, 0.0);
        // (position in B, group index) for members met on the walk, and per-group averages.
        let mut met: Vec<(usize, usize)> = Vec::new();
        let mut group_vals: Vec<f64> = Vec::new();
        let mut i = 0;
        let mut done = false;
        while i < order.len() {
            let d = order[i].0;
            while i < order.len() && order[i].0 == d {
                let j = order[i].1;
                mu += space.mass(j);
                if let Ok(pos) = members.binary_search(&j) {
                    wb += w[j] * space.mass(j);
                    met.push((pos, group_vals.len()));
                }
                i += 1;
            }
            if mu >= ball.measure {
                done = true;
                break;
            }
            group_vals.push(wb / mu);
        }
        if !done && !whole {
            return false;
        }
        for g in (0..group_vals.len().saturating_sub(1)).rev() {
            group_vals[g] = group_vals[g].max(group_vals[g + 1]);
        }
        for (pos, g) in met {
            if let Some(&v) = group_vals.get(g) {
                if v > vals[pos] {
                    vals[pos] = v;
                }
            }
        }
        true
    }

    /// Grid interval [l, r] (global indices). Balls of the grid are the
    /// intervals of odd length and the intervals touching either end.
    fn grid_integral(&self, l: usize, r: usize) -> f64 {
        let n = self.space.len();
        let w = &self.w.values[l..=r];
        let m = w.len();
        let mut s = Vec::with_capacity(m + 1);
        s.push(0.0);
        let mut acc = 0.0;
        for v in w {
            acc += v;
            s.push(acc);
        }
        let mut best = vec![s[m] / m as f64; m];
        // B′ ∩ B = [l, l+b): B′ may extend left of l.
        let mut run = f64::NEG_INFINITY;
        for b in (1..m).rev() {
            let len = if b % 2 == 1 || l == 0 { b } else { b + 1 };
            run = run.max(s[b] / len as f64);
            best[b - 1] = best[b - 1].max(run);
        }
        // B′ ∩ B = [l+a, r]: B′ may extend right of r.
        let mut run = f64::NEG_INFINITY;
        for a in 1..m {
            let k = m - a;
            let len = if k % 2 == 1 || r == n - 1 { k } else { k + 1 };
            run = run.max((s[m] - s[a]) / len as f64);
            best[a] = best[a].max(run);
        }
        if m >= 3 {
            interior_sweep(&s, 1, m - 1, &mut best, &mut Hulls::default());
        }
        best.iter().sum::<f64>() * self.space.mass(0)
    }
}

#[derive(Default)]
struct Hulls {
    upper: Vec<usize>,
    lower: Vec<usize>,
}

/// Intervals [a, b) with lo ≤ a < b ≤ hi and b − a odd, in prefix coordinates.
fn interior_sweep(s: &[f64], lo: usize, hi: usize, best: &mut [f64], hulls: &mut Hulls) {
    if hi <= lo {
        return;
    }
    let mid = (lo + hi) / 2;
    let slope = |a: usize, b: usize| (s[b] - s[a]) / (b - a) as f64;
    for par in 0..2 {
        // Right endpoints b ≡ par, left endpoints a ≢ par.
        let b0 = if (mid + 1) % 2 == par { mid + 1 } else { mid + 2 };
        let a0 = if lo % 2 != par { lo } else { lo + 1 };
        if b0 > hi || a0 > mid {
            continue;
        }
        upper_hull(s, (b0..=hi).step_by(2), &mut hulls.upper);
        // With run attained at (a*, b*), every right point lies on or under the
        // line through a* of slope run, so a new a can only improve run if it
        // lies strictly below that line.
        let mut run = f64::NEG_INFINITY;
        let mut line = f64::INFINITY;
        let mut a = a0;
        for x in lo..=mid {
            if a == x {
                if run == f64::NEG_INFINITY || s[a] - run * (a as f64) < line {
                    let (t, h) = tangent(&hulls.upper, |h| slope(a, h));
                    if t > run {
                        run = t;
                        line = s[h] - run * (h as f64);
                    }
                }
                a += 2;
            }
            if run > best[x] {
                best[x] = run;
            }
        }
        lower_hull(s, (a0..=mid).step_by(2), &mut hulls.lower);
        let mut run = f64::NEG_INFINITY;
        let mut line = f64::NEG_INFINITY;
        let mut b = b0 + (hi - b0) / 2 * 2;
        for x in (mid + 1..hi).rev() {
            if b == x + 1 {
                if run == f64::NEG_INFINITY || s[b] - run * (b as f64) > line {
                    let (t, h) = tangent(&hulls.lower, |h| slope(h, b));
                    if t > run {
                        run = t;
                        line = s[h] - run * (h as f64);
                    }
                }
                b = b.saturating_sub(2);
            }
            if run > best[x] {
                best[x] = run;
            }
        }
    }
    interior_sweep(s, lo, mid, best, hulls);
    interior_sweep(s, mid + 1, hi, best, hulls);
}

fn cross(s: &[f64], o: usize, a: usize, b: usize) -> f64 {
    (a as f64 - o as f64) * (s[b] - s[o]) - (s[a] - s[o]) * (b as f64 - o as f64)
}

fn upper_hull(s: &[f64], pts: impl Iterator<Item = usize>, h: &mut Vec<usize>) {
    h.clear();
    for p in pts {
        while h.len() >= 2 && cross(s, h[h.len() - 2], h[h.len() - 1], p) >= 0.0 {
            h.pop();
        }
        h.push(p);
    }
}

fn lower_hull(s: &[f64], pts: impl Iterator<Item = usize>, h: &mut Vec<usize>) {
    h.clear();
    for p in pts {
        while h.len() >= 2 && cross(s, h[h.len() - 2], h[h.len() - 1], p) <= 0.0 {
            h.pop();
        }
        h.push(p);
    }
}

/// Max of a unimodal function along a hull, with the maximizing vertex.
fn tangent(hull: &[usize], f: impl Fn(usize) -> f64) -> (f64, usize) {
    let best_of = |range: std::ops::RangeInclusive<usize>| {
        let mut best = (f64::NEG_INFINITY, hull[0]);
        for i in range {
            let v = f(hull[i]);
            if v > best.0 {
                best = (v, hull[i]);
            }
        }
        best
    };
    if hull.len() <= 8 {
        return best_of(0..=hull.len() - 1);
    }
    let (mut lo, mut hi) = (0, hull.len() - 1);
    while hi - lo > 3 {
        let mid = (lo + hi) / 2;
        if f(hull[mid + 1]) >= f(hull[mid]) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    best_of(lo..=hi)
}
