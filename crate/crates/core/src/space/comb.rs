//! The comb: a truncated line A with J teeth W_j = U_j ∪ V_j attached at
//! x = 10j, where U_j = {(10j+u, u/2) : u ∈ (0,1]} and
//! V_j = {(10j+1, v) : v ∈ [½,1]}, under the ℓ∞ metric with arc-length masses.
//!
//! The first cell (0, 1/n] of every U_j arm is refined geometrically so that
//! weights with a singularity at the junction are resolved.

use super::{FiniteSpace, Piece, POINT_CAP};
use crate::error::{Error, Result};

/// Which part of the comb a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    A,
    U(u32),
    V(u32),
}

/// Discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombParams {
    pub teeth: usize,
    pub pts_per_unit: usize,
    pub trunc: f64,
    /// Number of halvings of the first U cell below 1/n.
    pub junction_octaves: usize,
    /// Points per halving in the graded cell.
    pub per_octave: usize,
}

impl CombParams {
    pub fn new(teeth: usize, pts_per_unit: usize, trunc: f64) -> Self {
        CombParams { teeth, pts_per_unit, trunc, junction_octaves: 40, per_octave: 4 }
    }

    fn a_length(&self) -> f64 {
        10.0 * (self.teeth as f64 - 1.0) + 1.0 + 2.0 * self.trunc
    }

    fn counts(&self) -> (usize, usize, usize) {
        let n = self.pts_per_unit;
        let a = (self.a_length() * n as f64).round() as usize;
        let u = (n - 1) + self.junction_octaves * self.per_octave + 1;
        (a, u, n / 2)
    }
}

/// Point labels and tooth-local parameters of a comb space.
#[derive(Debug, Clone)]
pub struct CombGeometry {
    params: CombParams,
    region: Vec<Region>,
    /// x for A points, u for U points, v for V points.
    param: Vec<f64>,
    a_step: f64,
    a_count: usize,
    tooth_start: Vec<usize>,
    u_count: usize,
    v_count: usize,
}

impl CombGeometry {
    pub fn params(&self) -> &CombParams {
        &self.params
    }

    pub fn teeth(&self) -> usize {
        self.params.teeth
    }

    pub fn region(&self, i: usize) -> Region {
        self.region[i]
    }

    /// x on A, u on U_j, v on V_j.
    pub fn param(&self, i: usize) -> f64 {
        self.param[i]
    }

    pub fn a_range(&self) -> std::ops::Range<usize> {
        0..self.a_count
    }

    pub fn u_range(&self, j: usize) -> std::ops::Range<usize> {
        let s = self.tooth_start[j];
        s..s + self.u_count
    }

    pub fn v_range(&self, j: usize) -> std::ops::Range<usize> {
        let s = self.tooth_start[j] + self.u_count;
        s..s + self.v_count
    }

    /// Indices of W_j = U_j ∪ V_j (contiguous).
    pub fn w_range(&self, j: usize) -> std::ops::Range<usize> {
        let s = self.tooth_start[j];
        s..s + self.u_count + self.v_count
    }

    pub fn a_extent(&self) -> (f64, f64) {
        (self.param[0], self.param[self.a_count - 1])
    }

    /// Tooth-local (x, y): U_j ↦ (u, u/2), V_j ↦ (1, v).
    #[inline]
    fn local(&self, i: usize) -> (f64, f64) {
        match self.region[i] {
            Region::U(_) => (self.param[i], 0.5 * self.param[i]),
            Region::V(_) => (1.0, self.param[i]),
            Region::A => unreachable!(),
        }
    }

    pub fn coords(&self, i: usize) -> [f64; 2] {
        match self.region[i] {
            Region::A => [self.param[i], 0.0],
            Region::U(j) => [10.0 * j as f64 + self.param[i], 0.5 * self.param[i]],
            Region::V(j) => [10.0 * j as f64 + 1.0, self.param[i]],
        }
    }

    /// ℓ∞ distance, computed from tooth-local coordinates so that points
    /// near a junction keep full relative precision.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match (self.region[i], self.region[j]) {
            (Region::A, Region::A) => i.abs_diff(j) as f64 * self.a_step,
            (Region::A, Region::U(t) | Region::V(t)) => self.dist_a_tooth(i, j, t),
            (Region::U(t) | Region::V(t), Region::A) => self.dist_a_tooth(j, i, t),
            (Region::U(s) | Region::V(s), Region::U(t) | Region::V(t)) => {
                let (xi, yi) = self.local(i);
                let (xj, yj) = self.local(j);
                let dx = 10.0 * (s as f64 - t as f64) + (xi - xj);
                dx.abs().max((yi - yj).abs())
            }
        }
    }

    #[inline]
    fn dist_a_tooth(&self, a: usize, p: usize, tooth: u32) -> f64 {
        let (x, y) = self.local(p);
        let dx = (self.param[a] - 10.0 * tooth as f64) - x;
        dx.abs().max(y)
    }

    fn nearest_by(&self, range: std::ops::Range<usize>, target: f64) -> usize {
        range
            .min_by(|&a, &b| (self.param[a] - target).abs().total_cmp(&(self.param[b] - target).abs()))
            .expect("nonempty range")
    }

    /// The U_j point whose parameter is closest to `u`.
    pub fn nearest_u(&self, j: usize, u: f64) -> usize {
        self.nearest_by(self.u_range(j), u)
    }

    /// The V_j point whose parameter is closest to `v`.
    pub fn nearest_v(&self, j: usize, v: f64) -> usize {
        self.nearest_by(self.v_range(j), v)
    }

    /// The A point closest to abscissa `x`.
    pub fn nearest_a(&self, x: f64) -> usize {
        let i = ((x - self.param[0]) / self.a_step).round();
        i.clamp(0.0, (self.a_count - 1) as f64) as usize
    }

    /// Tooth whose junction x = 10j is nearest to abscissa `x`.
    pub fn nearest_tooth(&self, x: f64) -> usize {
        ((x / 10.0).round().max(0.0) as usize).min(self.teeth() - 1)
    }

    /// The tooth a point belongs to (A points: nearest junction).
    pub fn tooth_of(&self, i: usize) -> usize {
        match self.region[i] {
            Region::A => self.nearest_tooth(self.param[i]),
            Region::U(j) | Region::V(j) => j as usize,
        }
    }
}

pub(super) fn build(p: &CombParams) -> Result<FiniteSpace> {
    if p.teeth < 1 {
        return Err(Error::InvalidParameter("comb needs at least one tooth".into()));
    }
    if p.pts_per_unit < 8 || p.pts_per_unit % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "comb needs an even pts_per_unit >= 8, got {}",
            p.pts_per_unit
        )));
    }
    if !(p.trunc >= 2.0) || !p.trunc.is_finite() {
        return Err(Error::InvalidParameter(format!("comb needs trunc >= 2, got {}", p.trunc)));
    }
    if p.per_octave < 1 {
        return Err(Error::InvalidParameter("per_octave must be >= 1".into()));
    }
    let (a_count, u_count, v_count) = p.counts();
    let total = a_count.saturating_add(p.teeth.saturating_mul(u_count + v_count));
    if total > POINT_CAP {
        return Err(Error::TooManyPoints { points: total, cap: POINT_CAP });
    }

    let n = p.pts_per_unit as f64;
    let a_len = p.a_length();
    let a_step = a_len / a_count as f64;
    let mut region = Vec::with_capacity(total);
    let mut param = Vec::with_capacity(total);
    let mut masses = Vec::with_capacity(total);
    let mut pieces = Vec::new();

    for i in 0..a_count {
        region.push(Region::A);
        param.push(-p.trunc + (i as f64 + 0.5) * a_step);
        masses.push(a_step);
    }
    pieces.push(Piece { start: 0, end: a_count, bbox: [param[0], param[a_count - 1], 0.0, 0.0] });

    // Graded first cell: u_k = 2^{-k/m}/n, k = 0..=Km; the last point carries (0, u_Km].
    let graded = p.junction_octaves * p.per_octave;
    let u_graded: Vec<f64> = (0..=graded)
        .map(|k| (-(k as f64) / p.per_octave as f64).exp2() / n)
        .collect();
    let mut u_pts: Vec<(f64, f64)> = Vec::with_capacity(u_count);
    for k in (0..=graded).rev() {
        let mass = if k == graded { u_graded[k] } else { u_graded[k] - u_graded[k + 1] };
        u_pts.push((u_graded[k], mass));
    }
    for i in 2..=p.pts_per_unit {
        u_pts.push((i as f64 / n, 1.0 / n));
    }
    debug_assert_eq!(u_pts.len(), u_count);

    let mut tooth_start = Vec::with_capacity(p.teeth);
    for j in 0..p.teeth {
        let start = region.len();
        tooth_start.push(start);
        let x0 = 10.0 * j as f64;
        for &(u, m) in &u_pts {
            region.push(Region::U(j as u32));
            param.push(u);
            masses.push(m);
        }
        pieces.push(Piece {
            start,
            end: start + u_count,
            bbox: [x0 + u_pts[0].0, x0 + 1.0, 0.5 * u_pts[0].0, 0.5],
        });
        let vs = start + u_count;
        for i in 1..=v_count {
            region.push(Region::V(j as u32));
            param.push(0.5 + i as f64 / n);
            masses.push(1.0 / n);
        }
        pieces.push(Piece { start: vs, end: vs + v_count, bbox: [x0 + 1.0, x0 + 1.0, 0.5 + 1.0 / n, 1.0] });
    }

    let geom = CombGeometry { params: *p, region, param, a_step, a_count, tooth_start, u_count, v_count };
    FiniteSpace::from_comb(geom, masses, pieces)
}
