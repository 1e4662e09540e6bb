use rayon::prelude::*;

use super::{level_of_radius, AdjacentSystems, CubeRef, DyadicMode};
use crate::space::{BallFamily, FiniteSpace};

/// Outcome of the structural invariant suite.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    /// Largest relative deviation of Σ_α μ(Q_α^{k,t}) from μ(X).
    pub partition_rel_err: f64,
    /// Every level is a partition (disjoint and exhaustive).
    pub partition_ok: bool,
    /// Every cube lies in its parent and every point has one ancestor per level.
    pub nesting_ok: bool,
    pub balls_checked: usize,
    pub balls_uncontained: usize,
    /// max ρ(z, p)/δ^k over cubes and members: the achieved outer constant.
    pub outer_constant: f64,
    /// Outer containment with C₁ = 4κ².
    pub outer_ok: bool,
    /// min over tested cubes of (distance from z to the nearest non-member)/δ^k,
    /// capped at 2C₁; tested on levels with c₁δ^k ≥ resolution.
    pub inner_constant: f64,
    /// Inner containment with c₁ = 1/(12κ⁴); enforced only in strict mode.
    pub inner_ok: bool,
    pub levels: (i32, i32),
    pub systems: usize,
}

impl InvariantReport {
    pub fn all_pass(&self) -> bool {
        self.partition_ok && self.nesting_ok && self.balls_uncontained == 0 && self.outer_ok && self.inner_ok
    }
}

impl AdjacentSystems {
    /// Runs the partition, nesting, ball containment and geometry checks.
    pub fn check_invariants(&self, space: &FiniteSpace, family: &BallFamily) -> InvariantReport {
        let n = space.len();
        let total = space.total_mass();
        let mut partition_rel_err: f64 = 0.0;
        let mut partition_ok = true;
        let mut nesting_ok = true;
        for t in 0..self.k() {
            for k in self.levels() {
                let mut seen = vec![false; n];
                let mut sum = 0.0;
                for index in 0..self.cube_count(t, k) {
                    let c = CubeRef { system: t, level: k, index };
                    let d = self.data(c);
                    if d.members.is_empty() || !(d.measure > 0.0) {
                        partition_ok = false;
                    }
                    let direct: f64 = d.members.iter().map(|&p| space.mass(p as usize)).sum();
                    sum += direct;
                    for &p in d.members.iter() {
                        if std::mem::replace(&mut seen[p as usize], true) {
                            partition_ok = false;
                        }
                        if self.cube_at(t, k, p as usize).index != index {
                            partition_ok = false;
                        }
                    }
                    if let Some(par) = self.parent(c) {
                        let pm = self.members(par);
                        if !d.members.iter().all(|p| pm.binary_search(p).is_ok()) {
                            nesting_ok = false;
                        }
                    }
                }
                if seen.iter().any(|s| !s) {
                    partition_ok = false;
                }
                partition_rel_err = partition_rel_err.max((sum - total).abs() / total);
            }
        }
        partition_ok &= partition_rel_err <= 1e-12;

        let delta = self.delta();
        let (k_min, k_max) = (self.k_min(), self.k_max());
        let in_range: Vec<usize> = (0..family.balls.len())
            .filter(|&i| {
                let need = level_of_radius(delta, family.balls[i].radius) - 1;
                need >= k_min && need < k_max
            })
            .collect();
        let balls_uncontained = in_range
            .par_iter()
            .filter(|&&i| {
                let b = &family.balls[i];
                match self.containing_cube(b) {
                    Ok(q) => {
                        let m = self.members(q);
                        !b.members.iter().all(|p| m.binary_search(&(p as u32)).is_ok())
                    }
                    Err(_) => true,
                }
            })
            .count();

        let kappa = self.kappa();
        let c1_big = 4.0 * kappa * kappa;
        let c1_small = 1.0 / (12.0 * kappa.powi(4));
        let cubes: Vec<CubeRef> = self.levels().flat_map(|k| self.cubes_at(k).collect::<Vec<_>>()).collect();
        let (outer_constant, inner_constant) = cubes
            .par_iter()
            .map(|&c| {
                let z = self.center(c);
                let side = self.sidelength(c);
                let m = self.members(c);
                let outer = m.iter().map(|&p| space.dist(z, p as usize)).fold(0.0, f64::max) / side;
                let inner = if m.len() < n && c1_small * side >= space.resolution() {
                    let near = space.members_within(z, 2.0 * c1_big * side, false);
                    near.iter()
                        .filter(|p| m.binary_search(&(*p as u32)).is_err())
                        .map(|p| space.dist(z, p) / side)
                        .fold(2.0 * c1_big, f64::min)
                } else {
                    f64::INFINITY
                };
                (outer, inner)
            })
            .reduce(|| (0.0, f64::INFINITY), |a, b| (a.0.max(b.0), a.1.min(b.1)));
        let outer_ok = outer_constant < c1_big;
        let inner_ok = self.mode() == DyadicMode::Relaxed || inner_constant >= c1_small;

        InvariantReport {
            partition_rel_err,
            partition_ok,
            nesting_ok,
            balls_checked: in_range.len(),
            balls_uncontained,
            outer_constant,
            outer_ok,
            inner_constant,
            inner_ok,
            levels: (k_min, k_max),
            systems: self.k(),
        }
    }
}
