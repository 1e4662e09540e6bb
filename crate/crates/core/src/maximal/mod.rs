//! Non-centred, centred and localized dyadic maximal operators.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{AdjacentSystems, CubeRef};
use crate::field::Field;
use crate::space::{BallFamily, FiniteSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaximalKind {
    Noncentered,
    Centered,
}

/// A maximal function together with how complete its ball family was.
#[derive(Debug, Clone)]
pub struct MaximalResult {
    pub field: Field,
    /// The family was not the full `all` family: values are lower bounds.
    pub restricted: bool,
    /// Points covered by no family ball; they carry f(x).
    pub fallback_points: usize,
}

/// Mf or M_c f over a ball family.
pub fn maximal(space: &FiniteSpace, family: &BallFamily, f: &Field, kind: MaximalKind) -> MaximalResult {
    match kind {
        MaximalKind::Noncentered => noncentered(space, family, f),
        MaximalKind::Centered if family.exhaustive() => MaximalResult {
            field: centered_exact(space, f),
            restricted: false,
            fallback_points: 0,
        },
        MaximalKind::Centered => centered_restricted(space, family, f),
    }
}

fn find(next: &mut [usize], mut i: usize) -> usize {
    let mut root = i;
    while next[root] != root {
        root = next[root];
    }
    while next[i] != root {
        let up = next[i];
        next[i] = root;
        i = up;
    }
    root
}

fn noncentered(space: &FiniteSpace, family: &BallFamily, f: &Field) -> MaximalResult {
    let n = space.len();
    let avgs: Vec<f64> = family.balls.par_iter().map(|b| f.integral(space, &b.members) / b.measure).collect();
    let mut order: Vec<usize> = (0..avgs.len()).collect();
    order.sort_by(|&a, &b| avgs[b].total_cmp(&avgs[a]).then(a.cmp(&b)));
    // Paint points in decreasing average; `next` skips painted points.
    let mut next: Vec<usize> = (0..=n).collect();
    let mut out = vec![f64::NAN; n];
    for &bi in &order {
        for &(s, e) in family.balls[bi].members.runs() {
            let mut i = find(&mut next, s as usize);
            while i < e as usize {
                out[i] = avgs[bi];
                next[i] = i + 1;
                i = find(&mut next, i + 1);
            }
        }
    }
    let mut fallback_points = 0;
    for (i, v) in out.iter_mut().enumerate() {
        if v.is_nan() {
            *v = f.values[i];
            fallback_points += 1;
        }
    }
    MaximalResult { field: Field::new(out), restricted: !family.exhaustive(), fallback_points }
}

/// M_c f(x) = max over all radii of the average on B(x, r).
pub fn centered_exact(space: &FiniteSpace, f: &Field) -> Field {
    let n = space.len();
    let values = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut order: Vec<(f64, usize)> = (0..n).map(|j| (space.dist(x, j), j)).collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut wf, mut mu, mut best) = (0.0, 0.0, 0.0f64);
            let mut i = 0;
            while i < n {
                let d = order[i].0;
                while i < n && order[i].0 == d {
                    let j = order[i].1;
                    wf += f.values[j] * space.mass(j);
                    mu += space.mass(j);
                    i += 1;
                }
                best = best.max(wf / mu);
            }
            best
        })
        .collect();
    Field::new(values)
}

fn centered_restricted(space: &FiniteSpace, family: &BallFamily, f: &Field) -> MaximalResult {
    let n = space.len();
    let mut out = vec![f64::NAN; n];
    for b in &family.balls {
        let avg = f.integral(space, &b.members) / b.measure;
        let v = &mut out[b.center];
        if v.is_nan() || avg > *v {
            *v = avg;
        }
    }
    let mut fallback_points = 0;
    for (i, v) in out.iter_mut().enumerate() {
        if v.is_nan() {
            *v = f.values[i];
            fallback_points += 1;
        }
    }
    MaximalResult { field: Field::new(out), restricted: true, fallback_points }
}

/// The measured constant of M ≤ C·M_c: max over family balls B(z,r) and
/// x ∈ B of μ(B(x, 2κr)) / μ(B(z, r)).
pub fn centered_comparison_constant(space: &FiniteSpace, family: &BallFamily) -> f64 {
    let k2 = 2.0 * space.kappa();
    family
        .balls
        .par_iter()
        .map(|b| {
            b.members
                .iter()
                .map(|x| space.measure(&space.members_within(x, k2 * b.radius, false)) / b.measure)
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Cube averages w_Q for every cube of every system.
#[derive(Debug, Clone)]
pub struct CubeAverages {
    k_min: i32,
    /// avg[t][k − k_min][α]
    avg: Vec<Vec<Vec<f64>>>,
    /// mass[t][k − k_min][α] = w(Q)
    mass: Vec<Vec<Vec<f64>>>,
}

impl CubeAverages {
    pub fn new(systems: &AdjacentSystems, space: &FiniteSpace, w: &Field) -> Self {
        let mut avg = Vec::with_capacity(systems.k());
        let mut mass = Vec::with_capacity(systems.k());
        for t in 0..systems.k() {
            let (a, m): (Vec<Vec<f64>>, Vec<Vec<f64>>) = systems
                .levels()
                .map(|k| {
                    let wq: Vec<f64> = (0..systems.cube_count(t, k))
                        .map(|index| {
                            systems
                                .members(CubeRef { system: t, level: k, index })
                                .iter()
                                .map(|&p| w.values[p as usize] * space.mass(p as usize))
                                .sum()
                        })
                        .collect();
                    let av = wq
                        .iter()
                        .enumerate()
                        .map(|(index, v)| v / systems.measure(CubeRef { system: t, level: k, index }))
                        .collect();
                    (av, wq)
                })
                .unzip();
            avg.push(a);
            mass.push(m);
        }
        CubeAverages { k_min: systems.k_min(), avg, mass }
    }

    /// w_Q.
    pub fn avg(&self, c: CubeRef) -> f64 {
        self.avg[c.system][(c.level - self.k_min) as usize][c.index]
    }

    /// w(Q).
    pub fn weight(&self, c: CubeRef) -> f64 {
        self.mass[c.system][(c.level - self.k_min) as usize][c.index]
    }
}

/// M_{Q₀}w restricted to its support ⋃𝒬_{Q₀}.
#[derive(Debug, Clone)]
pub struct LocalizedMaximal {
    /// Sorted support points.
    pub points: Vec<u32>,
    pub values: Vec<f64>,
}

impl LocalizedMaximal {
    /// ∫ (M_{Q₀}w)^p dμ over the support.
    pub fn power_integral(&self, space: &FiniteSpace, p: f64) -> f64 {
        self.points.iter().zip(&self.values).map(|(&x, v)| v.powf(p) * space.mass(x as usize)).sum()
    }

    pub fn value_at(&self, x: usize) -> f64 {
        match self.points.binary_search(&(x as u32)) {
            Ok(i) => self.values[i],
            Err(_) => 0.0,
        }
    }

    pub fn to_field(&self, n: usize) -> Field {
        let mut v = vec![0.0; n];
        for (&x, &m) in self.points.iter().zip(&self.values) {
            v[x as usize] = m;
        }
        Field::new(v)
    }
}

/// Support of M_{Q₀}: the union of same-level cubes (all systems) meeting Q₀.
pub fn localized_support(systems: &AdjacentSystems, q0: CubeRef) -> Vec<u32> {
    let mut pts: Vec<u32> = systems.neighbors(q0).iter().flat_map(|&q| systems.members(q).iter().copied()).collect();
    pts.sort_unstable();
    pts.dedup();
    pts
}

/// Cube ids of level k in system t that meet Q₀, sorted.
pub(crate) fn hit_ids(systems: &AdjacentSystems, q0: CubeRef, t: usize, k: i32) -> Vec<u32> {
    let cube_of = systems.cube_of_slice(t, k);
    let mut ids: Vec<u32> = systems.members(q0).iter().map(|&p| cube_of[p as usize]).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// M_{Q₀}w(x) = max of w_Q over cubes Q (all systems) with x ∈ Q, Q ∩ Q₀ ≠ ∅
/// and ℓ(Q) ≤ ℓ(Q₀); zero off the support.
pub fn localized_maximal(systems: &AdjacentSystems, averages: &CubeAverages, q0: CubeRef) -> LocalizedMaximal {
    let points = localized_support(systems, q0);
    let mut values = vec![0.0f64; points.len()];
    for t in 0..systems.k() {
        for k in q0.level..=systems.k_max() {
            let ids = hit_ids(systems, q0, t, k);
            let cube_of = systems.cube_of_slice(t, k);
            for (x, v) in points.iter().zip(values.iter_mut()) {
                let id = cube_of[*x as usize];
                if ids.binary_search(&id).is_ok() {
                    let a = averages.avg(CubeRef { system: t, level: k, index: id as usize });
                    if a > *v {
                        *v = a;
                    }
                }
            }
        }
    }
    LocalizedMaximal { points, values }
}

/// M_{Q₀}w as a field on the whole space.
pub fn localized_dyadic_maximal(systems: &AdjacentSystems, space: &FiniteSpace, q0: CubeRef, w: &Field) -> Field {
    let avg = CubeAverages::new(systems, space, w);
    localized_maximal(systems, &avg, q0).to_field(space.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{enumerate_balls, FamilySpec, NormKind};

    fn three() -> FiniteSpace {
        FiniteSpace::from_coords(NormKind::L2, vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![1.0; 3]).unwrap()
    }

    #[test]
    fn three_point_example() {
        let s = three();
        let all = enumerate_balls(&s, &FamilySpec::All).unwrap();
        let f = Field::new(vec![1.0, 2.0, 4.0]);
        let m = maximal(&s, &all, &f, MaximalKind::Noncentered);
        assert!((m.field.values[0] - 7.0 / 3.0).abs() < 1e-15);
        assert!(!m.restricted);
        let mc = maximal(&s, &all, &f, MaximalKind::Centered);
        assert!((mc.field.values[0] - 7.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_is_fixed() {
        let s = three();
        let all = enumerate_balls(&s, &FamilySpec::All).unwrap();
        let f = Field::constant(3, 2.5);
        for kind in [MaximalKind::Noncentered, MaximalKind::Centered] {
            let m = maximal(&s, &all, &f, kind);
            assert!(m.field.values.iter().all(|v| (v - 2.5).abs() < 1e-15));
        }
    }

    #[test]
    fn restricted_family_falls_back() {
        let s = three();
        let fam = BallFamily::custom("one", vec![s.ball(0, 0.5)]);
        let f = Field::new(vec![1.0, 2.0, 4.0]);
        let m = maximal(&s, &fam, &f, MaximalKind::Noncentered);
        assert!(m.restricted);
        assert_eq!(m.fallback_points, 2);
        assert_eq!(m.field.values, vec![1.0, 2.0, 4.0]);
    }
}
