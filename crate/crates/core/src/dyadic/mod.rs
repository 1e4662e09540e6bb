//! Adjacent dyadic systems.
//!
//! Each system is a hierarchy of partitions of the space indexed by level k
//! (sidelength δ^k). Systems are added until every ball of a supplied family
//! sits inside a cube of comparable size in some system.

mod checks;
mod net;

pub use checks::InvariantReport;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{enumerate_balls, Ball, BallFamily, FamilySpec, FiniteSpace, ALL_BALLS_POINT_CAP};

/// Upper bound on the number of systems.
pub const MAX_SYSTEMS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DyadicMode {
    /// Requires 96κ⁶δ ≤ 1.
    Strict,
    /// Any δ ∈ (0, ½]; invariants are verified empirically.
    Relaxed,
}

impl DyadicMode {
    pub fn name(self) -> &'static str {
        match self {
            DyadicMode::Strict => "strict",
            DyadicMode::Relaxed => "relaxed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicConfig {
    pub delta: f64,
    pub mode: DyadicMode,
    pub seed: u64,
}

/// Handle of a cube: system `t`, level `k`, index `α` within the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CubeRef {
    pub system: usize,
    pub level: i32,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct CubeData {
    /// The net point z_α^{k,t}.
    pub center: u32,
    pub measure: f64,
    /// Sorted member ids.
    pub members: Box<[u32]>,
    /// Index of the parent cube one level up (`u32::MAX` at the top level).
    pub parent: u32,
    /// False when the cube equals its parent as a point set.
    pub canonical: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Level {
    pub cube_of: Vec<u32>,
    pub cubes: Vec<CubeData>,
    /// Bit t set when the system-t cube two levels up is a gdp (working levels only).
    pub gdp_mask: Vec<u64>,
}

/// K dyadic systems over a space, with the structural constant S.
#[derive(Debug, Clone)]
pub struct AdjacentSystems {
    delta: f64,
    mode: DyadicMode,
    kappa: f64,
    k_min: i32,
    k_max: i32,
    /// systems[t][k − k_min]
    systems: Vec<Vec<Level>>,
    s_const: f64,
    n: usize,
    total_mass: f64,
    containment_checked: usize,
}

/// The ball family the construction loop must contain: every ball for small
/// spaces, otherwise a seeded sample plus the critical family on combs.
pub fn default_family(space: &FiniteSpace) -> Result<BallFamily> {
    if space.len() <= ALL_BALLS_POINT_CAP.min(2000) {
        return enumerate_balls(space, &FamilySpec::All);
    }
    let mut f = enumerate_balls(space, &FamilySpec::Sampled { count: 20_000, seed: 17 })?;
    if space.comb().is_some() {
        f.balls.extend(enumerate_balls(space, &FamilySpec::Critical)?.balls);
        f.spec = FamilySpec::Custom("sampled(20000;seed=17)+critical".into());
    }
    Ok(f)
}

/// Level k with δ^{k+1} < r ≤ δ^k.
pub fn level_of_radius(delta: f64, r: f64) -> i32 {
    let mut k = (r.ln() / delta.ln()).floor() as i32;
    while delta.powi(k + 1) >= r {
        k += 1;
    }
    while delta.powi(k) < r {
        k -= 1;
    }
    k
}

fn check_delta(kappa: f64, cfg: &DyadicConfig) -> Result<()> {
    let d = cfg.delta;
    let ok = match cfg.mode {
        DyadicMode::Strict => d > 0.0 && 96.0 * kappa.powi(6) * d <= 1.0,
        DyadicMode::Relaxed => d > 0.0 && d <= 0.5,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::DeltaOutOfRange { delta: d, mode: cfg.mode.name() })
    }
}

fn system_rng(seed: u64, t: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (t as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Builds adjacent systems until every in-range ball of `family` lies in a
/// cube one level coarser than its radius, in some system.
pub fn build_adjacent_systems(space: &FiniteSpace, cfg: &DyadicConfig, family: &BallFamily) -> Result<AdjacentSystems> {
    check_delta(space.kappa(), cfg)?;
    let n = space.len();
    let delta = cfg.delta;
    if n == 1 {
        let level = net::partition_from_ancestors(space, &[0]);
        let mut levels = vec![level.clone(), level.clone(), level];
        for l in 1..3 {
            let (c, f) = levels.split_at_mut(l);
            net::link_parents(&c[l - 1], &mut f[0]);
        }
        let mut sys = AdjacentSystems {
            delta,
            mode: cfg.mode,
            kappa: space.kappa(),
            k_min: 0,
            k_max: 2,
            systems: vec![levels],
            s_const: 1.0,
            n,
            total_mass: space.total_mass(),
            containment_checked: 0,
        };
        sys.compute_gdps();
        sys.s_const = sys.compute_s();
        return Ok(sys);
    }

    // Levels: k_top has δ^k > diameter (one net point); k_max is the first
    // level with δ^k < resolution (all cubes are singletons).
    let diam = space.diameter();
    let mut k_top = level_of_radius(delta, diam);
    while delta.powi(k_top) <= diam {
        k_top -= 1;
    }
    let mut k_max = level_of_radius(delta, space.resolution());
    while delta.powi(k_max) >= space.resolution() {
        k_max += 1;
    }

    let in_range: Vec<(usize, i32)> = family
        .balls
        .iter()
        .enumerate()
        .filter_map(|(i, b)| {
            let need = level_of_radius(delta, b.radius) - 1;
            (need > k_top && need < k_max).then_some((i, need))
        })
        .collect();

    let build = |prio: &[usize]| net::build_levels(space, delta, k_top, k_max, prio);
    let contained = |levels: &[Level], ball: &Ball, need: i32| -> bool {
        let lvl = &levels[(need - k_top) as usize];
        let first = lvl.cube_of[ball.members.iter().next().unwrap()];
        ball.members.iter().all(|p| lvl.cube_of[p] == first)
    };

    let mut systems: Vec<Vec<Level>> = Vec::new();
    let mut pending: Vec<(usize, i32)> = in_range.clone();
    let mut rng = system_rng(cfg.seed, 0);
    let mut prio: Vec<usize> = (0..n).collect();
    prio.shuffle(&mut rng);
    loop {
        let levels = build(&prio);
        pending = pending
            .into_par_iter()
            .filter(|&(i, need)| !contained(&levels, &family.balls[i], need))
            .collect();
        systems.push(levels);
        if pending.is_empty() {
            break;
        }
        if systems.len() >= MAX_SYSTEMS {
            let (i, _) = pending[0];
            return Err(Error::ContainmentUnsatisfiable {
                systems: systems.len(),
                center: family.balls[i].center,
                radius: family.balls[i].radius,
            });
        }
        // Promote centres of uncontained balls, coarsest required level first.
        let mut rng = system_rng(cfg.seed, systems.len());
        let mut wanted: Vec<(i32, usize)> = pending.iter().map(|&(i, need)| (need, family.balls[i].center)).collect();
        wanted.shuffle(&mut rng);
        wanted.sort_by_key(|&(need, _)| need);
        let mut seen = vec![false; n];
        prio.clear();
        for &(_, c) in &wanted {
            if !seen[c] {
                seen[c] = true;
                prio.push(c);
            }
        }
        let mut rest: Vec<usize> = (0..n).filter(|&p| !seen[p]).collect();
        rest.shuffle(&mut rng);
        prio.extend(rest);
    }

    // Two all-of-X levels above the first level with a proper cube.
    let k_proper = (k_top..=k_max)
        .find(|&k| systems.iter().any(|s| s[(k - k_top) as usize].cubes.len() > 1))
        .unwrap_or(k_max);
    let k_min = k_proper - 2;
    for levels in systems.iter_mut() {
        let top = levels[0].clone();
        let mut lead: Vec<Level> = Vec::new();
        let mut k = k_top;
        while k > k_min {
            let mut l = top.clone();
            for c in l.cubes.iter_mut() {
                c.parent = u32::MAX;
                c.canonical = true;
            }
            lead.push(l);
            k -= 1;
        }
        let skip = (k_min - k_top).max(0) as usize;
        let mut all: Vec<Level> = lead;
        all.extend(levels.drain(..).skip(skip));
        for l in 1..all.len() {
            let (c, f) = all.split_at_mut(l);
            net::link_parents(&c[l - 1], &mut f[0]);
        }
        all[0].cubes.iter_mut().for_each(|c| {
            c.parent = u32::MAX;
            c.canonical = true;
        });
        *levels = all;
    }

    let mut sys = AdjacentSystems {
        delta,
        mode: cfg.mode,
        kappa: space.kappa(),
        k_min,
        k_max,
        systems,
        s_const: 1.0,
        n,
        total_mass: space.total_mass(),
        containment_checked: in_range.len(),
    };
    sys.compute_gdps();
    sys.s_const = sys.compute_s();
    Ok(sys)
}

impl AdjacentSystems {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mode(&self) -> DyadicMode {
        self.mode
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Number of systems K.
    pub fn k(&self) -> usize {
        self.systems.len()
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_max
    }

    /// S: μ(Q₀*) ≤ S μ(Q) for every working cube Q₀, every gdp candidate Q₀*
    /// and every same-level cube Q meeting Q₀.
    pub fn s_const(&self) -> f64 {
        self.s_const
    }

    pub fn point_count(&self) -> usize {
        self.n
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Number of family balls the construction loop had to contain.
    pub fn containment_checked(&self) -> usize {
        self.containment_checked
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<i32> {
        self.k_min..=self.k_max
    }

    /// Levels whose cubes have a gdp.
    pub fn working_levels(&self) -> std::ops::RangeInclusive<i32> {
        (self.k_min + 2)..=self.k_max
    }

    fn level(&self, t: usize, k: i32) -> &Level {
        &self.systems[t][(k - self.k_min) as usize]
    }

    pub fn cube_count(&self, t: usize, k: i32) -> usize {
        self.level(t, k).cubes.len()
    }

    pub fn data(&self, c: CubeRef) -> &CubeData {
        &self.level(c.system, c.level).cubes[c.index]
    }

    pub fn members(&self, c: CubeRef) -> &[u32] {
        &self.data(c).members
    }

    pub fn measure(&self, c: CubeRef) -> f64 {
        self.data(c).measure
    }

    pub fn center(&self, c: CubeRef) -> usize {
        self.data(c).center as usize
    }

    pub fn sidelength(&self, c: CubeRef) -> f64 {
        self.delta.powi(c.level)
    }

    /// The level-k cube of system t containing point p.
    pub fn cube_at(&self, t: usize, k: i32, p: usize) -> CubeRef {
        CubeRef { system: t, level: k, index: self.level(t, k).cube_of[p] as usize }
    }

    pub(crate) fn cube_of_slice(&self, t: usize, k: i32) -> &[u32] {
        &self.level(t, k).cube_of
    }

    /// The parent cube, or `None` at k_min.
    pub fn parent(&self, c: CubeRef) -> Option<CubeRef> {
        (c.level > self.k_min).then(|| CubeRef { system: c.system, level: c.level - 1, index: self.data(c).parent as usize })
    }

    pub fn is_canonical(&self, c: CubeRef) -> bool {
        self.data(c).canonical
    }

    /// All cubes of a level across systems.
    pub fn cubes_at(&self, k: i32) -> impl Iterator<Item = CubeRef> + '_ {
        (0..self.k()).flat_map(move |t| (0..self.cube_count(t, k)).map(move |index| CubeRef { system: t, level: k, index }))
    }

    /// Every cube at a working level.
    pub fn working_cubes(&self) -> Vec<CubeRef> {
        self.working_levels().flat_map(|k| self.cubes_at(k).collect::<Vec<_>>()).collect()
    }

    /// Same-level cubes (any system) meeting `c`, including `c`.
    pub fn neighbors(&self, c: CubeRef) -> Vec<CubeRef> {
        let mut out = Vec::new();
        for t in 0..self.k() {
            let cube_of = self.cube_of_slice(t, c.level);
            let mut ids: Vec<u32> = self.members(c).iter().map(|&p| cube_of[p as usize]).collect();
            ids.sort_unstable();
            ids.dedup();
            out.extend(ids.into_iter().map(|index| CubeRef { system: t, level: c.level, index: index as usize }));
        }
        out
    }

    fn compute_gdps(&mut self) {
        let k_lo = self.k_min + 2;
        for k in self.working_levels() {
            let masks: Vec<Vec<u64>> = (0..self.k())
                .map(|t| {
                    (0..self.cube_count(t, k))
                        .into_par_iter()
                        .map(|index| self.candidate_mask(CubeRef { system: t, level: k, index }))
                        .collect()
                })
                .collect();
            for (t, m) in masks.into_iter().enumerate() {
                self.systems[t][(k - self.k_min) as usize].gdp_mask = m;
            }
        }
        debug_assert!(k_lo >= self.k_min);
    }

    fn candidate_mask(&self, c: CubeRef) -> u64 {
        let nbrs = self.neighbors(c);
        let mut mask = 0u64;
        for t in 0..self.k() {
            let up = self.cube_of_slice(t, c.level - 2);
            let id = up[self.members(c)[0] as usize];
            let ok = nbrs.iter().all(|&q| self.members(q).iter().all(|&p| up[p as usize] == id));
            if ok {
                mask |= 1 << t;
            }
        }
        mask
    }

    /// All valid gdps of `c`, ordered by system.
    pub fn gdp_candidates(&self, c: CubeRef) -> Result<Vec<CubeRef>> {
        if c.level - 2 < self.k_min {
            return Err(Error::LevelUnderflow { level: c.level, depth: 2, k_min: self.k_min });
        }
        let mask = self.level(c.system, c.level).gdp_mask[c.index];
        let first = self.members(c)[0] as usize;
        let out: Vec<CubeRef> = (0..self.k()).filter(|t| mask >> t & 1 == 1).map(|t| self.cube_at(t, c.level - 2, first)).collect();
        if out.is_empty() {
            return Err(Error::NoGdp { system: c.system, level: c.level, index: c.index });
        }
        Ok(out)
    }

    /// The measure-minimal gdp, ties by (system, index).
    pub fn gdp(&self, c: CubeRef) -> Result<CubeRef> {
        let cands = self.gdp_candidates(c)?;
        Ok(cands.into_iter().min_by(|a, b| self.measure(*a).total_cmp(&self.measure(*b)).then(a.cmp(b))).unwrap())
    }

    /// gdp(gdp(c)), four levels up.
    pub fn gdp2(&self, c: CubeRef) -> Result<CubeRef> {
        if c.level - 4 < self.k_min {
            return Err(Error::LevelUnderflow { level: c.level, depth: 4, k_min: self.k_min });
        }
        self.gdp(self.gdp(c)?)
    }

    fn compute_s(&self) -> f64 {
        self.working_cubes()
            .par_iter()
            .map(|&c| {
                let Ok(cands) = self.gdp_candidates(c) else { return 1.0 };
                let big = cands.iter().map(|&q| self.measure(q)).fold(0.0, f64::max);
                let small = self.neighbors(c).iter().map(|&q| self.measure(q)).fold(f64::INFINITY, f64::min);
                big / small
            })
            .reduce(|| 1.0, f64::max)
    }

    /// Q_B: the level-(k−1) cube containing the ball, δ^{k+1} < r ≤ δ^k;
    /// smallest system first.
    pub fn containing_cube(&self, ball: &Ball) -> Result<CubeRef> {
        let need = level_of_radius(self.delta, ball.radius) - 1;
        if need < self.k_min || need >= self.k_max {
            return Err(Error::RadiusOutOfRange { radius: ball.radius });
        }
        let first = ball.members.iter().next().expect("balls contain their centre");
        for t in 0..self.k() {
            let cube_of = self.cube_of_slice(t, need);
            let id = cube_of[first];
            if ball.members.iter().all(|p| cube_of[p] == id) {
                return Ok(CubeRef { system: t, level: need, index: id as usize });
            }
        }
        Err(Error::NoContainingCube { center: ball.center, radius: ball.radius })
    }

    /// Dump lines `t k alpha center sidelength member_count member_ids...`.
    pub fn dump<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        for t in 0..self.k() {
            for k in self.levels() {
                for (alpha, c) in self.level(t, k).cubes.iter().enumerate() {
                    write!(out, "{} {} {} {} {:.16e} {}", t + 1, k, alpha, c.center, self.delta.powi(k), c.members.len())?;
                    for m in c.members.iter() {
                        write!(out, " {m}")?;
                    }
                    writeln!(out)?;
                }
            }
        }
        Ok(())
    }
}
