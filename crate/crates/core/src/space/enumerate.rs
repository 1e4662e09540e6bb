use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Ball, FiniteSpace, Region};
use crate::error::{Error, Result};

/// `all` enumeration is refused above this many points.
pub const ALL_BALLS_POINT_CAP: usize = 5000;

/// How a ball family was produced. Every constant report carries one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilySpec {
    /// Every set-distinct ball of the space.
    All,
    /// `count` random (center, radius) pairs with log-uniform radii.
    Sampled { count: usize, seed: u64 },
    /// The comb's critical balls: squares, U- and V-centred balls, balls meeting A.
    Critical,
    /// Anything else, e.g. a filtered family.
    Custom(String),
}

impl FamilySpec {
    pub fn label(&self) -> String {
        match self {
            FamilySpec::All => "all".into(),
            FamilySpec::Sampled { count, seed } => format!("sampled({count};seed={seed})"),
            FamilySpec::Critical => "critical".into(),
            FamilySpec::Custom(s) => s.clone(),
        }
    }

    /// Parses `all`, `critical`, `sampled:<count>` or `sampled:<count>:<seed>`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["all"] => Ok(FamilySpec::All),
            ["critical"] => Ok(FamilySpec::Critical),
            ["sampled", k] => Ok(FamilySpec::Sampled { count: parse_num(k)?, seed: 0 }),
            ["sampled", k, seed] => Ok(FamilySpec::Sampled { count: parse_num(k)?, seed: parse_num(seed)? as u64 }),
            _ => Err(Error::InvalidParameter(format!("unknown ball family `{s}`"))),
        }
    }
}

fn parse_num(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::InvalidParameter(format!("`{s}` is not a count")))
}

/// Case label of a critical comb ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalCase {
    /// Q_j = B((10j+1, 1), 1) = W_j.
    Square,
    /// Centred on U_j with r ≤ u/2, hence disjoint from A.
    UCentered,
    /// Centred on V_j and disjoint from A.
    VCentered,
    /// Meets A.
    AMeeting,
    /// Disjoint from A but outside the cases above.
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CriticalTag {
    pub tooth: usize,
    pub case: CriticalCase,
}

/// A list of balls together with the descriptor of how it was produced.
#[derive(Debug, Clone)]
pub struct BallFamily {
    pub spec: FamilySpec,
    pub balls: Vec<Ball>,
    /// One tag per ball for `Critical` families, empty otherwise.
    pub tags: Vec<CriticalTag>,
}

impl BallFamily {
    pub fn custom(name: impl Into<String>, balls: Vec<Ball>) -> Self {
        BallFamily { spec: FamilySpec::Custom(name.into()), balls, tags: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    /// True when the family is every ball of the space.
    pub fn exhaustive(&self) -> bool {
        self.spec == FamilySpec::All
    }

    pub fn label(&self) -> String {
        self.spec.label()
    }

    /// Keeps the balls whose index satisfies `keep`; tags follow.
    pub fn select(&self, label: &str, keep: impl Fn(usize) -> bool) -> BallFamily {
        let idx: Vec<usize> = (0..self.balls.len()).filter(|&i| keep(i)).collect();
        BallFamily {
            spec: FamilySpec::Custom(format!("{}|{}", self.spec.label(), label)),
            balls: idx.iter().map(|&i| self.balls[i].clone()).collect(),
            tags: if self.tags.is_empty() { Vec::new() } else { idx.iter().map(|&i| self.tags[i]).collect() },
        }
    }

    /// Balls whose σ-dilate stays at distance ≥ `margin` from the grid ends.
    /// Other spaces are returned unchanged.
    pub fn interior(&self, space: &FiniteSpace, sigma: f64) -> BallFamily {
        let Some((a, h)) = space.grid() else { return self.clone() };
        let b = a + space.len() as f64 * h;
        let keep = |i: usize| {
            let ball = &self.balls[i];
            let x = space.coords(ball.center)[0];
            let r = sigma * ball.radius;
            x - r >= a - 0.5 * h && x + r <= b - 0.5 * h
        };
        let mut f = self.select(&format!("interior(sigma={sigma})"), keep);
        if self.spec == FamilySpec::All {
            f.spec = FamilySpec::Custom(format!("all|interior(sigma={sigma})"));
        }
        f
    }
}

/// Enumerates a ball family over the space.
pub fn enumerate_balls(space: &FiniteSpace, spec: &FamilySpec) -> Result<BallFamily> {
    let balls = match spec {
        FamilySpec::All => {
            if space.len() > ALL_BALLS_POINT_CAP {
                return Err(Error::FamilyTooLarge { points: space.len(), cap: ALL_BALLS_POINT_CAP });
            }
            if space.grid().is_some() {
                all_grid(space)
            } else {
                all_general(space)
            }
        }
        FamilySpec::Sampled { count, seed } => sampled(space, *count, *seed),
        FamilySpec::Critical => return critical(space),
        FamilySpec::Custom(name) => {
            return Err(Error::InvalidParameter(format!("custom family `{name}` cannot be enumerated")))
        }
    };
    Ok(BallFamily { spec: spec.clone(), balls, tags: Vec::new() })
}

fn past_max(space: &FiniteSpace, d_max: f64) -> f64 {
    if space.len() == 1 {
        1.0
    } else {
        d_max + 0.5 * space.resolution()
    }
}

fn all_grid(space: &FiniteSpace) -> Vec<Ball> {
    let n = space.len();
    let (_, h) = space.grid().unwrap();
    // Interval [lo, hi] ↦ smallest radius producing it; radius (k + ½)h at centre c.
    let mut best: HashMap<(u32, u32), (u32, u32)> = HashMap::new();
    for c in 0..n {
        let kmax = c.max(n - 1 - c);
        for k in 0..=kmax {
            let lo = c.saturating_sub(k) as u32;
            let hi = (c + k).min(n - 1) as u32;
            best.entry((lo, hi))
                .and_modify(|e| {
                    if (k as u32, c as u32) < *e {
                        *e = (k as u32, c as u32);
                    }
                })
                .or_insert((k as u32, c as u32));
        }
    }
    let mut keys: Vec<((u32, u32), (u32, u32))> = best.into_iter().collect();
    keys.sort_unstable_by_key(|&((lo, hi), (_, c))| (c, hi - lo, lo));
    keys.into_iter()
        .map(|((lo, hi), (k, c))| {
            let members = super::Members::from_range(lo as usize, hi as usize + 1);
            let measure = space.measure(&members);
            Ball { center: c as usize, radius: (k as f64 + 0.5) * h, members, measure }
        })
        .collect()
}

fn zobrist_keys(n: usize) -> Vec<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ba11);
    (0..n).map(|_| (rng.gen(), rng.gen())).collect()
}

fn all_general(space: &FiniteSpace) -> Vec<Ball> {
    let n = space.len();
    let keys = zobrist_keys(n);
    // (hash, size) ↦ (radius, centre); smallest radius wins, then smallest centre.
    let mut best: HashMap<(u64, u64, u32), (f64, u32)> = HashMap::new();
    for chunk in (0..n).collect::<Vec<_>>().chunks(64) {
        let found: Vec<Vec<((u64, u64, u32), f64)>> = chunk
            .par_iter()
            .map(|&c| {
                let mut order: Vec<(f64, usize)> = (0..n).map(|j| (space.dist(c, j), j)).collect();
                order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut out = Vec::new();
                let (mut h1, mut h2) = (0u64, 0u64);
                let mut i = 0;
                while i < n {
                    let d = order[i].0;
                    while i < n && order[i].0 == d {
                        h1 ^= keys[order[i].1].0;
                        h2 ^= keys[order[i].1].1;
                        i += 1;
                    }
                    let r = if i < n { 0.5 * (d + order[i].0) } else { past_max(space, d) };
                    out.push(((h1, h2, i as u32), r));
                }
                out
            })
            .collect();
        for (&c, list) in chunk.iter().zip(found) {
            for (key, r) in list {
                best.entry(key)
                    .and_modify(|e| {
                        if r < e.0 {
                            *e = (r, c as u32);
                        }
                    })
                    .or_insert((r, c as u32));
            }
        }
    }
    let mut reps: Vec<(f64, u32)> = best.into_values().collect();
    reps.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.total_cmp(&b.0)));
    reps.into_par_iter().map(|(r, c)| space.ball(c as usize, r)).collect()
}

fn sampled(space: &FiniteSpace, count: usize, seed: u64) -> Vec<Ball> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = space.len();
    let (lo, hi) = if n == 1 {
        (1.0f64, 1.0f64)
    } else {
        (0.5 * space.resolution(), 2.0 * space.diameter())
    };
    let pairs: Vec<(usize, f64)> = (0..count)
        .map(|_| {
            let c = rng.gen_range(0..n);
            let t: f64 = rng.gen();
            (c, (lo.ln() + t * (hi.ln() - lo.ln())).exp())
        })
        .collect();
    pairs.into_par_iter().map(|(c, r)| space.ball(c, r)).collect()
}

fn critical(space: &FiniteSpace) -> Result<BallFamily> {
    let g = space
        .comb()
        .ok_or_else(|| Error::Unsupported("the critical ball family exists only on comb spaces".into()))?;
    let n = g.params().pts_per_unit as f64;
    let mut raw: Vec<(usize, f64, usize)> = Vec::new();
    for j in 0..g.teeth() {
        let x0 = 10.0 * j as f64;
        raw.push((g.nearest_v(j, 1.0), 1.0, j));

        let mut u_targets: Vec<f64> = Vec::new();
        for i in 0..=6 {
            u_targets.push((-(i as f64)).exp2());
            u_targets.push(0.75 * (-(i as f64)).exp2());
        }
        for i in (8..=24).step_by(2) {
            u_targets.push((-(i as f64)).exp2());
        }
        let mut u_centers: Vec<usize> = u_targets.iter().map(|&u| g.nearest_u(j, u)).collect();
        u_centers.dedup();
        for &c in &u_centers {
            let u = g.param(c);
            for f in [0.5, 0.25, 0.125] {
                raw.push((c, f * u, j));
            }
        }
        for v in [1.0, 0.875, 0.75, 0.625] {
            let c = g.nearest_v(j, v);
            let v = g.param(c);
            for r in [0.125, 0.25, v] {
                raw.push((c, r, j));
            }
        }
        for off in [-1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 2.0, 5.0] {
            let c = g.nearest_a(x0 + off);
            for r in [1.0 / n, 4.0 / n, 0.125, 0.25, 0.5, 1.0, 2.0] {
                raw.push((c, r, j));
            }
        }
        for u in [0.5, 0.25, 0.125] {
            let c = g.nearest_u(j, u);
            let u = g.param(c);
            raw.push((c, u, j));
            raw.push((c, 2.0 * u, j));
        }
    }
    raw.sort_by(|a, b| a.2.cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.total_cmp(&b.1)));
    raw.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    let balls: Vec<Ball> = raw.par_iter().map(|&(c, r, _)| space.ball(c, r)).collect();
    let tags = raw
        .iter()
        .zip(&balls)
        .map(|(&(c, r, j), ball)| {
            let meets_a = ball.members.iter().any(|i| g.region(i) == Region::A);
            let case = if meets_a {
                CriticalCase::AMeeting
            } else {
                match g.region(c) {
                    Region::U(_) if r <= 0.5 * g.param(c) => CriticalCase::UCentered,
                    Region::V(_) if r == 1.0 && g.param(c) == 1.0 => CriticalCase::Square,
                    Region::V(_) => CriticalCase::VCentered,
                    _ => CriticalCase::Other,
                }
            };
            CriticalTag { tooth: j, case }
        })
        .collect();
    Ok(BallFamily { spec: FamilySpec::Critical, balls, tags })
}
