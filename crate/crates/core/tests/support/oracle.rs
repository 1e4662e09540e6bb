//! Brute-force reference implementations over tiny spaces.
//!
//! Everything here works from `dist` and `mass` alone with nested loops, so it
//! shares no code with the library's enumeration, engine or painting paths.

#![allow(dead_code)]

use homog::space::{FiniteSpace, NormKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// An open ball as (centre, radius, sorted members).
#[derive(Debug, Clone)]
pub struct OBall {
    pub center: usize,
    pub radius: f64,
    pub members: Vec<usize>,
}

fn distinct_distances(space: &FiniteSpace, c: usize) -> Vec<f64> {
    let mut d: Vec<f64> = (0..space.len()).map(|j| space.dist(c, j)).collect();
    d.sort_by(f64::total_cmp);
    d.dedup();
    d
}

/// Every set-distinct ball: midpoint radii between consecutive distances plus
/// one past the maximum; the smallest radius, then the smallest centre, wins.
pub fn all_balls(space: &FiniteSpace) -> Vec<OBall> {
    let n = space.len();
    let mut out: Vec<OBall> = Vec::new();
    for c in 0..n {
        let d = distinct_distances(space, c);
        for i in 0..d.len() {
            let r = if i + 1 < d.len() {
                0.5 * (d[i] + d[i + 1])
            } else if n == 1 {
                1.0
            } else {
                d[i] + 0.5 * space.resolution()
            };
            let members: Vec<usize> = (0..n).filter(|&j| space.dist(c, j) < r).collect();
            match out.iter_mut().find(|b| b.members == members) {
                Some(b) => {
                    if r < b.radius || (r == b.radius && c < b.center) {
                        b.center = c;
                        b.radius = r;
                    }
                }
                None => out.push(OBall { center: c, radius: r, members }),
            }
        }
    }
    out
}

pub fn mass(space: &FiniteSpace, set: &[usize]) -> f64 {
    set.iter().map(|&i| space.mass(i)).sum()
}

pub fn weight(space: &FiniteSpace, w: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&i| w[i] * space.mass(i)).sum()
}

fn open(space: &FiniteSpace, c: usize, r: f64) -> Vec<usize> {
    (0..space.len()).filter(|&j| space.dist(c, j) < r).collect()
}

/// Non-centred maximal function over all balls.
pub fn noncentered(space: &FiniteSpace, balls: &[OBall], f: &[f64]) -> Vec<f64> {
    (0..space.len())
        .map(|x| {
            balls
                .iter()
                .filter(|b| b.members.contains(&x))
                .map(|b| weight(space, f, &b.members) / mass(space, &b.members))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Centred maximal function over every radius.
pub fn centered(space: &FiniteSpace, f: &[f64]) -> Vec<f64> {
    (0..space.len())
        .map(|x| {
            distinct_distances(space, x)
                .iter()
                .map(|&d| {
                    let set: Vec<usize> = (0..space.len()).filter(|&j| space.dist(x, j) <= d).collect();
                    weight(space, f, &set) / mass(space, &set)
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// ∫_B M(1_B w) dμ with M taken over all balls.
pub fn localized_integral(space: &FiniteSpace, balls: &[OBall], b: &[usize], w: &[f64]) -> f64 {
    b.iter()
        .map(|&x| {
            let m = balls
                .iter()
                .filter(|s| s.members.contains(&x))
                .map(|s| {
                    let inter: Vec<usize> = s.members.iter().copied().filter(|i| b.contains(i)).collect();
                    weight(space, w, &inter) / mass(space, &s.members)
                })
                .fold(0.0, f64::max);
            m * space.mass(x)
        })
        .sum()
}

/// sup over all balls of (1/w(σB)) ∫_B M(1_B w) dμ.
pub fn a_infty_sigma(space: &FiniteSpace, w: &[f64], sigma: f64) -> f64 {
    let balls = all_balls(space);
    balls
        .iter()
        .map(|b| localized_integral(space, &balls, &b.members, w) / weight(space, w, &open(space, b.center, sigma * b.radius)))
        .fold(0.0, f64::max)
}

/// sup over all balls of (⨍_B w^q)^{1/q} / ⨍_{σB} w.
pub fn rh_sigma(space: &FiniteSpace, w: &[f64], q: f64, sigma: f64) -> f64 {
    all_balls(space)
        .iter()
        .map(|b| {
            let wq: Vec<f64> = w.iter().map(|v| v.powf(q)).collect();
            let lq = (weight(space, &wq, &b.members) / mass(space, &b.members)).powf(1.0 / q);
            let big = open(space, b.center, sigma * b.radius);
            lq / (weight(space, w, &big) / mass(space, &big))
        })
        .fold(0.0, f64::max)
}

/// max ρ(x,z) / (ρ(x,y) + ρ(y,z)) over distinct triples, at least 1.
pub fn measured_kappa(space: &FiniteSpace) -> f64 {
    let n = space.len();
    let mut k: f64 = 1.0;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                if x != z && y != x && y != z {
                    k = k.max(space.dist(x, z) / (space.dist(x, y) + space.dist(y, z)));
                }
            }
        }
    }
    k
}

/// A random space with at most `max_n` points: snapped ℓ¹/ℓ∞ lattices (many ties)
/// or Euclidean distances raised to a power γ ∈ [1, 2] (κ ≤ 2^{γ−1}).
pub fn random_space(seed: u64, max_n: usize) -> FiniteSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_n);
    let masses: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..3.0)).collect();
    match rng.gen_range(0..3) {
        0 | 1 => {
            let kind = if rng.gen_bool(0.5) { NormKind::L1 } else { NormKind::Linf };
            let side = (n as f64).sqrt().ceil() as i32 + 2;
            let mut coords: Vec<[f64; 2]> = Vec::new();
            while coords.len() < n {
                let p = [rng.gen_range(0..side) as f64, rng.gen_range(0..side) as f64];
                if !coords.contains(&p) {
                    coords.push(p);
                }
            }
            FiniteSpace::from_coords(kind, coords, masses).unwrap()
        }
        _ => {
            let gamma: f64 = rng.gen_range(1.0..2.0);
            let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let mut lower = Vec::new();
            for i in 0..n {
                for j in 0..i {
                    let d = ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt();
                    lower.push(d.powf(gamma).max(1e-9));
                }
            }
            FiniteSpace::from_table(lower, masses, 2f64.powf(gamma - 1.0)).unwrap()
        }
    }
}

pub fn random_weight(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    (0..n).map(|_| (rng.gen_range(-2.0f64..2.0)).exp()).collect()
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

use homog::dyadic::{AdjacentSystems, CubeRef};

fn cube_weight(systems: &AdjacentSystems, space: &FiniteSpace, w: &[f64], c: CubeRef) -> f64 {
    systems.members(c).iter().map(|&x| w[x as usize] * space.mass(x as usize)).sum()
}

/// M_{Q₀}w at every point by scanning every cube of every system at levels
/// ℓ(Q₀)..=k_max that meets Q₀.
pub fn localized_maximal(systems: &AdjacentSystems, space: &FiniteSpace, w: &[f64], q0: CubeRef) -> Vec<f64> {
    let base: Vec<u32> = systems.members(q0).to_vec();
    let mut out = vec![0.0f64; space.len()];
    for t in 0..systems.k() {
        for k in q0.level..=systems.k_max() {
            for index in 0..systems.cube_count(t, k) {
                let c = CubeRef { system: t, level: k, index };
                let m = systems.members(c);
                if !m.iter().any(|p| base.binary_search(p).is_ok()) {
                    continue;
                }
                let avg = cube_weight(systems, space, w, c) / systems.measure(c);
                for &x in m {
                    out[x as usize] = out[x as usize].max(avg);
                }
            }
        }
    }
    out
}

/// Worst ratio of ⨍_{Q₀} w^{1+ε} to 2S^{1+ε}(⨍_{Q₀*} w)^{1+ε} over the working
/// cubes, with Q₀* the gdp of largest w-mass; returns (worst, cubes checked).
pub fn weak_rhi_worst(systems: &AdjacentSystems, space: &FiniteSpace, w: &[f64], eps: f64) -> (f64, usize) {
    let s = systems.s_const();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for c in systems.working_cubes() {
        let Ok(cands) = systems.gdp_candidates(c) else { continue };
        let star = cands
            .iter()
            .copied()
            .max_by(|a, b| cube_weight(systems, space, w, *a).total_cmp(&cube_weight(systems, space, w, *b)).then(b.cmp(a)))
            .unwrap();
        let lhs: f64 = systems.members(c).iter().map(|&x| w[x as usize].powf(1.0 + eps) * space.mass(x as usize)).sum::<f64>() / systems.measure(c);
        let rhs = 2.0 * s.powf(1.0 + eps) * (cube_weight(systems, space, w, star) / systems.measure(star)).powf(1.0 + eps);
        worst = worst.max(lhs / rhs);
        count += 1;
    }
    (worst, count)
}
