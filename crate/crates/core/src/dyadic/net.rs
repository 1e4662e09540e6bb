//! Nested nets and the cube partitions they induce.
//!
//! Nets are built top-down: N_k = N_{k−1} ∪ (greedy δ^k-separated additions in
//! priority order), so every N_k is maximal in X and N_{k−1} ⊆ N_k. Each net
//! point's parent is its nearest point of the coarser net, and a cube at
//! level k is the set of points whose ancestor chain passes through a given
//! level-k net point.
//!
//! Candidate searches use "relatives": net points within cδ^k of each other,
//! with c = (κ+κ²)/(1−κ²δ). A δ^k-neighbour of p has a parent among the
//! children of the relatives of p's parent, so every level costs O(n) distance
//! evaluations times a constant depending on the doubling of the space.

use super::{CubeData, Level};
use crate::space::FiniteSpace;

const NONE: u32 = u32::MAX;

/// Builds the partitions for levels `k_top..=k_max` (k_top holds a single net point).
pub(crate) fn build_levels(space: &FiniteSpace, delta: f64, k_top: i32, k_max: i32, prio: &[usize]) -> Vec<Level> {
    let n = space.len();
    let kappa = space.kappa();
    let k2d = kappa * kappa * delta;
    let brute = k2d >= 1.0 - 1e-9;
    let c_rel = if brute { f64::INFINITY } else { (kappa + kappa * kappa) / (1.0 - k2d) * (1.0 + 1e-9) };

    let root = prio[0];
    // Current level state.
    let mut net: Vec<u32> = vec![root as u32];
    let mut in_net = vec![false; n];
    in_net[root] = true;
    let mut anchor: Vec<u32> = vec![root as u32; n];
    // rel[s] for s in net (indexed by point).
    let mut rel: Vec<Vec<u32>> = vec![Vec::new(); n];
    rel[root] = vec![root as u32];
    // parents[l][s] = parent at level k_top + l of net point s of level k_top + l + 1.
    let mut parents: Vec<Vec<u32>> = Vec::new();

    for k in (k_top + 1)..=k_max {
        let r = delta.powi(k);
        let prev_anchor = anchor.clone();
        let prev_net = net.clone();
        // children[b] = level-k net points whose level-(k−1) anchor is b.
        let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &b in &prev_net {
            children[b as usize].push(b);
        }
        let candidates = |a: usize, children: &Vec<Vec<u32>>, out: &mut Vec<u32>| {
            out.clear();
            if brute {
                for &b in &prev_net {
                    out.extend_from_slice(&children[b as usize]);
                }
            } else {
                for &b in &rel[a] {
                    out.extend_from_slice(&children[b as usize]);
                }
            }
        };
        let mut buf = Vec::new();
        for &p in prio {
            if in_net[p] {
                continue;
            }
            let a = prev_anchor[p] as usize;
            candidates(a, &children, &mut buf);
            if buf.iter().all(|&s| space.dist(p, s as usize) >= r) {
                in_net[p] = true;
                children[a].push(p as u32);
            }
        }
        net = (0..n as u32).filter(|&p| in_net[p as usize]).collect();

        // Nearest level-k net point of every point, ties by smaller index.
        let mut new_anchor = vec![NONE; n];
        for p in 0..n {
            if in_net[p] {
                new_anchor[p] = p as u32;
                continue;
            }
            candidates(prev_anchor[p] as usize, &children, &mut buf);
            let mut best = (f64::INFINITY, NONE);
            for &s in &buf {
                let d = space.dist(p, s as usize);
                if d < best.0 || (d == best.0 && s < best.1) {
                    best = (d, s);
                }
            }
            new_anchor[p] = best.1;
        }

        let mut new_rel: Vec<Vec<u32>> = vec![Vec::new(); n];
        if !brute {
            let lim = c_rel * r;
            for &s in &net {
                candidates(prev_anchor[s as usize] as usize, &children, &mut buf);
                new_rel[s as usize] = buf.iter().copied().filter(|&t| space.dist(s as usize, t as usize) < lim).collect();
            }
        }
        let mut parent = vec![NONE; n];
        for &s in &net {
            parent[s as usize] = prev_anchor[s as usize];
        }
        parents.push(parent);
        anchor = new_anchor;
        rel = new_rel;
    }

    // Ancestor chains from the finest level up.
    let levels_count = (k_max - k_top + 1) as usize;
    let mut anc: Vec<u32> = (0..n as u32).map(|p| if in_net[p as usize] { p } else { anchor[p as usize] }).collect();
    let mut per_level_anc: Vec<Vec<u32>> = vec![Vec::new(); levels_count];
    per_level_anc[levels_count - 1] = anc.clone();
    for l in (0..levels_count - 1).rev() {
        let parent = &parents[l];
        for a in anc.iter_mut() {
            *a = parent[*a as usize];
        }
        per_level_anc[l] = anc.clone();
    }

    let mut levels: Vec<Level> = Vec::with_capacity(levels_count);
    for l in 0..levels_count {
        levels.push(partition_from_ancestors(space, &per_level_anc[l]));
    }
    for l in 1..levels_count {
        let (coarse, fine) = levels.split_at_mut(l);
        link_parents(&coarse[l - 1], &mut fine[0]);
    }
    levels
}

/// Groups points by ancestor; cubes are indexed by increasing centre.
pub(crate) fn partition_from_ancestors(space: &FiniteSpace, anc: &[u32]) -> Level {
    let n = anc.len();
    let mut centers: Vec<u32> = anc.to_vec();
    centers.sort_unstable();
    centers.dedup();
    let mut slot = vec![NONE; n];
    for (i, &c) in centers.iter().enumerate() {
        slot[c as usize] = i as u32;
    }
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); centers.len()];
    let mut cube_of = vec![0u32; n];
    for p in 0..n {
        let id = slot[anc[p] as usize];
        cube_of[p] = id;
        members[id as usize].push(p as u32);
    }
    let cubes = centers
        .iter()
        .zip(members)
        .map(|(&c, m)| {
            let measure = m.iter().map(|&p| space.mass(p as usize)).sum();
            CubeData { center: c, measure, members: m.into_boxed_slice(), parent: NONE, canonical: true }
        })
        .collect();
    Level { cube_of, cubes, gdp_mask: Vec::new() }
}

pub(crate) fn link_parents(coarse: &Level, fine: &mut Level) {
    for cube in fine.cubes.iter_mut() {
        let p = coarse.cube_of[cube.members[0] as usize];
        cube.parent = p;
        cube.canonical = coarse.cubes[p as usize].members.len() != cube.members.len();
    }
}
