use homog::space::{enumerate_balls, make_grid_interval, FamilySpec, FiniteSpace, Members, NormKind};
use homog::weights::{a_infty_sigma_ratios, RestrictedMaximal};
use homog::Field;
use proptest::prelude::*;

/// Every distinct open ball as a member list, by brute force.
fn all_member_sets(space: &FiniteSpace) -> Vec<Vec<usize>> {
    let n = space.len();
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for c in 0..n {
        for j in 0..n {
            let r = space.dist(c, j);
            let set: Vec<usize> = (0..n).filter(|&k| space.dist(c, k) <= r).collect();
            if !sets.contains(&set) {
                sets.push(set);
            }
        }
    }
    sets
}

fn brute_integral(space: &FiniteSpace, sets: &[Vec<usize>], b: &[usize], w: &[f64]) -> f64 {
    let mass = |s: &[usize]| s.iter().map(|&i| space.mass(i)).sum::<f64>();
    b.iter()
        .map(|&x| {
            let m = sets
                .iter()
                .filter(|s| s.contains(&x))
                .map(|s| s.iter().filter(|i| b.contains(i)).map(|&i| w[i] * space.mass(i)).sum::<f64>() / mass(s))
                .fold(0.0, f64::max);
            m * space.mass(x)
        })
        .sum()
}

fn check(space: &FiniteSpace, w: &[f64]) -> Result<(), TestCaseError> {
    let field = Field::new(w.to_vec());
    let engine = RestrictedMaximal::new(space, &field);
    let sets = all_member_sets(space);
    let fam = enumerate_balls(space, &FamilySpec::All).unwrap();
    for b in &fam.balls {
        let members = b.members.to_vec();
        let want = brute_integral(space, &sets, &members, w);
        let got = engine.integral(b);
        prop_assert!((got - want).abs() <= 1e-12 * want, "ball {:?}: {} vs {}", members, got, want);
        let walk: f64 = members.iter().zip(engine.values(b)).map(|(&x, v)| v * space.mass(x)).sum();
        prop_assert!((walk - want).abs() <= 1e-12 * want, "walk {:?}: {} vs {}", members, walk, want);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn grid_engine_matches_brute_force(n in 2usize..16, w in prop::collection::vec(0.01f64..10.0, 16)) {
        let space = make_grid_interval(0.0, 1.0, n).unwrap();
        check(&space, &w[..n])?;
    }

    #[test]
    fn walk_matches_brute_force(
        pts in prop::collection::vec((0.0f64..4.0, 0.0f64..4.0), 1..10),
        masses in prop::collection::vec(0.1f64..3.0, 10),
        w in prop::collection::vec(0.01f64..10.0, 10),
    ) {
        let n = pts.len();
        let coords: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
        let space = FiniteSpace::from_coords(NormKind::L2, coords, masses[..n].to_vec()).unwrap();
        check(&space, &w[..n])?;
    }
}

#[test]
fn constant_weight_gives_measure_ratio() {
    let space = make_grid_interval(0.0, 1.0, 40).unwrap();
    let fam = enumerate_balls(&space, &FamilySpec::All).unwrap();
    let w = Field::constant(40, 3.0);
    let ratios = a_infty_sigma_ratios(&space, &fam, &w, 1.0).unwrap();
    assert!(ratios.iter().all(|r| (r - 1.0).abs() < 1e-12));
    let _ = Members::from_range(0, 1);
}

#[test]
fn grid_sweep_matches_walk_on_long_hulls() {
    let n = 81;
    let space = make_grid_interval(-3.0, 3.0, n).unwrap();
    let fam = enumerate_balls(&space, &FamilySpec::All).unwrap();
    let weights = [
        (0..n).map(|i| 1.0 / (i as f64 + 1.0)).collect::<Vec<_>>(),
        (0..n).map(|i| (i as f64 / 10.0).exp()).collect(),
        (0..n).map(|i| 1.0 + ((i * 37) % 11) as f64).collect(),
    ];
    for w in weights {
        let field = Field::new(w);
        let engine = RestrictedMaximal::new(&space, &field);
        for b in &fam.balls {
            let got = engine.integral(b);
            let walk: f64 = b.members.iter().zip(engine.values(b)).map(|(x, v)| v * space.mass(x)).sum();
            assert!((got - walk).abs() <= 1e-11 * walk, "{:?}: {got} vs {walk}", b.members);
        }
    }
}
