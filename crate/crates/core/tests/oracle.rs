mod support;

use homog::maximal::{maximal, MaximalKind};
use homog::space::{enumerate_balls, FamilySpec, FiniteSpace};
use homog::weights::{a_infty_sigma, rh_sigma};
use homog::Field;
use proptest::prelude::*;
use support::oracle;

const REL: f64 = 1e-12;

fn compare(space: &FiniteSpace, w: &[f64]) -> Result<(), TestCaseError> {
    let field = Field::new(w.to_vec());
    let fam = enumerate_balls(space, &FamilySpec::All).unwrap();
    let balls = oracle::all_balls(space);
    prop_assert_eq!(fam.len(), balls.len());

    let m = maximal(space, &fam, &field, MaximalKind::Noncentered);
    let want = oracle::noncentered(space, &balls, w);
    for (x, (a, b)) in m.field.values.iter().zip(&want).enumerate() {
        prop_assert!(oracle::rel_close(*a, *b, REL), "M at {}: {} vs {}", x, a, b);
    }
    let mc = maximal(space, &fam, &field, MaximalKind::Centered);
    let want = oracle::centered(space, w);
    for (x, (a, b)) in mc.field.values.iter().zip(&want).enumerate() {
        prop_assert!(oracle::rel_close(*a, *b, REL), "M_c at {}: {} vs {}", x, a, b);
    }
    for sigma in [1.0, 1.5, 3.0] {
        let got = a_infty_sigma(space, &fam, &field, sigma).unwrap().value;
        let want = oracle::a_infty_sigma(space, w, sigma);
        prop_assert!(oracle::rel_close(got, want, REL), "ainf σ={}: {} vs {}", sigma, got, want);
        for q in [1.5, 2.0, 4.0] {
            let got = rh_sigma(space, &fam, &field, q, sigma).unwrap().value;
            let want = oracle::rh_sigma(space, w, q, sigma);
            prop_assert!(oracle::rel_close(got, want, REL), "rh q={} σ={}: {} vs {}", q, sigma, got, want);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_spaces_match_brute_force(seed in any::<u64>()) {
        let space = oracle::random_space(seed, 12);
        prop_assert!(oracle::measured_kappa(&space) <= 2.0 + 1e-12);
        let w = oracle::random_weight(seed, space.len());
        compare(&space, &w)?;
    }
}

#[test]
fn three_point_line() {
    let space = homog::space::FiniteSpace::from_coords(
        homog::space::NormKind::L2,
        vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
        vec![1.0; 3],
    )
    .unwrap();
    let balls = oracle::all_balls(&space);
    assert_eq!(balls.len(), 6);
    let m = oracle::noncentered(&space, &balls, &[1.0, 2.0, 4.0]);
    assert!((m[0] - 7.0 / 3.0).abs() < 1e-15);
}

#[test]
fn single_point() {
    let space = homog::space::FiniteSpace::from_coords(homog::space::NormKind::L2, vec![[0.0, 0.0]], vec![2.0]).unwrap();
    compare(&space, &[3.0]).unwrap();
}
