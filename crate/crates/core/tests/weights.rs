mod support;

use homog::dyadic::{build_adjacent_systems, default_family, AdjacentSystems, DyadicConfig, DyadicMode};
use homog::space::{enumerate_balls, make_grid_interval, measure_doubling, FamilySpec, FiniteSpace};
use homog::weights::{
    a_infty_dyadic, a_infty_dyadic_terms, a_infty_sigma, a_infty_sigma_multi, a_infty_sigma_ratios, make_weight, rh_dyadic, rh_sigma,
    script_a_infty, ScriptMode, WeightSpec, Witness,
};
use homog::Field;
use proptest::prelude::*;
use support::oracle;

fn systems(space: &FiniteSpace) -> AdjacentSystems {
    let fam = default_family(space).unwrap();
    build_adjacent_systems(space, &DyadicConfig { delta: 0.125, mode: DyadicMode::Relaxed, seed: 1 }, &fam).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    oracle::rel_close(a, b, 1e-12)
}

#[test]
fn constant_weight_constants() {
    let s = make_grid_interval(0.0, 4.0, 64).unwrap();
    let fam = enumerate_balls(&s, &FamilySpec::All).unwrap();
    let w = make_weight(&s, &WeightSpec::Constant { c: 3.0 }).unwrap().field;
    assert!(close(a_infty_sigma(&s, &fam, &w, 1.0).unwrap().value, 1.0));
    for q in [1.5, 2.0, 5.0] {
        for sigma in [1.0, 2.0] {
            assert!(close(rh_sigma(&s, &fam, &w, q, sigma).unwrap().value, 1.0));
        }
    }
    let sys = systems(&s);
    assert!(close(rh_dyadic(&sys, &s, &w, 2.0).unwrap().value, 1.0));
    assert!(a_infty_dyadic(&sys, &s, &w).unwrap().value.is_finite());
}

#[test]
fn witnesses_reproduce_their_values() {
    let s = make_grid_interval(0.0, 4.0, 96).unwrap();
    let fam = enumerate_balls(&s, &FamilySpec::All).unwrap();
    let w = make_weight(&s, &WeightSpec::Exponential).unwrap().field;
    let r = a_infty_sigma(&s, &fam, &w, 2.0).unwrap();
    let Witness::Ball { index, center, radius } = r.witness else { panic!("no witness") };
    assert_eq!((fam.balls[index].center, fam.balls[index].radius), (center, radius));
    let single = homog::space::BallFamily::custom("one", vec![s.ball(center, radius)]);
    assert!(close(a_infty_sigma(&s, &single, &w, 2.0).unwrap().value, r.value));

    let sys = systems(&s);
    let r = rh_dyadic(&sys, &s, &w, 2.0).unwrap();
    let Witness::Cube(c) = r.witness else { panic!("no witness") };
    let lq: f64 = sys.members(c).iter().map(|&x| w.values[x as usize].powi(2) * s.mass(x as usize)).sum::<f64>() / sys.measure(c);
    let best = sys
        .gdp_candidates(c)
        .unwrap()
        .iter()
        .map(|&p| sys.members(p).iter().map(|&x| w.values[x as usize] * s.mass(x as usize)).sum::<f64>() / sys.measure(p))
        .fold(0.0, f64::max);
    assert!(close(r.value, lq.sqrt() / best));
}

#[test]
fn multi_sigma_matches_single() {
    let s = make_grid_interval(-2.0, 2.0, 80).unwrap();
    let fam = enumerate_balls(&s, &FamilySpec::All).unwrap();
    let w = make_weight(&s, &WeightSpec::Exponential).unwrap().field;
    let sigmas = [1.0, 1.5, 3.0];
    for (r, &sigma) in a_infty_sigma_multi(&s, &fam, &w, &sigmas).unwrap().iter().zip(&sigmas) {
        assert!(close(r.value, a_infty_sigma(&s, &fam, &w, sigma).unwrap().value));
    }
}

#[test]
fn dyadic_ainf_dominates_the_mass_ratio() {
    let s = make_grid_interval(0.0, 4.0, 128).unwrap();
    let w = make_weight(&s, &WeightSpec::parse("lognormal:5:1.5").unwrap()).unwrap().field;
    let sys = systems(&s);
    let wq = |c| sys.members(c).iter().map(|&x| w.values[x as usize] * s.mass(x as usize)).sum::<f64>();
    for t in a_infty_dyadic_terms(&sys, &s, &w) {
        let inf = sys.gdp_candidates(t.cube).unwrap().iter().map(|&p| wq(t.cube) / wq(p)).fold(f64::INFINITY, f64::min);
        assert!(t.value() >= inf * (1.0 - 1e-12), "{:?}", t.cube);
    }
}

#[test]
fn rh_dyadic_finite_gives_finite_dyadic_ainf_of_the_power() {
    let s = make_grid_interval(0.0, 4.0, 128).unwrap();
    let sys = systems(&s);
    for spec in ["exp", "lognormal:1", "uniform:2"] {
        let w = make_weight(&s, &WeightSpec::parse(spec).unwrap()).unwrap().field;
        let q = 2.0;
        assert!(rh_dyadic(&sys, &s, &w, q).unwrap().value.is_finite());
        assert!(a_infty_dyadic(&sys, &s, &w.powf(q)).unwrap().value.is_finite());
    }
}

#[test]
fn script_full_set_and_modes() {
    let s = make_grid_interval(0.0, 2.0, 16).unwrap();
    let fam = enumerate_balls(&s, &FamilySpec::All).unwrap();
    let w = make_weight(&s, &WeightSpec::Exponential).unwrap().field;
    let exact = script_a_infty(&s, &fam, &w, 2.0, 1.0, 1.5, ScriptMode::Exact).unwrap();
    let prefix = script_a_infty(&s, &fam, &w, 2.0, 1.0, 1.5, ScriptMode::Prefix).unwrap();
    assert!(prefix.worst <= exact.worst * (1.0 + 1e-12));
    // E = B alone already scores w(B)/w(σB) ≤ 1.
    let full = fam.balls.iter().map(|b| w.integral(&s, &b.members) / w.integral(&s, &s.members_within(b.center, 2.0 * b.radius, false))).fold(0.0, f64::max);
    assert!(exact.worst >= full * (1.0 - 1e-12));
    let s32 = make_grid_interval(0.0, 2.0, 32).unwrap();
    let w32 = make_weight(&s32, &WeightSpec::Exponential).unwrap().field;
    let big = homog::space::BallFamily::custom("big", vec![s32.ball(0, 100.0)]);
    assert!(script_a_infty(&s32, &big, &w32, 1.0, 1.0, 1.0, ScriptMode::Exact).is_err());
    assert!(script_a_infty(&s32, &big, &w32, 1.0, 1.0, 1.0, ScriptMode::Prefix).is_ok());
}

/// Exact-mode sup against a direct subset enumeration.
#[test]
fn script_exact_matches_subsets() {
    for seed in 0..20 {
        let s = oracle::random_space(seed, 8);
        let w = oracle::random_weight(seed, s.len());
        let field = Field::new(w.clone());
        let fam = enumerate_balls(&s, &FamilySpec::All).unwrap();
        let (sigma, c, p) = (1.5, 2.0, 2.0);
        let got = script_a_infty(&s, &fam, &field, sigma, c, p, ScriptMode::Exact).unwrap().worst;
        let mut want: f64 = f64::NEG_INFINITY;
        for b in oracle::all_balls(&s) {
            let wsig = oracle::weight(&s, &w, &(0..s.len()).filter(|&j| s.dist(b.center, j) < sigma * b.radius).collect::<Vec<_>>());
            let mb = oracle::mass(&s, &b.members);
            for mask in 1u32..(1 << b.members.len()) {
                let e: Vec<usize> = b.members.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &x)| x).collect();
                want = want.max((oracle::weight(&s, &w, &e) / wsig) / (c * (oracle::mass(&s, &e) / mb).powf(1.0 / p)));
            }
        }
        assert!(oracle::rel_close(got, want, 1e-12), "seed {seed}: {got} vs {want}");
    }
}

fn lognormal(space: &FiniteSpace, seed: u64, sigma: f64) -> Field {
    make_weight(space, &WeightSpec::parse(&format!("lognormal:{seed}:{sigma}")).unwrap()).unwrap().field
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scale_invariance(seed in 0u64..1000, n in 8usize..48, c in 1e-3f64..1e3) {
        let s = make_grid_interval(0.0, 4.0, n).unwrap();
        let fam = enumerate_balls(&s, &FamilySpec::All).unwrap();
        let w = lognormal(&s, seed, 1.0);
        let cw = w.scaled(c);
        prop_assert!(close(a_infty_sigma(&s, &fam, &w, 2.0).unwrap().value, a_infty_sigma(&s, &fam, &cw, 2.0).unwrap().value));
        prop_assert!(close(rh_sigma(&s, &fam, &w, 2.0, 1.5).unwrap().value, rh_sigma(&s, &fam, &cw, 2.0, 1.5).unwrap().value));
        let sys = systems(&s);
        prop_assert!(close(a_infty_dyadic(&sys, &s, &w).unwrap().value, a_infty_dyadic(&sys, &s, &cw).unwrap().value));
        prop_assert!(close(rh_dyadic(&sys, &s, &w, 3.0).unwrap().value, rh_dyadic(&sys, &s, &cw, 3.0).unwrap().value));
    }

    #[test]
    fn monotone_in_q_and_sigma(seed in 0u64..1000, n in 8usize..48) {
        let s = make_grid_interval(0.0, 4.0, n).unwrap();
        let fam = enumerate_balls(&s, &FamilySpec::All).unwrap();
        let w = lognormal(&s, seed, 1.5);
        for sigma in [1.0, 2.0] {
            let a = rh_sigma(&s, &fam, &w, 1.5, sigma).unwrap().value;
            let b = rh_sigma(&s, &fam, &w, 2.0, sigma).unwrap().value;
            prop_assert!(a <= b * (1.0 + 1e-12));
        }
        let r1 = a_infty_sigma_ratios(&s, &fam, &w, 1.5).unwrap();
        let r2 = a_infty_sigma_ratios(&s, &fam, &w, 3.0).unwrap();
        for (a, b) in r1.iter().zip(&r2) {
            prop_assert!(b <= &(a * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn ainf_lower_bound(seed in 0u64..1000, sigma in 1.0f64..4.0) {
        let s = oracle::random_space(seed, 12);
        let w = Field::new(oracle::random_weight(seed, s.len()));
        let fam = enumerate_balls(&s, &FamilySpec::All).unwrap();
        let n_hat = match measure_doubling(&s, None) {
            Ok(d) => d.n_hat as f64,
            Err(_) => return Ok(()),
        };
        let v = a_infty_sigma(&s, &fam, &w, sigma).unwrap().value;
        prop_assert!(v >= 1.0 / (2.0 * sigma.powf(n_hat.log2())) * (1.0 - 1e-12));
        // Balls contain their own points, so ∫_B M(1_B w) ≥ w(B); the σ = 1 constant is at least 1.
        prop_assert!(a_infty_sigma(&s, &fam, &w, 1.0).unwrap().value >= 1.0 - 1e-12);
    }
}
