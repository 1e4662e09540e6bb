mod support;

use homog::dyadic::{build_adjacent_systems, default_family, AdjacentSystems, DyadicConfig, DyadicMode};
use homog::experiments::*;
use homog::maximal::CubeAverages;
use homog::space::{enumerate_balls, make_comb_space_with, make_grid_interval, BallFamily, CombParams, FamilySpec, FiniteSpace};
use homog::weights::{a_infty_dyadic, make_weight, HKind, WeightSpec};
use homog::{Error, Field};
use proptest::prelude::*;
use support::oracle;

fn systems(space: &FiniteSpace) -> AdjacentSystems {
    let fam = default_family(space).unwrap();
    build_adjacent_systems(space, &DyadicConfig { delta: 0.125, mode: DyadicMode::Relaxed, seed: 1 }, &fam).unwrap()
}

fn small_comb() -> FiniteSpace {
    make_comb_space_with(&CombParams { junction_octaves: 8, ..CombParams::new(4, 16, 2.0) }).unwrap()
}

fn comb_family(space: &FiniteSpace) -> BallFamily {
    let mut f = enumerate_balls(space, &FamilySpec::Sampled { count: 300, seed: 5 }).unwrap();
    f.balls.extend(enumerate_balls(space, &FamilySpec::Critical).unwrap().balls);
    f
}

fn weight(space: &FiniteSpace, spec: &str) -> Field {
    make_weight(space, &WeightSpec::parse(spec).unwrap()).unwrap().field
}

#[test]
fn stopping_family_matches_the_level_set_oracle() {
    let s = make_grid_interval(0.0, 4.0, 128).unwrap();
    let sys = systems(&s);
    let w = weight(&s, "exp");
    let avg = CubeAverages::new(&sys, &s, &w);
    let mut checked = 0;
    for q0 in sys.working_cubes().into_iter().step_by(7) {
        let gdp = sys.gdp(q0).unwrap();
        let m = oracle::localized_maximal(&sys, &s, &w.values, q0);
        let floor = sys.s_const() * avg.avg(gdp);
        for lambda in [floor, floor * 1.01, floor * 1.5, floor * 4.0] {
            let fam = stopping_cubes(&sys, &s, &avg, q0, lambda, None).unwrap();
            assert!(fam.check.all_pass(), "{q0:?} λ={lambda}: {:?}", fam.check);
            let want: Vec<u32> = (0..s.len() as u32).filter(|&x| m[x as usize] > lambda).collect();
            assert_eq!(fam.level_set, want);
            let mut cover: Vec<u32> = fam.cubes.iter().flat_map(|&c| sys.members(c).iter().copied()).collect();
            cover.sort_unstable();
            cover.dedup();
            assert_eq!(cover, want);
            for &c in &fam.cubes {
                assert!(avg.avg(c) > lambda);
            }
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn stopping_rejects_small_lambda() {
    let s = make_grid_interval(0.0, 4.0, 64).unwrap();
    let sys = systems(&s);
    let w = weight(&s, "exp");
    let avg = CubeAverages::new(&sys, &s, &w);
    let q0 = sys.working_cubes()[0];
    let floor = sys.s_const() * avg.avg(sys.gdp(q0).unwrap());
    let err = stopping_cubes(&sys, &s, &avg, q0, floor * 0.5, None).unwrap_err();
    assert!(matches!(err, Error::LambdaTooSmall { .. }));
}

#[test]
fn stopping_scan_passes_on_fixtures() {
    let g = make_grid_interval(0.0, 4.0, 128).unwrap();
    let c = small_comb();
    for (s, spec) in [(&g, "exp"), (&g, "lognormal:4"), (&c, "h1")] {
        let sys = systems(s);
        let r = stopping_scan(&sys, s, &weight(s, spec), 8, &Tolerances::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{spec}");
    }
}

#[test]
fn rhi_drivers_pass_on_fixtures() {
    let tol = Tolerances::default();
    let g = make_grid_interval(0.0, 4.0, 128).unwrap();
    let gfam = enumerate_balls(&g, &FamilySpec::All).unwrap();
    let c = small_comb();
    let cfam = comb_family(&c);
    for (s, fam, spec) in [(&g, &gfam, "constant:1"), (&g, &gfam, "exp"), (&g, &gfam, "lognormal:9:1.5"), (&c, &cfam, "h1")] {
        let sys = systems(s);
        let w = weight(s, spec);
        assert_eq!(verify_sharp_lemma(&sys, s, &w, None, &tol).unwrap().verdict, Verdict::Pass, "sharp {spec}");
        let r = verify_weak_rhi(&sys, s, Some(fam), &w, &tol).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "weak rhi {spec}");
        assert_eq!(gehring_probe(&sys, s, fam, &w, 2.0, &tol).unwrap().verdict, Verdict::Pass, "gehring {spec}");

        let ainf = a_infty_dyadic(&sys, s, &w).unwrap().value;
        let eps = 1.0 / (2.0 * sys.s_const().powi(2) * sys.k() as f64 * ainf);
        assert!(oracle::rel_close(r.summary_value("eps_star").unwrap(), eps, 1e-12));
        let (worst, n) = oracle::weak_rhi_worst(&sys, s, &w.values, eps);
        assert!(n > 0 && worst <= 1.0 + 1e-9, "{spec}: {worst}");
    }
}

#[test]
fn constant_weight_margins_are_at_least_two() {
    let s = make_grid_interval(0.0, 4.0, 128).unwrap();
    let sys = systems(&s);
    let r = verify_weak_rhi(&sys, &s, None, &weight(&s, "constant:1"), &Tolerances::default()).unwrap();
    let margins = r.numbers("margin");
    assert!(!margins.is_empty());
    assert!(margins.iter().all(|m| *m >= 2.0 - 1e-12), "{:?}", margins.iter().cloned().fold(f64::INFINITY, f64::min));
}

#[test]
fn equivalence_agrees_on_fixtures() {
    let tol = Tolerances::default();
    let g = make_grid_interval(0.0, 4.0, 96).unwrap();
    let gfam = enumerate_balls(&g, &FamilySpec::All).unwrap();
    for spec in ["exp", "lognormal:2"] {
        let sys = systems(&g);
        let r = equivalence_scan(&sys, &g, &gfam, &weight(&g, spec), &[1.5, 2.0, 3.0], &tol).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{spec}");
        assert_eq!(r.rows.len(), 3);
    }
}

/// ∫₀¹ min{1, ε max{h(u), 1}}^p du by Simpson's rule in t = −ln u.
fn u_integral(h: HKind, eps: f64, p: f64) -> f64 {
    let (t_max, steps) = (60.0f64, 600_000usize);
    let dt = t_max / steps as f64;
    let f = |t: f64| {
        let u = (-t).exp();
        let g = (eps * h.eval(u).max(1.0)).min(1.0);
        g.powf(p) * u
    };
    let mut acc = f(0.0) + f(t_max);
    for i in 1..steps {
        acc += f(i as f64 * dt) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * dt / 3.0
}

/// (⨍_{Q_j} f^p)^{1/p} / ⨍_{Q_j} f for the continuum comb, where Q_j = W_j has measure 3/2.
fn continuum_ratio(h: HKind, eps: f64, p: f64) -> f64 {
    let lp = ((0.5 * eps.powf(p) + u_integral(h, eps, p)) / 1.5).powf(1.0 / p);
    lp / ((0.5 * eps + u_integral(h, eps, 1.0)) / 1.5)
}

#[test]
fn square_ratios_track_the_continuum() {
    let s = make_comb_space_with(&CombParams::new(9, 32, 2.0)).unwrap();
    for (h, p) in [(HKind::H1, 2.0), (HKind::H2 { alpha: 0.5 }, 2.0), (HKind::H2 { alpha: 0.5 }, 4.0)] {
        let w = make_weight(&s, &WeightSpec::Fh { h, ratio: 0.5 }).unwrap().field;
        let got = square_ratios(&s, &w, p, 8).unwrap();
        for (j, r) in got.iter().enumerate() {
            let want = continuum_ratio(h, 0.5f64.powi(j as i32), p);
            // The graded junction cell uses four right-end samples per octave.
            assert!((r / want - 1.0).abs() <= 0.05, "{} p={p} j={j}: {r} vs {want}", h.label());
        }
    }
}

#[test]
fn square_ratios_match_a_direct_sum() {
    let s = small_comb();
    let comb = s.comb().unwrap();
    let w = weight(&s, "h1");
    let got = square_ratios(&s, &w, 2.0, 3).unwrap();
    for (j, r) in got.iter().enumerate() {
        let pts: Vec<usize> = comb.w_range(j).collect();
        let mu = oracle::mass(&s, &pts);
        let l2 = (pts.iter().map(|&x| w.values[x].powi(2) * s.mass(x)).sum::<f64>() / mu).sqrt();
        let l1 = oracle::weight(&s, &w.values, &pts) / mu;
        assert!(oracle::rel_close(*r, l2 / l1, 1e-12), "j={j}");
    }
}

#[test]
fn classify_ratios_cases() {
    let tol = Tolerances::default();
    let up: Vec<f64> = (0..=12).map(|j| 1.0 + j as f64).collect();
    assert_eq!(classify_ratios(&up, true, &tol), Verdict::Diverging);
    let flat = vec![1.0, 1.05, 1.1, 1.12, 1.1, 1.11, 1.12, 1.1, 1.1, 1.1, 1.1, 1.1, 1.1];
    assert_eq!(classify_ratios(&flat, false, &tol), Verdict::Bounded);
    let slow: Vec<f64> = (0..=12).map(|j| 1.0 + 0.04 * j as f64).collect();
    assert_eq!(classify_ratios(&slow, true, &tol), Verdict::Inconclusive);
}

#[test]
fn expected_regimes() {
    assert!(expect_diverging(HKind::H1, 2.0));
    assert!(!expect_diverging(HKind::H2 { alpha: 0.5 }, 2.0));
    assert!(expect_diverging(HKind::H2 { alpha: 0.5 }, 4.0));
}

#[test]
fn doubling_balls_on_a_grid() {
    let s = make_grid_interval(0.0, 4.0, 256).unwrap();
    for sigma in [1.5, 2.0, 4.0] {
        let r = doubling_ball_search(&s, sigma, 64, 1, &Tolerances::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "σ={sigma}");
        assert!(r.numbers("found").iter().all(|f| *f == 1.0));
    }
}

#[test]
fn doubling_balls_on_a_comb() {
    let s = small_comb();
    let r = doubling_ball_search(&s, 2.0, 80, 3, &Tolerances::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn exponential_example_small() {
    let r = exponential_example(1024, 3.0, 5, &Tolerances::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    let surrogate = r.summary_value("strong_surrogate").unwrap();
    assert!(surrogate >= 0.9 * 5f64.exp());
}

#[test]
fn report_csv_round_trip() {
    let s = make_grid_interval(0.0, 4.0, 32).unwrap();
    let sys = systems(&s);
    let r = verify_sharp_lemma(&sys, &s, &weight(&s, "exp"), None, &Tolerances::default()).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), r.columns.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(rd.records().count(), r.rows.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn weak_rhi_holds_for_random_weights(seed in 0u64..10_000, spread in 0.2f64..2.5) {
        let s = make_grid_interval(0.0, 4.0, 64).unwrap();
        let sys = systems(&s);
        let w = weight(&s, &format!("lognormal:{seed}:{spread}"));
        let ainf = a_infty_dyadic(&sys, &s, &w).unwrap().value;
        let eps = 1.0 / (2.0 * sys.s_const().powi(2) * sys.k() as f64 * ainf);
        let (worst, _) = oracle::weak_rhi_worst(&sys, &s, &w.values, eps);
        prop_assert!(worst <= 1.0 + 1e-9);
        let r = verify_sharp_lemma(&sys, &s, &w, None, &Tolerances::default()).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn stopping_invariants_random(seed in 0u64..10_000, bump in 1.0f64..6.0) {
        let s = make_grid_interval(0.0, 4.0, 64).unwrap();
        let sys = systems(&s);
        let w = weight(&s, &format!("lognormal:{seed}:1.5"));
        let avg = CubeAverages::new(&sys, &s, &w);
        for q0 in sys.working_cubes().into_iter().step_by(5) {
            for gdp in sys.gdp_candidates(q0).unwrap() {
                let lambda = sys.s_const() * avg.avg(gdp) * bump;
                let fam = stopping_cubes(&sys, &s, &avg, q0, lambda, Some(gdp)).unwrap();
                prop_assert!(fam.check.all_pass(), "{:?}", fam.check);
                let m = oracle::localized_maximal(&sys, &s, &w.values, q0);
                let want: Vec<u32> = (0..s.len() as u32).filter(|&x| m[x as usize] > lambda).collect();
                prop_assert_eq!(&fam.level_set, &want);
            }
        }
    }
}
