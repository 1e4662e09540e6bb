use rayon::prelude::*;

use super::{enumerate_balls, Ball, BallFamily, FamilySpec, FiniteSpace};
use crate::error::{Error, Result};

/// Measured doubling constants of a space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingReport {
    /// max μ(B(x,2r)) / μ(B(x,r)).
    pub d_hat: f64,
    /// max greedy count of radius-r/2 balls covering B(x,r).
    pub n_hat: usize,
    pub radius_floor: f64,
    pub balls_tested: usize,
}

/// Greedy cover of `ball` by balls of half its radius centred at its members.
pub fn cover_count(space: &FiniteSpace, ball: &Ball) -> usize {
    let members = ball.members.to_vec();
    let mut covered = vec![false; members.len()];
    let mut count = 0;
    for k in 0..members.len() {
        if covered[k] {
            continue;
        }
        count += 1;
        let half = space.members_within(members[k], 0.5 * ball.radius, false);
        for (flag, &m) in covered.iter_mut().zip(&members) {
            if !*flag && half.contains(m) {
                *flag = true;
            }
        }
    }
    count
}

/// Doubling constants over the balls of `family` with radius in `[floor, diameter]`.
pub fn measure_doubling_over(space: &FiniteSpace, family: &BallFamily, radius_floor: f64) -> Result<DoublingReport> {
    if space.len() == 1 {
        return Ok(DoublingReport { d_hat: 1.0, n_hat: 1, radius_floor, balls_tested: 0 });
    }
    let diam = space.diameter();
    let tested: Vec<&Ball> = family
        .balls
        .iter()
        .filter(|b| b.radius >= radius_floor && b.radius <= diam)
        .collect();
    if tested.is_empty() {
        return Err(Error::EmptyRadiusRange { floor: radius_floor, diameter: diam });
    }
    let (d_hat, n_hat) = tested
        .par_iter()
        .map(|b| {
            let big = space.measure(&space.members_within(b.center, 2.0 * b.radius, false));
            (big / b.measure, cover_count(space, b))
        })
        .reduce(|| (1.0, 1), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(DoublingReport { d_hat, n_hat, radius_floor, balls_tested: tested.len() })
}

/// Doubling constants over a default family: `all` balls for small spaces,
/// otherwise a seeded sample (plus the critical family on combs).
pub fn measure_doubling(space: &FiniteSpace, radius_floor: Option<f64>) -> Result<DoublingReport> {
    let floor = radius_floor.unwrap_or(2.0 * space.resolution());
    if space.len() == 1 {
        return Ok(DoublingReport { d_hat: 1.0, n_hat: 1, radius_floor: floor, balls_tested: 0 });
    }
    if floor < space.resolution() {
        return Err(Error::InvalidParameter(format!(
            "radius floor {floor} is below the resolution {}",
            space.resolution()
        )));
    }
    let family = if space.len() <= 400 {
        enumerate_balls(space, &FamilySpec::All)?
    } else {
        let mut f = enumerate_balls(space, &FamilySpec::Sampled { count: 2000, seed: 1 })?;
        if space.comb().is_some() {
            f.balls.extend(enumerate_balls(space, &FamilySpec::Critical)?.balls);
        }
        f
    };
    measure_doubling_over(space, &family, floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{make_comb_space, make_grid_interval, FiniteSpace, NormKind};

    #[test]
    fn one_point() {
        let s = FiniteSpace::from_coords(NormKind::Linf, vec![[0.0, 0.0]], vec![1.0]).unwrap();
        let r = measure_doubling(&s, None).unwrap();
        assert_eq!((r.d_hat, r.n_hat), (1.0, 1));
    }

    #[test]
    fn grid_is_nearly_two() {
        let s = make_grid_interval(0.0, 1.0, 200).unwrap();
        let r = measure_doubling(&s, None).unwrap();
        assert!(r.d_hat >= 1.9 && r.d_hat <= 2.0 + 8.0 / 200.0, "{}", r.d_hat);
        assert!(r.n_hat >= 2 && r.n_hat <= 4);
    }

    #[test]
    fn comb_is_finite() {
        let s = make_comb_space(4, 16, 2.0).unwrap();
        let r = measure_doubling(&s, Some(1.0 / 8.0)).unwrap();
        assert!(r.d_hat.is_finite() && r.d_hat < 10.0, "{}", r.d_hat);
    }

    #[test]
    fn floor_above_diameter_is_an_error() {
        let s = make_grid_interval(0.0, 1.0, 10).unwrap();
        assert!(measure_doubling(&s, Some(5.0)).is_err());
    }
}
