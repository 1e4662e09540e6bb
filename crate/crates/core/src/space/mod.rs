//! Finite quasimetric measure spaces.
//!
//! A [`FiniteSpace`] is a finite point set with a quasimetric, per-point
//! masses and a declared quasi-triangle constant κ. Built-in spaces (grids and
//! the comb) are laid out as ordered segments ("pieces") along which the
//! distance from any fixed point is a convex function of the index, so ball
//! queries reduce to a handful of binary searches.

mod ball;
mod comb;
mod doubling;
mod enumerate;
mod io;

pub use ball::{Ball, Members};
pub use comb::{CombGeometry, CombParams, Region};
pub use doubling::{cover_count, measure_doubling, measure_doubling_over, DoublingReport};
pub use enumerate::{enumerate_balls, BallFamily, CriticalCase, CriticalTag, FamilySpec, ALL_BALLS_POINT_CAP};
pub use io::{read_space, write_space};

use crate::error::{Error, Result};

/// Hard cap on the number of points in any constructed space.
pub const POINT_CAP: usize = 1_000_000;

/// Norms available for coordinate-based metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    Linf,
    L1,
    L2,
}

impl NormKind {
    pub fn name(self) -> &'static str {
        match self {
            NormKind::Linf => "linf",
            NormKind::L1 => "l1",
            NormKind::L2 => "l2",
        }
    }

    fn eval(self, dx: f64, dy: f64) -> f64 {
        match self {
            NormKind::Linf => dx.abs().max(dy.abs()),
            NormKind::L1 => dx.abs() + dy.abs(),
            NormKind::L2 => dx.hypot(dy),
        }
    }
}

/// The quasimetric oracle of a space.
#[derive(Debug, Clone)]
pub enum Metric {
    /// Equispaced points `a + i h` on a line; ρ(i, j) = |i − j| h exactly.
    Grid { a: f64, h: f64 },
    /// Planar coordinates with a norm.
    Norm { kind: NormKind, coords: Vec<[f64; 2]> },
    /// The comb space, with distances evaluated in tooth-local coordinates.
    Comb(CombGeometry),
    /// Explicit lower-triangular table: entry (i, j) with j < i at i(i−1)/2 + j.
    Table { lower: Vec<f64> },
}

/// A contiguous index range laid out along a segment.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Piece {
    pub start: usize,
    pub end: usize,
    /// Bounding box `[xmin, xmax, ymin, ymax]` in global coordinates.
    pub bbox: [f64; 4],
}

/// A finite space of homogeneous type.
#[derive(Debug, Clone)]
pub struct FiniteSpace {
    metric: Metric,
    masses: Vec<f64>,
    kappa: f64,
    resolution: f64,
    diameter: f64,
    total_mass: f64,
    uniform_mass: Option<f64>,
    /// cum[i] = μ({0, …, i−1}).
    cum: Vec<f64>,
    pieces: Vec<Piece>,
}

impl FiniteSpace {
    fn assemble(metric: Metric, masses: Vec<f64>, kappa: f64, pieces: Vec<Piece>) -> Result<Self> {
        let n = masses.len();
        if n == 0 {
            return Err(Error::InvalidParameter("a space needs at least one point".into()));
        }
        if n > POINT_CAP {
            return Err(Error::TooManyPoints { points: n, cap: POINT_CAP });
        }
        if !(kappa >= 1.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must be >= 1, got {kappa}")));
        }
        if let Some(bad) = masses.iter().position(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass of point {bad} is not positive")));
        }
        let first = masses[0];
        let uniform_mass = masses.iter().all(|m| *m == first).then_some(first);
        let total_mass = masses.iter().sum();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for m in &masses {
            acc += m;
            cum.push(acc);
        }
        let mut space = FiniteSpace {
            metric,
            masses,
            kappa,
            resolution: 0.0,
            diameter: 0.0,
            total_mass,
            uniform_mass,
            cum,
            pieces,
        };
        let (res, diam) = space.compute_extent();
        space.resolution = res;
        space.diameter = diam;
        Ok(space)
    }

    /// Planar point set with a norm metric (κ = 1).
    pub fn from_coords(kind: NormKind, coords: Vec<[f64; 2]>, masses: Vec<f64>) -> Result<Self> {
        if coords.len() != masses.len() {
            return Err(Error::InvalidParameter("coords and masses differ in length".into()));
        }
        Self::assemble(Metric::Norm { kind, coords }, masses, 1.0, Vec::new())
    }

    /// General quasimetric given by a lower-triangular distance table.
    ///
    /// `lower[i(i−1)/2 + j]` holds ρ(i, j) for j < i.
    pub fn from_table(lower: Vec<f64>, masses: Vec<f64>, kappa: f64) -> Result<Self> {
        let n = masses.len();
        if lower.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::InvalidParameter(format!(
                "distance table has {} entries, expected {}",
                lower.len(),
                n * n.saturating_sub(1) / 2
            )));
        }
        if let Some(bad) = lower.iter().position(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidParameter(format!("table entry {bad} is not a positive distance")));
        }
        Self::assemble(Metric::Table { lower }, masses, kappa, Vec::new())
    }

    pub(crate) fn from_comb(geom: CombGeometry, masses: Vec<f64>, pieces: Vec<Piece>) -> Result<Self> {
        Self::assemble(Metric::Comb(geom), masses, 1.0, pieces)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Smallest positive pairwise distance (0 for a one-point space).
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn comb(&self) -> Option<&CombGeometry> {
        match &self.metric {
            Metric::Comb(g) => Some(g),
            _ => None,
        }
    }

    /// `(a, h)` when the space is an equispaced grid.
    pub fn grid(&self) -> Option<(f64, f64)> {
        match self.metric {
            Metric::Grid { a, h } => Some((a, h)),
            _ => None,
        }
    }

    pub fn metric_name(&self) -> &'static str {
        match &self.metric {
            Metric::Grid { .. } | Metric::Comb(_) => "linf",
            Metric::Norm { kind, .. } => kind.name(),
            Metric::Table { .. } => "table",
        }
    }

    /// Global planar coordinates of a point (zeros for table metrics).
    pub fn coords(&self, i: usize) -> [f64; 2] {
        match &self.metric {
            Metric::Grid { a, h } => [a + i as f64 * h, 0.0],
            Metric::Norm { coords, .. } => coords[i],
            Metric::Comb(g) => g.coords(i),
            Metric::Table { .. } => [0.0, 0.0],
        }
    }

    /// ρ(i, j).
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match &self.metric {
            Metric::Grid { h, .. } => i.abs_diff(j) as f64 * h,
            Metric::Norm { kind, coords } => {
                let (p, q) = (coords[i], coords[j]);
                kind.eval(p[0] - q[0], p[1] - q[1])
            }
            Metric::Comb(g) => g.dist(i, j),
            Metric::Table { lower } => {
                let (a, b) = if i > j { (i, j) } else { (j, i) };
                lower[a * (a - 1) / 2 + b]
            }
        }
    }

    /// Sum of masses over a member set.
    pub fn measure(&self, members: &Members) -> f64 {
        if let Some(m) = self.uniform_mass {
            return members.len() as f64 * m;
        }
        members.runs().iter().map(|&(s, e)| self.run_mass(s as usize, e as usize)).sum()
    }

    /// μ({s, …, e−1}); prefix sums for long runs unless cancellation would cost precision.
    fn run_mass(&self, s: usize, e: usize) -> f64 {
        if e - s > 32 {
            let d = self.cum[e] - self.cum[s];
            if d > 1e-3 * self.cum[e] {
                return d;
            }
        }
        self.masses[s..e].iter().sum()
    }

    /// The open ball B(c, r) = {j : ρ(c, j) < r}.
    pub fn ball(&self, center: usize, radius: f64) -> Ball {
        let members = self.members_within(center, radius, false);
        let measure = self.measure(&members);
        Ball { center, radius, members, measure }
    }

    /// Members of the open (`closed = false`) or closed ball around `center`.
    pub fn members_within(&self, center: usize, radius: f64, closed: bool) -> Members {
        let inside = |d: f64| if closed { d <= radius } else { d < radius };
        if self.pieces.is_empty() {
            let mut runs = Members::builder();
            for j in 0..self.len() {
                if inside(self.dist(center, j)) {
                    runs.push(j);
                }
            }
            return runs.finish();
        }
        let c = self.coords(center);
        let mut runs = Members::builder();
        for piece in &self.pieces {
            // Boxes bound the ℓ∞ distance from below (up to rounding of global coordinates).
            if box_distance(c, piece.bbox) > radius * (1.0 + 1e-9) + 1e-12 {
                continue;
            }
            if let Some((s, e)) = self.piece_range(piece, center, &inside) {
                runs.push_range(s, e);
            }
        }
        runs.finish()
    }

    /// Index range `[s, e)` of a piece inside the ball described by `inside`.
    fn piece_range(&self, piece: &Piece, center: usize, inside: &dyn Fn(f64) -> bool) -> Option<(usize, usize)> {
        let d = |i: usize| self.dist(center, i);
        let (mut lo, mut hi) = (piece.start, piece.end - 1);
        while hi - lo > 2 {
            let third = (hi - lo) / 3;
            let (m1, m2) = (lo + third, hi - third);
            let (d1, d2) = (d(m1), d(m2));
            if d1 < d2 {
                hi = m2 - 1;
            } else if d1 > d2 {
                lo = m1 + 1;
            } else {
                lo = m1;
                hi = m2;
            }
        }
        let argmin = (lo..=hi).min_by(|&a, &b| d(a).total_cmp(&d(b))).unwrap();
        if !inside(d(argmin)) {
            return None;
        }
        // Distances are nonincreasing up to argmin and nondecreasing after it.
        let (mut a, mut b) = (piece.start, argmin);
        while a < b {
            let m = (a + b) / 2;
            if inside(d(m)) {
                b = m;
            } else {
                a = m + 1;
            }
        }
        let left = a;
        let (mut a, mut b) = (argmin, piece.end - 1);
        while a < b {
            let m = (a + b + 1) / 2;
            if inside(d(m)) {
                a = m;
            } else {
                b = m - 1;
            }
        }
        Some((left, a + 1))
    }

    /// μ of the closed ball {j : ρ(c, j) ≤ radius}.
    pub fn closed_ball_measure(&self, center: usize, radius: f64) -> f64 {
        let m = self.members_within(center, radius, true);
        self.measure(&m)
    }

    fn compute_extent(&self) -> (f64, f64) {
        let n = self.len();
        if n == 1 {
            return (0.0, 0.0);
        }
        if let Metric::Grid { h, .. } = self.metric {
            return (h, (n - 1) as f64 * h);
        }
        if self.pieces.is_empty() {
            let mut res = f64::INFINITY;
            let mut diam: f64 = 0.0;
            for i in 0..n {
                for j in 0..i {
                    let d = self.dist(i, j);
                    res = res.min(d);
                    diam = diam.max(d);
                }
            }
            return (res, diam);
        }
        // Diameter: ℓ∞ distance between segments peaks at segment endpoints.
        let ends: Vec<usize> = self.pieces.iter().flat_map(|p| [p.start, p.end - 1]).collect();
        let mut diam: f64 = 0.0;
        for &i in &ends {
            for &j in &ends {
                diam = diam.max(self.dist(i, j));
            }
        }
        // Resolution: consecutive points within pieces, and nearest points across pieces.
        let mut res = f64::INFINITY;
        for p in &self.pieces {
            for i in p.start + 1..p.end {
                res = res.min(self.dist(i - 1, i));
            }
        }
        for (pi, p) in self.pieces.iter().enumerate() {
            for i in p.start..p.end {
                let c = self.coords(i);
                for (qi, q) in self.pieces.iter().enumerate() {
                    if qi == pi || box_distance(c, q.bbox) >= res {
                        continue;
                    }
                    let nearest = self.nearest_in_piece(q, i);
                    res = res.min(self.dist(i, nearest));
                }
            }
        }
        (res, diam)
    }

    fn nearest_in_piece(&self, piece: &Piece, center: usize) -> usize {
        let d = |i: usize| self.dist(center, i);
        let (mut lo, mut hi) = (piece.start, piece.end - 1);
        while hi - lo > 2 {
            let third = (hi - lo) / 3;
            let (m1, m2) = (lo + third, hi - third);
            let (d1, d2) = (d(m1), d(m2));
            if d1 < d2 {
                hi = m2 - 1;
            } else if d1 > d2 {
                lo = m1 + 1;
            } else {
                lo = m1;
                hi = m2;
            }
        }
        (lo..=hi).min_by(|&a, &b| d(a).total_cmp(&d(b))).unwrap()
    }

    /// Checks ρ(i,j) ≤ κ(ρ(i,k) + ρ(k,j)) exhaustively for n ≤ 200, else on
    /// `samples` random triples. Returns the worst observed ratio
    /// ρ(i,j) / (ρ(i,k) + ρ(k,j)), which must not exceed κ.
    pub fn quasi_triangle_ratio(&self, samples: usize, seed: u64) -> f64 {
        use rand::{Rng, SeedableRng};
        let n = self.len();
        let mut worst: f64 = 0.0;
        let mut check = |i: usize, j: usize, k: usize| {
            let s = self.dist(i, k) + self.dist(k, j);
            if s > 0.0 {
                worst = worst.max(self.dist(i, j) / s);
            }
        };
        if n <= 200 {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        check(i, j, k);
                    }
                }
            }
        } else {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                check(rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            }
        }
        worst
    }
}

/// ℓ∞ distance from a point to an axis-aligned box.
fn box_distance(c: [f64; 2], bbox: [f64; 4]) -> f64 {
    let dx = (bbox[0] - c[0]).max(c[0] - bbox[1]).max(0.0);
    let dy = (bbox[2] - c[1]).max(c[1] - bbox[3]).max(0.0);
    dx.max(dy)
}

/// `n` equispaced points `a + i(b − a)/n`, i = 0..n, each of mass (b − a)/n.
pub fn make_grid_interval(a: f64, b: f64, n: usize) -> Result<FiniteSpace> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("grid needs n >= 2, got {n}")));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("grid needs a < b, got [{a}, {b}]")));
    }
    if n > POINT_CAP {
        return Err(Error::TooManyPoints { points: n, cap: POINT_CAP });
    }
    let h = (b - a) / n as f64;
    let piece = Piece { start: 0, end: n, bbox: [a, a + (n - 1) as f64 * h, 0.0, 0.0] };
    FiniteSpace::assemble(Metric::Grid { a, h }, vec![h; n], 1.0, vec![piece])
}

/// The comb space with default junction grading.
pub fn make_comb_space(teeth: usize, pts_per_unit: usize, trunc: f64) -> Result<FiniteSpace> {
    comb::build(&CombParams::new(teeth, pts_per_unit, trunc))
}

/// The comb space with explicit discretization parameters.
pub fn make_comb_space_with(params: &CombParams) -> Result<FiniteSpace> {
    comb::build(params)
}
