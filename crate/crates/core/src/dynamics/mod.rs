//! Maps `T: X -> X`, observables, orbits, periodic points and trajectory separation.

mod finite;
pub(crate) use finite::classes_of_table;
mod observable;
mod periodic;

pub use finite::{eventual_orbit_classes, is_doubly_zero_dimensional_finite};
pub use observable::{Observable, ObservableSpec, WeightedTerm};
pub use periodic::{periodic_points, PeriodicPoint};

use crate::error::{invalid, require_positive, Error, Result};
use crate::spaces::{bary_to_cartesian, cartesian_to_bary, wrap_unit, IfsFamily, Point, Space, SpaceKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Merge tolerance for real-coordinate spaces.
pub const REAL_MERGE_TOLERANCE: f64 = 1e-9;

/// How a finite-depth address shift fills the vacated last letter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refill {
    #[default]
    RepeatLast,
    Fixed(u8),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum MapKind {
    /// `2x` on [0, 1/2], `2(1-x)` on [1/2, 1].
    Tent,
    /// `r x (1-x)` with `0 <= r <= 4`.
    Logistic {
        r: f64,
    },
    /// `x^2` on [0, 1].
    Square,
    /// `2x mod 1` on the circle.
    Doubling,
    Rotation {
        theta: f64,
    },
    /// `x + s/(2π) sin(2πx)` on the circle: repelling 0, attracting 1/2.
    NorthSouth {
        #[serde(default = "default_north_south_strength")]
        strength: f64,
    },
    GasketShift {
        #[serde(default)]
        refill: Refill,
    },
    CarpetShift {
        #[serde(default)]
        refill: Refill,
    },
    CantorShift {
        #[serde(default)]
        refill: Refill,
    },
    /// Star dendrite map `(arc, t) -> (arc_map[arc], profile(t))` with a
    /// piecewise-linear profile fixing the centre.
    DendritePl {
        arc_map: Vec<usize>,
        profile: Vec<[f64; 2]>,
    },
    /// Simplicial folding map at barycentres on a 1- or 2-simplex.
    SimplexFold,
    FiniteMap {
        table: Vec<usize>,
    },
    Identity,
    Constant {
        point: Point,
    },
}

fn default_north_south_strength() -> f64 {
    0.5
}

impl MapKind {
    pub fn name(&self) -> &'static str {
        match self {
            MapKind::Tent => "tent",
            MapKind::Logistic { .. } => "logistic",
            MapKind::Square => "square",
            MapKind::Doubling => "doubling",
            MapKind::Rotation { .. } => "rotation",
            MapKind::NorthSouth { .. } => "north_south",
            MapKind::GasketShift { .. } => "gasket_shift",
            MapKind::CarpetShift { .. } => "carpet_shift",
            MapKind::CantorShift { .. } => "cantor_shift",
            MapKind::DendritePl { .. } => "dendrite_pl",
            MapKind::SimplexFold => "simplex_fold",
            MapKind::FiniteMap { .. } => "finite_map",
            MapKind::Identity => "identity",
            MapKind::Constant { .. } => "constant",
        }
    }
}

/// A map on a declared space. Immutable after construction; `apply` is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    space: Space,
    map: MapKind,
}

impl SystemSpec {
    pub fn new(space: Space, map: MapKind) -> Result<Self> {
        validate(&space, &map)?;
        Ok(Self { space, map })
    }

    pub fn tent() -> Self {
        Self::new(Space::interval(), MapKind::Tent).unwrap()
    }

    pub fn doubling() -> Self {
        Self::new(Space::circle(), MapKind::Doubling).unwrap()
    }

    pub fn square() -> Self {
        Self::new(Space::interval(), MapKind::Square).unwrap()
    }

    pub fn identity(space: Space) -> Self {
        Self::new(space, MapKind::Identity).unwrap()
    }

    pub fn rotation(theta: f64) -> Self {
        Self::new(Space::circle(), MapKind::Rotation { theta }).unwrap()
    }

    pub fn finite_map(table: Vec<usize>) -> Result<Self> {
        Self::new(Space::finite(table.len()), MapKind::FiniteMap { table })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn map(&self) -> &MapKind {
        &self.map
    }

    pub fn label(&self) -> String {
        format!("{}@{}", self.map.name(), self.space.name())
    }

    /// Distance at or below which two points count as equal.
    pub fn merge_tolerance(&self) -> f64 {
        if self.space.is_exact() {
            0.0
        } else {
            REAL_MERGE_TOLERANCE
        }
    }

    /// `T(p)`; the caller guarantees `p` lies in the space.
    pub fn apply(&self, p: &Point) -> Point {
        match (&self.map, p) {
            (MapKind::Identity, _) => p.clone(),
            (MapKind::Constant { point }, _) => point.clone(),
            (MapKind::Tent | MapKind::SimplexFold, Point::Real(c)) if c.len() == 1 => {
                let x = c[0];
                Point::real(if x <= 0.5 { 2.0 * x } else { 2.0 * (1.0 - x) })
            }
            (MapKind::SimplexFold, Point::Real(c)) => {
                let (x, y) = fold_triangle(c[0], c[1]);
                Point::Real(vec![x, y])
            }
            (MapKind::Logistic { r }, Point::Real(c)) => Point::real((r * c[0] * (1.0 - c[0])).clamp(0.0, 1.0)),
            (MapKind::Square, Point::Real(c)) => Point::real(c[0] * c[0]),
            (MapKind::Doubling, Point::Real(c)) => {
                let y = 2.0 * c[0];
                Point::real(if y >= 1.0 { y - 1.0 } else { y })
            }
            (MapKind::Rotation { theta }, Point::Real(c)) => Point::real(wrap_unit(c[0] + theta)),
            (MapKind::NorthSouth { strength }, Point::Real(c)) => {
                let x = c[0];
                Point::real(wrap_unit(x + strength / TAU * (TAU * x).sin()))
            }
            (
                MapKind::GasketShift { refill } | MapKind::CarpetShift { refill } | MapKind::CantorShift { refill },
                Point::Address(w),
            ) => {
                let fill = match refill {
                    Refill::RepeatLast => *w.last().unwrap_or(&0),
                    Refill::Fixed(letter) => *letter,
                };
                let mut next = Vec::with_capacity(w.len());
                next.extend_from_slice(&w[1.min(w.len())..]);
                next.push(fill);
                next.truncate(w.len());
                Point::Address(next)
            }
            (MapKind::DendritePl { arc_map, profile }, Point::Arc { arc, t }) => Point::Arc {
                arc: arc_map[*arc],
                t: eval_profile(profile, *t),
            },
            (MapKind::FiniteMap { table }, Point::State(s)) => Point::State(table[*s]),
            _ => unreachable!("map/space compatibility is checked on construction"),
        }
    }

    /// `T^n(x)`.
    pub fn iterate(&self, x: &Point, n: usize) -> Result<Point> {
        self.space.check(x)?;
        Ok(self.iterate_unchecked(x, n))
    }

    pub(crate) fn iterate_unchecked(&self, x: &Point, n: usize) -> Point {
        let mut p = x.clone();
        for _ in 0..n {
            p = self.apply(&p);
        }
        p
    }

    /// `(T^i(x))_{i=0..=n}`.
    pub fn orbit(&self, x: &Point, n: usize) -> Result<Vec<Point>> {
        self.space.check(x)?;
        Ok(self.orbit_unchecked(x, n))
    }

    pub(crate) fn orbit_unchecked(&self, x: &Point, n: usize) -> Vec<Point> {
        let mut orbit = Vec::with_capacity(n + 1);
        orbit.push(x.clone());
        for i in 0..n {
            let next = self.apply(&orbit[i]);
            orbit.push(next);
        }
        orbit
    }

    /// Largest sampled ratio `d(Tx, Ty) / d(x, y)` over nearby pairs.
    pub fn sampled_expansion(&self, samples: usize, seed: u64) -> f64 {
        if self.space.finite_size().is_some() {
            return 1.0;
        }
        let delta = match self.space.ifs() {
            Some(ifs) => ifs.cylinder_diameter(ifs.depth().saturating_sub(3)),
            None => 1e-6 * self.space.diameter(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best: f64 = 0.0;
        for _ in 0..samples {
            let x = self.space.sample(&mut rng);
            let y = self.space.perturb(&x, delta, &mut rng);
            let d = self.space.dist(&x, &y);
            if d > 0.0 {
                best = best.max(self.space.dist(&self.apply(&x), &self.apply(&y)) / d);
            }
        }
        best
    }

    /// Default Lipschitz bound for outer approximations: sampled expansion
    /// times a 1.5 safety factor.
    pub fn lipschitz_bound(&self) -> f64 {
        1.5 * self.sampled_expansion(4096, 0x5eed)
    }
}

fn validate(space: &Space, map: &MapKind) -> Result<()> {
    let kind = space.kind();
    let mismatch = || {
        Error::Unsupported(format!(
            "map `{}` is not defined on space `{}`",
            map.name(),
            space.name()
        ))
    };
    match map {
        MapKind::Tent | MapKind::Square => {
            if !matches!(kind, SpaceKind::Interval) {
                return Err(mismatch());
            }
        }
        MapKind::Logistic { r } => {
            if !matches!(kind, SpaceKind::Interval) {
                return Err(mismatch());
            }
            if !(0.0..=4.0).contains(r) {
                return Err(invalid(
                    "system.r",
                    format!("logistic parameter must lie in [0, 4], got {r}"),
                ));
            }
        }
        MapKind::SimplexFold => {
            if !matches!(kind, SpaceKind::Interval | SpaceKind::Triangle) {
                return Err(mismatch());
            }
        }
        MapKind::Doubling => {
            if !matches!(kind, SpaceKind::Circle | SpaceKind::Interval) {
                return Err(mismatch());
            }
        }
        MapKind::Rotation { theta } => {
            if !matches!(kind, SpaceKind::Circle) {
                return Err(mismatch());
            }
            if !theta.is_finite() {
                return Err(invalid("system.theta", "must be finite"));
            }
        }
        MapKind::NorthSouth { strength } => {
            if !matches!(kind, SpaceKind::Circle) {
                return Err(mismatch());
            }
            if !(*strength > 0.0 && *strength < 1.0) {
                return Err(invalid(
                    "system.strength",
                    "must lie in (0, 1) so the map is a homeomorphism",
                ));
            }
        }
        MapKind::GasketShift { refill } | MapKind::CarpetShift { refill } | MapKind::CantorShift { refill } => {
            let family = match map {
                MapKind::GasketShift { .. } => IfsFamily::Gasket,
                MapKind::CarpetShift { .. } => IfsFamily::Carpet,
                _ => IfsFamily::Cantor,
            };
            let ifs = space.ifs().filter(|ifs| ifs.family() == family).ok_or_else(mismatch)?;
            if let Refill::Fixed(letter) = refill {
                if *letter as usize >= ifs.alphabet_size() {
                    return Err(invalid(
                        "system.refill",
                        format!("letter {letter} outside the alphabet"),
                    ));
                }
            }
        }
        MapKind::DendritePl { arc_map, profile } => {
            let tree = space.tree().ok_or_else(mismatch)?;
            if !tree.is_star() {
                return Err(Error::Unsupported(
                    "dendrite_pl needs a star dendrite (all arcs leave vertex 0)".into(),
                ));
            }
            if arc_map.len() != tree.arcs().len() || arc_map.iter().any(|&a| a >= tree.arcs().len()) {
                return Err(invalid("system.arc_map", "must send every arc to an existing arc"));
            }
            if profile.len() < 2
                || profile[0] != [0.0, 0.0]
                || profile.last().map(|p| p[0]) != Some(1.0)
                || profile.windows(2).any(|w| w[1][0] <= w[0][0])
                || profile.iter().any(|p| !(0.0..=1.0).contains(&p[1]))
            {
                return Err(invalid(
                    "system.profile",
                    "breakpoints must start at [0, 0], end at t = 1, increase in t and stay in [0, 1]",
                ));
            }
        }
        MapKind::FiniteMap { table } => {
            let size = space.finite_size().ok_or_else(mismatch)?;
            if table.len() != size || table.iter().any(|&s| s >= size) {
                return Err(invalid("system.table", format!("must be a total map on {size} states")));
            }
        }
        MapKind::Identity => {}
        MapKind::Constant { point } => space.check(point)?,
    }
    Ok(())
}

fn eval_profile(profile: &[[f64; 2]], t: f64) -> f64 {
    let i = profile.partition_point(|p| p[0] <= t).clamp(1, profile.len() - 1);
    let ([t0, v0], [t1, v1]) = (profile[i - 1], profile[i]);
    (v0 + (v1 - v0) * (t - t0) / (t1 - t0)).clamp(0.0, 1.0)
}

/// Folding map of the triangle onto itself: the chamber spanned by vertex
/// `v_i`, edge midpoint `b(v_i v_j)` and centroid is sent linearly onto
/// `v0, v1, v2` in that order.
fn fold_triangle(x: f64, y: f64) -> (f64, f64) {
    let (l1, l2) = cartesian_to_bary(x, y);
    let mut bary = [(1.0 - l1 - l2).max(0.0), l1.max(0.0), l2.max(0.0)];
    bary.sort_by(|a, b| b.total_cmp(a));
    let [_, mid, lo] = bary;
    // p = (hi - mid) v_i + 2 (mid - lo) b(v_i v_j) + 3 lo b(σ)
    bary_to_cartesian(2.0 * (mid - lo), 3.0 * lo)
}

/// Outcome of a finite-horizon trajectory-separation test.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SeparationVerdict {
    /// All distances up to the horizon are at least `alpha`.
    Separated { alpha: f64, horizon: usize },
    /// First index at which the orbits coincide (within the merge tolerance).
    MergedAt { index: usize },
    /// Neither merged nor uniformly `alpha`-apart up to the horizon.
    Undetermined { horizon: usize, min_gap: f64 },
}

impl SeparationVerdict {
    pub fn is_separated(&self) -> bool {
        matches!(self, SeparationVerdict::Separated { .. })
    }

    pub fn merged_at(&self) -> Option<usize> {
        match self {
            SeparationVerdict::MergedAt { index } => Some(*index),
            _ => None,
        }
    }
}

/// Compares `T^i(x)` and `T^i(y)` for `i = 0..=horizon`. Only separation up to
/// the horizon can be certified.
pub fn is_trajectory_separated(
    sys: &SystemSpec,
    x: &Point,
    y: &Point,
    horizon: usize,
    alpha: f64,
) -> Result<SeparationVerdict> {
    require_positive("alpha", alpha)?;
    if horizon == 0 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    sys.space.check(x)?;
    sys.space.check(y)?;
    Ok(separation_unchecked(sys, x, y, horizon, alpha))
}

pub(crate) fn separation_unchecked(
    sys: &SystemSpec,
    x: &Point,
    y: &Point,
    horizon: usize,
    alpha: f64,
) -> SeparationVerdict {
    let tol = sys.merge_tolerance();
    let (mut a, mut b) = (x.clone(), y.clone());
    let mut min_gap = f64::INFINITY;
    for i in 0..=horizon {
        let d = sys.space.dist(&a, &b);
        if d <= tol {
            return SeparationVerdict::MergedAt { index: i };
        }
        min_gap = min_gap.min(d);
        if i < horizon {
            a = sys.apply(&a);
            b = sys.apply(&b);
        }
    }
    if min_gap >= alpha {
        SeparationVerdict::Separated { alpha, horizon }
    } else {
        SeparationVerdict::Undetermined { horizon, min_gap }
    }
}

#[cfg(test)]
pub(crate) mod tests;
