use crate::delay::delay_values;
use crate::dynamics::{Observable, SystemSpec};
use crate::error::{invalid, Error, Result};
use crate::spaces::{circle_dist, Point, Space, SpaceKind};
use rayon::prelude::*;

/// Precomputed orbits of a candidate set, indexed by candidate and time.
pub trait OrbitTable: Sync {
    /// Number of candidates.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest supported `n`: times `0..horizon` are available.
    fn horizon(&self) -> usize;

    /// Distance between candidates `a` and `b` after `j` steps.
    fn step_distance(&self, a: usize, b: usize, j: usize) -> f64;

    /// A planar point, 1-Lipschitz in each coordinate for `step_distance(.., j)`.
    fn anchor(&self, a: usize, j: usize) -> [f64; 2];
}

enum Coords {
    Euclid(Vec<[f64; 2]>),
    Circle(Vec<f64>),
    General(Vec<Point>),
}

/// Orbits of candidate points under the source map.
pub struct SourceOrbits {
    space: Space,
    horizon: usize,
    len: usize,
    coords: Coords,
    anchors: Vec<[f64; 2]>,
}

impl SourceOrbits {
    pub fn new(sys: &SystemSpec, candidates: &[Point], horizon: usize) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::Empty("candidates"));
        }
        if horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        let space = sys.space();
        for p in candidates {
            space.check(p)?;
        }
        let points: Vec<Point> = candidates
            .par_iter()
            .flat_map_iter(|x| sys.orbit_unchecked(x, horizon - 1))
            .collect();
        let anchors = points.par_iter().map(|p| space.anchor(p)).collect();
        let coords = match space.kind() {
            SpaceKind::Interval | SpaceKind::Triangle => Coords::Euclid(
                points
                    .iter()
                    .map(|p| match p {
                        Point::Real(c) => [c[0], c.get(1).copied().unwrap_or(0.0)],
                        _ => unreachable!(),
                    })
                    .collect(),
            ),
            SpaceKind::Address(ifs) => Coords::Euclid(
                points
                    .par_iter()
                    .map(|p| match p {
                        Point::Address(w) => ifs.coords(w),
                        _ => unreachable!(),
                    })
                    .collect(),
            ),
            SpaceKind::Circle => Coords::Circle(points.iter().map(|p| p.as_real().unwrap_or(f64::NAN)).collect()),
            SpaceKind::Dendrite(_) | SpaceKind::Finite { .. } => Coords::General(points),
        };
        Ok(Self {
            space: space.clone(),
            horizon,
            len: candidates.len(),
            coords,
            anchors,
        })
    }
}

impl OrbitTable for SourceOrbits {
    fn len(&self) -> usize {
        self.len
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn step_distance(&self, a: usize, b: usize, j: usize) -> f64 {
        let (i, k) = (a * self.horizon + j, b * self.horizon + j);
        match &self.coords {
            Coords::Euclid(c) => {
                let (dx, dy) = (c[i][0] - c[k][0], c[i][1] - c[k][1]);
                (dx * dx + dy * dy).sqrt()
            }
            Coords::Circle(c) => circle_dist(c[i], c[k]),
            Coords::General(p) => self.space.dist(&p[i], &p[k]),
        }
    }

    fn anchor(&self, a: usize, j: usize) -> [f64; 2] {
        self.anchors[a * self.horizon + j]
    }
}

/// Orbits of the reconstructed shift on `{0..k}` delay vectors, with the
/// window sup metric.
pub struct ReconstructedOrbits {
    k: usize,
    horizon: usize,
    values: Vec<Vec<f64>>,
}

impl ReconstructedOrbits {
    pub fn new(sys: &SystemSpec, f: &Observable, k: usize, candidates: &[Point], horizon: usize) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::Empty("candidates"));
        }
        if horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        for p in candidates {
            sys.space().check(p)?;
        }
        let times: Vec<usize> = (0..horizon + k).collect();
        let values = candidates.par_iter().map(|x| delay_values(sys, f, &times, x)).collect();
        Ok(Self { k, horizon, values })
    }

    /// Build directly from observation sequences of length at least `horizon + k`.
    pub fn from_series(k: usize, horizon: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("series"));
        }
        if horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if values.iter().any(|v| v.len() < horizon + k) {
            return Err(invalid("series", format!("every series needs {} values", horizon + k)));
        }
        Ok(Self { k, horizon, values })
    }

    pub fn window(&self) -> usize {
        self.k
    }
}

impl OrbitTable for ReconstructedOrbits {
    fn len(&self) -> usize {
        self.values.len()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn step_distance(&self, a: usize, b: usize, j: usize) -> f64 {
        let (u, v) = (&self.values[a][j..=j + self.k], &self.values[b][j..=j + self.k]);
        u.iter().zip(v).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    fn anchor(&self, a: usize, j: usize) -> [f64; 2] {
        let v = &self.values[a];
        [v[j], if self.k > 0 { v[j + 1] } else { 0.0 }]
    }
}
