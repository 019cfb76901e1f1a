//! Compact metric spaces: points, metrics, epsilon-nets and cell grids.

mod dendrite;
mod ifs;

pub use dendrite::{Tree, TreeArc};
pub use ifs::{Ifs, IfsFamily};

use crate::error::{require_positive, Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// A state of a compact metric space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    /// Real coordinates (interval, circle, triangle).
    Real(Vec<f64>),
    /// Finite word over an IFS alphabet.
    Address(Vec<u8>),
    /// Position `t ∈ [0, 1]` along a dendrite arc.
    Arc { arc: usize, t: f64 },
    /// State of a finite space.
    State(usize),
}

impl Point {
    pub fn real(x: f64) -> Self {
        Point::Real(vec![x])
    }

    /// First real coordinate, if any.
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Point::Real(c) => c.first().copied(),
            _ => None,
        }
    }

    pub fn as_state(&self) -> Option<usize> {
        match self {
            Point::State(s) => Some(*s),
            _ => None,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Real(c) => write!(f, "{c:?}"),
            Point::Address(w) => {
                for letter in w {
                    write!(f, "{letter}")?;
                }
                Ok(())
            }
            Point::Arc { arc, t } => write!(f, "arc{arc}@{t}"),
            Point::State(s) => write!(f, "state{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceKind {
    /// The unit interval [0, 1].
    Interval,
    /// [0, 1) with wrap-around arc-length metric (diameter 1/2).
    Circle,
    /// Solid triangle with vertices (0,0), (1,0), (1/2, √3/2).
    Triangle,
    /// Address space of an iterated function system.
    Address(Ifs),
    Dendrite(Tree),
    /// `{0, ..., size-1}` with the discrete metric.
    Finite {
        size: usize,
    },
}

/// Descriptor of a compact metric space. Immutable; all methods are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct Space {
    name: String,
    kind: SpaceKind,
}

/// One cell of a grid: every point of the cell lies within `radius` of `rep`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub id: usize,
    pub rep: Point,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Resolution {
    Uniform { cells: usize },
    Triangle { side: usize },
    Prefix { len: usize },
    Dendrite { segments: Vec<usize>, offsets: Vec<usize> },
    Finite,
}

/// A finite cover of a space by cells, with point location.
#[derive(Debug, Clone)]
pub struct Grid {
    mesh: f64,
    resolution: Resolution,
    cells: Vec<Cell>,
}

impl Grid {
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn max_radius(&self) -> f64 {
        self.cells.iter().map(|c| c.radius).fold(0.0, f64::max)
    }

    /// Id of a cell containing `p`. Boundary points go to one of their cells.
    pub fn locate(&self, space: &Space, p: &Point) -> Option<usize> {
        match (&self.resolution, &space.kind, p) {
            (Resolution::Uniform { cells }, SpaceKind::Interval | SpaceKind::Circle, Point::Real(c)) => {
                let x = *c.first()?;
                Some(((x * *cells as f64).floor().max(0.0) as usize).min(cells - 1))
            }
            (Resolution::Triangle { side }, SpaceKind::Triangle, Point::Real(c)) => {
                let (l1, l2) = cartesian_to_bary(c[0], c[1]);
                Some(triangle_cell_of(*side, l1, l2))
            }
            (Resolution::Prefix { len }, SpaceKind::Address(ifs), Point::Address(w)) => Some(ifs.prefix_index(w, *len)),
            (Resolution::Dendrite { segments, offsets }, SpaceKind::Dendrite(_), Point::Arc { arc, t }) => {
                let m = *segments.get(*arc)?;
                let seg = ((t * m as f64).floor().max(0.0) as usize).min(m - 1);
                Some(offsets[*arc] + seg)
            }
            (Resolution::Finite, SpaceKind::Finite { size }, Point::State(s)) if s < size => Some(*s),
            _ => None,
        }
    }
}

impl Space {
    pub fn new(name: impl Into<String>, kind: SpaceKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }

    pub fn interval() -> Self {
        Self::new("interval", SpaceKind::Interval)
    }

    pub fn circle() -> Self {
        Self::new("circle", SpaceKind::Circle)
    }

    pub fn triangle() -> Self {
        Self::new("triangle", SpaceKind::Triangle)
    }

    pub fn cantor(depth: usize) -> Self {
        Self::new("cantor", SpaceKind::Address(Ifs::new(IfsFamily::Cantor, depth)))
    }

    pub fn gasket(depth: usize) -> Self {
        Self::new("gasket", SpaceKind::Address(Ifs::new(IfsFamily::Gasket, depth)))
    }

    pub fn carpet(depth: usize) -> Self {
        Self::new("carpet", SpaceKind::Address(Ifs::new(IfsFamily::Carpet, depth)))
    }

    pub fn dendrite(tree: Tree) -> Self {
        Self::new("dendrite", SpaceKind::Dendrite(tree))
    }

    pub fn finite(size: usize) -> Self {
        Self::new("finite", SpaceKind::Finite { size })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn ifs(&self) -> Option<&Ifs> {
        match &self.kind {
            SpaceKind::Address(ifs) => Some(ifs),
            _ => None,
        }
    }

    pub fn tree(&self) -> Option<&Tree> {
        match &self.kind {
            SpaceKind::Dendrite(tree) => Some(tree),
            _ => None,
        }
    }

    pub fn finite_size(&self) -> Option<usize> {
        match self.kind {
            SpaceKind::Finite { size } => Some(size),
            _ => None,
        }
    }

    /// True for spaces whose points are compared exactly (addresses, finite states).
    pub fn is_exact(&self) -> bool {
        matches!(self.kind, SpaceKind::Address(_) | SpaceKind::Finite { .. })
    }

    /// Covering dimension.
    pub fn dimension(&self) -> usize {
        match &self.kind {
            SpaceKind::Interval | SpaceKind::Circle | SpaceKind::Dendrite(_) => 1,
            SpaceKind::Triangle => 2,
            SpaceKind::Address(ifs) => ifs.dimension(),
            SpaceKind::Finite { .. } => 0,
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            SpaceKind::Interval | SpaceKind::Triangle => 1.0,
            SpaceKind::Circle => 0.5,
            SpaceKind::Address(ifs) => ifs.diameter(),
            SpaceKind::Dendrite(tree) => tree.diameter(),
            SpaceKind::Finite { .. } => 1.0,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match (&self.kind, p) {
            (SpaceKind::Interval, Point::Real(c)) => c.len() == 1 && (0.0..=1.0).contains(&c[0]),
            (SpaceKind::Circle, Point::Real(c)) => c.len() == 1 && (0.0..1.0).contains(&c[0]),
            (SpaceKind::Triangle, Point::Real(c)) => {
                if c.len() != 2 || !c.iter().all(|v| v.is_finite()) {
                    return false;
                }
                let (l1, l2) = cartesian_to_bary(c[0], c[1]);
                let tol = 1e-12;
                l1 >= -tol && l2 >= -tol && l1 + l2 <= 1.0 + tol
            }
            (SpaceKind::Address(ifs), Point::Address(w)) => {
                w.len() == ifs.depth() && w.iter().all(|&l| (l as usize) < ifs.alphabet_size())
            }
            (SpaceKind::Dendrite(tree), Point::Arc { arc, t }) => *arc < tree.arcs().len() && (0.0..=1.0).contains(t),
            (SpaceKind::Finite { size }, Point::State(s)) => s < size,
            _ => false,
        }
    }

    pub fn check(&self, p: &Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::PointMismatch {
                space: self.name.clone(),
                point: p.to_string(),
            })
        }
    }

    /// Distance between two points of the space.
    pub fn metric(&self, a: &Point, b: &Point) -> Result<f64> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.dist(a, b))
    }

    /// Unchecked metric; callers guarantee membership.
    pub(crate) fn dist(&self, a: &Point, b: &Point) -> f64 {
        match (&self.kind, a, b) {
            (SpaceKind::Interval, Point::Real(x), Point::Real(y)) => (x[0] - y[0]).abs(),
            (SpaceKind::Circle, Point::Real(x), Point::Real(y)) => circle_dist(x[0], y[0]),
            (SpaceKind::Triangle, Point::Real(x), Point::Real(y)) => (x[0] - y[0]).hypot(x[1] - y[1]),
            (SpaceKind::Address(ifs), Point::Address(u), Point::Address(v)) => {
                if u == v {
                    return 0.0;
                }
                let (p, q) = (ifs.coords(u), ifs.coords(v));
                (p[0] - q[0]).hypot(p[1] - q[1])
            }
            (SpaceKind::Dendrite(tree), Point::Arc { arc: a1, t: t1 }, Point::Arc { arc: a2, t: t2 }) => {
                tree.distance((*a1, *t1), (*a2, *t2))
            }
            (SpaceKind::Finite { .. }, Point::State(s), Point::State(t)) => {
                if s == t {
                    0.0
                } else {
                    1.0
                }
            }
            _ => f64::NAN,
        }
    }

    /// Planar coordinates that are 1-Lipschitz for the metric: the Euclidean
    /// distance between anchors never exceeds the distance between points.
    pub fn anchor(&self, p: &Point) -> [f64; 2] {
        match (&self.kind, p) {
            (SpaceKind::Interval, Point::Real(c)) => [c[0], 0.0],
            (SpaceKind::Circle, Point::Real(c)) => {
                let r = 1.0 / TAU;
                [r * (TAU * c[0]).cos(), r * (TAU * c[0]).sin()]
            }
            (SpaceKind::Triangle, Point::Real(c)) => [c[0], c[1]],
            (SpaceKind::Address(ifs), Point::Address(w)) => ifs.coords(w),
            (SpaceKind::Dendrite(tree), Point::Arc { arc, t }) => tree.position(*arc, *t),
            (SpaceKind::Finite { size }, Point::State(s)) => [0.5 * *s as f64 / *size as f64, 0.0],
            _ => [f64::NAN, f64::NAN],
        }
    }

    /// A scalar summary coordinate used by coordinate and Fourier observables.
    pub fn scalar_coordinate(&self, p: &Point) -> f64 {
        match (&self.kind, p) {
            (SpaceKind::Interval | SpaceKind::Circle, Point::Real(c)) => c[0],
            (SpaceKind::Finite { size }, Point::State(s)) => *s as f64 / *size as f64,
            _ => {
                let a = self.anchor(p);
                a[0] + std::f64::consts::FRAC_1_SQRT_2 * a[1]
            }
        }
    }

    /// A finite ε-net: every point of the space lies within ε of a net point.
    pub fn epsilon_net(&self, eps: f64) -> Result<Vec<Point>> {
        require_positive("epsilon", eps)?;
        Ok(match &self.kind {
            SpaceKind::Interval => {
                let m = steps_for(1.0, eps);
                (0..=m).map(|i| Point::real(i as f64 / m as f64)).collect()
            }
            SpaceKind::Circle => {
                let m = steps_for(1.0, eps);
                (0..m).map(|i| Point::real(i as f64 / m as f64)).collect()
            }
            SpaceKind::Triangle => {
                let m = steps_for(1.0, eps);
                let mut pts = Vec::new();
                for i in 0..=m {
                    for j in 0..=(m - i) {
                        let (x, y) = bary_to_cartesian(i as f64 / m as f64, j as f64 / m as f64);
                        pts.push(Point::Real(vec![x, y]));
                    }
                }
                pts
            }
            SpaceKind::Address(ifs) => {
                let len = ifs.prefix_len_for(eps);
                ifs.words(len)
                    .into_iter()
                    .map(|w| Point::Address(ifs.pad(&w)))
                    .collect()
            }
            SpaceKind::Dendrite(tree) => {
                let mut pts: Vec<Point> = (0..tree.vertex_count())
                    .map(|v| {
                        let (arc, t) = tree.vertex_point(v);
                        Point::Arc { arc, t }
                    })
                    .collect();
                for (arc, a) in tree.arcs().iter().enumerate() {
                    let m = steps_for(a.length, eps);
                    pts.extend((1..m).map(|j| Point::Arc {
                        arc,
                        t: j as f64 / m as f64,
                    }));
                }
                pts
            }
            SpaceKind::Finite { size } => (0..*size).map(Point::State).collect(),
        })
    }

    /// Number of cells `grid(mesh)` would produce, saturating.
    pub fn grid_cell_count(&self, mesh: f64) -> usize {
        if mesh.is_nan() || mesh <= 0.0 {
            return usize::MAX;
        }
        match &self.kind {
            SpaceKind::Interval | SpaceKind::Circle => steps_for(1.0, mesh),
            SpaceKind::Triangle => triangle_side_for(mesh).saturating_pow(2),
            SpaceKind::Address(ifs) => ifs.alphabet_size().saturating_pow(ifs.prefix_len_for(mesh) as u32),
            SpaceKind::Dendrite(tree) => tree.arcs().iter().map(|a| steps_for(a.length, mesh)).sum(),
            SpaceKind::Finite { size } => *size,
        }
    }

    /// Covers the space by cells with radius bound at most `mesh`.
    pub fn grid(&self, mesh: f64) -> Result<Grid> {
        require_positive("mesh", mesh)?;
        let (resolution, cells) = match &self.kind {
            SpaceKind::Interval | SpaceKind::Circle => {
                let m = steps_for(1.0, mesh);
                let w = 1.0 / m as f64;
                let cells = (0..m)
                    .map(|i| Cell {
                        id: i,
                        rep: Point::real((i as f64 + 0.5) * w),
                        radius: w / 2.0,
                    })
                    .collect();
                (Resolution::Uniform { cells: m }, cells)
            }
            SpaceKind::Triangle => {
                let m = triangle_side_for(mesh);
                let radius = 1.0 / (SQRT3 * m as f64);
                let mut cells = Vec::with_capacity(m * m);
                for i in 0..m {
                    for j in 0..(m - i) {
                        for (up, offset) in [(true, 1.0 / 3.0), (false, 2.0 / 3.0)] {
                            if !up && i + j + 2 > m {
                                continue;
                            }
                            let l1 = (i as f64 + offset) / m as f64;
                            let l2 = (j as f64 + offset) / m as f64;
                            let (x, y) = bary_to_cartesian(l1, l2);
                            cells.push((triangle_cell_index(m, i, j, up), Point::Real(vec![x, y])));
                        }
                    }
                }
                cells.sort_by_key(|(id, _)| *id);
                let cells = cells.into_iter().map(|(id, rep)| Cell { id, rep, radius }).collect();
                (Resolution::Triangle { side: m }, cells)
            }
            SpaceKind::Address(ifs) => {
                let len = ifs.prefix_len_for(mesh);
                let radius = ifs.cylinder_diameter(len);
                let cells = ifs
                    .words(len)
                    .into_iter()
                    .enumerate()
                    .map(|(id, w)| Cell {
                        id,
                        rep: Point::Address(ifs.pad(&w)),
                        radius,
                    })
                    .collect();
                (Resolution::Prefix { len }, cells)
            }
            SpaceKind::Dendrite(tree) => {
                let mut segments = Vec::new();
                let mut offsets = Vec::new();
                let mut cells = Vec::new();
                for (arc, a) in tree.arcs().iter().enumerate() {
                    let m = steps_for(a.length, mesh);
                    offsets.push(cells.len());
                    segments.push(m);
                    for s in 0..m {
                        cells.push(Cell {
                            id: cells.len(),
                            rep: Point::Arc {
                                arc,
                                t: (s as f64 + 0.5) / m as f64,
                            },
                            radius: a.length / (2.0 * m as f64),
                        });
                    }
                }
                (Resolution::Dendrite { segments, offsets }, cells)
            }
            SpaceKind::Finite { size } => (
                Resolution::Finite,
                (0..*size)
                    .map(|s| Cell {
                        id: s,
                        rep: Point::State(s),
                        radius: 0.0,
                    })
                    .collect(),
            ),
        };
        Ok(Grid {
            mesh,
            resolution,
            cells,
        })
    }

    /// Draws a point from a fixed reference distribution on the space.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match &self.kind {
            SpaceKind::Interval => Point::real(rng.gen::<f64>()),
            SpaceKind::Circle => Point::real(rng.gen::<f64>()),
            SpaceKind::Triangle => {
                let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
                if a + b > 1.0 {
                    a = 1.0 - a;
                    b = 1.0 - b;
                }
                let (x, y) = bary_to_cartesian(a, b);
                Point::Real(vec![x, y])
            }
            SpaceKind::Address(ifs) => Point::Address(
                (0..ifs.depth())
                    .map(|_| rng.gen_range(0..ifs.alphabet_size()) as u8)
                    .collect(),
            ),
            SpaceKind::Dendrite(tree) => Point::Arc {
                arc: rng.gen_range(0..tree.arcs().len()),
                t: rng.gen::<f64>(),
            },
            SpaceKind::Finite { size } => Point::State(rng.gen_range(0..*size)),
        }
    }

    /// A random point of the space within about `delta` of `p`.
    pub fn perturb<R: Rng + ?Sized>(&self, p: &Point, delta: f64, rng: &mut R) -> Point {
        match (&self.kind, p) {
            (SpaceKind::Interval, Point::Real(c)) => {
                Point::real((c[0] + rng.gen_range(-delta..=delta)).clamp(0.0, 1.0))
            }
            (SpaceKind::Circle, Point::Real(c)) => Point::real(wrap_unit(c[0] + rng.gen_range(-delta..=delta))),
            (SpaceKind::Triangle, Point::Real(c)) => {
                let (mut l1, mut l2) = cartesian_to_bary(c[0], c[1]);
                l1 += rng.gen_range(-delta..=delta);
                l2 += rng.gen_range(-delta..=delta);
                l1 = l1.max(0.0);
                l2 = l2.max(0.0);
                let s = l1 + l2;
                if s > 1.0 {
                    l1 /= s;
                    l2 /= s;
                }
                let (x, y) = bary_to_cartesian(l1, l2);
                Point::Real(vec![x, y])
            }
            (SpaceKind::Address(ifs), Point::Address(w)) => {
                let from = ifs.prefix_len_for(delta);
                let mut word = w.clone();
                for letter in word.iter_mut().skip(from) {
                    *letter = rng.gen_range(0..ifs.alphabet_size()) as u8;
                }
                Point::Address(word)
            }
            (SpaceKind::Dendrite(tree), Point::Arc { arc, t }) => {
                let dt = delta / tree.arcs()[*arc].length;
                Point::Arc {
                    arc: *arc,
                    t: (t + rng.gen_range(-dt..=dt)).clamp(0.0, 1.0),
                }
            }
            _ => p.clone(),
        }
    }
}

/// Fractional part in [0, 1).
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

pub fn circle_dist(x: f64, y: f64) -> f64 {
    let d = (x - y).abs() % 1.0;
    d.min(1.0 - d)
}

/// Number of equal steps of length at most `step` covering `length`.
fn steps_for(length: f64, step: f64) -> usize {
    let ratio = length / step;
    let rounded = ratio.round();
    let m = if (ratio - rounded).abs() < 1e-9 * ratio.max(1.0) {
        rounded
    } else {
        ratio.ceil()
    };
    (m as usize).max(1)
}

fn triangle_side_for(mesh: f64) -> usize {
    // circumradius of a sub-triangle of side 1/m is 1/(√3 m) <= mesh/2
    steps_for(2.0 / SQRT3, mesh)
}

fn triangle_cell_index(side: usize, i: usize, j: usize, up: bool) -> usize {
    // Row i holds (side - i) up-cells followed by (side - i - 1) down-cells.
    let before: usize = (0..i).map(|r| 2 * (side - r) - 1).sum();
    if up {
        before + j
    } else {
        before + (side - i) + j
    }
}

fn triangle_cell_of(side: usize, l1: f64, l2: f64) -> usize {
    let m = side as f64;
    let (u, v) = ((l1 * m).max(0.0), (l2 * m).max(0.0));
    let mut i = (u.floor() as usize).min(side - 1);
    let mut j = (v.floor() as usize).min(side - 1);
    if i + j > side - 1 {
        // outside the lattice of up-cells along the far edge: clamp back
        if i >= j {
            i = side - 1 - j;
        } else {
            j = side - 1 - i;
        }
        return triangle_cell_index(side, i, j, true);
    }
    let (fu, fv) = (u - i as f64, v - j as f64);
    let up = fu + fv < 1.0 || i + j + 2 > side;
    triangle_cell_index(side, i, j, up)
}

/// Barycentric weights of vertices v1 = (1,0) and v2 = (1/2, √3/2).
pub(crate) fn cartesian_to_bary(x: f64, y: f64) -> (f64, f64) {
    let l2 = 2.0 * y / SQRT3;
    let l1 = x - 0.5 * l2;
    (l1, l2)
}

pub(crate) fn bary_to_cartesian(l1: f64, l2: f64) -> (f64, f64) {
    (l1 + 0.5 * l2, SQRT3 / 2.0 * l2)
}

#[cfg(test)]
mod tests;
