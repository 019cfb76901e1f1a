//! Periodic points: bisection on 1-dimensional real spaces, exact
//! enumeration on address and finite spaces.

use super::SystemSpec;
use crate::error::{invalid, require_positive, Error, Result};
use crate::spaces::{Point, SpaceKind};
use serde::Serialize;

/// A returned point is accepted when `d(T^p x, x)` is at most this.
pub const PERIODIC_TOLERANCE: f64 = 1e-9;

/// Largest address space enumerated exhaustively.
const MAX_ENUMERATED_WORDS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicPoint {
    pub point: Point,
    /// Least `p <= n` with `T^p(x) = x` (within tolerance).
    pub period: usize,
}

/// Points of `P_n(T) = {x : T^i(x) = x for some 1 <= i <= n}`.
///
/// On the interval and circle each grid cell of width `mesh` is scanned for a
/// sign change of the displacement `T^i(x) - x`, which is then bisected.
/// Address and finite spaces are enumerated exactly and ignore `mesh`.
pub fn periodic_points(sys: &SystemSpec, n: usize, mesh: f64) -> Result<Vec<PeriodicPoint>> {
    if n == 0 {
        return Err(invalid("n", "period bound must be at least 1"));
    }
    match sys.space().kind() {
        SpaceKind::Interval | SpaceKind::Circle => {
            require_positive("mesh", mesh)?;
            Ok(real_periodic(sys, n, mesh))
        }
        SpaceKind::Finite { size } => Ok(enumerate(sys, n, (0..*size).map(Point::State))),
        SpaceKind::Address(ifs) => {
            let count = ifs.alphabet_size().checked_pow(ifs.depth() as u32);
            match count {
                Some(c) if c <= MAX_ENUMERATED_WORDS => Ok(enumerate(
                    sys,
                    n,
                    ifs.words(ifs.depth()).into_iter().map(Point::Address),
                )),
                _ => Err(Error::Unsupported(format!(
                    "address space with alphabet {} at depth {} is too large to enumerate",
                    ifs.alphabet_size(),
                    ifs.depth()
                ))),
            }
        }
        _ => Err(Error::Unsupported(format!(
            "periodic point search on space `{}`",
            sys.space().name()
        ))),
    }
}

fn least_period(sys: &SystemSpec, x: &Point, n: usize, tol: f64) -> Option<usize> {
    let mut p = x.clone();
    for i in 1..=n {
        p = sys.apply(&p);
        if sys.space().dist(&p, x) <= tol {
            return Some(i);
        }
    }
    None
}

fn enumerate(sys: &SystemSpec, n: usize, points: impl Iterator<Item = Point>) -> Vec<PeriodicPoint> {
    points
        .filter_map(|x| least_period(sys, &x, n, 0.0).map(|period| PeriodicPoint { point: x, period }))
        .collect()
}

fn real_periodic(sys: &SystemSpec, n: usize, mesh: f64) -> Vec<PeriodicPoint> {
    let circle = matches!(sys.space().kind(), SpaceKind::Circle);
    let cells = (1.0 / mesh).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=cells).map(|j| j as f64 / cells as f64).collect();
    let mut roots: Vec<f64> = Vec::new();

    for i in 1..=n {
        let displacement = |x: f64| {
            let x = if circle && x >= 1.0 { 0.0 } else { x };
            let image = sys.iterate_unchecked(&Point::real(x), i).as_real().unwrap_or(f64::NAN);
            let d = image - x;
            if circle {
                d - d.round()
            } else {
                d
            }
        };
        let values: Vec<f64> = grid.iter().map(|&x| displacement(x)).collect();
        for j in 0..cells {
            let (a, b) = (grid[j], grid[j + 1]);
            let (ga, gb) = (values[j], values[j + 1]);
            if ga == 0.0 {
                roots.push(a);
            }
            if j + 1 == cells && gb == 0.0 && !circle {
                roots.push(b);
            }
            if ga * gb < 0.0 {
                roots.push(bisect(&displacement, a, b, ga));
            }
        }
    }

    let accepted = roots.into_iter().filter_map(|r| {
        let r = if circle && r >= 1.0 { 0.0 } else { r };
        let x = Point::real(r);
        least_period(sys, &x, n, PERIODIC_TOLERANCE).map(|period| PeriodicPoint { point: x, period })
    });

    let mut found: Vec<PeriodicPoint> = accepted.collect();
    found.sort_by(|a, b| a.point.as_real().unwrap().total_cmp(&b.point.as_real().unwrap()));
    let mut merged: Vec<PeriodicPoint> = Vec::with_capacity(found.len());
    for p in found {
        match merged.last_mut() {
            Some(last) if sys.space().dist(&last.point, &p.point) <= 10.0 * PERIODIC_TOLERANCE => {
                last.period = last.period.min(p.period);
            }
            _ => merged.push(p),
        }
    }
    if circle && merged.len() > 1 {
        let (first, last) = (&merged[0], &merged[merged.len() - 1]);
        if sys.space().dist(&first.point, &last.point) <= 10.0 * PERIODIC_TOLERANCE {
            let period = first.period.min(last.period);
            merged[0].period = period;
            merged.pop();
        }
    }
    merged
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}
