//! Coincidence counting along pairs of orbits and the orbit-class inference
//! rule for scalar series.

use super::vector_tolerance;
use crate::dynamics::{separation_unchecked, Observable, SeparationVerdict, SystemSpec};
use crate::error::{invalid, require_positive, Result};
use crate::spaces::Point;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoincidenceReport {
    pub x: Point,
    pub y: Point,
    pub horizon: usize,
    pub tolerance: f64,
    /// Indices `i <= horizon` with `|f T^i x - f T^i y| <= tolerance`.
    pub coinciding: Vec<usize>,
    pub count: usize,
    pub verdict: SeparationVerdict,
    /// `2 dim X`.
    pub bound: usize,
    /// Separated pair with more than `bound` coincidences.
    pub violated: bool,
}

/// Counts coincidences of `f` along the orbits of `x` and `y` up to
/// `horizon`. `alpha` is the separation threshold used for the verdict;
/// `tolerance` defaults to the system's vector tolerance.
pub fn coincidence_count(
    sys: &SystemSpec,
    f: &Observable,
    x: &Point,
    y: &Point,
    horizon: usize,
    tolerance: Option<f64>,
    alpha: f64,
) -> Result<CoincidenceReport> {
    let bound = 2 * sys.space().dimension();
    if horizon < bound + 1 {
        return Err(invalid("horizon", format!("must be at least 2d + 1 = {}", bound + 1)));
    }
    require_positive("alpha", alpha)?;
    let tolerance = tolerance.unwrap_or_else(|| vector_tolerance(sys));
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(invalid("tolerance", "must be non-negative"));
    }
    sys.space().check(x)?;
    sys.space().check(y)?;

    let (mut a, mut b) = (x.clone(), y.clone());
    let mut coinciding = Vec::new();
    for i in 0..=horizon {
        if (f.eval(&a) - f.eval(&b)).abs() <= tolerance {
            coinciding.push(i);
        }
        if i < horizon {
            a = sys.apply(&a);
            b = sys.apply(&b);
        }
    }
    let verdict = separation_unchecked(sys, x, y, horizon, alpha);
    let count = coinciding.len();
    Ok(CoincidenceReport {
        x: x.clone(),
        y: y.clone(),
        horizon,
        tolerance,
        violated: verdict.is_separated() && count > bound,
        coinciding,
        count,
        verdict,
        bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitClassVerdict {
    /// Index `n` by which `2d + 1` coincidences were seen; the orbits are
    /// declared equal from `n` on.
    pub declared_equal_from: Option<usize>,
    pub evidence: Vec<usize>,
    pub threshold: usize,
    /// Both series are (numerically) constant, so the declaration carries no
    /// information about the underlying orbits.
    pub low_confidence: bool,
}

/// Declares `[o(x)] = [o(y)]` as soon as the prefix `[0..n]` of the two
/// observation series holds `2d + 1` coincidences.
pub fn orbit_class_infer(series_x: &[f64], series_y: &[f64], d: usize, tol: f64) -> Result<OrbitClassVerdict> {
    let threshold = 2 * d + 1;
    if series_x.len() != series_y.len() {
        return Err(invalid("series", "both series must have the same length"));
    }
    if series_x.len() < threshold {
        return Err(invalid("series", format!("need at least 2d + 1 = {threshold} terms")));
    }
    if tol.is_nan() || tol < 0.0 {
        return Err(invalid("tol", "must be non-negative"));
    }
    let mut evidence = Vec::new();
    let mut declared_equal_from = None;
    for (i, (a, b)) in series_x.iter().zip(series_y).enumerate() {
        if (a - b).abs() <= tol {
            evidence.push(i);
            if evidence.len() == threshold {
                declared_equal_from = Some(i);
                break;
            }
        }
    }
    let low_confidence = variance(series_x) < tol && variance(series_y) < tol;
    Ok(OrbitClassVerdict {
        declared_equal_from,
        evidence,
        threshold,
        low_confidence,
    })
}

fn variance(series: &[f64]) -> f64 {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}
