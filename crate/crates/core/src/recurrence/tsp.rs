use crate::dynamics::SystemSpec;
use crate::error::{invalid, require_positive, Error, Result};
use crate::spaces::{wrap_unit, Point, Space, SpaceKind, Tree};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Candidates evaluated per parallel batch during search.
const BATCH: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementPiece {
    /// Points of `H` on the boundary of the piece.
    pub boundary: Vec<Point>,
    pub diameter: f64,
}

/// A finite separator `H` with guard radius, and the evidence for both
/// trajectory-separation conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspCertificate {
    pub k: usize,
    pub eta: f64,
    pub d: usize,
    pub h: Vec<Point>,
    pub guard: f64,
    pub samples: usize,
    /// Largest number of times `p in 0..=k` with `T^p(x)` within `guard` of `H`.
    pub achieved_order: usize,
    pub worst_point: Option<Point>,
    pub pieces: Vec<ComplementPiece>,
    pub max_piece_diameter: f64,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspVerification {
    pub verified: bool,
    pub samples: usize,
    pub achieved_order: usize,
    pub worst_point: Option<Point>,
    pub max_piece_diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspSearch {
    pub k: usize,
    pub eta: f64,
    pub d: usize,
    pub guard: f64,
    pub budget: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspSearchOutcome {
    pub certificate: Option<TspCertificate>,
    pub attempts: usize,
    /// Smallest order seen among candidates with small enough pieces.
    pub best_order: Option<usize>,
}

fn check_support(space: &Space, d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::Unsupported(
            "order bound d = 0 would forbid every orbit from meeting H".into(),
        ));
    }
    match space.kind() {
        SpaceKind::Interval | SpaceKind::Circle | SpaceKind::Dendrite(_) => {}
        _ => {
            return Err(Error::Unsupported(format!(
                "separator search needs an interval, circle or dendrite, not `{}`",
                space.name()
            )))
        }
    }
    if d != space.dimension() {
        return Err(invalid(
            "d",
            format!("must equal the space dimension {}", space.dimension()),
        ));
    }
    Ok(())
}

fn real_values(h: &[Point]) -> Vec<f64> {
    let mut xs: Vec<f64> = h.iter().filter_map(Point::as_real).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn interval_pieces(h: &[Point]) -> Vec<ComplementPiece> {
    let xs = real_values(h);
    let mut pieces = Vec::new();
    let mut push = |a: Option<f64>, b: Option<f64>, lo: f64, hi: f64| {
        if hi > lo {
            pieces.push(ComplementPiece {
                boundary: a.into_iter().chain(b).map(Point::real).collect(),
                diameter: hi - lo,
            });
        }
    };
    push(None, Some(xs[0]), 0.0, xs[0]);
    for w in xs.windows(2) {
        push(Some(w[0]), Some(w[1]), w[0], w[1]);
    }
    let last = xs[xs.len() - 1];
    push(Some(last), None, last, 1.0);
    pieces
}

fn circle_pieces(h: &[Point]) -> Vec<ComplementPiece> {
    let xs = real_values(h);
    (0..xs.len())
        .map(|i| {
            let (a, b) = (xs[i], xs[(i + 1) % xs.len()]);
            let gap = if i + 1 == xs.len() { 1.0 - a + b } else { b - a };
            ComplementPiece {
                boundary: if xs.len() == 1 {
                    vec![Point::real(a)]
                } else {
                    vec![Point::real(a), Point::real(b)]
                },
                diameter: gap.min(0.5),
            }
        })
        .collect()
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

fn dendrite_pieces(tree: &Tree, h: &[Point]) -> Vec<ComplementPiece> {
    let arcs = tree.arcs();
    let mut on_arc: Vec<Vec<f64>> = vec![Vec::new(); arcs.len()];
    for p in h {
        if let Point::Arc { arc, t } = p {
            on_arc[*arc].push(*t);
        }
    }
    for ts in &mut on_arc {
        ts.sort_by(f64::total_cmp);
        ts.dedup();
    }
    let mut pieces = Vec::new();
    let mut parent: Vec<usize> = (0..tree.vertex_count()).collect();
    for (i, ts) in on_arc.iter().enumerate() {
        for w in ts.windows(2) {
            pieces.push(ComplementPiece {
                boundary: vec![Point::Arc { arc: i, t: w[0] }, Point::Arc { arc: i, t: w[1] }],
                diameter: (w[1] - w[0]) * arcs[i].length,
            });
        }
        if ts.is_empty() {
            let (a, b) = (find(&mut parent, arcs[i].from), find(&mut parent, arcs[i].to));
            parent[a.max(b)] = a.min(b);
        }
    }
    // each vertex component: its vertices plus the partial arcs up to the
    // nearest point of H
    let mut extremes: Vec<Vec<(usize, f64)>> = vec![Vec::new(); tree.vertex_count()];
    let mut bounds: Vec<Vec<Point>> = vec![Vec::new(); tree.vertex_count()];
    for v in 0..tree.vertex_count() {
        let root = find(&mut parent, v);
        extremes[root].push(tree.vertex_point(v));
    }
    for (i, ts) in on_arc.iter().enumerate() {
        if let (Some(&first), Some(&last)) = (ts.first(), ts.last()) {
            if first > 0.0 {
                let root = find(&mut parent, arcs[i].from);
                extremes[root].push((i, first));
                bounds[root].push(Point::Arc { arc: i, t: first });
            }
            if last < 1.0 {
                let root = find(&mut parent, arcs[i].to);
                extremes[root].push((i, last));
                bounds[root].push(Point::Arc { arc: i, t: last });
            }
        }
    }
    for v in 0..tree.vertex_count() {
        if find(&mut parent, v) != v {
            continue;
        }
        let ext = &extremes[v];
        let mut diameter: f64 = 0.0;
        for a in 0..ext.len() {
            for b in a + 1..ext.len() {
                diameter = diameter.max(tree.distance(ext[a], ext[b]));
            }
        }
        pieces.push(ComplementPiece {
            boundary: std::mem::take(&mut bounds[v]),
            diameter,
        });
    }
    pieces
}

fn complement_pieces(space: &Space, h: &[Point]) -> Vec<ComplementPiece> {
    match space.kind() {
        SpaceKind::Interval => interval_pieces(h),
        SpaceKind::Circle => circle_pieces(h),
        SpaceKind::Dendrite(tree) => dendrite_pieces(tree, h),
        _ => unreachable!("checked by check_support"),
    }
}

fn sample_points(space: &Space, samples: usize, h: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = match space.kind() {
        SpaceKind::Interval => (0..=samples).map(|i| Point::real(i as f64 / samples as f64)).collect(),
        SpaceKind::Circle => (0..samples).map(|i| Point::real(i as f64 / samples as f64)).collect(),
        SpaceKind::Dendrite(tree) => {
            let total: f64 = tree.arcs().iter().map(|a| a.length).sum();
            tree.arcs()
                .iter()
                .enumerate()
                .flat_map(|(arc, a)| {
                    let m = ((samples as f64 * a.length / total).ceil() as usize).max(1);
                    (0..=m).map(move |i| Point::Arc {
                        arc,
                        t: i as f64 / m as f64,
                    })
                })
                .collect()
        }
        _ => unreachable!("checked by check_support"),
    };
    pts.extend(h.iter().cloned());
    pts
}

/// Largest pointwise order over the sample, and the first point attaining it.
fn sampled_order(sys: &SystemSpec, h: &[Point], k: usize, guard: f64, samples: usize) -> (usize, Option<Point>) {
    let space = sys.space();
    let pts = sample_points(space, samples, h);
    let best = pts
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let hits = sys
                .orbit_unchecked(x, k)
                .iter()
                .filter(|y| h.iter().any(|p| space.dist(y, p) <= guard))
                .count();
            (hits, std::cmp::Reverse(i))
        })
        .max()
        .unwrap_or((0, std::cmp::Reverse(0)));
    let worst = (best.0 > 0).then(|| pts[best.1 .0].clone());
    (best.0, worst)
}

fn validate(sys: &SystemSpec, h: &[Point], eta: f64, d: usize, guard: f64, samples: usize) -> Result<()> {
    check_support(sys.space(), d)?;
    require_positive("eta", eta)?;
    require_positive("guard", guard)?;
    if h.is_empty() {
        return Err(Error::Empty("separator"));
    }
    if samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }
    for p in h {
        sys.space().check(p)?;
    }
    Ok(())
}

/// Check both trajectory-separation conditions for a given finite `H`.
pub fn tsp_evaluate(
    sys: &SystemSpec,
    h: Vec<Point>,
    k: usize,
    eta: f64,
    d: usize,
    guard: f64,
    samples: usize,
) -> Result<TspCertificate> {
    validate(sys, &h, eta, d, guard, samples)?;
    let pieces = complement_pieces(sys.space(), &h);
    let max_piece_diameter = pieces.iter().map(|p| p.diameter).fold(0.0, f64::max);
    let (achieved_order, worst_point) = sampled_order(sys, &h, k, guard, samples);
    Ok(TspCertificate {
        k,
        eta,
        d,
        h,
        guard,
        samples,
        achieved_order,
        worst_point,
        verified: achieved_order <= d && max_piece_diameter <= eta,
        pieces,
        max_piece_diameter,
    })
}

/// Re-check a certificate on an independent sample of the given size.
pub fn tsp_verify(sys: &SystemSpec, cert: &TspCertificate, samples: usize) -> Result<TspVerification> {
    let fresh = tsp_evaluate(sys, cert.h.clone(), cert.k, cert.eta, cert.d, cert.guard, samples)?;
    Ok(TspVerification {
        verified: fresh.verified,
        samples,
        achieved_order: fresh.achieved_order,
        worst_point: fresh.worst_point,
        max_piece_diameter: fresh.max_piece_diameter,
    })
}

fn propose(space: &Space, eta: f64, attempt: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt as u64);
    let extra = attempt % 3;
    match space.kind() {
        SpaceKind::Interval | SpaceKind::Circle => {
            let m = (1.0 / eta).ceil() as usize + extra;
            let step = 1.0 / m as f64;
            let slack = (eta - step).max(0.0);
            let offset = rng.gen::<f64>() * step;
            let circle = matches!(space.kind(), SpaceKind::Circle);
            (0..m)
                .map(|i| {
                    let jitter = (rng.gen::<f64>() - 0.5) * slack;
                    let x = offset + i as f64 * step + jitter;
                    Point::real(if circle { wrap_unit(x) } else { x.clamp(0.0, 1.0) })
                })
                .collect()
        }
        SpaceKind::Dendrite(tree) => tree
            .arcs()
            .iter()
            .enumerate()
            .flat_map(|(arc, a)| {
                let m = (2.0 * a.length / eta).ceil() as usize + extra;
                let u = rng.gen_range(0.05..0.95);
                (0..m)
                    .map(move |i| Point::Arc {
                        arc,
                        t: (u + i as f64) / m as f64,
                    })
                    .collect::<Vec<_>>()
            })
            .collect(),
        _ => unreachable!("checked by check_support"),
    }
}

/// Seeded search over evenly spread separators; returns the first candidate
/// passing both conditions.
pub fn tsp_search(sys: &SystemSpec, params: &TspSearch) -> Result<TspSearchOutcome> {
    check_support(sys.space(), params.d)?;
    require_positive("eta", params.eta)?;
    require_positive("guard", params.guard)?;
    if params.budget == 0 || params.samples == 0 {
        return Err(invalid("budget", "budget and samples must be at least 1"));
    }
    let space = sys.space();
    let mut best_order: Option<usize> = None;
    let mut attempts = 0;
    for start in (0..params.budget).step_by(BATCH) {
        let batch: Vec<usize> = (start..(start + BATCH).min(params.budget)).collect();
        let results: Vec<TspCertificate> = batch
            .par_iter()
            .map(|&a| {
                let h = propose(space, params.eta, a, params.seed);
                tsp_evaluate(sys, h, params.k, params.eta, params.d, params.guard, params.samples)
            })
            .collect::<Result<_>>()?;
        for cert in results {
            attempts += 1;
            if cert.max_piece_diameter <= params.eta {
                best_order = Some(best_order.map_or(cert.achieved_order, |b| b.min(cert.achieved_order)));
            }
            if cert.verified {
                return Ok(TspSearchOutcome {
                    certificate: Some(cert),
                    attempts,
                    best_order,
                });
            }
        }
    }
    Ok(TspSearchOutcome {
        certificate: None,
        attempts,
        best_order,
    })
}
