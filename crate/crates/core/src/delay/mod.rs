//! Delay observation maps `x -> (f T^j(x))_{j in S}` and finite-sample
//! certificates built on them.

mod coincidence;
mod isomorphism;
mod scan;

pub use coincidence::{coincidence_count, orbit_class_infer, CoincidenceReport, OrbitClassVerdict};
pub use isomorphism::{
    trajectory_isomorphism_check_finite, trajectory_isomorphism_check_with_shift, IsomorphismOutcome, IsomorphismReport,
};
pub use scan::{generic_scan, wilson_interval, ObservableFamily, ScanDraw, ScanReport};

use crate::dynamics::{separation_unchecked, Observable, SeparationVerdict, SystemSpec};
use crate::error::{invalid, require_positive, Error, Result};
use crate::spaces::Point;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default coincidence / vector tolerance on real-coordinate spaces.
pub const REAL_VECTOR_TOLERANCE: f64 = 1e-9;

/// Draws allowed per requested pair before the sampler gives up on it.
const MAX_ATTEMPTS_PER_PAIR: usize = 1000;

/// Vector tolerance used for a system: exact on address and finite spaces.
pub fn vector_tolerance(sys: &SystemSpec) -> f64 {
    if sys.space().is_exact() {
        0.0
    } else {
        REAL_VECTOR_TOLERANCE
    }
}

/// The finite set of delay times `S`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelaySchedule {
    /// `S = {0, ..., k}`.
    Prefix(usize),
    /// Explicit strictly increasing times.
    Times(Vec<usize>),
}

impl DelaySchedule {
    pub fn prefix(k: usize) -> Self {
        DelaySchedule::Prefix(k)
    }

    pub fn explicit(times: Vec<usize>) -> Result<Self> {
        let schedule = DelaySchedule::Times(times);
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        if let DelaySchedule::Times(t) = self {
            if t.is_empty() {
                return Err(invalid("schedule", "must contain at least one time"));
            }
            if t.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("schedule", "times must be strictly increasing"));
            }
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<usize> {
        match self {
            DelaySchedule::Prefix(k) => (0..=*k).collect(),
            DelaySchedule::Times(t) => t.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            DelaySchedule::Prefix(k) => k + 1,
            DelaySchedule::Times(t) => t.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_time(&self) -> usize {
        match self {
            DelaySchedule::Prefix(k) => *k,
            DelaySchedule::Times(t) => t.last().copied().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub system: String,
    pub observable: String,
    pub base_point: Option<Point>,
}

/// `(f T^j(x))_{j in S}` with the sup metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayVector {
    pub schedule: Vec<usize>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl DelayVector {
    pub fn distance(&self, other: &DelayVector) -> f64 {
        sup_distance(&self.values, &other.values)
    }
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Values `f(T^j x)` for the given increasing times; no membership check.
pub(crate) fn delay_values(sys: &SystemSpec, f: &Observable, times: &[usize], x: &Point) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut p = x.clone();
    let mut t = 0;
    for &target in times {
        while t < target {
            p = sys.apply(&p);
            t += 1;
        }
        out.push(f.eval(&p));
    }
    out
}

pub fn delay_map(sys: &SystemSpec, f: &Observable, schedule: &DelaySchedule, x: &Point) -> Result<DelayVector> {
    schedule.validate()?;
    sys.space().check(x)?;
    let times = schedule.times();
    Ok(DelayVector {
        values: delay_values(sys, f, &times, x),
        schedule: times,
        provenance: Provenance {
            system: sys.label(),
            observable: f.label(),
            base_point: Some(x.clone()),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NaturalityReport {
    pub k: usize,
    pub samples: usize,
    /// Largest coordinate difference; the identity is exact, so this must be 0.
    pub max_deviation: f64,
}

/// Checks `I_{0..k}(T x) = (I_{0..k+1}(x))_{1..=k+1}` on each sample point.
pub fn shift_naturality_check(
    sys: &SystemSpec,
    f: &Observable,
    k: usize,
    samples: &[Point],
) -> Result<NaturalityReport> {
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    for x in samples {
        sys.space().check(x)?;
    }
    let short: Vec<usize> = (0..=k).collect();
    let long: Vec<usize> = (0..=k + 1).collect();
    let max_deviation = samples
        .par_iter()
        .map(|x| {
            let shifted = delay_values(sys, f, &short, &sys.apply(x));
            let full = delay_values(sys, f, &long, x);
            sup_distance(&shifted, &full[1..])
        })
        .reduce(|| 0.0, f64::max);
    Ok(NaturalityReport {
        k,
        samples: samples.len(),
        max_deviation,
    })
}

/// Where the pairs of a check come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSource {
    /// `pairs` pairs drawn by per-pair streams of a generator seeded with `seed`.
    Random { pairs: usize, seed: u64 },
    /// Every ordered pair `x < y` of a finite space.
    Exhaustive,
}

fn pair_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn finite_pairs(sys: &SystemSpec) -> Result<Vec<(Point, Point)>> {
    let size = sys
        .space()
        .finite_size()
        .ok_or_else(|| Error::Unsupported("exhaustive pairs need a finite space".into()))?;
    Ok((0..size)
        .flat_map(|x| (x + 1..size).map(move |y| (Point::State(x), Point::State(y))))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairWitness {
    pub x: Point,
    pub y: Point,
    pub distance: f64,
}

/// Finite-sample evidence that `I^S` is an α-trajectory-embedding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingReport {
    pub system: String,
    pub observable: String,
    pub schedule: Vec<usize>,
    pub alpha: f64,
    pub tolerance: f64,
    pub kept_pairs: usize,
    pub violation_count: usize,
    /// First violations in sampling order (at most 100).
    pub violations: Vec<PairWitness>,
    pub passed: bool,
}

/// Token proving an embedding check passed; required by checks that assume
/// the reconstructed shift is well defined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingCertificate {
    pub system: String,
    pub observable: String,
    pub schedule: Vec<usize>,
    pub alpha: f64,
}

impl EmbeddingReport {
    pub fn certificate(&self) -> Option<EmbeddingCertificate> {
        self.passed.then(|| EmbeddingCertificate {
            system: self.system.clone(),
            observable: self.observable.clone(),
            schedule: self.schedule.clone(),
            alpha: self.alpha,
        })
    }
}

impl EmbeddingCertificate {
    pub(crate) fn require(&self, sys: &SystemSpec, f: &Observable, k: usize) -> Result<()> {
        let want: Vec<usize> = (0..=k).collect();
        if self.system != sys.label() || self.observable != f.label() || self.schedule != want {
            return Err(Error::Precondition(format!(
                "certificate is for {} / {} on {:?}, not {} / {} on {:?}",
                self.system,
                self.observable,
                self.schedule,
                sys.label(),
                f.label(),
                want
            )));
        }
        Ok(())
    }
}

/// Samples pairs that stay at least `alpha` apart at every time of `S` and
/// checks that their delay vectors differ by more than the vector tolerance.
pub fn alpha_embedding_check(
    sys: &SystemSpec,
    f: &Observable,
    schedule: &DelaySchedule,
    alpha: f64,
    source: PairSource,
) -> Result<EmbeddingReport> {
    require_positive("alpha", alpha)?;
    schedule.validate()?;
    let times = schedule.times();
    let tolerance = vector_tolerance(sys);
    let space = sys.space();

    let kept_apart = |x: &Point, y: &Point| -> bool {
        let (mut a, mut b) = (x.clone(), y.clone());
        let mut t = 0;
        for &target in &times {
            while t < target {
                a = sys.apply(&a);
                b = sys.apply(&b);
                t += 1;
            }
            if space.dist(&a, &b) < alpha {
                return false;
            }
        }
        true
    };

    let pairs: Vec<(Point, Point)> = match source {
        PairSource::Exhaustive => finite_pairs(sys)?
            .into_iter()
            .filter(|(x, y)| kept_apart(x, y))
            .collect(),
        PairSource::Random { pairs, seed } => (0..pairs)
            .into_par_iter()
            .filter_map(|i| {
                let mut rng = pair_rng(seed, i);
                (0..MAX_ATTEMPTS_PER_PAIR).find_map(|_| {
                    let (x, y) = (space.sample(&mut rng), space.sample(&mut rng));
                    kept_apart(&x, &y).then_some((x, y))
                })
            })
            .collect(),
    };

    let violations: Vec<PairWitness> = pairs
        .par_iter()
        .filter_map(|(x, y)| {
            let d = sup_distance(&delay_values(sys, f, &times, x), &delay_values(sys, f, &times, y));
            (d <= tolerance).then(|| PairWitness {
                x: x.clone(),
                y: y.clone(),
                distance: d,
            })
        })
        .collect();

    Ok(EmbeddingReport {
        system: sys.label(),
        observable: f.label(),
        schedule: times,
        alpha,
        tolerance,
        kept_pairs: pairs.len(),
        violation_count: violations.len(),
        passed: violations.is_empty(),
        violations: violations.into_iter().take(100).collect(),
    })
}

/// Empirical modulus of continuity of the reconstructed shift on `{0..k}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftModulusReport {
    pub k: usize,
    pub delta_in: f64,
    pub pairs_examined: usize,
    pub pairs_within: usize,
    pub max_in: f64,
    pub max_out: f64,
    pub worst: Option<PairWitness>,
    /// Every pair with equal input vectors (within tolerance) has equal outputs.
    pub equal_inputs_preserved: bool,
}

/// For pairs whose `{0..k}` delay vectors are within `delta_in`, measures the
/// distance between the delay vectors of `(T x, T y)`.
pub fn reconstructed_shift_welldefined(
    sys: &SystemSpec,
    f: &Observable,
    k: usize,
    delta_in: f64,
    source: PairSource,
    certificate: Option<&EmbeddingCertificate>,
) -> Result<ShiftModulusReport> {
    let cert =
        certificate.ok_or_else(|| Error::Precondition("no passing embedding check for the working schedule".into()))?;
    cert.require(sys, f, k)?;
    if !(delta_in >= 0.0 && delta_in.is_finite()) {
        return Err(invalid("delta_in", "must be a finite non-negative number"));
    }
    let times: Vec<usize> = (0..=k).collect();
    let tolerance = vector_tolerance(sys);
    let space = sys.space();

    let pairs: Vec<(Point, Point)> = match source {
        PairSource::Exhaustive => {
            let mut all = finite_pairs(sys)?;
            all.extend((0..space.finite_size().unwrap_or(0)).map(|s| (Point::State(s), Point::State(s))));
            all
        }
        PairSource::Random { pairs, seed } => {
            let expansion = sys.sampled_expansion(1024, seed).max(1.0);
            let probe = delta_in / expansion.powi(k as i32);
            (0..pairs)
                .into_par_iter()
                .map(|i| {
                    let mut rng = pair_rng(seed, i);
                    let x = space.sample(&mut rng);
                    let y = space.perturb(&x, probe, &mut rng);
                    (x, y)
                })
                .collect()
        }
    };

    let measured: Vec<(f64, f64, usize)> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (x, y))| {
            let d_in = sup_distance(&delay_values(sys, f, &times, x), &delay_values(sys, f, &times, y));
            let d_out = sup_distance(
                &delay_values(sys, f, &times, &sys.apply(x)),
                &delay_values(sys, f, &times, &sys.apply(y)),
            );
            (d_in, d_out, i)
        })
        .collect();

    let within: Vec<&(f64, f64, usize)> = measured.iter().filter(|m| m.0 <= delta_in).collect();
    let worst = within.iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|m| PairWitness {
        x: pairs[m.2].0.clone(),
        y: pairs[m.2].1.clone(),
        distance: m.1,
    });
    Ok(ShiftModulusReport {
        k,
        delta_in,
        pairs_examined: pairs.len(),
        pairs_within: within.len(),
        max_in: within.iter().map(|m| m.0).fold(0.0, f64::max),
        max_out: within.iter().map(|m| m.1).fold(0.0, f64::max),
        worst,
        equal_inputs_preserved: measured.iter().filter(|m| m.0 <= tolerance).all(|m| m.1 <= tolerance),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectionCounterexample {
    /// Prefix vectors agree but the longer window does not.
    LongWindowMismatch { x: Point, y: Point, long_distance: f64 },
    /// Prefix vectors agree but the orbits never merge within the long window.
    UnmergedOrbits { x: Point, y: Point },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionReport {
    pub k: usize,
    pub k_long: usize,
    pub pairs_checked: usize,
    pub premise_pairs: usize,
    pub counterexample: Option<ProjectionCounterexample>,
    pub passed: bool,
}

/// Over all pairs of `points`: whenever the `{0..k}` delay vectors agree, the
/// `{0..k_long}` vectors must agree too and the orbits must merge by `k_long`.
pub fn projection_injectivity_check(
    sys: &SystemSpec,
    f: &Observable,
    k: usize,
    k_long: usize,
    points: &[Point],
) -> Result<ProjectionReport> {
    if k_long <= k {
        return Err(invalid("k_long", "must exceed k"));
    }
    for p in points {
        sys.space().check(p)?;
    }
    let tolerance = vector_tolerance(sys);
    let expansion = sys.sampled_expansion(1024, 7).max(1.0);
    let long_tolerance = tolerance * expansion.powi((k_long - k) as i32);
    let long_times: Vec<usize> = (0..=k_long).collect();
    let vectors: Vec<Vec<f64>> = points
        .par_iter()
        .map(|x| delay_values(sys, f, &long_times, x))
        .collect();

    let mut premise_pairs = 0;
    let mut pairs_checked = 0;
    let mut counterexample = None;
    'outer: for i in 0..points.len() {
        for j in i + 1..points.len() {
            pairs_checked += 1;
            let (a, b) = (&vectors[i], &vectors[j]);
            if sup_distance(&a[..=k], &b[..=k]) > tolerance {
                continue;
            }
            premise_pairs += 1;
            let long_distance = sup_distance(a, b);
            if long_distance > long_tolerance {
                counterexample = Some(ProjectionCounterexample::LongWindowMismatch {
                    x: points[i].clone(),
                    y: points[j].clone(),
                    long_distance,
                });
                break 'outer;
            }
            let verdict = separation_unchecked(sys, &points[i], &points[j], k_long, f64::MIN_POSITIVE);
            if !matches!(verdict, SeparationVerdict::MergedAt { .. }) {
                counterexample = Some(ProjectionCounterexample::UnmergedOrbits {
                    x: points[i].clone(),
                    y: points[j].clone(),
                });
                break 'outer;
            }
        }
    }
    Ok(ProjectionReport {
        k,
        k_long,
        pairs_checked,
        premise_pairs,
        passed: counterexample.is_none(),
        counterexample,
    })
}
