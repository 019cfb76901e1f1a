//! Seeded density estimates for the set of observables that pass the
//! embedding check.

use super::{alpha_embedding_check, DelaySchedule, PairSource};
use crate::dynamics::{Observable, ObservableSpec, SystemSpec, WeightedTerm};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A seeded parameterisation of observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ObservableFamily {
    /// Constants drawn uniformly from `[lo, hi]`.
    Constant { lo: f64, hi: f64 },
    /// The coordinate observable plus `scale` times a seeded Fourier term.
    PerturbedCoordinate { scale: f64, order: usize, decay: f64 },
    /// Seeded Fourier observables.
    Fourier { order: usize, decay: f64 },
}

impl ObservableFamily {
    pub fn draw(&self, seed: u64) -> ObservableSpec {
        match self {
            ObservableFamily::Constant { lo, hi } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                ObservableSpec::Constant {
                    value: if hi > lo { rng.gen_range(*lo..=*hi) } else { *lo },
                }
            }
            ObservableFamily::PerturbedCoordinate { scale, order, decay } => ObservableSpec::Sum {
                terms: vec![
                    WeightedTerm {
                        weight: 1.0,
                        observable: ObservableSpec::Coordinate { index: 0 },
                    },
                    WeightedTerm {
                        weight: *scale,
                        observable: ObservableSpec::Fourier {
                            seed,
                            order: *order,
                            decay: *decay,
                        },
                    },
                ],
            },
            ObservableFamily::Fourier { order, decay } => ObservableSpec::Fourier {
                seed,
                order: *order,
                decay: *decay,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanDraw {
    pub index: usize,
    pub seed: u64,
    pub system: String,
    pub observable: String,
    pub kept_pairs: usize,
    pub violations: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub schedule: Vec<usize>,
    pub alpha: f64,
    pub draws: Vec<ScanDraw>,
    pub passes: usize,
    pub density: f64,
    /// 95% Wilson score interval for the density.
    pub interval: (f64, f64),
}

/// Seed of draw `index`: the first output of stream `index` of the scan seed.
fn draw_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng.gen()
}

/// Runs the embedding check on `draws` seeded observables (cycling through
/// `systems`) and reports the passing fraction.
pub fn generic_scan(
    systems: &[SystemSpec],
    family: &ObservableFamily,
    schedule: &DelaySchedule,
    alpha: f64,
    draws: usize,
    pairs_per_draw: usize,
    seed: u64,
) -> Result<ScanReport> {
    if systems.is_empty() {
        return Err(Error::Empty("systems"));
    }
    if draws == 0 {
        return Err(Error::Empty("draws"));
    }
    schedule.validate()?;
    let results: Vec<ScanDraw> = (0..draws)
        .into_par_iter()
        .map(|index| {
            let sys = &systems[index % systems.len()];
            let draw = draw_seed(seed, index);
            let f = Observable::new(family.draw(draw), sys.space())?;
            let report = alpha_embedding_check(
                sys,
                &f,
                schedule,
                alpha,
                PairSource::Random {
                    pairs: pairs_per_draw,
                    seed: draw,
                },
            )?;
            Ok(ScanDraw {
                index,
                seed: draw,
                system: sys.label(),
                observable: f.label(),
                kept_pairs: report.kept_pairs,
                violations: report.violation_count,
                passed: report.passed,
            })
        })
        .collect::<Result<_>>()?;
    let passes = results.iter().filter(|d| d.passed).count();
    Ok(ScanReport {
        schedule: schedule.times(),
        alpha,
        passes,
        density: passes as f64 / draws as f64,
        interval: wilson_interval(passes, draws),
        draws: results,
    })
}

/// 95% Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}
