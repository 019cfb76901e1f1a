//! Batteries of checks with exactly known answers.

use crate::config::{OracleConfig, Suite};
use crate::error::{CliError, CliResult};
use delayrec_core::delay::{trajectory_isomorphism_check_with_shift, IsomorphismReport};
use delayrec_core::dynamics::periodic_points;
use delayrec_core::recurrence::{build_transition_graph, cell_of, chain_recurrent_cells, decomposition_check};
use delayrec_core::spaces::circle_dist;
use delayrec_core::{MapKind, Observable, Point, Space, SystemSpec};
use rayon::prelude::*;
use serde::Serialize;

/// Largest finite set whose self-maps are enumerated.
pub const MAX_STATES: usize = 6;

/// Failures kept per suite.
const KEPT_FAILURES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleFailure {
    pub case: String,
    pub witness: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub cases: usize,
    pub passed: usize,
    pub failures: Vec<OracleFailure>,
}

impl SuiteResult {
    pub fn all_passed(&self) -> bool {
        self.passed == self.cases
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
}

pub fn oracle_suite(config: &OracleConfig, verify: bool) -> CliResult<OracleSummary> {
    if config.suites.is_empty() {
        return Err(CliError::NoSuites);
    }
    if !(1..=MAX_STATES).contains(&config.states) {
        return Err(CliError::config(
            "oracle.states",
            format!("must be in 1..={MAX_STATES}, got {}", config.states),
        ));
    }
    let mut suites = Vec::new();
    for &suite in &config.suites {
        suites.push(match suite {
            Suite::Finite => finite_battery(config.states, config.fault, verify),
            Suite::AnalyticCr => analytic_cr_battery(verify),
        });
    }
    let passed = suites.iter().all(SuiteResult::all_passed);
    Ok(OracleSummary { suites, passed })
}

/// The map on `size` states with base-`size` digits of `code` as its table.
pub fn decode_map(size: usize, mut code: usize) -> Vec<usize> {
    (0..size)
        .map(|_| {
            let digit = code % size;
            code /= size;
            digit
        })
        .collect()
}

fn isomorphism(table: &[usize], k: usize, fault: bool) -> IsomorphismReport {
    let sys = SystemSpec::finite_map(table.to_vec()).expect("valid table");
    let f = Observable::coordinate(sys.space());
    let report = if fault {
        trajectory_isomorphism_check_with_shift(&sys, &f, k, |_, _| 0)
    } else {
        trajectory_isomorphism_check_with_shift(&sys, &f, k, |_, induced| induced)
    };
    report.expect("finite system")
}

/// Every self-map of `{0..n-1}` for `n <= states`, with the injective
/// coordinate observable and `k = 0` (and `k = 1` when verifying).
pub fn finite_battery(states: usize, fault: bool, verify: bool) -> SuiteResult {
    let tables: Vec<Vec<usize>> = (1..=states)
        .flat_map(|size| (0..size.pow(size as u32)).map(move |code| decode_map(size, code)))
        .collect();
    let ks: &[usize] = if verify { &[0, 1] } else { &[0] };
    let outcomes: Vec<Option<OracleFailure>> = tables
        .par_iter()
        .flat_map_iter(|table| {
            ks.iter().map(move |&k| {
                let report = isomorphism(table, k, fault);
                (!report.passed()).then(|| OracleFailure {
                    case: format!("map {table:?}, k = {k}"),
                    witness: serde_json::to_string(&report.outcome).expect("serializable"),
                })
            })
        })
        .collect();
    summarize(Suite::Finite, outcomes)
}

fn summarize(suite: Suite, outcomes: Vec<Option<OracleFailure>>) -> SuiteResult {
    let cases = outcomes.len();
    let failed: Vec<OracleFailure> = outcomes.into_iter().flatten().collect();
    SuiteResult {
        suite,
        cases,
        passed: cases - failed.len(),
        failures: failed.into_iter().take(KEPT_FAILURES).collect(),
    }
}

type Case = (&'static str, fn() -> Result<(), String>);

fn recurrent_reals(sys: &SystemSpec, mesh: f64, eps: f64) -> Result<(Vec<f64>, usize), String> {
    let graph = build_transition_graph(sys, mesh, eps).map_err(|e| e.to_string())?;
    let set = chain_recurrent_cells(&graph);
    let xs = set
        .cells
        .iter()
        .map(|&c| graph.cells[c].rep.as_real().expect("real cell"))
        .collect();
    Ok((xs, graph.len()))
}

fn whole_space(sys: SystemSpec) -> Result<(), String> {
    let (xs, total) = recurrent_reals(&sys, 2f64.powi(-10), 2f64.powi(-8))?;
    if xs.len() == total {
        Ok(())
    } else {
        Err(format!("{} of {total} cells recurrent", xs.len()))
    }
}

fn square_ends(mesh: f64, eps: f64) -> Result<(), String> {
    let sys = SystemSpec::square();
    let graph = build_transition_graph(&sys, mesh, eps).map_err(|e| e.to_string())?;
    let set = chain_recurrent_cells(&graph);
    if let Some(&c) = set.cells.iter().find(|&&c| {
        let x = graph.cells[c].rep.as_real().expect("real cell");
        x > 0.02 && x < 0.98
    }) {
        return Err(format!("recurrent cell at {}", graph.cells[c].rep));
    }
    let check = decomposition_check(sys.space(), graph.grid(), &set.cells, 0.05).map_err(|e| e.to_string())?;
    if check.holds {
        Ok(())
    } else {
        let widest = check.pieces.iter().map(|p| p.diameter).fold(0.0, f64::max);
        Err(format!("piece of diameter {widest} >= 0.05"))
    }
}

fn analytic_cases() -> Vec<Case> {
    vec![
        ("square map recurrence at the ends", || {
            square_ends(2f64.powi(-10), 2f64.powi(-8))
        }),
        ("doubling map: every cell", || whole_space(SystemSpec::doubling())),
        ("irrational rotation: every cell", || {
            whole_space(SystemSpec::rotation(0.381_966_0))
        }),
        ("identity: every cell", || {
            whole_space(SystemSpec::identity(Space::interval()))
        }),
        ("constant map: one cell", || {
            // the centre of cell 77 at mesh 2^-8
            let p = Point::real(77.5 / 256.0);
            let sys = SystemSpec::new(Space::interval(), MapKind::Constant { point: p.clone() })
                .map_err(|e| e.to_string())?;
            let graph = build_transition_graph(&sys, 2f64.powi(-8), 1e-3).map_err(|e| e.to_string())?;
            let set = chain_recurrent_cells(&graph);
            let c = cell_of(&graph, sys.space(), &p).ok_or("point not located")?;
            if set.cells == vec![c] {
                Ok(())
            } else {
                Err(format!("recurrent cells {:?}, expected [{c}]", set.cells))
            }
        }),
        ("north-south map: fixed points only", || {
            let sys =
                SystemSpec::new(Space::circle(), MapKind::NorthSouth { strength: 0.5 }).map_err(|e| e.to_string())?;
            let (xs, _) = recurrent_reals(&sys, 2f64.powi(-10), 2f64.powi(-9))?;
            match xs
                .iter()
                .find(|&&x| circle_dist(x, 0.0).min(circle_dist(x, 0.5)) >= 0.02)
            {
                Some(x) => Err(format!("recurrent cell at {x}")),
                None => Ok(()),
            }
        }),
        ("finite map: cycles and fixed points", || {
            let sys = SystemSpec::finite_map(vec![1, 2, 0, 0, 4]).map_err(|e| e.to_string())?;
            let graph = build_transition_graph(&sys, 0.5, 0.25).map_err(|e| e.to_string())?;
            let set = chain_recurrent_cells(&graph);
            let mut states: Vec<usize> = set
                .cells
                .iter()
                .map(|&c| graph.cells[c].rep.as_state().expect("state"))
                .collect();
            states.sort_unstable();
            if states == [0, 1, 2, 4] {
                Ok(())
            } else {
                Err(format!("recurrent states {states:?}, expected [0, 1, 2, 4]"))
            }
        }),
        ("periodic points are recurrent", || {
            for sys in [
                SystemSpec::tent(),
                SystemSpec::square(),
                SystemSpec::doubling(),
                SystemSpec::new(Space::interval(), MapKind::Logistic { r: 3.8 }).map_err(|e| e.to_string())?,
            ] {
                let mesh = 2f64.powi(-8);
                let graph = build_transition_graph(&sys, mesh, mesh).map_err(|e| e.to_string())?;
                let set = chain_recurrent_cells(&graph);
                for p in periodic_points(&sys, 4, 1e-3).map_err(|e| e.to_string())? {
                    let c = cell_of(&graph, sys.space(), &p.point).ok_or("periodic point not located")?;
                    if !set.contains(c) {
                        return Err(format!("{}: periodic point {} outside CR", sys.label(), p.point));
                    }
                }
            }
            Ok(())
        }),
    ]
}

/// Chain recurrent sets with analytically known answers (plus a finer
/// re-run of the square map when verifying).
pub fn analytic_cr_battery(verify: bool) -> SuiteResult {
    let mut cases = analytic_cases();
    if verify {
        cases.push(("square map at a finer grid", || {
            square_ends(2f64.powi(-11), 2f64.powi(-9))
        }));
    }
    let outcomes = cases
        .into_iter()
        .map(|(name, case)| {
            case().err().map(|witness| OracleFailure {
                case: name.to_string(),
                witness,
            })
        })
        .collect();
    summarize(Suite::AnalyticCr, outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_every_map_once() {
        let maps: std::collections::HashSet<Vec<usize>> = (0..27).map(|c| decode_map(3, c)).collect();
        assert_eq!(maps.len(), 27);
        assert_eq!(decode_map(3, 5), vec![2, 1, 0]);
    }

    #[test]
    fn small_batteries() {
        let ok = finite_battery(3, false, true);
        assert!(ok.all_passed());
        assert_eq!(ok.cases, 2 * (1 + 4 + 27));
        let bad = finite_battery(3, true, false);
        assert!(!bad.all_passed());
        assert!(!bad.failures.is_empty());
    }

    #[test]
    fn empty_selection_is_an_error() {
        let config = OracleConfig {
            suites: vec![],
            ..OracleConfig::default()
        };
        let err = oracle_suite(&config, false).unwrap_err();
        assert_eq!(err.to_string(), "no suites selected");
    }
}
