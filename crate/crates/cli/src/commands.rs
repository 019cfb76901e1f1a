//! One function per command; each returns an [`Execution`] without touching the disk.

use crate::config::{build_schedule, Command, LoadedConfig, RunConfig};
use crate::error::{CliError, CliResult};
use crate::oracle::oracle_suite;
use crate::report::{csv_bytes, Artifact, Execution};
use crate::svg::{cell_plot, line_plot, Series};
use delayrec_core::delay::{
    alpha_embedding_check, coincidence_count, generic_scan, orbit_class_infer, reconstructed_shift_welldefined,
    shift_naturality_check, CoincidenceReport, ObservableFamily, PairSource,
};
use delayrec_core::dynamics::{is_trajectory_separated, periodic_points};
use delayrec_core::entropy::{
    entropy_curve, entropy_equality_check, is_maximal, verify_separated, EntropyEstimate, EntropyGrid, SourceOrbits,
};
use delayrec_core::recurrence::{
    build_transition_graph_with, cell_of, chain_recurrent_cells, decomposition_check, tsp_evaluate, tsp_search,
    tsp_verify, GraphOptions, TspSearch, DEFAULT_CELL_CAP,
};
use delayrec_core::{Error as CoreError, Observable, ObservableSpec, Point, SpaceKind, SystemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

/// Factor by which `--verify` raises the TSP sample density.
pub const VERIFY_DENSITY: usize = 4;

/// Rejection-sampling budget per requested pair in coincidence sweeps.
const ATTEMPTS_PER_PAIR: usize = 1000;

/// Witnesses kept in sweep payloads.
const KEPT_WITNESSES: usize = 10;

pub struct Context<'a> {
    pub loaded: &'a LoadedConfig,
    /// Effective seed: the `--seed` flag if given, else the config's.
    pub seed: Option<u64>,
    pub verify: bool,
}

impl Context<'_> {
    fn config(&self) -> &RunConfig {
        &self.loaded.config
    }

    fn require_seed(&self, what: &str) -> CliResult<u64> {
        self.seed
            .ok_or_else(|| CliError::config("seed", format!("required: {what} is stochastic")))
    }

    fn system(&self) -> CliResult<SystemSpec> {
        let space = self
            .config()
            .space
            .as_ref()
            .ok_or_else(|| CliError::missing("space"))?
            .build()?;
        let map = self
            .config()
            .system
            .clone()
            .ok_or_else(|| CliError::missing("system"))?;
        SystemSpec::new(space, map).map_err(|e| match e {
            CoreError::Unsupported(reason) => CliError::config("system", reason),
            other => CliError::at("system")(other),
        })
    }

    /// The configured observable; the coordinate observable if none is given.
    fn observable(&self, sys: &SystemSpec) -> CliResult<Observable> {
        let spec = self
            .config()
            .observable
            .clone()
            .unwrap_or(ObservableSpec::Coordinate { index: 0 });
        Observable::new(spec, sys.space()).map_err(CliError::at("observable"))
    }

    fn point(&self, sys: &SystemSpec, input: &crate::config::PointInput, path: &str) -> CliResult<Point> {
        let p = input.point();
        sys.space()
            .check(&p)
            .map_err(|e| CliError::config(path, e.to_string()))?;
        Ok(p)
    }
}

pub fn execute(command: Command, ctx: &Context) -> CliResult<Execution> {
    match command {
        Command::Embed => embed(ctx),
        Command::Entropy => entropy(ctx),
        Command::Chainrec => chainrec(ctx),
        Command::Tsp => tsp(ctx),
        Command::Coincide => coincide(ctx),
        Command::InferOrbit => infer_orbit(ctx),
        Command::ScanGeneric => scan(ctx),
        Command::OracleSuite => oracle(ctx),
    }
}

fn check_line(name: &str, passed: bool, detail: impl std::fmt::Display) -> String {
    format!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" })
}

/// First output of stream `index` of a generator seeded with `seed`.
pub fn stream_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng.gen()
}

#[derive(Serialize)]
struct ViolationRow {
    x: String,
    y: String,
    distance: f64,
}

fn embed(ctx: &Context) -> CliResult<Execution> {
    let section = ctx.config().embed.as_ref().ok_or_else(|| CliError::missing("embed"))?;
    let sys = ctx.system()?;
    let f = ctx.observable(&sys)?;
    let schedule = build_schedule(section.k, &section.times, "embed")?;
    let source = match (section.exhaustive, section.pairs) {
        (true, None) => PairSource::Exhaustive,
        (false, Some(pairs)) => PairSource::Random {
            pairs,
            seed: ctx.require_seed("random pair sampling")?,
        },
        _ => {
            return Err(CliError::config(
                "embed.pairs",
                "give `pairs` for random sampling or `exhaustive = true`, not both",
            ))
        }
    };
    let report = alpha_embedding_check(&sys, &f, &schedule, section.alpha, source).map_err(CliError::at("embed"))?;
    let mut passed = report.passed;
    let mut summary = vec![check_line(
        "alpha-embedding",
        report.passed,
        format!(
            "{} violations in {} kept pairs",
            report.violation_count, report.kept_pairs
        ),
    )];
    let mut payload = json!({ "embedding": report });

    if let Some(samples) = section.naturality_samples {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(ctx.require_seed("naturality sampling")?, 1));
        let points: Vec<Point> = (0..samples).map(|_| sys.space().sample(&mut rng)).collect();
        let k = schedule.max_time().max(1);
        let naturality = shift_naturality_check(&sys, &f, k, &points).map_err(CliError::at("embed"))?;
        let ok = naturality.max_deviation == 0.0;
        passed &= ok;
        summary.push(check_line(
            "shift naturality",
            ok,
            format!("max deviation {} over {samples} points", naturality.max_deviation),
        ));
        payload["naturality"] = serde_json::to_value(&naturality)?;
    }

    if let Some(delta) = section.shift_delta {
        match report.certificate() {
            Some(cert) => {
                let modulus =
                    reconstructed_shift_welldefined(&sys, &f, schedule.max_time(), delta, source, Some(&cert))
                        .map_err(CliError::at("embed"))?;
                passed &= modulus.equal_inputs_preserved;
                summary.push(check_line(
                    "reconstructed shift",
                    modulus.equal_inputs_preserved,
                    format!("max output spread {:.3e} within input radius {delta}", modulus.max_out),
                ));
                payload["shift_modulus"] = serde_json::to_value(&modulus)?;
            }
            None => {
                summary.push("SKIP reconstructed shift: embedding not certified".to_string());
                payload["shift_modulus"] = Value::Null;
            }
        }
    }

    let rows: Vec<ViolationRow> = report
        .violations
        .iter()
        .map(|w| ViolationRow {
            x: w.x.to_string(),
            y: w.y.to_string(),
            distance: w.distance,
        })
        .collect();
    Ok(Execution {
        command: Command::Embed,
        passed,
        summary,
        payload,
        artifacts: vec![Artifact::new("violations.csv", csv_bytes(&rows)?)],
    })
}

#[derive(Serialize)]
struct EntropyRow {
    side: &'static str,
    epsilon: f64,
    n: usize,
    s_n_lower: usize,
    ln_s: f64,
    exact: bool,
}

/// The estimate without its witness lists.
fn estimate_summary(est: &EntropyEstimate) -> Value {
    let table: Vec<Value> = est
        .table
        .iter()
        .map(|c| {
            json!({
                "epsilon": c.epsilon,
                "n": c.n,
                "s_n_lower": c.s_n_lower,
                "exact": c.exact,
            })
        })
        .collect();
    json!({
        "candidates": est.candidates,
        "h_estimate": est.h_estimate,
        "fits": est.fits,
        "table": table,
    })
}

fn entropy_rows(side: &'static str, est: &EntropyEstimate) -> Vec<EntropyRow> {
    est.table
        .iter()
        .map(|c| EntropyRow {
            side,
            epsilon: c.epsilon,
            n: c.n,
            s_n_lower: c.s_n_lower,
            ln_s: (c.s_n_lower as f64).ln(),
            exact: c.exact,
        })
        .collect()
}

fn entropy_series(side: &str, est: &EntropyEstimate, epsilons: &[f64]) -> Vec<Series> {
    epsilons
        .iter()
        .map(|&eps| Series {
            label: format!("{side} eps = {eps}"),
            points: est
                .table
                .iter()
                .filter(|c| c.epsilon == eps)
                .map(|c| (c.n as f64, (c.s_n_lower as f64).ln()))
                .collect(),
        })
        .collect()
}

fn entropy(ctx: &Context) -> CliResult<Execution> {
    let section = ctx
        .config()
        .entropy
        .as_ref()
        .ok_or_else(|| CliError::missing("entropy"))?;
    let sys = ctx.system()?;
    let grid = EntropyGrid::new(section.epsilons.clone(), section.ns.clone(), section.mesh)
        .map_err(CliError::at("entropy"))?;
    let mut summary = Vec::new();
    let mut passed = true;
    let mut payload = json!({ "grid": grid, "system": sys.label() });

    let (estimate, reconstructed) = match &section.compare {
        None => (entropy_curve(&sys, &grid).map_err(CliError::at("entropy"))?, None),
        Some(compare) => {
            let f = ctx.observable(&sys)?;
            let seed = ctx.require_seed("the embedding certificate for the comparison")?;
            let check = alpha_embedding_check(
                &sys,
                &f,
                &delayrec_core::delay::DelaySchedule::prefix(compare.k),
                compare.alpha,
                PairSource::Random {
                    pairs: compare.pairs,
                    seed,
                },
            )
            .map_err(CliError::at("entropy.compare"))?;
            let Some(cert) = check.certificate() else {
                return Err(CliError::Refused(CoreError::Precondition(format!(
                    "embedding check on 0..={} failed with {} violations; the comparison needs a certificate",
                    compare.k, check.violation_count
                ))));
            };
            let report = entropy_equality_check(&sys, &f, compare.k, &grid, compare.tolerance, Some(&cert))
                .map_err(CliError::at("entropy.compare"))?;
            passed &= report.passed;
            summary.push(check_line(
                "entropy equality",
                report.passed,
                format!(
                    "h_T = {:.4}, h_sigma = {:.4}, |diff| = {:.4} (tolerance {}) at eps {} over n in {:?}",
                    report.h_t, report.h_sigma, report.difference, report.tolerance, report.epsilon, report.window
                ),
            ));
            payload["equality"] = json!({
                "k": report.k,
                "observable": f.label(),
                "epsilon": report.epsilon,
                "window": report.window,
                "h_t": report.h_t,
                "h_sigma": report.h_sigma,
                "difference": report.difference,
                "tolerance": report.tolerance,
                "fiber_entropy": report.fiber_entropy,
                "passed": report.passed,
                "reconstructed": estimate_summary(&report.reconstructed),
            });
            (report.source, Some(report.reconstructed))
        }
    };
    summary.insert(
        0,
        format!(
            "h_estimate = {:.4} over {} candidates",
            estimate.h_estimate, estimate.candidates
        ),
    );
    payload["estimate"] = estimate_summary(&estimate);

    if let Some(expect) = &section.expect {
        let gap = (estimate.h_estimate - expect.value).abs();
        let ok = gap <= expect.tolerance;
        passed &= ok;
        summary.push(check_line(
            "expected entropy",
            ok,
            format!(
                "|{:.4} - {}| = {gap:.4} (tolerance {})",
                estimate.h_estimate, expect.value, expect.tolerance
            ),
        ));
        payload["expectation"] =
            json!({ "value": expect.value, "tolerance": expect.tolerance, "gap": gap, "passed": ok });
    }

    if ctx.verify {
        let candidates = sys.space().epsilon_net(grid.mesh).map_err(CliError::at("entropy"))?;
        let horizon = *grid.ns.iter().max().expect("validated grid");
        let table = SourceOrbits::new(&sys, &candidates, horizon).map_err(CliError::at("entropy"))?;
        let bad: Vec<(usize, f64)> = estimate
            .table
            .par_iter()
            .filter(|c| {
                !(verify_separated(&table, &c.witness, c.n, c.epsilon)
                    && is_maximal(&table, &c.witness, c.n, c.epsilon))
            })
            .map(|c| (c.n, c.epsilon))
            .collect();
        passed &= bad.is_empty();
        summary.push(check_line(
            "witness re-check",
            bad.is_empty(),
            format!("{} of {} witnesses invalid", bad.len(), estimate.table.len()),
        ));
        payload["witness_recheck"] = json!({ "invalid_cells": bad });
    }
    payload["passed"] = json!(passed);

    let mut rows = entropy_rows("source", &estimate);
    let mut series = entropy_series("T", &estimate, &grid.epsilons);
    if let Some(r) = &reconstructed {
        rows.extend(entropy_rows("reconstructed", r));
        series.extend(entropy_series("sigma", r, &grid.epsilons));
    }
    let plot = line_plot(
        &format!("{}: separated-set growth", sys.label()),
        "n",
        "ln s_n(eps)",
        &series,
    );
    Ok(Execution {
        command: Command::Entropy,
        passed,
        summary,
        payload,
        artifacts: vec![
            Artifact::new("entropy.csv", csv_bytes(&rows)?),
            Artifact::new("entropy.svg", plot),
        ],
    })
}

#[derive(Serialize)]
struct CellRow {
    cell: usize,
    rep: String,
    anchor_x: f64,
    anchor_y: f64,
    radius: f64,
    recurrent: bool,
}

#[derive(Serialize)]
struct EdgeRow {
    from: usize,
    to: usize,
}

fn chainrec(ctx: &Context) -> CliResult<Execution> {
    let section = ctx
        .config()
        .chainrec
        .as_ref()
        .ok_or_else(|| CliError::missing("chainrec"))?;
    let sys = ctx.system()?;
    let options = GraphOptions {
        cell_cap: section.cell_cap.unwrap_or(DEFAULT_CELL_CAP),
        lipschitz: section.lipschitz,
    };
    let graph =
        build_transition_graph_with(&sys, section.mesh, section.epsilon, &options).map_err(CliError::at("chainrec"))?;
    let set = chain_recurrent_cells(&graph);
    let space = sys.space();
    let mut passed = true;
    let mut summary = vec![format!(
        "{} of {} cells chain recurrent ({} edges, lipschitz bound {:.3})",
        set.len(),
        graph.len(),
        graph.edge_count(),
        graph.lipschitz
    )];
    let mut payload = json!({
        "system": sys.label(),
        "mesh": graph.mesh,
        "epsilon": graph.epsilon,
        "lipschitz": graph.lipschitz,
        "cell_count": graph.len(),
        "edge_count": graph.edge_count(),
        "recurrent": set,
    });

    if let Some(eta) = section.eta {
        let (holds, pieces) = if set.is_empty() {
            (true, Vec::new())
        } else {
            let check = decomposition_check(space, graph.grid(), &set.cells, eta).map_err(CliError::at("chainrec"))?;
            (check.holds, check.pieces.iter().map(|p| p.diameter).collect())
        };
        passed &= holds;
        let widest = pieces.iter().copied().fold(0.0, f64::max);
        summary.push(check_line(
            "decomposition",
            holds,
            format!("{} pieces, widest {widest:.4} (eta {eta})", pieces.len()),
        ));
        payload["decomposition"] = json!({ "eta": eta, "holds": holds, "piece_diameters": pieces });
    }

    if let Some(n) = section.periodic_n {
        let points = periodic_points(&sys, n, section.mesh.min(1e-3)).map_err(CliError::at("chainrec"))?;
        let outside: Vec<String> = points
            .iter()
            .filter(|p| cell_of(&graph, space, &p.point).is_none_or(|c| !set.contains(c)))
            .map(|p| p.point.to_string())
            .collect();
        let ok = outside.is_empty();
        passed &= ok;
        summary.push(check_line(
            "periodic points recurrent",
            ok,
            format!("{} of {} periodic points outside", outside.len(), points.len()),
        ));
        payload["periodic"] = json!({ "n": n, "found": points.len(), "outside": outside });
    }

    if let Some(full) = section.expect_full {
        let ok = (set.len() == graph.len()) == full;
        passed &= ok;
        summary.push(check_line(
            "every cell recurrent",
            ok,
            format!("expected {full}, {} of {} recurrent", set.len(), graph.len()),
        ));
    }

    if let Some(ranges) = &section.expect_within {
        if !matches!(space.kind(), SpaceKind::Interval | SpaceKind::Circle) {
            return Err(CliError::config(
                "chainrec.expect_within",
                "only available on the interval and the circle",
            ));
        }
        let stray: Vec<f64> = set
            .cells
            .iter()
            .map(|&c| graph.cells[c].rep.as_real().expect("real cell"))
            .filter(|x| !ranges.iter().any(|r| (r[0]..=r[1]).contains(x)))
            .collect();
        let ok = stray.is_empty();
        passed &= ok;
        summary.push(check_line(
            "recurrence located",
            ok,
            format!("{} recurrent cells outside {ranges:?}", stray.len()),
        ));
        payload["stray_cells"] = json!(stray);
    }
    payload["passed"] = json!(passed);

    let anchors: Vec<[f64; 2]> = graph.cells.iter().map(|c| space.anchor(&c.rep)).collect();
    let marked: Vec<bool> = (0..graph.len()).map(|c| set.contains(c)).collect();
    let cells: Vec<CellRow> = graph
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| CellRow {
            cell: i,
            rep: c.rep.to_string(),
            anchor_x: anchors[i][0],
            anchor_y: anchors[i][1],
            radius: c.radius,
            recurrent: marked[i],
        })
        .collect();
    let edges: Vec<EdgeRow> = graph.edges().map(|(from, to)| EdgeRow { from, to }).collect();
    let plot = cell_plot(
        &format!("{}: chain recurrent cells (eps = {})", sys.label(), graph.epsilon),
        &anchors,
        &marked,
    );
    Ok(Execution {
        command: Command::Chainrec,
        passed,
        summary,
        payload,
        artifacts: vec![
            Artifact::new("cells.csv", csv_bytes(&cells)?),
            Artifact::new("edges.csv", csv_bytes(&edges)?),
            Artifact::new("cells.svg", plot),
        ],
    })
}

#[derive(Serialize)]
struct PieceRow {
    piece: usize,
    diameter: f64,
    boundary: String,
}

fn tsp(ctx: &Context) -> CliResult<Execution> {
    let section = ctx.config().tsp.as_ref().ok_or_else(|| CliError::missing("tsp"))?;
    let sys = ctx.system()?;
    let (certificate, search) = match &section.h {
        Some(h) => {
            let h = h
                .iter()
                .enumerate()
                .map(|(i, p)| ctx.point(&sys, p, &format!("tsp.h[{i}]")))
                .collect::<CliResult<Vec<Point>>>()?;
            let cert = tsp_evaluate(
                &sys,
                h,
                section.k,
                section.eta,
                section.d,
                section.guard,
                section.samples,
            )
            .map_err(CliError::at("tsp"))?;
            (Some(cert), None)
        }
        None => {
            let params = TspSearch {
                k: section.k,
                eta: section.eta,
                d: section.d,
                guard: section.guard,
                budget: section.budget,
                samples: section.samples,
                seed: ctx.require_seed("separator search")?,
            };
            let outcome = tsp_search(&sys, &params).map_err(CliError::at("tsp"))?;
            (outcome.certificate.clone(), Some(outcome))
        }
    };
    let mut passed = certificate.as_ref().is_some_and(|c| c.verified);
    let mut summary = vec![match &certificate {
        Some(c) => check_line(
            "separator",
            c.verified,
            format!(
                "|H| = {}, order {} (allowed {}), widest piece {:.4} (eta {})",
                c.h.len(),
                c.achieved_order,
                c.d,
                c.max_piece_diameter,
                c.eta
            ),
        ),
        None => check_line(
            "separator",
            false,
            format!(
                "none found in {} attempts; best order {:?}",
                search.as_ref().map_or(0, |s| s.attempts),
                search.as_ref().and_then(|s| s.best_order)
            ),
        ),
    }];
    let mut payload = json!({ "system": sys.label(), "certificate": certificate, "search": search.as_ref().map(|s| json!({
        "attempts": s.attempts,
        "best_order": s.best_order,
    })) });

    if ctx.verify {
        if let Some(cert) = certificate.as_ref().filter(|c| c.verified) {
            let samples = cert.samples * VERIFY_DENSITY;
            let verification = tsp_verify(&sys, cert, samples).map_err(CliError::at("tsp"))?;
            passed &= verification.verified;
            summary.push(check_line(
                "re-verification",
                verification.verified,
                format!("order {} at {samples} samples", verification.achieved_order),
            ));
            payload["verification"] = serde_json::to_value(&verification)?;
        }
    }
    payload["passed"] = json!(passed);

    let rows: Vec<PieceRow> = certificate
        .iter()
        .flat_map(|c| c.pieces.iter())
        .enumerate()
        .map(|(i, p)| PieceRow {
            piece: i,
            diameter: p.diameter,
            boundary: p.boundary.iter().map(Point::to_string).collect::<Vec<_>>().join(" "),
        })
        .collect();
    Ok(Execution {
        command: Command::Tsp,
        passed,
        summary,
        payload,
        artifacts: vec![Artifact::new("pieces.csv", csv_bytes(&rows)?)],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub seed: u64,
    pub observable: String,
    pub pairs: usize,
    pub attempts: usize,
    pub max_count: usize,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub horizon: usize,
    pub alpha: f64,
    pub tolerance: Option<f64>,
    pub bound: usize,
    pub rows: Vec<SweepRow>,
    pub total_pairs: usize,
    pub total_violations: usize,
    /// First violating pairs.
    pub witnesses: Vec<CoincidenceReport>,
    pub passed: bool,
}

/// For each of `observables` seeded draws from `family`, samples `pairs`
/// random pairs that are `alpha`-separated up to `horizon` and counts
/// coincidences of the observable along them.
#[allow(clippy::too_many_arguments)]
pub fn coincidence_sweep(
    sys: &SystemSpec,
    family: &ObservableFamily,
    observables: usize,
    pairs: usize,
    horizon: usize,
    alpha: f64,
    tolerance: Option<f64>,
    seed: u64,
) -> CliResult<SweepReport> {
    if observables == 0 {
        return Err(CliError::config("coincide.sweep.observables", "must be at least 1"));
    }
    if pairs == 0 {
        return Err(CliError::config("coincide.sweep.pairs", "must be at least 1"));
    }
    let results: Vec<(SweepRow, Vec<CoincidenceReport>)> = (0..observables)
        .into_par_iter()
        .map(|index| {
            let draw = stream_seed(seed, index);
            let f = Observable::new(family.draw(draw), sys.space()).map_err(CliError::at("coincide.sweep.family"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(draw);
            let (mut kept, mut attempts, mut max_count) = (0, 0, 0);
            let mut witnesses = Vec::new();
            while kept < pairs {
                if attempts == pairs * ATTEMPTS_PER_PAIR {
                    return Err(CliError::Refused(CoreError::Precondition(format!(
                        "only {kept} of {pairs} {alpha}-separated pairs found in {attempts} draws"
                    ))));
                }
                attempts += 1;
                let x = sys.space().sample(&mut rng);
                let y = sys.space().sample(&mut rng);
                let r =
                    coincidence_count(sys, &f, &x, &y, horizon, tolerance, alpha).map_err(CliError::at("coincide"))?;
                if !r.verdict.is_separated() {
                    continue;
                }
                kept += 1;
                max_count = max_count.max(r.count);
                if r.violated {
                    witnesses.push(r);
                }
            }
            Ok((
                SweepRow {
                    index,
                    seed: draw,
                    observable: f.label(),
                    pairs: kept,
                    attempts,
                    max_count,
                    violations: witnesses.len(),
                },
                witnesses,
            ))
        })
        .collect::<CliResult<_>>()?;
    let total_violations = results.iter().map(|(r, _)| r.violations).sum();
    let witnesses = results
        .iter()
        .flat_map(|(_, w)| w.iter().cloned())
        .take(KEPT_WITNESSES)
        .collect();
    Ok(SweepReport {
        horizon,
        alpha,
        tolerance,
        bound: 2 * sys.space().dimension(),
        total_pairs: results.iter().map(|(r, _)| r.pairs).sum(),
        rows: results.into_iter().map(|(r, _)| r).collect(),
        total_violations,
        witnesses,
        passed: total_violations == 0,
    })
}

fn coincide(ctx: &Context) -> CliResult<Execution> {
    let section = ctx
        .config()
        .coincide
        .as_ref()
        .ok_or_else(|| CliError::missing("coincide"))?;
    let sys = ctx.system()?;
    match (&section.x, &section.y, &section.sweep) {
        (Some(x), Some(y), None) => {
            let f = ctx.observable(&sys)?;
            let (x, y) = (ctx.point(&sys, x, "coincide.x")?, ctx.point(&sys, y, "coincide.y")?);
            let report = coincidence_count(&sys, &f, &x, &y, section.horizon, section.tolerance, section.alpha)
                .map_err(CliError::at("coincide"))?;
            let passed = !report.violated;
            let summary = vec![check_line(
                "coincidence bound",
                passed,
                format!(
                    "{} coincidences (bound {}), verdict {:?}",
                    report.count, report.bound, report.verdict
                ),
            )];
            #[derive(Serialize)]
            struct Row {
                index: usize,
            }
            let rows: Vec<Row> = report.coinciding.iter().map(|&index| Row { index }).collect();
            Ok(Execution {
                command: Command::Coincide,
                passed,
                summary,
                payload: json!({ "system": sys.label(), "observable": f.label(), "report": report }),
                artifacts: vec![Artifact::new("coincidences.csv", csv_bytes(&rows)?)],
            })
        }
        (None, None, Some(sweep)) => {
            let report = coincidence_sweep(
                &sys,
                &sweep.family,
                sweep.observables,
                sweep.pairs,
                section.horizon,
                section.alpha,
                section.tolerance,
                ctx.require_seed("the coincidence sweep")?,
            )?;
            let max = report.rows.iter().map(|r| r.max_count).max().unwrap_or(0);
            let summary = vec![check_line(
                "coincidence bound",
                report.passed,
                format!(
                    "{} violations over {} separated pairs and {} observables; largest count {max} (bound {})",
                    report.total_violations,
                    report.total_pairs,
                    report.rows.len(),
                    report.bound
                ),
            )];
            Ok(Execution {
                command: Command::Coincide,
                passed: report.passed,
                summary,
                artifacts: vec![Artifact::new("sweep.csv", csv_bytes(&report.rows)?)],
                payload: json!({ "system": sys.label(), "sweep": report }),
            })
        }
        _ => Err(CliError::config(
            "coincide",
            "give either both `x` and `y` or a `sweep` table",
        )),
    }
}

fn infer_orbit(ctx: &Context) -> CliResult<Execution> {
    let section = ctx
        .config()
        .infer_orbit
        .as_ref()
        .ok_or_else(|| CliError::missing("infer_orbit"))?;
    let sys = ctx.system()?;
    let f = ctx.observable(&sys)?;
    if section.terms < 2 {
        return Err(CliError::config("infer_orbit.terms", "must be at least 2"));
    }
    let x = ctx.point(&sys, &section.x, "infer_orbit.x")?;
    let y = ctx.point(&sys, &section.y, "infer_orbit.y")?;
    let last = section.terms - 1;
    let series = |p: &Point| -> CliResult<Vec<f64>> {
        Ok(sys
            .orbit(p, last)
            .map_err(CliError::at("infer_orbit"))?
            .iter()
            .map(|q| f.eval(q))
            .collect())
    };
    let (sx, sy) = (series(&x)?, series(&y)?);
    let d = section.d.unwrap_or_else(|| sys.space().dimension());
    let verdict = orbit_class_infer(&sx, &sy, d, section.tolerance).map_err(CliError::at("infer_orbit"))?;
    let truth = is_trajectory_separated(&sys, &x, &y, last, f64::MIN_POSITIVE).map_err(CliError::at("infer_orbit"))?;
    let merged_at = truth.merged_at();
    let consistent = match verdict.declared_equal_from {
        Some(n) => merged_at.is_some_and(|m| m <= n),
        None => true,
    };
    let summary = vec![check_line(
        "orbit-class inference",
        consistent,
        format!(
            "declared equal from {:?} with evidence {:?}; orbits merge at {:?}",
            verdict.declared_equal_from, verdict.evidence, merged_at
        ),
    )];
    #[derive(Serialize)]
    struct Row {
        index: usize,
        f_x: f64,
        f_y: f64,
    }
    let rows: Vec<Row> = (0..section.terms)
        .map(|i| Row {
            index: i,
            f_x: sx[i],
            f_y: sy[i],
        })
        .collect();
    Ok(Execution {
        command: Command::InferOrbit,
        passed: consistent,
        summary,
        payload: json!({
            "system": sys.label(),
            "observable": f.label(),
            "x": x,
            "y": y,
            "d": d,
            "verdict": verdict,
            "merged_at": merged_at,
            "consistent": consistent,
        }),
        artifacts: vec![Artifact::new("series.csv", csv_bytes(&rows)?)],
    })
}

fn scan(ctx: &Context) -> CliResult<Execution> {
    let section = ctx.config().scan.as_ref().ok_or_else(|| CliError::missing("scan"))?;
    let sys = ctx.system()?;
    let schedule = build_schedule(section.k, &section.times, "scan")?;
    let report = generic_scan(
        std::slice::from_ref(&sys),
        &section.family,
        &schedule,
        section.alpha,
        section.draws,
        section.pairs_per_draw,
        ctx.require_seed("the generic scan")?,
    )
    .map_err(CliError::at("scan"))?;
    let passed = section.min_density.is_none_or(|m| report.density >= m);
    let summary = vec![check_line(
        "embedding density",
        passed,
        format!(
            "{} of {} draws embed (density {:.3}, 95% interval [{:.3}, {:.3}]); required {:?}",
            report.passes,
            report.draws.len(),
            report.density,
            report.interval.0,
            report.interval.1,
            section.min_density
        ),
    )];
    Ok(Execution {
        command: Command::ScanGeneric,
        passed,
        summary,
        artifacts: vec![Artifact::new("draws.csv", csv_bytes(&report.draws)?)],
        payload: json!({ "scan": report, "min_density": section.min_density }),
    })
}

fn oracle(ctx: &Context) -> CliResult<Execution> {
    let config = ctx.config().oracle.clone().unwrap_or_default();
    let result = oracle_suite(&config, ctx.verify)?;
    let mut summary = Vec::new();
    for s in &result.suites {
        let detail = match s.failures.first() {
            Some(f) => format!(
                "{} of {} cases; first failure {}: {}",
                s.passed, s.cases, f.case, f.witness
            ),
            None => format!("{} of {} cases", s.passed, s.cases),
        };
        summary.push(check_line(s.suite.name(), s.all_passed(), detail));
    }
    #[derive(Serialize)]
    struct Row<'a> {
        suite: &'static str,
        case: &'a str,
        witness: &'a str,
    }
    let rows: Vec<Row> = result
        .suites
        .iter()
        .flat_map(|s| {
            s.failures.iter().map(move |f| Row {
                suite: s.suite.name(),
                case: &f.case,
                witness: &f.witness,
            })
        })
        .collect();
    Ok(Execution {
        command: Command::OracleSuite,
        passed: result.passed,
        summary,
        artifacts: vec![Artifact::new("failures.csv", csv_bytes(&rows)?)],
        payload: json!({ "oracle": config, "result": result }),
    })
}
