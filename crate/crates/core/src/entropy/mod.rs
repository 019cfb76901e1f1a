//! Bowen `(n, eps)`-separated sets and topological entropy estimates, for
//! source systems and for reconstructed shifts on delay vectors.

mod table;
#[cfg(test)]
mod tests;

pub use table::{OrbitTable, ReconstructedOrbits, SourceOrbits};

use crate::delay::EmbeddingCertificate;
use crate::dynamics::{Observable, SystemSpec};
use crate::error::{invalid, require_positive, Error, Result};
use crate::spaces::Point;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Candidate sets up to this size are searched exhaustively.
pub const EXACT_LIMIT: usize = 18;

/// Counts above this fraction of the candidate set are treated as capped by
/// the net and left out of slope fits.
pub const SATURATION_FRACTION: f64 = 0.25;

/// Minimum number of usable `n` values per slope fit.
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatedSetResult {
    pub n: usize,
    pub epsilon: f64,
    pub s_n_lower: usize,
    /// Candidate indices.
    pub witness: Vec<usize>,
    pub exact: bool,
}

fn check_query<T: OrbitTable + ?Sized>(table: &T, n: usize, eps: f64) -> Result<()> {
    if table.is_empty() {
        return Err(Error::Empty("candidates"));
    }
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if n > table.horizon() {
        return Err(invalid("n", format!("exceeds the table horizon {}", table.horizon())));
    }
    require_positive("epsilon", eps)
}

/// Whether `a` and `b` are `eps` apart at some time `j < n`.
pub fn separated_pair<T: OrbitTable + ?Sized>(table: &T, a: usize, b: usize, n: usize, eps: f64) -> bool {
    (0..n).rev().any(|j| table.step_distance(a, b, j) >= eps)
}

/// Pairwise re-check of a witness set.
pub fn verify_separated<T: OrbitTable + ?Sized>(table: &T, witness: &[usize], n: usize, eps: f64) -> bool {
    (0..witness.len()).into_par_iter().all(|i| {
        witness[i + 1..]
            .iter()
            .all(|&b| separated_pair(table, witness[i], b, n, eps))
    })
}

/// Whether no further candidate can join the witness set.
pub fn is_maximal<T: OrbitTable + ?Sized>(table: &T, witness: &[usize], n: usize, eps: f64) -> bool {
    let mut member = vec![false; table.len()];
    for &w in witness {
        member[w] = true;
    }
    (0..table.len())
        .into_par_iter()
        .filter(|&c| !member[c])
        .all(|c| witness.iter().any(|&w| !separated_pair(table, c, w, n, eps)))
}

type Key = [i64; 4];

struct Buckets {
    eps: f64,
    last: usize,
    map: HashMap<Key, Vec<usize>>,
}

impl Buckets {
    fn new(eps: f64, n: usize) -> Self {
        Self {
            eps,
            last: n - 1,
            map: HashMap::new(),
        }
    }

    fn key<T: OrbitTable + ?Sized>(&self, table: &T, a: usize) -> Key {
        let (p, q) = (table.anchor(a, 0), table.anchor(a, self.last));
        let cell = |v: f64| (v / self.eps).floor() as i64;
        [cell(p[0]), cell(p[1]), cell(q[0]), cell(q[1])]
    }

    fn insert<T: OrbitTable + ?Sized>(&mut self, table: &T, a: usize) {
        let key = self.key(table, a);
        self.map.entry(key).or_default().push(a);
    }

    fn conflicts<T: OrbitTable + ?Sized>(&self, table: &T, a: usize, n: usize) -> bool {
        let key = self.key(table, a);
        for code in 0..81 {
            let mut probe = key;
            let mut c = code;
            for slot in probe.iter_mut() {
                *slot += c % 3 - 1;
                c /= 3;
            }
            if let Some(members) = self.map.get(&probe) {
                if members.iter().any(|&b| !separated_pair(table, a, b, n, self.eps)) {
                    return true;
                }
            }
        }
        false
    }
}

/// Greedy insertion in candidate order, starting from a set that is already
/// `(n, eps)`-separated.
fn greedy_from<T: OrbitTable + ?Sized>(table: &T, n: usize, eps: f64, seed: &[usize]) -> Vec<usize> {
    if seed.len() == table.len() {
        return seed.to_vec();
    }
    let mut buckets = Buckets::new(eps, n);
    let mut member = vec![false; table.len()];
    for &s in seed {
        buckets.insert(table, s);
        member[s] = true;
    }
    for (a, joined) in member.iter_mut().enumerate() {
        if !*joined && !buckets.conflicts(table, a, n) {
            buckets.insert(table, a);
            *joined = true;
        }
    }
    (0..table.len()).filter(|&a| member[a]).collect()
}

/// Greedy maximal `(n, eps)`-separated subset in candidate order.
pub fn greedy_separated<T: OrbitTable + ?Sized>(table: &T, n: usize, eps: f64) -> Result<SeparatedSetResult> {
    check_query(table, n, eps)?;
    let witness = greedy_from(table, n, eps, &[]);
    Ok(SeparatedSetResult {
        n,
        epsilon: eps,
        s_n_lower: witness.len(),
        witness,
        exact: false,
    })
}

/// Largest `(n, eps)`-separated subset, by exhaustive search.
pub fn exact_separated<T: OrbitTable + ?Sized>(table: &T, n: usize, eps: f64) -> Result<SeparatedSetResult> {
    check_query(table, n, eps)?;
    let m = table.len();
    if m > EXACT_LIMIT {
        return Err(invalid(
            "candidates",
            format!("exact search is limited to {EXACT_LIMIT} points"),
        ));
    }
    let mut compatible = vec![0u32; m];
    for a in 0..m {
        for b in a + 1..m {
            if separated_pair(table, a, b, n, eps) {
                compatible[a] |= 1 << b;
                compatible[b] |= 1 << a;
            }
        }
    }
    let mut best = 0u32;
    grow(&compatible, 0, (1u32 << m) - 1, &mut best);
    let witness: Vec<usize> = (0..m).filter(|&a| best >> a & 1 == 1).collect();
    Ok(SeparatedSetResult {
        n,
        epsilon: eps,
        s_n_lower: witness.len(),
        witness,
        exact: true,
    })
}

fn grow(compatible: &[u32], chosen: u32, open: u32, best: &mut u32) {
    if open == 0 {
        if chosen.count_ones() > best.count_ones() {
            *best = chosen;
        }
        return;
    }
    if chosen.count_ones() + open.count_ones() <= best.count_ones() {
        return;
    }
    let v = open.trailing_zeros();
    grow(compatible, chosen | 1 << v, open & compatible[v as usize], best);
    grow(compatible, chosen, open & !(1 << v), best);
}

/// Exact search for small candidate sets, greedy otherwise.
pub fn separated_set<T: OrbitTable + ?Sized>(table: &T, n: usize, eps: f64) -> Result<SeparatedSetResult> {
    if table.len() <= EXACT_LIMIT {
        exact_separated(table, n, eps)
    } else {
        greedy_separated(table, n, eps)
    }
}

/// `(n, eps)`-separated subset of `candidates` under the source map.
pub fn max_separated_greedy(sys: &SystemSpec, candidates: &[Point], n: usize, eps: f64) -> Result<SeparatedSetResult> {
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let table = SourceOrbits::new(sys, candidates, n)?;
    separated_set(&table, n, eps)
}

/// The `(n, eps)` grid and candidate mesh of an entropy estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyGrid {
    pub epsilons: Vec<f64>,
    pub ns: Vec<usize>,
    pub mesh: f64,
}

impl EntropyGrid {
    pub fn new(epsilons: Vec<f64>, ns: Vec<usize>, mesh: f64) -> Result<Self> {
        let grid = Self { epsilons, ns, mesh };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Err(Error::Empty("epsilons"));
        }
        if self.ns.is_empty() {
            return Err(Error::Empty("ns"));
        }
        for &e in &self.epsilons {
            require_positive("epsilons", e)?;
        }
        if self.ns.contains(&0) {
            return Err(invalid("ns", "every n must be at least 1"));
        }
        require_positive("mesh", self.mesh)?;
        let min_eps = self.epsilons.iter().copied().fold(f64::INFINITY, f64::min);
        if self.mesh > min_eps / 2.0 * (1.0 + 1e-12) {
            return Err(invalid(
                "mesh",
                format!("must be at most min epsilon / 2 = {}", min_eps / 2.0),
            ));
        }
        Ok(())
    }

    fn sorted(&self) -> (Vec<f64>, Vec<usize>) {
        let mut eps = self.epsilons.clone();
        eps.sort_by(|a, b| b.total_cmp(a));
        eps.dedup();
        let mut ns = self.ns.clone();
        ns.sort_unstable();
        ns.dedup();
        (eps, ns)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub epsilon: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of `log s_n`.
    pub residual: f64,
    pub used_ns: Vec<usize>,
    pub saturated_ns: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub candidates: usize,
    /// Cells ordered by decreasing epsilon, then increasing n.
    pub table: Vec<SeparatedSetResult>,
    /// Fits ordered by decreasing epsilon.
    pub fits: Vec<SlopeFit>,
    /// Slope at the smallest epsilon.
    pub h_estimate: f64,
}

impl EntropyEstimate {
    pub fn count(&self, n: usize, eps: f64) -> Option<usize> {
        self.table
            .iter()
            .find(|c| c.n == n && c.epsilon == eps)
            .map(|c| c.s_n_lower)
    }
}

/// Least-squares line through `(x, y)`: slope, intercept, RMS residual.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (slope, intercept, (sse / m).sqrt())
}

/// Fill the `(n, eps)` table and fit slopes.
///
/// Each cell starts from the larger of the witnesses at `(n-1, eps)` and
/// `(n, eps')` with the next larger `eps'`, both of which are still
/// separated, so counts are monotone across the table. `cap` is the size of
/// the candidate net when it only approximates the space; counts above both
/// `SATURATION_FRACTION * cap` and the count at the smallest `n` are
/// excluded from the fits.
pub fn estimate_entropy<T: OrbitTable + ?Sized>(
    table: &T,
    grid: &EntropyGrid,
    cap: Option<usize>,
) -> Result<EntropyEstimate> {
    grid.validate()?;
    let (eps, ns) = grid.sorted();
    let n_max = *ns.last().expect("validated");
    if n_max > table.horizon() {
        return Err(invalid("ns", format!("exceeds the table horizon {}", table.horizon())));
    }
    if table.is_empty() {
        return Err(Error::Empty("candidates"));
    }
    let rows = eps.len();
    let cols = ns.len();
    let mut cells: Vec<Option<SeparatedSetResult>> = vec![None; rows * cols];
    let exact = table.len() <= EXACT_LIMIT;
    for diagonal in 0..rows + cols - 1 {
        let positions: Vec<(usize, usize)> = (0..rows)
            .filter_map(|r| diagonal.checked_sub(r).filter(|&c| c < cols).map(|c| (r, c)))
            .collect();
        let done: Vec<(usize, SeparatedSetResult)> = positions
            .par_iter()
            .map(|&(r, c)| {
                let (n, e) = (ns[c], eps[r]);
                let result = if exact {
                    exact_separated(table, n, e).expect("validated query")
                } else {
                    let left = c.checked_sub(1).and_then(|c| cells[r * cols + c].as_ref());
                    let up = r.checked_sub(1).and_then(|r| cells[r * cols + c].as_ref());
                    let seed = [left, up]
                        .into_iter()
                        .flatten()
                        .max_by_key(|s| s.s_n_lower)
                        .map(|s| s.witness.as_slice())
                        .unwrap_or(&[]);
                    let witness = greedy_from(table, n, e, seed);
                    SeparatedSetResult {
                        n,
                        epsilon: e,
                        s_n_lower: witness.len(),
                        witness,
                        exact: false,
                    }
                };
                (r * cols + c, result)
            })
            .collect();
        for (i, result) in done {
            cells[i] = Some(result);
        }
    }
    let cells: Vec<SeparatedSetResult> = cells.into_iter().map(|c| c.expect("filled")).collect();

    let mut fits = Vec::with_capacity(rows);
    for (r, &e) in eps.iter().enumerate() {
        let row = &cells[r * cols..(r + 1) * cols];
        let limit = cap.map(|c| (SATURATION_FRACTION * c as f64).max(row[0].s_n_lower as f64));
        let (used, saturated): (Vec<&SeparatedSetResult>, Vec<&SeparatedSetResult>) =
            row.iter().partition(|c| limit.is_none_or(|l| c.s_n_lower as f64 <= l));
        if used.len() < MIN_FIT_POINTS {
            return Err(Error::DegenerateFit {
                epsilon: e,
                usable: used.len(),
            });
        }
        let xs: Vec<f64> = used.iter().map(|c| c.n as f64).collect();
        let ys: Vec<f64> = used.iter().map(|c| (c.s_n_lower as f64).ln()).collect();
        let (slope, intercept, residual) = least_squares(&xs, &ys);
        fits.push(SlopeFit {
            epsilon: e,
            slope,
            intercept,
            residual,
            used_ns: used.iter().map(|c| c.n).collect(),
            saturated_ns: saturated.iter().map(|c| c.n).collect(),
        });
    }
    let h_estimate = fits.last().expect("nonempty").slope;
    Ok(EntropyEstimate {
        candidates: table.len(),
        table: cells,
        fits,
        h_estimate,
    })
}

fn net_cap(sys: &SystemSpec, candidates: usize) -> Option<usize> {
    sys.space().finite_size().is_none().then_some(candidates)
}

/// Entropy estimate of the source map over the `mesh`-net of its space.
pub fn entropy_curve(sys: &SystemSpec, grid: &EntropyGrid) -> Result<EntropyEstimate> {
    grid.validate()?;
    let candidates = sys.space().epsilon_net(grid.mesh)?;
    let horizon = *grid.ns.iter().max().expect("validated");
    let table = SourceOrbits::new(sys, &candidates, horizon)?;
    estimate_entropy(&table, grid, net_cap(sys, candidates.len()))
}

/// Entropy estimate of the reconstructed shift on `{0..k}` delay vectors of
/// the same candidate net.
pub fn reconstructed_entropy_curve(
    sys: &SystemSpec,
    f: &Observable,
    k: usize,
    grid: &EntropyGrid,
) -> Result<EntropyEstimate> {
    grid.validate()?;
    let candidates = sys.space().epsilon_net(grid.mesh)?;
    let horizon = *grid.ns.iter().max().expect("validated");
    let table = ReconstructedOrbits::new(sys, f, k, &candidates, horizon)?;
    estimate_entropy(&table, grid, net_cap(sys, candidates.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEqualityReport {
    pub k: usize,
    /// Smallest epsilon of the grid, where both slopes are taken.
    pub epsilon: f64,
    /// The `n` values usable on both sides; both slopes are fitted here.
    pub window: Vec<usize>,
    pub h_t: f64,
    pub h_sigma: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Fiber entropy is taken to be zero under a trajectory-embedding.
    pub fiber_entropy: f64,
    pub source: EntropyEstimate,
    pub reconstructed: EntropyEstimate,
}

fn slope_over(estimate: &EntropyEstimate, eps: f64, window: &[usize]) -> f64 {
    let xs: Vec<f64> = window.iter().map(|&n| n as f64).collect();
    let ys: Vec<f64> = window
        .iter()
        .map(|&n| (estimate.count(n, eps).expect("cell in table") as f64).ln())
        .collect();
    least_squares(&xs, &ys).0
}

/// Compare `h(T)` with `h` of the reconstructed shift on `{0..k}`. Both
/// slopes are fitted at the smallest epsilon over the `n` values that are
/// unsaturated on both sides.
pub fn entropy_equality_check(
    sys: &SystemSpec,
    f: &Observable,
    k: usize,
    grid: &EntropyGrid,
    tolerance: f64,
    certificate: Option<&EmbeddingCertificate>,
) -> Result<EntropyEqualityReport> {
    let cert = certificate
        .ok_or_else(|| Error::Precondition(format!("no embedding certificate for {} on 0..={k}", f.label())))?;
    cert.require(sys, f, k)?;
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(invalid("tolerance", "must be a nonnegative finite number"));
    }
    let source = entropy_curve(sys, grid)?;
    let reconstructed = reconstructed_entropy_curve(sys, f, k, grid)?;
    let (fs, fr) = (
        source.fits.last().expect("nonempty"),
        reconstructed.fits.last().expect("nonempty"),
    );
    let window: Vec<usize> = fs.used_ns.iter().copied().filter(|n| fr.used_ns.contains(n)).collect();
    if window.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateFit {
            epsilon: fs.epsilon,
            usable: window.len(),
        });
    }
    let h_t = slope_over(&source, fs.epsilon, &window);
    let h_sigma = slope_over(&reconstructed, fs.epsilon, &window);
    let difference = (h_t - h_sigma).abs();
    Ok(EntropyEqualityReport {
        k,
        epsilon: fs.epsilon,
        window,
        h_t,
        h_sigma,
        difference,
        tolerance,
        passed: difference <= tolerance,
        fiber_entropy: 0.0,
        source,
        reconstructed,
    })
}
