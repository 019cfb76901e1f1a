//! Chain recurrence on cell grids: epsilon-chain transition graphs, cycle
//! detection through strongly connected components, `D(A) < eta`
//! decompositions, and trajectory-separation certificates.

mod scc;
mod tsp;

pub use scc::strongly_connected_components;
pub use tsp::{
    tsp_evaluate, tsp_search, tsp_verify, ComplementPiece, TspCertificate, TspSearch, TspSearchOutcome, TspVerification,
};

use crate::dynamics::SystemSpec;
use crate::error::{invalid, require_positive, Error, Result};
use crate::spaces::{Cell, Grid, Point, Space, SpaceKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Default limit on grid size for transition graphs.
pub const DEFAULT_CELL_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphOptions {
    pub cell_cap: usize,
    /// Overrides the sampled Lipschitz bound of the system.
    pub lipschitz: Option<f64>,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self {
            cell_cap: DEFAULT_CELL_CAP,
            lipschitz: None,
        }
    }
}

/// Outer approximation of epsilon-chains: `c -> c'` iff
/// `d(T rep c, rep c') <= eps + radius c' + lip * radius c`.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionGraph {
    pub mesh: f64,
    pub epsilon: f64,
    pub lipschitz: f64,
    pub cells: Vec<Cell>,
    /// Sorted successor lists.
    pub successors: Vec<Vec<usize>>,
    #[serde(skip)]
    grid: Grid,
}

impl TransitionGraph {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.successors[from].binary_search(&to).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.successors
            .iter()
            .enumerate()
            .flat_map(|(a, next)| next.iter().map(move |&b| (a, b)))
    }
}

/// Buckets of planar anchors with a fixed side length.
struct AnchorIndex {
    side: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
}

impl AnchorIndex {
    fn new(side: f64, anchors: &[[f64; 2]]) -> Self {
        let mut index = Self {
            side,
            map: HashMap::new(),
        };
        for (i, a) in anchors.iter().enumerate() {
            let key = index.key(a);
            index.map.entry(key).or_default().push(i);
        }
        index
    }

    fn key(&self, a: &[f64; 2]) -> (i64, i64) {
        ((a[0] / self.side).floor() as i64, (a[1] / self.side).floor() as i64)
    }

    /// Every indexed item whose anchor is within `side` of `a` per coordinate.
    fn near(&self, a: &[f64; 2]) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.key(a);
        (-1..=1)
            .flat_map(move |dx| (-1..=1).map(move |dy| (x + dx, y + dy)))
            .filter_map(|k| self.map.get(&k))
            .flatten()
            .copied()
    }
}

fn checked_grid(space: &Space, mesh: f64, cap: usize) -> Result<Grid> {
    require_positive("mesh", mesh)?;
    let cells = space.grid_cell_count(mesh);
    if cells > cap {
        let dim = space.dimension().max(1) as f64;
        return Err(Error::GridTooLarge {
            cells,
            cap,
            suggested_mesh: mesh * (cells as f64 / cap as f64).powf(1.0 / dim),
        });
    }
    space.grid(mesh)
}

pub fn build_transition_graph(sys: &SystemSpec, mesh: f64, eps: f64) -> Result<TransitionGraph> {
    build_transition_graph_with(sys, mesh, eps, &GraphOptions::default())
}

pub fn build_transition_graph_with(
    sys: &SystemSpec,
    mesh: f64,
    eps: f64,
    options: &GraphOptions,
) -> Result<TransitionGraph> {
    require_positive("epsilon", eps)?;
    let lipschitz = match options.lipschitz {
        Some(l) => {
            require_positive("lipschitz", l)?;
            l
        }
        None => sys.lipschitz_bound(),
    };
    let space = sys.space();
    let grid = checked_grid(space, mesh, options.cell_cap)?;
    let cells = grid.cells().to_vec();
    let r_max = grid.max_radius();
    let reach = (eps + r_max + lipschitz * r_max) * (1.0 + 1e-9);
    let anchors: Vec<[f64; 2]> = cells.par_iter().map(|c| space.anchor(&c.rep)).collect();
    let index = AnchorIndex::new(reach, &anchors);
    let successors = cells
        .par_iter()
        .map(|c| {
            let image = sys.apply(&c.rep);
            let mut next: Vec<usize> = index
                .near(&space.anchor(&image))
                .filter(|&j| {
                    let target = &cells[j];
                    space.dist(&image, &target.rep) <= eps + target.radius + lipschitz * c.radius
                })
                .collect();
            next.sort_unstable();
            next
        })
        .collect();
    Ok(TransitionGraph {
        mesh,
        epsilon: eps,
        lipschitz,
        cells,
        successors,
        grid,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecurrentSet {
    pub epsilon: f64,
    pub mesh: f64,
    /// Sorted ids of cells on a directed cycle.
    pub cells: Vec<usize>,
    pub component_count: usize,
}

impl ChainRecurrentSet {
    pub fn contains(&self, cell: usize) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Cells whose strongly connected component has an internal edge.
pub fn chain_recurrent_cells(graph: &TransitionGraph) -> ChainRecurrentSet {
    let (component, count) = strongly_connected_components(&graph.successors);
    let mut size = vec![0usize; count];
    for &c in &component {
        size[c] += 1;
    }
    let cells = (0..graph.len())
        .filter(|&v| size[component[v]] > 1 || graph.has_edge(v, v))
        .collect();
    ChainRecurrentSet {
        epsilon: graph.epsilon,
        mesh: graph.mesh,
        cells,
        component_count: count,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionPiece {
    pub cells: Vec<usize>,
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCheck {
    pub eta: f64,
    pub mesh: f64,
    pub pieces: Vec<DecompositionPiece>,
    /// Every piece has diameter `< eta`.
    pub holds: bool,
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

fn piece_diameter(space: &Space, cells: &[&Cell]) -> f64 {
    if let SpaceKind::Interval = space.kind() {
        let lo = cells
            .iter()
            .map(|c| c.rep.as_real().unwrap_or(0.0) - c.radius)
            .fold(f64::INFINITY, f64::min);
        let hi = cells
            .iter()
            .map(|c| c.rep.as_real().unwrap_or(0.0) + c.radius)
            .fold(f64::NEG_INFINITY, f64::max);
        return (hi.min(1.0) - lo.max(0.0)).max(0.0);
    }
    let bound = (0..cells.len())
        .into_par_iter()
        .map(|i| {
            cells[i..]
                .iter()
                .map(|b| space.dist(&cells[i].rep, &b.rep) + cells[i].radius + b.radius)
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    bound.min(space.diameter())
}

/// Cluster the cells of `a` by adjacency (gap at most `grid.mesh()`) and
/// compare each cluster's diameter with `eta`.
pub fn decomposition_check(space: &Space, grid: &Grid, a: &[usize], eta: f64) -> Result<DecompositionCheck> {
    require_positive("eta", eta)?;
    if a.is_empty() {
        return Err(Error::Empty("cell set"));
    }
    let cells = grid.cells();
    if let Some(&bad) = a.iter().find(|&&c| c >= cells.len()) {
        return Err(invalid("cells", format!("cell {bad} is not in the grid")));
    }
    let mut ids = a.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mesh = grid.mesh();
    let reach = (2.0 * grid.max_radius() + mesh) * (1.0 + 1e-9);
    let anchors: Vec<[f64; 2]> = ids.iter().map(|&c| space.anchor(&cells[c].rep)).collect();
    let index = AnchorIndex::new(reach, &anchors);
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    for i in 0..ids.len() {
        let ci = &cells[ids[i]];
        for j in index.near(&anchors[i]) {
            if j <= i {
                continue;
            }
            let cj = &cells[ids[j]];
            if space.dist(&ci.rep, &cj.rep) <= ci.radius + cj.radius + mesh {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for (i, &id) in ids.iter().enumerate() {
        let root = find(&mut parent, i);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(id);
    }
    let pieces: Vec<DecompositionPiece> = groups
        .into_iter()
        .map(|members| {
            let refs: Vec<&Cell> = members.iter().map(|&c| &cells[c]).collect();
            let diameter = piece_diameter(space, &refs);
            DecompositionPiece {
                cells: members,
                diameter,
            }
        })
        .collect();
    let holds = pieces.iter().all(|p| p.diameter < eta);
    Ok(DecompositionCheck {
        eta,
        mesh,
        pieces,
        holds,
    })
}

/// Id of the grid cell containing `p`, for membership tests against a
/// chain recurrent set.
pub fn cell_of(graph: &TransitionGraph, space: &Space, p: &Point) -> Option<usize> {
    graph.grid.locate(space, p)
}
