//! Finite trees of arcs with the path-length metric.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// An arc from `from` to `to`; a point on it is `(arc, t)` with `t = 0` at `from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeArc {
    pub from: usize,
    pub to: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    vertex_count: usize,
    arcs: Vec<TreeArc>,
    vertex_dist: Vec<Vec<f64>>,
    positions: Vec<[f64; 2]>,
    diameter: f64,
}

impl Tree {
    /// A star with `arms` arcs of length `arm_length` leaving vertex 0.
    pub fn star(arms: usize, arm_length: f64) -> Result<Self> {
        let arcs = (1..=arms)
            .map(|leaf| TreeArc {
                from: 0,
                to: leaf,
                length: arm_length,
            })
            .collect();
        Self::new(arms + 1, arcs)
    }

    pub fn new(vertex_count: usize, arcs: Vec<TreeArc>) -> Result<Self> {
        if vertex_count < 2 || arcs.len() + 1 != vertex_count {
            return Err(invalid(
                "dendrite.arcs",
                format!(
                    "a tree on {vertex_count} vertices needs {} arcs",
                    vertex_count.saturating_sub(1)
                ),
            ));
        }
        let mut adjacency = vec![Vec::new(); vertex_count];
        for (i, arc) in arcs.iter().enumerate() {
            if arc.from >= vertex_count || arc.to >= vertex_count || arc.from == arc.to {
                return Err(invalid("dendrite.arcs", format!("arc {i} has bad endpoints")));
            }
            if !(arc.length > 0.0 && arc.length.is_finite()) {
                return Err(invalid("dendrite.arcs", format!("arc {i} has non-positive length")));
            }
            adjacency[arc.from].push((arc.to, arc.length));
            adjacency[arc.to].push((arc.from, arc.length));
        }

        let mut vertex_dist = Vec::with_capacity(vertex_count);
        for source in 0..vertex_count {
            let mut dist = vec![f64::INFINITY; vertex_count];
            dist[source] = 0.0;
            let mut queue = VecDeque::from([source]);
            while let Some(v) = queue.pop_front() {
                for &(w, len) in &adjacency[v] {
                    if dist[w].is_infinite() {
                        dist[w] = dist[v] + len;
                        queue.push_back(w);
                    }
                }
            }
            if dist.iter().any(|d| d.is_infinite()) {
                return Err(invalid("dendrite.arcs", "arcs do not form a connected tree"));
            }
            vertex_dist.push(dist);
        }
        let diameter = vertex_dist
            .iter()
            .flat_map(|row| row.iter().copied())
            .fold(0.0, f64::max);

        // Straight-segment layout; Euclidean distance never exceeds path length.
        let mut positions = vec![[0.0, 0.0]; vertex_count];
        let mut placed = vec![false; vertex_count];
        placed[0] = true;
        let mut queue = VecDeque::from([0usize]);
        let mut turn = 0usize;
        while let Some(v) = queue.pop_front() {
            for &(w, len) in &adjacency[v] {
                if !placed[w] {
                    let angle = turn as f64 * 2.399_963_229_728_653;
                    turn += 1;
                    positions[w] = [positions[v][0] + len * angle.cos(), positions[v][1] + len * angle.sin()];
                    placed[w] = true;
                    queue.push_back(w);
                }
            }
        }

        Ok(Self {
            vertex_count,
            arcs,
            vertex_dist,
            positions,
            diameter,
        })
    }

    pub fn arcs(&self) -> &[TreeArc] {
        &self.arcs
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// True when every arc leaves vertex 0.
    pub fn is_star(&self) -> bool {
        self.arcs.iter().all(|a| a.from == 0)
    }

    pub fn distance(&self, a: (usize, f64), b: (usize, f64)) -> f64 {
        let (arc_a, arc_b) = (self.arcs[a.0], self.arcs[b.0]);
        if a.0 == b.0 {
            return (a.1 - b.1).abs() * arc_a.length;
        }
        let ends_a = [(arc_a.from, a.1 * arc_a.length), (arc_a.to, (1.0 - a.1) * arc_a.length)];
        let ends_b = [(arc_b.from, b.1 * arc_b.length), (arc_b.to, (1.0 - b.1) * arc_b.length)];
        let mut best = f64::INFINITY;
        for &(u, du) in &ends_a {
            for &(v, dv) in &ends_b {
                best = best.min(du + self.vertex_dist[u][v] + dv);
            }
        }
        best
    }

    pub fn position(&self, arc: usize, t: f64) -> [f64; 2] {
        let TreeArc { from, to, .. } = self.arcs[arc];
        let (p, q) = (self.positions[from], self.positions[to]);
        [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
    }

    /// A canonical `(arc, t)` representation of a vertex.
    pub fn vertex_point(&self, vertex: usize) -> (usize, f64) {
        self.arcs
            .iter()
            .enumerate()
            .find_map(|(i, a)| {
                if a.from == vertex {
                    Some((i, 0.0))
                } else if a.to == vertex {
                    Some((i, 1.0))
                } else {
                    None
                }
            })
            .expect("every vertex of a tree lies on an arc")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triod_metric() {
        let tree = Tree::star(3, 1.0).unwrap();
        assert_eq!(tree.diameter(), 2.0);
        assert!((tree.distance((0, 0.5), (1, 0.25)) - 0.75).abs() < 1e-15);
        assert!((tree.distance((0, 0.5), (0, 0.25)) - 0.25).abs() < 1e-15);
        // centre seen from two arcs
        assert_eq!(tree.distance((0, 0.0), (2, 0.0)), 0.0);
    }

    #[test]
    fn rejects_cycles() {
        let arcs = vec![
            TreeArc {
                from: 0,
                to: 1,
                length: 1.0,
            },
            TreeArc {
                from: 1,
                to: 0,
                length: 1.0,
            },
        ];
        assert!(Tree::new(3, arcs).is_err());
    }

    #[test]
    fn layout_is_short() {
        let tree = Tree::new(
            4,
            vec![
                TreeArc {
                    from: 0,
                    to: 1,
                    length: 1.0,
                },
                TreeArc {
                    from: 1,
                    to: 2,
                    length: 0.5,
                },
                TreeArc {
                    from: 1,
                    to: 3,
                    length: 2.0,
                },
            ],
        )
        .unwrap();
        let pts = [(0, 0.3), (1, 0.9), (2, 0.1), (2, 1.0), (0, 1.0)];
        for &a in &pts {
            for &b in &pts {
                let (pa, pb) = (tree.position(a.0, a.1), tree.position(b.0, b.1));
                let euclid = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
                assert!(euclid <= tree.distance(a, b) + 1e-12);
            }
        }
    }
}
