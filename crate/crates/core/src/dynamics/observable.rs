use crate::error::{invalid, require_positive, Error, Result};
use crate::spaces::{Grid, Point, Space};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Declarative description of a real-valued observable `f: X -> R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableSpec {
    /// A planar anchor coordinate of the point (the state index on finite spaces).
    Coordinate {
        #[serde(default)]
        index: usize,
    },
    /// `sum_{k=1..order} decay^k (a_k cos 2πku + b_k sin 2πku)` with `a_k, b_k`
    /// drawn uniformly from [-1, 1] by a generator seeded with `seed`.
    Fourier {
        seed: u64,
        order: usize,
        decay: f64,
    },
    /// Constant value `values[i]` on cell `i` of `grid(mesh)`; values must be
    /// pairwise distinct.
    PiecewiseConstant {
        mesh: f64,
        values: Vec<f64>,
    },
    /// Explicit values on a finite space.
    Table {
        values: Vec<f64>,
    },
    Constant {
        value: f64,
    },
    /// Weighted sum of observables.
    Sum {
        terms: Vec<WeightedTerm>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub weight: f64,
    pub observable: ObservableSpec,
}

#[derive(Debug, Clone)]
enum Compiled {
    Coordinate(usize),
    Fourier { cos: Vec<f64>, sin: Vec<f64> },
    Piecewise { grid: Grid, values: Vec<f64> },
    Table(Vec<f64>),
    Constant(f64),
    Sum(Vec<(f64, Observable)>),
}

/// An observable bound to a space. Evaluation is pure.
#[derive(Debug, Clone)]
pub struct Observable {
    spec: ObservableSpec,
    space: Space,
    compiled: Compiled,
}

impl Observable {
    pub fn new(spec: ObservableSpec, space: &Space) -> Result<Self> {
        let compiled = match &spec {
            ObservableSpec::Coordinate { index } => {
                if *index > 1 {
                    return Err(invalid("observable.index", "anchor coordinates are 0 or 1"));
                }
                Compiled::Coordinate(*index)
            }
            ObservableSpec::Fourier { seed, order, decay } => {
                if *order == 0 {
                    return Err(invalid("observable.order", "must be at least 1"));
                }
                require_positive("observable.decay", *decay)?;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut cos = Vec::with_capacity(*order);
                let mut sin = Vec::with_capacity(*order);
                for k in 1..=*order {
                    let scale = decay.powi(k as i32);
                    cos.push(scale * rng.gen_range(-1.0..=1.0));
                    sin.push(scale * rng.gen_range(-1.0..=1.0));
                }
                Compiled::Fourier { cos, sin }
            }
            ObservableSpec::PiecewiseConstant { mesh, values } => {
                let grid = space.grid(*mesh)?;
                if values.len() != grid.len() {
                    return Err(invalid(
                        "observable.values",
                        format!("expected {} cell values, got {}", grid.len(), values.len()),
                    ));
                }
                let mut sorted = values.clone();
                sorted.sort_by(f64::total_cmp);
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(invalid("observable.values", "cell values must be pairwise distinct"));
                }
                Compiled::Piecewise {
                    grid,
                    values: values.clone(),
                }
            }
            ObservableSpec::Table { values } => {
                let size = space
                    .finite_size()
                    .ok_or_else(|| Error::Unsupported("table observables need a finite space".into()))?;
                if values.len() != size {
                    return Err(invalid("observable.values", format!("expected {size} values")));
                }
                Compiled::Table(values.clone())
            }
            ObservableSpec::Constant { value } => Compiled::Constant(*value),
            ObservableSpec::Sum { terms } => Compiled::Sum(
                terms
                    .iter()
                    .map(|t| Ok((t.weight, Observable::new(t.observable.clone(), space)?)))
                    .collect::<Result<_>>()?,
            ),
        };
        if let Some(bad) = spec_values(&spec).find(|v| !v.is_finite()) {
            return Err(invalid("observable", format!("non-finite value {bad}")));
        }
        Ok(Self {
            spec,
            space: space.clone(),
            compiled,
        })
    }

    pub fn coordinate(space: &Space) -> Self {
        Self::new(ObservableSpec::Coordinate { index: 0 }, space).unwrap()
    }

    pub fn constant(space: &Space, value: f64) -> Self {
        Self::new(ObservableSpec::Constant { value }, space).unwrap()
    }

    pub fn fourier(space: &Space, seed: u64, order: usize, decay: f64) -> Result<Self> {
        Self::new(ObservableSpec::Fourier { seed, order, decay }, space)
    }

    pub fn table(space: &Space, values: Vec<f64>) -> Result<Self> {
        Self::new(ObservableSpec::Table { values }, space)
    }

    pub fn spec(&self) -> &ObservableSpec {
        &self.spec
    }

    pub fn label(&self) -> String {
        match &self.spec {
            ObservableSpec::Coordinate { index } => format!("coordinate({index})"),
            ObservableSpec::Fourier { seed, order, decay } => {
                format!("fourier(seed={seed},m={order},decay={decay})")
            }
            ObservableSpec::PiecewiseConstant { values, .. } => {
                format!("piecewise_constant({} cells)", values.len())
            }
            ObservableSpec::Table { .. } => "table".into(),
            ObservableSpec::Constant { value } => format!("constant({value})"),
            ObservableSpec::Sum { terms } => format!("sum({} terms)", terms.len()),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.compiled, Compiled::Constant(_))
    }

    /// `f(p)`; the caller guarantees `p` lies in the bound space.
    pub fn eval(&self, p: &Point) -> f64 {
        match &self.compiled {
            Compiled::Coordinate(i) => match p {
                Point::Real(c) => c.get(*i).copied().unwrap_or(0.0),
                Point::State(s) if *i == 0 => *s as f64,
                _ => self.space.anchor(p)[*i],
            },
            Compiled::Fourier { cos, sin } => {
                let u = self.space.scalar_coordinate(p);
                cos.iter()
                    .zip(sin)
                    .enumerate()
                    .map(|(k, (a, b))| {
                        let phase = TAU * (k + 1) as f64 * u;
                        a * phase.cos() + b * phase.sin()
                    })
                    .sum()
            }
            Compiled::Piecewise { grid, values } => {
                grid.locate(&self.space, p).map(|cell| values[cell]).unwrap_or(f64::NAN)
            }
            Compiled::Table(values) => match p {
                Point::State(s) => values[*s],
                _ => f64::NAN,
            },
            Compiled::Constant(c) => *c,
            Compiled::Sum(terms) => terms.iter().map(|(w, f)| w * f.eval(p)).sum(),
        }
    }
}

fn spec_values(spec: &ObservableSpec) -> Box<dyn Iterator<Item = f64> + '_> {
    match spec {
        ObservableSpec::PiecewiseConstant { values, .. } | ObservableSpec::Table { values } => {
            Box::new(values.iter().copied())
        }
        ObservableSpec::Constant { value } => Box::new(std::iter::once(*value)),
        ObservableSpec::Sum { terms } => Box::new(terms.iter().map(|t| t.weight)),
        _ => Box::new(std::iter::empty()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_constant_requires_distinct_values() {
        let space = Space::interval();
        let ok = Observable::new(
            ObservableSpec::PiecewiseConstant {
                mesh: 0.25,
                values: vec![0.1, 0.2, 0.3, 0.4],
            },
            &space,
        )
        .unwrap();
        assert_eq!(ok.eval(&Point::real(0.3)), 0.2);
        assert_eq!(ok.eval(&Point::real(1.0)), 0.4);
        let bad = Observable::new(
            ObservableSpec::PiecewiseConstant {
                mesh: 0.25,
                values: vec![0.1, 0.2, 0.1, 0.4],
            },
            &space,
        );
        assert!(bad.is_err());
        let short = Observable::new(
            ObservableSpec::PiecewiseConstant {
                mesh: 0.25,
                values: vec![0.1],
            },
            &space,
        );
        assert!(short.is_err());
    }

    #[test]
    fn fourier_is_seeded_and_bounded() {
        let space = Space::interval();
        let f = Observable::fourier(&space, 7, 5, 0.5).unwrap();
        let g = Observable::fourier(&space, 7, 5, 0.5).unwrap();
        let h = Observable::fourier(&space, 8, 5, 0.5).unwrap();
        let bound: f64 = (1..=5).map(|k| 2.0 * 0.5f64.powi(k)).sum();
        for i in 0..=100 {
            let p = Point::real(i as f64 / 100.0);
            assert_eq!(f.eval(&p), g.eval(&p));
            assert!(f.eval(&p).abs() <= bound);
        }
        assert_ne!(f.eval(&Point::real(0.3)), h.eval(&Point::real(0.3)));
        assert!(Observable::fourier(&space, 1, 0, 0.5).is_err());
    }

    #[test]
    fn fourier_is_continuous_on_the_circle() {
        let space = Space::circle();
        let f = Observable::fourier(&space, 3, 4, 0.5).unwrap();
        let near_one = f.eval(&Point::real(1.0 - 1e-12));
        assert!((near_one - f.eval(&Point::real(0.0))).abs() < 1e-9);
    }

    #[test]
    fn table_needs_finite_space() {
        assert!(Observable::table(&Space::interval(), vec![1.0]).is_err());
        let f = Observable::table(&Space::finite(3), vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(f.eval(&Point::State(2)), 1.0);
    }

    #[test]
    fn sums_combine_terms() {
        let space = Space::interval();
        let spec = ObservableSpec::Sum {
            terms: vec![
                WeightedTerm {
                    weight: 1.0,
                    observable: ObservableSpec::Coordinate { index: 0 },
                },
                WeightedTerm {
                    weight: 2.0,
                    observable: ObservableSpec::Constant { value: 0.25 },
                },
            ],
        };
        let f = Observable::new(spec, &space).unwrap();
        assert_eq!(f.eval(&Point::real(0.5)), 1.0);
    }
}
