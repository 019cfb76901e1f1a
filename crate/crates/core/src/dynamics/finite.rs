//! Exact oracles on finite systems.

use super::{MapKind, SystemSpec};
use crate::error::{Error, Result};

fn finite_table(sys: &SystemSpec) -> Result<Vec<usize>> {
    let size = sys
        .space()
        .finite_size()
        .ok_or_else(|| Error::Unsupported("needs a finite space".into()))?;
    Ok(match sys.map() {
        MapKind::FiniteMap { table } => table.clone(),
        _ => (0..size)
            .map(|s| {
                sys.apply(&crate::spaces::Point::State(s))
                    .as_state()
                    .expect("finite maps stay finite")
            })
            .collect(),
    })
}

/// Partition of the states of a finite system into eventually-equivalent
/// orbit classes. With `m` states every orbit is periodic after `m` steps, so
/// `x ~ y` iff `T^m(x) = T^m(y)`. Classes are listed by smallest member.
pub fn eventual_orbit_classes(sys: &SystemSpec) -> Result<Vec<Vec<usize>>> {
    let table = finite_table(sys)?;
    Ok(classes_of_table(&table))
}

pub(crate) fn classes_of_table(table: &[usize]) -> Vec<Vec<usize>> {
    let m = table.len();
    let mut key_to_class: Vec<Option<usize>> = vec![None; m];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for x in 0..m {
        let mut y = x;
        for _ in 0..m {
            y = table[y];
        }
        match key_to_class[y] {
            Some(c) => classes[c].push(x),
            None => {
                key_to_class[y] = Some(classes.len());
                classes.push(vec![x]);
            }
        }
    }
    classes
}

/// Every subset of a finite space is 0-dimensional, so every self-map of a
/// finite space is doubly 0-dimensional.
pub fn is_doubly_zero_dimensional_finite(sys: &SystemSpec) -> Result<bool> {
    finite_table(sys).map(|_| true)
}
