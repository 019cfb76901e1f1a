//! Exact check that the delay map induces a bijection between eventual
//! orbit classes of a finite system and of its reconstruction.

use super::delay_values;
use crate::dynamics::{classes_of_table, eventual_orbit_classes, Observable, SystemSpec};
use crate::error::{Error, Result};
use crate::spaces::Point;
use serde::Serialize;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum IsomorphismOutcome {
    Pass,
    /// States `x, y` share a delay vector but `T x, T y` do not.
    ShiftNotWellDefined {
        x: usize,
        y: usize,
    },
    /// `x, y` lie in distinct orbit classes whose images coincide.
    ClassesCollapsed {
        x: usize,
        y: usize,
    },
    /// The image of `x`'s class is not a class of the reconstruction.
    ClassMapNotWellDefined {
        x: usize,
        y: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsomorphismReport {
    pub k: usize,
    pub source_classes: Vec<Vec<usize>>,
    /// Distinct delay vectors over `{0..k}`, indexed by image state.
    pub image_states: Vec<Vec<f64>>,
    /// Induced shift on image states.
    pub image_shift: Vec<usize>,
    pub image_classes: Vec<Vec<usize>>,
    pub outcome: IsomorphismOutcome,
}

impl IsomorphismReport {
    pub fn passed(&self) -> bool {
        self.outcome == IsomorphismOutcome::Pass
    }
}

/// See [`trajectory_isomorphism_check_with_shift`]; uses the induced shift.
pub fn trajectory_isomorphism_check_finite(sys: &SystemSpec, f: &Observable, k: usize) -> Result<IsomorphismReport> {
    trajectory_isomorphism_check_with_shift(sys, f, k, |_, induced| induced)
}

/// Builds the reconstructed finite system (delay vectors over `{0..k}` as
/// states) and checks that `[o(x)] -> [o(I x)]` is a bijection of eventual
/// orbit classes. `shift_rule(state, induced_image)` returns the image used
/// for each reconstructed state; passing anything but the induced image is
/// only useful for fault injection.
pub fn trajectory_isomorphism_check_with_shift(
    sys: &SystemSpec,
    f: &Observable,
    k: usize,
    shift_rule: impl Fn(usize, usize) -> usize,
) -> Result<IsomorphismReport> {
    let size = sys
        .space()
        .finite_size()
        .ok_or_else(|| Error::Unsupported("trajectory isomorphism check needs a finite system".into()))?;
    let source_classes = eventual_orbit_classes(sys)?;
    let times: Vec<usize> = (0..=k).collect();

    let mut image_of = Vec::with_capacity(size);
    let mut image_states: Vec<Vec<f64>> = Vec::new();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    for s in 0..size {
        let values = delay_values(sys, f, &times, &Point::State(s));
        let key: Vec<u64> = values.iter().map(|v| (v + 0.0).to_bits()).collect();
        let id = *index.entry(key).or_insert_with(|| {
            image_states.push(values);
            image_states.len() - 1
        });
        image_of.push(id);
    }

    let next_state = |s: usize| sys.apply(&Point::State(s)).as_state().expect("finite map");
    let mut representative: Vec<Option<usize>> = vec![None; image_states.len()];
    let mut induced = vec![usize::MAX; image_states.len()];
    let mut outcome = IsomorphismOutcome::Pass;
    for s in 0..size {
        let id = image_of[s];
        let target = image_of[next_state(s)];
        match representative[id] {
            None => {
                representative[id] = Some(s);
                induced[id] = target;
            }
            Some(r) if induced[id] != target && outcome == IsomorphismOutcome::Pass => {
                outcome = IsomorphismOutcome::ShiftNotWellDefined { x: r, y: s };
            }
            Some(_) => {}
        }
    }
    let image_shift: Vec<usize> = induced
        .iter()
        .enumerate()
        .map(|(id, &t)| shift_rule(id, t).min(image_states.len() - 1))
        .collect();
    let image_classes = classes_of_table(&image_shift);

    if outcome == IsomorphismOutcome::Pass {
        let mut image_class_of = vec![0; image_states.len()];
        for (c, members) in image_classes.iter().enumerate() {
            for &m in members {
                image_class_of[m] = c;
            }
        }
        // class map must be well defined and injective
        let mut owner: HashMap<usize, usize> = HashMap::new();
        'classes: for class in &source_classes {
            let first = class[0];
            let target = image_class_of[image_of[first]];
            for &x in &class[1..] {
                if image_class_of[image_of[x]] != target {
                    outcome = IsomorphismOutcome::ClassMapNotWellDefined { x: first, y: x };
                    break 'classes;
                }
            }
            if let Some(&other) = owner.get(&target) {
                outcome = IsomorphismOutcome::ClassesCollapsed { x: other, y: first };
                break;
            }
            owner.insert(target, first);
        }
        // surjective: every reconstructed class is hit
        if outcome == IsomorphismOutcome::Pass && owner.len() != image_classes.len() {
            let missing = (0..image_classes.len()).find(|c| !owner.contains_key(c)).unwrap_or(0);
            let state = image_classes[missing][0];
            let x = representative[state].unwrap_or(0);
            outcome = IsomorphismOutcome::ClassMapNotWellDefined { x, y: x };
        }
    }

    Ok(IsomorphismReport {
        k,
        source_classes,
        image_states,
        image_shift,
        image_classes,
        outcome,
    })
}
