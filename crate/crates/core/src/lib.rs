//! Delay-coordinate reconstruction for non-invertible maps on compact metric
//! spaces, including fractal state spaces, together with numerical
//! certificates: trajectory embedding, entropy preservation, coincidence
//! bounds, chain recurrence and trajectory-separation witnesses.

pub mod delay;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod recurrence;
pub mod spaces;

pub use error::{Error, Result};
pub use spaces::{Cell, Grid, Point, Space, SpaceKind};

pub use dynamics::{MapKind, Observable, ObservableSpec, SystemSpec};
