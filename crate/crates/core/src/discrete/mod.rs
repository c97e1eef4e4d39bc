pub mod grid;
pub mod operators;

pub use grid::{Grid, GridKind, PotentialRule, Region, Side};
pub use operators::*;
