//! Exact simulator and verification toolkit for the nearly finite Chacon
//! transformation T and its Cartesian powers.
//!
//! The construction is a pure function of [`ConstructionParams`]. A [`Tower`]
//! holds the heights and per-stage layouts up to a truncation depth N, and a
//! point of X is represented by its level index in tower N.

pub mod check;
pub mod crossings;
pub mod dynamics;
pub mod error;
pub mod hierarchy;
pub mod interval;
pub mod measures;
pub mod params;
pub mod rational;
pub mod tower;

pub use error::{Error, Result};
pub use params::{ConstructionParams, DerivedConstants, ValidationReport};
pub use tower::{LevelClass, LevelWalker, SpacerPos, Tower};
pub use dynamics::{Extension, Point, ProductPoint, TwistSpec};
pub use interval::Interval;
