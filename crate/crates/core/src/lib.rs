//! Desk-scale computability for the objects of weighted Hardy-space
//! theory: Muckenhoupt weights and their constants, intrinsic square
//! functions evaluated as linear programs over Hölder kernel classes, the
//! Calderón reproducing formula, and a constructive atomic decomposition —
//! plus verification suites that measure every inequality the theory
//! asserts, at grid resolution.

pub mod conv;
pub mod dyadic;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod ladder;
pub mod lp;
pub mod par;

pub use error::{Error, Result};
pub use grid::{Grid, Point, Preset, SampledField};
pub use ladder::HalfSpaceLadder;
pub use par::Parallelism;
