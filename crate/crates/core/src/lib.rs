//! The pentagram map in corner coordinates, its max-plus limit automaton,
//! and the `R_t` semiring dynamics interpolating between them.

pub mod automaton;
pub mod dynamics;
pub mod experiments;
pub mod geometry;
pub mod invariants;
pub mod linalg;
pub mod sampling;
pub mod tropical;
