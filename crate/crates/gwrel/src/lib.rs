//! Exact evaluation of big-phase-space correlator expressions against
//! Gromov–Witten oracles for the point and for P¹, and the machinery to
//! regenerate, solve and verify the genus-3 universal equation relations.

pub mod bigphase;
pub mod equations;
pub mod exactnum;
pub mod memo;
pub mod p1_gw;
pub mod point_gw;
pub mod relations;
pub mod sym;

pub use exactnum::{AffineForm, LinearSystem, Rational, Solution, SolveError, Symbol};
