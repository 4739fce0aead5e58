//! The guide's code listings, compiled and run as doctests.

#[doc = include_str!("../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../book/src/exact-numbers.md")]
pub mod exact_numbers {}
#[doc = include_str!("../../book/src/intersection-numbers.md")]
pub mod intersection_numbers {}
#[doc = include_str!("../../book/src/big-phase-space.md")]
pub mod big_phase_space {}
#[doc = include_str!("../../book/src/expressions.md")]
pub mod expressions {}
#[doc = include_str!("../../book/src/relations.md")]
pub mod relations {}
#[doc = include_str!("../../book/src/cli.md")]
pub mod cli {}
