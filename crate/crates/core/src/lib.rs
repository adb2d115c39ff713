//! Intermediate β-transformations `x ↦ βx + α mod 1`: expansions, kneading
//! invariants, admissible pairs, the associated subshifts, and
//! approximation of arbitrary parameters by shifts of finite type.

pub mod admissibility;
pub mod density;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod real;
pub mod scan;
pub mod subshift;
pub mod words;

pub use error::{Error, Result};
