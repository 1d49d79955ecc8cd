//! Exact computer algebra for degree-4 extremal transitions.

pub mod algebra;
pub mod series;
pub mod operator;
pub mod gkz;
pub mod transition;
pub mod report;
