//! Computational workbench for metric Fraïssé classes of finite relational
//! structures with Lipschitz predicates.
//!
//! Everything is exact: distances, predicate values, LP optima and coloring
//! values are [`Rational`]s.

// errors carry exact rationals and diagnostics; index loops mirror the formulas
#![allow(clippy::result_large_err, clippy::large_enum_variant, clippy::needless_range_loop)]

pub mod amalgamation;
pub mod concentration;
pub mod embeddings;
pub mod format;
pub mod ramsey;
pub mod rational;
pub mod ratlp;
pub mod report;
pub mod structures;

pub use rational::Rational;
pub use structures::{MetricStructure, PointedStructure, Signature};
