//! Numerical laboratory for curl eigenfields on asymptotically flat 3-manifolds,
//! Almgren-type frequency diagnostics, Einstein-Maxwell verification of explicit
//! non-inheriting solutions, and 1D radial models of conjugated-operator
//! (Carleman/Mourre) positivity arguments.
//!
//! Everything is evaluated with forward-mode second-order dual arithmetic, so
//! curvature tensors and form derivatives are exact up to round-off. Operators
//! are pure functions of their inputs and safe to call concurrently.

pub mod beltrami;
pub mod carleman;
pub mod dual;
pub mod em_check;
pub mod forms;
pub mod frequency;
pub mod geometry;
pub mod linalg;
pub mod report;
pub mod shell;

pub use dual::Dual2;
pub use forms::{OneForm3, SphereQuadrature, TwoForm4};
pub use geometry::{ChartPoint3, DistanceField, MetricField3};
pub use linalg::{Banded, OperatorMatrix};
