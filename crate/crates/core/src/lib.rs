//! Geometric mechanics on a single coordinate chart.
//!
//! Vector fields, differential forms and (1,1)-tensors are stored as symbolic
//! component expressions (or, for solver-defined fields, as evaluation
//! rules). On top of that calculus sit the integrability tools: Poisson
//! brackets and Liouville certificates, Lagrangian structures and Noether
//! constants, Lax pairs and recursion operators, Jacobi multipliers and
//! Hojman constants, Lie-algebra solvability, and Hamilton–Jacobi reduction.
//! Every claim is verified numerically at seeded sample points and, where it
//! is a conservation law, along integrated trajectories.

pub mod expr;
pub mod flow;
pub mod gen;
pub mod geometry;
pub mod hamjac;
pub mod invariants;
pub mod lagrangian;
pub mod liealg;
pub mod multipliers;
pub mod linalg;
pub mod par;
pub mod quad;
pub mod report;
pub mod sample;
pub mod symplectic;

pub use expr::{Chart, Expr, Flavor};
pub use geometry::{Form, PForm, Scalar, Tensor11, VectorField, VolumeForm};
pub use report::Report;
pub use sample::{Region, Sampler};
