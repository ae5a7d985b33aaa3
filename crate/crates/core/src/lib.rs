//! Numerical laboratory for quasi-maximally superintegrable Hamiltonians
//! built on a deformed sl(2,R) Poisson coalgebra.
//!
//! The crate constructs the deformed generators and their universal integral
//! chains at any number of sites, verifies bracket identities and functional
//! independence numerically, characterizes the Riemannian geometries induced
//! by the kinetic Hamiltonians (metrics, curvatures, geodesic polar charts),
//! and integrates Hamilton's equations with invariant-drift monitoring.
//!
//! Layout:
//! - [`algebra`]: closed-form generators, Casimirs and integral chains
//! - [`observable`]: dual-number gradients, Poisson brackets, rank tests
//! - [`hamiltonians`]: the deformed family and the curved classical systems
//! - [`geometry`]: metrics, curvature evaluators, polar charts
//! - [`dynamics`]: symplectic integration and parameter sweeps

pub mod algebra;
pub mod error;
pub mod hamiltonians;
pub mod linalg;
pub mod observable;
pub mod scalar;
pub mod state;

pub mod dynamics;
pub mod geometry;

pub use algebra::{casimir, generators, universal_integrals, GeneratorTriple, IntegralSet};
pub use error::{BuildError, EvalError};
pub use observable::{independence_rank, poisson_bracket, verify_algebra, BracketReport, Observable};
pub use state::{ModelParams, PhaseState, SampleBox, StateSampler};
