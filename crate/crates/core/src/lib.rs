//! Reconstruction of three-dimensional vector fields from prescribed
//! divergence and curl on star-shaped voxel domains.
//!
//! The toolkit is organized around quaternion-valued fields on a cubic
//! lattice. The fundamental operators are weakly singular volume potentials
//! (the Teodorescu transform and the Newton potential), a surface single
//! layer, and smooth one-dimensional ray integrals taken along segments from
//! the star center (radial moments, the monogenic completion, and the
//! antigradient). On top of those sit the solvers: right inverses of curl
//! and of the div-curl pair, a double-curl inverse, reconstruction from
//! boundary traces, a ray-integral cross-check solver for harmonic data,
//! conductivity-coupled (Vekua-type) completions with a discrete Hilbert
//! transform, a static Maxwell solver, and a variational double-curl
//! minimizer. The `verify` and `suites` modules quantify everything with
//! relative residuals and convergence fits; `io` moves lattices in and out.
//!
//! Conventions used throughout:
//!
//! * Quaternion fields store 1, 3, or 4 components per voxel; 1- and
//!   3-component fields embed as scalar and vector parts.
//! * The left Dirac operator is `D w = -div w_vec + grad w0 + curl w_vec`.
//! * Domains carry a three-voxel halo so that central stencils and
//!   trilinear interpolation stay inside allocated data on the boundary
//!   ring; `Support` tracks whether halo values are meaningful.
//! * Residuals are discrete L2 norms with `h^3` weights over a named voxel
//!   region, divided by a problem-appropriate scale.

pub mod analytic;
pub mod conductivity;
pub mod diffops;
pub mod error;
pub mod gauss;
pub mod grid;
pub mod integral;
pub mod io;
pub mod rayops;
pub mod solvers;
pub mod suites;
pub mod variational;
pub mod vec3;
pub mod verify;

pub use conductivity::{Conductivity, EllipticSolve};
pub use error::{Error, Result};
pub use gauss::RayQuadrature;
pub use grid::{
    extract_boundary, BoundaryField, BoundarySet, Field, Grid, Shape, StarDomain, Support,
    VoxelMask,
};
pub use integral::QuadratureConfig;
pub use solvers::{
    HilbertSolution, MaxwellSolution, Solution, SolveOptions, SolveReport, VekuaOperatorTag,
};
pub use suites::{SuiteOptions, EXPERIMENT_NAMES, SUITE_NAMES};
pub use variational::{EnergyMode, EnergyProblem, MinimizeReport};
pub use vec3::{quat, vec3, Quat, Vec3};
pub use verify::{ConvergenceEstimate, ResidualCheck, ResidualSuite};
