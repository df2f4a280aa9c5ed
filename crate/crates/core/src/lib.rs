//! Combinatorial patchworking of real plane algebraic curves.
//!
//! The crate builds piecewise-linear T-curves from signed lattice
//! triangulations, certifies convexity of the lift by exact rational linear
//! programming, constructs the matching polynomial families, and checks the
//! predicted projective topology numerically at small parameter values.
//!
//! Layout:
//! - [`lattice`]: exact lattice polygons, triangulations, normal rays
//! - [`convexity`]: convexifying height functions and regular subdivisions
//! - [`patchwork`]: quadrant symmetrization, midline curves, isotopy codes
//! - [`classify`]: the shared curve classifier on glued quadrant complexes
//! - [`charts`]: charts of trinomials and quasi-homogeneous polynomials,
//!   side adjunction and the affine/projective topology recovery
//! - [`poly`]: sparse rational polynomials, patchwork families, transforms
//! - [`numeric`]: sign grids, contour extraction, the patchwork verifier
//! - [`fixtures`]: built-in problems (ellipse, Harnack, Gudkov, pinwheel)
//! - [`problem`]: JSON problem/report schemas shared with the CLI and server

pub mod charts;
pub mod classify;
pub mod convexity;
pub mod error;
pub mod fixtures;
pub mod lattice;
pub mod lp;
pub mod numeric;
pub mod patchwork;
pub mod poly;
pub mod problem;
pub mod rat;

pub use convexity::{ConvexPartition, HeightFunction};
pub use error::Error;
pub use lattice::{ConvexPolygon, LatticePoint, Ray, Sign, SignedTriangulation};

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
