//! Spectral engine for static doubly periodic patterns at a fluid-ferrofluid
//! interface near the Rosensweig instability.
//!
//! The crate evaluates the Dirichlet-Neumann operators of the two flattened
//! fluid strips (as Taylor expansions and by a full nonlinear solve), builds
//! the linear pencil and its critical point, and computes the coefficients
//! that decide whether a roll, rectangle or hexagon branch bifurcates
//! transcritically, supercritically or subcritically.
//!
//! Module map:
//!
//! - [`lattice`]: periodic lattices, dual lattices, rotation symmetrisation.
//! - [`magnetization`]: magnetisation laws, their derivatives at `s = 1` and
//!   the Taylor forms of `nu(T) = mu(|T + e_y|)`.
//! - [`fields`]: truncated Fourier surface fields and Chebyshev volume fields.
//! - [`dn_operators`]: Dirichlet-Neumann operators of the lower (magnetic)
//!   and upper (non-magnetic) strips.
//! - [`linear_analysis`]: linear pencil, dispersion relation, critical point,
//!   kernel, projection and resolvent.
//! - [`bifurcation`]: the residual map, its quadratic and cubic forms and the
//!   branch coefficients.

pub mod bifurcation;
pub mod chebyshev;
pub mod dn_operators;
mod error;
pub mod fields;
pub mod krylov;
pub mod lattice;
pub mod linear_analysis;
pub mod magnetization;

pub use error::{Error, Result};

pub use bifurcation::{BranchClassification, BranchProblem, BranchResult};
pub use dn_operators::{DnExpansion, Strip, StripSolver};
pub use fields::{Resolution, StateTriple, SurfaceField, VolumeField};
pub use lattice::{LatticeSpec, PatternKind, WaveVector};
pub use linear_analysis::CriticalPoint;
pub use magnetization::{LawConstants, MagnetizationLaw};
