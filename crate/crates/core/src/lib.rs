//! Morley finite element discretization of the distributed optimal control
//! problem for the von Kármán plate equations.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: conforming triangulations, red and newest-vertex-bisection refinement.
//! * [`morley`]: Morley element basis, degree-of-freedom map, quadrature, projections, norms.
//! * [`forms`]: assembly of the biharmonic and von Kármán forms, residuals and Jacobians.
//! * [`control`]: Newton + primal-dual active set solver for the discrete optimality system.
//! * [`estimator`]: residual-based a posteriori estimator and Dörfler marking.
//! * [`harness`]: manufactured test cases, uniform/adaptive drivers and CSV reports.
//!
//! Geometry and element-level math are generic over [`Scalar`] (`f32`/`f64`);
//! assembly and the sparse solvers run in `f64`. The aliases below name the
//! concrete types used by the solver stack.

pub mod control;
pub mod error;
pub mod estimator;
pub mod forms;
pub mod harness;
pub mod mesh;
pub mod morley;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Triangulation with `f64` coordinates.
pub type Mesh = mesh::Triangulation<f64>;
/// Local Morley basis in `f64`.
pub type Basis = morley::LocalBasis<f64>;
/// Quadrature rule in `f64`.
pub type Quadrature = morley::QuadratureRule<f64>;
