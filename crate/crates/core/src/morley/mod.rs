//! Morley element: local basis, slot numbering with clamped boundary
//! values, quadrature, field evaluation, broken norms and elementwise
//! polynomial projections.

mod basis;
mod dofmap;
mod projection;
pub mod quadrature;
mod space;

pub use basis::{bracket, frobenius, LocalBasis, Sym2};
pub use dofmap::MorleyDofMap;
pub use projection::{barycentric, PiecewisePolyProjection};
pub use quadrature::{gauss_legendre_unit, to_physical, QuadratureRule};
pub use space::{BrokenNorms, Element, ExactFn, MorleyField, MorleySpace};
