//! Local cubic splines on multi-patch domains.
//!
//! Patches carry their own spline grids; C¹ coupling across interfaces comes from
//! reconstructing the interface derivatives out of function values alone. The
//! reconstruction is exact (it reproduces the equivalent global spline) or truncated
//! to a local stencil. On top of that sits a backward semi-Lagrangian advection step
//! on mapped polar-like domains and a small spectral tool for stability checks.

pub mod advection;
pub mod domain1d;
pub mod domain2d;
pub mod error;
pub mod interface;
pub mod linalg;
pub mod line;
pub mod mapping;
pub mod reconstruct;
pub mod spline;
pub mod spline2d;
pub mod stability;

pub use error::{Error, Result};
