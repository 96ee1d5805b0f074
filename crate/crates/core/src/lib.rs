//! Bergman orthogonal polynomials on archipelagos: finite unions of disjoint
//! Jordan domains in the plane.
//!
//! The pipeline starts from the complex power moments of the area measure,
//! builds the orthonormal polynomials with an Arnoldi Gram–Schmidt process at
//! extended precision, and uses them to reconstruct island boundaries from
//! Christoffel functions and to study zero distributions against the exterior
//! Green function. Lemniscate archipelagos come with closed-form and Szegő
//! based oracles.

pub mod basis;
pub mod christoffel;
pub mod cli;
pub mod contour;
pub mod error;
pub mod geometry;
pub mod green;
pub mod io;
pub mod lemniscate;
pub mod linalg;
pub mod moments;
pub mod mp;
pub mod quadrature;
pub mod svg;
pub mod zeros;

pub use basis::{orthonormalize, BergmanBasis, OrthoOptions};
pub use error::{Error, Result};
pub use geometry::{ArchipelagoSpec, IslandSpec};
pub use moments::{compute_moments, MomentMatrix};
pub use mp::{MpComplex, MpReal, Precision};

pub use num_complex::Complex64 as C64;
