//! Numerical laboratory for the energy functional of equivariant harmonic
//! maps on the Teichmüller space of a genus-2 surface.
//!
//! The crate is organised bottom-up:
//!
//! - [`higgs_algebra`]: pointwise matrix algebra of the Hitchin section.
//! - [`disk`]: Poincaré-disk geometry (Möbius maps, exp/log, transport).
//! - [`surface`]: the regular-octagon Fuchsian group, its triangulated
//!   fundamental domain, cotangent weights and theta-series directions.
//! - [`harmonic_map`]: equivariant discrete harmonic maps into H².
//! - [`selfduality`]: the cyclic self-duality (Toda) system, flatness
//!   holonomy and the Higgs-side energy.
//! - [`psh_lab`]: energy over holomorphic disks, finite-difference
//!   Laplacians, Toledo's quantities and the Hessian index probe.

pub mod disk;
pub mod error;
pub mod harmonic_map;
pub mod higgs_algebra;
pub mod psh_lab;
pub mod selfduality;
pub mod sparse;
pub mod surface;

pub use error::{Error, Result};
pub use num_complex::Complex64;
