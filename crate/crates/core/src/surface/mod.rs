//! The genus-2 surface: the regular-octagon Fuchsian group, a triangulated
//! fundamental domain with side identifications, cotangent weights for
//! Beltrami-deformed conformal structures, and theta-series directions.

mod group;
mod mesh;
mod theta;

pub use group::{build_genus2_octagon, FuchsianGroup, Octagon, Word};
pub use mesh::{
    cotan_weights, integrate, triangle_cotans, triangulate, CotanWeights, Identification,
    SurfaceMesh, MESH_FORMAT_HEADER,
};
pub use theta::{
    beltrami_from_quaddiff, beltrami_invariance_residual, differential_invariance_residual,
    enumerate_group, poincare_series, poincare_theta_series, quad_invariance_residual,
    BeltramiSample, QuadDifferentialSample, THETA_CUTOFF,
};
