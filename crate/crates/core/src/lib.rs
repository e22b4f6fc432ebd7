//! SRB density gradients along trajectories of hyperbolic chaotic maps.
//!
//! The gradient `g` of the log conditional SRB density along unstable
//! manifolds is computed recursively from first-order tangent vectors
//! (an orthonormal unstable frame, see [`tangent`]) and second-order tangent
//! vectors (the chart curvature, see [`curvature`]). The remaining modules
//! supply the maps, dense kernels, and the estimators used to validate `g`.

pub mod curvature;
pub mod error;
pub mod hyperbolicity;
pub mod linalg;
pub mod maps;
pub mod measure;
pub mod parallel;
pub mod rng;
pub mod tangent;

pub use error::{Error, Result};
