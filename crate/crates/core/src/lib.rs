//! Bijective disk and square parameterizations of simply connected open
//! triangular meshes that balance angular and area distortion, plus
//! geometry-image encoding of the results.
//!
//! The balancing problem min E_C subject to μ·E_A = E_C is solved by an
//! augmented Lagrangian outer loop ([`alm`]) around a preconditioned
//! nonlinear conjugate gradient inner solver ([`solver`]); the multiplier it
//! converges to measures how the mesh trades angle against area accuracy.
//!
//! Quick start:
//! ```
//! use equimap::{alm, mesh};
//!
//! let m = mesh::bumpy_hemisphere(8);
//! let result = alm::solve_disk(&m, &alm::AlmConfig::default()).unwrap();
//! assert_eq!(result.summary.foldings, 0);
//! assert!(result.summary.energy_diff <= 1e-5);
//! ```

pub mod alm;
pub mod energy;
pub mod error;
pub mod geomimage;
pub mod laplacian;
pub mod linalg;
pub mod mesh;
pub mod metrics;
pub mod solver;

pub use error::{Error, Result};
pub use mesh::TriMesh;
