//! Exact (non-formal) quantization of cotangent bundles `T*M` for a chart-based
//! configuration manifold carrying an affine connection, a positive measure and
//! a closed magnetic 2-form.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`] — manifold models (chart, Christoffel field, measure, Faraday
//!   tensor) and base-manifold curvature;
//! * [`geodesics`] — exponential/logarithm maps, geodesic reflections,
//!   midpoints and the Jacobian densities built from variational frames;
//! * [`magnetic`] — flux through geodesic triangles, radial-gauge potentials;
//! * [`quantizer`] — the quantizer family, Wigner symbol/kernel transforms and
//!   quantization of momentum-polynomial symbols;
//! * [`reflections`] — the lifted symplectic maps on `T*M`, sigma reflections,
//!   autoparallel flows and their unitary counterparts;
//! * [`connection`] — the magneto-geodesic connection on `T*M`, its curvature,
//!   Ricci tensor and the coupling identities;
//! * [`star`] — the groupoid convolution, the exact star product, triple
//!   reflection kernels, the front effect and the hbar expansion;
//! * [`oracles`] — independent closed-form references (flat Moyal products,
//!   ambient hyperboloid geometry) used by the verification suites.
//!
//! All heavy batch loops run data-parallel via rayon when the `parallel`
//! feature (default) is enabled; with the feature disabled the same entry
//! points fall back to sequential iteration.

pub mod batch;
pub mod connection;
pub mod error;
pub mod export;
pub mod fields;
pub mod geodesics;
pub mod geometry;
pub mod linalg;
pub mod magnetic;
pub mod ode;
pub mod oracles;
pub mod quad;
pub mod quantizer;
pub mod reflections;
pub mod star;

pub use error::{GeomError, Result};
pub use geometry::{builtin_model, FieldKind, ManifoldModel, ModelKind, PhasePoint};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
