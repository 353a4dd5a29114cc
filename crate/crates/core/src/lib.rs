//! Two-reflector beam shaping toolkit.
//!
//! Transforms a point-source spherical wavefront with intensity `I` on a
//! spherical aperture into a parallel beam with intensity `L` on a planar
//! aperture. The pipeline is:
//!
//! 1. [`optics`] — optical configuration, the cost kernel `K(m,x)` and the
//!    invertible transforms linking reflector radii/heights to dual
//!    potentials.
//! 2. [`grid`] — quadrature grids on both apertures and the dense
//!    `log K` cost matrix.
//! 3. [`transport`] — an exact transportation-simplex solver for the dual
//!    linear program, with certificates, c-transform tightening and a
//!    permutation brute-force oracle.
//! 4. [`reflector`] — reconstruction of the two surfaces as quadric
//!    envelopes of the tightened potentials, plus mesh export.
//! 5. [`raytrace`] — independent physical verification via the law of
//!    reflection off the supporting quadrics.
//!
//! With the default `parallel` feature the data-parallel inner loops
//! (cost-matrix assembly, batch tracing, mesh sampling) run on rayon;
//! without it they fall back to equivalent sequential code producing
//! bit-identical results.

pub mod error;
pub mod grid;
pub mod io;
pub mod math;
pub mod optics;
pub mod par;
pub mod raytrace;
pub mod reflector;
pub mod transport;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
