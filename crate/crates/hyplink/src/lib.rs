//! Hyperbolic structures on link complements, computed directly from a link
//! diagram.
//!
//! Instead of triangulating the complement, this crate solves a polynomial
//! system of "label equations" attached to the diagram itself: one complex
//! label per side of each edge (peripheral translations between crossing
//! geodesics) and one complex label per crossing (intercusp geodesic data).
//! A solution of the system determines a parabolic representation of the
//! link group into PSL(2, C), and for the geometric solution it determines
//! the complete hyperbolic structure.
//!
//! Pipeline:
//!
//! 1. [`diagram`] parses a PD code into an oriented planar diagram with
//!    faces, checkerboard colors and per-corner signs.
//! 2. [`equations`] assembles the region equations into a residual system
//!    with an analytic Jacobian.
//! 3. [`solver`] finds all isolated solutions by damped Gauss-Newton from
//!    many starts and selects the geometric candidate.
//! 4. [`holonomy`] builds the induced parabolic representation and verifies
//!    it against the Wirtinger presentation.
//! 5. [`analysis`] derives geometric invariants (intercusp distances,
//!    meridian lengths, tangle boundary labels).
//!
//! The [`census`] module carries the built-in example diagrams used by the
//! regression suite, and [`report`] the machine-readable output schema.

pub mod analysis;
pub mod census;
pub mod diagram;
pub mod equations;
pub mod holonomy;
pub mod moebius;
pub mod report;
pub mod solver;

pub use moebius::MoebiusMatrix;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
