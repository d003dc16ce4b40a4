//! Computations with discrete subgroups of `PU(n,1)` acting on the complex
//! hyperbolic ball.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: the Hermitian-form model of the ball (ball and Siegel
//!   bases), distances, isometry classification, Busemann functions and the
//!   horoball-translating maps `L_t`.
//! * [`heisenberg`]: the `U(n-1) ⋉ N` calculus for stabilizers of a boundary
//!   point and the parabolic analysis deciding Steinness of the quotient and
//!   the exact critical exponent.
//! * [`exponent`]: breadth-first orbit enumeration and numerical estimation
//!   of the critical exponent from orbit growth.
//! * [`density`]: finite atomic Patterson–Sullivan densities, the log-mass
//!   function and a finite-difference Levi-form probe.
//! * [`groupfile`]: the textual group description format.
//! * [`scenarios`]: built-in groups used by the CLI, tests and benchmarks.

pub mod density;
pub mod error;
pub mod exponent;
pub mod geometry;
pub mod groupfile;
pub mod heisenberg;
pub mod linalg;
pub mod scenarios;

pub use num_complex::Complex64;

pub use density::{geodesic_step, DensityApprox, LeviProbe, ProbeGrid, ProbeReport};
pub use error::{Error, Result};
pub use groupfile::{GeneratorEntry, GroupFile};
pub use exponent::{
    enumerate_orbit, enumerate_orbit_with, estimate_delta, estimate_delta_with, poincare_partial_sum,
    BisectionTarget, DeltaEstimate, EstimatorOptions,
    GroupSpec, OrbitCloud, OrbitLimits,
};
pub use geometry::{
    ball_axis_boost, busemann_siegel, horoball_translate, siegel_dilation, Basis, CMatrix, CVector, HermitianModel, Isometry,
    IsometryClass, PointKind, ProjectivePoint, SiegelPoint,
};
pub use heisenberg::{
    analyze, totally_real_test, z2_witness, CriticalExponent, HeisenbergElement,
    ParabolicAnalysis, ParabolicGroupInput, Word, Z2Witness,
};
