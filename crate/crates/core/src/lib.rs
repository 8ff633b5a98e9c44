//! Accelerated first-order methods for smooth convex minimization, together
//! with the machinery that checks their guarantees numerically.
//!
//! The crate is organised bottom-up:
//!
//! * [`coeffs`]: the θ, θ̃ and φ scalar sequences.
//! * [`linalg`]: small dense symmetric linear algebra (Jacobi eigensolver,
//!   PSD tests, least squares).
//! * [`oracles`]: test functions with certified smoothness constants.
//! * [`inequalities`]: residuals of the smooth-convex inequality families.
//! * [`fsfo`]: fixed-step methods as lower-triangular step-size matrices.
//! * [`adaptive`]: randomized coordinate and backtracking line-search methods.
//! * [`lyapunov`]: potential functions and exact decrement decompositions.
//! * [`pep`]: closed-form dual certificates for the performance estimation
//!   problem and their verification.
//! * [`par`]: data-parallel helpers with a sequential fallback.
//!
//! ```
//! use accel_core::{coeffs::CoefficientTable, fsfo, oracles, fsfo::Method};
//!
//! let table = CoefficientTable::new();
//! let problem = oracles::registry::lookup("quad-diag-10").unwrap();
//! let schedule = fsfo::build_schedule(Method::Fgm, 10, &table).unwrap();
//! let traj = fsfo::run_fsfo(&schedule, &problem.oracle, &problem.x0, &Default::default()).unwrap();
//! assert_eq!(traj.x.len(), 11);
//! ```

pub mod adaptive;
pub mod coeffs;
pub mod error;
pub mod fsfo;
pub mod inequalities;
pub mod linalg;
pub mod lyapunov;
pub mod oracles;
pub mod par;
pub mod pep;
pub mod rng;
pub mod trajectory;
pub mod vecops;

pub use error::{Error, Result};
