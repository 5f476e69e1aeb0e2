//! Method of fundamental solutions for the 2D Laplace equation with Dirichlet
//! data.
//!
//! Three solvers share one pipeline:
//!
//! - [`Method::Direct`] collocates the logarithmic kernel directly.
//! - [`Method::Qr`] uses a QR-rescaled harmonic expansion and needs every
//!   source on one origin-centred circle.
//! - [`Method::Svd`] replaces the kernels with an orthonormal harmonic basis
//!   built from Vandermonde-with-Arnoldi and a thin SVD. Its collocation
//!   matrix stays well conditioned as the number of sources grows.
//!
//! ```no_run
//! use mfs_core::{solve, BoundaryCurve, BoundaryData, Exec, Method, Problem};
//!
//! let problem = Problem::new(
//!     BoundaryCurve::star_kite(),
//!     BoundaryCurve::circle(2.0),
//!     BoundaryData::X2Y3,
//! );
//! let sol = solve(&problem, Method::Svd, 200, Exec::default()).unwrap();
//! println!("{:e} {:e}", sol.record.cond2, sol.record.linf_boundary_error);
//! ```

pub mod arnoldi;
pub mod bench;
pub mod error;
pub mod exec;
pub mod expansion;
pub mod geometry;
pub mod linalg;
pub mod solvers;

pub use bench::{
    emit_basis_samples, fit_growth_rate, run_sweep, ExperimentConfig, GrowthFit, SweepRow,
    SweepTable,
};
pub use error::{MfsError, Result};
pub use exec::Exec;
pub use geometry::{BoundaryCurve, Point2};
pub use solvers::{
    boundary_error, evaluate_solution, solve, BoundaryData, CollocationRule, Method, Model,
    Problem, SolveRecord, Solution,
};
