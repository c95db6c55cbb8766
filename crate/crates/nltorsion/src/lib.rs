//! Exit times of drift diffusions and optimal trapping.
//!
//! This crate studies the Dirichlet problem
//!
//! ```text
//! -Delta u + b(x) . grad u = 1   in Omega,     u = 0  on the boundary,
//! ```
//!
//! whose solution is the expected exit time of the diffusion
//! `dX = -b(X) dt + sqrt(2) dB`, and the nonlinear problem obtained by
//! choosing, at every point, the drift of maximal strength `B` that
//! prolongs the lifetime the most:
//!
//! ```text
//! -Delta u - B |grad u| = 1.
//! ```
//!
//! The crate provides
//!
//! - analytic planar domains and Shortley-Weller grid masks ([`geometry`]),
//! - an exact radial solver on balls in any dimension ([`radial`]),
//! - a finite-difference solver for both PDEs on 2D masks ([`pde2d`]),
//! - Euler-Maruyama exit-time simulation ([`montecarlo`]),
//! - the functionals the theory quantifies: Lp norms, total gradient,
//!   boundary flux, level sets ([`functionals`]),
//! - and experiment drivers that compare shapes of equal volume and check
//!   the exact identities and inequalities satisfied by the ball
//!   ([`experiments`]).

pub mod error;
pub mod experiments;
pub mod functionals;
pub mod geometry;
pub mod montecarlo;
pub mod pde2d;
pub mod radial;
pub mod special;

pub use error::{Error, Result};
pub use experiments::{
    large_drift_trend, run_shape_comparison, verify_drift_dominance, verify_level_set_induction,
    verify_profile_inequalities, ComparisonTable, ExperimentConfig,
};
pub use functionals::{
    coarea_integral, evaluate, level_set_perimeter, superlevel_restrict, FunctionalReport,
};
pub use geometry::{build_mask, equal_area_family, Domain2D, GridMask};
pub use montecarlo::{simulate_exit, DriftPolicy, ExitTimeEstimate};
pub use pde2d::{
    optimal_drift_of, solve_linear_drift, solve_nonlinear, ScalarField, SolveReport, VectorField,
};
pub use radial::{ball_flux_profile, check_flux_ode, flux_w, solve_radial, RadialSolution};
