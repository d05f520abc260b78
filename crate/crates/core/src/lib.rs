//! Functional regression of contextual CDFs and the epoch-batched
//! inverse-gap-weighting decision engine built on it.
//!
//! Outcome distributions are modelled as mixtures
//! `F*(x, a, s) = ∫_Ω θ*(w) φ(x, a, w, s) dν(w)` of a known CDF basis family
//! `φ`. The coefficient density `θ*` is recovered from single-sample bandit
//! feedback by a truncated spectral pseudo-inverse of the design integral
//! operator, projected back onto the set of bounded densities. The engine
//! wraps that oracle in an epoch schedule and plays inverse gap weighting on
//! the estimated utilities.
//!
//! Everything here is allocation-only `no_std`; IO, configuration and the
//! command line live in the `cdfbandit` crate.
#![no_std]
#![warn(missing_debug_implementations)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod basis;
pub mod budget;
pub mod decay;
pub mod degenerate;
pub mod engine;
pub mod env;
mod error;
pub mod functional;
pub mod grid;
pub mod linalg;
mod math;
pub mod operator;
pub mod projection;
pub mod quadrature;
pub mod regression;
pub mod spectral;

pub use basis::{BasisConstants, CdfBasis, FnBasis, PhiTable};
pub use budget::{error_budget, BudgetInputs, ErrorBudget};
pub use decay::{estimate_eigendecay, EigendecayFit};
pub use degenerate::{degenerate_kernel_eig, degenerate_kernel_eig_on};
pub use engine::{
    exploration_param, igw_distribution, run_episode, DecaySource, EpisodeConfig, EpochSchedule,
    RegretTrace,
};
pub use env::{make_catalog_env, CatalogSpec, Environment, Grids, SampleRecord, ThetaSpec};
pub use error::{Error, Result};
pub use functional::UtilityFunctional;
pub use grid::{build_uniform_grid, inner_product, GridFunction, QuadratureGrid};
pub use linalg::{sym_eig, SymEig, SymMatrix};
pub use operator::{design_operator, point_kernel, spectral_decompose, DesignOperator};
pub use projection::{project_to_c, CoefficientEstimate, ProjectionDiagnostics};
pub use quadrature::gauss_legendre;
pub use regression::{regress, select_truncation, TruncationPlan};
pub use spectral::SpectralDecomposition;
