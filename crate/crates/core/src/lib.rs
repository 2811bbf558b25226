//! Finite-difference pricing of European options under volatility uncertainty.
//!
//! The value function solves a fully nonlinear Black-Scholes equation in which
//! the diffusion coefficient is chosen adversarially from a volatility band
//! `[Σ_low, Σ_high]`. This crate contains the numerics only:
//!
//! * [`model`]: market and contract data, the optimal-volatility selector and
//!   the classical Black-Scholes closed form.
//! * [`grid`]: uniform space-time lattices, central difference operators and
//!   the mesh-ratio conditions under which the schemes are monotone.
//! * [`schemes`]: explicit and implicit (Picard-linearised) time steppers in
//!   the log-price domain, and an explicit stepper in the price domain.
//! * [`analysis`]: interpolation at the target point, error norms, observed
//!   convergence rates and inner-iteration statistics.
//!
//! The crate is `no_std` and needs only `alloc`. Timing, file formats and the
//! command-line front end live in the `gopt` crate.

#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod grid;
pub mod model;
pub mod schemes;
pub mod tridiag;

pub use analysis::{
    interpolate_quadratic, iteration_profile, linf_error, observed_rate, IterationProfile,
};
pub use error::{Error, MeshViolation, Result};
pub use grid::{
    build_grid, check_explicit_mesh, check_s_domain_mesh, first_diff, second_diff, GridSpec,
    MeshReport,
};
pub use model::{
    bs_closed_form, payoff_on_grid, sigma_star, Domain, EffectiveBand, MarketParams, OptionKind,
    PayoffKind, PayoffSpec, RightBoundary,
};
pub use schemes::{
    explicit_step_s, explicit_step_x, implicit_step_x, solve, LevelStorage, MeshEnforcement,
    Method, SchemeConfig, Solution,
};
