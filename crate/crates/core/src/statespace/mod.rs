//! Linear-Gaussian state-space representation of the structural model, with
//! Kalman filtering, fixed-interval smoothing and simulation smoothing.
//!
//! The state evolves as `α_{t+1} = c + T α_t + R η_t`, `η_t ~ N(0, Q)` and is
//! observed through `y_t = Z α_t + ε_t`, `ε_t ~ N(0, H)`. The intercept `c`
//! carries the `D(1 - ρ)` pull of each damped slope.

mod filter;
mod spec;
mod system;

pub use filter::{
    kalman_filter, simulation_smoother, smooth, FilterResult, SmootherResult, DIFFUSE_VARIANCE,
};
pub use spec::{Component, ModelSpec, SeriesBlock, SeriesSpec, StateLayout};
pub use system::{build_state_space, StateSpaceSystem, DEFAULT_OBS_VARIANCE, DEFAULT_STATE_VARIANCE};
