//! Multivariate Bayesian structural time series.
//!
//! A target vector `y_t` is modelled as the sum of a damped-slope local linear
//! trend, a dummy-form seasonal, a damped stochastic cycle, a sparse regression
//! on contemporaneous predictors, and correlated Gaussian noise. The crate
//! provides:
//!
//! * [`simulator`] to generate synthetic data with known ground truth,
//! * [`statespace`] to assemble the linear-Gaussian system and run the Kalman
//!   filter, the fixed-interval smoother and a simulation smoother,
//! * [`trainer`] for the Gibbs sampler with spike-and-slab selection,
//! * [`forecaster`] for posterior predictive simulation,
//! * [`reporting`] for inclusion probabilities, estimates, decompositions and plots,
//! * [`io`] for CSV ingestion and draw persistence.

pub mod error;
pub mod forecaster;
pub mod io;
mod linalg;
pub mod reporting;
pub mod simulator;
pub mod statespace;
pub mod stochastics;
pub mod trainer;

pub use error::{Error, Result};
pub use forecaster::{forecast, one_step_predictive_moments, ForecastResult};
pub use simulator::{simulate_dataset, PredictorLaw, PredictorPool, SimConfig, SimOutput};
pub use statespace::{
    build_state_space, kalman_filter, simulation_smoother, smooth, Component, FilterResult,
    ModelSpec, SeriesSpec, SmootherResult, StateSpaceSystem,
};
pub use stochastics::RngStream;
pub use trainer::{train, McmcDraws, PriorConfig, SweepOrder, TrainOptions};
