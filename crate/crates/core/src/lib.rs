//! Reconstruction of directed network structure from time-course data.
//!
//! The crate covers the full pipeline used by the benchmark harness:
//!
//! * [`dataset`] — time-series datasets and their conversion into regression
//!   problems (conventional next-value responses or Euler gradient responses,
//!   standard/product/lagged predictor sets);
//! * [`sim`] — a fixed-step RK4 integrator with cubic Hermite dense output and
//!   delay support, used to generate benchmark data from nonlinear ODE network
//!   models, plus SNR-calibrated noise addition;
//! * [`bayes`] — exact Bayesian model averaging over Markov blankets with a
//!   Zellner g-prior marginal likelihood and an in-degree-capped network prior;
//! * [`gs`] — the grow-shrink Markov blanket baseline driven by partial
//!   correlation tests;
//! * [`metrics`] — ROC/AUR evaluation against ground-truth adjacency and
//!   replicate-level aggregation.

pub mod bayes;
pub mod dataset;
pub mod error;
pub mod gs;
pub mod metrics;
pub mod sim;

pub use error::{Error, Result};
