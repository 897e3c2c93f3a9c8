//! Burg maximum entropy spectral analysis.
//!
//! Fits autoregressive models to evenly sampled series with Burg's
//! recursion, selects the model order with FPE, CAT or OBD, and turns the
//! fit into a power spectral density or a stochastic forecast. Synthetic
//! data generators, Welch's method and the validation experiments live
//! alongside.

pub mod baseline;
pub mod error;
pub mod estimator;
pub mod forecast;
pub mod rng;
pub mod selection;
pub mod spectrum;
pub mod stats;
pub mod synth;
pub mod types;
pub mod validate;

pub use error::{MesaError, Result};
pub use estimator::{fit, EstimatorMethod};
pub use forecast::{forecast, forecast_summary, ForecastSummary};
pub use selection::{fit_and_select, max_order, EarlyStopConfig, SelectedFit};
pub use spectrum::{psd, psd_default};
pub use types::{
    ArModel, Criterion, ForecastEnsemble, OrderSelection, RecursionTrace, Sided, SpectralDensity,
    TimeSeries,
};
