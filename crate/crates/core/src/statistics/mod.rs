//! Ensembles of the truncated flow and the hypothesis tests run on them.
//!
//! Every test compares against a law fixed in advance: tolerances are a multiple of the
//! standard error plus, where available, the difference to a coupled run at half the step.

mod convergence;
mod ensemble;
mod estimators;
mod reports;

pub use convergence::{coupled_difference, truncation_convergence, ConvergenceConfig, ConvergenceReport, CoupledRun, CouplingKey};
pub use ensemble::{reference_norm_samples, run_ensemble, EnsembleConfig, EnsembleSummary, Forcing, HighModeUpdate, ModeRow, Part};
pub use estimators::{
    bootstrap, correlation, kolmogorov_survival, ks_two_sample, linear_fit, median, moments, quantile, quantile_sorted, try_linear_fit,
    KsResult, LinearFit, Moments,
};
pub use reports::{
    convolution_window_samples, energy_slope_test, generator_martingale_test, growth_fit, mean_power_fit, measure_test, sup_norm_samples,
    tail_fit, tail_scaling_test, Check, GrowthConfig, GrowthModel, GrowthReport, MeasureTolerances, TailFit, TestReport, WindowSamples,
    MIN_REALIZATIONS, MIN_TAIL_SAMPLES,
};
