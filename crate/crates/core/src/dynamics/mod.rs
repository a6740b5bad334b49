//! Time evolution of the truncated stochastic KdV system.
//!
//! In Fourier variables the equation reads
//! `dû(n) = (i n³ û(n) - (u ∂ₓ u)^(n)) dt + dβ_n` for `n <= N` and
//! `dû(n) = i n³ û(n) dt + dβ_n` above the truncation.

mod convolution;
mod flows;
mod integrators;
pub mod trotter;

pub use convolution::{
    drift_low, drift_pq, nonlinearity, nonlinearity_direct, padded_size, quadratic_direct, square_direct, Convolver, DIRECT_SUM_MAX_N,
};
pub use flows::{
    flow_deterministic_kdv, flow_high_only, flow_truncated_skdv, low_half_energy, sample_stochastic_convolution, split, Trajectory,
};
pub use integrators::{
    step_high_exact, step_low, HighStepper, KdvFlow, KdvIntegrator, KdvMidpoint, KdvResonant, KdvRk4, LowStepper, SchemeKind, SchemeSpec,
};
pub use trotter::{expm, operator_norm, trotter_compare};

pub(crate) use integrators::cube;
