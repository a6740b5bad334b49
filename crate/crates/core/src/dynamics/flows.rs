use super::integrators::{HighStepper, KdvRk4, LowStepper, SchemeSpec};
use crate::error::{domain, Error, Result};
use crate::noise::NoisePath;
use crate::spectrum::{project_high, project_low, SpectralState};
use num_complex::Complex64;

/// States recorded on the uniform grid `t_k = t0 + k dt_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t0: f64,
    dt_out: f64,
    states: Vec<SpectralState>,
}

impl Trajectory {
    pub fn new(t0: f64, dt_out: f64, states: Vec<SpectralState>) -> Result<Self> {
        if !(dt_out > 0.0) {
            return domain("output spacing must be positive");
        }
        if states.is_empty() {
            return domain("a trajectory needs at least one state");
        }
        let n_max = states[0].n_max();
        if states.iter().any(|s| s.n_max() != n_max) {
            return Err(Error::Dimension("trajectory states differ in n_max".into()));
        }
        Ok(Self { t0, dt_out, states })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt_out(&self) -> f64 {
        self.dt_out
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn n_max(&self) -> usize {
        self.states[0].n_max()
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.states.len() - 1)
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt_out
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(|k| self.time(k))
    }

    pub fn states(&self) -> &[SpectralState] {
        &self.states
    }

    pub fn last(&self) -> &SpectralState {
        self.states.last().expect("non-empty")
    }

    /// Applies a map to every state (e.g. a projection).
    pub fn map_states(&self, f: impl Fn(&SpectralState) -> SpectralState) -> Self {
        Self {
            t0: self.t0,
            dt_out: self.dt_out,
            states: self.states.iter().map(f).collect(),
        }
    }
}

fn step_count(t0: f64, t1: f64, dt: f64, substeps: usize) -> Result<usize> {
    if !(t1 > t0) {
        return domain(format!("need t1 > t0, got [{t0}, {t1}]"));
    }
    if !(dt > 0.0) {
        return domain(format!("time step must be positive, got {dt}"));
    }
    let ratio = (t1 - t0) / dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-6 * ratio.max(1.0) || steps < 1.0 {
        return Err(Error::Config(format!(
            "interval [{t0}, {t1}] is not a whole number of steps of {dt}"
        )));
    }
    let steps = steps as usize;
    if !steps.is_multiple_of(substeps) {
        return Err(Error::Config(format!("{steps} steps are not a multiple of {substeps} substeps")));
    }
    Ok(steps)
}

/// Truncated SKdV: the low modes `n <= N` follow the scheme, the modes above `N` evolve by
/// the exact linear update, both driven by `path` (its step 0 starts at `t0`). A state is
/// recorded every `scheme.substeps` steps.
pub fn flow_truncated_skdv(
    state: &SpectralState,
    t0: f64,
    t1: f64,
    n_trunc: usize,
    path: &NoisePath,
    scheme: SchemeSpec,
) -> Result<Trajectory> {
    let n_max = state.n_max();
    if n_trunc == 0 || n_trunc > n_max {
        return domain(format!("truncation {n_trunc} must lie in 1..={n_max}"));
    }
    let dt = path.dt();
    let steps = step_count(t0, t1, dt, scheme.substeps)?;
    if path.steps() < steps {
        return Err(Error::Config(format!("noise path has {} steps, {steps} needed", path.steps())));
    }
    if path.n_max() < n_max {
        return Err(Error::Config(format!(
            "noise path covers {} modes, state has {n_max}",
            path.n_max()
        )));
    }
    let mut low = LowStepper::with_integrator(n_trunc, dt, scheme.kind, scheme.integrator)?;
    let high = HighStepper::with_scheme(n_trunc, n_max, dt, scheme.kind);
    let mut u = state.clone();
    let mut states = Vec::with_capacity(steps / scheme.substeps + 1);
    states.push(u.clone());
    for k in 0..steps {
        let incr = &path.step_increments(k)[..n_max];
        low.step(u.coeffs_mut(), incr);
        high.step(u.coeffs_mut(), incr);
        if (k + 1) % scheme.substeps == 0 {
            states.push(u.clone());
        }
    }
    Trajectory::new(t0, dt * scheme.substeps as f64, states)
}

/// Deterministic truncated KdV (no forcing), RK4 in the interaction picture for the low
/// modes and pure phase rotation above `N`.
pub fn flow_deterministic_kdv(state: &SpectralState, t0: f64, t1: f64, n_trunc: usize, dt: f64, substeps: usize) -> Result<Trajectory> {
    let n_max = state.n_max();
    if n_trunc == 0 || n_trunc > n_max {
        return domain(format!("truncation {n_trunc} must lie in 1..={n_max}"));
    }
    if substeps == 0 {
        return Err(Error::Config("substeps must be >= 1".into()));
    }
    let steps = step_count(t0, t1, dt, substeps)?;
    let mut flow = KdvRk4::new(n_trunc, dt);
    let high = HighStepper::new(n_trunc, n_max, dt);
    let mut u = state.clone();
    let mut states = Vec::with_capacity(steps / substeps + 1);
    states.push(u.clone());
    for k in 0..steps {
        flow.step(u.coeffs_mut());
        high.rotate(u.coeffs_mut());
        if (k + 1) % substeps == 0 {
            states.push(u.clone());
        }
    }
    Trajectory::new(t0, dt * substeps as f64, states)
}

/// Stochastic convolution `Ψ(t) = ∫_0^t S(t - t') dW(t')` for modes `1..=n_max`, recorded
/// every `record_every` steps of the path: `Ψ̂(n, t + dt) = e^{in³dt}(Ψ̂(n, t) + Δβ_n)`.
pub fn sample_stochastic_convolution(path: &NoisePath, n_max: usize, record_every: usize) -> Result<Trajectory> {
    if n_max == 0 || n_max > path.n_max() {
        return Err(Error::Config(format!("requested {n_max} modes, path covers {}", path.n_max())));
    }
    if record_every == 0 || !path.steps().is_multiple_of(record_every) {
        return Err(Error::Config(format!(
            "path of {} steps cannot be recorded every {record_every} steps",
            path.steps()
        )));
    }
    let high = HighStepper::new(0, n_max, path.dt());
    let mut psi = SpectralState::zeros(n_max);
    let mut states = Vec::with_capacity(path.steps() / record_every + 1);
    states.push(psi.clone());
    for k in 0..path.steps() {
        high.step(psi.coeffs_mut(), &path.step_increments(k)[..n_max]);
        if (k + 1) % record_every == 0 {
            states.push(psi.clone());
        }
    }
    Trajectory::new(0.0, path.dt() * record_every as f64, states)
}

/// Splits a state into its low and high parts at `n_trunc`.
pub fn split(state: &SpectralState, n_trunc: usize) -> Result<(SpectralState, SpectralState)> {
    Ok((project_low(state, n_trunc)?, project_high(state, n_trunc)?))
}

/// Runs the high-mode update alone (for decoupling checks).
pub fn flow_high_only(state: &SpectralState, n_trunc: usize, path: &NoisePath, steps: usize) -> Result<SpectralState> {
    let (_, hi) = split(state, n_trunc)?;
    let high = HighStepper::new(n_trunc, state.n_max(), path.dt());
    let mut u = hi;
    for k in 0..steps {
        high.step(u.coeffs_mut(), &path.step_increments(k)[..state.n_max()]);
    }
    Ok(u)
}

/// `L²`-type invariant `Σ_{n<=N} |û(n)|²` of the low part.
pub fn low_half_energy(state: &SpectralState, n_trunc: usize) -> f64 {
    state.coeffs()[..n_trunc].iter().map(Complex64::norm_sqr).sum()
}
