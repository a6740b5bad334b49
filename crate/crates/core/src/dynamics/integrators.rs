//! Single-step maps for the low-frequency SDE and the linear high modes.
//!
//! All schemes work in the interaction picture: the Airy factor `e^{i n³ h}` is applied
//! exactly, only the quadratic term is discretized.

use super::convolution::{check_low, Convolver};
use crate::error::{domain, Error, Result};
use crate::spectrum::SpectralState;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[inline]
pub(crate) fn cube(n: usize) -> f64 {
    let x = n as f64;
    x * x * x
}

/// `e^{i n³ h}` for `n` in `first..first + len`.
pub(crate) fn airy_phases(first: usize, len: usize, h: f64) -> Vec<Complex64> {
    (first..first + len).map(|n| Complex64::from_polar(1.0, cube(n) * h)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// `û ← e^{in³h}(û + h B̂) + e^{in³h} Δβ` with `B = -P_N(u ∂ₓ u)`.
    ExponentialEm,
    /// Half KdV step, full noise kick, half KdV step.
    StrangSplit,
    /// Full KdV step, then the noise kick.
    LieSplit,
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential_em" => Ok(Self::ExponentialEm),
            "strang_split" => Ok(Self::StrangSplit),
            "lie_split" => Ok(Self::LieSplit),
            other => Err(Error::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::ExponentialEm => "exponential_em",
            Self::StrangSplit => "strang_split",
            Self::LieSplit => "lie_split",
        })
    }
}

/// Scheme plus the number of steps per recorded output interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    pub substeps: usize,
    #[serde(default)]
    pub integrator: KdvIntegrator,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, substeps: usize) -> Result<Self> {
        if substeps == 0 {
            return Err(Error::Config("substeps must be >= 1".into()));
        }
        Ok(Self {
            kind,
            substeps,
            integrator: KdvIntegrator::Rk4,
        })
    }

    pub fn with_integrator(mut self, integrator: KdvIntegrator) -> Self {
        self.integrator = integrator;
        self
    }
}

/// Classical RK4 on the interaction-picture form of the deterministic truncated KdV,
/// `v' = -e^{-in³τ} P_N(u ∂ₓ u)`, `u = e^{in³τ} v`, for a fixed step `h`.
#[derive(Debug, Clone)]
pub struct KdvRk4 {
    h: f64,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    conv: Convolver,
    k: [Vec<Complex64>; 4],
    stage: Vec<Complex64>,
    nl: Vec<Complex64>,
}

impl KdvRk4 {
    pub fn new(n_trunc: usize, h: f64) -> Self {
        Self::with_convolver(Convolver::new(n_trunc), h)
    }

    pub fn with_convolver(conv: Convolver, h: f64) -> Self {
        let n = conv.n_trunc();
        Self {
            h,
            half: airy_phases(1, n, 0.5 * h),
            full: airy_phases(1, n, h),
            conv,
            k: [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]],
            stage: vec![ZERO; n],
            nl: vec![ZERO; n],
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Advances the low modes `u[..N]` by `h`.
    pub fn step(&mut self, u: &mut [Complex64]) {
        let n = self.conv.n_trunc();
        let h = self.h;
        let u = &mut u[..n];

        self.conv.apply(u, &mut self.nl);
        for i in 0..n {
            self.k[0][i] = -self.nl[i];
        }
        for (s, (coef, phases)) in [(0.5 * h, &self.half), (0.5 * h, &self.half), (h, &self.full)]
            .into_iter()
            .enumerate()
        {
            for i in 0..n {
                self.stage[i] = phases[i] * (u[i] + self.k[s][i] * coef);
            }
            self.conv.apply(&self.stage, &mut self.nl);
            for i in 0..n {
                self.k[s + 1][i] = -(phases[i].conj() * self.nl[i]);
            }
        }
        let w = h / 6.0;
        for i in 0..n {
            let v = u[i] + (self.k[0][i] + (self.k[1][i] + self.k[2][i]) * 2.0 + self.k[3][i]) * w;
            u[i] = self.full[i] * v;
        }
    }
}

/// First-order exponential step that integrates the interaction phase
/// `e^{-3i n n1 n2 s}` exactly over the step, with the free evolution frozen inside:
///
/// ```text
/// û(n) ← e^{in³h} [û(n) - (w*w)(n)/6] + (w_h*w_h)(n)/6,
/// w(k) = û(k)/k,  w_h(k) = e^{ik³h} û(k)/k.
/// ```
///
/// Its error does not grow with `h n³`, so it stays usable at truncations where RK4 would
/// need `h ≲ N⁻³`.
#[derive(Debug, Clone)]
pub struct KdvResonant {
    h: f64,
    full: Vec<Complex64>,
    conv: Convolver,
    z: Vec<Complex64>,
    s0: Vec<Complex64>,
    s1: Vec<Complex64>,
}

impl KdvResonant {
    pub fn new(n_trunc: usize, h: f64) -> Self {
        Self {
            h,
            full: airy_phases(1, n_trunc, h),
            conv: Convolver::new(n_trunc),
            z: vec![ZERO; n_trunc],
            s0: vec![ZERO; n_trunc],
            s1: vec![ZERO; n_trunc],
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn step(&mut self, u: &mut [Complex64]) {
        let n = self.conv.n_trunc();
        let u = &mut u[..n];
        // w = i z with z real-valued, so w*w = -(z*z)
        for k in 0..n {
            let c = u[k] / (k + 1) as f64;
            self.z[k] = Complex64::new(c.im, -c.re);
        }
        self.conv.square(&self.z, &mut self.s0);
        for k in 0..n {
            self.z[k] *= self.full[k];
        }
        self.conv.square(&self.z, &mut self.s1);
        for k in 0..n {
            u[k] = self.full[k] * (u[k] + self.s0[k] / 6.0) - self.s1[k] / 6.0;
        }
    }
}

/// Implicit midpoint rule on the interaction-picture form, solved by fixed-point iteration.
/// With `a = e^{in³h/2}u` the midpoint state `m` solves `m = a - (h/2) P_N(m ∂ₓ m)` and the
/// step is `u ← e^{in³h/2}(2m - a)`.
///
/// Since `P_N(m ∂ₓ m)` is orthogonal to `m`, `|2m - a| = |a|`: the low-mode `L²` norm is
/// conserved up to the iteration tolerance. The map is also symplectic, hence
/// volume-preserving, so it leaves every `μ_α` invariant for any `h`.
///
/// The iteration only contracts while `h N Σ|m̂|` is small. When it stalls the step is
/// redone as 2, 4, 8, … midpoint substeps. Each such composition still conserves `L²` and
/// volume, but the step as a whole then depends on the state piecewise, which breaks the
/// exact invariance of `μ_α`; [`KdvMidpoint::fallbacks`] counts how often it happened.
/// For N = 8 and `α + t <= 4` no fallback occurs at `h = 0.01`, while at `h = 0.02` a few
/// percent of steps need one.
#[derive(Debug, Clone)]
pub struct KdvMidpoint {
    h: f64,
    /// `e^{in³h/2^{l+1}}` for subdivision level `l`
    phases: Vec<Vec<Complex64>>,
    conv: Convolver,
    a: Vec<Complex64>,
    m: Vec<Complex64>,
    nl: Vec<Complex64>,
    saved: Vec<Complex64>,
    max_iterations: usize,
    last_iterations: usize,
    last_substeps: usize,
    fallbacks: u64,
}

const MAX_LEVEL: usize = 30;

impl KdvMidpoint {
    pub fn new(n_trunc: usize, h: f64) -> Self {
        Self {
            h,
            phases: vec![airy_phases(1, n_trunc, 0.5 * h)],
            conv: Convolver::new(n_trunc),
            a: vec![ZERO; n_trunc],
            m: vec![ZERO; n_trunc],
            nl: vec![ZERO; n_trunc],
            saved: vec![ZERO; n_trunc],
            max_iterations: 60,
            last_iterations: 0,
            last_substeps: 1,
            fallbacks: 0,
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Fixed-point iterations used by the last step, over all its substeps.
    pub fn last_iterations(&self) -> usize {
        self.last_iterations
    }

    /// Substeps the last step needed (1 unless the iteration stalled).
    pub fn last_substeps(&self) -> usize {
        self.last_substeps
    }

    /// Steps so far that needed substeps.
    pub fn fallbacks(&self) -> u64 {
        self.fallbacks
    }

    pub fn step(&mut self, u: &mut [Complex64]) {
        let n = self.conv.n_trunc();
        let u = &mut u[..n];
        self.last_iterations = 0;
        self.last_substeps = 1;
        self.saved.copy_from_slice(u);
        if self.solve(u, 0) {
            return;
        }
        self.fallbacks += 1;
        for level in 1..=MAX_LEVEL {
            u.copy_from_slice(&self.saved);
            let k = 1usize << level;
            self.last_substeps = k;
            if (0..k).all(|_| self.solve(u, level)) {
                return;
            }
        }
    }

    /// One midpoint step of length `h / 2^level`; false if the iteration did not converge.
    fn solve(&mut self, u: &mut [Complex64], level: usize) -> bool {
        let n = u.len();
        while self.phases.len() <= level {
            let l = self.phases.len();
            self.phases.push(airy_phases(1, n, 0.5 * self.h / (1u64 << l) as f64));
        }
        let half = &self.phases[level];
        let c = 0.5 * self.h / (1u64 << level) as f64;
        let mut scale = 0.0f64;
        for i in 0..n {
            self.a[i] = half[i] * u[i];
            scale = scale.max(self.a[i].norm());
        }
        self.m.copy_from_slice(&self.a);
        let tol = 4.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
        let mut prev = f64::INFINITY;
        let mut converged = false;
        for it in 1..=self.max_iterations {
            self.last_iterations += 1;
            self.conv.apply(&self.m, &mut self.nl);
            let mut change = 0.0f64;
            for i in 0..n {
                let next = self.a[i] - self.nl[i] * c;
                change = change.max((next - self.m[i]).norm());
                self.m[i] = next;
            }
            // stop at the tolerance, or once rounding noise stops the contraction
            if change <= tol || (change >= prev && change <= 1e3 * tol) {
                converged = true;
                break;
            }
            if !change.is_finite() || (it >= 3 && change >= prev) {
                break;
            }
            prev = change;
        }
        if converged {
            for i in 0..n {
                u[i] = half[i] * (self.m[i] * 2.0 - self.a[i]);
            }
        }
        converged
    }
}

/// Which deterministic step drives the low modes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KdvIntegrator {
    /// [`KdvRk4`]: fourth order, accurate while `h N³` is small.
    #[default]
    Rk4,
    /// [`KdvMidpoint`]: second order, conserves the low-mode `L²` norm and `μ_α`.
    Midpoint,
    /// [`KdvResonant`]: first order, phase-exact.
    Resonant,
}

impl std::str::FromStr for KdvIntegrator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Self::Rk4),
            "midpoint" => Ok(Self::Midpoint),
            "resonant" => Ok(Self::Resonant),
            other => Err(Error::Config(format!("unknown integrator `{other}`"))),
        }
    }
}

impl std::fmt::Display for KdvIntegrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Rk4 => "rk4",
            Self::Midpoint => "midpoint",
            Self::Resonant => "resonant",
        })
    }
}

/// A deterministic truncated-KdV step of either kind.
#[derive(Debug, Clone)]
pub enum KdvFlow {
    Rk4(KdvRk4),
    Midpoint(KdvMidpoint),
    Resonant(KdvResonant),
}

impl KdvFlow {
    pub fn new(n_trunc: usize, h: f64, integrator: KdvIntegrator) -> Self {
        match integrator {
            KdvIntegrator::Rk4 => Self::Rk4(KdvRk4::new(n_trunc, h)),
            KdvIntegrator::Midpoint => Self::Midpoint(KdvMidpoint::new(n_trunc, h)),
            KdvIntegrator::Resonant => Self::Resonant(KdvResonant::new(n_trunc, h)),
        }
    }

    pub fn step(&mut self, u: &mut [Complex64]) {
        match self {
            Self::Rk4(f) => f.step(u),
            Self::Midpoint(f) => f.step(u),
            Self::Resonant(f) => f.step(u),
        }
    }

    /// Midpoint steps that had to be subdivided; always 0 for the explicit steps.
    pub fn fallbacks(&self) -> u64 {
        match self {
            Self::Midpoint(f) => f.fallbacks(),
            _ => 0,
        }
    }

    pub fn convolver(&mut self) -> &mut Convolver {
        match self {
            Self::Rk4(f) => &mut f.conv,
            Self::Midpoint(f) => &mut f.conv,
            Self::Resonant(f) => &mut f.conv,
        }
    }
}

/// One step of the low-frequency SDE under a chosen scheme.
#[derive(Debug, Clone)]
pub struct LowStepper {
    kind: SchemeKind,
    dt: f64,
    flow: KdvFlow,
    full: Vec<Complex64>,
    nl: Vec<Complex64>,
}

impl LowStepper {
    pub fn new(n_trunc: usize, dt: f64, kind: SchemeKind) -> Result<Self> {
        Self::with_integrator(n_trunc, dt, kind, KdvIntegrator::Rk4)
    }

    pub fn with_integrator(n_trunc: usize, dt: f64, kind: SchemeKind, integrator: KdvIntegrator) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return domain(format!("time step must be positive, got {dt}"));
        }
        if n_trunc == 0 {
            return domain("truncation must be >= 1");
        }
        let flow_h = match kind {
            SchemeKind::StrangSplit => 0.5 * dt,
            _ => dt,
        };
        Ok(Self {
            kind,
            dt,
            flow: KdvFlow::new(n_trunc, flow_h, integrator),
            full: airy_phases(1, n_trunc, dt),
            nl: vec![ZERO; n_trunc],
        })
    }

    pub fn n_trunc(&self) -> usize {
        self.full.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    /// Advances `u[..N]` by one step; `incr[..N]` are this step's Brownian increments.
    pub fn step(&mut self, u: &mut [Complex64], incr: &[Complex64]) {
        let n = self.n_trunc();
        match self.kind {
            SchemeKind::ExponentialEm => {
                self.flow.convolver().apply(&u[..n], &mut self.nl);
                for i in 0..n {
                    u[i] = self.full[i] * (u[i] - self.nl[i] * self.dt + incr[i]);
                }
            }
            SchemeKind::StrangSplit => {
                self.flow.step(u);
                for i in 0..n {
                    u[i] += incr[i];
                }
                self.flow.step(u);
            }
            SchemeKind::LieSplit => {
                self.flow.step(u);
                for i in 0..n {
                    u[i] += incr[i];
                }
            }
        }
    }
}

/// Exact-in-law update of the linear modes `N < n <= n_max`. The kick sits where the
/// low-mode scheme puts it, so a mode behaves the same whether it is above the truncation
/// or below it with a vanishing quadratic term.
#[derive(Debug, Clone)]
pub struct HighStepper {
    first: usize,
    phases: Vec<Complex64>,
    /// Rotation applied to the kick: `1`, `e^{in³dt/2}` or `e^{in³dt}`.
    kick: Option<Vec<Complex64>>,
}

impl HighStepper {
    /// `û(n) ← e^{in³dt}(û(n) + Δβ_n)`.
    pub fn new(n_trunc: usize, n_max: usize, dt: f64) -> Self {
        Self::with_scheme(n_trunc, n_max, dt, SchemeKind::ExponentialEm)
    }

    pub fn with_scheme(n_trunc: usize, n_max: usize, dt: f64, kind: SchemeKind) -> Self {
        let len = n_max.saturating_sub(n_trunc);
        let kick = match kind {
            SchemeKind::ExponentialEm => None,
            SchemeKind::StrangSplit => Some(airy_phases(n_trunc + 1, len, 0.5 * dt)),
            SchemeKind::LieSplit => Some(vec![Complex64::new(1.0, 0.0); len]),
        };
        Self {
            first: n_trunc + 1,
            phases: airy_phases(n_trunc + 1, len, dt),
            kick,
        }
    }

    /// One step on the high modes; `u` and `incr` are full-length (indexed by `n - 1`).
    pub fn step(&self, u: &mut [Complex64], incr: &[Complex64]) {
        let off = self.first - 1;
        match &self.kick {
            None => {
                for (i, ph) in self.phases.iter().enumerate() {
                    u[off + i] = ph * (u[off + i] + incr[off + i]);
                }
            }
            Some(kick) => {
                for (i, (ph, k)) in self.phases.iter().zip(kick).enumerate() {
                    u[off + i] = ph * u[off + i] + k * incr[off + i];
                }
            }
        }
    }

    /// Phase rotation only (no forcing).
    pub fn rotate(&self, u: &mut [Complex64]) {
        let off = self.first - 1;
        for (i, ph) in self.phases.iter().enumerate() {
            u[off + i] *= ph;
        }
    }
}

fn check_increment(incr: &[Complex64], need: usize) -> Result<()> {
    if incr.len() < need {
        return Err(Error::Dimension(format!("increment covers {} modes, {need} needed", incr.len())));
    }
    Ok(())
}

/// One step of the low-frequency dynamics. `state` must vanish above `n_trunc`;
/// `increment[k]` is `Δβ_{k+1}`.
pub fn step_low(state: &SpectralState, n_trunc: usize, dt: f64, increment: &[Complex64], scheme: SchemeKind) -> Result<SpectralState> {
    check_low(state, n_trunc)?;
    check_increment(increment, n_trunc)?;
    let mut stepper = LowStepper::new(n_trunc, dt, scheme)?;
    let mut out = state.clone();
    stepper.step(out.coeffs_mut(), increment);
    Ok(out)
}

/// Exact-in-law step of the linear dynamics for modes above `n_trunc`:
/// `û(n) ← e^{in³dt} û(n) + e^{in³dt} Δβ_n`.
pub fn step_high_exact(state: &SpectralState, n_trunc: usize, dt: f64, increment: &[Complex64]) -> Result<SpectralState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return domain(format!("time step must be positive, got {dt}"));
    }
    if n_trunc > state.n_max() {
        return domain("truncation exceeds n_max");
    }
    if state.coeffs()[..n_trunc].iter().any(|z| z.re != 0.0 || z.im != 0.0) {
        return domain(format!("state has modes at or below the truncation {n_trunc}"));
    }
    check_increment(increment, state.n_max())?;
    let mut out = state.clone();
    HighStepper::new(n_trunc, state.n_max(), dt).step(out.coeffs_mut(), increment);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::convolution::drift_low;
    use crate::noise::generate_noise_path;
    use crate::rng::RngStream;
    use crate::spectrum::{project_high, project_low, sample_white_noise, WhiteNoiseSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_state_steps_to_rotated_increment() {
        let s = SpectralState::zeros(4);
        let incr = [c(0.1, -0.2), c(0.3, 0.0), c(0.0, 0.05), c(-0.4, 0.4)];
        for kind in [SchemeKind::ExponentialEm, SchemeKind::LieSplit] {
            let out = step_low(&s, 4, 0.01, &incr, kind).unwrap();
            for n in 1..=4 {
                let expect = Complex64::from_polar(1.0, cube(n) * 0.01) * incr[n - 1];
                let got = out.coeff(n as i64);
                // Lie kicks after the flow, so the increment is not rotated
                let target = if kind == SchemeKind::LieSplit { incr[n - 1] } else { expect };
                assert!((got - target).norm() < 1e-15, "{kind}: mode {n}");
            }
        }
    }

    #[test]
    fn deterministic_cosine_seeds_mode_two() {
        let mut s = SpectralState::zeros(4);
        s.set(1, c(1.0, 0.0));
        let dt = 1e-4;
        let zero = [c(0.0, 0.0); 4];
        for kind in [SchemeKind::ExponentialEm, SchemeKind::StrangSplit, SchemeKind::LieSplit] {
            let out = step_low(&s, 4, dt, &zero, kind).unwrap();
            let u2 = out.coeff(2);
            assert!((u2 - c(0.0, -dt)).norm() < 20.0 * dt * dt, "{kind}: {u2}");
        }
    }

    #[test]
    fn step_low_errors() {
        let s = SpectralState::zeros(4);
        assert!(step_low(&s, 4, 0.0, &[c(0.0, 0.0); 4], SchemeKind::ExponentialEm).is_err());
        assert!(step_low(&s, 4, -1.0, &[c(0.0, 0.0); 4], SchemeKind::StrangSplit).is_err());
        assert!(matches!(
            step_low(&s, 4, 0.1, &[c(0.0, 0.0); 2], SchemeKind::LieSplit),
            Err(Error::Dimension(_))
        ));
        assert!(SchemeSpec::new(SchemeKind::LieSplit, 0).is_err());
    }

    #[test]
    fn high_step_without_noise_is_unitary() {
        let s = sample_white_noise(&WhiteNoiseSpec { alpha: 1.0, n_max: 16 }, &RngStream::new(4), 0).unwrap();
        let hi = project_high(&s, 5).unwrap();
        let out = step_high_exact(&hi, 5, 0.37, &[c(0.0, 0.0); 16]).unwrap();
        for n in 6..=16i64 {
            assert!((out.coeff(n).norm() - hi.coeff(n).norm()).abs() < 1e-15);
        }
        assert!(step_high_exact(&s, 5, 0.1, &[c(0.0, 0.0); 16]).is_err());
    }

    #[test]
    fn exponential_em_uses_drift_low() {
        // one EM step equals rotation of (u + dt * (drift without the linear part))
        let s = project_low(
            &sample_white_noise(&WhiteNoiseSpec { alpha: 1.0, n_max: 8 }, &RngStream::new(9), 0).unwrap(),
            6,
        )
        .unwrap();
        let dt = 1e-3;
        let incr = [c(0.0, 0.0); 8];
        let out = step_low(&s, 6, dt, &incr, SchemeKind::ExponentialEm).unwrap();
        let (p, q) = drift_low(&s, 6).unwrap();
        for n in 1..=6 {
            let u = s.coeff(n as i64);
            let lin = c(0.0, cube(n)) * u;
            let b = c(p[n - 1], q[n - 1]) - lin;
            let expect = Complex64::from_polar(1.0, cube(n) * dt) * (u + b * dt);
            assert!((out.coeff(n as i64) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let mut s = SpectralState::zeros(8);
        s.set(1, c(1.0, 0.0));
        let t = 0.5;
        let run = |h: f64| {
            let mut u = s.clone();
            let mut f = KdvRk4::new(8, h);
            for _ in 0..(t / h).round() as usize {
                f.step(u.coeffs_mut());
            }
            u
        };
        let reference = run(t / 4096.0);
        let errs: Vec<f64> = [64.0, 128.0, 256.0]
            .iter()
            .map(|k| (&run(t / k) - &reference).coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((3.5..4.6).contains(&order), "observed order {order}, errs {errs:?}");
        }
    }

    #[test]
    fn high_kick_placement_matches_low_schemes() {
        // N = 1 has no quadratic interaction, so mode 1 is linear under every scheme
        let dt = 0.07;
        let incr = [c(0.3, -0.2)];
        for kind in [SchemeKind::ExponentialEm, SchemeKind::StrangSplit, SchemeKind::LieSplit] {
            let mut low = [c(0.5, 0.25)];
            let mut high = low;
            LowStepper::new(1, dt, kind).unwrap().step(&mut low, &incr);
            HighStepper::with_scheme(0, 1, dt, kind).step(&mut high, &incr);
            assert!((low[0] - high[0]).norm() < 1e-15, "{kind}: {} vs {}", low[0], high[0]);
        }
    }

    #[test]
    fn midpoint_conserves_energy_and_is_second_order() {
        let s = {
            let mut s = SpectralState::zeros(8);
            for n in 1..=8 {
                s.set(n, c(0.7 / n as f64, 0.3 * (n as f64).sin()));
            }
            s
        };
        let t = 0.25;
        let reference = {
            let mut u = s.clone();
            let mut f = KdvRk4::new(8, t / 8192.0);
            for _ in 0..8192 {
                f.step(u.coeffs_mut());
            }
            u
        };
        let e0 = s.half_energy();
        let errs: Vec<f64> = [256usize, 512, 1024]
            .iter()
            .map(|&k| {
                let mut u = s.clone();
                let mut f = KdvMidpoint::new(8, t / k as f64);
                for _ in 0..k {
                    f.step(u.coeffs_mut());
                    assert!(f.last_iterations() < 50);
                }
                assert!((u.half_energy() - e0).abs() < 1e-13 * e0);
                (&u - &reference).coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.8..2.3).contains(&order), "observed order {order}, errs {errs:?}");
        }
    }

    #[test]
    fn midpoint_subdivides_large_steps_and_stays_exact() {
        let mut s = SpectralState::zeros(8);
        for n in 1..=8 {
            s.set(n, c(1.5 * (n as f64).cos(), 1.2 * (0.7 * n as f64).sin()));
        }
        let e0 = s.half_energy();
        let mut big = s.clone();
        let mut f = KdvMidpoint::new(8, 0.1);
        f.step(big.coeffs_mut());
        assert!(f.last_substeps() > 1, "expected a stalled iteration at h = 0.1");
        assert!((big.half_energy() - e0).abs() < 1e-13 * e0);
        // the same composition done by hand
        let mut small = s.clone();
        let mut g = KdvMidpoint::new(8, 0.1 / f.last_substeps() as f64);
        for _ in 0..f.last_substeps() {
            g.step(small.coeffs_mut());
            assert_eq!(g.last_substeps(), 1);
        }
        assert!((&big - &small).coeffs().iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn resonant_step_is_first_order_towards_rk4() {
        let mut s = SpectralState::zeros(8);
        s.set(1, c(1.0, 0.0));
        s.set(3, c(0.2, -0.4));
        let t = 0.25;
        let reference = {
            let mut u = s.clone();
            let mut f = KdvRk4::new(8, t / 8192.0);
            for _ in 0..8192 {
                f.step(u.coeffs_mut());
            }
            u
        };
        let errs: Vec<f64> = [256usize, 512, 1024]
            .iter()
            .map(|&k| {
                let mut u = s.clone();
                let mut f = KdvResonant::new(8, t / k as f64);
                for _ in 0..k {
                    f.step(u.coeffs_mut());
                }
                (&u - &reference).coeffs().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((0.8..1.3).contains(&order), "observed order {order}, errs {errs:?}");
        }
    }

    #[test]
    fn resonant_step_leaves_linear_data_on_the_airy_flow() {
        let mut s = SpectralState::zeros(8);
        s.set(5, c(0.3, 0.1));
        let mut f = KdvResonant::new(8, 0.01);
        let mut u = s.clone();
        f.step(u.coeffs_mut());
        // a single mode has no pair summing to 5 but feeds 10 (> N) and 0 (dropped)
        let expect = Complex64::from_polar(1.0, 125.0 * 0.01) * s.coeff(5);
        assert!((u.coeff(5) - expect).norm() < 1e-15);
        assert!(u.coeffs().iter().enumerate().all(|(k, z)| k == 4 || z.norm() < 1e-15));
    }

    #[test]
    fn exponential_em_strong_order_one() {
        // coupled dt / dt/2 runs for the additive-noise SDE
        let n_trunc = 4;
        let t_end: f64 = 0.1;
        let rng = RngStream::new(17);
        let mut errs = Vec::new();
        let dts = [1e-2, 5e-3, 2.5e-3, 1.25e-3, 6.25e-4, 3.125e-4, 1.5625e-4];
        for &dt in &dts {
            let mut acc = 0.0;
            let paths = 200;
            for r in 0..paths {
                let init = project_low(
                    &sample_white_noise(
                        &WhiteNoiseSpec {
                            alpha: 0.25,
                            n_max: n_trunc,
                        },
                        &rng,
                        r,
                    )
                    .unwrap(),
                    n_trunc,
                )
                .unwrap();
                let steps = (t_end / dt).round() as usize;
                let coarse = generate_noise_path(&rng, r, n_trunc, dt, steps).unwrap();
                let fine = crate::noise::refine_path(&coarse).unwrap();
                let mut a = init.clone();
                let mut st = LowStepper::new(n_trunc, dt, SchemeKind::ExponentialEm).unwrap();
                for k in 0..steps {
                    st.step(a.coeffs_mut(), coarse.step_increments(k));
                }
                let mut b = init;
                let mut st2 = LowStepper::new(n_trunc, dt / 2.0, SchemeKind::ExponentialEm).unwrap();
                for k in 0..2 * steps {
                    st2.step(b.coeffs_mut(), fine.step_increments(k));
                }
                acc += (&a - &b).half_energy();
            }
            errs.push((acc / paths as f64).sqrt());
        }
        let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let slope = crate::statistics::linear_fit(&xs, &ys).slope;
        assert!((0.8..=1.2).contains(&slope), "slope {slope}, errs {errs:?}");
    }
}
