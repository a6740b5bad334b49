//! Fourier–Besov, Fourier–Lebesgue and space-time norms on truncated fields.
//!
//! Conventions: `⟨x⟩ = √(1+x²)`; dyadic block `j = 0` is `{|n| ≤ 1}` and block `j ≥ 1`
//! is `{2^{j-1} < |n| ≤ 2^j}`; every sum runs over both `n` and `-n`.
//!
//! Space-time norms act on the interaction representation `v(t) = S(-t)u(t)`, whose temporal
//! transform `v̂(n, σ)` equals `û(n, σ + n³)`, so the modulation weight `⟨τ - n³⟩^b` becomes
//! `⟨σ⟩^b`. The transform is the Riemann sum `Δt Σ_j v(t_j) e^{-iσ t_j}` on a zero-padded
//! grid with spacing `dσ = 2π / (padded length · Δt)`; `L^q_τ` integrals use that spacing.

use crate::dynamics::{cube, Trajectory};
use crate::error::{domain, Error, Result};
use crate::spectrum::{project_high, SpectralState};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `⟨x⟩ = √(1+x²)`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    x.hypot(1.0)
}

/// Dyadic block index of frequency `n ≥ 1`.
#[inline]
pub fn dyadic_block(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// How modes are aggregated in space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormVariant {
    /// `sup_j ‖·‖_{ℓ^p(block j)}`
    #[default]
    BesovBlocks,
    /// `‖·‖_{ℓ^p(Z)}`
    LebesgueModes,
}

impl std::str::FromStr for NormVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "besov_blocks" | "besov" => Ok(Self::BesovBlocks),
            "lebesgue_modes" | "lebesgue" => Ok(Self::LebesgueModes),
            other => Err(Error::Config(format!("unknown norm variant '{other}'"))),
        }
    }
}

impl std::fmt::Display for NormVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::BesovBlocks => "besov_blocks",
            Self::LebesgueModes => "lebesgue_modes",
        })
    }
}

/// Parameters of a spatial or space-time norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub s: f64,
    #[serde(default)]
    pub b: f64,
    pub p: f64,
    #[serde(default = "two")]
    pub q: f64,
    #[serde(default)]
    pub variant: NormVariant,
    /// Largest `|σ|` entering the temporal integral. `None` integrates the whole
    /// represented band and requires it to reach `n_max³`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_cutoff: Option<f64>,
}

fn two() -> f64 {
    2.0
}

impl NormSpec {
    pub fn spatial(s: f64, p: f64, variant: NormVariant) -> Self {
        Self {
            s,
            b: 0.0,
            p,
            q: 2.0,
            variant,
            tau_cutoff: None,
        }
    }

    pub fn space_time(s: f64, b: f64, p: f64, q: f64, variant: NormVariant) -> Self {
        Self {
            s,
            b,
            p,
            q,
            variant,
            tau_cutoff: None,
        }
    }

    pub fn with_tau_cutoff(mut self, cutoff: f64) -> Self {
        self.tau_cutoff = Some(cutoff);
        self
    }

    /// Exponents must lie in `[1, ∞]`, `s` and `b` must be finite.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v >= 1.0) {
                return domain(format!("{name} must lie in [1, inf], got {v}"));
            }
        }
        if !self.s.is_finite() || !self.b.is_finite() {
            return domain("s and b must be finite");
        }
        if let Some(c) = self.tau_cutoff {
            if !(c > 0.0) {
                return domain(format!("tau cutoff must be positive, got {c}"));
            }
        }
        Ok(())
    }

    /// `s p < -1`, the range in which white noise has finite norm almost surely.
    pub fn hosts_white_noise(&self) -> bool {
        self.s * self.p < -1.0
    }
}

/// Accumulates `(Σ w_i^p)^{1/p}` or `max w_i` for `p = ∞`.
#[derive(Debug, Clone, Copy)]
struct Lp {
    p: f64,
    acc: f64,
}

impl Lp {
    fn new(p: f64) -> Self {
        Self { p, acc: 0.0 }
    }

    fn push(&mut self, w: f64, mult: f64) {
        if self.p.is_infinite() {
            self.acc = self.acc.max(w);
        } else {
            self.acc += mult * w.powf(self.p);
        }
    }

    fn value(&self) -> f64 {
        if self.p.is_infinite() {
            self.acc
        } else {
            self.acc.powf(1.0 / self.p)
        }
    }
}

/// Aggregates per-mode values `a_n` (`n = 1..`), counting `±n`, by Besov blocks or `ℓ^p`.
pub fn aggregate_modes(values: &[f64], p: f64, variant: NormVariant) -> f64 {
    match variant {
        NormVariant::LebesgueModes => {
            let mut acc = Lp::new(p);
            values.iter().for_each(|v| acc.push(*v, 2.0));
            acc.value()
        }
        NormVariant::BesovBlocks => {
            let mut best = 0.0f64;
            let mut acc = Lp::new(p);
            let mut block = 0;
            for (k, v) in values.iter().enumerate() {
                let j = dyadic_block(k + 1);
                if j != block {
                    best = best.max(acc.value());
                    acc = Lp::new(p);
                    block = j;
                }
                acc.push(*v, 2.0);
            }
            best.max(acc.value())
        }
    }
}

fn weighted_moduli(state: &SpectralState, s: f64) -> Vec<f64> {
    state
        .coeffs()
        .iter()
        .enumerate()
        .map(|(k, c)| bracket((k + 1) as f64).powf(s) * c.norm())
        .collect()
}

/// `‖u‖_{b̂^s_{p,∞}} = sup_j (Σ_{|n|∼2^j} ⟨n⟩^{sp}|û(n)|^p)^{1/p}`.
pub fn besov_norm(state: &SpectralState, s: f64, p: f64) -> f64 {
    aggregate_modes(&weighted_moduli(state, s), p, NormVariant::BesovBlocks)
}

/// `‖u‖_{FL^{s,p}} = ‖⟨n⟩^s û(n)‖_{ℓ^p}`; `p = 2` is the `H^s` norm.
pub fn fourier_lebesgue_norm(state: &SpectralState, s: f64, p: f64) -> f64 {
    aggregate_modes(&weighted_moduli(state, s), p, NormVariant::LebesgueModes)
}

/// Spatial norm selected by `spec` (`b`, `q` ignored).
pub fn spatial_norm(state: &SpectralState, spec: &NormSpec) -> f64 {
    aggregate_modes(&weighted_moduli(state, spec.s), spec.p, spec.variant)
}

/// Temporal spectra of the interaction representation of a window of states.
#[derive(Debug, Clone)]
pub struct SpaceTimeBlock {
    t0: f64,
    dt: f64,
    samples: usize,
    padded: usize,
    /// `spectra[n-1][k]` is `v̂(n, σ_k)` in FFT order.
    spectra: Vec<Vec<Complex64>>,
}

/// Default zero-padding factor for the ambient grid.
pub const DEFAULT_PADDING: usize = 2;

/// Largest padded grid accepted, in samples.
pub const MAX_BLOCK_SAMPLES: usize = 1 << 22;

impl SpaceTimeBlock {
    /// Block over the whole trajectory, zero-padded by `padding`.
    pub fn from_trajectory(traj: &Trajectory, padding: usize) -> Result<Self> {
        if padding == 0 {
            return domain("padding factor must be at least 1");
        }
        Self::build(traj, 0, traj.len(), traj.len() * padding)
    }

    /// Samples `first..first+len` of `traj`, zero-extended to `ambient` grid points.
    pub fn from_window(traj: &Trajectory, first: usize, len: usize, ambient: usize) -> Result<Self> {
        Self::build(traj, first, len, ambient)
    }

    fn build(traj: &Trajectory, first: usize, len: usize, ambient: usize) -> Result<Self> {
        if len == 0 || first + len > traj.len() {
            return domain(format!(
                "window {first}..{} outside trajectory of {} samples",
                first + len,
                traj.len()
            ));
        }
        if ambient < len || ambient > MAX_BLOCK_SAMPLES {
            return domain(format!("ambient grid of {ambient} samples is invalid for a window of {len}"));
        }
        let dt = traj.dt_out();
        let n_max = traj.n_max();
        let fft = FftPlanner::new().plan_fft_forward(ambient);
        let mut spectra = Vec::with_capacity(n_max);
        let mut buf = vec![Complex64::new(0.0, 0.0); ambient];
        for n in 1..=n_max {
            let w = cube(n);
            buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for j in 0..len {
                let t = traj.time(first + j);
                // v = S(-t)u = e^{-i n³ t} û
                buf[j] = traj.states()[first + j].coeffs()[n - 1] * Complex64::from_polar(dt, -w * t);
            }
            fft.process(&mut buf);
            spectra.push(buf.clone());
        }
        Ok(Self {
            t0: traj.time(first),
            dt,
            samples: len,
            padded: ambient,
            spectra,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t0 + (self.samples - 1) as f64 * self.dt
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn padded_len(&self) -> usize {
        self.padded
    }

    pub fn n_max(&self) -> usize {
        self.spectra.len()
    }

    /// `2π / (padded length · Δt)`.
    pub fn d_sigma(&self) -> f64 {
        2.0 * PI / (self.padded as f64 * self.dt)
    }

    /// `π / Δt`, the largest represented temporal frequency.
    pub fn nyquist(&self) -> f64 {
        PI / self.dt
    }

    /// `σ_k` in FFT order.
    pub fn sigma(&self, k: usize) -> f64 {
        let k = k as isize;
        let m = self.padded as isize;
        let signed = if k < (m + 1) / 2 { k } else { k - m };
        signed as f64 * self.d_sigma()
    }

    pub fn spectrum(&self, n: usize) -> &[Complex64] {
        &self.spectra[n - 1]
    }

    /// `‖⟨σ⟩^b v̂(n, ·)‖_{L^q_σ}` for every mode.
    pub fn modulation_profile(&self, b: f64, q: f64, tau_cutoff: Option<f64>) -> Result<Vec<f64>> {
        let band = match tau_cutoff {
            None => {
                let need = cube(self.n_max());
                if self.nyquist() < need {
                    return Err(Error::Aliasing(format!(
                        "time step {} resolves |tau| <= {:.4e}, below n_max^3 = {need:.4e}; refine the grid or set a tau cutoff",
                        self.dt,
                        self.nyquist()
                    )));
                }
                f64::INFINITY
            }
            Some(c) => {
                if c > self.nyquist() * (1.0 + 1e-12) {
                    return Err(Error::Aliasing(format!(
                        "tau cutoff {c} exceeds the represented band {:.4e}",
                        self.nyquist()
                    )));
                }
                c
            }
        };
        let weights: Vec<f64> = (0..self.padded)
            .map(|k| {
                let s = self.sigma(k);
                if s.abs() <= band {
                    bracket(s).powf(b)
                } else {
                    0.0
                }
            })
            .collect();
        let ds = self.d_sigma();
        Ok(self
            .spectra
            .iter()
            .map(|spec| {
                if q.is_infinite() {
                    spec.iter().zip(&weights).map(|(z, w)| w * z.norm()).fold(0.0, f64::max)
                } else {
                    let sum: f64 = spec.iter().zip(&weights).map(|(z, w)| (w * z.norm()).powf(q)).sum();
                    (sum * ds).powf(1.0 / q)
                }
            })
            .collect())
    }
}

/// `‖⟨n⟩^s ⟨τ-n³⟩^b û(n,τ)‖` aggregated in `τ` by `L^q` and in `n` per the variant.
pub fn xsb_norm(block: &SpaceTimeBlock, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    let prof = block.modulation_profile(spec.b, spec.q, spec.tau_cutoff)?;
    let weighted: Vec<f64> = prof
        .iter()
        .enumerate()
        .map(|(k, g)| bracket((k + 1) as f64).powf(spec.s) * g)
        .collect();
    Ok(aggregate_modes(&weighted, spec.p, spec.variant))
}

/// Sample indices covered by `[t0, t1)`; a window reaching the last sample is closed.
pub fn window_indices(traj: &Trajectory, t0: f64, t1: f64) -> Result<(usize, usize)> {
    let tol = 1e-9 * traj.dt_out();
    if !(t1 > t0) || t0 < traj.t0() - tol || t1 > traj.t_end() + tol {
        return domain(format!("window [{t0}, {t1}] outside trajectory [{}, {}]", traj.t0(), traj.t_end()));
    }
    let pos = |t: f64| (t - traj.t0()) / traj.dt_out();
    let first = (pos(t0) - 1e-9).ceil().max(0.0) as usize;
    let end = if t1 >= traj.t_end() - tol {
        traj.len()
    } else {
        (pos(t1) - 1e-9).ceil() as usize
    };
    if end <= first {
        return domain(format!("window [{t0}, {t1}] contains no samples"));
    }
    Ok((first, end - first))
}

/// Norm of `1_{[t0,t1]} u` on the ambient grid of the whole trajectory.
pub fn restricted_norm(traj: &Trajectory, window: (f64, f64), spec: &NormSpec, padding: usize) -> Result<f64> {
    let (first, len) = window_indices(traj, window.0, window.1)?;
    let block = SpaceTimeBlock::from_window(traj, first, len, traj.len() * padding.max(1))?;
    xsb_norm(&block, spec)
}

/// Whether the restriction norm is quantitatively equivalent to the indicator extension.
pub fn indicator_extension_faithful(spec: &NormSpec) -> bool {
    spec.b < 0.5
}

/// Settings shared by the `L_ω` quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LOmegaSpec {
    pub delta: f64,
    /// Temporal band; `None` uses the full represented band `π/Δt`.
    #[serde(default)]
    pub tau_cutoff: Option<f64>,
    #[serde(default = "default_padding")]
    pub padding: usize,
}

fn default_padding() -> usize {
    DEFAULT_PADDING
}

impl LOmegaSpec {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            tau_cutoff: None,
            padding: DEFAULT_PADDING,
        }
    }

    /// `X^{s, ½-δ}` and `Y^{s, 11/16+δ}_{2,4}` specs at spatial regularity `s`.
    pub fn specs(&self, s: f64, band: f64) -> [NormSpec; 2] {
        let d = self.delta;
        [
            NormSpec::space_time(s, 0.5 - d, 2.0, 2.0, NormVariant::LebesgueModes).with_tau_cutoff(band),
            NormSpec::space_time(s, 11.0 / 16.0 + d, 2.0, 4.0, NormVariant::LebesgueModes).with_tau_cutoff(band),
        ]
    }
}

fn l_omega_on(psi: &Trajectory, spec: &LOmegaSpec, s: f64) -> Result<f64> {
    if !(spec.delta > 0.0) {
        return domain(format!("delta must be positive, got {}", spec.delta));
    }
    let block = SpaceTimeBlock::from_trajectory(psi, spec.padding)?;
    let band = spec.tau_cutoff.unwrap_or_else(|| block.nyquist());
    let [x, y] = spec.specs(s, band);
    Ok(xsb_norm(&block, &x)? + xsb_norm(&block, &y)?)
}

/// `‖1_{[0,T]}Ψ‖_{X^{-½-δ/2, ½-δ}} + ‖1_{[0,T]}Ψ‖_{Y^{-½-δ/2, 11/16+δ}_{2,4}}` over the
/// trajectory's span.
pub fn l_omega(psi: &Trajectory, spec: &LOmegaSpec) -> Result<f64> {
    l_omega_on(psi, spec, -0.5 - 0.5 * spec.delta)
}

/// The same pair for `P_N^⊥ Ψ` at the sharper regularity `-½-δ`.
pub fn l_omega_perp(psi: &Trajectory, n_trunc: usize, spec: &LOmegaSpec) -> Result<f64> {
    if n_trunc >= psi.n_max() {
        return Ok(0.0);
    }
    let high = psi.map_states(|s| project_high(s, n_trunc).expect("cutoff checked"));
    l_omega_on(&high, spec, -0.5 - spec.delta)
}

/// Constant in `l_omega_perp ≤ K N^{-δ/2} l_omega`: for `|n| > N`,
/// `⟨n⟩^{-½-δ} ≤ N^{-δ/2}⟨n⟩^{-½-δ/2}` and every norm is monotone in the mode weights.
pub const L_OMEGA_SUPPRESSION_CONSTANT: f64 = 1.0;

/// `K(δ, p) = (Σ_j ‖⟨n⟩^{-3δ/2}‖²_{ℓ^r(block j)})^{1/2}`, `1/r = 1/2 - 1/p`, over blocks meeting
/// `1..=n_max`. By Hölder in each block,
/// `‖u‖_{X^{-½-δ/2, b}} ≤ K ‖u‖_{X^{-½+δ, b}_{p,2}}`. The block sum stays bounded as
/// `n_max → ∞` exactly when `δ > (p-2)/(3p)`.
pub fn holder_embedding_constant(delta: f64, p: f64, n_max: usize) -> Result<f64> {
    if !(p >= 2.0) || !(delta > 0.0) || n_max == 0 {
        return domain(format!("need p >= 2, delta > 0, n_max >= 1 (got {p}, {delta}, {n_max})"));
    }
    let r = if p == 2.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        2.0
    } else {
        2.0 * p / (p - 2.0)
    };
    let weights: Vec<f64> = (1..=n_max).map(|n| bracket(n as f64).powf(-1.5 * delta)).collect();
    let mut total = 0.0;
    let mut acc = Lp::new(r);
    let mut block = 0;
    for (k, w) in weights.iter().enumerate() {
        let j = dyadic_block(k + 1);
        if j != block {
            total += acc.value().powi(2);
            acc = Lp::new(r);
            block = j;
        }
        acc.push(*w, 2.0);
    }
    total += acc.value().powi(2);
    Ok(total.sqrt())
}

/// Admissible ranges of `δ` for a given `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaWindow {
    /// `(p-2)/(4p)`
    pub wide_lower: f64,
    /// `(p-2)/(3p)`
    pub tight_lower: f64,
    /// `(p-2)/(2p)`, equivalent to `s p < -1` at `s = -½+δ`
    pub upper: f64,
}

impl DeltaWindow {
    pub fn for_p(p: f64) -> Result<Self> {
        if !(p > 2.0) || p.is_infinite() {
            return domain(format!("the delta window needs 2 < p < inf, got {p}"));
        }
        let x = (p - 2.0) / p;
        Ok(Self {
            wide_lower: x / 4.0,
            tight_lower: x / 3.0,
            upper: x / 2.0,
        })
    }

    pub fn contains_wide(&self, delta: f64) -> bool {
        delta > self.wide_lower && delta < self.upper
    }

    pub fn contains_tight(&self, delta: f64) -> bool {
        delta > self.tight_lower && delta < self.upper
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Domain, RngStream};
    use proptest::prelude::*;

    fn state(modes: &[(usize, f64)], n_max: usize) -> SpectralState {
        let mut s = SpectralState::zeros(n_max);
        for (n, v) in modes {
            s.set(*n, Complex64::new(*v, 0.0));
        }
        s
    }

    fn random_state(seed: u64, n_max: usize) -> SpectralState {
        let sub = RngStream::new(seed).substream(0, Domain::Reference, 0);
        let c = (0..n_max as u64).map(|k| sub.complex_normal(k)).collect();
        SpectralState::from_coeffs(c).unwrap()
    }

    fn random_traj(seed: u64, n_max: usize, len: usize, dt: f64) -> Trajectory {
        let states = (0..len).map(|j| random_state(seed * 1000 + j as u64, n_max)).collect();
        Trajectory::new(0.0, dt, states).unwrap()
    }

    #[test]
    fn blocks() {
        let got: Vec<usize> = (1..=9).map(dyadic_block).collect();
        assert_eq!(got, vec![0, 1, 2, 2, 3, 3, 3, 3, 4]);
    }

    #[test]
    fn besov_examples() {
        assert_eq!(besov_norm(&SpectralState::zeros(8), -0.4, 2.2), 0.0);
        let one = state(&[(1, 1.0)], 8);
        assert!((besov_norm(&one, 0.0, 2.0) - 2f64.sqrt()).abs() < 1e-15);
        let two = state(&[(1, 1.0), (3, 1.0)], 8);
        assert!((besov_norm(&two, 0.0, 2.0) - 2f64.sqrt()).abs() < 1e-15);
        // with a weight the blocks differ: j=0 gives √2·⟨1⟩^s, j=2 gives √2·⟨3⟩^s
        let s = -0.5;
        let want = 2f64.sqrt() * 2f64.powf(0.5 * s);
        assert!((besov_norm(&two, s, 2.0) - want).abs() < 1e-15);
    }

    #[test]
    fn lebesgue_examples() {
        let one = state(&[(1, 1.0)], 4);
        assert!((fourier_lebesgue_norm(&one, 1.0, 2.0) - 2.0).abs() < 1e-15);
        assert_eq!(fourier_lebesgue_norm(&SpectralState::zeros(4), 1.0, 2.0), 0.0);
        let two = state(&[(1, 1.0), (3, 2.0)], 4);
        assert_eq!(fourier_lebesgue_norm(&two, 0.0, f64::INFINITY), 2.0);
        assert_eq!(besov_norm(&two, 0.0, f64::INFINITY), 2.0);
    }

    #[test]
    fn besov_below_lebesgue_on_random_states() {
        for seed in 0..1000 {
            let s = random_state(seed, 1 + (seed % 40) as usize);
            for (sv, p) in [(-0.45, 2.3), (0.0, 2.0), (-1.0, 1.0), (0.3, 4.0)] {
                assert!(besov_norm(&s, sv, p) <= fourier_lebesgue_norm(&s, sv, p));
            }
        }
    }

    #[test]
    fn white_noise_condition() {
        assert!(!NormSpec::spatial(-0.4, 2.2, NormVariant::BesovBlocks).hosts_white_noise());
        assert!(NormSpec::spatial(-0.45, 2.3, NormVariant::BesovBlocks).hosts_white_noise());
        assert!(NormSpec::spatial(0.0, 0.5, NormVariant::BesovBlocks).validate().is_err());
    }

    fn dense_dft_norm(traj: &Trajectory, padding: usize, spec: &NormSpec) -> f64 {
        // literal O(L·P) transform at every σ_k, independent of the FFT path
        let len = traj.len();
        let m = len * padding;
        let dt = traj.dt_out();
        let ds = 2.0 * PI / (m as f64 * dt);
        let mut per_mode = Vec::new();
        for n in 1..=traj.n_max() {
            let mut acc = 0.0;
            let mut sup = 0.0f64;
            for k in 0..m {
                let kk = if k < m.div_ceil(2) { k as f64 } else { k as f64 - m as f64 };
                let sigma = kk * ds;
                if let Some(c) = spec.tau_cutoff {
                    if sigma.abs() > c {
                        continue;
                    }
                }
                let mut z = Complex64::new(0.0, 0.0);
                for j in 0..len {
                    let t = traj.time(j);
                    let v = traj.states()[j].coeffs()[n - 1] * Complex64::from_polar(1.0, -cube(n) * t);
                    z += v * Complex64::from_polar(dt, -sigma * (t - traj.t0()));
                }
                let w = bracket(sigma).powf(spec.b) * z.norm();
                acc += w.powf(spec.q);
                sup = sup.max(w);
            }
            let g = if spec.q.is_infinite() { sup } else { (acc * ds).powf(1.0 / spec.q) };
            per_mode.push(bracket(n as f64).powf(spec.s) * g);
        }
        aggregate_modes(&per_mode, spec.p, spec.variant)
    }

    fn linear_solution(n_max: usize, len: usize, dt: f64) -> Trajectory {
        let states = (0..len)
            .map(|j| {
                let t = j as f64 * dt;
                let mut s = SpectralState::zeros(n_max);
                s.set(1, Complex64::from_polar(1.0, t));
                s
            })
            .collect();
        Trajectory::new(0.0, dt, states).unwrap()
    }

    #[test]
    fn xsb_zero_and_linear_fixture() {
        let zero = Trajectory::new(0.0, 0.01, vec![SpectralState::zeros(2); 101]).unwrap();
        let block = SpaceTimeBlock::from_trajectory(&zero, 2).unwrap();
        let spec = NormSpec::space_time(-0.5, 0.3, 2.0, 2.0, NormVariant::BesovBlocks);
        assert_eq!(xsb_norm(&block, &spec).unwrap(), 0.0);

        let lin = linear_solution(2, 101, 0.01);
        let block = SpaceTimeBlock::from_trajectory(&lin, 2).unwrap();
        let got = xsb_norm(&block, &spec).unwrap();
        let want = dense_dft_norm(&lin, 2, &spec);
        assert!((got - want).abs() < 1e-10 * want, "{got} vs {want}");
        // constant v: the spectrum peaks at σ = 0 with height equal to the window length
        let peak = block.spectrum(1)[0].norm();
        assert!((peak - 1.01).abs() < 1e-12);
        // regression pin
        assert!((got - 4.186_678_241_272_624).abs() < 1e-12);
    }

    #[test]
    fn xsb_matches_dense_dft_on_random_blocks() {
        for seed in 0..5 {
            let traj = random_traj(seed, 3, 40, 0.005);
            let block = SpaceTimeBlock::from_trajectory(&traj, 3).unwrap();
            for spec in [
                NormSpec::space_time(-0.4, 0.2, 2.5, 2.0, NormVariant::BesovBlocks),
                NormSpec::space_time(0.1, 0.7, 2.0, 4.0, NormVariant::LebesgueModes),
                NormSpec::space_time(0.0, 0.0, 1.0, f64::INFINITY, NormVariant::LebesgueModes),
                NormSpec::space_time(0.0, 0.4, 3.0, 2.0, NormVariant::BesovBlocks).with_tau_cutoff(100.0),
            ] {
                let got = xsb_norm(&block, &spec).unwrap();
                let want = dense_dft_norm(&traj, 3, &spec);
                assert!((got - want).abs() < 1e-10 * want.max(1.0), "{spec:?}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn aliasing_is_flagged() {
        let traj = random_traj(1, 8, 20, 0.01);
        let block = SpaceTimeBlock::from_trajectory(&traj, 2).unwrap();
        let spec = NormSpec::space_time(0.0, 0.3, 2.0, 2.0, NormVariant::BesovBlocks);
        assert!(matches!(xsb_norm(&block, &spec), Err(Error::Aliasing(_))));
        assert!(xsb_norm(&block, &spec.with_tau_cutoff(100.0)).is_ok());
        assert!(matches!(xsb_norm(&block, &spec.with_tau_cutoff(1e4)), Err(Error::Aliasing(_))));
    }

    #[test]
    fn embedding_and_x_below_y() {
        for seed in 0..20 {
            let traj = random_traj(seed, 9, 30, 1e-3);
            let block = SpaceTimeBlock::from_trajectory(&traj, 2).unwrap();
            for p in [2.0, 2.3, 3.0, 6.0] {
                let x = xsb_norm(&block, &NormSpec::space_time(-0.3, 0.4, p, 2.0, NormVariant::BesovBlocks)).unwrap();
                let classical = xsb_norm(&block, &NormSpec::space_time(-0.3, 0.4, 2.0, 2.0, NormVariant::LebesgueModes)).unwrap();
                assert!(x <= classical * (1.0 + 1e-14), "p={p}: {x} > {classical}");
                let y = xsb_norm(&block, &NormSpec::space_time(-0.3, 0.4, p, 3.0, NormVariant::LebesgueModes)).unwrap();
                let xq = xsb_norm(&block, &NormSpec::space_time(-0.3, 0.4, p, 3.0, NormVariant::BesovBlocks)).unwrap();
                assert!(xq <= y);
            }
        }
    }

    #[test]
    fn restriction_windows() {
        let traj = random_traj(7, 4, 64, 1.0 / 64.0);
        let spec = NormSpec::space_time(-0.45, 0.3, 2.3, 2.0, NormVariant::BesovBlocks).with_tau_cutoff(100.0);
        let full = restricted_norm(&traj, (0.0, traj.t_end()), &spec, 2).unwrap();
        let block = SpaceTimeBlock::from_trajectory(&traj, 2).unwrap();
        assert_eq!(full, xsb_norm(&block, &spec).unwrap());

        let zero = traj.map_states(|s| SpectralState::zeros(s.n_max()));
        assert_eq!(restricted_norm(&zero, (0.1, 0.5), &spec, 2).unwrap(), 0.0);

        for (t0, t1, h) in [(0.0, 0.25, 0.25), (0.1, 0.4, 0.3), (0.5, 0.7, traj.t_end() - 0.7)] {
            let a = restricted_norm(&traj, (t0, t1), &spec, 2).unwrap();
            let b = restricted_norm(&traj, (t0, t1 + h), &spec, 2).unwrap();
            let c = restricted_norm(&traj, (t1, t1 + h), &spec, 2).unwrap();
            assert!(a <= (b + c) * (1.0 + 1e-12), "{a} > {b} + {c}");
        }
        assert!(restricted_norm(&traj, (0.5, 2.0), &spec, 2).is_err());
        assert!(indicator_extension_faithful(&spec));
    }

    #[test]
    fn l_omega_zero_and_suppression() {
        let zero = Trajectory::new(0.0, 0.01, vec![SpectralState::zeros(16); 50]).unwrap();
        let spec = LOmegaSpec::new(0.1);
        assert_eq!(l_omega(&zero, &spec).unwrap(), 0.0);
        for seed in 0..5 {
            let traj = random_traj(seed, 40, 32, 0.01);
            let full = l_omega(&traj, &spec).unwrap();
            for n in [8usize, 16, 32] {
                let perp = l_omega_perp(&traj, n, &spec).unwrap();
                let bound = L_OMEGA_SUPPRESSION_CONSTANT * (n as f64).powf(-0.05) * full;
                assert!(perp <= bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn holder_constant_bounds_the_embedding() {
        let (delta, p) = (0.1, 2.3);
        for seed in 0..20 {
            let traj = random_traj(100 + seed, 33, 16, 1e-3);
            let block = SpaceTimeBlock::from_trajectory(&traj, 2).unwrap();
            let k = holder_embedding_constant(delta, p, 33).unwrap();
            let lhs = xsb_norm(
                &block,
                &NormSpec::space_time(-0.5 - delta / 2.0, 0.3, 2.0, 2.0, NormVariant::LebesgueModes).with_tau_cutoff(3000.0),
            )
            .unwrap();
            let rhs = xsb_norm(
                &block,
                &NormSpec::space_time(-0.5 + delta, 0.3, p, 2.0, NormVariant::BesovBlocks).with_tau_cutoff(3000.0),
            )
            .unwrap();
            assert!(lhs <= k * rhs * (1.0 + 1e-12), "{lhs} > {k}·{rhs}");
        }
    }

    #[test]
    fn holder_constant_tail() {
        // converges for δ above (p-2)/(3p), grows without bound below it
        let p = 2.3;
        let w = DeltaWindow::for_p(p).unwrap();
        let above = w.tight_lower + 0.02;
        let below = w.tight_lower - 0.03;
        let ka = [
            holder_embedding_constant(above, p, 1 << 10).unwrap(),
            holder_embedding_constant(above, p, 1 << 16).unwrap(),
        ];
        let kb = [
            holder_embedding_constant(below, p, 1 << 10).unwrap(),
            holder_embedding_constant(below, p, 1 << 16).unwrap(),
        ];
        assert!(ka[1] / ka[0] < kb[1] / kb[0]);
    }

    #[test]
    fn delta_windows() {
        let w = DeltaWindow::for_p(2.3).unwrap();
        // p = 2.3: wide (0.0326, 0.0652), tight (0.0435, 0.0652)
        assert!(w.contains_tight(0.05) && w.contains_wide(0.05));
        assert!(!w.contains_tight(0.04) && w.contains_wide(0.04));
        assert!(!w.contains_wide(0.03));
        assert!(!w.contains_wide(0.07));
        assert!(DeltaWindow::for_p(2.0).is_err());
    }

    proptest! {
        #[test]
        fn norms_are_homogeneous(seed in 0u64..1000, lambda in -5.0f64..5.0, n_max in 1usize..50) {
            let s = random_state(seed, n_max);
            let scaled = s.scaled(lambda);
            for (sv, p) in [(-0.45, 2.3), (0.5, 1.0), (0.0, f64::INFINITY)] {
                let a = besov_norm(&scaled, sv, p);
                let b = lambda.abs() * besov_norm(&s, sv, p);
                prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
                let a = fourier_lebesgue_norm(&scaled, sv, p);
                let b = lambda.abs() * fourier_lebesgue_norm(&s, sv, p);
                prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300));
            }
        }

        #[test]
        fn besov_never_exceeds_lebesgue(seed in 0u64..100_000, n_max in 1usize..70, s in -1.0f64..1.0, p in 1.0f64..8.0) {
            let st = random_state(seed, n_max);
            prop_assert!(besov_norm(&st, s, p) <= fourier_lebesgue_norm(&st, s, p));
        }
    }
}
