//! Fourier-side representation of mean-zero real fields on the torus.
//!
//! A [`SpectralState`] stores only the coefficients `û(n)` for `1 <= n <= n_max`. The
//! zero mode is absent and `û(-n) = conj(û(n))` is implied, so every state is a real,
//! mean-zero field by construction. The transform convention is
//! `û(n) = (2π)^{-1} ∫ u(x) e^{-inx} dx`, i.e. `u(x) = Σ_{1<=|n|<=n_max} û(n) e^{inx}`.

use crate::error::{domain, Error, Result};
use crate::rng::{Domain, RngStream};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    coeffs: Vec<Complex64>,
}

impl SpectralState {
    pub fn zeros(n_max: usize) -> Self {
        assert!(n_max >= 1, "n_max must be positive");
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); n_max],
        }
    }

    /// Builds a state from `[û(1), ..., û(n_max)]`.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return domain("a spectral state needs at least one mode");
        }
        Ok(Self { coeffs })
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len()
    }

    /// Positive-frequency coefficients, index `k` holding `û(k + 1)`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// `û(n)` for any integer `n`; zero outside `1 <= |n| <= n_max`.
    pub fn coeff(&self, n: i64) -> Complex64 {
        let k = n.unsigned_abs() as usize;
        if k == 0 || k > self.coeffs.len() {
            return Complex64::new(0.0, 0.0);
        }
        let c = self.coeffs[k - 1];
        if n > 0 {
            c
        } else {
            c.conj()
        }
    }

    /// Sets `û(n)` for `n >= 1` (the conjugate mode follows automatically).
    pub fn set(&mut self, n: usize, value: Complex64) {
        assert!(n >= 1 && n <= self.coeffs.len(), "mode {n} out of range");
        self.coeffs[n - 1] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// `Σ_{n>=1} |û(n)|²`, the squared Euclidean length of the `(p, q)` coordinates.
    /// The physical `L²` norm (normalized measure) is twice this.
    pub fn half_energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Real coordinates `(p_1..p_{n_max}, q_1..q_{n_max})`.
    pub fn to_pq(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.coeffs.len());
        out.extend(self.coeffs.iter().map(|c| c.re));
        out.extend(self.coeffs.iter().map(|c| c.im));
        out
    }

    pub fn from_pq(x: &[f64]) -> Result<Self> {
        if x.is_empty() || !x.len().is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "phase vector length {} is not a positive even number",
                x.len()
            )));
        }
        let n = x.len() / 2;
        Self::from_coeffs((0..n).map(|k| Complex64::new(x[k], x[n + k])).collect())
    }

    /// Same field, represented with a different `n_max` (zero-extended or cut).
    pub fn resized(&self, n_max: usize) -> Self {
        let mut out = Self::zeros(n_max);
        let k = n_max.min(self.n_max());
        out.coeffs[..k].copy_from_slice(&self.coeffs[..k]);
        out
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }
}

impl Add for &SpectralState {
    type Output = SpectralState;
    fn add(self, rhs: &SpectralState) -> SpectralState {
        assert_eq!(self.n_max(), rhs.n_max());
        SpectralState {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SpectralState {
    type Output = SpectralState;
    fn sub(self, rhs: &SpectralState) -> SpectralState {
        assert_eq!(self.n_max(), rhs.n_max());
        SpectralState {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<f64> for &SpectralState {
    type Output = SpectralState;
    fn mul(self, rhs: f64) -> SpectralState {
        self.scaled(rhs)
    }
}

/// Parameters of the white-noise measure `μ_α` truncated at `n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiteNoiseSpec {
    pub alpha: f64,
    pub n_max: usize,
}

/// Draws `√α Σ g_n e^{inx}` with independent standard complex Gaussians `g_n`, so that
/// `E|û(n)|² = α`. Mode `n` of realization `r` always uses the same substream.
pub fn sample_white_noise(spec: &WhiteNoiseSpec, rng: &RngStream, realization: u64) -> Result<SpectralState> {
    if !(spec.alpha >= 0.0) || !spec.alpha.is_finite() {
        return domain(format!("white noise variance must be >= 0, got {}", spec.alpha));
    }
    if spec.n_max == 0 {
        return domain("n_max must be positive");
    }
    let mut state = SpectralState::zeros(spec.n_max);
    if spec.alpha == 0.0 {
        return Ok(state);
    }
    let amp = spec.alpha.sqrt();
    for (k, c) in state.coeffs.iter_mut().enumerate() {
        let g = rng.substream(realization, Domain::InitialData, (k + 1) as u64).complex_normal(0);
        *c = g * amp;
    }
    Ok(state)
}

/// Dirichlet projection onto `|n| <= cutoff`.
pub fn project_low(state: &SpectralState, cutoff: usize) -> Result<SpectralState> {
    check_cutoff(state, cutoff)?;
    let mut out = state.clone();
    for c in &mut out.coeffs[cutoff..] {
        *c = Complex64::new(0.0, 0.0);
    }
    Ok(out)
}

/// Complementary projection onto `|n| > cutoff`.
pub fn project_high(state: &SpectralState, cutoff: usize) -> Result<SpectralState> {
    check_cutoff(state, cutoff)?;
    let mut out = state.clone();
    for c in &mut out.coeffs[..cutoff] {
        *c = Complex64::new(0.0, 0.0);
    }
    Ok(out)
}

fn check_cutoff(state: &SpectralState, cutoff: usize) -> Result<()> {
    if cutoff == 0 {
        return domain("projection cutoff must be positive");
    }
    if cutoff > state.n_max() {
        return domain(format!("projection cutoff {cutoff} exceeds n_max {}", state.n_max()));
    }
    Ok(())
}

/// Smallest grid accepted by [`to_physical`] and [`from_physical`].
pub fn min_grid_size(n_max: usize) -> usize {
    2 * n_max + 2
}

/// Samples `u(x_j)` at `x_j = 2πj / grid_size`.
pub fn to_physical(state: &SpectralState, grid_size: usize) -> Result<Vec<f64>> {
    let need = min_grid_size(state.n_max());
    if grid_size < need {
        return Err(Error::Aliasing(format!(
            "grid of {grid_size} points cannot represent n_max = {} (need >= {need})",
            state.n_max()
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); grid_size];
    for (k, c) in state.coeffs.iter().enumerate() {
        let n = k + 1;
        buf[n] = *c;
        buf[grid_size - n] = c.conj();
    }
    FftPlanner::new().plan_fft_inverse(grid_size).process(&mut buf);
    Ok(buf.into_iter().map(|z| z.re).collect())
}

/// Inverse of [`to_physical`]. The spatial mean of `samples` is discarded (mean-zero
/// convention) and modes above `n_max` are dropped.
pub fn from_physical(samples: &[f64], n_max: usize) -> Result<SpectralState> {
    if n_max == 0 {
        return domain("n_max must be positive");
    }
    let need = min_grid_size(n_max);
    if samples.len() < need {
        return Err(Error::Aliasing(format!(
            "{} samples cannot resolve n_max = {n_max} (need >= {need})",
            samples.len()
        )));
    }
    let g = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(g).process(&mut buf);
    let scale = 1.0 / g as f64;
    SpectralState::from_coeffs((1..=n_max).map(|n| buf[n] * scale).collect())
}
