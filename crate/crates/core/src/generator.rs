//! Kolmogorov-operator identities of the low-frequency system in `(p, q)` coordinates.
//!
//! The Gaussian family `f(x̄, t) = (π(α+t))^{-N} exp(-|x̄|²/(α+t))` solves the forward
//! equation `∂_t f - ¼Δf + A·∇f = 0` because the heat part cancels coordinatewise and
//! `A(x̄)·x̄ = 0`. Everything here is evaluated pointwise in closed form.

use crate::dynamics::drift_pq;
use crate::error::{domain, Error, Result};
use crate::spectrum::SpectralState;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `x̄ = (p_1..p_N, q_1..q_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    x: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if x.is_empty() || !x.len().is_multiple_of(2) {
            return Err(Error::Dimension(format!("phase point length {} is not 2N with N >= 1", x.len())));
        }
        Ok(Self { x })
    }

    pub fn zeros(n_trunc: usize) -> Self {
        Self { x: vec![0.0; 2 * n_trunc] }
    }

    pub fn from_state(state: &SpectralState, n_trunc: usize) -> Self {
        let c = &state.coeffs()[..n_trunc];
        let mut x: Vec<f64> = c.iter().map(|z| z.re).collect();
        x.extend(c.iter().map(|z| z.im));
        Self { x }
    }

    pub fn n_trunc(&self) -> usize {
        self.x.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.x
    }

    pub fn p(&self) -> &[f64] {
        &self.x[..self.n_trunc()]
    }

    pub fn q(&self) -> &[f64] {
        &self.x[self.n_trunc()..]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum()
    }
}

/// Which vector field to evaluate. The mutated variant drops the negative-frequency
/// partners from the convolution and exists to show the identities are sharp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftVariant {
    #[default]
    Exact,
    LinearOnly,
    PositiveFrequenciesOnly,
}

/// `A(x̄) = (P_1..P_N, Q_1..Q_N)`.
pub fn drift_field(point: &PhasePoint) -> Vec<f64> {
    drift_field_variant(point, DriftVariant::Exact)
}

pub fn drift_field_variant(point: &PhasePoint, variant: DriftVariant) -> Vec<f64> {
    match variant {
        DriftVariant::Exact => {
            let (mut a, b) = drift_pq(point.p(), point.q());
            a.extend(b);
            a
        }
        DriftVariant::LinearOnly => {
            let n = point.n_trunc();
            let mut a = vec![0.0; 2 * n];
            for k in 0..n {
                let c = crate::dynamics::cube(k + 1);
                a[k] = -c * point.q()[k];
                a[n + k] = c * point.p()[k];
            }
            a
        }
        DriftVariant::PositiveFrequenciesOnly => {
            let (p, q) = (point.p(), point.q());
            let n = point.n_trunc();
            let mut a = drift_field_variant(point, DriftVariant::LinearOnly);
            for m in 1..=n {
                let (mut sp, mut sq) = (0.0, 0.0);
                for n1 in 1..m {
                    let n2 = m - n1;
                    let w = n2 as f64;
                    sp += w * (p[n1 - 1] * q[n2 - 1] + q[n1 - 1] * p[n2 - 1]);
                    sq += w * (p[n1 - 1] * p[n2 - 1] - q[n1 - 1] * q[n2 - 1]);
                }
                a[m - 1] += sp;
                a[n + m - 1] -= sq;
            }
            a
        }
    }
}

/// `A(x̄)·x̄`, identically zero for the exact drift.
pub fn drift_state_orthogonality(point: &PhasePoint) -> f64 {
    dot(&drift_field(point), point.coords())
}

/// Central-difference estimate of `div A = Σ (∂_{p_n} P_n + ∂_{q_n} Q_n)`.
pub fn drift_divergence(point: &PhasePoint, h: f64) -> Result<f64> {
    drift_divergence_variant(point, h, DriftVariant::Exact)
}

pub fn drift_divergence_variant(point: &PhasePoint, h: f64, variant: DriftVariant) -> Result<f64> {
    if !(h > 0.0) {
        return domain(format!("difference step must be positive, got {h}"));
    }
    let n = point.n_trunc();
    let mut x = point.coords().to_vec();
    let mut div = 0.0;
    let (mut plus, mut minus) = (Vec::new(), Vec::new());
    for i in 0..x.len() {
        // difference term by term, so terms without x_i cancel exactly
        let orig = x[i];
        x[i] = orig + h;
        plus.clear();
        component_terms(&x, n, i, variant, &mut |t| plus.push(t));
        x[i] = orig - h;
        minus.clear();
        component_terms(&x, n, i, variant, &mut |t| minus.push(t));
        x[i] = orig;
        let step = (orig + h) - (orig - h);
        div += plus.iter().zip(&minus).map(|(a, b)| a - b).sum::<f64>() / step;
    }
    Ok(div)
}

/// The additive terms of drift component `comp` (`P_m` for `comp < N`, else `Q_m`), in a
/// fixed order.
fn component_terms(x: &[f64], n: usize, comp: usize, variant: DriftVariant, f: &mut impl FnMut(f64)) {
    let (p, q) = x.split_at(n);
    let is_p = comp < n;
    let m = (if is_p { comp } else { comp - n }) as i64 + 1;
    let cube = crate::dynamics::cube(m as usize);
    let k = (m - 1) as usize;
    f(if is_p { -cube * q[k] } else { cube * p[k] });
    let pn = |j: i64| p[j.unsigned_abs() as usize - 1];
    let qn = |j: i64| {
        let v = q[j.unsigned_abs() as usize - 1];
        if j > 0 {
            v
        } else {
            -v
        }
    };
    let big = n as i64;
    let range = match variant {
        DriftVariant::LinearOnly => return,
        DriftVariant::Exact => (m - big).max(-big)..=big.min(m + big),
        DriftVariant::PositiveFrequenciesOnly => 1..=m - 1,
    };
    for n1 in range {
        let n2 = m - n1;
        if n1 == 0 || n2 == 0 || n2.abs() > big {
            continue;
        }
        let w = n2 as f64;
        if is_p {
            f(w * pn(n1) * qn(n2));
            f(w * qn(n1) * pn(n2));
        } else {
            f(-(w * pn(n1) * pn(n2)));
            f(w * qn(n1) * qn(n2));
        }
    }
}

/// Parameters of the Gaussian solution `f_{N,α}(·, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianDensityParams {
    pub alpha: f64,
    pub t: f64,
    pub n_trunc: usize,
}

impl GaussianDensityParams {
    pub fn new(alpha: f64, t: f64, n_trunc: usize) -> Result<Self> {
        if !(alpha > 0.0) || !(t >= 0.0) || n_trunc == 0 {
            return domain(format!("need alpha > 0, t >= 0, N >= 1 (got {alpha}, {t}, {n_trunc})"));
        }
        Ok(Self { alpha, t, n_trunc })
    }

    /// `α + t`, twice the per-coordinate variance.
    pub fn spread(&self) -> f64 {
        self.alpha + self.t
    }

    fn check(&self, point: &PhasePoint) -> Result<()> {
        if point.n_trunc() != self.n_trunc {
            return Err(Error::Dimension(format!(
                "point has N = {}, density has N = {}",
                point.n_trunc(),
                self.n_trunc
            )));
        }
        Ok(())
    }
}

pub fn log_gaussian_density(params: &GaussianDensityParams, point: &PhasePoint) -> Result<f64> {
    params.check(point)?;
    let s = params.spread();
    Ok(-(params.n_trunc as f64) * (PI * s).ln() - point.norm_sqr() / s)
}

pub fn gaussian_density(params: &GaussianDensityParams, point: &PhasePoint) -> Result<f64> {
    log_gaussian_density(params, point).map(f64::exp)
}

/// The three terms of the forward equation at one point, in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardTerms {
    pub time_derivative: f64,
    pub quarter_laplacian: f64,
    pub transport: f64,
    /// Sum of the magnitudes of every contribution; the scale for relative residuals.
    pub magnitude: f64,
}

impl ForwardTerms {
    pub fn residual(&self) -> f64 {
        self.time_derivative - self.quarter_laplacian + self.transport
    }

    pub fn relative_residual(&self) -> f64 {
        if self.magnitude == 0.0 {
            self.residual().abs()
        } else {
            self.residual().abs() / self.magnitude
        }
    }
}

pub fn forward_terms(params: &GaussianDensityParams, point: &PhasePoint, variant: DriftVariant) -> Result<ForwardTerms> {
    let f = gaussian_density(params, point)?;
    let s = params.spread();
    let n = params.n_trunc as f64;
    let r2 = point.norm_sqr();
    let a = drift_field_variant(point, variant);
    // ∂_t f = f (-N/s + |x|²/s²); ¼Δf = ¼ f Σ(-2/s + 4x²/s²); A·∇f = -(2/s) f A·x
    let time_derivative = f * (-n / s + r2 / (s * s));
    let lap: f64 = point.coords().iter().map(|x| -2.0 / s + 4.0 * x * x / (s * s)).sum();
    let quarter_laplacian = 0.25 * f * lap;
    let ax = dot(&a, point.coords());
    let transport = -(2.0 / s) * f * ax;
    let abs_ax: f64 = a.iter().zip(point.coords()).map(|(u, v)| (u * v).abs()).sum();
    let magnitude = f * (n / s + r2 / (s * s)) * 2.0 + (2.0 / s) * f * abs_ax;
    Ok(ForwardTerms {
        time_derivative,
        quarter_laplacian,
        transport,
        magnitude,
    })
}

/// `∂_t f - ¼Δf + A·∇f` for the Gaussian family; zero for the exact drift.
pub fn fokker_planck_residual(params: &GaussianDensityParams, point: &PhasePoint) -> Result<f64> {
    Ok(forward_terms(params, point, DriftVariant::Exact)?.residual())
}

/// Scalar test function with first and second derivatives.
pub trait TestFunction {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn laplacian(&self, x: &[f64]) -> f64;
}

/// `F(x̄) = |x̄|²`.
#[derive(Debug, Clone, Copy)]
pub struct SquaredNorm;

impl TestFunction for SquaredNorm {
    fn value(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| 2.0 * v).collect()
    }
    fn laplacian(&self, x: &[f64]) -> f64 {
        2.0 * x.len() as f64
    }
}

/// `F(x̄) = x_i`.
#[derive(Debug, Clone, Copy)]
pub struct Coordinate(pub usize);

impl TestFunction for Coordinate {
    fn value(&self, x: &[f64]) -> f64 {
        x[self.0]
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        g[self.0] = 1.0;
        g
    }
    fn laplacian(&self, _x: &[f64]) -> f64 {
        0.0
    }
}

/// `F(x̄) = x_i x_j`.
#[derive(Debug, Clone, Copy)]
pub struct CoordinateProduct(pub usize, pub usize);

impl TestFunction for CoordinateProduct {
    fn value(&self, x: &[f64]) -> f64 {
        x[self.0] * x[self.1]
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        g[self.0] += x[self.1];
        g[self.1] += x[self.0];
        g
    }
    fn laplacian(&self, _x: &[f64]) -> f64 {
        if self.0 == self.1 {
            2.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl TestFunction for Constant {
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
    fn laplacian(&self, _x: &[f64]) -> f64 {
        0.0
    }
}

/// Wraps a bare function, supplying central-difference derivatives with step `h`.
pub struct FiniteDifference<F: Fn(&[f64]) -> f64> {
    pub f: F,
    pub h: f64,
}

impl<F: Fn(&[f64]) -> f64> TestFunction for FiniteDifference<F> {
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        (0..x.len())
            .map(|i| {
                y[i] = x[i] + self.h;
                let plus = (self.f)(&y);
                y[i] = x[i] - self.h;
                let minus = (self.f)(&y);
                y[i] = x[i];
                (plus - minus) / (2.0 * self.h)
            })
            .collect()
    }
    fn laplacian(&self, x: &[f64]) -> f64 {
        let mut y = x.to_vec();
        let f0 = (self.f)(x);
        (0..x.len())
            .map(|i| {
                y[i] = x[i] + self.h;
                let plus = (self.f)(&y);
                y[i] = x[i] - self.h;
                let minus = (self.f)(&y);
                y[i] = x[i];
                (plus - 2.0 * f0 + minus) / (self.h * self.h)
            })
            .sum()
    }
}

/// `(L F)(x̄) = ¼ΔF(x̄) + A(x̄)·∇F(x̄)`.
pub fn apply_generator(f: &dyn TestFunction, point: &PhasePoint) -> f64 {
    let x = point.coords();
    0.25 * f.laplacian(x) + dot(&drift_field(point), &f.gradient(x))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// One line of a generator verification report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IdentityReport {
    pub identity: String,
    #[serde(rename = "N")]
    pub n_trunc: usize,
    pub samples: usize,
    pub max_residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Thresholds applied by [`verify_identities`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityThresholds {
    pub orthogonality_rel: f64,
    pub divergence_abs: f64,
    pub fokker_planck_rel: f64,
    pub difference_step: f64,
}

impl Default for IdentityThresholds {
    fn default() -> Self {
        Self {
            orthogonality_rel: 1e-12,
            divergence_abs: 1e-8,
            fokker_planck_rel: 1e-10,
            difference_step: 1e-5,
        }
    }
}

/// Draws `samples` Gaussian points per truncation (law `f_{N,α}(·, t)` with `α` and `t`
/// cycling over the given lists) and checks orthogonality, divergence and the forward
/// equation residual.
pub fn verify_identities(
    truncations: &[usize],
    samples: usize,
    alphas: &[f64],
    times: &[f64],
    seed: u64,
    thresholds: &IdentityThresholds,
) -> Result<Vec<IdentityReport>> {
    if alphas.is_empty() || times.is_empty() {
        return domain("need at least one alpha and one time");
    }
    let rng = crate::rng::RngStream::new(seed);
    let mut out = Vec::new();
    for &n in truncations {
        let (mut orth, mut div, mut fp) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..samples {
            let params = GaussianDensityParams::new(alphas[i % alphas.len()], times[(i / alphas.len()) % times.len()], n)?;
            let point = gaussian_point(&rng, n, i as u64, params.spread());
            let a = drift_field(&point);
            let an = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            orth = orth.max(dot(&a, point.coords()).abs() / (an * point.norm_sqr().sqrt() + 1.0));
            div = div.max(drift_divergence(&point, thresholds.difference_step)?.abs());
            fp = fp.max(forward_terms(&params, &point, DriftVariant::Exact)?.relative_residual());
        }
        for (name, value, thr) in [
            ("drift_state_orthogonality", orth, thresholds.orthogonality_rel),
            ("drift_divergence", div, thresholds.divergence_abs),
            ("fokker_planck_residual", fp, thresholds.fokker_planck_rel),
        ] {
            out.push(IdentityReport {
                identity: name.into(),
                n_trunc: n,
                samples,
                max_residual: value,
                threshold: thr,
                pass: value < thr,
            });
        }
    }
    Ok(out)
}

/// Point with independent `N(0, spread/2)` coordinates, keyed by `(N, index)`.
pub fn gaussian_point(rng: &crate::rng::RngStream, n_trunc: usize, index: u64, spread: f64) -> PhasePoint {
    let sd = (0.5 * spread).sqrt();
    let sub = rng.substream(index, crate::rng::Domain::Reference, n_trunc as u64);
    let mut x = Vec::with_capacity(2 * n_trunc);
    for k in 0..n_trunc as u64 {
        let z = sub.complex_normal(k) * std::f64::consts::SQRT_2;
        x.push(z.re * sd);
        x.push(z.im * sd);
    }
    PhasePoint { x }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::drift_low;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn point(seed: u64, n: usize) -> PhasePoint {
        gaussian_point(&RngStream::new(seed), n, 0, 2.0)
    }

    #[test]
    fn zero_point() {
        let z = PhasePoint::zeros(5);
        assert!(drift_field(&z).iter().all(|v| *v == 0.0));
        assert_eq!(drift_state_orthogonality(&z), 0.0);
        assert_eq!(drift_divergence(&z, 1e-5).unwrap(), 0.0);
        let params = GaussianDensityParams::new(1.3, 0.4, 5).unwrap();
        assert!(fokker_planck_residual(&params, &z).unwrap().abs() < 1e-15);
    }

    #[test]
    fn cosine_point_drift() {
        let p = PhasePoint::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(drift_field(&p), vec![0.0, 0.0, 1.0, -1.0]);
        assert!(PhasePoint::new(vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn drift_field_is_drift_low() {
        let rng = RngStream::new(31);
        for i in 0..1000u64 {
            let n = 1 + (i % 16) as usize;
            let pt = gaussian_point(&rng, n, i, 1.0 + (i % 7) as f64);
            let state = SpectralState::from_pq(pt.coords()).unwrap();
            let (p, q) = drift_low(&state, n).unwrap();
            let a = drift_field(&pt);
            assert_eq!(&a[..n], &p[..]);
            assert_eq!(&a[n..], &q[..]);
        }
    }

    #[test]
    fn linear_drift_is_orthogonal_mode_by_mode() {
        let p = point(3, 8);
        let a = drift_field_variant(&p, DriftVariant::LinearOnly);
        // (-n³q)p and (n³p)q differ only by the rounding of each product
        for k in 0..8 {
            let pair = a[k] * p.p()[k] + a[8 + k] * p.q()[k];
            let scale = (a[k] * p.p()[k]).abs();
            assert!(pair.abs() <= 2.0 * f64::EPSILON * scale, "mode {}: {pair}", k + 1);
        }
    }

    #[test]
    fn orthogonality_and_divergence_on_random_points() {
        for seed in 0..50 {
            let p = point(seed, 8);
            let a = drift_field(&p);
            let an = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ax = drift_state_orthogonality(&p);
            assert!(ax.abs() < 1e-12 * (an * p.norm_sqr().sqrt() + 1.0), "A·x = {ax}");
            let d = drift_divergence(&p, 1e-5).unwrap();
            assert!(d.abs() < 1e-8, "div = {d}");
        }
        assert!(drift_divergence(&point(1, 2), 0.0).is_err());
    }

    #[test]
    fn divergence_residual_does_not_grow_with_smaller_step() {
        // the drift is quadratic, so central differences are exact up to rounding and the
        // residual is rounding noise of size ε|A|/h
        for seed in 0..20 {
            let p = point(100 + seed, 8);
            let a = drift_divergence(&p, 1e-4).unwrap().abs();
            let b = drift_divergence(&p, 1e-5).unwrap().abs();
            assert!(a < 1e-8 && b < 1e-8, "{a} {b}");
        }
        // a genuinely nonlinear field would show O(h²) truncation error
        let f = |x: &[f64]| x[0].powi(3);
        let fd = FiniteDifference { f, h: 1e-2 };
        let g = fd.gradient(&[1.0]);
        assert!((g[0] - 3.0).abs() > 1e-5);
    }

    #[test]
    fn density_at_origin_and_normalization() {
        let params = GaussianDensityParams::new(1.0, 0.0, 1).unwrap();
        let f0 = gaussian_density(&params, &PhasePoint::zeros(1)).unwrap();
        assert!((f0 - 1.0 / PI).abs() < 1e-16);
        // midpoint quadrature over [-6σ, 6σ]² (σ² = 1/2)
        let sigma = 0.5f64.sqrt();
        let k = 600;
        let h = 12.0 * sigma / k as f64;
        let mut total = 0.0;
        for i in 0..k {
            for j in 0..k {
                let x = -6.0 * sigma + (i as f64 + 0.5) * h;
                let y = -6.0 * sigma + (j as f64 + 0.5) * h;
                total += gaussian_density(&params, &PhasePoint::new(vec![x, y]).unwrap()).unwrap();
            }
        }
        assert!((total * h * h - 1.0).abs() < 1e-4, "mass {}", total * h * h);
    }

    #[test]
    fn log_density_survives_large_n() {
        let params = GaussianDensityParams::new(1.0, 0.0, 400).unwrap();
        let mut x = vec![0.0; 800];
        x.iter_mut().for_each(|v| *v = 3.0);
        let pt = PhasePoint::new(x).unwrap();
        let l = log_gaussian_density(&params, &pt).unwrap();
        assert!(l.is_finite());
        assert_eq!(gaussian_density(&params, &pt).unwrap(), 0.0);
    }

    #[test]
    fn density_scaling_identity() {
        for seed in 0..20 {
            let n = 1 + (seed % 5) as usize;
            let (alpha, t) = (0.5 + seed as f64 * 0.1, 0.3 * seed as f64);
            let p = gaussian_point(&RngStream::new(seed), n, 0, alpha + t);
            let s = alpha + t;
            let lhs = log_gaussian_density(&GaussianDensityParams::new(alpha, t, n).unwrap(), &p).unwrap();
            let scaled = PhasePoint::new(p.coords().iter().map(|v| v / s.sqrt()).collect()).unwrap();
            let rhs = log_gaussian_density(&GaussianDensityParams::new(1.0, 0.0, n).unwrap(), &scaled).unwrap() - n as f64 * s.ln();
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn forward_equation_residual_vanishes() {
        let params = GaussianDensityParams::new(1.0, 0.7, 4).unwrap();
        for seed in 0..100 {
            let p = gaussian_point(&RngStream::new(seed), 4, 0, params.spread());
            let terms = forward_terms(&params, &p, DriftVariant::Exact).unwrap();
            let f = gaussian_density(&params, &p).unwrap();
            assert!(terms.residual().abs() < 1e-10 * f.max(terms.magnitude), "{terms:?}");
            assert!(terms.relative_residual() < 1e-10);
        }
    }

    #[test]
    fn mutated_drift_breaks_the_forward_equation() {
        let params = GaussianDensityParams::new(1.0, 0.7, 4).unwrap();
        let mut worst = f64::INFINITY;
        for seed in 0..100 {
            let p = gaussian_point(&RngStream::new(seed), 4, 0, params.spread());
            let t = forward_terms(&params, &p, DriftVariant::PositiveFrequenciesOnly).unwrap();
            let f = gaussian_density(&params, &p).unwrap();
            worst = worst.min(t.residual().abs() / f);
        }
        assert!(worst > 1e-3, "smallest mutated residual {worst}");
    }

    #[test]
    fn generator_on_polynomials() {
        for seed in 0..30 {
            let n = 2 + (seed % 7) as usize;
            let p = point(seed, n);
            let l = apply_generator(&SquaredNorm, &p);
            assert!((l - n as f64).abs() < 1e-10 * (1.0 + drift_field(&p).iter().map(|v| v.abs()).sum::<f64>()));
            assert_eq!(apply_generator(&Constant(3.0), &p), 0.0);
            assert_eq!(apply_generator(&Coordinate(0), &p), drift_field(&p)[0]);
        }
    }

    #[test]
    fn finite_difference_fallback_agrees() {
        let p = point(5, 3);
        let exact = apply_generator(&CoordinateProduct(0, 4), &p);
        let fd = FiniteDifference {
            f: |x: &[f64]| x[0] * x[4],
            h: 1e-4,
        };
        let approx = apply_generator(&fd, &p);
        assert!((exact - approx).abs() < 1e-5 * (1.0 + exact.abs()));
    }

    proptest! {
        #[test]
        fn identities_hold_for_all_small_truncations(seed in 0u64..10_000, n in 1usize..=16) {
            let p = gaussian_point(&RngStream::new(seed), n, 0, 1.0 + (seed % 5) as f64);
            let a = drift_field(&p);
            let an = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(drift_state_orthogonality(&p).abs() < 1e-12 * (an * p.norm_sqr().sqrt() + 1.0));
            prop_assert!(drift_divergence(&p, 1e-5).unwrap().abs() < 1e-8);
        }
    }
}
