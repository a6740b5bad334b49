//! Sample estimators with standard errors, regression, KS and bootstrap.

use crate::error::{Error, Result};
use crate::rng::{Domain, RngStream};
use serde::{Deserialize, Serialize};

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residual variance; NaN with two points.
    pub slope_se: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least-squares line through `(xs, ys)`. Fields are NaN when fewer than two distinct
/// abscissae are supplied.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len().min(ys.len());
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (xs[i] - mx, ys[i] - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = (syy - slope * sxy).max(0.0);
    let slope_se = if n > 2 { (rss / (nf - 2.0) / sxx).sqrt() } else { f64::NAN };
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    LinearFit {
        slope,
        intercept,
        slope_se,
        r_squared,
        points: n,
    }
}

/// Checked variant of [`linear_fit`].
pub fn try_linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension(format!("{} abscissae, {} ordinates", xs.len(), ys.len())));
    }
    let fit = linear_fit(xs, ys);
    if xs.len() < 2 || !fit.slope.is_finite() {
        return Err(Error::InsufficientData("a line needs two distinct abscissae".into()));
    }
    Ok(fit)
}

/// First four moments of a sample with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub mean_se: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// `√((m₄ - s⁴)/M)`, valid for any finite-fourth-moment law.
    pub variance_se: f64,
    /// `m₄/m₂² - 3`.
    pub excess_kurtosis: f64,
    /// `√(24/M)`, the Gaussian-null standard error.
    pub kurtosis_se: f64,
}

impl Moments {
    /// Variance and kurtosis are meaningless below two samples.
    pub fn is_defined(&self) -> bool {
        self.count >= 2
    }
}

pub fn moments(xs: &[f64]) -> Moments {
    let m = xs.len();
    let mf = m as f64;
    if m == 0 {
        return Moments {
            count: 0,
            mean: f64::NAN,
            mean_se: f64::NAN,
            variance: f64::NAN,
            variance_se: f64::NAN,
            excess_kurtosis: f64::NAN,
            kurtosis_se: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / mf;
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in xs {
        let d = (x - mean) * (x - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= mf;
    m4 /= mf;
    let variance = if m > 1 { m2 * mf / (mf - 1.0) } else { f64::NAN };
    Moments {
        count: m,
        mean,
        mean_se: (variance / mf).sqrt(),
        variance,
        variance_se: if m > 1 { ((m4 - m2 * m2).max(0.0) / mf).sqrt() } else { f64::NAN },
        excess_kurtosis: if m > 1 { m4 / (m2 * m2) - 3.0 } else { f64::NAN },
        kurtosis_se: (24.0 / mf).sqrt(),
    }
}

/// Pearson correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len()) as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Linear-interpolation quantile (type 7) of an unsorted sample.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

pub fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} e^{-2k²λ²}`, the Kolmogorov survival function.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("KS test needs two non-empty samples".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n1, n2) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n1 && j < n2 {
        let v = x[i].min(y[j]);
        while i < n1 && x[i] <= v {
            i += 1;
        }
        while j < n2 && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 as f64 - j as f64 / n2 as f64).abs());
    }
    let en = (n1 as f64 * n2 as f64 / (n1 + n2) as f64).sqrt();
    let p = kolmogorov_survival((en + 0.12 + 0.11 / en) * d);
    Ok(KsResult {
        statistic: d,
        p_value: p,
        n1,
        n2,
    })
}

/// Bootstrap distribution of `stat` over resamples (with replacement) of `0..len`.
/// Resample `b` uses the counter stream `(b, Reference, len)` of `seed`.
pub fn bootstrap<F>(len: usize, replicates: usize, seed: u64, mut stat: F) -> Vec<f64>
where
    F: FnMut(&[usize]) -> f64,
{
    let rng = RngStream::new(seed);
    let mut idx = vec![0usize; len];
    (0..replicates)
        .map(|b| {
            let sub = rng.substream(b as u64, Domain::Reference, len as u64);
            for (k, slot) in idx.iter_mut().enumerate() {
                *slot = (sub.u64_at(k as u64) % len as u64) as usize;
            }
            stat(&idx)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn normals(seed: u64, m: usize) -> Vec<f64> {
        let s = RngStream::new(seed).substream(0, Domain::Reference, 0);
        (0..m as u64).map(|k| s.normal(k)).collect()
    }

    #[test]
    fn line_through_points() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let f = linear_fit(&xs, &ys);
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14);
        assert!(f.slope_se.abs() < 1e-7);
        assert!(try_linear_fit(&[1.0], &[1.0]).is_err());
        assert!(try_linear_fit(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn gaussian_moments() {
        let x = normals(1, 200_000);
        let m = moments(&x);
        assert!(m.mean.abs() < 4.0 * m.mean_se);
        assert!((m.variance - 1.0).abs() < 4.0 * m.variance_se);
        // for a Gaussian, SE of the variance is √(2/M)
        assert!((m.variance_se - (2.0 / 200_000f64).sqrt()).abs() < 1e-4);
        assert!(m.excess_kurtosis.abs() < 4.0 * m.kurtosis_se);
        assert!(!moments(&[1.0]).is_defined());
    }

    #[test]
    fn correlation_signs() {
        let x = normals(2, 1000);
        let y: Vec<f64> = x.iter().map(|v| -3.0 * v).collect();
        assert!((correlation(&x, &y) + 1.0).abs() < 1e-12);
        let z = normals(3, 1000);
        assert!(correlation(&x, &z).abs() < 0.1);
    }

    #[test]
    fn quantiles() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn kolmogorov_values() {
        // classical table: Q(1.36) ≈ 0.049, Q(1.63) ≈ 0.0098
        assert!((kolmogorov_survival(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_survival(1.63) - 0.0098).abs() < 5e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn ks_same_and_shifted() {
        let a = normals(4, 5000);
        let b = normals(5, 5000);
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.001);
        let c: Vec<f64> = b.iter().map(|v| v + 0.2).collect();
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
        let d = ks_two_sample(&a, &a).unwrap();
        assert_eq!(d.statistic, 0.0);
        assert!(ks_two_sample(&a, &[]).is_err());
    }

    #[test]
    fn ks_p_values_are_roughly_uniform() {
        let mut below = 0;
        for r in 0..200 {
            let a = normals(100 + 2 * r, 400);
            let b = normals(101 + 2 * r, 400);
            if ks_two_sample(&a, &b).unwrap().p_value < 0.1 {
                below += 1;
            }
        }
        // Binomial(200, 0.1): mean 20, sd ≈ 4.2
        assert!((5..=38).contains(&below), "{below}");
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let x = normals(9, 300);
        let f = |idx: &[usize]| idx.iter().map(|&i| x[i]).sum::<f64>() / idx.len() as f64;
        let a = bootstrap(300, 50, 1, f);
        let b = bootstrap(300, 50, 1, f);
        assert_eq!(a, b);
        let sd = moments(&a).variance.sqrt();
        assert!((sd - 1.0 / 300f64.sqrt()).abs() < 0.03);
    }
}
