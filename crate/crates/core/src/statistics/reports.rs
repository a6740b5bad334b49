//! Hypothesis tests on ensembles and norm samples.

use super::ensemble::{EnsembleSummary, Forcing, Part};
use super::estimators::{ks_two_sample, linear_fit, median, moments, quantile_sorted, try_linear_fit, LinearFit};
use crate::dynamics::{flow_deterministic_kdv, flow_truncated_skdv, sample_stochastic_convolution, SchemeKind, SchemeSpec, Trajectory};
use crate::error::{domain, Error, Result};
use crate::generator::{apply_generator, TestFunction};
use crate::noise::generate_noise_path;
use crate::norms::{spatial_norm, NormSpec};
use crate::rng::RngStream;
use crate::spectrum::{sample_white_noise, WhiteNoiseSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Smallest ensemble on which a test is run.
pub const MIN_REALIZATIONS: usize = 100;

/// One pre-registered comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `|value| <= tolerance`.
    pub fn within(label: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            value,
            tolerance,
            pass: value.abs() <= tolerance,
        }
    }

    /// Passes when `value <= bound`; for inequalities that may hold with equality.
    pub fn at_most(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            label: label.into(),
            value,
            tolerance: bound,
            pass: value <= bound,
        }
    }

    /// Passes when `value > bound`.
    pub fn above(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            label: label.into(),
            value,
            tolerance: bound,
            pass: value > bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
}

impl TestReport {
    /// Statistic is the worst `|value| / tolerance` among two-sided checks; threshold 1.
    pub fn from_checks(name: impl Into<String>, seed: u64, checks: Vec<Check>) -> Self {
        let statistic = checks
            .iter()
            .map(|c| {
                if c.tolerance > 0.0 {
                    c.value.abs() / c.tolerance
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        Self {
            name: name.into(),
            statistic,
            threshold: 1.0,
            pass: checks.iter().all(|c| c.pass),
            seed,
            config_hash: None,
            warnings: Vec::new(),
            checks,
        }
    }

    pub fn with_hash(mut self, hash: impl Into<String>) -> Self {
        self.config_hash = Some(hash.into());
        self
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// One line: `name: PASS (statistic ... vs threshold ...)`.
    pub fn summary_line(&self) -> String {
        format!(
            "{}: {} (statistic {:.4e}, threshold {:.4e}, {} of {} checks failed)",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.statistic,
            self.threshold,
            self.failures().count(),
            self.checks.len()
        )
    }
}

fn require_size(summary: &EnsembleSummary) -> Result<()> {
    if summary.realizations() < MIN_REALIZATIONS {
        return Err(Error::InsufficientData(format!(
            "{} realizations, at least {MIN_REALIZATIONS} needed",
            summary.realizations()
        )));
    }
    Ok(())
}

fn require_companion(summary: &EnsembleSummary, companion: &EnsembleSummary) -> Result<()> {
    let (a, b) = (summary.config(), companion.config());
    if a.seed != b.seed
        || a.first_realization != b.first_realization
        || a.realizations != b.realizations
        || b.noise_level != a.noise_level + 1
        || a.times() != b.times()
    {
        return Err(Error::Config(
            "companion run is not the dt/2 refinement of the same ensemble".into(),
        ));
    }
    Ok(())
}

/// Two (mode, part) coordinates whose correlation is checked.
pub type ModePair = ((usize, Part), (usize, Part));

/// Tolerances fixed before looking at any data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureTolerances {
    pub se_multiplier: f64,
    /// Absolute bound on excess kurtosis; `None` uses `se_multiplier·√(24/M)`.
    pub kurtosis_abs: Option<f64>,
    /// Correlations must stay below `correlation_multiplier / √M`.
    pub correlation_multiplier: f64,
    /// Mode pairs whose correlation is tested; `None` uses consecutive low modes,
    /// real with real and imaginary with imaginary.
    pub pairs: Option<Vec<ModePair>>,
}

impl Default for MeasureTolerances {
    fn default() -> Self {
        Self {
            se_multiplier: 3.0,
            kurtosis_abs: None,
            correlation_multiplier: 3.0,
            pairs: None,
        }
    }
}

/// Each coordinate `Re û(n,t)`, `Im û(n,t)` must be centred Gaussian with variance
/// `(α+t)/2` (or `α/2` without forcing) and uncorrelated across modes. Tolerances are
/// `k·SE` plus the difference to the dt/2 companion run at the same realizations.
pub fn measure_test(
    summary: &EnsembleSummary,
    companion: Option<&EnsembleSummary>,
    t: f64,
    alpha: f64,
    tol: &MeasureTolerances,
) -> Result<TestReport> {
    require_size(summary)?;
    if let Some(c) = companion {
        require_companion(summary, c)?;
    }
    let k = summary.checkpoint_index(t)?;
    let m = summary.realizations() as f64;
    let target = match summary.config().forcing {
        Forcing::Stochastic => 0.5 * (alpha + t),
        Forcing::None => 0.5 * alpha,
    };
    let kurt_tol = tol.kurtosis_abs.unwrap_or(tol.se_multiplier * (24.0 / m).sqrt());
    let mut checks = Vec::new();
    for n in 1..=summary.n_max() {
        for part in [Part::Re, Part::Im] {
            let mo = summary.mode_moments(k, n, part);
            let cm = companion.map(|c| c.mode_moments(k, n, part));
            let bias = cm.map_or(0.0, |c| (mo.variance - c.variance).abs());
            checks.push(Check::within(
                format!("var {part} u({n}) t={t}"),
                mo.variance - target,
                tol.se_multiplier * mo.variance_se + bias,
            ));
            let kbias = cm.map_or(0.0, |c| (mo.excess_kurtosis - c.excess_kurtosis).abs());
            checks.push(Check::within(
                format!("kurt {part} u({n}) t={t}"),
                mo.excess_kurtosis,
                kurt_tol + kbias,
            ));
        }
    }
    let pairs = tol.pairs.clone().unwrap_or_else(|| {
        (1..summary.n_trunc())
            .flat_map(|n| [((n, Part::Re), (n + 1, Part::Re)), ((n, Part::Im), (n + 1, Part::Im))])
            .collect()
    });
    for (a, b) in pairs {
        let c = summary.correlation(k, a, b);
        let bias = companion.map_or(0.0, |s| (c - s.correlation(k, a, b)).abs());
        checks.push(Check::within(
            format!("corr {} u({}) {} u({}) t={t}", a.1, a.0, b.1, b.0),
            c,
            tol.correlation_multiplier / m.sqrt() + bias,
        ));
    }
    let mut report = TestReport::from_checks(format!("measure t={t} alpha={alpha}"), summary.config().seed, checks);
    if companion.is_none() {
        report.warnings.push("no dt/2 companion run: bias allowance unavailable".into());
    }
    if summary.fallback_steps() > 0 {
        report
            .warnings
            .push(format!("{} midpoint steps were subdivided; reduce dt", summary.fallback_steps()));
    }
    Ok(report)
}

/// Sub-Gaussian fit `ln P(X > λ) ≈ a - c·α/(α+t)·λ²` over the upper tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub c: f64,
    pub fit: LinearFit,
}

/// Samples needed before a tail fit is attempted.
pub const MIN_TAIL_SAMPLES: usize = 1000;

/// Fits `ln S(λ)` against `λ²` between the 90% quantile and the level leaving 20 samples.
pub fn tail_fit(samples: &[f64], alpha: f64, t: f64) -> Option<TailFit> {
    let m = samples.len();
    if m < MIN_TAIL_SAMPLES {
        return None;
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let q_hi = 1.0 - 20.0 / m as f64;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in 0..16 {
        let q = 0.9 + (q_hi - 0.9) * i as f64 / 15.0;
        let lambda = quantile_sorted(&v, q);
        xs.push(lambda * lambda);
        ys.push((1.0 - q).ln());
    }
    let fit = linear_fit(&xs, &ys);
    Some(TailFit {
        c: -fit.slope * (alpha + t) / alpha,
        fit,
    })
}

/// Two-sample KS between norms at time `t` and `√((α+t)/α)`-scaled norms at time 0, plus a
/// sub-Gaussian tail fit of the time-`t` sample.
pub fn tail_scaling_test(at_t: &[f64], at_0: &[f64], alpha: f64, t: f64, p_threshold: f64, seed: u64) -> Result<TestReport> {
    if !(alpha > 0.0) || !(t >= 0.0) {
        return domain("tail scaling needs alpha > 0 and t >= 0");
    }
    let factor = ((alpha + t) / alpha).sqrt();
    let scaled: Vec<f64> = at_0.iter().map(|x| x * factor).collect();
    let ks = ks_two_sample(at_t, &scaled)?;
    let mut checks = vec![Check::above(format!("KS p t={t}"), ks.p_value, p_threshold)];
    let mut warnings = Vec::new();
    match tail_fit(at_t, alpha, t) {
        Some(f) => checks.push(Check::above(format!("tail c t={t}"), f.c, 0.0)),
        None => warnings.push(format!("tail fit skipped: fewer than {MIN_TAIL_SAMPLES} samples")),
    }
    Ok(TestReport {
        name: format!("tail scaling t={t}"),
        statistic: ks.p_value,
        threshold: p_threshold,
        pass: checks.iter().all(|c| c.pass),
        seed,
        config_hash: None,
        warnings,
        checks,
    })
}

/// Per-path least-squares slope of `|U_t|²` over the recorded times; the mean slope must
/// equal `N` (or 0 without forcing) within `k·SE` plus the companion difference.
pub fn energy_slope_test(summary: &EnsembleSummary, companion: Option<&EnsembleSummary>, se_multiplier: f64) -> Result<TestReport> {
    require_size(summary)?;
    if summary.times().len() < 2 {
        return Err(Error::InsufficientData("need at least two recorded times".into()));
    }
    let slopes = |s: &EnsembleSummary| -> Vec<f64> {
        let e: Vec<Vec<f64>> = (0..s.times().len()).map(|k| s.low_energy(k)).collect();
        (0..s.realizations())
            .map(|r| {
                let ys: Vec<f64> = e.iter().map(|col| col[r]).collect();
                linear_fit(s.times(), &ys).slope
            })
            .collect()
    };
    let mine = moments(&slopes(summary));
    let bias = match companion {
        Some(c) => {
            require_companion(summary, c)?;
            (mine.mean - moments(&slopes(c)).mean).abs()
        }
        None => 0.0,
    };
    let n = summary.n_trunc() as f64;
    let target = match summary.config().forcing {
        Forcing::Stochastic => n,
        Forcing::None => 0.0,
    };
    let check = Check::within(
        format!("d/dt E|U|^2 = {:.5} (N = {n})", mine.mean),
        mine.mean - target,
        se_multiplier * mine.mean_se + bias,
    );
    let mut report = TestReport::from_checks(format!("energy slope N={}", summary.n_trunc()), summary.config().seed, vec![check]);
    if companion.is_none() {
        report.warnings.push("no dt/2 companion run: bias allowance unavailable".into());
    }
    Ok(report)
}

/// For each pair of consecutive recorded times, the per-path quantity
/// `(F(U_{t'}) - F(U_t))/(t'-t) - ½(LF(U_t) + LF(U_{t'}))` must have mean zero within
/// `k·SE` (plus the companion difference).
pub fn generator_martingale_test(
    summary: &EnsembleSummary,
    companion: Option<&EnsembleSummary>,
    f: &(dyn TestFunction + Sync),
    name: &str,
    se_multiplier: f64,
) -> Result<TestReport> {
    require_size(summary)?;
    if summary.config().forcing != Forcing::Stochastic {
        return domain("the generator identity concerns the forced system");
    }
    let residuals = |s: &EnsembleSummary, k: usize| -> Vec<f64> {
        let (t0, t1) = (s.times()[k], s.times()[k + 1]);
        (0..s.realizations())
            .into_par_iter()
            .map(|r| {
                let (a, b) = (s.phase_point(k, r), s.phase_point(k + 1, r));
                let df = (f.value(b.coords()) - f.value(a.coords())) / (t1 - t0);
                df - 0.5 * (apply_generator(f, &a) + apply_generator(f, &b))
            })
            .collect()
    };
    let mut checks = Vec::new();
    for k in 0..summary.times().len() - 1 {
        let mo = moments(&residuals(summary, k));
        let bias = match companion {
            Some(c) => {
                require_companion(summary, c)?;
                (mo.mean - moments(&residuals(c, k)).mean).abs()
            }
            None => 0.0,
        };
        let tol = if mo.mean_se == 0.0 {
            1e-12
        } else {
            se_multiplier * mo.mean_se + bias
        };
        checks.push(Check::within(
            format!("{name}: dE/dt - E[LF] on [{}, {}]", summary.times()[k], summary.times()[k + 1]),
            mo.mean,
            tol,
        ));
    }
    Ok(TestReport::from_checks(format!("generator {name}"), summary.config().seed, checks))
}

/// Log–log fit of the median against the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub horizons: Vec<f64>,
    pub medians: Vec<f64>,
    pub exponent: f64,
    pub exponent_se: f64,
    /// RMS log-residual of the best `C·√(T log T)` curve.
    pub sqrt_t_log_t_rms: f64,
    /// RMS log-residual of the power-law fit.
    pub power_law_rms: f64,
}

/// Fits `median ~ T^γ`. Needs at least three horizons spanning four octaves.
pub fn growth_fit(samples: &[(f64, Vec<f64>)]) -> Result<GrowthReport> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!("{} horizons, at least 3 needed", samples.len())));
    }
    let horizons: Vec<f64> = samples.iter().map(|(t, _)| *t).collect();
    let lo = horizons.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = horizons.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < 16.0 * (1.0 - 1e-12) {
        return Err(Error::InsufficientData(format!(
            "horizons [{lo}, {hi}] span fewer than four octaves"
        )));
    }
    let medians: Vec<f64> = samples.iter().map(|(_, v)| median(v)).collect();
    let lx: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let fit = try_linear_fit(&lx, &ly)?;
    let rms = |res: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = res.collect();
        (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
    };
    let power_law_rms = rms(&mut lx.iter().zip(&ly).map(|(x, y)| y - fit.intercept - fit.slope * x));
    // C√(T log T) in log form: ln m = ln C + ½ ln(T ln T); ln C by averaging
    let shape: Vec<f64> = horizons.iter().map(|t| 0.5 * (t * t.ln().max(f64::MIN_POSITIVE)).ln()).collect();
    let ln_c = ly.iter().zip(&shape).map(|(y, s)| y - s).sum::<f64>() / ly.len() as f64;
    let sqrt_t_log_t_rms = rms(&mut ly.iter().zip(&shape).map(|(y, s)| y - ln_c - s));
    Ok(GrowthReport {
        horizons,
        medians,
        exponent: fit.slope,
        exponent_se: fit.slope_se,
        sqrt_t_log_t_rms,
        power_law_rms,
    })
}

/// Process whose running supremum of a spatial norm is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "model")]
pub enum GrowthModel {
    StochasticConvolution,
    TruncatedSkdv { n_trunc: usize, alpha: f64, scheme: SchemeKind },
    DeterministicKdv { n_trunc: usize, alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    pub model: GrowthModel,
    pub n_max: usize,
    pub dt: f64,
    /// Output spacing, in steps, of the grid over which the supremum is taken.
    pub record_every: usize,
    pub horizons: Vec<f64>,
    pub paths: usize,
    pub seed: u64,
    pub norm: NormSpec,
}

/// One path per realization up to the largest horizon; for each horizon `T` returns the
/// per-path `sup_{t <= T}` of the norm over the output grid.
pub fn sup_norm_samples(cfg: &GrowthConfig) -> Result<Vec<(f64, Vec<f64>)>> {
    let horizons = sorted_horizons(&cfg.horizons)?;
    let t_max = *horizons.last().expect("non-empty");
    let traj = |r: usize| -> Result<Trajectory> { growth_trajectory(cfg, r as u64, t_max) };
    let per_path: Vec<Vec<f64>> = (0..cfg.paths)
        .into_par_iter()
        .map(|r| {
            let tr = traj(r)?;
            let mut out = Vec::with_capacity(horizons.len());
            let mut sup = 0.0f64;
            let mut h = 0;
            for (k, s) in tr.states().iter().enumerate() {
                sup = sup.max(spatial_norm(s, &cfg.norm));
                while h < horizons.len() && tr.time(k) >= horizons[h] - 1e-9 * horizons[h] {
                    out.push(sup);
                    h += 1;
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(horizons
        .iter()
        .enumerate()
        .map(|(i, t)| (*t, per_path.iter().map(|v| v[i]).collect()))
        .collect())
}

fn sorted_horizons(h: &[f64]) -> Result<Vec<f64>> {
    let mut v = h.to_vec();
    if v.is_empty() || v.iter().any(|t| !(*t > 0.0)) {
        return domain("horizons must be positive and non-empty");
    }
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn growth_trajectory(cfg: &GrowthConfig, r: u64, t_max: f64) -> Result<Trajectory> {
    let rng = RngStream::new(cfg.seed);
    let steps = (t_max / cfg.dt).round() as usize;
    let steps = steps.div_ceil(cfg.record_every) * cfg.record_every;
    match cfg.model {
        GrowthModel::StochasticConvolution => {
            let path = generate_noise_path(&rng, r, cfg.n_max, cfg.dt, steps)?;
            sample_stochastic_convolution(&path, cfg.n_max, cfg.record_every)
        }
        GrowthModel::TruncatedSkdv { n_trunc, alpha, scheme } => {
            let u0 = sample_white_noise(&WhiteNoiseSpec { alpha, n_max: cfg.n_max }, &rng, r)?;
            let path = generate_noise_path(&rng, r, cfg.n_max, cfg.dt, steps)?;
            flow_truncated_skdv(
                &u0,
                0.0,
                steps as f64 * cfg.dt,
                n_trunc,
                &path,
                SchemeSpec::new(scheme, cfg.record_every)?,
            )
        }
        GrowthModel::DeterministicKdv { n_trunc, alpha } => {
            let u0 = sample_white_noise(&WhiteNoiseSpec { alpha, n_max: cfg.n_max }, &rng, r)?;
            flow_deterministic_kdv(&u0, 0.0, steps as f64 * cfg.dt, n_trunc, cfg.dt, cfg.record_every)
        }
    }
}

/// Per-path values of a window functional of the stochastic convolution: for each horizon
/// `T`, `whole(Ψ on [0,T])` and `unit(Ψ on [T-1,T])` (each window taken as its own
/// trajectory, i.e. zero-extended to its padded grid).
pub struct WindowSamples {
    pub horizons: Vec<f64>,
    pub whole: Vec<Vec<f64>>,
    pub unit: Vec<Vec<f64>>,
}

pub fn convolution_window_samples(
    n_max: usize,
    dt: f64,
    horizons: &[f64],
    paths: usize,
    seed: u64,
    functional: &(dyn Fn(&Trajectory) -> Result<f64> + Sync),
) -> Result<WindowSamples> {
    let horizons = sorted_horizons(horizons)?;
    let t_max = *horizons.last().expect("non-empty");
    let cfg = GrowthConfig {
        model: GrowthModel::StochasticConvolution,
        n_max,
        dt,
        record_every: 1,
        horizons: horizons.clone(),
        paths,
        seed,
        norm: NormSpec::spatial(0.0, 2.0, Default::default()),
    };
    let per_path: Vec<(Vec<f64>, Vec<f64>)> = (0..paths)
        .into_par_iter()
        .map(|r| {
            let tr = growth_trajectory(&cfg, r as u64, t_max)?;
            let mut whole = Vec::new();
            let mut unit = Vec::new();
            for &t in &horizons {
                let end = (t / dt).round() as usize;
                let start_unit = ((t - 1.0).max(0.0) / dt).round() as usize;
                whole.push(functional(&slice(&tr, 0, end + 1)?)?);
                unit.push(functional(&slice(&tr, start_unit, end + 1)?)?);
            }
            Ok((whole, unit))
        })
        .collect::<Result<_>>()?;
    let whole = (0..horizons.len()).map(|i| per_path.iter().map(|p| p.0[i]).collect()).collect();
    let unit = (0..horizons.len()).map(|i| per_path.iter().map(|p| p.1[i]).collect()).collect();
    Ok(WindowSamples { horizons, whole, unit })
}

fn slice(tr: &Trajectory, first: usize, end: usize) -> Result<Trajectory> {
    if end > tr.len() || first >= end {
        return domain("window outside trajectory");
    }
    Trajectory::new(tr.time(first), tr.dt_out(), tr.states()[first..end].to_vec())
}

/// `mean ~ T^γ` fitted on logs.
pub fn mean_power_fit(horizons: &[f64], samples: &[Vec<f64>]) -> Result<LinearFit> {
    let lx: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = samples.iter().map(|v| moments(v).mean.ln()).collect();
    try_linear_fit(&lx, &ly)
}
