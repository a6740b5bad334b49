//! Coupled truncation study: `u^N` against `u^{2N}` on shared data and noise.

use super::estimators::{bootstrap, linear_fit, median, quantile};
use crate::dynamics::{flow_truncated_skdv, SchemeKind, SchemeSpec, Trajectory};
use crate::error::{domain, Error, Result};
use crate::noise::generate_noise_path;
use crate::norms::{spatial_norm, NormSpec};
use crate::rng::RngStream;
use crate::spectrum::{sample_white_noise, WhiteNoiseSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Everything that must agree for two runs to be coupled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingKey {
    pub seed: u64,
    pub realization: u64,
    pub alpha: f64,
    pub dt: f64,
    pub n_max: usize,
}

/// A trajectory at one truncation level with its coupling key.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub n_trunc: usize,
    pub key: CouplingKey,
    pub trajectory: Trajectory,
}

/// `sup_t ‖u^N(t) - u^M(t)‖` over the shared output grid. Fails with
/// [`Error::Uncoupled`] unless both runs share their key and every mode above `max(N, M)`
/// agrees exactly (both are then the same linear evolution of the same data and noise).
pub fn coupled_difference(a: &CoupledRun, b: &CoupledRun, norm: &NormSpec) -> Result<f64> {
    if a.key != b.key {
        return Err(Error::Uncoupled(format!("keys differ: {:?} vs {:?}", a.key, b.key)));
    }
    let (ta, tb) = (&a.trajectory, &b.trajectory);
    if ta.len() != tb.len() || ta.dt_out() != tb.dt_out() || ta.t0() != tb.t0() {
        return Err(Error::Uncoupled("output grids differ".into()));
    }
    let top = a.n_trunc.max(b.n_trunc);
    let mut sup = 0.0f64;
    for (x, y) in ta.states().iter().zip(tb.states()) {
        if x.coeffs()[top.min(x.n_max())..] != y.coeffs()[top.min(y.n_max())..] {
            return Err(Error::Uncoupled(format!("modes above {top} differ")));
        }
        sup = sup.max(spatial_norm(&(x - y), norm));
    }
    Ok(sup)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    /// Each `N` is compared with `2N`.
    pub levels: Vec<usize>,
    pub n_max: usize,
    pub alpha: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub paths: usize,
    pub seed: u64,
    pub scheme: SchemeKind,
    pub norm: NormSpec,
    pub bootstrap_replicates: usize,
    /// One-sided confidence for a positive decay rate.
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub levels: Vec<usize>,
    /// `differences[i][r]` compares `levels[i]` with `2 levels[i]` on path `r`.
    pub differences: Vec<Vec<f64>>,
    pub medians: Vec<f64>,
    pub strictly_decreasing: bool,
    /// `-d log₂(median) / d log₂ N`.
    pub rate: f64,
    /// Per-path fitted rates.
    pub path_rates: Vec<f64>,
    pub median_path_rate: f64,
    /// Lower bootstrap quantile of the rate at the configured confidence.
    pub rate_lower: f64,
    pub pass: bool,
}

fn rate_of(levels: &[usize], medians: &[f64]) -> f64 {
    let x: Vec<f64> = levels.iter().map(|n| (*n as f64).log2()).collect();
    let y: Vec<f64> = medians.iter().map(|m| m.log2()).collect();
    -linear_fit(&x, &y).slope
}

pub fn truncation_convergence(cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    if cfg.levels.len() < 2 {
        return Err(Error::InsufficientData("need at least two truncation levels".into()));
    }
    if cfg.levels.iter().any(|n| *n == 0 || 2 * n > cfg.n_max) {
        return domain(format!("every level N needs 1 <= 2N <= n_max = {}", cfg.n_max));
    }
    if cfg.paths == 0 || !(cfg.confidence > 0.0 && cfg.confidence < 1.0) {
        return domain("need paths >= 1 and confidence in (0, 1)");
    }
    let mut all: Vec<usize> = cfg.levels.iter().flat_map(|n| [*n, 2 * n]).collect();
    all.sort_unstable();
    all.dedup();
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    if steps == 0 || !steps.is_multiple_of(cfg.record_every) {
        return Err(Error::Config(format!(
            "{steps} steps cannot be recorded every {}",
            cfg.record_every
        )));
    }
    let rng = RngStream::new(cfg.seed);
    let per_path: Vec<Vec<f64>> = (0..cfg.paths)
        .into_par_iter()
        .map(|r| {
            let r = r as u64;
            let key = CouplingKey {
                seed: cfg.seed,
                realization: r,
                alpha: cfg.alpha,
                dt: cfg.dt,
                n_max: cfg.n_max,
            };
            let u0 = sample_white_noise(
                &WhiteNoiseSpec {
                    alpha: cfg.alpha,
                    n_max: cfg.n_max,
                },
                &rng,
                r,
            )?;
            let path = generate_noise_path(&rng, r, cfg.n_max, cfg.dt, steps)?;
            let scheme = SchemeSpec::new(cfg.scheme, cfg.record_every)?;
            let runs: Vec<CoupledRun> = all
                .iter()
                .map(|&n| {
                    Ok(CoupledRun {
                        n_trunc: n,
                        key,
                        trajectory: flow_truncated_skdv(&u0, 0.0, steps as f64 * cfg.dt, n, &path, scheme)?,
                    })
                })
                .collect::<Result<_>>()?;
            let find = |n: usize| &runs[all.binary_search(&n).expect("level simulated")];
            cfg.levels
                .iter()
                .map(|&n| coupled_difference(find(n), find(2 * n), &cfg.norm))
                .collect()
        })
        .collect::<Result<_>>()?;

    let differences: Vec<Vec<f64>> = (0..cfg.levels.len()).map(|i| per_path.iter().map(|p| p[i]).collect()).collect();
    let medians: Vec<f64> = differences.iter().map(|d| median(d)).collect();
    let strictly_decreasing = medians.windows(2).all(|w| w[1] < w[0]);
    let rate = rate_of(&cfg.levels, &medians);
    let path_rates: Vec<f64> = per_path.iter().map(|p| rate_of(&cfg.levels, p)).collect();
    let boot = bootstrap(cfg.paths, cfg.bootstrap_replicates, cfg.seed ^ 0xb007, |idx| {
        let med: Vec<f64> = differences
            .iter()
            .map(|d| median(&idx.iter().map(|&i| d[i]).collect::<Vec<_>>()))
            .collect();
        rate_of(&cfg.levels, &med)
    });
    let rate_lower = quantile(&boot, 1.0 - cfg.confidence);
    Ok(ConvergenceReport {
        levels: cfg.levels.clone(),
        medians,
        strictly_decreasing,
        rate,
        median_path_rate: median(&path_rates),
        path_rates,
        rate_lower,
        pass: strictly_decreasing && rate_lower > 0.0,
        differences,
    })
}
