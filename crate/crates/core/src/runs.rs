//! One driver per `skdv` subcommand. Each reads a validated [`SimConfig`], writes its CSV
//! artifacts into `out` and returns the test reports; the caller writes the manifest.

use crate::config::{GrowthProcess, SimConfig};
use crate::dynamics::{
    flow_truncated_skdv, operator_norm, sample_stochastic_convolution, trotter_compare, SchemeKind, SchemeSpec, Trajectory,
};
use crate::error::Result;
use crate::generator::{verify_identities, Coordinate, CoordinateProduct, SquaredNorm, TestFunction};
use crate::io::{self, num, CsvSink, FileEntry, StateMeta};
use crate::noise::generate_noise_path;
use crate::norms::{
    besov_norm, fourier_lebesgue_norm, holder_embedding_constant, l_omega, l_omega_perp, restricted_norm, xsb_norm, LOmegaSpec, NormSpec,
    NormVariant, SpaceTimeBlock, DEFAULT_PADDING, L_OMEGA_SUPPRESSION_CONSTANT,
};
use crate::rng::{Domain, RngStream};
use crate::spectrum::{sample_white_noise, SpectralState, WhiteNoiseSpec};
use crate::statistics::{
    energy_slope_test, generator_martingale_test, growth_fit, linear_fit, measure_test, median, moments, reference_norm_samples,
    run_ensemble, sup_norm_samples, tail_scaling_test, truncation_convergence, Check, ConvergenceConfig, EnsembleConfig, EnsembleSummary,
    Forcing, GrowthConfig, GrowthModel, Part, TestReport,
};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::path::{Path, PathBuf};

/// Where and under which provenance a run writes.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: SimConfig,
    pub hash: String,
    pub out: PathBuf,
}

impl RunContext {
    pub fn new(config: SimConfig, out: impl Into<PathBuf>) -> Result<Self> {
        config.validate()?;
        let out = out.into();
        std::fs::create_dir_all(&out)?;
        Ok(Self {
            hash: config.hash(),
            config,
            out,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn sink(&self, name: &str, schema: &str) -> Result<CsvSink> {
        CsvSink::create(self.path(name), schema, &self.hash)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub reports: Vec<TestReport>,
    pub files: Vec<FileEntry>,
}

impl RunOutput {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

/// The ensemble described by the model, time and ensemble sections.
pub fn ensemble_config(cfg: &SimConfig) -> EnsembleConfig {
    let mut e = EnsembleConfig::new(
        cfg.model.n_trunc,
        cfg.model.n_max,
        cfg.model.alpha,
        cfg.time.dt,
        cfg.time.checkpoints.clone(),
        cfg.ensemble.realizations,
    );
    e.scheme = cfg.ensemble.scheme;
    e.integrator = cfg.ensemble.integrator;
    e.seed = cfg.seed;
    e.forcing = cfg.ensemble.forcing;
    e.high_modes = cfg.ensemble.high_modes;
    e.norms = cfg.norms.clone();
    e.max_wall_seconds = cfg.ensemble.max_wall_seconds;
    e
}

fn run_with_companion(e: &EnsembleConfig, companion: bool) -> Result<(EnsembleSummary, Option<EnsembleSummary>)> {
    let s = run_ensemble(e)?;
    let c = if companion { Some(run_ensemble(&e.companion())?) } else { None };
    Ok((s, c))
}

fn write_summary(ctx: &RunContext, s: &EnsembleSummary, prefix: &str) -> Result<Vec<FileEntry>> {
    let rows: Vec<_> = (0..s.times().len()).flat_map(|k| s.mode_table(k)).collect();
    let modes = io::write_mode_table(&ctx.path(&format!("{prefix}modes.csv")), &rows, &ctx.hash)?;
    let mut sink = ctx.sink(&format!("{prefix}samples.csv"), io::SAMPLES_SCHEMA)?;
    for (k, t) in s.times().iter().enumerate() {
        for (r, v) in s.low_energy(k).iter().enumerate() {
            sink.row(["low_energy".to_string(), num(*t), r.to_string(), num(*v)])?;
        }
        for j in 0..s.config().norms.len() {
            let name = format!("norm{j}");
            for (r, v) in s.norm_samples(k, j).iter().enumerate() {
                sink.row([name.clone(), num(*t), r.to_string(), num(*v)])?;
            }
        }
    }
    Ok(vec![modes, sink.finish(io::SAMPLES_SCHEMA)?])
}

/// Ensemble statistics plus full trajectories of the first `output.trajectories` paths.
pub fn simulate(ctx: &RunContext) -> Result<RunOutput> {
    let cfg = &ctx.config;
    let e = ensemble_config(cfg);
    let s = run_ensemble(&e)?;
    let mut files = write_summary(ctx, &s, "")?;
    let rng = RngStream::new(cfg.seed);
    let m = &cfg.model;
    let steps = (cfg.time.end() / cfg.time.dt).round() as usize;
    let record = steps.div_ceil(100).max(1);
    let steps = steps.div_ceil(record) * record;
    let scheme = SchemeSpec::new(cfg.ensemble.scheme, record)?.with_integrator(cfg.ensemble.integrator);
    for r in 0..cfg.output.trajectories {
        let u0 = sample_white_noise(
            &WhiteNoiseSpec {
                alpha: m.alpha,
                n_max: m.n_max,
            },
            &rng,
            r as u64,
        )?;
        if r == 0 {
            let meta = StateMeta {
                n_max: m.n_max,
                alpha: m.alpha,
                seed: cfg.seed,
                config_hash: Some(ctx.hash.clone()),
            };
            files.push(io::write_state(&ctx.out, "initial_state", &u0, &meta)?);
        }
        let traj = match cfg.ensemble.forcing {
            Forcing::Stochastic => {
                let path = generate_noise_path(&rng, r as u64, m.n_max, cfg.time.dt, steps)?;
                flow_truncated_skdv(&u0, 0.0, steps as f64 * cfg.time.dt, m.n_trunc, &path, scheme)?
            }
            Forcing::None => crate::dynamics::flow_deterministic_kdv(&u0, 0.0, steps as f64 * cfg.time.dt, m.n_trunc, cfg.time.dt, record)?,
        };
        files.push(io::write_trajectory(&ctx.path(&format!("trajectory_{r}.csv")), &traj, &ctx.hash)?);
    }
    Ok(RunOutput {
        reports: Vec::new(),
        files,
    })
}

/// Test functions of the weak generator identity at truncation `n` (coordinates
/// `p_1..p_N, q_1..q_N`).
pub fn martingale_functions(n: usize) -> Vec<(&'static str, Box<dyn TestFunction + Sync>)> {
    let mut f: Vec<(&'static str, Box<dyn TestFunction + Sync>)> = vec![
        ("|x|^2", Box::new(SquaredNorm)),
        ("p1", Box::new(Coordinate(0))),
        ("p1^2", Box::new(CoordinateProduct(0, 0))),
    ];
    if n >= 2 {
        f.push(("p1 q2", Box::new(CoordinateProduct(0, n + 1))));
    }
    f
}

/// Gaussian laws at every checkpoint, the energy slope and the generator identities (with
/// forcing), or invariance and per-path `L²` conservation (without).
pub fn verify_measure(ctx: &RunContext) -> Result<RunOutput> {
    let cfg = &ctx.config;
    let e = ensemble_config(cfg);
    let (s, c) = run_with_companion(&e, cfg.ensemble.companion)?;
    let mut reports = Vec::new();
    let tol = cfg.tolerances.measure();
    for &t in s.times() {
        reports.push(measure_test(&s, c.as_ref(), t, cfg.model.alpha, &tol)?);
    }
    match e.forcing {
        Forcing::Stochastic => {
            reports.push(energy_slope_test(&s, c.as_ref(), cfg.tolerances.se_multiplier)?);
            for (name, f) in martingale_functions(e.n_trunc) {
                reports.push(generator_martingale_test(
                    &s,
                    c.as_ref(),
                    f.as_ref(),
                    name,
                    cfg.tolerances.se_multiplier,
                )?);
            }
        }
        Forcing::None => {
            let drift = s.max_energy_drift();
            reports.push(TestReport::from_checks(
                "low-mode L2 conservation",
                cfg.seed,
                vec![Check::within("max per-path L2 drift", drift, cfg.tolerances.energy_drift)],
            ));
        }
    }
    let files = write_summary(ctx, &s, "")?;
    Ok(RunOutput {
        reports: hashed(reports, &ctx.hash),
        files,
    })
}

fn hashed(reports: Vec<TestReport>, hash: &str) -> Vec<TestReport> {
    reports.into_iter().map(|r| r.with_hash(hash)).collect()
}

/// Drift orthogonality, divergence and forward-equation residuals on random points.
pub fn verify_generator(ctx: &RunContext) -> Result<RunOutput> {
    let cfg = &ctx.config;
    let g = &cfg.generator;
    let ids = verify_identities(&g.truncations, g.samples, &g.alphas, &g.times, cfg.seed, &g.thresholds())?;
    let path = ctx.path("generator.json");
    std::fs::write(&path, serde_json::to_string_pretty(&ids)?)?;
    let reports = ids
        .iter()
        .map(|id| TestReport {
            name: format!("{} N={}", id.identity, id.n_trunc),
            statistic: id.max_residual,
            threshold: id.threshold,
            pass: id.pass,
            seed: cfg.seed,
            config_hash: Some(ctx.hash.clone()),
            warnings: Vec::new(),
            checks: vec![Check::within(
                format!("max residual over {} points", id.samples),
                id.max_residual,
                id.threshold,
            )],
        })
        .collect();
    Ok(RunOutput {
        reports,
        files: Vec::new(),
    })
}

/// KS p-values of norm(t) against `√((α+t)/α)·norm(0)` over independent seeds; the median
/// over replicates is tested. The first configured norm is used.
pub fn tails(ctx: &RunContext) -> Result<RunOutput> {
    let cfg = &ctx.config;
    let spec = cfg.norms[0];
    let mut base = ensemble_config(cfg);
    base.checkpoints = cfg.tails.times.clone();
    base.dt = cfg.tails.dt.unwrap_or(cfg.time.dt);
    base.norms = vec![spec];
    let mut pvals: Vec<Vec<f64>> = vec![Vec::new(); cfg.tails.times.len()];
    let mut reports = Vec::new();
    let mut sink = ctx.sink("tails.csv", io::SAMPLES_SCHEMA)?;
    let mut fallbacks = 0;
    for i in 0..cfg.tails.replicates {
        let seed = cfg.seed.wrapping_add(i as u64);
        let e = EnsembleConfig { seed, ..base.clone() };
        let s = run_ensemble(&e)?;
        fallbacks += s.fallback_steps();
        let at_0 = reference_norm_samples(cfg.model.alpha, cfg.model.n_max, e.realizations, seed, &spec)?;
        for (j, &t) in cfg.tails.times.iter().enumerate() {
            let at_t = s.norm_samples(s.checkpoint_index(t)?, 0);
            let rep = tail_scaling_test(&at_t, &at_0, cfg.model.alpha, t, cfg.tolerances.ks_p_threshold, seed)?;
            sink.row(["ks_p".to_string(), num(t), i.to_string(), num(rep.statistic)])?;
            if let Some(c) = rep.checks.iter().find(|c| c.label.starts_with("tail c")) {
                sink.row(["tail_c".to_string(), num(t), i.to_string(), num(c.value)])?;
            }
            pvals[j].push(rep.statistic);
        }
    }
    for (j, &t) in cfg.tails.times.iter().enumerate() {
        let med = median(&pvals[j]);
        let mut r = TestReport::from_checks(
            format!("tail scaling t={t}"),
            cfg.seed,
            vec![Check::above(
                format!("median KS p over {} seeds", pvals[j].len()),
                med,
                cfg.tolerances.ks_p_threshold,
            )],
        );
        r.statistic = med;
        r.threshold = cfg.tolerances.ks_p_threshold;
        if fallbacks > 0 {
            r.warnings
                .push(format!("{fallbacks} midpoint steps were subdivided; reduce tails.dt"));
        }
        reports.push(r);
    }
    Ok(RunOutput {
        reports: hashed(reports, &ctx.hash),
        files: vec![sink.finish(io::SAMPLES_SCHEMA)?],
    })
}

/// Sup-in-time norm growth over horizons; for the stochastic convolution also the per-mode
/// variance `E|Ψ̂(n,T)|² = T` and the growth of the whole-interval space-time norm.
pub fn growth(ctx: &RunContext) -> Result<RunOutput> {
    let cfg = &ctx.config;
    let g = &cfg.growth;
    let model = match g.process {
        GrowthProcess::StochasticConvolution => GrowthModel::StochasticConvolution,
        GrowthProcess::TruncatedSkdv => GrowthModel::TruncatedSkdv {
            n_trunc: cfg.model.n_trunc,
            alpha: cfg.model.alpha,
            scheme: cfg.ensemble.scheme,
        },
        GrowthProcess::DeterministicKdv => GrowthModel::DeterministicKdv {
            n_trunc: cfg.model.n_trunc,
            alpha: cfg.model.alpha,
        },
    };
    let gc = GrowthConfig {
        model,
        n_max: g.n_max,
        dt: g.dt,
        record_every: g.record_every,
        horizons: g.horizons.clone(),
        paths: g.paths,
        seed: cfg.seed,
        norm: cfg.norms[0],
    };
    let samples = sup_norm_samples(&gc)?;
    let fit = growth_fit(&samples)?;
    let mut sink = ctx.sink("growth.csv", io::SAMPLES_SCHEMA)?;
    for (t, v) in &samples {
        for (r, x) in v.iter().enumerate() {
            sink.row(["sup_norm".to_string(), num(*t), r.to_string(), num(*x)])?;
        }
    }
    let [lo, hi] = g.exponent_range;
    let mut checks = vec![
        Check::above("exponent above lower bound", fit.exponent - lo, 0.0),
        Check::above("exponent below upper bound", hi - fit.exponent, 0.0),
    ];
    let mut reports = Vec::new();
    if g.process == GrowthProcess::StochasticConvolution {
        let (y, var_checks) = convolution_checks(ctx, &mut sink)?;
        checks.push(Check::above(
            "space-time exponent above lower bound",
            y - g.y_exponent_range[0],
            0.0,
        ));
        checks.push(Check::above(
            "space-time exponent below upper bound",
            g.y_exponent_range[1] - y,
            0.0,
        ));
        reports.push(TestReport::from_checks(
            "stochastic convolution mode variance",
            cfg.seed,
            var_checks,
        ));
    }
    let mut main = TestReport::from_checks(format!("growth {:?}", g.process), cfg.seed, checks);
    main.statistic = fit.exponent;
    main.threshold = hi;
    main.warnings.push(format!(
        "exponent {:.4} ± {:.4}; log-rms misfit: power law {:.3e}, sqrt(T log T) {:.3e}",
        fit.exponent, fit.exponent_se, fit.power_law_rms, fit.sqrt_t_log_t_rms
    ));
    reports.insert(0, main);
    let files = vec![sink.finish(io::SAMPLES_SCHEMA)?];
    let path = ctx.path("growth_fit.json");
    std::fs::write(&path, serde_json::to_string_pretty(&fit)?)?;
    Ok(RunOutput {
        reports: hashed(reports, &ctx.hash),
        files,
    })
}

/// Returns the fitted exponent of `E‖Ψ‖_{Y on [0,T]}` and the per-mode variance checks.
fn convolution_checks(ctx: &RunContext, sink: &mut CsvSink) -> Result<(f64, Vec<Check>)> {
    let cfg = &ctx.config;
    let g = &cfg.growth;
    let mut horizons = g.horizons.clone();
    horizons.sort_by(f64::total_cmp);
    let t_max = *horizons.last().expect("validated");
    let steps = (t_max / g.y_dt).round() as usize;
    let rng = RngStream::new(cfg.seed);
    let per_path: Vec<(Vec<f64>, Vec<Vec<f64>>)> = (0..g.y_paths)
        .into_par_iter()
        .map(|r| {
            // disjoint from the sup-norm paths
            let path = generate_noise_path(&rng, (1 << 32) + r as u64, g.y_n_max, g.y_dt, steps)?;
            let psi = sample_stochastic_convolution(&path, g.y_n_max, 1)?;
            let mut ys = Vec::new();
            let mut modes = Vec::new();
            for &t in &horizons {
                let end = (t / g.y_dt).round() as usize;
                let w = Trajectory::new(0.0, g.y_dt, psi.states()[..=end].to_vec())?;
                let block = SpaceTimeBlock::from_trajectory(&w, DEFAULT_PADDING)?;
                ys.push(xsb_norm(&block, &g.y_norm)?);
                modes.push(psi.states()[end].coeffs().iter().map(|z| z.norm_sqr()).collect());
            }
            Ok((ys, modes))
        })
        .collect::<Result<_>>()?;
    let mut means = Vec::new();
    let mut checks = Vec::new();
    for (i, &t) in horizons.iter().enumerate() {
        let ys: Vec<f64> = per_path.iter().map(|p| p.0[i]).collect();
        for (r, y) in ys.iter().enumerate() {
            sink.row(["space_time_norm".to_string(), num(t), r.to_string(), num(*y)])?;
        }
        means.push(moments(&ys).mean);
        if i != 0 && i + 1 != horizons.len() {
            continue;
        }
        for n in 1..=g.y_n_max {
            let m = moments(&per_path.iter().map(|p| p.1[i][n - 1]).collect::<Vec<_>>());
            checks.push(Check::within(
                format!("E|psi({n},{t})|^2 - t"),
                m.mean - t,
                cfg.tolerances.se_multiplier * m.mean_se,
            ));
        }
    }
    let lx: Vec<f64> = horizons.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    Ok((linear_fit(&lx, &ly).slope, checks))
}

/// Coupled `u^N` vs `u^{2N}` differences and their decay.
pub fn converge(ctx: &RunContext) -> Result<RunOutput> {
    let cfg = &ctx.config;
    let c = &cfg.converge;
    let cc = ConvergenceConfig {
        levels: c.levels.clone(),
        n_max: c.n_max,
        alpha: cfg.model.alpha,
        dt: c.dt,
        t_end: c.t_end,
        record_every: c.record_every,
        paths: c.paths,
        seed: cfg.seed,
        scheme: cfg.ensemble.scheme,
        norm: c.norm(),
        bootstrap_replicates: c.bootstrap_replicates,
        confidence: c.confidence,
    };
    let rep = truncation_convergence(&cc)?;
    let mut sink = ctx.sink("converge.csv", io::SAMPLES_SCHEMA)?;
    for (n, d) in rep.levels.iter().zip(&rep.differences) {
        for (r, x) in d.iter().enumerate() {
            sink.row([format!("diff_N{n}"), num(c.t_end), r.to_string(), num(*x)])?;
        }
    }
    std::fs::write(ctx.path("converge.json"), serde_json::to_string_pretty(&rep)?)?;
    let mut checks: Vec<Check> = rep
        .medians
        .windows(2)
        .zip(rep.levels.windows(2))
        .map(|(m, l)| Check::above(format!("median N={} minus median N={}", l[0], l[1]), m[0] - m[1], 0.0))
        .collect();
    checks.push(Check::above(
        format!("rate lower {:.0}% bound", 100.0 * c.confidence),
        rep.rate_lower,
        0.0,
    ));
    let mut r = TestReport::from_checks("truncation convergence", cfg.seed, checks);
    r.statistic = rep.rate;
    r.threshold = 0.0;
    r.warnings.push(format!(
        "medians {:?}, rate {:.4}, median path rate {:.4}",
        rep.medians, rep.rate, rep.median_path_rate
    ));
    Ok(RunOutput {
        reports: hashed(vec![r], &ctx.hash),
        files: vec![sink.finish(io::SAMPLES_SCHEMA)?],
    })
}

fn matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Product-formula error rate for the configured matrices and, optionally, strang splitting
/// against exponential Euler on the SDE.
pub fn trotter(ctx: &RunContext) -> Result<RunOutput> {
    let cfg = &ctx.config;
    let tr = &cfg.trotter;
    let (a, b) = (matrix(&tr.a), matrix(&tr.b));
    let commutator = &a * &b - &b * &a;
    let scale = (operator_norm(&a) * operator_norm(&b)).max(f64::MIN_POSITIVE);
    let mut sink = ctx.sink("trotter.csv", io::SAMPLES_SCHEMA)?;
    let errors: Vec<f64> = tr.steps.iter().map(|&n| trotter_compare(&a, &b, tr.t, n)).collect::<Result<_>>()?;
    for (n, e) in tr.steps.iter().zip(&errors) {
        sink.row(["matrix_error".to_string(), num(tr.t), n.to_string(), num(*e)])?;
    }
    let mut reports = Vec::new();
    if operator_norm(&commutator) <= 1e-14 * scale {
        let exact = operator_norm(&crate::dynamics::expm(&((&a + &b) * tr.t)));
        let e1 = trotter_compare(&a, &b, tr.t, 1)?;
        reports.push(TestReport::from_checks(
            "trotter commuting",
            cfg.seed,
            vec![Check::within("error at n = 1", e1, 1e-12 * exact.max(1.0))],
        ));
    } else {
        let lx: Vec<f64> = tr.steps.iter().map(|n| (*n as f64).ln()).collect();
        let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
        let rate = -linear_fit(&lx, &ly).slope;
        let [lo, hi] = tr.rate_range;
        let mut r = TestReport::from_checks(
            "trotter rate",
            cfg.seed,
            vec![
                Check::above("rate above lower bound", rate - lo, 0.0),
                Check::above("rate below upper bound", hi - rate, 0.0),
            ],
        );
        r.statistic = rate;
        r.threshold = hi;
        reports.push(r);
    }
    let mut files = vec![sink.finish(io::SAMPLES_SCHEMA)?];
    if tr.sde {
        let (rep, f) = scheme_agreement(ctx)?;
        reports.push(rep);
        files.extend(f);
    }
    Ok(RunOutput {
        reports: hashed(reports, &ctx.hash),
        files,
    })
}

/// Strang splitting and exponential Euler from the same data and noise: mode variances at
/// `sde_intervals` equally spaced times agree within `k·√(SE₁² + SE₂²)`.
fn scheme_agreement(ctx: &RunContext) -> Result<(TestReport, Vec<FileEntry>)> {
    let cfg = &ctx.config;
    let tr = &cfg.trotter;
    let times: Vec<f64> = (1..=tr.sde_intervals)
        .map(|k| tr.sde_t * k as f64 / tr.sde_intervals as f64)
        .collect();
    let mut e = EnsembleConfig::new(
        tr.sde_n_trunc,
        tr.sde_n_trunc,
        cfg.model.alpha,
        tr.sde_dt,
        times,
        tr.sde_realizations,
    );
    e.seed = cfg.seed;
    e.integrator = cfg.ensemble.integrator;
    e.scheme = SchemeKind::StrangSplit;
    let strang = run_ensemble(&e)?;
    e.scheme = SchemeKind::ExponentialEm;
    let em = run_ensemble(&e)?;
    let mut checks = Vec::new();
    for (k, t) in strang.times().iter().enumerate().skip(1) {
        for n in 1..=tr.sde_n_trunc {
            for part in [Part::Re, Part::Im] {
                let (a, b) = (strang.mode_moments(k, n, part), em.mode_moments(k, n, part));
                let tol = cfg.tolerances.se_multiplier * a.variance_se.hypot(b.variance_se);
                checks.push(Check::within(
                    format!("var {part} u({n}) t={t}: strang - em"),
                    a.variance - b.variance,
                    tol,
                ));
            }
        }
    }
    let files = vec![
        write_summary(ctx, &strang, "trotter_strang_")?.remove(0),
        write_summary(ctx, &em, "trotter_em_")?.remove(0),
    ];
    Ok((TestReport::from_checks("strang vs exponential euler", cfg.seed, checks), files))
}

/// Norms of a stored trajectory on a time window.
pub fn trajectory_norms(ctx: &RunContext, input: &Path, spec: &NormSpec, window: Option<(f64, f64)>) -> Result<RunOutput> {
    let traj = io::read_trajectory(input)?;
    let window = window.unwrap_or((traj.t0(), traj.t_end()));
    let (first, len) = crate::norms::window_indices(&traj, window.0, window.1)?;
    let grid = format!("samples={len};dt={};padding={DEFAULT_PADDING}", num(traj.dt_out()));
    let win = format!("{}:{}", num(window.0), num(window.1));
    let mut sink = ctx.sink("norms.csv", io::NORMS_SCHEMA)?;
    let name = format!(
        "{}(s={},b={},p={},q={})",
        spec.variant,
        num(spec.s),
        num(spec.b),
        num(spec.p),
        num(spec.q)
    );
    let value = restricted_norm(&traj, window, spec, DEFAULT_PADDING)?;
    sink.row([name, num(value), win.clone(), grid])?;
    // spatial norm at every sample of the window
    let sname = format!("{}(s={},p={}) sup", spec.variant, num(spec.s), num(spec.p));
    let sup = traj.states()[first..first + len]
        .iter()
        .map(|s| crate::norms::spatial_norm(s, &NormSpec { b: 0.0, ..*spec }))
        .fold(0.0, f64::max);
    sink.row([sname, num(sup), win, format!("samples={len}")])?;
    Ok(RunOutput {
        reports: Vec::new(),
        files: vec![sink.finish(io::NORMS_SCHEMA)?],
    })
}

fn random_state(rng: &RngStream, i: u64, n_max: usize) -> SpectralState {
    let sub = rng.substream(i, Domain::Reference, 0);
    let decay = 2.0 * sub.uniform_at(0) - 0.5;
    let c = (1..=n_max)
        .map(|n| sub.complex_normal(n as u64) * (n as f64).powf(-decay))
        .collect();
    SpectralState::from_coeffs(c).expect("n_max >= 1")
}

fn random_trajectory(rng: &RngStream, i: u64, n_max: usize, len: usize, dt: f64) -> Trajectory {
    let states = (0..len).map(|k| random_state(rng, (i << 20) + k as u64 + 1, n_max)).collect();
    Trajectory::new(0.0, dt, states).expect("valid grid")
}

/// Constant-one inequalities on random states and space-time blocks, the Hölder embedding
/// with its computed constant and the `L_ω` suppression on stochastic-convolution paths.
pub fn norm_checks(ctx: &RunContext) -> Result<RunOutput> {
    let cfg = &ctx.config;
    let nc = &cfg.norm_checks;
    let rng = RngStream::new(cfg.seed);
    let mut sink = ctx.sink("norm_checks.csv", io::SAMPLES_SCHEMA)?;
    let ratio = |a: f64, b: f64| {
        if b > 0.0 {
            a / b
        } else if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };

    // besov ≤ fourier-lebesgue
    let mut worst = 0.0f64;
    for i in 0..nc.states {
        let s = random_state(&rng, i as u64, 1 + i % 64);
        for (sv, p) in [(-0.45, 2.3), (0.0, 2.0), (-1.0, 1.0), (0.3, 4.0), (-0.5 + nc.delta, nc.p)] {
            let r = ratio(besov_norm(&s, sv, p), fourier_lebesgue_norm(&s, sv, p));
            worst = worst.max(r);
            sink.row(["besov_over_lebesgue".to_string(), num(sv), i.to_string(), num(r)])?;
        }
    }
    let spatial = Check::at_most("max besov/lebesgue", worst, 1.0);

    // block norms: X ≤ Y and the p ≥ 2 embedding into the classical space
    let (mut xy, mut emb, mut hold) = (0.0f64, 0.0f64, 0.0f64);
    let blocks = nc.states.div_ceil(20);
    let k_holder = holder_embedding_constant(nc.delta, nc.p, 33)?;
    for i in 0..blocks {
        let traj = random_trajectory(&rng, i as u64, 1 + (i * 7) % 33, 24, 1e-3);
        let block = SpaceTimeBlock::from_trajectory(&traj, DEFAULT_PADDING)?;
        let band = 3000.0;
        for p in [2.0, 2.3, 3.0, 6.0] {
            for q in [2.0, 3.0] {
                let x = xsb_norm(
                    &block,
                    &NormSpec::space_time(-0.3, 0.4, p, q, NormVariant::BesovBlocks).with_tau_cutoff(band),
                )?;
                let y = xsb_norm(
                    &block,
                    &NormSpec::space_time(-0.3, 0.4, p, q, NormVariant::LebesgueModes).with_tau_cutoff(band),
                )?;
                xy = xy.max(ratio(x, y));
            }
            let x2 = xsb_norm(
                &block,
                &NormSpec::space_time(-0.3, 0.4, p, 2.0, NormVariant::BesovBlocks).with_tau_cutoff(band),
            )?;
            let classical = xsb_norm(
                &block,
                &NormSpec::space_time(-0.3, 0.4, 2.0, 2.0, NormVariant::LebesgueModes).with_tau_cutoff(band),
            )?;
            emb = emb.max(ratio(x2, classical));
        }
        let lhs = xsb_norm(
            &block,
            &NormSpec::space_time(-0.5 - nc.delta / 2.0, 0.3, 2.0, 2.0, NormVariant::LebesgueModes).with_tau_cutoff(band),
        )?;
        let rhs = xsb_norm(
            &block,
            &NormSpec::space_time(-0.5 + nc.delta, 0.3, nc.p, 2.0, NormVariant::BesovBlocks).with_tau_cutoff(band),
        )?;
        hold = hold.max(ratio(lhs, k_holder * rhs));
        sink.row(["x_over_y".to_string(), "0.0".to_string(), i.to_string(), num(xy)])?;
        sink.row([
            "holder_ratio".to_string(),
            "0.0".to_string(),
            i.to_string(),
            num(ratio(lhs, k_holder * rhs)),
        ])?;
    }
    let mut reports = vec![TestReport::from_checks(
        "norm inequalities",
        cfg.seed,
        vec![
            spatial,
            Check::at_most("max X/Y", xy, 1.0),
            Check::at_most("max X_p/X_2", emb, 1.0),
            Check::at_most(format!("max lhs/(K rhs), K = {k_holder:.6}"), hold, 1.0),
        ],
    )];

    // L_ω suppression
    let spec = LOmegaSpec::new(nc.delta);
    let steps = (nc.l_omega_t / nc.l_omega_dt).round() as usize;
    let per_path: Vec<Vec<(f64, f64)>> = (0..nc.l_omega_paths)
        .into_par_iter()
        .map(|r| {
            let path = generate_noise_path(&rng, r as u64, nc.l_omega_n_max, nc.l_omega_dt, steps)?;
            let psi = sample_stochastic_convolution(&path, nc.l_omega_n_max, 1)?;
            let full = l_omega(&psi, &spec)?;
            nc.l_omega_levels
                .iter()
                .map(|&n| {
                    Ok((
                        l_omega_perp(&psi, n, &spec)?,
                        L_OMEGA_SUPPRESSION_CONSTANT * (n as f64).powf(-nc.delta / 2.0) * full,
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut checks = Vec::new();
    for (j, &n) in nc.l_omega_levels.iter().enumerate() {
        let worst = per_path.iter().map(|p| ratio(p[j].0, p[j].1)).fold(0.0, f64::max);
        for (r, p) in per_path.iter().enumerate() {
            sink.row([
                format!("l_omega_ratio_N{n}"),
                num(nc.l_omega_t),
                r.to_string(),
                num(ratio(p[j].0, p[j].1)),
            ])?;
        }
        checks.push(Check::at_most(format!("max perp/(K N^-delta/2 full) at N={n}"), worst, 1.0));
    }
    reports.push(TestReport::from_checks("L_omega suppression", cfg.seed, checks));
    Ok(RunOutput {
        reports: hashed(reports, &ctx.hash),
        files: vec![sink.finish(io::SAMPLES_SCHEMA)?],
    })
}
