//! Run configuration: TOML with sections (JSON accepted too), environment overrides,
//! validation and a content hash for provenance.

use crate::dynamics::{KdvIntegrator, SchemeKind};
use crate::error::{Error, Result};
use crate::norms::{DeltaWindow, NormSpec, NormVariant};
use crate::statistics::{Forcing, HighModeUpdate, MeasureTolerances};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::Path;

/// Environment variables `SKDV_<SECTION>__<KEY>` override config keys.
pub const ENV_PREFIX: &str = "SKDV_";

/// Variables with the prefix that belong to the command line, not to the config.
pub const RESERVED_ENV: [&str; 4] = ["SKDV_CONFIG", "SKDV_SEED", "SKDV_THREADS", "SKDV_OUT"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default = "default_norms")]
    pub norms: Vec<NormSpec>,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub tails: TailsSection,
    #[serde(default)]
    pub growth: GrowthSection,
    #[serde(default)]
    pub converge: ConvergeSection,
    #[serde(default)]
    pub generator: GeneratorSection,
    #[serde(default)]
    pub trotter: TrotterSection,
    #[serde(default)]
    pub norm_checks: NormChecksSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// Galerkin truncation `N`.
    pub n_trunc: usize,
    pub n_max: usize,
    pub alpha: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            n_trunc: 8,
            n_max: 32,
            alpha: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    /// Defaults to the last checkpoint.
    pub t_end: Option<f64>,
    pub checkpoints: Vec<f64>,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: None,
            checkpoints: vec![0.5, 1.0, 2.0],
        }
    }
}

impl TimeSection {
    pub fn end(&self) -> f64 {
        self.t_end.unwrap_or_else(|| self.checkpoints.iter().copied().fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    /// Number of realizations `M`.
    pub realizations: usize,
    pub scheme: SchemeKind,
    pub integrator: KdvIntegrator,
    pub high_modes: HighModeUpdate,
    /// `none` runs the deterministic truncated KdV from white-noise data.
    pub forcing: Forcing,
    /// Run the dt/2 companion for the weak-bias allowance.
    pub companion: bool,
    pub max_wall_seconds: Option<f64>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            realizations: 50_000,
            scheme: SchemeKind::StrangSplit,
            integrator: KdvIntegrator::Midpoint,
            high_modes: HighModeUpdate::PerCheckpoint,
            forcing: Forcing::Stochastic,
            companion: true,
            max_wall_seconds: None,
        }
    }
}

fn default_norms() -> Vec<NormSpec> {
    vec![NormSpec::spatial(-0.45, 2.3, NormVariant::BesovBlocks)]
}

/// Pass/fail thresholds, fixed before any run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    pub se_multiplier: f64,
    pub kurtosis_abs: f64,
    pub correlation_multiplier: f64,
    pub ks_p_threshold: f64,
    /// Largest per-path change of the low-mode `L²` norm without forcing.
    pub energy_drift: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        Self {
            se_multiplier: 3.0,
            kurtosis_abs: 0.07,
            correlation_multiplier: 3.0,
            ks_p_threshold: 0.01,
            energy_drift: 1e-8,
        }
    }
}

impl ToleranceSection {
    pub fn measure(&self) -> MeasureTolerances {
        MeasureTolerances {
            se_multiplier: self.se_multiplier,
            kurtosis_abs: Some(self.kurtosis_abs),
            correlation_multiplier: self.correlation_multiplier,
            pairs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    /// Paths whose full trajectories `simulate` writes.
    pub trajectories: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "skdv-out".into(),
            trajectories: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailsSection {
    pub times: Vec<f64>,
    /// Independent seeds `seed, seed + 1, …`; the median KS p-value is tested.
    pub replicates: usize,
    /// Step for the tail ensembles; the model section's `dt` if absent.
    pub dt: Option<f64>,
}

impl Default for TailsSection {
    fn default() -> Self {
        Self {
            times: vec![1.0, 3.0],
            replicates: 20,
            dt: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthProcess {
    StochasticConvolution,
    TruncatedSkdv,
    DeterministicKdv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthSection {
    pub process: GrowthProcess,
    pub horizons: Vec<f64>,
    pub paths: usize,
    pub n_max: usize,
    pub dt: f64,
    pub record_every: usize,
    /// Accepted range of the fitted exponent.
    pub exponent_range: [f64; 2],
    /// Space-time norm of the stochastic convolution on the whole interval `[0, T]`.
    pub y_norm: NormSpec,
    pub y_paths: usize,
    pub y_n_max: usize,
    pub y_dt: f64,
    pub y_exponent_range: [f64; 2],
}

impl Default for GrowthSection {
    fn default() -> Self {
        Self {
            process: GrowthProcess::StochasticConvolution,
            horizons: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            paths: 200,
            n_max: 32,
            dt: 1e-3,
            record_every: 10,
            exponent_range: [0.45, 0.65],
            y_norm: NormSpec::space_time(-0.45, 0.0, 2.3, 16.0, NormVariant::LebesgueModes).with_tau_cutoff(100.0),
            y_paths: 200,
            y_n_max: 8,
            y_dt: 0.01,
            y_exponent_range: [1.3, 1.7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergeSection {
    pub levels: Vec<usize>,
    pub n_max: usize,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub paths: usize,
    /// The norm is `b̂^{-(1/2 - delta)}_{p,∞}`.
    pub delta: f64,
    pub p: f64,
    pub bootstrap_replicates: usize,
    pub confidence: f64,
}

impl Default for ConvergeSection {
    fn default() -> Self {
        Self {
            levels: vec![4, 8, 16, 32],
            n_max: 64,
            dt: 1.0 / 65536.0,
            t_end: 1.0,
            record_every: 1024,
            paths: 100,
            delta: 0.05,
            p: 2.3,
            bootstrap_replicates: 2000,
            confidence: 0.95,
        }
    }
}

impl ConvergeSection {
    pub fn norm(&self) -> NormSpec {
        NormSpec::spatial(-(0.5 - self.delta), self.p, NormVariant::BesovBlocks)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSection {
    pub truncations: Vec<usize>,
    pub samples: usize,
    pub alphas: Vec<f64>,
    pub times: Vec<f64>,
    pub orthogonality_rel: f64,
    pub divergence_abs: f64,
    pub fokker_planck_rel: f64,
    pub difference_step: f64,
}

impl Default for GeneratorSection {
    fn default() -> Self {
        let t = crate::generator::IdentityThresholds::default();
        Self {
            truncations: vec![2, 4, 8, 16],
            samples: 10_000,
            alphas: vec![0.5, 1.0, 4.0],
            times: vec![0.0, 0.5, 2.0],
            orthogonality_rel: t.orthogonality_rel,
            divergence_abs: t.divergence_abs,
            fokker_planck_rel: t.fokker_planck_rel,
            difference_step: t.difference_step,
        }
    }
}

impl GeneratorSection {
    pub fn thresholds(&self) -> crate::generator::IdentityThresholds {
        crate::generator::IdentityThresholds {
            orthogonality_rel: self.orthogonality_rel,
            divergence_abs: self.divergence_abs,
            fokker_planck_rel: self.fokker_planck_rel,
            difference_step: self.difference_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrotterSection {
    /// Row-major square matrices.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub t: f64,
    pub steps: Vec<usize>,
    pub rate_range: [f64; 2],
    /// Also compare strang splitting with exponential Euler on the SDE.
    pub sde: bool,
    pub sde_n_trunc: usize,
    pub sde_realizations: usize,
    pub sde_dt: f64,
    pub sde_t: f64,
    /// Mode variances are compared at `sde_t·k/sde_intervals`, `k = 1..`.
    pub sde_intervals: usize,
}

impl Default for TrotterSection {
    fn default() -> Self {
        Self {
            a: vec![vec![0.0, 1.0], vec![0.0, 0.0]],
            b: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            t: 1.0,
            steps: vec![16, 32, 64, 128, 256, 512],
            rate_range: [0.9, 1.1],
            sde: true,
            sde_n_trunc: 8,
            sde_realizations: 20_000,
            sde_dt: 1.0 / 8192.0,
            sde_t: 0.25,
            sde_intervals: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormChecksSection {
    pub states: usize,
    pub delta: f64,
    pub p: f64,
    /// Stochastic-convolution paths for the `L_ω` suppression check.
    pub l_omega_paths: usize,
    pub l_omega_n_max: usize,
    pub l_omega_dt: f64,
    pub l_omega_t: f64,
    pub l_omega_levels: Vec<usize>,
}

impl Default for NormChecksSection {
    fn default() -> Self {
        Self {
            states: 1000,
            delta: 0.05,
            p: 2.3,
            l_omega_paths: 20,
            l_omega_n_max: 64,
            l_omega_dt: 0.01,
            l_omega_t: 1.0,
            l_omega_levels: vec![8, 16, 32],
        }
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            model: ModelSection::default(),
            time: TimeSection::default(),
            ensemble: EnsembleSection::default(),
            norms: default_norms(),
            tolerances: ToleranceSection::default(),
            output: OutputSection::default(),
            tails: TailsSection::default(),
            growth: GrowthSection::default(),
            converge: ConvergeSection::default(),
            generator: GeneratorSection::default(),
            trotter: TrotterSection::default(),
            norm_checks: NormChecksSection::default(),
        }
    }
}

/// Input syntax of a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Toml,
    Json,
}

impl Format {
    /// `.json` files and text starting with `{` are JSON, everything else TOML.
    pub fn detect(path: Option<&Path>, text: &str) -> Self {
        let by_ext = path.and_then(|p| p.extension()).is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if by_ext || text.trim_start().starts_with('{') {
            Format::Json
        } else {
            Format::Toml
        }
    }
}

/// Parses text into a generic tree (before overrides and validation).
pub fn parse_tree(text: &str, format: Format) -> Result<Value> {
    match format {
        Format::Json => serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}"))),
        Format::Toml => {
            let v: toml::Value = toml::from_str(text).map_err(|e| Error::Config(format!("invalid TOML: {e}")))?;
            serde_json::to_value(v).map_err(|e| Error::Config(e.to_string()))
        }
    }
}

/// Applies `SKDV_SECTION__KEY=value` overrides. The value is read as JSON when it parses
/// (numbers, booleans, arrays), as a string otherwise.
pub fn apply_env_overrides<I>(tree: &mut Value, vars: I) -> Result<Vec<String>>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut applied = Vec::new();
    let mut vars: Vec<_> = vars
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX) && !RESERVED_ENV.contains(&k.as_str()))
        .collect();
    vars.sort();
    for (key, raw) in vars {
        let path: Vec<String> = key[ENV_PREFIX.len()..].split("__").map(str::to_ascii_lowercase).collect();
        if path.iter().any(String::is_empty) {
            return Err(Error::Config(format!("malformed override variable {key}")));
        }
        let value = serde_json::from_str(&raw).unwrap_or(Value::String(raw.clone()));
        let mut node = &mut *tree;
        for part in &path[..path.len() - 1] {
            if !node.is_object() {
                return Err(Error::Config(format!("{key}: `{part}` is not a section")));
            }
            node = node
                .as_object_mut()
                .expect("checked")
                .entry(part.clone())
                .or_insert_with(|| Value::Object(Default::default()));
        }
        match node.as_object_mut() {
            Some(map) => {
                map.insert(path[path.len() - 1].clone(), value);
            }
            None => return Err(Error::Config(format!("{key}: parent is not a section"))),
        }
        applied.push(key);
    }
    Ok(applied)
}

impl SimConfig {
    pub fn from_tree(tree: Value) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_value(tree).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_tree(parse_tree(text, Format::Toml)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_tree(parse_tree(text, Format::Json)?)
    }

    /// Reads a file (or the defaults when `path` is `None`), applies the environment
    /// overrides from `env` and validates.
    pub fn load<I>(path: Option<&Path>, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut tree = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                parse_tree(&text, Format::detect(Some(p), &text))?
            }
            None => Value::Object(Default::default()),
        };
        apply_env_overrides(&mut tree, env)?;
        Self::from_tree(tree)
    }

    /// All violated constraints, or `Ok`.
    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let m = &self.model;
        if m.n_trunc == 0 || m.n_trunc > m.n_max {
            bad.push(format!("model: need 1 <= n_trunc <= n_max (got {} and {})", m.n_trunc, m.n_max));
        }
        if !(m.alpha > 0.0) || !m.alpha.is_finite() {
            bad.push(format!("model: alpha must be positive, got {}", m.alpha));
        }
        let t = &self.time;
        if !(t.dt > 0.0) || !t.dt.is_finite() {
            bad.push(format!("time: dt must be positive, got {}", t.dt));
        }
        if !(t.end() > 0.0) {
            bad.push(format!("time: t_end must be positive, got {}", t.end()));
        }
        if t.checkpoints.iter().any(|c| !(*c >= 0.0) || *c > t.end() + 1e-12) {
            bad.push("time: checkpoints must lie in [0, t_end]".into());
        }
        if self.ensemble.realizations == 0 {
            bad.push("ensemble: realizations must be >= 1".into());
        }
        for (i, n) in self.norms.iter().enumerate() {
            bad.extend(norm_violations(&format!("norms[{i}]"), n));
        }
        let tol = &self.tolerances;
        if !(tol.se_multiplier > 0.0) || !(tol.kurtosis_abs > 0.0) || !(tol.correlation_multiplier > 0.0) {
            bad.push("tolerances: multipliers and bounds must be positive".into());
        }
        if !(tol.energy_drift > 0.0) {
            bad.push("tolerances: energy_drift must be positive".into());
        }
        if !(tol.ks_p_threshold > 0.0 && tol.ks_p_threshold < 1.0) {
            bad.push("tolerances: ks_p_threshold must lie in (0, 1)".into());
        }
        if self.tails.times.iter().any(|x| !(*x > 0.0)) || self.tails.replicates == 0 {
            bad.push("tails: times must be positive and replicates >= 1".into());
        }
        if self.tails.dt.is_some_and(|d| !(d > 0.0)) {
            bad.push("tails: dt must be positive".into());
        }
        let g = &self.growth;
        if g.horizons.len() < 3 {
            bad.push("growth: at least 3 horizons are needed".into());
        } else {
            let lo = g.horizons.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = g.horizons.iter().copied().fold(0.0, f64::max);
            if !(lo > 0.0) || (hi / lo).log2() < 4.0 - 1e-9 {
                bad.push("growth: horizons must be positive and span at least 4 octaves".into());
            }
        }
        if g.paths == 0 || g.n_max == 0 || !(g.dt > 0.0) || g.record_every == 0 {
            bad.push("growth: paths, n_max, record_every must be >= 1 and dt > 0".into());
        }
        bad.extend(norm_violations("growth y_norm", &g.y_norm));
        if g.y_paths == 0 || g.y_n_max == 0 || !(g.y_dt > 0.0) {
            bad.push("growth: y_paths, y_n_max >= 1 and y_dt > 0 required".into());
        }
        if g.process != GrowthProcess::StochasticConvolution && m.n_trunc > g.n_max {
            bad.push("growth: model n_trunc exceeds growth n_max".into());
        }
        let c = &self.converge;
        if c.levels.len() < 2 || c.levels.iter().any(|n| *n == 0 || 2 * n > c.n_max) {
            bad.push(format!("converge: need >= 2 levels, each with 2N <= n_max = {}", c.n_max));
        }
        if c.paths == 0 || !(c.dt > 0.0) || !(c.t_end > 0.0) || c.record_every == 0 {
            bad.push("converge: paths, record_every >= 1 and dt, t_end > 0 required".into());
        }
        if !(c.confidence > 0.0 && c.confidence < 1.0) || c.bootstrap_replicates == 0 {
            bad.push("converge: confidence in (0, 1) and bootstrap_replicates >= 1 required".into());
        }
        bad.extend(delta_violations("converge", c.delta, c.p));
        bad.extend(norm_violations("converge norm", &c.norm()));
        let gen = &self.generator;
        if gen.truncations.is_empty() || gen.truncations.contains(&0) || gen.samples == 0 {
            bad.push("generator: truncations must be >= 1 and samples >= 1".into());
        }
        if gen.alphas.iter().any(|a| !(*a > 0.0)) || gen.times.iter().any(|t| !(*t >= 0.0)) {
            bad.push("generator: alphas must be positive and times >= 0".into());
        }
        let tr = &self.trotter;
        let dim = tr.a.len();
        let square = |mat: &Vec<Vec<f64>>| mat.len() == dim && mat.iter().all(|r| r.len() == dim);
        if dim == 0 || !square(&tr.a) || !square(&tr.b) {
            bad.push("trotter: a and b must be square matrices of the same size".into());
        }
        if tr.steps.is_empty() || tr.steps.contains(&0) || !(tr.t.is_finite()) {
            bad.push("trotter: steps must be >= 1 and t finite".into());
        }
        if tr.sde && (tr.sde_n_trunc == 0 || tr.sde_realizations == 0 || !(tr.sde_dt > 0.0) || !(tr.sde_t > 0.0) || tr.sde_intervals == 0) {
            bad.push("trotter: sde_n_trunc, sde_realizations, sde_intervals >= 1 and sde_dt, sde_t > 0 required".into());
        }
        let nc = &self.norm_checks;
        if nc.states == 0 {
            bad.push("norm_checks: states must be >= 1".into());
        }
        if nc.l_omega_paths == 0 || nc.l_omega_n_max == 0 || !(nc.l_omega_dt > 0.0) || !(nc.l_omega_t > 0.0) {
            bad.push("norm_checks: l_omega_paths, l_omega_n_max >= 1 and l_omega_dt, l_omega_t > 0 required".into());
        }
        if nc.l_omega_levels.iter().any(|n| *n == 0 || *n >= nc.l_omega_n_max) {
            bad.push("norm_checks: l_omega_levels must lie in 1..l_omega_n_max".into());
        }
        bad.extend(delta_violations("norm_checks", nc.delta, nc.p));
        bad
    }

    /// Hex SHA-256 of the canonical JSON form of the resolved config.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn norm_violations(label: &str, n: &NormSpec) -> Vec<String> {
    let mut bad = Vec::new();
    if let Err(e) = n.validate() {
        bad.push(format!("{label}: {e}"));
    }
    if !n.hosts_white_noise() {
        bad.push(format!(
            "{label}: s·p = {:.4} must be < -1 (white-noise regularity condition: white noise \
             has finite b̂^s_p norm only when s·p < -1)",
            n.s * n.p
        ));
    }
    bad
}

fn delta_violations(label: &str, delta: f64, p: f64) -> Vec<String> {
    match DeltaWindow::for_p(p) {
        Err(e) => vec![format!("{label}: {e}")],
        Ok(w) if !w.contains_wide(delta) => vec![format!(
            "{label}: delta = {delta} outside the window (p-2)/(4p) < delta < (p-2)/(2p) = ({:.4}, {:.4}) for p = {p}",
            w.wide_lower, w.upper
        )],
        Ok(_) => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_seed_defaults_to_zero() {
        let c = SimConfig::from_toml_str("").unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c, SimConfig::default());
        assert!((c.norms[0].s * c.norms[0].p + 1.035).abs() < 1e-12);
    }

    #[test]
    fn rejects_norm_outside_white_noise_range() {
        let err = SimConfig::from_toml_str("[[norms]]\ns = -0.4\np = 2.2\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config(_)));
        assert!(msg.contains("white-noise regularity"), "{msg}");
        assert!(msg.contains("-0.88"), "{msg}");
        assert!(SimConfig::from_toml_str("[[norms]]\ns = -0.45\np = 2.3\n").is_ok());
    }

    #[test]
    fn lists_every_violation() {
        let text = "[model]\nn_trunc = 40\nn_max = 32\nalpha = -1\n[time]\ndt = 0\n";
        let c: SimConfig = serde_json::from_value(parse_tree(text, Format::Toml).unwrap()).unwrap();
        let v = c.violations();
        assert!(v.iter().any(|m| m.contains("n_trunc")));
        assert!(v.iter().any(|m| m.contains("alpha")));
        assert!(v.iter().any(|m| m.contains("dt")));
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(matches!(SimConfig::from_toml_str("[model]\nnn = 3\n"), Err(Error::Config(_))));
        assert!(matches!(SimConfig::from_toml_str("model = ["), Err(Error::Config(_))));
    }

    #[test]
    fn json_and_toml_agree() {
        let t = SimConfig::from_toml_str("seed = 7\n[model]\nn_trunc = 4\nn_max = 16\nalpha = 2.0\n").unwrap();
        let j = SimConfig::from_json_str(r#"{"seed": 7, "model": {"n_trunc": 4, "n_max": 16, "alpha": 2.0}}"#).unwrap();
        assert_eq!(t, j);
        assert_eq!(t.hash(), j.hash());
        assert_eq!(Format::detect(None, " {\"a\": 1}"), Format::Json);
        assert_eq!(Format::detect(Some(Path::new("x.JSON")), "a = 1"), Format::Json);
    }

    #[test]
    fn env_overrides() {
        let mut tree = parse_tree("[model]\nalpha = 1.0\n", Format::Toml).unwrap();
        let vars = vec![
            ("SKDV_MODEL__ALPHA".to_string(), "4".to_string()),
            ("SKDV_ENSEMBLE__SCHEME".to_string(), "lie_split".to_string()),
            ("SKDV_SEED".to_string(), "9".to_string()),
            ("OTHER".to_string(), "1".to_string()),
        ];
        let applied = apply_env_overrides(&mut tree, vars).unwrap();
        assert_eq!(applied.len(), 2);
        let c = SimConfig::from_tree(tree).unwrap();
        assert_eq!(c.model.alpha, 4.0);
        assert_eq!(c.ensemble.scheme, SchemeKind::LieSplit);
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn hash_tracks_content() {
        let a = SimConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn delta_window_is_enforced() {
        let err = SimConfig::from_toml_str("[converge]\ndelta = 0.2\n").unwrap_err();
        assert!(err.to_string().contains("window"), "{err}");
    }
}
