//! Brownian increments for the forcing, refinable and coupled across truncations.
//!
//! Level 0 draws one complex increment per `(mode, step)` from the counter stream.
//! Level `L + 1` splits each level-`L` increment `Δ` over `[t, t + h]` into a
//! Brownian-bridge pair `(Δ/2 + Y, Δ - (Δ/2 + Y))` with `Var(Re Y) = Var(Im Y) = h/8`,
//! so refined paths sum back to their parent. Increments are keyed by the mode index
//! only, which makes paths for different truncation levels share every common mode.

use crate::error::{domain, Error, Result};
use crate::rng::{Domain, RngStream, MAX_DRAW_INDEX};
use num_complex::Complex64;

/// Lazily evaluated noise: any increment can be produced on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterNoise {
    rng: RngStream,
    realization: u64,
    base_dt: f64,
    level: u32,
}

impl CounterNoise {
    pub fn new(rng: RngStream, realization: u64, base_dt: f64, level: u32) -> Result<Self> {
        if !(base_dt > 0.0) || !base_dt.is_finite() {
            return domain(format!("time step must be positive, got {base_dt}"));
        }
        Ok(Self {
            rng,
            realization,
            base_dt,
            level,
        })
    }

    pub fn dt(&self) -> f64 {
        self.base_dt / f64::powi(2.0, self.level as i32)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn realization(&self) -> u64 {
        self.realization
    }

    pub fn rng(&self) -> RngStream {
        self.rng
    }

    /// Same stream, one level finer.
    pub fn refined(&self) -> Self {
        Self {
            level: self.level + 1,
            ..*self
        }
    }

    /// Increment of `β_n` over step `step` at this path's level.
    pub fn increment(&self, mode: usize, step: u64) -> Complex64 {
        self.increment_at(self.level, mode, step)
    }

    fn increment_at(&self, level: u32, mode: usize, step: u64) -> Complex64 {
        if level == 0 {
            let g = self
                .rng
                .substream(self.realization, Domain::Noise, mode as u64)
                .complex_normal(step);
            return g * self.base_dt.sqrt();
        }
        let parent = self.increment_at(level - 1, mode, step / 2);
        let parent_dt = self.base_dt / f64::powi(2.0, level as i32 - 1);
        split_increment(parent, parent_dt, self.bridge_draw(level, mode, step / 2), step % 2 == 1)
    }

    fn bridge_draw(&self, level: u32, mode: usize, parent_step: u64) -> Complex64 {
        self.rng
            .substream(self.realization, Domain::Bridge(level), mode as u64)
            .complex_normal(parent_step)
    }

    /// Increments of steps `2 * parent_step` and `2 * parent_step + 1` at this level,
    /// drawing the shared parent once. Same values as [`CounterNoise::fill`].
    pub fn fill_children(&self, parent_step: u64, first: &mut [Complex64], second: &mut [Complex64]) {
        if self.level == 0 {
            self.fill(2 * parent_step, first);
            self.fill(2 * parent_step + 1, second);
            return;
        }
        let parent_dt = self.dt() * 2.0;
        for (k, (a, b)) in first.iter_mut().zip(second.iter_mut()).enumerate() {
            let mode = k + 1;
            let parent = self.increment_at(self.level - 1, mode, parent_step);
            let g = self.bridge_draw(self.level, mode, parent_step);
            *a = split_increment(parent, parent_dt, g, false);
            *b = split_increment(parent, parent_dt, g, true);
        }
    }

    /// Writes the increments of modes `1..=out.len()` for `step`.
    pub fn fill(&self, step: u64, out: &mut [Complex64]) {
        for (k, z) in out.iter_mut().enumerate() {
            *z = self.increment(k + 1, step);
        }
    }
}

#[inline]
fn split_increment(parent: Complex64, parent_dt: f64, g: Complex64, second: bool) -> Complex64 {
    // conditional variance per component: (h/4)(h/4)/(h/2) = h/8, and Var(Re g) = 1/2
    let first = parent * 0.5 + g * (0.25 * parent_dt).sqrt();
    if second {
        parent - first
    } else {
        first
    }
}

/// A materialized path: increments for modes `1..=n_max` on `steps` steps of size `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    source: CounterNoise,
    n_max: usize,
    steps: usize,
    increments: Vec<Complex64>,
}

impl NoisePath {
    pub fn dt(&self) -> f64 {
        self.source.dt()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn source(&self) -> &CounterNoise {
        &self.source
    }

    /// `Δβ_n` on step `step`, `1 <= n <= n_max`.
    pub fn increment(&self, mode: usize, step: usize) -> Complex64 {
        self.increments[step * self.n_max + mode - 1]
    }

    /// All increments of one step, indexed by `mode - 1`.
    pub fn step_increments(&self, step: usize) -> &[Complex64] {
        &self.increments[step * self.n_max..(step + 1) * self.n_max]
    }

    /// Sums consecutive pairs of steps, undoing one refinement.
    pub fn coarsened(&self) -> Result<NoisePath> {
        if self.source.level == 0 || !self.steps.is_multiple_of(2) {
            return domain("only refined paths with an even step count can be coarsened");
        }
        let mut increments = Vec::with_capacity(self.increments.len() / 2);
        for k in 0..self.steps / 2 {
            for n in 1..=self.n_max {
                increments.push(self.increment(n, 2 * k) + self.increment(n, 2 * k + 1));
            }
        }
        Ok(NoisePath {
            source: CounterNoise {
                level: self.source.level - 1,
                ..self.source
            },
            n_max: self.n_max,
            steps: self.steps / 2,
            increments,
        })
    }
}

/// Generates a level-0 path for realization `realization`.
pub fn generate_noise_path(rng: &RngStream, realization: u64, n_max: usize, dt: f64, steps: usize) -> Result<NoisePath> {
    if n_max == 0 {
        return domain("n_max must be positive");
    }
    if steps as u64 > MAX_DRAW_INDEX {
        return Err(Error::Config(format!("step count {steps} overflows the draw counter")));
    }
    let source = CounterNoise::new(*rng, realization, dt, 0)?;
    let mut increments = vec![Complex64::new(0.0, 0.0); n_max * steps];
    for (k, chunk) in increments.chunks_mut(n_max).enumerate() {
        source.fill(k as u64, chunk);
    }
    Ok(NoisePath {
        source,
        n_max,
        steps,
        increments,
    })
}

/// Halves the step size; consecutive pairs of the result sum to the input increments.
pub fn refine_path(path: &NoisePath) -> Result<NoisePath> {
    let steps = path
        .steps
        .checked_mul(2)
        .filter(|s| (*s as u64) <= MAX_DRAW_INDEX)
        .ok_or_else(|| Error::Config("refined step count overflows the draw counter".into()))?;
    let source = path.source.refined();
    let parent_dt = path.dt();
    let mut increments = Vec::with_capacity(path.increments.len() * 2);
    let mut second = Vec::with_capacity(path.n_max);
    for k in 0..path.steps {
        second.clear();
        for n in 1..=path.n_max {
            let parent = path.increment(n, k);
            let g = source.bridge_draw(source.level, n, k as u64);
            increments.push(split_increment(parent, parent_dt, g, false));
            second.push(split_increment(parent, parent_dt, g, true));
        }
        increments.extend_from_slice(&second);
    }
    Ok(NoisePath {
        source,
        n_max: path.n_max,
        steps,
        increments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn children_match_single_draws() {
        for level in 0..3 {
            let src = CounterNoise::new(RngStream::new(8), 4, 0.01, level).unwrap();
            let (mut a, mut b) = (vec![Complex64::default(); 5], vec![Complex64::default(); 5]);
            src.fill_children(7, &mut a, &mut b);
            for n in 1..=5 {
                assert_eq!(a[n - 1], src.increment(n, 14));
                assert_eq!(b[n - 1], src.increment(n, 15));
            }
        }
    }

    #[test]
    fn refinement_sums_back_to_parent() {
        let rng = RngStream::new(3);
        let p = generate_noise_path(&rng, 1, 6, 0.01, 50).unwrap();
        let r = refine_path(&p).unwrap();
        let rr = refine_path(&r).unwrap();
        assert_eq!(r.steps(), 100);
        assert!((r.dt() - 0.005).abs() < 1e-18);
        for (fine, coarse) in [(&r, &p), (&rr, &r)] {
            let back = fine.coarsened().unwrap();
            for k in 0..coarse.steps() {
                for n in 1..=6 {
                    let (a, b) = (back.increment(n, k), coarse.increment(n, k));
                    // second = parent - first, then first + second: two roundings, each
                    // relative to the larger of the halves
                    let (x, y) = (fine.increment(n, 2 * k), fine.increment(n, 2 * k + 1));
                    let tol = 4.0 * f64::EPSILON * (x.norm() + y.norm() + b.norm());
                    assert!((a - b).norm() <= tol, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn refined_path_matches_lazy_source() {
        let rng = RngStream::new(3);
        let p = generate_noise_path(&rng, 1, 4, 0.01, 10).unwrap();
        let r = refine_path(&refine_path(&p).unwrap()).unwrap();
        let lazy = CounterNoise::new(rng, 1, 0.01, 2).unwrap();
        for k in 0..r.steps() {
            for n in 1..=4 {
                assert_eq!(r.increment(n, k), lazy.increment(n, k as u64));
            }
        }
    }

    #[test]
    fn increments_have_variance_dt_over_two() {
        let dt = 0.01;
        let p = generate_noise_path(&RngStream::new(8), 0, 4, dt, 100_000).unwrap();
        let m = p.steps() as f64;
        for n in 1..=4 {
            let v = (0..p.steps()).map(|k| p.increment(n, k).re.powi(2)).sum::<f64>() / m;
            let se = (dt / 2.0) * (2.0 / m).sqrt();
            assert!((v - dt / 2.0).abs() < 3.0 * se, "mode {n}: {v}");
        }
        let r = refine_path(&p).unwrap();
        let m2 = r.steps() as f64;
        let v = (0..r.steps()).map(|k| r.increment(2, k).im.powi(2)).sum::<f64>() / m2;
        let se = (dt / 4.0) * (2.0 / m2).sqrt();
        assert!((v - dt / 4.0).abs() < 3.0 * se, "refined: {v}");
    }

    #[test]
    fn truncation_levels_share_common_modes() {
        let rng = RngStream::new(21);
        let small = generate_noise_path(&rng, 4, 8, 0.001, 30).unwrap();
        let large = generate_noise_path(&rng, 4, 16, 0.001, 30).unwrap();
        for k in 0..30 {
            assert_eq!(small.step_increments(k), &large.step_increments(k)[..8]);
        }
    }

    #[test]
    fn invalid_inputs() {
        let rng = RngStream::new(0);
        assert!(generate_noise_path(&rng, 0, 4, 0.0, 10).is_err());
        assert!(generate_noise_path(&rng, 0, 0, 0.1, 10).is_err());
        assert!(matches!(generate_noise_path(&rng, 0, 1, 0.1, usize::MAX), Err(Error::Config(_))));
    }
}
