//! The truncated quadratic term `P_N(u_N ∂ₓ u_N)` and the drift of the `(p, q)` system.

use crate::error::{domain, Result};
use crate::spectrum::SpectralState;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Below this truncation the `O(N²)` sum beats the padded transform.
pub const DIRECT_SUM_MAX_N: usize = 24;

/// Drift components `(P_1..P_N, Q_1..Q_N)` of the low-frequency SDE, evaluated term by term
/// from the real coordinates:
///
/// ```text
/// P_n = -n³ q_n + Σ_{n1+n2=n, 1<=|nj|<=N} n2 (p_{n1} q_{n2} + q_{n1} p_{n2})
/// Q_n =  n³ p_n - Σ_{n1+n2=n, 1<=|nj|<=N} n2 (p_{n1} p_{n2} - q_{n1} q_{n2})
/// ```
///
/// with `p_{-n} = p_n` and `q_{-n} = -q_n`.
pub fn drift_pq(p: &[f64], q: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n_trunc = p.len();
    debug_assert_eq!(q.len(), n_trunc);
    let pn = |k: i64| p[k.unsigned_abs() as usize - 1];
    let qn = |k: i64| {
        let v = q[k.unsigned_abs() as usize - 1];
        if k > 0 {
            v
        } else {
            -v
        }
    };
    let big = n_trunc as i64;
    let mut dp = vec![0.0; n_trunc];
    let mut dq = vec![0.0; n_trunc];
    for n in 1..=big {
        let cube = (n * n * n) as f64;
        let mut sp = 0.0;
        let mut sq = 0.0;
        for n1 in (n - big).max(-big)..=big.min(n + big) {
            let n2 = n - n1;
            if n1 == 0 || n2 == 0 || n2.abs() > big {
                continue;
            }
            let w = n2 as f64;
            sp += w * (pn(n1) * qn(n2) + qn(n1) * pn(n2));
            sq += w * (pn(n1) * pn(n2) - qn(n1) * qn(n2));
        }
        let k = (n - 1) as usize;
        dp[k] = -cube * q[k] + sp;
        dq[k] = cube * p[k] - sq;
    }
    (dp, dq)
}

/// [`drift_pq`] applied to a low-frequency state.
pub fn drift_low(state: &SpectralState, n_trunc: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_low(state, n_trunc)?;
    let c = &state.coeffs()[..n_trunc];
    let p: Vec<f64> = c.iter().map(|z| z.re).collect();
    let q: Vec<f64> = c.iter().map(|z| z.im).collect();
    Ok(drift_pq(&p, &q))
}

pub(crate) fn check_low(state: &SpectralState, n_trunc: usize) -> Result<()> {
    if n_trunc == 0 || n_trunc > state.n_max() {
        return domain(format!("truncation {n_trunc} must lie in 1..={}", state.n_max()));
    }
    if state.coeffs()[n_trunc..].iter().any(|z| z.re != 0.0 || z.im != 0.0) {
        return domain(format!("state has modes above the truncation {n_trunc}"));
    }
    Ok(())
}

/// Fourier coefficients `(u ∂ₓ u)^(n)`, `1 <= n <= N`, by the symmetric direct sum
/// `i (n/2) [Σ_{m<n} û(m)û(n-m) + 2 Σ_{m>n} û(m) conj(û(m-n))]`.
pub fn quadratic_direct(u: &[Complex64], out: &mut [Complex64]) {
    let big = u.len();
    debug_assert_eq!(out.len(), big);
    for n in 1..=big {
        let mut s = ZERO;
        for m in 1..n {
            s += u[m - 1] * u[n - m - 1];
        }
        let mut t = ZERO;
        for m in n + 1..=big {
            t += u[m - 1] * u[m - n - 1].conj();
        }
        s += t * 2.0;
        // i (n/2) s
        let h = 0.5 * n as f64;
        out[n - 1] = Complex64::new(-h * s.im, h * s.re);
    }
}

/// `S(n) = Σ_{n1+n2=n, 1<=|nj|<=N} z(n1) z(n2)`, `1 <= n <= N`, for a real field `z`
/// (`z(-k) = conj z(k)`).
pub fn square_direct(z: &[Complex64], out: &mut [Complex64]) {
    let big = z.len();
    for n in 1..=big {
        let mut s = ZERO;
        for m in 1..n {
            s += z[m - 1] * z[n - m - 1];
        }
        let mut t = ZERO;
        for m in n + 1..=big {
            t += z[m - 1] * z[m - n - 1].conj();
        }
        out[n - 1] = s + t * 2.0;
    }
}

/// Reusable evaluator for the truncated quadratic term.
#[derive(Clone)]
pub struct Convolver {
    n_trunc: usize,
    fft: Option<PaddedFft>,
}

#[derive(Clone)]
struct PaddedFft {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    u: Vec<Complex64>,
    ux: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("n_trunc", &self.n_trunc)
            .field("padded_size", &self.fft.as_ref().map(|p| p.size))
            .finish()
    }
}

impl Convolver {
    /// Chooses the direct sum for small `N`, the padded transform otherwise.
    pub fn new(n_trunc: usize) -> Self {
        if n_trunc <= DIRECT_SUM_MAX_N {
            Self::direct(n_trunc)
        } else {
            Self::padded(n_trunc)
        }
    }

    pub fn direct(n_trunc: usize) -> Self {
        Self { n_trunc, fft: None }
    }

    /// Zero-padded transform of size `>= 2(2N + 1)` (next power of two).
    pub fn padded(n_trunc: usize) -> Self {
        let size = padded_size(n_trunc);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            n_trunc,
            fft: Some(PaddedFft {
                size,
                forward,
                inverse,
                u: vec![ZERO; size],
                ux: vec![ZERO; size],
                scratch: vec![ZERO; scratch_len],
            }),
        }
    }

    pub fn n_trunc(&self) -> usize {
        self.n_trunc
    }

    /// `out[n-1] = (u ∂ₓ u)^(n)` for the low modes `u[..N]`.
    pub fn apply(&mut self, u: &[Complex64], out: &mut [Complex64]) {
        let big = self.n_trunc;
        match &mut self.fft {
            None => quadratic_direct(&u[..big], &mut out[..big]),
            Some(f) => {
                let g = f.size;
                f.u.fill(ZERO);
                f.ux.fill(ZERO);
                for n in 1..=big {
                    let c = u[n - 1];
                    let cx = Complex64::new(-(n as f64) * c.im, n as f64 * c.re);
                    f.u[n] = c;
                    f.u[g - n] = c.conj();
                    f.ux[n] = cx;
                    f.ux[g - n] = cx.conj();
                }
                f.inverse.process_with_scratch(&mut f.u, &mut f.scratch);
                f.inverse.process_with_scratch(&mut f.ux, &mut f.scratch);
                for (a, b) in f.u.iter_mut().zip(&f.ux) {
                    *a = Complex64::new(a.re * b.re, 0.0);
                }
                f.forward.process_with_scratch(&mut f.u, &mut f.scratch);
                let scale = 1.0 / g as f64;
                for n in 1..=big {
                    out[n - 1] = f.u[n] * scale;
                }
            }
        }
    }
}

impl Convolver {
    /// [`square_direct`] with the same direct/padded choice as [`Convolver::apply`].
    pub fn square(&mut self, z: &[Complex64], out: &mut [Complex64]) {
        let big = self.n_trunc;
        match &mut self.fft {
            None => square_direct(&z[..big], &mut out[..big]),
            Some(f) => {
                let g = f.size;
                f.u.fill(ZERO);
                for n in 1..=big {
                    f.u[n] = z[n - 1];
                    f.u[g - n] = z[n - 1].conj();
                }
                f.inverse.process_with_scratch(&mut f.u, &mut f.scratch);
                for a in f.u.iter_mut() {
                    *a = Complex64::new(a.re * a.re, 0.0);
                }
                f.forward.process_with_scratch(&mut f.u, &mut f.scratch);
                let scale = 1.0 / g as f64;
                for n in 1..=big {
                    out[n - 1] = f.u[n] * scale;
                }
            }
        }
    }
}

pub fn padded_size(n_trunc: usize) -> usize {
    (2 * (2 * n_trunc + 1)).next_power_of_two()
}

/// `P_N(u_N ∂ₓ u_N)` as a state with the same `n_max` as the input (modes above `N` zero).
pub fn nonlinearity(state: &SpectralState, n_trunc: usize) -> Result<SpectralState> {
    check_low(state, n_trunc)?;
    let mut out = SpectralState::zeros(state.n_max());
    Convolver::padded(n_trunc).apply(state.coeffs(), &mut out.coeffs_mut()[..n_trunc]);
    Ok(out)
}

/// Brute-force `O(N²)` reference for [`nonlinearity`]: the literal sum
/// `Σ_{n=n1+n2} i n2 û(n1) û(n2)` over `1 <= |n1|, |n2| <= N`.
pub fn nonlinearity_direct(state: &SpectralState, n_trunc: usize) -> Result<SpectralState> {
    check_low(state, n_trunc)?;
    let big = n_trunc as i64;
    let mut out = SpectralState::zeros(state.n_max());
    for n in 1..=big {
        let mut s = ZERO;
        for n1 in -big..=big {
            let n2 = n - n1;
            if n1 == 0 || n2 == 0 || n2.abs() > big {
                continue;
            }
            s += Complex64::new(0.0, n2 as f64) * state.coeff(n1) * state.coeff(n2);
        }
        out.set(n as usize, s);
    }
    Ok(out)
}
