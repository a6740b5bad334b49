//! Spatial white noise on the torus: sampling, the per-mode variance, physical samples and
//! the Fourier–Besov norm that keeps it finite.
//!
//! `cargo run --release --example white_noise`

use skdv::norms::{besov_norm, fourier_lebesgue_norm};
use skdv::rng::RngStream;
use skdv::spectrum::{from_physical, min_grid_size, sample_white_noise, to_physical, WhiteNoiseSpec};

fn main() -> skdv::Result<()> {
    let spec = WhiteNoiseSpec { alpha: 2.0, n_max: 64 };
    let rng = RngStream::new(7);
    let m = 4000;
    let mut second = vec![0.0; spec.n_max];
    for r in 0..m {
        let u = sample_white_noise(&spec, &rng, r)?;
        for (acc, c) in second.iter_mut().zip(u.coeffs()) {
            *acc += c.norm_sqr() / m as f64;
        }
    }
    println!("E|u(n)|^2 should be alpha = {}", spec.alpha);
    for n in [1, 2, 8, 32, 64] {
        println!("  n = {n:>2}: {:.4}", second[n - 1]);
    }

    let u = sample_white_noise(&spec, &rng, 0)?;
    let grid = min_grid_size(spec.n_max);
    let x = to_physical(&u, grid)?;
    let back = from_physical(&x, spec.n_max)?;
    let err = (&back - &u).coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    println!("physical round trip on {grid} points: max error {err:.2e}");

    // s p < -1 keeps the norm bounded as n_max grows
    for n_max in [16, 256, 4096] {
        let u = sample_white_noise(&WhiteNoiseSpec { alpha: 1.0, n_max }, &rng, 1)?;
        println!(
            "n_max = {n_max:>4}: besov(-0.45, 2.3) = {:.3}, fourier-lebesgue = {:.3}, besov(0, 2) = {:.3}",
            besov_norm(&u, -0.45, 2.3),
            fourier_lebesgue_norm(&u, -0.45, 2.3),
            besov_norm(&u, 0.0, 2.0)
        );
    }
    Ok(())
}
