//! Counter-based Brownian increments: the same realization is reproduced on demand, and the
//! bridge refinement at `dt/2` sums back to the coarse increments, which is what couples runs
//! at different step sizes.
//!
//! `cargo run --release --example coupled_noise`

use skdv::noise::{generate_noise_path, refine_path};
use skdv::rng::RngStream;

fn main() -> skdv::Result<()> {
    let rng = RngStream::new(42);
    let coarse = generate_noise_path(&rng, 3, 4, 0.01, 8)?;
    let again = generate_noise_path(&rng, 3, 4, 0.01, 8)?;
    println!("reproducible: {}", coarse.step_increments(5) == again.step_increments(5));
    let fine = refine_path(&coarse)?;
    let mut worst = 0.0f64;
    for k in 0..coarse.steps() {
        for n in 0..4 {
            let sum = fine.increment(n + 1, 2 * k) + fine.increment(n + 1, 2 * k + 1);
            worst = worst.max((sum - coarse.increment(n + 1, k)).norm());
        }
    }
    println!("fine pairs vs coarse increments: max mismatch {worst:.1e}");
    let m = 20000;
    let var: f64 = (0..m)
        .map(|r| generate_noise_path(&rng, r, 1, 0.01, 1).map(|p| p.increment(1, 0).norm_sqr()))
        .sum::<skdv::Result<f64>>()?
        / m as f64;
    println!("E|dbeta|^2 = {var:.5} (dt = 0.01)");
    Ok(())
}
