//! The drift of the truncated system is orthogonal to the state and divergence free, and the
//! Gaussian densities of variance `α + t` solve the forward equation exactly.
//!
//! `cargo run --release --example generator_identities`

use skdv::generator::{fokker_planck_residual, gaussian_point, verify_identities, GaussianDensityParams, IdentityThresholds};
use skdv::rng::RngStream;

fn main() -> skdv::Result<()> {
    let reports = verify_identities(
        &[2, 4, 8, 16],
        2000,
        &[0.5, 1.0, 4.0],
        &[0.0, 0.5, 2.0],
        0,
        &IdentityThresholds::default(),
    )?;
    for r in &reports {
        println!(
            "{:<26} N = {:>2}: max residual {:.2e} (threshold {:.0e}) {}",
            r.identity,
            r.n_trunc,
            r.max_residual,
            r.threshold,
            if r.pass { "ok" } else { "FAIL" }
        );
    }
    let params = GaussianDensityParams::new(1.0, 3.0, 4)?;
    let x = gaussian_point(&RngStream::new(9), 4, 0, params.spread());
    println!(
        "forward residual at one point, N = 4, t = 3: {:.2e}",
        fokker_planck_residual(&params, &x)?
    );
    Ok(())
}
