//! Fourier–Besov, Fourier–Lebesgue and space-time norms of a short trajectory, the admissible
//! `δ` window and the Hölder constant of the embedding.
//!
//! `cargo run --release --example norms`

use skdv::dynamics::{flow_truncated_skdv, SchemeKind, SchemeSpec};
use skdv::noise::generate_noise_path;
use skdv::norms::{
    holder_embedding_constant, l_omega, l_omega_perp, restricted_norm, xsb_norm, DeltaWindow, LOmegaSpec, NormSpec, NormVariant,
    SpaceTimeBlock,
};
use skdv::rng::RngStream;
use skdv::spectrum::{sample_white_noise, WhiteNoiseSpec};

fn main() -> skdv::Result<()> {
    let rng = RngStream::new(2);
    let (n_trunc, n_max, dt) = (4, 16, 1e-3);
    let u0 = sample_white_noise(&WhiteNoiseSpec { alpha: 1.0, n_max }, &rng, 0)?;
    let path = generate_noise_path(&rng, 0, n_max, dt, 1000)?;
    let traj = flow_truncated_skdv(&u0, 0.0, 1.0, n_trunc, &path, SchemeSpec::new(SchemeKind::StrangSplit, 4)?)?;

    let block = SpaceTimeBlock::from_trajectory(&traj, 2)?;
    // n_max^3 is far above what the grid resolves, so cap |tau|
    println!("time grid resolves |tau| <= {:.0}", block.nyquist());
    for (label, spec) in [
        (
            "X^{-0.45,0.3}_{2.3,2}",
            NormSpec::space_time(-0.45, 0.3, 2.3, 2.0, NormVariant::BesovBlocks).with_tau_cutoff(700.0),
        ),
        (
            "Y^{-0.45,0.3}_{2.3,2}",
            NormSpec::space_time(-0.45, 0.3, 2.3, 2.0, NormVariant::LebesgueModes).with_tau_cutoff(700.0),
        ),
        (
            "X^{-0.45,0.3} (classical)",
            NormSpec::space_time(-0.45, 0.3, 2.0, 2.0, NormVariant::LebesgueModes).with_tau_cutoff(700.0),
        ),
    ] {
        println!("{label:<28} {:.5}", xsb_norm(&block, &spec)?);
    }
    let spec = NormSpec::space_time(-0.45, 0.3, 2.3, 2.0, NormVariant::BesovBlocks).with_tau_cutoff(700.0);
    println!("restricted to [0, 0.5]: {:.5}", restricted_norm(&traj, (0.0, 0.5), &spec, 2)?);

    let p = 2.3;
    let w = DeltaWindow::for_p(p)?;
    println!(
        "p = {p}: delta in ({:.4}, {:.4}), tight above {:.4}",
        w.wide_lower, w.upper, w.tight_lower
    );
    for n in [64, 1024, 1 << 16] {
        println!("  K(0.05, {p}) over {n:>5} modes = {:.4}", holder_embedding_constant(0.05, p, n)?);
    }

    let psi = skdv::dynamics::sample_stochastic_convolution(&generate_noise_path(&rng, 1, 64, 0.01, 100)?, 64, 1)?;
    let lo = LOmegaSpec::new(0.05);
    let full = l_omega(&psi, &lo)?;
    for n in [8, 16, 32] {
        println!(
            "L_omega: N = {n:>2}: perp / full = {:.4}, bound N^(-delta/2) = {:.4}",
            l_omega_perp(&psi, n, &lo)? / full,
            (n as f64).powf(-0.025)
        );
    }
    Ok(())
}
