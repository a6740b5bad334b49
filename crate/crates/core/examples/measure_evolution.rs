//! A small ensemble of the truncated stochastic KdV from white-noise data: each mode stays
//! centred Gaussian with variance `(α + t)/2` per real coordinate.
//!
//! `cargo run --release --example measure_evolution`

use skdv::statistics::{measure_test, run_ensemble, EnsembleConfig, MeasureTolerances, Part};

fn main() -> skdv::Result<()> {
    let mut cfg = EnsembleConfig::new(4, 16, 1.0, 0.01, vec![0.5, 1.0], 4000);
    cfg.seed = 1;
    let s = run_ensemble(&cfg)?;
    let c = run_ensemble(&cfg.companion())?;
    for (k, t) in s.times().iter().enumerate() {
        let m = s.mode_moments(k, 1, Part::Re);
        println!(
            "t = {t}: var Re u(1) = {:.4} ± {:.4} (target {:.4}), excess kurtosis {:+.3}",
            m.variance,
            m.variance_se,
            0.5 * (1.0 + t),
            m.excess_kurtosis
        );
    }
    let tol = MeasureTolerances {
        se_multiplier: 4.0,
        kurtosis_abs: Some(0.3),
        ..Default::default()
    };
    for t in [0.5, 1.0] {
        println!("{}", measure_test(&s, Some(&c), t, 1.0, &tol)?.summary_line());
    }
    Ok(())
}
