//! Config, provenance and artifacts: parse a TOML config, run the generator check through the
//! same driver as `skdv verify-generator` and write the manifest.
//!
//! `cargo run --release --example run_artifacts`

use skdv::config::SimConfig;
use skdv::io::{self, Manifest};
use skdv::runs::{self, RunContext};

fn main() -> skdv::Result<()> {
    let text = r#"
seed = 4
[generator]
truncations = [2, 4]
samples = 200
"#;
    let cfg = SimConfig::from_toml_str(text)?;
    println!("config hash {}", cfg.hash());
    match SimConfig::from_toml_str("[[norms]]\ns = -0.4\np = 2.2\n") {
        Err(e) => println!("rejected as expected: {e}"),
        Ok(_) => unreachable!("s p = -0.88 must be rejected"),
    }

    let out = std::env::temp_dir().join("skdv-example-artifacts");
    let ctx = RunContext::new(cfg, &out)?;
    let started = io::unix_now();
    let run = runs::verify_generator(&ctx)?;
    for r in &run.reports {
        println!("{}", r.summary_line());
    }
    let manifest = Manifest {
        tool: "skdv".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: "verify-generator".into(),
        config_hash: ctx.hash.clone(),
        seed: ctx.config.seed,
        threads: None,
        config: serde_json::to_value(&ctx.config)?,
        parameters: serde_json::Value::Null,
        pass: run.pass(),
        files: run.files,
        reports: run.reports,
        started_unix: started,
        finished_unix: io::unix_now(),
    };
    println!("manifest: {}", io::write_manifest(&out, &manifest)?.display());
    Ok(())
}
