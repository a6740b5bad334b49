//! `skdv`: batch front end. Exit status 0 when every test passes, 1 on a failed test,
//! 2 on a configuration error, 3 on a runtime or resource error.

use clap::{Args, Parser, Subcommand};
use skdv::config::SimConfig;
use skdv::io::{self, Manifest};
use skdv::norms::{NormSpec, NormVariant};
use skdv::runs::{self, RunContext, RunOutput};
use skdv::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "skdv", version, about = "Truncated stochastic KdV: simulation and statistical checks")]
struct Cli {
    /// TOML (or JSON) config; defaults apply to every missing key.
    #[arg(long, global = true, env = "SKDV_CONFIG")]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true, env = "SKDV_SEED")]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "SKDV_THREADS")]
    threads: Option<usize>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true, env = "SKDV_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the ensemble and write mode tables, samples and a few trajectories.
    Simulate,
    /// Gaussian laws, energy slope and generator identities along the ensemble.
    VerifyMeasure,
    /// Drift identities and forward-equation residuals on random points.
    VerifyGenerator,
    /// Norms of a stored trajectory, or the norm inequality checks without `--input`.
    Norms(NormArgs),
    /// Distributional scaling of the norm with time.
    Tails,
    /// Growth of sup-in-time norms over long horizons.
    Growth,
    /// Coupled truncation differences u^N - u^2N.
    Converge,
    /// Product-formula error rate and splitting vs exponential Euler.
    Trotter,
}

#[derive(Args, Debug)]
struct NormArgs {
    /// Trajectory CSV written by `simulate`.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = -0.45, allow_negative_numbers = true)]
    s: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    b: f64,
    #[arg(long, default_value_t = 2.3)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// besov_blocks or lebesgue_modes
    #[arg(long, default_value = "besov_blocks")]
    variant: NormVariant,
    /// Time window `t0,t1`; the whole trajectory by default.
    #[arg(long, value_parser = parse_window, allow_negative_numbers = true)]
    window: Option<(f64, f64)>,
    /// Largest |tau| in the temporal integral.
    #[arg(long)]
    tau_cutoff: Option<f64>,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected t0,t1")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::VerifyMeasure => "verify-measure",
            Command::VerifyGenerator => "verify-generator",
            Command::Norms(_) => "norms",
            Command::Tails => "tails",
            Command::Growth => "growth",
            Command::Converge => "converge",
            Command::Trotter => "trotter",
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Domain(_)
        | Error::Dimension(_)
        | Error::Aliasing(_)
        | Error::InsufficientData(_)
        | Error::Uncoupled(_) => 2,
        Error::PartialRun { .. } | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> skdv::Result<bool> {
    let started = io::unix_now();
    let mut config = SimConfig::load(cli.config.as_deref(), std::env::vars())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let ctx = RunContext::new(config, out)?;
    let mut parameters = serde_json::Value::Null;
    let output: RunOutput = match &cli.command {
        Command::Simulate => runs::simulate(&ctx)?,
        Command::VerifyMeasure => runs::verify_measure(&ctx)?,
        Command::VerifyGenerator => runs::verify_generator(&ctx)?,
        Command::Norms(a) => match &a.input {
            Some(input) => {
                let mut spec = NormSpec::space_time(a.s, a.b, a.p, a.q, a.variant);
                spec.tau_cutoff = a.tau_cutoff;
                spec.validate()?;
                parameters = serde_json::json!({ "input": input, "norm": spec, "window": a.window });
                runs::trajectory_norms(&ctx, input, &spec, a.window)?
            }
            None => runs::norm_checks(&ctx)?,
        },
        Command::Tails => runs::tails(&ctx)?,
        Command::Growth => runs::growth(&ctx)?,
        Command::Converge => runs::converge(&ctx)?,
        Command::Trotter => runs::trotter(&ctx)?,
    };
    for r in &output.reports {
        println!("{}", r.summary_line());
        for c in r.failures() {
            println!("    failed: {} (value {:.6e}, tolerance {:.6e})", c.label, c.value, c.tolerance);
        }
    }
    let pass = output.pass();
    if !output.reports.is_empty() {
        io::write_reports(&ctx.out, &output.reports)?;
    }
    let manifest = Manifest {
        tool: "skdv".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: cli.command.name().into(),
        config_hash: ctx.hash.clone(),
        seed: ctx.config.seed,
        threads: cli.threads,
        config: serde_json::to_value(&ctx.config)?,
        parameters,
        files: output.files,
        reports: output.reports,
        pass,
        started_unix: started,
        finished_unix: io::unix_now(),
    };
    let path = io::write_manifest(&ctx.out, &manifest)?;
    println!(
        "{}: {} (manifest {})",
        manifest.subcommand,
        if pass { "PASS" } else { "FAIL" },
        path.display()
    );
    Ok(pass)
}
