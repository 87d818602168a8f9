//! Batch front end: named scenarios driven by a JSON config, plus figure
//! reproduction recipes. Outputs are deterministic (byte-identical for the
//! same config and version); the manifest records wall time and is the one
//! exception.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod config;
mod figures;
mod output;
mod scenarios;

use std::path::PathBuf;
use std::time::Instant;

use clap::Parser;

use config::{Scenario, ScenarioConfig};
use output::{fnv1a64, write_manifest, Manifest, VERSION};

#[derive(Parser, Debug)]
#[command(name = "fockgen", version, about = "Coherent-to-Fock preparation toolkit")]
struct Cli {
    /// JSON scenario config; defaults apply for a missing file only when
    /// --scenario or --figure is given
    #[arg(long)]
    config: Option<PathBuf>,

    /// Scenario name (overrides the config file)
    #[arg(long)]
    scenario: Option<String>,

    /// Figure-reproduction tag (fig2a, fig2d, fig3a, fig3b, sm_fig1..sm_fig6)
    #[arg(long, conflicts_with = "scenario")]
    figure: Option<String>,

    /// Output directory (overrides the config file)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    threads: usize,

    /// Re-verify the two displacement routes against each other first
    #[arg(long)]
    seed_check: bool,

    /// Lift desk-scale caps on long figure tags
    #[arg(long)]
    allow_long: bool,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

fn run(cli: Cli) -> i32 {
    if cli.threads > 0 {
        // ignore the error if a pool already exists (e.g. in tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }

    if cli.seed_check {
        match seed_check() {
            Ok(worst) => eprintln!("seed-check: displacement routes agree to {worst:.3e}"),
            Err(worst) => {
                eprintln!("seed-check FAILED: displacement routes disagree at {worst:.3e}");
                return 3;
            }
        }
    }

    // load + validate config
    let (mut cfg, cfg_text) = match &cli.config {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read config {}: {e}", path.display());
                    return 2;
                }
            };
            match ScenarioConfig::from_json(&text) {
                Ok(c) => (c, text),
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return 2;
                }
            }
        }
        None => (ScenarioConfig::default(), "{}".to_string()),
    };
    if let Some(name) = &cli.scenario {
        match Scenario::parse(name) {
            Ok(s) => cfg.scenario = s,
            Err(e) => {
                eprintln!("error: {e:#}");
                return 2;
            }
        }
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e:#}");
        return 2;
    }

    let out_dir = cli
        .out
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create output directory {}: {e}", out_dir.display());
        return 2;
    }

    // hash the canonical (re-serialized) config so formatting differences
    // do not change the fingerprint
    let canonical = serde_json::to_string(&cfg).expect("config serializes");
    let hash = fnv1a64(canonical.as_bytes());
    let _ = cfg_text; // raw text only matters for parsing

    let started = Instant::now();
    let run_name;
    let outputs = if let Some(tag) = &cli.figure {
        run_name = format!("figure:{tag}");
        match figures::reproduce_figure(tag, &out_dir, hash, cli.allow_long) {
            Ok(files) => files,
            Err(e) => return classify_error(e),
        }
    } else {
        run_name = format!("scenario:{}", cfg.scenario.name());
        match scenarios::run_scenario(&cfg, &out_dir, hash) {
            Ok(files) => files,
            Err(e) => return classify_error(e),
        }
    };

    let manifest = Manifest {
        artifact_version: VERSION.to_string(),
        run: run_name,
        config_hash: format!("fnv1a64:{hash:016x}"),
        config: serde_json::to_value(&cfg).expect("config serializes"),
        outputs: outputs.clone(),
        threads: rayon::current_num_threads(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    if let Err(e) = write_manifest(&out_dir.join("manifest.json"), &manifest) {
        eprintln!("error: {e:#}");
        return 3;
    }
    for f in &outputs {
        println!("{}", out_dir.join(f).display());
    }
    0
}

/// Map errors to exit codes: config-level problems are 2, numerical
/// failures 3; the failing module's error name and message go to the
/// diagnostic stream.
fn classify_error(e: anyhow::Error) -> i32 {
    match e.downcast_ref::<fockgen::Error>() {
        Some(fockgen::Error::UnknownTag(_)) => {
            eprintln!("error: {e:#}");
            2
        }
        Some(core_err) => {
            eprintln!("error: {core_err:?}: {e:#}");
            3
        }
        // config/context errors from this crate
        None => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

/// Compare the closed-form displacement elements against a padded matrix
/// exponential before running anything.
fn seed_check() -> Result<f64, f64> {
    use fockgen::hilbert::{displacement_exact, displacement_laguerre};
    let dim = 60;
    let pad = 40;
    let beta = 0.649;
    let exact = displacement_exact(fockgen::C64::from(beta), dim + pad);
    let mut worst = 0.0f64;
    for m in 0..dim {
        for n in 0..dim {
            let lag = displacement_laguerre(beta, m, n);
            worst = worst.max((exact[(m, n)] - fockgen::C64::from(lag)).norm());
        }
    }
    if worst < 1e-9 {
        Ok(worst)
    } else {
        Err(worst)
    }
}
