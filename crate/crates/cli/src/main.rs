//! `nfma`: single runs, parameter sweeps, replays and self-checks for the
//! movable-antenna near-field downlink simulator.
//!
//! Exit codes are a stable contract: 0 on success, 1 when an optimization
//! fails or returns an infeasible placement, 2 on bad input. Every command
//! prints one `status=...` line on stdout.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nearfield_ma::harness::output::{read_manifest, MANIFEST_FILE};
use nearfield_ma::harness::{
    paired_row_means, run_to_dir, seed_range, sweep_to_dir, RunManifest, Scenario, SchemeKind,
    SweepAxis,
};
use nearfield_ma::validation::{run_suite, Suite};
use nearfield_ma::Error;

#[derive(Parser)]
#[command(name = "nfma", version, about)]
struct Cli {
    /// Worker threads; defaults to the available parallelism
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one drop with one scheme
    Run {
        /// Scenario file of `key = value` lines; built-in defaults if omitted
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "proposed")]
        scheme: String,
        /// Drop and swarm seed; the scenario's `seed` if omitted
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "NFMA_OUT_DIR", default_value = "nfma-out")]
        out: PathBuf,
    },
    /// Sweep one scenario parameter over several drops and schemes
    Sweep {
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// region_size, user_count, rate_target, distance or rician_factor
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Comma-separated scheme names
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "proposed,ma-pso,ma-bs,fpa"
        )]
        schemes: Vec<String>,
        /// Number of drops per value, seeded from the scenario's `seed` upward
        #[arg(long, default_value_t = 20)]
        seeds: usize,
        #[arg(long, env = "NFMA_OUT_DIR", default_value = "nfma-out")]
        out: PathBuf,
    },
    /// Re-run a stored run from its manifest
    Replay {
        /// Directory holding `manifest.json`, or the manifest itself
        #[arg(long = "from")]
        from: PathBuf,
        #[arg(long, env = "NFMA_OUT_DIR", default_value = "nfma-out")]
        out: PathBuf,
    },
    /// Check the solvers and the optimizer against independent oracles
    Validate {
        /// channel, beamforming, optimizer or all
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

/// Why a command stopped early.
struct Failure {
    code: u8,
    status: &'static str,
    key: Option<String>,
    message: String,
}

impl Failure {
    fn input(key: impl Into<String>, message: impl ToString) -> Self {
        Failure {
            code: 2,
            status: "input_error",
            key: Some(key.into()),
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::UnknownKey(key) | Error::InvalidValue { key, .. } => {
                Failure::input(key, message)
            }
            Error::ScenarioParse { line, .. } => Failure::input(format!("line {line}"), message),
            Error::InvalidArgument(_) | Error::Dimension(_) => Failure {
                code: 2,
                status: "input_error",
                key: None,
                message,
            },
            _ => Failure {
                code: 1,
                status: "failed",
                key: None,
                message,
            },
        }
    }
}

type CmdResult = Result<(), Failure>;

fn load_scenario(path: Option<&Path>) -> Result<Scenario, Failure> {
    let Some(path) = path else {
        return Ok(Scenario::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input("scenario", format!("{}: {e}", path.display())))?;
    Ok(Scenario::parse(&text)?)
}

fn create_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| Failure::input("out", format!("{}: {e}", dir.display())))
}

fn execute_run(manifest: &RunManifest, out: &Path) -> CmdResult {
    create_dir(out)?;
    let result = run_to_dir(manifest, out)?;
    let line = format!(
        "scheme={} seed={} power_dbm={:.6} evals={} feasible={} out={}",
        result.scheme,
        result.seed,
        result.power_dbm(),
        result.evaluations,
        result.feasible,
        out.display()
    );
    if result.feasible {
        println!("status=ok {line}");
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            status: "infeasible",
            key: None,
            message: line,
        })
    }
}

fn run(scenario: Option<&Path>, scheme: &str, seed: Option<u64>, out: &Path) -> CmdResult {
    let scenario = load_scenario(scenario)?;
    let scheme: SchemeKind = scheme
        .parse()
        .map_err(|e: Error| Failure::input("scheme", e))?;
    let manifest = RunManifest {
        seed: seed.unwrap_or(scenario.seed),
        scenario,
        scheme,
    };
    execute_run(&manifest, out)
}

fn replay(from: &Path, out: &Path) -> CmdResult {
    let path = if from.is_dir() {
        from.join(MANIFEST_FILE)
    } else {
        from.to_path_buf()
    };
    let manifest = read_manifest(&path).map_err(|e| Failure::input("from", e))?;
    execute_run(&manifest, out)
}

fn sweep(
    scenario: Option<&Path>,
    axis: &str,
    values: &[String],
    schemes: &[String],
    seeds: usize,
    out: &Path,
) -> CmdResult {
    let scenario = load_scenario(scenario)?;
    let axis: SweepAxis = axis.parse().map_err(|e: Error| Failure::input("axis", e))?;
    let values = values
        .iter()
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Failure::input("values", format!("{v:?}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let schemes = schemes
        .iter()
        .map(|s| {
            s.trim()
                .parse::<SchemeKind>()
                .map_err(|e| Failure::input("schemes", e))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if seeds == 0 {
        return Err(Failure::input("seeds", "need at least one drop"));
    }
    // Reject bad values before any cell runs.
    for &v in &values {
        axis.apply(&scenario, v)?;
    }
    create_dir(out)?;
    let rows = sweep_to_dir(
        &scenario,
        axis,
        &values,
        &schemes,
        &seed_range(scenario.seed, seeds),
        out,
    )?;
    for p in paired_row_means(&rows, &schemes)? {
        eprintln!(
            "{axis} = {}: {} mean {:.3} dBm ± {:.3} over {} drops",
            p.value, p.scheme, p.mean_dbm, p.std_err_db, p.drops
        );
    }
    let infeasible = rows.iter().filter(|r| !r.feasible).count();
    println!(
        "status=ok rows={} infeasible={infeasible} out={}",
        rows.len(),
        out.display()
    );
    Ok(())
}

fn validate(suite: &str) -> CmdResult {
    let suite: Suite = suite
        .parse()
        .map_err(|e: Error| Failure::input("suite", e))?;
    let checks = run_suite(suite)?;
    for c in &checks {
        println!("{c}");
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    if failed.is_empty() {
        println!("status=ok checks={}", checks.len());
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            status: "failed",
            key: None,
            message: format!("failed checks: {}", failed.join(", ")),
        })
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("status=input_error key=threads {e}");
            return ExitCode::from(2);
        }
    }

    let outcome = match &cli.command {
        Command::Run {
            scenario,
            scheme,
            seed,
            out,
        } => run(scenario.as_deref(), scheme, *seed, out),
        Command::Sweep {
            scenario,
            axis,
            values,
            schemes,
            seeds,
            out,
        } => sweep(scenario.as_deref(), axis, values, schemes, *seeds, out),
        Command::Replay { from, out } => replay(from, out),
        Command::Validate { suite } => validate(suite),
    };

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if f.status == "infeasible" {
                println!("status=infeasible {}", f.message);
            } else {
                let key = f.key.map(|k| format!(" key={k}")).unwrap_or_default();
                println!("status={}{key}", f.status);
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
