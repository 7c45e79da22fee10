use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use rivalnet::config::{parse_config, ExperimentConfig};
use rivalnet::output::{companion, manifest, read_manifest, Staged};
use rivalnet::run::{execute, Command};
use rivalnet::{ConfigError, Error};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_UNCONVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "rivalnet", version, about = "Attack, takeover and recovery between two interconnected networks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    run: RunFlags,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); overrides the config.
    #[arg(long)]
    workers: Option<usize>,
    /// Main output path; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Treat unconverged mean-field points as a failure.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the edge list of one replicate's network.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
    /// Time series (protocols timeseries and early-warning).
    Simulate(Common),
    /// Simulated hysteresis ramp.
    Hysteresis(Common),
    /// Two-sheet phase diagram.
    PhaseDiagram(Common),
    /// Mean-field hysteresis trace.
    Meanfield(Common),
    /// Takeover-period sweep.
    SweepTakeover(Common),
    /// Early-warning analysis of a time-series CSV.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Re-run the invocation recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

fn replay_command(facts: &toml::Table) -> Result<Command, Error> {
    let bad = |what: &str| Error::from(ConfigError::Invalid(format!("manifest: {what}")));
    let name = facts.get("command").and_then(|v| v.as_str()).ok_or_else(|| bad("no command"))?;
    Ok(match name {
        "generate" => Command::Generate {
            replicate: facts
                .get("replicate")
                .and_then(|v| v.as_integer())
                .ok_or_else(|| bad("no replicate"))? as u64,
        },
        "simulate" => Command::Simulate,
        "hysteresis" => Command::Hysteresis,
        "phase-diagram" => Command::PhaseDiagram,
        "meanfield" => Command::MeanField,
        "sweep-takeover" => Command::SweepTakeover,
        "analyze" => Command::Analyze {
            input: facts
                .get("input")
                .and_then(|v| v.as_str())
                .ok_or_else(|| bad("no input"))?
                .into(),
        },
        other => return Err(bad(&format!("unknown command `{other}`"))),
    })
}

/// Ok(true) when every mean-field point converged.
fn run(command: Command, mut config: ExperimentConfig, flags: &RunFlags) -> Result<bool, Error> {
    if let Some(seed) = flags.seed {
        config.seed = seed;
    }
    if let Some(w) = flags.workers {
        config.workers = w;
    }
    if let Some(out) = &flags.out {
        config.output = out.display().to_string();
    }
    config.validate()?;
    let out = PathBuf::from(&config.output);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Runtime(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let result = pool.install(|| execute(&command, &config, &out))?;
    let wall = start.elapsed().as_secs_f64();

    let mut staged = Staged::new();
    for (path, text) in &result.files {
        staged.add(path, text)?;
    }
    let mut facts = vec![
        ("command", toml::Value::from(command.name())),
        ("version", toml::Value::from(env!("CARGO_PKG_VERSION"))),
        ("seed", toml::Value::from(config.seed as i64)),
        ("workers", toml::Value::from(pool.current_num_threads() as i64)),
        ("wall_time_s", toml::Value::from(wall)),
        ("unconverged", toml::Value::from(result.unconverged as i64)),
        (
            "outputs",
            toml::Value::Array(staged.paths().map(|p| p.display().to_string().into()).collect()),
        ),
    ];
    match &command {
        Command::Generate { replicate } => facts.push(("replicate", toml::Value::from(*replicate as i64))),
        Command::Analyze { input } => facts.push(("input", toml::Value::from(input.display().to_string()))),
        _ => {}
    }
    staged.add(&companion(&out, ".manifest"), &manifest(&facts, &config))?;
    staged.commit()?;
    Ok(result.unconverged == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = (|| -> Result<(bool, bool), Error> {
        let (command, config, flags) = match cli.command {
            Cmd::Generate { common, replicate } => (Command::Generate { replicate }, common.config, common.run),
            Cmd::Simulate(c) => (Command::Simulate, c.config, c.run),
            Cmd::Hysteresis(c) => (Command::Hysteresis, c.config, c.run),
            Cmd::PhaseDiagram(c) => (Command::PhaseDiagram, c.config, c.run),
            Cmd::Meanfield(c) => (Command::MeanField, c.config, c.run),
            Cmd::SweepTakeover(c) => (Command::SweepTakeover, c.config, c.run),
            Cmd::Analyze { common, input } => (Command::Analyze { input }, common.config, common.run),
            Cmd::Replay { manifest, run: flags } => {
                let text = std::fs::read_to_string(&manifest)
                    .map_err(|e| ConfigError::Invalid(format!("cannot read {}: {e}", manifest.display())))?;
                let (facts, config) = read_manifest(&text)?;
                let command = replay_command(&facts)?;
                return Ok((run(command, config, &flags)?, flags.strict));
            }
        };
        let config = load_config(&config)?;
        Ok((run(command, config, &flags)?, flags.strict))
    })();
    match outcome {
        Ok((true, _)) => ExitCode::SUCCESS,
        Ok((false, strict)) => {
            eprintln!("warning: some mean-field points did not converge");
            if strict {
                ExitCode::from(EXIT_UNCONVERGED)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_RUNTIME,
            })
        }
    }
}
