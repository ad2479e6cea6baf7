use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hic_cli::commands::{run_fit_beatnote, run_landscape, run_mc, run_params, run_sweep, CommandError};
use hic_cli::config::{parse_config, Config, ConfigError, Model};
use hic_cli::table::{emit_output, Format};
use hic_core::montecarlo::{simulate, write_event_log, BEAT_FREQUENCY};

#[derive(Parser)]
#[command(name = "hic", version, about = "Heralded interaction control: sweeps, landscapes, Monte Carlo and beat-note fits")]
struct Cli {
    /// Configuration file; paper defaults when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv, global = true)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Ideal,
    Imperfect,
    Montecarlo,
}

#[derive(Subcommand)]
enum Command {
    /// Print cooperativity, transmission and other derived parameters.
    Params,
    /// Sweep one basis parameter from the [sweep] section.
    Sweep {
        /// Override the [sweep] model.
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Success probability over a (gain, phase) target grid.
    Landscape,
    /// Click-level Monte Carlo run at the [montecarlo] basis.
    Mc {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Also write the per-trial event log here.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Fit the beat-note phase of a CSV with columns time_s,counts.
    FitBeatnote {
        input: PathBuf,
        /// Reference frequency in Hz.
        #[arg(long, default_value_t = BEAT_FREQUENCY)]
        frequency: f64,
    },
}

fn load_config(path: Option<&Path>) -> Result<Config, CommandError> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CommandError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| {
        CommandError::Config(ConfigError {
            message: format!("{}: {}", path.display(), e),
            line: None,
            ..e
        })
    })
}

fn execute(cli: Cli) -> Result<(), CommandError> {
    let mut config = load_config(cli.config.as_deref())?;
    let format = match cli.format {
        OutputFormat::Csv => Format::Csv,
        OutputFormat::Json => Format::Json,
    };
    let table = match cli.command {
        Command::Params => run_params(&config)?,
        Command::Sweep { model, seed } => {
            if let Some(seed) = seed {
                config.montecarlo.seed = seed;
            }
            let mut spec = config.sweep.clone().ok_or_else(|| ConfigError::missing_section("sweep"))?;
            if let Some(m) = model {
                spec.model = match m {
                    ModelArg::Ideal => Model::Ideal,
                    ModelArg::Imperfect => Model::Imperfect,
                    ModelArg::Montecarlo => Model::MonteCarlo,
                };
            }
            config.sweep = Some(spec.clone());
            run_sweep(&spec, &config)?
        }
        Command::Landscape => run_landscape(&config)?,
        Command::Mc { seed, trials, events } => {
            if let Some(seed) = seed {
                config.montecarlo.seed = seed;
            }
            if let Some(trials) = trials {
                if trials == 0 {
                    return Err(CommandError::Usage("--trials must be at least 1".into()));
                }
                config.montecarlo.trials = trials;
            }
            let (table, run_config) = run_mc(&config)?;
            if let Some(path) = events {
                let records = simulate(&run_config)?;
                let io_err = |e: std::io::Error| CommandError::Input {
                    path: path.display().to_string(),
                    message: e.to_string(),
                };
                let file = fs::File::create(&path).map_err(io_err)?;
                write_event_log(BufWriter::new(file), &records).map_err(io_err)?;
            }
            table
        }
        Command::FitBeatnote { input, frequency } => run_fit_beatnote(&input, frequency, &config)?,
    };
    emit_output(&table, cli.out.as_deref(), format)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hic: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
