use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use patrol_cli::*;

/// Patrol robot simulator.
///
/// Exit codes: 0 loop complete, 10 alarm, 11 collision, 12 timeout,
/// 13 battery out, 2 bad config, 3 center unreachable, 4 replay mismatch,
/// 1 anything else.
#[derive(Debug, Parser)]
#[command(name = "patrol", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario file.
    #[arg(short, long, default_value = "scenarios/baseline.toml")]
    config: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the scenario's, then out/<scenario>.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Control center agent address (host:port).
    #[arg(long, conflicts_with = "headless")]
    center: Option<String>,
    /// Ignore any center named in the scenario.
    #[arg(long)]
    headless: bool,
    /// Sim seconds per wall second while attached; 0 runs as fast as possible.
    #[arg(long)]
    pace: Option<f64>,
}

impl RunArgs {
    fn options(self) -> RunOptions {
        RunOptions {
            config: self.config,
            seed: self.seed,
            out: self.out,
            center: self.center,
            headless: self.headless,
            pace: self.pace,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one patrol loop.
    Run(RunArgs),
    /// Run loops back to back on one battery.
    Batch {
        #[command(flatten)]
        run: RunArgs,
        /// Stop after this many completed loops.
        #[arg(short = 'n', long)]
        loops: Option<u32>,
    },
    /// Write the avoidance control surface as CSV.
    Surface {
        /// Grid step in cm.
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Fuzzy controller file.
        #[arg(long, conflicts_with = "config")]
        fuzzy: Option<PathBuf>,
        /// Take the controller from a scenario file.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Re-run the scenario behind a trace and compare byte for byte.
    Replay { trace: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("patrol: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Run(args) => {
            let r = run_command(&args.options())?;
            let s = &r.summary;
            println!(
                "{} after {:.1} s, {:.0} cm, {} ticks, {} collisions",
                s.outcome, s.sim_duration, s.distance, s.ticks, s.collisions
            );
            if let Some(cause) = s.alarm {
                println!("alarm: {cause}");
            }
            if let Some(l) = &r.link {
                println!("telemetry dropped: {}, commands: {}", l.dropped, l.commands.len());
            }
            println!("artifacts in {}", r.out_dir.display());
            Ok(r.exit_code())
        }
        Command::Batch { run, loops } => {
            let r = batch_command(&run.options(), loops)?;
            let b = &r.result;
            println!(
                "{} loops completed in {:.1} s, last mission {}, battery left {:.1} s",
                b.completed, b.total_time, b.outcome, b.battery_remaining
            );
            println!("artifacts in {}", r.out_dir.display());
            Ok(r.exit_code())
        }
        Command::Surface { step, fuzzy, config, out } => {
            let source = match (fuzzy, config) {
                (Some(f), _) => SurfaceSource::FuzzyFile(f),
                (None, Some(c)) => SurfaceSource::Scenario(c),
                (None, None) => SurfaceSource::Canonical,
            };
            let csv = surface_command(&source, step)?;
            match out {
                Some(path) => std::fs::write(&path, csv).map_err(|source| CliError::Io {
                    path: path.display().to_string(),
                    source,
                })?,
                None => print!("{csv}"),
            }
            Ok(EXIT_OK)
        }
        Command::Replay { trace } => {
            let r = replay_command(&trace)?;
            match &r.mismatch {
                None => {
                    println!("identical: {} lines", r.lines);
                    Ok(EXIT_OK)
                }
                Some((line, recorded, replayed)) => {
                    println!("line {line} differs");
                    println!("  recorded: {recorded}");
                    println!("  replayed: {replayed}");
                    Ok(EXIT_REPLAY_MISMATCH)
                }
            }
        }
    }
}
