use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use optomech_qpt::config::{FrameName, Task};
use optomech_qpt::{exit, load_config, run, Format, Result};

/// Sweeps over optomechanical and hybrid light-atom models.
#[derive(Debug, Parser)]
#[command(name = "optomech-qpt", version)]
struct Cli {
    task: Task,
    /// JSON run configuration (`-` reads standard input).
    #[arg(long)]
    config: PathBuf,
    /// Output file; the table goes to standard output when absent. CSV runs also write
    /// `<out>.meta.json` with the config echo.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for row-level parallelism (default: one per core).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    frame: Option<FrameName>,
}

fn execute(cli: &Cli) -> Result<i32> {
    let mut cfg = load_config(&cli.config, Some(cli.task))?;
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(f) = cli.frame {
        cfg.frame = f.into();
    }
    let table = run(&cfg, cli.workers)?;
    let body = match cfg.format {
        Format::Csv => table.to_csv()?,
        Format::Json => table.to_json()?,
    };
    match &cli.out {
        Some(path) => {
            std::fs::write(path, body)?;
            if cfg.format == Format::Csv {
                let mut meta = path.clone().into_os_string();
                meta.push(".meta.json");
                std::fs::write(meta, table.metadata_json()?)?;
            }
        }
        None => print!("{body}"),
    }
    let flagged = table.flagged_rows();
    if flagged > 0 {
        eprintln!("{flagged} of {} rows flagged", table.rows.len());
        Ok(exit::FLAGGED)
    } else {
        Ok(exit::COMPLETE)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::FAILED as u8 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("optomech-qpt: {e}");
            ExitCode::from(exit::FAILED as u8)
        }
    }
}
