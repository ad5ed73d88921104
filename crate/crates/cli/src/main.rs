use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context as _};
use cantor_cli::report::{DEFAULT_DEPTH, MAX_DEPTH};
use cantor_cli::{parse_scenario, render_structured, render_text, run, Options, Pipeline};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "cantor",
    version,
    about = "Run exact measure-theory scenarios on Cantor space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the commands of a scenario file and report the results.
    Run {
        file: PathBuf,
        /// Only run commands of this pipeline.
        #[arg(long)]
        pipeline: Option<String>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Depth of brute-force point enumeration.
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Structured,
}

fn main() -> ExitCode {
    match try_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn try_main() -> anyhow::Result<ExitCode> {
    let Command::Run {
        file,
        pipeline,
        report,
        format,
        depth,
    } = Cli::parse().command;
    if depth > MAX_DEPTH {
        bail!("--depth {depth} exceeds the maximum {MAX_DEPTH}");
    }
    let pipeline = match pipeline {
        None => None,
        Some(name) => match name.parse::<Pipeline>() {
            Ok(p) => Some(p),
            Err(()) => bail!("unknown pipeline '{name}'"),
        },
    };
    let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
    let scenario = parse_scenario(&text).with_context(|| format!("loading {}", file.display()))?;
    let result = run(&scenario, Options { depth, pipeline });
    let rendered = match format {
        Format::Text => render_text(&result.tree),
        Format::Structured => render_structured(&result.tree),
    };
    match report {
        Some(path) => fs::write(&path, rendered).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{rendered}"),
    }
    Ok(if result.all_expectations_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
