use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use ris_sched::config::ScenarioConfig;
use ris_sched::sim::{run_sweep, Preset};
use ris_sched::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Link-level scheduling simulator for a RIS-aided uplink.
#[derive(Debug, Parser)]
#[command(name = "ris-sched", version, about)]
struct Args {
    /// Scenario file (TOML); defaults apply for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Experiment preset; `custom` runs the configuration as-is.
    #[arg(long, default_value = "custom")]
    preset: String,

    /// Monte-Carlo trial count override.
    #[arg(long)]
    trials: Option<usize>,

    /// Base seed override.
    #[arg(long)]
    seed: Option<u64>,

    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// key=value configuration override; repeatable. Bare keys are
    /// looked up across sections, dotted keys pin the section.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn run(args: &Args) -> Result<(), Error> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    let preset: Preset = args.preset.parse().map_err(|_| {
        Error::Config(format!(
            "unknown preset '{}'; expected fig4a, fig4b, fig5a, fig5b, or custom",
            args.preset
        ))
    })?;
    for spec in &args.overrides {
        cfg.apply_override(spec)?;
    }
    if let Some(t) = args.trials {
        cfg.scheduler.trials = t;
    }
    if let Some(s) = args.seed {
        cfg.scheduler.seed = s;
    }
    // presets pin their fixed parameters last, so e.g. the objective of a
    // named experiment cannot be overridden away
    let sweep = preset.configure(&mut cfg);
    cfg.validate()?;

    let result = run_sweep(&cfg, &sweep)?;
    let payload = match args.format {
        Format::Csv => {
            let mut buf = Vec::new();
            result.write_csv(&mut buf)?;
            buf
        }
        Format::Json => {
            let mut s = result.to_json()?;
            s.push('\n');
            s.into_bytes()
        }
    };
    match &args.out {
        Some(path) => std::fs::write(path, payload)?,
        None => std::io::stdout().write_all(&payload)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::InvalidArgument(_) => ExitCode::from(2),
                Error::Infeasible(_) => ExitCode::from(3),
                Error::Io(_) => ExitCode::FAILURE,
            }
        }
    }
}
