mod args;
mod commands;
mod config;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use config::{RunConfig, Settings};
use error::CliError;
use manifest::{FileDigest, Manifest};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match run(&argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(argv: &[String]) -> Result<(), CliError> {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string().trim_end().to_string())),
    };

    let (command, config) = match (&cli.from_manifest, cli.command) {
        (Some(path), None) => {
            // only the output directory may change on replay
            let flags = Settings::from_flags(&cli.global);
            if (Settings { out: None, ..flags }) != Settings::default() {
                return Err(CliError::Usage("--from-manifest accepts only --out".into()));
            }
            let recorded = Manifest::load(path)?;
            recorded.verify_inputs()?;
            let mut config = recorded.config;
            if let Some(out) = cli.global.out {
                config.out = out;
            }
            (recorded.command, config)
        }
        (None, Some(cmd)) => (cmd, RunConfig::resolve(&cli.global)?),
        _ => return Err(CliError::Usage("a subcommand or --from-manifest is required".into())),
    };

    let outcome = commands::execute(&command, &config)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        argv: argv.to_vec(),
        inputs: outcome.inputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_, _>>()?,
        outputs: outcome.outputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_, _>>()?,
        command,
        config: config.clone(),
    };
    manifest.write(&config.out)?;
    if let Some(text) = outcome.stdout {
        print!("{text}");
    }
    Ok(())
}
