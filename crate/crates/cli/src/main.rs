use std::process::ExitCode;

use clap::Parser;
use wifitrace_cli::args::{Cli, Command};
use wifitrace_cli::commands::parse_region;
use wifitrace_cli::{
    cmd_communities, cmd_ingest, cmd_micro, cmd_neighborhood, cmd_poi, cmd_synth, resolve_config, CliError, RunOptions,
    SynthSource, Window,
};

fn run(cli: Cli) -> Result<(), CliError> {
    let config = resolve_config(cli.config.as_deref(), &cli.overrides)?;
    let opts = RunOptions { config, record_timings: cli.record_timings };
    let window = |w: &wifitrace_cli::args::WindowArgs| Window { from: w.from, to: w.to };
    let written = match &cli.command {
        Command::Ingest { paths, store, tolerate_rejects } => {
            let summary = cmd_ingest(paths, store, &opts)?;
            for (path, report) in &summary.reports {
                println!(
                    "{}: user {}: {} new records, {} duplicates, {} rejected",
                    path.display(),
                    report.user_id,
                    report.accepted,
                    report.duplicates,
                    report.rejects.len()
                );
                for r in &report.rejects {
                    eprintln!("{}: SchemaViolation: {r}", path.display());
                }
            }
            println!("{} new records", summary.new_records());
            if summary.rejects() > 0 && !tolerate_rejects {
                return Err(CliError::Domain(format!("{} records rejected", summary.rejects())));
            }
            return Ok(());
        }
        Command::Poi { store, user, window: w, out } => cmd_poi(store, user, window(w), out, &opts)?,
        Command::Neighborhood { store, user, window: w, out } => cmd_neighborhood(store, user, window(w), out, &opts)?,
        Command::Micro { store, users, window: w, eps, out } => cmd_micro(store, users, window(w), eps, out, &opts)?,
        Command::Communities { store, users, window: w, region, threshold, out } => {
            let region = region.as_deref().map(parse_region).transpose()?;
            cmd_communities(store, users, window(w), region, *threshold, out, &opts)?
        }
        Command::Synth { preset, setup, seed, out } => {
            let source = match (preset, setup) {
                (Some(p), _) => SynthSource::Preset(p),
                (None, Some(s)) => SynthSource::SetupFile(s),
                (None, None) => unreachable!("clap requires one of them"),
            };
            cmd_synth(source, *seed, out, &opts)?
        }
    };
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
