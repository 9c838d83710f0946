use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hdlt_loadtest::{apdex_score, probe, read_samples, render_report, run_load, write_samples, Format, LoadConfig};

#[derive(Parser)]
#[command(name = "loadtest", about = "Load the gateway and score responses with APDEX")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run virtual users against a gateway and write samples as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a sample file.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = hdlt_loadtest::DEFAULT_T_MS)]
        t: u64,
        #[arg(long, default_value_t = hdlt_loadtest::DEFAULT_F_MS)]
        f: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("loadtest: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.cmd {
        Cmd::Run { config, out } => {
            let config: LoadConfig = serde_json::from_reader(File::open(&config)?)?;
            let rt = tokio::runtime::Runtime::new()?;
            let samples = rt.block_on(async {
                probe(&config.target_base_url).await?;
                run_load(&config).await
            })?;
            write_samples(File::create(&out)?, &samples)?;
            eprintln!("{} samples written to {}", samples.len(), out.display());
        }
        Cmd::Report { input, t, f, format } => {
            let samples = read_samples(File::open(&input)?)?;
            print!("{}", render_report(&apdex_score(&samples, t, f)?, format));
        }
    }
    Ok(())
}
