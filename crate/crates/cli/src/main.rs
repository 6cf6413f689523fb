use clap::Parser;
use smfft_cli::config::SEED_ENV;
use smfft_cli::{commands, Cli, RunConfig};

fn main() {
    let cli = Cli::parse();
    let result = RunConfig::from_cli(cli, std::env::var(SEED_ENV).ok()).and_then(|cfg| commands::run(&cfg));
    if let Err(err) = result {
        eprintln!("smfft: {err}");
        std::process::exit(err.exit_code());
    }
}
