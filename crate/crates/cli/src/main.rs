use clap::Parser;
use matterwave_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = matterwave_cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
