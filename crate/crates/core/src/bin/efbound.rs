use clap::Parser;

fn main() {
    let cli = efbound::cli::Cli::parse();
    std::process::exit(efbound::cli::run(cli));
}
