use clap::Parser;

fn main() {
    let cli = brody_density::cli::Cli::parse();
    std::process::exit(brody_density::cli::run(cli));
}
