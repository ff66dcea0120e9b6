use clap::Parser;

fn main() {
    std::process::exit(oswr::cli::run(oswr::cli::Cli::parse()));
}
