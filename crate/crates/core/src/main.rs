use clap::Parser;

fn main() {
    std::process::exit(argstab::cli::run(argstab::cli::Cli::parse()));
}
