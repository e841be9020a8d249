use clap::Parser;

fn main() {
    let cli = gapforge_cli::Cli::parse();
    std::process::exit(gapforge_cli::main_with(&cli));
}
