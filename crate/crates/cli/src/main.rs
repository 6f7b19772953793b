use clap::Parser;

fn main() {
    let cli = mnlqr_cli::Cli::parse();
    std::process::exit(mnlqr_cli::execute(&cli));
}
