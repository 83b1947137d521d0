use clap::Parser;

fn main() {
    let cli = qfa_lab::cli::Cli::parse();
    std::process::exit(qfa_lab::cli::execute(cli));
}
