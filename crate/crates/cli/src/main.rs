use clap::Parser;

fn main() {
    let cli = cbrml_cli::Cli::parse();
    if let Err(e) = cbrml_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
