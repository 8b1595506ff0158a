use clap::Parser;

fn main() {
    let cli = bladefdi_cli::Cli::parse();
    if let Err(e) = bladefdi_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
