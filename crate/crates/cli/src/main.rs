use clap::Parser;

fn main() {
    let cli = gmnash_cli::Cli::parse();
    if let Err(e) = gmnash_cli::run(cli) {
        eprintln!("gmnash: {e}");
        std::process::exit(e.exit_code());
    }
}
