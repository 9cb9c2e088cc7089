use clap::Parser;

fn main() {
    let cli = tomobench::cli::Cli::parse();
    if let Err(e) = tomobench::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
