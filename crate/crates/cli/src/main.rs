use clap::Parser;

fn main() {
    let cli = procmat_cli::Cli::parse();
    if let Err(e) = procmat_cli::run(cli) {
        eprintln!("procmat: {e}");
        std::process::exit(e.exit_code());
    }
}
