use clap::Parser;

fn main() {
    let cli = lobmarl::cli::Cli::parse();
    if let Err(e) = lobmarl::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
