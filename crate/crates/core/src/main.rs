use clap::Parser;

use wesd::cli::{exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    if let Err(e) = run(cli, &mut stdout.lock()) {
        eprintln!("error: {}: {e}", e.name());
        std::process::exit(exit_code(&e));
    }
}
