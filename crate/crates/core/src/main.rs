use clap::Parser;

use stratshift::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = run(&cli, &mut std::io::stdout().lock());
    std::process::exit(code);
}
