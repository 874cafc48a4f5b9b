use clap::Parser;

use levyliq::cli::{execute, init_threads, Cli};

fn main() {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| execute(&cli));
    match result {
        Ok(csv) => print!("{csv}"),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
