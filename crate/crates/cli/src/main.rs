use clap::Parser;
use nonloc_cli::{run, Cli, Exit};

fn main() {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let code = match run(&cli, &mut stdout) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            Exit::Error
        }
    };
    std::process::exit(code as i32);
}
