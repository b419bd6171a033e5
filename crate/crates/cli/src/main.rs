use std::io::Write;

use clap::Parser;
use qfi_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not an error worth reporting
            let _ = stdout.write_all(out.text.as_bytes()).and_then(|_| stdout.flush());
            out.code
        }
        Err(e) => {
            eprintln!("qfi: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
