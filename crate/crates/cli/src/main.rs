//! henon: radial ground states of -Δu = |x|^α F(u), their weighted spectra,
//! Morse indices and bifurcation diagnostics, from the command line.

use henon_cli::args;
use henon_cli::cache;
use henon_cli::run::{self, Outcome, RunError};

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    if argv.iter().any(|a| a == "--help" || a == "-h") || argv.is_empty() {
        eprint!("{}", args::USAGE);
        std::process::exit(if argv.is_empty() { 1 } else { 0 });
    }
    let cfg = match args::parse(&argv) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("henon: {e}");
            eprint!("{}", args::USAGE);
            std::process::exit(1);
        }
    };
    match run::run(&cfg) {
        Ok(Outcome::Done { bytes, summary, out }) => {
            match out {
                Some(path) => {
                    if let Err(e) = cache::write_atomic(std::path::Path::new(&path), &bytes) {
                        eprintln!("henon: cannot write {path}: {e}");
                        std::process::exit(3);
                    }
                }
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&bytes).expect("stdout");
                }
            }
            eprintln!("{summary}");
        }
        Err(RunError::Usage(e)) => {
            eprintln!("henon: {e}");
            std::process::exit(1);
        }
        Err(RunError::Core(e)) => {
            eprintln!("henon: {e}");
            std::process::exit(if e.is_domain() { 2 } else { 3 });
        }
        Err(RunError::Io(e)) => {
            eprintln!("henon: io error: {e}");
            std::process::exit(3);
        }
    }
}
