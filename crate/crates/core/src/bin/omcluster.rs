use clap::Parser;

use omcluster::cli::{error_line, exit_code, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        // Output cut short by a closed pipe (e.g. `| head`) is not a failure.
        if let omcluster::Error::Io(e) = &err {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                return;
            }
        }
        eprintln!("{}", error_line(&err));
        std::process::exit(exit_code(&err));
    }
}
