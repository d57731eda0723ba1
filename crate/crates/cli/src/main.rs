use clap::Parser;

use ltlnav_cli::{run, Cli, EXIT_OK, EXIT_OTHER};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { EXIT_OTHER } else { EXIT_OK });
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
        }
        Err(e) => {
            log::debug!("exit code {}", e.code);
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}
