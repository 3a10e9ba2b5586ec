use clap::Parser;
use ltebounds_cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Exit code 2 is reserved for an empty identified set.
            std::process::exit(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let code = run(&cli, &mut std::io::stdout().lock());
    std::process::exit(code);
}
