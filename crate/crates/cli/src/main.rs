use clap::{CommandFactory, Parser};

use reviewscope_cli::{run, usage_problem, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(problem) = usage_problem(&cli) {
        Cli::command()
            .error(clap::error::ErrorKind::MissingRequiredArgument, problem)
            .exit();
    }
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
