use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = riomark_cli::Cli::parse();
    if let Err(err) = riomark_cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(riomark_cli::exit_code(&err));
    }
}
