use clap::Parser;
use cyclecast_bench::cli::{error_line, run, Cli};

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    if let Err(e) = run(&cli) {
        eprintln!("{}", error_line(cli.command.name(), &e));
        std::process::exit(1);
    }
}
