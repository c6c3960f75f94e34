use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, Command};

use qndmech::config::RunConfig;
use qndmech::{figures, run, CliResult};

fn cli() -> Command {
    let config_arg = Arg::new("config")
        .long("config")
        .value_name("PATH")
        .help("Sectioned key=value parameter file (built-in defaults if omitted)");
    let out_arg = Arg::new("out")
        .long("out")
        .value_name("DIR")
        .default_value("out")
        .help("Output directory for CSV/SVG files");
    let seed_arg = Arg::new("seed")
        .long("seed")
        .value_name("N")
        .default_value("1")
        .help("Seed for the optimiser's deterministic sampling");

    Command::new("qndmech")
        .about("Pulsed QND interface between two mechanical oscillators: simulation, sweeps, optimisation")
        .subcommand_required(true)
        .subcommand(
            Command::new("figure")
                .about("Reproduce a figure family as CSV curves plus an SVG chart")
                .arg(
                    Arg::new("which")
                        .required(true)
                        .value_parser(["fig2", "fig3", "fig4", "fig5"])
                        .help("Which figure to generate"),
                )
                .arg(config_arg.clone())
                .arg(out_arg.clone())
                .arg(seed_arg.clone()),
        )
        .subcommand(
            Command::new("simulate")
                .about("Single-point run: coefficient table, covariance and entanglement")
                .arg(config_arg.clone())
                .arg(
                    Arg::new("oracle")
                        .long("oracle")
                        .action(ArgAction::SetTrue)
                        .help("Cross-check the model against the time-bin engine"),
                ),
        )
        .subcommand(
            Command::new("optimize")
                .about("Maximise entanglement under a coupling ceiling; persists trace and summary")
                .arg(config_arg.clone())
                .arg(out_arg.clone())
                .arg(seed_arg.clone()),
        )
        .subcommand(
            Command::new("sweep")
                .about("Dense grid evaluation written as one CSV")
                .arg(config_arg)
                .arg(out_arg),
        )
}

fn load_config(path: Option<&String>) -> CliResult<RunConfig> {
    match path {
        Some(p) => RunConfig::load(std::path::Path::new(p)),
        None => RunConfig::parse(""),
    }
}

fn dispatch() -> CliResult<String> {
    let matches = cli().get_matches();
    match matches.subcommand() {
        Some(("figure", sub)) => {
            let cfg = load_config(sub.get_one::<String>("config"))?;
            let out: PathBuf = sub.get_one::<String>("out").unwrap().into();
            let seed: u64 = sub.get_one::<String>("seed").unwrap().parse().unwrap_or(1);
            match sub.get_one::<String>("which").unwrap().as_str() {
                "fig2" => figures::fig2(&cfg, &out),
                "fig3" => figures::fig3(&cfg, &out),
                "fig4" => figures::fig4(&cfg, &out, seed),
                _ => figures::fig5(&cfg, &out),
            }
        }
        Some(("simulate", sub)) => {
            let cfg = load_config(sub.get_one::<String>("config"))?;
            run::cmd_simulate(&cfg, sub.get_flag("oracle"))
        }
        Some(("optimize", sub)) => {
            let cfg = load_config(sub.get_one::<String>("config"))?;
            let out: PathBuf = sub.get_one::<String>("out").unwrap().into();
            let seed: u64 = sub.get_one::<String>("seed").unwrap().parse().unwrap_or(1);
            run::cmd_optimize(&cfg, &out, seed)
        }
        Some(("sweep", sub)) => {
            let cfg = load_config(sub.get_one::<String>("config"))?;
            let out: PathBuf = sub.get_one::<String>("out").unwrap().into();
            run::cmd_sweep(&cfg, &out)
        }
        _ => unreachable!("subcommand is required"),
    }
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
