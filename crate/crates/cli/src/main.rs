use clap::Parser;
use sawtooth_cli::{run, CliError, Command, Format, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Sawtooth-lattice waveguide QED calculations driven by a JSON run configuration.
#[derive(Debug, Parser)]
#[command(name = "sawtooth", version)]
struct Args {
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the config's `output.path`, else stdout as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, env = "SAWTOOTH_THREADS")]
    threads: Option<usize>,
}

fn execute(args: &Args) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    if cfg.command != args.command {
        return Err(CliError::Config(format!(
            "command `{}` does not match the config's `{}`",
            args.command.name(),
            cfg.command.name()
        )));
    }
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let data = run(&cfg)?;
    let out = args.out.clone().or(cfg.output.as_ref().map(|o| o.path.clone()));
    let format = args
        .format
        .or(cfg.output.as_ref().map(|o| o.format))
        .unwrap_or_default();
    match out {
        Some(path) => {
            for p in data.export(&path, format)? {
                log::info!("wrote {}", p.display());
            }
        }
        None => println!("{}", data.to_json()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Config(e.to_string());
            eprintln!("{}", serde_json::to_string(&err.record()).unwrap_or_default());
            return ExitCode::from(2);
        }
    };
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", serde_json::to_string(&err.record()).unwrap_or_default());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
