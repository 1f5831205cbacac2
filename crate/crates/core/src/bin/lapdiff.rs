use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lapdiff::config::{self, Overrides, SEED_ENV};
use lapdiff::output::{self, prepare_dir};
use lapdiff::simulator::{run_scenario, run_sweep, timing_report};
use lapdiff::{Error, ScenarioConfig};

#[derive(Parser)]
#[command(name = "lapdiff", version, about = "Graph-Laplacian cooperative vehicle localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write ground-truth trajectories as a `t,vehicle_id,x,y` CSV.
    Generate(Common),
    /// Run one scenario and write its metrics.
    Run(Common),
    /// Run one scenario per value of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary, e.g. n, n_max, range_noise, delay_mode.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (generate) or directory (run, sweep).
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated subset of cll,gllms,gllme,glcg.
    #[arg(long)]
    algorithms: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overwrite existing output.
    #[arg(long)]
    force: bool,
}

impl Common {
    fn scenario(&self) -> Result<ScenarioConfig, Error> {
        let base = match &self.config {
            Some(path) => config::load_config(path)?,
            None => ScenarioConfig::default(),
        };
        let flags = Overrides {
            seed: self.seed,
            algorithms: self.algorithms.as_deref().map(config::parse_algorithms).transpose()?,
        };
        let env_seed = std::env::var(SEED_ENV).ok();
        config::apply_overrides(base, env_seed.as_deref(), &flags)
    }
}

fn generate(common: &Common) -> Result<(), Error> {
    let cfg = common.scenario()?;
    let out = &common.out;
    if out.exists() && !common.force {
        return Err(Error::Config(format!("{} exists; pass --force to overwrite", out.display())));
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    let set = cfg.load_trajectories()?;
    let file = std::fs::File::create(out).map_err(|e| io_error(out, e))?;
    set.write_csv(std::io::BufWriter::new(file))
        .map_err(|e| Error::Config(format!("{}: {e}", out.display())))?;
    eprintln!(
        "wrote {} vehicles x {} steps to {}",
        set.vehicle_count(),
        set.horizon(),
        out.display()
    );
    Ok(())
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

fn run(common: &Common) -> Result<(), Error> {
    let cfg = common.scenario()?;
    prepare_dir(&common.out, common.force)?;
    let record = run_scenario(&cfg)?;
    output::write_run(&common.out, &cfg, &record, true)?;
    for m in &record.methods {
        eprintln!("{:<6} reduction {:>7.2}%", m.name(), 100.0 * record.reduction[m]);
    }
    eprint!("{}", timing_report(&record));
    Ok(())
}

fn sweep(common: &Common, axis: &str, values: &[String]) -> Result<(), Error> {
    let cfg = common.scenario()?;
    prepare_dir(&common.out, common.force)?;
    let runs = run_sweep(&cfg, axis, values)?;
    let dirs = output::write_sweep(&common.out, axis, values, &runs, true)?;
    eprintln!("wrote {} runs under {}", dirs.len(), common.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(common) => generate(common),
        Command::Run(common) => run(common),
        Command::Sweep { common, axis, values } => sweep(common, axis, values),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
