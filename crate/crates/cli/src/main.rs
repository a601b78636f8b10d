use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use darkcool_cli::config::{self, Method, Quantity, ScanConfig};
use darkcool_cli::scan::{self, ScanOutput};
use darkcool_cli::tasks::{self, Summary};
use darkcool_cli::exit;
use toml::{Table, Value};

#[derive(Parser)]
#[command(name = "darkcool", version, about = "Double-dark-state cooling of trapped ions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; stdout when absent. Scans also write a `.meta.toml` sidecar.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    preset: Option<String>,
    /// Override any config key, e.g. `--set omega_a=0.4 --set mcwf.trajectories=50`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Steady state of the full Liouvillian: n_ss and target fidelity.
    Steady(Common),
    /// A± and W from the closed forms or the projected rate equation.
    Rates {
        #[command(flatten)]
        common: Common,
        /// Maximize the numeric cooling rate over (ΩA, ΩB, Δ) instead.
        #[arg(long)]
        optimize: bool,
    },
    /// Master-equation evolution of ⟨n⟩ and the populations.
    Evolve(Common),
    /// Grid scan over up to two parameters.
    Scan(Common),
    /// Quantum-jump trajectories for a chain of 1 to 3 ions.
    Mcwf {
        #[command(flatten)]
        common: Common,
        /// Per-trajectory ⟨n⟩ rows.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Beam angles that satisfy the cancellation condition.
    Geometry(Common),
    /// Discretized continuum: overlap ratio and the Fano zero.
    Fano {
        #[command(flatten)]
        common: Common,
        /// Eigenvalues and overlaps of every continuum state.
        #[arg(long)]
        spectrum: Option<PathBuf>,
    },
    /// Raman beams mapped onto the effective ground-state coupling.
    Effective(Common),
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Config(format!("csv: {e}"))
    }
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<darkcool::Error> for Failure {
    fn from(e: darkcool::Error) -> Self {
        Failure::Numerical(e.to_string())
    }
}

fn load(common: &Common) -> Result<ScanConfig, Failure> {
    let mut table = match &common.config {
        Some(path) => fs::read_to_string(path)?
            .parse::<Table>()
            .map_err(|e| config::ConfigError::Syntax(e.message().to_string()))?,
        None => Table::new(),
    };
    if let Some(p) = &common.preset {
        table.insert("preset".into(), Value::String(p.clone()));
    }
    if let Some(n) = common.threads {
        table.insert("threads".into(), Value::Integer(n as i64));
    }
    if let Some(s) = common.seed {
        let s = i64::try_from(s).map_err(|_| Failure::Config("seed must fit in 63 bits".into()))?;
        table.insert("seed".into(), Value::Integer(s));
    }
    if let Some(out) = &common.out {
        table.insert("output".into(), Value::String(out.display().to_string()));
    }
    for assignment in &common.set {
        config::set_key(&mut table, assignment)?;
    }
    Ok(config::from_table(&table)?)
}

/// Writes to the configured output or stdout.
fn emit(cfg: &ScanConfig, write: impl FnOnce(&mut dyn Write) -> Result<(), Failure>) -> Result<(), Failure> {
    match &cfg.output {
        Some(path) => {
            let mut f = io::BufWriter::new(fs::File::create(path)?);
            write(&mut f)?;
            f.flush()?;
        }
        None => write(&mut io::stdout().lock())?,
    }
    Ok(())
}

fn sidecar(cfg: &ScanConfig, subcommand: &str, run: Table) -> Result<(), Failure> {
    if let Some(path) = &cfg.output {
        fs::write(scan::sidecar_path(path), scan::meta_document(cfg, subcommand, run))?;
    }
    Ok(())
}

fn emit_scan(cfg: &ScanConfig, name: &str, out: &ScanOutput) -> Result<(), Failure> {
    emit(cfg, |w| Ok(out.write_csv(w)?))?;
    sidecar(cfg, name, scan::scan_summary(out))?;
    if out.all_failed() {
        let first = out.rows[0].error.clone().unwrap_or_default();
        return Err(Failure::Numerical(format!("every point failed; first error: {first}")));
    }
    Ok(())
}

fn emit_summary(cfg: &ScanConfig, name: &str, s: &Summary) -> Result<(), Failure> {
    emit(cfg, |w| Ok(s.write_csv(w)?))?;
    sidecar(cfg, name, Table::new())
}

fn write_file(path: &Path, f: impl FnOnce(fs::File) -> csv::Result<()>) -> Result<(), Failure> {
    Ok(f(fs::File::create(path)?)?)
}

fn single_point(mut cfg: ScanConfig, quantities: Vec<Quantity>) -> ScanConfig {
    cfg.axes.clear();
    cfg.quantities = quantities;
    cfg
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Steady(common) => {
            let cfg = single_point(load(&common)?, vec![Quantity::NSs, Quantity::Fidelity]);
            let cfg = ScanConfig { method: Method::Liouvillian, ..cfg };
            emit_scan(&cfg, "steady", &scan::run_scan(&cfg))
        }
        Command::Rates { common, optimize } => {
            let cfg = load(&common)?;
            if optimize {
                return emit_summary(&cfg, "rates", &tasks::run_optimizer(&cfg)?);
            }
            let mut cfg = single_point(cfg, vec![Quantity::APlus, Quantity::AMinus, Quantity::W, Quantity::NSs]);
            if cfg.method == Method::Liouvillian {
                cfg.method = Method::ClosedForm;
            }
            emit_scan(&cfg, "rates", &scan::run_scan(&cfg))
        }
        Command::Evolve(common) => {
            let cfg = load(&common)?;
            let points = tasks::run_evolve(&cfg)?;
            emit(&cfg, |w| Ok(tasks::write_evolution(&points, w)?))?;
            sidecar(&cfg, "evolve", Table::new())
        }
        Command::Scan(common) => {
            let cfg = load(&common)?;
            emit_scan(&cfg, "scan", &scan::run_scan(&cfg))
        }
        Command::Mcwf { common, records } => {
            let cfg = load(&common)?;
            let result = tasks::run_mcwf(&cfg)?;
            emit(&cfg, |w| Ok(result.write_average(w)?))?;
            if let Some(path) = records {
                write_file(&path, |f| result.write_records(f))?;
            }
            let mut run = Table::new();
            run.insert("dimension".into(), Value::Integer(result.dimension as i64));
            run.insert("trajectories".into(), Value::Integer(result.records.len() as i64));
            sidecar(&cfg, "mcwf", run)
        }
        Command::Geometry(common) => {
            let cfg = load(&common)?;
            emit_summary(&cfg, "geometry", &tasks::run_geometry(&cfg)?)
        }
        Command::Fano { common, spectrum } => {
            let cfg = load(&common)?;
            let (summary, _, spec) = tasks::run_fano(&cfg)?;
            if let Some(path) = spectrum {
                write_file(&path, |f| tasks::write_spectrum(&spec, f))?;
            }
            emit_summary(&cfg, "fano", &summary)
        }
        Command::Effective(common) => {
            let cfg = load(&common)?;
            emit_summary(&cfg, "effective", &tasks::run_effective(&cfg)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(exit::CONFIG as u8)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(exit::NUMERICAL as u8)
        }
    }
}
