use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relfluid_cli::config::{parse_config, Mode, ScenarioConfig};
use relfluid_cli::{run, studies, CliError};

#[derive(Parser)]
#[command(
    name = "relfluid",
    version,
    about = "Relativistic Euler simulator and verification harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Planar stream-function run.
    Run2d(Common),
    /// Barotropic or general 3D run.
    Run3d(Common),
    /// Bracket antisymmetry, Casimir and equation-of-motion checks.
    BracketCheck(Common),
    /// Sweep of the speed of light against γ ≡ 1.
    LimitStudy(Common),
    /// General-mode run with the helicity and enstrophy budget report.
    Baroclinic(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides the seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the numeric kernels.
    #[arg(long)]
    threads: Option<usize>,
}

fn load(args: &Common, allowed: &[Mode]) -> Result<(ScenarioConfig, PathBuf), CliError> {
    let mut cfg = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        cfg = cfg.validated()?;
    }
    if !allowed.contains(&cfg.mode) {
        return Err(CliError::Validation(vec![format!(
            "mode {:?} does not belong to this subcommand (expected one of {allowed:?})",
            cfg.mode
        )]));
    }
    let out = args
        .output
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("relfluid-out"));
    Ok((cfg, out))
}

fn simulate(cfg: &ScenarioConfig, out: &Path) -> Result<(), CliError> {
    let traj = run::run(cfg, out)?;
    println!(
        "{} steps to t = {}, output in {}",
        traj.steps,
        traj.t,
        out.display()
    );
    match traj.error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Run2d(args) => {
            let (cfg, out) = load(args, &[Mode::Run2d])?;
            simulate(&cfg, &out)
        }
        Command::Run3d(args) => {
            let (cfg, out) = load(args, &[Mode::Run3dBarotropic, Mode::Run3dGeneral])?;
            simulate(&cfg, &out)
        }
        Command::BracketCheck(args) => {
            let (cfg, out) = load(args, &[Mode::BracketCheck])?;
            let report = studies::bracket_check(&cfg)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("config.toml"), cfg.to_toml())?;
            std::fs::write(out.join("bracket_check.csv"), report.to_csv())?;
            print!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::CheckFailed("bracket checks".into()))
            }
        }
        Command::LimitStudy(args) => {
            let (cfg, out) = load(args, &[Mode::LimitStudy])?;
            let study = studies::limit_study(&cfg)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("config.toml"), cfg.to_toml())?;
            std::fs::write(out.join("limit_study.csv"), study.to_csv())?;
            for (c, d) in study.c_values.iter().zip(&study.differences) {
                println!("c = {c:e}: |Psi_c - Psi_classical|_2 = {d:e}");
            }
            for (observed, expected) in study.ratios() {
                println!("ratio {observed:.4} (c^-2 scaling predicts {expected:.4})");
            }
            Ok(())
        }
        Command::Baroclinic(args) => {
            let (cfg, out) = load(args, &[Mode::Baroclinic])?;
            let (traj, report) = studies::baroclinic(&cfg, &out)?;
            if let Some(e) = traj.error {
                return Err(e);
            }
            print!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::CheckFailed("budget closure".into()))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::Run2d(a)
        | Command::Run3d(a)
        | Command::BracketCheck(a)
        | Command::LimitStudy(a)
        | Command::Baroclinic(a) => a.threads,
    };
    let result = match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli.command)),
            Err(e) => Err(CliError::Validation(vec![format!("--threads {n}: {e}")])),
        },
        None => execute(&cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
