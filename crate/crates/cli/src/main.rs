//! `dyncc`: run rate experiments, dump schedules, verify dumps.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dyncc_core::experiment::{
    self, csv_string, parse_beamformer, parse_eta_hat, parse_mode, parse_snr_grid, run_experiment, ScenarioConfig,
};
use dyncc_core::{DeliveryMode, Error, EtaHatPolicy};

#[derive(Parser)]
#[command(
    name = "dyncc",
    version,
    about = "Coded caching delivery for dynamic multi-antenna networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, verify and simulate; writes rates.csv and schedule dumps.
    Run(RunArgs),
    /// Check a schedule dump against a scenario config.
    Verify { dump: PathBuf, config: PathBuf },
    /// Print the delivery schedule of a scenario.
    DumpSchedule {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a scenario as a config file, for editing or for `verify`.
    DumpConfig {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Built-in scenario: uniform, scenario1, scenario2, scenario3.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Scenario config file (flat TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// `max`, a fixed value, or (for `run`) a comma-separated list.
    #[arg(long)]
    eta_hat: Option<String>,
    /// `cc` or `unicast-only`.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// `zf` or `maxmin`.
    #[arg(long)]
    beamformer: Option<String>,
    /// SNR grid in dB, `start:stop:step`.
    #[arg(long)]
    snr: Option<String>,
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also simulate the unicast-only baseline.
    #[arg(long)]
    baseline: bool,
    /// Output root; results go to `<out>/<scenario>_seed<seed>/`.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Verification(_) | Error::Parse { .. } => 1,
        Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::UnsupportedRegime(_) | Error::Io(_) => 2,
        _ => 1,
    }
}

/// The scenario plus every eta_hat setting requested on the command line.
fn load_scenario(args: &ScenarioArgs) -> Result<(ScenarioConfig, Vec<EtaHatPolicy>), Error> {
    let mut cfg = match (&args.preset, &args.config) {
        (_, Some(path)) => ScenarioConfig::load(path)?,
        (Some(name), None) => experiment::preset(name)?,
        (None, None) => return Err(Error::InvalidConfig("give --preset or --config".into())),
    };
    if let Some(mode) = &args.mode {
        cfg.mode = parse_mode(mode)?;
    }
    let etas = match &args.eta_hat {
        Some(list) => list.split(',').map(parse_eta_hat).collect::<Result<Vec<_>, _>>()?,
        None => vec![cfg.eta_hat],
    };
    cfg.eta_hat = etas[0];
    Ok((cfg, etas))
}

fn eta_label(cfg: &ScenarioConfig, eta: Option<u32>) -> String {
    match (cfg.mode, eta) {
        (DeliveryMode::UnicastOnly, _) | (_, None) => "unicast".into(),
        (_, Some(e)) => format!("eta{e}"),
    }
}

fn run(args: RunArgs) -> Result<(), Error> {
    let (mut cfg, etas) = load_scenario(&args.scenario)?;
    if let Some(b) = &args.beamformer {
        cfg.beamformer = parse_beamformer(b)?;
    }
    if let Some(snr) = &args.snr {
        cfg.snr_db = parse_snr_grid(snr)?;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }

    let mut settings: Vec<ScenarioConfig> = etas
        .iter()
        .map(|&eta_hat| ScenarioConfig { eta_hat, ..cfg.clone() })
        .collect();
    if args.baseline && cfg.mode == DeliveryMode::CodedCaching {
        settings.push(ScenarioConfig {
            mode: DeliveryMode::UnicastOnly,
            ..cfg.clone()
        });
    }

    let dir = cfg.run_dir(&args.out);
    fs::create_dir_all(&dir)?;
    let mut curves = Vec::new();
    for setting in &settings {
        let output = match run_experiment(setting) {
            Ok(o) => o,
            Err(Error::Verification(report)) => {
                eprintln!(
                    "verification failed for {} ({:?}):\n{report}",
                    setting.name, setting.eta_hat
                );
                return Err(Error::Verification(report));
            }
            Err(e) => return Err(e),
        };
        let label = eta_label(setting, output.curve.eta_hat);
        // each dump gets the config that verifies it
        fs::write(dir.join(format!("config_{label}.toml")), setting.to_toml())?;
        fs::write(dir.join(format!("schedule_{label}.txt")), output.schedule.dump())?;
        fs::write(dir.join(format!("verification_{label}.txt")), output.report.to_string())?;
        eprintln!(
            "{} {label}: {} transmissions verified, {} trials",
            setting.name,
            output.schedule.len(),
            setting.trials
        );
        curves.push(output.curve);
    }
    let csv = csv_string(&curves);
    fs::write(dir.join("rates.csv"), &csv)?;
    print!("{csv}");
    eprintln!("wrote {}", dir.display());
    Ok(())
}

fn verify(dump: &Path, config: &Path) -> Result<(), Error> {
    let cfg = ScenarioConfig::load(config)?;
    let text =
        fs::read_to_string(dump).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", dump.display())))?;
    let report = experiment::verify_dump(&text, &cfg)?;
    print!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Error::Verification(format!("{} violations", report.violation_count())))
    }
}

fn dump_schedule(args: &ScenarioArgs, out: Option<&Path>) -> Result<(), Error> {
    let (cfg, etas) = load_scenario(args)?;
    if etas.len() != 1 {
        return Err(Error::InvalidConfig("dump-schedule takes a single eta_hat".into()));
    }
    let dump = experiment::build_verified(&cfg)?.schedule.dump();
    match out {
        Some(path) => fs::write(path, dump)?,
        None => print!("{dump}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Verify { dump, config } => verify(&dump, &config),
        Command::DumpSchedule { scenario, out } => dump_schedule(&scenario, out.as_deref()),
        Command::DumpConfig { scenario } => load_scenario(&scenario).and_then(|(cfg, etas)| {
            if etas.len() != 1 {
                return Err(Error::InvalidConfig("dump-config takes a single eta_hat".into()));
            }
            print!("{}", cfg.to_toml());
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
