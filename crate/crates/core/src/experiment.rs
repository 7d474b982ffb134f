//! Scenario configs, presets, the verified-then-simulate pipeline and CSV output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::elevation::ExclusionPolicy;
use crate::error::{Error, Result};
use crate::oracle::{self, VerificationReport};
use crate::phy::{summarize, symmetric_rate, Beamformer, LinkModel, LinkSchedule, RateStat};
use crate::pipeline::{
    build_schedule, oracle_context, oracle_per_packet, verify_schedule, EtaHatPolicy, PipelineOptions,
};
use crate::schedule::{DeliveryMode, DeliverySchedule};
use crate::scheme::{assign_profiles, parse_cache_ratio, AssignmentPolicy, NetworkConfig, ProfileAssignment};

pub const PRESETS: [&str; 4] = ["uniform", "scenario1", "scenario2", "scenario3"];

pub const CSV_HEADER: &str = "scenario,eta_hat,mode,snr_db,mean_rate_nats,stderr,trials,seed";

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub network: NetworkConfig,
    pub assignment: AssignmentPolicy,
    pub eta_hat: EtaHatPolicy,
    pub exclusion: ExclusionPolicy,
    pub beamformer: Beamformer,
    pub mode: DeliveryMode,
    pub snr_db: Vec<f64>,
    pub trials: u32,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            mode: self.mode,
            eta_hat: self.eta_hat,
            exclusion: self.exclusion,
        }
    }

    pub fn profile_assignment(&self) -> Result<ProfileAssignment> {
        assign_profiles(self.network.num_users, self.network.profile_count, &self.assignment)
    }

    pub fn link_model(&self) -> LinkModel {
        LinkModel::new(self.network.num_tx_antennas as usize, self.beamformer)
    }

    /// Output directory for this run under `root`.
    pub fn run_dir(&self, root: &Path) -> PathBuf {
        root.join(format!("{}_seed{}", self.name, self.seed))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))?;
        raw.into_config()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Flat key-value rendering that [`ScenarioConfig::from_toml`] reads back.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let n = &self.network;
        let _ = writeln!(s, "name = \"{}\"", self.name);
        let _ = writeln!(s, "num_users = {}", n.num_users);
        let _ = writeln!(s, "library_size = {}", n.library_size);
        let _ = writeln!(s, "file_size = {:?}", n.file_size);
        let _ = writeln!(s, "cache_ratio = \"{}\"", n.cache_ratio);
        let _ = writeln!(s, "spatial_dof = {}", n.spatial_dof);
        let _ = writeln!(s, "num_tx_antennas = {}", n.num_tx_antennas);
        match &self.assignment {
            AssignmentPolicy::RoundRobin => {
                let _ = writeln!(s, "assignment = \"round-robin\"");
            }
            AssignmentPolicy::SeededUniform(seed) => {
                let _ = writeln!(s, "assignment = \"seeded-uniform\"");
                let _ = writeln!(s, "assignment_seed = {seed}");
            }
            AssignmentPolicy::Explicit(eta) => {
                let list: Vec<String> = eta.iter().map(u32::to_string).collect();
                let _ = writeln!(s, "eta = [{}]", list.join(", "));
            }
        }
        match self.eta_hat {
            EtaHatPolicy::MaxLength => {
                let _ = writeln!(s, "eta_hat = \"max\"");
            }
            EtaHatPolicy::Fixed(v) => {
                let _ = writeln!(s, "eta_hat = {v}");
            }
        }
        match self.exclusion {
            ExclusionPolicy::HighestIndexed => {
                let _ = writeln!(s, "exclusion = \"highest\"");
            }
            ExclusionPolicy::SeededRandom(seed) => {
                let _ = writeln!(s, "exclusion = \"random\"");
                let _ = writeln!(s, "exclusion_seed = {seed}");
            }
        }
        let _ = writeln!(s, "beamformer = \"{}\"", self.beamformer.as_str());
        let _ = writeln!(s, "mode = \"{}\"", self.mode.as_str());
        let grid: Vec<String> = self.snr_db.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(s, "snr_db = [{}]", grid.join(", "));
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum EtaHatField {
    Fixed(u32),
    Named(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SnrField {
    Grid(String),
    List(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    preset: Option<String>,
    num_users: Option<u32>,
    library_size: Option<u32>,
    file_size: Option<f64>,
    cache_ratio: Option<String>,
    spatial_dof: Option<u32>,
    num_tx_antennas: Option<u32>,
    eta: Option<Vec<u32>>,
    assignment: Option<String>,
    assignment_seed: Option<u64>,
    eta_hat: Option<EtaHatField>,
    exclusion: Option<String>,
    exclusion_seed: Option<u64>,
    beamformer: Option<String>,
    mode: Option<String>,
    snr_db: Option<SnrField>,
    trials: Option<u32>,
    seed: Option<u64>,
}

impl RawConfig {
    /// Missing keys fall back to the named preset, or to the uniform preset.
    fn into_config(self) -> Result<ScenarioConfig> {
        let base = preset(self.preset.as_deref().unwrap_or("uniform"))?;
        let n = &base.network;
        let cache_ratio = match &self.cache_ratio {
            Some(text) => parse_cache_ratio(text)?,
            None => n.cache_ratio,
        };
        let network = NetworkConfig::new(
            self.num_users.unwrap_or(n.num_users),
            self.library_size.unwrap_or(n.library_size),
            self.file_size.unwrap_or(n.file_size),
            cache_ratio,
            self.spatial_dof.unwrap_or(n.spatial_dof),
            self.num_tx_antennas.unwrap_or(n.num_tx_antennas),
        )?;
        let assignment = match (self.eta, self.assignment.as_deref()) {
            (Some(eta), None | Some("explicit")) => AssignmentPolicy::Explicit(eta),
            (Some(_), Some(other)) => {
                return Err(Error::InvalidConfig(format!(
                    "`eta` given together with assignment \"{other}\""
                )))
            }
            (None, Some("round-robin")) => AssignmentPolicy::RoundRobin,
            (None, Some("seeded-uniform")) => AssignmentPolicy::SeededUniform(self.assignment_seed.unwrap_or(0)),
            (None, Some("explicit")) => return Err(Error::InvalidConfig("explicit assignment needs `eta`".into())),
            (None, Some(other)) => return Err(Error::InvalidConfig(format!("unknown assignment policy \"{other}\""))),
            (None, None) => base.assignment,
        };
        let eta_hat = match self.eta_hat {
            None => base.eta_hat,
            Some(EtaHatField::Fixed(v)) => EtaHatPolicy::Fixed(v),
            Some(EtaHatField::Named(s)) => parse_eta_hat(&s)?,
        };
        let exclusion = match self.exclusion.as_deref() {
            None | Some("highest") => ExclusionPolicy::HighestIndexed,
            Some("random") => ExclusionPolicy::SeededRandom(self.exclusion_seed.unwrap_or(0)),
            Some(other) => return Err(Error::InvalidConfig(format!("unknown exclusion policy \"{other}\""))),
        };
        let snr_db = match self.snr_db {
            None => base.snr_db,
            Some(SnrField::Grid(g)) => parse_snr_grid(&g)?,
            Some(SnrField::List(v)) => v,
        };
        let cfg = ScenarioConfig {
            name: self.name.or(self.preset).unwrap_or(base.name),
            network,
            assignment,
            eta_hat,
            exclusion,
            beamformer: match self.beamformer {
                Some(s) => parse_beamformer(&s)?,
                None => base.beamformer,
            },
            mode: match self.mode {
                Some(s) => parse_mode(&s)?,
                None => base.mode,
            },
            snr_db,
            trials: self.trials.unwrap_or(base.trials),
            seed: self.seed.unwrap_or(base.seed),
        };
        cfg.profile_assignment()?;
        Ok(cfg)
    }
}

pub fn parse_eta_hat(text: &str) -> Result<EtaHatPolicy> {
    match text.trim() {
        "max" => Ok(EtaHatPolicy::MaxLength),
        other => other
            .parse::<u32>()
            .ok()
            .filter(|&v| v > 0)
            .map(EtaHatPolicy::Fixed)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "eta_hat must be \"max\" or a positive integer, got \"{other}\""
                ))
            }),
    }
}

pub fn parse_beamformer(text: &str) -> Result<Beamformer> {
    match text.trim() {
        "zf" => Ok(Beamformer::ZeroForcing),
        "maxmin" => Ok(Beamformer::MaxMin),
        other => Err(Error::InvalidConfig(format!(
            "unknown beamformer \"{other}\" (zf | maxmin)"
        ))),
    }
}

pub fn parse_mode(text: &str) -> Result<DeliveryMode> {
    match text.trim() {
        "cc" => Ok(DeliveryMode::CodedCaching),
        "unicast-only" => Ok(DeliveryMode::UnicastOnly),
        other => Err(Error::InvalidConfig(format!(
            "unknown mode \"{other}\" (cc | unicast-only)"
        ))),
    }
}

/// `start:stop:step` in dB, inclusive of `stop`; a bare number is a one-point grid.
pub fn parse_snr_grid(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("bad SNR grid \"{text}\" (expected start:stop:step)"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    if parts.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    match parts[..] {
        [single] => Ok(vec![single]),
        [start, stop, step] if step > 0.0 && stop >= start => {
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        [start, stop, _] if stop < start => Ok(Vec::new()),
        _ => Err(bad()),
    }
}

/// Profile lengths of the non-uniform scenarios.
pub fn preset_lengths(name: &str) -> Option<[u32; 10]> {
    match name {
        "uniform" => Some([5; 10]),
        "scenario1" => Some([5, 4, 5, 5, 4, 3, 6, 6, 5, 7]),
        "scenario2" => Some([9, 3, 1, 4, 5, 7, 2, 6, 5, 8]),
        "scenario3" => Some([8, 3, 8, 0, 4, 10, 7, 4, 0, 6]),
        _ => None,
    }
}

/// 50 users, cache ratio 1/10, spatial DoF 10, 12 antennas.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let eta = preset_lengths(name)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown preset \"{name}\" (one of {})", PRESETS.join(", "))))?;
    let network = NetworkConfig::new(50, 50, 1.0, parse_cache_ratio("1/10")?, 10, 12)?;
    Ok(ScenarioConfig {
        name: name.to_string(),
        network,
        assignment: AssignmentPolicy::Explicit(eta.to_vec()),
        eta_hat: EtaHatPolicy::MaxLength,
        exclusion: ExclusionPolicy::HighestIndexed,
        beamformer: Beamformer::MaxMin,
        mode: DeliveryMode::CodedCaching,
        snr_db: parse_snr_grid("0:30:5")?,
        trials: 500,
        seed: 42,
    })
}

/// Mean rate per SNR point for one (scenario, eta_hat, mode) setting.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    pub scenario: String,
    /// Resolved value; `None` for unicast-only runs.
    pub eta_hat: Option<u32>,
    pub mode: DeliveryMode,
    pub seed: u64,
    pub points: Vec<RateStat>,
}

impl RateCurve {
    pub fn at(&self, snr_db: f64) -> Option<&RateStat> {
        self.points.iter().find(|p| (p.snr_db - snr_db).abs() < 1e-9)
    }
}

/// A verified schedule, ready for the link model.
#[derive(Debug, Clone)]
pub struct VerifiedSchedule {
    pub schedule: DeliverySchedule,
    pub report: VerificationReport,
}

/// Builds the schedule and runs the oracle over its dump. Fails with
/// [`Error::Verification`] if the oracle finds anything.
pub fn build_verified(cfg: &ScenarioConfig) -> Result<VerifiedSchedule> {
    let assignment = cfg.profile_assignment()?;
    let opts = cfg.pipeline_options();
    let built = build_schedule(&cfg.network, &assignment, &opts)?;
    let report = verify_schedule(&built.schedule, &cfg.network, &assignment, &opts)?;
    if !report.passed() {
        return Err(Error::Verification(report.to_string()));
    }
    Ok(VerifiedSchedule {
        schedule: built.schedule,
        report,
    })
}

/// Re-checks a schedule dump produced elsewhere against a config.
pub fn verify_dump(dump: &str, cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let assignment = cfg.profile_assignment()?;
    let parsed = oracle::parse_dump(dump)?;
    let ctx = oracle_context(&cfg.network, &assignment);
    let users: Vec<u32> = assignment.iter().map(|(u, _)| u).collect();
    let per_packet = oracle_per_packet(&cfg.network, &assignment, &cfg.pipeline_options());
    Ok(oracle::verify(&parsed, &ctx, &users, per_packet))
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub curve: RateCurve,
    pub schedule: DeliverySchedule,
    pub report: VerificationReport,
}

/// Verification gate, then Monte-Carlo trials over the SNR grid.
pub fn run_experiment(cfg: &ScenarioConfig) -> Result<ExperimentOutput> {
    let verified = build_verified(cfg)?;
    let assignment = cfg.profile_assignment()?;
    let link = LinkSchedule::compile(&verified.schedule, &assignment, cfg.network.file_size)?;
    let samples = symmetric_rate(&link, &cfg.link_model(), &cfg.snr_db, cfg.trials, cfg.seed)?;
    Ok(ExperimentOutput {
        curve: RateCurve {
            scenario: cfg.name.clone(),
            eta_hat: verified.schedule.params.eta_hat,
            mode: cfg.mode,
            seed: cfg.seed,
            points: summarize(&samples),
        },
        schedule: verified.schedule,
        report: verified.report,
    })
}

pub fn csv_string(curves: &[RateCurve]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in curves {
        let eta = c.eta_hat.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
        for p in &c.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.9},{:.9},{},{}",
                c.scenario,
                eta,
                c.mode.as_str(),
                p.snr_db,
                p.mean,
                p.stderr,
                p.trials,
                c.seed
            );
        }
    }
    out
}

pub fn emit_csv(curves: &[RateCurve], path: &Path) -> Result<()> {
    fs::write(path, csv_string(curves))?;
    Ok(())
}
