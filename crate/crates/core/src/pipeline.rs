//! End-to-end schedule construction for one request interval.

use std::collections::BTreeMap;

use crate::elevation::{
    cc_subpacketization, dof_filter, pad_profiles, strip_phantoms, Elevator, ExclusionPolicy, ProfileRoster,
    ResidualLedger,
};
use crate::error::{Error, Result};
use crate::oracle::{self, OracleContext, VerificationReport};
use crate::schedule::{DeliveryMode, DeliverySchedule, ScheduleParams};
use crate::scheme::{NetworkConfig, ProfileAssignment};
use crate::unicast::{excluded_user_demand, plan_unicast};
use crate::virtual_net::{generate_virtual_schedule, make_virtual_config};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EtaHatPolicy {
    /// Largest profile length, so nobody is excluded.
    #[default]
    MaxLength,
    Fixed(u32),
}

impl EtaHatPolicy {
    pub fn resolve(self, lengths: &[u32]) -> u32 {
        match self {
            EtaHatPolicy::MaxLength => lengths.iter().copied().max().unwrap_or(1).max(1),
            EtaHatPolicy::Fixed(n) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineOptions {
    pub mode: DeliveryMode,
    pub eta_hat: EtaHatPolicy,
    pub exclusion: ExclusionPolicy,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            mode: DeliveryMode::CodedCaching,
            eta_hat: EtaHatPolicy::MaxLength,
            exclusion: ExclusionPolicy::HighestIndexed,
        }
    }
}

/// Schedule plus the intermediate roster, for inspection.
#[derive(Debug, Clone)]
pub struct BuiltSchedule {
    pub schedule: DeliverySchedule,
    pub roster: Option<ProfileRoster>,
}

pub fn build_schedule(
    net: &NetworkConfig,
    assignment: &ProfileAssignment,
    opts: &PipelineOptions,
) -> Result<BuiltSchedule> {
    if assignment.profile_count() != net.profile_count {
        return Err(Error::InvalidConfig(format!(
            "assignment uses {} profiles but the cache ratio implies {}",
            assignment.profile_count(),
            net.profile_count
        )));
    }
    if assignment.num_users() != net.num_users {
        return Err(Error::InvalidConfig(format!(
            "assignment covers {} users, network has {}",
            assignment.num_users(),
            net.num_users
        )));
    }
    let p = net.profile_count;
    let t = net.caching_gain;
    let alpha = net.spatial_dof;

    match opts.mode {
        DeliveryMode::UnicastOnly => {
            let mut ledger = ResidualLedger::new();
            for (user, profile) in assignment.iter() {
                ledger.extend(user, excluded_user_demand(profile, p, t, 1));
            }
            let schedule = DeliverySchedule {
                params: ScheduleParams {
                    mode: DeliveryMode::UnicastOnly,
                    profile_count: p,
                    caching_gain: t,
                    spatial_dof: alpha,
                    eta_hat: None,
                    virtual_dof: None,
                    remainder: None,
                    per_packet: 1,
                },
                cc: Vec::new(),
                unicast: plan_unicast(ledger, alpha),
                excluded: assignment.iter().map(|(u, _)| u).collect(),
                deferred_transmissions: 0,
            };
            Ok(BuiltSchedule { schedule, roster: None })
        }
        DeliveryMode::CodedCaching => {
            let eta_hat = opts.eta_hat.resolve(&assignment.lengths());
            let vcfg = make_virtual_config(alpha, eta_hat, p, t)?;
            let per_packet = cc_subpacketization(&vcfg);
            let roster = pad_profiles(&assignment.members(), eta_hat, opts.exclusion);

            let virtual_schedule = generate_virtual_schedule(&vcfg)?;
            let elevated = Elevator::new(vcfg, &roster)?.elevate_all(&virtual_schedule)?;
            let stripped: Vec<_> = elevated.iter().map(strip_phantoms).collect();
            let before = stripped.len();
            let (kept, deferred) = dof_filter(stripped, alpha);
            let deferred_transmissions = before - kept.len();

            let mut ledger = ResidualLedger::new();
            for &user in roster.excluded() {
                let profile = assignment.profile_of(user).expect("excluded user has a profile");
                ledger.extend(user, excluded_user_demand(profile, p, t, per_packet));
            }
            for (user, packet, q) in deferred {
                ledger.add(user, packet, q);
            }

            let schedule = DeliverySchedule {
                params: ScheduleParams {
                    mode: DeliveryMode::CodedCaching,
                    profile_count: p,
                    caching_gain: t,
                    spatial_dof: alpha,
                    eta_hat: Some(eta_hat),
                    virtual_dof: Some(vcfg.virtual_dof),
                    remainder: Some(vcfg.remainder),
                    per_packet,
                },
                cc: kept,
                unicast: plan_unicast(ledger, alpha),
                excluded: roster.excluded().to_vec(),
                deferred_transmissions,
            };
            Ok(BuiltSchedule {
                schedule,
                roster: Some(roster),
            })
        }
    }
}

/// Oracle context for a real network.
pub fn oracle_context(net: &NetworkConfig, assignment: &ProfileAssignment) -> OracleContext {
    let profiles: BTreeMap<u32, u32> = assignment.iter().collect();
    OracleContext::new(net.profile_count, net.caching_gain, profiles)
}

/// Per-packet subpacket count the oracle expects, derived without the generators.
pub fn oracle_per_packet(net: &NetworkConfig, assignment: &ProfileAssignment, opts: &PipelineOptions) -> u32 {
    match opts.mode {
        DeliveryMode::UnicastOnly => 1,
        DeliveryMode::CodedCaching => {
            let eta_hat = opts.eta_hat.resolve(&assignment.lengths());
            oracle::expected_subpackets(net.spatial_dof, eta_hat, net.caching_gain)
        }
    }
}

/// Dumps the schedule, re-parses it and runs the full oracle over it.
pub fn verify_schedule(
    schedule: &DeliverySchedule,
    net: &NetworkConfig,
    assignment: &ProfileAssignment,
    opts: &PipelineOptions,
) -> Result<VerificationReport> {
    let parsed = oracle::parse_dump(&schedule.dump())?;
    let ctx = oracle_context(net, assignment);
    let users: Vec<u32> = assignment.iter().map(|(u, _)| u).collect();
    Ok(oracle::verify(
        &parsed,
        &ctx,
        &users,
        oracle_per_packet(net, assignment, opts),
    ))
}
