//! Elevation of virtual codewords to the real network.
//!
//! Each profile is padded (with phantom users) or trimmed (by excluding
//! users) to a common length `eta_hat`. A virtual term for profile `k`
//! then expands to one real term per roster member of `k`. When `eta_hat`
//! divides `alpha` every virtual vector maps to a single real vector;
//! otherwise it maps to `eta_hat` vectors, each carrying only a shifted
//! `b`-subset of the last profile's members.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::schedule::{CcOrigin, RealTransmission, Term, UserId};
use crate::scheme::is_cached;
use crate::virtual_net::{VirtualConfig, VirtualTransmission};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExclusionPolicy {
    /// Drop the highest-indexed members of an overlong profile.
    #[default]
    HighestIndexed,
    SeededRandom(u64),
}

/// Per-profile member lists `D_p`, all of length `eta_hat`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileRoster {
    eta_hat: u32,
    profiles: Vec<Vec<UserId>>,
    excluded: Vec<u32>,
}

impl ProfileRoster {
    pub fn eta_hat(&self) -> u32 {
        self.eta_hat
    }

    pub fn profile_count(&self) -> u32 {
        self.profiles.len() as u32
    }

    /// Members of 1-based `profile`.
    pub fn members(&self, profile: u32) -> &[UserId] {
        &self.profiles[(profile - 1) as usize]
    }

    /// Users removed from the coded-caching phase, ascending.
    pub fn excluded(&self) -> &[u32] {
        &self.excluded
    }

    pub fn phantom_count(&self) -> usize {
        self.profiles.iter().flatten().filter(|u| u.is_phantom()).count()
    }
}

/// Trims or pads each member list to `eta_hat` entries.
///
/// `members[p - 1]` lists the real users of profile `p`. Phantoms are
/// numbered consecutively in profile order, starting at 1.
pub fn pad_profiles(members: &[Vec<u32>], eta_hat: u32, policy: ExclusionPolicy) -> ProfileRoster {
    let target = eta_hat as usize;
    let mut rng = match policy {
        ExclusionPolicy::SeededRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        ExclusionPolicy::HighestIndexed => None,
    };
    let mut next_phantom = 1u32;
    let mut excluded = Vec::new();
    let mut profiles = Vec::with_capacity(members.len());
    for list in members {
        let mut kept: Vec<u32> = list.clone();
        if kept.len() > target {
            let surplus = kept.len() - target;
            match rng.as_mut() {
                None => excluded.extend(kept.drain(target..)),
                Some(rng) => {
                    let mut drop: Vec<usize> = sample(rng, kept.len(), surplus).into_vec();
                    drop.sort_unstable();
                    for &idx in drop.iter().rev() {
                        excluded.push(kept.remove(idx));
                    }
                }
            }
        }
        let mut roster: Vec<UserId> = kept.into_iter().map(UserId::Real).collect();
        while roster.len() < target {
            roster.push(UserId::Phantom(next_phantom));
            next_phantom += 1;
        }
        profiles.push(roster);
    }
    excluded.sort_unstable();
    ProfileRoster {
        eta_hat,
        profiles,
        excluded,
    }
}

/// `E_s^b(eta_hat)`: the first `b` entries of `[eta_hat]` after a cyclic
/// left shift by `s - 1`.
pub fn shift_window(s: u32, b: u32, eta_hat: u32) -> Vec<u32> {
    (1..=b).map(|k| (k + s - 2) % eta_hat + 1).collect()
}

/// Per-packet subpacket count for the coded-caching phase.
///
/// `t + virtual_dof` when `eta_hat` divides `alpha`, else `eta_hat * t + alpha`.
/// Multiply by `P` for the count per file.
pub fn cc_subpacketization(cfg: &VirtualConfig) -> u32 {
    if cfg.remainder == 0 {
        cfg.caching_gain + cfg.virtual_dof
    } else {
        cfg.eta_hat * cfg.caching_gain + cfg.spatial_dof
    }
}

/// Running subpacket index per `(recipient, packet)` in generation order.
#[derive(Debug, Default, Clone)]
pub struct SubpacketCounter(HashMap<(UserId, u32), u32>);

impl SubpacketCounter {
    pub fn next(&mut self, user: UserId, packet: u32) -> u32 {
        let q = self.0.entry((user, packet)).or_insert(0);
        *q += 1;
        *q
    }
}

fn sorted_without(mut set: Vec<UserId>, remove: UserId) -> Vec<UserId> {
    set.retain(|&u| u != remove);
    set.sort_unstable();
    set.dedup();
    set
}

/// Elevates every virtual vector against a fixed roster, tracking subpacket indices.
pub struct Elevator<'a> {
    cfg: VirtualConfig,
    roster: &'a ProfileRoster,
    counter: SubpacketCounter,
}

impl<'a> Elevator<'a> {
    pub fn new(cfg: VirtualConfig, roster: &'a ProfileRoster) -> Result<Self> {
        if roster.eta_hat() != cfg.eta_hat || roster.profile_count() != cfg.profile_count {
            return Err(Error::ContractViolation(format!(
                "roster shape ({} profiles of {}) does not match the virtual network ({} profiles of {})",
                roster.profile_count(),
                roster.eta_hat(),
                cfg.profile_count,
                cfg.eta_hat
            )));
        }
        Ok(Self {
            cfg,
            roster,
            counter: SubpacketCounter::default(),
        })
    }

    /// Single real vector for a virtual vector (requires `b = 0`).
    pub fn elevate_b0(&mut self, vt: &VirtualTransmission) -> Result<RealTransmission> {
        if self.cfg.remainder != 0 {
            return Err(Error::ContractViolation(
                "elevate_b0 requires eta_hat to divide alpha".into(),
            ));
        }
        let mut terms = Vec::with_capacity(vt.terms.len() * self.cfg.eta_hat as usize);
        for vterm in &vt.terms {
            let own = self.roster.members(vterm.user);
            let mut base: Vec<UserId> = Vec::new();
            for &k in &vterm.interference {
                base.extend_from_slice(self.roster.members(k));
            }
            for &member in own {
                let mut nulling = base.clone();
                nulling.extend_from_slice(own);
                terms.push(Term {
                    recipient: member,
                    packet: vterm.packet,
                    q: self.counter.next(member, vterm.packet),
                    nulling: sorted_without(nulling, member),
                });
            }
        }
        Ok(RealTransmission {
            origin: CcOrigin {
                round: vt.round,
                index: vt.index,
                shift: None,
            },
            terms,
        })
    }

    /// The `s`-th real vector for a virtual vector (requires `b != 0`).
    pub fn elevate_bnz(&mut self, vt: &VirtualTransmission, s: u32) -> Result<RealTransmission> {
        let b = self.cfg.remainder;
        if b == 0 {
            return Err(Error::ContractViolation(
                "elevate_bnz requires a nonzero remainder".into(),
            ));
        }
        if !(1..=self.cfg.eta_hat).contains(&s) {
            return Err(Error::InvalidArgument(format!(
                "shift {s} outside [1, {}]",
                self.cfg.eta_hat
            )));
        }
        let (last, head) = vt
            .terms
            .split_last()
            .ok_or_else(|| Error::ContractViolation("empty virtual transmission".into()))?;
        let last_profile = last.user;
        let last_members = self.roster.members(last_profile);
        let selected: Vec<UserId> = shift_window(s, b, self.cfg.eta_hat)
            .into_iter()
            .map(|i| last_members[(i - 1) as usize])
            .collect();

        // Rosters of the interference profiles; the last served profile only
        // contributes the members that are actually served in this vector.
        let base_set = |interference: &[u32]| -> Vec<UserId> {
            let mut set = Vec::new();
            for &k in interference {
                if k == last_profile {
                    set.extend_from_slice(&selected);
                } else {
                    set.extend_from_slice(self.roster.members(k));
                }
            }
            set
        };

        let mut terms = Vec::new();
        for vterm in head {
            let own = self.roster.members(vterm.user);
            let base = base_set(&vterm.interference);
            for &member in own {
                let mut nulling = base.clone();
                nulling.extend_from_slice(own);
                terms.push(Term {
                    recipient: member,
                    packet: vterm.packet,
                    q: self.counter.next(member, vterm.packet),
                    nulling: sorted_without(nulling, member),
                });
            }
        }
        let mut base = base_set(&last.interference);
        base.extend_from_slice(&selected);
        for &member in &selected {
            terms.push(Term {
                recipient: member,
                packet: last.packet,
                q: self.counter.next(member, last.packet),
                nulling: sorted_without(base.clone(), member),
            });
        }
        Ok(RealTransmission {
            origin: CcOrigin {
                round: vt.round,
                index: vt.index,
                shift: Some(s),
            },
            terms,
        })
    }

    /// Elevates a whole virtual schedule in generation order.
    pub fn elevate_all(&mut self, schedule: &[VirtualTransmission]) -> Result<Vec<RealTransmission>> {
        let mut out = Vec::new();
        for vt in schedule {
            if self.cfg.remainder == 0 {
                out.push(self.elevate_b0(vt)?);
            } else {
                for s in 1..=self.cfg.eta_hat {
                    out.push(self.elevate_bnz(vt, s)?);
                }
            }
        }
        Ok(out)
    }
}

/// Removes phantom recipients and phantom nulling entries.
pub fn strip_phantoms(rt: &RealTransmission) -> RealTransmission {
    let terms = rt
        .terms
        .iter()
        .filter(|t| !t.recipient.is_phantom())
        .map(|t| Term {
            nulling: t.nulling.iter().copied().filter(|u| !u.is_phantom()).collect(),
            ..t.clone()
        })
        .collect();
    RealTransmission {
        origin: rt.origin,
        terms,
    }
}

/// Outstanding `(packet, q)` subpackets per real user, kept in ascending order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResidualLedger {
    demands: BTreeMap<u32, VecDeque<(u32, u32)>>,
}

impl ResidualLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, user: u32, packet: u32, q: u32) {
        let queue = self.demands.entry(user).or_default();
        let pos = queue.partition_point(|&x| x < (packet, q));
        queue.insert(pos, (packet, q));
    }

    pub fn extend(&mut self, user: u32, items: impl IntoIterator<Item = (u32, u32)>) {
        for (packet, q) in items {
            self.add(user, packet, q);
        }
    }

    /// `u(k)`.
    pub fn outstanding(&self, user: u32) -> usize {
        self.demands.get(&user).map_or(0, VecDeque::len)
    }

    pub fn total(&self) -> usize {
        self.demands.values().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Users with `u(k) > 0`, ascending.
    pub fn pending_users(&self) -> Vec<u32> {
        self.demands
            .iter()
            .filter(|(_, q)| !q.is_empty())
            .map(|(&u, _)| u)
            .collect()
    }

    /// Removes and returns the user's lowest outstanding `(packet, q)`.
    pub fn pop(&mut self, user: u32) -> Option<(u32, u32)> {
        self.demands.get_mut(&user)?.pop_front()
    }

    pub fn items(&self, user: u32) -> Vec<(u32, u32)> {
        self.demands
            .get(&user)
            .map(|q| q.iter().copied().collect())
            .unwrap_or_default()
    }
}

/// Splits stripped transmissions into those reaching `alpha` real terms and
/// the rest, whose real terms are handed to the unicast phase.
pub fn dof_filter(schedule: Vec<RealTransmission>, alpha: u32) -> (Vec<RealTransmission>, Vec<(u32, u32, u32)>) {
    let mut kept = Vec::with_capacity(schedule.len());
    let mut deferred = Vec::new();
    for tx in schedule {
        if tx.achieved_dof() >= alpha as usize {
            kept.push(tx);
        } else {
            deferred.extend(
                tx.terms
                    .iter()
                    .filter_map(|t| t.recipient.real().map(|u| (u, t.packet, t.q))),
            );
        }
    }
    (kept, deferred)
}

/// Packets a profile does not cache, ascending.
pub fn uncached_packets(profile: u32, profile_count: u32, caching_gain: u32) -> impl Iterator<Item = u32> {
    (1..=profile_count).filter(move |&p| !is_cached(profile, p, profile_count, caching_gain))
}
