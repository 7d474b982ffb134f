//! Codeword generation for the virtual network of `P` users, one per profile.
//!
//! Round `r` pairs a block of `t` users starting at `r` with a sliding window
//! of `virtual_dof` users taken from the remaining users in cyclic order.
//! Block users receive the packet cached by the first window user; window
//! users receive the packet cached by the whole block. Every transmission
//! therefore carries `t + virtual_dof` terms, each nulled at
//! `virtual_dof - 1` users.

use std::collections::HashMap;
use std::fmt;

use crate::dump::write_term;
use crate::error::{Error, Result};
use crate::scheme::{is_cached, wrap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VirtualConfig {
    pub profile_count: u32,
    pub caching_gain: u32,
    pub spatial_dof: u32,
    pub eta_hat: u32,
    /// `ceil(alpha / eta_hat)`.
    pub virtual_dof: u32,
    /// `alpha mod eta_hat`.
    pub remainder: u32,
}

impl VirtualConfig {
    /// Terms per virtual transmission.
    pub fn terms_per_transmission(&self) -> u32 {
        self.caching_gain + self.virtual_dof
    }

    /// Whether `eta_hat` divides `alpha`.
    pub fn is_divisible(&self) -> bool {
        self.remainder == 0
    }
}

pub fn make_virtual_config(
    spatial_dof: u32,
    eta_hat: u32,
    profile_count: u32,
    caching_gain: u32,
) -> Result<VirtualConfig> {
    if spatial_dof == 0 || eta_hat == 0 {
        return Err(Error::InvalidConfig(
            "spatial DoF and eta_hat must be at least 1".into(),
        ));
    }
    if caching_gain == 0 || caching_gain >= profile_count {
        return Err(Error::InvalidConfig(format!(
            "caching gain {caching_gain} must satisfy 1 <= t < P = {profile_count}"
        )));
    }
    let virtual_dof = spatial_dof.div_ceil(eta_hat);
    let remainder = spatial_dof % eta_hat;
    if virtual_dof < caching_gain {
        return Err(Error::UnsupportedRegime(format!(
            "virtual DoF {virtual_dof} is below the caching gain {caching_gain}"
        )));
    }
    Ok(VirtualConfig {
        profile_count,
        caching_gain,
        spatial_dof,
        eta_hat,
        virtual_dof,
        remainder,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualTerm {
    pub user: u32,
    pub packet: u32,
    pub q: u32,
    pub interference: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualTransmission {
    pub round: u32,
    pub index: u32,
    pub terms: Vec<VirtualTerm>,
}

impl VirtualTransmission {
    pub fn users(&self) -> Vec<u32> {
        self.terms.iter().map(|t| t.user).collect()
    }

    pub fn packets(&self) -> Vec<u32> {
        self.terms.iter().map(|t| t.packet).collect()
    }
}

impl fmt::Display for VirtualTransmission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V {} {} |", self.round, self.index)?;
        for term in &self.terms {
            f.write_str(" ")?;
            write_term(f, &term.user, term.packet, term.q, &term.interference)?;
        }
        Ok(())
    }
}

/// Users in `served` that must not hear the term `(intended, packet)`.
///
/// Keeps the order of `served`.
pub fn interference_set(
    served: &[u32],
    intended: u32,
    packet: u32,
    profile_count: u32,
    caching_gain: u32,
) -> Result<Vec<u32>> {
    if !served.contains(&intended) {
        return Err(Error::ContractViolation(format!(
            "user {intended} is not in the served set"
        )));
    }
    if is_cached(intended, packet, profile_count, caching_gain) {
        return Err(Error::ContractViolation(format!(
            "user {intended} already caches packet {packet}"
        )));
    }
    Ok(served
        .iter()
        .copied()
        .filter(|&u| u != intended && !is_cached(u, packet, profile_count, caching_gain))
        .collect())
}

/// All `P (P - t)` virtual transmissions, round-major.
pub fn generate_virtual_schedule(cfg: &VirtualConfig) -> Result<Vec<VirtualTransmission>> {
    let p = cfg.profile_count;
    let t = cfg.caching_gain;
    if t != 1 {
        return Err(Error::UnsupportedRegime(format!(
            "cyclic delivery construction is only available for caching gain 1 (got {t})"
        )));
    }
    if cfg.virtual_dof < t {
        return Err(Error::UnsupportedRegime(format!(
            "virtual DoF {} is below the caching gain {t}",
            cfg.virtual_dof
        )));
    }
    if t + cfg.virtual_dof > p {
        return Err(Error::UnsupportedRegime(format!(
            "virtual DoF {} leaves no room in a {p}-user virtual network with caching gain {t}",
            cfg.virtual_dof
        )));
    }

    let window = cfg.virtual_dof as usize;
    let mut counters: HashMap<(u32, u32), u32> = HashMap::new();
    let mut next_q = |packet: u32, user: u32| {
        let q = counters.entry((packet, user)).or_insert(0);
        *q += 1;
        *q
    };

    let mut schedule = Vec::with_capacity((p * (p - t)) as usize);
    for round in 1..=p {
        let block: Vec<u32> = (0..t).map(|k| wrap(i64::from(round + k), p)).collect();
        let rest: Vec<u32> = (t..p).map(|k| wrap(i64::from(round + k), p)).collect();
        for j in 0..rest.len() {
            let win: Vec<u32> = (0..window).map(|k| rest[(j + k) % rest.len()]).collect();
            let mut assignments: Vec<(u32, u32)> = Vec::with_capacity(block.len() + win.len());
            // t == 1: the block is the single user `round`, which caches only packet `round`.
            assignments.extend(block.iter().map(|&u| (u, win[0])));
            assignments.extend(win.iter().map(|&u| (u, round)));

            let served: Vec<u32> = assignments.iter().map(|&(u, _)| u).collect();
            let mut terms = Vec::with_capacity(assignments.len());
            for &(user, packet) in &assignments {
                let mut interference = interference_set(&served, user, packet, p, t)?;
                interference.sort_unstable();
                terms.push(VirtualTerm {
                    user,
                    packet,
                    q: next_q(packet, user),
                    interference,
                });
            }
            schedule.push(VirtualTransmission {
                round,
                index: j as u32 + 1,
                terms,
            });
        }
    }
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    #[test]
    fn config_examples() {
        let c = make_virtual_config(4, 2, 4, 1).unwrap();
        assert_eq!((c.virtual_dof, c.remainder), (2, 0));
        let c = make_virtual_config(4, 3, 4, 1).unwrap();
        assert_eq!((c.virtual_dof, c.remainder), (2, 1));
        let c = make_virtual_config(10, 5, 10, 1).unwrap();
        assert_eq!((c.virtual_dof, c.remainder), (2, 0));
    }

    #[test]
    fn config_rejects_virtual_dof_below_gain() {
        // alpha = 2, eta_hat = 5 -> virtual DoF 1 < t = 2
        let err = make_virtual_config(2, 5, 4, 2).unwrap_err();
        assert!(matches!(err, Error::UnsupportedRegime(_)));
    }

    #[test]
    fn interference_set_examples() {
        assert_eq!(interference_set(&[1, 2, 3], 2, 1, 4, 1).unwrap(), vec![3]);
        assert_eq!(interference_set(&[1, 2, 3], 1, 2, 4, 1).unwrap(), vec![3]);
        assert!(interference_set(&[1, 2], 1, 2, 2, 1).unwrap().is_empty());
        assert!(matches!(
            interference_set(&[1, 2, 3], 1, 1, 4, 1),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn first_round_vectors_p4() {
        let cfg = make_virtual_config(4, 2, 4, 1).unwrap();
        let s = generate_virtual_schedule(&cfg).unwrap();
        assert_eq!(s.len(), 12);
        assert_eq!(s[0].users(), vec![1, 2, 3]);
        assert_eq!(s[1].users(), vec![1, 3, 4]);
        assert_eq!(s[2].users(), vec![1, 4, 2]);
        assert_eq!(s[0].packets(), vec![2, 1, 1]);
        assert_eq!(s[1].packets(), vec![3, 1, 1]);
        assert_eq!(s[2].packets(), vec![4, 1, 1]);
        // W_1^2 delivered to user 3 in the second vector, W_1^1 to user 4
        assert_eq!((s[1].terms[1].user, s[1].terms[1].q), (3, 2));
        assert_eq!((s[1].terms[2].user, s[1].terms[2].q), (4, 1));
    }

    #[test]
    fn two_user_network_has_empty_interference() {
        let cfg = make_virtual_config(1, 1, 2, 1).unwrap();
        let s = generate_virtual_schedule(&cfg).unwrap();
        assert_eq!(s.len(), 2);
        for tx in &s {
            let mut users = tx.users();
            users.sort_unstable();
            assert_eq!(users, vec![1, 2]);
            assert!(tx.terms.iter().all(|t| t.interference.is_empty()));
        }
    }

    #[test]
    fn rejects_oversized_virtual_dof_and_larger_gain() {
        let cfg = make_virtual_config(5, 1, 4, 1).unwrap();
        assert!(matches!(
            generate_virtual_schedule(&cfg),
            Err(Error::UnsupportedRegime(_))
        ));
        let cfg = make_virtual_config(4, 1, 6, 2).unwrap();
        assert!(matches!(
            generate_virtual_schedule(&cfg),
            Err(Error::UnsupportedRegime(_))
        ));
    }

    #[test]
    fn dump_line_format() {
        let cfg = make_virtual_config(4, 2, 4, 1).unwrap();
        let s = generate_virtual_schedule(&cfg).unwrap();
        assert_eq!(s[0].to_string(), "V 1 1 | (1,2,1,{3}) (2,1,1,{3}) (3,1,1,{2})");
    }

    fn shift(tx: &VirtualTransmission, by: u32, p: u32) -> Vec<(u32, u32, Vec<u32>)> {
        tx.terms
            .iter()
            .map(|t| {
                let mut r: Vec<u32> = t.interference.iter().map(|&u| wrap(i64::from(u + by), p)).collect();
                r.sort_unstable();
                (wrap(i64::from(t.user + by), p), wrap(i64::from(t.packet + by), p), r)
            })
            .collect()
    }

    proptest! {
        #[test]
        fn structure_completeness_and_rotation(p in 2u32..13, dof_seed in 0u32..100) {
            let virtual_dof = 1 + dof_seed % (p - 1);
            let cfg = VirtualConfig {
                profile_count: p, caching_gain: 1, spatial_dof: virtual_dof,
                eta_hat: 1, virtual_dof, remainder: 0,
            };
            let s = generate_virtual_schedule(&cfg).unwrap();
            prop_assert_eq!(s.len() as u32, p * (p - 1));
            let mut seen: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
            for tx in &s {
                prop_assert_eq!(tx.terms.len() as u32, 1 + virtual_dof);
                let served = tx.users();
                for term in &tx.terms {
                    prop_assert_eq!(term.interference.len() as u32, virtual_dof - 1);
                    prop_assert!(!is_cached(term.user, term.packet, p, 1));
                    prop_assert!(!term.interference.contains(&term.user));
                    seen.entry((term.user, term.packet)).or_default().push(term.q);
                    // decodability from the receiver side
                    for &u in &served {
                        prop_assert!(u == term.user || is_cached(u, term.packet, p, 1) || term.interference.contains(&u));
                    }
                }
            }
            for user in 1..=p {
                for packet in (1..=p).filter(|&x| x != user) {
                    let mut qs = seen.remove(&(user, packet)).unwrap_or_default();
                    qs.sort_unstable();
                    prop_assert_eq!(qs, (1..=1 + virtual_dof).collect::<Vec<_>>());
                }
            }
            prop_assert!(seen.is_empty());

            let per_round = (p - 1) as usize;
            for r in 1..p {
                for j in 0..per_round {
                    let base = shift(&s[j], r, p);
                    let got = shift(&s[r as usize * per_round + j], 0, p);
                    prop_assert_eq!(base, got);
                }
            }
        }
    }
}
