//! Greedy residual scheduler for the unicast phase.

use std::cmp::Reverse;

use crate::elevation::{uncached_packets, ResidualLedger};
use crate::schedule::{Term, UnicastSlot, UserId};

/// Every `(packet, q)` a user of `profile` needs when it gets nothing in the
/// coded-caching phase: all uncached packets, each in `per_packet` pieces.
pub fn excluded_user_demand(profile: u32, profile_count: u32, caching_gain: u32, per_packet: u32) -> Vec<(u32, u32)> {
    uncached_packets(profile, profile_count, caching_gain)
        .flat_map(|packet| (1..=per_packet).map(move |q| (packet, q)))
        .collect()
}

/// Drains the ledger: each slot serves the `min(alpha, U)` users with the
/// most outstanding subpackets (ties to the lower id), one subpacket each,
/// every term nulled at all other served users.
pub fn plan_unicast(mut ledger: ResidualLedger, alpha: u32) -> Vec<UnicastSlot> {
    let mut slots = Vec::new();
    loop {
        let mut pending: Vec<(usize, u32)> = ledger
            .pending_users()
            .into_iter()
            .map(|u| (ledger.outstanding(u), u))
            .collect();
        if pending.is_empty() {
            break;
        }
        pending.sort_by_key(|&(remaining, user)| (Reverse(remaining), user));
        pending.truncate(alpha as usize);

        let served: Vec<u32> = pending.iter().map(|&(_, u)| u).collect();
        let mut terms = Vec::with_capacity(served.len());
        for &user in &served {
            let (packet, q) = ledger.pop(user).expect("pending user has outstanding demand");
            let mut nulling: Vec<UserId> = served
                .iter()
                .filter(|&&u| u != user)
                .map(|&u| UserId::Real(u))
                .collect();
            nulling.sort_unstable();
            terms.push(Term {
                recipient: UserId::Real(user),
                packet,
                q,
                nulling,
            });
        }
        slots.push(UnicastSlot {
            slot: slots.len() as u32 + 1,
            terms,
        });
    }
    slots
}
