//! Network parameters, the cyclic placement matrix and profile assignment.
//!
//! Packet, profile and user indices are 1-based throughout the crate. A file
//! is split into `P` packets; a user associated with profile `c` caches the
//! packets `{c - t + 1, ..., c}` (cyclically reduced to `[P]`), where
//! `t = P * gamma` is the caching gain.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Cache ratio as an exact fraction of the library.
pub type CacheRatio = Ratio<u64>;

/// Parses `"1/4"`, `"0.1"` or `"0.25"` into an exact ratio.
pub fn parse_cache_ratio(text: &str) -> Result<CacheRatio> {
    let text = text.trim();
    let bad = || Error::InvalidConfig(format!("cache ratio {text:?} is not a rational number"));
    if let Some((num, den)) = text.split_once('/') {
        let num: u64 = num.trim().parse().map_err(|_| bad())?;
        let den: u64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(num, den));
    }
    let (int_part, frac_part) = text.split_once('.').unwrap_or((text, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    if frac_part.len() > 18 {
        return Err(bad());
    }
    let den = 10u64.pow(frac_part.len() as u32);
    let int: u64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().map_err(|_| bad())?
    };
    let frac: u64 = if frac_part.is_empty() {
        0
    } else {
        frac_part.parse().map_err(|_| bad())?
    };
    let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
    Ok(Ratio::new(num, den))
}

/// Smallest `P` with `P * gamma` integral, and the caching gain `t = P * gamma`.
pub fn derive_p_and_t(gamma: CacheRatio) -> Result<(u32, u32)> {
    if *gamma.numer() == 0 || gamma >= Ratio::from_integer(1) {
        return Err(Error::InvalidConfig(format!(
            "cache ratio {gamma} must lie strictly between 0 and 1"
        )));
    }
    // Ratio keeps itself reduced, so the denominator is the smallest P.
    let p = u32::try_from(*gamma.denom())
        .map_err(|_| Error::InvalidConfig(format!("profile count for {gamma} is too large")))?;
    Ok((p, *gamma.numer() as u32))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub num_users: u32,
    pub library_size: u32,
    /// File size in nats.
    pub file_size: f64,
    pub cache_ratio: CacheRatio,
    pub spatial_dof: u32,
    pub num_tx_antennas: u32,
    pub profile_count: u32,
    pub caching_gain: u32,
}

impl NetworkConfig {
    pub fn new(
        num_users: u32,
        library_size: u32,
        file_size: f64,
        cache_ratio: CacheRatio,
        spatial_dof: u32,
        num_tx_antennas: u32,
    ) -> Result<Self> {
        if num_users == 0 || library_size == 0 {
            return Err(Error::InvalidConfig(
                "user count and library size must be positive".into(),
            ));
        }
        if !(file_size.is_finite() && file_size > 0.0) {
            return Err(Error::InvalidConfig(format!("file size {file_size} must be positive")));
        }
        if spatial_dof == 0 {
            return Err(Error::InvalidConfig("spatial DoF must be positive".into()));
        }
        if num_tx_antennas < spatial_dof {
            return Err(Error::InvalidConfig(format!(
                "{num_tx_antennas} transmit antennas cannot support spatial DoF {spatial_dof}"
            )));
        }
        let (profile_count, caching_gain) = derive_p_and_t(cache_ratio)?;
        Ok(Self {
            num_users,
            library_size,
            file_size,
            cache_ratio,
            spatial_dof,
            num_tx_antennas,
            profile_count,
            caching_gain,
        })
    }
}

/// Reduces any integer to the cyclic range `[1, modulus]` (so 0 maps to `modulus`).
pub(crate) fn wrap(value: i64, modulus: u32) -> u32 {
    let m = i64::from(modulus);
    ((value - 1).rem_euclid(m) + 1) as u32
}

/// Whether a user of `profile` caches `packet`.
pub fn is_cached(profile: u32, packet: u32, profile_count: u32, caching_gain: u32) -> bool {
    // packet lies in the cyclic window ending at the profile index
    let offset = (i64::from(profile) - i64::from(packet)).rem_euclid(i64::from(profile_count));
    offset < i64::from(caching_gain)
}

/// `P x P` binary matrix; entry `(p, c)` says profile `c` caches packet `p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementMatrix {
    dim: u32,
    bits: Vec<bool>,
}

impl PlacementMatrix {
    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// Entry at 1-based `(row, col)`.
    pub fn get(&self, row: u32, col: u32) -> bool {
        assert!((1..=self.dim).contains(&row) && (1..=self.dim).contains(&col));
        self.bits[((row - 1) * self.dim + (col - 1)) as usize]
    }

    /// Columns holding a one in `row`.
    pub fn row_ones(&self, row: u32) -> Vec<u32> {
        (1..=self.dim).filter(|&c| self.get(row, c)).collect()
    }

    pub fn column_ones(&self, col: u32) -> Vec<u32> {
        (1..=self.dim).filter(|&r| self.get(r, col)).collect()
    }
}

/// One line per row, `0`/`1` characters separated by spaces.
impl fmt::Display for PlacementMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in 1..=self.dim {
            let line: Vec<&str> = (1..=self.dim)
                .map(|c| if self.get(row, c) { "1" } else { "0" })
                .collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

pub fn build_placement_matrix(profile_count: u32, caching_gain: u32) -> Result<PlacementMatrix> {
    if caching_gain == 0 || caching_gain >= profile_count {
        return Err(Error::InvalidConfig(format!(
            "caching gain {caching_gain} must satisfy 1 <= t < P = {profile_count}"
        )));
    }
    let n = profile_count as usize;
    let mut bits = vec![false; n * n];
    // Row 1 has ones in columns 1..=t; row p is row p-1 shifted right by one.
    for row in 0..n {
        for k in 0..caching_gain as usize {
            bits[row * n + (row + k) % n] = true;
        }
    }
    Ok(PlacementMatrix {
        dim: profile_count,
        bits,
    })
}

/// Packets cached by `profile`, in ascending order.
pub fn cached_packets(profile: u32, profile_count: u32, caching_gain: u32) -> Result<Vec<u32>> {
    if !(1..=profile_count).contains(&profile) {
        return Err(Error::InvalidArgument(format!(
            "profile {profile} outside [1, {profile_count}]"
        )));
    }
    let mut packets: Vec<u32> = (0..caching_gain)
        .map(|k| wrap(i64::from(profile) - i64::from(k), profile_count))
        .collect();
    packets.sort_unstable();
    Ok(packets)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssignmentPolicy {
    /// User `k` gets profile `((k - 1) mod P) + 1`.
    RoundRobin,
    /// Each user draws a profile uniformly with a seeded generator.
    SeededUniform(u64),
    /// Profile lengths given directly; users are assigned in consecutive id blocks.
    Explicit(Vec<u32>),
}

/// Profile index `p(k)` for each user `k = 1..=K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileAssignment {
    profile_count: u32,
    profiles: Vec<u32>,
}

impl ProfileAssignment {
    pub fn from_profiles(profile_count: u32, profiles: Vec<u32>) -> Result<Self> {
        if let Some(bad) = profiles.iter().find(|&&p| !(1..=profile_count).contains(&p)) {
            return Err(Error::InvalidConfig(format!(
                "profile {bad} outside [1, {profile_count}]"
            )));
        }
        Ok(Self {
            profile_count,
            profiles,
        })
    }

    pub fn num_users(&self) -> u32 {
        self.profiles.len() as u32
    }

    pub fn profile_count(&self) -> u32 {
        self.profile_count
    }

    pub fn profile_of(&self, user: u32) -> Option<u32> {
        self.profiles.get((user as usize).checked_sub(1)?).copied()
    }

    /// Profile lengths `eta_p`, indexed by `p - 1`.
    pub fn lengths(&self) -> Vec<u32> {
        let mut eta = vec![0u32; self.profile_count as usize];
        for &p in &self.profiles {
            eta[(p - 1) as usize] += 1;
        }
        eta
    }

    /// Users associated with each profile, ascending ids, indexed by `p - 1`.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut lists = vec![Vec::new(); self.profile_count as usize];
        for (idx, &p) in self.profiles.iter().enumerate() {
            lists[(p - 1) as usize].push(idx as u32 + 1);
        }
        lists
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.profiles.iter().enumerate().map(|(i, &p)| (i as u32 + 1, p))
    }
}

pub fn assign_profiles(num_users: u32, profile_count: u32, policy: &AssignmentPolicy) -> Result<ProfileAssignment> {
    if profile_count == 0 {
        return Err(Error::InvalidConfig("profile count must be positive".into()));
    }
    let profiles = match policy {
        AssignmentPolicy::RoundRobin => (0..num_users).map(|k| k % profile_count + 1).collect(),
        AssignmentPolicy::SeededUniform(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..num_users).map(|_| rng.random_range(1..=profile_count)).collect()
        }
        AssignmentPolicy::Explicit(eta) => {
            if eta.len() != profile_count as usize {
                return Err(Error::InvalidConfig(format!(
                    "explicit profile lengths list {} entries, expected {profile_count}",
                    eta.len()
                )));
            }
            let total: u64 = eta.iter().map(|&e| u64::from(e)).sum();
            if total != u64::from(num_users) {
                return Err(Error::InvalidConfig(format!(
                    "explicit profile lengths sum to {total}, expected {num_users} users"
                )));
            }
            eta.iter()
                .enumerate()
                .flat_map(|(p, &len)| std::iter::repeat_n(p as u32 + 1, len as usize))
                .collect()
        }
    };
    ProfileAssignment::from_profiles(profile_count, profiles)
}

/// Requested file `W(k)` per requesting user.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DemandMap(BTreeMap<u32, u32>);

impl DemandMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, user: u32, file: u32) {
        self.0.insert(user, file);
    }

    pub fn file_of(&self, user: u32) -> Option<u32> {
        self.0.get(&user).copied()
    }

    pub fn users(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every user `1..=num_users` requests a file drawn uniformly from the library.
    pub fn uniform(num_users: u32, library_size: u32, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self(
            (1..=num_users)
                .map(|k| (k, rng.random_range(1..=library_size)))
                .collect(),
        )
    }
}
