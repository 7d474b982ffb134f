use std::fmt;

use crate::dump::write_term;

/// A recipient in the real network: an actual user or a phantom placeholder.
///
/// Real users sort before phantoms, so nulling sets render reals first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UserId {
    Real(u32),
    Phantom(u32),
}

impl UserId {
    pub fn is_phantom(self) -> bool {
        matches!(self, UserId::Phantom(_))
    }

    pub fn real(self) -> Option<u32> {
        match self {
            UserId::Real(id) => Some(id),
            UserId::Phantom(_) => None,
        }
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UserId::Real(id) => write!(f, "{id}"),
            UserId::Phantom(id) => write!(f, "~{id}"),
        }
    }
}

/// One data term: subpacket `q` of packet `packet` of the recipient's file,
/// beamformed to be suppressed at every user in `nulling`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub recipient: UserId,
    pub packet: u32,
    pub q: u32,
    pub nulling: Vec<UserId>,
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, &self.recipient, self.packet, self.q, &self.nulling)
    }
}

/// Where a coded-caching transmission came from: virtual round and index,
/// plus the shift `s` when each virtual vector elevates into several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CcOrigin {
    pub round: u32,
    pub index: u32,
    pub shift: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealTransmission {
    pub origin: CcOrigin,
    pub terms: Vec<Term>,
}

impl RealTransmission {
    /// Number of terms addressed to real users.
    pub fn achieved_dof(&self) -> usize {
        self.terms.iter().filter(|t| !t.recipient.is_phantom()).count()
    }

    pub fn has_phantoms(&self) -> bool {
        self.terms
            .iter()
            .any(|t| t.recipient.is_phantom() || t.nulling.iter().any(|u| u.is_phantom()))
    }

    pub fn term_for(&self, recipient: UserId) -> Option<&Term> {
        self.terms.iter().find(|t| t.recipient == recipient)
    }
}

impl fmt::Display for RealTransmission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C {} {}", self.origin.round, self.origin.index)?;
        if let Some(s) = self.origin.shift {
            write!(f, " {s}")?;
        }
        f.write_str(" |")?;
        for term in &self.terms {
            write!(f, " {term}")?;
        }
        Ok(())
    }
}

/// One unicast-phase transmission; every served user nulls every other term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnicastSlot {
    pub slot: u32,
    pub terms: Vec<Term>,
}

impl fmt::Display for UnicastSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U {} |", self.slot)?;
        for term in &self.terms {
            write!(f, " {term}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeliveryMode {
    CodedCaching,
    UnicastOnly,
}

impl DeliveryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DeliveryMode::CodedCaching => "cc",
            DeliveryMode::UnicastOnly => "unicast-only",
        }
    }
}

/// Parameters a schedule was built with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleParams {
    pub mode: DeliveryMode,
    pub profile_count: u32,
    pub caching_gain: u32,
    pub spatial_dof: u32,
    /// Common profile length; `None` in unicast-only mode.
    pub eta_hat: Option<u32>,
    pub virtual_dof: Option<u32>,
    pub remainder: Option<u32>,
    /// Subpackets per packet.
    pub per_packet: u32,
}

impl ScheduleParams {
    /// Size of one subpacket in nats for a file of `file_size` nats.
    pub fn subpacket_size(&self, file_size: f64) -> f64 {
        file_size / f64::from(self.profile_count * self.per_packet)
    }
}

/// Complete delivery plan for one request interval.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliverySchedule {
    pub params: ScheduleParams,
    /// Phantom-stripped transmissions that passed the DoF filter.
    pub cc: Vec<RealTransmission>,
    pub unicast: Vec<UnicastSlot>,
    /// Users left out of the coded-caching phase.
    pub excluded: Vec<u32>,
    /// Number of coded-caching transmissions dropped by the DoF filter.
    pub deferred_transmissions: usize,
}

impl DeliverySchedule {
    /// Term lists of every transmission, coded-caching phase first.
    pub fn transmissions(&self) -> impl Iterator<Item = &[Term]> + '_ {
        self.cc
            .iter()
            .map(|t| t.terms.as_slice())
            .chain(self.unicast.iter().map(|s| s.terms.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.cc.len() + self.unicast.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cc.is_empty() && self.unicast.is_empty()
    }

    /// Text dump: a comment header followed by one line per transmission.
    pub fn dump(&self) -> String {
        use std::fmt::Write;
        let p = &self.params;
        let mut out = String::new();
        let opt = |v: Option<u32>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
        let _ = writeln!(
            out,
            "# mode={} P={} t={} alpha={} eta_hat={} virtual_dof={} b={} per_packet={}",
            p.mode.as_str(),
            p.profile_count,
            p.caching_gain,
            p.spatial_dof,
            opt(p.eta_hat),
            opt(p.virtual_dof),
            opt(p.remainder),
            p.per_packet
        );
        for tx in &self.cc {
            let _ = writeln!(out, "{tx}");
        }
        for slot in &self.unicast {
            let _ = writeln!(out, "{slot}");
        }
        out
    }
}
