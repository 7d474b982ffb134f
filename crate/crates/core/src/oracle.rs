//! Brute-force schedule checker.
//!
//! Works on the text dump only and recomputes cache contents from `(P, t)`
//! itself, so a bug in the generators cannot leak into the verdict.
//!
//! A transmission is decodable when every served user, for every term in it,
//! either is the recipient, caches the packet, or is in the term's nulling
//! set. Nulling sets must also be exact: a coded-caching term is nulled at
//! precisely the served users that neither receive nor cache it, and a
//! unicast term at every other served user.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Virtual,
    CodedCaching,
    Unicast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Who {
    User(u32),
    Phantom(u32),
}

impl fmt::Display for Who {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Who::User(u) => write!(f, "{u}"),
            Who::Phantom(u) => write!(f, "~{u}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTerm {
    pub recipient: Who,
    pub packet: u32,
    pub q: u32,
    pub nulling: Vec<Who>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedTransmission {
    pub line: usize,
    pub phase: Phase,
    pub origin: Vec<u32>,
    pub terms: Vec<ParsedTerm>,
}

impl fmt::Display for ParsedTransmission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.phase {
            Phase::Virtual => "V",
            Phase::CodedCaching => "C",
            Phase::Unicast => "U",
        };
        f.write_str(tag)?;
        for o in &self.origin {
            write!(f, " {o}")?;
        }
        f.write_str(" |")?;
        for t in &self.terms {
            write!(f, " ({},{},{},{{", t.recipient, t.packet, t.q)?;
            for (i, n) in t.nulling.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{n}")?;
            }
            f.write_str("})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedSchedule {
    pub transmissions: Vec<ParsedTransmission>,
}

impl ParsedSchedule {
    pub fn only(&self, phase: Phase) -> ParsedSchedule {
        ParsedSchedule {
            transmissions: self
                .transmissions
                .iter()
                .filter(|t| t.phase == phase)
                .cloned()
                .collect(),
        }
    }

    pub fn to_dump(&self) -> String {
        self.transmissions.iter().map(|t| format!("{t}\n")).collect()
    }
}

fn parse_who(token: &str, line: usize) -> Result<Who> {
    let token = token.trim();
    let err = || Error::Parse {
        line,
        msg: format!("bad user token {token:?}"),
    };
    match token.strip_prefix('~') {
        Some(rest) => rest.parse().map(Who::Phantom).map_err(|_| err()),
        None => token.parse().map(Who::User).map_err(|_| err()),
    }
}

fn parse_term(body: &str, line: usize) -> Result<ParsedTerm> {
    let err = |msg: &str| Error::Parse {
        line,
        msg: format!("{msg} in term ({body})"),
    };
    let (head, rest) = body.split_once('{').ok_or_else(|| err("missing nulling set"))?;
    let set = rest.strip_suffix('}').ok_or_else(|| err("unterminated nulling set"))?;
    let fields: Vec<&str> = head.split(',').collect();
    if fields.len() != 4 || !fields[3].trim().is_empty() {
        return Err(err("expected user,packet,q,{set}"));
    }
    let recipient = parse_who(fields[0], line)?;
    let packet = fields[1].trim().parse().map_err(|_| err("bad packet index"))?;
    let q = fields[2].trim().parse().map_err(|_| err("bad subpacket index"))?;
    let nulling = if set.trim().is_empty() {
        Vec::new()
    } else {
        set.split(',').map(|s| parse_who(s, line)).collect::<Result<_>>()?
    };
    Ok(ParsedTerm {
        recipient,
        packet,
        q,
        nulling,
    })
}

/// Parses a schedule dump; blank lines and `#` comments are skipped.
pub fn parse_dump(text: &str) -> Result<ParsedSchedule> {
    let mut transmissions = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (head, body) = trimmed.split_once('|').ok_or(Error::Parse {
            line,
            msg: "missing '|' separator".into(),
        })?;
        let mut head_tokens = head.split_whitespace();
        let phase = match head_tokens.next() {
            Some("V") => Phase::Virtual,
            Some("C") => Phase::CodedCaching,
            Some("U") => Phase::Unicast,
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown phase tag {other:?}"),
                })
            }
        };
        let origin = head_tokens
            .map(|t| {
                t.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad origin index {t:?}"),
                })
            })
            .collect::<Result<Vec<u32>>>()?;

        let mut terms = Vec::new();
        let mut rest = body.trim();
        while !rest.is_empty() {
            let inner = rest.strip_prefix('(').ok_or(Error::Parse {
                line,
                msg: format!("expected '(' at {rest:?}"),
            })?;
            let close = inner.find(')').ok_or(Error::Parse {
                line,
                msg: "unterminated term".into(),
            })?;
            terms.push(parse_term(&inner[..close], line)?);
            rest = inner[close + 1..].trim_start();
        }
        transmissions.push(ParsedTransmission {
            line,
            phase,
            origin,
            terms,
        });
    }
    Ok(ParsedSchedule { transmissions })
}

/// What the oracle knows about the network: placement parameters and each
/// user's profile. For virtual schedules every virtual user is its own profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleContext {
    pub profile_count: u32,
    pub caching_gain: u32,
    pub profiles: BTreeMap<u32, u32>,
    /// `placement[packet - 1][profile - 1]`.
    placement: Vec<Vec<bool>>,
}

impl OracleContext {
    pub fn new(profile_count: u32, caching_gain: u32, profiles: BTreeMap<u32, u32>) -> Self {
        // First row: t leading ones; each later row is the previous one
        // rotated right by one position.
        let n = profile_count as usize;
        let mut placement = Vec::with_capacity(n);
        let mut row: Vec<bool> = (0..n).map(|c| c < caching_gain as usize).collect();
        for _ in 0..n {
            placement.push(row.clone());
            row.rotate_right(1);
        }
        Self {
            profile_count,
            caching_gain,
            profiles,
            placement,
        }
    }

    pub fn virtual_network(profile_count: u32, caching_gain: u32) -> Self {
        Self::new(
            profile_count,
            caching_gain,
            (1..=profile_count).map(|p| (p, p)).collect(),
        )
    }

    /// Does `user` hold `packet` in its cache? `None` for unknown users.
    fn caches(&self, user: u32, packet: u32) -> Option<bool> {
        let profile = *self.profiles.get(&user)?;
        let row = self.placement.get((packet as usize).checked_sub(1)?)?;
        Some(row.get((profile as usize).checked_sub(1)?).copied().unwrap_or(false))
    }

    fn requested_packets(&self, user: u32) -> Vec<u32> {
        (1..=self.profile_count)
            .filter(|&pk| self.caches(user, pk) == Some(false))
            .collect()
    }
}

/// Independent per-packet subpacket count from the scheme parameters.
pub fn expected_subpackets(spatial_dof: u32, eta_hat: u32, caching_gain: u32) -> u32 {
    let whole = spatial_dof / eta_hat;
    if whole * eta_hat == spatial_dof {
        caching_gain + whole
    } else {
        eta_hat * caching_gain + spatial_dof
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Fault {
    /// A served user hears a term it neither wants, caches, nor is shielded from.
    Leak {
        user: Who,
        term: usize,
    },
    /// A nulling set names a user it has no reason to.
    Superfluous {
        user: Who,
        term: usize,
    },
    /// A nulling set misses a user the term must be suppressed at.
    Missing {
        user: Who,
        term: usize,
    },
    Phantom {
        term: usize,
    },
    UnknownUser {
        user: Who,
    },
    CachedPacket {
        term: usize,
    },
    DuplicateRecipient {
        user: Who,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodabilityViolation {
    pub line: usize,
    pub fault: Fault,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Shortfall {
    Missing(u32),
    Duplicate(u32),
    /// Subpacket index outside `1..=per_packet`, or a packet the user caches.
    Unexpected(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CompletenessViolation {
    pub user: u32,
    pub packet: u32,
    pub kind: Shortfall,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerificationReport {
    pub transmissions: usize,
    pub decodability: Vec<DecodabilityViolation>,
    pub completeness: Vec<CompletenessViolation>,
    /// Real-term count per transmission -> number of transmissions.
    pub dof_histogram: BTreeMap<usize, usize>,
    /// Distinct valid subpackets delivered per requesting user.
    pub subpacket_totals: BTreeMap<u32, u32>,
    /// Delivered fraction of the requested file per requesting user.
    pub delivered_fraction: BTreeMap<u32, f64>,
    pub max_nulling: usize,
}

impl VerificationReport {
    pub fn decodable(&self) -> bool {
        self.decodability.is_empty()
    }

    pub fn complete(&self) -> bool {
        self.completeness.is_empty()
    }

    pub fn passed(&self) -> bool {
        self.decodable() && self.complete()
    }

    /// Users with at least one completeness violation.
    pub fn incomplete_users(&self) -> BTreeSet<u32> {
        self.completeness.iter().map(|v| v.user).collect()
    }

    pub fn violation_count(&self) -> usize {
        self.decodability.len() + self.completeness.len()
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "transmissions: {}", self.transmissions)?;
        writeln!(f, "decodable: {}", self.decodable())?;
        writeln!(f, "complete: {}", self.complete())?;
        writeln!(f, "max nulling set: {}", self.max_nulling)?;
        let hist: Vec<String> = self.dof_histogram.iter().map(|(d, n)| format!("{d}:{n}")).collect();
        writeln!(f, "dof histogram: {}", hist.join(" "))?;
        for v in self.decodability.iter().take(50) {
            writeln!(f, "  line {}: {:?}", v.line, v.fault)?;
        }
        for v in self.completeness.iter().take(50) {
            writeln!(f, "  user {} packet {}: {:?}", v.user, v.packet, v.kind)?;
        }
        let hidden = self.violation_count().saturating_sub(100);
        if hidden > 0 {
            writeln!(f, "  ... {hidden} more")?;
        }
        Ok(())
    }
}

/// Real terms per transmission, histogrammed.
pub fn dof_profile(schedule: &ParsedSchedule) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for tx in &schedule.transmissions {
        let dof = tx.terms.iter().filter(|t| matches!(t.recipient, Who::User(_))).count();
        *hist.entry(dof).or_insert(0) += 1;
    }
    hist
}

pub fn verify_decodability(schedule: &ParsedSchedule, ctx: &OracleContext) -> VerificationReport {
    let mut report = VerificationReport {
        transmissions: schedule.transmissions.len(),
        dof_histogram: dof_profile(schedule),
        ..Default::default()
    };
    for tx in &schedule.transmissions {
        let mut flag = |fault| report.decodability.push(DecodabilityViolation { line: tx.line, fault });
        let served: Vec<Who> = tx.terms.iter().map(|t| t.recipient).collect();
        let mut seen = BTreeSet::new();
        for &u in &served {
            if !seen.insert(u) {
                flag(Fault::DuplicateRecipient { user: u });
            }
        }
        for (idx, term) in tx.terms.iter().enumerate() {
            report.max_nulling = report.max_nulling.max(term.nulling.len());
            if matches!(term.recipient, Who::Phantom(_)) || term.nulling.iter().any(|u| matches!(u, Who::Phantom(_))) {
                flag(Fault::Phantom { term: idx });
                continue;
            }
            let Who::User(recipient) = term.recipient else {
                unreachable!()
            };
            match ctx.caches(recipient, term.packet) {
                None => {
                    flag(Fault::UnknownUser { user: term.recipient });
                    continue;
                }
                Some(true) => flag(Fault::CachedPacket { term: idx }),
                Some(false) => {}
            }
            let nulling: BTreeSet<Who> = term.nulling.iter().copied().collect();
            for &u in &served {
                if u == term.recipient {
                    continue;
                }
                let Who::User(uid) = u else { continue };
                let Some(cached) = ctx.caches(uid, term.packet) else {
                    continue;
                };
                let must_null = tx.phase == Phase::Unicast || !cached;
                if must_null && !nulling.contains(&u) {
                    if cached {
                        flag(Fault::Missing { user: u, term: idx });
                    } else {
                        flag(Fault::Leak { user: u, term: idx });
                    }
                } else if !must_null && nulling.contains(&u) {
                    flag(Fault::Superfluous { user: u, term: idx });
                }
            }
            for &u in &nulling {
                if u == term.recipient || !served.contains(&u) {
                    flag(Fault::Superfluous { user: u, term: idx });
                }
            }
        }
    }
    report
}

/// Every requesting user must receive each uncached packet as exactly the
/// subpackets `1..=per_packet`.
pub fn verify_completeness(
    schedule: &ParsedSchedule,
    ctx: &OracleContext,
    requesting: &[u32],
    per_packet: u32,
) -> VerificationReport {
    let mut delivered: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    for tx in &schedule.transmissions {
        for term in &tx.terms {
            if let Who::User(u) = term.recipient {
                delivered.entry((u, term.packet)).or_default().push(term.q);
            }
        }
    }
    let mut report = VerificationReport {
        transmissions: schedule.transmissions.len(),
        dof_histogram: dof_profile(schedule),
        ..Default::default()
    };
    let wanted: BTreeSet<u32> = requesting.iter().copied().collect();
    for &user in &wanted {
        let packets = ctx.requested_packets(user);
        let mut total = 0u32;
        for &packet in &packets {
            let mut qs = delivered.remove(&(user, packet)).unwrap_or_default();
            qs.sort_unstable();
            let mut last = None;
            for &q in &qs {
                if q == 0 || q > per_packet {
                    report.completeness.push(CompletenessViolation {
                        user,
                        packet,
                        kind: Shortfall::Unexpected(q),
                    });
                } else if last == Some(q) {
                    report.completeness.push(CompletenessViolation {
                        user,
                        packet,
                        kind: Shortfall::Duplicate(q),
                    });
                } else {
                    total += 1;
                }
                last = Some(q);
            }
            for q in 1..=per_packet {
                if qs.binary_search(&q).is_err() {
                    report.completeness.push(CompletenessViolation {
                        user,
                        packet,
                        kind: Shortfall::Missing(q),
                    });
                }
            }
        }
        report.subpacket_totals.insert(user, total);
        let fraction = f64::from(total) / f64::from(ctx.profile_count * per_packet.max(1));
        report.delivered_fraction.insert(user, fraction);
    }
    // Anything left was sent to a non-requesting user or is a cached packet.
    for ((user, packet), qs) in delivered {
        for q in qs {
            report.completeness.push(CompletenessViolation {
                user,
                packet,
                kind: Shortfall::Unexpected(q),
            });
        }
    }
    report.completeness.sort();
    report
}

/// Both checks in one report.
pub fn verify(
    schedule: &ParsedSchedule,
    ctx: &OracleContext,
    requesting: &[u32],
    per_packet: u32,
) -> VerificationReport {
    let mut report = verify_decodability(schedule, ctx);
    let c = verify_completeness(schedule, ctx, requesting, per_packet);
    report.completeness = c.completeness;
    report.subpacket_totals = c.subpacket_totals;
    report.delivered_fraction = c.delivered_fraction;
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOUR_USER_ROUND1: &str = "\
V 1 1 | (1,2,1,{3}) (2,1,1,{3}) (3,1,1,{2})
V 1 2 | (1,3,1,{4}) (3,1,2,{4}) (4,1,1,{3})
V 1 3 | (1,4,1,{2}) (4,1,2,{2}) (2,1,2,{4})
";

    #[test]
    fn parses_and_renders_back() {
        let text = "# header\n\nC 1 1 2 | (1,2,3,{~4,5}) (5,1,1,{})\n";
        let s = parse_dump(text).unwrap();
        assert_eq!(s.transmissions.len(), 1);
        let tx = &s.transmissions[0];
        assert_eq!(tx.line, 3);
        assert_eq!(tx.origin, vec![1, 1, 2]);
        assert_eq!(tx.terms[0].nulling, vec![Who::Phantom(4), Who::User(5)]);
        assert!(tx.terms[1].nulling.is_empty());
        assert_eq!(s.to_dump(), "C 1 1 2 | (1,2,3,{~4,5}) (5,1,1,{})\n");
    }

    #[test]
    fn rejects_malformed_lines() {
        for bad in [
            "X 1 | (1,2,1,{})",
            "V 1 (1,2,1,{})",
            "V 1 | (1,2,{})",
            "V 1 | (1,2,1,{3)",
            "V 1 | (a,2,1,{})",
        ] {
            assert!(matches!(parse_dump(bad), Err(Error::Parse { line: 1, .. })), "{bad}");
        }
    }

    #[test]
    fn placement_by_rotation() {
        let ctx = OracleContext::virtual_network(4, 2);
        // profile 3 caches packets 2 and 3
        assert_eq!(ctx.caches(3, 2), Some(true));
        assert_eq!(ctx.caches(3, 3), Some(true));
        assert_eq!(ctx.caches(3, 4), Some(false));
        assert_eq!(ctx.caches(1, 4), Some(true));
        assert_eq!(ctx.caches(9, 1), None);
        assert_eq!(ctx.requested_packets(1), vec![2, 3]);
    }

    #[test]
    fn subpacket_counts() {
        assert_eq!(expected_subpackets(4, 2, 1), 3);
        assert_eq!(expected_subpackets(4, 3, 1), 7);
        assert_eq!(expected_subpackets(10, 5, 1), 3);
        assert_eq!(expected_subpackets(10, 7, 1), 17);
    }

    #[test]
    fn example_round_is_decodable() {
        let s = parse_dump(FOUR_USER_ROUND1).unwrap();
        let r = verify_decodability(&s, &OracleContext::virtual_network(4, 1));
        assert!(r.decodable(), "{r}");
        assert_eq!(r.dof_histogram, BTreeMap::from([(3, 3)]));
        assert_eq!(r.max_nulling, 1);
    }

    #[test]
    fn dropped_nulling_member_is_one_leak() {
        let text = FOUR_USER_ROUND1.replacen("(1,2,1,{3})", "(1,2,1,{})", 1);
        let r = verify_decodability(&parse_dump(&text).unwrap(), &OracleContext::virtual_network(4, 1));
        assert_eq!(
            r.decodability,
            vec![DecodabilityViolation {
                line: 1,
                fault: Fault::Leak {
                    user: Who::User(3),
                    term: 0
                }
            }]
        );
    }

    #[test]
    fn extra_nulling_member_is_superfluous() {
        let text = FOUR_USER_ROUND1.replacen("(2,1,1,{3})", "(2,1,1,{1,3})", 1);
        let r = verify_decodability(&parse_dump(&text).unwrap(), &OracleContext::virtual_network(4, 1));
        assert_eq!(r.violation_count(), 1);
        assert!(matches!(
            r.decodability[0].fault,
            Fault::Superfluous {
                user: Who::User(1),
                term: 1
            }
        ));
    }

    #[test]
    fn structural_faults() {
        let ctx = OracleContext::virtual_network(4, 1);
        let check = |text: &str| verify_decodability(&parse_dump(text).unwrap(), &ctx).decodability;
        assert!(matches!(
            check("C 1 1 | (~1,2,1,{})")[0].fault,
            Fault::Phantom { term: 0 }
        ));
        assert!(matches!(
            check("C 1 1 | (9,2,1,{})")[0].fault,
            Fault::UnknownUser { .. }
        ));
        assert!(matches!(
            check("C 1 1 | (1,1,1,{})")[0].fault,
            Fault::CachedPacket { term: 0 }
        ));
        assert!(check("U 1 | (1,2,1,{2}) (1,3,1,{2}) (2,1,1,{1})")
            .iter()
            .any(|v| v.fault == Fault::DuplicateRecipient { user: Who::User(1) }));
        // unicast terms must be nulled even at users caching the packet
        assert!(matches!(
            check("U 1 | (1,2,1,{}) (2,1,1,{1})")[0].fault,
            Fault::Missing {
                user: Who::User(2),
                term: 0
            }
        ));
    }

    #[test]
    fn completeness_shortfalls() {
        let ctx = OracleContext::virtual_network(2, 1);
        let s = parse_dump("U 1 | (1,2,1,{2}) (2,1,1,{1})\nU 2 | (1,2,1,{}) \nU 3 | (2,1,4,{})\n").unwrap();
        let r = verify_completeness(&s, &ctx, &[1, 2], 2);
        assert_eq!(
            r.completeness,
            vec![
                CompletenessViolation {
                    user: 1,
                    packet: 2,
                    kind: Shortfall::Missing(2)
                },
                CompletenessViolation {
                    user: 1,
                    packet: 2,
                    kind: Shortfall::Duplicate(1)
                },
                CompletenessViolation {
                    user: 2,
                    packet: 1,
                    kind: Shortfall::Missing(2)
                },
                CompletenessViolation {
                    user: 2,
                    packet: 1,
                    kind: Shortfall::Unexpected(4)
                },
            ]
        );
        assert_eq!(r.subpacket_totals, BTreeMap::from([(1, 1), (2, 1)]));
    }

    #[test]
    fn empty_schedule_leaves_everyone_incomplete() {
        let ctx = OracleContext::virtual_network(4, 1);
        let r = verify(&ParsedSchedule::default(), &ctx, &[1, 2, 3, 4], 3);
        assert!(r.decodable());
        assert_eq!(r.incomplete_users(), BTreeSet::from([1, 2, 3, 4]));
        assert_eq!(r.completeness.len(), 4 * 3 * 3);
    }

    #[test]
    fn delivery_to_bystander_is_unexpected() {
        let ctx = OracleContext::virtual_network(2, 1);
        let s = parse_dump("U 1 | (1,2,1,{})\nU 2 | (2,1,1,{})\n").unwrap();
        let r = verify_completeness(&s, &ctx, &[1], 1);
        assert_eq!(
            r.completeness,
            vec![CompletenessViolation {
                user: 2,
                packet: 1,
                kind: Shortfall::Unexpected(1)
            }]
        );
    }
}
