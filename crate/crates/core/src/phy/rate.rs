use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::beam::{equal_power, maxmin_power, zf_beams, BeamformedTransmission, LinkGains};
use super::channel::LocalChannel;
use crate::error::{Error, Result};
use crate::schedule::{DeliverySchedule, Term};
use crate::scheme::{is_cached, ProfileAssignment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Beamformer {
    /// ZF directions, equal power per term.
    ZeroForcing,
    /// ZF directions, max-min SINR power allocation.
    #[default]
    MaxMin,
}

impl Beamformer {
    pub fn as_str(self) -> &'static str {
        match self {
            Beamformer::ZeroForcing => "zf",
            Beamformer::MaxMin => "maxmin",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    pub num_antennas: usize,
    pub beamformer: Beamformer,
    pub iterations: usize,
    pub tol: f64,
}

impl LinkModel {
    pub fn new(num_antennas: usize, beamformer: Beamformer) -> Self {
        Self {
            num_antennas,
            beamformer,
            iterations: 100,
            tol: 1e-6,
        }
    }
}

/// One term, with user references as indices into [`LinkTransmission::users`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkTerm {
    pub recipient: usize,
    pub nulled: Vec<usize>,
    /// Indices of the other terms whose recipients do not cache this term's
    /// packet and therefore suffer its interference.
    pub exposed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkTransmission {
    /// Real users whose channels matter: recipients first, then any user
    /// that is only nulled.
    pub users: Vec<u32>,
    pub terms: Vec<LinkTerm>,
}

impl LinkTransmission {
    pub fn from_terms(terms: &[Term], assignment: &ProfileAssignment, caching_gain: u32) -> Result<Self> {
        let p = assignment.profile_count();
        let mut users: Vec<u32> = Vec::with_capacity(terms.len());
        let real = |t: &Term| {
            t.recipient
                .real()
                .ok_or_else(|| Error::ContractViolation("phantom recipient reached the link model".into()))
        };
        for t in terms {
            let u = real(t)?;
            if users.contains(&u) {
                return Err(Error::ContractViolation(format!(
                    "user {u} has two terms in one transmission"
                )));
            }
            users.push(u);
        }
        let profile = |u: u32| {
            assignment
                .profile_of(u)
                .ok_or_else(|| Error::ContractViolation(format!("user {u} has no profile")))
        };
        let mut link_terms = Vec::with_capacity(terms.len());
        for (k, t) in terms.iter().enumerate() {
            let mut nulled = Vec::with_capacity(t.nulling.len());
            for n in &t.nulling {
                let u = n
                    .real()
                    .ok_or_else(|| Error::ContractViolation("phantom in nulling set reached the link model".into()))?;
                let idx = match users.iter().position(|&x| x == u) {
                    Some(i) => i,
                    None => {
                        users.push(u);
                        users.len() - 1
                    }
                };
                nulled.push(idx);
            }
            let mut exposed = Vec::new();
            for (j, other) in terms.iter().enumerate() {
                if j != k && !is_cached(profile(real(other)?)?, t.packet, p, caching_gain) {
                    exposed.push(j);
                }
            }
            link_terms.push(LinkTerm {
                recipient: k,
                nulled,
                exposed,
            });
        }
        Ok(Self {
            users,
            terms: link_terms,
        })
    }
}

/// A schedule reduced to what the link model needs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSchedule {
    pub transmissions: Vec<LinkTransmission>,
    pub subpacket_nats: f64,
}

impl LinkSchedule {
    pub fn compile(schedule: &DeliverySchedule, assignment: &ProfileAssignment, file_size: f64) -> Result<Self> {
        let transmissions = schedule
            .transmissions()
            .map(|terms| LinkTransmission::from_terms(terms, assignment, schedule.params.caching_gain))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            transmissions,
            subpacket_nats: schedule.params.subpacket_size(file_size),
        })
    }
}

/// Time to deliver one subpacket to every recipient: the weakest recipient
/// sets the common rate `ln(1 + SINR)`.
pub fn transmission_time(bt: &BeamformedTransmission, subpacket_nats: f64) -> Result<f64> {
    time_for_min_sinr(bt.min_sinr(), subpacket_nats)
}

fn time_for_min_sinr(min_sinr: f64, subpacket_nats: f64) -> Result<f64> {
    if min_sinr.is_nan() || min_sinr <= 0.0 || !min_sinr.is_finite() {
        return Err(Error::InfiniteTime);
    }
    Ok(subpacket_nats / min_sinr.ln_1p())
}

/// Symmetric rate `1 / T` per SNR point for a single Monte-Carlo trial.
///
/// Every transmission sees an independent channel draw; the same draws are
/// shared by all SNR points. Noise power is 1, so transmit power equals SNR.
pub fn trial_rates(
    schedule: &LinkSchedule,
    model: &LinkModel,
    snr_db: &[f64],
    seed: u64,
    trial: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let powers_lin: Vec<f64> = snr_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
    let mut total = vec![0.0; snr_db.len()];
    for tx in &schedule.transmissions {
        let channel = LocalChannel::sample(&mut rng, tx.users.len(), model.num_antennas);
        let beams = zf_beams(&channel, tx)?;
        let gains = LinkGains::compute(&channel, tx, &beams);
        for (acc, &p_tx) in total.iter_mut().zip(&powers_lin) {
            let sinr = match model.beamformer {
                Beamformer::ZeroForcing => gains.sinr(&equal_power(tx.terms.len(), p_tx), 1.0),
                Beamformer::MaxMin => maxmin_power(&gains, p_tx, 1.0, model.iterations, model.tol).sinr,
            };
            let min = sinr.iter().copied().fold(f64::INFINITY, f64::min);
            *acc += time_for_min_sinr(min, schedule.subpacket_nats)?;
        }
    }
    Ok(total
        .into_iter()
        .map(|t| if t > 0.0 { 1.0 / t } else { f64::INFINITY })
        .collect())
}

/// Per-trial rates, `rates[snr_index][trial]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSamples {
    pub snr_db: Vec<f64>,
    pub rates: Vec<Vec<f64>>,
}

/// Runs `trials` independent trials in parallel; trial `i` uses stream `i`
/// of the seeded generator, so results do not depend on thread count.
pub fn symmetric_rate(
    schedule: &LinkSchedule,
    model: &LinkModel,
    snr_db: &[f64],
    trials: u32,
    seed: u64,
) -> Result<RateSamples> {
    let per_trial: Vec<Vec<f64>> = (0..u64::from(trials))
        .into_par_iter()
        .map(|trial| trial_rates(schedule, model, snr_db, seed, trial))
        .collect::<Result<_>>()?;
    let rates = (0..snr_db.len())
        .map(|i| per_trial.iter().map(|r| r[i]).collect())
        .collect();
    Ok(RateSamples {
        snr_db: snr_db.to_vec(),
        rates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateStat {
    pub snr_db: f64,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

pub fn summarize(samples: &RateSamples) -> Vec<RateStat> {
    samples
        .snr_db
        .iter()
        .zip(&samples.rates)
        .map(|(&snr_db, r)| {
            let n = r.len();
            let mean = r.iter().sum::<f64>() / n.max(1) as f64;
            let stderr = if n > 1 {
                let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            RateStat {
                snr_db,
                mean,
                stderr,
                trials: n,
            }
        })
        .collect()
}
