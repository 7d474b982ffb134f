use super::channel::{ChannelRealization, LocalChannel};
use super::rate::LinkTransmission;
use super::C64;
use crate::error::{Error, Result};

/// `a^H b`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Removes from `v` its components along the orthonormal `basis` (two passes).
fn project_out(v: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = inner(q, v);
            for (x, qi) in v.iter_mut().zip(q) {
                *x -= qi * c;
            }
        }
    }
}

/// Unit-norm beam toward `recipient` with zero gain at every `nulled` channel.
///
/// The beam is the normalized projection of the recipient channel onto the
/// orthogonal complement of the nulled channels, which maximizes the
/// recipient's gain under the nulling constraints. A recipient lying in the
/// nulled span gets the zero vector.
pub fn zf_beam(recipient: &[C64], nulled: &[&[C64]]) -> Result<Vec<C64>> {
    let n = recipient.len();
    if nulled.len() >= n {
        return Err(Error::InfeasibleNulling {
            nulled: nulled.len(),
            antennas: n,
        });
    }
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(nulled.len());
    for h in nulled {
        let mut v = h.to_vec();
        let scale = norm(&v);
        project_out(&mut v, &basis);
        let r = norm(&v);
        if r > 1e-12 * scale {
            v.iter_mut().for_each(|x| *x /= r);
            basis.push(v);
        }
    }
    let mut w = recipient.to_vec();
    project_out(&mut w, &basis);
    let r = norm(&w);
    if r <= 1e-12 * norm(recipient) {
        return Ok(vec![C64::new(0.0, 0.0); n]);
    }
    w.iter_mut().for_each(|x| *x /= r);
    Ok(w)
}

/// `|h^H w| / ||h||`.
pub fn nulling_residual(beam: &[C64], channel: &[C64]) -> f64 {
    inner(channel, beam).norm() / norm(channel).max(f64::MIN_POSITIVE)
}

/// ZF beams for every term of a transmission.
pub fn zf_beams(channel: &LocalChannel, tx: &LinkTransmission) -> Result<Vec<Vec<C64>>> {
    let mut nulled: Vec<&[C64]> = Vec::new();
    tx.terms
        .iter()
        .map(|term| {
            nulled.clear();
            nulled.extend(term.nulled.iter().map(|&i| channel.row(i)));
            zf_beam(channel.row(term.recipient), &nulled)
        })
        .collect()
}

/// Beam gains seen by each term's recipient.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGains {
    /// `|h_k^H w_k|^2` for term `k`'s own recipient.
    pub own: Vec<f64>,
    /// Per term `k`: `(j, |h_k^H w_j|^2)` for every term `j` that is not
    /// cached at term `k`'s recipient.
    pub cross: Vec<Vec<(usize, f64)>>,
}

impl LinkGains {
    pub fn compute(channel: &LocalChannel, tx: &LinkTransmission, beams: &[Vec<C64>]) -> Self {
        let n = tx.terms.len();
        let mut own = Vec::with_capacity(n);
        let mut cross = vec![Vec::new(); n];
        for (k, term) in tx.terms.iter().enumerate() {
            let h = channel.row(term.recipient);
            own.push(inner(h, &beams[k]).norm_sqr());
        }
        for (j, term) in tx.terms.iter().enumerate() {
            for &k in &term.exposed {
                let h = channel.row(tx.terms[k].recipient);
                cross[k].push((j, inner(h, &beams[j]).norm_sqr()));
            }
        }
        Self { own, cross }
    }

    pub fn sinr(&self, powers: &[f64], noise: f64) -> Vec<f64> {
        (0..self.own.len())
            .map(|k| {
                let interference: f64 = self.cross[k].iter().map(|&(j, g)| powers[j] * g).sum();
                powers[k] * self.own[k] / (noise + interference)
            })
            .collect()
    }
}

pub fn equal_power(terms: usize, tx_power: f64) -> Vec<f64> {
    if terms == 0 {
        return Vec::new();
    }
    vec![tx_power / terms as f64; terms]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSolution {
    pub powers: Vec<f64>,
    pub sinr: Vec<f64>,
    /// Minimum SINR after each accepted iterate, starting from equal power.
    pub history: Vec<f64>,
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Max-min SINR power allocation over fixed beams under a total power budget.
///
/// Fixed-point balancing: each term's next power is proportional to the
/// interference-plus-noise its recipient sees divided by its own gain,
/// rescaled to the budget. Starts at equal power; an iterate that lowers the
/// minimum SINR is rejected and ends the search, so the history never
/// decreases.
pub fn maxmin_power(gains: &LinkGains, tx_power: f64, noise: f64, iterations: usize, tol: f64) -> PowerSolution {
    let n = gains.own.len();
    let mut powers = equal_power(n, tx_power);
    let mut sinr = gains.sinr(&powers, noise);
    let mut best = min_of(&sinr);
    let mut history = vec![best];
    if n == 0 || gains.own.iter().any(|&g| g <= 0.0) {
        return PowerSolution { powers, sinr, history };
    }
    for _ in 0..iterations {
        let mut next: Vec<f64> = (0..n)
            .map(|k| {
                let interference: f64 = gains.cross[k].iter().map(|&(j, g)| powers[j] * g).sum();
                (noise + interference) / gains.own[k]
            })
            .collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|p| *p *= tx_power / total);
        let next_sinr = gains.sinr(&next, noise);
        let m = min_of(&next_sinr);
        if m.is_nan() || m < best {
            break;
        }
        let gain = m - best;
        powers = next;
        sinr = next_sinr;
        best = m;
        history.push(m);
        if gain <= tol * best {
            break;
        }
    }
    PowerSolution { powers, sinr, history }
}

/// Beams and powers for one transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformedTransmission {
    pub beams: Vec<Vec<C64>>,
    pub powers: Vec<f64>,
    /// SINR at each term's recipient.
    pub sinr: Vec<f64>,
    pub history: Vec<f64>,
}

impl BeamformedTransmission {
    pub fn min_sinr(&self) -> f64 {
        min_of(&self.sinr)
    }
}

/// Hard-nulling (ZF-direction) beams with max-min SINR power allocation.
pub fn maxmin_beams(
    h: &ChannelRealization,
    tx: &LinkTransmission,
    tx_power: f64,
    noise: f64,
    iterations: usize,
    tol: f64,
) -> Result<BeamformedTransmission> {
    let local = h.gather(&tx.users);
    let beams = zf_beams(&local, tx)?;
    let gains = LinkGains::compute(&local, tx, &beams);
    let solution = maxmin_power(&gains, tx_power, noise, iterations, tol);
    Ok(BeamformedTransmission {
        beams,
        powers: solution.powers,
        sinr: solution.sinr,
        history: solution.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::channel::sample_channel;
    use crate::phy::rate::LinkTerm;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn empty_nulling_is_matched_filter() {
        let h = sample_channel(1, 6, 4);
        let w = zf_beam(h.row(1), &[]).unwrap();
        let n = norm(h.row(1));
        for (wi, hi) in w.iter().zip(h.row(1)) {
            assert!((wi - hi / n).norm() < 1e-12);
        }
    }

    #[test]
    fn nulls_are_exact_and_beam_is_unit() {
        for seed in 0..50 {
            let h = sample_channel(12, 12, seed);
            let nulled: Vec<&[C64]> = (2..=10).map(|u| h.row(u)).collect();
            let w = zf_beam(h.row(1), &nulled).unwrap();
            assert!((norm(&w) - 1.0).abs() < 1e-12);
            for r in &nulled {
                assert!(nulling_residual(&w, r) <= 1e-9);
            }
        }
    }

    #[test]
    fn full_rank_nulling_matches_svd_null_space() {
        let n = 5;
        for seed in 0..20 {
            let h = sample_channel(n, n, 100 + seed);
            let nulled: Vec<&[C64]> = (2..=n as u32).map(|u| h.row(u)).collect();
            let w = zf_beam(h.row(1), &nulled).unwrap();
            // rows of A are h_u^H, so A w = 0 picks the null space
            let a = DMatrix::from_fn(n, n, |i, j| if i < n - 1 { nulled[i][j].conj() } else { c(0.0, 0.0) });
            let svd = a.svd(false, true);
            let v_t = svd.v_t.unwrap();
            let (min_idx, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            let v: Vec<C64> = (0..n).map(|j| v_t[(min_idx, j)].conj()).collect();
            let overlap = inner(&v, &w).norm();
            assert!((overlap - 1.0).abs() < 1e-9, "overlap {overlap}");
        }
    }

    #[test]
    fn too_many_nulls_is_infeasible() {
        let h = sample_channel(4, 3, 1);
        let nulled: Vec<&[C64]> = (2..=4).map(|u| h.row(u)).collect();
        assert!(matches!(
            zf_beam(h.row(1), &nulled),
            Err(Error::InfeasibleNulling { nulled: 3, antennas: 3 })
        ));
    }

    fn single_term() -> LinkTransmission {
        LinkTransmission {
            users: vec![1],
            terms: vec![LinkTerm {
                recipient: 0,
                nulled: vec![],
                exposed: vec![],
            }],
        }
    }

    #[test]
    fn single_term_takes_all_power() {
        let h = sample_channel(1, 4, 8);
        let bt = maxmin_beams(&h, &single_term(), 10.0, 1.0, 100, 1e-6).unwrap();
        assert!((bt.powers[0] - 10.0).abs() < 1e-12);
        let expect = 10.0 * norm(h.row(1)).powi(2);
        assert!((bt.sinr[0] - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn symmetric_orthogonal_users_split_evenly() {
        let h = ChannelRealization {
            num_users: 2,
            num_antennas: 2,
            gains: vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)],
            noise_power: 1.0,
            tx_power: 1.0,
        };
        let tx = LinkTransmission {
            users: vec![1, 2],
            terms: vec![
                LinkTerm {
                    recipient: 0,
                    nulled: vec![1],
                    exposed: vec![1],
                },
                LinkTerm {
                    recipient: 1,
                    nulled: vec![0],
                    exposed: vec![0],
                },
            ],
        };
        let bt = maxmin_beams(&h, &tx, 4.0, 1.0, 100, 1e-6).unwrap();
        assert!((bt.powers[0] - bt.powers[1]).abs() < 1e-6);
        assert!((bt.sinr[0] - bt.sinr[1]).abs() < 1e-6 * bt.sinr[0]);
    }

    #[test]
    fn maxmin_beats_equal_power_and_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let users = 6;
            let ch = LocalChannel::sample(&mut rng, users, 8);
            // partial nulling leaves genuine interference for the fixed point
            let tx = LinkTransmission {
                users: (1..=users as u32).collect(),
                terms: (0..users)
                    .map(|k| {
                        let others: Vec<usize> = (0..users).filter(|&j| j != k).collect();
                        LinkTerm {
                            recipient: k,
                            nulled: others[..2].to_vec(),
                            exposed: others,
                        }
                    })
                    .collect(),
            };
            let beams = zf_beams(&ch, &tx).unwrap();
            let gains = LinkGains::compute(&ch, &tx, &beams);
            let eq = min_of(&gains.sinr(&equal_power(users, 10.0), 1.0));
            let sol = maxmin_power(&gains, 10.0, 1.0, 100, 1e-6);
            assert!(min_of(&sol.sinr) >= eq);
            assert!(sol.history.windows(2).all(|w| w[1] >= w[0]));
            assert!(sol.powers.iter().sum::<f64>() <= 10.0 * (1.0 + 1e-9));
        }
    }
}
