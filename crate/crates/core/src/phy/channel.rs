use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::C64;

/// `K x N_tx` channel matrix with i.i.d. unit-variance circularly-symmetric
/// complex Gaussian entries; row `k - 1` belongs to user `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub num_users: usize,
    pub num_antennas: usize,
    pub gains: Vec<C64>,
    pub noise_power: f64,
    pub tx_power: f64,
}

impl ChannelRealization {
    /// Channel of 1-based `user`.
    pub fn row(&self, user: u32) -> &[C64] {
        let k = user as usize - 1;
        &self.gains[k * self.num_antennas..(k + 1) * self.num_antennas]
    }

    pub fn snr(&self) -> f64 {
        self.tx_power / self.noise_power
    }

    /// Rows for the listed users, in that order.
    pub fn gather(&self, users: &[u32]) -> LocalChannel {
        let mut data = Vec::with_capacity(users.len() * self.num_antennas);
        for &u in users {
            data.extend_from_slice(self.row(u));
        }
        LocalChannel {
            num_antennas: self.num_antennas,
            data,
        }
    }
}

/// Channel rows for the users involved in one transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalChannel {
    pub num_antennas: usize,
    pub data: Vec<C64>,
}

impl LocalChannel {
    pub fn sample<R: Rng>(rng: &mut R, rows: usize, num_antennas: usize) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); rows * num_antennas];
        fill_rayleigh(rng, &mut data);
        Self { num_antennas, data }
    }

    pub fn row(&self, idx: usize) -> &[C64] {
        &self.data[idx * self.num_antennas..(idx + 1) * self.num_antennas]
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.num_antennas.max(1)
    }
}

pub(crate) fn fill_rayleigh<R: Rng>(rng: &mut R, out: &mut [C64]) {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    for z in out {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z = C64::new(re * scale, im * scale);
    }
}

/// Reproducible channel draw with unit noise and unit transmit power.
pub fn sample_channel(num_users: usize, num_antennas: usize, seed: u64) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gains = vec![C64::new(0.0, 0.0); num_users * num_antennas];
    fill_rayleigh(&mut rng, &mut gains);
    ChannelRealization {
        num_users,
        num_antennas,
        gains,
        noise_power: 1.0,
        tx_power: 1.0,
    }
}
