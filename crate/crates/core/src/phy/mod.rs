//! Finite-SNR link model: Rayleigh block fading, nulling beamformers and
//! delivery-time based symmetric rate.

mod beam;
mod channel;
mod rate;

pub use beam::{
    equal_power, inner, maxmin_beams, maxmin_power, nulling_residual, zf_beam, zf_beams, BeamformedTransmission,
    LinkGains, PowerSolution,
};
pub use channel::{sample_channel, ChannelRealization, LocalChannel};
pub use rate::{
    summarize, symmetric_rate, transmission_time, trial_rates, Beamformer, LinkModel, LinkSchedule, LinkTerm,
    LinkTransmission, RateSamples, RateStat,
};

pub use num_complex::Complex64 as C64;
