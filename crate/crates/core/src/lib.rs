//! Delivery scheduling, verification and link-level simulation for
//! multi-antenna coded caching with profile-based placement in networks
//! whose user population changes between request intervals.
//!
//! Pipeline: [`scheme`] placement → [`virtual_net`] codewords →
//! [`elevation`] to the real network → [`unicast`] residuals →
//! [`oracle`] gate → [`phy`] rates. [`experiment`] wires it all together.

mod dump;
pub mod elevation;
pub mod error;
pub mod experiment;
pub mod oracle;
pub mod phy;
pub mod pipeline;
pub mod schedule;
pub mod scheme;
pub mod unicast;
pub mod virtual_net;

pub use error::{Error, Result};
pub use experiment::{preset, run_experiment, RateCurve, ScenarioConfig};
pub use pipeline::{build_schedule, verify_schedule, EtaHatPolicy, PipelineOptions};
pub use schedule::{DeliveryMode, DeliverySchedule, RealTransmission, Term, UnicastSlot, UserId};
pub use scheme::{NetworkConfig, PlacementMatrix, ProfileAssignment};
