pub mod channel;
pub mod error;
pub mod policy;
mod quad;
pub mod waterfill;

pub use channel::{
    frame_capacity, sample_frame, secrecy_density, FrameCsi, GainDistribution, GainPair,
    GapMoments, MomentSet,
};
pub use error::{Error, Result};
pub use policy::{CsiMode, PolicyDecision, PolicyId, PolicyState, Rationale};
pub use waterfill::{
    gamma_of_waterlevel, sort_by_gap, waterfill, PowerAllocation, WaterfillSolution,
};
pub mod cli;
pub mod config;
pub mod oracle;
pub mod report;
pub mod sim;
