pub mod analytics;
pub mod cognitive;
pub mod cooc;
pub mod corpus;
pub mod disruption;
pub mod embed;
pub mod error;
pub mod novelty;
pub mod pipeline;
pub mod quantile;
pub mod synth;

pub use error::{Error, Result};
