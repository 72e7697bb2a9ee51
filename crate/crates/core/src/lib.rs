//! Topic co-occurrence networks built from dated article records: edge
//! screening by the φ coefficient, weighted node and global measures,
//! small-world propensity against null ensembles, consensus communities,
//! sliding-window dynamics and the regressions that tie them to prevalence.

pub mod community;
pub mod corpus;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod month;
pub mod network;
mod par;
pub mod pipeline;
pub mod seed;
pub mod smallworld;
pub mod stats;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
pub use graph::WeightedGraph;
pub use month::{MonthRange, YearMonth};
pub use network::TopicNetwork;
