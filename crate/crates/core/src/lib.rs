//! Attack, takeover and recovery between two competing interconnected
//! networks: topology generators, the stochastic failure dynamics, a
//! mean-field solver and the experiment protocols built on top of them.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod meanfield;
pub mod output;
pub mod protocols;
pub mod rng;
pub mod run;
pub mod topology;

pub use error::{ConfigError, DynamicsError, Error, MeanFieldError, Result, TopologyError};
